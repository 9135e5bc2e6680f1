use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use fuksurf_core::complex::{cone, decompose, ext, ChainMap, ExtTable, PieceKind, TwistedComplex};
use fuksurf_core::doc::{complex_to_doc, parse_spec, ArrowDoc, ComplexDoc, SpecDocument};
use fuksurf_core::fan::{FanQuiver, GradingGroup};
use fuksurf_core::surface::{Dissection, SurfaceReport};
use fuksurf_core::Error;

/// Exact-arithmetic engine for surface dissections: builds the graded gentle
/// algebra of a dissected marked surface and computes with twisted complexes
/// over it.
#[derive(Parser)]
#[command(name = "fuksurf", version, disable_help_subcommand = true)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    command: Command,

    /// Input document (JSON).
    doc: PathBuf,

    /// Named object, for `compile` and `decompose`.
    #[arg(long)]
    object: Option<String>,

    /// Source object name, for `ext` and `cone`.
    #[arg(long)]
    source: Option<String>,

    /// Target object name, for `ext` and `cone`.
    #[arg(long)]
    target: Option<String>,

    /// Coefficients of the degree-1 class combination, for `cone`.
    #[arg(long, value_delimiter = ',')]
    class: Vec<String>,

    /// Override the document's winding truncation.
    #[arg(long)]
    max_winding: Option<usize>,

    /// Also emit the quiver in DOT form.
    #[arg(long)]
    dot: bool,

    /// Write the JSON report to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Check,
    Quiver,
    Compile,
    Ext,
    Cone,
    Decompose,
    Laminate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Quiver => "quiver",
            Command::Compile => "compile",
            Command::Ext => "ext",
            Command::Cone => "cone",
            Command::Decompose => "decompose",
            Command::Laminate => "laminate",
        }
    }
}

enum Failure {
    /// Malformed invocation or document: exit code 2.
    Parse(String),
    /// Well-formed input that the mathematics rejects: exit code 1.
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let text = format!("{}: {e}", e.name());
        match e {
            Error::ParseError { .. } => Failure::Parse(text),
            _ => Failure::Domain(text),
        }
    }
}

#[derive(Serialize)]
struct Report {
    command: String,
    input_sha256: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    payload: Payload,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Payload {
    Check(SurfaceReport),
    Quiver(QuiverView),
    Compile(ComplexView),
    Ext(ExtView),
    Cone(ComplexView),
    Decompose(Vec<PieceView>),
    Laminate(Dissection),
}

#[derive(Serialize)]
struct QuiverView {
    vertices: Vec<String>,
    arrows: Vec<ArrowDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dot: Option<String>,
}

#[derive(Serialize)]
struct ComplexView {
    description: String,
    #[serde(flatten)]
    complex: ComplexDoc,
}

#[derive(Serialize)]
struct ExtView {
    group: GradingGroup,
    min_degree: i64,
    dims: Vec<usize>,
    truncated: Vec<bool>,
    stable: bool,
}

#[derive(Serialize)]
struct PieceView {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    monodromy: Option<String>,
    description: String,
    #[serde(flatten)]
    complex: ComplexDoc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", render_text(&report));
            if let Some(path) = &cli.json {
                let mut out = serde_json::to_string_pretty(&report).expect("report serialization");
                out.push('\n');
                if let Err(e) = std::fs::write(path, out) {
                    eprintln!("error: cannot write `{}`: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let bytes = std::fs::read(&cli.doc)
        .map_err(|e| Failure::Parse(format!("cannot read `{}`: {e}", cli.doc.display())))?;
    let input_sha256 = hex(&Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::Parse("document is not UTF-8".to_string()))?;
    let doc = parse_spec(&text)?;
    let winding = cli.max_winding.unwrap_or(doc.max_winding);

    let mut warnings = Vec::new();
    let mut echo = vec![cli.command.name().to_string()];
    let payload = match cli.command {
        Command::Check => {
            let d = require_surface(&doc)?;
            Payload::Check(d.validate()?)
        }
        Command::Quiver => {
            let q = doc.quiver()?;
            let arrows = q
                .arrows
                .iter()
                .map(|a| ArrowDoc {
                    id: a.id.clone(),
                    source: q.vertices[a.source].clone(),
                    target: q.vertices[a.target].clone(),
                    degree: a.degree,
                })
                .collect();
            Payload::Quiver(QuiverView {
                vertices: q.vertices.clone(),
                arrows,
                dot: cli.dot.then(|| q.to_dot()),
            })
        }
        Command::Compile => {
            let name = require(&cli.object, "--object")?;
            echo.push(format!("--object {name}"));
            let q = doc.quiver()?;
            let x = doc.compile_object(&q, name)?;
            Payload::Compile(complex_view(&q, &x))
        }
        Command::Ext => {
            let (src, dst) = source_target(cli, &mut echo)?;
            let q = doc.quiver()?;
            let x = doc.compile_object(&q, src)?;
            let y = doc.compile_object(&q, dst)?;
            let result = ext(&q, &x, &y, winding)?;
            truncation_warnings(&result.table, winding, &mut warnings);
            Payload::Ext(ext_view(&result.table))
        }
        Command::Cone => {
            let (src, dst) = source_target(cli, &mut echo)?;
            if !cli.class.is_empty() {
                echo.push(format!("--class {}", cli.class.join(",")));
            }
            let q = doc.quiver()?;
            let x = doc.compile_object(&q, src)?;
            let y = doc.compile_object(&q, dst)?;
            let result = ext(&q, &x, &y, winding)?;
            truncation_warnings(&result.table, winding, &mut warnings);
            let reps = degree_one_reps(&result.table, &result.reps);
            if cli.class.len() != reps.len() {
                return Err(Failure::Domain(format!(
                    "--class lists {} coefficients but Ext^1({src}, {dst}) has dimension {}",
                    cli.class.len(),
                    reps.len()
                )));
            }
            let mut f = ChainMap::zero(x.clone(), y.clone(), 1);
            for (c, rep) in cli.class.iter().zip(reps) {
                let coef = doc.field.parse(c)?;
                f = f.add(&rep.scale(&coef));
            }
            let c = cone(&q, &f, winding)?;
            Payload::Cone(complex_view(&q, &c))
        }
        Command::Decompose => {
            let name = require(&cli.object, "--object")?;
            echo.push(format!("--object {name}"));
            let q = doc.quiver()?;
            let x = doc.compile_object(&q, name)?;
            let pieces = decompose(&q, &x, winding)?;
            let views = pieces
                .iter()
                .map(|p| {
                    let (kind, monodromy) = match &p.kind {
                        PieceKind::String => ("string", None),
                        PieceKind::Band { monodromy } => ("band", Some(monodromy.to_string())),
                        PieceKind::Unclassified => ("unclassified", None),
                    };
                    PieceView {
                        kind,
                        monodromy,
                        description: p.complex.describe(&q),
                        complex: complex_to_doc(&q, &p.complex),
                    }
                })
                .collect();
            Payload::Decompose(views)
        }
        Command::Laminate => {
            let d = require_surface(&doc)?;
            Payload::Laminate(d.laminate()?)
        }
    };
    if cli.max_winding.is_some() {
        echo.push(format!("--max-winding {winding}"));
    }
    Ok(Report { command: echo.join(" "), input_sha256, warnings, payload })
}

fn require<'a>(opt: &'a Option<String>, flag: &str) -> Result<&'a str, Failure> {
    opt.as_deref()
        .ok_or_else(|| Failure::Parse(format!("this command requires {flag} NAME")))
}

fn source_target<'a>(cli: &'a Cli, echo: &mut Vec<String>) -> Result<(&'a str, &'a str), Failure> {
    let src = require(&cli.source, "--source")?;
    let dst = require(&cli.target, "--target")?;
    echo.push(format!("--source {src}"));
    echo.push(format!("--target {dst}"));
    Ok((src, dst))
}

fn require_surface(doc: &SpecDocument) -> Result<&Dissection, Failure> {
    doc.surface
        .as_ref()
        .ok_or_else(|| Failure::Domain("this command needs a `surface` document".to_string()))
}

fn complex_view(q: &FanQuiver, x: &TwistedComplex) -> ComplexView {
    ComplexView { description: x.describe(q), complex: complex_to_doc(q, x) }
}

fn ext_view(t: &ExtTable) -> ExtView {
    ExtView {
        group: t.group,
        min_degree: t.min_degree,
        dims: t.dims.clone(),
        truncated: t.truncated.clone(),
        stable: t.stable,
    }
}

fn truncation_warnings(t: &ExtTable, winding: usize, warnings: &mut Vec<String>) {
    if t.truncated.iter().any(|&b| b) {
        warnings.push(format!(
            "hom spaces were truncated at winding {winding}; degrees marked * are lower bounds"
        ));
    }
    if !t.stable {
        warnings.push(format!(
            "dimensions change at winding {}; raise --max-winding",
            winding + 1
        ));
    }
}

fn degree_one_reps<'a>(t: &ExtTable, reps: &'a [Vec<ChainMap>]) -> &'a [ChainMap] {
    let slot = match t.group {
        GradingGroup::Z => {
            let i = 1 - t.min_degree;
            if i < 0 || i as usize >= reps.len() {
                return &[];
            }
            i as usize
        }
        GradingGroup::Zmod2 => 1,
    };
    &reps[slot]
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fuksurf {}", r.command);
    let _ = writeln!(out, "input sha256: {}", r.input_sha256);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    match &r.payload {
        Payload::Check(s) => {
            let _ = writeln!(
                out,
                "genus {}, {} boundary component(s), stops per boundary {:?}, {} puncture(s), euler characteristic {}",
                s.genus, s.boundary_count, s.stops_per_boundary, s.puncture_count, s.euler_characteristic
            );
            for (i, f) in s.faces.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "face {}: {} ({} stop(s))",
                    i + 1,
                    f.labels().join(" "),
                    f.stop_count()
                );
            }
        }
        Payload::Quiver(qv) => {
            let _ = writeln!(out, "vertices: {}", qv.vertices.join(" "));
            for a in &qv.arrows {
                let _ = writeln!(out, "{}: {} -> {}  deg {}", a.id, a.source, a.target, a.degree);
            }
            if let Some(dot) = &qv.dot {
                out.push_str(dot);
            }
        }
        Payload::Compile(c) | Payload::Cone(c) => {
            let _ = writeln!(out, "{}", c.description);
            render_entries(&mut out, &c.complex);
        }
        Payload::Ext(t) => {
            let _ = writeln!(out, "degree  dim  truncated");
            for (i, (&d, &trunc)) in t.dims.iter().zip(&t.truncated).enumerate() {
                let degree = t.min_degree + i as i64;
                let _ =
                    writeln!(out, "{degree:>6}  {d:>3}  {}", if trunc { "*" } else { "" });
            }
            let _ = writeln!(out, "stable: {}", if t.stable { "yes" } else { "no" });
        }
        Payload::Decompose(pieces) => {
            let _ = writeln!(out, "{} piece(s)", pieces.len());
            for (i, p) in pieces.iter().enumerate() {
                let kind = match &p.monodromy {
                    Some(m) => format!("band, monodromy {m}"),
                    None => p.kind.to_string(),
                };
                let _ = writeln!(out, "piece {} ({kind}): {}", i + 1, p.description);
            }
        }
        Payload::Laminate(d) => {
            let mut text = serde_json::to_string_pretty(d).expect("dissection serialization");
            text.push('\n');
            out.push_str(&text);
        }
    }
    out
}

fn render_entries(out: &mut String, c: &ComplexDoc) {
    for e in &c.entries {
        let terms: Vec<String> = e
            .combo
            .iter()
            .map(|t| {
                let path = if t.path.is_empty() {
                    "id".to_string()
                } else if t.path.iter().all(|p| p.chars().count() == 1) {
                    t.path.iter().rev().cloned().collect::<Vec<_>>().concat()
                } else {
                    t.path.iter().rev().cloned().collect::<Vec<_>>().join("·")
                };
                if t.coef == "1" {
                    path
                } else {
                    format!("{}*{}", t.coef, path)
                }
            })
            .collect();
        let _ = writeln!(out, "delta[{} <- {}] = {}", e.target, e.source, terms.join(" + "));
    }
}
