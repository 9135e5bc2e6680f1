use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complex::TwistedComplex;
use crate::curve::{
    companion_matrix, compile_band, compile_string, BandWord, Direction, Letter, LocalSystem,
    StringWord,
};
use crate::error::{Error, Result};
use crate::fan::{Combo, Fan, FanQuiver, GradingSpec};
use crate::linalg::Mat;
use crate::scalar::FieldSpec;
use crate::surface::Dissection;

pub const DEFAULT_MAX_WINDING: usize = 3;

fn default_max_winding() -> usize {
    DEFAULT_MAX_WINDING
}

fn doc_err(detail: String) -> Error {
    Error::ParseError { line: 0, column: 0, detail }
}

/// Top-level input document: field, grading, a surface (or a direct algebra
/// table), and named curve/complex objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub field: FieldSpec,
    pub grading: GradingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<Dissection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objects: BTreeMap<String, ObjectDoc>,
    #[serde(default = "default_max_winding")]
    pub max_winding: usize,
}

/// Direct quiver input bypassing the surface layer: explicit arrows with
/// degrees plus the table of maximal composable chains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub vertices: Vec<String>,
    pub arrows: Vec<ArrowDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fans: Vec<FanRunDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDoc {
    pub id: String,
    pub source: String,
    pub target: String,
    pub degree: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanRunDoc {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cyclic: bool,
    pub arrows: Vec<String>,
}

/// A named object: an open word, a cyclic word, or a raw twisted complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectDoc {
    String(StringDoc),
    Band(BandDoc),
    Complex(ComplexDoc),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringDoc {
    pub arcs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub letters: Vec<LetterDoc>,
    #[serde(default, skip_serializing_if = "is_zero_i64")]
    pub base_position: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDoc {
    pub arcs: Vec<String>,
    pub letters: Vec<LetterDoc>,
    pub local_system: LocalSystemDoc,
    #[serde(default, skip_serializing_if = "is_zero_i64")]
    pub base_position: i64,
}

fn is_zero_i64(x: &i64) -> bool {
    *x == 0
}

/// A letter as written: the fan's arrow ids in traversal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterDoc {
    pub fan: Vec<String>,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub closing: bool,
}

/// `{"companion": [...]}` or `{"matrix": [[...]]}`, scalars as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalSystemDoc {
    Companion(Vec<String>),
    Matrix(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub summands: Vec<SummandDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandDoc {
    pub vertex: String,
    pub position: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub target: usize,
    pub source: usize,
    pub combo: Vec<TermDoc>,
}

/// One term of an entry; an empty path means the lazy fan at the shared
/// vertex of the two summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coef: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<String>,
}

/// Strict parse: unknown keys are rejected, with the position reported.
pub fn parse_spec(text: &str) -> Result<SpecDocument> {
    let doc: SpecDocument = serde_json::from_str(text).map_err(|e| Error::ParseError {
        line: e.line(),
        column: e.column(),
        detail: e.to_string(),
    })?;
    doc.grading_consistent()?;
    Ok(doc)
}

/// Canonical emission; `parse_spec(emit_spec(d))` returns `d`.
pub fn emit_spec(doc: &SpecDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("document serialization");
    out.push('\n');
    out
}

impl SpecDocument {
    fn grading_consistent(&self) -> Result<()> {
        // Scalar strings are re-parsed per field later; here only the
        // surface/algebra exclusivity can be checked without a quiver.
        match (&self.surface, &self.algebra) {
            (Some(_), Some(_)) => {
                Err(doc_err("document has both `surface` and `algebra`".to_string()))
            }
            (None, None) => {
                Err(doc_err("document needs a `surface` or an `algebra`".to_string()))
            }
            _ => Ok(()),
        }
    }

    pub fn quiver(&self) -> Result<FanQuiver> {
        match (&self.surface, &self.algebra) {
            (Some(d), None) => FanQuiver::from_dissection(d, &self.grading),
            (None, Some(a)) => a.to_quiver(&self.grading),
            _ => unreachable!("checked at parse time"),
        }
    }

    pub fn object(&self, name: &str) -> Result<&ObjectDoc> {
        self.objects
            .get(name)
            .ok_or_else(|| Error::UnknownObject { name: name.to_string() })
    }

    pub fn compile_object(&self, q: &FanQuiver, name: &str) -> Result<TwistedComplex> {
        self.object(name)?.compile(q, self.field, self.max_winding)
    }
}

impl AlgebraDoc {
    pub fn to_quiver(&self, grading: &GradingSpec) -> Result<FanQuiver> {
        let arrows = self
            .arrows
            .iter()
            .map(|a| (a.id.clone(), a.source.clone(), a.target.clone(), a.degree))
            .collect();
        let runs = self.fans.iter().map(|f| (f.cyclic, f.arrows.clone())).collect();
        FanQuiver::from_parts(grading.group, self.vertices.clone(), arrows, runs)
    }
}

impl ObjectDoc {
    pub fn compile(
        &self,
        q: &FanQuiver,
        field: FieldSpec,
        max_winding: usize,
    ) -> Result<TwistedComplex> {
        match self {
            ObjectDoc::String(s) => {
                let arcs = resolve_arcs(q, &s.arcs)?;
                let mut letters = Vec::with_capacity(s.letters.len());
                for l in &s.letters {
                    if l.closing {
                        return Err(doc_err(
                            "open words cannot carry a closing letter".to_string(),
                        ));
                    }
                    letters.push(resolve_letter(q, l)?);
                }
                let w = StringWord { arcs, letters, base_position: s.base_position };
                compile_string(q, field, &w, max_winding)
            }
            ObjectDoc::Band(b) => {
                let arcs = resolve_arcs(q, &b.arcs)?;
                let mut letters = Vec::with_capacity(b.letters.len());
                for (i, l) in b.letters.iter().enumerate() {
                    let should_close = i + 1 == b.letters.len();
                    if l.closing != should_close {
                        return Err(doc_err(format!(
                            "letter {i} of a cyclic word {} be marked closing",
                            if should_close { "must" } else { "must not" }
                        )));
                    }
                    letters.push(resolve_letter(q, l)?);
                }
                let local_system = resolve_local_system(field, &b.local_system)?;
                let w = BandWord { arcs, letters, local_system, base_position: b.base_position };
                compile_band(q, &w, max_winding)
            }
            ObjectDoc::Complex(c) => {
                let mut summands = Vec::with_capacity(c.summands.len());
                for s in &c.summands {
                    summands.push((q.vertex_index(&s.vertex)?, s.position));
                }
                let mut entries = Vec::with_capacity(c.entries.len());
                for e in &c.entries {
                    for idx in [e.target, e.source] {
                        if idx >= summands.len() {
                            return Err(doc_err(format!(
                                "entry index {idx} exceeds the {} summands",
                                summands.len()
                            )));
                        }
                    }
                    let mut combo = Combo::zero();
                    for term in &e.combo {
                        let coef = field.parse(&term.coef)?;
                        let fan = resolve_path(q, &term.path, summands[e.source].0)?;
                        combo = combo.add(&Combo::single(fan, coef));
                    }
                    entries.push((e.target, e.source, combo));
                }
                check_entry_endpoints(q, &summands, &entries)?;
                let x = TwistedComplex::new(q, field, summands, entries);
                x.validate(q, max_winding)?;
                Ok(x)
            }
        }
    }
}

fn resolve_arcs(q: &FanQuiver, names: &[String]) -> Result<Vec<usize>> {
    names.iter().map(|n| q.vertex_index(n)).collect()
}

fn resolve_letter(q: &FanQuiver, l: &LetterDoc) -> Result<Letter> {
    if l.fan.is_empty() {
        return Err(doc_err("a letter needs at least one angle".to_string()));
    }
    Ok(Letter { fan: q.fan_from_arrow_ids(&l.fan)?, direction: l.direction })
}

fn resolve_local_system(field: FieldSpec, doc: &LocalSystemDoc) -> Result<LocalSystem> {
    match doc {
        LocalSystemDoc::Companion(coeffs) => {
            let parsed: Result<Vec<_>> = coeffs.iter().map(|c| field.parse(c)).collect();
            companion_matrix(field, &parsed?)
        }
        LocalSystemDoc::Matrix(rows) => {
            let r = rows.len();
            let mut m = Mat::zeros(field, r, r);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != r {
                    return Err(doc_err(format!(
                        "monodromy row {i} has {} entries in a {r}x{r} matrix",
                        row.len()
                    )));
                }
                for (j, c) in row.iter().enumerate() {
                    m.set(i, j, field.parse(c)?);
                }
            }
            LocalSystem::from_matrix(m)
        }
    }
}

fn resolve_path(q: &FanQuiver, path: &[String], source_vertex: usize) -> Result<Fan> {
    if path.is_empty() {
        Ok(Fan::Lazy(source_vertex))
    } else {
        q.fan_from_arrow_ids(path)
    }
}

/// Re-emits a compiled complex in document form, inverse to
/// `ObjectDoc::Complex` compilation.
pub fn complex_to_doc(q: &FanQuiver, x: &TwistedComplex) -> ComplexDoc {
    let summands = x
        .summands
        .iter()
        .map(|&(v, p)| SummandDoc { vertex: q.vertices[v].clone(), position: p })
        .collect();
    let mut entries = Vec::new();
    for t in 0..x.summands.len() {
        for s in 0..x.summands.len() {
            let combo = &x.delta[t][s];
            if combo.is_zero() {
                continue;
            }
            let terms = combo
                .terms
                .iter()
                .map(|(fan, coef)| TermDoc {
                    coef: coef.to_string(),
                    path: q
                        .fan_arrows(fan)
                        .into_iter()
                        .map(|ai| q.arrows[ai].id.clone())
                        .collect(),
                })
                .collect();
            entries.push(EntryDoc { target: t, source: s, combo: terms });
        }
    }
    ComplexDoc { summands, entries }
}

fn check_entry_endpoints(
    q: &FanQuiver,
    summands: &[(usize, i64)],
    entries: &[(usize, usize, Combo)],
) -> Result<()> {
    for &(t, s, ref combo) in entries {
        for fan in combo.terms.keys() {
            if q.fan_source(fan) != summands[s].0 || q.fan_target(fan) != summands[t].0 {
                return Err(doc_err(format!(
                    "entry {t} <- {s} carries `{}` running {} -> {}, but the summands sit at {} and {}",
                    q.display_fan(fan),
                    q.vertices[q.fan_source(fan)],
                    q.vertices[q.fan_target(fan)],
                    q.vertices[summands[s].0],
                    q.vertices[summands[t].0],
                )));
            }
        }
    }
    Ok(())
}
