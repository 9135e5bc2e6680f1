use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::surface::{Dissection, WhichEnd};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradingGroup {
    Z,
    Zmod2,
}

impl GradingGroup {
    pub fn normalize(self, x: i64) -> i64 {
        match self {
            GradingGroup::Z => x,
            GradingGroup::Zmod2 => x.rem_euclid(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingMode {
    Mod2Orientation,
    CanonicalZero,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradingSpec {
    pub group: GradingGroup,
    pub mode: GradingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_degrees: Option<BTreeMap<String, i64>>,
}

impl GradingSpec {
    pub fn mod2_orientation() -> GradingSpec {
        GradingSpec {
            group: GradingGroup::Zmod2,
            mode: GradingMode::Mod2Orientation,
            custom_degrees: None,
        }
    }

    pub fn canonical_zero() -> GradingSpec {
        GradingSpec {
            group: GradingGroup::Z,
            mode: GradingMode::CanonicalZero,
            custom_degrees: None,
        }
    }

    pub fn custom(degrees: BTreeMap<String, i64>) -> GradingSpec {
        GradingSpec {
            group: GradingGroup::Z,
            mode: GradingMode::Custom,
            custom_degrees: Some(degrees),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self.mode {
            GradingMode::Mod2Orientation => self.group == GradingGroup::Zmod2,
            GradingMode::CanonicalZero | GradingMode::Custom => self.group == GradingGroup::Z,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParseError {
                line: 0,
                column: 0,
                detail: format!("grading mode {:?} is incompatible with group {:?}", self.mode, self.group),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub id: String,
    pub source: usize,
    pub target: usize,
    pub degree: i64,
    pub run: usize,
    pub run_pos: usize,
}

/// A maximal chain of composable angles at one marked point: linear at a
/// boundary point, cyclic at an interior point. `arcs[i]` is the source
/// vertex of `arrows[i]`; linear runs carry one trailing target slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub cyclic: bool,
    pub arrows: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// Basis element of the fan algebra: a lazy path at a vertex, or `len ≥ 1`
/// consecutive angles of one run starting at arc slot `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fan {
    Lazy(usize),
    Path { run: usize, start: usize, len: usize },
}

/// Homogeneous field-linear combination of fans with common endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Combo {
    pub terms: BTreeMap<Fan, Scalar>,
}

impl Combo {
    pub fn zero() -> Combo {
        Combo::default()
    }

    pub fn single(fan: Fan, coef: Scalar) -> Combo {
        let mut c = Combo::zero();
        c.add_term(fan, coef);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, fan: Fan, coef: Scalar) {
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(fan) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coef);
                if sum.is_zero() {
                    e.remove();
                } else {
                    e.insert(sum);
                }
            }
        }
    }

    pub fn add(&self, other: &Combo) -> Combo {
        let mut out = self.clone();
        for (f, c) in &other.terms {
            out.add_term(*f, c.clone());
        }
        out
    }

    pub fn scale(&self, by: &Scalar) -> Combo {
        let mut out = Combo::zero();
        for (f, c) in &self.terms {
            out.add_term(*f, c.mul(by));
        }
        out
    }

    pub fn neg(&self) -> Combo {
        Combo {
            terms: self.terms.iter().map(|(f, c)| (*f, c.neg())).collect(),
        }
    }
}

/// The graded gentle algebra of a dissection: vertices are arcs, arrows are
/// angles, and the nonzero paths are fans inside runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanQuiver {
    pub group: GradingGroup,
    pub mode: GradingMode,
    pub vertices: Vec<String>,
    pub arrows: Vec<Arrow>,
    pub runs: Vec<Run>,
    pub infinite_dimensional: bool,
    pub token: u64,
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn parse_err(detail: impl Into<String>) -> Error {
    Error::ParseError {
        line: 0,
        column: 0,
        detail: detail.into(),
    }
}

impl FanQuiver {
    /// Builds the quiver of a valid dissection under the given grading.
    pub fn from_dissection(d: &Dissection, grading: &GradingSpec) -> Result<FanQuiver> {
        grading.check()?;
        d.validate()?;
        let angles = d.enumerate_angles()?;
        let vertices: Vec<String> = d.arcs.iter().map(|a| a.id.clone()).collect();
        let vidx: BTreeMap<&str, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();

        let mut arrows = Vec::new();
        let mut runs: Vec<Run> = Vec::new();
        let mut current_point: Option<&str> = None;
        for a in &angles {
            let degree = match grading.mode {
                GradingMode::CanonicalZero => 0,
                GradingMode::Mod2Orientation => {
                    let tail_source = a.source.which == WhichEnd::From;
                    let tail_target = a.target.which == WhichEnd::From;
                    i64::from(tail_source != tail_target)
                }
                GradingMode::Custom => *grading
                    .custom_degrees
                    .as_ref()
                    .and_then(|m| m.get(&a.id))
                    .ok_or(Error::MissingCustomDegree { arrow: a.id.clone() })?,
            };
            if current_point != Some(a.point.as_str()) {
                current_point = Some(a.point.as_str());
                runs.push(Run {
                    cyclic: a.cyclic,
                    arrows: Vec::new(),
                    arcs: Vec::new(),
                });
            }
            let run = runs.len() - 1;
            let run_pos = runs[run].arrows.len();
            runs[run].arrows.push(arrows.len());
            runs[run].arcs.push(vidx[a.source.arc.as_str()]);
            arrows.push(Arrow {
                id: a.id.clone(),
                source: vidx[a.source.arc.as_str()],
                target: vidx[a.target.arc.as_str()],
                degree: grading.group.normalize(degree),
                run,
                run_pos,
            });
        }
        for run in &mut runs {
            if !run.cyclic {
                let last = *run.arrows.last().expect("runs are created nonempty");
                run.arcs.push(arrows[last].target);
            }
        }
        let infinite_dimensional = runs.iter().any(|r| r.cyclic);
        Ok(Self::finish(
            grading.group,
            grading.mode,
            vertices,
            arrows,
            runs,
            infinite_dimensional,
        ))
    }

    /// Builds a quiver directly from vertex/arrow/run data (no surface), with
    /// arrows not listed in any run treated as singleton runs.
    pub fn from_parts(
        group: GradingGroup,
        vertices: Vec<String>,
        arrow_data: Vec<(String, String, String, i64)>,
        run_data: Vec<(bool, Vec<String>)>,
    ) -> Result<FanQuiver> {
        let vidx: BTreeMap<&str, usize> = {
            let mut m = BTreeMap::new();
            for (i, v) in vertices.iter().enumerate() {
                if m.insert(v.as_str(), i).is_some() {
                    return Err(parse_err(format!("duplicate vertex `{v}`")));
                }
            }
            m
        };
        let mut arrows = Vec::new();
        let mut aidx: BTreeMap<String, usize> = BTreeMap::new();
        for (id, source, target, degree) in &arrow_data {
            let &s = vidx
                .get(source.as_str())
                .ok_or_else(|| parse_err(format!("arrow `{id}` has unknown source `{source}`")))?;
            let &t = vidx
                .get(target.as_str())
                .ok_or_else(|| parse_err(format!("arrow `{id}` has unknown target `{target}`")))?;
            if aidx.insert(id.clone(), arrows.len()).is_some() {
                return Err(parse_err(format!("duplicate arrow `{id}`")));
            }
            arrows.push(Arrow {
                id: id.clone(),
                source: s,
                target: t,
                degree: group.normalize(*degree),
                run: usize::MAX,
                run_pos: usize::MAX,
            });
        }
        let mut runs = Vec::new();
        for (cyclic, ids) in &run_data {
            if ids.is_empty() {
                return Err(parse_err("empty fan run"));
            }
            let mut idxs = Vec::new();
            for id in ids {
                let &ai = aidx
                    .get(id.as_str())
                    .ok_or_else(|| parse_err(format!("fan run references unknown arrow `{id}`")))?;
                if arrows[ai].run != usize::MAX {
                    return Err(parse_err(format!("arrow `{id}` appears in two fan runs")));
                }
                arrows[ai].run = runs.len();
                arrows[ai].run_pos = idxs.len();
                idxs.push(ai);
            }
            for w in 0..idxs.len() {
                let next = (w + 1) % idxs.len();
                if w + 1 < idxs.len() || *cyclic {
                    if arrows[idxs[w]].target != arrows[idxs[next]].source {
                        return Err(parse_err(format!(
                            "fan run is not composable at `{}`",
                            arrows[idxs[w]].id
                        )));
                    }
                }
            }
            let mut arcs: Vec<usize> = idxs.iter().map(|&ai| arrows[ai].source).collect();
            if !*cyclic {
                arcs.push(arrows[*idxs.last().unwrap()].target);
            }
            runs.push(Run {
                cyclic: *cyclic,
                arrows: idxs,
                arcs,
            });
        }
        for ai in 0..arrows.len() {
            if arrows[ai].run == usize::MAX {
                arrows[ai].run = runs.len();
                arrows[ai].run_pos = 0;
                runs.push(Run {
                    cyclic: false,
                    arrows: vec![ai],
                    arcs: vec![arrows[ai].source, arrows[ai].target],
                });
            }
        }
        let infinite_dimensional = runs.iter().any(|r| r.cyclic);
        Ok(Self::finish(
            group,
            GradingMode::Custom,
            vertices,
            arrows,
            runs,
            infinite_dimensional,
        ))
    }

    fn finish(
        group: GradingGroup,
        mode: GradingMode,
        vertices: Vec<String>,
        arrows: Vec<Arrow>,
        runs: Vec<Run>,
        infinite_dimensional: bool,
    ) -> FanQuiver {
        let mut canon = format!("{group:?};{mode:?};");
        for v in &vertices {
            let _ = write!(canon, "v:{v};");
        }
        for a in &arrows {
            let _ = write!(canon, "a:{}:{}:{}:{};", a.id, a.source, a.target, a.degree);
        }
        for r in &runs {
            let _ = write!(canon, "r:{}:{:?};", r.cyclic, r.arrows);
        }
        let token = fnv1a(canon.as_bytes());
        FanQuiver {
            group,
            mode,
            vertices,
            arrows,
            runs,
            infinite_dimensional,
            token,
        }
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::UnknownObject { name: id.to_string() })
    }

    pub fn fan_source(&self, f: &Fan) -> usize {
        match *f {
            Fan::Lazy(v) => v,
            Fan::Path { run, start, .. } => self.runs[run].arcs[start],
        }
    }

    pub fn fan_target(&self, f: &Fan) -> usize {
        match *f {
            Fan::Lazy(v) => v,
            Fan::Path { run, start, len } => {
                let r = &self.runs[run];
                if r.cyclic {
                    r.arcs[(start + len) % r.arcs.len()]
                } else {
                    r.arcs[start + len]
                }
            }
        }
    }

    /// Full turns around an interior point; 0 for boundary fans.
    pub fn fan_winding(&self, f: &Fan) -> usize {
        match *f {
            Fan::Lazy(_) => 0,
            Fan::Path { run, len, .. } => {
                let r = &self.runs[run];
                if r.cyclic {
                    len / r.arrows.len()
                } else {
                    0
                }
            }
        }
    }

    pub fn fan_len(&self, f: &Fan) -> usize {
        match *f {
            Fan::Lazy(_) => 0,
            Fan::Path { len, .. } => len,
        }
    }

    /// Arrow indices in traversal order (first applied first).
    pub fn fan_arrows(&self, f: &Fan) -> Vec<usize> {
        match *f {
            Fan::Lazy(_) => vec![],
            Fan::Path { run, start, len } => {
                let r = &self.runs[run];
                (0..len)
                    .map(|t| r.arrows[(start + t) % r.arrows.len()])
                    .collect()
            }
        }
    }

    pub fn fan_degree(&self, f: &Fan) -> i64 {
        let sum = self
            .fan_arrows(f)
            .iter()
            .map(|&ai| self.arrows[ai].degree)
            .sum();
        self.group.normalize(sum)
    }

    /// Function-composition display: latest angle first, `·`-separated unless
    /// every id is a single character.
    pub fn display_fan(&self, f: &Fan) -> String {
        match *f {
            Fan::Lazy(v) => format!("id_{}", self.vertices[v]),
            Fan::Path { .. } => {
                let ids: Vec<&str> = self
                    .fan_arrows(f)
                    .iter()
                    .rev()
                    .map(|&ai| self.arrows[ai].id.as_str())
                    .collect();
                if ids.iter().all(|s| s.chars().count() == 1) {
                    ids.concat()
                } else {
                    ids.join("·")
                }
            }
        }
    }

    /// `p∘q` (first `q`, then `p`): the concatenated fan when `q` ends where
    /// `p` begins inside one run, `None` when the product is zero.
    pub fn compose_pair(&self, p: &Fan, q: &Fan) -> Result<Option<Fan>> {
        if self.fan_source(p) != self.fan_target(q) {
            return Err(Error::EndpointMismatch {
                left: self.display_fan(p),
                left_vertex: self.vertices[self.fan_source(p)].clone(),
                right: self.display_fan(q),
                right_vertex: self.vertices[self.fan_target(q)].clone(),
            });
        }
        match (*p, *q) {
            (Fan::Lazy(_), _) => Ok(Some(*q)),
            (_, Fan::Lazy(_)) => Ok(Some(*p)),
            (
                Fan::Path { run: rp, start: sp, len: lp },
                Fan::Path { run: rq, start: sq, len: lq },
            ) => {
                if rp != rq {
                    return Ok(None);
                }
                let r = &self.runs[rp];
                let meet = if r.cyclic {
                    (sq + lq) % r.arcs.len() == sp
                } else {
                    sq + lq == sp
                };
                Ok(meet.then_some(Fan::Path {
                    run: rp,
                    start: sq,
                    len: lq + lp,
                }))
            }
        }
    }

    /// Spec-level composition: the zero combination or a single fan.
    pub fn compose_fans(&self, p: &Fan, q: &Fan) -> Result<Combo> {
        Ok(match self.compose_pair(p, q)? {
            Some(f) => Combo::single(f, crate::scalar::FieldSpec::Rationals.one()),
            None => Combo::zero(),
        })
    }

    /// Combo product in the winding-truncated quotient algebra.
    pub fn compose_combo(&self, p: &Combo, q: &Combo, max_winding: usize) -> Result<Combo> {
        let mut out = Combo::zero();
        for (pf, pc) in &p.terms {
            for (qf, qc) in &q.terms {
                if let Some(f) = self.compose_pair(pf, qf)? {
                    if self.fan_winding(&f) <= max_winding {
                        out.add_term(f, pc.mul(qc));
                    }
                }
            }
        }
        Ok(out)
    }

    /// All fans `u → v` of winding ≤ `max_winding`, sorted by
    /// (winding, length, run, start); lazy first when `u = v`. The flag is
    /// true iff fans of winding `max_winding + 1` exist.
    pub fn enumerate_fans(&self, u: usize, v: usize, max_winding: usize) -> (Vec<Fan>, bool) {
        let mut fans = Vec::new();
        let mut truncated = false;
        if u == v {
            fans.push(Fan::Lazy(u));
        }
        for (ri, r) in self.runs.iter().enumerate() {
            if r.cyclic {
                let k = r.arrows.len();
                for start in 0..k {
                    if r.arcs[start] != u {
                        continue;
                    }
                    for j in 0..k {
                        if r.arcs[j] != v {
                            continue;
                        }
                        let base = {
                            let b = (j + k - start % k) % k;
                            if b == 0 {
                                k
                            } else {
                                b
                            }
                        };
                        let mut len = base;
                        loop {
                            let w = len / k;
                            if w > max_winding {
                                if w == max_winding + 1 {
                                    truncated = true;
                                }
                                break;
                            }
                            fans.push(Fan::Path { run: ri, start, len });
                            len += k;
                        }
                    }
                }
            } else {
                let n = r.arrows.len();
                for start in 0..=n {
                    if r.arcs[start] != u {
                        continue;
                    }
                    for len in 1..=(n - start) {
                        if r.arcs[start + len] == v {
                            fans.push(Fan::Path { run: ri, start, len });
                        }
                    }
                }
            }
        }
        fans.sort_by_key(|f| {
            (
                self.fan_winding(f),
                self.fan_len(f),
                match *f {
                    Fan::Lazy(_) => (0, 0),
                    Fan::Path { run, start, .. } => (run + 1, start),
                },
            )
        });
        (fans, truncated)
    }

    /// Resolves a nonempty arrow-id path, listed in traversal order
    /// (`["a","b"]` denotes `ba`), into a fan.
    pub fn fan_from_arrow_ids(&self, ids: &[String]) -> Result<Fan> {
        let mut idxs = Vec::with_capacity(ids.len());
        for id in ids {
            let ai = self
                .arrows
                .iter()
                .position(|a| &a.id == id)
                .ok_or_else(|| Error::UnknownObject { name: id.clone() })?;
            idxs.push(ai);
        }
        let first = idxs[0];
        let run = self.arrows[first].run;
        let r = &self.runs[run];
        let k = r.arrows.len();
        for (t, &ai) in idxs.iter().enumerate() {
            let expect = if r.cyclic {
                (self.arrows[first].run_pos + t) % k
            } else {
                self.arrows[first].run_pos + t
            };
            if self.arrows[ai].run != run || self.arrows[ai].run_pos != expect {
                return Err(parse_err(format!(
                    "angles `{}` and `{}` are not consecutive in a fan",
                    self.arrows[idxs[t.saturating_sub(1)]].id, self.arrows[ai].id
                )));
            }
        }
        Ok(Fan::Path {
            run,
            start: self.arrows[first].run_pos,
            len: idxs.len(),
        })
    }

    /// Graphviz rendering: solid degree-labeled arrows, dotted annotations
    /// for adjacent pairs composing to zero.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fan_quiver {\n  rankdir=LR;\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{v}\";");
        }
        for a in &self.arrows {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{} deg {}\"];",
                self.vertices[a.source], self.vertices[a.target], a.id, a.degree
            );
        }
        for (ai, a) in self.arrows.iter().enumerate() {
            for (bi, b) in self.arrows.iter().enumerate() {
                if a.target != b.source {
                    continue;
                }
                let fa = Fan::Path { run: a.run, start: a.run_pos, len: 1 };
                let fb = Fan::Path { run: b.run, start: b.run_pos, len: 1 };
                if self
                    .compose_pair(&fb, &fa)
                    .expect("adjacent arrows share a vertex")
                    .is_none()
                {
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}\" [style=dotted, arrowhead=empty, label=\"{}·{} = 0\"];",
                        self.vertices[a.source],
                        self.vertices[b.target],
                        self.arrows[bi].id,
                        self.arrows[ai].id
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
