use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::fan::{fnv1a, Combo, Fan, FanQuiver, GradingGroup};
use crate::linalg::Mat;
use crate::scalar::{FieldSpec, Scalar};

/// Abort threshold for the decomposition search.
pub const DECOMPOSE_STATE_CAP: usize = 512;

/// Twisted complex: a finite sum of vertex projectives at positions, plus a
/// differential whose entry `delta[t][s]` is the fan combination carried by
/// the component from summand `s` into summand `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedComplex {
    pub field: FieldSpec,
    pub token: u64,
    pub group: GradingGroup,
    /// `(vertex index, position)` per summand; positions are normalized.
    pub summands: Vec<(usize, i64)>,
    pub delta: Vec<Vec<Combo>>,
}

impl TwistedComplex {
    /// Builds a complex from `(vertex, position)` summands and
    /// `(target, source, combo)` entries. Positions are normalized in the
    /// grading group; entries for a repeated `(target, source)` pair add up.
    pub fn new(
        q: &FanQuiver,
        field: FieldSpec,
        summands: Vec<(usize, i64)>,
        entries: Vec<(usize, usize, Combo)>,
    ) -> TwistedComplex {
        let n = summands.len();
        let summands: Vec<(usize, i64)> = summands
            .into_iter()
            .map(|(v, p)| {
                debug_assert!(v < q.vertices.len(), "vertex index out of range");
                (v, q.group.normalize(p))
            })
            .collect();
        let mut delta = vec![vec![Combo::zero(); n]; n];
        for (t, s, c) in entries {
            debug_assert!(t < n && s < n, "entry index out of range");
            for f in c.terms.keys() {
                debug_assert_eq!(q.fan_source(f), summands[s].0, "entry fan source mismatch");
                debug_assert_eq!(q.fan_target(f), summands[t].0, "entry fan target mismatch");
            }
            delta[t][s] = delta[t][s].add(&c);
        }
        TwistedComplex { field, token: q.token, group: q.group, summands, delta }
    }

    pub fn empty(q: &FanQuiver, field: FieldSpec) -> TwistedComplex {
        TwistedComplex {
            field,
            token: q.token,
            group: q.group,
            summands: Vec::new(),
            delta: Vec::new(),
        }
    }

    /// The projective at one vertex, placed at `position`.
    pub fn projective(
        q: &FanQuiver,
        field: FieldSpec,
        vertex: usize,
        position: i64,
    ) -> TwistedComplex {
        TwistedComplex::new(q, field, vec![(vertex, position)], Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Checks that every entry has total degree 1 and that the differential
    /// squares to zero in the winding-truncated algebra.
    pub fn validate(&self, q: &FanQuiver, max_winding: usize) -> Result<()> {
        if self.token != q.token || self.group != q.group {
            return Err(Error::QuiverMismatch);
        }
        let n = self.summands.len();
        for t in 0..n {
            for s in 0..n {
                for f in self.delta[t][s].terms.keys() {
                    let total = q
                        .group
                        .normalize(q.fan_degree(f) + self.summands[t].1 - self.summands[s].1);
                    if total != 1 {
                        return Err(Error::NonHomogeneousEntry {
                            target: t,
                            src: s,
                            fan: q.display_fan(f),
                            found: total.to_string(),
                            expected: "1".to_string(),
                        });
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let mut sq = Combo::zero();
                for m in 0..n {
                    sq = sq.add(&q.compose_combo(&self.delta[a][m], &self.delta[m][b], max_winding)?);
                }
                if !sq.is_zero() {
                    return Err(Error::DifferentialNotSquareZero { target: a, src: b });
                }
            }
        }
        Ok(())
    }

    /// Shift by `k`: positions drop by `k` and the differential picks up
    /// `(-1)^k`.
    pub fn shift(&self, k: i64) -> TwistedComplex {
        let sign = self.field.sign(k);
        TwistedComplex {
            field: self.field,
            token: self.token,
            group: self.group,
            summands: self
                .summands
                .iter()
                .map(|&(v, p)| (v, self.group.normalize(p - k)))
                .collect(),
            delta: self
                .delta
                .iter()
                .map(|row| row.iter().map(|c| c.scale(&sign)).collect())
                .collect(),
        }
    }

    pub fn direct_sum(&self, other: &TwistedComplex) -> TwistedComplex {
        assert_eq!(self.token, other.token, "direct sum across different quivers");
        assert_eq!(self.field, other.field, "direct sum across different fields");
        let n = self.summands.len();
        let m = other.summands.len();
        let mut summands = self.summands.clone();
        summands.extend(other.summands.iter().cloned());
        let mut delta = vec![vec![Combo::zero(); n + m]; n + m];
        for t in 0..n {
            for s in 0..n {
                delta[t][s] = self.delta[t][s].clone();
            }
        }
        for t in 0..m {
            for s in 0..m {
                delta[n + t][n + s] = other.delta[t][s].clone();
            }
        }
        TwistedComplex { field: self.field, token: self.token, group: self.group, summands, delta }
    }

    /// Restriction to the given summand indices, in the given order.
    pub fn sub_complex(&self, keep: &[usize]) -> TwistedComplex {
        let summands = keep.iter().map(|&k| self.summands[k]).collect();
        let delta = keep
            .iter()
            .map(|&t| keep.iter().map(|&s| self.delta[t][s].clone()).collect())
            .collect();
        TwistedComplex { field: self.field, token: self.token, group: self.group, summands, delta }
    }

    /// Deterministic hash of the full presentation.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        for &(v, p) in &self.summands {
            bytes.extend_from_slice(&(v as u64).to_le_bytes());
            bytes.extend_from_slice(&p.to_le_bytes());
        }
        let n = self.summands.len();
        for t in 0..n {
            for s in 0..n {
                if self.delta[t][s].is_zero() {
                    continue;
                }
                bytes.extend_from_slice(&(t as u64).to_le_bytes());
                bytes.extend_from_slice(&(s as u64).to_le_bytes());
                for (f, c) in &self.delta[t][s].terms {
                    match *f {
                        Fan::Lazy(v) => {
                            bytes.push(0);
                            bytes.extend_from_slice(&(v as u64).to_le_bytes());
                        }
                        Fan::Path { run, start, len } => {
                            bytes.push(1);
                            bytes.extend_from_slice(&(run as u64).to_le_bytes());
                            bytes.extend_from_slice(&(start as u64).to_le_bytes());
                            bytes.extend_from_slice(&(len as u64).to_le_bytes());
                        }
                    }
                    bytes.extend_from_slice(c.to_string().as_bytes());
                }
            }
        }
        fnv1a(&bytes)
    }

    /// One-line human-readable form, e.g. `[C@0, A@1 | (0<-1) ba]`.
    pub fn describe(&self, q: &FanQuiver) -> String {
        if self.is_empty() {
            return "[]".to_string();
        }
        let summands: Vec<String> = self
            .summands
            .iter()
            .map(|&(v, p)| format!("{}@{}", q.vertices[v], p))
            .collect();
        let mut entries = Vec::new();
        let n = self.summands.len();
        for t in 0..n {
            for s in 0..n {
                if !self.delta[t][s].is_zero() {
                    entries.push(format!("({t}<-{s}) {}", display_combo(q, &self.delta[t][s])));
                }
            }
        }
        if entries.is_empty() {
            format!("[{}]", summands.join(", "))
        } else {
            format!("[{} | {}]", summands.join(", "), entries.join(", "))
        }
    }
}

/// Renders a fan combination, e.g. `b + 5*t` or `-ba`.
pub fn display_combo(q: &FanQuiver, c: &Combo) -> String {
    if c.is_zero() {
        return "0".to_string();
    }
    let one = c.terms.values().next().map(|s| s.field().one());
    let parts: Vec<String> = c
        .terms
        .iter()
        .map(|(f, s)| {
            let shown = q.display_fan(f);
            if Some(s.clone()) == one {
                shown
            } else if Some(s.neg()) == one {
                format!("-{shown}")
            } else {
                format!("{s}*{shown}")
            }
        })
        .collect();
    parts.join(" + ")
}

/// Degree-homogeneous map of twisted complexes; `entries[t][s]` is the
/// component from source summand `s` into target summand `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainMap {
    pub source: TwistedComplex,
    pub target: TwistedComplex,
    pub degree: i64,
    pub entries: Vec<Vec<Combo>>,
}

impl ChainMap {
    pub fn new(
        source: TwistedComplex,
        target: TwistedComplex,
        degree: i64,
        components: Vec<(usize, usize, Combo)>,
    ) -> ChainMap {
        let mut entries = vec![vec![Combo::zero(); source.summands.len()]; target.summands.len()];
        for (t, s, c) in components {
            entries[t][s] = entries[t][s].add(&c);
        }
        ChainMap { source, target, degree, entries }
    }

    pub fn zero(source: TwistedComplex, target: TwistedComplex, degree: i64) -> ChainMap {
        ChainMap::new(source, target, degree, Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|row| row.iter().all(Combo::is_zero))
    }

    /// First nonzero component in row-major `(target, source)` order.
    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        for (t, row) in self.entries.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    return Some((t, s));
                }
            }
        }
        None
    }

    pub fn scale(&self, by: &Scalar) -> ChainMap {
        ChainMap {
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|c| c.scale(by)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        assert_eq!(self.degree, other.degree, "adding maps of different degrees");
        assert_eq!(self.source, other.source, "adding maps with different sources");
        assert_eq!(self.target, other.target, "adding maps with different targets");
        ChainMap {
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| a.add(b)).collect())
                .collect(),
        }
    }
}

/// `D(f) = delta_Y . f - (-1)^{|f|} f . delta_X`.
pub fn hom_differential(q: &FanQuiver, f: &ChainMap, max_winding: usize) -> Result<ChainMap> {
    let x = &f.source;
    let y = &f.target;
    let nx = x.summands.len();
    let ny = y.summands.len();
    let sign = x.field.sign(f.degree);
    let mut entries = vec![vec![Combo::zero(); nx]; ny];
    for t in 0..ny {
        for s in 0..nx {
            let mut acc = Combo::zero();
            for m in 0..ny {
                acc = acc.add(&q.compose_combo(&y.delta[t][m], &f.entries[m][s], max_winding)?);
            }
            for m in 0..nx {
                acc = acc.add(
                    &q.compose_combo(&f.entries[t][m], &x.delta[m][s], max_winding)?
                        .scale(&sign.neg()),
                );
            }
            entries[t][s] = acc;
        }
    }
    Ok(ChainMap { source: x.clone(), target: y.clone(), degree: f.degree + 1, entries })
}

/// Morphism complex between two twisted complexes, one basis slot per
/// occupied degree. Over Z the slots cover `min_degree ..`; over Z/2 there
/// are always exactly two slots, for degrees 0 and 1.
#[derive(Debug, Clone)]
pub struct HomComplex {
    pub source: TwistedComplex,
    pub target: TwistedComplex,
    pub field: FieldSpec,
    pub group: GradingGroup,
    pub max_winding: usize,
    pub min_degree: i64,
    /// `basis[k]` lists `(source summand, target summand, fan)` triples.
    pub basis: Vec<Vec<(usize, usize, Fan)>>,
    /// `diffs[k]` maps slot `k` coordinates into the next slot.
    pub diffs: Vec<Mat>,
    /// Slots whose basis was cut off by the winding bound.
    pub truncated: Vec<bool>,
}

impl HomComplex {
    pub fn degree_of_slot(&self, k: usize) -> i64 {
        match self.group {
            GradingGroup::Z => self.min_degree + k as i64,
            GradingGroup::Zmod2 => k as i64,
        }
    }

    pub fn slot_of_degree(&self, n: i64) -> Option<usize> {
        match self.group {
            GradingGroup::Z => {
                let k = n - self.min_degree;
                (0..self.basis.len() as i64).contains(&k).then_some(k as usize)
            }
            GradingGroup::Zmod2 => Some(self.group.normalize(n) as usize),
        }
    }

    pub fn next_slot(&self, k: usize) -> Option<usize> {
        match self.group {
            GradingGroup::Z => (k + 1 < self.basis.len()).then_some(k + 1),
            GradingGroup::Zmod2 => Some((k + 1) % 2),
        }
    }

    pub fn prev_slot(&self, k: usize) -> Option<usize> {
        match self.group {
            GradingGroup::Z => k.checked_sub(1),
            GradingGroup::Zmod2 => Some((k + 1) % 2),
        }
    }

    /// Coordinates of a homogeneous map whose components lie in slot `k`;
    /// terms beyond the winding bound vanish in the quotient and are dropped.
    pub fn vectorize_at(&self, q: &FanQuiver, k: usize, f: &ChainMap) -> Vec<Scalar> {
        let mut v = vec![self.field.zero(); self.basis[k].len()];
        for (t, row) in f.entries.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                for (fan, coef) in &c.terms {
                    if q.fan_winding(fan) > self.max_winding {
                        continue;
                    }
                    let idx = self.basis[k]
                        .iter()
                        .position(|&(i, j, g)| i == s && j == t && g == *fan)
                        .expect("component outside its degree slot");
                    v[idx] = v[idx].add(coef);
                }
            }
        }
        v
    }

    /// The chain map with the given slot-`k` coordinates.
    pub fn to_chain_map(&self, k: usize, coords: &[Scalar]) -> ChainMap {
        let mut components = Vec::new();
        for (idx, &(i, j, fan)) in self.basis[k].iter().enumerate() {
            if !coords[idx].is_zero() {
                components.push((j, i, Combo::single(fan, coords[idx].clone())));
            }
        }
        ChainMap::new(self.source.clone(), self.target.clone(), self.degree_of_slot(k), components)
    }
}

/// Builds the morphism complex of `x` into `y` in the winding-truncated
/// algebra.
pub fn hom_complex(
    q: &FanQuiver,
    x: &TwistedComplex,
    y: &TwistedComplex,
    max_winding: usize,
) -> Result<HomComplex> {
    if x.token != q.token
        || y.token != q.token
        || x.group != q.group
        || y.group != q.group
        || x.field != y.field
    {
        return Err(Error::QuiverMismatch);
    }
    let field = x.field;
    let nx = x.summands.len();
    let ny = y.summands.len();
    let mut by_degree: BTreeMap<i64, Vec<(usize, usize, Fan)>> = BTreeMap::new();
    let mut cut_degrees: BTreeSet<i64> = BTreeSet::new();
    for i in 0..nx {
        for j in 0..ny {
            let (fans, _) = q.enumerate_fans(x.summands[i].0, y.summands[j].0, max_winding + 1);
            for f in fans {
                let total =
                    q.group.normalize(q.fan_degree(&f) + y.summands[j].1 - x.summands[i].1);
                if q.fan_winding(&f) <= max_winding {
                    by_degree.entry(total).or_default().push((i, j, f));
                } else {
                    cut_degrees.insert(total);
                }
            }
        }
    }
    let (min_degree, slots) = match q.group {
        GradingGroup::Zmod2 => (0, 2),
        GradingGroup::Z => {
            let lo = by_degree.keys().chain(cut_degrees.iter()).min().copied();
            let hi = by_degree.keys().chain(cut_degrees.iter()).max().copied();
            match (lo, hi) {
                (Some(lo), Some(hi)) => (lo, (hi - lo + 1) as usize),
                _ => (0, 0),
            }
        }
    };
    let mut basis = vec![Vec::new(); slots];
    let mut truncated = vec![false; slots];
    for (deg, elems) in by_degree {
        basis[(deg - min_degree) as usize] = elems;
    }
    for deg in cut_degrees {
        truncated[(deg - min_degree) as usize] = true;
    }
    let index: Vec<BTreeMap<(usize, usize, Fan), usize>> = basis
        .iter()
        .map(|b| b.iter().enumerate().map(|(n, &t)| (t, n)).collect())
        .collect();
    let mut diffs = Vec::with_capacity(slots);
    for k in 0..slots {
        let degree = match q.group {
            GradingGroup::Z => min_degree + k as i64,
            GradingGroup::Zmod2 => k as i64,
        };
        let next = match q.group {
            GradingGroup::Z => {
                if k + 1 == slots {
                    diffs.push(Mat::zeros(field, 0, basis[k].len()));
                    continue;
                }
                k + 1
            }
            GradingGroup::Zmod2 => (k + 1) % 2,
        };
        let sign = field.sign(degree);
        let mut mat = Mat::zeros(field, basis[next].len(), basis[k].len());
        for (col, &(i, j, fan)) in basis[k].iter().enumerate() {
            let f = Combo::single(fan, field.one());
            for t in 0..ny {
                if y.delta[t][j].is_zero() {
                    continue;
                }
                let prod = q.compose_combo(&y.delta[t][j], &f, max_winding)?;
                for (g, c) in &prod.terms {
                    let row = index[next][&(i, t, *g)];
                    mat.set(row, col, mat.at(row, col).add(c));
                }
            }
            for s in 0..nx {
                if x.delta[i][s].is_zero() {
                    continue;
                }
                let prod = q.compose_combo(&f, &x.delta[i][s], max_winding)?;
                for (g, c) in &prod.terms {
                    let row = index[next][&(s, j, *g)];
                    mat.set(row, col, mat.at(row, col).add(&c.mul(&sign.neg())));
                }
            }
        }
        diffs.push(mat);
    }
    Ok(HomComplex {
        source: x.clone(),
        target: y.clone(),
        field,
        group: q.group,
        max_winding,
        min_degree,
        basis,
        diffs,
        truncated,
    })
}

/// Graded dimension table of an Ext computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtTable {
    pub group: GradingGroup,
    pub min_degree: i64,
    pub dims: Vec<usize>,
    pub truncated: Vec<bool>,
    /// True when the dimensions are unchanged at one more winding.
    pub stable: bool,
}

#[derive(Debug, Clone)]
pub struct ExtResult {
    pub table: ExtTable,
    /// One representative chain map per Ext generator, aligned with the
    /// table's slots.
    pub reps: Vec<Vec<ChainMap>>,
}

fn hom_ext_dims(hc: &HomComplex) -> Vec<usize> {
    let ranks: Vec<usize> = hc.diffs.iter().map(Mat::rank).collect();
    (0..hc.basis.len())
        .map(|k| {
            let ker = hc.basis[k].len() - ranks[k];
            let prev = hc.prev_slot(k).map_or(0, |p| ranks[p]);
            ker - prev
        })
        .collect()
}

fn trim_z_table<T: Clone>(
    group: GradingGroup,
    min_degree: i64,
    dims: &[usize],
    truncated: &[bool],
    extras: &[T],
) -> (i64, Vec<usize>, Vec<bool>, Vec<T>) {
    if group == GradingGroup::Zmod2 {
        return (0, dims.to_vec(), truncated.to_vec(), extras.to_vec());
    }
    let mut lo = 0;
    let mut hi = dims.len();
    while lo < hi && dims[lo] == 0 && !truncated[lo] {
        lo += 1;
    }
    while hi > lo && dims[hi - 1] == 0 && !truncated[hi - 1] {
        hi -= 1;
    }
    if lo == hi {
        return (0, Vec::new(), Vec::new(), Vec::new());
    }
    (
        min_degree + lo as i64,
        dims[lo..hi].to_vec(),
        truncated[lo..hi].to_vec(),
        extras[lo..hi].to_vec(),
    )
}

/// Ext groups of `x` against `y` with representatives. Representatives are
/// reduced-echelon kernel generators reduced modulo the image, so they are
/// canonical for the chosen basis order but not basis-free.
pub fn ext(
    q: &FanQuiver,
    x: &TwistedComplex,
    y: &TwistedComplex,
    max_winding: usize,
) -> Result<ExtResult> {
    let hc = hom_complex(q, x, y, max_winding)?;
    let dims = hom_ext_dims(&hc);
    let mut reps: Vec<Vec<ChainMap>> = Vec::with_capacity(hc.basis.len());
    for k in 0..hc.basis.len() {
        let kernel = hc.diffs[k].kernel_basis();
        let image_rows: Vec<Vec<Scalar>> = match hc.prev_slot(k) {
            None => Vec::new(),
            Some(p) => {
                let d = &hc.diffs[p];
                (0..d.cols)
                    .map(|c| (0..d.rows).map(|r| d.at(r, c).clone()).collect())
                    .collect()
            }
        };
        let reduced = reduce_modulo(hc.field, kernel, image_rows, hc.basis[k].len());
        assert_eq!(reduced.len(), dims[k], "ext rank bookkeeping is off");
        reps.push(reduced.iter().map(|v| hc.to_chain_map(k, v)).collect());
    }
    let (min_degree, dims, truncated, reps) =
        trim_z_table(hc.group, hc.min_degree, &dims, &hc.truncated, &reps);
    let hc_deeper = hom_complex(q, x, y, max_winding + 1)?;
    let deeper = hom_ext_dims(&hc_deeper);
    let (dmin, ddims, _, _) = trim_z_table(
        hc_deeper.group,
        hc_deeper.min_degree,
        &deeper,
        &hc_deeper.truncated,
        &vec![(); deeper.len()],
    );
    let (smin, sdims, _, _) = trim_z_table(
        hc.group,
        min_degree,
        &dims,
        &vec![false; dims.len()],
        &vec![(); dims.len()],
    );
    let (dmin2, ddims2, _, _) = trim_z_table(
        hc.group,
        dmin,
        &ddims,
        &vec![false; ddims.len()],
        &vec![(); ddims.len()],
    );
    let stable = smin == dmin2 && sdims == ddims2;
    Ok(ExtResult {
        table: ExtTable { group: hc.group, min_degree, dims, truncated, stable },
        reps,
    })
}

/// Reduces each generator modulo the row space of `image_rows`, then
/// re-echelonizes the survivors.
fn reduce_modulo(
    field: FieldSpec,
    gens: Vec<Vec<Scalar>>,
    image_rows: Vec<Vec<Scalar>>,
    width: usize,
) -> Vec<Vec<Scalar>> {
    let image = if image_rows.is_empty() {
        None
    } else {
        Some(Mat::from_rows(field, image_rows).rref())
    };
    let mut survivors = Vec::new();
    for mut v in gens {
        if let Some(r) = &image {
            for (row, &col) in r.pivots.iter().enumerate() {
                let coef = v[col].clone();
                if coef.is_zero() {
                    continue;
                }
                for (jc, item) in v.iter_mut().enumerate().take(width) {
                    *item = item.sub(&coef.mul(r.mat.at(row, jc)));
                }
            }
        }
        if v.iter().any(|s| !s.is_zero()) {
            survivors.push(v);
        }
    }
    if survivors.is_empty() {
        return Vec::new();
    }
    let r = Mat::from_rows(field, survivors).rref();
    (0..r.pivots.len())
        .map(|i| (0..width).map(|j| r.mat.at(i, j).clone()).collect())
        .collect()
}

/// Finds a homotopy witness `h` with `D(h) = f`, or reports that `f` is not
/// even closed.
pub fn is_nullhomotopic(
    q: &FanQuiver,
    f: &ChainMap,
    max_winding: usize,
) -> Result<Option<ChainMap>> {
    let d = hom_differential(q, f, max_winding)?;
    if let Some((t, s)) = d.first_nonzero() {
        return Err(Error::NotClosed { target: t, src: s });
    }
    let in_quotient = f.entries.iter().flatten().any(|c| {
        c.terms.keys().any(|fan| q.fan_winding(fan) <= max_winding) && !c.is_zero()
    });
    if !in_quotient {
        return Ok(Some(ChainMap::zero(f.source.clone(), f.target.clone(), f.degree - 1)));
    }
    let hc = hom_complex(q, &f.source, &f.target, max_winding)?;
    let k = hc
        .slot_of_degree(f.degree)
        .expect("closed nonzero map must occupy a hom-complex slot");
    let v = hc.vectorize_at(q, k, f);
    if v.iter().all(Scalar::is_zero) {
        return Ok(Some(ChainMap::zero(f.source.clone(), f.target.clone(), f.degree - 1)));
    }
    match hc.prev_slot(k) {
        None => Ok(None),
        Some(p) => Ok(hc.diffs[p].solve(&v).map(|x| {
            let mut h = hc.to_chain_map(p, &x);
            h.degree = f.degree - 1;
            h
        })),
    }
}

/// Cone of a closed degree-1 map: source and target summands side by side,
/// with the map pasted into the lower-left block.
pub fn cone(q: &FanQuiver, f: &ChainMap, max_winding: usize) -> Result<TwistedComplex> {
    let x = &f.source;
    let y = &f.target;
    if x.token != q.token || y.token != q.token || x.field != y.field {
        return Err(Error::QuiverMismatch);
    }
    let found = q.group.normalize(f.degree);
    if found != 1 {
        return Err(Error::WrongDegree { expected: "1".to_string(), found: found.to_string() });
    }
    let d = hom_differential(q, f, max_winding)?;
    if let Some((t, s)) = d.first_nonzero() {
        return Err(Error::NotClosed { target: t, src: s });
    }
    let nx = x.summands.len();
    let ny = y.summands.len();
    let mut summands = x.summands.clone();
    summands.extend(y.summands.iter().cloned());
    let mut delta = vec![vec![Combo::zero(); nx + ny]; nx + ny];
    for t in 0..nx {
        for s in 0..nx {
            delta[t][s] = x.delta[t][s].clone();
        }
    }
    for t in 0..ny {
        for s in 0..ny {
            delta[nx + t][nx + s] = y.delta[t][s].clone();
        }
        for s in 0..nx {
            delta[nx + t][s] = f.entries[t][s].clone();
        }
    }
    Ok(TwistedComplex { field: x.field, token: x.token, group: x.group, summands, delta })
}

/// Gaussian elimination of invertible entries: repeatedly cancels a summand
/// pair joined by an entry with a unit lazy part, until none remains.
pub fn minimize(q: &FanQuiver, x: &TwistedComplex, max_winding: usize) -> Result<TwistedComplex> {
    let mut cur = x.clone();
    'scan: loop {
        let n = cur.summands.len();
        for t in 0..n {
            for s in 0..n {
                let lazy = Fan::Lazy(cur.summands[s].0);
                if cur.delta[t][s].terms.contains_key(&lazy) {
                    cur = eliminate_pair(q, &cur, t, s, max_winding)?;
                    continue 'scan;
                }
            }
        }
        return Ok(cur);
    }
}

fn eliminate_pair(
    q: &FanQuiver,
    x: &TwistedComplex,
    t: usize,
    s: usize,
    max_winding: usize,
) -> Result<TwistedComplex> {
    debug_assert_ne!(t, s);
    let v = x.summands[s].0;
    debug_assert_eq!(x.summands[t].0, v);
    let lazy = Fan::Lazy(v);
    let e = &x.delta[t][s];
    let c0 = e.terms[&lazy].clone();
    let mut rest = e.clone();
    rest.terms.remove(&lazy);
    // Geometric series for the inverse of c0·id + rest.
    let step = rest.scale(&c0.inv().neg());
    let mut acc = Combo::single(lazy, x.field.one());
    let mut inv = acc.clone();
    loop {
        acc = q.compose_combo(&step, &acc, max_winding)?;
        if acc.is_zero() {
            break;
        }
        inv = inv.add(&acc);
    }
    inv = inv.scale(&c0.inv());
    let keep: Vec<usize> = (0..x.summands.len()).filter(|&k| k != s && k != t).collect();
    let summands: Vec<(usize, i64)> = keep.iter().map(|&k| x.summands[k]).collect();
    let mut delta = vec![vec![Combo::zero(); keep.len()]; keep.len()];
    for (tn, &a) in keep.iter().enumerate() {
        for (sn, &b) in keep.iter().enumerate() {
            let mid = q.compose_combo(&inv, &x.delta[t][b], max_winding)?;
            let corr = q.compose_combo(&x.delta[a][s], &mid, max_winding)?;
            delta[tn][sn] = x.delta[a][b].add(&corr.neg());
        }
    }
    Ok(TwistedComplex { field: x.field, token: x.token, group: x.group, summands, delta })
}

/// Shape of an indecomposable piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PieceKind {
    String,
    Band { monodromy: Scalar },
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub complex: TwistedComplex,
    pub kind: PieceKind,
}

/// Splits a complex into direct summands: minimizes, then searches through
/// basis changes for disconnections and split closures, classifying each
/// leftover as a string, a band with its cycle scalar, or unclassified.
pub fn decompose(q: &FanQuiver, x: &TwistedComplex, max_winding: usize) -> Result<Vec<Piece>> {
    let m = minimize(q, x, max_winding)?;
    let mut out = Vec::new();
    decompose_rec(q, m, max_winding, &mut out)?;
    Ok(out)
}

fn decompose_rec(
    q: &FanQuiver,
    x: TwistedComplex,
    max_winding: usize,
    out: &mut Vec<Piece>,
) -> Result<()> {
    let x = minimize(q, &x, max_winding)?;
    if x.is_empty() {
        return Ok(());
    }
    let mut visited: BTreeSet<u64> = BTreeSet::new();
    let mut stack = vec![x.clone()];
    while let Some(state) = stack.pop() {
        if !visited.insert(state.fingerprint()) {
            continue;
        }
        if visited.len() > DECOMPOSE_STATE_CAP {
            break;
        }
        if let Some(parts) = split_components(&state) {
            for part in parts {
                decompose_rec(q, state.sub_complex(&part), max_winding, out)?;
            }
            return Ok(());
        }
        if let Some((p1, p2)) = find_split_closure(q, &state, max_winding)? {
            decompose_rec(q, state.sub_complex(&p1), max_winding, out)?;
            decompose_rec(q, state.sub_complex(&p2), max_winding, out)?;
            return Ok(());
        }
        for child in proportional_children(q, &state, max_winding)?.into_iter().rev() {
            stack.push(child);
        }
    }
    out.push(classify(q, &x));
    Ok(())
}

/// Connected components of the nonzero-entry graph, when there are several.
fn split_components(x: &TwistedComplex) -> Option<Vec<Vec<usize>>> {
    let n = x.summands.len();
    let mut comp = vec![usize::MAX; n];
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = parts.len();
        let mut todo = vec![root];
        let mut members = Vec::new();
        comp[root] = id;
        while let Some(u) = todo.pop() {
            members.push(u);
            for v in 0..n {
                if comp[v] == usize::MAX
                    && (!x.delta[u][v].is_zero() || !x.delta[v][u].is_zero())
                {
                    comp[v] = id;
                    todo.push(v);
                }
            }
        }
        members.sort_unstable();
        parts.push(members);
    }
    (parts.len() > 1).then_some(parts)
}

/// Looks for a proper summand subset closed under the differential whose
/// connector into the rest is nullhomotopic; such a closure splits off.
fn find_split_closure(
    q: &FanQuiver,
    x: &TwistedComplex,
    max_winding: usize,
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let n = x.summands.len();
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    for v in 0..n {
        let anc = closure(x, v, false);
        let desc = closure(x, v, true);
        let co_desc: Vec<usize> = (0..n).filter(|k| !desc.contains(k)).collect();
        for p1 in [anc, co_desc] {
            if p1.is_empty() || p1.len() == n || !tried.insert(p1.clone()) {
                continue;
            }
            let p2: Vec<usize> = (0..n).filter(|k| !p1.contains(k)).collect();
            let sub1 = x.sub_complex(&p1);
            let sub2 = x.sub_complex(&p2);
            let mut comps = Vec::new();
            for (tn, &tg) in p2.iter().enumerate() {
                for (sn, &sg) in p1.iter().enumerate() {
                    if !x.delta[tg][sg].is_zero() {
                        comps.push((tn, sn, x.delta[tg][sg].clone()));
                    }
                }
            }
            let connector = ChainMap::new(sub1, sub2, 1, comps);
            if is_nullhomotopic(q, &connector, max_winding)?.is_some() {
                return Ok(Some((p1, p2)));
            }
        }
    }
    Ok(None)
}

/// Transitive closure of `{v}` under incoming (`forward = false`) or
/// outgoing (`forward = true`) entries; sorted ascending.
fn closure(x: &TwistedComplex, v: usize, forward: bool) -> Vec<usize> {
    let n = x.summands.len();
    let mut seen = vec![false; n];
    seen[v] = true;
    let mut todo = vec![v];
    while let Some(u) = todo.pop() {
        for k in 0..n {
            let hit = if forward {
                !x.delta[k][u].is_zero()
            } else {
                !x.delta[u][k].is_zero()
            };
            if hit && !seen[k] {
                seen[k] = true;
                todo.push(k);
            }
        }
    }
    (0..n).filter(|&k| seen[k]).collect()
}

/// Base changes worth exploring: whenever two entries in one row (or one
/// column) sit on interchangeable summands and are proportional, either one
/// can be cleared against the other.
fn proportional_children(
    q: &FanQuiver,
    x: &TwistedComplex,
    max_winding: usize,
) -> Result<Vec<TwistedComplex>> {
    let n = x.summands.len();
    let mut kids = Vec::new();
    for t in 0..n {
        for s1 in 0..n {
            for s2 in s1 + 1..n {
                if x.summands[s1] != x.summands[s2]
                    || x.delta[t][s1].is_zero()
                    || x.delta[t][s2].is_zero()
                {
                    continue;
                }
                if let Some(k) = proportion(&x.delta[t][s1], &x.delta[t][s2]) {
                    kids.push(elementary(q, x, s2, s1, &k, max_winding)?);
                    kids.push(elementary(q, x, s1, s2, &k.inv(), max_winding)?);
                }
            }
        }
    }
    for s in 0..n {
        for t1 in 0..n {
            for t2 in t1 + 1..n {
                if x.summands[t1] != x.summands[t2]
                    || x.delta[t1][s].is_zero()
                    || x.delta[t2][s].is_zero()
                {
                    continue;
                }
                if let Some(k) = proportion(&x.delta[t1][s], &x.delta[t2][s]) {
                    kids.push(elementary(q, x, t1, t2, &k.neg(), max_winding)?);
                    kids.push(elementary(q, x, t2, t1, &k.inv().neg(), max_winding)?);
                }
            }
        }
    }
    Ok(kids)
}

/// The ratio `k` with `c1 = k * c2`, when the combos are proportional.
fn proportion(c1: &Combo, c2: &Combo) -> Option<Scalar> {
    if c1.terms.len() != c2.terms.len() {
        return None;
    }
    let mut ratio: Option<Scalar> = None;
    for (f, a) in &c1.terms {
        let b = c2.terms.get(f)?;
        let r = a.div(b);
        match &ratio {
            None => ratio = Some(r),
            Some(prev) if *prev == r => {}
            _ => return None,
        }
    }
    ratio
}

/// Conjugates the differential by `I + k·E_{i,j}`, a change of basis mixing
/// two summands of the same vertex and position.
fn elementary(
    q: &FanQuiver,
    x: &TwistedComplex,
    i: usize,
    j: usize,
    k: &Scalar,
    max_winding: usize,
) -> Result<TwistedComplex> {
    debug_assert_ne!(i, j);
    debug_assert_eq!(x.summands[i], x.summands[j]);
    let n = x.summands.len();
    let mut u = vec![vec![Combo::zero(); n]; n];
    let mut u_inv = vec![vec![Combo::zero(); n]; n];
    for (m, row) in u.iter_mut().enumerate() {
        row[m] = Combo::single(Fan::Lazy(x.summands[m].0), x.field.one());
    }
    for (m, row) in u_inv.iter_mut().enumerate() {
        row[m] = Combo::single(Fan::Lazy(x.summands[m].0), x.field.one());
    }
    u[i][j] = Combo::single(Fan::Lazy(x.summands[i].0), k.clone());
    u_inv[i][j] = Combo::single(Fan::Lazy(x.summands[i].0), k.neg());
    let ud = combo_mat_mul(q, &u, &x.delta, max_winding)?;
    let delta = combo_mat_mul(q, &ud, &u_inv, max_winding)?;
    Ok(TwistedComplex {
        field: x.field,
        token: x.token,
        group: x.group,
        summands: x.summands.clone(),
        delta,
    })
}

fn combo_mat_mul(
    q: &FanQuiver,
    a: &[Vec<Combo>],
    b: &[Vec<Combo>],
    max_winding: usize,
) -> Result<Vec<Vec<Combo>>> {
    let n = a.len();
    let mut out = vec![vec![Combo::zero(); n]; n];
    for (t, row) in out.iter_mut().enumerate() {
        for (s, cell) in row.iter_mut().enumerate() {
            let mut acc = Combo::zero();
            for m in 0..n {
                acc = acc.add(&q.compose_combo(&a[t][m], &b[m][s], max_winding)?);
            }
            *cell = acc;
        }
    }
    Ok(out)
}

struct GraphEdge {
    s: usize,
    t: usize,
    fan: Fan,
    coef: Scalar,
}

/// Names the shape of an already-indecomposable presentation and normalizes
/// its coefficients: paths become strings with unit entries, cycles become
/// bands carrying a single canonical scalar.
fn classify(q: &FanQuiver, x: &TwistedComplex) -> Piece {
    let n = x.summands.len();
    let mut edges = Vec::new();
    for t in 0..n {
        for s in 0..n {
            let c = &x.delta[t][s];
            if c.is_zero() {
                continue;
            }
            if c.terms.len() > 1 {
                return Piece { complex: x.clone(), kind: PieceKind::Unclassified };
            }
            let (fan, coef) = c.terms.iter().next().map(|(f, v)| (*f, v.clone())).unwrap();
            edges.push(GraphEdge { s, t, fan, coef });
        }
    }
    let mut degree = vec![0usize; n];
    for e in &edges {
        degree[e.s] += 1;
        degree[e.t] += 1;
    }
    let mut reach = vec![false; n];
    if n > 0 {
        reach[0] = true;
        let mut todo = vec![0usize];
        while let Some(u) = todo.pop() {
            for e in &edges {
                for v in [e.s, e.t] {
                    if (e.s == u || e.t == u) && !reach[v] {
                        reach[v] = true;
                        todo.push(v);
                    }
                }
            }
        }
    }
    if !reach.iter().all(|&r| r) {
        return Piece { complex: x.clone(), kind: PieceKind::Unclassified };
    }
    if edges.len() + 1 == n && degree.iter().all(|&d| d <= 2) {
        return Piece { complex: rescale_string(x, &edges), kind: PieceKind::String };
    }
    if edges.len() == n && degree.iter().all(|&d| d == 2) {
        let (complex, monodromy) = canonical_band(q, x, &edges);
        return Piece { complex, kind: PieceKind::Band { monodromy } };
    }
    Piece { complex: x.clone(), kind: PieceKind::Unclassified }
}

/// Rescales the summands of a path-shaped complex so every entry is 1.
fn rescale_string(x: &TwistedComplex, edges: &[GraphEdge]) -> TwistedComplex {
    let n = x.summands.len();
    if n <= 1 {
        return x.clone();
    }
    let mut scale: Vec<Option<Scalar>> = vec![None; n];
    let mut degree = vec![0usize; n];
    for e in edges {
        degree[e.s] += 1;
        degree[e.t] += 1;
    }
    let root = (0..n).find(|&v| degree[v] <= 1).unwrap_or(0);
    scale[root] = Some(x.field.one());
    loop {
        let mut progressed = false;
        for e in edges {
            match (scale[e.s].clone(), scale[e.t].clone()) {
                (Some(us), None) => {
                    // New entry is coef*u_s/u_t; force it to 1.
                    scale[e.t] = Some(e.coef.mul(&us));
                    progressed = true;
                }
                (None, Some(ut)) => {
                    scale[e.s] = Some(ut.div(&e.coef));
                    progressed = true;
                }
                _ => {}
            }
        }
        if !progressed {
            break;
        }
    }
    apply_scales(x, &scale)
}

fn apply_scales(x: &TwistedComplex, scale: &[Option<Scalar>]) -> TwistedComplex {
    let n = x.summands.len();
    let mut out = x.clone();
    for t in 0..n {
        for s in 0..n {
            if out.delta[t][s].is_zero() {
                continue;
            }
            let us = scale[s].clone().expect("scale covers all summands");
            let ut = scale[t].clone().expect("scale covers all summands");
            out.delta[t][s] = out.delta[t][s].scale(&us.div(&ut));
        }
    }
    out
}

/// Walks the cycle from every start in both directions, keeps the
/// lexicographically least content sequence, and reads the cycle scalar off
/// it: coefficients along arrows multiply, those against divide. All walked
/// entries are then rescaled to 1 except the closing one.
fn canonical_band(
    q: &FanQuiver,
    x: &TwistedComplex,
    edges: &[GraphEdge],
) -> (TwistedComplex, Scalar) {
    let n = x.summands.len();
    type Key = Vec<(String, i64, String, u8)>;
    let describe_step = |u: usize, e: &GraphEdge, against: bool| {
        (
            q.vertices[x.summands[u].0].clone(),
            x.summands[u].1,
            q.display_fan(&e.fan),
            against as u8,
        )
    };
    if n == 1 {
        // Single self-loop: the canonical direction is along the arrow.
        return (x.clone(), edges[0].coef.clone());
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, e) in edges.iter().enumerate() {
        incident[e.s].push(idx);
        incident[e.t].push(idx);
    }
    let mut best: Option<(Key, Vec<(usize, usize, bool)>)> = None;
    for start in 0..n {
        for &first in &incident[start] {
            let mut key: Key = Vec::with_capacity(n);
            let mut walk: Vec<(usize, usize, bool)> = Vec::with_capacity(n);
            let mut u = start;
            let mut e = first;
            for _ in 0..n {
                let against = edges[e].s != u;
                let next = if against { edges[e].s } else { edges[e].t };
                key.push(describe_step(u, &edges[e], against));
                walk.push((u, e, against));
                u = next;
                e = *incident[u].iter().find(|&&other| other != e).expect("cycle degree two");
            }
            debug_assert_eq!(u, start);
            if best.as_ref().map_or(true, |(k, _)| key < *k) {
                best = Some((key, walk));
            }
        }
    }
    let (_, walk) = best.expect("cycle has a walk");
    let mut monodromy = x.field.one();
    for &(_, e, against) in &walk {
        if against {
            monodromy = monodromy.div(&edges[e].coef);
        } else {
            monodromy = monodromy.mul(&edges[e].coef);
        }
    }
    let mut scale: Vec<Option<Scalar>> = vec![None; n];
    scale[walk[0].0] = Some(x.field.one());
    for &(u, e, against) in walk.iter().take(n - 1) {
        let next = if against { edges[e].s } else { edges[e].t };
        let known = scale[u].clone().expect("walk order fixes scales");
        scale[next] = Some(if against {
            // next is the edge's source: u_s = u_t / coef.
            known.div(&edges[e].coef)
        } else {
            edges[e].coef.mul(&known)
        });
    }
    (apply_scales(x, &scale), monodromy)
}
