#![allow(dead_code)]

use fuksurf_core::complex::TwistedComplex;
use fuksurf_core::curve::{companion_matrix, BandWord, Direction, Letter, StringWord};
use fuksurf_core::fan::{Combo, Fan, FanQuiver, GradingGroup};
use fuksurf_core::complex::ExtTable;
use fuksurf_core::scalar::{FieldSpec, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const W: usize = 3;

pub fn rat() -> FieldSpec {
    FieldSpec::Rationals
}

pub fn qn(n: i64) -> Scalar {
    rat().from_i64(n)
}

pub fn qr(n: i64, d: i64) -> Scalar {
    rat().parse(&format!("{n}/{d}")).unwrap()
}

pub fn vtx(q: &FanQuiver, id: &str) -> usize {
    q.vertex_index(id).unwrap()
}

pub fn fan(q: &FanQuiver, ids: &[&str]) -> Fan {
    let owned: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    q.fan_from_arrow_ids(&owned).unwrap()
}

pub fn one(f: Fan) -> Combo {
    Combo::single(f, qn(1))
}

pub fn cs(f: Fan, c: Scalar) -> Combo {
    Combo::single(f, c)
}

pub fn fwd(f: Fan) -> Letter {
    Letter { fan: f, direction: Direction::Forward }
}

pub fn bwd(f: Fan) -> Letter {
    Letter { fan: f, direction: Direction::Backward }
}

/// Five-summand complex with two length-2 arms meeting at `M@1`, over the
/// Z-graded three-boundary quiver.
pub fn blue(q: &FanQuiver) -> TwistedComplex {
    TwistedComplex::new(
        q,
        rat(),
        vec![
            (vtx(q, "A"), 0),
            (vtx(q, "C"), 0),
            (vtx(q, "R"), 0),
            (vtx(q, "M"), 1),
            (vtx(q, "D"), 1),
        ],
        vec![
            (3, 0, one(fan(q, &["a", "b"]))),
            (3, 1, one(fan(q, &["e"]))),
            (4, 1, one(fan(q, &["h"]))),
            (4, 2, one(fan(q, &["g"]))),
        ],
    )
}

/// Its crossing partner: five summands with arms through `L@1` and `B@1`.
pub fn orange(q: &FanQuiver) -> TwistedComplex {
    TwistedComplex::new(
        q,
        rat(),
        vec![
            (vtx(q, "A"), 0),
            (vtx(q, "M"), 0),
            (vtx(q, "L"), 1),
            (vtx(q, "B"), 1),
            (vtx(q, "D"), 1),
        ],
        vec![
            (2, 0, one(fan(q, &["a"]))),
            (3, 0, one(fan(q, &["d"]))),
            (3, 1, one(fan(q, &["c"]))),
            (4, 1, one(fan(q, &["f", "g"]))),
        ],
    )
}

/// Signed sum of `1 - deg` over a letter sequence; a cyclic word is gradable
/// iff this normalizes to zero.
pub fn closure_total(q: &FanQuiver, letters: &[Letter]) -> i64 {
    letters
        .iter()
        .map(|l| {
            let step = 1 - q.fan_degree(&l.fan);
            match l.direction {
                Direction::Forward => step,
                Direction::Backward => -step,
            }
        })
        .sum()
}

/// Ext dimension at a degree, reading the trimmed table.
pub fn dim_at(t: &ExtTable, d: i64) -> usize {
    match t.group {
        GradingGroup::Z => {
            let i = d - t.min_degree;
            if i < 0 || i as usize >= t.dims.len() {
                0
            } else {
                t.dims[i as usize]
            }
        }
        GradingGroup::Zmod2 => t.dims[t.group.normalize(d) as usize],
    }
}

pub fn trunc_at(t: &ExtTable, d: i64) -> bool {
    match t.group {
        GradingGroup::Z => {
            let i = d - t.min_degree;
            if i < 0 || i as usize >= t.truncated.len() {
                false
            } else {
                t.truncated[i as usize]
            }
        }
        GradingGroup::Zmod2 => t.truncated[t.group.normalize(d) as usize],
    }
}

/// Random curve words over a fixed quiver: walks on the fan catalog that
/// respect endpoints and avoid immediate backtracking. Compilation may still
/// reject an emitted word (square-zero, gradability, proper powers); callers
/// treat those as legitimate outcomes.
pub struct WordGen {
    pub rng: ChaCha8Rng,
    catalog: Vec<Vec<Vec<Fan>>>,
    nv: usize,
}

impl WordGen {
    pub fn new(q: &FanQuiver, seed: u64) -> WordGen {
        let nv = q.vertices.len();
        let mut catalog = vec![vec![Vec::new(); nv]; nv];
        for u in 0..nv {
            for v in 0..nv {
                let (fans, _) = q.enumerate_fans(u, v, 1);
                catalog[u][v] =
                    fans.into_iter().filter(|f| !matches!(f, Fan::Lazy(_))).collect();
            }
        }
        WordGen { rng: ChaCha8Rng::seed_from_u64(seed), catalog, nv }
    }

    fn steps_from(&self, cur: usize, prev: Option<&Letter>) -> Vec<Letter> {
        let mut out = Vec::new();
        for v in 0..self.nv {
            for &f in &self.catalog[cur][v] {
                out.push(Letter { fan: f, direction: Direction::Forward });
            }
            for &f in &self.catalog[v][cur] {
                out.push(Letter { fan: f, direction: Direction::Backward });
            }
        }
        if let Some(p) = prev {
            out.retain(|l| !(l.fan == p.fan && l.direction != p.direction));
        }
        out
    }

    fn advance(q: &FanQuiver, cur: usize, l: &Letter) -> usize {
        match l.direction {
            Direction::Forward => {
                debug_assert_eq!(q.fan_source(&l.fan), cur);
                q.fan_target(&l.fan)
            }
            Direction::Backward => {
                debug_assert_eq!(q.fan_target(&l.fan), cur);
                q.fan_source(&l.fan)
            }
        }
    }

    pub fn string_word(&mut self, q: &FanQuiver) -> StringWord {
        let mut cur = self.rng.random_range(0..self.nv);
        let mut arcs = vec![cur];
        let mut letters: Vec<Letter> = Vec::new();
        let target_len = self.rng.random_range(0..=4usize);
        while letters.len() < target_len {
            let options = self.steps_from(cur, letters.last());
            if options.is_empty() {
                break;
            }
            let pick = options[self.rng.random_range(0..options.len())];
            cur = Self::advance(q, cur, &pick);
            arcs.push(cur);
            letters.push(pick);
        }
        let base_position = self.rng.random_range(-2..=2);
        StringWord { arcs, letters, base_position }
    }

    pub fn band_word(&mut self, q: &FanQuiver, field: FieldSpec) -> Option<BandWord> {
        let start = self.rng.random_range(0..self.nv);
        let k = self.rng.random_range(2..=6usize);
        let mut cur = start;
        let mut arcs = vec![start];
        let mut letters: Vec<Letter> = Vec::new();
        while letters.len() + 1 < k {
            let options = self.steps_from(cur, letters.last());
            if options.is_empty() {
                return None;
            }
            let pick = options[self.rng.random_range(0..options.len())];
            cur = Self::advance(q, cur, &pick);
            arcs.push(cur);
            letters.push(pick);
        }
        let mut closers = self.steps_from(cur, letters.last());
        closers.retain(|l| Self::advance(q, cur, l) == start);
        if let Some(first) = letters.first() {
            closers.retain(|l| !(l.fan == first.fan && l.direction != first.direction));
        }
        if closers.is_empty() {
            return None;
        }
        let closing = closers[self.rng.random_range(0..closers.len())];
        letters.push(closing);
        let rank = self.rng.random_range(1..=2usize);
        let mut coeffs = Vec::with_capacity(rank);
        let nonzero = [-2i64, -1, 1, 2];
        coeffs.push(field.from_i64(nonzero[self.rng.random_range(0..nonzero.len())]));
        for _ in 1..rank {
            coeffs.push(field.from_i64(self.rng.random_range(-2..=2)));
        }
        let local_system = companion_matrix(field, &coeffs).ok()?;
        let base_position = self.rng.random_range(-2..=2);
        Some(BandWord { arcs, letters, local_system, base_position })
    }
}
