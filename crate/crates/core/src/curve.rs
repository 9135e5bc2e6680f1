use crate::complex::TwistedComplex;
use crate::error::{Error, Result};
use crate::fan::{Combo, Fan, FanQuiver};
use crate::linalg::Mat;
use crate::poly::{monodromy_invariants, Poly};
use crate::scalar::{FieldSpec, Scalar};
use serde::{Deserialize, Serialize};

/// Whether the curve traverses a letter's fan along or against its arrows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// One corner of a homotoped curve: a fan crossed in a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Letter {
    pub fan: Fan,
    pub direction: Direction,
}

/// Open curve data: arcs `a_1..a_k` (as quiver vertices) joined by `k - 1`
/// letters, graded from the position of `a_1`.
#[derive(Debug, Clone)]
pub struct StringWord {
    pub arcs: Vec<usize>,
    pub letters: Vec<Letter>,
    pub base_position: i64,
}

/// Closed curve data: cyclically ordered arcs with one letter per junction
/// (the last letter closes `a_k` back to `a_1`) and an invertible local
/// system attached to the closing letter.
#[derive(Debug, Clone)]
pub struct BandWord {
    pub arcs: Vec<usize>,
    pub letters: Vec<Letter>,
    pub local_system: LocalSystem,
    pub base_position: i64,
}

/// Invertible monodromy matrix; construction enforces invertibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalSystem {
    monodromy: Mat,
}

impl LocalSystem {
    pub fn from_matrix(monodromy: Mat) -> Result<LocalSystem> {
        if monodromy.rows == 0
            || monodromy.rows != monodromy.cols
            || monodromy.rank() != monodromy.rows
        {
            return Err(Error::SingularLocalSystem);
        }
        Ok(LocalSystem { monodromy })
    }

    pub fn rank(&self) -> usize {
        self.monodromy.rows
    }

    pub fn monodromy(&self) -> &Mat {
        &self.monodromy
    }

    pub fn field(&self) -> FieldSpec {
        self.monodromy.field
    }

    /// Invariant factors of `XI - M`; complete isomorphism invariant.
    pub fn invariants(&self) -> Vec<Poly> {
        monodromy_invariants(&self.monodromy)
    }
}

/// Companion matrix with subdiagonal 1s and last column `C_0..C_{r-1}`;
/// invertible exactly when `C_0` is nonzero.
pub fn companion_matrix(field: FieldSpec, coeffs: &[Scalar]) -> Result<LocalSystem> {
    let r = coeffs.len();
    if r == 0 || coeffs[0].is_zero() {
        return Err(Error::SingularLocalSystem);
    }
    let mut m = Mat::zeros(field, r, r);
    for i in 1..r {
        m.set(i, i - 1, field.one());
    }
    for (i, c) in coeffs.iter().enumerate() {
        m.set(i, r - 1, c.clone());
    }
    LocalSystem::from_matrix(m)
}

fn check_letter(
    q: &FanQuiver,
    slot: usize,
    letter: &Letter,
    from: usize,
    to: usize,
) -> Result<()> {
    let (want_src, want_dst) = match letter.direction {
        Direction::Forward => (from, to),
        Direction::Backward => (to, from),
    };
    let src = q.fan_source(&letter.fan);
    let dst = q.fan_target(&letter.fan);
    if (src, dst) != (want_src, want_dst) {
        return Err(Error::BrokenWord {
            slot,
            detail: format!(
                "letter runs {} -> {} but the word needs {} -> {}",
                q.vertices[src], q.vertices[dst], q.vertices[want_src], q.vertices[want_dst]
            ),
        });
    }
    Ok(())
}

fn check_no_backtracking(letters: &[Letter], cyclic: bool) -> Result<()> {
    let k = letters.len();
    let pairs = if cyclic { k } else { k.saturating_sub(1) };
    for i in 0..pairs {
        let a = &letters[i];
        let b = &letters[(i + 1) % k];
        if a.fan == b.fan && a.direction != b.direction {
            return Err(Error::BrokenWord {
                slot: i,
                detail: "letter backtracks into the previous one".to_string(),
            });
        }
    }
    Ok(())
}

fn is_proper_power(arcs: &[usize], letters: &[Letter]) -> bool {
    let k = arcs.len();
    (1..k).filter(|d| k % d == 0).any(|d| {
        (0..k).all(|i| arcs[i] == arcs[(i + d) % k] && letters[i] == letters[(i + d) % k])
    })
}

fn map_validation(err: Error) -> Error {
    match err {
        Error::DifferentialNotSquareZero { target, src } => {
            Error::SquareZeroViolation { target, src }
        }
        other => other,
    }
}

/// Compiles an open word: one summand per arc, positions propagated so every
/// letter entry has total degree 1.
pub fn compile_string(
    q: &FanQuiver,
    field: FieldSpec,
    w: &StringWord,
    max_winding: usize,
) -> Result<TwistedComplex> {
    let k = w.arcs.len();
    if k == 0 || w.letters.len() + 1 != k {
        return Err(Error::BrokenWord {
            slot: 0,
            detail: format!("{} arcs need {} letters, found {}", k, k.max(1) - 1, w.letters.len()),
        });
    }
    for (i, letter) in w.letters.iter().enumerate() {
        check_letter(q, i, letter, w.arcs[i], w.arcs[i + 1])?;
    }
    check_no_backtracking(&w.letters, false)?;
    let mut pos = vec![w.base_position; k];
    let mut entries = Vec::new();
    for (i, letter) in w.letters.iter().enumerate() {
        let step = 1 - q.fan_degree(&letter.fan);
        match letter.direction {
            Direction::Forward => {
                pos[i + 1] = pos[i] + step;
                entries.push((i + 1, i, Combo::single(letter.fan, field.one())));
            }
            Direction::Backward => {
                pos[i + 1] = pos[i] - step;
                entries.push((i, i + 1, Combo::single(letter.fan, field.one())));
            }
        }
    }
    let summands = w.arcs.iter().zip(&pos).map(|(&v, &p)| (v, p)).collect();
    let x = TwistedComplex::new(q, field, summands, entries);
    x.validate(q, max_winding).map_err(map_validation)?;
    Ok(x)
}

/// Compiles a cyclic word: `r` copies of each summand, identity blocks on
/// the non-closing letters and the monodromy block on the closing one.
pub fn compile_band(q: &FanQuiver, w: &BandWord, max_winding: usize) -> Result<TwistedComplex> {
    let field = w.local_system.field();
    let k = w.arcs.len();
    if k == 0 || w.letters.len() != k {
        return Err(Error::BrokenWord {
            slot: 0,
            detail: format!("{} arcs need {} letters, found {}", k, k, w.letters.len()),
        });
    }
    for (i, letter) in w.letters.iter().enumerate() {
        let (from, to) = if i + 1 == k {
            (w.arcs[k - 1], w.arcs[0])
        } else {
            (w.arcs[i], w.arcs[i + 1])
        };
        check_letter(q, i, letter, from, to)?;
    }
    check_no_backtracking(&w.letters, true)?;
    if is_proper_power(&w.arcs, &w.letters) {
        return Err(Error::BrokenWord {
            slot: 0,
            detail: "cyclic word is a proper power".to_string(),
        });
    }
    let mut total = 0i64;
    for letter in &w.letters {
        let step = 1 - q.fan_degree(&letter.fan);
        total += match letter.direction {
            Direction::Forward => step,
            Direction::Backward => -step,
        };
    }
    if q.group.normalize(total) != 0 {
        return Err(Error::UngradableBand { total });
    }
    let mut pos = vec![w.base_position; k];
    for (i, letter) in w.letters.iter().enumerate().take(k - 1) {
        let step = 1 - q.fan_degree(&letter.fan);
        pos[i + 1] = match letter.direction {
            Direction::Forward => pos[i] + step,
            Direction::Backward => pos[i] - step,
        };
    }
    let r = w.local_system.rank();
    let m = w.local_system.monodromy();
    let mut summands = Vec::with_capacity(k * r);
    for i in 0..k {
        for _ in 0..r {
            summands.push((w.arcs[i], pos[i]));
        }
    }
    let mut entries = Vec::new();
    for (i, letter) in w.letters.iter().enumerate().take(k - 1) {
        for c in 0..r {
            let combo = Combo::single(letter.fan, field.one());
            match letter.direction {
                Direction::Forward => entries.push(((i + 1) * r + c, i * r + c, combo)),
                Direction::Backward => entries.push((i * r + c, (i + 1) * r + c, combo)),
            }
        }
    }
    let closing = &w.letters[k - 1];
    for a in 0..r {
        for b in 0..r {
            if m.at(a, b).is_zero() {
                continue;
            }
            let combo = Combo::single(closing.fan, m.at(a, b).clone());
            match closing.direction {
                Direction::Forward => entries.push((a, (k - 1) * r + b, combo)),
                Direction::Backward => entries.push(((k - 1) * r + a, b, combo)),
            }
        }
    }
    let x = TwistedComplex::new(q, field, summands, entries);
    x.validate(q, max_winding).map_err(map_validation)?;
    Ok(x)
}
