use crate::linalg::Mat;
use crate::scalar::{FieldSpec, Scalar};
use std::fmt;

/// Dense univariate polynomial, coefficients low-to-high, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    pub field: FieldSpec,
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<Scalar>) -> Poly {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Poly { field, coeffs }
    }

    pub fn zero(field: FieldSpec) -> Poly {
        Poly::new(field, vec![])
    }

    pub fn constant(c: Scalar) -> Poly {
        Poly::new(c.field(), vec![c])
    }

    /// `c * X^k`
    pub fn monomial(field: FieldSpec, c: Scalar, k: usize) -> Poly {
        let mut coeffs = vec![field.zero(); k];
        coeffs.push(c);
        Poly::new(field, coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn coeff_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(Scalar::to_string).collect()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            self.field,
            (0..n).map(|k| self.coeff(k).add(&other.coeff(k))).collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.field, self.coeffs.iter().map(Scalar::neg).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Poly::new(self.field, out)
    }

    /// Euclidean division: `self = q * d + r` with `deg r < deg d`.
    pub fn divmod(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.clone();
        let mut q = Poly::zero(self.field);
        let dd = d.degree().unwrap();
        let dl_inv = d.leading().unwrap().inv();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let t = Poly::monomial(self.field, r.leading().unwrap().mul(&dl_inv), rd - dd);
            q = q.add(&t);
            r = r.sub(&t.mul(d));
        }
        (q, r)
    }

    pub fn divides(&self, other: &Poly) -> bool {
        other.is_zero() || (!self.is_zero() && other.divmod(self).1.is_zero())
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some(l) => {
                let inv = l.inv();
                Poly::new(self.field, self.coeffs.iter().map(|c| c.mul(&inv)).collect())
            }
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for k in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[k];
            if c.is_zero() {
                continue;
            }
            let term = if k == 0 {
                c.to_string()
            } else {
                let xs = if k == 1 { "X".to_string() } else { format!("X^{k}") };
                if c.is_one() {
                    xs
                } else if c.neg().is_one() && matches!(c, Scalar::Rat(_)) {
                    format!("-{xs}")
                } else {
                    format!("{c}*{xs}")
                }
            };
            if out.is_empty() {
                out = term;
            } else if let Some(rest) = term.strip_prefix('-') {
                out = format!("{out} - {rest}");
            } else {
                out = format!("{out} + {term}");
            }
        }
        write!(f, "{out}")
    }
}

/// Smith invariant factors of a polynomial matrix over a field:
/// monic nonzero diagonal entries, each dividing the next.
pub fn invariant_factors(mut m: Vec<Vec<Poly>>) -> Vec<Poly> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let find_min = |m: &Vec<Vec<Poly>>, t: usize| -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if let Some(d) = m[i][j].degree() {
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    };
    let mut t = 0;
    while t < rows.min(cols) {
        let Some((bi, bj)) = find_min(&m, t) else { break };
        m.swap(t, bi);
        for row in m.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !m[i][t].is_zero() {
                    let (q, _) = m[i][t].divmod(&m[t][t]);
                    for j in t..cols {
                        m[i][j] = m[i][j].sub(&q.mul(&m[t][j]));
                    }
                    dirty |= !m[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !m[t][j].is_zero() {
                    let (q, _) = m[t][j].divmod(&m[t][t]);
                    for i in t..rows {
                        let v = m[i][j].sub(&q.mul(&m[i][t]));
                        m[i][j] = v;
                    }
                    dirty |= !m[t][j].is_zero();
                }
            }
            if dirty {
                let (bi, bj) = find_min(&m, t).unwrap();
                m.swap(t, bi);
                for row in m.iter_mut() {
                    row.swap(t, bj);
                }
                continue;
            }
            // Row and column are clear; enforce divisibility into the rest.
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !m[t][t].divides(&m[i][j]));
            match offender {
                Some((i, _)) => {
                    for j in t..cols {
                        m[t][j] = m[t][j].add(&m[i][j].clone());
                    }
                }
                None => break,
            }
        }
        t += 1;
    }
    let mut out = Vec::new();
    for k in 0..t {
        if !m[k][k].is_zero() {
            out.push(m[k][k].monic());
        }
    }
    out
}

/// Invariant factors of `XI - M`, units dropped: the similarity class of `M`.
pub fn monodromy_invariants(m: &Mat) -> Vec<Poly> {
    assert_eq!(m.rows, m.cols, "monodromy matrix must be square");
    let field = m.field;
    let x = Poly::monomial(field, field.one(), 1);
    let char_mat: Vec<Vec<Poly>> = (0..m.rows)
        .map(|i| {
            (0..m.cols)
                .map(|j| {
                    let c = Poly::constant(m.at(i, j).clone());
                    if i == j {
                        x.sub(&c)
                    } else {
                        c.neg()
                    }
                })
                .collect()
        })
        .collect();
    invariant_factors(char_mat)
        .into_iter()
        .filter(|p| p.degree().is_some_and(|d| d >= 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        FieldSpec::Rationals.from_i64(n)
    }

    fn qpoly(coeffs: &[i64]) -> Poly {
        Poly::new(
            FieldSpec::Rationals,
            coeffs.iter().map(|&n| q(n)).collect(),
        )
    }

    fn det(m: &[Vec<Poly>]) -> Poly {
        let n = m.len();
        if n == 0 {
            return Poly::constant(q(1));
        }
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = Poly::zero(FieldSpec::Rationals);
        for k in 0..n {
            let minor: Vec<Vec<Poly>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .map(|(_, p)| p.clone())
                        .collect()
                })
                .collect();
            let term = m[0][k].mul(&det(&minor));
            acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    fn qmat(rows: &[&[i64]]) -> Mat {
        Mat::from_rows(
            FieldSpec::Rationals,
            rows.iter().map(|r| r.iter().map(|&n| q(n)).collect()).collect(),
        )
    }

    #[test]
    fn divmod_round_trip() {
        let a = qpoly(&[-2, -3, 1]);
        let b = qpoly(&[1, 1]);
        let (quo, rem) = a.divmod(&b);
        assert_eq!(quo.mul(&b).add(&rem), a);
        assert!(rem.degree() < b.degree());
    }

    #[test]
    fn display_formatting() {
        assert_eq!(qpoly(&[-2, -3, 1]).to_string(), "X^2 - 3*X - 2");
        assert_eq!(qpoly(&[1, 0, -1]).to_string(), "-X^2 + 1");
        assert_eq!(qpoly(&[]).to_string(), "0");
        assert_eq!(qpoly(&[0, 1]).to_string(), "X");
    }

    #[test]
    fn identity_invariants() {
        let m = qmat(&[&[1, 0], &[0, 1]]);
        let inv = monodromy_invariants(&m);
        assert_eq!(inv, vec![qpoly(&[-1, 1]), qpoly(&[-1, 1])]);
    }

    #[test]
    fn companion_invariants_match_determinant() {
        // Companion matrix of X^2 - 3X - 2 (last column (2, 3)).
        let m = qmat(&[&[0, 2], &[1, 3]]);
        let inv = monodromy_invariants(&m);
        assert_eq!(inv, vec![qpoly(&[-2, -3, 1])]);
        assert_eq!(inv[0].to_string(), "X^2 - 3*X - 2");
        // Oracle: product of invariant factors = det(XI - M) by brute force.
        let x = Poly::monomial(FieldSpec::Rationals, q(1), 1);
        let char_mat: Vec<Vec<Poly>> = (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        let c = Poly::constant(m.at(i, j).clone());
                        if i == j {
                            x.sub(&c)
                        } else {
                            c.neg()
                        }
                    })
                    .collect()
            })
            .collect();
        assert_eq!(det(&char_mat), inv[0]);
    }

    #[test]
    fn similarity_invariance() {
        let m = qmat(&[&[0, 2], &[1, 3]]);
        // P = (1 1; 0 1), P^-1 = (1 -1; 0 1).
        let p = qmat(&[&[1, 1], &[0, 1]]);
        let pinv = qmat(&[&[1, -1], &[0, 1]]);
        let conj = p.mul(&m).mul(&pinv);
        assert_eq!(monodromy_invariants(&m), monodromy_invariants(&conj));
        // A diagonalizable example with two factors.
        let d = qmat(&[&[2, 0], &[0, 3]]);
        let conj_d = p.mul(&d).mul(&pinv);
        assert_eq!(monodromy_invariants(&conj_d), vec![qpoly(&[6, -5, 1])]);
    }
}
