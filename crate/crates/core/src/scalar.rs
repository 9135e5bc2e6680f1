use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, ToPrimitive, Zero};
use num::BigRational;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Ground field for all linear algebra: the rationals, or a prime field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Rationals,
    Prime { p: u64 },
}

/// Exact field element. `Fp` values are kept reduced to `0..p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Rat(BigRational),
    Fp { p: u64, val: u64 },
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

impl FieldSpec {
    pub fn zero(&self) -> Scalar {
        match self {
            FieldSpec::Rationals => Scalar::Rat(BigRational::zero()),
            FieldSpec::Prime { p } => Scalar::Fp { p: *p, val: 0 },
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        match self {
            FieldSpec::Rationals => Scalar::Rat(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::Prime { p } => {
                let r = BigInt::from(n).mod_floor(&BigInt::from(*p));
                Scalar::Fp {
                    p: *p,
                    val: r.to_u64().unwrap(),
                }
            }
        }
    }

    /// Parses `"n"` or `"n/d"` (optionally signed) into a field element.
    pub fn parse(&self, s: &str) -> Result<Scalar> {
        let bad = |detail: String| Error::ParseError {
            line: 0,
            column: 0,
            detail,
        };
        let (ns, ds) = match s.split_once('/') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let numer: BigInt = ns
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid scalar `{s}`")))?;
        let denom: BigInt = match ds {
            Some(d) => d
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid scalar `{s}`")))?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(bad(format!("zero denominator in `{s}`")));
        }
        match self {
            FieldSpec::Rationals => Ok(Scalar::Rat(BigRational::new(numer, denom))),
            FieldSpec::Prime { p } => {
                let pb = BigInt::from(*p);
                let n = numer.mod_floor(&pb).to_u64().unwrap();
                let d = denom.mod_floor(&pb).to_u64().unwrap();
                if d == 0 {
                    return Err(bad(format!("denominator of `{s}` vanishes mod {p}")));
                }
                Ok(Scalar::Fp {
                    p: *p,
                    val: mulmod(n, powmod(d, p - 2, *p), *p),
                })
            }
        }
    }

    /// Characteristic-dependent sign: `(-1)^k`.
    pub fn sign(&self, k: i64) -> Scalar {
        if k.rem_euclid(2) == 0 {
            self.one()
        } else {
            self.from_i64(-1)
        }
    }
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Rat(_) => FieldSpec::Rationals,
            Scalar::Fp { p, .. } => FieldSpec::Prime { p: *p },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Fp { val, .. } => *val == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_one(),
            Scalar::Fp { val, .. } => *val == 1,
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            (Scalar::Fp { p, val: a }, Scalar::Fp { p: q, val: b }) if p == q => Scalar::Fp {
                p: *p,
                val: ((*a as u128 + *b as u128) % *p as u128) as u64,
            },
            _ => panic!("scalar field mismatch"),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            (Scalar::Fp { p, val: a }, Scalar::Fp { p: q, val: b }) if p == q => Scalar::Fp {
                p: *p,
                val: mulmod(*a, *b, *p),
            },
            _ => panic!("scalar field mismatch"),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rat(a) => Scalar::Rat(-a),
            Scalar::Fp { p, val } => Scalar::Fp {
                p: *p,
                val: if *val == 0 { 0 } else { p - val },
            },
        }
    }

    /// Multiplicative inverse; panics on zero (callers must check first).
    pub fn inv(&self) -> Scalar {
        match self {
            Scalar::Rat(a) => {
                assert!(!a.is_zero(), "inverse of zero");
                Scalar::Rat(a.recip())
            }
            Scalar::Fp { p, val } => {
                assert!(*val != 0, "inverse of zero");
                Scalar::Fp {
                    p: *p,
                    val: powmod(*val, p - 2, *p),
                }
            }
        }
    }

    pub fn div(&self, other: &Scalar) -> Scalar {
        self.mul(&other.inv())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Fp { val, .. } => write!(f, "{val}"),
        }
    }
}
