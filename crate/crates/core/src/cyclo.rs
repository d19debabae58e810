//! Character evaluation into the cyclotomic quotients Z_p[zeta_{p^m}] and
//! exact valuations in the totally ramified tower.
//!
//! The character of tower level m is pinned to gamma -> zeta_{p^m}, the
//! residue class of x in `Z_p[x]/Phi_{p^m}(x)`; Galois conjugates give
//! conjugate values with the same valuation, which is all the downstream
//! checks use. Elements are stored in the x-power basis, where products
//! are cheapest, and moved to the Eisenstein basis u = zeta - 1 only when
//! a valuation is needed: with E(u) = Phi(1 + u) Eisenstein of degree
//! e = p^(m-1)(p-1), the candidate valuations e*val(c_j) + j of a reduced
//! representative are distinct mod e, so their minimum is exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::Zero;
use once_cell::sync::OnceCell;
use serde::{Deserialize, Serialize};

use crate::algebra::{group_order, AlgebraElement};
use crate::error::Error;
use crate::padic::{modulus_big, val_of_big, PadicScalar, Valuation};
use crate::Result;

/// Residue mod Phi_{p^m}(x) with coefficients mod p^N; a bare scalar at
/// tower level 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloElement {
    p: u64,
    prec: u32,
    tower: u32,
    coeffs: Vec<BigUint>,
}

/// Valuation normalized so ord(p) = 1, kept as an exact fraction with the
/// ramification index as denominator. Never a float; serialized as the
/// string `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamifiedValuation {
    pub num: u64,
    pub den: u64,
}

impl fmt::Display for RamifiedValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for RamifiedValuation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RamifiedValuation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected num/den"))?;
        Ok(RamifiedValuation {
            num: num.parse().map_err(serde::de::Error::custom)?,
            den: den.parse().map_err(serde::de::Error::custom)?,
        })
    }
}

/// phi(p^m) = p^(m-1) (p-1); the degree of the extension and its
/// ramification index.
pub fn ramification_index(p: u64, m: u32) -> u64 {
    assert!(m >= 1);
    p.pow(m - 1) * (p - 1)
}

impl CycloElement {
    pub fn new(p: u64, prec: u32, tower: u32, coeffs: Vec<BigUint>) -> Result<Self> {
        crate::padic::check_ring_params(p, prec)?;
        let dim = if tower == 0 {
            1
        } else {
            ramification_index(p, tower) as usize
        };
        if coeffs.len() != dim {
            return Err(Error::LevelMismatch {
                lhs: tower,
                rhs: coeffs.len() as u32,
            });
        }
        let m = modulus_big(p, prec);
        Ok(CycloElement {
            p,
            prec,
            tower,
            coeffs: coeffs.into_iter().map(|c| c % &m).collect(),
        })
    }

    pub fn from_i64_coeffs(p: u64, prec: u32, tower: u32, coeffs: &[i64]) -> Result<Self> {
        let vals = coeffs
            .iter()
            .map(|&c| Ok(PadicScalar::from_i64(p, prec, c)?.value().clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, prec, tower, vals)
    }

    pub fn one(p: u64, prec: u32, tower: u32) -> Result<Self> {
        let dim = if tower == 0 {
            1
        } else {
            ramification_index(p, tower) as usize
        };
        let mut coeffs = vec![BigUint::zero(); dim];
        coeffs[0] = BigUint::from(1u32);
        Self::new(p, prec, tower, coeffs)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn tower(&self) -> u32 {
        self.tower
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// True iff every coefficient vanishes mod p^N. Callers must read this
    /// as "zero to precision N"; the vanishing claims checked by the
    /// verification engine are exact algebraic identities, for which this
    /// is conclusive.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.p != rhs.p || self.prec != rhs.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: rhs.p,
                prec_rhs: rhs.prec,
            });
        }
        if self.tower != rhs.tower {
            return Err(Error::LevelMismatch {
                lhs: self.tower,
                rhs: rhs.tower,
            });
        }
        let m = modulus_big(self.p, self.prec);
        if self.tower == 0 {
            let v = (&self.coeffs[0] * &rhs.coeffs[0]) % &m;
            return Self::new(self.p, self.prec, 0, vec![v]);
        }
        let phi = self.coeffs.len();
        let mut prod = vec![BigUint::zero(); 2 * phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] = (&prod[i + j] + a * b) % &m;
            }
        }
        let step = phi / (self.p as usize - 1); // p^(m-1)
        // x^phi = -(1 + x^step + ... + x^((p-2) step)); fold top degrees down
        for e in (phi..prod.len()).rev() {
            if prod[e].is_zero() {
                continue;
            }
            let c = std::mem::take(&mut prod[e]);
            for b in 0..(self.p as usize - 1) {
                let idx = e - phi + b * step;
                prod[idx] = (&prod[idx] + &m - &c) % &m;
            }
        }
        prod.truncate(phi);
        Self::new(self.p, self.prec, self.tower, prod)
    }

    /// Exact valuation in units of 1/e via the Eisenstein basis.
    ///
    /// Requires tower level >= 1. Fails with `ZeroAtPrecision` when the
    /// element is indistinguishable from 0 mod p^N.
    pub fn eisenstein_valuation(&self) -> Result<RamifiedValuation> {
        assert!(self.tower >= 1, "valuation in 1/e units needs a ramified level");
        let e = ramification_index(self.p, self.tower);
        let phi = self.coeffs.len();
        let table = binomial_table(self.p, self.prec, phi);
        let m = modulus_big(self.p, self.prec);
        let mut best: Option<u64> = None;
        for j in 0..phi {
            // c_j = sum_{i >= j} b_i * C(i, j): coefficient of u^j after x = 1 + u
            let mut c = BigUint::zero();
            for i in j..phi {
                let b = &self.coeffs[i];
                if b.is_zero() {
                    continue;
                }
                c = (c + b * &table[i * phi + j]) % &m;
            }
            if let Valuation::Exact(v) = val_of_big(self.p, self.prec, &c) {
                let cand = e * v as u64 + j as u64;
                best = Some(best.map_or(cand, |b| b.min(cand)));
                if v == 0 {
                    break; // nothing later can beat e*0 + j
                }
            }
        }
        match best {
            Some(num) => Ok(RamifiedValuation { num, den: e }),
            None => Err(Error::ZeroAtPrecision {
                num: e * self.prec as u64,
                den: e,
            }),
        }
    }
}

/// Image of f under gamma -> zeta_{p^m}: project to level m, then reduce
/// the polynomial mod Phi_{p^m}(x). For m = 0 this is the augmentation.
pub fn char_eval(f: &AlgebraElement, m: u32) -> Result<CycloElement> {
    assert!(m <= f.level(), "character level exceeds element level");
    let proj = f.project_to(m)?;
    let p = f.p();
    let prec = f.prec();
    if m == 0 {
        return CycloElement::new(p, prec, 0, vec![proj.coeffs()[0].clone()]);
    }
    let modulus = modulus_big(p, prec);
    let step = group_order(p, m - 1);
    let phi = step * (p as usize - 1);
    let mut coeffs: Vec<BigUint> = proj.coeffs()[..phi].to_vec();
    // exponents phi..p^m are a*p^(m-1)+r with a = p-1; one folding pass
    for r in 0..step {
        let c = &proj.coeffs()[phi + r];
        if c.is_zero() {
            continue;
        }
        for b in 0..(p as usize - 1) {
            let idx = r + b * step;
            coeffs[idx] = (&coeffs[idx] + &modulus - c) % &modulus;
        }
    }
    CycloElement::new(p, prec, m, coeffs)
}

type BinomialCache = Mutex<HashMap<(u64, u32, usize), Arc<Vec<BigUint>>>>;

/// Binomials C(i, j) mod p^N for i, j < dim, cached per (p, N, dim).
/// Built once under a lock; the build is idempotent so racing threads
/// agree on the contents.
fn binomial_table(p: u64, prec: u32, dim: usize) -> Arc<Vec<BigUint>> {
    static CACHE: OnceCell<BinomialCache> = OnceCell::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("binomial cache poisoned");
    guard
        .entry((p, prec, dim))
        .or_insert_with(|| {
            let m = modulus_big(p, prec);
            let mut table = vec![BigUint::zero(); dim * dim];
            for i in 0..dim {
                table[i * dim] = BigUint::from(1u32);
                for j in 1..=i {
                    let v = (&table[(i - 1) * dim + j] + &table[(i - 1) * dim + j - 1]) % &m;
                    table[i * dim + j] = v;
                }
            }
            Arc::new(table)
        })
        .clone()
}
