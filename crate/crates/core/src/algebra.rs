//! The level-n group ring `Z_p[G_n]` at working precision p^N, for G_n
//! cyclic of order p^n.
//!
//! A fixed generator gamma of G_n is chosen once per level, compatibly
//! across levels: the projection to level n-1 sends gamma to the chosen
//! generator there. Elements are coefficient vectors in the gamma-power
//! basis, so multiplication is cyclic convolution of length p^n, and the
//! identification with `Z_p[[T]]/((1+T)^{p^n} - 1)` is gamma = 1 + T.
//!
//! The mu-invariant of f is the largest k with f in p^k * (ring); the
//! lambda-invariant is the order of vanishing of f/p^mu mod p along the
//! augmentation filtration, computed through the binomial change of basis
//! from powers of gamma to powers of u = gamma - 1 in `F_p[u]/u^{p^n}`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::padic::lane::{with_lane, ZpRing};
use crate::padic::{check_ring_params, modulus_big, val_of_big, PadicScalar, Valuation};
use crate::Result;

/// Element of the level-n group ring, as p^n coefficients mod p^N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraElement {
    p: u64,
    prec: u32,
    level: u32,
    coeffs: Vec<BigUint>,
}

/// mu and lambda of a nonzero element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    pub mu: u32,
    pub lambda: u64,
}

/// Generator parity class for the vanishing ideals: `Plus` collects the
/// cyclotomic factors of even tower level m >= 2, `Minus` the odd ones.
/// The trivial character (m = 0) belongs to neither; see `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdealSign {
    Plus,
    Minus,
}

/// Sampling constraint for `random_element`.
pub enum Constraint<'a> {
    Any,
    /// mu = 0, i.e. at least one unit coefficient.
    Unit,
    /// A uniformly random preimage of the given next-lower-level element
    /// under the projection map.
    LiftOf(&'a AlgebraElement),
}

pub(crate) fn group_order(p: u64, level: u32) -> usize {
    (p as usize)
        .checked_pow(level)
        .expect("group order p^n overflows usize")
}

impl AlgebraElement {
    pub fn new(p: u64, prec: u32, level: u32, coeffs: Vec<BigUint>) -> Result<Self> {
        check_ring_params(p, prec)?;
        let n = group_order(p, level);
        if coeffs.len() != n {
            return Err(Error::LevelMismatch {
                lhs: level,
                rhs: coeffs.len() as u32,
            });
        }
        let m = modulus_big(p, prec);
        let coeffs = coeffs.into_iter().map(|c| c % &m).collect();
        Ok(AlgebraElement {
            p,
            prec,
            level,
            coeffs,
        })
    }

    pub fn zero(p: u64, prec: u32, level: u32) -> Result<Self> {
        Self::new(p, prec, level, vec![BigUint::zero(); group_order(p, level)])
    }

    pub fn one(p: u64, prec: u32, level: u32) -> Result<Self> {
        Self::monomial(p, prec, level, 0)
    }

    /// gamma^k as an element of the level-n ring.
    pub fn monomial(p: u64, prec: u32, level: u32, k: usize) -> Result<Self> {
        let n = group_order(p, level);
        let mut coeffs = vec![BigUint::zero(); n];
        coeffs[k % n] = BigUint::one();
        Self::new(p, prec, level, coeffs)
    }

    pub fn generator(p: u64, prec: u32, level: u32) -> Result<Self> {
        Self::monomial(p, prec, level, 1)
    }

    /// Convenience constructor from signed coefficients.
    pub fn from_i64_coeffs(p: u64, prec: u32, level: u32, coeffs: &[i64]) -> Result<Self> {
        let vals = coeffs
            .iter()
            .map(|&c| Ok(PadicScalar::from_i64(p, prec, c)?.value().clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, prec, level, vals)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PadicScalar {
        PadicScalar::from_reduced(self.p, self.prec, self.coeffs[i].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_compatible(&self, rhs: &Self) -> Result<()> {
        if self.p != rhs.p || self.prec != rhs.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: rhs.p,
                prec_rhs: rhs.prec,
            });
        }
        if self.level != rhs.level {
            return Err(Error::LevelMismatch {
                lhs: self.level,
                rhs: rhs.level,
            });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let m = modulus_big(self.p, self.prec);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| (a + b) % &m)
            .collect();
        Ok(AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level,
            coeffs,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        let m = modulus_big(self.p, self.prec);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.is_zero() { c.clone() } else { &m - c })
            .collect();
        AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level,
            coeffs,
        }
    }

    pub fn scalar_mul(&self, s: &PadicScalar) -> Result<Self> {
        if s.p() != self.p || s.prec() != self.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: s.p(),
                prec_rhs: s.prec(),
            });
        }
        let m = modulus_big(self.p, self.prec);
        let coeffs = self.coeffs.iter().map(|c| (c * s.value()) % &m).collect();
        Ok(AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level,
            coeffs,
        })
    }

    /// Group-ring product: cyclic convolution of the coefficient vectors.
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let n = self.coeffs.len();
        let coeffs = with_lane!(self.p, self.prec, |ring| {
            let a: Vec<_> = self.coeffs.iter().map(|c| ring.from_big(c)).collect();
            let b: Vec<_> = rhs.coeffs.iter().map(|c| ring.from_big(c)).collect();
            let mut out = vec![ring.zero(); n];
            for (i, ai) in a.iter().enumerate() {
                if ring.is_zero(ai) {
                    continue;
                }
                for (j, bj) in b.iter().enumerate() {
                    if ring.is_zero(bj) {
                        continue;
                    }
                    let mut k = i + j;
                    if k >= n {
                        k -= n;
                    }
                    let prod = ring.mul(ai, bj);
                    out[k] = ring.add(&out[k], &prod);
                }
            }
            out.iter().map(|c| ring.to_big(c)).collect::<Vec<_>>()
        });
        Ok(AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level,
            coeffs,
        })
    }

    /// Projection to level n-1: fold indices mod p^(n-1).
    pub fn project_pi(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(Error::LevelZero);
        }
        let m = modulus_big(self.p, self.prec);
        let n_low = group_order(self.p, self.level - 1);
        let mut coeffs = vec![BigUint::zero(); n_low];
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = i % n_low;
            coeffs[j] = (&coeffs[j] + c) % &m;
        }
        Ok(AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level - 1,
            coeffs,
        })
    }

    /// Repeated projection down to `target_level`.
    pub fn project_to(&self, target_level: u32) -> Result<Self> {
        if target_level > self.level {
            return Err(Error::LevelMismatch {
                lhs: self.level,
                rhs: target_level,
            });
        }
        let mut out = self.clone();
        while out.level > target_level {
            out = out.project_pi()?;
        }
        Ok(out)
    }

    /// Norm lift to level n+1: each group element maps to the sum of its
    /// p preimages, i.e. coefficients are repeated along fibers.
    pub fn lift_nu(&self) -> Self {
        let n_low = self.coeffs.len();
        let n_high = n_low * self.p as usize;
        let mut coeffs = Vec::with_capacity(n_high);
        for i in 0..n_high {
            coeffs.push(self.coeffs[i % n_low].clone());
        }
        AlgebraElement {
            p: self.p,
            prec: self.prec,
            level: self.level + 1,
            coeffs,
        }
    }

    /// Whether the element lies in the image of the norm lift from the
    /// level below, i.e. its coefficients are constant along fibers.
    pub fn in_nu_image(&self) -> bool {
        if self.level == 0 {
            return false;
        }
        let n_low = self.coeffs.len() / self.p as usize;
        (n_low..self.coeffs.len()).all(|i| self.coeffs[i] == self.coeffs[i % n_low])
    }

    /// Minimum coefficient valuation.
    pub fn mu_invariant(&self) -> Result<u32> {
        let mut best: Option<u32> = None;
        for c in &self.coeffs {
            if let Valuation::Exact(v) = val_of_big(self.p, self.prec, c) {
                best = Some(best.map_or(v, |b| b.min(v)));
                if v == 0 {
                    break;
                }
            }
        }
        best.ok_or(Error::PrecisionExhausted { prec: self.prec })
    }

    /// Order of vanishing of f/p^mu mod p in the (gamma-1)-adic filtration
    /// of `F_p[G_n]`, via the binomial transform to the u = gamma-1 basis.
    pub fn lambda_invariant(&self) -> Result<u64> {
        let mu = self.mu_invariant()?;
        let p = self.p;
        let n = self.coeffs.len();
        let p_pow_mu = BigUint::from(p).pow(mu);
        let g: Vec<u64> = self
            .coeffs
            .iter()
            .map(|c| {
                let reduced = (c / &p_pow_mu) % p;
                reduced.to_u64_digits().first().copied().unwrap_or(0)
            })
            .collect();

        // b_k = sum_i g_i * C(i, k) mod p, accumulated row by row of the
        // Pascal triangle mod p.
        let mut b = vec![0u64; n];
        let mut row = vec![0u64; n];
        row[0] = 1;
        for (i, gi) in g.iter().enumerate() {
            if i > 0 {
                for k in (1..=i.min(n - 1)).rev() {
                    row[k] = (row[k] + row[k - 1]) % p;
                }
            }
            if *gi != 0 {
                for k in 0..=i.min(n - 1) {
                    b[k] = (b[k] + gi * row[k]) % p;
                }
            }
        }
        let lambda = b
            .iter()
            .position(|&x| x != 0)
            .expect("binomial transform of a nonzero mod-p vector is nonzero");
        Ok(lambda as u64)
    }

    pub fn invariants(&self) -> Result<Invariants> {
        Ok(Invariants {
            mu: self.mu_invariant()?,
            lambda: self.lambda_invariant()?,
        })
    }
}

/// The kernel-sum element: sum of the order-dividing-p subgroup of G_n,
/// equal to the norm lift of 1 and to the top cyclotomic factor.
pub fn xi(p: u64, prec: u32, n: u32) -> Result<AlgebraElement> {
    if n == 0 {
        return Err(Error::LevelZero);
    }
    let step = group_order(p, n - 1);
    let order = group_order(p, n);
    let mut coeffs = vec![BigUint::zero(); order];
    let mut i = 0;
    while i < order {
        coeffs[i] = BigUint::one();
        i += step;
    }
    AlgebraElement::new(p, prec, n, coeffs)
}

/// The m-th cyclotomic polynomial evaluated at gamma, in the level-n ring.
/// m = 0 gives gamma - 1; for m >= 1 the exponents a*p^(m-1), a < p.
pub fn cyclotomic_factor(p: u64, prec: u32, n: u32, m: u32) -> Result<AlgebraElement> {
    assert!(m <= n, "cyclotomic level {m} exceeds ring level {n}");
    if m == 0 {
        let gamma = AlgebraElement::generator(p, prec, n)?;
        return gamma.sub(&AlgebraElement::one(p, prec, n)?);
    }
    let order = group_order(p, n);
    let step = group_order(p, m - 1);
    let mut coeffs = vec![BigUint::zero(); order];
    for a in 0..p as usize {
        coeffs[a * step] = BigUint::one();
    }
    AlgebraElement::new(p, prec, n, coeffs)
}

/// Product of the cyclotomic factors of one parity class:
/// `Plus` multiplies the factors with even m in [2, n], `Minus` those with
/// odd m in [1, n]. Empty products are 1, so both generators are units at
/// the levels where their parity class is empty (n <= 1 for `Plus`,
/// n = 0 for `Minus`); the trivial character contributes to neither class.
pub fn omega(p: u64, prec: u32, n: u32, sign: IdealSign) -> Result<AlgebraElement> {
    let start = match sign {
        IdealSign::Plus => 2,
        IdealSign::Minus => 1,
    };
    let mut acc = AlgebraElement::one(p, prec, n)?;
    let mut m = start;
    while m <= n {
        acc = acc.multiply(&cyclotomic_factor(p, prec, n, m)?)?;
        m += 2;
    }
    Ok(acc)
}

/// Uniform sampling mod p^N under a constraint. Draw order is fixed, so a
/// given RNG state determines the element.
pub fn random_element<R: Rng + ?Sized>(
    rng: &mut R,
    p: u64,
    prec: u32,
    level: u32,
    constraint: Constraint<'_>,
) -> Result<AlgebraElement> {
    check_ring_params(p, prec)?;
    let m = modulus_big(p, prec);
    let order = group_order(p, level);
    match constraint {
        Constraint::Any => {
            let coeffs = (0..order).map(|_| rng.gen_biguint_below(&m)).collect();
            AlgebraElement::new(p, prec, level, coeffs)
        }
        Constraint::Unit => loop {
            let coeffs: Vec<BigUint> = (0..order).map(|_| rng.gen_biguint_below(&m)).collect();
            if coeffs.iter().any(|c| !(c % p).is_zero()) {
                return AlgebraElement::new(p, prec, level, coeffs);
            }
        },
        Constraint::LiftOf(g) => {
            assert_eq!(g.p(), p, "lift target lives over a different prime");
            assert_eq!(g.prec(), prec, "lift target has a different precision");
            assert_eq!(
                g.level() + 1,
                level,
                "lift target must sit one level below"
            );
            let n_low = group_order(p, g.level());
            let mut coeffs = vec![BigUint::zero(); order];
            for j in 0..n_low {
                // free coefficients on the nontrivial sheets, then solve the
                // fiber sum for the base sheet
                let mut sum = BigUint::zero();
                for t in 1..p as usize {
                    let c = rng.gen_biguint_below(&m);
                    sum = (sum + &c) % &m;
                    coeffs[j + t * n_low] = c;
                }
                coeffs[j] = (&m + &g.coeffs()[j] - sum) % &m;
            }
            AlgebraElement::new(p, prec, level, coeffs)
        }
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level {}; [", self.level)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] mod {}^{}", self.p, self.prec)
    }
}

impl FromStr for AlgebraElement {
    type Err = Error;

    /// Parses the canonical text form `level n; [c_0, ...] mod p^N`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = || Error::LevelMismatch { lhs: 0, rhs: 0 };
        let s = s.trim();
        let rest = s.strip_prefix("level ").ok_or_else(parse_err)?;
        let (level_str, rest) = rest.split_once(';').ok_or_else(parse_err)?;
        let level: u32 = level_str.trim().parse().map_err(|_| parse_err())?;
        let rest = rest.trim();
        let open = rest.find('[').ok_or_else(parse_err)?;
        let close = rest.rfind(']').ok_or_else(parse_err)?;
        let body = &rest[open + 1..close];
        let tail = rest[close + 1..].trim();
        let tail = tail.strip_prefix("mod").ok_or_else(parse_err)?.trim();
        let (p_str, prec_str) = tail.split_once('^').ok_or_else(parse_err)?;
        let p: u64 = p_str.trim().parse().map_err(|_| parse_err())?;
        let prec: u32 = prec_str.trim().parse().map_err(|_| parse_err())?;
        let coeffs = body
            .split(',')
            .map(|t| t.trim().parse::<BigUint>().map_err(|_| parse_err()))
            .collect::<Result<Vec<_>>>()?;
        AlgebraElement::new(p, prec, level, coeffs)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    p: u64,
    precision: u32,
    level: u32,
    coeffs: Vec<String>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            p: self.p,
            precision: self.prec,
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        let coeffs = repr
            .coeffs
            .iter()
            .map(|c| c.parse::<BigUint>().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        AlgebraElement::new(repr.p, repr.precision, repr.level, coeffs)
            .map_err(serde::de::Error::custom)
    }
}
