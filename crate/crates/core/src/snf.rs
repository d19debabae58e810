//! Linear algebra over Z/p^N: Smith normal form, cokernel profiles,
//! ideal membership, and kernel bases.
//!
//! Over the local ring Z/p^N a single sweep suffices: pivoting on an
//! entry of minimal valuation d makes every other entry of the working
//! submatrix exactly divisible by the pivot, so one round of exact row
//! and column eliminations clears its cross and leaves a submatrix whose
//! valuations are still >= d. Divisor exponents therefore come out
//! non-decreasing, and every exponent strictly below N is provably
//! correct at this precision. Entries that never become distinguishable
//! from 0 are reported as `rank_deficit` rather than guessed.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::algebra::AlgebraElement;
use crate::error::Error;
use crate::padic::lane::{with_lane, ZpRing};
use crate::padic::{check_ring_params, modulus_big};
use crate::Result;

/// Dense matrix over Z/p^N, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PMatrix {
    p: u64,
    prec: u32,
    rows: usize,
    cols: usize,
    entries: Vec<BigUint>,
}

impl PMatrix {
    pub fn new(p: u64, prec: u32, rows: usize, cols: usize, entries: Vec<BigUint>) -> Result<Self> {
        check_ring_params(p, prec)?;
        assert_eq!(entries.len(), rows * cols, "entry count must match shape");
        let m = modulus_big(p, prec);
        Ok(PMatrix {
            p,
            prec,
            rows,
            cols,
            entries: entries.into_iter().map(|e| e % &m).collect(),
        })
    }

    pub fn from_i64(p: u64, prec: u32, rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        let vals = entries
            .iter()
            .map(|&e| {
                Ok(crate::padic::PadicScalar::from_i64(p, prec, e)?
                    .value()
                    .clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, prec, rows, cols, vals)
    }

    pub fn identity(p: u64, prec: u32, n: usize) -> Result<Self> {
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigUint::from(1u32);
        }
        Self::new(p, prec, n, n, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> &BigUint {
        &self.entries[r * self.cols + c]
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        if self.p != rhs.p || self.prec != rhs.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: rhs.p,
                prec_rhs: rhs.prec,
            });
        }
        let m = modulus_big(self.p, self.prec);
        let mut out = vec![BigUint::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out[idx] = (&out[idx] + a * rhs.entry(k, j)) % &m;
                }
            }
        }
        Self::new(self.p, self.prec, self.rows, rhs.cols, out)
    }
}

/// Elementary-divisor valuations of a reduction, ascending. `smith_form`
/// keeps zero exponents (they are matrix data); quotient-module profiles
/// drop them, since trivial cyclic factors carry no structure.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct DivisorProfile {
    exponents: Vec<u32>,
    rank_deficit: usize,
}

impl DivisorProfile {
    fn new(mut exponents: Vec<u32>, rank_deficit: usize) -> Self {
        exponents.sort_unstable();
        DivisorProfile {
            exponents,
            rank_deficit,
        }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn rank_deficit(&self) -> usize {
        self.rank_deficit
    }

    /// log_p of the cokernel order; `None` while any divisor is
    /// indistinguishable from 0 at this precision.
    pub fn order_exponent(&self) -> Option<u64> {
        if self.rank_deficit > 0 {
            return None;
        }
        Some(self.exponents.iter().map(|&e| e as u64).sum())
    }

    /// The same profile with trivial (exponent-0) divisors removed.
    pub fn normalized(&self) -> Self {
        DivisorProfile {
            exponents: self
                .exponents
                .iter()
                .copied()
                .filter(|&e| e != 0)
                .collect(),
            rank_deficit: self.rank_deficit,
        }
    }
}

struct SnfRaw<E> {
    divisors: Vec<u32>,
    deficit: usize,
    u: Option<Vec<E>>,
    #[allow(dead_code)]
    rows: usize,
    v: Option<Vec<E>>,
    cols: usize,
}

fn snf_engine<Rg: ZpRing>(
    ring: &Rg,
    rows: usize,
    cols: usize,
    mut a: Vec<Rg::El>,
    track_u: bool,
    track_v: bool,
) -> SnfRaw<Rg::El> {
    let mut u = track_u.then(|| {
        let mut id = vec![ring.zero(); rows * rows];
        for i in 0..rows {
            id[i * rows + i] = ring.one();
        }
        id
    });
    let mut v = track_v.then(|| {
        let mut id = vec![ring.zero(); cols * cols];
        for i in 0..cols {
            id[i * cols + i] = ring.one();
        }
        id
    });

    let rank_cap = rows.min(cols);
    let mut divisors = Vec::with_capacity(rank_cap);
    let mut deficit = 0;

    for k in 0..rank_cap {
        // minimal-valuation pivot; a unit wins immediately
        let mut pivot: Option<(usize, usize, u32)> = None;
        'search: for i in k..rows {
            for j in k..cols {
                if let Some(val) = ring.val(&a[i * cols + j]) {
                    if val == 0 {
                        pivot = Some((i, j, 0));
                        break 'search;
                    }
                    if pivot.is_none_or(|(_, _, pv)| val < pv) {
                        pivot = Some((i, j, val));
                    }
                }
            }
        }
        let Some((pi, pj, d)) = pivot else {
            deficit = rank_cap - k;
            break;
        };

        if pi != k {
            for c in 0..cols {
                a.swap(k * cols + c, pi * cols + c);
            }
            if let Some(u) = u.as_mut() {
                for c in 0..rows {
                    u.swap(k * rows + c, pi * rows + c);
                }
            }
        }
        if pj != k {
            for r in 0..rows {
                a.swap(r * cols + k, r * cols + pj);
            }
            if let Some(v) = v.as_mut() {
                for r in 0..cols {
                    v.swap(r * cols + k, r * cols + pj);
                }
            }
        }

        // scale row k so the pivot becomes exactly p^d
        let unit = ring.div_pow_p(&a[k * cols + k], d);
        let w = ring.inv_unit(&unit);
        for c in k..cols {
            a[k * cols + c] = ring.mul(&a[k * cols + c], &w);
        }
        if let Some(u) = u.as_mut() {
            for c in 0..rows {
                u[k * rows + c] = ring.mul(&u[k * rows + c], &w);
            }
        }

        // clear the column below the pivot; quotients are exact because
        // every entry here has valuation >= d
        for i in (k + 1)..rows {
            let e = a[i * cols + k].clone();
            if ring.is_zero(&e) {
                continue;
            }
            let q = ring.div_pow_p(&e, d);
            for c in k..cols {
                let s = ring.mul(&q, &a[k * cols + c]);
                a[i * cols + c] = ring.sub(&a[i * cols + c], &s);
            }
            if let Some(u) = u.as_mut() {
                for c in 0..rows {
                    let s = ring.mul(&q, &u[k * rows + c]);
                    u[i * rows + c] = ring.sub(&u[i * rows + c], &s);
                }
            }
            debug_assert!(ring.is_zero(&a[i * cols + k]));
        }

        // clear the rest of row k; only row k is affected since the
        // column below the pivot is already zero
        for j in (k + 1)..cols {
            let e = a[k * cols + j].clone();
            if ring.is_zero(&e) {
                continue;
            }
            let q = ring.div_pow_p(&e, d);
            let s = ring.mul(&q, &a[k * cols + k]);
            a[k * cols + j] = ring.sub(&a[k * cols + j], &s);
            debug_assert!(ring.is_zero(&a[k * cols + j]));
            if let Some(v) = v.as_mut() {
                for r in 0..cols {
                    let s = ring.mul(&q, &v[r * cols + k]);
                    v[r * cols + j] = ring.sub(&v[r * cols + j], &s);
                }
            }
        }

        debug_assert!(divisors.last().is_none_or(|&prev| prev <= d));
        divisors.push(d);
    }

    SnfRaw {
        divisors,
        deficit,
        u,
        rows,
        v,
        cols,
    }
}

/// Smith normal form of a matrix over Z/p^N. Zero exponents are kept.
pub fn smith_form(mat: &PMatrix) -> DivisorProfile {
    let raw = with_lane!(mat.p, mat.prec, |ring| {
        let a: Vec<_> = mat.entries.iter().map(|e| ring.from_big(e)).collect();
        let raw = snf_engine(&ring, mat.rows, mat.cols, a, false, false);
        (raw.divisors, raw.deficit)
    });
    DivisorProfile::new(raw.0, raw.1)
}

/// The p^n x p^n matrix of multiplication by f in the gamma-power basis:
/// column i holds the coefficients of gamma^i * f.
pub fn mult_matrix(f: &AlgebraElement) -> PMatrix {
    let n = f.coeffs().len();
    let mut entries = vec![BigUint::zero(); n * n];
    for c in 0..n {
        for r in 0..n {
            // coefficient of gamma^r in gamma^c * f
            entries[r * n + c] = f.coeffs()[(r + n - c) % n].clone();
        }
    }
    PMatrix {
        p: f.p(),
        prec: f.prec(),
        rows: n,
        cols: n,
        entries,
    }
}

fn check_generators(gens: &[&AlgebraElement]) -> Result<(u64, u32, u32)> {
    let first = gens.first().expect("at least one generator");
    for g in &gens[1..] {
        if g.p() != first.p() || g.prec() != first.prec() {
            return Err(Error::PrecisionMismatch {
                p_lhs: first.p(),
                prec_lhs: first.prec(),
                p_rhs: g.p(),
                prec_rhs: g.prec(),
            });
        }
        if g.level() != first.level() {
            return Err(Error::LevelMismatch {
                lhs: first.level(),
                rhs: g.level(),
            });
        }
    }
    Ok((first.p(), first.prec(), first.level()))
}

fn generator_matrix_lane<Rg: ZpRing>(ring: &Rg, gens: &[&AlgebraElement]) -> (usize, usize, Vec<Rg::El>) {
    let n = gens[0].coeffs().len();
    let cols = n * gens.len();
    let mut a = vec![ring.zero(); n * cols];
    for (b, g) in gens.iter().enumerate() {
        let lifted: Vec<_> = g.coeffs().iter().map(|c| ring.from_big(c)).collect();
        for c in 0..n {
            for r in 0..n {
                a[r * cols + b * n + c] = lifted[(r + n - c) % n].clone();
            }
        }
    }
    (n, cols, a)
}

/// Elementary-divisor profile of the quotient of the level-n ring by the
/// ideal the generators span, as a Z_p-module. Trivial divisors are
/// dropped; a positive `rank_deficit` means the order is not resolved at
/// this precision.
pub fn quotient_profile(gens: &[&AlgebraElement]) -> Result<DivisorProfile> {
    let (p, prec, _) = check_generators(gens)?;
    let (divisors, deficit) = with_lane!(p, prec, |ring| {
        let (rows, cols, a) = generator_matrix_lane(&ring, gens);
        let raw = snf_engine(&ring, rows, cols, a, false, false);
        (raw.divisors, raw.deficit)
    });
    Ok(DivisorProfile::new(divisors, deficit).normalized())
}

/// Row transform and divisors of one generator matrix, retained so many
/// membership queries against the same ideal share a single reduction.
pub struct IdealSolver {
    p: u64,
    prec: u32,
    level: u32,
    rows: usize,
    u: Vec<BigUint>,
    /// `Some(d)`: the image constrains this coordinate mod p^d;
    /// `None`: the coordinate must vanish mod p^N outright.
    row_divisors: Vec<Option<u32>>,
    profile: DivisorProfile,
}

impl IdealSolver {
    pub fn new(gens: &[&AlgebraElement]) -> Result<Self> {
        let (p, prec, level) = check_generators(gens)?;
        let (u, divisors, deficit, rows) = with_lane!(p, prec, |ring| {
            let (rows, cols, a) = generator_matrix_lane(&ring, gens);
            let raw = snf_engine(&ring, rows, cols, a, true, false);
            let u = raw
                .u
                .expect("row transform requested")
                .iter()
                .map(|e| ring.to_big(e))
                .collect::<Vec<_>>();
            (u, raw.divisors, raw.deficit, rows)
        });
        let mut row_divisors = vec![None; rows];
        for (i, &d) in divisors.iter().enumerate() {
            row_divisors[i] = Some(d);
        }
        Ok(IdealSolver {
            p,
            prec,
            level,
            rows,
            u,
            row_divisors,
            profile: DivisorProfile::new(divisors, deficit).normalized(),
        })
    }

    pub fn profile(&self) -> &DivisorProfile {
        &self.profile
    }

    /// Whether f lies in the ideal, certified mod p^N.
    pub fn contains(&self, f: &AlgebraElement) -> Result<bool> {
        if f.p() != self.p || f.prec() != self.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: f.p(),
                prec_rhs: f.prec(),
            });
        }
        if f.level() != self.level {
            return Err(Error::LevelMismatch {
                lhs: self.level,
                rhs: f.level(),
            });
        }
        let rows = self.rows;
        Ok(with_lane!(self.p, self.prec, |ring| {
            let fv: Vec<_> = f.coeffs().iter().map(|c| ring.from_big(c)).collect();
            let uv: Vec<_> = self.u.iter().map(|c| ring.from_big(c)).collect();
            let mut ok = true;
            for i in 0..rows {
                let mut acc = ring.zero();
                for (j, fj) in fv.iter().enumerate() {
                    if ring.is_zero(fj) {
                        continue;
                    }
                    let s = ring.mul(&uv[i * rows + j], fj);
                    acc = ring.add(&acc, &s);
                }
                let fits = match (self.row_divisors[i], ring.val(&acc)) {
                    (Some(d), Some(v)) => v >= d,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => true,
                };
                if !fits {
                    ok = false;
                    break;
                }
            }
            ok
        }))
    }
}

/// Solvability of `sum_i a_i * g_i = f` mod p^N. Membership holds or
/// fails at the stated precision; the identities the verification
/// engine feeds in are exact, so a verdict at sufficient N settles them.
pub fn ideal_membership(f: &AlgebraElement, gens: &[&AlgebraElement]) -> Result<bool> {
    IdealSolver::new(gens)?.contains(f)
}

/// Generators of the kernel of x -> M x over Z/p^N.
pub fn kernel_basis(mat: &PMatrix) -> Vec<Vec<BigUint>> {
    with_lane!(mat.p, mat.prec, |ring| {
        let a: Vec<_> = mat.entries.iter().map(|e| ring.from_big(e)).collect();
        let raw = snf_engine(&ring, mat.rows, mat.cols, a, false, true);
        let v = raw.v.expect("column transform requested");
        let cols = raw.cols;
        let mut basis = Vec::new();
        // scaled pivot columns p^(N-d) * V e_i, plus the free columns
        for (i, &d) in raw.divisors.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let scale = ring.from_big(&BigUint::from(mat.p).pow(mat.prec - d));
            let col: Vec<BigUint> = (0..cols)
                .map(|r| ring.to_big(&ring.mul(&v[r * cols + i], &scale)))
                .collect();
            basis.push(col);
        }
        for j in raw.divisors.len()..cols {
            let col: Vec<BigUint> = (0..cols).map(|r| ring.to_big(&v[r * cols + j])).collect();
            basis.push(col);
        }
        basis
    })
}
