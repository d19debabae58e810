//! Truncated power series over floating p-adic numbers, and the formal
//! group whose logarithm obeys the quadratic recursion t^2 - a_p t + p.
//!
//! The logarithm is assembled from the coefficient sequence
//! x_{-1} = 0, x_0 = 1, p x_k - a_p x_{k-1} + x_{k-2} = 0 as
//! sum_k x_k ((X+1)^{p^k} - 1), keeping the terms with p^k <= D when
//! truncating at degree D. The group law exp(log X + log Y) must then be
//! integral coefficientwise; a provably negative valuation in it aborts
//! loudly since it would refute the construction, while an ambiguous one
//! (precision ran out before integrality could be certified) is reported
//! as exhaustion instead.
//!
//! Series are dense triangular maps from exponent vectors to
//! [`PadicNumber`]s; absent entries are structural zeros, present
//! zero-at-precision entries keep their ledger bound.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use serde::Serialize;

use crate::error::Error;
use crate::padic::{check_ring_params, PadicNumber, PadicScalar};
use crate::Result;

/// The recursion solution x_k = n_k / p^k with integer numerators
/// n_k = a_p n_{k-1} - p n_{k-2}, kept exact.
#[derive(Debug, Clone)]
pub struct HondaCoeffs {
    p: u64,
    a_p: u64,
    numerators: Vec<BigInt>,
}

impl HondaCoeffs {
    pub fn new(p: u64, a_p: u64, count: usize) -> Result<Self> {
        check_ring_params(p, 1)?;
        if !a_p.is_multiple_of(p) {
            return Err(Error::NotAUnit);
        }
        let mut numerators = Vec::with_capacity(count);
        for k in 0..count {
            let n_k = match k {
                0 => BigInt::from(1),
                1 => BigInt::from(a_p),
                _ => BigInt::from(a_p) * &numerators[k - 1] - BigInt::from(p) * &numerators[k - 2],
            };
            numerators.push(n_k);
        }
        Ok(HondaCoeffs { p, a_p, numerators })
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// x_k as a floating p-adic number with the unit kept mod p^rel.
    pub fn coefficient(&self, k: usize, rel: u32) -> PadicNumber {
        PadicNumber::from_ratio(self.p, &self.numerators[k], k as u32, rel)
    }

    /// Post-hoc check that p x_k - a_p x_{k-1} + x_{k-2} = 0 exactly:
    /// clearing p^(k-1) turns it into n_k - a_p n_{k-1} + p n_{k-2} = 0.
    pub fn satisfies_recursion(&self) -> bool {
        self.numerators.first().is_none_or(|n0| *n0 == BigInt::from(1))
            && (2..self.numerators.len()).all(|k| {
                &self.numerators[k] - BigInt::from(self.a_p) * &self.numerators[k - 1]
                    + BigInt::from(self.p) * &self.numerators[k - 2]
                    == BigInt::from(0)
            })
    }
}

/// Dense multivariate series truncated at a total degree.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    p: u64,
    nvars: usize,
    cap: u32,
    coeffs: BTreeMap<Vec<u16>, PadicNumber>,
}

fn degree(expo: &[u16]) -> u32 {
    expo.iter().map(|&e| e as u32).sum()
}

impl TruncatedSeries {
    pub fn zero(p: u64, nvars: usize, cap: u32) -> Self {
        TruncatedSeries {
            p,
            nvars,
            cap,
            coeffs: BTreeMap::new(),
        }
    }

    /// The coordinate series X_var with an exact unit coefficient.
    pub fn variable(p: u64, nvars: usize, cap: u32, var: usize, rel: u32) -> Self {
        let mut s = Self::zero(p, nvars, cap);
        let mut expo = vec![0u16; nvars];
        expo[var] = 1;
        s.coeffs
            .insert(expo, PadicNumber::from_bigint(p, &BigInt::from(1), rel));
        s
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &PadicNumber)> {
        self.coeffs.iter()
    }

    /// Stored coefficient, or an exact zero.
    pub fn coefficient(&self, expo: &[u16]) -> PadicNumber {
        self.coeffs
            .get(expo)
            .cloned()
            .unwrap_or_else(|| PadicNumber::exact_zero(self.p))
    }

    fn insert(&mut self, expo: Vec<u16>, value: PadicNumber) {
        if degree(&expo) > self.cap || value.is_exact_zero() {
            return;
        }
        self.coeffs.insert(expo, value);
    }

    fn add_assign_term(&mut self, expo: &[u16], value: &PadicNumber) {
        if degree(expo) > self.cap {
            return;
        }
        match self.coeffs.get_mut(expo) {
            Some(c) => *c = c.add(value),
            None => self.insert(expo.to_vec(), value.clone()),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.p, rhs.p);
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        out.cap = self.cap.min(rhs.cap);
        out.coeffs.retain(|e, _| degree(e) <= out.cap);
        for (e, c) in &rhs.coeffs {
            out.add_assign_term(e, c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &PadicNumber) -> Self {
        let mut out = Self::zero(self.p, self.nvars, self.cap);
        for (e, c) in &self.coeffs {
            out.insert(e.clone(), c.mul(s));
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.p, rhs.p);
        assert_eq!(self.nvars, rhs.nvars);
        let cap = self.cap.min(rhs.cap);
        let mut out = Self::zero(self.p, self.nvars, cap);
        for (ea, ca) in &self.coeffs {
            let da = degree(ea);
            if da > cap {
                continue;
            }
            for (eb, cb) in &rhs.coeffs {
                if da + degree(eb) > cap {
                    continue;
                }
                let expo: Vec<u16> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let prod = ca.mul(cb);
                out.add_assign_term(&expo, &prod);
            }
        }
        out
    }

    /// Reinterpret in a wider variable set: old variable i becomes
    /// variable `var_map[i]`.
    pub fn embed(&self, nvars: usize, var_map: &[usize]) -> Self {
        assert_eq!(var_map.len(), self.nvars);
        let mut out = Self::zero(self.p, nvars, self.cap);
        for (e, c) in &self.coeffs {
            let mut expo = vec![0u16; nvars];
            for (i, &v) in e.iter().enumerate() {
                expo[var_map[i]] += v;
            }
            out.insert(expo, c.clone());
        }
        out
    }

    pub fn truncated(&self, cap: u32) -> Self {
        let mut out = self.clone();
        out.cap = cap.min(self.cap);
        out.coeffs.retain(|e, _| degree(e) <= out.cap);
        out
    }

    /// Substitute the argument series (no constant terms) for this
    /// series' variables.
    pub fn compose(&self, args: &[&TruncatedSeries]) -> TruncatedSeries {
        assert_eq!(args.len(), self.nvars, "one argument per variable");
        let nvars = args[0].nvars;
        let cap = args.iter().map(|a| a.cap).min().unwrap().min(self.cap);
        for a in args {
            assert_eq!(a.p, self.p);
            assert_eq!(a.nvars, nvars);
            assert!(
                !a.coeffs.contains_key(&vec![0u16; nvars]),
                "composition requires zero constant terms"
            );
        }
        // highest power of each variable that appears
        let mut max_pow = vec![0u16; self.nvars];
        for e in self.coeffs.keys() {
            for (i, &v) in e.iter().enumerate() {
                max_pow[i] = max_pow[i].max(v);
            }
        }
        let mut powers: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(self.nvars);
        for (i, arg) in args.iter().enumerate() {
            let mut tower = Vec::with_capacity(max_pow[i] as usize + 1);
            tower.push(Self::zero(self.p, nvars, cap)); // placeholder for power 0
            for e in 1..=max_pow[i] as usize {
                let next = if e == 1 {
                    arg.truncated(cap)
                } else {
                    tower[e - 1].mul(arg)
                };
                tower.push(next);
            }
            powers.push(tower);
        }
        let mut out = Self::zero(self.p, nvars, cap);
        for (e, c) in &self.coeffs {
            let mut acc: Option<TruncatedSeries> = None;
            for (i, &v) in e.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                acc = Some(match acc {
                    None => powers[i][v as usize].clone(),
                    Some(a) => a.mul(&powers[i][v as usize]),
                });
            }
            match acc {
                Some(series) => {
                    let scaled = series.scale(c);
                    for (expo, coeff) in &scaled.coeffs {
                        out.add_assign_term(expo, coeff);
                    }
                }
                // constant term of the outer series
                None => out.add_assign_term(&vec![0u16; nvars], c),
            }
        }
        out
    }

    /// Worst absolute precision over the stored coefficients.
    pub fn min_abs_precision(&self) -> i64 {
        self.coeffs
            .values()
            .map(|c| c.abs_prec())
            .min()
            .unwrap_or(i64::MAX / 4)
    }
}

/// The logarithm sum_{p^k <= D} x_k ((X+1)^{p^k} - 1) truncated at D.
/// Its linear coefficient is the partial sum of p^k x_k, a unit congruent
/// to 1 mod p (not 1 on the nose once a k >= 2 term enters).
pub fn log_series(p: u64, a_p: u64, degree_cap: u32, rel: u32) -> Result<TruncatedSeries> {
    check_ring_params(p, 1)?;
    let mut k_max = 0usize;
    while (p as u128).pow(k_max as u32 + 1) <= degree_cap as u128 {
        k_max += 1;
    }
    let honda = HondaCoeffs::new(p, a_p, k_max + 1)?;
    let mut out = TruncatedSeries::zero(p, 1, degree_cap);
    for k in 0..=k_max {
        let x_k = honda.coefficient(k, rel);
        if x_k.is_exact_zero() {
            continue;
        }
        let pk = p.pow(k as u32);
        let top = (pk as u128).min(degree_cap as u128) as u64;
        for j in 1..=top {
            let binom = binomial(BigInt::from(pk), BigInt::from(j));
            let term = x_k.mul(&PadicNumber::from_bigint(p, &binom, rel));
            out.add_assign_term(&[j as u16], &term);
        }
    }
    Ok(out)
}

/// Compositional inverse of a one-variable series with zero constant
/// term and unit linear coefficient, by undetermined coefficients.
pub fn exp_series(log: &TruncatedSeries) -> Result<TruncatedSeries> {
    assert_eq!(log.nvars, 1);
    let p = log.p;
    let cap = log.cap;
    let l1 = log.coefficient(&[1]);
    if l1.valuation() != Some(0) {
        return Err(Error::NotAUnit);
    }
    let l1_inv = l1.inverse()?;
    let mut g = TruncatedSeries::zero(p, 1, cap);
    g.insert(vec![1], l1_inv.clone());
    for k in 2..=cap as usize {
        let residual = log.compose(&[&g]).coefficient(&[k as u16]);
        if residual.is_zero_at_precision() && residual.valuation_bound() <= 0 {
            return Err(Error::PrecisionExhausted { prec: 0 });
        }
        let g_k = residual.neg().mul(&l1_inv);
        g.insert(vec![k as u16], g_k);
    }
    Ok(g)
}

fn monomial_name(expo: &[u16]) -> String {
    const NAMES: [&str; 3] = ["X", "Y", "Z"];
    let mut s = String::new();
    for (i, &e) in expo.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !s.is_empty() {
            s.push('*');
        }
        s.push_str(NAMES.get(i).unwrap_or(&"W"));
        if e > 1 {
            s.push_str(&format!("^{e}"));
        }
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

/// The two-variable group law exp(log X + log Y) truncated at total
/// degree D. Fails loudly if any coefficient is provably non-integral,
/// and with exhaustion if integrality cannot be certified.
pub fn group_law(p: u64, a_p: u64, degree_cap: u32, rel: u32) -> Result<TruncatedSeries> {
    let log = log_series(p, a_p, degree_cap, rel)?;
    let exp = exp_series(&log)?;
    let lx = log.embed(2, &[0]);
    let ly = log.embed(2, &[1]);
    let s = lx.add(&ly);
    let f = exp.compose(&[&s]);
    for (expo, c) in f.terms() {
        if c.valuation_bound() >= 0 {
            continue;
        }
        if c.is_zero_at_precision() {
            return Err(Error::PrecisionExhausted { prec: rel });
        }
        return Err(Error::IntegralityViolation {
            monomial: monomial_name(expo),
            val: c.valuation_bound(),
        });
    }
    Ok(f)
}

/// Evaluate the logarithm at a point of valuation >= 1, summing the
/// first `terms + 1` recursion terms; the tail beyond k has valuation at
/// least k/2 + 1, so terms = 2 * target digits suffice. The p^k-th
/// powers are built by iterated p-th powers, so the exponent never needs
/// to exist as a machine integer.
pub fn log_eval(p: u64, a_p: u64, x: &PadicNumber, terms: usize, rel: u32) -> Result<PadicNumber> {
    assert!(x.valuation_bound() >= 1, "evaluation needs valuation >= 1");
    let honda = HondaCoeffs::new(p, a_p, terms + 1)?;
    let one = PadicNumber::one(p, rel);
    let mut base_k = one.add(x); // (1+x)^(p^k), starting at k = 0
    let mut acc = PadicNumber::exact_zero(p);
    for k in 0..=terms {
        let x_k = honda.coefficient(k, rel);
        if !x_k.is_exact_zero() {
            let term = x_k.mul(&base_k.sub(&one));
            acc = acc.add(&term);
        }
        if k < terms {
            base_k = base_k.pow(p);
        }
    }
    Ok(acc)
}

/// Derivative of the logarithm at the same kind of point:
/// sum_k x_k p^k (1+x)^(p^k - 1), a unit congruent to 1 mod p.
fn log_derivative_eval(
    p: u64,
    a_p: u64,
    x: &PadicNumber,
    terms: usize,
    rel: u32,
) -> Result<PadicNumber> {
    let honda = HondaCoeffs::new(p, a_p, terms + 1)?;
    let one = PadicNumber::one(p, rel);
    let base = one.add(x);
    let base_inv = base.inverse()?;
    let mut base_k = base.clone();
    let mut pk = PadicNumber::one(p, rel); // p^k as a p-adic number
    let p_num = PadicNumber::from_bigint(p, &BigInt::from(p), rel);
    let mut acc = PadicNumber::exact_zero(p);
    for k in 0..=terms {
        let x_k = honda.coefficient(k, rel);
        if !x_k.is_exact_zero() {
            let term = x_k.mul(&pk).mul(&base_k.mul(&base_inv));
            acc = acc.add(&term);
        }
        if k < terms {
            base_k = base_k.pow(p);
            pk = pk.mul(&p_num);
        }
    }
    Ok(acc)
}

/// Working precision for the Newton solve: evaluating through the deep
/// tail terms (k up to 2 * target) costs up to `target` digits of window
/// per step, and the residual valuation at least doubles from 2 each
/// step, so a log2(target) schedule with slack covers the whole run.
pub(crate) fn epsilon_working_rel(target: u32) -> u32 {
    let steps = 32 - target.leading_zeros();
    target * (steps + 3) + 8
}

/// The normalizing point of the construction: the unique eps in p Z_p
/// with log(eps) = p / (p + 1 - a_p), found by Newton iteration from the
/// target value itself.
pub fn solve_epsilon(p: u64, a_p: u64, target: u32) -> Result<PadicScalar> {
    check_ring_params(p, 1)?;
    if !a_p.is_multiple_of(p) {
        return Err(Error::NotAUnit);
    }
    let terms = 2 * target as usize;
    let rel = epsilon_working_rel(target);
    let denom = PadicNumber::from_bigint(p, &(BigInt::from(p) + 1 - BigInt::from(a_p)), rel);
    let t = PadicNumber::from_bigint(p, &BigInt::from(p), rel).div(&denom)?;
    let mut eps = t.clone();
    let mut last_val: i64 = 1;
    for _ in 0..64 {
        let residual = log_eval(p, a_p, &eps, terms, rel)?.sub(&t);
        if residual.valuation_bound() >= target as i64 {
            debug_assert_eq!(eps.valuation(), Some(1));
            return eps.to_scalar(target);
        }
        let val = residual.valuation_bound();
        if val <= last_val {
            return Err(Error::NonConvergence { val });
        }
        last_val = val;
        let derivative = log_derivative_eval(p, a_p, &eps, terms, rel)?;
        eps = eps.sub(&residual.div(&derivative)?);
    }
    Err(Error::NonConvergence { val: last_val })
}

/// The level-0 trace relation unit a_p - (p-1)/(a_p - 2); a unit because
/// a_p - 2 = -2 mod p with p odd.
pub fn trace_unit_u(p: u64, a_p: u64, prec: u32) -> Result<PadicScalar> {
    check_ring_params(p, prec)?;
    if !a_p.is_multiple_of(p) {
        return Err(Error::NotAUnit);
    }
    let ap = PadicScalar::new(p, prec, num_bigint::BigUint::from(a_p))?;
    let two = PadicScalar::from_i64(p, prec, 2)?;
    let pm1 = PadicScalar::from_i64(p, prec, p as i64 - 1)?;
    let denom_inv = ap.sub(&two)?.unit_inverse()?;
    ap.sub(&pm1.mul(&denom_inv)?)
}

/// One per-degree line of the CLI series dump.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesDump {
    pub deg: u16,
    pub val: Option<i64>,
    pub unit: String,
}

fn dump_univariate(s: &TruncatedSeries) -> Vec<SeriesDump> {
    s.terms()
        .map(|(e, c)| SeriesDump {
            deg: e[0],
            val: c.valuation(),
            unit: c.unit_part().to_string(),
        })
        .collect()
}

/// Everything the `fg` command reports, with every verdict computed at
/// the requested target precision.
#[derive(Debug, Clone, Serialize)]
pub struct FormalGroupReport {
    pub p: u64,
    pub a_p: u64,
    pub degree: u32,
    pub target: u32,
    pub rel_prec: u32,
    pub integral: bool,
    pub identity_ok: bool,
    pub symmetric: bool,
    pub log_additive: bool,
    pub assoc_degree: u32,
    pub associative: bool,
    pub epsilon: String,
    pub epsilon_valuation: Option<i64>,
    pub epsilon_residual_ok: bool,
    pub trace_unit: String,
    pub trace_unit_is_unit: bool,
    pub certified_abs_precision: i64,
    pub log_coeffs: Vec<SeriesDump>,
    pub exp_coeffs: Vec<SeriesDump>,
}

impl FormalGroupReport {
    pub fn passed(&self) -> bool {
        self.integral
            && self.identity_ok
            && self.symmetric
            && self.log_additive
            && self.associative
            && self.epsilon_residual_ok
            && self.trace_unit_is_unit
    }
}

fn certified_zero(c: &PadicNumber, target: i64) -> bool {
    c.is_zero_at_precision() && c.valuation_bound() >= target
}

fn series_vanishes_to(s: &TruncatedSeries, target: i64) -> bool {
    s.terms().all(|(_, c)| certified_zero(c, target))
}

/// Default relative precision for a degree-D run at `target` digits.
pub fn default_rel_prec(p: u64, degree: u32, target: u32) -> u32 {
    let mut logd = 0u32;
    while (p as u128).pow(logd) < degree as u128 {
        logd += 1;
    }
    target + 2 * logd
}

pub fn formal_group_report(p: u64, a_p: u64, degree: u32, target: u32) -> Result<FormalGroupReport> {
    let rel = default_rel_prec(p, degree, target);
    let log = log_series(p, a_p, degree, rel)?;
    let exp = exp_series(&log)?;
    let f = group_law(p, a_p, degree, rel)?; // errors if non-integral

    let one = PadicNumber::one(p, rel);
    let mut identity_ok = true;
    for (e, c) in f.terms() {
        if e[1] != 0 {
            continue;
        }
        let ok = if e[0] == 1 {
            certified_zero(&c.sub(&one), target as i64)
        } else {
            certified_zero(c, target as i64)
        };
        identity_ok &= ok;
    }
    // X must appear at all
    identity_ok &= f.coefficient(&[1, 0]).sub(&one).is_zero_at_precision();

    let mut symmetric = true;
    for (e, c) in f.terms() {
        let swapped = vec![e[1], e[0]];
        let d = c.sub(&f.coefficient(&swapped));
        symmetric &= certified_zero(&d, target as i64);
    }

    let lx = log.embed(2, &[0]);
    let ly = log.embed(2, &[1]);
    let s = lx.add(&ly);
    let log_additive = series_vanishes_to(&log.compose(&[&f]).sub(&s), target as i64);

    let assoc_degree = degree.min(10);
    let f_small = f.truncated(assoc_degree);
    let fxy = f_small.embed(3, &[0, 1]);
    let fyz = f_small.embed(3, &[1, 2]);
    let x3 = TruncatedSeries::variable(p, 3, assoc_degree, 0, rel);
    let z3 = TruncatedSeries::variable(p, 3, assoc_degree, 2, rel);
    let left = f_small.compose(&[&fxy, &z3]);
    let right = f_small.compose(&[&x3, &fyz]);
    let associative = series_vanishes_to(&left.sub(&right), target as i64);

    let eps = solve_epsilon(p, a_p, target)?;
    let eps_rel = epsilon_working_rel(target);
    let eps_number = PadicNumber::from_bigint(p, &BigInt::from(eps.value().clone()), eps_rel);
    let terms = 2 * target as usize;
    let denom = PadicNumber::from_bigint(p, &(BigInt::from(p) + 1 - BigInt::from(a_p)), eps_rel);
    let t = PadicNumber::from_bigint(p, &BigInt::from(p), eps_rel).div(&denom)?;
    let residual = log_eval(p, a_p, &eps_number, terms, eps_rel)?.sub(&t);
    let epsilon_residual_ok = residual.valuation_bound() >= target as i64;

    let trace_unit = trace_unit_u(p, a_p, target)?;
    let trace_unit_is_unit = trace_unit.is_unit();

    Ok(FormalGroupReport {
        p,
        a_p,
        degree,
        target,
        rel_prec: rel,
        integral: true,
        identity_ok,
        symmetric,
        log_additive,
        assoc_degree,
        associative,
        epsilon: eps.value().to_string(),
        epsilon_valuation: eps_number.valuation(),
        epsilon_residual_ok,
        trace_unit: trace_unit.value().to_string(),
        trace_unit_is_unit,
        certified_abs_precision: f.min_abs_precision(),
        log_coeffs: dump_univariate(&log),
        exp_coeffs: dump_univariate(&exp),
    })
}
