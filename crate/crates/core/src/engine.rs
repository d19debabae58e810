//! Growth sequences, the admissible-sequence simulator, and the level-by-
//! level verification checks behind the `verify` command.
//!
//! The simulator takes the two-term trace recursion as the definition of
//! admissibility: starting from a random unit at level 0 and a random
//! unit multiple one level up, each element is a uniformly random
//! preimage of a_p * P_n - nu(P_{n-1}) under the projection map. Every
//! consequence checked here (invariants, quotient orders, the exact-
//! sequence factorization, and for a_p = 0 the parity structure of the
//! vanishing ideals) must hold for every admissible sequence, so any
//! seed that fails is an arithmetic bug, not bad luck.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use once_cell::sync::OnceCell;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{omega, random_element, AlgebraElement, Constraint, IdealSign};
use crate::cyclo::{char_eval, RamifiedValuation};
use crate::error::Error;
use crate::padic::{check_ring_params, modulus_big, PadicScalar};
use crate::snf::{quotient_profile, DivisorProfile, IdealSolver};
use crate::Result;

/// Growth of the lambda-contribution at level n:
/// q_0 = q_1 = 0, and the alternating sum p^(n-1) - p^(n-2) + ...,
/// ending at -1 for even n and at -p for odd n.
pub fn q_n(p: u64, n: u32) -> u64 {
    if n <= 1 {
        return 0;
    }
    let stop = if n.is_multiple_of(2) { 0 } else { 1 };
    let mut acc: i128 = 0;
    let mut sign = 1i128;
    for k in (stop..n).rev() {
        acc += sign * (p as i128).pow(k);
        sign = -sign;
    }
    u64::try_from(acc).expect("q_n is nonnegative and fits u64")
}

/// Order exponent of the level-n quotient: e_0 = e_1 = 0, and
/// p^(n-1) + p^(n-3) + ... - floor(n/2), the sum stopping at p for even n
/// and at p^2 for odd n. Satisfies e_n = e_(n-1) + q_n.
pub fn e_n(p: u64, n: u32) -> u64 {
    if n <= 1 {
        return 0;
    }
    let mut acc: i128 = 0;
    let mut k = n as i64 - 1;
    while k >= 1 {
        acc += (p as i128).pow(k as u32);
        k -= 2;
    }
    acc -= (n / 2) as i128;
    u64::try_from(acc).expect("e_n is nonnegative and fits u64")
}

/// Working precision that keeps every divisor exponent and character
/// valuation encountered up to level n_max strictly inside the window.
pub fn default_precision(p: u64, n_max: u32) -> u32 {
    u32::try_from(e_n(p, n_max) + 8).expect("precision fits u32")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub p: u64,
    pub a_p: u64,
    pub n_max: u32,
    pub prec: u32,
    pub seed: u64,
    pub trials: u32,
}

impl SimConfig {
    /// Validates the supersingular-shape constraints: p an odd prime and
    /// p | a_p. Precision defaults to `default_precision`.
    pub fn new(p: u64, a_p: u64, n_max: u32, seed: u64, trials: u32) -> Result<Self> {
        check_ring_params(p, 1)?;
        if !a_p.is_multiple_of(p) {
            return Err(Error::NotAUnit);
        }
        Ok(SimConfig {
            p,
            a_p,
            n_max,
            prec: default_precision(p, n_max),
            seed,
            trials,
        })
    }

    pub fn with_precision(mut self, prec: u32) -> Self {
        self.prec = prec;
        self
    }
}

/// A simulated admissible sequence (P_0, ..., P_n) plus the level-0 unit.
#[derive(Debug, Clone)]
pub struct PSequenceTrace {
    pub p: u64,
    pub prec: u32,
    pub a_p: u64,
    pub elements: Vec<AlgebraElement>,
    pub unit: PadicScalar,
}

fn random_unit_scalar<R: rand::Rng + ?Sized>(rng: &mut R, p: u64, prec: u32) -> PadicScalar {
    let m = modulus_big(p, prec);
    loop {
        let v = rng.gen_biguint_below(&m);
        if !(&v % p).is_zero() {
            return PadicScalar::from_reduced(p, prec, v);
        }
    }
}

/// Generate the admissible sequence for one (seed, trial) pair. Each
/// trial draws from its own RNG stream, so results do not depend on
/// scheduling.
pub fn simulate(config: &SimConfig, trial: u32) -> Result<PSequenceTrace> {
    let (p, prec) = (config.p, config.prec);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);

    let mut elements = Vec::with_capacity(config.n_max as usize + 1);
    elements.push(random_element(&mut rng, p, prec, 0, Constraint::Unit)?);
    let unit = random_unit_scalar(&mut rng, p, prec);
    if config.n_max >= 1 {
        let target = elements[0].scalar_mul(&unit)?;
        elements.push(random_element(&mut rng, p, prec, 1, Constraint::LiftOf(&target))?);
    }
    let a_p = PadicScalar::new(p, prec, BigUint::from(config.a_p))?;
    for n in 1..config.n_max {
        let target = elements[n as usize]
            .scalar_mul(&a_p)?
            .sub(&elements[n as usize - 1].lift_nu())?;
        let lifted = random_element(&mut rng, p, prec, n + 1, Constraint::LiftOf(&target))?;
        elements.push(lifted);
    }
    Ok(PSequenceTrace {
        p,
        prec,
        a_p: config.a_p,
        elements,
        unit,
    })
}

impl PSequenceTrace {
    pub fn n_max(&self) -> u32 {
        self.elements.len() as u32 - 1
    }

    /// The ideal generators at level n: (P_0) at the base, and
    /// (P_n, nu(P_(n-1))) above it.
    pub fn ideal_generators(&self, n: u32) -> Vec<AlgebraElement> {
        if n == 0 {
            vec![self.elements[0].clone()]
        } else {
            vec![
                self.elements[n as usize].clone(),
                self.elements[n as usize - 1].lift_nu(),
            ]
        }
    }

    /// Post-hoc re-check of the defining relations; exercises the lift
    /// machinery rather than the simulator's bookkeeping.
    pub fn check_recursion(&self) -> Result<bool> {
        if self.elements.len() >= 2 {
            let lhs = self.elements[1].project_pi()?;
            let rhs = self.elements[0].scalar_mul(&self.unit)?;
            if lhs != rhs {
                return Ok(false);
            }
        }
        let a_p = PadicScalar::new(self.p, self.prec, BigUint::from(self.a_p))?;
        for n in 1..self.elements.len() - 1 {
            let lhs = self.elements[n + 1].project_pi()?;
            let rhs = self.elements[n]
                .scalar_mul(&a_p)?
                .sub(&self.elements[n - 1].lift_nu())?;
            if lhs != rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

type SolverCache = Mutex<HashMap<(u64, u32, u32), Arc<IdealSolver>>>;

/// Shared reduction of the parity-ideal pair (omega_n^+, omega_n^-),
/// cached per (p, N, n): the generators do not depend on the trial.
fn omega_solver(p: u64, prec: u32, n: u32) -> Result<Arc<IdealSolver>> {
    static CACHE: OnceCell<SolverCache> = OnceCell::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("omega solver cache poisoned");
    if let Some(s) = guard.get(&(p, prec, n)) {
        return Ok(s.clone());
    }
    let plus = omega(p, prec, n, IdealSign::Plus)?;
    let minus = omega(p, prec, n, IdealSign::Minus)?;
    let solver = Arc::new(IdealSolver::new(&[&plus, &minus])?);
    guard.insert((p, prec, n), solver.clone());
    Ok(solver)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureChecks {
    pub vanishing: bool,
    pub membership: bool,
    pub profile_match: bool,
}

impl StructureChecks {
    pub fn all(&self) -> bool {
        self.vanishing && self.membership && self.profile_match
    }
}

/// Everything checked at one level of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub n: u32,
    pub mu: u32,
    pub lambda: u64,
    pub q_n: u64,
    pub order_exponent: u64,
    pub e_n: u64,
    pub chi_valuation: Option<RamifiedValuation>,
    pub invariants_ok: bool,
    pub order_ok: bool,
    pub exact_sequence_ok: bool,
    pub structure_checks: Option<StructureChecks>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialReport {
    pub trial: u32,
    pub precision: u32,
    pub levels: Vec<LevelReport>,
    pub passed: bool,
}

/// Exact-sequence bookkeeping at one level, as an independent check:
/// the order exponent must grow by the full ramified valuation of the
/// top character value, and that contribution must be exactly q_n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactSequenceReport {
    pub n: u32,
    pub order_exponent: u64,
    pub previous_order_exponent: u64,
    pub chi_contribution: u64,
    pub q_n: u64,
    pub additive: bool,
    pub contribution_is_q: bool,
}

impl ExactSequenceReport {
    pub fn passed(&self) -> bool {
        self.additive && self.contribution_is_q
    }
}

fn profile_order(profile: &DivisorProfile, prec: u32) -> Result<u64> {
    profile
        .order_exponent()
        .ok_or(Error::PrecisionExhausted { prec })
}

fn level_profile(trace: &PSequenceTrace, n: u32) -> Result<DivisorProfile> {
    let gens = trace.ideal_generators(n);
    let refs: Vec<&AlgebraElement> = gens.iter().collect();
    quotient_profile(&refs)
}

/// Ramified valuation of the order-p^n character value of P_n (n >= 1).
pub fn chi_top_valuation(trace: &PSequenceTrace, n: u32) -> Result<RamifiedValuation> {
    char_eval(&trace.elements[n as usize], n)?.eisenstein_valuation()
}

/// Check the order factorization at level n >= 1 from scratch.
pub fn verify_exact_sequence(trace: &PSequenceTrace, n: u32) -> Result<ExactSequenceReport> {
    assert!(n >= 1 && n <= trace.n_max());
    let order = profile_order(&level_profile(trace, n)?, trace.prec)?;
    let prev = profile_order(&level_profile(trace, n - 1)?, trace.prec)?;
    let chi = chi_top_valuation(trace, n)?;
    debug_assert_eq!(chi.den, crate::cyclo::ramification_index(trace.p, n));
    Ok(ExactSequenceReport {
        n,
        order_exponent: order,
        previous_order_exponent: prev,
        chi_contribution: chi.num,
        q_n: q_n(trace.p, n),
        additive: order == prev + chi.num,
        contribution_is_q: chi.num == q_n(trace.p, n),
    })
}

fn structure_checks(
    trace: &PSequenceTrace,
    n: u32,
    j_profile: &DivisorProfile,
) -> Result<StructureChecks> {
    assert_eq!(trace.a_p, 0, "structure checks are specific to a_p = 0");
    let p_n = &trace.elements[n as usize];

    // (a) the top character values of P_n vanish exactly at every level
    // m >= 1 of parity opposite to n; the trivial character never
    // vanishes on an admissible sequence and belongs to neither ideal
    let mut vanishing = true;
    let mut m = if n.is_multiple_of(2) { 1 } else { 2 };
    while m <= n {
        if !char_eval(p_n, m)?.is_zero() {
            vanishing = false;
        }
        m += 2;
    }

    // (b) both ideal generators lie in (omega^+, omega^-)
    let solver = omega_solver(trace.p, trace.prec, n)?;
    let mut membership = solver.contains(p_n)?;
    if n >= 1 && membership {
        membership = solver.contains(&trace.elements[n as usize - 1].lift_nu())?;
    }

    // (c) the two presentations have the same elementary divisors
    profile_order(solver.profile(), trace.prec)?;
    let profile_match = j_profile.normalized() == *solver.profile();

    Ok(StructureChecks {
        vanishing,
        membership,
        profile_match,
    })
}

/// The a_p = 0 structure comparison at level n, from scratch.
pub fn verify_structure_ap0(trace: &PSequenceTrace, n: u32) -> Result<StructureChecks> {
    let profile = level_profile(trace, n)?;
    structure_checks(trace, n, &profile)
}

/// Order of the quotient by the parity-ideal pair against the closed
/// form; the pair is trial-independent so this stands on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaOrderReport {
    pub n: u32,
    pub order_exponent: u64,
    pub expected: u64,
    pub ok: bool,
}

pub fn mtt_consistency(p: u64, prec: u32, n: u32) -> Result<OmegaOrderReport> {
    let solver = omega_solver(p, prec, n)?;
    let order = profile_order(solver.profile(), prec)?;
    let expected = e_n(p, n);
    Ok(OmegaOrderReport {
        n,
        order_exponent: order,
        expected,
        ok: order == expected,
    })
}

fn try_trial(config: &SimConfig, trial: u32) -> Result<TrialReport> {
    let trace = simulate(config, trial)?;
    debug_assert!(trace.check_recursion()?);
    let p = config.p;
    let mut levels = Vec::with_capacity(config.n_max as usize + 1);
    let mut prev_order = 0u64;
    let mut all_ok = true;

    for n in 0..=config.n_max {
        let element = &trace.elements[n as usize];
        let inv = element.invariants()?;
        let (qn, en) = (q_n(p, n), e_n(p, n));
        let invariants_ok = inv.mu == 0 && inv.lambda == qn;

        let profile = level_profile(&trace, n)?;
        let order_exponent = profile_order(&profile, config.prec)?;
        let order_ok = order_exponent == en;

        let (chi_valuation, exact_sequence_ok) = if n == 0 {
            (None, order_exponent == 0)
        } else {
            let chi = chi_top_valuation(&trace, n)?;
            let ok = order_exponent == prev_order + chi.num && chi.num == qn;
            (Some(chi), ok)
        };

        let structure = if config.a_p == 0 {
            Some(structure_checks(&trace, n, &profile)?)
        } else {
            None
        };

        let passed = invariants_ok
            && order_ok
            && exact_sequence_ok
            && structure.is_none_or(|s| s.all());
        all_ok &= passed;
        levels.push(LevelReport {
            n,
            mu: inv.mu,
            lambda: inv.lambda,
            q_n: qn,
            order_exponent,
            e_n: en,
            chi_valuation,
            invariants_ok,
            order_ok,
            exact_sequence_ok,
            structure_checks: structure,
            passed,
        });
        prev_order = order_exponent;
    }

    Ok(TrialReport {
        trial,
        precision: config.prec,
        levels,
        passed: all_ok,
    })
}

/// One seeded trial. If any quotient order is unresolved at the working
/// precision the trial is retried with the precision doubled, twice; the
/// defaults leave enough headroom that this never fires in practice.
pub fn run_trial(config: &SimConfig, trial: u32) -> Result<TrialReport> {
    let mut cfg = config.clone();
    let mut last = None;
    for _ in 0..3 {
        match try_trial(&cfg, trial) {
            Err(Error::PrecisionExhausted { prec }) => {
                last = Some(Error::PrecisionExhausted { prec });
                cfg.prec *= 2;
            }
            other => return other,
        }
    }
    Err(last.expect("loop ran"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CampaignReport {
    pub config: SimConfig,
    pub trials: Vec<TrialReport>,
    pub passed: bool,
}

/// Run every trial of the config, optionally across worker threads.
/// Records are keyed by trial index, so the report is identical for any
/// job count.
pub fn run_campaign(config: &SimConfig, jobs: usize) -> Result<CampaignReport> {
    let total = config.trials as usize;
    let mut collected: Vec<Option<Result<TrialReport>>> = Vec::new();
    if jobs <= 1 {
        for t in 0..total {
            collected.push(Some(run_trial(config, t as u32)));
        }
    } else {
        collected.resize_with(total, || None);
        let slots = Mutex::new(&mut collected);
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(total.max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= total {
                        break;
                    }
                    let report = run_trial(config, i as u32);
                    slots.lock().expect("result slots poisoned")[i] = Some(report);
                });
            }
        });
    }
    let mut trials = Vec::with_capacity(total);
    for slot in collected {
        trials.push(slot.expect("every trial slot filled")?);
    }
    let passed = trials.iter().all(|t| t.passed);
    Ok(CampaignReport {
        config: config.clone(),
        trials,
        passed,
    })
}
