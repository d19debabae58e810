//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`). Criteria 2-4 share one
//! seeded campaign fixture so the trials run once.

mod oracles;

use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iwasawa_core::algebra::{
    cyclotomic_factor, omega, random_element, xi, AlgebraElement, Constraint, IdealSign,
};
use iwasawa_core::cyclo::{char_eval, ramification_index};
use iwasawa_core::engine::{
    self, default_precision, mtt_consistency, run_campaign, CampaignReport, SimConfig,
};
use iwasawa_core::formal::formal_group_report;
use iwasawa_core::snf::{ideal_membership, kernel_basis, quotient_profile, IdealSolver};

fn report(criterion: u32, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

struct CampaignFixture {
    runs: Vec<CampaignReport>,
    wall: Duration,
}

static CAMPAIGN: Lazy<CampaignFixture> = Lazy::new(|| {
    let configs = [
        (3u64, 0u64, 4u32, 100u32, 101u64),
        (3, 3, 4, 100, 102),
        (3, 6, 4, 100, 103),
        (5, 0, 3, 50, 104),
        (5, 5, 3, 50, 105),
    ];
    let start = Instant::now();
    let runs = configs
        .iter()
        .map(|&(p, a_p, n_max, trials, seed)| {
            let config = SimConfig::new(p, a_p, n_max, seed, trials).expect("valid config");
            run_campaign(&config, 1).expect("campaign completes")
        })
        .collect();
    CampaignFixture {
        runs,
        wall: start.elapsed(),
    }
});

#[test]
fn criterion_1_growth_table() {
    let start = Instant::now();
    let q: Vec<u64> = (0..=6).map(|n| engine::q_n(3, n)).collect();
    let e: Vec<u64> = (0..=6).map(|n| engine::e_n(3, n)).collect();
    let recursion = (1..=6).all(|n| engine::e_n(3, n) == engine::e_n(3, n - 1) + engine::q_n(3, n));
    let elapsed = start.elapsed();

    // Closed forms cross-checked by the recursion e_n = e_(n-1) + q_n
    // at every step (so e_6 = 88 + 182 = 270).
    let ok = q == vec![0, 0, 2, 6, 20, 60, 182]
        && e == vec![0, 0, 2, 8, 28, 88, 270]
        && recursion
        && elapsed < Duration::from_millis(1);
    report(
        1,
        ok,
        &format!("q={q:?} e={e:?} recursion={recursion} in {elapsed:?}"),
    );
}

#[test]
fn criterion_2_invariants_across_all_trials() {
    let fixture = &CAMPAIGN;
    let mut levels = 0usize;
    let mut ok = true;
    for run in &fixture.runs {
        for trial in &run.trials {
            for level in &trial.levels {
                levels += 1;
                ok &= level.invariants_ok && level.mu == 0 && level.lambda == level.q_n;
            }
        }
    }
    ok &= fixture.wall < Duration::from_secs(60);
    report(
        2,
        ok,
        &format!(
            "mu=0 and lambda=q_n at {levels} trial-levels across 400 trials in {:?}",
            fixture.wall
        ),
    );
}

#[test]
fn criterion_3_orders_and_exact_sequence() {
    let fixture = &CAMPAIGN;
    let mut ok = true;
    let mut checked = 0usize;
    for run in &fixture.runs {
        for trial in &run.trials {
            for level in &trial.levels {
                checked += 1;
                ok &= level.order_ok && level.order_exponent == level.e_n;
                ok &= level.exact_sequence_ok;
                if level.n >= 1 {
                    let chi = level.chi_valuation.expect("top character valuation");
                    ok &= chi.num == level.q_n
                        && chi.den == ramification_index(run.config.p, level.n);
                }
            }
        }
    }
    report(
        3,
        ok,
        &format!("order exponent = e_n and chi contribution = q_n at {checked} trial-levels"),
    );
}

#[test]
fn criterion_4_structure_at_ap_zero() {
    let fixture = &CAMPAIGN;
    let mut ok = true;
    let mut checked = 0usize;
    for run in fixture.runs.iter().filter(|r| r.config.a_p == 0) {
        for trial in &run.trials {
            for level in &trial.levels {
                let s = level.structure_checks.expect("a_p = 0 runs carry them");
                checked += 1;
                ok &= s.vanishing && s.membership && s.profile_match;
            }
        }
    }
    report(
        4,
        ok,
        &format!("vanishing, membership and divisor profiles agree at {checked} trial-levels"),
    );
}

#[test]
fn criterion_5_omega_orders_cross_check() {
    let mut ok = true;
    let mut detail = String::new();
    for (p, top) in [(3u64, 4u32), (5, 3), (7, 2)] {
        for n in 0..=top {
            let r = mtt_consistency(p, default_precision(p, n), n).expect("resolves");
            ok &= r.ok;
            detail.push_str(&format!("p{p}n{n}:{} ", r.order_exponent));
        }
    }
    report(5, ok, &format!("omega-pair quotient orders {detail}"));
}

#[test]
fn criterion_6_map_and_invariant_property_suite() {
    let start = Instant::now();
    let mut ok = true;
    let mut samples_total = 0usize;
    for p in [3u64, 5] {
        for n in [1u32, 2, 3] {
            let prec = 12;
            let e = ramification_index(p, n);
            let half = p.pow(n - 1);
            let xi_n = xi(p, prec, n).unwrap();
            let p_scalar = iwasawa_core::padic::PadicScalar::from_i64(p, prec, p as i64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(600 + 10 * p + n as u64);
            let mut membership_spot_checks = 0usize;
            for sample in 0..1000usize {
                samples_total += 1;
                let f = random_element(&mut rng, p, prec, n - 1, Constraint::Any).unwrap();
                let g = random_element(&mut rng, p, prec, n, Constraint::Any).unwrap();

                // pi(nu(f)) = p f and nu(pi(g)) = xi g, exactly
                ok &= f.lift_nu().project_pi().unwrap() == f.scalar_mul(&p_scalar).unwrap();
                ok &= g.project_pi().unwrap().lift_nu() == xi_n.multiply(&g).unwrap();

                // invariants through the norm lift
                if let Ok(inv) = f.invariants() {
                    let lifted = f.lift_nu().invariants().unwrap();
                    ok &= lifted.mu == inv.mu;
                    ok &= lifted.lambda == p.pow(n) - half + inv.lambda;
                }

                // and through the projection: mu can only grow, and when
                // it is preserved so is lambda
                if let (Ok(gi), Ok(pi)) = (g.invariants(), g.project_pi().unwrap().invariants()) {
                    ok &= pi.mu >= gi.mu;
                    if pi.mu == gi.mu {
                        ok &= pi.lambda == gi.lambda;
                    }
                }

                // basic sub/additivity under products
                let h = random_element(&mut rng, p, prec, n, Constraint::Any).unwrap();
                if let (Ok(gi), Ok(hi)) = (g.invariants(), h.invariants()) {
                    let prod = g.multiply(&h).unwrap();
                    if let Ok(pi) = prod.invariants() {
                        ok &= (pi.mu as u64) >= gi.mu as u64 + hi.mu as u64;
                        if pi.mu == 0 {
                            ok &= pi.lambda == gi.lambda + hi.lambda;
                        }
                    }
                }

                // evaluation lemma at the top character
                if let Ok(gi) = g.invariants() {
                    if gi.lambda < e {
                        let val = char_eval(&g, n).unwrap().eisenstein_valuation().unwrap();
                        ok &= val.den == e && val.num == gi.mu as u64 * e + gi.lambda;
                    }
                }

                // membership transfer out of the norm image: for f' with
                // mu = 0 and lambda < p^(n-1), f' g in (xi) iff g in (xi)
                let fp = random_element(&mut rng, p, prec, n, Constraint::Unit).unwrap();
                if fp.lambda_invariant().unwrap() < half {
                    let in_image = g.in_nu_image();
                    ok &= fp.multiply(&g).unwrap().in_nu_image() == in_image;
                    let lifted = random_element(&mut rng, p, prec, n - 1, Constraint::Any)
                        .unwrap()
                        .lift_nu();
                    ok &= fp.multiply(&lifted).unwrap().in_nu_image();
                }

                // spot-check the structural norm-image test against the
                // generic membership certificate
                if sample < 5 {
                    membership_spot_checks += 1;
                    ok &= ideal_membership(&g, &[&xi_n]).unwrap() == g.in_nu_image();
                    let lifted = f.lift_nu();
                    ok &= ideal_membership(&lifted, &[&xi_n]).unwrap();
                }
            }
            assert!(membership_spot_checks > 0);
        }
    }
    let elapsed = start.elapsed();
    let ok = ok && elapsed < Duration::from_secs(60);
    report(
        6,
        ok,
        &format!("{samples_total} samples across 6 configurations in {elapsed:?}"),
    );
}

#[test]
fn criterion_7_brute_force_oracles() {
    let p = 3u64;
    let mut ok = true;

    // lambda vs explicit span membership in the augmentation filtration
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut compared = 0usize;
    for n in [1u32, 2] {
        for _ in 0..100 {
            let f = random_element(&mut rng, p, 3, n, Constraint::Any).unwrap();
            if let Some(expected) = oracles::lambda_by_span(&f) {
                compared += 1;
                ok &= f.lambda_invariant().unwrap() == expected;
            }
        }
    }

    // omega-principality of the parity vanishing ideals against a
    // character-kernel computation, as equality of submodules of
    // (Z/p^N)^(p^n) by mutual inclusion: every kernel generator lies in
    // the span of the single omega generator, and the omega generator
    // vanishes at every defining character (so its whole ideal sits
    // inside the kernel).
    let mut kernel_generators_checked = 0usize;
    for n in [1u32, 2] {
        let prec = 6;
        for sign in [IdealSign::Plus, IdealSign::Minus] {
            let levels: Vec<u32> = match sign {
                IdealSign::Plus => (2..=n).step_by(2).collect(),
                IdealSign::Minus => (1..=n).step_by(2).collect(),
            };
            let w = omega(p, prec, n, sign).unwrap();
            for &m in &levels {
                ok &= char_eval(&w, m).unwrap().is_zero();
            }
            let matrix = oracles::character_matrix(p, prec, n, &levels);
            let kernel = kernel_basis(&matrix);
            let kernel_elements: Vec<AlgebraElement> = kernel
                .into_iter()
                .map(|v| AlgebraElement::new(p, prec, n, v).unwrap())
                .collect();
            let solver = IdealSolver::new(&[&w]).unwrap();
            for k in &kernel_elements {
                kernel_generators_checked += 1;
                ok &= solver.contains(k).unwrap();
            }
        }
    }
    assert!(kernel_generators_checked >= 12);

    // quotient orders over Z/p^3: literal closure enumeration at level 1
    // and exact integer minor-gcds at levels 1 and 2
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut enumerated = 0usize;
    for _ in 0..25 {
        let f = random_element(&mut rng, p, 3, 1, Constraint::Unit).unwrap();
        let g = random_element(&mut rng, p, 3, 1, Constraint::Any).unwrap();
        let profile = quotient_profile(&[&f, &g]).unwrap();
        let Some(exp) = profile.order_exponent() else {
            continue;
        };
        enumerated += 1;
        let order = oracles::quotient_order_by_enumeration(&[&f, &g]);
        ok &= order == num_bigint::BigUint::from(p).pow(exp as u32);
        let by_minors = oracles::quotient_order_by_minors(&[&f, &g]);
        ok &= by_minors == Some(exp as u32);
    }
    assert!(enumerated >= 20);
    let mut minor_checked = 0usize;
    let mut level2_pairs: Vec<(AlgebraElement, AlgebraElement)> = (0..6)
        .map(|_| {
            (
                random_element(&mut rng, p, 3, 2, Constraint::Unit).unwrap(),
                random_element(&mut rng, p, 3, 2, Constraint::Any).unwrap(),
            )
        })
        .collect();
    // structured pairs with larger quotients
    level2_pairs.push((
        omega(p, 3, 2, IdealSign::Plus).unwrap(),
        omega(p, 3, 2, IdealSign::Minus).unwrap(),
    ));
    level2_pairs.push((
        cyclotomic_factor(p, 3, 2, 0).unwrap(),
        cyclotomic_factor(p, 3, 2, 1).unwrap(),
    ));
    for (f, g) in &level2_pairs {
        let profile = quotient_profile(&[f, g]).unwrap();
        let Some(exp) = profile.order_exponent() else {
            continue;
        };
        minor_checked += 1;
        ok &= oracles::quotient_order_by_minors(&[f, g]) == Some(exp as u32);
    }
    assert!(minor_checked >= 6);

    report(
        7,
        ok,
        &format!(
            "lambda span oracle on {compared} samples, {kernel_generators_checked} \
             character-kernel generators certified principal, {enumerated} enumerated \
             and {minor_checked} minor-gcd quotient orders"
        ),
    );
}

#[test]
fn criterion_8_formal_group() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (p, a_p, degree) in [(3u64, 0u64, 20u32), (3, 3, 20), (5, 0, 15)] {
        let r = formal_group_report(p, a_p, degree, 10).expect("construction succeeds");
        ok &= r.passed();
        ok &= r.integral
            && r.identity_ok
            && r.symmetric
            && r.log_additive
            && r.associative
            && r.assoc_degree == degree.min(10)
            && r.epsilon_residual_ok
            && r.trace_unit_is_unit
            && r.epsilon_valuation == Some(1);
        detail.push_str(&format!(
            "(p={p},a_p={a_p},D={degree}): eps={} u={} ",
            r.epsilon, r.trace_unit
        ));
    }
    let elapsed = start.elapsed();
    let ok = ok && elapsed < Duration::from_secs(30);
    report(8, ok, &format!("{detail}in {elapsed:?}"));
}

#[test]
fn criterion_9_verify_is_deterministic() {
    let exe = env!("CARGO_BIN_EXE_iwasawa");
    let run = || {
        let out = std::process::Command::new(exe)
            .args([
                "verify", "--p", "3", "--ap", "0", "--nmax", "2", "--trials", "5", "--seed", "42",
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "verify exits 0");
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
        let timing = v
            .as_object_mut()
            .expect("object output")
            .remove("timing")
            .expect("timing field present");
        assert!(timing.get("wall_ms").and_then(|w| w.as_u64()).is_some());
        serde_json::to_string(&v).expect("serializable")
    };
    let first = run();
    let second = run();
    let ok = first == second;
    report(
        9,
        ok,
        &format!("two seeded runs agree on {} bytes outside the timing field", first.len()),
    );
}

// Shared-fixture sanity: the campaign covers exactly the configurations
// the criteria name.
#[test]
fn campaign_fixture_covers_the_required_grid() {
    let fixture = &CAMPAIGN;
    let got: Vec<(u64, u64, u32, u32)> = fixture
        .runs
        .iter()
        .map(|r| (r.config.p, r.config.a_p, r.config.n_max, r.config.trials))
        .collect();
    assert_eq!(
        got,
        vec![
            (3, 0, 4, 100),
            (3, 3, 4, 100),
            (3, 6, 4, 100),
            (5, 0, 3, 50),
            (5, 5, 3, 50)
        ]
    );
    assert!(fixture.runs.iter().all(|r| r.passed));
    // default precisions pinned by the configuration policy
    assert!(fixture.runs[..3].iter().all(|r| r.config.prec == 36));
    assert!(fixture.runs[3..].iter().all(|r| r.config.prec == 32));
}
