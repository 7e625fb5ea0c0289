//! Acceptance gate: eight end-to-end criteria, each printing a single
//! PASS/FAIL line. Tolerances are pinned in the assertions.

use std::f64::consts::PI;
use std::sync::Arc;

use torus_spectrum::constants::{block_size, lp_ball_volume_p, BlockSize};
use torus_spectrum::function::{sin_abs_q_moment, CosineSeries, TorusFunction};
use torus_spectrum::geometry::{DualExponent, SubtorusSpec, TorusPoint};
use torus_spectrum::morrey::{
    chain_statistics, check_morrey, morrey_hypothesis, CheckOptions, HypothesisValue,
    MorreyMode, Verdict,
};
use torus_spectrum::rng::RandomStream;
use torus_spectrum::sampling::{grid_oracle_osc, mc_integral, McOptions};
use torus_spectrum::search::{draw_candidate, spectrum_iterate, SearchOptions};

fn pass(criterion: u32, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS — {detail}");
}

const P_VALUES: [f64; 5] = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];

/// Independent closed form for the unit ball volume, via a third-party
/// log-gamma implementation.
fn reference_volume(n: u32, p: f64) -> f64 {
    if p.is_infinite() {
        return 2f64.powi(n as i32);
    }
    let n = n as f64;
    (n * (2.0 * statrs::function::gamma::gamma(1.0 + 1.0 / p)).ln()
        - statrs::function::gamma::ln_gamma(1.0 + n / p))
    .exp()
}

/// Rejection-sampling volume estimate with its standard error.
fn mc_volume(n: u32, p: f64, samples: u64, rng: &mut RandomStream) -> (f64, f64) {
    let mut hits = 0u64;
    for _ in 0..samples {
        let norm: f64 = if p.is_infinite() {
            (0..n)
                .map(|_| (2.0 * rng.uniform01() - 1.0).abs())
                .fold(0.0, f64::max)
        } else {
            (0..n)
                .map(|_| (2.0 * rng.uniform01() - 1.0).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        };
        if norm <= 1.0 {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let cube = 2f64.powi(n as i32);
    let stderr = cube * (frac * (1.0 - frac) / samples as f64).sqrt();
    (cube * frac, stderr)
}

#[test]
fn criterion_1_constants_suite() {
    let mut worst_rel = 0.0f64;
    for &p in &P_VALUES {
        for n in 0..=10 {
            let got = lp_ball_volume_p(n, p).value();
            let want = reference_volume(n, p);
            let rel = ((got - want) / want).abs();
            worst_rel = worst_rel.max(rel);
            assert!(rel < 1e-12, "volume(n={n}, p={p}): {got} vs {want}");
        }
    }
    let mut rng = RandomStream::new(101, 0);
    let mut worst_sigma = 0.0f64;
    for &p in &P_VALUES {
        for n in 1..=6 {
            let (est, stderr) = mc_volume(n, p, 200_000, &mut rng);
            let want = lp_ball_volume_p(n, p).value();
            // degenerate cases (the ball fills the cube, e.g. p = ∞ or
            // n = 1): zero variance, the estimate must hit the value
            let sigmas = if stderr == 0.0 {
                if (est - want).abs() < 1e-9 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (est - want).abs() / stderr
            };
            worst_sigma = worst_sigma.max(sigmas);
            assert!(sigmas < 3.0, "MC volume(n={n}, p={p}): {sigmas:.2}σ");
        }
    }
    let d = DualExponent::new(2.0).unwrap();
    let sizes: Vec<BlockSize> = (1..=2)
        .map(|n| block_size(n, 0.25, &d).unwrap())
        .collect();
    assert!(matches!(sizes[0], BlockSize::Exact(64)));
    assert!(matches!(sizes[1], BlockSize::Exact(2048)));
    pass(
        1,
        &format!(
            "volumes within rel {worst_rel:.2e} of the independent closed form, \
             MC within {worst_sigma:.2}σ, blocks (64, 2048) at eps 0.25 p 2"
        ),
    );
}

/// Amplitude that makes the exact weighted hypothesis equal `target` for
/// the uniform-amplitude cosine family on T^n at exponent 2.
fn amplitude_for_hypothesis(n: u32, eps: f64, d: &DualExponent, target: f64) -> f64 {
    let unit = CosineSeries::new(vec![1.0; n as usize]);
    let rng = RandomStream::new(0, 0);
    let h1 = match morrey_hypothesis(&unit, n, eps, d, 0, &rng).unwrap() {
        HypothesisValue::Exact { value } => value,
        _ => unreachable!("cosine family has exact q-norm oracles"),
    };
    (target / h1).sqrt() // hypothesis scales as amplitude^q with q = 2
}

#[test]
fn criterion_2_oscillation_certificates() {
    let d = DualExponent::new(2.0).unwrap();
    let rng = RandomStream::new(202, 0);
    let opts = CheckOptions::default();
    let mut cases = 0;
    for n in 1..=3u32 {
        for eps in [0.1, 0.25, 0.4] {
            let delta = amplitude_for_hypothesis(n, eps, &d, 0.9);
            let f = CosineSeries::new(vec![delta; n as usize]);
            assert!(f.lipschitz_constant(&d) <= 1.0);
            let cert =
                check_morrey(&f, n, eps, &d, MorreyMode::FiniteTorus, &opts, &rng)
                    .unwrap();
            assert!(matches!(cert.verdict, Verdict::Certified));
            // grid lower bound independently of the analytic oracle
            let res = vec![64u32; n as usize];
            let (lower, _) = grid_oracle_osc(&f, &res, &d).unwrap();
            assert!(
                lower < 8.0 * eps,
                "grid osc {lower} vs bound {} (n={n}, eps={eps})",
                8.0 * eps
            );
            cases += 1;
        }
    }
    // deliberate hypothesis violator, still 1-Lipschitz: reported as
    // hypothesis-failed, never as a counterexample
    let delta = amplitude_for_hypothesis(1, 0.1, &d, 4.0);
    let f = CosineSeries::new(vec![delta]);
    assert!(f.lipschitz_constant(&d) <= 1.0);
    let cert = check_morrey(&f, 1, 0.1, &d, MorreyMode::FiniteTorus, &opts, &rng)
        .unwrap();
    assert!(matches!(cert.verdict, Verdict::HypothesisFailed));
    pass(
        2,
        &format!(
            "{cases}/9 hypothesis-satisfying cases certified with grid \
             oscillation < 8·eps; the violator reports hypothesis-failed"
        ),
    );
}

#[test]
fn criterion_3_chain_simulator() {
    let d = DualExponent::new(2.0).unwrap();
    let eps = 0.25;
    for n in 1..=3u32 {
        let delta = amplitude_for_hypothesis(n, eps, &d, 0.9);
        let f = CosineSeries::new(vec![delta; n as usize]);
        let start = TorusPoint::origin(n);
        let rng = RandomStream::new(300 + n as u64, 0);
        let report = chain_statistics(&f, n, eps, &d, &start, 10_000, &rng).unwrap();
        assert!(report.hypothesis_held);
        for level in &report.per_level {
            // the a.s. step bound L·radius ≤ radius for 1-Lipschitz f
            assert!(
                level.max_abs_step <= level.step_bound + 1e-9,
                "level {} step {} over bound {}",
                level.level,
                level.max_abs_step,
                level.step_bound
            );
        }
        for (i, ks) in report.endpoint_ks.iter().enumerate() {
            assert!(
                *ks < report.endpoint_ks_critical,
                "coordinate {} KS {ks} over critical {}",
                i + 1,
                report.endpoint_ks_critical
            );
        }
        let ci_upper = report.mean_abs_delta.ci95.1;
        assert!(ci_upper < 4.0 * eps, "CI upper {ci_upper} vs {}", 4.0 * eps);
    }
    pass(
        3,
        "10^4 chains per n in 1..=3: a.s. step bounds hold, end points pass \
         KS at level 0.001, mean gap CI upper bound < 4·eps",
    );
}

#[test]
fn criterion_4_and_5_acceptance_rate_and_oscillation() {
    let d = DualExponent::new(2.0).unwrap();
    let trials = 2000u64;
    let floor = 0.5 - 3.0 * (0.25f64 / trials as f64).sqrt();
    let opts = SearchOptions::default();
    let mut summary = Vec::new();
    for eps in [0.25, 0.4] {
        for blocks in [1u32, 2] {
            // amplitudes decay so the function is 1-Lipschitz with mass
            // spread over both blocks
            let horizon = 2112usize;
            let raw: Vec<f64> = (1..=horizon).map(|i| 1.0 / i as f64).collect();
            let norm: f64 = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
            let coeffs: Vec<f64> =
                raw.iter().map(|a| 0.99 * a / (2.0 * PI * norm)).collect();
            let f = CosineSeries::new(coeffs);
            assert!(f.lipschitz_constant(&d) <= 1.0);

            let rng = RandomStream::new(404, (eps * 100.0) as u64 + blocks as u64);
            let mut accepted = 0u64;
            for t in 0..trials {
                let mut stream = rng.substream(t);
                let outcome =
                    draw_candidate(&f, eps, &d, blocks, &opts, &mut stream).unwrap();
                if outcome.accepted {
                    accepted += 1;
                    // criterion 5: exact oscillation on every accepted torus
                    let osc = f.exact_osc_on(&outcome.subtorus).unwrap();
                    assert!(osc < 8.0 * eps, "osc {osc} vs {}", 8.0 * eps);
                }
            }
            let rate = accepted as f64 / trials as f64;
            assert!(
                rate >= floor,
                "acceptance rate {rate} below {floor} (eps={eps}, K={blocks})"
            );
            summary.push(format!("eps={eps} K={blocks}: {rate:.3}"));
        }
    }
    pass(
        4,
        &format!(
            "first-draw acceptance over {trials} trials ≥ {floor:.4} in every \
             configuration ({})",
            summary.join(", ")
        ),
    );
    pass(
        5,
        "exact oracle oscillation < 8·eps on 100% of accepted subtori",
    );
}

#[test]
fn criterion_6_spectrum_trace() {
    let d = DualExponent::new(2.0).unwrap();
    let schedule = [0.4, 0.3, 0.25];
    let opts = SearchOptions::default();

    // constant function: the limit is the constant, exactly
    let c: Arc<dyn TorusFunction> =
        Arc::new(CosineSeries::new(vec![0.0]).with_offset(1.75));
    let rng = RandomStream::new(606, 0);
    let (trace, value) =
        spectrum_iterate(c, &schedule, &d, &[1; 3], &opts, &rng).unwrap();
    assert_eq!(value.a, 1.75);
    for stage in &trace.stages {
        assert_eq!(stage.mean, 1.75);
    }

    // non-constant input: the Cauchy property |a_m − a_n| < eps_n
    let f: Arc<dyn TorusFunction> =
        Arc::new(CosineSeries::new(vec![0.02; 40]).with_offset(0.5));
    let rng = RandomStream::new(607, 0);
    let (trace, _) = spectrum_iterate(f, &schedule, &d, &[1; 3], &opts, &rng).unwrap();
    let mut worst_gap = 0.0f64;
    for n in 0..trace.stages.len() {
        for m in (n + 1)..trace.stages.len() {
            let gap = (trace.stages[m].mean - trace.stages[n].mean).abs();
            assert!(gap < trace.stages[n].eps);
            worst_gap = worst_gap.max(gap / trace.stages[n].eps);
        }
    }
    for w in trace.stages.windows(2) {
        assert!(w[0].subtorus.contains(&w[1].subtorus));
    }
    pass(
        6,
        &format!(
            "trace over (0.4, 0.3, 0.25) is nested and Cauchy (worst gap at \
             {:.1}% of its bound); constant-function limit is exact",
            100.0 * worst_gap
        ),
    );
}

#[test]
fn criterion_7_oracle_equivalence() {
    let d = DualExponent::new(2.0).unwrap();
    let q = d.q();
    let f = CosineSeries::new(vec![0.08, 0.05, 0.03]);
    let full = SubtorusSpec::full_torus(3);
    let opts = McOptions {
        samples: 20_000,
        ..Default::default()
    };
    let mut within = 0;
    for rep in 0..100u64 {
        let rng = RandomStream::new(707, rep);
        let i = (rep % 3) as u32 + 1;
        let exact = f.exact_partial_qnorm(i, &d).unwrap();
        assert!(
            (exact - (2.0 * PI * f.coeffs()[i as usize - 1]).powf(q)
                * sin_abs_q_moment(q))
            .abs()
                < 1e-12
        );
        let est = mc_integral(|x| f.partial(i, x).abs().powf(q), &full, 3, &opts, &rng)
            .unwrap();
        if est.sigmas_from(exact) <= 3.0 {
            within += 1;
        }
    }
    assert!(within >= 99, "only {within}/100 repetitions within 3σ");

    for n in 1..=3u32 {
        let g = CosineSeries::new(vec![0.05; n as usize]);
        let exact = g.exact_osc_on(&SubtorusSpec::full_torus(n)).unwrap();
        let res = vec![128u32; n as usize];
        let (lower, upper) = grid_oracle_osc(&g, &res, &d).unwrap();
        assert!(
            lower <= exact && exact <= upper,
            "grid [{lower}, {upper}] misses exact {exact} at n={n}"
        );
    }
    pass(
        7,
        &format!(
            "{within}/100 MC derivative integrals within 3σ of the closed \
             form; grid bracket contains the exact oscillation for n ≤ 3"
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let d = DualExponent::new(2.0).unwrap();
    let f = CosineSeries::new(vec![0.08, 0.05, 0.03]);
    let full = SubtorusSpec::full_torus(3);
    let opts = McOptions {
        samples: 100_000,
        ..Default::default()
    };
    let q = d.q();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let rng = RandomStream::new(808, 0);
            let est =
                mc_integral(|x| f.partial(1, x).abs().powf(q), &full, 3, &opts, &rng)
                    .unwrap();
            let start = TorusPoint::origin(3);
            let chains =
                chain_statistics(&f, 3, 0.25, &d, &start, 4_000, &rng.substream(1))
                    .unwrap();
            let mut stream = rng.substream(2);
            let outcome = draw_candidate(
                &f,
                0.25,
                &d,
                1,
                &SearchOptions::default(),
                &mut stream,
            )
            .unwrap();
            (
                serde_json::to_string(&est).unwrap(),
                serde_json::to_string(&chains).unwrap(),
                serde_json::to_string(&outcome).unwrap(),
            )
        })
    };
    let single = run(1);
    for threads in [2, 4, 7] {
        let multi = run(threads);
        assert_eq!(single.0, multi.0, "MC estimate differs at {threads} workers");
        assert_eq!(single.1, multi.1, "chain report differs at {threads} workers");
        assert_eq!(single.2, multi.2, "search draw differs at {threads} workers");
    }
    pass(
        8,
        "MC estimate, chain report and search outcome JSON are bit-identical \
         across 1, 2, 4 and 7 workers at a fixed seed",
    );
}
