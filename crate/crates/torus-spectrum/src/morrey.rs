//! Executable oscillation-bound certification: the weighted-derivative
//! hypothesis, the certificate combining it with a measured oscillation,
//! and the random-chain simulator that realizes the underlying argument.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{log_sum_exp, morrey_weight};
use crate::error::{Error, Result};
use crate::function::TorusFunction;
use crate::geometry::{DualExponent, SubtorusSpec, TorusCoordinate, TorusPoint};
use crate::rng::RandomStream;
use crate::sampling::{grid_oracle_osc, mc_integral, sample_lp_ball, McOptions};
use crate::stats::{ks_critical, ks_statistic_uniform, Accumulator, MCEstimate};

/// Which hypothesis threshold applies: the finite-torus bound (≤ 1, with
/// the weight on coordinate i+1 carrying index i) or the infinite-torus
/// bound (≤ 1/2, weight c_{ε,p,i} on coordinate i). The weighted sums are
/// identical after reindexing; only the threshold differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorreyMode {
    #[serde(rename = "finite")]
    FiniteTorus,
    #[serde(rename = "infinite")]
    InfiniteTorus,
}

impl MorreyMode {
    pub fn threshold(self) -> f64 {
        match self {
            MorreyMode::FiniteTorus => 1.0,
            MorreyMode::InfiniteTorus => 0.5,
        }
    }
}

/// Exact or Monte Carlo value of the weighted-derivative sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisValue {
    Exact { value: f64 },
    Estimate { estimate: MCEstimate },
}

impl HypothesisValue {
    pub fn value(&self) -> f64 {
        match self {
            HypothesisValue::Exact { value } => *value,
            HypothesisValue::Estimate { estimate } => estimate.mean,
        }
    }

    /// Conservative check against a threshold: exact values compare
    /// directly, estimates must clear it by 3 standard errors.
    pub fn holds_below(&self, threshold: f64) -> Option<bool> {
        match self {
            HypothesisValue::Exact { value } => Some(*value <= threshold),
            HypothesisValue::Estimate { estimate } => {
                if estimate.mean + 3.0 * estimate.stderr <= threshold {
                    Some(true)
                } else if estimate.mean - 3.0 * estimate.stderr > threshold {
                    Some(false)
                } else {
                    None // straddles the threshold
                }
            }
        }
    }
}

/// Σ_{i=1..n} c_{ε,p,i} ∫ |∂f/∂x_i|^q over T^n. Uses the family's exact
/// q-norms when available, otherwise Monte Carlo over the full torus.
/// Weights multiply in log space so huge constants cannot overflow.
pub fn morrey_hypothesis(
    f: &dyn TorusFunction,
    n: u32,
    eps: f64,
    d: &DualExponent,
    samples: u64,
    rng: &RandomStream,
) -> Result<HypothesisValue> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let q = d.q();
    let exact: Option<Vec<f64>> = (1..=n)
        .map(|i| f.exact_partial_qnorm(i, d))
        .collect();
    if let Some(qnorms) = exact {
        let log_terms: Vec<f64> = qnorms
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(k, &v)| {
                Ok(morrey_weight(k as u32 + 1, eps, d)?.ln_abs() + v.ln())
            })
            .collect::<Result<_>>()?;
        return Ok(HypothesisValue::Exact {
            value: log_sum_exp(&log_terms).exp(),
        });
    }
    // MC path: the weights are plain factors on the integrand; they are
    // only representable when the sum has any chance of being ≤ 1 anyway
    let weights: Vec<f64> = (1..=n)
        .map(|i| Ok(morrey_weight(i, eps, d)?.value()))
        .collect::<Result<_>>()?;
    let sub = SubtorusSpec::full_torus(n);
    let opts = McOptions {
        samples,
        ..Default::default()
    };
    let est = mc_integral(
        |x| {
            (1..=n)
                .map(|i| weights[i as usize - 1] * f.partial(i, x).abs().powf(q))
                .sum()
        },
        &sub,
        n,
        &opts,
        rng,
    )?;
    Ok(HypothesisValue::Estimate { estimate: est })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    HypothesisFailed,
    Inconclusive,
}

/// Outcome of a full oscillation-bound check on T^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorreyCertificate {
    pub eps: f64,
    pub p: f64,
    pub n: u32,
    pub mode: MorreyMode,
    pub hypothesis_value: HypothesisValue,
    pub hypothesis_holds: Option<bool>,
    pub osc_bound: f64,
    /// (lower, upper) bracket of the oscillation, exact or from the grid.
    pub measured_osc: (f64, f64),
    pub verdict: Verdict,
}

/// Options for `check_morrey`.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub samples: u64,
    /// per-axis grid resolution for the oscillation bracket when the
    /// family has no exact oracle
    pub grid_resolution: u32,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: 100_000,
            grid_resolution: 256,
        }
    }
}

/// Certify (or refuse to certify) osc(f; T^n) < 8ε for a 1-Lipschitz `f`.
///
/// A hypothesis-true outcome with a measured oscillation at or above the
/// bound is never reported as a counterexample; it means the implementation
/// is broken and surfaces as an invariant error.
pub fn check_morrey(
    f: &dyn TorusFunction,
    n: u32,
    eps: f64,
    d: &DualExponent,
    mode: MorreyMode,
    opts: &CheckOptions,
    rng: &RandomStream,
) -> Result<MorreyCertificate> {
    let lip = f.lipschitz_constant(d);
    if lip > 1.0 + 1e-9 {
        return Err(Error::NotUnitLipschitz(lip));
    }
    let hypothesis_value = morrey_hypothesis(f, n, eps, d, opts.samples, rng)?;
    let hypothesis_holds = hypothesis_value.holds_below(mode.threshold());
    let full = SubtorusSpec::full_torus(n);
    let measured_osc = match f.exact_osc_on(&full) {
        Some(osc) => (osc, osc),
        None => {
            let resolution = vec![opts.grid_resolution; n as usize];
            grid_oracle_osc(f, &resolution, d)?
        }
    };
    let osc_bound = 8.0 * eps;
    let verdict = match hypothesis_holds {
        Some(true) => {
            if measured_osc.0 >= osc_bound {
                return Err(Error::Invariant(format!(
                    "hypothesis holds but measured oscillation {} ≥ {} — this \
                     contradicts a proved bound and signals a bug",
                    measured_osc.0, osc_bound
                )));
            }
            Verdict::Certified
        }
        Some(false) => Verdict::HypothesisFailed,
        None => Verdict::Inconclusive,
    };
    Ok(MorreyCertificate {
        eps,
        p: d.p(),
        n,
        mode,
        hypothesis_value,
        hypothesis_holds,
        osc_bound,
        measured_osc,
        verdict,
    })
}

/// One level of the random chain: the ball-perturbed point and the point
/// with the next coordinate re-randomized, with the function's values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainStep {
    pub level: u32,
    pub p_prime: TorusPoint,
    pub p: TorusPoint,
    pub f_prime: f64,
    pub f_p: f64,
}

/// A full trajectory from the fixed start point down to the uniform end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainState {
    pub start: TorusPoint,
    pub f_start: f64,
    /// steps at levels n−1, …, 0, in the order they were generated
    pub steps: Vec<ChainStep>,
}

impl ChainState {
    pub fn end(&self) -> &TorusPoint {
        &self.steps.last().expect("n ≥ 1 chains have steps").p
    }

    pub fn f_end(&self) -> f64 {
        self.steps.last().expect("n ≥ 1 chains have steps").f_p
    }
}

/// Run the recursive chain on T^n from the fixed start point:
/// at level i (from n−1 down to 0) the first i coordinates are shifted by a
/// uniform ℓ_p-ball vector of radius ε/2^i, then coordinate i+1 is replaced
/// by a fresh uniform circle value.
pub fn run_chain(
    f: &dyn TorusFunction,
    n: u32,
    eps: f64,
    d: &DualExponent,
    start: &TorusPoint,
    rng: &mut RandomStream,
) -> Result<ChainState> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    assert!(n >= 1);
    let mut current = start.clone(); // P_{i+1} while level i runs
    let mut steps = Vec::with_capacity(n as usize);
    for level in (0..n).rev() {
        let radius = eps / 2f64.powi(level as i32);
        let shift = sample_lp_ball(level, radius, d, rng);
        let mut p_prime = current.clone();
        for (k, &delta) in shift.iter().enumerate() {
            let i = k as u32 + 1;
            p_prime.set(i, p_prime.coord(i).shifted(delta));
        }
        debug_assert!(p_prime.dist_p(&current, d)? <= radius + 1e-12);
        let mut p = p_prime.clone();
        p.set(level + 1, TorusCoordinate::new(rng.uniform01()));
        steps.push(ChainStep {
            level,
            f_prime: f.eval(&p_prime),
            f_p: f.eval(&p),
            p_prime,
            p,
        });
        current = steps.last().unwrap().p.clone();
    }
    Ok(ChainState {
        start: start.clone(),
        f_start: f.eval(start),
        steps,
    })
}

/// Per-level aggregate over many chains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    /// ball radius ε/2^level at this level, the almost-sure step bound
    pub step_bound: f64,
    /// empirical E|f(P'_i) − f(P_{i+1})|
    pub mean_abs_step: MCEstimate,
    /// empirical E|f(P'_i) − f(P_i)| (the re-randomized coordinate move)
    pub mean_abs_rerandomize: MCEstimate,
    /// largest almost-sure step observed
    pub max_abs_step: f64,
}

/// Aggregate report over a batch of chains from one start point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub n: u32,
    pub eps: f64,
    pub p: f64,
    pub chains: u64,
    /// empirical E|f(P) − f(P_0)| with its proved ceiling 4ε
    pub mean_abs_delta: MCEstimate,
    pub delta_bound: f64,
    pub per_level: Vec<LevelStats>,
    /// per-coordinate KS statistic of the end point marginals vs uniform
    pub endpoint_ks: Vec<f64>,
    pub endpoint_ks_critical: f64,
    /// largest pairwise correlation between end point coordinates
    pub endpoint_max_correlation: f64,
    /// whether the hypothesis held for `f` (false labels this exploratory)
    pub hypothesis_held: bool,
}

/// Simulate `chains` independent chains and summarize the quantities the
/// argument tracks: the end-point mean gap, the per-level step bounds, and
/// the uniformity of the end point.
pub fn chain_statistics(
    f: &dyn TorusFunction,
    n: u32,
    eps: f64,
    d: &DualExponent,
    start: &TorusPoint,
    chains: u64,
    rng: &RandomStream,
) -> Result<ChainReport> {
    assert!(n >= 1 && chains > 0);
    let hypothesis = morrey_hypothesis(f, n, eps, d, 50_000, &rng.substream(u64::MAX))?;
    let hypothesis_held = hypothesis.holds_below(MorreyMode::FiniteTorus.threshold())
        == Some(true);

    struct Partial {
        delta: Accumulator,
        steps: Vec<(Accumulator, Accumulator, f64)>,
        coords: Vec<Vec<f64>>,
    }

    let chunk = 256u64;
    let num_chunks = chains.div_ceil(chunk);
    let partials: Vec<Result<Partial>> = (0..num_chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.substream(c);
            let count = chunk.min(chains - c * chunk);
            let mut part = Partial {
                delta: Accumulator::new(),
                steps: (0..n)
                    .map(|_| (Accumulator::new(), Accumulator::new(), 0.0))
                    .collect(),
                coords: vec![Vec::with_capacity(count as usize); n as usize],
            };
            for _ in 0..count {
                let chain = run_chain(f, n, eps, d, start, &mut stream)?;
                part.delta.push((chain.f_start - chain.f_end()).abs());
                let mut prev_value = chain.f_start;
                for step in &chain.steps {
                    let slot = &mut part.steps[step.level as usize];
                    // |f(P'_i) − f(P_{i+1})|, almost surely ≤ ε/2^i
                    let abs_step = (step.f_prime - prev_value).abs();
                    slot.0.push(abs_step);
                    slot.1.push((step.f_prime - step.f_p).abs());
                    slot.2 = slot.2.max(abs_step);
                    prev_value = step.f_p;
                }
                let end = chain.end();
                for i in 1..=n {
                    part.coords[i as usize - 1].push(end.coord(i).value());
                }
            }
            Ok(part)
        })
        .collect();

    let mut delta = Accumulator::new();
    let mut per_level_acc: Vec<(Accumulator, Accumulator)> =
        (0..n).map(|_| (Accumulator::new(), Accumulator::new())).collect();
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); n as usize];
    let mut max_abs_step = vec![0f64; n as usize];
    for part in partials {
        let part = part?;
        delta.merge(&part.delta);
        for (lvl, slot) in part.steps.iter().enumerate() {
            per_level_acc[lvl].0.merge(&slot.0);
            per_level_acc[lvl].1.merge(&slot.1);
            max_abs_step[lvl] = max_abs_step[lvl].max(slot.2);
        }
        for (i, c) in part.coords.into_iter().enumerate() {
            coords[i].extend(c);
        }
    }

    let per_level: Vec<LevelStats> = (0..n)
        .map(|lvl| LevelStats {
            level: lvl,
            step_bound: eps / 2f64.powi(lvl as i32),
            mean_abs_step: per_level_acc[lvl as usize].0.estimate(),
            mean_abs_rerandomize: per_level_acc[lvl as usize].1.estimate(),
            max_abs_step: max_abs_step[lvl as usize],
        })
        .collect();

    // correlation first: the KS statistic sorts its input in place
    let endpoint_max_correlation = max_pairwise_correlation(&coords);
    let endpoint_ks: Vec<f64> = coords
        .iter_mut()
        .map(|c| ks_statistic_uniform(c))
        .collect();

    Ok(ChainReport {
        n,
        eps,
        p: d.p(),
        chains,
        mean_abs_delta: delta.estimate(),
        delta_bound: 4.0 * eps,
        per_level,
        endpoint_ks,
        endpoint_ks_critical: ks_critical(chains as usize, 0.001),
        endpoint_max_correlation,
        hypothesis_held,
    })
}

fn max_pairwise_correlation(coords: &[Vec<f64>]) -> f64 {
    let n = coords.len();
    let mut max_corr: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let xs = &coords[a];
            let ys = &coords[b];
            let len = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / len;
            let my = ys.iter().sum::<f64>() / len;
            let mut cov = 0.0;
            let mut vx = 0.0;
            let mut vy = 0.0;
            for (x, y) in xs.iter().zip(ys) {
                cov += (x - mx) * (y - my);
                vx += (x - mx) * (x - mx);
                vy += (y - my) * (y - my);
            }
            if vx > 0.0 && vy > 0.0 {
                max_corr = max_corr.max((cov / (vx * vy).sqrt()).abs());
            }
        }
    }
    max_corr
}
