//! Randomized search for parallel subtori on which a 1-Lipschitz function
//! is nearly constant, and the nested iteration that drives the means over
//! a shrinking schedule to the function's spectrum value.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::{block_size, morrey_weight, BlockSize};
use crate::error::{Error, Result};
use crate::function::{normalize_to_unit_lipschitz, Restriction, TorusFunction};
use crate::geometry::{DualExponent, SubtorusSpec, TailPolicy, TorusCoordinate, TorusPoint};
use crate::rng::RandomStream;
use crate::sampling::{mc_integral, McOptions};
use crate::stats::MCEstimate;

/// Total explicit indices a partition may cover before we refuse to
/// materialize it.
const BLOCK_INDEX_CAP: u64 = 10_000_000;

/// Consecutive disjoint index blocks with the prescribed sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Range<u64>>, // 1-based, half-open
}

impl BlockPartition {
    pub fn new(eps: f64, d: &DualExponent, count: u32) -> Result<Self> {
        let mut blocks = Vec::with_capacity(count as usize);
        let mut next = 1u64;
        for n in 1..=count {
            let size = match block_size(n, eps, d)? {
                BlockSize::Exact(s) => s,
                BlockSize::Huge(l) => {
                    return Err(Error::BlockTooLarge {
                        block: n,
                        size: format!("10^{:.1}", l.log10_abs()),
                    })
                }
            };
            let end = next
                .checked_add(size)
                .filter(|&e| e <= BLOCK_INDEX_CAP + 1)
                .ok_or_else(|| Error::BlockTooLarge {
                    block: n,
                    size: size.to_string(),
                })?;
            blocks.push(next..end);
            next = end;
        }
        Ok(BlockPartition { blocks })
    }

    pub fn blocks(&self) -> &[Range<u64>] {
        &self.blocks
    }

    /// Largest index covered by any block.
    pub fn horizon(&self) -> u64 {
        self.blocks.last().map(|b| b.end - 1).unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| b.end - b.start).collect()
    }
}

/// The acceptance statistic: Σ_n c_{ε,p,n} ∫ |∂f/∂x_{i_n}|^q over the
/// candidate subtorus, exact or estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedSum {
    Exact { value: f64 },
    Estimate { estimate: MCEstimate },
}

impl WeightedSum {
    pub fn value(&self) -> f64 {
        match self {
            WeightedSum::Exact { value } => *value,
            WeightedSum::Estimate { estimate } => estimate.mean,
        }
    }
}

/// One candidate draw: chosen indices, base point, statistic, verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub indices: Vec<u64>,
    pub base: TorusPoint,
    pub weighted_sum: WeightedSum,
    pub accepted: bool,
    pub subtorus: SubtorusSpec,
    pub attempts: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub max_attempts: u64,
    /// Monte Carlo samples for the statistic when no exact oracle exists
    pub samples: u64,
    pub tail_policy: TailPolicy,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_attempts: 64,
            samples: 50_000,
            tail_policy: TailPolicy::FixedAtBase,
        }
    }
}

const ACCEPT_THRESHOLD: f64 = 0.5;

/// Draw one candidate: an index uniform in each block, a uniform base
/// point, and the weighted derivative statistic. Accepted when the
/// statistic clears 1/2 (exactly, or by 3 standard errors in MC mode).
pub fn draw_candidate(
    f: &dyn TorusFunction,
    eps: f64,
    d: &DualExponent,
    block_count: u32,
    opts: &SearchOptions,
    rng: &mut RandomStream,
) -> Result<SearchOutcome> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let partition = BlockPartition::new(eps, d, block_count)?;
    let indices: Vec<u64> = partition
        .blocks()
        .iter()
        .map(|b| b.start + rng.uniform_index(b.end - b.start))
        .collect();
    let horizon = (partition.horizon() as u32).max(f.support_horizon()).max(1);
    let free: BTreeSet<u32> = indices.iter().map(|&i| i as u32).collect();
    let mut fixed = BTreeMap::new();
    let mut base = TorusPoint::origin(horizon);
    for i in 1..=horizon {
        if !free.contains(&i) {
            let c = TorusCoordinate::new(rng.uniform01());
            fixed.insert(i, c);
            base.set(i, c);
        }
    }
    let subtorus = SubtorusSpec::new(horizon, free.clone(), fixed, opts.tail_policy)?;

    let weights: Vec<f64> = (1..=block_count)
        .map(|n| Ok(morrey_weight(n, eps, d)?.value()))
        .collect::<Result<_>>()?;
    let exact_ok = f.partial_qnorm_is_base_independent()
        && indices
            .iter()
            .all(|&i| f.exact_partial_qnorm(i as u32, d).is_some());
    let (weighted_sum, accepted) = if exact_ok {
        let value: f64 = indices
            .iter()
            .enumerate()
            .map(|(n, &i)| {
                weights[n] * f.exact_partial_qnorm(i as u32, d).expect("checked")
            })
            .sum();
        (WeightedSum::Exact { value }, value <= ACCEPT_THRESHOLD)
    } else {
        let q = d.q();
        let mc_opts = McOptions {
            samples: opts.samples,
            ..Default::default()
        };
        let estimate = mc_integral(
            |x| {
                indices
                    .iter()
                    .enumerate()
                    .map(|(n, &i)| weights[n] * f.partial(i as u32, x).abs().powf(q))
                    .sum()
            },
            &subtorus,
            horizon.min(f.support_horizon().max(1)),
            &mc_opts,
            rng,
        )?;
        // one-sided statistical safety: accept only with 3σ margin
        let ok = estimate.mean + 3.0 * estimate.stderr <= ACCEPT_THRESHOLD;
        (WeightedSum::Estimate { estimate }, ok)
    };
    Ok(SearchOutcome {
        indices,
        base,
        weighted_sum,
        accepted,
        subtorus,
        attempts: 1,
    })
}

/// Retry `draw_candidate` until acceptance. The per-draw acceptance
/// probability is at least 1/2 for valid 1-Lipschitz input, so exhaustion
/// at the default 64 attempts has probability ≤ 2^−64 and signals a bad
/// input or a bug.
pub fn find_subtorus(
    f: &dyn TorusFunction,
    eps: f64,
    d: &DualExponent,
    block_count: u32,
    opts: &SearchOptions,
    rng: &RandomStream,
) -> Result<SearchOutcome> {
    let lip = f.lipschitz_constant(d);
    if lip > 1.0 + 1e-9 {
        return Err(Error::NotUnitLipschitz(lip));
    }
    for attempt in 1..=opts.max_attempts {
        // one substream per attempt: candidates could be drawn in parallel
        // and selected by lowest accepted attempt with identical results
        let mut stream = rng.substream(attempt);
        let mut outcome = draw_candidate(f, eps, d, block_count, opts, &mut stream)?;
        if outcome.accepted {
            outcome.attempts = attempt;
            return Ok(outcome);
        }
    }
    Err(Error::SearchExhausted {
        attempts: opts.max_attempts,
        stage: 0,
    })
}

/// One stage of the nested iteration, in original-space coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumStage {
    pub eps: f64,
    /// ε/8 actually handed to the subtorus search, so the stage torus has
    /// oscillation below ε rather than 8ε
    pub search_eps: f64,
    pub blocks: u32,
    pub subtorus: SubtorusSpec,
    /// mean of f over the stage subtorus (unnormalized scale)
    pub mean: f64,
    /// exact oscillation of f on the subtorus when the family knows it
    pub exact_osc: Option<f64>,
    pub attempts: u64,
}

/// Nested subtori T_1 ⊇ T_2 ⊇ … with their means and the limit estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub stages: Vec<SpectrumStage>,
    pub limit: f64,
    /// half-width of the final stage's guarantee
    pub error_bar: f64,
    pub normalization_factor: f64,
}

/// The extracted spectrum element with its certifying subtorus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumValue {
    pub a: f64,
    pub certifying_eps: f64,
    pub certifying_subtorus: SubtorusSpec,
}

/// Run the nested search over a strictly decreasing ε schedule: stage n
/// finds a subtorus of the previous stage's free coordinates with
/// oscillation below ε_n, then records the mean a_n of f over it. The means
/// form a Cauchy sequence (|a_m − a_n| < ε_n for m > n) and the last one is
/// the spectrum estimate.
pub fn spectrum_iterate(
    f: Arc<dyn TorusFunction>,
    eps_schedule: &[f64],
    d: &DualExponent,
    block_schedule: &[u32],
    opts: &SearchOptions,
    rng: &RandomStream,
) -> Result<(SpectrumTrace, SpectrumValue)> {
    if eps_schedule.is_empty() {
        return Err(Error::Config("empty epsilon schedule".into()));
    }
    if eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "epsilon schedule must be strictly decreasing".into(),
        ));
    }
    if block_schedule.len() != eps_schedule.len() {
        return Err(Error::Config(
            "need one block count per schedule entry".into(),
        ));
    }
    let (normalized, factor) = normalize_to_unit_lipschitz(f.clone(), d);
    let scale_back = 1.0 / factor;

    let mut current: Arc<dyn TorusFunction> = normalized.clone();
    let mut carrier: Option<SubtorusSpec> = None;
    let mut stages: Vec<SpectrumStage> = Vec::with_capacity(eps_schedule.len());
    for (stage_idx, (&eps, &blocks)) in
        eps_schedule.iter().zip(block_schedule).enumerate()
    {
        let search_eps = eps / 8.0;
        if !(search_eps > 0.0 && search_eps < 0.5) {
            return Err(Error::EpsilonOutOfRange(search_eps));
        }
        let stage_opts = SearchOptions {
            tail_policy: TailPolicy::FreeWithTailBound,
            ..*opts
        };
        let outcome = find_subtorus(
            current.as_ref(),
            search_eps,
            d,
            blocks,
            &stage_opts,
            &rng.substream(stage_idx as u64),
        )
        .map_err(|e| match e {
            Error::SearchExhausted { attempts, .. } => Error::SearchExhausted {
                attempts,
                stage: stage_idx + 1,
            },
            other => other,
        })?;

        let original_sub = match &carrier {
            None => outcome.subtorus.clone(),
            Some(parent) => parent.compose(&outcome.subtorus)?,
        };
        if let Some(parent) = &carrier {
            if !parent.contains(&original_sub) {
                return Err(Error::Invariant(format!(
                    "stage {} subtorus is not nested in its parent",
                    stage_idx + 1
                )));
            }
        }

        let mean_normalized = match normalized.exact_mean_on(&original_sub) {
            Some(m) => m,
            None => {
                let mc_opts = McOptions {
                    samples: opts.samples,
                    ..Default::default()
                };
                let horizon = normalized.support_horizon().max(1);
                let est = mc_integral(
                    |x| normalized.eval(x),
                    &original_sub,
                    horizon,
                    &mc_opts,
                    &rng.substream(1_000_000 + stage_idx as u64),
                )?;
                est.mean
            }
        };
        stages.push(SpectrumStage {
            eps,
            search_eps,
            blocks,
            exact_osc: f.exact_osc_on(&original_sub),
            subtorus: original_sub.clone(),
            mean: mean_normalized * scale_back,
            attempts: outcome.attempts,
        });
        carrier = Some(original_sub);
        current = Arc::new(Restriction::new(current, outcome.subtorus));
    }

    // Cauchy property of the produced means, at the unnormalized scale
    for n in 0..stages.len() {
        for m in (n + 1)..stages.len() {
            let gap = (stages[m].mean - stages[n].mean).abs();
            let allowed = stages[n].eps * scale_back;
            if gap >= allowed {
                return Err(Error::Invariant(format!(
                    "means at stages {} and {} differ by {gap}, allowed {allowed}",
                    n + 1,
                    m + 1
                )));
            }
        }
    }

    let last = stages.last().expect("non-empty schedule");
    let trace = SpectrumTrace {
        limit: last.mean,
        error_bar: last.eps * scale_back,
        normalization_factor: factor,
        stages: stages.clone(),
    };
    let value = SpectrumValue {
        a: last.mean,
        certifying_eps: last.eps,
        certifying_subtorus: last.subtorus.clone(),
    };
    Ok((trace, value))
}
