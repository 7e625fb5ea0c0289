//! Uniform ℓ_p-ball sampling, the Monte Carlo integrator, and the
//! brute-force grid oscillation oracle.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::TorusFunction;
use crate::geometry::{DualExponent, SubtorusSpec, TorusPoint};
use crate::rng::RandomStream;
use crate::stats::{Accumulator, MCEstimate};

/// Uniform sample from the ℓ_p ball of the given radius in `dim`
/// dimensions, by the generalized-Gamma direction method: coordinates
/// proportional to signed Gamma(1/p)^{1/p} variates give the cone measure
/// on the sphere, and the radius factor U^{1/dim} fills the ball. For
/// p = ∞ the coordinates are simply i.i.d. uniform on [−radius, radius].
pub fn sample_lp_ball(
    dim: u32,
    radius: f64,
    d: &DualExponent,
    rng: &mut RandomStream,
) -> Vec<f64> {
    assert!(radius > 0.0);
    if dim == 0 {
        return Vec::new();
    }
    if d.is_infinite() {
        return (0..dim)
            .map(|_| radius * (2.0 * rng.uniform01() - 1.0))
            .collect();
    }
    let p = d.p();
    let gamma = Gamma::new(1.0 / p, 1.0).expect("1/p is positive");
    let mut coords: Vec<f64> = Vec::with_capacity(dim as usize);
    let mut norm_p = 0.0;
    for _ in 0..dim {
        let g: f64 = gamma.sample(rng);
        let sign = if rng.uniform01() < 0.5 { -1.0 } else { 1.0 };
        coords.push(sign * g.powf(1.0 / p));
        norm_p += g;
    }
    let norm = norm_p.powf(1.0 / p);
    let scale = radius * rng.uniform01().powf(1.0 / dim as f64) / norm;
    for c in &mut coords {
        *c *= scale;
    }
    coords
}

/// Options for the Monte Carlo integrator.
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub samples: u64,
    /// samples per substream; the partition is fixed, so results do not
    /// depend on the worker count
    pub chunk: u64,
    /// abort when the non-finite fraction exceeds this
    pub max_non_finite_fraction: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 100_000,
            chunk: 4096,
            max_non_finite_fraction: 0.01,
        }
    }
}

/// Sample mean of `g` over the uniform measure of the subtorus, with
/// standard error. Points are materialized up to `eval_horizon` coordinates.
pub fn mc_integral<G>(
    g: G,
    sub: &SubtorusSpec,
    eval_horizon: u32,
    opts: &McOptions,
    rng: &RandomStream,
) -> Result<MCEstimate>
where
    G: Fn(&TorusPoint) -> f64 + Sync,
{
    assert!(opts.samples > 0 && opts.chunk > 0);
    let chunks = opts.samples.div_ceil(opts.chunk);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.substream(c);
            let count = opts.chunk.min(opts.samples - c * opts.chunk);
            let mut acc = Accumulator::new();
            for _ in 0..count {
                let point = sub.sample_point(eval_horizon, &mut stream);
                acc.push(g(&point));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new();
    for part in &partials {
        total.merge(part);
    }
    let bad = total.non_finite();
    if bad as f64 > opts.max_non_finite_fraction * opts.samples as f64 {
        return Err(Error::NonFiniteEvaluations {
            bad,
            total: opts.samples,
        });
    }
    Ok(total.estimate())
}

const GRID_POINT_LIMIT: u128 = 100_000_000;

/// Brute-force oscillation bracket on T^n: evaluates `f` on the full grid
/// and returns (grid max − grid min, that plus 2·L·cell-diameter), where L
/// is the function's Lipschitz constant under `d`.
pub fn grid_oracle_osc(
    f: &dyn TorusFunction,
    resolution: &[u32],
    d: &DualExponent,
) -> Result<(f64, f64)> {
    let n = resolution.len();
    if n == 0 || n > 4 {
        return Err(Error::Config(format!(
            "grid oracle supports dimensions 1..=4, got {n}"
        )));
    }
    let total: u128 = resolution.iter().map(|&r| r as u128).product();
    if total == 0 || total > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge {
            requested: total,
            limit: GRID_POINT_LIMIT,
        });
    }
    // parallel over the first axis
    let rest: u64 = resolution[1..].iter().map(|&r| r as u64).product();
    let (min, max) = (0..resolution[0])
        .into_par_iter()
        .map(|i0| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut point = TorusPoint::origin(n as u32);
            for flat in 0..rest {
                let mut rem = flat;
                point.set(
                    1,
                    crate::geometry::TorusCoordinate::new(i0 as f64 / resolution[0] as f64),
                );
                for (axis, &r) in resolution.iter().enumerate().skip(1).rev() {
                    let idx = rem % r as u64;
                    rem /= r as u64;
                    point.set(
                        axis as u32 + 1,
                        crate::geometry::TorusCoordinate::new(idx as f64 / r as f64),
                    );
                }
                let v = f.eval(&point);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    let osc_lower = max - min;
    let cell_diameter = if d.is_infinite() {
        resolution.iter().map(|&r| 1.0 / r as f64).fold(0.0, f64::max)
    } else {
        resolution
            .iter()
            .map(|&r| (1.0 / r as f64).powf(d.p()))
            .sum::<f64>()
            .powf(1.0 / d.p())
    };
    let lip = f.lipschitz_constant(d);
    Ok((osc_lower, osc_lower + 2.0 * lip * cell_diameter))
}
