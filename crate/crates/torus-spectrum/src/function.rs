//! Function families on the truncated torus: the evaluation/derivative/
//! Lipschitz contract, a cosine-series family with exact analytic oracles,
//! a black-box grid family, and restriction/scaling wrappers.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualExponent, SubtorusSpec, TorusPoint};

/// Contract for a function on a truncation of the torus.
///
/// Partial derivatives are part of the contract (not derived by automatic
/// differentiation): the hypotheses being certified are integrals of
/// |∂f/∂x_i|^q, and each family supplies its own almost-everywhere
/// derivative. The `exact_*` methods are optional analytic oracles;
/// `None` means the family cannot answer exactly and callers fall back to
/// Monte Carlo or grid evaluation.
pub trait TorusFunction: Send + Sync {
    fn eval(&self, x: &TorusPoint) -> f64;

    /// ∂f/∂x_i at x (defined almost everywhere).
    fn partial(&self, i: u32, x: &TorusPoint) -> f64;

    /// A Lipschitz constant with respect to dist_p.
    fn lipschitz_constant(&self, d: &DualExponent) -> f64;

    /// Coordinates beyond this index never affect `eval` or `partial`.
    fn support_horizon(&self) -> u32;

    /// Certified bound on the oscillation contributed by coordinates beyond
    /// `horizon`, when the family can state one.
    fn tail_osc_bound(&self, horizon: u32) -> Option<f64>;

    /// Exact ∫_T |∂f/∂x_i|^q over the torus, when the family knows it.
    fn exact_partial_qnorm(&self, _i: u32, _d: &DualExponent) -> Option<f64> {
        None
    }

    /// Whether the derivative q-norms are independent of the fixed
    /// coordinates of any subtorus (true for separable families); required
    /// for forwarding exact q-norms through restrictions.
    fn partial_qnorm_is_base_independent(&self) -> bool {
        false
    }

    /// Exact oscillation of the restriction to a subtorus.
    fn exact_osc_on(&self, _sub: &SubtorusSpec) -> Option<f64> {
        None
    }

    /// Exact mean of the restriction to a subtorus.
    fn exact_mean_on(&self, _sub: &SubtorusSpec) -> Option<f64> {
        None
    }
}

/// Declared analytic tail of a coefficient sequence: a_i = ratio^i for
/// i > from. Admitted only when the square-summability gate |ratio| < 1
/// holds, so the underlying series converges almost everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    pub ratio: f64,
    pub from: u32,
}

/// f(x) = offset + Σ_i a_i cos(2π(x_i + φ_i)) with finitely many explicit
/// coefficients and an optional declared geometric tail.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
    phases: Vec<f64>,
    offset: f64,
    tail: Option<GeometricTail>,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let phases = vec![0.0; coeffs.len()];
        CosineSeries {
            coeffs,
            phases,
            offset: 0.0,
            tail: None,
        }
    }

    pub fn with_phases(coeffs: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != coeffs.len() {
            return Err(Error::FunctionSpec(format!(
                "{} phases for {} coefficients",
                phases.len(),
                coeffs.len()
            )));
        }
        Ok(CosineSeries {
            coeffs,
            phases,
            offset: 0.0,
            tail: None,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Attach an analytic geometric tail a_i = ratio^i for i > from.
    /// Rejected unless Σ a_i² < ∞ is provable, i.e. |ratio| < 1, and the
    /// tail starts at or after the last explicit coefficient.
    pub fn with_geometric_tail(mut self, tail: GeometricTail) -> Result<Self> {
        if tail.ratio.is_nan() || tail.ratio.abs() >= 1.0 {
            return Err(Error::FunctionSpec(format!(
                "tail ratio {} fails the square-summability gate |r| < 1",
                tail.ratio
            )));
        }
        if (tail.from as usize) < self.coeffs.len() {
            return Err(Error::FunctionSpec(
                "tail must start at or after the explicit coefficients".into(),
            ));
        }
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn tail(&self) -> Option<GeometricTail> {
        self.tail
    }

    /// Coefficient a_i (1-based); explicit list first, then the tail rule.
    pub fn coeff(&self, i: u32) -> f64 {
        if i == 0 {
            return 0.0;
        }
        if let Some(&a) = self.coeffs.get(i as usize - 1) {
            return a;
        }
        match self.tail {
            Some(t) if i > t.from => t.ratio.powi(i as i32),
            _ => 0.0,
        }
    }

    fn phase(&self, i: u32) -> f64 {
        self.phases.get(i as usize - 1).copied().unwrap_or(0.0)
    }

    /// 2 Σ_{i>m} |a_i| for the declared tail rule (0 without a tail).
    fn tail_osc_beyond(&self, m: u32) -> f64 {
        match self.tail {
            None => 0.0,
            Some(t) => {
                let start = m.max(t.from) + 1;
                let r = t.ratio.abs();
                if r == 0.0 {
                    0.0
                } else {
                    2.0 * r.powi(start as i32) / (1.0 - r)
                }
            }
        }
    }

    /// ℓ_q norm of the amplitude sequence, tail included. Factoring out
    /// the largest magnitude keeps the sum well-scaled for huge q (the
    /// dual exponent blows up as p approaches 1, where |a|^q underflows).
    fn amplitude_qnorm(&self, q: f64) -> f64 {
        let tail_peak = self
            .tail
            .map(|t| t.ratio.abs().powi(t.from as i32 + 1))
            .unwrap_or(0.0);
        let peak = self
            .coeffs
            .iter()
            .map(|a| a.abs())
            .fold(tail_peak, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut acc: f64 = self
            .coeffs
            .iter()
            .map(|a| (a.abs() / peak).powf(q))
            .sum();
        if let Some(t) = self.tail {
            let rq = t.ratio.abs().powf(q);
            if rq > 0.0 {
                // Σ_{i > from} (r^i / peak)^q
                acc += (t.ratio.abs().powi(t.from as i32 + 1) / peak).powf(q)
                    / (1.0 - rq);
            }
        }
        peak * acc.powf(1.0 / q)
    }

    /// Scale all amplitudes and the offset by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for a in &mut out.coeffs {
            *a *= s;
        }
        out.offset *= s;
        // a geometric tail does not survive scaling exactly; keep the rule
        // and scale its reported bounds through the trait wrapper instead
        out
    }
}

/// m_q = ∫₀¹ |sin(2πt)|^q dt, by adaptive Simpson quadrature to 1e-12,
/// cached per q. m_2 = 1/2 and m_1 = 2/π exactly.
pub fn sin_abs_q_moment(q: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&q.to_bits()) {
        return v;
    }
    // |sin| has quarter-period symmetry on [0,1]
    let f = |t: f64| (2.0 * PI * t).sin().powf(q);
    let v = 4.0 * adaptive_simpson(&f, 0.0, 0.25, 1e-13, 40);
    cache.lock().unwrap().insert(q.to_bits(), v);
    v
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, tol / 2.0, depth - 1)
                + rec(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, depth)
}

impl TorusFunction for CosineSeries {
    fn eval(&self, x: &TorusPoint) -> f64 {
        let mut acc = self.offset;
        for (k, &a) in self.coeffs.iter().enumerate() {
            if a != 0.0 {
                let i = k as u32 + 1;
                acc += a * (2.0 * PI * (x.coord(i).value() + self.phase(i))).cos();
            }
        }
        acc
    }

    fn partial(&self, i: u32, x: &TorusPoint) -> f64 {
        let a = self.coeff(i);
        if a == 0.0 {
            return 0.0;
        }
        -2.0 * PI * a * (2.0 * PI * (x.coord(i).value() + self.phase(i))).sin()
    }

    fn lipschitz_constant(&self, d: &DualExponent) -> f64 {
        // dual-norm bound on the gradient: |∇f|_q ≤ 2π ‖a‖_q pointwise
        2.0 * PI * self.amplitude_qnorm(d.q())
    }

    fn support_horizon(&self) -> u32 {
        // the analytic tail never enters evaluation, only bounds
        self.coeffs.len() as u32
    }

    fn tail_osc_bound(&self, horizon: u32) -> Option<f64> {
        let explicit: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| *k as u32 + 1 > horizon)
            .map(|(_, a)| 2.0 * a.abs())
            .sum();
        Some(explicit + self.tail_osc_beyond(horizon.max(self.coeffs.len() as u32)))
    }

    fn exact_partial_qnorm(&self, i: u32, d: &DualExponent) -> Option<f64> {
        let a = self.coeff(i);
        if a == 0.0 {
            return Some(0.0);
        }
        let q = d.q();
        Some((2.0 * PI * a.abs()).powf(q) * sin_abs_q_moment(q))
    }

    fn partial_qnorm_is_base_independent(&self) -> bool {
        true
    }

    fn exact_osc_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        // separable: each free cosine attains ±|a_i| independently
        let mut osc: f64 = 0.0;
        for (k, &a) in self.coeffs.iter().enumerate() {
            if sub.is_free(k as u32 + 1) {
                osc += 2.0 * a.abs();
            }
        }
        if sub.tail_policy() == crate::geometry::TailPolicy::FreeWithTailBound {
            osc += self.tail_osc_beyond(sub.horizon().max(self.coeffs.len() as u32));
        }
        Some(osc)
    }

    fn exact_mean_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        // free cosines integrate to zero; fixed ones contribute constants
        let mut mean = self.offset;
        for (k, &a) in self.coeffs.iter().enumerate() {
            let i = k as u32 + 1;
            if a != 0.0 && !sub.is_free(i) {
                mean += a * (2.0 * PI * (sub.fixed_value(i).value() + self.phase(i))).cos();
            }
        }
        Some(mean)
    }
}

/// Periodic multilinear interpolant of an n-dimensional value grid.
/// The almost-everywhere derivative along each axis is the piecewise
/// slope of the interpolant.
#[derive(Debug, Clone)]
pub struct FiniteGridFunction {
    resolution: Vec<usize>,
    values: Vec<f64>, // row-major, axis 0 slowest
}

impl FiniteGridFunction {
    pub fn new(resolution: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if resolution.is_empty() || resolution.contains(&0) {
            return Err(Error::FunctionSpec("empty grid resolution".into()));
        }
        let total: usize = resolution.iter().product();
        if values.len() != total {
            return Err(Error::FunctionSpec(format!(
                "grid needs {total} values, got {}",
                values.len()
            )));
        }
        Ok(FiniteGridFunction { resolution, values })
    }

    pub fn dimension(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    fn value_at(&self, idx: &[usize]) -> f64 {
        let mut flat = 0usize;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.resolution[k] + (i % self.resolution[k]);
        }
        self.values[flat]
    }

    /// Interpolate with per-axis weights; axes listed in `cells` hold the
    /// lower corner index and fractional offset.
    fn interpolate(&self, cells: &[(usize, f64)]) -> f64 {
        let n = cells.len();
        let mut acc = 0.0;
        let mut idx = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for (axis, &(i0, frac)) in cells.iter().enumerate() {
                if corner >> axis & 1 == 1 {
                    idx[axis] = i0 + 1;
                    w *= frac;
                } else {
                    idx[axis] = i0;
                    w *= 1.0 - frac;
                }
            }
            if w != 0.0 {
                acc += w * self.value_at(&idx);
            }
        }
        acc
    }

    fn cell_of(&self, x: &TorusPoint) -> Vec<(usize, f64)> {
        (0..self.resolution.len())
            .map(|axis| {
                let r = self.resolution[axis];
                let t = x.coord(axis as u32 + 1).value() * r as f64;
                let i0 = (t.floor() as usize).min(r - 1);
                (i0, t - i0 as f64)
            })
            .collect()
    }

    /// Largest slope along one axis over all grid edges.
    fn axis_slope(&self, axis: usize) -> f64 {
        let n = self.resolution.len();
        let total: usize = self.resolution.iter().product();
        let r = self.resolution[axis];
        let mut max_slope: f64 = 0.0;
        for flat in 0..total {
            // decode, step along the axis, re-encode
            let mut rem = flat;
            let mut idx = vec![0usize; n];
            for k in (0..n).rev() {
                idx[k] = rem % self.resolution[k];
                rem /= self.resolution[k];
            }
            let here = self.value_at(&idx);
            idx[axis] = (idx[axis] + 1) % r;
            let next = self.value_at(&idx);
            max_slope = max_slope.max((next - here).abs() * r as f64);
        }
        max_slope
    }
}

impl TorusFunction for FiniteGridFunction {
    fn eval(&self, x: &TorusPoint) -> f64 {
        self.interpolate(&self.cell_of(x))
    }

    fn partial(&self, i: u32, x: &TorusPoint) -> f64 {
        let axis = i as usize - 1;
        if axis >= self.resolution.len() {
            return 0.0;
        }
        let mut cells = self.cell_of(x);
        let (i0, _) = cells[axis];
        let r = self.resolution[axis];
        // difference of the two interpolated faces of the cell
        cells[axis] = (i0, 0.0);
        let lo = self.interpolate(&cells);
        cells[axis] = (i0, 1.0);
        let hi = self.interpolate(&cells);
        (hi - lo) * r as f64
    }

    fn lipschitz_constant(&self, d: &DualExponent) -> f64 {
        // Hölder: Σ L_i d(x_i,y_i) ≤ ‖L‖_q ‖d‖_p
        let q = d.q();
        let acc: f64 = (0..self.resolution.len())
            .map(|axis| self.axis_slope(axis).powf(q))
            .sum();
        acc.powf(1.0 / q)
    }

    fn support_horizon(&self) -> u32 {
        self.resolution.len() as u32
    }

    fn tail_osc_bound(&self, horizon: u32) -> Option<f64> {
        if horizon >= self.resolution.len() as u32 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// `inner` scaled by `scale`; used to normalize to unit Lipschitz constant.
pub struct Scaled {
    inner: Arc<dyn TorusFunction>,
    scale: f64,
}

impl Scaled {
    pub fn new(inner: Arc<dyn TorusFunction>, scale: f64) -> Self {
        Scaled { inner, scale }
    }
}

impl TorusFunction for Scaled {
    fn eval(&self, x: &TorusPoint) -> f64 {
        self.scale * self.inner.eval(x)
    }

    fn partial(&self, i: u32, x: &TorusPoint) -> f64 {
        self.scale * self.inner.partial(i, x)
    }

    fn lipschitz_constant(&self, d: &DualExponent) -> f64 {
        self.scale.abs() * self.inner.lipschitz_constant(d)
    }

    fn support_horizon(&self) -> u32 {
        self.inner.support_horizon()
    }

    fn tail_osc_bound(&self, horizon: u32) -> Option<f64> {
        self.inner
            .tail_osc_bound(horizon)
            .map(|b| self.scale.abs() * b)
    }

    fn exact_partial_qnorm(&self, i: u32, d: &DualExponent) -> Option<f64> {
        self.inner
            .exact_partial_qnorm(i, d)
            .map(|v| self.scale.abs().powf(d.q()) * v)
    }

    fn partial_qnorm_is_base_independent(&self) -> bool {
        self.inner.partial_qnorm_is_base_independent()
    }

    fn exact_osc_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        self.inner.exact_osc_on(sub).map(|v| self.scale.abs() * v)
    }

    fn exact_mean_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        self.inner.exact_mean_on(sub).map(|v| self.scale * v)
    }
}

/// Rescale `f` to Lipschitz constant exactly 1 under `d`. Returns the
/// wrapped function and the applied factor (1 for the zero function, which
/// is returned unchanged).
pub fn normalize_to_unit_lipschitz(
    f: Arc<dyn TorusFunction>,
    d: &DualExponent,
) -> (Arc<dyn TorusFunction>, f64) {
    let lip = f.lipschitz_constant(d);
    if lip == 0.0 {
        return (f, 1.0);
    }
    let factor = 1.0 / lip;
    (Arc::new(Scaled::new(f, factor)), factor)
}

/// The restriction of `inner` to a subtorus, reindexed so the subtorus's
/// free coordinates become coordinates 1, 2, … of a fresh torus.
pub struct Restriction {
    inner: Arc<dyn TorusFunction>,
    sub: SubtorusSpec,
    support_horizon: u32,
}

impl Restriction {
    pub fn new(inner: Arc<dyn TorusFunction>, sub: SubtorusSpec) -> Self {
        // positions of the inner support inside the free enumeration
        let support = (1..=inner.support_horizon())
            .filter_map(|i| sub.free_position(i))
            .max()
            .unwrap_or(0)
            .max(1);
        Restriction {
            inner,
            sub,
            support_horizon: support,
        }
    }

    pub fn subtorus(&self) -> &SubtorusSpec {
        &self.sub
    }

    /// Map a point of the restricted torus to the original space.
    pub fn embed(&self, y: &TorusPoint) -> TorusPoint {
        let horizon = self.inner.support_horizon().max(self.sub.horizon());
        let mut x = TorusPoint::origin(horizon);
        for i in 1..=horizon {
            let c = match self.sub.free_position(i) {
                Some(j) => y.coord(j),
                None => self.sub.fixed_value(i),
            };
            x.set(i, c);
        }
        x
    }

    fn original_index(&self, j: u32) -> Option<u32> {
        self.sub.nth_free(j)
    }
}

impl TorusFunction for Restriction {
    fn eval(&self, y: &TorusPoint) -> f64 {
        self.inner.eval(&self.embed(y))
    }

    fn partial(&self, j: u32, y: &TorusPoint) -> f64 {
        match self.original_index(j) {
            Some(i) => self.inner.partial(i, &self.embed(y)),
            None => 0.0,
        }
    }

    fn lipschitz_constant(&self, d: &DualExponent) -> f64 {
        // restriction to a parallel subtorus cannot increase the constant
        self.inner.lipschitz_constant(d)
    }

    fn support_horizon(&self) -> u32 {
        self.support_horizon
    }

    fn tail_osc_bound(&self, horizon: u32) -> Option<f64> {
        if horizon >= self.support_horizon {
            // original coordinates past the support contribute nothing, and
            // the inner tail rule bound carries over
            self.inner.tail_osc_bound(self.inner.support_horizon())
        } else {
            None
        }
    }

    fn exact_partial_qnorm(&self, j: u32, d: &DualExponent) -> Option<f64> {
        if !self.inner.partial_qnorm_is_base_independent() {
            return None;
        }
        match self.original_index(j) {
            Some(i) => self.inner.exact_partial_qnorm(i, d),
            None => Some(0.0),
        }
    }

    fn partial_qnorm_is_base_independent(&self) -> bool {
        self.inner.partial_qnorm_is_base_independent()
    }

    fn exact_osc_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        let original = self.sub.compose(sub).ok()?;
        self.inner.exact_osc_on(&original)
    }

    fn exact_mean_on(&self, sub: &SubtorusSpec) -> Option<f64> {
        let original = self.sub.compose(sub).ok()?;
        self.inner.exact_mean_on(&original)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{TailPolicy, TorusCoordinate};
    use std::collections::{BTreeMap, BTreeSet};

    fn d(p: f64) -> DualExponent {
        DualExponent::new(p).unwrap()
    }

    #[test]
    fn cosine_eval_examples() {
        let f = CosineSeries::new(vec![1.0]);
        assert!((f.eval(&TorusPoint::from_coords(&[0.0])) - 1.0).abs() < 1e-15);
        let f = CosineSeries::new(vec![1.0, 0.5]);
        let x = TorusPoint::from_coords(&[0.5, 0.0]);
        assert!((f.eval(&x) - (-0.5)).abs() < 1e-15);
        let f = CosineSeries::new(vec![0.0, 0.0, 0.0]);
        assert_eq!(f.eval(&TorusPoint::from_coords(&[0.3, 0.9, 0.1])), 0.0);
    }

    #[test]
    fn cosine_lipschitz_examples() {
        let f = CosineSeries::new(vec![1.0]);
        assert!((f.lipschitz_constant(&d(2.0)) - 2.0 * PI).abs() < 1e-12);
        let f = CosineSeries::new(vec![3.0, 4.0]);
        assert!((f.lipschitz_constant(&d(2.0)) - 10.0 * PI).abs() < 1e-12);
        let f = CosineSeries::new(vec![1.0, 1.0]);
        assert!((f.lipschitz_constant(&d(f64::INFINITY)) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn partial_qnorm_examples() {
        let f = CosineSeries::new(vec![1.0, 0.0]);
        assert_eq!(f.exact_partial_qnorm(2, &d(2.0)), Some(0.0));
        let v = f.exact_partial_qnorm(1, &d(2.0)).unwrap();
        assert!((v - 2.0 * PI * PI).abs() < 1e-9, "got {v}");
        let v = f.exact_partial_qnorm(1, &d(f64::INFINITY)).unwrap();
        assert!((v - 4.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn sin_moment_matches_closed_form() {
        // m_q = Γ((q+1)/2) / (√π Γ(q/2 + 1))
        use crate::constants::ln_gamma;
        for &q in &[1.0, 4.0 / 3.0, 1.5, 2.0, 3.0, 5.7] {
            let exact = (ln_gamma((q + 1.0) / 2.0)
                - 0.5 * PI.ln()
                - ln_gamma(q / 2.0 + 1.0))
            .exp();
            let got = sin_abs_q_moment(q);
            assert!((got - exact).abs() < 1e-11, "q={q}: {got} vs {exact}");
        }
        assert!((sin_abs_q_moment(2.0) - 0.5).abs() < 1e-12);
        assert!((sin_abs_q_moment(1.0) - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn osc_on_subtorus_examples() {
        let f = CosineSeries::new(vec![1.0, 0.5]);
        let base = TorusPoint::origin(2);
        let point = SubtorusSpec::point(&base);
        assert_eq!(f.exact_osc_on(&point), Some(0.0));
        let full = SubtorusSpec::full_torus(2);
        assert!((f.exact_osc_on(&full).unwrap() - 3.0).abs() < 1e-15);
        let mut fixed = BTreeMap::new();
        fixed.insert(1, TorusCoordinate::new(0.0));
        let only2 = SubtorusSpec::new(
            2,
            BTreeSet::from([2]),
            fixed,
            TailPolicy::FixedAtBase,
        )
        .unwrap();
        assert!((f.exact_osc_on(&only2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let f: Arc<dyn TorusFunction> = Arc::new(CosineSeries::new(vec![3.0, 4.0]));
        let (g, factor) = normalize_to_unit_lipschitz(f, &d(2.0));
        assert!((factor - 1.0 / (10.0 * PI)).abs() < 1e-15);
        assert!((g.lipschitz_constant(&d(2.0)) - 1.0).abs() < 1e-12);
        let zero: Arc<dyn TorusFunction> = Arc::new(CosineSeries::new(vec![0.0]));
        let (_, factor) = normalize_to_unit_lipschitz(zero, &d(2.0));
        assert_eq!(factor, 1.0);
    }

    #[test]
    fn cosine_partial_matches_finite_differences() {
        let f = CosineSeries::with_phases(vec![0.8, 0.3], vec![0.2, 0.65]).unwrap();
        let x = TorusPoint::from_coords(&[0.31, 0.77]);
        let h = 1e-5;
        for i in 1..=2u32 {
            let xp = x.clone().with_coord(i, x.coord(i).shifted(h));
            let xm = x.clone().with_coord(i, x.coord(i).shifted(-h));
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            assert!(
                (fd - f.partial(i, &x)).abs() < 1e-6,
                "i={i}: {fd} vs {}",
                f.partial(i, &x)
            );
        }
    }

    #[test]
    fn tail_gate_rejects_divergent_series() {
        let err = CosineSeries::new(vec![0.5])
            .with_geometric_tail(GeometricTail { ratio: 1.0, from: 1 });
        assert!(err.is_err());
        let ok = CosineSeries::new(vec![0.5])
            .with_geometric_tail(GeometricTail { ratio: 0.5, from: 1 });
        assert!(ok.is_ok());
    }

    #[test]
    fn tail_osc_bound_geometric() {
        let f = CosineSeries::new(vec![0.5])
            .with_geometric_tail(GeometricTail { ratio: 0.5, from: 1 })
            .unwrap();
        // 2 Σ_{i>2} 0.5^i = 2 · 0.25 = 0.5... for horizon 2: 2·(0.125/0.5) = 0.5
        let b = f.tail_osc_bound(2).unwrap();
        assert!((b - 0.5).abs() < 1e-12, "got {b}");
        // full oscillation over everything adds the whole tail: 2·0.5 + 2·(0.25/0.5)...
        let full = SubtorusSpec::full_torus(1);
        let osc = f.exact_osc_on(&full).unwrap();
        assert!((osc - (1.0 + 1.0)).abs() < 1e-12, "got {osc}");
    }

    #[test]
    fn grid_interpolation_and_lipschitz() {
        // 1-D sawtooth-ish grid on 4 cells
        let g = FiniteGridFunction::new(vec![4], vec![0.0, 1.0, 0.0, -1.0]).unwrap();
        let x = TorusPoint::from_coords(&[0.125]);
        assert!((g.eval(&x) - 0.5).abs() < 1e-12);
        // slope of the first cell is (1-0)/(1/4) = 4
        assert!((g.partial(1, &x) - 4.0).abs() < 1e-12);
        // every cell rises or falls by 1 over width 1/4
        assert!((g.lipschitz_constant(&d(2.0)) - 4.0).abs() < 1e-12);
        // periodicity across the seam
        let a = g.eval(&TorusPoint::from_coords(&[0.999999]));
        let b = g.eval(&TorusPoint::from_coords(&[0.0]));
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn grid_2d_matches_corner_values() {
        let g = FiniteGridFunction::new(vec![2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((g.eval(&TorusPoint::from_coords(&[0.0, 0.0])) - 0.0).abs() < 1e-12);
        assert!((g.eval(&TorusPoint::from_coords(&[0.0, 0.5])) - 1.0).abs() < 1e-12);
        assert!((g.eval(&TorusPoint::from_coords(&[0.5, 0.0])) - 2.0).abs() < 1e-12);
        assert!((g.eval(&TorusPoint::from_coords(&[0.5, 0.5])) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn restriction_reindexes_and_forwards_oracles() {
        let f: Arc<dyn TorusFunction> =
            Arc::new(CosineSeries::new(vec![0.3, 0.0, 0.2, 0.1]));
        let mut fixed = BTreeMap::new();
        fixed.insert(1, TorusCoordinate::new(0.25));
        fixed.insert(2, TorusCoordinate::new(0.0));
        let sub = SubtorusSpec::new(
            4,
            BTreeSet::from([3, 4]),
            fixed,
            TailPolicy::FreeWithTailBound,
        )
        .unwrap();
        let r = Restriction::new(f.clone(), sub);
        // restricted coordinate 1 is original coordinate 3
        let y = TorusPoint::from_coords(&[0.0, 0.0]);
        let expect = 0.3 * (2.0 * PI * 0.25f64).cos() + 0.2 + 0.1;
        assert!((r.eval(&y) - expect).abs() < 1e-12);
        let q2 = d(2.0);
        assert_eq!(
            r.exact_partial_qnorm(1, &q2),
            f.exact_partial_qnorm(3, &q2)
        );
        let full = SubtorusSpec::full_torus(2);
        // free coords of the restriction are originals 3, 4 plus the tail
        let osc = r.exact_osc_on(&full).unwrap();
        assert!((osc - (0.4 + 0.2)).abs() < 1e-12, "got {osc}");
    }
}
