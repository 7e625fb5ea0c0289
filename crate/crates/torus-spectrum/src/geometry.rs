//! Points, ℓ_p metrics, and parallel-subtorus descriptions on truncations
//! of the infinite-dimensional torus.
//!
//! Coordinates are indexed from 1. A point stores only the coordinates it
//! mentions; missing indices take the convention value 0. Distances are
//! computed over the explicit truncation, which can only underestimate the
//! infinite-dimensional distance, so every Lipschitz hypothesis checked
//! against the truncated metric is at least as strong as the real one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// A point of the circle ℝ/ℤ, stored by its canonical representative in [0,1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusCoordinate(f64);

impl TorusCoordinate {
    /// Wrap an arbitrary real onto [0,1).
    pub fn new(v: f64) -> Self {
        let mut r = v.rem_euclid(1.0);
        // rem_euclid can return 1.0 for tiny negatives
        if r >= 1.0 {
            r = 0.0;
        }
        TorusCoordinate(r)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Translate along the circle.
    pub fn shifted(self, delta: f64) -> Self {
        Self::new(self.0 + delta)
    }
}

/// Distance in the circle ℝ/ℤ: min(|x−y|, 1−|x−y|) ∈ [0, 1/2].
pub fn circle_dist(x: TorusCoordinate, y: TorusCoordinate) -> f64 {
    let d = (x.value() - y.value()).abs();
    d.min(1.0 - d)
}

/// The pair (p, q) with q = p/(p−1) and q = 1 for p = ∞. Only p > 1 is
/// admitted; the underlying results are proved for p ∈ (1, ∞] and the
/// p = 1 case is left open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualExponent {
    p: f64,
    q: f64,
}

impl DualExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        let q = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
        Ok(DualExponent { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }
}

/// A point of a finite truncation of the torus. Coordinates not present in
/// the map are 0 by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    ambient_dim: u32,
    coords: BTreeMap<u32, TorusCoordinate>,
}

impl TorusPoint {
    pub fn origin(ambient_dim: u32) -> Self {
        TorusPoint {
            ambient_dim,
            coords: BTreeMap::new(),
        }
    }

    pub fn from_coords(values: &[f64]) -> Self {
        let coords = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as u32 + 1, TorusCoordinate::new(v)))
            .collect();
        TorusPoint {
            ambient_dim: values.len() as u32,
            coords,
        }
    }

    pub fn ambient_dim(&self) -> u32 {
        self.ambient_dim
    }

    pub fn coord(&self, i: u32) -> TorusCoordinate {
        self.coords
            .get(&i)
            .copied()
            .unwrap_or(TorusCoordinate(0.0))
    }

    pub fn set(&mut self, i: u32, c: TorusCoordinate) {
        assert!(
            i >= 1 && i <= self.ambient_dim,
            "coordinate index {i} out of 1..={}",
            self.ambient_dim
        );
        self.coords.insert(i, c);
    }

    pub fn with_coord(mut self, i: u32, c: TorusCoordinate) -> Self {
        self.set(i, c);
        self
    }

    /// Explicitly stored coordinates, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, TorusCoordinate)> + '_ {
        self.coords.iter().map(|(&i, &c)| (i, c))
    }

    /// ℓ_p distance over the explicit truncation; sup metric for p = ∞.
    pub fn dist_p(&self, other: &TorusPoint, d: &DualExponent) -> Result<f64> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, other.ambient_dim));
        }
        let indices: BTreeSet<u32> = self
            .coords
            .keys()
            .chain(other.coords.keys())
            .copied()
            .collect();
        if d.is_infinite() {
            let mut sup: f64 = 0.0;
            for i in indices {
                sup = sup.max(circle_dist(self.coord(i), other.coord(i)));
            }
            return Ok(sup);
        }
        let p = d.p();
        let mut acc = 0.0;
        for i in indices {
            acc += circle_dist(self.coord(i), other.coord(i)).powf(p);
        }
        Ok(acc.powf(1.0 / p))
    }
}

/// What happens to coordinates beyond the truncation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// Indices above the horizon are pinned at the base point (value 0 by
    /// the default convention).
    #[serde(rename = "fixed")]
    FixedAtBase,
    /// Indices above the horizon are all free; oscillation reports add the
    /// function family's certified tail bound.
    #[serde(rename = "free")]
    FreeWithTailBound,
}

/// A parallel subtorus of a truncation: an explicit free-coordinate set,
/// fixed values on the rest of 1..=horizon, and a tail policy beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtorusSpec {
    horizon: u32,
    free: BTreeSet<u32>,
    fixed: BTreeMap<u32, TorusCoordinate>,
    #[serde(rename = "tail")]
    tail_policy: TailPolicy,
}

impl SubtorusSpec {
    pub fn new(
        horizon: u32,
        free: BTreeSet<u32>,
        fixed: BTreeMap<u32, TorusCoordinate>,
        tail_policy: TailPolicy,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSubtorus("horizon must be positive".into()));
        }
        for &i in &free {
            if i == 0 || i > horizon {
                return Err(Error::InvalidSubtorus(format!(
                    "free index {i} outside 1..={horizon}"
                )));
            }
            if fixed.contains_key(&i) {
                return Err(Error::InvalidSubtorus(format!(
                    "index {i} is both free and fixed"
                )));
            }
        }
        for i in 1..=horizon {
            if !free.contains(&i) && !fixed.contains_key(&i) {
                return Err(Error::InvalidSubtorus(format!(
                    "index {i} is neither free nor fixed"
                )));
            }
        }
        for &i in fixed.keys() {
            if i == 0 || i > horizon {
                return Err(Error::InvalidSubtorus(format!(
                    "fixed index {i} outside 1..={horizon}"
                )));
            }
        }
        Ok(SubtorusSpec {
            horizon,
            free,
            fixed,
            tail_policy,
        })
    }

    /// The whole truncated torus: every index free, tail free.
    pub fn full_torus(horizon: u32) -> Self {
        SubtorusSpec {
            horizon,
            free: (1..=horizon).collect(),
            fixed: BTreeMap::new(),
            tail_policy: TailPolicy::FreeWithTailBound,
        }
    }

    /// A single base point: nothing free up to the horizon, tail pinned.
    pub fn point(base: &TorusPoint) -> Self {
        let horizon = base.ambient_dim().max(1);
        let fixed = (1..=horizon).map(|i| (i, base.coord(i))).collect();
        SubtorusSpec {
            horizon,
            free: BTreeSet::new(),
            fixed,
            tail_policy: TailPolicy::FixedAtBase,
        }
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail_policy
    }

    pub fn free_set(&self) -> &BTreeSet<u32> {
        &self.free
    }

    pub fn fixed_map(&self) -> &BTreeMap<u32, TorusCoordinate> {
        &self.fixed
    }

    pub fn is_free(&self, i: u32) -> bool {
        if i > self.horizon {
            return self.tail_policy == TailPolicy::FreeWithTailBound;
        }
        self.free.contains(&i)
    }

    /// Fixed value at a non-free index (0 beyond the horizon by convention).
    pub fn fixed_value(&self, i: u32) -> TorusCoordinate {
        self.fixed
            .get(&i)
            .copied()
            .unwrap_or(TorusCoordinate(0.0))
    }

    /// The j-th free coordinate (1-based) in increasing index order. Under
    /// the free-tail policy the enumeration continues past the horizon.
    pub fn nth_free(&self, j: u32) -> Option<u32> {
        assert!(j >= 1);
        let k = self.free.len() as u32;
        if j <= k {
            return self.free.iter().nth(j as usize - 1).copied();
        }
        match self.tail_policy {
            TailPolicy::FreeWithTailBound => Some(self.horizon + (j - k)),
            TailPolicy::FixedAtBase => None,
        }
    }

    /// Inverse of `nth_free`: the position of original index `i` in the free
    /// enumeration, if `i` is free.
    pub fn free_position(&self, i: u32) -> Option<u32> {
        if i > self.horizon {
            return match self.tail_policy {
                TailPolicy::FreeWithTailBound => {
                    Some(self.free.len() as u32 + (i - self.horizon))
                }
                TailPolicy::FixedAtBase => None,
            };
        }
        self.free
            .iter()
            .position(|&f| f == i)
            .map(|pos| pos as u32 + 1)
    }

    /// Draw a uniform point of the subtorus, materialized up to
    /// `eval_horizon` coordinates: free coordinates i.i.d. uniform on [0,1),
    /// fixed coordinates copied verbatim. Coordinates are drawn in index
    /// order so the consumed stream length is deterministic.
    pub fn sample_point(&self, eval_horizon: u32, rng: &mut RandomStream) -> TorusPoint {
        let mut point = TorusPoint::origin(eval_horizon);
        for i in 1..=eval_horizon {
            let c = if self.is_free(i) {
                TorusCoordinate::new(rng.uniform01())
            } else {
                self.fixed_value(i)
            };
            point.set(i, c);
        }
        point
    }

    /// Compose a parent subtorus with a child expressed in the parent's
    /// free-coordinate enumeration, producing a subtorus of the original
    /// space. Requires the free-tail policy on both (the pinned-tail case
    /// has no faithful finite composition).
    pub fn compose(&self, child: &SubtorusSpec) -> Result<SubtorusSpec> {
        if self.tail_policy != TailPolicy::FreeWithTailBound
            || child.tail_policy != TailPolicy::FreeWithTailBound
        {
            return Err(Error::InvalidSubtorus(
                "composition requires the free-tail policy on both specs".into(),
            ));
        }
        // Original index of the child's horizon-th free coordinate; beyond
        // it every parent-free coordinate stays free.
        let cutoff = self
            .nth_free(child.horizon)
            .ok_or_else(|| Error::Invariant("free enumeration ended early".into()))?;
        let horizon = cutoff.max(self.horizon);
        let mut free = BTreeSet::new();
        let mut fixed = BTreeMap::new();
        for i in 1..=horizon {
            match self.free_position(i) {
                None => {
                    fixed.insert(i, self.fixed_value(i));
                }
                Some(j) if j <= child.horizon => {
                    if child.is_free(j) {
                        free.insert(i);
                    } else {
                        fixed.insert(i, child.fixed_value(j));
                    }
                }
                Some(_) => {
                    // parent-free beyond the child's horizon: free tail
                    free.insert(i);
                }
            }
        }
        SubtorusSpec::new(horizon, free, fixed, TailPolicy::FreeWithTailBound)
    }

    /// True when `other`'s free coordinates are contained in ours and the
    /// fixed assignments agree wherever both fix an index.
    pub fn contains(&self, other: &SubtorusSpec) -> bool {
        for &i in &other.free {
            if !self.is_free(i) {
                return false;
            }
        }
        for (&i, &v) in &other.fixed {
            if !self.is_free(i) && self.fixed_value(i) != v {
                return false;
            }
        }
        true
    }
}
