//! Counts, prior weights and the map from prior weights to posterior means.
//!
//! Every estimator in this crate is a function of the posterior mean vector
//! `u_i = (n_i + s t_i) / (n + s)`, where `n` are the observed counts, `s` the
//! prior strength and `t` a point of the closed probability simplex. As `t`
//! ranges over the simplex, `u` ranges over the shifted simplex whose lowest
//! corner is the improper base point `u0 = n / (n + s)`.

use crate::error::{IdmError, Result};

/// Tolerance on the unit-sum constraint of prior weight vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Per-category observation counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Counts(Vec<u64>);

impl Counts {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(IdmError::EmptyCounts);
        }
        Ok(Self(values))
    }

    /// `d` zero counts.
    pub fn zeros(d: usize) -> Result<Self> {
        Self::new(vec![0; d])
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    /// Number of categories `d`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total sample size `n`.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Counts multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self(self.0.iter().map(|&c| c * k).collect())
    }
}

impl TryFrom<Vec<u64>> for Counts {
    type Error = IdmError;

    fn try_from(values: Vec<u64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Prior strength `s` of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmConfig {
    s: f64,
}

impl IdmConfig {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(IdmError::InvalidHyperparameter(s));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Whether `s` lies in the commonly recommended range `[1, 2]`.
    pub fn is_conventional(&self) -> bool {
        (1.0..=2.0).contains(&self.s)
    }
}

impl Default for IdmConfig {
    fn default() -> Self {
        Self { s: 1.0 }
    }
}

/// A point `t` of the closed probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct TVector(Vec<f64>);

impl TVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(IdmError::InvalidWeights("empty vector".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(IdmError::InvalidWeights(format!("entry {bad} outside [0, 1]")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(IdmError::InvalidWeights(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self(values))
    }

    /// The simplex vertex `e_i` in dimension `d`.
    pub fn vertex(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(IdmError::DimensionMismatch { expected: d, found: i + 1 });
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Ok(Self(v))
    }

    /// The simplex center `t_i = 1/d`.
    pub fn center(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(IdmError::InvalidWeights("empty vector".into()));
        }
        Ok(Self(vec![1.0 / d as f64; d]))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the unit entry if this is a simplex vertex.
    pub fn vertex_index(&self) -> Option<usize> {
        let ones: Vec<usize> = (0..self.0.len()).filter(|&i| self.0[i] == 1.0).collect();
        match ones.as_slice() {
            [i] if self.0.iter().filter(|&&v| v != 0.0).count() == 1 => Some(*i),
            _ => None,
        }
    }
}

/// Which set a [`UPoint`] is known to belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Image of the closed simplex: `u_i >= u0_i`, `sum u = 1`.
    Shifted,
    /// Relaxed set with `sum u <= 1`; holds the improper base point `u0`.
    Extended,
}

/// Posterior mean vector `u` together with `n + s` and `sigma = s / (n + s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UPoint {
    values: Vec<f64>,
    n_plus_s: f64,
    sigma: f64,
    region: Region,
}

impl UPoint {
    /// Builds a point from raw parts. Callers are responsible for the region tag.
    pub fn from_parts(values: Vec<f64>, n_plus_s: f64, sigma: f64, region: Region) -> Self {
        Self { values, n_plus_s, sigma, region }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `N = n + s`, the total posterior concentration.
    pub fn n_plus_s(&self) -> f64 {
        self.n_plus_s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Recovers `t` from `u` for the given data: `t_i = (u_i (n+s) - n_i) / s`,
    /// clamped to `[0, 1]` against rounding.
    pub fn to_t(&self, counts: &Counts, cfg: &IdmConfig) -> Vec<f64> {
        self.values
            .iter()
            .zip(counts.values())
            .map(|(&u, &n)| ((u * self.n_plus_s - n as f64) / cfg.s()).clamp(0.0, 1.0))
            .collect()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Guarantee attached to an [`Interval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    /// The true robust interval, up to floating point.
    Exact,
    /// Guaranteed to contain the true robust interval.
    ConservativeOuter,
    /// Both endpoints are attained values, so the interval lies inside the true one.
    InnerWitness,
    /// Produced by brute-force search or sampling.
    Oracle,
}

impl IntervalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalKind::Exact => "exact",
            IntervalKind::ConservativeOuter => "conservative_outer",
            IntervalKind::InnerWitness => "inner_witness",
            IntervalKind::Oracle => "oracle",
        }
    }
}

/// Slack allowed on `lower <= upper`.
pub const INTERVAL_TOL: f64 = 1e-12;

/// A `[lower, upper]` range with its guarantee kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
    kind: IntervalKind,
}

impl Interval {
    pub fn new(lower: f64, upper: f64, kind: IntervalKind) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper + INTERVAL_TOL {
            return Err(IdmError::InvertedInterval { lower, upper });
        }
        Ok(Self { lower, upper, kind })
    }

    pub fn point(value: f64, kind: IntervalKind) -> Self {
        Self { lower: value, upper: value, kind }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn kind(&self) -> IntervalKind {
        self.kind
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }

    /// Whether `other` lies inside `self` up to `slack` at both ends.
    pub fn contains_interval(&self, other: &Interval, slack: f64) -> bool {
        other.lower >= self.lower - slack && other.upper <= self.upper + slack
    }

    /// Same endpoints with every value multiplied by a positive factor.
    pub fn scaled(&self, factor: f64) -> Self {
        debug_assert!(factor > 0.0);
        Self { lower: self.lower * factor, upper: self.upper * factor, kind: self.kind }
    }
}

/// `sigma = s / (n + s)`, the width of the shifted simplex along each axis.
pub fn sigma(counts: &Counts, cfg: &IdmConfig) -> f64 {
    cfg.s() / (counts.total() as f64 + cfg.s())
}

/// Maps prior weights to posterior means: `u_i = (n_i + s t_i) / (n + s)`.
pub fn u_from_t(counts: &Counts, cfg: &IdmConfig, t: &TVector) -> Result<UPoint> {
    if t.len() != counts.len() {
        return Err(IdmError::DimensionMismatch { expected: counts.len(), found: t.len() });
    }
    let s = cfg.s();
    let n_plus_s = counts.total() as f64 + s;
    let values = counts.values().iter().zip(t.values()).map(|(&n, &ti)| (n as f64 + s * ti) / n_plus_s).collect();
    Ok(UPoint::from_parts(values, n_plus_s, s / n_plus_s, Region::Shifted))
}

/// The improper base point `u0_i = n_i / (n + s)` (the image of `t = 0`).
pub fn u_zero(counts: &Counts, cfg: &IdmConfig) -> UPoint {
    let n_plus_s = counts.total() as f64 + cfg.s();
    let values = counts.values().iter().map(|&n| n as f64 / n_plus_s).collect();
    UPoint::from_parts(values, n_plus_s, cfg.s() / n_plus_s, Region::Extended)
}

/// `u` at the simplex vertex `t = e_i`.
pub fn u_at_vertex(counts: &Counts, cfg: &IdmConfig, i: usize) -> Result<UPoint> {
    u_from_t(counts, cfg, &TVector::vertex(counts.len(), i)?)
}
