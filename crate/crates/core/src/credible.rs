//! Robust credible intervals over the prior set.
//!
//! Each prior weight `t` gives a Dirichlet posterior and its own credible
//! interval for a statistic. A robust interval has coverage at least `alpha`
//! under every posterior. Two constructions are offered: the hull of per-prior
//! shortest intervals over a finite set of weights, and a robust mean interval
//! widened by `kappa(alpha)` posterior standard deviations.

use crate::error::{IdmError, Result};
use crate::model::{Counts, IdmConfig, Interval, IntervalKind, TVector};
use crate::oracle::{mc_functional_on_stream, McSpec, MIN_SAMPLES};
use crate::special::kappa_from_alpha;

/// Which side(s) of the posterior the interval constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CredibleMode {
    /// Shortest window holding mass `alpha`.
    TwoSidedShortest,
    /// `[a, +inf)` with `P(x >= a) >= alpha`.
    OneSidedLower,
    /// `(-inf, b]` with `P(x <= b) >= alpha`.
    OneSidedUpper,
}

impl CredibleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CredibleMode::TwoSidedShortest => "two_sided_shortest",
            CredibleMode::OneSidedLower => "one_sided_lower",
            CredibleMode::OneSidedUpper => "one_sided_upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleSpec {
    alpha: f64,
    mode: CredibleMode,
    gaussian_approx: bool,
}

impl CredibleSpec {
    pub fn new(alpha: f64, mode: CredibleMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(IdmError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, mode, gaussian_approx: false })
    }

    /// Use `mean -/+ kappa * sd` per prior instead of sample quantiles.
    pub fn with_gaussian_approx(mut self, on: bool) -> Self {
        self.gaussian_approx = on;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> CredibleMode {
        self.mode
    }

    pub fn gaussian_approx(&self) -> bool {
        self.gaussian_approx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CredibleMethod {
    UnionOfPriors,
    MeanPlusKappaSigma,
}

impl CredibleMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CredibleMethod::UnionOfPriors => "union_of_priors",
            CredibleMethod::MeanPlusKappaSigma => "mean_plus_kappa_sigma",
        }
    }
}

/// Posterior summary and credible interval for one prior weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDetail {
    /// Vertex index when `t` is a corner of the simplex.
    pub vertex: Option<usize>,
    pub t: TVector,
    pub mean: f64,
    pub std_dev: f64,
    pub lower: f64,
    pub upper: f64,
    /// Fraction of this prior's samples inside the robust interval.
    pub coverage: f64,
}

impl PriorDetail {
    /// Distance from the mean up to the upper end.
    pub fn half_width_above(&self) -> f64 {
        self.upper - self.mean
    }

    /// Distance from the lower end up to the mean.
    pub fn half_width_below(&self) -> f64 {
        self.mean - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustCredibleResult {
    pub interval: Interval,
    pub alpha: f64,
    pub mode: CredibleMode,
    pub gaussian_approx: bool,
    pub per_prior: Vec<PriorDetail>,
    pub method: CredibleMethod,
}

fn window_len(alpha: f64, m: usize) -> usize {
    // The small offset keeps alpha * m that is integral up to rounding from
    // rounding up to the next window size.
    ((alpha * m as f64 - 1e-9).ceil() as usize).clamp(1, m)
}

fn check_samples(sorted: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(IdmError::InvalidAlpha(alpha));
    }
    if sorted.len() < MIN_SAMPLES {
        return Err(IdmError::TooFewSamples { needed: MIN_SAMPLES, found: sorted.len() });
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(IdmError::UnsortedSamples);
    }
    Ok(())
}

/// Narrowest window of `ceil(alpha m)` consecutive sorted samples.
/// Ties go to the leftmost window.
pub fn shortest_interval_from_samples(sorted: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_samples(sorted, alpha)?;
    let k = window_len(alpha, sorted.len());
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for start in 0..=sorted.len() - k {
        let width = sorted[start + k - 1] - sorted[start];
        if width < best_width {
            best_width = width;
            best = start;
        }
    }
    Ok((sorted[best], sorted[best + k - 1]))
}

/// Largest `a` with at least `ceil(alpha m)` samples at or above it.
pub fn lower_bound_from_samples(sorted: &[f64], alpha: f64) -> Result<f64> {
    check_samples(sorted, alpha)?;
    let k = window_len(alpha, sorted.len());
    Ok(sorted[sorted.len() - k])
}

/// Smallest `b` with at least `ceil(alpha m)` samples at or below it.
pub fn upper_bound_from_samples(sorted: &[f64], alpha: f64) -> Result<f64> {
    check_samples(sorted, alpha)?;
    let k = window_len(alpha, sorted.len());
    Ok(sorted[k - 1])
}

/// The `d` simplex vertices followed by the center.
pub fn default_t_set(d: usize) -> Result<Vec<TVector>> {
    let mut out = (0..d).map(|i| TVector::vertex(d, i)).collect::<Result<Vec<_>>>()?;
    if d > 1 {
        out.push(TVector::center(d)?);
    }
    Ok(out)
}

/// Hull of the per-prior credible intervals over `t_set`.
///
/// Prior `k` in `t_set` samples on Monte-Carlo stream `k`, so results depend
/// only on the seed and the order of `t_set`. In the one-sided modes the
/// open end is infinite and the finite end is the extreme per-prior bound.
pub fn robust_credible_union<F>(
    stat: F,
    counts: &Counts,
    cfg: &IdmConfig,
    spec: &CredibleSpec,
    mc: &McSpec,
    t_set: &[TVector],
) -> Result<RobustCredibleResult>
where
    F: Fn(&[f64]) -> f64,
{
    if t_set.is_empty() {
        return Err(IdmError::EmptyPriorSet);
    }
    let kappa = kappa_from_alpha(spec.alpha)?;
    let mut per_prior = Vec::with_capacity(t_set.len());
    let mut all_samples = Vec::with_capacity(t_set.len());
    for (k, t) in t_set.iter().enumerate() {
        let summary = mc_functional_on_stream(&stat, counts, cfg, t, mc, k as u64)?;
        let samples = &summary.sorted_samples;
        let (lower, upper) = if spec.gaussian_approx {
            let (lo, hi) = (summary.mean - kappa * summary.std_dev, summary.mean + kappa * summary.std_dev);
            match spec.mode {
                CredibleMode::TwoSidedShortest => (lo, hi),
                CredibleMode::OneSidedLower => (lo, f64::INFINITY),
                CredibleMode::OneSidedUpper => (f64::NEG_INFINITY, hi),
            }
        } else {
            match spec.mode {
                CredibleMode::TwoSidedShortest => shortest_interval_from_samples(samples, spec.alpha)?,
                CredibleMode::OneSidedLower => (lower_bound_from_samples(samples, spec.alpha)?, f64::INFINITY),
                CredibleMode::OneSidedUpper => (f64::NEG_INFINITY, upper_bound_from_samples(samples, spec.alpha)?),
            }
        };
        per_prior.push(PriorDetail {
            vertex: t.vertex_index(),
            t: t.clone(),
            mean: summary.mean,
            std_dev: summary.std_dev,
            lower,
            upper,
            coverage: 0.0,
        });
        all_samples.push(summary.sorted_samples);
    }
    let lower = per_prior.iter().map(|p| p.lower).fold(f64::INFINITY, f64::min);
    let upper = per_prior.iter().map(|p| p.upper).fold(f64::NEG_INFINITY, f64::max);
    for (p, samples) in per_prior.iter_mut().zip(&all_samples) {
        let inside = samples.partition_point(|&x| x <= upper) - samples.partition_point(|&x| x < lower);
        p.coverage = inside as f64 / samples.len() as f64;
    }
    Ok(RobustCredibleResult {
        interval: Interval::new(lower, upper, IntervalKind::ConservativeOuter)?,
        alpha: spec.alpha,
        mode: spec.mode,
        gaussian_approx: spec.gaussian_approx,
        per_prior,
        method: CredibleMethod::UnionOfPriors,
    })
}

/// `[mean_lo - kappa sigma, mean_hi + kappa sigma]` for a robust mean interval.
///
/// `sigma_star` is a posterior standard deviation at one reference prior.
/// Since the standard deviation itself varies with the prior, this can
/// undercover slightly; the error is of higher order in `1/n` than the width.
pub fn mean_plus_kappa_sigma(robust_mean: &Interval, sigma_star: f64, alpha: f64) -> Result<Interval> {
    if !(sigma_star >= 0.0) {
        return Err(IdmError::NegativeSigma(sigma_star));
    }
    let pad = kappa_from_alpha(alpha)? * sigma_star;
    Interval::new(robust_mean.lower() - pad, robust_mean.upper() + pad, IntervalKind::ConservativeOuter)
}
