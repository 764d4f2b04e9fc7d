//! Exact robust intervals for separable concave estimators `F(u) = sum_i f(u_i)`.
//!
//! The minimum over the shifted simplex sits at the vertex that puts all prior
//! mass on the most frequent category. The maximum is found by water-filling:
//! the smallest components are raised to a common level `u_tilde` until the
//! prior mass is used up.

use std::fmt;
use std::sync::Arc;

use crate::error::{IdmError, Result};
use crate::model::{u_at_vertex, u_zero, Counts, IdmConfig, Interval, IntervalKind, Region, TVector, UPoint};
use crate::special::EntropyContext;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid size used by the concavity certificate.
const CERT_GRID: usize = 101;
const CERT_TOL: f64 = 1e-10;

/// A scalar summand `f` on `[0, 1]`, its derivative, and whether `f` is known concave.
#[derive(Clone)]
pub struct SeparableConcave {
    f: ScalarFn,
    f_prime: ScalarFn,
    concavity_certified: bool,
}

impl fmt::Debug for SeparableConcave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableConcave")
            .field("concavity_certified", &self.concavity_certified)
            .finish_non_exhaustive()
    }
}

impl SeparableConcave {
    /// Wraps `f` without any concavity claim. Exact and residue routes refuse it.
    pub fn uncertified<F, D>(f: F, f_prime: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), f_prime: Arc::new(f_prime), concavity_certified: false }
    }

    /// Wraps `f` after checking finiteness and the chord inequality on a
    /// 101-point grid of `[0, 1]`. Returns [`IdmError::NotConcave`] if either fails.
    pub fn certified<F, D>(f: F, f_prime: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut out = Self::uncertified(f, f_prime);
        if !chord_test(&*out.f, CERT_GRID, CERT_TOL) {
            return Err(IdmError::NotConcave);
        }
        out.concavity_certified = true;
        Ok(out)
    }

    /// The expected-entropy summand `h` for concentration `n + s`.
    ///
    /// Concavity of `h` is taken as known rather than re-checked on the grid.
    pub fn entropy(ctx: EntropyContext) -> Self {
        Self {
            f: Arc::new(move |u| ctx.h_raw(u.clamp(0.0, 1.0))),
            f_prime: Arc::new(move |u| ctx.h_prime_raw(u.clamp(0.0, 1.0))),
            concavity_certified: true,
        }
    }

    /// `-f` for a convex `f`, so convex summands can reuse the concave routes.
    pub fn negated_convex<F, D>(f: F, f_prime: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::certified(move |x| -f(x), move |x| -f_prime(x))
    }

    pub fn is_certified(&self) -> bool {
        self.concavity_certified
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.f_prime)(x)
    }

    /// `F(u) = sum_i f(u_i)`.
    pub fn eval(&self, u: &UPoint) -> f64 {
        u.values().iter().map(|&x| (self.f)(x)).sum()
    }

    fn require_certified(&self) -> Result<()> {
        if self.concavity_certified {
            Ok(())
        } else {
            Err(IdmError::NotConcave)
        }
    }
}

/// Chord test over every triple of an evenly spaced grid on `[0, 1]`.
pub fn chord_test(f: &dyn Fn(f64) -> f64, points: usize, tol: f64) -> bool {
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return false;
    }
    for a in 0..points {
        for c in a + 2..points {
            let slope = (ys[c] - ys[a]) / (xs[c] - xs[a]);
            for b in a + 1..c {
                let chord = ys[a] + slope * (xs[b] - xs[a]);
                if ys[b] < chord - tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Witnesses of both extrema of a separable concave estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaWitness {
    /// Vertex of the prior simplex attaining the minimum.
    pub t_min: TVector,
    /// Water-filled point attaining the maximum.
    pub u_max: UPoint,
    /// Number of components raised to the common level.
    pub m_star: usize,
    /// The common level `u_tilde`.
    pub u_tilde: f64,
}

/// Vertex minimizing every separable concave estimator: `argmax_i n_i`
/// (lowest index on ties) and the corresponding `u`.
pub fn exact_min_vertex(counts: &Counts, cfg: &IdmConfig) -> (usize, UPoint) {
    let values = counts.values();
    let mut best = 0;
    for (i, &n) in values.iter().enumerate() {
        if n > values[best] {
            best = i;
        }
    }
    let u = u_at_vertex(counts, cfg, best).expect("index within range");
    (best, u)
}

/// The levels `u_tilde(m) = (s + sum_{k<=m} n_(k)) / (m (n + s))` for
/// `m = 1..=d`, with counts sorted ascending.
pub fn water_levels(counts: &Counts, cfg: &IdmConfig) -> Vec<f64> {
    let mut sorted = counts.values().to_vec();
    sorted.sort();
    let s = cfg.s();
    let n_plus_s = counts.total() as f64 + s;
    let mut prefix = 0u64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            prefix += n;
            (s + prefix as f64) / ((k + 1) as f64 * n_plus_s)
        })
        .collect()
}

/// Water-filling maximizer of every separable concave estimator.
///
/// Scans all `m` (smallest `m` on ties) and sets `u_i = max(u0_i, u_tilde)`.
pub fn exact_max_point(counts: &Counts, cfg: &IdmConfig) -> ExtremaWitness {
    let levels = water_levels(counts, cfg);
    let (mut m_star, mut u_tilde) = (1, levels[0]);
    for (k, &level) in levels.iter().enumerate().skip(1) {
        if level < u_tilde {
            m_star = k + 1;
            u_tilde = level;
        }
    }
    let u0 = u_zero(counts, cfg);
    let values = u0.values().iter().map(|&x| x.max(u_tilde)).collect();
    let u_max = UPoint::from_parts(values, u0.n_plus_s(), u0.sigma(), Region::Shifted);
    let (i_min, _) = exact_min_vertex(counts, cfg);
    ExtremaWitness { t_min: TVector::vertex(counts.len(), i_min).expect("index within range"), u_max, m_star, u_tilde }
}

/// Exact robust interval of `sum_i f(u_i)` for a certified concave `f`.
pub fn exact_interval(fc: &SeparableConcave, counts: &Counts, cfg: &IdmConfig) -> Result<Interval> {
    fc.require_certified()?;
    let (_, u_min) = exact_min_vertex(counts, cfg);
    let witness = exact_max_point(counts, cfg);
    let lower = fc.eval(&u_min);
    let upper = fc.eval(&witness.u_max);
    Interval::new(lower, upper.max(lower), IntervalKind::Exact)
}

/// Exact robust interval of `sum_i g(u_i)` for a convex `g`, through `-g`.
pub fn exact_interval_convex<F, D>(g: F, g_prime: D, counts: &Counts, cfg: &IdmConfig) -> Result<Interval>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let neg = SeparableConcave::negated_convex(g, g_prime)?;
    let iv = exact_interval(&neg, counts, cfg)?;
    Interval::new(-iv.upper(), -iv.lower(), IntervalKind::Exact)
}

/// Expected entropy `H(u) = sum_i h(u_i)` with `N` taken from `u`.
pub fn expected_entropy(u: &UPoint) -> f64 {
    let ctx = EntropyContext::new(u.n_plus_s()).expect("n + s is positive");
    u.values().iter().map(|&x| ctx.h_raw(x.clamp(0.0, 1.0))).sum()
}

/// Exact lower and upper expected entropy (nats).
pub fn entropy_interval_exact(counts: &Counts, cfg: &IdmConfig) -> Interval {
    let ctx = EntropyContext::new(counts.total() as f64 + cfg.s()).expect("n + s is positive");
    exact_interval(&SeparableConcave::entropy(ctx), counts, cfg).expect("entropy summand is concave")
}
