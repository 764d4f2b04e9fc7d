//! Conservative outer bounds and inner witnesses for differentiable estimators.
//!
//! Expanding `F` around the improper base point `u0` gives
//! `F(u) = F(u0) + sigma * sum_i dF_i(u_check) t_i` for some `u_check` in the
//! extended set. Bounding each partial derivative over that set yields
//! per-index residues `R_i^ub >= sigma * max dF_i` and `R_i^lb <= sigma * min dF_i`,
//! hence `F(u0) + min_i R_i^lb <= min F` and `max F <= F(u0) + max_i R_i^ub`.
//! Both bounds are tight to second order in `sigma`.
//!
//! Residues, not their maxima, are what propagate through sums and products:
//! `max_i (a_i + b_i)` can be much smaller than `max_i a_i + max_i b_i`.

use crate::error::{IdmError, Result};
use crate::exact::SeparableConcave;
use crate::model::{sigma, u_at_vertex, u_zero, Counts, IdmConfig, Interval, IntervalKind, UPoint};

/// Shape of the index set a bundle's residues are attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSpace {
    Flat(usize),
    /// Row-major `rows x cols` grid, as used for contingency tables.
    Grid {
        rows: usize,
        cols: usize,
    },
}

impl IndexSpace {
    pub fn len(&self) -> usize {
        match *self {
            IndexSpace::Flat(d) => d,
            IndexSpace::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `F(u0)` plus per-index residue bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueBundle {
    pub f0: f64,
    pub resid_ub: Vec<f64>,
    pub resid_lb: Vec<f64>,
    pub index_space: IndexSpace,
    nonnegative: bool,
}

impl ResidueBundle {
    pub fn new(f0: f64, resid_ub: Vec<f64>, resid_lb: Vec<f64>, index_space: IndexSpace) -> Result<Self> {
        if resid_ub.len() != index_space.len() || resid_lb.len() != index_space.len() {
            return Err(IdmError::DimensionMismatch {
                expected: index_space.len(),
                found: resid_ub.len().max(resid_lb.len()),
            });
        }
        for (index, (&lower, &upper)) in resid_lb.iter().zip(&resid_ub).enumerate() {
            if !(lower <= upper + 1e-12) {
                return Err(IdmError::InvertedBounds { index, lower, upper });
            }
        }
        Ok(Self { f0, resid_ub, resid_lb, index_space, nonnegative: false })
    }

    /// Exact bundle of the linear estimator `F(u) = sum_i a_i u_i`.
    pub fn linear(coeffs: &[f64], counts: &Counts, cfg: &IdmConfig) -> Result<Self> {
        if coeffs.len() != counts.len() {
            return Err(IdmError::DimensionMismatch { expected: counts.len(), found: coeffs.len() });
        }
        let u0 = u_zero(counts, cfg);
        let sig = u0.sigma();
        let f0 = coeffs.iter().zip(u0.values()).map(|(a, u)| a * u).sum();
        let resid: Vec<f64> = coeffs.iter().map(|a| sig * a).collect();
        Self::new(f0, resid.clone(), resid, IndexSpace::Flat(counts.len()))
    }

    /// Caller's assertion that `F >= 0` and every `dF_i >= 0` on the extended set.
    /// Required by [`combine_product`].
    pub fn assert_nonnegative(mut self) -> Self {
        self.nonnegative = true;
        self
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn len(&self) -> usize {
        self.resid_ub.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resid_ub.is_empty()
    }

    /// `max_i R_i^ub`, lowest index on ties.
    pub fn max_ub(&self) -> (usize, f64) {
        arg_extreme(&self.resid_ub, |a, b| a > b)
    }

    /// `min_i R_i^lb`, lowest index on ties.
    pub fn min_lb(&self) -> (usize, f64) {
        arg_extreme(&self.resid_lb, |a, b| a < b)
    }

    /// Outer bound `[F0 + min_i R_i^lb, F0 + max_i R_i^ub]`.
    pub fn outer(&self) -> Interval {
        let lo = self.f0 + self.min_lb().1;
        let hi = self.f0 + self.max_ub().1;
        Interval::new(lo, hi.max(lo), IntervalKind::ConservativeOuter).expect("ordered")
    }

    /// Bundle of `-F`: residues swap roles and change sign.
    pub fn negate(&self) -> Self {
        Self {
            f0: -self.f0,
            resid_ub: self.resid_lb.iter().map(|r| -r).collect(),
            resid_lb: self.resid_ub.iter().map(|r| -r).collect(),
            index_space: self.index_space,
            nonnegative: false,
        }
    }
}

fn arg_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

/// Residues of a separable concave estimator.
///
/// `f'` is decreasing, so over `u_i in [u0_i, u0_i + sigma]` it peaks at `u0_i`
/// and bottoms out at `u0_i + sigma`.
pub fn residues_concave(fc: &SeparableConcave, counts: &Counts, cfg: &IdmConfig) -> Result<ResidueBundle> {
    if !fc.is_certified() {
        return Err(IdmError::NotConcave);
    }
    let u0 = u_zero(counts, cfg);
    let sig = u0.sigma();
    let f0 = fc.eval(&u0);
    let resid_ub = u0.values().iter().map(|&u| sig * fc.derivative(u)).collect();
    let resid_lb = u0.values().iter().map(|&u| sig * fc.derivative(u + sig)).collect();
    ResidueBundle::new(f0, resid_ub, resid_lb, IndexSpace::Flat(counts.len()))
}

/// Residues from caller-supplied ranges `(lo_i, hi_i)` of `dF_i` over the box
/// `u0_i <= u_i <= u0_i + sigma`, which contains the extended set.
pub fn residues_box(f0: f64, partial_bounds: &[(f64, f64)], counts: &Counts, cfg: &IdmConfig) -> Result<ResidueBundle> {
    if partial_bounds.len() != counts.len() {
        return Err(IdmError::DimensionMismatch { expected: counts.len(), found: partial_bounds.len() });
    }
    for (index, &(lower, upper)) in partial_bounds.iter().enumerate() {
        if !(lower <= upper) {
            return Err(IdmError::InvertedBounds { index, lower, upper });
        }
    }
    let sig = sigma(counts, cfg);
    ResidueBundle::new(
        f0,
        partial_bounds.iter().map(|&(_, hi)| sig * hi).collect(),
        partial_bounds.iter().map(|&(lo, _)| sig * lo).collect(),
        IndexSpace::Flat(counts.len()),
    )
}

/// Outer bound plus the two vertex values that lie inside the robust interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    pub outer: Interval,
    /// `F` at the vertex minimizing `R^lb`; an upper bound on the minimum.
    pub inner_low: f64,
    /// `F` at the vertex maximizing `R^ub`; a lower bound on the maximum.
    pub inner_high: f64,
    /// Index of the vertex giving `inner_high`.
    pub witness_hi: usize,
    /// Index of the vertex giving `inner_low`.
    pub witness_lo: usize,
}

impl Sandwich {
    /// `[inner_low, inner_high]` when ordered. For nearly constant estimators
    /// the two vertex values can cross, in which case there is no inner interval.
    pub fn inner(&self) -> Option<Interval> {
        Interval::new(self.inner_low, self.inner_high, IntervalKind::InnerWitness).ok()
    }

    /// `outer.upper - inner_high`.
    pub fn upper_slack(&self) -> f64 {
        self.outer.upper() - self.inner_high
    }

    /// `inner_low - outer.lower`.
    pub fn lower_slack(&self) -> f64 {
        self.inner_low - self.outer.lower()
    }
}

/// Evaluates the outer bound of `bundle` and the inner witnesses of `f_eval`.
pub fn sandwich<F>(bundle: &ResidueBundle, f_eval: F, counts: &Counts, cfg: &IdmConfig) -> Result<Sandwich>
where
    F: Fn(&UPoint) -> f64,
{
    if bundle.len() != counts.len() {
        return Err(IdmError::DimensionMismatch { expected: counts.len(), found: bundle.len() });
    }
    if counts.len() == 1 {
        // a single category leaves one posterior mean, u = (1)
        let value = f_eval(&u_at_vertex(counts, cfg, 0)?);
        return Ok(Sandwich {
            outer: Interval::point(value, IntervalKind::ConservativeOuter),
            inner_low: value,
            inner_high: value,
            witness_hi: 0,
            witness_lo: 0,
        });
    }
    let (witness_hi, _) = bundle.max_ub();
    let (witness_lo, _) = bundle.min_lb();
    let inner_high = f_eval(&u_at_vertex(counts, cfg, witness_hi)?);
    let inner_low = f_eval(&u_at_vertex(counts, cfg, witness_lo)?);
    Ok(Sandwich { outer: bundle.outer(), inner_low, inner_high, witness_hi, witness_lo })
}

/// Bundle of `alpha G + beta H` for `alpha, beta >= 0`.
pub fn combine_sum(g: &ResidueBundle, h: &ResidueBundle, alpha: f64, beta: f64) -> Result<ResidueBundle> {
    for coeff in [alpha, beta] {
        if !(coeff >= 0.0) {
            return Err(IdmError::NegativeCoefficient(coeff));
        }
    }
    check_same_space(g, h)?;
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect() };
    Ok(ResidueBundle {
        f0: alpha * g.f0 + beta * h.f0,
        resid_ub: mix(&g.resid_ub, &h.resid_ub),
        resid_lb: mix(&g.resid_lb, &h.resid_lb),
        index_space: g.index_space,
        nonnegative: g.nonnegative && h.nonnegative,
    })
}

/// Bundle of `G H` for nonnegative factors with nonnegative partials.
///
/// `R_i^ub = G_i^ub (H0 + H_R^ub) + (G0 + G_R^ub) H_i^ub` with
/// `G_R^ub = max(0, max_i G_i^ub)`, and the mirror image with `min(0, .)` for the
/// lower residues. Factor bounds are floored at zero, which the sign assertions permit.
pub fn combine_product(g: &ResidueBundle, h: &ResidueBundle) -> Result<ResidueBundle> {
    if !(g.nonnegative && h.nonnegative) {
        return Err(IdmError::NotNonnegative);
    }
    check_same_space(g, h)?;
    let g_top = g.f0 + g.max_ub().1.max(0.0);
    let h_top = h.f0 + h.max_ub().1.max(0.0);
    let g_bottom = (g.f0 + g.min_lb().1.min(0.0)).max(0.0);
    let h_bottom = (h.f0 + h.min_lb().1.min(0.0)).max(0.0);
    let resid_ub = (0..g.len()).map(|i| g.resid_ub[i] * h_top + g_top * h.resid_ub[i]).collect();
    let resid_lb =
        (0..g.len()).map(|i| g.resid_lb[i].max(0.0) * h_bottom + g_bottom * h.resid_lb[i].max(0.0)).collect();
    let mut out = ResidueBundle::new(g.f0 * h.f0, resid_ub, resid_lb, g.index_space)?;
    out.nonnegative = true;
    Ok(out)
}

fn check_same_space(g: &ResidueBundle, h: &ResidueBundle) -> Result<()> {
    if g.index_space != h.index_space {
        return Err(IdmError::DimensionMismatch { expected: g.index_space.len(), found: h.index_space.len() });
    }
    Ok(())
}
