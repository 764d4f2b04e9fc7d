//! Brute-force checks: exhaustive simplex grids and Monte-Carlo posterior sampling.
//!
//! Nothing here relies on the closed forms it is used to check. Grid scans
//! enumerate integer compositions of `1/step`, so grid points are exact
//! fractions and every simplex vertex is visited. Posterior sampling draws
//! normalized Gamma variates from a seeded ChaCha stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{IdmError, Result};
use crate::model::{u_at_vertex, u_zero, Counts, IdmConfig, Interval, IntervalKind, Region, TVector, UPoint};

/// Default cap on the number of grid points a scan may visit.
pub const DEFAULT_MAX_POINTS: u64 = 20_000_000;

/// Floor applied to Dirichlet parameters at the boundary of the prior simplex.
pub const ALPHA_FLOOR: f64 = 1e-9;

/// Uniform grid `{t : t_i = k_i * step, sum k_i = 1/step}` over a simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    step: f64,
    divisions: u32,
    max_points: u64,
}

impl GridSpec {
    /// `step` must lie in `(0, 0.5]` and divide 1 to within `1e-9`.
    pub fn new(step: f64) -> Result<Self> {
        Self::with_cap(step, DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(step: f64, max_points: u64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.5) {
            return Err(IdmError::InvalidGridStep(step));
        }
        let k = (1.0 / step).round();
        if (k * step - 1.0).abs() > 1e-9 || k > u32::MAX as f64 {
            return Err(IdmError::InvalidGridStep(step));
        }
        Ok(Self { step, divisions: k as u32, max_points })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `1 / step`.
    pub fn divisions(&self) -> u32 {
        self.divisions
    }

    pub fn max_points(&self) -> u64 {
        self.max_points
    }

    /// Number of grid points on the `d`-category simplex.
    pub fn point_count(&self, d: usize) -> u128 {
        binomial(self.divisions as u128 + d as u128 - 1, d as u128 - 1)
    }

    fn check(&self, points: u128) -> Result<()> {
        if points > self.max_points as u128 {
            return Err(IdmError::GridTooLarge { points, cap: self.max_points });
        }
        Ok(())
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `visit` on every composition of `total` into `parts` nonnegative integers.
pub(crate) fn for_each_composition(parts: usize, total: u32, mut visit: impl FnMut(&[u32])) {
    let mut k = vec![0u32; parts];
    k[0] = total;
    loop {
        visit(&k);
        let Some(j) = (0..parts - 1).rev().find(|&j| k[j] > 0) else {
            break;
        };
        k[j] -= 1;
        let tail = k[parts - 1];
        k[parts - 1] = 0;
        k[j + 1] = tail + 1;
    }
}

/// All grid points of the `d`-category simplex as weight vectors.
pub fn simplex_grid(d: usize, grid: &GridSpec) -> Result<Vec<TVector>> {
    grid.check(grid.point_count(d))?;
    let div = grid.divisions as f64;
    let mut out = Vec::new();
    for_each_composition(d, grid.divisions, |k| {
        out.push(TVector::new(k.iter().map(|&ki| ki as f64 / div).collect()).expect("grid point on simplex"));
    });
    Ok(out)
}

/// Running minimum and maximum.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extremes {
    pub lo: f64,
    pub hi: f64,
}

impl Extremes {
    pub fn new() -> Self {
        Self { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }

    pub fn push(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }

    pub fn into_interval(self) -> Result<Interval> {
        Interval::new(self.lo, self.hi, IntervalKind::Oracle)
    }
}

/// Minimum and maximum of `f_eval` over the grid, mapped to `u` space.
/// The `d` vertices are always evaluated.
pub fn grid_extrema<F>(f_eval: F, counts: &Counts, cfg: &IdmConfig, grid: &GridSpec) -> Result<Interval>
where
    F: Fn(&UPoint) -> f64,
{
    let d = counts.len();
    grid.check(grid.point_count(d))?;
    let mut ext = Extremes::new();
    for i in 0..d {
        ext.push(f_eval(&u_at_vertex(counts, cfg, i)?));
    }
    let s = cfg.s();
    let div = grid.divisions as f64;
    let base = u_zero(counts, cfg);
    let n_plus_s = base.n_plus_s();
    let mut u = UPoint::from_parts(base.values().to_vec(), n_plus_s, base.sigma(), Region::Shifted);
    let n: Vec<f64> = counts.values().iter().map(|&c| c as f64).collect();
    for_each_composition(d, grid.divisions, |k| {
        for ((ui, &ki), &ni) in u.values_mut().iter_mut().zip(k).zip(&n) {
            *ui = (ni + s * (ki as f64 / div)) / n_plus_s;
        }
        ext.push(f_eval(&u));
    });
    ext.into_interval()
}

/// Monte-Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSpec {
    n_samples: usize,
    seed: u64,
}

/// Smallest accepted Monte-Carlo sample size.
pub const MIN_SAMPLES: usize = 100;

impl McSpec {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < MIN_SAMPLES {
            return Err(IdmError::TooFewSamples { needed: MIN_SAMPLES, found: n_samples });
        }
        Ok(Self { n_samples, seed })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for stream `stream` of this seed. Distinct streams are
    /// independent; stream 0 is what [`mc_functional`] uses.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Reusable Dirichlet sampler built from per-component Gamma distributions.
#[derive(Debug, Clone)]
pub struct DirichletSampler {
    gammas: Vec<Gamma<f64>>,
    argmax: usize,
}

impl DirichletSampler {
    pub fn new(alpha: &[f64]) -> Result<Self> {
        if alpha.is_empty() {
            return Err(IdmError::InvalidDirichlet(f64::NAN));
        }
        let mut gammas = Vec::with_capacity(alpha.len());
        for &a in alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(IdmError::InvalidDirichlet(a));
            }
            gammas.push(Gamma::new(a, 1.0).map_err(|_| IdmError::InvalidDirichlet(a))?);
        }
        let argmax = (0..alpha.len()).fold(0, |b, i| if alpha[i] > alpha[b] { i } else { b });
        Ok(Self { gammas, argmax })
    }

    /// Writes one draw into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut total = 0.0;
        for (slot, g) in out.iter_mut().zip(&self.gammas) {
            *slot = g.sample(rng);
            total += *slot;
        }
        if total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
        } else {
            // Every variate underflowed; only reachable with tiny parameters.
            out.iter_mut().for_each(|x| *x = 0.0);
            out[self.argmax] = 1.0;
        }
    }
}

/// One draw from `Dirichlet(alpha)` by normalizing `Gamma(alpha_i, 1)` variates.
pub fn dirichlet_sample<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let sampler = DirichletSampler::new(alpha)?;
    let mut out = vec![0.0; alpha.len()];
    sampler.sample_into(rng, &mut out);
    Ok(out)
}

/// Posterior Dirichlet parameters `n_i + s t_i`, floored at [`ALPHA_FLOOR`].
pub fn posterior_alpha(counts: &Counts, cfg: &IdmConfig, t: &TVector) -> Result<Vec<f64>> {
    if t.len() != counts.len() {
        return Err(IdmError::DimensionMismatch { expected: counts.len(), found: t.len() });
    }
    Ok(counts.values().iter().zip(t.values()).map(|(&n, &ti)| (n as f64 + cfg.s() * ti).max(ALPHA_FLOOR)).collect())
}

/// Sample summary of a statistic of the chances under one posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    /// All draws of the statistic, ascending.
    pub sorted_samples: Vec<f64>,
}

/// Draws `stat(pi)` for `pi ~ Dirichlet(n + s t)` on stream 0 of the seed.
pub fn mc_functional<F>(stat: F, counts: &Counts, cfg: &IdmConfig, t: &TVector, mc: &McSpec) -> Result<McSummary>
where
    F: Fn(&[f64]) -> f64,
{
    mc_functional_on_stream(stat, counts, cfg, t, mc, 0)
}

/// [`mc_functional`] on an explicit stream of the seed.
pub fn mc_functional_on_stream<F>(
    stat: F,
    counts: &Counts,
    cfg: &IdmConfig,
    t: &TVector,
    mc: &McSpec,
    stream: u64,
) -> Result<McSummary>
where
    F: Fn(&[f64]) -> f64,
{
    let sampler = DirichletSampler::new(&posterior_alpha(counts, cfg, t)?)?;
    let mut rng = mc.rng(stream);
    let mut pi = vec![0.0; counts.len()];
    let mut samples = Vec::with_capacity(mc.n_samples);
    for _ in 0..mc.n_samples {
        sampler.sample_into(&mut rng, &mut pi);
        samples.push(stat(&pi));
    }
    Ok(summarize(samples))
}

pub(crate) fn summarize(mut samples: Vec<f64>) -> McSummary {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let std_dev = var.sqrt();
    samples.sort_by(f64::total_cmp);
    McSummary { mean, std_dev, std_err: std_dev / m.sqrt(), sorted_samples: samples }
}

/// Shannon entropy `-sum p ln p` of a chance vector, with `0 ln 0 = 0`.
pub fn plugin_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{entropy_interval_exact, expected_entropy};

    fn c(v: &[u64]) -> Counts {
        Counts::new(v.to_vec()).unwrap()
    }

    #[test]
    fn compositions_are_complete_and_distinct() {
        for (d, k) in [(1, 5), (2, 4), (3, 6), (4, 3)] {
            let mut seen = std::collections::HashSet::new();
            for_each_composition(d, k, |c| {
                assert_eq!(c.iter().sum::<u32>(), k);
                assert!(seen.insert(c.to_vec()));
            });
            let grid = GridSpec::new(1.0 / k as f64).unwrap();
            assert_eq!(seen.len() as u128, grid.point_count(d), "d = {d}, k = {k}");
        }
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(0.0).is_err());
        assert!(GridSpec::new(0.6).is_err());
        assert!(GridSpec::new(0.3).is_err());
        assert_eq!(GridSpec::new(0.001).unwrap().divisions(), 1000);
        let g = GridSpec::with_cap(0.01, 1000).unwrap();
        let err = grid_extrema(|_| 0.0, &c(&[1, 1, 1]), &IdmConfig::default(), &g).unwrap_err();
        assert!(matches!(err, IdmError::GridTooLarge { points: 5151, cap: 1000 }));
    }

    #[test]
    fn entropy_grid_matches_worked_example() {
        let counts = c(&[3, 6]);
        let cfg = IdmConfig::new(1.0).unwrap();
        let iv = grid_extrema(expected_entropy, &counts, &cfg, &GridSpec::new(0.001).unwrap()).unwrap();
        assert_eq!(iv.kind(), IntervalKind::Oracle);
        assert!((iv.lower() - 0.563_968).abs() < 0.01);
        assert!((iv.upper() - 0.625_631).abs() < 0.01);
        let exact = entropy_interval_exact(&counts, &cfg);
        assert!((iv.lower() - exact.lower()).abs() < 1e-12);
    }

    #[test]
    fn linear_extrema_at_vertices() {
        let counts = c(&[1, 4, 2]);
        let cfg = IdmConfig::new(2.0).unwrap();
        let a = [2.0, -1.0, 0.5];
        let f = |u: &UPoint| u.values().iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
        let iv = grid_extrema(f, &counts, &cfg, &GridSpec::new(0.25).unwrap()).unwrap();
        let f0 = f(&u_zero(&counts, &cfg));
        let sig = cfg.s() / (counts.total() as f64 + cfg.s());
        assert!((iv.lower() - (f0 - sig)).abs() < 1e-12);
        assert!((iv.upper() - (f0 + 2.0 * sig)).abs() < 1e-12);
    }

    #[test]
    fn single_category_grid_is_a_point() {
        let iv = grid_extrema(expected_entropy, &c(&[4]), &IdmConfig::default(), &GridSpec::new(0.5).unwrap()).unwrap();
        assert_eq!(iv.width(), 0.0);
    }

    #[test]
    fn dirichlet_means_and_concentration() {
        let mut rng = McSpec::new(100, 11).unwrap().rng(0);
        let sampler = DirichletSampler::new(&[1.0, 1.0]).unwrap();
        let mut acc = [0.0; 2];
        let mut pi = [0.0; 2];
        for _ in 0..100_000 {
            sampler.sample_into(&mut rng, &mut pi);
            acc[0] += pi[0];
            acc[1] += pi[1];
        }
        assert!((acc[0] / 1e5 - 0.5).abs() < 0.005);

        let sampler = DirichletSampler::new(&[4.0, 6.0]).unwrap();
        let mut acc = 0.0;
        for _ in 0..100_000 {
            sampler.sample_into(&mut rng, &mut pi);
            acc += pi[0];
        }
        assert!((acc / 1e5 - 0.4).abs() < 0.005);

        for _ in 0..1000 {
            let p = dirichlet_sample(&[1e6, 1e6], &mut rng).unwrap();
            assert!((p[0] - 0.5).abs() < 0.01);
        }
        assert!(dirichlet_sample(&[1.0, 0.0], &mut rng).is_err());
        assert!(dirichlet_sample(&[-2.0], &mut rng).is_err());
    }

    #[test]
    fn mc_is_reproducible() {
        let counts = c(&[3, 6]);
        let cfg = IdmConfig::default();
        let t = TVector::center(2).unwrap();
        let mc = McSpec::new(5000, 42).unwrap();
        let a = mc_functional(plugin_entropy, &counts, &cfg, &t, &mc).unwrap();
        let b = mc_functional(plugin_entropy, &counts, &cfg, &t, &mc).unwrap();
        assert_eq!(a, b);
        let other = mc_functional_on_stream(plugin_entropy, &counts, &cfg, &t, &mc, 1).unwrap();
        assert_ne!(a.mean, other.mean);
        assert!(McSpec::new(99, 0).is_err());
    }

    #[test]
    fn mc_component_mean_is_u() {
        let counts = c(&[3, 6]);
        let cfg = IdmConfig::default();
        let t = TVector::new(vec![1.0, 0.0]).unwrap();
        let mc = McSpec::new(200_000, 3).unwrap();
        let sum = mc_functional(|p| p[0], &counts, &cfg, &t, &mc).unwrap();
        assert!((sum.mean - 0.4).abs() < 3.0 * sum.std_err);
    }

    #[test]
    fn plugin_entropy_values() {
        assert_eq!(plugin_entropy(&[1.0, 0.0]), 0.0);
        assert!((plugin_entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
