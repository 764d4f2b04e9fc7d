use idm_core::conservative::{combine_product, combine_sum, residues_box, residues_concave, sandwich, ResidueBundle};
use idm_core::credible::{
    default_t_set, robust_credible_union, shortest_interval_from_samples, CredibleMode, CredibleSpec,
};
use idm_core::exact::{
    entropy_interval_exact, exact_interval, exact_max_point, exact_min_vertex, expected_entropy, water_levels,
    SeparableConcave,
};
use idm_core::model::{sigma, u_at_vertex, u_from_t, u_zero, Counts, IdmConfig, TVector};
use idm_core::mutual_info::{expected_mi, mi_crude_interval, mi_sandwich, plugin_mi, JointCounts, TableDims};
use idm_core::oracle::{grid_extrema, mc_functional, plugin_entropy, GridSpec, McSpec};
use idm_core::special::{digamma, h, h_prime, EntropyContext};
use proptest::prelude::*;

fn counts_strategy(d: std::ops::RangeInclusive<usize>, max: u64) -> impl Strategy<Value = Counts> {
    d.prop_flat_map(move |d| prop::collection::vec(0..=max, d)).prop_map(|v| Counts::new(v).unwrap())
}

fn t_for(weights: &[f64]) -> TVector {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return TVector::vertex(weights.len(), 0).unwrap();
    }
    TVector::new(weights.iter().map(|w| w / total).collect()).unwrap()
}

fn weights(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64], d)
}

fn counts_and_t(max_d: usize, max_n: u64) -> impl Strategy<Value = (Counts, TVector)> {
    counts_strategy(1..=max_d, max_n).prop_flat_map(|c| {
        let d = c.len();
        (Just(c), weights(d).prop_map(|w| t_for(&w)))
    })
}

/// A few families of concave summands with closed-form derivatives.
#[derive(Debug, Clone, Copy)]
enum Family {
    Power { p: f64, a: f64 },
    Log { k: f64 },
    Quad { a: f64, b: f64 },
    Sine { a: f64 },
}

impl Family {
    fn build(self) -> SeparableConcave {
        match self {
            Family::Power { p, a } => SeparableConcave::certified(
                move |x| a * x.max(0.0).powf(p),
                move |x| a * p * x.max(1e-300).powf(p - 1.0),
            ),
            Family::Log { k } => SeparableConcave::certified(move |x| (1.0 + k * x).ln(), move |x| k / (1.0 + k * x)),
            Family::Quad { a, b } => SeparableConcave::certified(move |x| b * x - a * x * x, move |x| b - 2.0 * a * x),
            Family::Sine { a } => {
                SeparableConcave::certified(move |x| a * (x * 3.0).sin(), move |x| 3.0 * a * (x * 3.0).cos())
            }
        }
        .unwrap()
    }
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.3..0.95f64, 0.1..3.0f64).prop_map(|(p, a)| Family::Power { p, a }),
        (0.1..20.0f64).prop_map(|k| Family::Log { k }),
        (0.0..4.0f64, -2.0..2.0f64).prop_map(|(a, b)| Family::Quad { a, b }),
        (0.1..2.0f64).prop_map(|a| Family::Sine { a }),
    ]
}

fn cfg_strategy() -> impl Strategy<Value = IdmConfig> {
    (0.25..4.0f64).prop_map(|s| IdmConfig::new(s).unwrap())
}

fn grid_for(d: usize) -> GridSpec {
    let step = match d {
        1 | 2 => 0.001,
        3 => 0.01,
        4 => 0.02,
        _ => 0.05,
    };
    GridSpec::new(step).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn u_is_on_shifted_simplex((counts, t) in counts_and_t(6, 50), cfg in cfg_strategy()) {
        let u = u_from_t(&counts, &cfg, &t).unwrap();
        let u0 = u_zero(&counts, &cfg);
        prop_assert!((u.sum() - 1.0).abs() < 1e-12);
        for (a, b) in u.values().iter().zip(u0.values()) {
            prop_assert!(*a >= b - 1e-15);
        }
        prop_assert!((sigma(&counts, &cfg) - (1.0 - u0.sum())).abs() < 1e-12);
    }

    #[test]
    fn u_is_affine_in_t(
        (counts, w1, w2) in counts_strategy(1..=6, 40).prop_flat_map(|c| { let d = c.len(); (Just(c), weights(d), weights(d)) }),
        mix in 0.0..=1.0f64,
        cfg in cfg_strategy(),
    ) {
        let (t1, t2) = (t_for(&w1), t_for(&w2));
        let mixed: Vec<f64> = t1.values().iter().zip(t2.values()).map(|(a, b)| mix * a + (1.0 - mix) * b).collect();
        let tm = TVector::new(mixed).unwrap();
        let (u1, u2, um) = (
            u_from_t(&counts, &cfg, &t1).unwrap(),
            u_from_t(&counts, &cfg, &t2).unwrap(),
            u_from_t(&counts, &cfg, &tm).unwrap(),
        );
        for i in 0..counts.len() {
            let lin = mix * u1.values()[i] + (1.0 - mix) * u2.values()[i];
            prop_assert!((um.values()[i] - lin).abs() < 1e-12);
        }
        let back = um.to_t(&counts, &cfg);
        for (a, b) in back.iter().zip(tm.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn digamma_recurrence(x in 0.1..100.0f64) {
        let r = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
        prop_assert!(r.abs() <= 1e-12, "residual {r} at {x}");
    }

    #[test]
    fn h_chord(n in 1.0..1000.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64) {
        let mut xs = [a, b, c];
        xs.sort_by(f64::total_cmp);
        let [u1, u2, u3] = xs;
        prop_assume!(u3 - u1 > 1e-9);
        let ctx = EntropyContext::new(n).unwrap();
        let (h1, h2, h3) = (h(u1, &ctx).unwrap(), h(u2, &ctx).unwrap(), h(u3, &ctx).unwrap());
        let chord = h1 + (h3 - h1) * (u2 - u1) / (u3 - u1);
        prop_assert!(h2 >= chord - 1e-12);
    }

    #[test]
    fn h_prime_matches_central_difference(n in 1.0..1000.0f64, u in 1e-6..(1.0 - 1e-6)) {
        let eps = 1e-6;
        let ctx = EntropyContext::new(n).unwrap();
        let fd = (h(u + eps, &ctx).unwrap() - h(u - eps, &ctx).unwrap()) / (2.0 * eps);
        prop_assert!((h_prime(u, &ctx).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn min_vertex_beats_other_vertices(f in family(), counts in counts_strategy(1..=6, 30), cfg in cfg_strategy()) {
        let fc = f.build();
        let (_, u_min) = exact_min_vertex(&counts, &cfg);
        let f_min = fc.eval(&u_min);
        for i in 0..counts.len() {
            prop_assert!(f_min <= fc.eval(&u_at_vertex(&counts, &cfg, i).unwrap()) + 1e-12);
        }
    }

    #[test]
    fn water_filling_is_feasible_and_maximal(
        f in family(),
        (counts, t) in counts_and_t(5, 30),
        cfg in cfg_strategy(),
    ) {
        let w = exact_max_point(&counts, &cfg);
        let u0 = u_zero(&counts, &cfg);
        prop_assert!((w.u_max.sum() - 1.0).abs() < 1e-12);
        for (a, b) in w.u_max.values().iter().zip(u0.values()) {
            prop_assert!(*a >= b - 1e-15);
        }
        let fc = f.build();
        let iv = exact_interval(&fc, &counts, &cfg).unwrap();
        let v = fc.eval(&u_from_t(&counts, &cfg, &t).unwrap());
        prop_assert!(iv.contains(v, 1e-12), "{v} outside {iv:?}");
    }

    #[test]
    fn exact_interval_contains_grid_and_random_points((counts, t) in counts_and_t(3, 20), cfg in cfg_strategy()) {
        let iv = grid_extrema(expected_entropy, &counts, &cfg, &GridSpec::new(0.05).unwrap()).unwrap();
        let exact = entropy_interval_exact(&counts, &cfg);
        let v = expected_entropy(&u_from_t(&counts, &cfg, &t).unwrap());
        prop_assert!(exact.contains(v, 1e-12));
        prop_assert!(exact.contains_interval(&iv, 1e-12));
        // the grid hits the minimizing vertex, so only the upper end can fall short
        prop_assert!((iv.lower() - exact.lower()).abs() < 1e-12);
    }

    #[test]
    fn mi_decomposes_into_entropies(
        (rows, cols, w) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0.0..1.0f64, r * c)))
    ) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let dims = TableDims { rows, cols };
        let mut row = vec![0.0; rows];
        let mut col = vec![0.0; cols];
        for (idx, &x) in p.iter().enumerate() {
            row[idx / cols] += x;
            col[idx % cols] += x;
        }
        let decomposed = plugin_entropy(&row) + plugin_entropy(&col) - plugin_entropy(&p);
        prop_assert!((plugin_mi(&p, dims) - decomposed).abs() < 1e-10);
        prop_assert!(plugin_mi(&p, dims) >= -1e-12);
    }

    #[test]
    fn joint_base_point_marginals_are_exact(
        (rows, cols, cells) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0u64..20, r * c))),
        cfg in cfg_strategy(),
    ) {
        let jc = JointCounts::from_rows(cells.chunks(cols).map(<[u64]>::to_vec).collect()).unwrap();
        prop_assert_eq!(jc.dims(), TableDims { rows, cols });
        let u0 = u_zero(&jc.flattened(), &cfg);
        let row0 = u_zero(&jc.row_marginals(), &cfg);
        let col0 = u_zero(&jc.col_marginals(), &cfg);
        let n_plus_s = jc.total() as f64 + cfg.s();
        for i in 0..rows {
            let sum: u64 = (0..cols).map(|j| jc.get(i, j)).sum();
            prop_assert_eq!(row0.values()[i], sum as f64 / n_plus_s);
        }
        for j in 0..cols {
            let sum: u64 = (0..rows).map(|i| jc.get(i, j)).sum();
            prop_assert_eq!(col0.values()[j], sum as f64 / n_plus_s);
        }
        prop_assert_eq!(u0.n_plus_s(), row0.n_plus_s());
    }

    #[test]
    fn shortest_window_is_optimal(mut xs in prop::collection::vec(-50.0..50.0f64, 100..400), alpha in 0.05..0.99f64) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = shortest_interval_from_samples(&xs, alpha).unwrap();
        let k = (alpha * xs.len() as f64 - 1e-9).ceil() as usize;
        let covered = xs.iter().filter(|&&x| lo <= x && x <= hi).count();
        prop_assert!(covered as f64 >= alpha * xs.len() as f64 - 1e-9);
        for w in xs.windows(k) {
            prop_assert!(w[k - 1] - w[0] >= hi - lo);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concave_sandwich_contains_grid_extrema(f in family(), counts in counts_strategy(1..=4, 20), cfg in cfg_strategy()) {
        let fc = f.build();
        let b = residues_concave(&fc, &counts, &cfg).unwrap();
        let sw = sandwich(&b, |u| fc.eval(u), &counts, &cfg).unwrap();
        let oracle = grid_extrema(|u| fc.eval(u), &counts, &cfg, &grid_for(counts.len())).unwrap();
        let exact = exact_interval(&fc, &counts, &cfg).unwrap();
        prop_assert!(sw.outer.contains_interval(&oracle, 1e-12));
        prop_assert!(sw.outer.contains_interval(&exact, 1e-12));
        prop_assert!(exact.contains(sw.inner_low, 1e-12) && exact.contains(sw.inner_high, 1e-12));
        prop_assert!(oracle.lower() <= sw.inner_low + 1e-12 && sw.inner_high <= oracle.upper() + 1e-12);
    }

    #[test]
    fn sum_of_concave_bundles_contains_grid_extrema(
        f in family(),
        g in family(),
        a in 0.0..3.0f64,
        b in 0.0..3.0f64,
        counts in counts_strategy(2..=4, 20),
        cfg in cfg_strategy(),
    ) {
        let (fc, gc) = (f.build(), g.build());
        let bf = residues_concave(&fc, &counts, &cfg).unwrap();
        let bg = residues_concave(&gc, &counts, &cfg).unwrap();
        let combined = combine_sum(&bf, &bg, a, b).unwrap();
        let eval = |u: &idm_core::UPoint| a * fc.eval(u) + b * gc.eval(u);
        let sw = sandwich(&combined, eval, &counts, &cfg).unwrap();
        let oracle = grid_extrema(eval, &counts, &cfg, &grid_for(counts.len())).unwrap();
        prop_assert!(sw.outer.contains_interval(&oracle, 1e-12));
        prop_assert!(oracle.contains(sw.inner_low, 1e-12) && oracle.contains(sw.inner_high, 1e-12));
        // the sum is concave and separable, so the exact route must agree
        let exact = exact_interval(
            &SeparableConcave::certified(
                { let (fc, gc) = (fc.clone(), gc.clone()); move |x| a * fc.value(x) + b * gc.value(x) } ,
                { let (fc, gc) = (fc.clone(), gc.clone()); move |x| a * fc.derivative(x) + b * gc.derivative(x) },
            ).unwrap(),
            &counts,
            &cfg,
        ).unwrap();
        prop_assert!(sw.outer.contains_interval(&exact, 1e-12));
    }

    #[test]
    fn product_of_increasing_bundles_contains_grid_extrema(
        i in 0usize..4,
        p in 0.3..0.9f64,
        counts in counts_strategy(2..=4, 20),
        cfg in cfg_strategy(),
    ) {
        let d = counts.len();
        let i = i % d;
        // G = u_i is linear, H = sum_k (u_k + 0.1)^p is concave and increasing
        let mut coeffs = vec![0.0; d];
        coeffs[i] = 1.0;
        let bg = ResidueBundle::linear(&coeffs, &counts, &cfg).unwrap().assert_nonnegative();
        let u0 = u_zero(&counts, &cfg);
        let sig = u0.sigma();
        let hf = move |x: f64| (x + 0.1).powf(p);
        let hd = move |x: f64| p * (x + 0.1).powf(p - 1.0);
        let bounds: Vec<(f64, f64)> = u0.values().iter().map(|&x| (hd(x + sig), hd(x))).collect();
        let h0: f64 = u0.values().iter().map(|&x| hf(x)).sum();
        let bh = residues_box(h0, &bounds, &counts, &cfg).unwrap().assert_nonnegative();
        let prod = combine_product(&bg, &bh).unwrap();
        let eval = |u: &idm_core::UPoint| u.values()[i] * u.values().iter().map(|&x| hf(x)).sum::<f64>();
        let sw = sandwich(&prod, eval, &counts, &cfg).unwrap();
        let oracle = grid_extrema(eval, &counts, &cfg, &grid_for(d)).unwrap();
        prop_assert!(sw.outer.contains_interval(&oracle, 1e-12), "{:?} vs {:?}", sw.outer, oracle);
    }

    #[test]
    fn linear_estimators_are_tight(coeffs in prop::collection::vec(-3.0..3.0f64, 1..=6), n in 0u64..40, cfg in cfg_strategy()) {
        let d = coeffs.len();
        let counts = Counts::new((0..d as u64).map(|k| (n * (k + 1)) % 13).collect()).unwrap();
        let b = ResidueBundle::linear(&coeffs, &counts, &cfg).unwrap();
        let eval = |u: &idm_core::UPoint| u.values().iter().zip(&coeffs).map(|(x, c)| x * c).sum::<f64>();
        let sw = sandwich(&b, eval, &counts, &cfg).unwrap();
        prop_assert!((sw.outer.upper() - sw.inner_high).abs() < 1e-12);
        prop_assert!((sw.outer.lower() - sw.inner_low).abs() < 1e-12);
    }

    #[test]
    fn mi_sandwich_contains_full_grid(
        (_, cols, cells) in (1usize..=2, 2usize..=3).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0u64..6, r * c))),
        cfg in (1.0..2.0f64).prop_map(|s| IdmConfig::new(s).unwrap()),
    ) {
        let jc = JointCounts::from_rows(cells.chunks(cols).map(<[u64]>::to_vec).collect()).unwrap();
        let dims = jc.dims();
        let flat = jc.flattened();
        let step = if dims.cells() <= 4 { 0.02 } else { 0.05 };
        let oracle = grid_extrema(|u| expected_mi(u, dims).unwrap(), &flat, &cfg, &GridSpec::new(step).unwrap()).unwrap();
        let sw = mi_sandwich(&jc, &cfg).unwrap();
        prop_assert!(sw.outer.contains_interval(&oracle, 1e-12), "{:?} vs {:?}", sw.outer, oracle);
        prop_assert!(mi_crude_interval(&jc, &cfg).contains_interval(&oracle, 1e-12));
        prop_assert!(oracle.contains(sw.inner_low, 1e-12) && oracle.contains(sw.inner_high, 1e-12));
    }
}

#[test]
fn first_local_minimum_of_water_levels_is_global() {
    let cfgs = [
        IdmConfig::new(0.5).unwrap(),
        IdmConfig::new(1.0).unwrap(),
        IdmConfig::new(2.0).unwrap(),
        IdmConfig::new(7.0).unwrap(),
    ];
    let mut cases = 0;
    for d in 1..=4u32 {
        for code in 0..7u64.pow(d) {
            let counts = Counts::new((0..d).map(|k| code / 7u64.pow(k) % 7).collect()).unwrap();
            for cfg in &cfgs {
                let levels = water_levels(&counts, cfg);
                let first_local =
                    (0..levels.len()).find(|&m| m + 1 == levels.len() || levels[m + 1] >= levels[m]).unwrap();
                let w = exact_max_point(&counts, cfg);
                assert_eq!(w.m_star, first_local + 1, "counts {:?}", counts.values());
                assert_eq!(w.u_tilde, levels[first_local]);
                cases += 1;
            }
        }
    }
    assert!(cases > 1000);
}

#[test]
fn entropy_width_shrinks_with_more_data() {
    let cfg = IdmConfig::default();
    let mut prev = f64::INFINITY;
    for k in [1, 2, 4, 8, 16, 32] {
        let w = entropy_interval_exact(&Counts::new(vec![3 * k, 6 * k]).unwrap(), &cfg).width();
        assert!(w < prev, "k = {k}");
        prev = w;
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let counts = Counts::new(vec![4, 0, 9]).unwrap();
    let cfg = IdmConfig::new(2.0).unwrap();
    let t = TVector::new(vec![0.2, 0.5, 0.3]).unwrap();
    let mc = McSpec::new(5000, 1234).unwrap();
    let a = mc_functional(plugin_entropy, &counts, &cfg, &t, &mc).unwrap();
    let b = mc_functional(plugin_entropy, &counts, &cfg, &t, &mc).unwrap();
    assert_eq!(a, b);
    let other = mc_functional(plugin_entropy, &counts, &cfg, &t, &McSpec::new(5000, 1235).unwrap()).unwrap();
    assert_ne!(a.mean, other.mean);
}

#[test]
fn monte_carlo_entropy_matches_closed_form() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for case in 0..20u64 {
        let d = rng.random_range(2..=5);
        let counts = Counts::new((0..d).map(|_| rng.random_range(0..=8)).collect()).unwrap();
        let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let t = t_for(&w);
        let cfg = IdmConfig::new(rng.random_range(0.5..3.0)).unwrap();
        let mc = McSpec::new(100_000, case).unwrap();
        let summary = mc_functional(plugin_entropy, &counts, &cfg, &t, &mc).unwrap();
        let closed = expected_entropy(&u_from_t(&counts, &cfg, &t).unwrap());
        assert!((summary.mean - closed).abs() < 4.0 * summary.std_err, "case {case}: {} vs {closed}", summary.mean);
    }
}

#[test]
fn robust_union_covers_every_prior() {
    let counts = Counts::new(vec![5, 2, 8]).unwrap();
    let cfg = IdmConfig::default();
    let spec = CredibleSpec::new(0.9, CredibleMode::TwoSidedShortest).unwrap();
    let ts = default_t_set(3).unwrap();
    let res =
        robust_credible_union(plugin_entropy, &counts, &cfg, &spec, &McSpec::new(20_000, 4).unwrap(), &ts).unwrap();
    let m = 20_000;
    let stderr = (0.9_f64 * 0.1 / m as f64).sqrt();
    for (k, t) in ts.iter().enumerate() {
        // fresh samples, independent of the ones that built the interval
        let check = mc_functional(plugin_entropy, &counts, &cfg, t, &McSpec::new(m, 1000 + k as u64).unwrap()).unwrap();
        let inside = check.sorted_samples.iter().filter(|&&x| res.interval.contains(x, 0.0)).count();
        assert!(inside as f64 / m as f64 >= 0.9 - 3.0 * stderr, "prior {k}");
    }
}

#[test]
fn per_prior_width_varies_less_than_mean_with_more_data() {
    let cfg = IdmConfig::default();
    let spec = CredibleSpec::new(0.95, CredibleMode::TwoSidedShortest).unwrap().with_gaussian_approx(true);
    let spread = |xs: Vec<f64>| {
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - xs.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let ratio = |k: u64| {
        let counts = Counts::new(vec![30 * k, 60 * k]).unwrap();
        let ts = default_t_set(2).unwrap();
        let res = robust_credible_union(plugin_entropy, &counts, &cfg, &spec, &McSpec::new(400_000, 21).unwrap(), &ts)
            .unwrap();
        let widths = res.per_prior.iter().map(|p| p.upper - p.lower).collect();
        let means = res.per_prior.iter().map(|p| p.mean).collect();
        spread(widths) / spread(means)
    };
    let (r1, r4) = (ratio(1), ratio(4));
    assert!(r4 < r1, "ratio at n = 90: {r1}, at n = 360: {r4}");
}

#[test]
fn sandwich_slack_is_second_order() {
    let cfg = IdmConfig::default();
    let mut prev: Option<(f64, f64)> = None;
    for k in [1u64, 2, 4, 8, 16] {
        let counts = Counts::new(vec![3 * k, 6 * k]).unwrap();
        let fc = SeparableConcave::entropy(EntropyContext::new(counts.total() as f64 + cfg.s()).unwrap());
        let sw = sandwich(&residues_concave(&fc, &counts, &cfg).unwrap(), expected_entropy, &counts, &cfg).unwrap();
        let (up, lo) = (sw.upper_slack(), sw.lower_slack());
        assert!(up >= 0.0 && lo >= 0.0);
        if let Some((pu, pl)) = prev {
            assert!(up / pu <= 0.6 && lo / pl <= 0.6, "k = {k}: {} {}", up / pu, lo / pl);
        }
        prev = Some((up, lo));
    }
}
