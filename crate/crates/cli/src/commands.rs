use std::f64::consts::LN_2;

use idm_core::conservative::{residues_concave, sandwich, Sandwich};
use idm_core::credible::{default_t_set, mean_plus_kappa_sigma, robust_credible_union, CredibleMode, CredibleSpec};
use idm_core::exact::{entropy_interval_exact, exact_max_point, exact_min_vertex, expected_entropy, SeparableConcave};
use idm_core::mutual_info::{
    expected_mi, full_oracle_interval, mi_crude_interval, mi_sandwich, plugin_mi, tensor_oracle_interval, JointCounts,
};
use idm_core::oracle::{grid_extrema, mc_functional_on_stream, plugin_entropy, simplex_grid, GridSpec, McSpec};
use idm_core::{
    kappa_from_alpha, u_at_vertex, u_from_t, u_zero, Counts, EntropyContext, IdmConfig, Interval, IntervalKind,
    TVector, UPoint,
};

use crate::input::{self, Data, Loaded};
use crate::report::{
    Check, CredibleSection, Diagnostics, InputEcho, McPoint, NamedInterval, PriorEntry, RunReport, Witness,
};
use crate::{CliError, CredibleArgs, EntropyArgs, InputArgs, MiArgs, ModeArg, OracleArg, StatArg};

/// Containment slack for comparisons that are exact up to rounding.
const EXACT_SLACK: f64 = 1e-12;
/// Slack between grids that do not share points.
const GRID_SLACK: f64 = 0.01;
/// Allowed Monte-Carlo deviation, in standard errors.
const MC_SIGMAS: f64 = 4.0;

const RNG_NOTE: &str = "ChaCha8 seeded with the run seed; the k-th prior weight uses stream k";

fn load(args: &InputArgs) -> Result<Loaded, CliError> {
    if let Some(text) = &args.counts {
        return Ok(Loaded { data: Data::Counts(input::parse_counts(text)?), file_s: None });
    }
    if let Some(text) = &args.table {
        return Ok(Loaded { data: Data::Table(input::parse_table(text)?), file_s: None });
    }
    match &args.input {
        Some(path) => input::read_file(path),
        None => Err(CliError::Usage("one of --counts, --table or --input is required".into())),
    }
}

fn config(args: &InputArgs, loaded: &Loaded, notes: &mut Vec<String>) -> Result<IdmConfig, CliError> {
    let cfg = IdmConfig::new(args.s.or(loaded.file_s).unwrap_or(1.0))?;
    if !cfg.is_conventional() {
        notes.push(format!("s = {} is outside the usual range [1, 2]", cfg.s()));
    }
    Ok(cfg)
}

fn require_seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage("Monte-Carlo sampling needs --seed or IDM_SEED".into()))
}

fn units(bits: bool) -> (&'static str, f64) {
    if bits {
        ("bits", 1.0 / LN_2)
    } else {
        ("nats", 1.0)
    }
}

fn diagnostics(counts: &Counts, cfg: &IdmConfig, notes: Vec<String>) -> Diagnostics {
    let u0 = u_zero(counts, cfg);
    Diagnostics {
        n: counts.total(),
        d: counts.len(),
        rows: None,
        cols: None,
        sigma: u0.sigma(),
        n_plus_s: u0.n_plus_s(),
        s_in_recommended_range: cfg.is_conventional(),
        oracle: None,
        seed: None,
        samples: None,
        rng: None,
        notes,
    }
}

fn witness(name: &str, vertex: Option<usize>, u: &UPoint, counts: &Counts, cfg: &IdmConfig, value: f64) -> Witness {
    Witness { name: name.to_string(), vertex, cell: None, t: u.to_t(counts, cfg), u: u.values().to_vec(), value }
}

fn inner_interval(sw: &Sandwich, scale: f64) -> Option<NamedInterval> {
    sw.inner().map(|iv| NamedInterval::new("inner", &iv, scale))
}

fn check(name: &str, outer: &Interval, inner: &Interval, slack: f64) -> Check {
    Check { name: name.to_string(), passed: outer.contains_interval(inner, slack), slack }
}

/// Monte-Carlo means of `stat` at each prior weight against the closed form `exact`.
fn mc_points<S, E>(
    stat: S,
    exact: E,
    counts: &Counts,
    cfg: &IdmConfig,
    mc: &McSpec,
    scale: f64,
) -> Result<(Vec<McPoint>, Interval, Check), CliError>
where
    S: Fn(&[f64]) -> f64,
    E: Fn(&UPoint) -> f64,
{
    let mut points = Vec::new();
    let mut passed = true;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, t) in default_t_set(counts.len())?.iter().enumerate() {
        let summary = mc_functional_on_stream(&stat, counts, cfg, t, mc, k as u64)?;
        let closed = exact(&u_from_t(counts, cfg, t)?);
        passed &= (summary.mean - closed).abs() <= MC_SIGMAS * summary.std_err;
        lo = lo.min(summary.mean);
        hi = hi.max(summary.mean);
        points.push(McPoint {
            vertex: t.vertex_index(),
            t: t.values().to_vec(),
            mean: summary.mean * scale,
            std_err: summary.std_err * scale,
            closed_form: closed * scale,
        });
    }
    let check = Check { name: "mc_mean_matches_closed_form".into(), passed, slack: MC_SIGMAS };
    Ok((points, Interval::new(lo, hi, IntervalKind::Oracle)?, check))
}

pub fn entropy(args: &EntropyArgs) -> Result<RunReport, CliError> {
    let loaded = load(&args.input)?;
    let mut notes = Vec::new();
    let cfg = config(&args.input, &loaded, &mut notes)?;
    let counts = Counts::new(loaded.data.into_counts()?)?;
    let (unit, scale) = units(args.output.bits);

    let exact = entropy_interval_exact(&counts, &cfg);
    let ctx = EntropyContext::new(counts.total() as f64 + cfg.s())?;
    let bundle = residues_concave(&SeparableConcave::entropy(ctx), &counts, &cfg)?;
    let sw = sandwich(&bundle, expected_entropy, &counts, &cfg)?;

    let mut intervals = vec![NamedInterval::new("exact", &exact, scale), NamedInterval::new("outer", &sw.outer, scale)];
    intervals.extend(inner_interval(&sw, scale));

    let (i_min, u_min) = exact_min_vertex(&counts, &cfg);
    let max = exact_max_point(&counts, &cfg);
    let hi_u = u_at_vertex(&counts, &cfg, sw.witness_hi)?;
    let lo_u = u_at_vertex(&counts, &cfg, sw.witness_lo)?;
    let witnesses = vec![
        witness("min", Some(i_min), &u_min, &counts, &cfg, exact.lower() * scale),
        witness("max", None, &max.u_max, &counts, &cfg, exact.upper() * scale),
        witness("inner_high", Some(sw.witness_hi), &hi_u, &counts, &cfg, sw.inner_high * scale),
        witness("inner_low", Some(sw.witness_lo), &lo_u, &counts, &cfg, sw.inner_low * scale),
    ];

    let mut diag = diagnostics(&counts, &cfg, notes);
    let mut checks = Vec::new();
    let mut monte_carlo = Vec::new();
    match args.oracle {
        Some(OracleArg::Grid(step)) => {
            let oracle = grid_extrema(expected_entropy, &counts, &cfg, &GridSpec::new(step)?)?;
            checks.push(check("oracle_within_exact", &exact, &oracle, EXACT_SLACK));
            checks.push(check("oracle_within_outer", &sw.outer, &oracle, EXACT_SLACK));
            intervals.push(NamedInterval::new("oracle", &oracle, scale));
        }
        Some(OracleArg::MonteCarlo(n)) => {
            let seed = require_seed(args.seed)?;
            let mc = McSpec::new(n, seed)?;
            let (points, oracle, agree) = mc_points(plugin_entropy, expected_entropy, &counts, &cfg, &mc, scale)?;
            checks.push(agree);
            intervals.push(NamedInterval::new("oracle", &oracle, scale));
            monte_carlo = points;
            diag.seed = Some(seed);
            diag.samples = Some(n);
            diag.rng = Some(RNG_NOTE.into());
        }
        None => {}
    }
    diag.oracle = args.oracle.map(|o| o.describe());

    Ok(RunReport {
        tool: "idm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "entropy".into(),
        method: "exact_water_filling+sandwich".into(),
        input: InputEcho { counts: Some(counts.values().to_vec()), table: None, s: cfg.s() },
        units: unit.into(),
        intervals,
        witnesses,
        monte_carlo,
        credible: None,
        checks,
        diagnostics: diag,
        wall_time_s: None,
    })
}

pub fn mi(args: &MiArgs) -> Result<RunReport, CliError> {
    let loaded = load(&args.input)?;
    let mut notes = Vec::new();
    let cfg = config(&args.input, &loaded, &mut notes)?;
    let rows = loaded.data.into_table()?;
    let jc = JointCounts::from_rows(rows)?;
    let dims = jc.dims();
    let flat = jc.flattened();
    let (unit, scale) = units(args.output.bits);

    let crude = mi_crude_interval(&jc, &cfg);
    let sw = mi_sandwich(&jc, &cfg)?;
    let mut intervals = vec![NamedInterval::new("crude", &crude, scale), NamedInterval::new("outer", &sw.outer, scale)];
    intervals.extend(inner_interval(&sw, scale));

    let cell_witness = |name: &str, idx: usize, value: f64| -> Result<Witness, CliError> {
        let (i, j) = dims.cell(idx);
        let u = u_at_vertex(&flat, &cfg, idx)?;
        let mut w = witness(name, Some(idx), &u, &flat, &cfg, value * scale);
        w.cell = Some([i, j]);
        Ok(w)
    };
    let witnesses = vec![
        cell_witness("inner_high", sw.witness_hi, sw.inner_high)?,
        cell_witness("inner_low", sw.witness_lo, sw.inner_low)?,
    ];

    let mut checks = vec![check("outer_within_crude", &crude, &sw.outer, EXACT_SLACK)];
    let mut monte_carlo = Vec::new();
    let mut diag = diagnostics(&flat, &cfg, notes);
    diag.rows = Some(dims.rows);
    diag.cols = Some(dims.cols);
    match args.oracle {
        Some(OracleArg::Grid(step)) => {
            let tensor = tensor_oracle_interval(&jc, &cfg, step)?;
            let full = full_oracle_interval(&jc, &cfg, &GridSpec::new(step)?)?;
            checks.push(check("tensor_within_full", &full, &tensor, GRID_SLACK));
            checks.push(check("full_within_outer", &sw.outer, &full, EXACT_SLACK));
            checks.push(check("full_within_crude", &crude, &full, EXACT_SLACK));
            intervals.push(NamedInterval::new("tensor_oracle", &tensor, scale));
            intervals.push(NamedInterval::new("full_oracle", &full, scale));
        }
        Some(OracleArg::MonteCarlo(n)) => {
            let seed = require_seed(args.seed)?;
            let mc = McSpec::new(n, seed)?;
            let (points, oracle, agree) = mc_points(
                |p| plugin_mi(p, dims),
                |u| expected_mi(u, dims).expect("dimensions match"),
                &flat,
                &cfg,
                &mc,
                scale,
            )?;
            checks.push(agree);
            intervals.push(NamedInterval::new("oracle", &oracle, scale));
            monte_carlo = points;
            diag.seed = Some(seed);
            diag.samples = Some(n);
            diag.rng = Some(RNG_NOTE.into());
        }
        None => {}
    }
    diag.oracle = args.oracle.map(|o| o.describe());

    Ok(RunReport {
        tool: "idm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "mi".into(),
        method: "crude+sandwich".into(),
        input: InputEcho { counts: None, table: Some(jc.rows()), s: cfg.s() },
        units: unit.into(),
        intervals,
        witnesses,
        monte_carlo,
        credible: None,
        checks,
        diagnostics: diag,
        wall_time_s: None,
    })
}

const KAPPA_CAVEAT: &str = "mean_plus_kappa_sigma widens the robust mean by kappa standard deviations at the \
center prior only; the spread of the standard deviation across priors is ignored, so it can undercover slightly. \
union is the conservative interval.";

fn prior_weights(d: usize, t_grid: Option<f64>) -> Result<Vec<TVector>, CliError> {
    let Some(step) = t_grid else {
        return Ok(default_t_set(d)?);
    };
    let mut ts = simplex_grid(d, &GridSpec::new(step)?)?;
    let center = TVector::center(d)?;
    let has_center = ts.iter().any(|t| t.values().iter().zip(center.values()).all(|(a, b)| (a - b).abs() < 1e-12));
    if !has_center {
        ts.push(center);
    }
    Ok(ts)
}

pub fn credible(args: &CredibleArgs) -> Result<RunReport, CliError> {
    let loaded = load(&args.input)?;
    let mut notes = Vec::new();
    let cfg = config(&args.input, &loaded, &mut notes)?;
    let seed = require_seed(args.seed)?;
    let mode = match args.mode {
        ModeArg::TwoSided => CredibleMode::TwoSidedShortest,
        ModeArg::Lower => CredibleMode::OneSidedLower,
        ModeArg::Upper => CredibleMode::OneSidedUpper,
    };
    let spec = CredibleSpec::new(args.alpha, mode)?.with_gaussian_approx(args.gaussian);
    let mc = McSpec::new(args.samples, seed)?;
    let kappa = kappa_from_alpha(args.alpha)?;

    let (mut unit, mut scale) = units(args.output.bits);
    let mut table = None;
    let (counts, stat_name, robust_mean, result, t_set);
    match args.stat {
        StatArg::Entropy => {
            counts = Counts::new(loaded.data.into_counts()?)?;
            t_set = prior_weights(counts.len(), args.t_grid)?;
            stat_name = "entropy".to_string();
            robust_mean = entropy_interval_exact(&counts, &cfg);
            result = robust_credible_union(plugin_entropy, &counts, &cfg, &spec, &mc, &t_set)?;
        }
        StatArg::MutualInfo => {
            let jc = JointCounts::from_rows(loaded.data.into_table()?)?;
            let dims = jc.dims();
            counts = jc.flattened();
            t_set = prior_weights(counts.len(), args.t_grid)?;
            stat_name = "mi".to_string();
            robust_mean = mi_sandwich(&jc, &cfg)?.outer;
            result = robust_credible_union(|p| plugin_mi(p, dims), &counts, &cfg, &spec, &mc, &t_set)?;
            table = Some(jc.rows());
        }
        StatArg::Component(i) => {
            counts = Counts::new(loaded.data.into_counts()?)?;
            if i >= counts.len() {
                return Err(CliError::Usage(format!("component {i} is out of range for {} categories", counts.len())));
            }
            if args.output.bits {
                notes.push("--bits has no effect on a component statistic".into());
            }
            (unit, scale) = ("probability", 1.0);
            t_set = prior_weights(counts.len(), args.t_grid)?;
            stat_name = format!("component:{i}");
            let u0 = u_zero(&counts, &cfg);
            let lo = u0.values()[i];
            robust_mean = Interval::new(lo, lo + u0.sigma(), IntervalKind::Exact)?;
            result = robust_credible_union(|p| p[i], &counts, &cfg, &spec, &mc, &t_set)?;
        }
    }

    let center = TVector::center(counts.len())?;
    let reference = result.per_prior.iter().find(|p| p.t == center).unwrap_or(&result.per_prior[0]);
    let sigma_star = reference.std_dev;

    let mut intervals = vec![
        NamedInterval::new("robust_mean", &robust_mean, scale),
        NamedInterval::from_bounds(
            "union",
            result.interval.kind(),
            result.interval.lower() * scale,
            result.interval.upper() * scale,
        ),
    ];
    if mode == CredibleMode::TwoSidedShortest {
        let widened = mean_plus_kappa_sigma(&robust_mean, sigma_star, args.alpha)?;
        intervals.push(NamedInterval::new("mean_plus_kappa_sigma", &widened, scale));
    } else {
        notes.push("mean_plus_kappa_sigma is reported for two-sided intervals only".into());
    }

    let m = args.samples as f64;
    let audit_slack = 3.0 * (args.alpha * (1.0 - args.alpha) / m).sqrt();
    let checks = vec![Check {
        name: "union_covers_each_prior".into(),
        passed: result.per_prior.iter().all(|p| p.coverage >= args.alpha - audit_slack),
        slack: audit_slack,
    }];

    let finite = |x: f64| x.is_finite().then_some(x * scale);
    let per_prior = result
        .per_prior
        .iter()
        .map(|p| PriorEntry {
            vertex: p.vertex,
            t: p.t.values().to_vec(),
            mean: p.mean * scale,
            std_dev: p.std_dev * scale,
            lower: finite(p.lower),
            upper: finite(p.upper),
            coverage: p.coverage,
        })
        .collect();

    let mut diag = diagnostics(&counts, &cfg, notes);
    if let Some(rows) = &table {
        diag.rows = Some(rows.len());
        diag.cols = rows.first().map(Vec::len);
    }
    diag.seed = Some(seed);
    diag.samples = Some(args.samples);
    diag.rng = Some(RNG_NOTE.into());
    diag.oracle = args.t_grid.map(|step| format!("t_grid:{step}"));

    Ok(RunReport {
        tool: "idm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "credible".into(),
        method: result.method.as_str().into(),
        input: InputEcho { counts: table.is_none().then(|| counts.values().to_vec()), table, s: cfg.s() },
        units: unit.into(),
        intervals,
        witnesses: Vec::new(),
        monte_carlo: Vec::new(),
        credible: Some(CredibleSection {
            stat: stat_name,
            alpha: args.alpha,
            mode: mode.as_str().into(),
            gaussian_approx: args.gaussian,
            kappa,
            sigma_star: sigma_star * scale,
            per_prior,
            caveat: KAPPA_CAVEAT.into(),
        }),
        checks,
        diagnostics: diag,
        wall_time_s: None,
    })
}
