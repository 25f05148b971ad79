use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientModel, OuMoments};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::sim::{
    column_moments, coupled_pair, mean_stderr, path_modulus, replication_seed, simulate,
    strong_error, sup_moment, ParticleEnsemble, PowerMean,
};
use crate::transport::{w2_to_gaussian_1d, wasserstein_1d_quantile, EmpiricalMeasure, WassersteinSolver};

use super::config::{gaussian_start, ExperimentConfig, ExperimentKind, ReferenceSpec};
use super::fit::{fit_loglog_slope, SlopeFit};

/// One CSV row: a grid size, particle count or named statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub key: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitOutcome {
    Fitted(SlopeFit),
    /// No meaningful slope, e.g. every error is exactly zero.
    Degenerate(String),
}

impl FitOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted(f) => Some(f.slope),
            FitOutcome::Degenerate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Outcome of one study, with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub fit: Option<FitOutcome>,
    /// Key of the first row used in the fit.
    pub fit_window: Option<String>,
    /// Slope of the theoretical reference line drawn with rate plots.
    pub reference_slope: Option<f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<(String, String)>,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            rows: Vec::new(),
            fit: None,
            fit_window: None,
            reference_slope: None,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.config.kind
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }
}

/// Seed of replication `r`; replication 0 uses the experiment seed itself.
pub fn cell_seed(seed: u64, r: usize) -> u64 {
    if r == 0 {
        seed
    } else {
        replication_seed(seed, r as u64)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    match config.kind {
        ExperimentKind::Rate => run_rate_study(config),
        ExperimentKind::Chaos => run_chaos_study(config),
        ExperimentKind::Oracle => run_oracle_study(config),
        ExperimentKind::Modulus => run_modulus_study(config),
        ExperimentKind::Moment => run_moment_study(config),
    }
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::config(format!(
            "expected a {} experiment, got {}",
            kind.name(),
            config.kind.name()
        )));
    }
    config.validate()
}

fn grid(config: &ExperimentConfig, m: usize) -> Result<TimeGrid> {
    TimeGrid::new(config.horizon, m)
}

fn pooled_row(key: String, reps: &[PowerMean]) -> Result<Row> {
    let pooled = PowerMean::pool(reps)?;
    Ok(Row {
        key,
        estimate: pooled.estimate(),
        stderr: pooled.stderr(),
        n_reps: reps.len(),
    })
}

/// Runs `cell` for every replication in parallel; a divergence fails the
/// cell and is recorded as a failed check instead of aborting the study.
fn replicate<T: Send>(
    report: &mut Report,
    label: String,
    cell: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Option<Vec<T>>> {
    let seed = report.config.seed;
    let results: Vec<Result<T>> = (0..report.config.replications)
        .into_par_iter()
        .map(|r| cell(cell_seed(seed, r)))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for res in results {
        match res {
            Ok(v) => out.push(v),
            Err(e @ Error::Divergence { .. }) => {
                report.checks.push(Check::new(&format!("no divergence {label}"), false, e.to_string()));
                return Ok(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Some(out))
}

pub fn run_rate_study(config: &ExperimentConfig) -> Result<Report> {
    expect_kind(config, ExperimentKind::Rate)?;
    coupled_error_table(config)
}

/// Strong errors of coupled coarse/fine pairs for every grid size in the
/// config, with a slope fit when there are enough points. Does not enforce
/// the minimum number of grid sizes of a rate study.
pub fn coupled_error_table(config: &ExperimentConfig) -> Result<Report> {
    let model = config.model.build()?;
    let mut report = Report::new(config);
    for &m in &config.steps {
        let g = grid(config, m)?;
        let cells = replicate(&mut report, format!("M={m}"), |seed| {
            let (c, f) = coupled_pair(&*model, g, config.refinement, config.particles[0], seed, &config.initial)?;
            strong_error(&c, &f, config.p)
        })?;
        if let Some(cells) = cells {
            report.rows.push(pooled_row(m.to_string(), &cells)?);
        }
    }
    report.reference_slope = Some(0.5);
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (config.horizon / r.key.parse::<f64>().expect("numeric key"), r.estimate))
        .collect();
    let (fit, window) = fit_decreasing_tail(&points);
    report.fit_window = window.map(|i| report.rows[i].key.clone());
    if let Some([lo, hi]) = config.slope_band {
        let check = match fit.slope() {
            Some(s) => Check::new("slope in band", (lo..=hi).contains(&s), format!("slope {s} vs [{lo}, {hi}]")),
            None => Check::new("slope in band", false, "no slope could be fitted".into()),
        };
        report.checks.push(check);
    }
    report.fit = Some(fit);
    Ok(report)
}

/// Fits the longest tail over which the errors strictly decrease as `h`
/// shrinks (points are ordered by increasing `M`).
fn fit_decreasing_tail(points: &[(f64, f64)]) -> (FitOutcome, Option<usize>) {
    if points.is_empty() {
        return (FitOutcome::Degenerate("no data".into()), None);
    }
    if points.iter().all(|(_, e)| *e == 0.0) {
        return (FitOutcome::Degenerate("all errors are zero".into()), None);
    }
    let mut start = points.len() - 1;
    while start > 0 && points[start - 1].1 > points[start].1 {
        start -= 1;
    }
    let window = &points[start..];
    if window.len() < 3 {
        return (
            FitOutcome::Degenerate(format!("monotone window has {} points", window.len())),
            Some(start),
        );
    }
    match fit_loglog_slope(window) {
        Ok(f) => (FitOutcome::Fitted(f), Some(start)),
        Err(e) => (FitOutcome::Degenerate(e.to_string()), Some(start)),
    }
}

enum Reference {
    Gaussian(Vec<(f64, f64)>),
    Ensemble(ParticleEnsemble),
}

impl Reference {
    fn distance(&self, ens: &ParticleEnsemble, m: usize, p: f64) -> Result<f64> {
        match self {
            Reference::Gaussian(marginals) => {
                let (mean, var) = marginals[m];
                w2_to_gaussian_1d(ens.column(m), mean, var.sqrt())
            }
            Reference::Ensemble(r) if ens.dim() == 1 => wasserstein_1d_quantile(ens.column(m), r.column(m), p),
            Reference::Ensemble(r) => {
                let a = EmpiricalMeasure::new(ens.dim(), ens.column(m))?;
                let b = EmpiricalMeasure::new(r.dim(), r.column(m))?;
                WassersteinSolver::default().distance(&a, &b, p)
            }
        }
    }
}

fn chaos_reference(config: &ExperimentConfig, model: &dyn CoefficientModel, g: TimeGrid) -> Result<(Reference, String)> {
    match &config.reference {
        Some(ReferenceSpec::Gaussian) => {
            let params = config.model.ou_params().expect("validated OU model");
            let (m0, v0) = gaussian_start(&config.initial)?[0];
            let marginals = (0..=g.steps())
                .map(|k| OuMoments::gaussian_marginal(&params, m0, v0, g.knot(k)))
                .collect::<Result<Vec<_>>>()?;
            Ok((Reference::Gaussian(marginals), "analytic Gaussian marginals".into()))
        }
        Some(ReferenceSpec::Ensemble { particles, seed }) => {
            let seed = seed.unwrap_or(config.seed);
            let ens = simulate(model, g, *particles, seed, &config.initial)?;
            Ok((
                Reference::Ensemble(ens),
                format!("simulated ensemble N={particles} seed={seed}"),
            ))
        }
        None => Err(Error::config("chaos study needs a reference law")),
    }
}

pub fn run_chaos_study(config: &ExperimentConfig) -> Result<Report> {
    expect_kind(config, ExperimentKind::Chaos)?;
    let model = config.model.build()?;
    let g = grid(config, config.steps[0])?;
    let (reference, label) = chaos_reference(config, &*model, g)?;
    let mut report = Report::new(config);
    report.notes.push(("reference".into(), label));
    for &n in &config.particles {
        let cells = replicate(&mut report, format!("N={n}"), |seed| {
            let ens = simulate(&*model, g, n, seed, &config.initial)?;
            (0..=g.steps()).try_fold(0.0f64, |acc, m| Ok(acc.max(reference.distance(&ens, m, config.p)?)))
        })?;
        if let Some(cells) = cells {
            let (mean, se) = mean_stderr(&cells);
            report.rows.push(Row {
                key: n.to_string(),
                estimate: mean,
                stderr: se,
                n_reps: cells.len(),
            });
        }
    }
    let e = report.estimates();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    report.checks.push(Check::new(
        "strictly decreasing in N",
        decreasing && e.len() == config.particles.len(),
        format!("{e:?}"),
    ));
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.key.parse::<f64>().expect("numeric key"), r.estimate))
        .collect();
    report.fit = Some(match fit_loglog_slope(&points) {
        Ok(f) => FitOutcome::Fitted(f),
        Err(e) => FitOutcome::Degenerate(e.to_string()),
    });
    Ok(report)
}

pub fn run_modulus_study(config: &ExperimentConfig) -> Result<Report> {
    expect_kind(config, ExperimentKind::Modulus)?;
    let model = config.model.build()?;
    let mut report = Report::new(config);
    report.notes.push((
        "estimate".into(),
        "knot-increment modulus divided by sqrt(h |ln h|)".into(),
    ));
    for &m in &config.steps {
        let g = grid(config, m)?;
        let scale = (g.step_size() * g.step_size().ln().abs()).sqrt();
        let cells = replicate(&mut report, format!("M={m}"), |seed| {
            path_modulus(&simulate(&*model, g, config.particles[0], seed, &config.initial)?, config.p)
        })?;
        if let Some(cells) = cells {
            let mut row = pooled_row(m.to_string(), &cells)?;
            row.estimate /= scale;
            row.stderr /= scale;
            report.rows.push(row);
        }
    }
    ratio_check(&mut report, "ratio bounded by first", true);
    Ok(report)
}

pub fn run_moment_study(config: &ExperimentConfig) -> Result<Report> {
    expect_kind(config, ExperimentKind::Moment)?;
    let model = config.model.build()?;
    let mut report = Report::new(config);
    for &m in &config.steps {
        let g = grid(config, m)?;
        let cells = replicate(&mut report, format!("M={m}"), |seed| {
            sup_moment(&simulate(&*model, g, config.particles[0], seed, &config.initial)?, config.p)
        })?;
        if let Some(cells) = cells {
            report.rows.push(pooled_row(m.to_string(), &cells)?);
        }
    }
    ratio_check(&mut report, "max/min ratio", false);
    Ok(report)
}

/// With `against_first`, compares `max / first`; otherwise `max / min`.
fn ratio_check(report: &mut Report, name: &str, against_first: bool) {
    let Some(bound) = report.config.max_ratio else {
        return;
    };
    let e = report.estimates();
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let base = if against_first {
        e.first().copied().unwrap_or(f64::NAN)
    } else {
        e.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let ratio = max / base;
    let complete = e.len() == report.config.steps.len();
    let passed = complete && if against_first { ratio <= bound } else { ratio < bound };
    report
        .checks
        .push(Check::new(name, passed, format!("ratio {ratio} vs bound {bound}")));
}

/// Sample mean and variance at `T` against the moment ODE of the OU model.
pub fn run_oracle_study(config: &ExperimentConfig) -> Result<Report> {
    expect_kind(config, ExperimentKind::Oracle)?;
    let model = config.model.build()?;
    let params = config.model.ou_params().expect("validated OU model");
    let starts = gaussian_start(&config.initial)?;
    let (n, m) = (config.particles[0], config.steps[0]);
    let g = grid(config, m)?;
    let mut report = Report::new(config);
    let Some(cells) = replicate(&mut report, format!("M={m}"), |seed| {
        Ok(column_moments(&simulate(&*model, g, n, seed, &config.initial)?, m))
    })?
    else {
        return Ok(report);
    };
    let reps = cells.len() as f64;
    for (j, &(m0, v0)) in starts.iter().enumerate() {
        let exact = OuMoments::from_mean_variance(m0, v0).evolve(&params, config.horizon, 10_000);
        let mean = cells.iter().map(|(mu, _)| mu[j]).sum::<f64>() / reps;
        let var = cells.iter().map(|(_, v)| v[j]).sum::<f64>() / reps;
        let se_mean = (var / (n as f64 * reps)).sqrt();
        let se_var = var * (2.0 / ((n - 1).max(1) as f64 * reps)).sqrt();
        for (name, est, se, truth) in [
            ("mean", mean, se_mean, exact.mean),
            ("variance", var, se_var, exact.variance()),
        ] {
            let key = format!("{name}[{j}]");
            report.rows.push(Row {
                key: key.clone(),
                estimate: est,
                stderr: se,
                n_reps: cells.len(),
            });
            report.notes.push((format!("exact {key}"), truth.to_string()));
            let dev = (est - truth).abs();
            report.checks.push(Check::new(
                &format!("{key} within 3 stderr"),
                dev <= 3.0 * se,
                format!("|{est} - {truth}| = {dev} vs 3 x {se}"),
            ));
        }
    }
    Ok(report)
}
