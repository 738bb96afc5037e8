//! Subcommand bodies. Each returns tables; writing happens in `run`.

use std::fs;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qshrink::covariance::{estimate_covariance, CovarianceOptions};
use qshrink::diagnostics::{diagnose, DiagnosticsOptions};
use qshrink::io::{fmt_f64, load_csv};
use qshrink::montecarlo::{evaluate_real, run_mc, EvalMode, McRow, Method, SimConfig};
use qshrink::penalized::{default_path_shape, fit_path};
use qshrink::qprocess::{default_tau_grid, quantile_process};
use qshrink::quantile::{fit_quantile, SolverStatus};
use qshrink::risk::{risk_curve, AsymptoticParams};
use qshrink::shrinkage::{select_submodel_bic, wald_stat, EstimatorKind, ShrinkageFamily, DEFAULT_MAX_SUBSET};
use qshrink::special::{chisq_critical, gamma_q};
use qshrink::data::parse_index_list;
use qshrink::{Dataset, PartitionSpec};

use crate::config::{EvalKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, DataSummary, Manifest, Timings, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Full-model quantile fits (and the sub-model when a partition is given)
    Fit,
    /// Wald test of the tested block at each τ
    Test,
    /// FM, SM, pretest, Stein and positive-part Stein coefficients
    Shrink,
    /// Penalized quantile regression path (alpha_mix 1 lasso, 0 ridge)
    Penalize,
    /// Monte Carlo comparison over ρ and τ
    Simulate,
    /// Asymptotic risk curves over the noncentrality grid
    Risk,
    /// Durbin–Watson, ACF, VIF, condition ratio and outlier test
    Diagnose,
    /// Resampling PMAD comparison on user data
    Evaluate,
    /// Coefficients over a τ grid with bootstrap bands and the OLS overlay
    Qprocess,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Test => "test",
            Command::Shrink => "shrink",
            Command::Penalize => "penalize",
            Command::Simulate => "simulate",
            Command::Risk => "risk",
            Command::Diagnose => "diagnose",
            Command::Evaluate => "evaluate",
            Command::Qprocess => "qprocess",
        }
    }
}

/// A CSV table with preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

fn num(v: f64) -> String {
    fmt_f64(v)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn one_based(idx: &[usize]) -> String {
    idx.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Converged => "converged",
        SolverStatus::IterationLimit => "iteration-limit",
        SolverStatus::Degenerate => "degenerate",
    }
}

pub struct Loaded {
    pub data: Dataset,
    pub summary: DataSummary,
}

pub fn load(cfg: &RunConfig) -> CliResult<Loaded> {
    let path = cfg.data.as_ref().ok_or_else(|| CliError::Config("--data is required".into()))?;
    let response = cfg
        .response
        .as_deref()
        .ok_or_else(|| CliError::Config("--response is required".into()))?;
    let l = load_csv(path, response, cfg.covariates.as_deref())?;
    let data = if cfg.no_intercept { l.data.without_intercept() } else { l.data };
    let summary = DataSummary {
        path: path.clone(),
        response: response.to_string(),
        covariates: data.labels().to_vec(),
        rows: data.n(),
        dropped_rows: l.dropped_rows,
    };
    Ok(Loaded { data, summary })
}

fn explicit_partition(cfg: &RunConfig, p: usize, intercept: bool) -> CliResult<Option<PartitionSpec>> {
    let keep = cfg.keep.as_deref().map(parse_index_list).transpose()?;
    let test = cfg.test_idx.as_deref().map(parse_index_list).transpose()?;
    let spec = match (keep, test) {
        (None, None) => return Ok(None),
        (Some(k), None) => PartitionSpec::from_keep(k, p, intercept)?,
        (None, Some(t)) => {
            let k = (0..p).filter(|j| !t.contains(j)).collect();
            PartitionSpec::new(k, t, p, intercept)?
        }
        (Some(k), Some(t)) => PartitionSpec::new(k, t, p, intercept)?,
    };
    Ok(Some(spec))
}

/// Explicit `keep`/`test_idx`, otherwise the BIC-selected sub-model at `tau`.
fn partition_at(cfg: &RunConfig, data: &Dataset, tau: f64, notes: &mut Vec<String>) -> CliResult<Option<PartitionSpec>> {
    if let Some(p) = explicit_partition(cfg, data.p(), data.has_intercept())? {
        return Ok(Some(p));
    }
    let sel = select_submodel_bic(data, tau, DEFAULT_MAX_SUBSET)?;
    notes.push(format!(
        "tau {tau}: BIC ({}) keeps covariates [{}]",
        if sel.exhaustive { "exhaustive" } else { "forward" },
        one_based(&sel.keep)
    ));
    Ok(sel.partition)
}

fn require_partition(p: Option<PartitionSpec>, tau: f64) -> CliResult<PartitionSpec> {
    p.ok_or_else(|| CliError::Config(format!("tau {tau}: BIC keeps every covariate, nothing to test; pass --keep")))
}

fn cov_opts(cfg: &RunConfig) -> CovarianceOptions {
    CovarianceOptions {
        bandwidth: cfg.bandwidth,
        ..Default::default()
    }
}

pub fn fit(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let part = explicit_partition(cfg, data.p(), data.has_intercept())?;
    let labels = data.coef_labels();
    let mut coefs = Table::new("coefficients.csv", &["tau", "model", "covariate", "estimate"]);
    let mut summary = Table::new(
        "fit_summary.csv",
        &["tau", "model", "objective", "status", "multiple_optima", "iterations"],
    );
    for tau in cfg.taus_or(&[0.5]) {
        let mut fits = vec![("FM", fit_quantile(data, tau, None)?)];
        if let Some(p) = &part {
            fits.push(("SM", fit_quantile(data, tau, Some(p))?));
        }
        for (model, f) in fits {
            for (l, b) in labels.iter().zip(f.beta.iter()) {
                coefs.push(vec![num(tau), model.into(), l.clone(), num(*b)]);
            }
            summary.push(vec![
                num(tau),
                model.into(),
                num(f.objective),
                status_name(f.status).into(),
                f.multiple_optima.to_string(),
                f.iterations.to_string(),
            ]);
        }
    }
    Ok(Output {
        tables: vec![coefs, summary],
        notes: Vec::new(),
    })
}

pub fn test(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let mut out = Output::default();
    let mut t = Table::new(
        "wald.csv",
        &["tau", "keep", "test", "p2", "wald", "critical", "p_value", "reject", "omega_sq", "bandwidth"],
    );
    for tau in cfg.taus_or(&[0.5]) {
        let part = require_partition(partition_at(cfg, data, tau, &mut out.notes)?, tau)?;
        let full = fit_quantile(data, tau, None)?;
        let cov = estimate_covariance(data, &full, &part, cov_opts(cfg))?;
        let w = wald_stat(&full, &cov, data.n())?;
        let df = part.p2() as f64;
        let crit = chisq_critical(cfg.alpha, df);
        t.push(vec![
            num(tau),
            one_based(part.keep()),
            one_based(part.test()),
            part.p2().to_string(),
            num(w),
            num(crit),
            num(gamma_q(0.5 * df, 0.5 * w)),
            (w > crit).to_string(),
            num(cov.omega_sq),
            cov.bandwidth.to_string(),
        ]);
    }
    out.tables.push(t);
    Ok(out)
}

pub fn shrink(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let mut out = Output::default();
    let labels = data.coef_labels();
    let mut coefs = Table::new("shrinkage.csv", &["tau", "estimator", "covariate", "estimate"]);
    let mut summary = Table::new(
        "shrinkage_summary.csv",
        &["tau", "estimator", "wald", "p2", "d", "critical", "chose_submodel", "warnings"],
    );
    for tau in cfg.taus_or(&[0.5]) {
        let part = require_partition(partition_at(cfg, data, tau, &mut out.notes)?, tau)?;
        let fam = ShrinkageFamily::fit(data, tau, &part, cov_opts(cfg))?;
        for kind in EstimatorKind::ALL {
            let r = match fam.estimate(kind, cfg.alpha) {
                Ok(r) => r,
                Err(e) => {
                    out.notes.push(format!("tau {tau}: {} skipped: {e}", kind.name()));
                    continue;
                }
            };
            for (l, b) in labels.iter().zip(r.beta.iter()) {
                coefs.push(vec![num(tau), kind.name().into(), l.clone(), num(*b)]);
            }
            summary.push(vec![
                num(tau),
                kind.name().into(),
                num(r.wald),
                fam.p2.to_string(),
                opt(r.d),
                opt(r.critical),
                r.chose_submodel.map(|b| b.to_string()).unwrap_or_default(),
                r.warnings.join("; "),
            ]);
        }
    }
    out.tables.extend([coefs, summary]);
    Ok(out)
}

pub fn penalize(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let labels = data.coef_labels();
    let (n_def, r_def) = default_path_shape(data.n(), data.p());
    let n_lambda = cfg.n_lambda.unwrap_or(n_def);
    let ratio = cfg.lambda_ratio.unwrap_or(r_def);
    let mut t = Table::new(
        "path.csv",
        &["tau", "index", "lambda", "h", "objective", "kkt", "covariate", "estimate"],
    );
    for tau in cfg.taus_or(&[0.5]) {
        let path = fit_path(data, tau, cfg.alpha_mix, n_lambda, ratio)?;
        for k in 0..path.lambdas.len() {
            for (j, l) in labels.iter().enumerate() {
                t.push(vec![
                    num(tau),
                    k.to_string(),
                    num(path.lambdas[k]),
                    num(path.h[k]),
                    num(path.objectives[k]),
                    num(path.kkt[k]),
                    l.clone(),
                    num(path.betas[(j, k)]),
                ]);
            }
        }
    }
    Ok(Output {
        tables: vec![t],
        notes: vec![format!("alpha_mix {}, {n_lambda} lambdas, ratio {ratio}", cfg.alpha_mix)],
    })
}

fn mc_row(prefix: Vec<String>, r: &McRow) -> Vec<String> {
    let mut v = prefix;
    v.extend([
        r.tau.map(num).unwrap_or_default(),
        r.estimator.name().to_string(),
        r.n_ok.to_string(),
        r.n_failed.to_string(),
        num(r.pmad_mean),
        num(r.pmad_se),
        opt(r.coef_mad_mean),
        opt(r.coef_mad_se),
    ]);
    v
}

const MC_HEADER: [&str; 8] = [
    "tau",
    "estimator",
    "n_ok",
    "n_failed",
    "pmad_mean",
    "pmad_se",
    "coef_mad_mean",
    "coef_mad_se",
];

pub fn simulate(cfg: &RunConfig) -> CliResult<Output> {
    let p = cfg.beta_true.len();
    let keep = match explicit_partition(cfg, p, true)? {
        Some(part) => part.keep().to_vec(),
        None => SimConfig::standard(0.0, vec![0.5], 1, 0).keep,
    };
    let mut out = Output::default();
    let mut header = vec!["rho"];
    header.extend(MC_HEADER);
    let mut t = Table::new("simulation.csv", &header);
    for &rho in &cfg.rho {
        let sim = SimConfig {
            n_train: cfg.n_train,
            n_val: cfg.n_val,
            n_test: cfg.n_test,
            beta_true: cfg.beta_true.clone(),
            rho,
            design_base: cfg.design_base,
            tau_list: cfg.taus_or(&[0.25, 0.5, 0.75]),
            n_reps: cfg.n_reps,
            base_seed: cfg.seed,
            keep: keep.clone(),
            fit: cfg.fit_settings(),
        };
        let s = run_mc(&sim)?;
        for r in &s.rows {
            t.push(mc_row(vec![num(rho)], r));
        }
        out.notes.extend(s.failure_notes.iter().map(|n| format!("rho {rho}: {n}")));
    }
    out.tables.push(t);
    Ok(out)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{what} must be a nonempty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn risk_params(cfg: &RunConfig, data: Option<&Dataset>, notes: &mut Vec<String>) -> CliResult<AsymptoticParams> {
    let (gamma, p1, omega_sq) = match (&cfg.gamma, data) {
        (Some(g), _) => {
            let p1 = cfg.p1.ok_or_else(|| CliError::Config("p1 is required with gamma".into()))?;
            (matrix(g, "gamma")?, p1, cfg.omega_sq.unwrap_or(1.0))
        }
        (None, Some(d)) => {
            let tau = cfg.taus_or(&[0.5])[0];
            let part = require_partition(partition_at(cfg, d, tau, notes)?, tau)?;
            let full = fit_quantile(d, tau, None)?;
            let cov = estimate_covariance(d, &full, &part, cov_opts(cfg))?;
            notes.push(format!("tau {tau}: parameters estimated from data, omega_sq {}", cov.omega_sq));
            (cov.blocks.precision.clone(), cov.blocks.p1, cfg.omega_sq.unwrap_or(cov.omega_sq))
        }
        (None, None) => return Err(CliError::Config("risk needs either gamma and p1, or --data".into())),
    };
    let p2 = gamma.nrows().saturating_sub(p1);
    let dir = match &cfg.gamma_direction {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_element(p2, 1.0),
    };
    let weight = match &cfg.weight {
        Some(w) => matrix(w, "weight")?,
        None => DMatrix::identity(p1, p1),
    };
    Ok(AsymptoticParams::new(&gamma, p1, omega_sq, dir, weight)?)
}

pub fn risk(cfg: &RunConfig, data: Option<&Dataset>) -> CliResult<Output> {
    let mut out = Output::default();
    let params = risk_params(cfg, data, &mut out.notes)?;
    let kinds: Vec<EstimatorKind> = if params.p2 >= 3 {
        EstimatorKind::ALL.to_vec()
    } else {
        out.notes.push(format!("p2 = {}: Stein-type risks omitted", params.p2));
        vec![EstimatorKind::FM, EstimatorKind::SM, EstimatorKind::PT]
    };
    let curve = risk_curve(&params, &kinds, &cfg.delta_grid, cfg.alpha)?;
    let mut header = vec!["delta"];
    header.extend(kinds.iter().map(|k| k.name()));
    let mut t = Table::new("risk.csv", &header);
    for pt in curve {
        let mut row = vec![num(pt.noncentrality)];
        row.extend(kinds.iter().map(|k| num(pt.risks[k])));
        t.push(row);
    }
    out.tables.push(t);
    Ok(out)
}

pub fn diagnostics(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let rep = diagnose(
        data,
        DiagnosticsOptions {
            max_dw_lag: cfg.max_dw_lag,
            max_acf_lag: cfg.max_acf_lag,
            n_perm: cfg.n_perm,
            seed: cfg.seed,
            outlier_level: cfg.outlier_level,
            scaling: cfg.condition_scaling,
        },
    )?;
    let mut dw = Table::new("durbin_watson.csv", &["lag", "autocorr", "dw", "p_value"]);
    for r in &rep.dw_rows {
        dw.push(vec![r.lag.to_string(), num(r.autocorr), num(r.dw), num(r.p_value)]);
    }
    let mut acf = Table::new("acf.csv", &["lag", "acf"]);
    for (l, v) in rep.acf.iter().enumerate() {
        acf.push(vec![l.to_string(), num(*v)]);
    }
    let mut vif = Table::new("vif.csv", &["covariate", "vif", "collinear_with"]);
    for v in &rep.vif {
        vif.push(vec![v.label.clone(), num(v.value), v.collinear_with.clone().unwrap_or_default()]);
    }
    let mut outl = Table::new("outliers.csv", &["row", "rstudent", "p_value", "p_bonferroni"]);
    for o in &rep.outliers {
        outl.push(vec![(o.index + 1).to_string(), num(o.rstudent), num(o.p_value), num(o.p_bonferroni)]);
    }
    let mut cond = Table::new("condition.csv", &["condition_ratio", "scaling"]);
    cond.push(vec![num(rep.condition_ratio), serde_json::to_value(rep.condition_scaling)?.as_str().unwrap_or("").to_string()]);
    Ok(Output {
        tables: vec![dw, acf, vif, outl, cond],
        notes: Vec::new(),
    })
}

pub fn evaluate(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let mode = match cfg.eval_mode {
        EvalKind::Bootstrap => EvalMode::Bootstrap {
            n_resamples: cfg.n_resamples,
            split_fraction: cfg.split_fraction,
        },
        EvalKind::Kfold => EvalMode::Kfold { k: cfg.k_folds },
    };
    let fit = cfg.fit_settings();
    let needs_partition = fit.estimators.iter().any(|m| m.shrinkage().is_some());
    let mut out = Output::default();
    let mut header = vec!["keep"];
    header.extend(MC_HEADER);
    let mut t = Table::new("evaluation.csv", &header);
    let mut ols_done = false;
    for tau in cfg.taus_or(&[0.25, 0.5, 0.75]) {
        let part = if needs_partition {
            partition_at(cfg, data, tau, &mut out.notes)?
        } else {
            None
        };
        let s = evaluate_real(data, part.as_ref(), &[tau], mode, &fit, cfg.seed)?;
        let keep = part.as_ref().map(|p| one_based(p.keep())).unwrap_or_default();
        for r in &s.rows {
            if r.estimator == Method::Ols {
                if ols_done {
                    continue;
                }
                ols_done = true;
            }
            t.push(mc_row(vec![keep.clone()], r));
        }
        if s.redraws > 0 {
            out.notes.push(format!("tau {tau}: {} degenerate resamples redrawn", s.redraws));
        }
        out.notes.extend(s.failure_notes.iter().map(|n| format!("tau {tau}: {n}")));
    }
    out.tables.push(t);
    Ok(out)
}

pub fn qprocess(cfg: &RunConfig, data: &Dataset) -> CliResult<Output> {
    let grid = cfg.tau.clone().unwrap_or_else(default_tau_grid);
    let qp = quantile_process(data, &grid, cfg.n_boot, cfg.level, cfg.seed)?;
    let mut t = Table::new("qprocess.csv", &["covariate", "tau", "estimate", "band_low", "band_high"]);
    for r in &qp.rows {
        t.push(vec![r.covariate.clone(), num(r.tau), num(r.estimate), opt(r.band_low), opt(r.band_high)]);
    }
    let mut o = Table::new("ols.csv", &["covariate", "estimate", "ci_low", "ci_high"]);
    for r in &qp.ols {
        o.push(vec![r.covariate.clone(), num(r.estimate), num(r.ci_low), num(r.ci_high)]);
    }
    let mut notes = Vec::new();
    if qp.failures > 0 {
        notes.push(format!("{} of {} bootstrap resamples failed and were excluded", qp.failures, qp.n_boot));
    }
    Ok(Output {
        tables: vec![t, o],
        notes,
    })
}

fn needs_data(cmd: Command, cfg: &RunConfig) -> bool {
    match cmd {
        Command::Simulate => false,
        Command::Risk => cfg.gamma.is_none(),
        _ => true,
    }
}

fn write_table(w: &mut dyn std::io::Write, t: &Table) -> CliResult<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&t.header).map_err(qshrink::Error::from)?;
    for r in &t.rows {
        csv.write_record(r).map_err(qshrink::Error::from)?;
    }
    csv.flush().map_err(qshrink::Error::from)?;
    Ok(())
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Computes the command's tables without touching the output directory.
pub fn compute(cmd: Command, cfg: &RunConfig, data: Option<&Dataset>) -> CliResult<Output> {
    let need = || data.ok_or_else(|| CliError::Config(format!("{} needs --data", cmd.name())));
    match cmd {
        Command::Fit => fit(cfg, need()?),
        Command::Test => test(cfg, need()?),
        Command::Shrink => shrink(cfg, need()?),
        Command::Penalize => penalize(cfg, need()?),
        Command::Simulate => simulate(cfg),
        Command::Risk => risk(cfg, data),
        Command::Diagnose => diagnostics(cfg, need()?),
        Command::Evaluate => evaluate(cfg, need()?),
        Command::Qprocess => qprocess(cfg, need()?),
    }
}

/// Loads data, computes, and writes every table plus the manifest into
/// `cfg.out_dir`.
pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Manifest> {
    let start = Instant::now();
    let loaded = if needs_data(cmd, cfg) { Some(load(cfg)?) } else { None };
    let load_ms = ms(start);
    let t1 = Instant::now();
    let out = compute(cmd, cfg, loaded.as_ref().map(|l| &l.data))?;
    let compute_ms = ms(t1);
    let t2 = Instant::now();
    fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Write {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let mut outputs = Vec::new();
    for t in &out.tables {
        write_atomic(&cfg.out_dir, &t.name, |w| write_table(w, t))?;
        outputs.push(t.name.clone());
    }
    let mut manifest = Manifest {
        tool: "qshrink",
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: qshrink::VERSION,
        command: cmd.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        data: loaded.map(|l| l.summary),
        outputs,
        notes: out.notes,
        timings: Timings::default(),
    };
    manifest.timings = Timings {
        load_ms,
        compute_ms,
        write_ms: ms(t2),
        total_ms: ms(start),
    };
    write_atomic(&cfg.out_dir, MANIFEST_NAME, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w).map_err(|source| CliError::Write {
            path: cfg.out_dir.join(MANIFEST_NAME),
            source,
        })
    })?;
    Ok(manifest)
}
