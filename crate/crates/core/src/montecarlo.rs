//! Data generation, the PMAD metric, the simulation harness and the
//! resampling evaluation of user data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceOptions;
use crate::data::{Dataset, PartitionSpec};
use crate::error::{check_tau, Error, Result};
use crate::penalized::{default_path_shape, fit_path, fit_path_lambdas, select_by_validation, PenaltyOptions};
use crate::quantile::{fit_ols, fit_quantile};
use crate::shrinkage::{EstimatorKind, ShrinkageFamily};

/// Independent random streams of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    TrainDesign = 0,
    TrainErrors = 1,
    ValDesign = 2,
    ValErrors = 3,
    TestDesign = 4,
    TestErrors = 5,
    Resample = 6,
    Permutation = 7,
}

/// Counter-based generator for `(base_seed, replication, role)`.
pub fn stream(base_seed: u64, replication: u64, role: StreamRole) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication.wrapping_mul(16).wrapping_add(role as u64));
    rng
}

fn check_corr(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {v} must lie in (-1, 1)")))
    }
}

/// Rows iid `N(0, Σ)` with `Σ_jk = base^|j−k|`.
pub fn gen_design(n: usize, p: usize, base: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    check_corr(base, "design correlation base")?;
    let sigma = DMatrix::from_fn(p, p, |j, k| base.powi((j as i32 - k as i32).abs()));
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Singular("Toeplitz correlation matrix".into()))?;
    let l = chol.l();
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(z * l.transpose())
}

/// Stationary Gaussian AR(1) errors with unit innovation variance.
pub fn gen_ar1_errors(n: usize, rho: f64, rng: &mut impl Rng) -> Result<DVector<f64>> {
    check_corr(rho, "autocorrelation")?;
    let mut e = DVector::zeros(n);
    if n == 0 {
        return Ok(e);
    }
    let mut prev = rng.sample::<f64, _>(StandardNormal) / (1.0 - rho * rho).sqrt();
    e[0] = prev;
    for i in 1..n {
        prev = rho * prev + rng.sample::<f64, _>(StandardNormal);
        e[i] = prev;
    }
    Ok(e)
}

/// Predictive mean absolute deviation `(1/n)Σ|yᵢ − ŷᵢ|`.
pub fn pmad(beta: &DVector<f64>, test: &Dataset) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::Empty("test set".into()));
    }
    let r = test.residuals(beta)?;
    Ok(r.iter().map(|v| v.abs()).sum::<f64>() / test.n() as f64)
}

/// Mean absolute slope error against the true coefficients.
pub fn coef_mad(beta: &DVector<f64>, truth: &[f64], intercept: bool) -> f64 {
    let off = usize::from(intercept);
    truth.iter().enumerate().map(|(j, b)| (beta[j + off] - b).abs()).sum::<f64>() / truth.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    FM,
    SM,
    PT,
    S,
    PS,
    Ridge,
    Lasso,
    #[serde(rename = "ENET")]
    Enet,
    #[serde(rename = "OLS")]
    Ols,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::FM,
        Method::SM,
        Method::PT,
        Method::S,
        Method::PS,
        Method::Ridge,
        Method::Lasso,
        Method::Enet,
        Method::Ols,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FM => "FM",
            Method::SM => "SM",
            Method::PT => "PT",
            Method::S => "S",
            Method::PS => "PS",
            Method::Ridge => "Ridge",
            Method::Lasso => "Lasso",
            Method::Enet => "ENET",
            Method::Ols => "OLS",
        }
    }

    pub fn shrinkage(self) -> Option<EstimatorKind> {
        match self {
            Method::FM => Some(EstimatorKind::FM),
            Method::SM => Some(EstimatorKind::SM),
            Method::PT => Some(EstimatorKind::PT),
            Method::S => Some(EstimatorKind::S),
            Method::PS => Some(EstimatorKind::PS),
            _ => None,
        }
    }

    /// Mixing weight for the penalized methods.
    pub fn alpha_mix(self, enet: f64) -> Option<f64> {
        match self {
            Method::Ridge => Some(0.0),
            Method::Lasso => Some(1.0),
            Method::Enet => Some(enet),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

fn default_methods() -> Vec<Method> {
    vec![
        Method::FM,
        Method::SM,
        Method::PT,
        Method::PS,
        Method::Ridge,
        Method::Lasso,
        Method::Enet,
        Method::Ols,
    ]
}

fn default_alpha_level() -> f64 {
    0.05
}

fn default_enet() -> f64 {
    0.5
}

fn default_design_base() -> f64 {
    0.5
}

/// Shared fitting settings for the simulation and the resampling evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    #[serde(default = "default_methods")]
    pub estimators: Vec<Method>,
    #[serde(default = "default_alpha_level")]
    pub alpha_level: f64,
    #[serde(default = "default_enet")]
    pub alpha_mix_enet: f64,
    /// Path length; the size-dependent default when absent.
    #[serde(default)]
    pub n_lambda: Option<usize>,
    #[serde(default)]
    pub lambda_ratio: Option<f64>,
    /// HAC truncation lag; the rule-of-thumb default when absent.
    #[serde(default)]
    pub bandwidth: Option<usize>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            estimators: default_methods(),
            alpha_level: default_alpha_level(),
            alpha_mix_enet: default_enet(),
            n_lambda: None,
            lambda_ratio: None,
            bandwidth: None,
        }
    }
}

impl FitSettings {
    fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators requested".into()));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha level {} is outside (0, 1)", self.alpha_level)));
        }
        if !(0.0..=1.0).contains(&self.alpha_mix_enet) {
            return Err(Error::InvalidArgument(format!("alpha_mix {} is outside [0, 1]", self.alpha_mix_enet)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub beta_true: Vec<f64>,
    pub rho: f64,
    #[serde(default = "default_design_base")]
    pub design_base: f64,
    pub tau_list: Vec<f64>,
    pub n_reps: usize,
    pub base_seed: u64,
    /// 0-based retained covariates; the rest form the tested block.
    pub keep: Vec<usize>,
    #[serde(flatten)]
    pub fit: FitSettings,
}

impl SimConfig {
    /// 50/50/200 split, β = (3, 1.5, 0, 0, 2, 0, 0, 0), keep {1, 2, 5}.
    pub fn standard(rho: f64, tau_list: Vec<f64>, n_reps: usize, base_seed: u64) -> Self {
        SimConfig {
            n_train: 50,
            n_val: 50,
            n_test: 200,
            beta_true: vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            rho,
            design_base: 0.5,
            tau_list,
            n_reps,
            base_seed,
            keep: vec![0, 1, 4],
            fit: FitSettings::default(),
        }
    }

    pub fn p(&self) -> usize {
        self.beta_true.len()
    }

    pub fn partition(&self) -> Result<PartitionSpec> {
        PartitionSpec::from_keep(self.keep.clone(), self.p(), true)
    }

    pub fn validate(&self) -> Result<()> {
        check_corr(self.rho, "autocorrelation")?;
        check_corr(self.design_base, "design correlation base")?;
        if self.beta_true.is_empty() {
            return Err(Error::InvalidArgument("beta_true is empty".into()));
        }
        if self.n_train <= self.p() + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_train {} must exceed the number of coefficients {}",
                self.n_train,
                self.p() + 1
            )));
        }
        if self.n_test == 0 {
            return Err(Error::InvalidArgument("n_test must be positive".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
        }
        if self.tau_list.is_empty() {
            return Err(Error::InvalidArgument("tau_list is empty".into()));
        }
        for &t in &self.tau_list {
            check_tau(t)?;
        }
        self.fit.validate()?;
        let needs_val = self.fit.estimators.iter().any(|m| m.alpha_mix(0.5).is_some());
        if needs_val && self.n_val == 0 {
            return Err(Error::InvalidArgument("penalized estimators need a validation set".into()));
        }
        let needs_partition = self.fit.estimators.iter().any(|m| m.shrinkage().is_some());
        if needs_partition {
            self.partition()?;
        }
        Ok(())
    }
}

/// One summary line; `tau` is `None` for the τ-free OLS row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub tau: Option<f64>,
    pub estimator: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    pub pmad_mean: f64,
    pub pmad_se: f64,
    /// Mean absolute slope error; only when the truth is known.
    pub coef_mad_mean: Option<f64>,
    pub coef_mad_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    pub n_reps: usize,
    /// Degenerate resamples that were redrawn.
    pub redraws: usize,
    /// First message per (τ, estimator) among failed fits.
    pub failure_notes: Vec<String>,
}

impl McSummary {
    pub fn row(&self, tau: Option<f64>, m: Method) -> Option<&McRow> {
        self.rows.iter().find(|r| r.estimator == m && r.tau == tau)
    }

    /// Row for `m` at `tau`, or the τ-free row for OLS.
    pub fn lookup(&self, tau: f64, m: Method) -> Option<&McRow> {
        if m == Method::Ols {
            self.row(None, m)
        } else {
            self.row(Some(tau), m)
        }
    }
}

type Key = (Option<u64>, Method);

/// Metrics of one fitted estimator on one replication.
type Outcome = std::result::Result<(f64, Option<f64>), String>;

#[derive(Default)]
struct Accumulator {
    order: Vec<Key>,
    values: BTreeMap<Key, (Vec<f64>, Vec<f64>, usize, Option<String>)>,
}

impl Accumulator {
    fn push(&mut self, key: Key, outcome: Outcome) {
        if !self.values.contains_key(&key) {
            self.order.push(key);
        }
        let entry = self.values.entry(key).or_default();
        match outcome {
            Ok((p, c)) => {
                entry.0.push(p);
                if let Some(c) = c {
                    entry.1.push(c);
                }
            }
            Err(msg) => {
                entry.2 += 1;
                entry.3.get_or_insert(msg);
            }
        }
    }

    fn finish(self, n_reps: usize, redraws: usize) -> McSummary {
        let mut rows = Vec::new();
        let mut notes = Vec::new();
        for key in self.order {
            let (p, c, failed, note) = &self.values[&key];
            let (pm, ps) = mean_se(p);
            let (cm, cs) = if c.is_empty() { (None, None) } else {
                let (m, s) = mean_se(c);
                (Some(m), Some(s))
            };
            let tau = key.0.map(f64::from_bits);
            if let Some(n) = note {
                let t = tau.map_or("-".to_string(), |t| t.to_string());
                notes.push(format!("tau {t} {}: {failed} failed, first: {n}", key.1));
            }
            rows.push(McRow {
                tau,
                estimator: key.1,
                n_ok: p.len(),
                n_failed: *failed,
                pmad_mean: pm,
                pmad_se: ps,
                coef_mad_mean: cm,
                coef_mad_se: cs,
            });
        }
        McSummary {
            rows,
            n_reps,
            redraws,
            failure_notes: notes,
        }
    }
}

/// Mean and `sd/√n`; NaN mean for no values, zero SE for one value.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

fn simulate_set(cfg: &SimConfig, n: usize, rep: u64, design: StreamRole, errors: StreamRole) -> Result<Dataset> {
    let x = gen_design(n, cfg.p(), cfg.design_base, &mut stream(cfg.base_seed, rep, design))?;
    let e = gen_ar1_errors(n, cfg.rho, &mut stream(cfg.base_seed, rep, errors))?;
    let b = DVector::from_column_slice(&cfg.beta_true);
    let y = &x * b + e;
    Dataset::from_parts(x, y)
}

/// Datasets of replication `rep`, centered by the training means.
pub fn simulate_replication(cfg: &SimConfig, rep: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let train = simulate_set(cfg, cfg.n_train, rep, StreamRole::TrainDesign, StreamRole::TrainErrors)?;
    let val = simulate_set(cfg, cfg.n_val, rep, StreamRole::ValDesign, StreamRole::ValErrors)?;
    let test = simulate_set(cfg, cfg.n_test, rep, StreamRole::TestDesign, StreamRole::TestErrors)?;
    let means = train.column_means();
    Ok((train.centered_by(&means)?, val.centered_by(&means)?, test.centered_by(&means)?))
}

/// Where the penalized tuning parameter comes from.
enum Tuning<'a> {
    Validation(&'a Dataset),
    /// Hold out the trailing fraction of the training rows, then refit.
    Holdout(f64),
}

fn penalized_beta(train: &Dataset, tau: f64, alpha_mix: f64, fit: &FitSettings, tuning: &Tuning) -> Result<DVector<f64>> {
    let (dn, dr) = default_path_shape(train.n(), train.p());
    let (n_lambda, ratio) = (fit.n_lambda.unwrap_or(dn), fit.lambda_ratio.unwrap_or(dr));
    match tuning {
        Tuning::Validation(val) => {
            let mut path = fit_path(train, tau, alpha_mix, n_lambda, ratio)?;
            select_by_validation(&mut path, val)?;
            Ok(path.selected_beta().expect("selection just made"))
        }
        Tuning::Holdout(frac) => {
            let n_fit = ((train.n() as f64) * (1.0 - frac)).round() as usize;
            if n_fit <= train.p() + 1 || n_fit >= train.n() {
                return Err(Error::InvalidArgument("training set too small for a tuning holdout".into()));
            }
            let sub = train.select_rows(&(0..n_fit).collect::<Vec<_>>());
            let hold = train.select_rows(&(n_fit..train.n()).collect::<Vec<_>>());
            let mut path = fit_path(&sub, tau, alpha_mix, n_lambda, ratio)?;
            let k = select_by_validation(&mut path, &hold)?;
            let refit = fit_path_lambdas(train, tau, alpha_mix, &path.lambdas[..=k], PenaltyOptions::default())?;
            Ok(refit.beta(k))
        }
    }
}

/// Fits every requested estimator at every τ and scores it on `test`.
fn score_all(
    train: &Dataset,
    test: &Dataset,
    taus: &[f64],
    partition: Option<&PartitionSpec>,
    fit: &FitSettings,
    tuning: &Tuning,
    truth: Option<&[f64]>,
) -> Vec<(Key, Outcome)> {
    let score = |b: &DVector<f64>| -> Outcome {
        let p = pmad(b, test).map_err(|e| e.to_string())?;
        Ok((p, truth.map(|t| coef_mad(b, t, train.has_intercept()))))
    };
    let mut out = Vec::new();
    let shrink: Vec<Method> = fit.estimators.iter().copied().filter(|m| m.shrinkage().is_some()).collect();
    for &tau in taus {
        let combined = shrink.iter().any(|m| !matches!(m, Method::FM | Method::SM));
        if combined {
            let opts = CovarianceOptions {
                bandwidth: fit.bandwidth,
                ..Default::default()
            };
            let family = partition
                .ok_or_else(|| Error::InvalidArgument("shrinkage estimators need a partition".into()))
                .and_then(|p| ShrinkageFamily::fit(train, tau, p, opts));
            for &m in &shrink {
                let res = match &family {
                    Ok(f) => f
                        .estimate(m.shrinkage().unwrap(), fit.alpha_level)
                        .map_err(|e| e.to_string())
                        .and_then(|r| score(&r.beta)),
                    Err(e) => Err(e.to_string()),
                };
                out.push(((Some(tau.to_bits()), m), res));
            }
        } else {
            // FM and SM alone need no covariance estimate
            for &m in &shrink {
                let part = if m == Method::SM {
                    match partition {
                        Some(p) => Some(p),
                        None => {
                            out.push(((Some(tau.to_bits()), m), Err("SM needs a partition".to_string())));
                            continue;
                        }
                    }
                } else {
                    None
                };
                let res = fit_quantile(train, tau, part)
                    .map_err(|e| e.to_string())
                    .and_then(|f| score(&f.beta));
                out.push(((Some(tau.to_bits()), m), res));
            }
        }
        for &m in &fit.estimators {
            if let Some(a) = m.alpha_mix(fit.alpha_mix_enet) {
                let res = penalized_beta(train, tau, a, fit, tuning)
                    .map_err(|e| e.to_string())
                    .and_then(|b| score(&b));
                out.push(((Some(tau.to_bits()), m), res));
            }
        }
    }
    if fit.estimators.contains(&Method::Ols) {
        let res = fit_ols(train).map_err(|e| e.to_string()).and_then(|f| score(&f.beta));
        out.push(((None, Method::Ols), res));
    }
    out
}

/// Runs the simulation; replications execute in parallel and are reduced in
/// replication order, so the summary is identical for a fixed seed.
pub fn run_mc(cfg: &SimConfig) -> Result<McSummary> {
    cfg.validate()?;
    let partition = if cfg.fit.estimators.iter().any(|m| m.shrinkage().is_some()) {
        Some(cfg.partition()?)
    } else {
        None
    };
    let per_rep: Vec<Result<Vec<(Key, Outcome)>>> = (0..cfg.n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let (train, val, test) = simulate_replication(cfg, rep)?;
            Ok(score_all(
                &train,
                &test,
                &cfg.tau_list,
                partition.as_ref(),
                &cfg.fit,
                &Tuning::Validation(&val),
                Some(&cfg.beta_true),
            ))
        })
        .collect();
    let mut acc = Accumulator::default();
    for rep in per_rep {
        for (k, o) in rep? {
            acc.push(k, o);
        }
    }
    Ok(acc.finish(cfg.n_reps, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalMode {
    Bootstrap { n_resamples: usize, split_fraction: f64 },
    Kfold { k: usize },
}

/// Fraction of each training set held out to tune the penalized fits when
/// no separate validation set exists.
pub const TUNING_HOLDOUT: f64 = 0.25;

fn has_constant_column(d: &Dataset) -> bool {
    (0..d.p()).any(|j| {
        let c = d.x().column(j);
        c.iter().all(|&v| v == c[0])
    })
}

/// Resampling evaluation of the estimators on user data.
///
/// Bootstrap: draw `n` rows with replacement, train on the leading
/// `split_fraction`, test on the rest. K-fold: folds from a seeded
/// permutation; each fold is tested once. Covariates are centered by the
/// training means in both modes; penalized fits tune on a trailing holdout
/// of the training rows.
pub fn evaluate_real(
    data: &Dataset,
    partition: Option<&PartitionSpec>,
    tau_list: &[f64],
    mode: EvalMode,
    fit: &FitSettings,
    seed: u64,
) -> Result<McSummary> {
    fit.validate()?;
    for &t in tau_list {
        check_tau(t)?;
    }
    if let Some(p) = partition {
        p.check_against(data)?;
    }
    let n = data.n();
    let tuning = Tuning::Holdout(TUNING_HOLDOUT);
    let split = |rows_train: &[usize], rows_test: &[usize]| -> Result<(Dataset, Dataset)> {
        let tr = data.select_rows(rows_train);
        let te = data.select_rows(rows_test);
        let means = tr.column_means();
        Ok((tr.centered_by(&means)?, te.centered_by(&means)?))
    };
    let (per, redraws, n_units) = match mode {
        EvalMode::Bootstrap { n_resamples, split_fraction } => {
            if n_resamples == 0 {
                return Err(Error::InvalidArgument("n_resamples must be positive".into()));
            }
            if !(split_fraction > 0.0 && split_fraction < 1.0) {
                return Err(Error::InvalidArgument(format!("split fraction {split_fraction} is outside (0, 1)")));
            }
            let n_train = ((n as f64) * split_fraction).round() as usize;
            if n_train <= data.n_coef() || n_train >= n {
                return Err(Error::InvalidArgument("split leaves too few training or test rows".into()));
            }
            let results: Vec<Result<(Vec<(Key, Outcome)>, usize)>> = (0..n_resamples as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream(seed, r, StreamRole::Resample);
                    let mut redrawn = 0;
                    loop {
                        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                        let (tr, te) = split(&rows[..n_train], &rows[n_train..])?;
                        if has_constant_column(&tr) {
                            redrawn += 1;
                            if redrawn > 1000 {
                                return Err(Error::Singular("every resample has a constant column".into()));
                            }
                            continue;
                        }
                        return Ok((score_all(&tr, &te, tau_list, partition, fit, &tuning, None), redrawn));
                    }
                })
                .collect();
            let mut per = Vec::new();
            let mut redraws = 0;
            for r in results {
                let (o, k) = r?;
                per.push(o);
                redraws += k;
            }
            (per, redraws, n_resamples)
        }
        EvalMode::Kfold { k } => {
            if k < 2 || k > n {
                return Err(Error::InvalidArgument(format!("k = {k} folds for {n} rows")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream(seed, 0, StreamRole::Permutation));
            let per: Vec<Result<Vec<(Key, Outcome)>>> = (0..k)
                .into_par_iter()
                .map(|f| {
                    let test: Vec<usize> = (0..n).filter(|i| i % k == f).map(|i| order[i]).collect();
                    let train: Vec<usize> = (0..n).filter(|i| i % k != f).map(|i| order[i]).collect();
                    let (tr, te) = split(&train, &test)?;
                    Ok(score_all(&tr, &te, tau_list, partition, fit, &tuning, None))
                })
                .collect();
            (per.into_iter().collect::<Result<Vec<_>>>()?, 0, k)
        }
    };
    let mut acc = Accumulator::default();
    for o in per {
        for (key, v) in o {
            acc.push(key, v);
        }
    }
    Ok(acc.finish(n_units, redraws))
}
