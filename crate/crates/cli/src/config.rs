//! Flat run configuration. Every key is optional in the JSON file; flags and
//! `--set key=value` pairs override file values.

use std::path::{Path, PathBuf};

use qshrink::diagnostics::ConditionScaling;
use qshrink::montecarlo::{FitSettings, Method, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalKind {
    Bootstrap,
    Kfold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // data
    pub data: Option<PathBuf>,
    pub response: Option<String>,
    pub covariates: Option<Vec<String>>,
    pub no_intercept: bool,
    /// 1-based retained covariates such as `"1,2,5"` or `"1-3"`.
    pub keep: Option<String>,
    /// 1-based tested covariates; the complement of `keep` when absent.
    pub test_idx: Option<String>,

    // shared
    /// Quantile levels; each command has its own default when absent.
    pub tau: Option<Vec<f64>>,
    pub alpha: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub bandwidth: Option<usize>,

    // penalized fits
    pub alpha_mix: f64,
    pub n_lambda: Option<usize>,
    pub lambda_ratio: Option<f64>,
    pub estimators: Vec<Method>,
    pub alpha_mix_enet: f64,

    // simulation
    pub rho: Vec<f64>,
    pub n_reps: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub beta_true: Vec<f64>,
    pub design_base: f64,

    // risk curves
    /// Full precision matrix, retained block first.
    pub gamma: Option<Vec<Vec<f64>>>,
    pub p1: Option<usize>,
    pub omega_sq: Option<f64>,
    /// Direction of the local alternative; all ones when absent.
    pub gamma_direction: Option<Vec<f64>>,
    /// Loss weight on the retained block; identity when absent.
    pub weight: Option<Vec<Vec<f64>>>,
    pub delta_grid: Vec<f64>,

    // resampling evaluation
    pub eval_mode: EvalKind,
    pub n_resamples: usize,
    pub split_fraction: f64,
    pub k_folds: usize,

    // diagnostics
    pub n_perm: usize,
    pub max_dw_lag: usize,
    pub max_acf_lag: usize,
    pub outlier_level: f64,
    pub condition_scaling: ConditionScaling,

    // quantile process
    pub n_boot: usize,
    pub level: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::standard(0.2, vec![0.5], 1000, 1);
        let fit = FitSettings::default();
        RunConfig {
            data: None,
            response: None,
            covariates: None,
            no_intercept: false,
            keep: None,
            test_idx: None,
            tau: None,
            alpha: fit.alpha_level,
            seed: 1,
            out_dir: PathBuf::from("qshrink-out"),
            bandwidth: None,
            alpha_mix: 1.0,
            n_lambda: None,
            lambda_ratio: None,
            estimators: fit.estimators,
            alpha_mix_enet: fit.alpha_mix_enet,
            rho: vec![-0.5, -0.2, 0.2, 0.5],
            n_reps: sim.n_reps,
            n_train: sim.n_train,
            n_val: sim.n_val,
            n_test: sim.n_test,
            beta_true: sim.beta_true,
            design_base: sim.design_base,
            gamma: None,
            p1: None,
            omega_sq: None,
            gamma_direction: None,
            weight: None,
            delta_grid: (0..=60).map(|k| k as f64 * 0.5).collect(),
            eval_mode: EvalKind::Kfold,
            n_resamples: 1000,
            split_fraction: 0.8,
            k_folds: 5,
            n_perm: qshrink::diagnostics::DEFAULT_PERMUTATIONS,
            max_dw_lag: 6,
            max_acf_lag: 20,
            outlier_level: 0.05,
            condition_scaling: ConditionScaling::Raw,
            n_boot: 200,
            level: 0.9,
        }
    }
}

/// Overrides collected from the command line, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub response: Option<String>,
    pub covariates: Option<Vec<String>>,
    pub keep: Option<String>,
    pub test_idx: Option<String>,
    pub tau: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Raw `key=value` pairs; values parse as JSON, falling back to strings.
    pub set: Vec<String>,
}

impl RunConfig {
    pub fn resolve(config_file: Option<&Path>, ov: &Overrides) -> CliResult<RunConfig> {
        let mut doc = match serde_json::to_value(RunConfig::default())? {
            Value::Object(m) => m,
            _ => unreachable!("RunConfig serializes to an object"),
        };
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
                path: path.to_path_buf(),
                source,
            })?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => merge(&mut doc, m),
                _ => return Err(CliError::Config("config file must hold a JSON object".into())),
            }
        }
        let mut put = |k: &str, v: Value| {
            doc.insert(k.to_string(), v);
        };
        if let Some(v) = &ov.data {
            put("data", serde_json::to_value(v)?);
        }
        if let Some(v) = &ov.response {
            put("response", v.clone().into());
        }
        if let Some(v) = &ov.covariates {
            put("covariates", serde_json::to_value(v)?);
        }
        if let Some(v) = &ov.keep {
            put("keep", v.clone().into());
        }
        if let Some(v) = &ov.test_idx {
            put("test_idx", v.clone().into());
        }
        if let Some(v) = &ov.tau {
            put("tau", serde_json::to_value(v)?);
        }
        if let Some(v) = ov.alpha {
            put("alpha", serde_json::to_value(v)?);
        }
        if let Some(v) = ov.seed {
            put("seed", v.into());
        }
        if let Some(v) = &ov.out_dir {
            put("out_dir", serde_json::to_value(v)?);
        }
        for pair in &ov.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("`--set {pair}` is not key=value")))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            put(k.trim(), v);
        }
        let cfg: RunConfig = serde_json::from_value(Value::Object(doc))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not depend on the command; module preconditions are
    /// checked again where the values are used.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(t) = &self.tau {
            if t.is_empty() {
                return bad("tau list is empty".into());
            }
            if let Some(x) = t.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
                return bad(format!("tau {x} is outside (0, 1)"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} is outside (0, 1)", self.alpha));
        }
        for (name, v) in [("alpha_mix", self.alpha_mix), ("alpha_mix_enet", self.alpha_mix_enet)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} is outside [0, 1]"));
            }
        }
        if let Some(r) = self.lambda_ratio {
            if !(r > 0.0 && r < 1.0) {
                return bad(format!("lambda_ratio {r} is outside (0, 1)"));
            }
        }
        if self.n_lambda == Some(0) {
            return bad("n_lambda must be positive".into());
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.abs() < 1.0)) {
            return bad(format!("rho {r} is outside (-1, 1)"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} is outside (0, 1)", self.level));
        }
        if !(self.outlier_level > 0.0 && self.outlier_level < 1.0) {
            return bad(format!("outlier_level {} is outside (0, 1)", self.outlier_level));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction {} is outside (0, 1)", self.split_fraction));
        }
        if self.estimators.is_empty() {
            return bad("no estimators requested".into());
        }
        Ok(())
    }

    pub fn taus_or(&self, default: &[f64]) -> Vec<f64> {
        self.tau.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn fit_settings(&self) -> FitSettings {
        FitSettings {
            estimators: self.estimators.clone(),
            alpha_level: self.alpha,
            alpha_mix_enet: self.alpha_mix_enet,
            n_lambda: self.n_lambda,
            lambda_ratio: self.lambda_ratio,
            bandwidth: self.bandwidth,
        }
    }
}

fn merge(into: &mut Map<String, Value>, from: Map<String, Value>) {
    for (k, v) in from {
        into.insert(k, v);
    }
}
