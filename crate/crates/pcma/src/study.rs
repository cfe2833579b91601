//! Simulation scenarios from presets or JSON files, and the study
//! summary export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use pcma_core::simgen::{ComponentSummary, Decay, ErrorSummary, MeanSd, PathCoefficients};
use pcma_core::{SimScenario, StudySummary};

use crate::error::{CliError, Result};

/// Default sample size of the `small` preset.
pub const SMALL_N: usize = 500;
/// Default sample size of the `adni-dim` preset.
pub const ADNI_N: usize = 135;

/// An eigenvalue sequence, listed or geometric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spectrum {
    Values(Vec<f64>),
    Geometric {
        leading: f64,
        ratio: f64,
        #[serde(default)]
        floor: f64,
    },
}

impl Spectrum {
    fn values(&self, len: Option<usize>, what: &str) -> Result<Vec<f64>> {
        match (self, len) {
            (Spectrum::Values(v), None) => Ok(v.clone()),
            (Spectrum::Values(v), Some(k)) if v.len() == k => Ok(v.clone()),
            (Spectrum::Values(v), Some(k)) => Err(CliError::Invalid(format!(
                "{what} spectrum lists {} values but the dimension is {k}",
                v.len()
            ))),
            (&Spectrum::Geometric { leading, ratio, floor }, Some(k)) => {
                Ok(Decay { leading, ratio, floor }.values(k))
            }
            (Spectrum::Geometric { .. }, None) => {
                Err(CliError::Invalid(format!("a geometric {what} spectrum needs an explicit dimension")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// A scenario definition as stored in a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    pub paths: Vec<PathSpec>,
    pub exposure_spectrum: Spectrum,
    pub mediator_spectrum: Spectrum,
}

impl ScenarioFile {
    pub fn build(&self, n: Option<usize>, seed: u64) -> Result<SimScenario> {
        let ex = self.exposure_spectrum.values(self.p, "exposure")?;
        let me = self.mediator_spectrum.values(self.q, "mediator")?;
        let paths = self.paths.iter().map(|p| PathCoefficients::new(p.alpha, p.beta, p.gamma)).collect();
        Ok(SimScenario::new(n.unwrap_or(self.n), paths, ex, me, seed)?)
    }
}

/// Resolve `small`, `adni-dim` or a path to a scenario file.
pub fn resolve_scenario(name: &str, n: Option<usize>, seed: u64) -> Result<SimScenario> {
    match name {
        "small" => Ok(SimScenario::small(n.unwrap_or(SMALL_N), seed)?),
        "adni-dim" => Ok(SimScenario::adni_dim(n.unwrap_or(ADNI_N), seed)?),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e.to_string()))?;
            let file: ScenarioFile =
                serde_json::from_str(&text).map_err(|e| CliError::input(Path::new(path), e.to_string()))?;
            file.build(n, seed)
        }
    }
}

/// One row of the summary table, flattened for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub component: usize,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub replicates: usize,
    pub identified_pct: f64,
    pub sim_phi_mean: Option<f64>,
    pub sim_phi_sd: Option<f64>,
    pub sim_psi_mean: Option<f64>,
    pub sim_psi_sd: Option<f64>,
    pub alpha_bias: Option<f64>,
    pub alpha_se: Option<f64>,
    pub alpha_mse: Option<f64>,
    pub beta_bias: Option<f64>,
    pub beta_se: Option<f64>,
    pub beta_mse: Option<f64>,
    pub gamma_bias: Option<f64>,
    pub gamma_se: Option<f64>,
    pub gamma_mse: Option<f64>,
    pub ie_bias: Option<f64>,
    pub ie_se: Option<f64>,
    pub ie_mse: Option<f64>,
}

fn split_ms(v: Option<MeanSd>) -> (Option<f64>, Option<f64>) {
    (v.map(|m| m.mean), v.and_then(|m| m.sd))
}

fn split_err(v: Option<ErrorSummary>) -> (Option<f64>, Option<f64>, Option<f64>) {
    (v.map(|e| e.bias), v.and_then(|e| e.se), v.map(|e| e.mse))
}

fn row(s: &StudySummary, c: &ComponentSummary) -> SummaryRow {
    let (sim_phi_mean, sim_phi_sd) = split_ms(c.sim_phi);
    let (sim_psi_mean, sim_psi_sd) = split_ms(c.sim_psi);
    let (alpha_bias, alpha_se, alpha_mse) = split_err(c.alpha);
    let (beta_bias, beta_se, beta_mse) = split_err(c.beta);
    let (gamma_bias, gamma_se, gamma_mse) = split_err(c.gamma);
    let (ie_bias, ie_se, ie_mse) = split_err(c.ie);
    SummaryRow {
        method: c.method.name().to_owned(),
        component: c.component,
        p: s.p,
        q: s.q,
        n: s.n,
        replicates: c.replicates,
        identified_pct: c.identified_pct(),
        sim_phi_mean,
        sim_phi_sd,
        sim_psi_mean,
        sim_psi_sd,
        alpha_bias,
        alpha_se,
        alpha_mse,
        beta_bias,
        beta_se,
        beta_mse,
        gamma_bias,
        gamma_se,
        gamma_mse,
        ie_bias,
        ie_se,
        ie_mse,
    }
}

pub fn summary_rows(s: &StudySummary) -> Vec<SummaryRow> {
    s.rows.iter().map(|c| row(s, c)).collect()
}

/// Absent values are written as `NA`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let header = [
        "method", "component", "p", "q", "n", "replicates", "identified_pct", "sim_phi_mean", "sim_phi_sd",
        "sim_psi_mean", "sim_psi_sd", "alpha_bias", "alpha_se", "alpha_mse", "beta_bias", "beta_se", "beta_mse",
        "gamma_bias", "gamma_se", "gamma_mse", "ie_bias", "ie_se", "ie_mse",
    ];
    w.write_record(header).unwrap();
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| x.to_string());
    for r in rows {
        let mut rec = vec![
            r.method.clone(),
            r.component.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            r.n.to_string(),
            r.replicates.to_string(),
            r.identified_pct.to_string(),
        ];
        rec.extend(
            [
                r.sim_phi_mean, r.sim_phi_sd, r.sim_psi_mean, r.sim_psi_sd, r.alpha_bias, r.alpha_se, r.alpha_mse,
                r.beta_bias, r.beta_se, r.beta_mse, r.gamma_bias, r.gamma_se, r.gamma_mse, r.ie_bias, r.ie_se,
                r.ie_mse,
            ]
            .map(opt),
        );
        w.write_record(&rec).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
