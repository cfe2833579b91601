//! The fit report: one JSON document, with CSV exports and a text rendering
//! derived from it.

use serde::{Deserialize, Serialize};

use pcma_core::sequential::SequenceStep;
use pcma_core::{asymptotic_covariances, Quantity, SequenceFit};

use crate::error::{CliError, Result};
use crate::io::format_value;
use crate::options::{Ci, CovariateMode, Resample, Standardize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub max_components: usize,
    pub bootstrap: usize,
    pub ci: Ci,
    pub level: f64,
    pub resample: Resample,
    pub standardize: Standardize,
    pub covariates: CovariateMode,
    pub max_sweeps: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub s: usize,
    pub exposures: Vec<String>,
    pub mediators: Vec<String>,
    pub covariates: Vec<String>,
    pub outcome: String,
}

/// One row of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub quantity: String,
    pub estimate: f64,
    pub se_bootstrap: f64,
    /// Plug-in standard error; absent when the information matrix is
    /// singular at the estimate.
    pub se_asymptotic: Option<f64>,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub sweeps: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_lambda_residual: f64,
    pub degenerate_updates: usize,
    pub bootstrap_redraws: usize,
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// 1-based extraction order.
    pub index: usize,
    pub significant: bool,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub coefficients: Vec<Coefficient>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub sigma2: f64,
    pub tau2: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub settings: Settings,
    pub data: DataSummary,
    /// The leading significant components.
    pub components: Vec<ComponentReport>,
    /// Fitted components not retained, in extraction order.
    pub excluded: Vec<ComponentReport>,
}

/// Rows of the coefficient table, in display order.
pub const TABLE_QUANTITIES: [Quantity; 4] = [Quantity::Alpha, Quantity::Beta, Quantity::Ie, Quantity::De];

fn label(q: Quantity) -> &'static str {
    match q {
        Quantity::Ie => "IE",
        Quantity::De => "DE",
        other => other.name(),
    }
}

fn component_report(index: usize, step: &SequenceStep) -> ComponentReport {
    let c = &step.component;
    let asym = asymptotic_covariances(&step.inputs, c).ok();
    let coefficients = TABLE_QUANTITIES
        .iter()
        .map(|&q| {
            let ci = step.bootstrap.interval(q);
            Coefficient {
                quantity: label(q).to_owned(),
                estimate: step.bootstrap.point[q.index()],
                se_bootstrap: step.bootstrap.se(q),
                se_asymptotic: asym.as_ref().map(|a| a.se(q)).filter(|v| v.is_finite()),
                ci_lower: ci.lower,
                ci_upper: ci.upper,
            }
        })
        .collect();
    let t = &step.trace;
    ComponentReport {
        index,
        significant: step.significant,
        phi: c.params.phi.iter().copied().collect(),
        psi: c.params.psi.iter().copied().collect(),
        coefficients,
        theta1: c.params.theta1.iter().copied().collect(),
        theta2: c.params.theta2.iter().copied().collect(),
        sigma2: c.params.sigma2,
        tau2: c.params.tau2,
        diagnostics: Diagnostics {
            converged: c.converged,
            sweeps: c.iterations,
            objective: c.objective,
            kkt_residual: t.kkt_residual,
            lambda1: t.lambda1,
            lambda2: t.lambda2,
            max_lambda_residual: t.max_lambda_residual,
            degenerate_updates: t.degenerate_updates,
            bootstrap_redraws: step.bootstrap.redraws,
            objective_trace: t.objective_per_sweep.clone(),
        },
    }
}

impl FitReport {
    pub fn new(settings: Settings, data: DataSummary, fit: &SequenceFit) -> Self {
        let kept = fit.sequence.len();
        let mut all = fit.steps.iter().enumerate().map(|(i, s)| component_report(i + 1, s));
        let components = all.by_ref().take(kept).collect();
        Self {
            settings,
            data,
            components,
            excluded: all.collect(),
        }
    }

    pub fn all_components(&self) -> impl Iterator<Item = &ComponentReport> {
        self.components.iter().chain(&self.excluded)
    }

    pub fn non_converged(&self) -> usize {
        self.all_components().filter(|c| !c.diagnostics.converged).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("corrupt report: {e}")))
    }

    /// Coefficient tables of all fitted components as CSV.
    pub fn coefficients_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "component",
            "significant",
            "quantity",
            "estimate",
            "se_bootstrap",
            "se_asymptotic",
            "ci_lower",
            "ci_upper",
        ])
        .unwrap();
        for c in self.all_components() {
            for k in &c.coefficients {
                w.write_record([
                    c.index.to_string(),
                    c.significant.to_string(),
                    k.quantity.clone(),
                    format_value(k.estimate),
                    format_value(k.se_bootstrap),
                    k.se_asymptotic.map_or_else(|| "NA".to_owned(), format_value),
                    format_value(k.ci_lower),
                    format_value(k.ci_upper),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Loadings of all fitted components in long format.
    pub fn loadings_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["component", "block", "feature", "loading"]).unwrap();
        for c in self.all_components() {
            let blocks = [("exposure", &self.data.exposures, &c.phi), ("mediator", &self.data.mediators, &c.psi)];
            for (block, names, values) in blocks {
                for (name, v) in names.iter().zip(values.iter()) {
                    w.write_record([c.index.to_string(), block.to_owned(), name.clone(), format_value(*v)])
                        .unwrap();
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Indices of the `k` largest `|values|`, largest first; ties keep input
/// order.
pub fn top_by_magnitude(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    idx.truncate(k);
    idx
}

fn layout(rows: &[Vec<String>], out: &mut String) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    for r in rows {
        let mut line = String::from("  ");
        for (j, cell) in r.iter().enumerate() {
            line.push_str(&format!("{cell:<w$}", w = widths[j]));
            line.push_str("  ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn loading_listing(title: &str, names: &[String], values: &[f64], k: usize, out: &mut String) {
    out.push_str(&format!("{title} (top {} by |loading|)\n", k.min(values.len())));
    let mut rows = vec![vec!["rank".into(), "feature".into(), "positive".into(), "negative".into()]];
    for (rank, i) in top_by_magnitude(values, k).into_iter().enumerate() {
        let v = values[i];
        let (pos, neg) = if v >= 0.0 { (v.to_string(), String::new()) } else { (String::new(), v.to_string()) };
        rows.push(vec![(rank + 1).to_string(), names[i].clone(), pos, neg]);
    }
    layout(&rows, out);
}

/// Human-readable tables. Numbers are printed in shortest round-trip form,
/// so they match the JSON document exactly.
pub fn render(report: &FitReport, top_k: usize) -> String {
    let mut out = String::new();
    let d = &report.data;
    out.push_str(&format!(
        "PCMA fit: n = {}, p = {}, q = {}, s = {}; {} significant component(s), {} excluded\n",
        d.n,
        d.p,
        d.q,
        d.s,
        report.components.len(),
        report.excluded.len()
    ));
    let pct = report.settings.level * 100.0;
    for c in report.all_components() {
        let status = if c.significant { "significant" } else { "excluded: IE interval covers 0" };
        out.push_str(&format!("\nComponent {} ({status})\n", c.index));
        let g = &c.diagnostics;
        out.push_str(&format!(
            "  converged: {}, sweeps: {}, objective: {}, KKT residual: {}\n",
            g.converged, g.sweeps, g.objective, g.kkt_residual
        ));
        let mut rows = vec![vec![
            "".into(),
            "estimate".into(),
            "SE (bootstrap)".into(),
            "SE (asymptotic)".into(),
            format!("{pct}% CI lower"),
            format!("{pct}% CI upper"),
        ]];
        for k in &c.coefficients {
            rows.push(vec![
                k.quantity.clone(),
                k.estimate.to_string(),
                k.se_bootstrap.to_string(),
                k.se_asymptotic.map_or_else(|| "NA".into(), |v| v.to_string()),
                k.ci_lower.to_string(),
                k.ci_upper.to_string(),
            ]);
        }
        layout(&rows, &mut out);
        if top_k > 0 {
            loading_listing("Exposure loadings", &d.exposures, &c.phi, top_k, &mut out);
            loading_listing("Mediator loadings", &d.mediators, &c.psi, top_k, &mut out);
        }
    }
    out
}
