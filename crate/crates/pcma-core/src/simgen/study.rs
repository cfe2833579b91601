//! Replicated benchmark runs and their per-method, per-component summary.

use alloc::vec::Vec;

use super::{evaluate, evaluate_hp, generate, pca_hp, ComponentMetrics, ReplicateMetrics, SimScenario};
use super::{HP_TEST_LEVEL, HP_VARIANCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::inference::{Executor, Serial};
use crate::sequential::fit_components;
use crate::solver::FitConfig;
use crate::stats::{mean, sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Pcma,
    PcaHp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pcma => "PCMA",
            Method::PcaHp => "PCA-HP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub replicates: usize,
    pub methods: Vec<Method>,
    /// Solver settings for the PCMA fits.
    pub fit: FitConfig,
    pub hp_threshold: f64,
    pub hp_level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 200,
            methods: alloc::vec![Method::PcaHp, Method::Pcma],
            // Flat likelihood regions in the larger design can take a few
            // thousand sweeps to leave.
            fit: FitConfig {
                max_sweeps: 20_000,
                ..FitConfig::default()
            },
            hp_threshold: HP_VARIANCE_THRESHOLD,
            hp_level: HP_TEST_LEVEL,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected"));
        }
        self.fit.validate()
    }
}

/// Metrics of one replicate for each requested method.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub metrics: Vec<(Method, ReplicateMetrics)>,
}

/// Run replicate `r`: fresh true projections and data from the seed derived
/// from `(scenario.seed, r)`.
pub fn run_replicate(scenario: &SimScenario, r: usize, config: &StudyConfig) -> Result<ReplicateOutcome> {
    let truth = scenario.replicate(r);
    let data = generate(&truth)?;
    let mut metrics = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let m = match method {
            Method::Pcma => {
                let (seq, _) = fit_components(&data, truth.r(), &config.fit)?;
                evaluate(&truth, &seq)
            }
            Method::PcaHp => {
                let hp = pca_hp(&data, config.hp_threshold, config.hp_level)?;
                evaluate_hp(&truth, &hp)
            }
        };
        metrics.push((method, m));
    }
    Ok(ReplicateOutcome { index: r, metrics })
}

/// Mean and standard deviation; the deviation is absent for one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: Option<f64>,
}

/// Bias, standard error and mean squared error of an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub bias: f64,
    pub se: Option<f64>,
    pub mse: f64,
}

fn mean_sd(values: &[f64]) -> MeanSd {
    MeanSd {
        mean: mean(values),
        sd: (values.len() > 1).then(|| sd(values)),
    }
}

fn error_summary(errors: &[f64]) -> ErrorSummary {
    ErrorSummary {
        bias: mean(errors),
        se: (errors.len() > 1).then(|| sd(errors)),
        mse: errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64,
    }
}

/// One row of the summary table: a method and a true component.
///
/// Accuracy columns are computed over the replicates in which the component
/// was identified and are absent when it never was.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub method: Method,
    /// 1-based component number.
    pub component: usize,
    pub replicates: usize,
    pub identified: usize,
    pub sim_phi: Option<MeanSd>,
    pub sim_psi: Option<MeanSd>,
    pub alpha: Option<ErrorSummary>,
    pub beta: Option<ErrorSummary>,
    pub gamma: Option<ErrorSummary>,
    pub ie: Option<ErrorSummary>,
}

impl ComponentSummary {
    pub fn identified_pct(&self) -> f64 {
        100.0 * self.identified as f64 / self.replicates as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub replicates: usize,
    pub rows: Vec<ComponentSummary>,
}

impl StudySummary {
    pub fn row(&self, method: Method, component: usize) -> Option<&ComponentSummary> {
        self.rows.iter().find(|r| r.method == method && r.component == component)
    }
}

/// Aggregate replicate outcomes. The result does not depend on the order of
/// `outcomes`.
pub fn summarize(scenario: &SimScenario, config: &StudyConfig, outcomes: &[ReplicateOutcome]) -> StudySummary {
    let mut sorted: Vec<&ReplicateOutcome> = outcomes.iter().collect();
    sorted.sort_by_key(|o| o.index);
    let mut rows = Vec::new();
    for &method in &config.methods {
        for j in 0..scenario.r() {
            let hits: Vec<ComponentMetrics> = sorted
                .iter()
                .filter_map(|o| o.metrics.iter().find(|(m, _)| *m == method))
                .filter_map(|(_, m)| m.components.get(j).copied().flatten())
                .filter(|c| c.identified)
                .collect();
            let col = |f: fn(&ComponentMetrics) -> f64| -> Vec<f64> { hits.iter().map(f).collect() };
            let any = !hits.is_empty();
            rows.push(ComponentSummary {
                method,
                component: j + 1,
                replicates: sorted.len(),
                identified: hits.len(),
                sim_phi: any.then(|| mean_sd(&col(|c| c.sim_phi))),
                sim_psi: any.then(|| mean_sd(&col(|c| c.sim_psi))),
                alpha: any.then(|| error_summary(&col(|c| c.err_alpha))),
                beta: any.then(|| error_summary(&col(|c| c.err_beta))),
                gamma: any.then(|| error_summary(&col(|c| c.err_gamma))),
                ie: any.then(|| error_summary(&col(|c| c.err_ie))),
            });
        }
    }
    StudySummary {
        p: scenario.p,
        q: scenario.q,
        n: scenario.n,
        replicates: sorted.len(),
        rows,
    }
}

pub fn run_study(scenario: &SimScenario, config: &StudyConfig) -> Result<StudySummary> {
    run_study_with(scenario, config, &Serial)
}

/// [`run_study`] with replicates mapped by `exec`.
pub fn run_study_with<E: Executor>(scenario: &SimScenario, config: &StudyConfig, exec: &E) -> Result<StudySummary> {
    scenario.validate()?;
    config.validate()?;
    let outcomes: Result<Vec<ReplicateOutcome>> = exec
        .map(config.replicates, |r| run_replicate(scenario, r, config))
        .into_iter()
        .collect();
    Ok(summarize(scenario, config, &outcomes?))
}
