//! Enumerated command-line choices, shared by the CLI and the report.

use clap::ValueEnum;
use pcma_core::{BootstrapMode, CiType};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardize {
    None,
    Center,
    Zscore,
}

impl Standardize {
    /// `(center, scale)` flags.
    pub fn flags(self) -> (bool, bool) {
        match self {
            Standardize::None => (false, false),
            Standardize::Center => (true, false),
            Standardize::Zscore => (true, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ci {
    Percentile,
    Bc,
}

impl From<Ci> for CiType {
    fn from(c: Ci) -> Self {
        match c {
            Ci::Percentile => CiType::Percentile,
            Ci::Bc => CiType::BiasCorrected,
        }
    }
}

/// Where the covariates enter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateMode {
    /// `W` appears in both structural equations.
    InModel,
    /// `X`, `M` and `Y` are residualized on `W` before fitting.
    PreAdjust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resample {
    /// Resample rows of the fitted scores and refit the coefficients.
    Scores,
    /// Refit the whole component on every resample.
    Refit,
}

impl From<Resample> for BootstrapMode {
    fn from(r: Resample) -> Self {
        match r {
            Resample::Scores => BootstrapMode::Scores,
            Resample::Refit => BootstrapMode::FullRefit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}
