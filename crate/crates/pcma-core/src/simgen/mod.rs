//! Benchmark simulation: structured data generation, the PCA-based
//! comparator and per-replicate accuracy metrics.
//!
//! Exposures are Gaussian with covariance `Φ Λ Φᵀ`. Mediators are generated
//! in their principal coordinates `m̃`: the first `r` coordinates follow the
//! mediator model `m̃_j = α_j (Φ_jᵀ x) + ε_j` with standard-normal errors,
//! the remaining ones are independent with variance `Δ_j`; then `m = Ψ m̃`.
//! The outcome adds up the `r` parallel paths plus a standard-normal error.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float methods for builds without std; redundant once std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_error, orthonormalize};
use crate::model::{ComponentSequence, DataSet};
use crate::rng::{self, tag};

mod hp;
mod study;

pub use hp::{evaluate_hp, pca_hp, HpComponent, MediatorTest, HP_TEST_LEVEL, HP_VARIANCE_THRESHOLD};
pub use study::*;

/// Coefficients of one true mediation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PathCoefficients {
    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn ie(&self) -> f64 {
        self.alpha * self.beta
    }
}

/// The two parallel paths of the benchmark design, with
/// `(IE, DE) = (4, 1)` and `(2, -1)`.
pub const BENCHMARK_PATHS: [PathCoefficients; 2] =
    [PathCoefficients::new(2.0, 2.0, 1.0), PathCoefficients::new(2.0, 1.0, -1.0)];

/// Eigenvalue sequence `floor + leading * ratio^(k-1)`, `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub leading: f64,
    pub ratio: f64,
    pub floor: f64,
}

impl Decay {
    pub const fn geometric(leading: f64, ratio: f64) -> Self {
        Self {
            leading,
            ratio,
            floor: 0.0,
        }
    }

    pub fn values(&self, len: usize) -> Vec<f64> {
        (0..len).map(|k| self.floor + self.leading * self.ratio.powi(k as i32)).collect()
    }
}

/// Exposure spectrum of the `(5, 10)` preset: `4 · 0.5^(k-1)`.
pub const SMALL_EXPOSURE_DECAY: Decay = Decay::geometric(4.0, 0.5);

/// Spectrum of the non-path mediator coordinates of the `(5, 10)` preset:
/// `60 · 0.8^(k-1)`, i.e. from 60 down to about 8.
///
/// These variances must stay well above the unit error variance of the path
/// coordinates: a direction with variance below 1 lowers the mediator-model
/// variance and the joint likelihood then prefers it to the true path.
pub const SMALL_MEDIATOR_DECAY: Decay = Decay::geometric(60.0, 0.8);

/// Exposure spectrum of the `(35, 37)` preset: `4 · 0.87^(k-1)`, from 4 down
/// to about 0.035.
pub const ADNI_EXPOSURE_DECAY: Decay = Decay::geometric(4.0, 0.87);

/// Non-path mediator spectrum of the `(35, 37)` preset: `60 · 0.945^(k-1)`,
/// the same range as the small preset spread over 37 coordinates.
pub const ADNI_MEDIATOR_DECAY: Decay = Decay::geometric(60.0, 0.945);

/// Generative configuration of the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub paths: Vec<PathCoefficients>,
    /// Eigenvalues of the exposure covariance, non-increasing.
    pub eigen_x: Vec<f64>,
    /// Variances of the mediator principal coordinates; entries for the path
    /// coordinates are unused (their variance follows the mediator model).
    pub eigen_m: Vec<f64>,
    /// p×p orthonormal; column j is the true `phi_j`.
    pub phi_true: DMatrix<f64>,
    /// q×q orthonormal; column j is the true `psi_j`.
    pub psi_true: DMatrix<f64>,
    pub seed: u64,
}

fn random_orthonormal(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    orthonormalize(g)
}

impl SimScenario {
    /// Build a scenario; the true projections are drawn from `seed`.
    pub fn new(
        n: usize,
        paths: Vec<PathCoefficients>,
        eigen_x: Vec<f64>,
        eigen_m: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let (p, q) = (eigen_x.len(), eigen_m.len());
        let mut rng = rng::stream(seed, &[tag::PROJECTIONS]);
        let phi_true = random_orthonormal(&mut rng, p);
        let psi_true = random_orthonormal(&mut rng, q);
        let s = Self {
            p,
            q,
            n,
            paths,
            eigen_x,
            eigen_m,
            phi_true,
            psi_true,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Geometric spectra with the benchmark paths.
    pub fn with_decay(p: usize, q: usize, n: usize, x: Decay, m: Decay, seed: u64) -> Result<Self> {
        Self::new(n, BENCHMARK_PATHS.to_vec(), x.values(p), m.values(q), seed)
    }

    /// `(p, q) = (5, 10)`.
    pub fn small(n: usize, seed: u64) -> Result<Self> {
        Self::with_decay(5, 10, n, SMALL_EXPOSURE_DECAY, SMALL_MEDIATOR_DECAY, seed)
    }

    /// `(p, q) = (35, 37)`, the dimensions of the proteomics-imaging data.
    pub fn adni_dim(n: usize, seed: u64) -> Result<Self> {
        Self::with_decay(35, 37, n, ADNI_EXPOSURE_DECAY, ADNI_MEDIATOR_DECAY, seed)
    }

    /// Same design with fresh true projections drawn from `seed`; replicate
    /// `r` of a study uses the seed derived from `(seed, r)`.
    pub fn replicate(&self, r: usize) -> Self {
        self.reseeded(rng::derive_seed(self.seed, &[tag::REPLICATE, r as u64]))
    }

    /// Same design with fresh true projections drawn from `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[tag::PROJECTIONS]);
        let phi_true = random_orthonormal(&mut rng, self.p);
        let psi_true = random_orthonormal(&mut rng, self.q);
        Self {
            phi_true,
            psi_true,
            seed,
            ..self.clone()
        }
    }

    pub fn r(&self) -> usize {
        self.paths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidScenario("n must be at least 2"));
        }
        if self.p == 0 || self.q == 0 {
            return Err(Error::InvalidScenario("p and q must be positive"));
        }
        if self.r() > self.p.min(self.q) {
            return Err(Error::InvalidScenario("more paths than min(p, q)"));
        }
        for spectrum in [&self.eigen_x, &self.eigen_m] {
            if spectrum.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidScenario("eigenvalues must be positive and finite"));
            }
            if spectrum.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidScenario("eigenvalues must be non-increasing"));
            }
        }
        if self.phi_true.shape() != (self.p, self.p) || self.psi_true.shape() != (self.q, self.q) {
            return Err(Error::InvalidScenario("true projection matrices have wrong shape"));
        }
        if orthonormality_error(&self.phi_true) > 1e-12 || orthonormality_error(&self.psi_true) > 1e-12 {
            return Err(Error::InvalidScenario("true projections must be orthonormal"));
        }
        Ok(())
    }

    /// Population covariance of the exposures, `Φ Λ Φᵀ`.
    pub fn exposure_covariance(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigen_x));
        &self.phi_true * lambda * self.phi_true.transpose()
    }
}

/// Draw one data set (intercept-only covariates). Deterministic in
/// `scenario.seed`.
pub fn generate(scenario: &SimScenario) -> Result<DataSet> {
    scenario.validate()?;
    let (n, p, q, r) = (scenario.n, scenario.p, scenario.q, scenario.r());
    let mut rng = rng::stream(scenario.seed, &[tag::SAMPLE]);
    let sd_x: Vec<f64> = scenario.eigen_x.iter().map(|v| v.sqrt()).collect();
    let sd_m: Vec<f64> = scenario.eigen_m.iter().map(|v| v.sqrt()).collect();
    let mut z = DMatrix::zeros(n, p);
    let mut mt = DMatrix::zeros(n, q);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        for k in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            z[(i, k)] = sd_x[k] * e;
        }
        for k in 0..q {
            let e: f64 = StandardNormal.sample(&mut rng);
            mt[(i, k)] = if k < r {
                scenario.paths[k].alpha * z[(i, k)] + e
            } else {
                sd_m[k] * e
            };
        }
        let eta: f64 = StandardNormal.sample(&mut rng);
        y[i] = eta
            + scenario
                .paths
                .iter()
                .enumerate()
                .map(|(j, c)| c.gamma * z[(i, j)] + c.beta * mt[(i, j)])
                .sum::<f64>();
    }
    let x = z * scenario.phi_true.transpose();
    let m = mt * scenario.psi_true.transpose();
    DataSet::without_covariates(x, m, y)
}

/// One estimated path, as produced by either method.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedPath {
    pub phi: DVector<f64>,
    pub psi: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ComponentSequence {
    pub fn paths(&self) -> Vec<EstimatedPath> {
        self.components
            .iter()
            .map(|c| EstimatedPath {
                phi: c.params.phi.clone(),
                psi: c.params.psi.clone(),
                alpha: c.params.alpha,
                beta: c.params.beta,
                gamma: c.params.gamma,
            })
            .collect()
    }
}

/// Accuracy of one estimated component against its true counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMetrics {
    pub identified: bool,
    pub sim_phi: f64,
    pub sim_psi: f64,
    /// Estimate minus truth after sign alignment.
    pub err_alpha: f64,
    pub err_beta: f64,
    pub err_gamma: f64,
    pub err_ie: f64,
}

/// Per-true-component metrics; `None` where no estimate exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub components: Vec<Option<ComponentMetrics>>,
}

/// Threshold on the mean of the two similarities for a component to count
/// as identified.
pub const IDENTIFICATION_THRESHOLD: f64 = 0.5;

/// Compare estimated path `j` with true path `j`.
///
/// Similarities are `|⟨φ̂, Φ_j⟩|` and `|⟨ψ̂, Ψ_j⟩|`. Coefficients are first
/// mapped to the orientation where both inner products are non-negative, so
/// the result is invariant to the sign of either estimated projection.
pub fn evaluate_paths(truth: &SimScenario, fitted: &[EstimatedPath]) -> ReplicateMetrics {
    let components = (0..truth.r())
        .map(|j| fitted.get(j).map(|est| evaluate_paths_at(truth, j, est)))
        .collect();
    ReplicateMetrics { components }
}

/// Metrics of a fitted component sequence.
pub fn evaluate(truth: &SimScenario, fitted: &ComponentSequence) -> ReplicateMetrics {
    evaluate_paths(truth, &fitted.paths())
}

pub(crate) fn evaluate_paths_at(truth: &SimScenario, j: usize, est: &EstimatedPath) -> ComponentMetrics {
    let ip_phi = est.phi.dot(&truth.phi_true.column(j));
    let ip_psi = est.psi.dot(&truth.psi_true.column(j));
    let (mut a, mut b, mut g) = (est.alpha, est.beta, est.gamma);
    if ip_phi < 0.0 {
        a = -a;
        g = -g;
    }
    if ip_psi < 0.0 {
        a = -a;
        b = -b;
    }
    let (sim_phi, sim_psi) = (ip_phi.abs().min(1.0), ip_psi.abs().min(1.0));
    let c = truth.paths[j];
    ComponentMetrics {
        identified: 0.5 * (sim_phi + sim_psi) > IDENTIFICATION_THRESHOLD,
        sim_phi,
        sim_psi,
        err_alpha: a - c.alpha,
        err_beta: b - c.beta,
        err_gamma: g - c.gamma,
        err_ie: a * b - c.ie(),
    }
}
