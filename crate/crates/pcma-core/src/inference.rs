//! Bootstrap and plug-in asymptotic inference for one fitted component.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, SymEigen};
use crate::model::{effects_from, DataSet, MediationComponent, ParameterSet};
use crate::rng::{self, tag};
use crate::solver::{coefficients_from_scores, fit_component, FitConfig, Init, NULL_SPACE_TOL};
use crate::stats::{normal_cdf, normal_ppf, quantile_sorted, sd, sorted};

use rand_distr::{Distribution, Uniform};

/// Maps independent tasks `0..len` to results, returned in index order.
///
/// Implementations may run tasks concurrently but must return exactly
/// `(0..len).map(f)`.
pub trait Executor {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CiType {
    Percentile,
    #[default]
    BiasCorrected,
}

/// What is resampled in each bootstrap draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BootstrapMode {
    /// Rows of the projected scores `(Xφ̂, Mψ̂, W, Y)`; projections held fixed.
    #[default]
    Scores,
    /// Rows of the full data, refitting the projections from the point
    /// estimate in every draw.
    FullRefit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    pub n_boot: usize,
    pub level: f64,
    pub ci_type: CiType,
    pub seed: u64,
    pub mode: BootstrapMode,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n_boot: 1000,
            level: 0.95,
            ci_type: CiType::BiasCorrected,
            seed: 0,
            mode: BootstrapMode::Scores,
        }
    }
}

/// Smallest accepted number of bootstrap draws.
pub const MIN_BOOT: usize = 100;

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_boot < MIN_BOOT {
            return Err(Error::InvalidConfig("n_boot must be at least 100"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig("level must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// The five reported quantities, in the column order of the draws matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Alpha,
    Beta,
    Gamma,
    De,
    Ie,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [Quantity::Alpha, Quantity::Beta, Quantity::Gamma, Quantity::De, Quantity::Ie];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Alpha => "alpha",
            Quantity::Beta => "beta",
            Quantity::Gamma => "gamma",
            Quantity::De => "de",
            Quantity::Ie => "ie",
        }
    }
}

fn quantities(alpha: f64, beta: f64, gamma: f64) -> [f64; 5] {
    let e = effects_from(alpha, beta, gamma);
    [alpha, beta, gamma, e.de, e.ie]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Closed-interval membership.
    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Percentile interval: empirical quantiles at `(1 ∓ level) / 2`.
pub fn percentile_interval(draws: &[f64], level: f64) -> Interval {
    let s = sorted(draws);
    let tail = 0.5 * (1.0 - level);
    Interval {
        lower: quantile_sorted(&s, tail),
        upper: quantile_sorted(&s, 1.0 - tail),
    }
}

/// Bias-corrected interval.
///
/// With `z₀ = Φ⁻¹(#{draws < point} / B)` and `z = Φ⁻¹((1 + level) / 2)` the
/// bounds are the empirical quantiles at `Φ(2z₀ - z)` and `Φ(2z₀ + z)`. When
/// no draw (or every draw) lies below the point estimate `z₀` is infinite and
/// both bounds collapse to the smallest (largest) draw.
pub fn bc_interval(draws: &[f64], point: f64, level: f64) -> Interval {
    let s = sorted(draws);
    let below = s.partition_point(|&d| d < point);
    let z0 = normal_ppf(below as f64 / s.len() as f64);
    let z = normal_ppf(0.5 * (1.0 + level));
    let (lo, hi) = if z0 == 0.0 {
        // Without bias the adjusted levels are the percentile ones; use them
        // directly rather than through a Φ(Φ⁻¹(·)) round trip.
        let tail = 0.5 * (1.0 - level);
        (tail, 1.0 - tail)
    } else if z0.is_infinite() {
        let p = if z0 > 0.0 { 1.0 } else { 0.0 };
        (p, p)
    } else {
        (normal_cdf(2.0 * z0 - z), normal_cdf(2.0 * z0 + z))
    };
    Interval {
        lower: quantile_sorted(&s, lo),
        upper: quantile_sorted(&s, hi),
    }
}

pub fn interval(ci: CiType, draws: &[f64], point: f64, level: f64) -> Interval {
    match ci {
        CiType::Percentile => percentile_interval(draws, level),
        CiType::BiasCorrected => bc_interval(draws, point, level),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// `n_boot × 5`, columns ordered as [`Quantity::ALL`].
    pub draws: DMatrix<f64>,
    pub point: [f64; 5],
    pub ci: [Interval; 5],
    /// Standard deviation of the draws.
    pub se: [f64; 5],
    pub ci_type: CiType,
    pub level: f64,
    /// Draws discarded because the resampled design was rank-deficient.
    pub redraws: usize,
}

impl BootstrapResult {
    pub fn interval(&self, q: Quantity) -> Interval {
        self.ci[q.index()]
    }

    pub fn se(&self, q: Quantity) -> f64 {
        self.se[q.index()]
    }

    pub fn column(&self, q: Quantity) -> Vec<f64> {
        self.draws.column(q.index()).iter().copied().collect()
    }

    fn from_draws(draws: DMatrix<f64>, point: [f64; 5], ci_type: CiType, level: f64, redraws: usize) -> Self {
        let mut ci = [Interval { lower: 0.0, upper: 0.0 }; 5];
        let mut se = [0.0; 5];
        for q in Quantity::ALL {
            let col: Vec<f64> = draws.column(q.index()).iter().copied().collect();
            ci[q.index()] = interval(ci_type, &col, point[q.index()], level);
            se[q.index()] = sd(&col);
        }
        Self {
            draws,
            point,
            ci,
            se,
            ci_type,
            level,
            redraws,
        }
    }
}

fn resample_indices(n: usize, seed: u64, component: u64, b: u64, attempt: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, &[tag::BOOTSTRAP, component, b, attempt]);
    let pick = Uniform::new(0, n).expect("n >= 1");
    (0..n).map(|_| pick.sample(&mut rng)).collect()
}

/// Bootstrap one component with draws run serially; `component_index` keys
/// the random streams.
pub fn bootstrap_component(
    data: &DataSet,
    component: &MediationComponent,
    config: &InferenceConfig,
    component_index: u64,
) -> Result<BootstrapResult> {
    bootstrap_component_with(data, component, config, component_index, &Serial)
}

/// Bootstrap one component.
///
/// Draw `b` uses the stream keyed by `(seed, component_index, b, attempt)`;
/// a rank-deficient resample is redrawn with the next attempt number. The
/// draws matrix depends only on the configuration, never on the executor.
pub fn bootstrap_component_with<E: Executor>(
    data: &DataSet,
    component: &MediationComponent,
    config: &InferenceConfig,
    component_index: u64,
    exec: &E,
) -> Result<BootstrapResult> {
    config.validate()?;
    let params = &component.params;
    if params.phi.len() != data.p() || params.psi.len() != data.q() {
        return Err(Error::InvalidConfig("component does not match the data dimensions"));
    }
    let n = data.n();
    let cap = 10 * config.n_boot;
    let sx = &data.x * &params.phi;
    let sm = &data.m * &params.psi;

    let one_draw = |rows: &[usize]| -> Result<Option<[f64; 5]>> {
        match config.mode {
            BootstrapMode::Scores => {
                let bx = DVector::from_iterator(n, rows.iter().map(|&i| sx[i]));
                let bm = DVector::from_iterator(n, rows.iter().map(|&i| sm[i]));
                let bw = data.w.select_rows(rows);
                let by = DVector::from_iterator(n, rows.iter().map(|&i| data.y[i]));
                match coefficients_from_scores(&bx, &bm, &bw, &by) {
                    Ok(c) => Ok(Some(quantities(c.alpha, c.beta, c.gamma))),
                    Err(Error::RankDeficientDesign(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            }
            BootstrapMode::FullRefit => {
                let sample = data.select_rows(rows);
                let cfg = FitConfig {
                    init: Init::Supplied {
                        phi: params.phi.clone(),
                        psi: params.psi.clone(),
                    },
                    ..FitConfig::default()
                };
                match fit_component(&sample, &cfg) {
                    Ok((fit, _)) => {
                        let mut p: ParameterSet = fit.params;
                        if p.phi.dot(&params.phi) < 0.0 {
                            p.flip_phi();
                        }
                        if p.psi.dot(&params.psi) < 0.0 {
                            p.flip_psi();
                        }
                        Ok(Some(quantities(p.alpha, p.beta, p.gamma)))
                    }
                    Err(Error::RankDeficientDesign(_)) | Err(Error::DegenerateDirection(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            }
        }
    };

    let results: Vec<Result<([f64; 5], usize)>> = exec.map(config.n_boot, |b| {
        let mut attempt = 0usize;
        loop {
            if attempt > cap {
                return Err(Error::ResampleDegenerate { redraws: attempt, cap });
            }
            let rows = resample_indices(n, config.seed, component_index, b as u64, attempt as u64);
            if let Some(row) = one_draw(&rows)? {
                return Ok((row, attempt));
            }
            attempt += 1;
        }
    });

    let mut draws = DMatrix::zeros(config.n_boot, 5);
    let mut redraws = 0;
    for (b, r) in results.into_iter().enumerate() {
        let (row, extra) = r?;
        redraws += extra;
        for (j, v) in row.iter().enumerate() {
            draws[(b, j)] = *v;
        }
    }
    if redraws > cap {
        return Err(Error::ResampleDegenerate { redraws, cap });
    }
    let point = quantities(params.alpha, params.beta, params.gamma);
    Ok(BootstrapResult::from_draws(draws, point, config.ci_type, config.level, redraws))
}

/// Plug-in covariance estimates for one component.
///
/// Moment matrices are sample moments (`XᵀX / n` and so on). The covariance
/// matrices `pi`, `xi`, `theta_cov` and the scalar `sigma2_ab` are
/// finite-sample, i.e. the asymptotic covariances of the `√n`-scaled
/// estimators divided by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCovariances {
    pub n: usize,
    pub p_hat: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    pub kappa_x: f64,
    pub kappa_m: f64,
    pub kappa_xm: f64,
    /// `(p+q)×(p+q)` covariance of `(φ̂, ψ̂)`.
    pub pi: DMatrix<f64>,
    /// `3×3` covariance of `(α̂, β̂, γ̂)`.
    pub xi: DMatrix<f64>,
    /// `2s×2s` block-diagonal covariance of `(θ̂₁, θ̂₂)`.
    pub theta_cov: DMatrix<f64>,
    pub sigma2_ab: f64,
}

/// Standard errors derived from [`AsymptoticCovariances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSe {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub de: f64,
    pub ie: f64,
}

impl AsymptoticCovariances {
    pub fn standard_errors(&self) -> AsymptoticSe {
        let g = libm::sqrt(self.xi[(2, 2)]);
        AsymptoticSe {
            alpha: libm::sqrt(self.xi[(0, 0)]),
            beta: libm::sqrt(self.xi[(1, 1)]),
            gamma: g,
            de: g,
            ie: libm::sqrt(self.sigma2_ab),
        }
    }

    pub fn se(&self, q: Quantity) -> f64 {
        let s = self.standard_errors();
        match q {
            Quantity::Alpha => s.alpha,
            Quantity::Beta => s.beta,
            Quantity::Gamma => s.gamma,
            Quantity::De => s.de,
            Quantity::Ie => s.ie,
        }
    }
}

fn null_dimension(gram: &DMatrix<f64>) -> usize {
    let eig = SymEigen::new(gram);
    let tol = NULL_SPACE_TOL * eig.max_value();
    eig.values.iter().filter(|&&v| v <= tol).count()
}

/// Inverse of a symmetric information matrix that is allowed `nullity`
/// structurally zero eigenvalues (directions the data cannot inform, e.g.
/// those removed by deflation); those are dropped from the pseudo-inverse.
/// Any further negligible or negative eigenvalue is a singular block.
fn information_inverse(info: &DMatrix<f64>, nullity: usize, block: &'static str) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(info);
    let max = eig.max_value();
    let tol = NULL_SPACE_TOL * max;
    let dim = eig.dim();
    let informative = dim - nullity.min(dim);
    let kept: Vec<usize> = (dim - informative..dim).collect();
    let smallest = kept.first().map(|&i| eig.values[i]).unwrap_or(max);
    if max <= 0.0 || kept.iter().any(|&i| eig.values[i] <= tol) {
        let condition = if smallest > 0.0 { max / smallest } else { f64::INFINITY };
        return Err(Error::SingularInformation { block, condition });
    }
    let mut inv = DMatrix::zeros(dim, dim);
    for &i in &kept {
        let v = eig.vectors.column(i);
        inv += v * v.transpose() / eig.values[i];
    }
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Plug-in estimates of the asymptotic covariances of one component fitted to
/// `data`.
pub fn asymptotic_covariances(data: &DataSet, component: &MediationComponent) -> Result<AsymptoticCovariances> {
    let (n, p, q, s) = (data.n(), data.p(), data.q(), data.s());
    if n <= p + q + s {
        return Err(Error::InsufficientSample { n, required: p + q + s });
    }
    let par = &component.params;
    if par.phi.len() != p || par.psi.len() != q {
        return Err(Error::InvalidConfig("component does not match the data dimensions"));
    }
    if !(par.sigma2 > 0.0 && par.tau2 > 0.0) {
        return Err(Error::NonPositiveVariance {
            sigma2: par.sigma2,
            tau2: par.tau2,
        });
    }
    let nf = n as f64;
    let p_hat = data.x.transpose() * &data.x / nf;
    let q_hat = data.m.transpose() * &data.m / nf;
    let r_hat = data.x.transpose() * &data.m / nf;
    let s_hat = data.w.transpose() * &data.w / nf;
    let kappa_x = (&p_hat * &par.phi).dot(&par.phi);
    let kappa_m = (&q_hat * &par.psi).dot(&par.psi);
    let kappa_xm = (&r_hat * &par.psi).dot(&par.phi);
    let (a, b, g, s2, t2) = (par.alpha, par.beta, par.gamma, par.sigma2, par.tau2);

    let cross = a / s2 - b * g / t2;
    let mut pi_inv = DMatrix::zeros(p + q, p + q);
    pi_inv.view_mut((0, 0), (p, p)).copy_from(&(&p_hat * (a * a / s2 + g * g / t2)));
    pi_inv.view_mut((p, p), (q, q)).copy_from(&(&q_hat * (1.0 / s2 + b * b / t2)));
    pi_inv.view_mut((0, p), (p, q)).copy_from(&(&r_hat * -cross));
    pi_inv.view_mut((p, 0), (q, p)).copy_from(&(r_hat.transpose() * -cross));
    let nullity = null_dimension(&p_hat) + null_dimension(&q_hat);
    let pi = information_inverse(&pi_inv, nullity, "Pi")? / nf;

    let xi_inv = DMatrix::from_row_slice(
        3,
        3,
        &[
            kappa_x / s2,
            0.0,
            0.0,
            0.0,
            kappa_m / t2,
            kappa_xm / t2,
            0.0,
            kappa_xm / t2,
            kappa_x / t2,
        ],
    );
    let (xi, cond) = spd_inverse(&xi_inv);
    let xi = xi.ok_or(Error::SingularInformation {
        block: "Xi",
        condition: cond,
    })? / nf;

    let (s_inv, cond) = spd_inverse(&s_hat);
    let s_inv = s_inv.ok_or(Error::SingularInformation {
        block: "S",
        condition: cond,
    })?;
    let mut theta_cov = DMatrix::zeros(2 * s, 2 * s);
    theta_cov.view_mut((0, 0), (s, s)).copy_from(&(&s_inv * (s2 / nf)));
    theta_cov.view_mut((s, s), (s, s)).copy_from(&(&s_inv * (t2 / nf)));

    let mut cov = AsymptoticCovariances {
        n,
        p_hat,
        q_hat,
        r_hat,
        s_hat,
        kappa_x,
        kappa_m,
        kappa_xm,
        pi,
        xi,
        theta_cov,
        sigma2_ab: 0.0,
    };
    cov.sigma2_ab = ie_variance(&cov, par)? / nf;
    Ok(cov)
}

/// Asymptotic variance of `√n (α̂β̂ - αβ)`:
/// `β²σ²/κₓ + α²τ²κₓ/(κₓκₘ - κₓₘ²)`.
pub fn ie_variance(cov: &AsymptoticCovariances, params: &ParameterSet) -> Result<f64> {
    ie_variance_from(
        cov.kappa_x,
        cov.kappa_m,
        cov.kappa_xm,
        params.alpha,
        params.beta,
        params.sigma2,
        params.tau2,
    )
}

/// [`ie_variance`] from its scalar ingredients.
pub fn ie_variance_from(
    kappa_x: f64,
    kappa_m: f64,
    kappa_xm: f64,
    alpha: f64,
    beta: f64,
    sigma2: f64,
    tau2: f64,
) -> Result<f64> {
    let det = kappa_x * kappa_m - kappa_xm * kappa_xm;
    if !(det > 0.0) {
        return Err(Error::DegenerateScoreCollinearity(det));
    }
    Ok(beta * beta * sigma2 / kappa_x + alpha * alpha * tau2 * kappa_x / det)
}
