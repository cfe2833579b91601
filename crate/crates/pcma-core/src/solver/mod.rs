//! Single-component estimation by block coordinate descent.
//!
//! One sweep updates, in order, the exposure projection `phi`, the mediator
//! projection `psi`, the regression coefficients and the two error
//! variances. Every block update is an exact minimizer of the negative
//! log-likelihood with the other blocks held fixed, so the objective never
//! increases.
//!
//! Projection updates are restricted to the row space of the corresponding
//! data block. Components of `phi` in the null space of `X` do not change
//! `X phi` and only shrink it; after deflation that null space contains every
//! earlier projection, so the restriction keeps successive components exactly
//! orthogonal.

pub mod sphere;

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float methods for builds without std; redundant once std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Design, Error, Projection, Result};
use crate::linalg::{least_squares, SymEigen};
use crate::model::{DataSet, MediationComponent, ParameterSet};

/// Eigenvalues of a Gram matrix at or below this fraction of the largest are
/// treated as its null space.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Floor applied to a variance estimate whose residual vanishes.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// How the projections are initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Leading left/right singular vectors of `XᵀM`.
    Svd,
    /// Gaussian directions drawn from the given seed.
    Random(u64),
    /// Explicit starting projections.
    Supplied { phi: DVector<f64>, psi: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_sweeps: usize,
    /// Relative change of the objective below which a sweep counts as settled.
    pub rel_tol: f64,
    /// Bound on the KKT residual required together with `rel_tol`.
    pub kkt_tol: f64,
    /// Bound on `|g(λ) - 1|` for the multiplier root.
    pub lambda_tol: f64,
    pub init: Init,
    pub fixed_phi: Option<DVector<f64>>,
    pub fixed_psi: Option<DVector<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 1000,
            rel_tol: 1e-8,
            kkt_tol: 1e-6,
            lambda_tol: 1e-12,
            init: Init::Svd,
            fixed_phi: None,
            fixed_psi: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps < 1 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1"));
        }
        if !(self.rel_tol > 0.0 && self.kkt_tol > 0.0 && self.lambda_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        for v in [&self.fixed_phi, &self.fixed_psi].into_iter().flatten() {
            if (v.norm() - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidConfig("fixed projections must be unit-norm"));
            }
        }
        Ok(())
    }
}

/// Per-fit diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitTrace {
    /// Objective after each complete sweep (index 0 is the initial point).
    pub objective_per_sweep: Vec<f64>,
    /// Objective after every individual block update.
    pub objective_per_block: Vec<f64>,
    pub kkt_residual: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Largest `|g(λ) - 1|` seen across all multiplier solves.
    pub max_lambda_residual: f64,
    /// Projection updates skipped because the linear term vanished.
    pub degenerate_updates: usize,
    /// A variance estimate hit the floor at the final sweep.
    pub perfect_fit: bool,
}

/// Residuals of the mediator and outcome models.
pub fn residuals(data: &DataSet, params: &ParameterSet) -> (DVector<f64>, DVector<f64>) {
    let sx = &data.x * &params.phi;
    let sm = &data.m * &params.psi;
    let r1 = &sm - &sx * params.alpha - &data.w * &params.theta1;
    let r2 = &data.y - &sx * params.gamma - &sm * params.beta - &data.w * &params.theta2;
    (r1, r2)
}

/// `‖r1‖²/σ² + ‖r2‖²/τ² + n log σ² + n log τ²` (constants dropped).
pub fn negative_log_likelihood(data: &DataSet, params: &ParameterSet) -> Result<f64> {
    if !(params.sigma2 > 0.0 && params.tau2 > 0.0) {
        return Err(Error::NonPositiveVariance {
            sigma2: params.sigma2,
            tau2: params.tau2,
        });
    }
    let (r1, r2) = residuals(data, params);
    let n = data.n() as f64;
    Ok(r1.norm_squared() / params.sigma2
        + r2.norm_squared() / params.tau2
        + n * params.sigma2.ln()
        + n * params.tau2.ln())
}

/// Partial derivatives of the negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub phi: DVector<f64>,
    pub psi: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub sigma2: f64,
    pub tau2: f64,
}

pub fn gradient(data: &DataSet, params: &ParameterSet) -> Gradient {
    let (r1, r2) = residuals(data, params);
    let (s2, t2) = (params.sigma2, params.tau2);
    let n = data.n() as f64;
    let sx = &data.x * &params.phi;
    let sm = &data.m * &params.psi;
    let xt_r1 = data.x.tr_mul(&r1);
    let xt_r2 = data.x.tr_mul(&r2);
    let mt_r1 = data.m.tr_mul(&r1);
    let mt_r2 = data.m.tr_mul(&r2);
    Gradient {
        phi: xt_r1 * (-2.0 * params.alpha / s2) - xt_r2 * (2.0 * params.gamma / t2),
        psi: mt_r1 * (2.0 / s2) - mt_r2 * (2.0 * params.beta / t2),
        alpha: -2.0 / s2 * sx.dot(&r1),
        beta: -2.0 / t2 * sm.dot(&r2),
        gamma: -2.0 / t2 * sx.dot(&r2),
        theta1: data.w.tr_mul(&r1) * (-2.0 / s2),
        theta2: data.w.tr_mul(&r2) * (-2.0 / t2),
        sigma2: -r1.norm_squared() / (s2 * s2) + n / s2,
        tau2: -r2.norm_squared() / (t2 * t2) + n / t2,
    }
}

/// Largest block norm of the Lagrangian gradient of the per-observation
/// objective `ℓ / n`. Projection blocks are measured in the tangent space of
/// the sphere (and of the row space when a block is fixed, they are skipped).
pub fn kkt_residual(data: &DataSet, params: &ParameterSet, phi_free: bool, psi_free: bool) -> f64 {
    let g = gradient(data, params);
    let n = data.n() as f64;
    let tangent = |grad: &DVector<f64>, v: &DVector<f64>| (grad - v * v.dot(grad)).norm();
    let mut worst = [
        g.alpha.abs(),
        g.beta.abs(),
        g.gamma.abs(),
        g.theta1.norm(),
        g.theta2.norm(),
        g.sigma2.abs(),
        g.tau2.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if phi_free {
        worst = worst.max(tangent(&g.phi, &params.phi));
    }
    if psi_free {
        worst = worst.max(tangent(&g.psi, &params.psi));
    }
    worst / n
}

/// Row-space eigenbasis of a Gram matrix.
#[derive(Debug, Clone)]
struct RowSpace {
    values: Vec<f64>,
    /// p×r, orthonormal.
    basis: DMatrix<f64>,
}

impl RowSpace {
    fn of(gram: &DMatrix<f64>) -> Self {
        let eig = SymEigen::new(gram);
        let cutoff = NULL_SPACE_TOL * eig.max_value();
        let keep: Vec<usize> = (0..eig.dim()).filter(|&i| eig.values[i] > cutoff).collect();
        let values = keep.iter().map(|&i| eig.values[i]).collect();
        let basis = eig.vectors.select_columns(&keep);
        Self { values, basis }
    }

    /// Project a vector into the row space and renormalize it.
    fn project_unit(&self, v: &DVector<f64>) -> Option<DVector<f64>> {
        let proj = &self.basis * self.basis.tr_mul(v);
        let norm = proj.norm();
        (norm > 0.0).then(|| proj / norm)
    }
}

/// Cached cross-products of one data set, so every sweep costs O((p+q)²)
/// for the projection updates.
struct Workspace {
    x_space: RowSpace,
    m_space: RowSpace,
    xtm: DMatrix<f64>,
    xty: DVector<f64>,
    mty: DVector<f64>,
    xtw: DMatrix<f64>,
    mtw: DMatrix<f64>,
}

/// Result of a single projection update.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionUpdate {
    pub direction: DVector<f64>,
    pub lambda: f64,
    /// `|g(λ) - 1|` at the returned multiplier.
    pub residual: f64,
    pub hard_case: bool,
}

fn solve_projection(
    space: &RowSpace,
    scale: f64,
    u: &DVector<f64>,
    tol: f64,
    which: Projection,
) -> Result<ProjectionUpdate> {
    let d: Vec<f64> = space.values.iter().map(|v| v * scale).collect();
    let c = space.basis.tr_mul(u);
    let sol = sphere::solve_diagonal(&d, c.as_slice(), tol).map_err(|_| Error::DegenerateDirection(which))?;
    let direction = &space.basis * DVector::from_column_slice(&sol.coords);
    Ok(ProjectionUpdate {
        direction,
        lambda: sol.lambda,
        residual: sol.residual,
        hard_case: sol.hard_case,
    })
}

impl Workspace {
    fn new(data: &DataSet) -> Self {
        Self {
            x_space: RowSpace::of(&data.x.tr_mul(&data.x)),
            m_space: RowSpace::of(&data.m.tr_mul(&data.m)),
            xtm: data.x.tr_mul(&data.m),
            xty: data.x.tr_mul(&data.y),
            mty: data.m.tr_mul(&data.y),
            xtw: data.x.tr_mul(&data.w),
            mtw: data.m.tr_mul(&data.w),
        }
    }

    fn phi_linear_term(&self, p: &ParameterSet) -> DVector<f64> {
        let (s2, t2) = (p.sigma2, p.tau2);
        let c = p.alpha / s2 - p.beta * p.gamma / t2;
        let wt = &p.theta1 * (p.alpha / s2) + &p.theta2 * (p.gamma / t2);
        &self.xtm * &p.psi * c + &self.xty * (p.gamma / t2) - &self.xtw * wt
    }

    fn psi_linear_term(&self, p: &ParameterSet) -> DVector<f64> {
        let (s2, t2) = (p.sigma2, p.tau2);
        let c = p.alpha / s2 - p.beta * p.gamma / t2;
        let wt = &p.theta1 / s2 - &p.theta2 * (p.beta / t2);
        self.xtm.tr_mul(&p.phi) * c + &self.mty * (p.beta / t2) + &self.mtw * wt
    }

    fn update_phi(&self, p: &ParameterSet, tol: f64) -> Result<ProjectionUpdate> {
        let scale = p.alpha * p.alpha / p.sigma2 + p.gamma * p.gamma / p.tau2;
        solve_projection(&self.x_space, scale, &self.phi_linear_term(p), tol, Projection::Exposure)
    }

    fn update_psi(&self, p: &ParameterSet, tol: f64) -> Result<ProjectionUpdate> {
        let scale = 1.0 / p.sigma2 + p.beta * p.beta / p.tau2;
        solve_projection(&self.m_space, scale, &self.psi_linear_term(p), tol, Projection::Mediator)
    }
}

/// Exact minimizer over `phi` on the unit sphere (within the row space of
/// `X`) with every other parameter fixed. Satisfies `(A + λ₁ I) φ = U` with
/// `A = (α²/σ² + γ²/τ²) XᵀX`.
pub fn update_phi(data: &DataSet, params: &ParameterSet, lambda_tol: f64) -> Result<ProjectionUpdate> {
    let space = RowSpace::of(&data.x.tr_mul(&data.x));
    let scale = params.alpha * params.alpha / params.sigma2 + params.gamma * params.gamma / params.tau2;
    solve_projection(&space, scale, &phi_linear_term(data, params), lambda_tol, Projection::Exposure)
}

/// Mirror of [`update_phi`] for `psi` with `B = (1/σ² + β²/τ²) MᵀM`.
pub fn update_psi(data: &DataSet, params: &ParameterSet, lambda_tol: f64) -> Result<ProjectionUpdate> {
    let space = RowSpace::of(&data.m.tr_mul(&data.m));
    let scale = 1.0 / params.sigma2 + params.beta * params.beta / params.tau2;
    solve_projection(&space, scale, &psi_linear_term(data, params), lambda_tol, Projection::Mediator)
}

/// Linear term `U` of the `phi` update.
pub fn phi_linear_term(data: &DataSet, params: &ParameterSet) -> DVector<f64> {
    let (s2, t2) = (params.sigma2, params.tau2);
    let c = params.alpha / s2 - params.beta * params.gamma / t2;
    let inner = &data.m * &params.psi * c + &data.y * (params.gamma / t2)
        - &data.w * (&params.theta1 * (params.alpha / s2) + &params.theta2 * (params.gamma / t2));
    data.x.tr_mul(&inner)
}

/// Linear term `V` of the `psi` update.
pub fn psi_linear_term(data: &DataSet, params: &ParameterSet) -> DVector<f64> {
    let (s2, t2) = (params.sigma2, params.tau2);
    let c = params.alpha / s2 - params.beta * params.gamma / t2;
    let inner = &data.x * &params.phi * c + &data.y * (params.beta / t2)
        + &data.w * (&params.theta1 / s2 - &params.theta2 * (params.beta / t2));
    data.m.tr_mul(&inner)
}

/// Regression coefficients of both structural models.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
}

/// Least-squares coefficients from already projected scores.
pub fn coefficients_from_scores(
    sx: &DVector<f64>,
    sm: &DVector<f64>,
    w: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<Coefficients> {
    let (n, s) = w.shape();
    let mut d1 = DMatrix::zeros(n, s + 1);
    d1.set_column(0, sx);
    d1.columns_mut(1, s).copy_from(w);
    let c1 = least_squares(&d1, sm).ok_or(Error::RankDeficientDesign(Design::Mediator))?;

    let mut d2 = DMatrix::zeros(n, s + 2);
    d2.set_column(0, sm);
    d2.set_column(1, sx);
    d2.columns_mut(2, s).copy_from(w);
    let c2 = least_squares(&d2, y).ok_or(Error::RankDeficientDesign(Design::Outcome))?;

    Ok(Coefficients {
        alpha: c1[0],
        theta1: c1.rows(1, s).into_owned(),
        beta: c2[0],
        gamma: c2[1],
        theta2: c2.rows(2, s).into_owned(),
    })
}

/// Joint least-squares solutions: `(α, θ₁)` from `Mψ ~ [Xφ, W]` and
/// `(β, γ, θ₂)` from `Y ~ [Mψ, Xφ, W]`.
pub fn update_coefficients(data: &DataSet, params: &ParameterSet) -> Result<Coefficients> {
    let sx = &data.x * &params.phi;
    let sm = &data.m * &params.psi;
    coefficients_from_scores(&sx, &sm, &data.w, &data.y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceUpdate {
    pub sigma2: f64,
    pub tau2: f64,
    /// At least one residual vector vanished and its variance was floored.
    pub perfect_fit: bool,
}

pub fn variances_from_residuals(r1: &DVector<f64>, r2: &DVector<f64>) -> VarianceUpdate {
    let n = r1.len() as f64;
    let raw_s = r1.norm_squared() / n;
    let raw_t = r2.norm_squared() / n;
    VarianceUpdate {
        sigma2: raw_s.max(VARIANCE_FLOOR),
        tau2: raw_t.max(VARIANCE_FLOOR),
        perfect_fit: raw_s < VARIANCE_FLOOR || raw_t < VARIANCE_FLOOR,
    }
}

/// Mean squared residuals of the two models, floored at [`VARIANCE_FLOOR`].
pub fn update_variances(data: &DataSet, params: &ParameterSet) -> VarianceUpdate {
    let (r1, r2) = residuals(data, params);
    variances_from_residuals(&r1, &r2)
}

fn apply_coefficients(params: &mut ParameterSet, c: Coefficients) {
    params.alpha = c.alpha;
    params.beta = c.beta;
    params.gamma = c.gamma;
    params.theta1 = c.theta1;
    params.theta2 = c.theta2;
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
    let n = v.norm();
    v / n
}

fn initial_projections(data: &DataSet, ws: &Workspace, config: &FitConfig) -> Result<(DVector<f64>, DVector<f64>)> {
    let (phi0, psi0) = match &config.init {
        Init::Svd => {
            let svd = ws.xtm.clone().svd(true, true);
            let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
            let lead = svd
                .singular_values
                .iter()
                .enumerate()
                .fold(0, |best, (i, &s)| if s > svd.singular_values[best] { i } else { best });
            (u.column(lead).into_owned(), vt.row(lead).transpose())
        }
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (gaussian_unit(&mut rng, data.p()), gaussian_unit(&mut rng, data.q()))
        }
        Init::Supplied { phi, psi } => {
            if phi.len() != data.p() || psi.len() != data.q() {
                return Err(Error::InvalidConfig("supplied projections do not match data dimensions"));
            }
            (phi.clone(), psi.clone())
        }
    };
    let phi = match &config.fixed_phi {
        Some(f) => f.clone(),
        None => ws
            .x_space
            .project_unit(&phi0)
            .ok_or(Error::DegenerateDirection(Projection::Exposure))?,
    };
    let psi = match &config.fixed_psi {
        Some(f) => f.clone(),
        None => ws
            .m_space
            .project_unit(&psi0)
            .ok_or(Error::DegenerateDirection(Projection::Mediator))?,
    };
    Ok((phi, psi))
}

/// Fit one component by block coordinate descent.
///
/// A sweep counts as converged when the relative objective change drops
/// below `rel_tol` and the KKT residual is within `kkt_tol`. Hitting
/// `max_sweeps` first is reported through `converged = false`.
pub fn fit_component(data: &DataSet, config: &FitConfig) -> Result<(MediationComponent, FitTrace)> {
    config.validate()?;
    for (v, dim) in [(&config.fixed_phi, data.p()), (&config.fixed_psi, data.q())] {
        if let Some(v) = v {
            if v.len() != dim {
                return Err(Error::InvalidConfig("fixed projection does not match data dimensions"));
            }
        }
    }
    let ws = Workspace::new(data);
    let (phi, psi) = initial_projections(data, &ws, config)?;
    let s = data.s();
    let mut params = ParameterSet {
        phi,
        psi,
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
        theta1: DVector::zeros(s),
        theta2: DVector::zeros(s),
        sigma2: 1.0,
        tau2: 1.0,
    };
    let coef = update_coefficients(data, &params)?;
    apply_coefficients(&mut params, coef);
    let v = update_variances(data, &params);
    params.sigma2 = v.sigma2;
    params.tau2 = v.tau2;

    let phi_free = config.fixed_phi.is_none();
    let psi_free = config.fixed_psi.is_none();
    let mut trace = FitTrace::default();
    let mut objective = negative_log_likelihood(data, &params)?;
    trace.objective_per_sweep.push(objective);
    trace.objective_per_block.push(objective);
    trace.perfect_fit = v.perfect_fit;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        if phi_free {
            match ws.update_phi(&params, config.lambda_tol) {
                Ok(up) => {
                    params.phi = up.direction;
                    trace.lambda1 = up.lambda;
                    trace.max_lambda_residual = trace.max_lambda_residual.max(up.residual);
                }
                Err(Error::DegenerateDirection(_)) => trace.degenerate_updates += 1,
                Err(e) => return Err(e),
            }
            trace.objective_per_block.push(negative_log_likelihood(data, &params)?);
        }
        if psi_free {
            match ws.update_psi(&params, config.lambda_tol) {
                Ok(up) => {
                    params.psi = up.direction;
                    trace.lambda2 = up.lambda;
                    trace.max_lambda_residual = trace.max_lambda_residual.max(up.residual);
                }
                Err(Error::DegenerateDirection(_)) => trace.degenerate_updates += 1,
                Err(e) => return Err(e),
            }
            trace.objective_per_block.push(negative_log_likelihood(data, &params)?);
        }
        let coef = update_coefficients(data, &params)?;
        apply_coefficients(&mut params, coef);
        trace.objective_per_block.push(negative_log_likelihood(data, &params)?);
        let v = update_variances(data, &params);
        params.sigma2 = v.sigma2;
        params.tau2 = v.tau2;
        trace.perfect_fit = v.perfect_fit;

        let next = negative_log_likelihood(data, &params)?;
        trace.objective_per_block.push(next);
        trace.objective_per_sweep.push(next);
        let change = (objective - next).abs() / objective.abs().max(1.0);
        objective = next;
        if change < config.rel_tol {
            let kkt = kkt_residual(data, &params, phi_free, psi_free);
            if kkt <= config.kkt_tol || trace.perfect_fit {
                converged = true;
                break;
            }
        }
    }
    trace.kkt_residual = kkt_residual(data, &params, phi_free, psi_free);

    // Flipping a projection leaves its multiplier unchanged.
    params.canonicalize();
    Ok((MediationComponent::new(params, objective, sweeps, converged), trace))
}
