//! Observed data, the per-component parameter tuple and the effect
//! decomposition shared by every estimator.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float methods for builds without std; redundant once std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Block, Error, Result};
use crate::linalg::{needs_flip, RANK_TOL};

/// Observed exposures `x` (n×p), mediators `m` (n×q), covariates `w` (n×s,
/// first column the intercept) and outcome `y` (length n).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub x: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl DataSet {
    /// Build and validate a data set.
    pub fn new(x: DMatrix<f64>, m: DMatrix<f64>, w: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self { x, m, w, y }.validate()
    }

    /// Build a data set with an intercept-only covariate block.
    pub fn without_covariates(x: DMatrix<f64>, m: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let w = DMatrix::from_element(y.len(), 1, 1.0);
        Self::new(x, m, w, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.m.ncols()
    }

    pub fn s(&self) -> usize {
        self.w.ncols()
    }

    /// Check every structural invariant and return the data unchanged.
    pub fn validate(self) -> Result<Self> {
        let n = self.y.len();
        if n < 2 {
            return Err(Error::DimensionMismatch {
                block: Block::Outcome,
                what: "rows (at least)",
                expected: 2,
                found: n,
            });
        }
        for (block, mat) in [
            (Block::Exposures, &self.x),
            (Block::Mediators, &self.m),
            (Block::Covariates, &self.w),
        ] {
            if mat.nrows() != n {
                return Err(Error::DimensionMismatch {
                    block,
                    what: "rows",
                    expected: n,
                    found: mat.nrows(),
                });
            }
            if mat.ncols() == 0 {
                return Err(Error::DimensionMismatch {
                    block,
                    what: "columns (at least)",
                    expected: 1,
                    found: 0,
                });
            }
            for col in 0..mat.ncols() {
                for row in 0..n {
                    if !mat[(row, col)].is_finite() {
                        return Err(Error::NonFiniteEntry { block, row, col });
                    }
                }
            }
        }
        if let Some(row) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                block: Block::Outcome,
                row,
                col: 0,
            });
        }
        if let Some(row) = self.w.column(0).iter().position(|&v| v != 1.0) {
            return Err(Error::MissingInterceptColumn { row });
        }
        Ok(self)
    }

    /// Rows selected by `rows` (with repetition), in order.
    pub fn select_rows(&self, rows: &[usize]) -> DataSet {
        DataSet {
            x: self.x.select_rows(rows),
            m: self.m.select_rows(rows),
            w: self.w.select_rows(rows),
            y: self.y.select_rows(rows),
        }
    }
}

/// Column means and scales removed by [`standardize`].
///
/// `scale` entries are 1 where no scaling was applied; the intercept column of
/// `W` always has mean 0 and scale 1 here.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationRecord {
    pub x_mean: DVector<f64>,
    pub x_scale: DVector<f64>,
    pub m_mean: DVector<f64>,
    pub m_scale: DVector<f64>,
    pub w_mean: DVector<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl StandardizationRecord {
    /// Map standardized data back to the original units.
    pub fn restore(&self, data: &DataSet) -> DataSet {
        let undo = |mat: &DMatrix<f64>, mean: &DVector<f64>, scale: &DVector<f64>| {
            let mut out = mat.clone();
            for (j, mut col) in out.column_iter_mut().enumerate() {
                for v in col.iter_mut() {
                    *v = *v * scale[j] + mean[j];
                }
            }
            out
        };
        let ones = DVector::from_element(self.w_mean.len(), 1.0);
        DataSet {
            x: undo(&data.x, &self.x_mean, &self.x_scale),
            m: undo(&data.m, &self.m_mean, &self.m_scale),
            w: undo(&data.w, &self.w_mean, &ones),
            y: data.y.map(|v| v * self.y_scale + self.y_mean),
        }
    }

    /// Exposure loadings expressed per original unit of each exposure
    /// (`phi_j / sd_j`); no longer unit-norm.
    pub fn exposure_loadings_raw(&self, phi: &DVector<f64>) -> DVector<f64> {
        phi.component_div(&self.x_scale)
    }

    pub fn mediator_loadings_raw(&self, psi: &DVector<f64>) -> DVector<f64> {
        psi.component_div(&self.m_scale)
    }

    /// Factor converting an effect on the standardized outcome back to outcome units.
    pub fn outcome_scale(&self) -> f64 {
        self.y_scale
    }
}

fn column_stats(col: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = col.clone().sum::<f64>() / n as f64;
    let ss: f64 = col.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

fn standardize_block(
    mat: &DMatrix<f64>,
    block: Block,
    center: bool,
    scale: bool,
    skip_first: bool,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let n = mat.nrows();
    let mut out = mat.clone();
    let mut means = DVector::zeros(mat.ncols());
    let mut scales = DVector::from_element(mat.ncols(), 1.0);
    for j in 0..mat.ncols() {
        if skip_first && j == 0 {
            continue;
        }
        let (mean, sd) = column_stats(mat.column(j).iter().copied(), n);
        // An exactly constant column can still show round-off spread.
        let tiny = 1e-13 * mean.abs().max(f64::MIN_POSITIVE);
        if scale && !(sd > tiny) {
            return Err(Error::ZeroVarianceColumn { block, column: j });
        }
        let shift = if center { mean } else { 0.0 };
        let div = if scale { sd } else { 1.0 };
        for v in out.column_mut(j).iter_mut() {
            *v = (*v - shift) / div;
        }
        means[j] = shift;
        scales[j] = div;
    }
    Ok((out, means, scales))
}

/// Center and/or scale `X`, `M` and `Y`; non-intercept `W` columns are
/// centered only. Sample standard deviations use the `n - 1` denominator.
pub fn standardize(data: &DataSet, center: bool, scale: bool) -> Result<(DataSet, StandardizationRecord)> {
    let (x, x_mean, x_scale) = standardize_block(&data.x, Block::Exposures, center, scale, false)?;
    let (m, m_mean, m_scale) = standardize_block(&data.m, Block::Mediators, center, scale, false)?;
    let (w, w_mean, _) = standardize_block(&data.w, Block::Covariates, center, false, true)?;
    let ymat = DMatrix::from_column_slice(data.n(), 1, data.y.as_slice());
    let (ys, y_mean, y_scale) = standardize_block(&ymat, Block::Outcome, center, scale, false)?;
    let out = DataSet {
        x,
        m,
        w,
        y: ys.column(0).into_owned(),
    };
    let record = StandardizationRecord {
        x_mean,
        x_scale,
        m_mean,
        m_scale,
        w_mean,
        y_mean: y_mean[0],
        y_scale: y_scale[0],
    };
    Ok((out, record))
}

/// Remove the covariates from `X`, `M` and `Y` by least squares and return
/// the residuals with an intercept-only `W`.
///
/// This treats covariate adjustment as preprocessing; fitting the result is
/// an alternative to keeping `W` inside both structural models.
pub fn pre_adjust(data: &DataSet) -> Result<DataSet> {
    let (n, s) = data.w.shape();
    let qr = data.w.clone().qr();
    let r = qr.r();
    for j in 0..s {
        let col = data.w.column(j).norm();
        if col == 0.0 || r[(j, j)].abs() <= RANK_TOL * col {
            return Err(Error::RankDeficientCovariates);
        }
    }
    let q = qr.q();
    let resid = |mat: &DMatrix<f64>| mat - &q * q.tr_mul(mat);
    let y = DMatrix::from_column_slice(n, 1, data.y.as_slice());
    Ok(DataSet {
        x: resid(&data.x),
        m: resid(&data.m),
        w: DMatrix::from_element(n, 1, 1.0),
        y: resid(&y).column(0).into_owned(),
    })
}

/// The full parameter tuple of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
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

impl ParameterSet {
    /// Flip projections so each has a positive largest-magnitude entry,
    /// carrying the induced sign changes through the coefficients.
    ///
    /// `phi -> -phi` negates `alpha` and `gamma`; `psi -> -psi` negates
    /// `alpha`, `beta` and `theta1`. The likelihood is unchanged by either.
    pub fn canonicalize(&mut self) {
        if needs_flip(&self.phi) {
            self.flip_phi();
        }
        if needs_flip(&self.psi) {
            self.flip_psi();
        }
    }

    pub fn flip_phi(&mut self) {
        self.phi.neg_mut();
        self.alpha = -self.alpha;
        self.gamma = -self.gamma;
    }

    pub fn flip_psi(&mut self) {
        self.psi.neg_mut();
        self.alpha = -self.alpha;
        self.beta = -self.beta;
        self.theta1.neg_mut();
    }

    pub fn effects(&self) -> Effects {
        effects(self)
    }
}

/// Direct, indirect and total effect of one exposure component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effects {
    pub de: f64,
    pub ie: f64,
    pub te: f64,
}

/// `de = gamma`, `ie = alpha * beta`, `te = de + ie`.
pub fn effects(params: &ParameterSet) -> Effects {
    effects_from(params.alpha, params.beta, params.gamma)
}

pub fn effects_from(alpha: f64, beta: f64, gamma: f64) -> Effects {
    let ie = alpha * beta;
    Effects {
        de: gamma,
        ie,
        te: gamma + ie,
    }
}

/// A fitted component with its effects and fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MediationComponent {
    pub params: ParameterSet,
    pub de: f64,
    pub ie: f64,
    pub te: f64,
    /// Final value of the negative log-likelihood.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MediationComponent {
    pub fn new(params: ParameterSet, objective: f64, iterations: usize, converged: bool) -> Self {
        let e = effects(&params);
        Self {
            params,
            de: e.de,
            ie: e.ie,
            te: e.te,
            objective,
            iterations,
            converged,
        }
    }
}

/// Components extracted in order, with their stacked projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSequence {
    pub components: Vec<MediationComponent>,
    /// p×k, column j is `phi_j`.
    pub phi_matrix: DMatrix<f64>,
    /// q×k, column j is `psi_j`.
    pub psi_matrix: DMatrix<f64>,
}

impl ComponentSequence {
    pub fn new(p: usize, q: usize, components: Vec<MediationComponent>) -> Self {
        let k = components.len();
        let mut phi_matrix = DMatrix::zeros(p, k);
        let mut psi_matrix = DMatrix::zeros(q, k);
        for (j, c) in components.iter().enumerate() {
            phi_matrix.set_column(j, &c.params.phi);
            psi_matrix.set_column(j, &c.params.psi);
        }
        Self {
            components,
            phi_matrix,
            psi_matrix,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy() -> DataSet {
        let x = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64 * 0.3 + (j as f64));
        let m = DMatrix::from_fn(5, 3, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1 + (i % 2) as f64);
        let w = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_vec(vec![0.1, 0.5, -0.2, 0.9, 1.3]);
        DataSet { x, m, w, y }
    }

    #[test]
    fn minimal_input_accepted() {
        assert!(toy().validate().is_ok());
    }

    #[test]
    fn row_mismatch_rejected() {
        let mut d = toy();
        d.m = DMatrix::zeros(4, 3);
        assert_eq!(
            d.validate().unwrap_err(),
            Error::DimensionMismatch {
                block: Block::Mediators,
                what: "rows",
                expected: 5,
                found: 4
            }
        );
    }

    #[test]
    fn missing_intercept_rejected() {
        let mut d = toy();
        d.w = DMatrix::from_column_slice(5, 1, &[1.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(d.validate().unwrap_err(), Error::MissingInterceptColumn { row: 2 });
    }

    #[test]
    fn non_finite_rejected_with_position() {
        let mut d = toy();
        d.x[(3, 1)] = f64::NAN;
        assert_eq!(
            d.validate().unwrap_err(),
            Error::NonFiniteEntry {
                block: Block::Exposures,
                row: 3,
                col: 1
            }
        );
    }

    #[test]
    fn standardize_forced_arithmetic() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let d = DataSet::without_covariates(x.clone(), x.clone(), DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        let (s, _) = standardize(&d, true, true).unwrap();
        for (got, want) in s.x.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn standardize_identity_when_disabled() {
        let d = toy();
        let (s, rec) = standardize(&d, false, false).unwrap();
        assert_eq!(s, d);
        assert!(rec.x_mean.iter().all(|&v| v == 0.0));
        assert!(rec.m_scale.iter().all(|&v| v == 1.0));
        assert_eq!((rec.y_mean, rec.y_scale), (0.0, 1.0));
    }

    #[test]
    fn constant_column_cannot_be_scaled() {
        let mut d = toy();
        d.m.set_column(1, &DVector::from_element(5, 5.0));
        assert_eq!(
            standardize(&d, true, true).unwrap_err(),
            Error::ZeroVarianceColumn {
                block: Block::Mediators,
                column: 1
            }
        );
    }

    #[test]
    fn effects_of_simulation_paths() {
        assert_eq!(effects_from(2.0, 2.0, 1.0), Effects { de: 1.0, ie: 4.0, te: 5.0 });
        assert_eq!(effects_from(2.0, 1.0, -1.0), Effects { de: -1.0, ie: 2.0, te: 1.0 });
        assert_eq!(effects_from(3.0, 0.0, 0.7), Effects { de: 0.7, ie: 0.0, te: 0.7 });
    }

    #[test]
    fn canonical_sign_flips_coefficients() {
        let mut ps = ParameterSet {
            phi: DVector::from_vec(vec![0.6, -0.8]),
            psi: DVector::from_vec(vec![-1.0]),
            alpha: 2.0,
            beta: 3.0,
            gamma: 1.0,
            theta1: DVector::from_vec(vec![0.5]),
            theta2: DVector::from_vec(vec![0.25]),
            sigma2: 1.0,
            tau2: 1.0,
        };
        ps.canonicalize();
        assert_eq!(ps.phi.as_slice(), &[-0.6, 0.8]);
        assert_eq!(ps.psi.as_slice(), &[1.0]);
        // phi flip: alpha, gamma negate; psi flip: alpha, beta, theta1 negate.
        assert_eq!((ps.alpha, ps.beta, ps.gamma), (2.0, -3.0, -1.0));
        assert_eq!(ps.theta1[0], -0.5);
        assert_eq!(ps.theta2[0], 0.25);
    }
}
