//! PCA-based two-step comparator.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float methods for builds without std; redundant once std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use super::{evaluate_paths_at, EstimatedPath, ReplicateMetrics, SimScenario};
use crate::error::{Design, Error, Result};
use crate::linalg::{needs_flip, SymEigen};
use crate::model::DataSet;
use crate::stats::normal_cdf;

/// Test of one transformed mediator against one exposure component.
#[derive(Debug, Clone, PartialEq)]
pub struct MediatorTest {
    /// Mediator direction (unit norm).
    pub psi: DVector<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t_alpha: f64,
    pub t_beta: f64,
    pub p_alpha: f64,
    pub p_beta: f64,
    /// Both paths significant at the test level.
    pub significant: bool,
}

/// Comparator output for one retained exposure component.
#[derive(Debug, Clone, PartialEq)]
pub struct HpComponent {
    /// Exposure loading (unit norm), the `index`-th principal direction.
    pub phi: DVector<f64>,
    pub index: usize,
    /// Share of total exposure variance of this component.
    pub explained: f64,
    pub tests: Vec<MediatorTest>,
    /// Index into `tests` of the strongest significant mediator, if any.
    pub selected: Option<usize>,
}

impl HpComponent {
    pub fn path(&self) -> Option<EstimatedPath> {
        let t = &self.tests[self.selected?];
        Some(EstimatedPath {
            phi: self.phi.clone(),
            psi: t.psi.clone(),
            alpha: t.alpha,
            beta: t.beta,
            gamma: t.gamma,
        })
    }
}

/// Default cumulative variance share for retaining exposure components.
pub const HP_VARIANCE_THRESHOLD: f64 = 0.85;
/// Level of the per-path tests of the comparator.
pub const HP_TEST_LEVEL: f64 = 0.05;

fn residualize(w: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let wtw = w.transpose() * w;
    let chol = wtw.cholesky().ok_or(Error::RankDeficientDesign(Design::Mediator))?;
    let coef = chol.solve(&(w.transpose() * target));
    Ok(target - w * coef)
}

fn two_sided_p(t: f64) -> f64 {
    2.0 * normal_cdf(-t.abs())
}

/// PCA-based two-step comparator.
///
/// 1. Principal components of the exposures (after removing the covariates);
///    the leading components whose cumulative variance share reaches
///    `variance_threshold` are retained as independent exposures.
/// 2. For each retained exposure score `e`, the mediators are rotated by the
///    eigenvectors of their residual covariance given `e`, so the transformed
///    mediators are conditionally uncorrelated. Each transformed mediator
///    `t` is tested with the regressions `t ~ e` and `y ~ t + e`; a path is
///    significant when both slopes are (joint-significance rule, two-sided
///    normal-approximation tests at `level`). The significant mediator with
///    the largest `min(|t_α|, |t_β|)` is selected.
pub fn pca_hp(data: &DataSet, variance_threshold: f64, level: f64) -> Result<Vec<HpComponent>> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::InvalidConfig("variance threshold must lie in (0, 1]"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig("test level must lie in (0, 1)"));
    }
    let (n, s, q) = (data.n(), data.s(), data.q());
    if n <= s + 2 {
        return Err(Error::InsufficientSample { n, required: s + 2 });
    }
    let x = residualize(&data.w, &data.x)?;
    let m = residualize(&data.w, &data.m)?;
    let y_mat = residualize(&data.w, &DMatrix::from_column_slice(n, 1, data.y.as_slice()))?;
    let y: DVector<f64> = y_mat.column(0).into_owned();

    let eig = SymEigen::new(&(x.transpose() * &x));
    let p = eig.dim();
    let values: Vec<f64> = (0..p).rev().map(|i| eig.values[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("exposures have no variance"));
    }
    let mut keep = 0;
    let mut cum = 0.0;
    while keep < p {
        cum += values[keep];
        keep += 1;
        if cum >= variance_threshold * total * (1.0 - 1e-12) {
            break;
        }
    }

    let df1 = (n - s - 1) as f64;
    let df2 = (n - s - 2) as f64;
    let mut out = Vec::with_capacity(keep);
    for j in 0..keep {
        let mut phi: DVector<f64> = eig.vectors.column(p - 1 - j).into_owned();
        if needs_flip(&phi) {
            phi.neg_mut();
        }
        let e = &x * &phi;
        let ee = e.norm_squared();
        // residual covariance of the mediators given e
        let slopes = m.transpose() * &e / ee;
        let resid = &m - &e * slopes.transpose();
        let ceig = SymEigen::new(&(resid.transpose() * &resid));
        let mut tests = Vec::with_capacity(q);
        for k in (0..q).rev() {
            let mut psi: DVector<f64> = ceig.vectors.column(k).into_owned();
            if needs_flip(&psi) {
                psi.neg_mut();
            }
            let t = &m * &psi;
            let alpha = e.dot(&t) / ee;
            let r1 = &t - &e * alpha;
            let se_a = (r1.norm_squared() / df1 / ee).sqrt();

            let tt = t.norm_squared();
            let te = t.dot(&e);
            let det = tt * ee - te * te;
            let (beta, gamma, se_b) = if det > 1e-12 * tt * ee {
                let ty = t.dot(&y);
                let ey = e.dot(&y);
                let beta = (ee * ty - te * ey) / det;
                let gamma = (tt * ey - te * ty) / det;
                let r2 = &y - &t * beta - &e * gamma;
                let s2 = r2.norm_squared() / df2;
                (beta, gamma, (s2 * ee / det).sqrt())
            } else {
                (0.0, 0.0, f64::INFINITY)
            };
            let t_alpha = if se_a > 0.0 { alpha / se_a } else { f64::INFINITY.copysign(alpha) };
            let t_beta = if se_b > 0.0 { beta / se_b } else { f64::INFINITY.copysign(beta) };
            let (p_alpha, p_beta) = (two_sided_p(t_alpha), two_sided_p(t_beta));
            tests.push(MediatorTest {
                psi,
                alpha,
                beta,
                gamma,
                t_alpha,
                t_beta,
                p_alpha,
                p_beta,
                significant: p_alpha < level && p_beta < level,
            });
        }
        let selected = tests
            .iter()
            .enumerate()
            .filter(|(_, t)| t.significant)
            .max_by(|a, b| {
                let sa = a.1.t_alpha.abs().min(a.1.t_beta.abs());
                let sb = b.1.t_alpha.abs().min(b.1.t_beta.abs());
                sa.total_cmp(&sb).then(b.0.cmp(&a.0))
            })
            .map(|(i, _)| i);
        out.push(HpComponent {
            phi,
            index: j,
            explained: values[j] / total,
            tests,
            selected,
        });
    }
    Ok(out)
}

/// Metrics of the comparator: true component `j` is matched with the `j`-th
/// retained exposure component and its selected mediator; it is missing when
/// fewer components were retained or no mediator was significant.
pub fn evaluate_hp(truth: &SimScenario, fitted: &[HpComponent]) -> ReplicateMetrics {
    let components = (0..truth.r())
        .map(|j| {
            let path = fitted.get(j).and_then(HpComponent::path)?;
            Some(evaluate_paths_at(truth, j, &path))
        })
        .collect();
    ReplicateMetrics { components }
}

