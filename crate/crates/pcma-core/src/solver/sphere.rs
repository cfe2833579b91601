//! Minimization of a quadratic over the unit sphere.
//!
//! For a symmetric `A = Q diag(d) Qᵀ` and linear term `u`, the minimizer of
//! `xᵀA x - 2 uᵀx` subject to `‖x‖ = 1` satisfies `(A + λI) x = u` with
//! `A + λI` positive semidefinite. Writing `c = Qᵀu`, the multiplier is the
//! unique root on `(-d_min, ∞)` of
//!
//! ```text
//! g(λ) = Σ c_i² / (d_i + λ)² = 1,
//! ```
//!
//! which is continuous and strictly decreasing there. The root is located in
//! the shifted variable `μ = λ + d_min > 0` so that roots close to the pole
//! keep full relative precision.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
// Float methods for builds without std; redundant once std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::SymEigen;

/// Outcome of a sphere-constrained solve, in eigen coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSolution {
    /// Unit-norm minimizer in the eigenbasis.
    pub coords: Vec<f64>,
    pub lambda: f64,
    /// `|g(λ) - 1|` at the returned multiplier.
    pub residual: f64,
    /// The minimal eigenspace carried no weight of `u`; the solution picked
    /// up a component there to restore unit norm.
    pub hard_case: bool,
}

/// Raised when the linear term is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroLinearTerm;

const MAX_ITER: usize = 500;

/// Solve `min yᵀ diag(d) y - 2 cᵀy` s.t. `‖y‖ = 1`.
///
/// `tol` bounds `|g(λ) - 1|`; when floating-point resolution of the
/// multiplier is exhausted first, the best bracketed root is returned.
pub fn solve_diagonal(d: &[f64], c: &[f64], tol: f64) -> Result<SphereSolution, ZeroLinearTerm> {
    assert_eq!(d.len(), c.len());
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(c_norm > 0.0) {
        return Err(ZeroLinearTerm);
    }
    let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let delta: Vec<f64> = d.iter().map(|&v| v - d_min).collect();

    let g = |mu: f64| -> f64 {
        delta
            .iter()
            .zip(c)
            .map(|(&dl, &ci)| {
                let t = ci / (dl + mu);
                t * t
            })
            .sum()
    };

    // Exact hard case: nothing of c on the minimal eigenspace and the rest of
    // the secular function stays below one at the pole.
    let on_min: f64 = delta
        .iter()
        .zip(c)
        .filter(|(&dl, _)| dl == 0.0)
        .map(|(_, &ci)| ci * ci)
        .sum();
    if on_min == 0.0 {
        let rest: f64 = delta
            .iter()
            .zip(c)
            .filter(|(&dl, _)| dl > 0.0)
            .map(|(&dl, &ci)| (ci / dl) * (ci / dl))
            .sum();
        if rest <= 1.0 {
            let mut coords: Vec<f64> = delta
                .iter()
                .zip(c)
                .map(|(&dl, &ci)| if dl == 0.0 { 0.0 } else { ci / dl })
                .collect();
            let fill = (1.0 - rest).max(0.0).sqrt();
            let idx = delta.iter().position(|&dl| dl == 0.0).unwrap_or(0);
            coords[idx] = fill;
            return Ok(SphereSolution {
                coords,
                lambda: -d_min,
                residual: (rest + fill * fill - 1.0).abs(),
                hard_case: true,
            });
        }
    }

    // Bracket: g(0+) > 1 and g(‖c‖) ≤ 1 since every term is at most c_i²/μ².
    let mut lo = 0.0f64;
    let mut hi = c_norm;
    while g(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
    }

    // Newton on F(μ) = 1/sqrt(g(μ)) - 1, which is close to linear in μ,
    // safeguarded by the bracket.
    let mut mu = hi;
    let mut best_mu = hi;
    let mut best_res = (g(hi) - 1.0).abs();
    for _ in 0..MAX_ITER {
        let mut gv = 0.0;
        let mut dg = 0.0;
        for (&dl, &ci) in delta.iter().zip(c) {
            let inv = 1.0 / (dl + mu);
            let t = ci * inv;
            gv += t * t;
            dg -= 2.0 * t * t * inv;
        }
        let res = (gv - 1.0).abs();
        if res < best_res {
            best_res = res;
            best_mu = mu;
        }
        if res <= tol {
            break;
        }
        if gv > 1.0 {
            lo = lo.max(mu);
        } else {
            hi = hi.min(mu);
        }
        let f = 1.0 / gv.sqrt() - 1.0;
        let df = -0.5 * dg / (gv * gv.sqrt());
        let newton = mu - f / df;
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 && hi / lo > 16.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }

    let mu = best_mu;
    let mut coords: Vec<f64> = delta.iter().zip(c).map(|(&dl, &ci)| ci / (dl + mu)).collect();
    let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in coords.iter_mut() {
        *v /= norm;
    }
    Ok(SphereSolution {
        coords,
        lambda: mu - d_min,
        residual: best_res,
        hard_case: false,
    })
}

/// Solve the sphere problem for an explicit symmetric `A` and `u`, returning
/// the minimizer in the original coordinates.
pub fn solve_dense(
    a: &DMatrix<f64>,
    u: &DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, SphereSolution), ZeroLinearTerm> {
    let eig = SymEigen::new(a);
    let c = eig.vectors.transpose() * u;
    let sol = solve_diagonal(eig.values.as_slice(), c.as_slice(), tol)?;
    let x = &eig.vectors * DVector::from_column_slice(&sol.coords);
    Ok((x, sol))
}

/// Secular function `g(λ) = Σ c_i² / (d_i + λ)²`.
pub fn secular(d: &[f64], c: &[f64], lambda: f64) -> f64 {
    d.iter()
        .zip(c)
        .map(|(&di, &ci)| {
            let t = ci / (di + lambda);
            t * t
        })
        .sum()
}
