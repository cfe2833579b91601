#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pcma_core::rng;
use pcma_core::DataSet;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, &[99]);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut r))
}

pub fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

/// Data following the two structural models with a single known path and
/// `s - 1` Gaussian covariates besides the intercept.
pub fn path_data(n: usize, p: usize, q: usize, s: usize, coef: (f64, f64, f64), seed: u64) -> (DataSet, DVector<f64>, DVector<f64>) {
    let x = gaussian_matrix(n, p, seed);
    let noise_m = gaussian_matrix(n, q, seed + 1);
    let e = gaussian_matrix(n, 2, seed + 2);
    let mut w = DMatrix::from_element(n, s, 1.0);
    if s > 1 {
        w.columns_mut(1, s - 1).copy_from(&gaussian_matrix(n, s - 1, seed + 3));
    }
    let phi = unit(gaussian_matrix(p, 1, seed + 4).column(0).into_owned());
    let psi = unit(gaussian_matrix(q, 1, seed + 5).column(0).into_owned());
    let (a, b, g) = coef;
    let sx = &x * &phi;
    // Mediators: noise orthogonal to psi plus the path along psi.
    let proj = DMatrix::identity(q, q) - &psi * psi.transpose();
    let score_m = &sx * a + e.column(0) + w.column(0) * 0.3;
    let m = &noise_m * &proj + &score_m * psi.transpose();
    let y = &sx * g + &score_m * b + e.column(1);
    (DataSet::new(x, m, w, y).unwrap(), phi, psi)
}

/// Unstructured Gaussian data with an intercept.
pub fn random_data(n: usize, p: usize, q: usize, seed: u64) -> DataSet {
    let x = gaussian_matrix(n, p, seed);
    let m = gaussian_matrix(n, q, seed + 1) + &x * gaussian_matrix(p, q, seed + 2) * 0.5;
    let y = gaussian_matrix(n, 1, seed + 3).column(0) + m.column(0) + x.column(0) * 0.5;
    DataSet::without_covariates(x, m, y.into_owned()).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
