mod common;

use common::{path_data, random_data};
use nalgebra::{DMatrix, DVector};
use pcma_core::linalg::numerical_rank;
use pcma_core::sequential::{complement_projector, fit_sequence_with};
use pcma_core::simgen::{generate, PathCoefficients, SimScenario, SMALL_EXPOSURE_DECAY, SMALL_MEDIATOR_DECAY};
use pcma_core::{
    deflate, fit_component, fit_components, fit_sequence, DeflationState, Error, FitConfig, InferenceConfig, Serial,
    StopRule,
};

#[test]
fn deflation_annihilates_own_direction() {
    let (data, _, _) = path_data(100, 4, 5, 2, (1.0, 1.0, 0.5), 3);
    let (c, _) = fit_component(&data, &FitConfig::default()).unwrap();
    let next = deflate(&DeflationState::new(data.clone()), &c).unwrap();
    assert_eq!(next.k, 1);
    assert!((&next.data.x * &c.params.phi).norm() < 1e-10);
    assert!((&next.data.m * &c.params.psi).norm() < 1e-10);
    assert_eq!(next.data.w, data.w);

    let sx = &data.x * &c.params.phi;
    let sm = &data.m * &c.params.psi;
    let y_want = &data.y - &sx * c.params.gamma - &sm * c.params.beta;
    assert!((&next.data.y - y_want).norm() < 1e-12);
}

#[test]
fn deflation_is_idempotent_on_x() {
    let (data, _, _) = path_data(80, 4, 4, 1, (1.0, 1.0, 0.5), 4);
    let (c, _) = fit_component(&data, &FitConfig::default()).unwrap();
    let once = deflate(&DeflationState::new(data), &c).unwrap();
    let twice = deflate(&once, &c).unwrap();
    assert!((&once.data.x - &twice.data.x).amax() < 1e-12);
    assert!((&once.data.m - &twice.data.m).amax() < 1e-12);
}

#[test]
fn deflation_drops_rank_by_one() {
    let (data, _, _) = path_data(80, 4, 5, 1, (1.0, 1.0, 0.5), 5);
    let (c, _) = fit_component(&data, &FitConfig::default()).unwrap();
    let next = deflate(&DeflationState::new(data.clone()), &c).unwrap();
    assert_eq!(numerical_rank(&next.data.x, 1e-8), numerical_rank(&data.x, 1e-8) - 1);
    assert_eq!(numerical_rank(&next.data.m, 1e-8), numerical_rank(&data.m, 1e-8) - 1);
}

#[test]
fn deflation_checks_dimensions() {
    let data = random_data(30, 3, 3, 1);
    let (mut c, _) = fit_component(&data, &FitConfig::default()).unwrap();
    c.params.phi = DVector::from_element(2, 0.5f64.sqrt());
    assert!(matches!(
        deflate(&DeflationState::new(data), &c),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn components_are_mutually_orthogonal() {
    for seed in 0..10u64 {
        let data = random_data(120, 5, 6, 100 + seed);
        let (seq, _) = fit_components(&data, 3, &FitConfig::default()).unwrap();
        let pg = seq.phi_matrix.transpose() * &seq.phi_matrix - DMatrix::identity(3, 3);
        let mg = seq.psi_matrix.transpose() * &seq.psi_matrix - DMatrix::identity(3, 3);
        assert!(pg.amax() <= 1e-8, "seed {seed}: {pg}");
        assert!(mg.amax() <= 1e-8, "seed {seed}: {mg}");
    }
}

#[test]
fn refit_on_step_inputs_reproduces_component() {
    let data = random_data(150, 4, 4, 8);
    let infer = InferenceConfig {
        n_boot: 100,
        ..Default::default()
    };
    let fit = fit_sequence(&data, 3, &FitConfig::default(), &infer, StopRule::Exhaustive).unwrap();
    assert_eq!(fit.steps.len(), 3);
    for step in &fit.steps {
        let (again, _) = fit_component(&step.inputs, &FitConfig::default()).unwrap();
        let (a, b) = (&again.params, &step.component.params);
        assert!((a.alpha - b.alpha).abs() < 1e-8);
        assert!((a.beta - b.beta).abs() < 1e-8);
        assert!((a.gamma - b.gamma).abs() < 1e-8);
        assert!((&a.theta2 - &b.theta2).norm() < 1e-8);
    }
}

fn scenario_with(paths: Vec<PathCoefficients>, n: usize, seed: u64) -> SimScenario {
    SimScenario::new(n, paths, SMALL_EXPOSURE_DECAY.values(5), SMALL_MEDIATOR_DECAY.values(10), seed).unwrap()
}

#[test]
fn two_true_paths_give_two_significant_components() {
    let data = generate(&SimScenario::small(500, 3).unwrap()).unwrap();
    let fit = fit_sequence(&data, 4, &FitConfig::default(), &InferenceConfig::default(), StopRule::default()).unwrap();
    assert_eq!(fit.sequence.len(), 2);
    assert_eq!(fit.steps.len(), 3);
    assert!(!fit.steps[2].significant);
    assert_eq!(fit.excluded().count(), 1);
}

#[test]
fn no_mediation_gives_no_components() {
    let paths = vec![PathCoefficients::new(2.0, 0.0, 1.0), PathCoefficients::new(2.0, 0.0, -1.0)];
    let data = generate(&scenario_with(paths, 500, 4)).unwrap();
    let fit = fit_sequence(&data, 3, &FitConfig::default(), &InferenceConfig::default(), StopRule::default()).unwrap();
    assert!(fit.sequence.is_empty(), "{:?}", fit.steps.iter().map(|s| s.bootstrap.interval(pcma_core::Quantity::Ie)).collect::<Vec<_>>());
}

#[test]
fn component_cap_is_respected() {
    let data = generate(&SimScenario::small(300, 5).unwrap()).unwrap();
    let fit = fit_sequence(&data, 1, &FitConfig::default(), &InferenceConfig::default(), StopRule::default()).unwrap();
    assert!(fit.sequence.len() <= 1);
    assert_eq!(fit.steps.len(), 1);
    let none = fit_sequence(&data, 0, &FitConfig::default(), &InferenceConfig::default(), StopRule::default()).unwrap();
    assert!(none.sequence.is_empty() && none.steps.is_empty());
    assert!(matches!(
        fit_sequence(&data, 6, &FitConfig::default(), &InferenceConfig::default(), StopRule::default()),
        Err(Error::InvalidConfig(_))
    ));
    assert!(matches!(fit_components(&data, 6, &FitConfig::default()), Err(Error::InvalidConfig(_))));
}

#[test]
fn sequence_matches_serial_executor() {
    let data = random_data(100, 3, 3, 12);
    let infer = InferenceConfig {
        n_boot: 100,
        seed: 4,
        ..Default::default()
    };
    let a = fit_sequence(&data, 2, &FitConfig::default(), &infer, StopRule::Exhaustive).unwrap();
    let b = fit_sequence_with(&data, 2, &FitConfig::default(), &infer, StopRule::Exhaustive, &Serial).unwrap();
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert_eq!(x.bootstrap, y.bootstrap);
        assert_eq!(x.component, y.component);
    }
}

#[test]
fn recovered_subspace_improves_with_n() {
    let product = |n: usize| {
        let sc = SimScenario::small(n, 21).unwrap();
        let data = generate(&sc).unwrap();
        let (seq, _) = fit_components(&data, 2, &FitConfig::default()).unwrap();
        let truth = sc.phi_true.columns(0, 2).into_owned();
        let sv = (seq.phi_matrix.transpose() * truth).singular_values();
        sv.iter().product::<f64>()
    };
    let (small, large) = (product(200), product(5000));
    assert!(large > small && large > 0.9, "{small} -> {large}");
}

#[test]
fn complement_projector_annihilates_columns() {
    let q = common::gaussian_matrix(5, 2, 1).qr().q();
    let p = complement_projector(&q);
    assert!((&p * &q).amax() < 1e-14);
    assert!((&p * &p - &p).amax() < 1e-14);
}

#[test]
fn pre_adjusted_data_is_orthogonal_to_covariates() {
    let (data, _, _) = common::path_data(60, 3, 4, 3, (1.0, 1.0, 0.5), 31);
    let adj = pcma_core::pre_adjust(&data).unwrap();
    assert_eq!(adj.s(), 1);
    assert!((data.w.transpose() * &adj.x).amax() < 1e-10);
    assert!((data.w.transpose() * &adj.m).amax() < 1e-10);
    assert!((data.w.transpose() * &adj.y).amax() < 1e-10);
    let mut bad = data.clone();
    let c = bad.w.column(1).into_owned();
    bad.w.set_column(2, &(c * 2.0));
    assert!(matches!(pcma_core::pre_adjust(&bad), Err(Error::RankDeficientCovariates)));
}
