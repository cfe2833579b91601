//! Multi-component extraction by deflation.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Block, Error, Result};
use crate::inference::{bootstrap_component_with, BootstrapResult, Executor, InferenceConfig, Quantity, Serial};
use crate::model::{ComponentSequence, DataSet, MediationComponent};
use crate::solver::{fit_component, FitConfig, FitTrace};

/// Data remaining after `k` components have been removed. Covariates are
/// never deflated.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationState {
    pub data: DataSet,
    pub k: usize,
}

impl DeflationState {
    pub fn new(data: DataSet) -> Self {
        Self { data, k: 0 }
    }
}

/// Remove one fitted component.
///
/// `X ← X - (Xφ)φᵀ`, `M ← M - (Mψ)ψᵀ` and `Y ← Y - (Xφ)γ - (Mψ)β`, where the
/// scores `Xφ`, `Mψ` come from the data before this step.
pub fn deflate(state: &DeflationState, component: &MediationComponent) -> Result<DeflationState> {
    let d = &state.data;
    let phi = &component.params.phi;
    let psi = &component.params.psi;
    if phi.len() != d.p() {
        return Err(Error::DimensionMismatch {
            block: Block::Exposures,
            what: "loadings",
            expected: d.p(),
            found: phi.len(),
        });
    }
    if psi.len() != d.q() {
        return Err(Error::DimensionMismatch {
            block: Block::Mediators,
            what: "loadings",
            expected: d.q(),
            found: psi.len(),
        });
    }
    let sx = &d.x * phi;
    let sm = &d.m * psi;
    let x = &d.x - &sx * phi.transpose();
    let m = &d.m - &sm * psi.transpose();
    let y = &d.y - &sx * component.params.gamma - &sm * component.params.beta;
    Ok(DeflationState {
        data: DataSet {
            x,
            m,
            w: d.w.clone(),
            y,
        },
        k: state.k + 1,
    })
}

/// When to stop extracting components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// Stop at the first component whose indirect-effect interval covers 0.
    #[default]
    FirstNonSignificant,
    /// Fit `max_components` regardless and report every test.
    Exhaustive,
}

/// One extraction step: the component, its bootstrap test and the data it
/// was fitted on.
#[derive(Debug, Clone)]
pub struct SequenceStep {
    pub component: MediationComponent,
    pub trace: FitTrace,
    pub bootstrap: BootstrapResult,
    pub significant: bool,
    /// Deflated inputs this component was fitted to.
    pub inputs: DataSet,
}

#[derive(Debug, Clone)]
pub struct SequenceFit {
    /// The leading run of significant components.
    pub sequence: ComponentSequence,
    /// Every fitted component in order, including the non-significant one
    /// that ended the search (flagged by `significant = false`).
    pub steps: Vec<SequenceStep>,
}

impl SequenceFit {
    /// Steps not retained in `sequence`.
    pub fn excluded(&self) -> impl Iterator<Item = &SequenceStep> {
        self.steps.iter().skip(self.sequence.len())
    }
}

/// Fit up to `max_components` components, testing each indirect effect with
/// the bootstrap.
pub fn fit_sequence(
    data: &DataSet,
    max_components: usize,
    config: &FitConfig,
    infer: &InferenceConfig,
    rule: StopRule,
) -> Result<SequenceFit> {
    fit_sequence_with(data, max_components, config, infer, rule, &Serial)
}

/// [`fit_sequence`] with bootstrap draws mapped by `exec`.
pub fn fit_sequence_with<E: Executor>(
    data: &DataSet,
    max_components: usize,
    config: &FitConfig,
    infer: &InferenceConfig,
    rule: StopRule,
    exec: &E,
) -> Result<SequenceFit> {
    if max_components > data.p().min(data.q()) {
        return Err(Error::InvalidConfig("max_components exceeds min(p, q)"));
    }
    infer.validate()?;
    let mut state = DeflationState::new(data.clone());
    let mut steps: Vec<SequenceStep> = Vec::new();
    let mut significant_run = 0;
    let mut run_open = true;
    for k in 0..max_components {
        let (component, trace) = fit_component(&state.data, config)?;
        let bootstrap = bootstrap_component_with(&state.data, &component, infer, k as u64, exec)?;
        let significant = !bootstrap.interval(Quantity::Ie).covers(0.0);
        let next = deflate(&state, &component)?;
        steps.push(SequenceStep {
            component,
            trace,
            bootstrap,
            significant,
            inputs: state.data,
        });
        if run_open && significant {
            significant_run += 1;
        } else {
            run_open = false;
        }
        if !significant && rule == StopRule::FirstNonSignificant {
            break;
        }
        state = next;
    }
    let kept: Vec<MediationComponent> = steps.iter().take(significant_run).map(|s| s.component.clone()).collect();
    Ok(SequenceFit {
        sequence: ComponentSequence::new(data.p(), data.q(), kept),
        steps,
    })
}

/// Fit `k` components without any significance testing.
pub fn fit_components(data: &DataSet, k: usize, config: &FitConfig) -> Result<(ComponentSequence, Vec<FitTrace>)> {
    if k > data.p().min(data.q()) {
        return Err(Error::InvalidConfig("component count exceeds min(p, q)"));
    }
    let mut state = DeflationState::new(data.clone());
    let mut comps = Vec::with_capacity(k);
    let mut traces = Vec::with_capacity(k);
    for _ in 0..k {
        let (c, t) = fit_component(&state.data, config)?;
        state = deflate(&state, &c)?;
        comps.push(c);
        traces.push(t);
    }
    Ok((ComponentSequence::new(data.p(), data.q(), comps), traces))
}

/// Projector `I - Φ Φᵀ` for stacked orthonormal columns.
pub fn complement_projector(columns: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(columns.nrows(), columns.nrows()) - columns * columns.transpose()
}
