use core::fmt;

/// One of the four observed data blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Exposures,
    Mediators,
    Covariates,
    Outcome,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Block::Exposures => "X (exposures)",
            Block::Mediators => "M (mediators)",
            Block::Covariates => "W (covariates)",
            Block::Outcome => "Y (outcome)",
        })
    }
}

/// Which of the two unit-norm projections an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Exposure,
    Mediator,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Projection::Exposure => "phi",
            Projection::Mediator => "psi",
        })
    }
}

/// The two structural regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// `[X phi, W]` for the mediator model.
    Mediator,
    /// `[M psi, X phi, W]` for the outcome model.
    Outcome,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Mediator => "[X phi, W]",
            Design::Outcome => "[M psi, X phi, W]",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("need more than {required} observations, found {n}")]
    InsufficientSample { n: usize, required: usize },
    #[error("dimension mismatch in {block}: expected {expected} {what}, found {found}")]
    DimensionMismatch {
        block: Block,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in {block} at row {row}, column {col}")]
    NonFiniteEntry { block: Block, row: usize, col: usize },
    #[error("first column of W must be the all-ones intercept (row {row} differs)")]
    MissingInterceptColumn { row: usize },
    #[error("{block} column {column} has zero variance and cannot be scaled")]
    ZeroVarianceColumn { block: Block, column: usize },
    #[error("variance parameters must be positive (sigma2 = {sigma2}, tau2 = {tau2})")]
    NonPositiveVariance { sigma2: f64, tau2: f64 },
    #[error("no informative update direction for {0}: linear term vanishes")]
    DegenerateDirection(Projection),
    #[error("covariate matrix W is column-rank-deficient")]
    RankDeficientCovariates,
    #[error("design matrix {0} is column-rank-deficient")]
    RankDeficientDesign(Design),
    #[error("information block {block} is singular (condition number {condition:e})")]
    SingularInformation {
        block: &'static str,
        condition: f64,
    },
    #[error("score collinearity: kappa_x * kappa_m - kappa_xm^2 = {0:e} is not positive")]
    DegenerateScoreCollinearity(f64),
    #[error("bootstrap resampling produced {redraws} rank-deficient designs (cap {cap})")]
    ResampleDegenerate { redraws: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
