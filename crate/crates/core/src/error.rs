use crate::metric::SolveResult;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported parameter combination: {0}")]
    UnsupportedCombination(String),

    #[error("measure {target} is not attainable at the cut level; nearest attainable measures are {below} and {above}")]
    NotAttainable { target: f64, below: f64, above: f64 },

    #[error("both norms vanish; the ratio is 0/0")]
    DegenerateRatio,

    #[error("the function vanishes identically")]
    ZeroFunction,

    #[error("not quasi-concave: {0}")]
    NotQuasiconcave(String),

    #[error("every ball is degenerate (both sides vanish)")]
    AllDegenerate,

    #[error("values are not {constant}-Lipschitz on the subset: pair ({i}, {j}) has ratio {ratio}")]
    NotLipschitzOnSubset { i: usize, j: usize, constant: f64, ratio: f64 },

    #[error("Hajlasz inequality fails at pair ({i}, {j}) by {excess}")]
    HajlaszViolated { i: usize, j: usize, excess: f64 },

    #[error("no admissible level in the {stage} scan within {doublings} doublings (last tried {last_sigma})")]
    BudgetExhausted { stage: String, doublings: u32, last_sigma: f64 },

    #[error("solver stalled: {detail}")]
    SolverStall { detail: String, result: Box<SolveResult> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::Invalid(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
        Error::UnsupportedCombination(msg.into())
    }
}
