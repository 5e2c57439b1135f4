use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("x = {x} is a discontinuity of the potential")]
    AtDiscontinuity { x: f64 },

    #[error("energy {energy} outside the bound-state window ({floor}, 0)")]
    EnergyOutOfRange { energy: f64, floor: f64 },

    #[error(
        "potential at the integration start ({v}) does not exceed the trial energy ({energy})"
    )]
    NotForbidden { v: f64, energy: f64 },

    #[error("wavefunction tail not decayed at x_max: |psi| = {tail:e}")]
    TailNotDecayed { tail: f64 },

    #[error("root refinement did not converge within {0} iterations")]
    IterationLimit(usize),

    #[error("bracket ends do not straddle a root: f({lo}) and f({hi}) share a sign")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("node law violated: expected nodes 0..{expected}, found {found:?}")]
    NodeLaw { expected: usize, found: Vec<usize> },

    #[error("no bound state with index {index} ({available} available)")]
    NoSuchState { index: usize, available: usize },

    #[error("p_max * dx = {product} exceeds the Filon stability bound {bound}")]
    FilonBound { product: f64, bound: f64 },

    #[error("intensity at p = {p} is below the transform noise floor; shrink the window")]
    NoiseFloor { p: f64 },

    #[error("<p^{order}> diverges for this well (delta singularity)")]
    Divergent { order: u32 },

    #[error("{0}")]
    Window(String),
}

pub type Result<T> = std::result::Result<T, Error>;
