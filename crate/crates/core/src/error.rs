use thiserror::Error;

/// Failure modes of the geodesic toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field is not holomorphic: negative-frequency mass {mass:.3e} exceeds {tol:.3e}")]
    NotHolomorphic { mass: f64, tol: f64 },
    #[error("winding number undefined: min |u| = {min_abs:.3e} vs max increment {max_step:.3e}")]
    TooCloseToZero { min_abs: f64, max_step: f64 },
    #[error("point {0} lies outside the open unit disc")]
    OutsideDisc(String),
    #[error("domain is not strongly linearly convex: {0}")]
    NotSlc(String),
    #[error("sample point is off the boundary (rho = {0:.3e})")]
    SampleOffBoundary(f64),
    #[error("unitary frame is singular: direction antipodal to chart center")]
    ChartSingularity,
    #[error("direction is not in L_p: <v, nu_p> = {0:.3e}")]
    NotInLp(f64),
    #[error("real-linear system is ill conditioned (cond ~ {0:.3e})")]
    IllConditioned(f64),
    #[error("symbols are not admissible (margin {0:.3e})")]
    NotAdmissible(f64),
    #[error("jet/two-point basis system is degenerate (cond ~ {0:.3e}); raise the resolution")]
    BasisDegenerate(f64),
    #[error("dual mapping degenerate: best first-component ratio {0:.3e}")]
    DualDegenerate(f64),
    #[error("first component of A0^t rho_z vanishes (min {0:.3e})")]
    FirstComponentVanishes(f64),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dual mapping is not holomorphic (projection residual {0:.3e})")]
    DualNotHolomorphic(f64),
    #[error("query point is within {delta:.3e} of the pole (distance {dist:.3e})")]
    TooCloseToSingularity { dist: f64, delta: f64 },
    #[error("matrix symbol is not positive definite at node {0}")]
    NotPositiveDefinite(usize),
    #[error("point is outside the chart collar: {0}")]
    OutsideCollar(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
