use serde::Serialize;
use thiserror::Error;

/// Integer coordinates `(m, k)` of the lattice point `m ω₁ + k ω₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LatticePoint {
    pub m: i64,
    pub k: i64,
}

impl LatticePoint {
    pub const fn new(m: i64, k: i64) -> Self {
        LatticePoint { m, k }
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.m, self.k)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside the strip 0 < Re z < Re(ω₁+ω₂)")]
    OutOfStrip,
    #[error("quadrature did not reach tolerance: {0}")]
    QuadratureFailure(String),
    #[error("argument within pole tolerance of lattice point {0}")]
    PoleHit(LatticePoint),
    #[error("argument on the zero lattice at {0}")]
    ZeroHit(LatticePoint),
    #[error("shift reduction needs {needed} steps, limit is {limit}")]
    ShiftDepthExceeded { needed: u64, limit: u32 },
    #[error("period ratio is real, product form does not converge")]
    RealPeriodRatio,
    #[error("nome has modulus {0} >= 1")]
    NonconvergentProduct(f64),
    #[error("period ratio is rational within tolerance ({0}/{1})")]
    DegenerateLattice(i64, i64),
    #[error("point lies within the margin of the cones around the periods")]
    InsideCone,
    #[error("coordinates {0} and {1} coincide")]
    CoincidingCoordinates(usize, usize),
    #[error("shifted argument leaves the analyticity strip")]
    StripExceeded,
    #[error("measure vanishes, gauge transformation singular")]
    GaugeSingular,
    #[error("vanishing sine denominator")]
    SingularDenominator,
    #[error("zero denominator in {0}")]
    ZeroDenominator(String),
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("configuration hits a lattice coincidence: {0}")]
    DegenerateConfiguration(String),
    #[error("series does not converge: |u| = {0}, |v| = {1}")]
    NonconvergentSeries(f64, f64),
    #[error("fitted slope {fitted} differs from {expected}")]
    SlopeMismatch { fitted: f64, expected: f64 },
    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("parameter regime violated: {0}")]
    RegimeViolation(String),
    #[error("extended precision support was not compiled in")]
    ExtendedUnavailable,
}

pub type Result<T> = std::result::Result<T, Error>;
