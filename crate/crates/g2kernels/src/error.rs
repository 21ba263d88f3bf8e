use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the open unit disc (|z| = {0})")]
    OutsideDisc(f64),
    #[error("point not in G2 (root modulus {0})")]
    NotInG2(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("raw bracket cancels to more than 12 digits; use the series path")]
    Cancellation,
    #[error("diagonal pair rejected by the raw formula (|z1-z2||w1-w2| = {0})")]
    DiagonalRejected(f64),
    #[error("series outside its validity neighbourhood (|z1-z2||w1-w2| = {0})")]
    OffDiagonal(f64),
    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("branch tracking failed after {0} path steps")]
    BranchTracking(usize),
    #[error("unsupported power: {0}")]
    UnsupportedPower(String),
    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),
    #[error("kernel value is not a scalar")]
    NotScalar,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
