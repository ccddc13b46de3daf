use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point lies on an excluded pole")]
    Pole,
    #[error("point outside the operation's range: {0}")]
    Range(String),
    #[error("point at the excluded origin")]
    Origin,
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("implicit solve did not converge: {0}")]
    NonConvergence(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("certificate failure: {0}")]
    CertificateFailure(String),
    #[error("no transitivity witness: {0}")]
    WitnessNotFound(String),
    #[error("not representable: {0}")]
    Unrepresentable(String),
    #[error("quadrature tolerance not met: {0}")]
    Quadrature(String),
    #[error("singular jacobian: {0}")]
    SingularJacobian(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
