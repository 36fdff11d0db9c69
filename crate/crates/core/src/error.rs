use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nu3 = {nu3} lies outside the profile domain [{lo}, {hi}]")]
    Domain { nu3: f64, lo: f64, hi: f64 },

    #[error("convexity fails at nu3 = {nu3}: {what} = {value} <= 0")]
    Convexity {
        nu3: f64,
        what: &'static str,
        value: f64,
    },

    #[error("no real eta2 at eta1 = {eta1}: discriminant {discriminant} < 0")]
    NoRealRoot { eta1: f64, discriminant: f64 },

    #[error("degenerate sled equation: Lambda = 0 and G(eta1) = 0")]
    DegenerateEquation,

    #[error("no eta1 admits a real eta2 for these parameters")]
    EmptyDomain,

    #[error("turning relation is singular near s = {s}")]
    SingularTurning { s: f64 },

    #[error("degenerate face: consecutive curve samples {index} and {next} coincide")]
    DegenerateFace { index: usize, next: usize },

    #[error("no root of the first integral in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("tracked root branch lost after r = {last_r}")]
    BranchLost { last_r: f64 },

    #[error("omega = {omega} lies inside the catenoid waist")]
    Waist { omega: f64 },

    #[error("angular span {span} exceeds one full turn")]
    BranchCut { span: f64 },

    #[error("horizontal norm is not invariant under rotation by a right angle (defect {defect})")]
    Hypothesis { defect: f64 },

    #[error("vertex {vertex} has a degenerate stencil: {reason}")]
    DegenerateStencil { vertex: usize, reason: &'static str },

    #[error("{count} faces have normals outside the profile domain (first: {first})")]
    FaceDomain { count: usize, first: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
