use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis is singular (|det| = {det:e}, threshold {threshold:e})")]
    SingularBasis { det: f64, threshold: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("enumeration too large: about {predicted:.3e} vectors predicted, cap is {cap:.3e}")]
    EnumerationTooLarge { predicted: f64, cap: f64 },

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("unknown lattice `{0}`")]
    UnknownLattice(String),

    #[error("coincident points: |t_j - t_i| = {gap:e} between indices {i} and {j}")]
    CoincidentPoints { i: i64, j: i64, gap: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("degenerate nome: q^(m^2) = {0} is too close to 1")]
    DegenerateNome(f64),

    #[error("underflow: {0}")]
    Underflow(String),

    #[error("optimizer stopped after {0} iterations without converging")]
    MaxIterations(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::QuadratureFailure(_)
                | Error::EnumerationTooLarge { .. }
                | Error::DegenerateNome(_)
                | Error::Underflow(_)
                | Error::MaxIterations(_)
                | Error::CoincidentPoints { .. }
        )
    }

    /// Short machine-readable tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularBasis { .. } => "SingularBasis",
            Error::InvalidInput(_) => "InvalidInput",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::NonConvergence(_) => "NonConvergence",
            Error::DomainError(_) => "DomainError",
            Error::UnknownLattice(_) => "UnknownLattice",
            Error::CoincidentPoints { .. } => "CoincidentPoints",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::DegenerateNome(_) => "DegenerateNome",
            Error::Underflow(_) => "Underflow",
            Error::MaxIterations(_) => "MaxIterations",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
