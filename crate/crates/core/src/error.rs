use std::fmt;

/// Which vector of a pair an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Neuron(usize),
    Target(usize),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Neuron(i) => write!(f, "w{i}"),
            Operand::Target(j) => write!(f, "v{j}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero vector at {0}")]
    ZeroNeuron(Operand),
    #[error("parallel pair ({0}, {1}) in a second-order term")]
    SingularPair(Operand, Operand),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("iterate {iteration} hit a zero neuron at w{neuron}")]
    SingularEncounter { iteration: u64, neuron: usize },
    #[error("coordinate permutations are only a symmetry for the standard basis")]
    SymmetryUnavailable,
    #[error("sin enclosure of ({0}, {1}) contains zero")]
    SingularEnclosure(Operand, Operand),
    #[error("neuron norm enclosure at {0} contains zero")]
    ZeroEnclosure(Operand),
    #[error("U^T U is not diagonally dominant")]
    NotDiagonallyDominant,
    #[error("orthogonality defect C = {0:e} is not below 1")]
    CEnclosureTooLarge(f64),
    #[error("ball minimum norm enclosure touches zero")]
    DegenerateBall,
    #[error("discriminant 9 lambda^2 - 25 B eps is negative")]
    DiscriminantNegative,
    #[error("radius {r:e} is not below alpha {alpha:e}")]
    RadiusExceedsAlpha { r: f64, alpha: f64 },
    #[error("radius {r:e} reaches the smallest neuron norm {w_min:e}")]
    BallContainsOrigin { r: f64, w_min: f64 },
    #[error("Hessian is not certified positive definite")]
    NotPositiveDefinite,
    #[error("inequality still indeterminate at {0} bits")]
    Indeterminate(u32),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invariant violated on load: {0}")]
    InvariantViolationOnLoad(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
