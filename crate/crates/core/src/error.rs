use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty form after normalization: {0:?}")]
    EmptyForm(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate doculect id {0:?}")]
    DuplicateDoculect(String),

    #[error("unknown concept id {0:?}")]
    UnknownConcept(String),

    #[error("duplicate concept id {0} in word-list file")]
    DuplicateConcept(u16),

    #[error("matrix asymmetry at ({i},{j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("matrix diagonal nonzero at {0}")]
    NonzeroDiagonal(usize),

    #[error("matrix entry ({i},{j}) = {value} outside [0,1]")]
    EntryOutOfRange { i: usize, j: usize, value: f64 },

    #[error("cognate percentage ({i},{j}) = {value} outside [0,100]")]
    PercentageOutOfRange { i: usize, j: usize, value: f64 },

    #[error("both words empty: normalized LDN undefined")]
    UndefinedPair,

    #[error("doculects {0:?} and {1:?} share no concepts")]
    IncomparablePair(String, String),

    #[error("coordinate out of range for {id:?}: lat {lat}, lon {lon}")]
    CoordinateOutOfRange { id: String, lat: f64, lon: f64 },

    #[error("distance {0} >= 1: separation time saturates")]
    Saturated(f64),

    #[error("invalid time scale: rate {rate}, survey year {survey_year}, root year {root_year}")]
    InvalidTimeScale { rate: f64, survey_year: f64, root_year: f64 },

    #[error("degenerate tree: all path lengths zero")]
    DegenerateTree,

    #[error("doculect {0:?} has zero total distance to all others")]
    DisconnectedDoculect(String),

    #[error("eigensolver did not converge: off-diagonal residual {residual}")]
    EigenSolver { residual: f64 },

    #[error("degenerate radial fit: zero spread")]
    DegenerateFit,

    #[error("singular regression: all selected geographic distances identical")]
    SingularRegression,

    #[error("nonpositive diversity denominator for pair ({0:?},{1:?})")]
    NonpositiveDenominator(String, String),

    #[error("doculect {0:?} has no coordinates")]
    MissingCoordinates(String),

    #[error("need at least {need} doculects, got {got}")]
    TooFew { need: usize, got: usize },

    #[error("label {0:?} not present in matrix")]
    UnknownLabel(String),

    #[error("malformed newick: {0}")]
    Newick(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
