use thiserror::Error;

/// Everything that can go wrong when validating a dissection, building the
/// fan algebra, or manipulating twisted complexes over it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed ribbon data at point `{point}`: {detail}")]
    MalformedRibbon { point: String, detail: String },

    #[error("face trace does not close up orientably (arc `{arc}` visited twice on the same side)")]
    NonOrientableTrace { arc: String },

    #[error("face {face:?} carries no stop and no enclosed puncture")]
    FaceWithZeroStops { face: Vec<String> },

    #[error("face {face:?} carries {count} stops; each face must carry exactly one")]
    FaceWithManyStops { face: Vec<String>, count: usize },

    #[error("arcs `{first}` and `{second}` bound an empty bigon, so they are isotopic")]
    IsotopicArcs { first: String, second: String },

    #[error("interior point `{point}` is neither an arc endpoint nor enclosed by a face")]
    UnassignedPuncture { point: String },

    #[error("operation requires every face open, but a closed face encloses `{point}`")]
    ClosedFacePresent { point: String },

    #[error("custom grading is missing a degree for arrow `{arrow}`")]
    MissingCustomDegree { arrow: String },

    #[error("cannot compose: `{left}` starts at `{left_vertex}` but `{right}` ends at `{right_vertex}`")]
    EndpointMismatch {
        left: String,
        left_vertex: String,
        right: String,
        right_vertex: String,
    },

    #[error("objects were built over different fan quivers")]
    QuiverMismatch,

    #[error("entry {target} <- {src} carries `{fan}` of internal degree {found}, expected {expected}")]
    NonHomogeneousEntry {
        target: usize,
        src: usize,
        fan: String,
        found: String,
        expected: String,
    },

    #[error("differential does not square to zero: nonzero component at {target} <- {src}")]
    DifferentialNotSquareZero { target: usize, src: usize },

    #[error("chain map is not closed: D(f) has a nonzero component at {target} <- {src}")]
    NotClosed { target: usize, src: usize },

    #[error("expected a map of degree {expected}, got degree {found}")]
    WrongDegree { expected: String, found: String },

    #[error("curve word is broken at slot {slot}: {detail}")]
    BrokenWord { slot: usize, detail: String },

    #[error("twist data fails the square-zero test at {target} <- {src}")]
    SquareZeroViolation { target: usize, src: usize },

    #[error("closed curve is not gradable: degrees around the loop sum to {total}, expected 0")]
    UngradableBand { total: i64 },

    #[error("local system is singular: companion constant term (determinant factor) vanishes")]
    SingularLocalSystem,

    #[error("parse error at line {line}, column {column}: {detail}")]
    ParseError {
        line: usize,
        column: usize,
        detail: String,
    },

    #[error("unknown object `{name}`")]
    UnknownObject { name: String },
}

impl Error {
    /// Stable identifier used in reports, alongside the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedRibbon { .. } => "MalformedRibbon",
            Error::NonOrientableTrace { .. } => "NonOrientableTrace",
            Error::FaceWithZeroStops { .. } => "FaceWithZeroStops",
            Error::FaceWithManyStops { .. } => "FaceWithManyStops",
            Error::IsotopicArcs { .. } => "IsotopicArcs",
            Error::UnassignedPuncture { .. } => "UnassignedPuncture",
            Error::ClosedFacePresent { .. } => "ClosedFacePresent",
            Error::MissingCustomDegree { .. } => "MissingCustomDegree",
            Error::EndpointMismatch { .. } => "EndpointMismatch",
            Error::QuiverMismatch => "QuiverMismatch",
            Error::NonHomogeneousEntry { .. } => "NonHomogeneousEntry",
            Error::DifferentialNotSquareZero { .. } => "DifferentialNotSquareZero",
            Error::NotClosed { .. } => "NotClosed",
            Error::WrongDegree { .. } => "WrongDegree",
            Error::BrokenWord { .. } => "BrokenWord",
            Error::SquareZeroViolation { .. } => "SquareZeroViolation",
            Error::UngradableBand { .. } => "UngradableBand",
            Error::SingularLocalSystem => "SingularLocalSystem",
            Error::ParseError { .. } => "ParseError",
            Error::UnknownObject { .. } => "UnknownObject",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
