use thiserror::Error;

/// Errors produced by graph construction, oracle building and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("neighbor index {index} out of range for vertex {vertex} with degree {degree}")]
    NeighborOutOfRange {
        vertex: usize,
        index: usize,
        degree: usize,
    },

    #[error("vertex set is empty")]
    EmptySet,

    #[error("set of size {size} exceeds the brute-force cap of {cap}")]
    SubsetTooLarge { size: usize, cap: usize },

    #[error("graph with {n} vertices exceeds the dense eigensolver cap of {cap}")]
    OverCap { n: usize, cap: usize },

    #[error("degenerate spectrum: eigenvalue {eigenvalue:e} at or below floor {floor:e}; increase R_init or s_oracle")]
    DegenerateSpectrum { eigenvalue: f64, floor: f64 },

    #[error("threshold is not positive ({0:e}); the conductance gap is too small for these parameters")]
    NonpositiveTheta(f64),

    #[error("similarity graph has {components} connected components, expected {expected}")]
    ConstructFailed { components: usize, expected: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("no grid entry produced a positive gap between intra- and inter-cluster values")]
    NoPositiveGap,

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported file version or magic: {0}")]
    VersionMismatch(String),

    #[error("file was built for a different graph: {0}")]
    FingerprintMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
