use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("grid metadata mismatch: {0}")]
    MetadataMismatch(String),
    #[error("target structure absent: {0}")]
    NoTargetStructure(&'static str),
    #[error("all requested classes absent from ground truth")]
    AllClassesAbsent,
    #[error("derived b1 is negative ({0}); connectivity convention violated")]
    NegativeBetti(i64),
    #[error("gestational age {ga} outside curve range [{min}, {max}]")]
    GaOutOfRange { ga: f64, min: f64, max: f64 },
    #[error("degenerate design matrix: need >= 3 distinct abscissae")]
    DegenerateDesign,
    #[error("unmapped source label code {0} in strict map")]
    UnmappedCode(u8),
    #[error("label code {0} out of range (max 8)")]
    LabelOutOfRange(u8),
    #[error("infeasible phantom spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("oblique affine not supported")]
    ObliqueAffine,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
