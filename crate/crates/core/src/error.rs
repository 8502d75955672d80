use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point {point:?} lies outside the chart domain")]
    OutsideChart { point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Riccati solution blew up before reaching the requested distance.
    #[error("parallel curves focalise at distance {focal_distance} (requested {requested})")]
    Focal { focal_distance: f64, requested: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("vertex {vertex} has a degenerate reconstruction stencil ({usable} usable neighbours)")]
    DegenerateStencil { vertex: usize, usable: usize },

    #[error("field has {got} values, mesh has {expected} vertices")]
    FieldLength { expected: usize, got: usize },

    #[error("lemma inapplicable: {0}")]
    LemmaInapplicable(String),

    #[error("region is empty: {0}")]
    EmptyRegion(String),
}
