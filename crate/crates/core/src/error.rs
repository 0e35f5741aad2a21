use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("z = {z} lies inside the fiber band ({lo}, {hi})")]
    BandInterior { z: f64, lo: f64, hi: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("sign condition violated at node {node}: Delta = {delta:e} (z = {z})")]
    SignCondition { node: usize, delta: f64, z: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("z = {z} falls inside the band fuzz [{lo}, {hi}]")]
    Ambiguity { z: f64, lo: f64, hi: f64 },

    #[error("band structure mismatch: {0}")]
    Mismatch(String),

    #[error("sector truncation insufficient: l = {l} has norm bound {norm} >= {lambda}")]
    Truncation { l: usize, norm: f64, lambda: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
