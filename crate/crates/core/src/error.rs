use thiserror::Error;

use crate::balance::BalanceError;
use crate::bounds::BoundsError;
use crate::curve::CurveError;
use crate::io::IoError;
use crate::matspace::MatError;
use crate::quad::QuadError;
use crate::spectral::SpectralError;

/// Crate-level error; each variant carries the failing module's name.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matspace: {0}")]
    Mat(#[from] MatError),
    #[error("curve: {0}")]
    Curve(#[from] CurveError),
    #[error("quad: {0}")]
    Quad(#[from] QuadError),
    #[error("balance: {0}")]
    Balance(#[from] BalanceError),
    #[error("bounds: {0}")]
    Bounds(#[from] BoundsError),
    #[error("spectral: {0}")]
    Spectral(#[from] SpectralError),
    #[error("io: {0}")]
    Io(#[from] IoError),
}

pub type Result<T> = std::result::Result<T, Error>;
