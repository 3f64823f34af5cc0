//! Red and blue cone waves on a 2-D torus, light-ray tubes, and extraction of the
//! tubes on which a red wave concentrates its bilinear L^2 interactions.

pub mod blue_exceptional;
pub mod config;
pub mod error;
pub mod extraction;
pub mod fft;
pub mod geometry;
pub mod io;
pub mod norms;
pub mod profile;
pub mod tube_cover;
pub mod wavefield;

pub use error::{Error, Result};
pub use geometry::{Cube, Point, Region, Torus, Tube};
pub use norms::QuadratureScheme;
pub use wavefield::{Color, FrequencyLattice, SpatialGrid, SpectralWave};
