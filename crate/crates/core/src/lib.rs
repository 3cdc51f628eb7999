//! Spectral and scattering data of the Laplacian on the half-space
//! R₊ × T with a periodic boundary potential, computed one Bloch fiber at a
//! time.

pub mod birman_schwinger;
pub mod cascade;
pub mod error;
pub mod fiber;
pub mod halfline;
pub mod linalg;
pub mod problem;
pub mod quad;
pub mod scattering;
pub mod spectral;
pub mod tol;
pub mod torus;
pub mod wave;

pub use error::{Error, Result};
pub use fiber::FiberContext;
pub use problem::FiberProblem;
pub use tol::{Cutoffs, Tolerances};
pub use torus::{PotentialKind, PotentialModel};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/potentials.md")]
pub struct GuidePotentials;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spectrum.md")]
pub struct GuideSpectrum;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scattering.md")]
pub struct GuideScattering;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/thresholds.md")]
pub struct GuideThresholds;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/halfline.md")]
pub struct GuideHalfline;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/wave.md")]
pub struct GuideWave;
