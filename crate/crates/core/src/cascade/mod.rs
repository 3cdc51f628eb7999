//! Inversion of u + G R⁰ₖ(λ−κ²) G* for small κ around thresholds and
//! embedded eigenvalues, where the κ = 0 operator is not invertible.

pub mod eigen;
pub mod invert;
pub mod resonance;
pub mod threshold;

pub use eigen::{build_eig_expansion, m_eig, EigExpansion};
pub use invert::{jn_invert, JnInverse};
pub use threshold::{build_threshold_cascade, m_threshold, CascadeChecks, CascadeData};

use num_complex::Complex64;

/// A point of the closed quarter disk around which M_k is expanded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionPoint {
    pub lambda: f64,
    pub kappa: Complex64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    Threshold,
    Eigenvalue,
}

impl ExpansionPoint {
    pub fn new(lambda: f64, kappa: Complex64, regime: Regime) -> crate::Result<Self> {
        if kappa.re < 0.0 || kappa.im > 0.0 {
            return Err(crate::Error::InvalidInput(format!("κ = {kappa} must satisfy Re κ ≥ 0, Im κ ≤ 0")));
        }
        Ok(Self { lambda, kappa, regime })
    }

    /// z = λ − κ², in the closed upper half-plane.
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.lambda, 0.0) - self.kappa * self.kappa
    }

    /// κ lies in the open quarter disk.
    pub fn is_interior(&self) -> bool {
        self.kappa.re > 0.0 && self.kappa.im < 0.0
    }
}
