//! A potential, a fiber and the discretization, bundled with the matrices
//! every evaluation needs (mult(u) and the channel columns v·eₙ).

use crate::fiber::FiberContext;
use crate::linalg::{sandwich_diag, CMat, C64};
use crate::tol::{Cutoffs, Tolerances};
use crate::torus::{build_potential, mult_operator, PotentialKind, PotentialModel};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FiberProblem {
    pub potential: PotentialModel,
    pub fiber: FiberContext,
    pub cutoffs: Cutoffs,
    pub tol: Tolerances,
    u: CMat,
    w: CMat,
    channels: Vec<i64>,
    thresholds: Vec<f64>,
}

impl FiberProblem {
    pub fn new(potential: PotentialModel, k: f64, cutoffs: Cutoffs, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        if cutoffs.modes == 0 {
            return Err(Error::InvalidInput("need at least one Fourier mode".into()));
        }
        if potential.v_cutoff != cutoffs.v_cutoff {
            return Err(Error::InvalidInput("potential was built with a different v_cutoff".into()));
        }
        let fiber = FiberContext::new(k, cutoffs.inner_channels())?;
        let u = mult_operator(&potential.u_hat, cutoffs.modes, false)?.matrix;
        let channels: Vec<i64> = fiber.channels().collect();
        let thresholds = channels.iter().map(|&n| fiber.threshold(n)).collect();
        let d = 2 * cutoffs.modes + 1;
        let mut w = CMat::zeros(d, channels.len());
        for (j, &n) in channels.iter().enumerate() {
            w.set_column(j, &potential.channel_vector(n, cutoffs.modes));
        }
        Ok(Self { potential, fiber, cutoffs, tol, u, w, channels, thresholds })
    }

    /// Convenience constructor from a potential description with default settings.
    pub fn from_kind(kind: &PotentialKind, k: f64) -> Result<Self> {
        Self::with(kind, k, Cutoffs::default(), Tolerances::default())
    }

    pub fn with(kind: &PotentialKind, k: f64, cutoffs: Cutoffs, tol: Tolerances) -> Result<Self> {
        let pm = build_potential(kind, cutoffs.samples, cutoffs.v_cutoff)?;
        Self::new(pm, k, cutoffs, tol)
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoffs.modes + 1
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.modes
    }

    /// Index of Fourier mode m in the matrices.
    pub fn mode_index(&self, m: i64) -> usize {
        (m + self.cutoffs.modes as i64) as usize
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn channels(&self) -> &[i64] {
        &self.channels
    }

    pub fn channel_thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    fn column(&self, n: i64) -> usize {
        (n + self.fiber.channel_cutoff as i64) as usize
    }

    /// The vector v·eₙ in the truncated basis.
    pub fn w(&self, n: i64) -> nalgebra::DVectorView<'_, C64> {
        self.w.column(self.column(n))
    }

    pub fn w_matrix(&self) -> &CMat {
        &self.w
    }

    /// Σₙ dₙ vPₙv over all retained channels (dₙ indexed like `channels()`).
    pub fn channel_sum(&self, d: &[C64]) -> CMat {
        sandwich_diag(&self.w, d)
    }

    /// Σ_{n ∈ set} vPₙv.
    pub fn vpv(&self, set: &[i64]) -> CMat {
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for &n in set {
            let w = self.w(n);
            acc += &w * w.adjoint();
        }
        acc
    }

    /// Open channels at λ must be represented in the basis to carry a
    /// meaningful S-matrix entry.
    pub fn check_in_basis(&self, n: i64) -> Result<()> {
        if n.unsigned_abs() as usize > self.cutoffs.modes {
            Err(Error::ChannelOutOfBasis(n))
        } else {
            Ok(())
        }
    }
}
