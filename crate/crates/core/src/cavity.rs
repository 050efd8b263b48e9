//! Resonant magnon-photon blocks in the one-particle sector.
//!
//! On the invariant subspace {α†|0⟩, c†|0⟩} ⊕ {β†|0⟩, d†|0⟩} the cavity
//! Hamiltonian is a direct sum of two 2×2 blocks
//!
//! ```text
//! [ω_α  −Δ*]     [ω_β  +Δ*]
//! [−Δ    ω ]  ⊕  [+Δ    ω ]
//! ```
//!
//! with Δ = λ(u + v*). Each block oscillates at πf = √(Δω² + |Δ|²), where
//! Δω = (ω_magnon − ω)/2.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spinwave::{BogoliubovFactors, HybridModes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// α magnon with the c photon; couplings −Δ.
    Alpha,
    /// β magnon with the d photon; couplings +Δ.
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityBlock {
    pub kind: BlockKind,
    pub omega_magnon: f64,
    pub omega_photon: f64,
    pub delta_k: Complex64,
}

impl CavityBlock {
    pub fn new(kind: BlockKind, omega_magnon: f64, omega_photon: f64, delta_k: Complex64) -> Self {
        Self { kind, omega_magnon, omega_photon, delta_k }
    }

    /// Block selected from the hybrid dispersions.
    pub fn from_modes(kind: BlockKind, modes: &HybridModes, omega_photon: f64, delta_k: Complex64) -> Self {
        let omega_magnon = match kind {
            BlockKind::Alpha => modes.omega_alpha,
            BlockKind::Beta => modes.omega_beta,
        };
        Self::new(kind, omega_magnon, omega_photon, delta_k)
    }

    /// Δω = (ω_magnon − ω)/2.
    pub fn detuning(&self) -> f64 {
        (self.omega_magnon - self.omega_photon) / 2.0
    }

    /// πf = √(Δω² + |Δ|²).
    pub fn angular_rabi(&self) -> f64 {
        self.detuning().hypot(self.delta_k.norm())
    }

    fn coupling(&self) -> Complex64 {
        match self.kind {
            BlockKind::Alpha => -self.delta_k,
            BlockKind::Beta => self.delta_k,
        }
    }

    /// Block matrix in the ordered basis (magnon, photon).
    pub fn matrix(&self) -> Matrix2<Complex64> {
        let c = self.coupling();
        Matrix2::new(
            Complex64::new(self.omega_magnon, 0.0),
            c.conj(),
            c,
            Complex64::new(self.omega_photon, 0.0),
        )
    }
}

/// Four-dimensional Hamiltonian on the ordered basis |1⟩, |2⟩, |1′⟩, |2′⟩.
pub fn direct_sum(alpha: &CavityBlock, beta: &CavityBlock) -> Matrix4<Complex64> {
    let mut h = Matrix4::zeros();
    h.fixed_view_mut::<2, 2>(0, 0).copy_from(&alpha.matrix());
    h.fixed_view_mut::<2, 2>(2, 2).copy_from(&beta.matrix());
    h
}

/// Δ_k = λ(u + v*).
pub fn coupling_strength(lambda: f64, bog: &BogoliubovFactors) -> Complex64 {
    lambda * (Complex64::new(bog.u, 0.0) + bog.v.conj())
}

/// λ_k = A₀ k √S.
pub fn lambda_from_cavity(a0: f64, k_scalar: f64, spin: f64) -> f64 {
    a0 * k_scalar * spin.sqrt()
}

/// U(t) = exp(−itH) in closed form.
///
/// Writing H = μ𝟙 + K with μ = (ω_magnon + ω)/2 and K traceless,
/// K² = Ω²𝟙 with Ω = πf, so U = e^{−iμt}[cos Ωt 𝟙 − i (sin Ωt / Ω) K].
pub fn evolve_block(block: &CavityBlock, t: f64) -> Matrix2<Complex64> {
    let mu = (block.omega_magnon + block.omega_photon) / 2.0;
    let omega = block.angular_rabi();
    let k = block.matrix() - Matrix2::identity() * Complex64::new(mu, 0.0);
    let sinc_t = if omega == 0.0 { t } else { (omega * t).sin() / omega };
    let rotation = Matrix2::identity() * Complex64::new((omega * t).cos(), 0.0)
        - k * Complex64::new(0.0, sinc_t);
    rotation * Complex64::from_polar(1.0, -mu * t)
}

/// (stay, transfer) populations starting from either basis state.
pub fn transition_probabilities(block: &CavityBlock, t: f64) -> (f64, f64) {
    let omega = block.angular_rabi();
    if omega == 0.0 {
        return (1.0, 0.0);
    }
    let s2 = (omega * t).sin().powi(2);
    let c2 = (omega * t).cos().powi(2);
    let dw2 = block.detuning().powi(2);
    let d2 = block.delta_k.norm_sqr();
    let total = dw2 + d2;
    (c2 + dw2 / total * s2, d2 / total * s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiParams {
    pub f: f64,
    pub period: f64,
    pub visibility: f64,
}

pub fn rabi(block: &CavityBlock) -> Result<RabiParams> {
    let omega = block.angular_rabi();
    if omega == 0.0 {
        return Err(Error::NoOscillation);
    }
    let f = omega / PI;
    Ok(RabiParams { f, period: 1.0 / f, visibility: block.delta_k.norm_sqr() / (omega * omega) })
}

/// Δ₀ = ((πf)² − Δω²)/λ².
pub fn epr_from_frequency(f: f64, detuning: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::UnknownCouplingScale);
    }
    let pi_f_sq = (PI * f).powi(2);
    let detuning_sq = detuning * detuning;
    // a few ulps of slack for exactly-uncoupled blocks
    if pi_f_sq < detuning_sq * (1.0 - 1e-12) {
        return Err(Error::InconsistentFrequency { pi_f_sq, detuning_sq });
    }
    Ok(((pi_f_sq - detuning_sq) / (lambda * lambda)).max(0.0))
}
