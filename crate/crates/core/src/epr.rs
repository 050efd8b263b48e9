//! EPR function Δ = ½[Var(X_A + X_B) + Var(P_A − P_B)] for the (a_k, b_{−k})
//! mode pair. Separable states satisfy Δ ≥ 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock;
use crate::squeezed::TwoModeState;

/// Absolute tolerance around Δ = 1 for the threshold regime.
pub const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonlocalEntangled,
    Threshold,
    Local,
}

impl Regime {
    pub fn classify(delta0: f64) -> Self {
        if (delta0 - 1.0).abs() <= THRESHOLD_TOL {
            Regime::Threshold
        } else if delta0 < 1.0 {
            Regime::NonlocalEntangled
        } else {
            Regime::Local
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NonlocalEntangled => "nonlocal_entangled",
            Regime::Threshold => "threshold",
            Regime::Local => "local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprResult {
    pub delta0: f64,
    pub regime: Regime,
    pub r: f64,
    pub phi: f64,
}

/// Ground-state value cosh 2r + sinh 2r cos φ.
///
/// Evaluated as e^{2r}(1 + cos φ)/2 + e^{−2r}(1 − cos φ)/2, the same
/// quantity without the cancellation near φ = π; it returns e^{∓2r} exactly
/// at cos φ = ∓1.
pub fn ground_delta0(r: f64, phi: f64) -> f64 {
    let c = phi.cos();
    (2.0 * r).exp() * (1.0 + c) * 0.5 + (-2.0 * r).exp() * (1.0 - c) * 0.5
}

pub fn epr_ground(r: f64, phi: f64) -> EprResult {
    let delta0 = ground_delta0(r, phi);
    EprResult { delta0, regime: Regime::classify(delta0), r, phi }
}

/// Sign of the real coupling ratio in the pure-Heisenberg model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSign {
    /// Γ > 0, φ = π.
    Positive,
    /// Γ < 0, φ = 0.
    Negative,
}

pub fn heisenberg_case(r: f64, sign: GammaSign) -> f64 {
    match sign {
        GammaSign::Positive => (-2.0 * r).exp(),
        GammaSign::Negative => (2.0 * r).exp(),
    }
}

/// Δ(ψ) from explicit quadrature operators on the truncated Fock space.
///
/// Uses Y = a + a† + b + b† = √2(X_A + X_B) and
/// Z = −i(a − a† − b + b†) = √2(P_A − P_B), so Δ = [Var Y + Var Z]/4. The
/// state is padded by one level so the raising parts are exact.
pub fn epr_variance_oracle(state: &TwoModeState, tail_tol: f64) -> Result<f64> {
    if state.norm_deficit() > tail_tol {
        return Err(Error::IncreaseTruncation { leakage: state.norm_deficit(), tolerance: tail_tol });
    }
    let norm = state.norm();
    let dim = state.n_trunc() + 2;
    let psi = fock::pad(state.coeffs(), dim).map(|c| c / norm);
    let a = fock::annihilation(dim);
    let ad = fock::creation(dim);
    let x_like = &a + &ad;
    let p_like = &a - &ad;
    let minus_i = num_complex::Complex64::new(0.0, -1.0);

    let y_psi = fock::apply_on_a(&x_like, &psi) + fock::apply_on_b(&x_like, &psi);
    let z_psi = (fock::apply_on_a(&p_like, &psi) - fock::apply_on_b(&p_like, &psi)) * minus_i;

    let variance = |op_psi: &nalgebra::DMatrix<num_complex::Complex64>| {
        let mean = fock::inner(&psi, op_psi).re;
        let second: f64 = op_psi.iter().map(|c| c.norm_sqr()).sum();
        second - mean * mean
    };
    Ok((variance(&y_psi) + variance(&z_psi)) / 4.0)
}
