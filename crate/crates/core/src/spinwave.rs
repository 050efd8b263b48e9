//! Linear spin-wave coefficients and the SU(1,1) Bogoliubov diagonalization.
//!
//! Energies are in user units with ħ = 1. The bosonized Hamiltonian at a
//! given k couples sublattice modes a_k and b_{-k}:
//!
//! ```text
//! H_k = ω_a a†a + ω_b b†b + g ab + g* a†b†
//! ω_a = ε − B,  ω_b = ε + B
//! ε   = S [z₁J₁ + 2K + z₂(J₂ − 2 Re[(J₂ − iD₂) γ₂])]
//! g   = S z₁ γ₁ (J₁ + iD₁)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{structure_factor, KVector, LatticeSpec, Shell};

/// Exchange, Dzyaloshinskii-Moriya, anisotropy, field and spin length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ModelParams {
    pub J1: f64,
    #[serde(default)]
    pub J2: f64,
    #[serde(default)]
    pub D1: f64,
    #[serde(default)]
    pub D2: f64,
    pub K_aniso: f64,
    #[serde(default)]
    pub B_field: f64,
    pub S: f64,
}

impl ModelParams {
    /// Checks the sign constraints. `J1 = 0` is accepted: it is the
    /// decoupled-ferromagnets limit.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, value: f64, ok: bool, what: &str| {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
            }
            if !ok {
                return Err(Error::InvalidParameter { name, reason: format!("{what}, got {value}") });
            }
            Ok(())
        };
        check("J1", self.J1, self.J1 >= 0.0, "must be >= 0")?;
        check("J2", self.J2, self.J2 >= 0.0, "must be >= 0")?;
        check("D1", self.D1, true, "")?;
        check("D2", self.D2, true, "")?;
        check("K_aniso", self.K_aniso, self.K_aniso > 0.0, "must be > 0")?;
        check("B_field", self.B_field, true, "")?;
        check("S", self.S, self.S > 0.0, "must be > 0")?;
        Ok(())
    }
}

/// Coefficients of the bosonized Hamiltonian at one k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BareModes {
    pub epsilon: f64,
    pub g: Complex64,
    pub omega_a: f64,
    pub omega_b: f64,
}

impl BareModes {
    /// Evaluates the coefficients without the positivity check.
    pub fn compute(params: &ModelParams, spec: &LatticeSpec, k: &KVector) -> Self {
        let z1 = spec.z1() as f64;
        let z2 = spec.z2() as f64;
        let gamma1 = structure_factor(spec, Shell::Inter, k);
        let gamma2 = structure_factor(spec, Shell::Intra, k);
        let intra = (Complex64::new(params.J2, -params.D2) * gamma2).re;
        let epsilon =
            params.S * (z1 * params.J1 + 2.0 * params.K_aniso + z2 * (params.J2 - 2.0 * intra));
        let g = params.S * z1 * gamma1 * Complex64::new(params.J1, params.D1);
        Self {
            epsilon,
            g,
            omega_a: epsilon - params.B_field,
            omega_b: epsilon + params.B_field,
        }
    }
}

/// Bare mode data; errors when either sublattice mode has non-positive
/// frequency.
pub fn bare_modes(params: &ModelParams, spec: &LatticeSpec, k: &KVector) -> Result<BareModes> {
    let bare = BareModes::compute(params, spec, k);
    if !(bare.omega_a > 0.0 && bare.omega_b > 0.0) {
        return Err(Error::NegativeBareFrequency { omega_a: bare.omega_a, omega_b: bare.omega_b });
    }
    Ok(bare)
}

/// Γ = g/ε.
pub fn coupling_ratio(bare: &BareModes) -> Result<Complex64> {
    if !(bare.epsilon > 0.0) {
        return Err(Error::NonpositiveEpsilon(bare.epsilon));
    }
    Ok(bare.g / bare.epsilon)
}

/// SU(1,1) factors u = cosh r, v = sinh r·e^{iφ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct BogoliubovFactors {
    pub r: f64,
    pub phi: f64,
    pub u: f64,
    pub v: Complex64,
    pub Gamma: Complex64,
}

impl BogoliubovFactors {
    /// Factors for a given squeezing r and phase φ, without reference to a
    /// Hamiltonian. Γ is reconstructed as tanh(2r)·e^{i(π−φ)}.
    pub fn from_squeezing(r: f64, phi: f64) -> Self {
        Self {
            r,
            phi,
            u: r.cosh(),
            v: Complex64::from_polar(r.sinh(), phi),
            Gamma: Complex64::from_polar((2.0 * r).tanh(), PI - phi),
        }
    }

    pub fn tanh_r(&self) -> f64 {
        self.r.tanh()
    }
}

/// Maps an angle onto [0, 2π).
fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// r = atanh[(1 − √(1−|Γ|²))/|Γ|], φ = π − arg Γ with arg 0 := 0.
pub fn bogoliubov(gamma: Complex64) -> Result<BogoliubovFactors> {
    let abs_gamma = gamma.norm();
    if !abs_gamma.is_finite() || abs_gamma >= 1.0 {
        return Err(Error::MagnonInstability { abs_gamma });
    }
    // (1 − s)/|Γ| rewritten as |Γ|/(1 + s); identical value without the
    // cancellation at small |Γ|
    let s = (1.0 - abs_gamma * abs_gamma).sqrt();
    let tanh_r = abs_gamma / (1.0 + s);
    let r = tanh_r.atanh();
    let arg = if abs_gamma == 0.0 { 0.0 } else { gamma.arg() };
    let phi = wrap_angle(PI - arg);
    Ok(BogoliubovFactors {
        r,
        phi,
        u: r.cosh(),
        v: Complex64::from_polar(r.sinh(), phi),
        Gamma: gamma,
    })
}

/// Dispersions of the hybridized α and β modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridModes {
    pub epsilon_tilde: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
}

impl HybridModes {
    /// ε̃ = cosh(2r)ε + sinh(2r)Re(g e^{iφ}), no softness check.
    pub fn compute(bare: &BareModes, bog: &BogoliubovFactors, b_field: f64) -> Self {
        let two_r = 2.0 * bog.r;
        let eps_tilde = two_r.cosh() * bare.epsilon
            + two_r.sinh() * (bare.g * Complex64::from_polar(1.0, bog.phi)).re;
        Self {
            epsilon_tilde: eps_tilde,
            omega_alpha: eps_tilde - b_field,
            omega_beta: eps_tilde + b_field,
        }
    }

    pub fn is_soft(&self) -> bool {
        !(self.omega_alpha > 0.0)
    }
}

pub fn hybrid_modes(bare: &BareModes, bog: &BogoliubovFactors, b_field: f64) -> Result<HybridModes> {
    let modes = HybridModes::compute(bare, bog, b_field);
    if modes.is_soft() {
        return Err(Error::SoftHybridMode { omega_alpha: modes.omega_alpha });
    }
    Ok(modes)
}

/// Full chain at one k: bare modes, Γ, Bogoliubov factors, hybrid modes
/// (soft modes are returned, not rejected).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSolution {
    pub bare: BareModes,
    pub bogoliubov: BogoliubovFactors,
    pub hybrid: HybridModes,
}

pub fn solve_modes(params: &ModelParams, spec: &LatticeSpec, k: &KVector) -> Result<ModeSolution> {
    let bare = bare_modes(params, spec, k)?;
    let gamma = coupling_ratio(&bare)?;
    let bog = bogoliubov(gamma)?;
    let hybrid = HybridModes::compute(&bare, &bog, params.B_field);
    Ok(ModeSolution { bare, bogoliubov: bog, hybrid })
}
