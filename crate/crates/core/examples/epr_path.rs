//! EPR function of the hybrid ground state along (0,0,1) for both signs of
//! the exchange coupling ratio.
//!
//! With Γ > 0 the ground state squeezes X_A + X_B and P_A − P_B below the
//! vacuum level (Δ₀ = e^{−2r} < 1); flipping the sign of J1 sends φ to 0
//! and the same r gives Δ₀ = e^{2r}.

use std::f64::consts::PI;

use magnon_epr::epr::{epr_ground, heisenberg_case, GammaSign};
use magnon_epr::lattice::{build_preset, kpath, G_TYPE_SIMPLE_CUBIC};
use magnon_epr::spinwave::{bogoliubov, BareModes, ModelParams};

fn main() -> magnon_epr::Result<()> {
    let lattice = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0)?;
    let params = ModelParams { J1: 1.0, J2: 0.01, D1: 0.0, D2: 0.0, K_aniso: 0.5, B_field: 0.0, S: 1.0 };

    println!("{:>8} {:>10} {:>20} {:>12}", "kz", "Delta0", "regime", "mirror");
    for k in kpath([0.0, 0.0, 1.0], PI, 13)? {
        let bare = BareModes::compute(&params, &lattice, &k);
        let bog = bogoliubov(bare.g / bare.epsilon)?;
        let res = epr_ground(bog.r, bog.phi);
        let sign = if bare.g.re >= 0.0 { GammaSign::Negative } else { GammaSign::Positive };
        println!(
            "{:8.4} {:10.6} {:>20} {:12.6}",
            k.0[2],
            res.delta0,
            res.regime.as_str(),
            heisenberg_case(bog.r, sign)
        );
    }
    Ok(())
}
