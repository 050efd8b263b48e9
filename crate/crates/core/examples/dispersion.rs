//! Bare and hybridized magnon dispersions of the cubic G-type antiferromagnet
//! along (0,0,1), with the squeezing parameter r at each k.
//!
//! Run with `cargo run --example dispersion`.

use std::f64::consts::PI;

use magnon_epr::lattice::{build_preset, kpath, G_TYPE_SIMPLE_CUBIC};
use magnon_epr::spinwave::{solve_modes, ModelParams};

fn main() -> magnon_epr::Result<()> {
    let params = ModelParams { J1: 1.0, J2: 0.0, D1: 0.2, D2: 0.0, K_aniso: 0.5, B_field: 0.3, S: 1.0 };
    params.validate()?;
    let lattice = build_preset(G_TYPE_SIMPLE_CUBIC, 1.0)?;

    println!("{:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8}", "kz", "omega_a", "omega_b", "omega_al", "omega_be", "|Gamma|", "r", "phi");
    for k in kpath([0.0, 0.0, 1.0], PI, 17)? {
        match solve_modes(&params, &lattice, &k) {
            Ok(m) => println!(
                "{:8.4} {:9.5} {:9.5} {:9.5} {:9.5} {:9.6} {:8.5} {:8.5}",
                k.0[2],
                m.bare.omega_a,
                m.bare.omega_b,
                m.hybrid.omega_alpha,
                m.hybrid.omega_beta,
                m.bogoliubov.Gamma.norm(),
                m.bogoliubov.r,
                m.bogoliubov.phi,
            ),
            Err(e) => println!("{:8.4} {e}", k.0[2]),
        }
    }
    Ok(())
}
