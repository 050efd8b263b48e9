//! Magnon-photon Rabi oscillation in one cavity block, and the inverse map
//! from measured frequency to the EPR function.

use std::f64::consts::PI;

use magnon_epr::cavity::{coupling_strength, epr_from_frequency, rabi, transition_probabilities, BlockKind, CavityBlock};
use magnon_epr::spinwave::BogoliubovFactors;

fn main() -> magnon_epr::Result<()> {
    let lambda = 0.05;
    let bog = BogoliubovFactors::from_squeezing(0.6, PI);
    let delta = coupling_strength(lambda, &bog);
    let omega_magnon = 3.6;

    for detune in [0.0, 0.02] {
        let block = CavityBlock::new(BlockKind::Alpha, omega_magnon, omega_magnon - 2.0 * detune, delta);
        let p = rabi(&block)?;
        println!("# detuning {detune}: f = {:.6}, T = {:.3}, visibility = {:.4}", p.f, p.period, p.visibility);
        println!("# t stay transfer");
        for i in 0..=16 {
            let t = i as f64 * p.period / 8.0;
            let (stay, transfer) = transition_probabilities(&block, t);
            println!("{t:9.3} {stay:.6} {transfer:.6}");
        }
        let d0 = epr_from_frequency(p.f, block.detuning(), lambda)?;
        println!("# Delta0 from f: {d0:.12}, analytic e^(-2r) = {:.12}\n", (-1.2f64).exp());
    }

    println!("# f versus Delta0 at resonance, lambda = {lambda}");
    for d0 in [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        println!("{d0:5.2} {:.6}", lambda * f64::sqrt(d0) / PI);
    }
    Ok(())
}
