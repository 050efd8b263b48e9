//! Entanglement entropy between the two sublattice magnon modes for the
//! hybrid ground state and a few excited eigenstates, as a function of r.
//!
//! The ground column uses the closed form; the excited columns sum the
//! recursively generated Schmidt coefficients. The last column checks the
//! ground entropy against a singular value decomposition of the full
//! two-mode amplitude array.

use std::f64::consts::PI;

use magnon_epr::epr::ground_delta0;
use magnon_epr::squeezed::{
    assemble_state, choose_truncation, entropy_of_state, ground_coefficients, ground_entropy, DEFAULT_TAIL_TOL,
};
use magnon_epr::sweep::state_entropy;

fn main() -> magnon_epr::Result<()> {
    let states = [(1, 0), (1, 1), (2, 1), (3, 3)];
    print!("{:>6} {:>9} {:>9}", "r", "Delta0", "E_00");
    for (x, y) in states {
        print!(" {:>9}", format!("E_{x}{y}"));
    }
    println!(" {:>10}", "svd-E_00");

    for i in 0..=12 {
        let r = 0.125 * i as f64;
        print!("{r:6.3} {:9.5} {:9.5}", ground_delta0(r, PI), ground_entropy(r));
        for (x, y) in states {
            print!(" {:9.5}", state_entropy(r, PI, x, y, DEFAULT_TAIL_TOL)?);
        }
        let n = choose_truncation(r, DEFAULT_TAIL_TOL)?;
        let state = assemble_state(&ground_coefficients(r, PI, n), n);
        println!(" {:10.7}", entropy_of_state(&state, 1e-10)?);
    }
    Ok(())
}
