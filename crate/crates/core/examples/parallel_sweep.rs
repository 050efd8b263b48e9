//! A full k-path sweep built in code rather than from a file, run once on
//! one thread and once on all cores; the emitted CSV is identical.

use magnon_epr::sweep::{dispersion_table, entanglement_table, experiment_points, experiment_table, RunConfig, Threads};

const CONFIG: &str = r#"
[model]
J1 = 1.0
J2 = 0.05
D1 = 0.1
K_aniso = 0.5
B_field = 0.1
S = 1.0

[lattice]
preset = "g_type_simple_cubic"

[kpath]
direction = [1.0, 1.0, 0.0]
k_max = 3.0
n_points = 256

[cavity]
omega = "resonant_alpha"
lambda = 0.05

[acquisition]
shots = 10000
seed = 99
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut plan = RunConfig::from_toml_str(CONFIG)?.resolve()?;
    let mut outputs = Vec::new();
    for threads in [Threads::Count(1), Threads::Auto] {
        plan.threads = threads;
        let start = std::time::Instant::now();
        let text = [
            dispersion_table(&plan)?.to_csv()?,
            entanglement_table(&plan, false)?.to_csv()?,
            experiment_table(&experiment_points(&plan)?).to_csv()?,
        ]
        .concat();
        println!("{threads:?}: {} bytes in {:.2?}", text.len(), start.elapsed());
        outputs.push(text);
    }
    println!("identical: {}", outputs[0] == outputs[1]);
    print!("{}", outputs[0].lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
