//! Monte Carlo survival of a supercritical Galton-Watson chain checked
//! against the generating-function fixed point.
//!
//! ```bash
//! cargo run --release --example gw_extinction
//! ```

use branchsurv::galton_watson::{extinction_probability, simulate_batch, SimulationConfig};
use branchsurv::OffspringLaw;

fn main() -> branchsurv::Result<()> {
    let trials = 20_000;
    let config = SimulationConfig::default();
    println!("q      oracle    mc        se");
    for q in [0.55, 0.6, 0.75, 0.9] {
        let law = OffspringLaw::binomial(2, q)?;
        let oracle = 1.0 - extinction_probability(&law, 1e-13)?;
        let batch = simulate_batch(1, &law, &config, trials, 42);
        println!(
            "{q:<6} {oracle:.5}   {:.5}   {:.5}",
            batch.survival_frequency(),
            batch.standard_error()
        );
    }
    Ok(())
}
