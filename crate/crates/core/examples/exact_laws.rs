//! Exact time-T laws of a Galton-Watson chain and the decay of P(τ > n).
//!
//! ```bash
//! cargo run --example exact_laws -- 0.4
//! ```

use branchsurv::galton_watson::{exact_law_at, tau_tail_exact, ExactBudget};
use branchsurv::OffspringLaw;

fn main() -> branchsurv::Result<()> {
    let q: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.4);
    let law = OffspringLaw::binomial(2, q)?;
    let budget = ExactBudget::default();
    println!("offspring Bin(2, {q}), m = {}", law.fertility());

    let y3 = exact_law_at(1, &law, 3, &budget)?;
    println!("law of Y_3 from one individual:");
    for (v, p) in y3.iter().filter(|&(_, p)| p > 1e-6) {
        println!("  {v:>3}  {p:.6}");
    }
    println!("  mean {:.6} (m^3 = {:.6})", y3.mean(), law.fertility().powi(3));

    println!("n   P(tau > n)     m^n");
    for n in [1, 2, 5, 10, 20] {
        let tail = tau_tail_exact(1, &law, n, &budget)?;
        println!("{n:<3} {tail:.6e}  {:.6e}", law.fertility().powi(n as i32));
    }
    Ok(())
}
