//! Block events P^N(Y_T >= 2N) and the first certificate above 1/2, plus the
//! truncated-variance product bound on survival.
//!
//! ```bash
//! cargo run --example block_certificates
//! ```

use branchsurv::galton_watson::{
    block_event_table, certificate_search, markov_certificate_bound, survival_lower_bound,
    ExactBudget,
};
use branchsurv::OffspringLaw;

fn main() -> branchsurv::Result<()> {
    let budget = ExactBudget::default();
    for q in [0.5, 0.55, 0.6, 0.9] {
        let law = OffspringLaw::binomial(2, q)?;
        match certificate_search(&law, 16, 16, &budget)? {
            Some(c) => println!(
                "q = {q}: certificate at N = {}, T = {}, P = {:.6}",
                c.block_size(),
                c.block_time(),
                c.value()
            ),
            None => println!(
                "q = {q}: none up to N, T = 16 (Markov bound at T = 16: {})",
                markov_certificate_bound(&law, 16)
            ),
        }
    }

    let law = OffspringLaw::binomial(2, 0.55)?;
    println!("\nq = 0.55, P^N(Y_T >= 2N) for N, T <= 4:");
    for e in block_event_table(&law, 4, 4, &budget)? {
        println!("  N={} T={} {:.6}", e.block_size, e.block_time, e.probability);
    }

    let law = OffspringLaw::binomial(2, 0.9)?;
    let b = survival_lower_bound(&law, 1.4, 2, 10, 10_000)?;
    println!(
        "\nBin(2, 0.9), a = 1.4, M = 2, n = 10: c = {:.4}, P(survive) >= {:.6}",
        b.c, b.bound
    );
    Ok(())
}
