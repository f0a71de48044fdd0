//! Survival of the cooperative chain: Monte Carlo with Wilson intervals,
//! the exact renormalized expectation, and the grandparent inequality.
//!
//! ```bash
//! cargo run --release --example coop_survival
//! ```

use branchsurv::coop::{
    coop_certificate_search, coop_survival_mc, grandpas_check, EstimationMethod, JointBudget,
};
use branchsurv::CoopParams;

fn main() -> branchsurv::Result<()> {
    for (p, q) in [(0.4, 0.95), (0.6, 0.6), (0.7, 0.8), (0.9, 0.9)] {
        let params = CoopParams::new(p, q)?;
        let est = coop_survival_mc(&params, 2000, 1_000_000, 7)?;
        let cert = coop_certificate_search(
            &params,
            3,
            3,
            &EstimationMethod::Exact(JointBudget::default()),
        )?;
        let cert = cert.map_or("none".to_string(), |c| {
            format!("N={} T={} E={:.6}", c.block_size(), c.block_time(), c.value())
        });
        println!(
            "(p, q) = ({p}, {q}): survival {:.4} [{:.4}, {:.4}], certificate {cert}",
            est.estimate, est.ci99_low, est.ci99_high
        );
    }

    let params = CoopParams::new(0.7, 0.7)?;
    let ok = grandpas_check(3, 2, 1, 2, 2, &params)?;
    println!("grandparent inequality at (3, 2), k = 1, N = 2, T = 2: {ok}");
    Ok(())
}
