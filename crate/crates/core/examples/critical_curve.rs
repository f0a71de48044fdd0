//! The one-step expectation h(p, q) and the curve h(p, q) = 1.
//!
//! ```bash
//! cargo run --example critical_curve
//! ```

use branchsurv::coop::{critical_q, h_exact, h_polynomial, DEFAULT_BISECTION_TOL};
use branchsurv::{CoopParams, Error};

fn main() -> branchsurv::Result<()> {
    let params = CoopParams::new(0.9, 0.9)?;
    println!(
        "h(0.9, 0.9): enumeration {}, polynomial {}",
        h_exact(&params),
        h_polynomial(&params)
    );

    println!("p      q*                 residual");
    for i in 0..=10 {
        let p = 0.5 + 0.05 * f64::from(i);
        match critical_q(p, DEFAULT_BISECTION_TOL) {
            Ok(c) => println!("{p:<6.3} {:<18} {:.1e}", c.q, c.residual),
            Err(Error::NoCrossing { h_at_one, .. }) => {
                println!("{p:<6.3} none (h(p, 1) = {h_at_one})")
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
