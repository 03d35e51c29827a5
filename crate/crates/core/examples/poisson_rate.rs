//! Rate functions of a Poisson process seen as a renewal-reward process.
//!
//! With unit-mean exponential waiting times and unit rewards, `W_t = N_t` and
//! the rate function is `I(w) = 1 − w + w ln w`. This example evaluates the
//! full profile (`J`, `Υ(1,·)`, both tail-mixed rates) on a grid and prints it
//! next to the closed form.
//!
//! ```bash
//! cargo run --release --example poisson_rate
//! ```

use ldp_renewal::model::PairLaw;
use ldp_renewal::rate::{rate_profile, RateOptions};

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::exp_unit(1.0)?;
    let opts = RateOptions::default();
    println!("{:>5} {:>12} {:>12} {:>12} {:>8} {:>8}", "w", "I_lower", "closed form", "J(1,w)", "beta*", "gamma*");
    for k in 1..=15 {
        let w = 0.2 * k as f64;
        let p = rate_profile(&law, &[w], &opts)?;
        let exact = 1.0 - w + w * w.ln();
        println!(
            "{w:>5.2} {:>12.8} {exact:>12.8} {:>12.6} {:>8.4} {:>8.4}",
            p.i_lower.to_f64(),
            p.j.to_f64(),
            p.beta_star.unwrap_or(f64::NAN),
            p.gamma_star.unwrap_or(f64::NAN),
        );
    }
    // Negative counts are impossible.
    let p = rate_profile(&law, &[-0.1], &opts)?;
    println!("I(-0.1) = {}", p.i_lower);
    Ok(())
}
