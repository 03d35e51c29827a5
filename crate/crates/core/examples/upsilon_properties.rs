//! Structural properties of the perspective minimum `Υ(β, w)`.
//!
//! `Υ` is convex and positively homogeneous; it vanishes at the origin and is
//! `+∞` for `β < 0`. At `β = 0, w ≠ 0` the value is the recession limit,
//! reported as an envelope estimate.
//!
//! ```bash
//! cargo run --release --example upsilon_properties
//! ```

use ldp_renewal::model::PairLaw;
use ldp_renewal::rate::{perspective_min_primal, upsilon, RateOptions};

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::exp_gauss(1.0, vec![0.5], vec![vec![1.0]])?;
    let opts = RateOptions::default();

    let base = upsilon(&law, 0.7, &[1.2], &opts)?.value.to_f64();
    for a in [0.5, 2.0, 10.0] {
        let scaled = upsilon(&law, a * 0.7, &[a * 1.2], &opts)?.value.to_f64();
        println!("Υ({:.2}, {:.2}) = {scaled:.10}   a·Υ(0.7, 1.2) = {:.10}", a * 0.7, a * 1.2, a * base);
    }

    // Dual (support-function) and primal (golden section over γ) routes.
    for (beta, w) in [(1.0, 0.0), (0.5, 2.0), (1.5, -1.0)] {
        let dual = upsilon(&law, beta, &[w], &opts)?;
        let primal = perspective_min_primal(&law, beta, &[w], &opts)?;
        println!(
            "Υ({beta}, {w}): dual {:.10}, primal {:.10} (γ* = {:.4})",
            dual.value.to_f64(),
            primal.rate.value.to_f64(),
            dual.argmin_gamma.unwrap_or(f64::NAN)
        );
    }

    println!("Υ(0, 0)    = {}", upsilon(&law, 0.0, &[0.0], &opts)?.value);
    println!("Υ(-1, 1)   = {}", upsilon(&law, -1.0, &[1.0], &opts)?.value);
    let edge = upsilon(&law, 0.0, &[1.0], &opts)?;
    println!("Υ(0, 1)    = {} (envelope estimate: {}, converged: {})", edge.value, edge.envelope_estimate, edge.converged);
    Ok(())
}
