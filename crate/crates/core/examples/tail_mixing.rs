//! How the waiting-time tail enters the rate functions.
//!
//! For a waiting time whose hazard oscillates between `ℓ_s = 1` and
//! `ℓ_i = 2`, the tail-mixed rates `I_s ≤ I_i ≤ Υ(1,·)` separate: with
//! `X = S`, `I_ℓ(w) = (1 − w)ℓ` on `[0, 1]` while `Υ(1, w) = +∞` off `w = 1`.
//! The gap check reports the largest difference between the dual and primal
//! routes for the lower-bound rate.
//!
//! ```bash
//! cargo run --release --example tail_mixing
//! ```

use ldp_renewal::model::{OscReward, PairLaw};
use ldp_renewal::rate::{rate_profile, RateOptions};
use ldp_renewal::verify::check_prop2;

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait)?;
    let opts = RateOptions::default();
    println!("tail exponents: {:?}", law.tail());
    println!("{:>5} {:>10} {:>10} {:>10}", "w", "I_upper", "I_lower", "Υ(1,w)");
    for k in 0..=6 {
        let w = k as f64 / 5.0;
        let p = rate_profile(&law, &[w], &opts)?;
        println!("{w:>5.2} {:>10} {:>10} {:>10}", p.i_upper.to_string(), p.i_lower.to_string(), p.upsilon1.to_string());
    }

    let grid: Vec<Vec<f64>> = (1..10).map(|k| vec![k as f64 / 10.0]).collect();
    let report = check_prop2(&PairLaw::exp_gauss(1.0, vec![0.5], vec![vec![1.0]])?, &grid, 1e-3, &opts)?;
    println!("route agreement on exp_gauss: {:?} {:?}", report.verdict, report.diagnostics);
    Ok(())
}
