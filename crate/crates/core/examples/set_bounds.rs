//! Infima of the rate over sets, and the large-deviation bounds they give.
//!
//! The lower bound uses an open set and `I_i`; the upper bound a closed set
//! and `I_s`. Each check compares the theoretical exponent with a Monte Carlo
//! rate curve and reports a verdict.
//!
//! ```bash
//! cargo run --release --example set_bounds
//! ```

use ldp_renewal::mc::McConfig;
use ldp_renewal::model::PairLaw;
use ldp_renewal::rate::{rate_inf_over_set, Bound, RateOptions};
use ldp_renewal::sets::SetDescriptor;
use ldp_renewal::verify::{check_lower_bound, check_upper_bound};

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::exp_unit(1.0)?;
    let opts = RateOptions::default();
    let sets = [
        SetDescriptor::open_ball(vec![1.4], 0.2),
        SetDescriptor::closed_ball(vec![0.5], 0.1),
        SetDescriptor::half_space(vec![-1.0], -1.5, false),
    ];
    for set in &sets {
        let inf = rate_inf_over_set(&law, set, Bound::Upper, &opts)?;
        println!("{}: inf I = {} at {:?} (certified {})", set.describe(), inf.value, inf.argmin, inf.certified);
    }

    let cfg = McConfig::new(1, 2);
    let lower = check_lower_bound(&law, &sets[0], &[20.0, 50.0, 100.0], 100_000, &cfg, &opts)?;
    println!("lower bound: {:?} (θ = {}, slack {:.3})", lower.verdict, lower.theoretical_inf, lower.slack);
    let upper = check_upper_bound(&law, &sets[1], &[10.0, 20.0, 40.0], 100_000, &cfg.derive(1), &opts)?;
    println!("upper bound: {:?} (θ = {}, slack {:.3})", upper.verdict, upper.theoretical_inf, upper.slack);
    Ok(())
}
