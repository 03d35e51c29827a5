//! The convex upper bound fails without tail hypotheses.
//!
//! Waiting times with `P[S > s] = e^{−s²}` and rewards `(S, Cauchy)`:
//!
//! * on the open convex set `{w₁ < 1}`, `W_t/t` lies in the set for every
//!   trajectory while `inf I_s = +∞`;
//! * on the closed convex set `{w₁ < 1, (1 − w₁)w₂ ≥ 1}` the probability
//!   decays subexponentially along `t = μN`.
//!
//! ```bash
//! cargo run --release --example counterexamples
//! ```

use ldp_renewal::mc::McConfig;
use ldp_renewal::model::PairLaw;
use ldp_renewal::rate::RateOptions;
use ldp_renewal::verify::{counterexample_closed, counterexample_open};

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::gauss_tail_cauchy();
    let opts = RateOptions::default();
    let cfg = McConfig::new(7, 2);

    let open = counterexample_open(&law, &[10.0, 50.0], 20_000, &cfg, &opts)?;
    println!("open set: verdict {:?}, inf I_s = {}", open.verdict, open.theoretical_inf);
    for e in &open.empirical_curve {
        println!("  t = {}: {} of {} trajectories inside", e.t, e.estimate.hits, e.estimate.n_runs);
    }

    let closed = counterexample_closed(&law, 0.1, &[50, 100, 200], 20_000, &cfg.derive(1), &opts)?;
    println!("closed set: verdict {:?}, inf I_s = {}", closed.verdict, closed.theoretical_inf);
    for (k, v) in &closed.diagnostics {
        println!("  {k} = {v:.6}");
    }
    Ok(())
}
