//! Estimating the waiting-time tail exponents `ℓ_i = liminf −(1/s) ln P[S > s]`
//! and `ℓ_s = limsup …` from a law or from observed waiting times.
//!
//! The estimates are the extremes of `−(1/s) ln P[S > s]` over the upper half
//! of the grid. For a Gaussian tail that ratio grows like `s`, so the minimum
//! is finite on any finite grid and only the maximum is flagged as diverging.
//!
//! ```bash
//! cargo run --release --example tail_exponents
//! ```

use ldp_renewal::model::{OscReward, PairLaw};
use ldp_renewal::verify::{estimate_tail_exponents, TailSource};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ldp_renewal::Result<()> {
    let grid: Vec<f64> = (0..=10).map(|k| 2f64.powi(k)).collect();
    for law in [PairLaw::exp_unit(1.5)?, PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait)?, PairLaw::gauss_tail_cauchy()] {
        let est = estimate_tail_exponents(TailSource::Law(&law), &grid)?;
        println!("{}: ℓ_i ≈ {}, ℓ_s ≈ {} (declared {:?})", law.label(), est.ell_i_hat, est.ell_s_hat, law.tail());
    }

    let law = PairLaw::exp_unit(1.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let waits: Vec<f64> = (0..100_000).map(|_| law.sample_pair(&mut rng).s).collect();
    let fine: Vec<f64> = (1..=16).map(|k| k as f64 * 0.5).collect();
    let est = estimate_tail_exponents(TailSource::Samples(&waits), &fine)?;
    println!("from 10^5 samples: ℓ_i ≈ {}, ℓ_s ≈ {}, truncated: {}", est.ell_i_hat, est.ell_s_hat, est.truncated);
    Ok(())
}
