//! Rates from observed `(S, X)` pairs.
//!
//! Samples are written to CSV, read back as an empirical law, and the
//! plug-in rate is compared with the rate of the generating law.
//!
//! ```bash
//! cargo run --release --example empirical_law
//! ```

use ldp_renewal::cgf::{cgf_empirical, DualPoint};
use ldp_renewal::model::{write_samples_csv, PairLaw, Sample};
use ldp_renewal::rate::{rate_i, Bound, RateOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ldp_renewal::Result<()> {
    let truth = PairLaw::exp_gauss(1.0, vec![0.5], vec![vec![1.0]])?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<Sample> = (0..5000).map(|_| truth.sample_pair(&mut rng)).collect();

    let dir = std::env::temp_dir().join("ldp-renewal-empirical");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("samples.csv");
    write_samples_csv(&path, &samples)?;
    let law = PairLaw::from_csv(&path)?;
    println!("{} read from {}", law.label(), path.display());

    let tilt = cgf_empirical(&samples, &DualPoint::new(0.3, vec![0.5]))?;
    println!("Λ̂(0.3, 0.5) = {} ± {:?} (unreliable: {})", tilt.value, tilt.stderr, tilt.unreliable);

    let opts = RateOptions::default();
    for w in [-0.5, 0.0, 0.5, 1.0, 2.0] {
        let plug_in = rate_i(&law, &[w], Bound::Lower, &opts)?.value;
        let exact = rate_i(&truth, &[w], Bound::Lower, &opts)?.value;
        println!("I({w:>4}) plug-in {:>10.6} exact {:>10.6}", plug_in.to_f64(), exact.to_f64());
    }
    Ok(())
}
