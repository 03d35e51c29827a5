//! The joint log-moment generating function `Λ(ζ, φ) = ln E[e^{ζS + φ·X}]`.
//!
//! Prints values and gradients (the tilted means) for the built-in laws and
//! probes how far the effective domain extends along a direction.
//!
//! ```bash
//! cargo run --release --example cgf_explorer
//! ```

use ldp_renewal::cgf::{cgf_domain_probe, cgf_eval, DualPoint};
use ldp_renewal::model::{PairLaw, RewardMap, WaitBase};

fn main() -> ldp_renewal::Result<()> {
    let laws = [
        PairLaw::exp_unit(1.0)?,
        PairLaw::exp_gauss(2.0, vec![0.5, -1.0], vec![vec![1.0, 0.3], vec![0.3, 0.5]])?,
        PairLaw::gauss_tail_cauchy(),
        PairLaw::reward_of_wait(WaitBase::Exponential { rate: 1.0 }, RewardMap::Sqrt)?,
    ];
    for law in &laws {
        let mut phi = vec![0.0; law.dim()];
        phi[0] = 0.4;
        let p = DualPoint::new(0.3, phi);
        let v = cgf_eval(law, &p);
        println!("{}: Λ(0.3, 0.4, …) = {}, ∇ = {:?}", law.label(), v.value, v.grad);
        let edge = cgf_domain_probe(law, &DualPoint::new(1.0, vec![0.0; law.dim()]))?;
        println!("  domain extends to ζ = {edge} along (1, 0)");
    }
    Ok(())
}
