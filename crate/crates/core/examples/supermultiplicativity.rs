//! Super-multiplicativity of `μ_n(A) = P[T_n/n ∈ [α, β], (Σ X_i)/n ∈ B]`.
//!
//! For unit rewards, `μ_n` is a Gamma probability, so the Monte Carlo
//! estimates can be checked against the exact value as well as against
//! `μ_{m+n} ≥ μ_m μ_n`.
//!
//! ```bash
//! cargo run --release --example supermultiplicativity
//! ```

use ldp_renewal::mc::McConfig;
use ldp_renewal::model::PairLaw;
use ldp_renewal::rate::{cramer_inf_over_product, RateOptions};
use ldp_renewal::sets::SetDescriptor;
use ldp_renewal::verify::{check_supermultiplicativity, exact_unit_mu};

fn main() -> ldp_renewal::Result<()> {
    let law = PairLaw::exp_unit(1.0)?;
    let set = SetDescriptor::BoxProduct { lo: 0.8, hi: 1.2, inner: Box::new(SetDescriptor::closed_ball(vec![1.0], 0.01)) };
    let opts = RateOptions::default();
    let report = check_supermultiplicativity(&law, &set, &[(1, 1), (2, 3), (4, 4)], 50_000, &McConfig::new(3, 2), &opts)?;
    println!("verdict {:?}", report.verdict);
    for (k, v) in &report.diagnostics {
        println!("  {k} = {v:.6}");
    }
    for n in [1, 5, 25] {
        println!("exact μ_{n} = {:.6e}", exact_unit_mu(1.0, n, 0.8, 1.2));
    }
    println!("inf J over the box: {}", cramer_inf_over_product(&law, &set, &opts)?.value);
    Ok(())
}
