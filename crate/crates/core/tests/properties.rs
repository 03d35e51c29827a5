//! Property tests: convexity, homogeneity, ordering, CGF identities, Monte
//! Carlo reproducibility and trajectory identities.

use std::fs;

use ldp_renewal::cgf::{cgf_eval, DualPoint};
use ldp_renewal::cli::main_with_args;
use ldp_renewal::ext::ExtReal;
use ldp_renewal::mc::{check_cell_partition, check_decomposition, estimate_mu_n, estimate_prob, simulate_trajectory, McConfig};
use ldp_renewal::model::{OscReward, PairLaw, RewardMap, WaitBase};
use ldp_renewal::optim::golden_min;
use ldp_renewal::rate::{rate_i, rate_profile, upsilon, Bound, RateOptions};
use ldp_renewal::sets::SetDescriptor;
use ldp_renewal::stats::clopper_pearson;
use ldp_renewal::verify::exact_unit_mu;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{DiscreteCDF, Poisson};

fn opts() -> RateOptions {
    RateOptions::default()
}

fn gauss() -> PairLaw {
    PairLaw::exp_gauss(1.0, vec![0.5], vec![vec![1.0]]).unwrap()
}

fn unit() -> PairLaw {
    PairLaw::exp_unit(1.0).unwrap()
}

fn value(v: ExtReal) -> f64 {
    v.to_f64()
}

/// Convex-midpoint defect `f(m) − (f(a) + f(b))/2`, zero when either end is `+∞`.
fn midpoint_defect(fa: ExtReal, fm: ExtReal, fb: ExtReal) -> f64 {
    match (fa, fm, fb) {
        (ExtReal::Finite(a), ExtReal::Finite(m), ExtReal::Finite(b)) => m - 0.5 * (a + b),
        (ExtReal::Finite(_), ExtReal::PosInf, ExtReal::Finite(_)) => f64::INFINITY,
        _ => 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn upsilon_is_positively_homogeneous(a in 0.1f64..8.0, beta in 0.05f64..2.0, w in -2.0f64..3.0) {
        let law = gauss();
        let lhs = value(upsilon(&law, a * beta, &[a * w], &opts()).unwrap().value);
        let rhs = a * value(upsilon(&law, beta, &[w], &opts()).unwrap().value);
        prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn upsilon_is_jointly_convex(b1 in 0.05f64..2.0, b2 in 0.05f64..2.0, w1 in -2.0f64..3.0, w2 in -2.0f64..3.0) {
        let law = gauss();
        let u = |b: f64, w: f64| upsilon(&law, b, &[w], &opts()).unwrap().value;
        let d = midpoint_defect(u(b1, w1), u(0.5 * (b1 + b2), 0.5 * (w1 + w2)), u(b2, w2));
        prop_assert!(d <= 1e-7, "midpoint defect {d}");
    }

    #[test]
    fn rate_i_is_convex_and_nonnegative(w1 in -0.5f64..4.0, w2 in -0.5f64..4.0, lower in any::<bool>()) {
        let law = unit();
        let which = if lower { Bound::Lower } else { Bound::Upper };
        let r = |w: f64| rate_i(&law, &[w], which, &opts()).unwrap().value;
        let (a, m, b) = (r(w1), r(0.5 * (w1 + w2)), r(w2));
        prop_assert!(midpoint_defect(a, m, b) <= 1e-7);
        for v in [a, m, b] {
            prop_assert!(v >= ExtReal::Finite(0.0));
        }
    }

    #[test]
    fn profile_chain_is_ordered(w in -0.5f64..1.5) {
        let law = PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait).unwrap();
        let p = rate_profile(&law, &[w], &opts()).unwrap();
        prop_assert!(p.i_upper <= p.i_lower && p.i_lower <= p.upsilon1);
        prop_assert!(p.converged);
    }

    #[test]
    fn upsilon_is_lower_semicontinuous(w in -2.0f64..3.0, h in 1e-7f64..1e-3) {
        let law = gauss();
        let at = value(upsilon(&law, 1.0, &[w], &opts()).unwrap().value);
        for x in [w - h, w + h] {
            let near = value(upsilon(&law, 1.0, &[x], &opts()).unwrap().value);
            prop_assert!(near >= at - 10.0 * h - 1e-9, "Υ({x}) = {near} vs Υ({w}) = {at}");
        }
    }

    #[test]
    fn cgf_gradient_matches_finite_differences(zeta in -3.0f64..0.8, phi in -2.0f64..1.5, sqrt in any::<bool>()) {
        let law = if sqrt {
            PairLaw::reward_of_wait(WaitBase::Exponential { rate: 1.0 }, RewardMap::Sqrt).unwrap()
        } else {
            gauss()
        };
        let f = |z: f64, p: f64| value(cgf_eval(&law, &DualPoint::new(z, vec![p])).value);
        let g = cgf_eval(&law, &DualPoint::new(zeta, vec![phi]));
        prop_assume!(g.finite);
        let (dz, dp) = g.grad.unwrap();
        let h = 1e-5;
        let fd_z = (f(zeta + h, phi) - f(zeta - h, phi)) / (2.0 * h);
        let fd_p = (f(zeta, phi + h) - f(zeta, phi - h)) / (2.0 * h);
        prop_assert!((dz - fd_z).abs() <= 1e-5 * (1.0 + dz.abs()), "∂ζ {dz} vs {fd_z}");
        prop_assert!((dp[0] - fd_p).abs() <= 1e-5 * (1.0 + dp[0].abs()), "∂φ {} vs {fd_p}", dp[0]);
    }

    #[test]
    fn cgf_increases_in_zeta(z1 in -5.0f64..0.95, z2 in -5.0f64..0.95, phi in -2.0f64..2.0) {
        let law = unit();
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let a = cgf_eval(&law, &DualPoint::new(lo, vec![phi])).value;
        let b = cgf_eval(&law, &DualPoint::new(hi, vec![phi])).value;
        prop_assert!(a <= b);
    }

    #[test]
    fn golden_section_never_leaves_a_unimodal_bracket(c in -5.0f64..5.0, k in 0.1f64..10.0) {
        let r = golden_min(|x| k * (x - c) * (x - c), -10.0, 10.0, 1e-10, 1e-12);
        prop_assert_eq!(r.bracket_violations, 0);
        prop_assert!((r.x - c).abs() <= 1e-5);
    }

    #[test]
    fn clopper_pearson_brackets_the_frequency(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let hits = ((n as f64) * frac).round() as u64;
        let (lo, hi) = clopper_pearson(hits, n, 0.99);
        let p = hits as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

#[test]
fn cgf_vanishes_at_origin() {
    let laws = [
        unit(),
        gauss(),
        PairLaw::gauss_tail_cauchy(),
        PairLaw::reward_of_wait(WaitBase::GaussTail, RewardMap::Log1p).unwrap(),
        PairLaw::oscillating_tail(1.0, 2.0, OscReward::Unit).unwrap(),
    ];
    for law in &laws {
        let v = value(cgf_eval(law, &DualPoint::origin(law.dim())).value);
        assert!(v.abs() <= 1e-12, "{}: Λ(0,0) = {v}", law.label());
    }
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let law = gauss();
    let set = SetDescriptor::closed_ball(vec![0.6], 0.2);
    let one = estimate_prob(&law, 20.0, &set, 20_000, &McConfig::new(9, 1)).unwrap();
    let three = estimate_prob(&law, 20.0, &set, 20_000, &McConfig::new(9, 3)).unwrap();
    assert_eq!(one, three);
    let other = estimate_prob(&law, 20.0, &set, 20_000, &McConfig::new(10, 1)).unwrap();
    assert_ne!(one.hits, other.hits);
}

#[test]
fn confidence_intervals_cover_the_poisson_truth() {
    // N_5 ∈ {4, 5, 6} exactly when N_5/5 ∈ [0.75, 1.25].
    let law = unit();
    let set = SetDescriptor::closed_ball(vec![1.0], 0.25);
    let pois = Poisson::new(5.0).unwrap();
    let exact = pois.cdf(6) - pois.cdf(3);
    let covered = (0..100)
        .filter(|&k| {
            let e = estimate_prob(&law, 5.0, &set, 2_000, &McConfig::new(1000 + k, 1)).unwrap();
            e.ci_lo <= exact && exact <= e.ci_hi
        })
        .count();
    assert!(covered >= 95, "99% intervals covered {covered}/100");
}

#[test]
fn replayed_trajectories_respect_decomposition_and_partition() {
    let cfg = McConfig::new(4, 2);
    for law in [unit(), gauss()] {
        let set = SetDescriptor::closed_ball(vec![0.5], 0.3);
        let d = check_decomposition(&law, 15.0, &set, 5, 25, 5_000, &cfg).unwrap();
        assert_eq!(d.mismatches, 0, "{}", law.label());
        let c = check_cell_partition(&law, 15.0, 5_000, &cfg).unwrap();
        assert_eq!(c.mismatches, 0, "{}", law.label());
    }
}

#[test]
fn mu_n_matches_gamma_cdf() {
    let law = unit();
    for k in [1u64, 3, 8] {
        let set = SetDescriptor::BoxProduct { lo: 0.8, hi: 1.2, inner: Box::new(SetDescriptor::closed_ball(vec![1.0], 0.01)) };
        let e = estimate_mu_n(&law, k, &set, 100_000, &McConfig::new(17 + k, 2)).unwrap();
        let exact = exact_unit_mu(1.0, k, 0.8, 1.2);
        assert!(e.ci_lo <= exact && exact <= e.ci_hi, "k = {k}: {exact} ∉ [{}, {}]", e.ci_lo, e.ci_hi);
    }
}

#[test]
fn renewal_counts_obey_the_law_of_large_numbers() {
    let law = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let t = 1000.0;
    let runs = 10_000;
    let counts: Vec<f64> = (0..runs).map(|_| simulate_trajectory(&law, t, &mut rng).unwrap().n_t as f64 / t).collect();
    let mean = counts.iter().sum::<f64>() / runs as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let stderr = (var / runs as f64).sqrt();
    assert!((mean - 1.0).abs() <= 3.0 * stderr, "mean N_t/t = {mean} ± {stderr}");
}

#[test]
fn rate_command_writes_grid_and_upsilon_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rate.toml");
    fs::write(
        &cfg,
        r#"
seed = 1
[law]
family = "exp_unit"
rate = 1.0
[rate]
grid = { lo = 0.2, hi = 3.0, step = 0.1 }
upsilon_points = [[0.0, 0.0], [-1.0, 1.0], [1.0, 2.0]]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = main_with_args(["ldp-renewal", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "rate"]);
    assert_eq!(code, 0);
    let grid = fs::read_to_string(out.join("rate_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 30);
    assert!(grid.lines().next().unwrap().starts_with("w1,beta_star,gamma_star,J,Upsilon1,I_lower,I_upper"));
    let ups = fs::read_to_string(out.join("upsilon_points.csv")).unwrap();
    let rows: Vec<Vec<&str>> = ups.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][2], "+inf");
    assert!(out.join("rate_summary.json").exists());
}
