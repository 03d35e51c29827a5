//! Joint cumulant generating function `Λ(ζ, φ) = ln E[exp(ζS + φ·X)]`.
//!
//! Closed forms are used where they exist; the Gaussian-tail and
//! reward-of-wait families go through tilted half-line quadrature, and
//! empirical laws through an overflow-safe log-mean-exp. Points on the
//! boundary of the effective domain are conservatively reported as `+∞`.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::model::{DyadicHazard, EmpiricalSamples, Family, OscReward, PairLaw, Sample, MIN_EMPIRICAL_SAMPLES};
use crate::quad::tilted_half_line;

/// Radius up to which [`cgf_domain_probe`] searches.
pub const PROBE_RADIUS: f64 = 1e6;

/// A point `(ζ, φ)` of the dual space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPoint {
    pub zeta: f64,
    pub phi: Vec<f64>,
}

impl DualPoint {
    pub fn new(zeta: f64, phi: Vec<f64>) -> Self {
        Self { zeta, phi }
    }

    pub fn origin(dim: usize) -> Self {
        Self { zeta: 0.0, phi: vec![0.0; dim] }
    }

    pub fn norm(&self) -> f64 {
        (self.zeta * self.zeta + self.phi.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Value of `Λ` with its gradient `(E_t[S], E_t[X])` under the tilted law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgfValue {
    pub value: ExtReal,
    pub finite: bool,
    /// Present only when `Λ` is finite and differentiable at the point.
    pub grad: Option<(f64, Vec<f64>)>,
    /// Delta-method standard error (empirical evaluations only).
    pub stderr: Option<f64>,
    /// Set when a single sample carries more than half the tilted weight.
    pub unreliable: bool,
}

/// Internal evaluation with per-coordinate partial derivatives; a `None`
/// partial marks a coordinate in which `Λ` is not differentiable.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub value: f64,
    pub d_zeta: Option<f64>,
    pub d_phi: Vec<Option<f64>>,
    pub stderr: Option<f64>,
    pub unreliable: bool,
}

impl Eval {
    fn infinite(dim: usize) -> Self {
        Self { value: f64::INFINITY, d_zeta: None, d_phi: vec![None; dim], stderr: None, unreliable: false }
    }

    fn smooth(value: f64, d_zeta: f64, d_phi: Vec<f64>) -> Self {
        Self { value, d_zeta: Some(d_zeta), d_phi: d_phi.into_iter().map(Some).collect(), stderr: None, unreliable: false }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    fn into_public(self) -> CgfValue {
        let finite = self.value.is_finite();
        let grad = if finite {
            match (self.d_zeta, self.d_phi.iter().copied().collect::<Option<Vec<f64>>>()) {
                (Some(z), Some(p)) => Some((z, p)),
                _ => None,
            }
        } else {
            None
        };
        CgfValue { value: ExtReal::from_f64(self.value), finite, grad, stderr: self.stderr, unreliable: self.unreliable }
    }
}

/// `Λ(ζ, φ)` for a law.
///
/// # Panics
/// When `p.phi` does not have the law's dimension.
pub fn cgf_eval(law: &PairLaw, p: &DualPoint) -> CgfValue {
    assert_eq!(p.phi.len(), law.dim(), "dual point dimension");
    evaluate(law, p.zeta, &p.phi).into_public()
}

/// Right end `b` of the ζ-domain when it does not depend on `φ`: `Λ = +∞`
/// for `ζ ≥ b`. `+∞` when unknown or unbounded.
pub(crate) fn zeta_edge(law: &PairLaw) -> f64 {
    match law.family() {
        Family::ExpUnit { rate } | Family::ExpGauss { rate, .. } => *rate,
        Family::RewardOfWait { base, .. } => base.zeta_bound(),
        _ => f64::INFINITY,
    }
}

pub(crate) fn evaluate(law: &PairLaw, zeta: f64, phi: &[f64]) -> Eval {
    let d = law.dim();
    match law.family() {
        Family::ExpUnit { rate } => {
            if zeta >= *rate {
                return Eval::infinite(d);
            }
            Eval::smooth(phi[0] - (-zeta / rate).ln_1p(), 1.0 / (rate - zeta), vec![1.0])
        }
        Family::ExpGauss { rate, mean, cov, .. } => {
            if zeta >= *rate {
                return Eval::infinite(d);
            }
            let sigma_phi: Vec<f64> = (0..d).map(|i| (0..d).map(|j| cov[i][j] * phi[j]).sum()).collect();
            let quad: f64 = (0..d).map(|i| phi[i] * (mean[i] + 0.5 * sigma_phi[i])).sum();
            let grad = (0..d).map(|i| mean[i] + sigma_phi[i]).collect();
            Eval::smooth(quad - (-zeta / rate).ln_1p(), 1.0 / (rate - zeta), grad)
        }
        Family::GaussTailCauchy => {
            if phi[1] != 0.0 {
                return Eval::infinite(d);
            }
            let theta = zeta + phi[0];
            match tilted_half_line(|s| theta * s + (2.0 * s).ln() - s * s, |s| s) {
                Some(m) => Eval {
                    value: m.log_mass,
                    d_zeta: Some(m.mean_s),
                    d_phi: vec![Some(m.mean_s), None],
                    stderr: None,
                    unreliable: false,
                },
                None => Eval::infinite(d),
            }
        }
        Family::RewardOfWait { base, map } => {
            if zeta >= base.zeta_bound() {
                return Eval::infinite(d);
            }
            let f = phi[0];
            match tilted_half_line(|s| zeta * s + f * map.apply(s) + base.log_density(s), |s| map.apply(s)) {
                Some(m) => Eval::smooth(m.log_mass, m.mean_s, vec![m.mean_g]),
                None => Eval::infinite(d),
            }
        }
        Family::OscillatingTail { hazard, reward } => {
            let (theta, shift) = match reward {
                OscReward::Wait => (zeta + phi[0], 0.0),
                OscReward::Unit => (zeta, phi[0]),
            };
            match hazard_log_mgf(hazard, theta) {
                Some((v, dv)) => {
                    let dphi = match reward {
                        OscReward::Wait => dv,
                        OscReward::Unit => 1.0,
                    };
                    Eval::smooth(v + shift, dv, vec![dphi])
                }
                None => Eval::infinite(d),
            }
        }
        Family::Empirical { samples } => empirical_eval(samples, zeta, phi),
    }
}

/// `ln ∫_0^L e^{κu} du` and `d/dκ` of it, stable for all `κ`.
fn log_segment_integral(kappa: f64, len: f64) -> (f64, f64) {
    let x = kappa * len;
    if x.abs() < 1e-2 {
        let x2 = x * x;
        let log_e = len.ln() + x / 2.0 + x2 / 24.0 - x2 * x2 / 2880.0;
        let dlog = len * (0.5 + x / 12.0 - x * x2 / 720.0);
        (log_e, dlog)
    } else {
        let log_ratio = if x > 0.0 { x + (-(-x).exp_m1() / x).ln() } else { (x.exp_m1() / x).ln() };
        let dlog = len / (-(-x).exp_m1()) - 1.0 / kappa;
        (len.ln() + log_ratio, dlog)
    }
}

/// `(ln E[e^{θS}], d/dθ)` for the dyadic-hazard waiting time, by summing the
/// exact contribution of every linear piece of the hazard; `None` for
/// `θ ≥ ℓ_s`, where the sum diverges.
pub(crate) fn hazard_log_mgf(h: &DyadicHazard, theta: f64) -> Option<(f64, f64)> {
    let a_min = h.ell_s();
    if theta >= a_min {
        return None;
    }
    let mut log_max = f64::NEG_INFINITY;
    let (mut sum, mut dsum) = (0.0, 0.0);
    for k in 0..4096u32 {
        let seg = h.segment(k);
        if seg.slope > 0.0 {
            let (log_e, dlog_e) = log_segment_integral(theta - seg.slope, seg.len);
            let lt = seg.slope.ln() + theta * seg.start - seg.h_start + log_e;
            let dt = seg.start + dlog_e;
            if lt > log_max {
                let r = (log_max - lt).exp();
                sum *= r;
                dsum *= r;
                log_max = lt;
            }
            let w = (lt - log_max).exp();
            sum += w;
            dsum += w * dt;
        }
        // Everything beyond the next piece is at most e^{(θ−ℓ_s)a}(1 + θ⁺/(ℓ_s−θ)).
        let next = seg.start + seg.len;
        let tail = (theta - a_min) * next + (theta.max(0.0) / (a_min - theta)).ln_1p();
        if k >= 1 && tail < log_max + sum.ln() - 45.0 {
            break;
        }
    }
    Some((log_max + sum.ln(), dsum / sum))
}

fn empirical_eval(samples: &EmpiricalSamples, zeta: f64, phi: &[f64]) -> Eval {
    let d = samples.dim;
    let y: Vec<f64> = (0..samples.len())
        .map(|i| zeta * samples.s[i] + samples.row(i).iter().zip(phi).map(|(x, p)| x * p).sum::<f64>())
        .collect();
    log_mean_exp(&y, |i| samples.s[i], |i, k| samples.row(i)[k], d)
}

/// Max-shifted log-mean-exp of `y` with tilted means of `s` and `x`.
fn log_mean_exp(y: &[f64], s: impl Fn(usize) -> f64, x: impl Fn(usize, usize) -> f64, d: usize) -> Eval {
    let n = y.len();
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mean_w = total / n as f64;
    let var_w = w.iter().map(|v| (v - mean_w).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let d_zeta = (0..n).map(|i| w[i] * s(i)).sum::<f64>() / total;
    let d_phi = (0..d).map(|k| Some((0..n).map(|i| w[i] * x(i, k)).sum::<f64>() / total)).collect();
    Eval {
        value: m + mean_w.ln(),
        d_zeta: Some(d_zeta),
        d_phi,
        stderr: Some(var_w.sqrt() / (mean_w * (n as f64).sqrt())),
        unreliable: 1.0 / total > 0.5,
    }
}

/// Log-mean-exp estimator of `Λ` from raw samples.
pub fn cgf_empirical(samples: &[Sample], p: &DualPoint) -> Result<CgfValue> {
    if samples.len() < MIN_EMPIRICAL_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_EMPIRICAL_SAMPLES, got: samples.len() });
    }
    for q in samples {
        check_dim(p.phi.len(), q.x.len())?;
    }
    let y: Vec<f64> = samples.iter().map(|q| p.zeta * q.s + q.x.iter().zip(&p.phi).map(|(x, f)| x * f).sum::<f64>()).collect();
    Ok(log_mean_exp(&y, |i| samples[i].s, |i, k| samples[i].x[k], p.phi.len()).into_public())
}

/// `sup{r ≥ 0 : Λ(r·direction) < ∞}` by bisection on finiteness, `+∞` when
/// finite at radius [`PROBE_RADIUS`].
pub fn cgf_domain_probe(law: &PairLaw, direction: &DualPoint) -> Result<ExtReal> {
    check_dim(law.dim(), direction.phi.len())?;
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("direction must have unit norm, got {}", direction.norm())));
    }
    let finite_at = |r: f64| {
        let phi: Vec<f64> = direction.phi.iter().map(|v| r * v).collect();
        evaluate(law, r * direction.zeta, &phi).is_finite()
    };
    if finite_at(PROBE_RADIUS) {
        return Ok(ExtReal::PosInf);
    }
    let (mut lo, mut hi) = (0.0, PROBE_RADIUS);
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if finite_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExtReal::Finite(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RewardMap, WaitBase};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn val(law: &PairLaw, z: f64, phi: &[f64]) -> f64 {
        evaluate(law, z, phi).value
    }

    #[test]
    fn closed_forms() {
        let e = PairLaw::exp_unit(1.0).unwrap();
        assert_eq!(val(&e, 0.0, &[0.0]), 0.0);
        assert_relative_eq!(val(&e, 0.5, &[0.0]), 2f64.ln(), epsilon = 1e-15);
        assert!(val(&e, 1.0, &[0.0]).is_infinite());
        let g = PairLaw::exp_gauss(2.0, vec![1.0, -1.0], vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let expect = -(1.0f64 - 0.5).ln() + (0.3 - 0.2) + 0.5 * (2.0 * 0.09 + 2.0 * 0.5 * 0.3 * 0.2 + 0.04);
        assert_relative_eq!(val(&g, 1.0, &[0.3, 0.2]), expect, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_tail_matches_erfc_closed_form() {
        // M(θ) = 1 + θ(√π/2) e^{θ²/4} erfc(−θ/2), well conditioned for θ ≥ 0.
        let law = PairLaw::gauss_tail_cauchy();
        for theta in [0.0, 0.5, 1.0, 3.0, 8.0] {
            let m = 1.0 + theta * PI.sqrt() / 2.0 * (theta * theta / 4.0).exp() * statrs::function::erf::erfc(-theta / 2.0);
            assert_relative_eq!(val(&law, theta, &[0.0, 0.0]), m.ln(), max_relative = 1e-10, epsilon = 1e-12);
        }
        assert!(val(&law, -1.0, &[1.0, 0.0]).abs() < 1e-13);
        assert!(val(&law, 0.0, &[0.0, 0.1]).is_infinite());
        assert!(cgf_eval(&law, &DualPoint::new(0.3, vec![0.0, 0.0])).grad.is_none());
    }

    #[test]
    fn hazard_mgf_against_quadrature() {
        let law = PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait).unwrap();
        let Family::OscillatingTail { hazard, .. } = law.family() else { unreachable!() };
        for theta in [-3.0, -0.2, 0.0, 0.4, 0.9, 0.999] {
            let (v, dv) = hazard_log_mgf(hazard, theta).unwrap();
            // E[e^{θS}] = 1 + θ ∫ e^{θs − H(s)} ds, integrated piecewise.
            let mut integral = 0.0;
            for k in 0..60 {
                let seg = hazard.segment(k);
                integral += crate::quad::adaptive_gk(
                    |s| [(theta * s - hazard.cumulative(s)).exp()],
                    seg.start,
                    seg.start + seg.len,
                    1e-13,
                    1e-300,
                )[0];
                if seg.start > 1e4 {
                    break;
                }
            }
            assert_relative_eq!(v, (1.0 + theta * integral).ln(), max_relative = 1e-9, epsilon = 1e-12);
            let (vp, _) = hazard_log_mgf(hazard, theta + 1e-6).unwrap();
            let (vm, _) = hazard_log_mgf(hazard, theta - 1e-6).unwrap();
            assert_relative_eq!(dv, (vp - vm) / 2e-6, max_relative = 1e-5);
        }
        assert!(hazard_log_mgf(hazard, 1.0).is_none());
        assert!(hazard_log_mgf(hazard, 0.0).unwrap().0.abs() < 1e-14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let laws = [
            PairLaw::exp_gauss(1.5, vec![0.2, -0.4], vec![vec![1.0, 0.3], vec![0.3, 0.5]]).unwrap(),
            PairLaw::reward_of_wait(WaitBase::Exponential { rate: 1.0 }, RewardMap::Sqrt).unwrap(),
            PairLaw::reward_of_wait(WaitBase::GaussTail, RewardMap::Log1p).unwrap(),
            PairLaw::oscillating_tail(1.0, 3.0, OscReward::Unit).unwrap(),
        ];
        for law in &laws {
            let d = law.dim();
            let z = 0.3;
            let phi: Vec<f64> = (0..d).map(|k| 0.2 - 0.3 * k as f64).collect();
            let e = evaluate(law, z, &phi);
            let h = 1e-5;
            let fd_z = (val(law, z + h, &phi) - val(law, z - h, &phi)) / (2.0 * h);
            assert_relative_eq!(e.d_zeta.unwrap(), fd_z, max_relative = 1e-5);
            for k in 0..d {
                let mut p = phi.clone();
                p[k] += h;
                let up = val(law, z, &p);
                p[k] -= 2.0 * h;
                let dn = val(law, z, &p);
                assert_relative_eq!(e.d_phi[k].unwrap(), (up - dn) / (2.0 * h), max_relative = 1e-5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn empirical_estimator() {
        let law = PairLaw::exp_unit(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<Sample> = (0..1_000_000).map(|_| law.sample_pair(&mut rng)).collect();
        let zero = cgf_empirical(&samples, &DualPoint::origin(1)).unwrap();
        assert_eq!(zero.value, ExtReal::Finite(0.0));
        let v = cgf_empirical(&samples, &DualPoint::new(0.5, vec![0.0])).unwrap();
        let err = (v.value.to_f64() - 2f64.ln()).abs();
        assert!(err < 4.0 * v.stderr.unwrap(), "err {err}, stderr {:?}", v.stderr);
        assert!(!v.unreliable);
        assert!(cgf_empirical(&samples[..10], &DualPoint::origin(1)).is_err());
    }

    #[test]
    fn dominated_sample_is_flagged() {
        let mut samples: Vec<Sample> = (0..200).map(|i| Sample { s: 1.0 + 0.001 * i as f64, x: vec![0.0] }).collect();
        samples.push(Sample { s: 100.0, x: vec![0.0] });
        let v = cgf_empirical(&samples, &DualPoint::new(1.0, vec![0.0])).unwrap();
        assert!(v.finite && v.unreliable);
    }

    #[test]
    fn domain_probe() {
        let e = PairLaw::exp_unit(1.0).unwrap();
        let r = cgf_domain_probe(&e, &DualPoint::new(1.0, vec![0.0])).unwrap();
        assert_relative_eq!(r.to_f64(), 1.0, max_relative = 1e-9);
        let g = PairLaw::exp_gauss(1.0, vec![0.0], vec![vec![1.0]]).unwrap();
        assert_eq!(cgf_domain_probe(&g, &DualPoint::new(0.0, vec![1.0])).unwrap(), ExtReal::PosInf);
        let c = PairLaw::gauss_tail_cauchy();
        assert_eq!(cgf_domain_probe(&c, &DualPoint::new(0.0, vec![0.0, 1.0])).unwrap(), ExtReal::Finite(0.0));
        assert!(cgf_domain_probe(&e, &DualPoint::new(2.0, vec![0.0])).is_err());
    }
}
