//! Rate functions of the renewal-reward process.
//!
//! ```text
//! J(s, w)  = sup_{ζ, φ} { sζ + φ·w − Λ(ζ, φ) }                     (Cramér transform of a pair)
//! Υ(β, w)  = lsc envelope of inf_{γ>0} γ·J(β/γ, w/γ),  Υ(β<0, ·) = +∞, Υ(0, 0) = 0
//! I_ℓ(w)   = inf_{β∈[0,1]} { Υ(β, w) + (1 − β)·ℓ }                 (Υ(1, w) if ℓ = +∞)
//! I_i = I_{ℓ_i},  I_s = I_{ℓ_s},   I_s ≤ I_i ≤ Υ(1, ·)
//! ```
//!
//! `J` is a direct concave maximization in `(ζ, φ)`. `Υ` and `I_ℓ` are
//! computed through their support-function dual (see [`dual`]), which yields
//! the lower-semicontinuous envelope exactly, including points where the
//! perspective is finite only on a lower-dimensional set (unit rewards,
//! rewards equal to the waiting time). The primal routes — golden section
//! over `γ` of `γ·J(β/γ, w/γ)` and over `β` of `Υ(β, w) + (1 − β)ℓ` — are
//! provided as independent cross-checks: [`perspective_min_primal`] and
//! [`rate_i_beta_search`].

mod dual;
mod set_inf;

use std::io::Write;

use serde::Serialize;

use crate::cgf::{evaluate, DualPoint};
use crate::error::{check_dim, Error, Result};
use crate::ext::{fmt_f64, ExtReal};
use crate::model::PairLaw;
use crate::optim::{golden_min, maximize_concave, AscentStatus};

pub use set_inf::{cramer_inf_over_product, rate_inf_over_set, SetInf, OPEN_SET_MARGIN};

use dual::{free_coordinates, solve, DualSolution};

/// Which tail exponent mixes into the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `I_i`, built from `ℓ_i` (lower large-deviation bound).
    Lower,
    /// `I_s`, built from `ℓ_s` (upper large-deviation bound).
    Upper,
}

impl Bound {
    fn ell(self, law: &PairLaw) -> ExtReal {
        match self {
            Bound::Lower => law.tail().ell_i,
            Bound::Upper => law.tail().ell_s,
        }
    }
}

/// Numerical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateOptions {
    /// Trust-region radius in dual space.
    pub r_max: f64,
    /// Relative golden-section tolerance for the primal `γ` and `β` searches.
    pub golden_tol: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { r_max: 1e3, golden_tol: 1e-8 }
    }
}

/// A computed rate with optimizer diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateValue {
    pub value: ExtReal,
    /// Dual maximizer `(ζ*, φ*)`.
    pub argmax_dual: Option<DualPoint>,
    /// Perspective minimizer `γ*`.
    pub argmin_gamma: Option<f64>,
    /// Mixing weight `β*` of the tail-mixed rates.
    pub argmin_beta: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub status: AscentStatus,
    /// `Υ(0, w ≠ 0)` obtained as a monitored `β ↓ 0` limit.
    pub envelope_estimate: bool,
}

impl RateValue {
    fn exact(value: ExtReal) -> Self {
        let status = if value.is_inf() { AscentStatus::Unbounded } else { AscentStatus::Interior };
        Self {
            value,
            argmax_dual: None,
            argmin_gamma: None,
            argmin_beta: None,
            converged: true,
            iterations: 0,
            status,
            envelope_estimate: false,
        }
    }

    fn from_dual(sol: &DualSolution, beta: f64) -> Self {
        let status = sol.ascent.status;
        let value = match status {
            AscentStatus::Unbounded => ExtReal::PosInf,
            _ => ExtReal::Finite(clamp_nonneg(sol.ascent.value)),
        };
        let argmin_gamma = sol
            .zeta
            .root
            .as_ref()
            .and_then(|e| e.d_zeta)
            .filter(|d| *d > 0.0 && status != AscentStatus::Unbounded)
            .map(|es| beta / es);
        Self {
            value,
            argmax_dual: Some(DualPoint::new(sol.zeta.zeta, sol.phi.clone())),
            argmin_gamma,
            argmin_beta: None,
            converged: sol.ascent.converged(),
            iterations: sol.ascent.iterations,
            status,
            envelope_estimate: false,
        }
    }
}

/// Rates are nonnegative; absorb round-off just below zero.
fn clamp_nonneg(v: f64) -> f64 {
    if (-1e-9..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Cramér transform `J(s, w)` of the pair law.
pub fn cramer_j(law: &PairLaw, s: f64, w: &[f64], opts: &RateOptions) -> Result<RateValue> {
    check_dim(law.dim(), w.len())?;
    if s <= 0.0 {
        // Λ(ζ, 0) ≤ 0 for ζ ≤ 0, so sζ − Λ(ζ, 0) ≥ sζ is unbounded as ζ → −∞
        // (for s = 0 because Λ(ζ, φ) → −∞ wherever finite).
        return Ok(RateValue::exact(ExtReal::PosInf));
    }
    let d = law.dim();
    let free = free_coordinates(law);
    let embed = |x: &[f64]| {
        let mut phi = vec![0.0; d];
        for (i, &k) in free.iter().enumerate() {
            phi[k] = x[i + 1];
        }
        phi
    };
    let objective = |x: &[f64]| {
        let phi = embed(x);
        let e = evaluate(law, x[0], &phi);
        if !e.is_finite() {
            return (f64::NEG_INFINITY, None);
        }
        let lin: f64 = s * x[0] + phi.iter().zip(w).map(|(p, v)| p * v).sum::<f64>();
        let grad = e.d_zeta.and_then(|dz| {
            let mut g = vec![s - dz];
            for &k in &free {
                g.push(w[k] - e.d_phi[k]?);
            }
            Some(g)
        });
        (lin - e.value, grad)
    };
    let ascent = maximize_concave(objective, &vec![0.0; free.len() + 1], opts.r_max);
    let phi = embed(&ascent.x);
    let mut converged = ascent.converged();
    if ascent.status == AscentStatus::Interior {
        // First-order certificate ∇Λ(ζ*, φ*) = (s, w) on the free coordinates.
        let e = evaluate(law, ascent.x[0], &phi);
        let scale = 1.0 + (s * s + w.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let resid = match e.d_zeta {
            Some(dz) => {
                let mut r2 = (dz - s).powi(2);
                for &k in &free {
                    r2 += e.d_phi[k].map_or(f64::INFINITY, |g| (g - w[k]).powi(2));
                }
                r2.sqrt()
            }
            None => f64::INFINITY,
        };
        converged = resid <= 1e-5 * scale;
    }
    let value = match ascent.status {
        AscentStatus::Unbounded => ExtReal::PosInf,
        _ => ExtReal::Finite(clamp_nonneg(ascent.value)),
    };
    Ok(RateValue {
        value,
        argmax_dual: Some(DualPoint::new(ascent.x[0], phi)),
        argmin_gamma: None,
        argmin_beta: None,
        converged,
        iterations: ascent.iterations,
        status: ascent.status,
        envelope_estimate: false,
    })
}

/// `Υ(β, w)` for `β > 0` via the support-function dual; `argmin_gamma` is
/// the perspective minimizer `β/E_t[S]` read off at the dual optimum.
pub fn perspective_min(law: &PairLaw, beta: f64, w: &[f64], opts: &RateOptions) -> Result<RateValue> {
    check_dim(law.dim(), w.len())?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("perspective needs beta > 0, got {beta}")));
    }
    let free = free_coordinates(law);
    let sol = solve(law, beta, w, f64::INFINITY, &free, &vec![0.0; law.dim()], opts.r_max);
    Ok(RateValue::from_dual(&sol, beta))
}

/// Result of the primal perspective search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalPerspective {
    pub rate: RateValue,
    /// Golden-section evaluations that contradicted unimodality of
    /// `γ ↦ γ·J(β/γ, w/γ)` (always zero for a convex objective).
    pub bracket_violations: usize,
}

/// `inf_{γ>0} γ·J(β/γ, w/γ)` by bracketing on `ln γ` from `γ = β` and golden
/// section to relative width `opts.golden_tol`.
pub fn perspective_min_primal(law: &PairLaw, beta: f64, w: &[f64], opts: &RateOptions) -> Result<PrimalPerspective> {
    check_dim(law.dim(), w.len())?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("perspective needs beta > 0, got {beta}")));
    }
    let mut evals = 0usize;
    let mut g = |u: f64| -> f64 {
        evals += 1;
        let gamma = u.exp();
        let v: Vec<f64> = w.iter().map(|x| x / gamma).collect();
        match cramer_j(law, beta / gamma, &v, opts) {
            Ok(j) => j.value.scale(gamma).to_f64(),
            Err(_) => f64::INFINITY,
        }
    };
    let u0 = beta.ln();
    let h = std::f64::consts::LN_2;
    let (g0, gp, gm) = (g(u0), g(u0 + h), g(u0 - h));
    let bracket = if g0 <= gp && g0 <= gm {
        Some((u0 - h, u0 + h))
    } else if !(g0.is_finite() || gp.is_finite() || gm.is_finite()) {
        None
    } else {
        let dir = if gp < gm { 1.0 } else { -1.0 };
        let (mut a, mut b, mut fb) = (u0, u0 + dir * h, if dir > 0.0 { gp } else { gm });
        let mut step = h;
        let mut found = None;
        for _ in 0..60 {
            step *= 2.0;
            let c = b + dir * step;
            let fc = g(c);
            if fc > fb {
                found = Some(if dir > 0.0 { (a, c) } else { (c, a) });
                break;
            }
            a = b;
            b = c;
            fb = fc;
        }
        found
    };
    let Some((lo, hi)) = bracket else {
        let mut rate = RateValue::exact(ExtReal::PosInf);
        rate.converged = false;
        rate.iterations = evals;
        return Ok(PrimalPerspective { rate, bracket_violations: 0 });
    };
    let res = golden_min(&mut g, lo, hi, 0.0, opts.golden_tol);
    let value = ExtReal::from_f64(clamp_nonneg(res.fx));
    let mut rate = RateValue::exact(value);
    rate.argmin_gamma = Some(res.x.exp());
    rate.iterations = evals + res.iterations;
    rate.status = AscentStatus::Interior;
    rate.converged = value.is_finite();
    Ok(PrimalPerspective { rate, bracket_violations: res.bracket_violations })
}

/// `Υ(β, w)` for any real `β`.
pub fn upsilon(law: &PairLaw, beta: f64, w: &[f64], opts: &RateOptions) -> Result<RateValue> {
    check_dim(law.dim(), w.len())?;
    if beta < 0.0 {
        return Ok(RateValue::exact(ExtReal::PosInf));
    }
    if beta > 0.0 {
        return perspective_min(law, beta, w, opts);
    }
    if w.iter().all(|v| *v == 0.0) {
        return Ok(RateValue::exact(ExtReal::ZERO));
    }
    // β = 0, w ≠ 0: monitored limit along β_k = 2^{-k}.
    let free = free_coordinates(law);
    let mut start = vec![0.0; law.dim()];
    let mut prev: Option<ExtReal> = None;
    let mut last = RateValue::exact(ExtReal::ZERO);
    let mut iterations = 0;
    for k in 1..=40 {
        let beta_k = 0.5f64.powi(k);
        let sol = solve(law, beta_k, w, f64::INFINITY, &free, &start, opts.r_max);
        if sol.ascent.status != AscentStatus::Unbounded {
            start = sol.phi.clone();
        }
        last = RateValue::from_dual(&sol, beta_k);
        iterations += last.iterations;
        let stable = match (prev, last.value) {
            (Some(ExtReal::PosInf), ExtReal::PosInf) => true,
            (Some(ExtReal::Finite(p)), ExtReal::Finite(v)) => (v - p).abs() <= 1e-4 * v.abs().max(1e-12),
            _ => false,
        };
        prev = Some(last.value);
        if stable {
            last.converged = last.converged && true;
            last.iterations = iterations;
            last.envelope_estimate = true;
            last.argmin_gamma = None;
            return Ok(last);
        }
    }
    last.converged = false;
    last.iterations = iterations;
    last.envelope_estimate = true;
    last.argmin_gamma = None;
    Ok(last)
}

/// Mixing weight at the dual optimum of `I_ℓ`.
fn mixing_weight(sol: &DualSolution, w: &[f64], ell: f64) -> Option<f64> {
    let z = sol.zeta.zeta;
    let tol = 1e-9 * (1.0 + ell.abs());
    if z < ell - tol {
        return Some(1.0);
    }
    if z > ell + tol {
        return Some(0.0);
    }
    // At the kink: β·v = w in the least-squares sense, v = E_t[X]/E_t[S].
    let e = sol.zeta.root.as_ref()?;
    let es = e.d_zeta?;
    let v: Option<Vec<f64>> = e.d_phi.iter().map(|g| g.map(|g| g / es)).collect();
    let v = v?;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return Some(0.0);
    }
    Some((v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / vv).clamp(0.0, 1.0))
}

fn rate_stage(
    law: &PairLaw,
    w: &[f64],
    ell: ExtReal,
    free: &[usize],
    start: &[f64],
    opts: &RateOptions,
) -> (RateValue, DualSolution) {
    let cap = ell.to_f64();
    let sol = solve(law, 1.0, w, cap, free, start, opts.r_max);
    let mut rate = RateValue::from_dual(&sol, 1.0);
    rate.argmin_beta = if cap.is_finite() { mixing_weight(&sol, w, cap) } else { Some(1.0) };
    if cap.is_finite() && rate.argmin_beta != Some(1.0) {
        rate.argmin_gamma = None;
    }
    (rate, sol)
}

/// `I_i(w)` (`Bound::Lower`) or `I_s(w)` (`Bound::Upper`).
pub fn rate_i(law: &PairLaw, w: &[f64], which: Bound, opts: &RateOptions) -> Result<RateValue> {
    check_dim(law.dim(), w.len())?;
    let free = free_coordinates(law);
    Ok(rate_stage(law, w, which.ell(law), &free, &vec![0.0; law.dim()], opts).0)
}

/// `I_ℓ(w)` by golden section over `β ∈ [0, 1]` of `Υ(β, w) + (1 − β)ℓ`,
/// endpoints included (`β = 0` uses the monitored envelope limit).
pub fn rate_i_beta_search(law: &PairLaw, w: &[f64], which: Bound, opts: &RateOptions) -> Result<RateValue> {
    check_dim(law.dim(), w.len())?;
    let ell = match which.ell(law) {
        ExtReal::PosInf => return upsilon(law, 1.0, w, opts),
        ExtReal::Finite(l) => l,
    };
    let mut all_converged = true;
    let mut iterations = 0;
    let res = golden_min(
        |b| {
            let u = upsilon(law, b, w, opts).expect("dimension checked");
            all_converged &= u.converged || b == 0.0;
            iterations += u.iterations;
            u.value.to_f64() + (1.0 - b) * ell
        },
        0.0,
        1.0,
        0.0,
        opts.golden_tol,
    );
    let mut rate = RateValue::exact(ExtReal::from_f64(clamp_nonneg(res.fx)));
    rate.argmin_beta = Some(res.x);
    rate.converged = all_converged && res.bracket_violations == 0;
    rate.iterations = iterations;
    Ok(rate)
}

/// All rate functions at one reward point, computed as a warm-started chain
/// `I_s → I_i → Υ(1, ·)` so that the ordering holds for the computed values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProfile {
    pub w: Vec<f64>,
    pub beta_star: Option<f64>,
    pub gamma_star: Option<f64>,
    /// `J(1, w)`.
    pub j: ExtReal,
    pub upsilon1: ExtReal,
    pub i_lower: ExtReal,
    pub i_upper: ExtReal,
    /// All three rates (`I_s`, `I_i`, `Υ(1, ·)`) converged.
    pub converged: bool,
    /// `J(1, w)` carries a first-order certificate (fails legitimately when
    /// the maximizer sits on the boundary of the domain of `Λ`).
    pub j_certified: bool,
    #[serde(skip)]
    pub details: [RateValue; 3],
}

/// Computes a [`RateProfile`].
pub fn rate_profile(law: &PairLaw, w: &[f64], opts: &RateOptions) -> Result<RateProfile> {
    check_dim(law.dim(), w.len())?;
    let free = free_coordinates(law);
    let tail = law.tail();
    let zero = vec![0.0; law.dim()];
    // A stage whose predecessor is unbounded is unbounded too: the objectives
    // increase pointwise along the chain.
    let stage = |ell: ExtReal, prev: Option<&(RateValue, DualSolution)>| match prev {
        Some((r, _)) if r.status == AscentStatus::Unbounded => {
            let mut v = RateValue::exact(ExtReal::PosInf);
            v.argmin_beta = r.argmin_beta;
            (v, None)
        }
        _ => {
            let start = prev.map_or(zero.as_slice(), |p| p.1.phi.as_slice());
            let (r, s) = rate_stage(law, w, ell, &free, start, opts);
            (r, Some(s))
        }
    };
    let (upper, su) = stage(tail.ell_s, None);
    let su = su.map(|s| (upper.clone(), s));
    let (lower, sl) = stage(tail.ell_i, su.as_ref());
    let sl = sl.map(|s| (lower.clone(), s)).or(su);
    let (ups, _) = stage(ExtReal::PosInf, sl.as_ref());
    let j = cramer_j(law, 1.0, w, opts)?;
    Ok(RateProfile {
        w: w.to_vec(),
        beta_star: lower.argmin_beta,
        gamma_star: ups.argmin_gamma,
        j: j.value,
        upsilon1: ups.value,
        i_lower: lower.value,
        i_upper: upper.value,
        converged: upper.converged && lower.converged && ups.converged,
        j_certified: j.converged,
        details: [upper, lower, ups],
    })
}

/// Writes rate profiles as CSV:
/// `w1[,w2[,w3]],beta_star,gamma_star,J,Upsilon1,I_lower,I_upper,converged`.
pub fn write_rate_grid<W: Write>(out: W, rows: &[RateProfile]) -> Result<()> {
    let d = rows.first().map_or(1, |r| r.w.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|k| format!("w{k}")).collect();
    header.extend(["beta_star", "gamma_star", "J", "Upsilon1", "I_lower", "I_upper", "converged"].map(String::from));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let mut rec: Vec<String> = r.w.iter().copied().map(fmt_f64).collect();
        rec.push(opt(r.beta_star));
        rec.push(opt(r.gamma_star));
        for v in [r.j, r.upsilon1, r.i_lower, r.i_upper] {
            rec.push(v.to_string());
        }
        rec.push(r.converged.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
