//! Theorem-by-theorem checks of the large-deviation bounds against
//! simulation.
//!
//! Every check compares a computed rate infimum `θ` with empirical rates
//! `−(1/t) ln p̂` at finite horizons. Limits in `t` cannot be observed, so
//! verdicts are one-sided and use the largest horizon with hits, with slack
//! `0.05 + (rate_hi − rate_lo)` covering finite-`t` prefactors and the 99%
//! interval:
//!
//! - lower bound on open `G`: `rate ≤ θ = inf_G I_i` up to slack;
//! - upper bound on compact or convex `F`: `rate ≥ θ = inf_F I_s` up to slack.
//!
//! A verdict of `violated` always means a CI-certified contradiction of the
//! bound's direction.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mc::{empirical_rate_curve, estimate_mu_n, estimate_prob, McConfig, ProbEstimate, RateEntry, Trend};
use crate::model::{Family, PairLaw};
use crate::quad::gauss_legendre_integrate;
use crate::rate::{cramer_inf_over_product, rate_inf_over_set, rate_profile, Bound, RateOptions};
use crate::sets::SetDescriptor;
use crate::stats::{normal_cdf, normal_quantile, weighted_slope, CONFIDENCE};

/// Absolute part of the verdict slack, in rate units.
pub const BASE_SLACK: f64 = 0.05;

/// Tail-exponent estimates above this are reported as `+∞`.
pub const DIVERGENCE_THRESHOLD: f64 = 50.0;

/// Which statement a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremPart {
    /// Lower bound on open sets.
    #[serde(rename = "b")]
    LowerOpen,
    /// Upper bound on compact sets.
    #[serde(rename = "c")]
    UpperCompact,
    /// Upper bound on convex sets.
    #[serde(rename = "d")]
    UpperConvex,
    #[serde(rename = "counterexample_open")]
    CounterexampleOpen,
    #[serde(rename = "counterexample_closed")]
    CounterexampleClosed,
    #[serde(rename = "supermult")]
    Supermult,
    #[serde(rename = "prop2")]
    Prop2,
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

/// Result of one verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub theorem_part: TheoremPart,
    pub set: Option<SetDescriptor>,
    pub theoretical_inf: ExtReal,
    pub empirical_curve: Vec<RateEntry>,
    pub verdict: Verdict,
    pub slack: f64,
    /// Which hypothesis of the checked statement held (or that none did).
    pub hypothesis: Option<String>,
    /// Named numeric side results (all finite).
    pub diagnostics: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(theorem_part: TheoremPart, set: Option<SetDescriptor>, theoretical_inf: ExtReal) -> Self {
        Self {
            theorem_part,
            set,
            theoretical_inf,
            empirical_curve: Vec::new(),
            verdict: Verdict::Inconclusive,
            slack: BASE_SLACK,
            hypothesis: None,
            diagnostics: BTreeMap::new(),
        }
    }

    fn put(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.diagnostics.insert(key.to_string(), v);
        }
    }
}

/// Largest horizon with at least one hit.
fn decisive_entry(curve: &[RateEntry]) -> Option<&RateEntry> {
    curve.iter().rev().find(|e| e.estimate.hits > 0)
}

fn entry_slack(e: &RateEntry) -> f64 {
    BASE_SLACK + (e.rate_hi.to_f64() - e.rate_lo)
}

fn trend_code(t: Trend) -> f64 {
    match t {
        Trend::Stable => 0.0,
        Trend::Decreasing => -1.0,
        Trend::Increasing => 1.0,
        Trend::Mixed => 2.0,
        Trend::Insufficient => f64::NAN,
    }
}

/// Lower bound on an open set: `liminf (1/t) ln P[W_t/t ∈ G] ≥ −inf_G I_i`.
pub fn check_lower_bound(
    law: &PairLaw,
    set: &SetDescriptor,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    if !set.is_open() {
        return Err(Error::InvalidParameter(format!("lower-bound check needs an open set, got {}", set.describe())));
    }
    let theo = rate_inf_over_set(law, set, Bound::Lower, opts)?;
    let curve = empirical_rate_curve(law, set, t_grid, n_runs, cfg)?;
    let mut rep = BoundReport::new(TheoremPart::LowerOpen, Some(set.clone()), theo.value);
    rep.put("inf_certified", f64::from(u8::from(theo.certified)));
    rep.put("trend", trend_code(curve.trend));
    if let Some(e) = decisive_entry(&curve.entries) {
        rep.slack = entry_slack(e);
        let rate = e.rate.expect("entry has hits");
        rep.put("decisive_t", e.t);
        rep.verdict = match theo.value {
            ExtReal::Finite(th) if rate - th > rep.slack => Verdict::Violated,
            _ => Verdict::Consistent,
        };
    }
    rep.empirical_curve = curve.entries;
    Ok(rep)
}

fn upper_verdict(rep: &mut BoundReport, entries: &[RateEntry]) {
    match decisive_entry(entries) {
        Some(e) => {
            rep.slack = entry_slack(e);
            let rate = e.rate.expect("entry has hits");
            rep.put("decisive_t", e.t);
            rep.verdict = match rep.theoretical_inf {
                ExtReal::PosInf => Verdict::Violated,
                ExtReal::Finite(th) if th - rate > rep.slack => Verdict::Violated,
                ExtReal::Finite(_) => Verdict::Consistent,
            };
        }
        // No hits at any horizon: the probabilities are too small to
        // contradict an upper bound.
        None => rep.verdict = Verdict::Consistent,
    }
}

/// Which hypothesis of the convex upper bound holds for `law`.
fn convex_hypothesis(law: &PairLaw, opts: &RateOptions) -> Result<String> {
    if law.tail().ell_s.is_finite() {
        return Ok("ell_s finite".into());
    }
    let zero = vec![0.0; law.dim()];
    let i0 = crate::rate::rate_i(law, &zero, Bound::Upper, opts)?;
    Ok(if i0.value.is_finite() { "I_s(0) finite".into() } else { "hypothesis-free zone".into() })
}

fn upper_check(
    part: TheoremPart,
    law: &PairLaw,
    set: &SetDescriptor,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    let theo = rate_inf_over_set(law, set, Bound::Upper, opts)?;
    let curve = empirical_rate_curve(law, set, t_grid, n_runs, cfg)?;
    let mut rep = BoundReport::new(part, Some(set.clone()), theo.value);
    rep.put("inf_certified", f64::from(u8::from(theo.certified)));
    rep.put("trend", trend_code(curve.trend));
    if part != TheoremPart::UpperCompact {
        rep.hypothesis = Some(convex_hypothesis(law, opts)?);
    }
    upper_verdict(&mut rep, &curve.entries);
    rep.empirical_curve = curve.entries;
    Ok(rep)
}

/// Upper bound `limsup (1/t) ln P[W_t/t ∈ F] ≤ −inf_F I_s`, checked as the
/// compact statement when `F` is compact and as the convex one otherwise.
pub fn check_upper_bound(
    law: &PairLaw,
    set: &SetDescriptor,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    let part = if set.is_compact() { TheoremPart::UpperCompact } else { TheoremPart::UpperConvex };
    upper_check(part, law, set, t_grid, n_runs, cfg, opts)
}

/// The convex-set upper bound, with the hypothesis that held recorded
/// (inputs outside the hypotheses run as a "hypothesis-free zone").
pub fn check_convex(
    law: &PairLaw,
    set: &SetDescriptor,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    upper_check(TheoremPart::UpperConvex, law, set, t_grid, n_runs, cfg, opts)
}

/// The open convex set `{w₁ < 1}`.
pub fn open_counterexample_set() -> SetDescriptor {
    SetDescriptor::half_space(vec![1.0, 0.0], 1.0, true)
}

/// The convex upper bound on `{w₁ < 1}` for a law whose waiting times have
/// a Gaussian tail and whose first reward coordinate is the waiting time:
/// `W_t/t` always lies in the set while `inf I_s = +∞`.
pub fn counterexample_open(
    law: &PairLaw,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    let set = open_counterexample_set();
    let mut rep = upper_check(TheoremPart::CounterexampleOpen, law, &set, t_grid, n_runs, cfg, opts)?;
    let misses: u64 = rep.empirical_curve.iter().map(|e| e.estimate.n_runs - e.estimate.hits).sum();
    rep.put("misses", misses as f64);
    Ok(rep)
}

/// `μ = E[S]` and `σ² = Var[S]` by 128-node Gauss–Legendre on `[0, 8]` from
/// the exact survival function (`E[S^k] = ∫ k s^{k−1} P[S > s] ds`).
pub fn waiting_moments(law: &PairLaw) -> Option<(f64, f64)> {
    law.log_survival(1.0)?;
    let surv = |s: f64| law.log_survival(s).map_or(0.0, f64::exp);
    let mu = gauss_legendre_integrate(surv, 0.0, 8.0, 128);
    let m2 = gauss_legendre_integrate(|s| 2.0 * s * surv(s), 0.0, 8.0, 128);
    Some((mu, m2 - mu * mu))
}

/// `P[−√(εσ²N) < T_N − μN ≤ −√(ε²σ²N)]` by simulation.
pub fn window_probability(
    law: &PairLaw,
    n: u64,
    eps: f64,
    mu: f64,
    sigma2: f64,
    runs: u64,
    cfg: &McConfig,
) -> Result<ProbEstimate> {
    let nf = n as f64;
    let lo = mu * nf - (eps * sigma2 * nf).sqrt();
    let hi = mu * nf - (eps * eps * sigma2 * nf).sqrt();
    // T_N/N ∈ (lo/N, hi/N]; the reward part is unconstrained.
    let inner = SetDescriptor::closed_ball(vec![0.0; law.dim()], f64::MAX.sqrt());
    let set = SetDescriptor::BoxProduct { lo: lo / nf, hi: hi / nf, inner: Box::new(inner) };
    estimate_mu_n(law, n, &set, runs, cfg)
}

/// The closed convex counterexample `C = {w₁ < 1, (1 − w₁)w₂ ≥ 1}` at
/// horizons `t = μN`. The empirical decay exponent (weighted least-squares
/// slope of `−ln p̂` against `t`) is compared with the lower-bound exponent
/// `εσ²/μ`, while `inf_C I_s = +∞`; the verdict refers to the convex upper
/// bound, which the finite exponent contradicts.
pub fn counterexample_closed(
    law: &PairLaw,
    eps: f64,
    n_grid: &[u64],
    runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("N grid must be nonempty and increasing".into()));
    }
    let (mu, sigma2) =
        waiting_moments(law).ok_or_else(|| Error::InvalidParameter("law needs an exact survival function".into()))?;
    let set = SetDescriptor::Hyperbolic;
    let theo = rate_inf_over_set(law, &set, Bound::Upper, opts)?;
    let mut rep = BoundReport::new(TheoremPart::CounterexampleClosed, Some(set.clone()), theo.value);
    rep.hypothesis = Some(convex_hypothesis(law, opts)?);
    for (k, &n) in n_grid.iter().enumerate() {
        let t = mu * n as f64;
        rep.empirical_curve.push(RateEntry::new(t, estimate_prob(law, t, &set, runs, &cfg.derive(k as u64))?));
    }
    let bound = eps * sigma2 / mu;
    rep.put("mu", mu);
    rep.put("sigma2", sigma2);
    rep.put("exponent_bound", bound);

    // CLT window at the largest N.
    let n_max = *n_grid.last().unwrap();
    let win = window_probability(law, n_max, eps, mu, sigma2, runs, &cfg.derive(u64::MAX))?;
    let expected = normal_cdf(-eps) - normal_cdf(-eps.sqrt());
    let se = (expected * (1.0 - expected) / runs as f64).sqrt();
    rep.put("window_n", n_max as f64);
    rep.put("window_p_hat", win.p_hat);
    rep.put("window_expected", expected);
    rep.put("window_stderr", se);
    rep.put("window_ok", f64::from(u8::from((win.p_hat - expected).abs() <= 5.0 * se)));

    let hit: Vec<&RateEntry> = rep.empirical_curve.iter().filter(|e| e.estimate.hits > 0).collect();
    let all_hit = hit.len() == rep.empirical_curve.len();
    let z = normal_quantile(CONFIDENCE);
    let fit = if hit.len() >= 2 {
        let x: Vec<f64> = hit.iter().map(|e| e.t).collect();
        let y: Vec<f64> = hit.iter().map(|e| -e.estimate.p_hat.ln()).collect();
        // Var(ln p̂) ≈ (1 − p̂)/(n p̂).
        let w: Vec<f64> = hit
            .iter()
            .map(|e| {
                let p = e.estimate.p_hat;
                e.estimate.n_runs as f64 * p / (1.0 - p).max(1.0 / e.estimate.n_runs as f64)
            })
            .collect();
        weighted_slope(&x, &y, &w)
    } else {
        None
    };
    match fit {
        Some((slope, sd)) => {
            rep.slack = z * sd;
            rep.put("decay_exponent", slope);
            rep.put("decay_stderr", sd);
            let claim = slope <= bound + rep.slack;
            rep.put("claim_consistent", f64::from(u8::from(claim)));
            rep.verdict = if !all_hit {
                Verdict::Inconclusive
            } else {
                match theo.value {
                    ExtReal::PosInf => Verdict::Violated,
                    ExtReal::Finite(th) if th - slope > rep.slack => Verdict::Violated,
                    ExtReal::Finite(_) => Verdict::Consistent,
                }
            };
        }
        None => rep.verdict = Verdict::Inconclusive,
    }
    Ok(rep)
}

/// `P[kα ≤ Gamma(k, λ) ≤ kβ]`: the exact `μ_k` for unit rewards when the
/// reward part of the product set contains `1`.
pub fn exact_unit_mu(rate: f64, k: u64, lo: f64, hi: f64) -> f64 {
    let g = Gamma::new(k as f64, rate).expect("positive parameters");
    let kf = k as f64;
    (g.cdf(kf * hi) - g.cdf(kf * lo)).max(0.0)
}

/// `ln μ_{m+n}(C) ≥ ln μ_m(C) + ln μ_n(C)` for each pair, with the 99%
/// log-scale interval half-widths as slack. Curve entries carry `t = k`.
pub fn check_supermultiplicativity(
    law: &PairLaw,
    set: &SetDescriptor,
    pairs: &[(u64, u64)],
    runs: u64,
    cfg: &McConfig,
    opts: &RateOptions,
) -> Result<BoundReport> {
    let SetDescriptor::BoxProduct { lo, hi, inner } = set else {
        return Err(Error::InvalidParameter("super-multiplicativity needs a box_product set".into()));
    };
    if pairs.is_empty() || pairs.iter().any(|&(m, n)| m == 0 || n == 0) {
        return Err(Error::InvalidParameter("pairs must be nonempty with m, n ≥ 1".into()));
    }
    let theo = cramer_inf_over_product(law, set, opts)?;
    let mut rep = BoundReport::new(TheoremPart::Supermult, Some(set.clone()), theo.value);
    let mut ks: Vec<u64> = pairs.iter().flat_map(|&(m, n)| [m, n, m + n]).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut est = BTreeMap::new();
    for &k in &ks {
        let p = estimate_mu_n(law, k, set, runs, &cfg.derive(k))?;
        rep.empirical_curve.push(RateEntry::new(k as f64, p));
        est.insert(k, p);
    }
    if let Family::ExpUnit { rate } = law.family() {
        let unit_inside = inner.contains(&[1.0]);
        let mut all_ok = true;
        for &k in &ks {
            let exact = if unit_inside { exact_unit_mu(*rate, k, *lo, *hi) } else { 0.0 };
            let p = &est[&k];
            let ok = p.ci_lo <= exact && exact <= p.ci_hi;
            all_ok &= ok;
            rep.put(&format!("exact_mu_{k}"), exact);
            rep.put(&format!("exact_within_ci_{k}"), f64::from(u8::from(ok)));
        }
        rep.put("exact_within_ci", f64::from(u8::from(all_ok)));
    }
    let (mut violated, mut inconclusive) = (false, false);
    let mut max_slack = 0.0f64;
    for &(m, n) in pairs {
        let (a, b, c) = (&est[&m], &est[&n], &est[&(m + n)]);
        let key = format!("pair_{m}_{n}");
        let (Some((_, up_c)), Some((lo_a, _)), Some((lo_b, _))) = (c.log_half_widths(), a.log_half_widths(), b.log_half_widths())
        else {
            inconclusive = true;
            rep.put(&format!("{key}_inconclusive"), 1.0);
            continue;
        };
        let slack = up_c + lo_a + lo_b;
        let margin = c.p_hat.ln() - a.p_hat.ln() - b.p_hat.ln() + slack;
        max_slack = max_slack.max(slack);
        rep.put(&format!("{key}_margin"), margin);
        rep.put(&format!("{key}_slack"), slack);
        violated |= margin < 0.0;
    }
    rep.slack = max_slack;
    rep.verdict = if violated {
        Verdict::Violated
    } else if inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::Consistent
    };
    Ok(rep)
}

/// Rates for rewards dominated by a sublinear function of the waiting time:
/// `I_i = I_s = Υ(1, ·)`, checked on `w_grid` within `tol`.
pub fn check_prop2(law: &PairLaw, w_grid: &[Vec<f64>], tol: f64, opts: &RateOptions) -> Result<BoundReport> {
    if w_grid.is_empty() {
        return Err(Error::InvalidParameter("w grid must be nonempty".into()));
    }
    let mut rep = BoundReport::new(TheoremPart::Prop2, None, ExtReal::ZERO);
    rep.slack = tol;
    rep.hypothesis = Some(match law.family() {
        Family::RewardOfWait { .. } => "rewards are a sublinear function of the waiting time".into(),
        _ => "hypothesis-free zone".into(),
    });
    let (mut gap, mut gap_upper) = (0.0f64, 0.0f64);
    let mut converged = true;
    for w in w_grid {
        let p = rate_profile(law, w, opts)?;
        converged &= p.converged;
        let d = |a: ExtReal, b: ExtReal| match (a, b) {
            (ExtReal::PosInf, ExtReal::PosInf) => 0.0,
            (a, b) => (a.to_f64() - b.to_f64()).abs(),
        };
        gap = gap.max(d(p.i_lower, p.upsilon1));
        gap_upper = gap_upper.max(d(p.i_upper, p.upsilon1));
    }
    rep.put("max_gap_lower", gap);
    rep.put("max_gap_upper", gap_upper);
    rep.put("grid_points", w_grid.len() as f64);
    rep.verdict = if gap.max(gap_upper) > tol {
        Verdict::Violated
    } else if converged {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    };
    Ok(rep)
}

/// Where tail exponents are estimated from.
#[derive(Debug, Clone, Copy)]
pub enum TailSource<'a> {
    /// Exact survival of a law (empirical laws use their samples).
    Law(&'a PairLaw),
    /// Observed waiting times.
    Samples(&'a [f64]),
}

/// Tail-exponent estimates on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub ell_i_hat: ExtReal,
    pub ell_s_hat: ExtReal,
    /// `(s_first, s_last)` of the stabilized window (the upper half of the
    /// usable grid).
    pub window: (f64, f64),
    /// `(s, −(1/s) ln P[S > s])` on the usable grid.
    pub values: Vec<(f64, f64)>,
    /// Some estimate exceeded [`DIVERGENCE_THRESHOLD`] and was mapped to `+∞`.
    pub diverging: bool,
    /// The empirical survival hit zero before the end of the grid.
    pub truncated: bool,
}

/// `−(1/s) ln P[S > s]` on `s_grid`; `(ℓ_i, ℓ_s)` are estimated by the (max,
/// min) over the upper half of the usable grid.
pub fn estimate_tail_exponents(source: TailSource<'_>, s_grid: &[f64]) -> Result<TailEstimate> {
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[0] < w[1])) || s_grid[0] <= 0.0 {
        return Err(Error::InvalidParameter("s grid must be positive, increasing, with ≥ 2 points".into()));
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let samples = match source {
        TailSource::Samples(s) => Some(sorted(s)),
        TailSource::Law(law) => match law.family() {
            Family::Empirical { samples } => Some(sorted(&samples.s)),
            _ => None,
        },
    };
    let log_surv = |s: f64| -> Option<f64> {
        match (&samples, source) {
            (Some(v), _) => {
                let above = v.len() - v.partition_point(|x| *x <= s);
                (above > 0).then(|| (above as f64 / v.len() as f64).ln())
            }
            (None, TailSource::Law(law)) => law.log_survival(s).filter(|l| l.is_finite()),
            (None, TailSource::Samples(_)) => unreachable!(),
        }
    };
    let mut values = Vec::new();
    let mut truncated = false;
    for &s in s_grid {
        match log_surv(s) {
            Some(l) => values.push((s, -l / s)),
            None => {
                truncated = true;
                break;
            }
        }
    }
    if values.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: values.len() });
    }
    let window = &values[values.len() / 2..];
    let max = window.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let cap = |v: f64| if v > DIVERGENCE_THRESHOLD { ExtReal::PosInf } else { ExtReal::Finite(v.max(0.0)) };
    Ok(TailEstimate {
        ell_i_hat: cap(max),
        ell_s_hat: cap(min),
        window: (window[0].0, window[window.len() - 1].0),
        diverging: max > DIVERGENCE_THRESHOLD,
        truncated,
        values,
    })
}
