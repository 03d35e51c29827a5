//! Monte Carlo for renewal-reward trajectories.
//!
//! Runs are grouped into fixed batches of [`BATCH`] trajectories; batch `b`
//! of stream `k` draws from `ChaCha8Rng` seeded by `splitmix64(seed ⊕ k)` on
//! stream `b`. Batches are fanned out over a rayon pool of `workers` threads
//! and reduced in batch order, so results depend on the seed only — never on
//! the worker count.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{fmt_f64, ExtReal};
use crate::model::PairLaw;
use crate::sets::SetDescriptor;
use crate::stats::{clopper_pearson, CONFIDENCE};

/// Trajectories per RNG stream.
pub const BATCH: u64 = 4096;

/// Runaway guard: renewals allowed per trajectory.
pub const MAX_RENEWALS: u64 = 1_000_000_000;

/// Smallest accepted number of runs.
pub const MIN_RUNS: u64 = 100;

/// The process observed at horizon `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: f64,
    /// `N_t`, the number of renewals in `[0, t]`.
    pub n_t: u64,
    /// `W_t`, the rewards collected by time `t`.
    pub w_t: Vec<f64>,
    /// `T_{N_t}` (`0` when `N_t = 0`).
    pub t_last: f64,
}

/// Draws pairs until the renewal time exceeds `t`.
pub fn simulate_trajectory<R: rand::Rng + ?Sized>(law: &PairLaw, t: f64, rng: &mut R) -> Result<Trajectory> {
    check_horizon(t)?;
    let mut w_t = vec![0.0; law.dim()];
    let mut x = vec![0.0; law.dim()];
    let (n_t, t_last) = run(law, t, rng, &mut w_t, &mut x)?;
    Ok(Trajectory { t, n_t, w_t, t_last })
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon must be positive and finite, got {t}")))
    }
}

/// Allocation-free core of [`simulate_trajectory`]; `w` must be zeroed.
fn run<R: rand::Rng + ?Sized>(law: &PairLaw, t: f64, rng: &mut R, w: &mut [f64], x: &mut [f64]) -> Result<(u64, f64)> {
    let mut time = 0.0;
    let mut n = 0u64;
    loop {
        let s = law.sample_into(rng, x);
        if time + s > t {
            return Ok((n, time));
        }
        time += s;
        n += 1;
        if n > MAX_RENEWALS {
            return Err(Error::Runaway(MAX_RENEWALS));
        }
        w.iter_mut().zip(x.iter()).for_each(|(a, b)| *a += b);
    }
}

/// Full record of one trajectory: arrival times up to the first one past `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub t: f64,
    /// `T_1, …, T_{N_t + 1}` (the last one exceeds `t`).
    pub arrivals: Vec<f64>,
    /// `Σ_{i≤n} X_i` for `n = 0, …, N_t + 1`.
    pub partial_rewards: Vec<Vec<f64>>,
}

impl Path {
    /// `N_t`.
    pub fn n_t(&self) -> usize {
        self.arrivals.len() - 1
    }

    /// `W_t = Σ_{i ≤ N_t} X_i`.
    pub fn w_t(&self) -> &[f64] {
        &self.partial_rewards[self.n_t()]
    }
}

/// Simulates a trajectory keeping every arrival and partial reward sum.
pub fn simulate_path<R: rand::Rng + ?Sized>(law: &PairLaw, t: f64, rng: &mut R) -> Result<Path> {
    check_horizon(t)?;
    let d = law.dim();
    let mut arrivals = Vec::new();
    let mut partial_rewards = vec![vec![0.0; d]];
    let mut x = vec![0.0; d];
    let mut time = 0.0;
    loop {
        let s = law.sample_into(rng, &mut x);
        time += s;
        arrivals.push(time);
        let next: Vec<f64> = partial_rewards.last().unwrap().iter().zip(&x).map(|(a, b)| a + b).collect();
        partial_rewards.push(next);
        if time > t {
            return Ok(Path { t, arrivals, partial_rewards });
        }
        if arrivals.len() as u64 > MAX_RENEWALS {
            return Err(Error::Runaway(MAX_RENEWALS));
        }
    }
}

/// Seeding and parallelism of an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    /// Worker threads (`0` means one).
    pub workers: usize,
}

impl McConfig {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self { seed, workers }
    }

    /// Independent configuration for sub-task `k` (e.g. the `k`-th horizon).
    pub fn derive(&self, k: u64) -> Self {
        Self { seed: splitmix64(self.seed ^ splitmix64(k.wrapping_add(0x5851_f42d_4c95_7f2d))), workers: self.workers }
    }

    fn rng(&self, batch: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed));
        rng.set_stream(batch);
        rng
    }

    /// Runs `n_runs` trials in batches and returns per-batch results in order.
    fn batches<T: Send>(&self, n_runs: u64, job: impl Fn(&mut ChaCha8Rng, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
        let n_batches = n_runs.div_ceil(BATCH);
        let work = |b: u64| {
            let count = BATCH.min(n_runs - b * BATCH);
            job(&mut self.rng(b), count)
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_batches).into_par_iter().map(work).collect())
    }
}

/// SplitMix64 finalizer: a bijective 64-bit mixer used to derive seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A Monte Carlo probability with its 99% Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_runs: u64,
    pub hits: u64,
}

impl ProbEstimate {
    pub fn from_counts(hits: u64, n_runs: u64) -> Self {
        let (ci_lo, ci_hi) = clopper_pearson(hits, n_runs, CONFIDENCE);
        Self { p_hat: hits as f64 / n_runs as f64, ci_lo, ci_hi, n_runs, hits }
    }

    /// Half-widths of the interval in log scale, `(ln p̂ − ln ci_lo, ln ci_hi − ln p̂)`.
    pub fn log_half_widths(&self) -> Option<(f64, f64)> {
        (self.hits > 0).then(|| (self.p_hat.ln() - self.ci_lo.ln(), self.ci_hi.ln() - self.p_hat.ln()))
    }
}

fn check_runs(n_runs: u64) -> Result<()> {
    if n_runs < MIN_RUNS {
        return Err(Error::TooFewSamples { needed: MIN_RUNS as usize, got: n_runs as usize });
    }
    Ok(())
}

/// `P[W_t/t ∈ set]` by direct simulation.
pub fn estimate_prob(law: &PairLaw, t: f64, set: &SetDescriptor, n_runs: u64, cfg: &McConfig) -> Result<ProbEstimate> {
    check_horizon(t)?;
    check_runs(n_runs)?;
    set.check_for(law.dim())?;
    if matches!(set, SetDescriptor::BoxProduct { .. }) {
        return Err(Error::InvalidParameter("box products apply to pair averages; use estimate_mu_n".into()));
    }
    let d = law.dim();
    let counts = cfg.batches(n_runs, |rng, count| {
        let (mut w, mut x, mut avg) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut hits = 0u64;
        for _ in 0..count {
            w.fill(0.0);
            run(law, t, rng, &mut w, &mut x)?;
            avg.iter_mut().zip(&w).for_each(|(a, b)| *a = b / t);
            hits += set.contains(&avg) as u64;
        }
        Ok(hits)
    })?;
    Ok(ProbEstimate::from_counts(counts.iter().sum(), n_runs))
}

/// `μ_n(set) = P[(1/n)Σ_{i≤n}(S_i, X_i) ∈ set]` for a `box_product` set.
pub fn estimate_mu_n(law: &PairLaw, n: u64, set: &SetDescriptor, n_runs: u64, cfg: &McConfig) -> Result<ProbEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    check_runs(n_runs)?;
    if !matches!(set, SetDescriptor::BoxProduct { .. }) {
        return Err(Error::InvalidParameter("pair-average events need a box_product set".into()));
    }
    set.check_for(law.dim())?;
    let d = law.dim();
    let counts = cfg.batches(n_runs, |rng, count| {
        let (mut w, mut x) = (vec![0.0; d], vec![0.0; d]);
        let mut hits = 0u64;
        for _ in 0..count {
            w.fill(0.0);
            let mut s = 0.0;
            for _ in 0..n {
                s += law.sample_into(rng, &mut x);
                w.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
            }
            let nf = n as f64;
            w.iter_mut().for_each(|a| *a /= nf);
            hits += set.contains_pair(s / nf, &w) as u64;
        }
        Ok(hits)
    })?;
    Ok(ProbEstimate::from_counts(counts.iter().sum(), n_runs))
}

/// One horizon of an empirical rate curve, in rate units `−(1/t) ln p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEntry {
    pub t: f64,
    pub estimate: ProbEstimate,
    /// `−(1/t) ln p̂`; absent for zero hits.
    pub rate: Option<f64>,
    /// `−(1/t) ln ci_hi`.
    pub rate_lo: f64,
    /// `−(1/t) ln ci_lo` (`+∞` for zero hits).
    pub rate_hi: ExtReal,
}

impl RateEntry {
    pub fn new(t: f64, estimate: ProbEstimate) -> Self {
        let r = |p: f64| if p > 0.0 { -p.ln() / t } else { f64::INFINITY };
        Self {
            t,
            estimate,
            rate: (estimate.hits > 0).then(|| r(estimate.p_hat)),
            rate_lo: r(estimate.ci_hi).max(0.0),
            rate_hi: ExtReal::from_f64(r(estimate.ci_lo)),
        }
    }
}

/// Direction of the empirical rates along the horizon grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Successive bands overlap: no detectable drift.
    Stable,
    Increasing,
    Decreasing,
    Mixed,
    /// Fewer than two horizons with hits.
    Insufficient,
}

/// Empirical rates over a horizon grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub entries: Vec<RateEntry>,
    pub trend: Trend,
}

fn trend(entries: &[RateEntry]) -> Trend {
    let hit: Vec<&RateEntry> = entries.iter().filter(|e| e.rate.is_some()).collect();
    if hit.len() < 2 {
        return Trend::Insufficient;
    }
    let (mut up, mut down) = (false, false);
    for p in hit.windows(2) {
        // Only band-separated moves count as drift.
        if ExtReal::Finite(p[1].rate_lo) > p[0].rate_hi {
            up = true;
        } else if p[1].rate_hi < ExtReal::Finite(p[0].rate_lo) {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Stable,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    }
}

/// `−(1/t) ln P[W_t/t ∈ set]` with bands for each `t` (horizon `k` uses
/// stream `cfg.derive(k)`).
pub fn empirical_rate_curve(
    law: &PairLaw,
    set: &SetDescriptor,
    t_grid: &[f64],
    n_runs: u64,
    cfg: &McConfig,
) -> Result<RateCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("t grid must be nonempty and increasing".into()));
    }
    let entries = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| Ok(RateEntry::new(t, estimate_prob(law, t, set, n_runs, &cfg.derive(k as u64))?)))
        .collect::<Result<Vec<_>>>()?;
    let trend = trend(&entries);
    Ok(RateCurve { entries, trend })
}

/// Writes `t,p_hat,ci_lo,ci_hi,rate,rate_lo,rate_hi,hits,n_runs`; `rate` is
/// empty for zero-hit horizons.
pub fn write_rate_curve<W: Write>(out: W, entries: &[RateEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "p_hat", "ci_lo", "ci_hi", "rate", "rate_lo", "rate_hi", "hits", "n_runs"])?;
    for e in entries {
        let p = &e.estimate;
        w.write_record([
            fmt_f64(e.t),
            fmt_f64(p.p_hat),
            fmt_f64(p.ci_lo),
            fmt_f64(p.ci_hi),
            e.rate.map(fmt_f64).unwrap_or_default(),
            fmt_f64(e.rate_lo),
            e.rate_hi.to_string(),
            p.hits.to_string(),
            p.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of replaying trajectories against an exact event identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplayCheck {
    pub trajectories: u64,
    /// Trajectories on which the identity failed.
    pub mismatches: u64,
}

/// Replays `n` trajectories and checks, per trajectory, that
/// `{W_t/t ∈ A, T_p ≤ t < T_q}` coincides with the disjoint union over
/// `n ∈ [p, q)` of `{(1/t)Σ_{i≤n} X_i ∈ A, T_n ≤ t < T_{n+1}}`.
pub fn check_decomposition(
    law: &PairLaw,
    t: f64,
    set: &SetDescriptor,
    p: usize,
    q: usize,
    n: u64,
    cfg: &McConfig,
) -> Result<ReplayCheck> {
    set.check_for(law.dim())?;
    if p > q {
        return Err(Error::InvalidParameter("need p ≤ q".into()));
    }
    let arrival = |path: &Path, k: usize| if k == 0 { 0.0 } else { path.arrivals[k - 1] };
    let bad = cfg.batches(n, |rng, count| {
        let mut bad = 0u64;
        for _ in 0..count {
            let path = simulate_path(law, t, rng)?;
            let scaled = |v: &[f64]| v.iter().map(|a| a / t).collect::<Vec<_>>();
            let n_t = path.n_t();
            // T_p ≤ t < T_q with T_0 = 0; indices past the record exceed t.
            let in_window = p <= n_t && (q > n_t);
            let lhs = set.contains(&scaled(path.w_t())) && in_window;
            let cells = (p..q)
                .filter(|&k| k < path.partial_rewards.len() && k <= n_t)
                .filter(|&k| arrival(&path, k) <= t && t < arrival(&path, k + 1))
                .filter(|&k| set.contains(&scaled(&path.partial_rewards[k])))
                .count();
            bad += (cells > 1 || (cells == 1) != lhs) as u64;
        }
        Ok(bad)
    })?;
    Ok(ReplayCheck { trajectories: n, mismatches: bad.iter().sum() })
}

/// Replays `n` trajectories and checks that each falls in exactly one cell of
/// `{S_1 > t} ∪ ⋃_n {T_n ≤ t < T_{n+1}}`.
pub fn check_cell_partition(law: &PairLaw, t: f64, n: u64, cfg: &McConfig) -> Result<ReplayCheck> {
    let bad = cfg.batches(n, |rng, count| {
        let mut bad = 0u64;
        for _ in 0..count {
            let path = simulate_path(law, t, rng)?;
            let a = &path.arrivals;
            let first = usize::from(a[0] > t);
            let cells = (1..=a.len() - 1).filter(|&k| a[k - 1] <= t && t < a[k]).count();
            bad += (first + cells != 1) as u64;
        }
        Ok(bad)
    })?;
    Ok(ReplayCheck { trajectories: n, mismatches: bad.iter().sum() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn short_horizon_has_no_renewals() {
        let law = PairLaw::exp_unit(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = simulate_trajectory(&law, 1e-12, &mut rng).unwrap();
        assert_eq!((tr.n_t, tr.w_t[0], tr.t_last), (0, 0.0, 0.0));
        assert!(simulate_trajectory(&law, 0.0, &mut rng).is_err());
    }

    #[test]
    fn first_cauchy_coordinate_telescopes() {
        let law = PairLaw::gauss_tail_cauchy();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let tr = simulate_trajectory(&law, 25.0, &mut rng).unwrap();
            assert!((tr.w_t[0] - tr.t_last).abs() <= 1e-12 * tr.t.max(1.0));
            assert!(tr.t_last <= tr.t);
        }
    }

    #[test]
    fn estimates_do_not_depend_on_workers() {
        let law = PairLaw::exp_unit(1.0).unwrap();
        let set = SetDescriptor::closed_ball(vec![1.2], 0.1);
        let a = estimate_prob(&law, 20.0, &set, 10_000, &McConfig::new(3, 1)).unwrap();
        let b = estimate_prob(&law, 20.0, &set, 10_000, &McConfig::new(3, 3)).unwrap();
        assert_eq!(a, b);
        let c = estimate_prob(&law, 20.0, &set, 10_000, &McConfig::new(4, 1)).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn zero_hit_rows_leave_rate_empty() {
        let law = PairLaw::exp_unit(1.0).unwrap();
        let set = SetDescriptor::closed_ball(vec![-5.0], 0.1);
        let curve = empirical_rate_curve(&law, &set, &[5.0, 10.0], 1000, &McConfig::new(1, 1)).unwrap();
        let mut buf = Vec::new();
        write_rate_curve(&mut buf, &curve.entries).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[4], "");
        assert!(row[5].parse::<f64>().unwrap() > 0.0);
        assert_eq!(row[6], "+inf");
        assert_eq!(curve.trend, Trend::Insufficient);
    }

    #[test]
    fn identities_hold_on_replays() {
        let law = PairLaw::exp_unit(1.0).unwrap();
        let set = SetDescriptor::closed_ball(vec![1.0], 0.3);
        let cfg = McConfig::new(11, 2);
        let d = check_decomposition(&law, 10.0, &set, 5, 15, 1000, &cfg).unwrap();
        assert_eq!(d.mismatches, 0);
        let c = check_cell_partition(&PairLaw::gauss_tail_cauchy(), 3.0, 1000, &cfg).unwrap();
        assert_eq!(c.mismatches, 0);
    }
}
