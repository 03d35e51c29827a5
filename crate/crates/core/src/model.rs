//! Waiting-time/reward pair laws.
//!
//! A [`PairLaw`] is the joint law of one pair `(S, X)` with `S > 0` and
//! `X ∈ R^d`, `d ∈ {1, 2, 3}`. Besides a sampler it carries the tail
//! exponents of the waiting time,
//!
//! ```text
//! ℓ_i = −liminf_{s→∞} (1/s) ln P[S > s],   ℓ_s = −limsup_{s→∞} (1/s) ln P[S > s],
//! ```
//!
//! which enter the process-level rate functions.
//!
//! Built-in families:
//!
//! | family              | waiting time             | reward                         |
//! |---------------------|--------------------------|--------------------------------|
//! | `exp_unit`          | Exponential(λ)           | `1` (counting process)         |
//! | `exp_gauss`         | Exponential(λ)           | Gaussian(m, Σ), independent    |
//! | `gauss_tail_cauchy` | `P[S > s] = e^{−s²}`     | `(S, Z)`, `Z` standard Cauchy  |
//! | `reward_of_wait`    | Exponential(λ) or above  | `f(S)`, `f` sublinear          |
//! | `oscillating_tail`  | dyadic hazard, `ℓ_s<ℓ_i` | `S` or `1`                     |
//! | `empirical`         | bootstrap of a sample    | bootstrap of a sample          |
//!
//! The oscillating family uses a piecewise-linear cumulative hazard `H`
//! (`P[S > s] = e^{−H(s)}`) whose ratio `H(s)/s` alternates between `ℓ_s` and
//! `ℓ_i` on the block boundaries `r^k`, `r = 2^m ≥ ℓ_i/ℓ_s`; between boundaries
//! the ratio is monotone, so the liminf/limsup are attained exactly there.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Minimum number of rows for an empirical law.
pub const MIN_EMPIRICAL_SAMPLES: usize = 100;

/// One draw of the pair `(S, X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub x: Vec<f64>,
}

/// Tail exponents of the waiting time, `0 ≤ ℓ_s ≤ ℓ_i ≤ +∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSpec {
    pub ell_i: ExtReal,
    pub ell_s: ExtReal,
    /// `true` when the exponents were estimated from data (low confidence).
    pub estimated: bool,
}

impl TailSpec {
    pub fn new(ell_s: ExtReal, ell_i: ExtReal) -> Result<Self> {
        if ell_s.to_f64() < 0.0 || ell_s > ell_i {
            return Err(Error::InvalidParameter(format!(
                "tail exponents must satisfy 0 ≤ ell_s ≤ ell_i, got ell_s = {ell_s}, ell_i = {ell_i}"
            )));
        }
        Ok(Self { ell_i, ell_s, estimated: false })
    }

    pub fn equal(ell: ExtReal) -> Self {
        Self { ell_i: ell, ell_s: ell, estimated: false }
    }
}

/// Waiting-time law underlying `reward_of_wait`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaitBase {
    Exponential {
        rate: f64,
    },
    /// `P[S > s] = e^{−s²}`.
    GaussTail,
}

impl WaitBase {
    fn validate(&self) -> Result<()> {
        match *self {
            WaitBase::Exponential { rate } => check_rate(rate),
            WaitBase::GaussTail => Ok(()),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        match *self {
            WaitBase::Exponential { rate } => -u.ln() / rate,
            WaitBase::GaussTail => (-u.ln()).sqrt(),
        }
    }

    /// Log density of `S` at `s > 0`.
    pub(crate) fn log_density(&self, s: f64) -> f64 {
        match *self {
            WaitBase::Exponential { rate } => rate.ln() - rate * s,
            WaitBase::GaussTail => (2.0 * s).ln() - s * s,
        }
    }

    fn log_survival(&self, s: f64) -> f64 {
        match *self {
            WaitBase::Exponential { rate } => -rate * s,
            WaitBase::GaussTail => -s * s,
        }
    }

    /// Right end of the ζ-domain of `E[e^{ζS}]` (`+∞` for the Gaussian tail).
    pub(crate) fn zeta_bound(&self) -> f64 {
        match *self {
            WaitBase::Exponential { rate } => rate,
            WaitBase::GaussTail => f64::INFINITY,
        }
    }

    fn tail(&self) -> TailSpec {
        match *self {
            WaitBase::Exponential { rate } => TailSpec::equal(ExtReal::Finite(rate)),
            WaitBase::GaussTail => TailSpec::equal(ExtReal::PosInf),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            WaitBase::Exponential { rate } => 1.0 / rate,
            WaitBase::GaussTail => PI.sqrt() / 2.0,
        }
    }
}

/// Sublinear reward maps `f` with `X = f(S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardMap {
    Sqrt,
    Log1p,
    /// `scale · s^exponent` with `0 ≤ exponent < 1`.
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl RewardMap {
    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            RewardMap::Sqrt => s.sqrt(),
            RewardMap::Log1p => s.ln_1p(),
            RewardMap::Power { scale, exponent } => scale * s.powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RewardMap::Power { scale, exponent } if !(scale.is_finite() && (0.0..1.0).contains(&exponent)) => {
                Err(Error::InvalidParameter(format!(
                    "power reward needs finite scale and exponent in [0, 1), got {scale}, {exponent}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Reward attached to an oscillating-tail waiting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscReward {
    /// `X = S` (cumulative reward equals elapsed renewal time).
    #[default]
    Wait,
    /// `X = 1` (counting process).
    Unit,
}

/// Piecewise-linear cumulative hazard with dyadic blocks; see module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicHazard {
    lo: f64,
    hi: f64,
    ratio: f64,
    slope_hi: f64,
    slope_lo: f64,
}

/// One linear piece of the hazard: `[start, start + len)` with slope `slope`
/// and `H(start) = h_start`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HazardSegment {
    pub start: f64,
    pub len: f64,
    pub slope: f64,
    pub h_start: f64,
}

impl DyadicHazard {
    pub fn new(ell_s: f64, ell_i: f64) -> Result<Self> {
        if !(ell_s > 0.0 && ell_s <= ell_i && ell_i.is_finite()) {
            return Err(Error::InvalidParameter(format!("oscillating tail needs 0 < ell_s ≤ ell_i < ∞, got ({ell_s}, {ell_i})")));
        }
        let m = ((ell_i / ell_s).log2().ceil()).max(1.0);
        let r = 2f64.powf(m);
        Ok(Self {
            lo: ell_s,
            hi: ell_i,
            ratio: r,
            slope_hi: (r * ell_i - ell_s) / (r - 1.0),
            slope_lo: ((r * ell_s - ell_i) / (r - 1.0)).max(0.0),
        })
    }

    /// Block ratio `r`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn ell_s(&self) -> f64 {
        self.lo
    }

    pub fn ell_i(&self) -> f64 {
        self.hi
    }

    /// The `k`-th linear piece: piece 0 is `[0, 1)`, piece `k ≥ 1` is
    /// `[r^{k−1}, r^k)`.
    pub(crate) fn segment(&self, k: u32) -> HazardSegment {
        if k == 0 {
            return HazardSegment { start: 0.0, len: 1.0, slope: self.lo, h_start: 0.0 };
        }
        let j = k - 1;
        let start = self.ratio.powi(j as i32);
        let (slope, level) = if j.is_multiple_of(2) { (self.slope_hi, self.lo) } else { (self.slope_lo, self.hi) };
        HazardSegment { start, len: start * (self.ratio - 1.0), slope, h_start: start * level }
    }

    /// `H(s)`.
    pub fn cumulative(&self, s: f64) -> f64 {
        let mut k = 0;
        loop {
            let seg = self.segment(k);
            if s < seg.start + seg.len {
                return seg.h_start + seg.slope * (s - seg.start).max(0.0);
            }
            k += 1;
        }
    }

    /// `H^{-1}(e)` for `e ≥ 0`.
    pub fn inverse(&self, e: f64) -> f64 {
        let mut k = 0;
        loop {
            let seg = self.segment(k);
            let h_end = seg.h_start + seg.slope * seg.len;
            if e < h_end {
                return seg.start + (e - seg.h_start) / seg.slope;
            }
            k += 1;
        }
    }

    /// `E[S] = ∫ e^{−H(s)} ds`.
    pub fn mean(&self) -> f64 {
        let mut total = 0.0;
        for k in 0.. {
            let seg = self.segment(k);
            let piece = if seg.slope == 0.0 { seg.len } else { -(-seg.slope * seg.len).exp_m1() / seg.slope };
            total += (-seg.h_start).exp() * piece;
            if seg.h_start > 60.0 + total.ln().abs() {
                break;
            }
        }
        total
    }
}

/// Family tag with its parameters.
#[derive(Debug, Clone)]
pub enum Family {
    ExpUnit { rate: f64 },
    ExpGauss { rate: f64, mean: Vec<f64>, cov: Vec<Vec<f64>>, chol: Vec<Vec<f64>> },
    GaussTailCauchy,
    RewardOfWait { base: WaitBase, map: RewardMap },
    OscillatingTail { hazard: DyadicHazard, reward: OscReward },
    Empirical { samples: Arc<EmpiricalSamples> },
}

/// Row-major storage of an empirical sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSamples {
    pub dim: usize,
    pub s: Vec<f64>,
    /// `x[i * dim + k]` is coordinate `k` of row `i`.
    pub x: Vec<f64>,
}

impl EmpiricalSamples {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_samples(&self) -> Vec<Sample> {
        (0..self.len()).map(|i| Sample { s: self.s[i], x: self.row(i).to_vec() }).collect()
    }
}

/// Declarative law description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    ExpUnit {
        rate: f64,
    },
    ExpGauss {
        rate: f64,
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    GaussTailCauchy,
    RewardOfWait {
        base: WaitBase,
        map: RewardMap,
    },
    OscillatingTail {
        ell_s: f64,
        ell_i: f64,
        #[serde(default)]
        reward: OscReward,
    },
    Empirical {
        path: std::path::PathBuf,
    },
}

impl LawSpec {
    /// Builds the law (the `make_law` entry point for configuration data).
    pub fn build(&self) -> Result<PairLaw> {
        match self {
            LawSpec::ExpUnit { rate } => PairLaw::exp_unit(*rate),
            LawSpec::ExpGauss { rate, mean, cov } => PairLaw::exp_gauss(*rate, mean.clone(), cov.clone()),
            LawSpec::GaussTailCauchy => Ok(PairLaw::gauss_tail_cauchy()),
            LawSpec::RewardOfWait { base, map } => PairLaw::reward_of_wait(*base, *map),
            LawSpec::OscillatingTail { ell_s, ell_i, reward } => PairLaw::oscillating_tail(*ell_s, *ell_i, *reward),
            LawSpec::Empirical { path } => PairLaw::from_csv(path),
        }
    }
}

/// Joint law of one waiting-time/reward pair. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct PairLaw {
    family: Family,
    dim: usize,
    tail: TailSpec,
    label: String,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rate must be positive and finite, got {rate}")))
    }
}

/// Cholesky factor of a symmetric positive semidefinite matrix; zero pivots
/// (within tolerance) are allowed when the remaining column vanishes too.
fn psd_cholesky(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = cov.len();
    let scale = cov.iter().enumerate().map(|(i, r)| r[i].abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    for (i, row) in cov.iter().enumerate() {
        for j in 0..d {
            if !row[j].is_finite() || (row[j] - cov[j][i]).abs() > tol {
                return Err(Error::InvalidParameter("covariance must be finite and symmetric".into()));
            }
        }
    }
    let mut l = vec![vec![0.0; d]; d];
    for j in 0..d {
        let pivot = cov[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -tol {
            return Err(Error::InvalidParameter("covariance is not positive semidefinite".into()));
        }
        if pivot <= tol {
            for i in j + 1..d {
                let rest = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if rest.abs() > 1e-9 * scale {
                    return Err(Error::InvalidParameter("covariance is not positive semidefinite".into()));
                }
            }
            continue;
        }
        l[j][j] = pivot.sqrt();
        for i in j + 1..d {
            l[i][j] = (cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    Ok(l)
}

impl PairLaw {
    /// Exponential(λ) waiting times with unit rewards (the counting process).
    pub fn exp_unit(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self {
            family: Family::ExpUnit { rate },
            dim: 1,
            tail: TailSpec::equal(ExtReal::Finite(rate)),
            label: format!("exp_unit(rate={rate})"),
        })
    }

    /// Exponential(λ) waiting times with independent Gaussian(m, Σ) rewards.
    pub fn exp_gauss(rate: f64, mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        check_rate(rate)?;
        let d = mean.len();
        if !(1..=3).contains(&d) || cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "exp_gauss needs mean of length 1..=3 and a matching square covariance, got d = {d}"
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        let chol = psd_cholesky(&cov)?;
        let label = format!("exp_gauss(rate={rate}, mean={mean:?}, cov={cov:?})");
        Ok(Self {
            family: Family::ExpGauss { rate, mean, cov, chol },
            dim: d,
            tail: TailSpec::equal(ExtReal::Finite(rate)),
            label,
        })
    }

    /// `P[S > s] = e^{−s²}`, `X = (S, Z)` with `Z` standard Cauchy.
    pub fn gauss_tail_cauchy() -> Self {
        Self {
            family: Family::GaussTailCauchy,
            dim: 2,
            tail: TailSpec::equal(ExtReal::PosInf),
            label: "gauss_tail_cauchy".into(),
        }
    }

    /// `X = f(S)` for a sublinear `f`.
    pub fn reward_of_wait(base: WaitBase, map: RewardMap) -> Result<Self> {
        base.validate()?;
        map.validate()?;
        Ok(Self {
            family: Family::RewardOfWait { base, map },
            dim: 1,
            tail: base.tail(),
            label: format!("reward_of_wait(base={base:?}, map={map:?})"),
        })
    }

    /// Waiting time with oscillating tail exponents `ℓ_s < ℓ_i`.
    pub fn oscillating_tail(ell_s: f64, ell_i: f64, reward: OscReward) -> Result<Self> {
        let hazard = DyadicHazard::new(ell_s, ell_i)?;
        Ok(Self {
            family: Family::OscillatingTail { hazard, reward },
            dim: 1,
            tail: TailSpec::new(ExtReal::Finite(ell_s), ExtReal::Finite(ell_i))?,
            label: format!("oscillating_tail(ell_s={ell_s}, ell_i={ell_i}, reward={reward:?})"),
        })
    }

    /// Bootstrap law of a sample set; tail exponents are estimated by a
    /// least-squares fit of `−ln(survival)` against `s` on the top decile.
    pub fn empirical(samples: &[Sample]) -> Result<Self> {
        if samples.len() < MIN_EMPIRICAL_SAMPLES {
            return Err(Error::TooFewSamples { needed: MIN_EMPIRICAL_SAMPLES, got: samples.len() });
        }
        let dim = samples[0].x.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("reward dimension must be 1..=3, got {dim}")));
        }
        let mut store = EmpiricalSamples { dim, s: Vec::with_capacity(samples.len()), x: Vec::new() };
        for (i, p) in samples.iter().enumerate() {
            if p.x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.x.len() });
            }
            if !(p.s > 0.0 && p.s.is_finite()) || p.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("row {i}: need s > 0 and finite rewards")));
            }
            store.s.push(p.s);
            store.x.extend_from_slice(&p.x);
        }
        let ell = ExtReal::Finite(top_decile_slope(&store.s).max(0.0));
        Ok(Self {
            family: Family::Empirical { samples: Arc::new(store) },
            dim,
            tail: TailSpec { ell_i: ell, ell_s: ell, estimated: true },
            label: format!("empirical(n={})", samples.len()),
        })
    }

    /// Reads `s,x1[,x2[,x3]]` rows and builds an empirical law.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let samples = read_samples_csv(path.as_ref())?;
        let mut law = Self::empirical(&samples)?;
        law.label = format!("empirical(path={}, n={})", path.as_ref().display(), samples.len());
        Ok(law)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> TailSpec {
        self.tail
    }

    /// Human-readable family and parameters.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Closed form of `Λ(ζ, φ)` when the family has one.
    pub fn analytic_cgf(&self) -> Option<&'static str> {
        match self.family {
            Family::ExpUnit { .. } => Some("φ − ln(1 − ζ/λ) for ζ < λ, +∞ otherwise"),
            Family::ExpGauss { .. } => Some("−ln(1 − ζ/λ) + φ·m + φ·Σφ/2 for ζ < λ, +∞ otherwise"),
            Family::OscillatingTail { .. } => Some("log of a convergent sum over the hazard's linear pieces"),
            _ => None,
        }
    }

    /// `ln P[S > s]` when the family has a closed-form survival function.
    pub fn log_survival(&self, s: f64) -> Option<f64> {
        if s <= 0.0 {
            return Some(0.0);
        }
        match &self.family {
            Family::ExpUnit { rate } | Family::ExpGauss { rate, .. } => Some(-rate * s),
            Family::GaussTailCauchy => Some(-s * s),
            Family::RewardOfWait { base, .. } => Some(base.log_survival(s)),
            Family::OscillatingTail { hazard, .. } => Some(-hazard.cumulative(s)),
            Family::Empirical { .. } => None,
        }
    }

    /// Draws the waiting time and writes the reward into `x` (length `dim`).
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.family {
            Family::ExpUnit { rate } => {
                x[0] = 1.0;
                let u: f64 = rng.sample(Open01);
                -u.ln() / rate
            }
            Family::ExpGauss { rate, mean, chol, .. } => {
                let u: f64 = rng.sample(Open01);
                let s = -u.ln() / rate;
                let mut z = [0.0; 3];
                for zk in z.iter_mut().take(self.dim) {
                    *zk = rng.sample(StandardNormal);
                }
                for i in 0..self.dim {
                    x[i] = mean[i] + (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>();
                }
                s
            }
            Family::GaussTailCauchy => {
                let u: f64 = rng.sample(Open01);
                let s = (-u.ln()).sqrt();
                let v: f64 = rng.sample(Open01);
                x[0] = s;
                x[1] = (PI * (v - 0.5)).tan();
                s
            }
            Family::RewardOfWait { base, map } => {
                let s = base.sample(rng);
                x[0] = map.apply(s);
                s
            }
            Family::OscillatingTail { hazard, reward } => {
                let u: f64 = rng.sample(Open01);
                let s = hazard.inverse(-u.ln());
                x[0] = match reward {
                    OscReward::Wait => s,
                    OscReward::Unit => 1.0,
                };
                s
            }
            Family::Empirical { samples } => {
                let i = rng.random_range(0..samples.len());
                x.copy_from_slice(samples.row(i));
                samples.s[i]
            }
        }
    }

    /// One i.i.d. draw; deterministic given the stream state.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let mut x = vec![0.0; self.dim];
        let s = self.sample_into(rng, &mut x);
        Sample { s, x }
    }

    /// `(E[S], E[X])`, or `None` when a moment does not exist.
    pub fn mean(&self) -> Option<(f64, Vec<f64>)> {
        match &self.family {
            Family::ExpUnit { rate } => Some((1.0 / rate, vec![1.0])),
            Family::ExpGauss { rate, mean, .. } => Some((1.0 / rate, mean.clone())),
            Family::GaussTailCauchy => None,
            Family::RewardOfWait { base, map } => {
                let es = base.mean();
                let m = crate::quad::tilted_half_line(|s| base.log_density(s), |s| map.apply(s))?;
                Some((es, vec![m.mean_g]))
            }
            Family::OscillatingTail { hazard, reward } => {
                let es = hazard.mean();
                let ex = match reward {
                    OscReward::Wait => es,
                    OscReward::Unit => 1.0,
                };
                Some((es, vec![ex]))
            }
            Family::Empirical { samples } => {
                let n = samples.len() as f64;
                let es = samples.s.iter().sum::<f64>() / n;
                let ex = (0..samples.dim).map(|k| (0..samples.len()).map(|i| samples.row(i)[k]).sum::<f64>() / n).collect();
                Some((es, ex))
            }
        }
    }
}

/// Free-function form of [`PairLaw::sample_pair`].
pub fn sample_pair<R: Rng + ?Sized>(law: &PairLaw, rng: &mut R) -> Sample {
    law.sample_pair(rng)
}

/// Free-function form of [`PairLaw::mean`].
pub fn law_mean(law: &PairLaw) -> Option<(f64, Vec<f64>)> {
    law.mean()
}

/// Least-squares slope of `−ln(empirical survival)` against `s` over the
/// largest 10% of the waiting times.
fn top_decile_slope(s: &[f64]) -> f64 {
    let mut sorted = s.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let start = n - (n / 10).max(2);
    let pts: Vec<(f64, f64)> = (start..n).map(|i| (sorted[i], -(((n - i) as f64) / (n as f64 + 1.0)).ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / m, a.1 + p.1 / m));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Parses an `s,x1[,x2[,x3]]` CSV file.
pub fn read_samples_csv(path: &Path) -> Result<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let d = headers.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("s".to_string()).chain((1..=d).map(|k| format!("x{k}"))).collect();
    if !(1..=3).contains(&d) || headers.iter().zip(&expected).any(|(h, e)| h != e) {
        return Err(Error::Input(format!(
            "{}: header must be `s,x1[,x2[,x3]]`, got `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| Error::Input(format!("{} row {}: {e}", path.display(), i + 1)))?;
        out.push(Sample { s: vals[0], x: vals[1..].to_vec() });
    }
    Ok(out)
}

/// Writes samples as an `s,x1[,x2[,x3]]` CSV file (17 significant digits).
pub fn write_samples_csv(path: &Path, samples: &[Sample]) -> Result<()> {
    let d = samples.first().map_or(1, |p| p.x.len());
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = std::iter::once("s".to_string()).chain((1..=d).map(|k| format!("x{k}"))).collect();
    w.write_record(&header)?;
    for p in samples {
        let row: Vec<String> = std::iter::once(p.s).chain(p.x.iter().copied()).map(crate::ext::fmt_f64).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_specs_of_builtin_families() {
        let e = PairLaw::exp_unit(1.0).unwrap();
        assert_eq!(e.tail(), TailSpec::equal(ExtReal::Finite(1.0)));
        assert_eq!(PairLaw::gauss_tail_cauchy().tail().ell_s, ExtReal::PosInf);
        let o = PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait).unwrap();
        assert_eq!((o.tail().ell_s, o.tail().ell_i), (ExtReal::Finite(1.0), ExtReal::Finite(2.0)));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(PairLaw::exp_unit(0.0).is_err());
        assert!(PairLaw::exp_unit(-1.0).is_err());
        assert!(PairLaw::exp_gauss(1.0, vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(PairLaw::oscillating_tail(2.0, 1.0, OscReward::Wait).is_err());
        assert!(PairLaw::reward_of_wait(WaitBase::GaussTail, RewardMap::Power { scale: 1.0, exponent: 1.0 }).is_err());
        // Semidefinite covariance is fine.
        assert!(PairLaw::exp_gauss(1.0, vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]]).is_ok());
    }

    #[test]
    fn means() {
        assert_eq!(PairLaw::exp_unit(1.0).unwrap().mean(), Some((1.0, vec![1.0])));
        let g = PairLaw::exp_gauss(2.0, vec![3.0], vec![vec![1.0]]).unwrap();
        assert_eq!(g.mean(), Some((0.5, vec![3.0])));
        assert_eq!(PairLaw::gauss_tail_cauchy().mean(), None);
        // E[√S] for S ~ Exp(1) is Γ(3/2) = √π/2.
        let r = PairLaw::reward_of_wait(WaitBase::Exponential { rate: 1.0 }, RewardMap::Sqrt).unwrap();
        let (es, ex) = r.mean().unwrap();
        assert_relative_eq!(es, 1.0);
        assert_relative_eq!(ex[0], PI.sqrt() / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn samples_are_positive_and_shaped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let laws = [
            PairLaw::exp_unit(1.0).unwrap(),
            PairLaw::gauss_tail_cauchy(),
            PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait).unwrap(),
        ];
        for law in &laws {
            for _ in 0..1000 {
                let p = law.sample_pair(&mut rng);
                assert!(p.s > 0.0);
                assert_eq!(p.x.len(), law.dim());
            }
        }
        let p = laws[0].sample_pair(&mut rng);
        assert_eq!(p.x, vec![1.0]);
        let p = laws[1].sample_pair(&mut rng);
        assert_eq!(p.x[0], p.s);
    }

    #[test]
    fn exp_gauss_sample_mean_of_wait() {
        let law = PairLaw::exp_gauss(1.0, vec![0.0], vec![vec![1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| law.sample_pair(&mut rng).s).sum::<f64>() / n as f64;
        // CLT band: 5 standard errors of Exp(1).
        assert!((mean - 1.0).abs() < 5.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn dyadic_hazard_ratios_alternate() {
        let h = DyadicHazard::new(1.0, 2.0).unwrap();
        for k in 0..12 {
            let s = h.ratio().powi(k);
            let expected = if k % 2 == 0 { 1.0 } else { 2.0 };
            assert_relative_eq!(h.cumulative(s) / s, expected, max_relative = 1e-12);
        }
        for e in [0.1, 0.9, 1.5, 3.7, 4.0, 17.0, 100.0] {
            assert_relative_eq!(h.cumulative(h.inverse(e)), e, max_relative = 1e-12);
        }
        // Non-power-of-two ratio of exponents.
        let h = DyadicHazard::new(0.5, 1.7).unwrap();
        assert_eq!(h.ratio(), 4.0);
        assert_relative_eq!(h.cumulative(4.0) / 4.0, 1.7, max_relative = 1e-12);
        assert_relative_eq!(h.cumulative(16.0) / 16.0, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn oscillating_mean_matches_monte_carlo() {
        let law = PairLaw::oscillating_tail(1.0, 2.0, OscReward::Wait).unwrap();
        let (es, _) = law.mean().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000;
        let mc = (0..n).map(|_| law.sample_pair(&mut rng).s).sum::<f64>() / n as f64;
        assert!((mc - es).abs() < 5.0 * 1.0 / (n as f64).sqrt(), "{mc} vs {es}");
    }

    #[test]
    fn empirical_round_trip_and_tail_fit() {
        let law = PairLaw::exp_unit(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Sample> = (0..20_000).map(|_| law.sample_pair(&mut rng)).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        write_samples_csv(&path, &samples).unwrap();
        let emp = PairLaw::from_csv(&path).unwrap();
        assert_eq!(emp.dim(), 1);
        assert!(emp.tail().estimated);
        let ell = emp.tail().ell_i.finite().unwrap();
        assert!((ell - 2.0).abs() < 0.4, "tail estimate {ell}");
        assert!(PairLaw::empirical(&samples[..50]).is_err());
    }

    #[test]
    fn csv_header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,y\n1,2\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(Error::Input(_))));
    }
}
