//! Support-function evaluation of `Υ` and of the tail-mixed rates.
//!
//! With `K = {(ζ, φ) : Λ(ζ, φ) ≤ 0}`, the closed perspective envelope is the
//! support function of `K`, and for `β > 0`
//!
//! ```text
//! Υ(β, w) = sup_φ { β·ζ_max(φ) + φ·w },      ζ_max(φ) = sup{ζ : Λ(ζ, φ) ≤ 0},
//! ```
//!
//! where `ζ_max` is concave with gradient `−E_t[X]/E_t[S]` at the root, and
//! the optimal `γ` of the perspective problem is `β/E_t[S]`. Minimizing
//! `Υ(β, w) + (1 − β)ℓ` over `β ∈ [0, 1]` and exchanging inf and sup gives
//!
//! ```text
//! I_ℓ(w) = sup_φ { φ·w + min(ζ_max(φ), ℓ) },
//! ```
//!
//! a single concave maximization whose kink at `ζ_max = ℓ` carries the
//! mixing weight `β`.

use crate::cgf::{evaluate, zeta_edge, Eval};
use crate::model::PairLaw;
use crate::optim::{maximize_concave, Ascent, AscentStatus};

/// Search cap for the ζ root.
const ZETA_CAP: f64 = 1e12;

/// The largest feasible `ζ` for a fixed `φ`.
#[derive(Debug, Clone)]
pub(crate) struct ZetaMax {
    /// `sup{ζ : Λ(ζ, φ) ≤ 0}`; `−∞` when empty, `+∞` when unbounded.
    pub zeta: f64,
    /// Evaluation at a regular root `Λ(ζ, φ) = 0` (absent when the sup sits
    /// on the boundary of the effective domain).
    pub root: Option<Eval>,
}

impl ZetaMax {
    /// `∇_φ ζ_max = −∇_φΛ / ∂_ζΛ` over the given coordinates.
    pub fn gradient(&self, coords: &[usize]) -> Option<Vec<f64>> {
        let e = self.root.as_ref()?;
        let dz = e.d_zeta.filter(|d| *d > 0.0)?;
        coords.iter().map(|&k| e.d_phi[k].map(|g| -g / dz)).collect()
    }
}

/// Root of `ζ ↦ Λ(ζ, φ)` (convex, nondecreasing) by safeguarded Newton from
/// the right, with bisection on feasibility while no finite positive point is
/// known.
pub(crate) fn zeta_max(law: &PairLaw, phi: &[f64]) -> ZetaMax {
    let lam = |z: f64| evaluate(law, z, phi);
    let e0 = lam(0.0);
    // lo: feasible (Λ ≤ 0); hi: infeasible. pos: finite point with Λ > 0.
    let mut lo;
    let mut hi;
    let mut pos: Option<(f64, Eval)> = None;
    if e0.is_finite() && e0.value <= 0.0 {
        if e0.value == 0.0 && e0.d_zeta.is_some_and(|d| d > 0.0) {
            return ZetaMax { zeta: 0.0, root: Some(e0) };
        }
        lo = 0.0;
        let mut z = 1.0;
        loop {
            let e = lam(z);
            if !e.is_finite() {
                hi = z;
                break;
            }
            if e.value > 0.0 {
                hi = z;
                pos = Some((z, e));
                break;
            }
            lo = z;
            z *= 2.0;
            if z > ZETA_CAP {
                return ZetaMax { zeta: f64::INFINITY, root: None };
            }
        }
    } else {
        hi = 0.0;
        if e0.is_finite() {
            pos = Some((0.0, e0));
        }
        let mut z = -1.0;
        loop {
            let e = lam(z);
            if e.is_finite() && e.value <= 0.0 {
                lo = z;
                break;
            }
            hi = z;
            if e.is_finite() {
                pos = Some((z, e));
            }
            z *= 2.0;
            if z < -ZETA_CAP {
                return ZetaMax { zeta: f64::NEG_INFINITY, root: None };
            }
        }
    }
    // Probe just inside a known domain edge: settles the rootless case in one
    // evaluation instead of a bisection down to rounding level.
    let edge = zeta_edge(law);
    if pos.is_none() && lo < edge && edge <= hi {
        hi = edge;
        let z = edge - 4.0 * f64::EPSILON * (1.0 + edge.abs());
        if z > lo {
            let e = lam(z);
            if e.is_finite() && e.value <= 0.0 {
                return ZetaMax { zeta: z, root: (e.value == 0.0).then_some(e) };
            }
            hi = z;
            if e.is_finite() {
                pos = Some((z, e));
            }
        }
    }
    // Bisect on feasibility until a finite positive point appears.
    while pos.is_none() {
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + lo.abs()) {
            return ZetaMax { zeta: lo, root: None };
        }
        let mid = 0.5 * (lo + hi);
        let e = lam(mid);
        if e.is_finite() && e.value <= 0.0 {
            lo = mid;
            if e.value == 0.0 {
                return ZetaMax { zeta: mid, root: Some(e) };
            }
        } else {
            hi = mid;
            if e.is_finite() {
                pos = Some((mid, e));
            }
        }
    }
    let (mut z, mut e) = pos.unwrap();
    for _ in 0..200 {
        let dz = match e.d_zeta {
            Some(d) if d > 0.0 => d,
            _ => break,
        };
        let step = e.value / dz;
        let mut zn = z - step;
        if !(zn > lo) {
            zn = 0.5 * (lo + z);
        }
        let en = lam(zn);
        if !en.is_finite() {
            break;
        }
        if en.value <= 0.0 {
            // Rounding put us on (or just past) the root.
            return ZetaMax { zeta: zn, root: Some(en) };
        }
        let converged = (z - zn).abs() <= 4.0 * f64::EPSILON * (1.0 + zn.abs());
        z = zn;
        e = en;
        if converged {
            return ZetaMax { zeta: z, root: Some(e) };
        }
    }
    // Fallback: plain bisection between lo (feasible) and z (positive).
    let mut hi = z;
    let mut best = None;
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let e = lam(mid);
        if e.is_finite() && e.value <= 0.0 {
            lo = mid;
            best = Some(e);
        } else {
            hi = mid;
        }
    }
    ZetaMax { zeta: lo, root: best }
}

/// Reward coordinates in which `Λ` is finite on both sides of `φ_k = 0`.
/// The others (e.g. a Cauchy coordinate) are pinned at `φ_k = 0`, which
/// loses nothing: `Λ = +∞` off that hyperplane.
pub(crate) fn free_coordinates(law: &PairLaw) -> Vec<usize> {
    let d = law.dim();
    (0..d)
        .filter(|&k| {
            let mut phi = vec![0.0; d];
            phi[k] = 1e-6;
            let up = evaluate(law, -1.0, &phi).is_finite();
            phi[k] = -1e-6;
            let dn = evaluate(law, -1.0, &phi).is_finite();
            up || dn
        })
        .collect()
}

/// Outcome of a support-function maximization.
#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub ascent: Ascent,
    /// Full-length `φ*` (pinned coordinates are zero).
    pub phi: Vec<f64>,
    pub zeta: ZetaMax,
}

/// `sup_φ { β·min(ζ_max(φ), cap) + φ·w }` over the free coordinates, starting
/// from `start` (full-length `φ`).
pub(crate) fn solve(law: &PairLaw, beta: f64, w: &[f64], cap: f64, free: &[usize], start: &[f64], r_max: f64) -> DualSolution {
    let d = law.dim();
    let embed = |x: &[f64]| {
        let mut phi = vec![0.0; d];
        for (i, &k) in free.iter().enumerate() {
            phi[k] = x[i];
        }
        phi
    };
    let objective = |x: &[f64]| {
        let phi = embed(x);
        let zm = zeta_max(law, &phi);
        let lin: f64 = phi.iter().zip(w).map(|(p, v)| p * v).sum();
        if zm.zeta == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, None);
        }
        let z = zm.zeta.min(cap);
        let value = beta * z + lin;
        let grad = if zm.zeta > cap || zm.root.is_none() {
            Some(free.iter().map(|&k| w[k]).collect())
        } else {
            zm.gradient(free).map(|g| g.iter().zip(free).map(|(gi, &k)| w[k] + beta * gi).collect())
        };
        (value, grad)
    };
    if free.is_empty() {
        let (value, _) = objective(&[]);
        let zeta = zeta_max(law, &vec![0.0; d]);
        return DualSolution {
            ascent: Ascent { x: vec![], value, status: AscentStatus::Interior, iterations: 1 },
            phi: vec![0.0; d],
            zeta,
        };
    }
    let x0: Vec<f64> = free.iter().map(|&k| start[k]).collect();
    let ascent = maximize_concave(objective, &x0, r_max);
    let phi = embed(&ascent.x);
    let zeta = zeta_max(law, &phi);
    DualSolution { ascent, phi, zeta }
}
