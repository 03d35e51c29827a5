//! Infimum of a rate function over an event set.
//!
//! Rate functions are convex, so when the law-of-large-numbers point
//! `E[X]/E[S]` lies in the set the infimum is `0`; otherwise it sits on the
//! boundary for half-spaces and is found by restarted Nelder–Mead (golden
//! section in one dimension) for balls and general sets. Every result is
//! compared against a final local grid around the minimizer.
//!
//! Open sets are shrunk by [`OPEN_SET_MARGIN`]: a convex rate function can
//! jump to `+∞` across the boundary of an open set, and the infimum over the
//! open set is the limit over its closed inner approximations.

use serde::Serialize;

use super::{cramer_j, rate_i, Bound, RateOptions};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::model::{law_mean, PairLaw};
use crate::optim::{golden_min, nelder_mead};
use crate::sets::SetDescriptor;

/// Inward margin applied to strict inequalities.
pub const OPEN_SET_MARGIN: f64 = 1e-5;

/// Certification tolerance of the local grid check.
const CERT_TOL: f64 = 1e-4;

/// Minimizers beyond this norm mean the infimum may be approached at infinity.
const FAR: f64 = 1e3;

/// Infimum of a rate over a set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetInf {
    pub value: ExtReal,
    /// Best point found (absent when the rate is `+∞` at every probe).
    pub argmin: Option<Vec<f64>>,
    /// The local grid found nothing lower by more than `10⁻⁴` and the
    /// minimizer stayed bounded.
    pub certified: bool,
}

/// Membership in the set with open constraints pulled in by `m`.
fn inside(set: &SetDescriptor, w: &[f64], m: f64) -> bool {
    match set {
        SetDescriptor::OpenBall { center, radius } => dist(w, center) <= radius - m,
        SetDescriptor::HalfSpace { normal, offset, strict: true } => dot(normal, w) <= offset - m * norm(normal),
        SetDescriptor::Hyperbolic => w[0] <= 1.0 - m && (1.0 - w[0]) * w[1] >= 1.0,
        SetDescriptor::Intersection { parts } => parts.iter().all(|p| inside(p, w, m)),
        other => other.contains(w),
    }
}

/// `inf_{w ∈ set} I(w)` with `I = I_i` (`Bound::Lower`) or `I_s` (`Bound::Upper`).
pub fn rate_inf_over_set(law: &PairLaw, set: &SetDescriptor, which: Bound, opts: &RateOptions) -> Result<SetInf> {
    set.check_for(law.dim())?;
    if matches!(set, SetDescriptor::BoxProduct { .. }) {
        return Err(Error::InvalidParameter("box products live in pair space; use cramer_inf_over_product".into()));
    }
    let m = OPEN_SET_MARGIN;
    if let Some((s, x)) = law_mean(law) {
        let v: Vec<f64> = x.iter().map(|xi| xi / s).collect();
        if inside(set, &v, m) {
            return Ok(SetInf { value: ExtReal::ZERO, argmin: Some(v), certified: true });
        }
    }
    let f = |w: &[f64]| rate_i(law, w, which, opts).map_or(f64::INFINITY, |r| r.value.to_f64());
    let feasible = |w: &[f64]| inside(set, w, m);
    let (best, bounded) = match set {
        SetDescriptor::OpenBall { center, radius } | SetDescriptor::ClosedBall { center, radius } => {
            let r = if set.is_open() { radius - m } else { *radius };
            (minimize_ball(&f, center, r), true)
        }
        SetDescriptor::HalfSpace { normal, offset, strict } => {
            let b = if *strict { offset - m * norm(normal) } else { *offset };
            (minimize_half_space(&f, normal, b), false)
        }
        SetDescriptor::Hyperbolic => (minimize_hyperbolic(&f, m), false),
        SetDescriptor::Intersection { parts } => {
            let seeds: Vec<Vec<f64>> = parts.iter().flat_map(seed_points).filter(|w| feasible(w)).collect();
            let bounded = parts.iter().any(|p| matches!(p, SetDescriptor::OpenBall { .. } | SetDescriptor::ClosedBall { .. }));
            (minimize_penalized(&f, &feasible, &seeds), bounded)
        }
        SetDescriptor::BoxProduct { .. } => unreachable!("rejected above"),
    };
    Ok(certify(&f, &feasible, best, bounded))
}

/// `inf { J(s, w) : lo ≤ s ≤ hi, w ∈ inner }` over a pair-space product.
pub fn cramer_inf_over_product(law: &PairLaw, set: &SetDescriptor, opts: &RateOptions) -> Result<SetInf> {
    let SetDescriptor::BoxProduct { lo, hi, inner } = set else {
        return Err(Error::InvalidParameter("expected a box_product set".into()));
    };
    set.check_for(law.dim())?;
    let m = OPEN_SET_MARGIN;
    let feasible = |p: &[f64]| *lo <= p[0] && p[0] <= *hi && inside(inner, &p[1..], m);
    if let Some((s, x)) = law_mean(law) {
        let mut p = vec![s];
        p.extend(x);
        if feasible(&p) {
            return Ok(SetInf { value: ExtReal::ZERO, argmin: Some(p), certified: true });
        }
    }
    let f = |p: &[f64]| cramer_j(law, p[0], &p[1..], opts).map_or(f64::INFINITY, |r| r.value.to_f64());
    let mid = 0.5 * (lo + hi);
    let s_seeds = [mid, *lo, *hi, lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)];
    let seeds: Vec<Vec<f64>> = seed_points(inner)
        .into_iter()
        .flat_map(|w| {
            s_seeds.iter().map(move |&s| {
                let mut p = vec![s];
                p.extend(&w);
                p
            })
        })
        .filter(|p| feasible(p))
        .collect();
    let best = minimize_penalized(&f, &feasible, &seeds);
    let bounded = matches!(**inner, SetDescriptor::OpenBall { .. } | SetDescriptor::ClosedBall { .. });
    Ok(certify(&f, &feasible, best, bounded))
}

type Best = Option<(Vec<f64>, f64)>;

fn consider(best: &mut Best, x: Vec<f64>, v: f64) {
    if best.as_ref().is_none_or(|b| v < b.1) {
        *best = Some((x, v));
    }
}

/// 1-D minimization of a convex extended-valued function on `[a, b]`:
/// a coarse grid finds the finite region, golden section refines.
fn minimize_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const N: usize = 40;
    let xs: Vec<f64> = (0..=N).map(|i| a + (b - a) * i as f64 / N as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let i = (0..=N).min_by(|&i, &j| vs[i].total_cmp(&vs[j])).unwrap();
    if !vs[i].is_finite() {
        return (xs[i], vs[i]);
    }
    let g = golden_min(f, xs[i.saturating_sub(1)], xs[(i + 1).min(N)], 0.0, 1e-10 * (1.0 + xs[i].abs()));
    if g.fx <= vs[i] {
        (g.x, g.fx)
    } else {
        (xs[i], vs[i])
    }
}

fn minimize_ball(f: &dyn Fn(&[f64]) -> f64, center: &[f64], r: f64) -> Best {
    let d = center.len();
    if d == 1 {
        let (x, v) = minimize_interval(&|x| f(&[x]), center[0] - r, center[0] + r);
        return Some((vec![x], v));
    }
    let project = |x: &[f64]| -> Vec<f64> {
        let dd = dist(x, center);
        if dd <= r {
            x.to_vec()
        } else {
            center.iter().zip(x).map(|(c, xi)| c + (xi - c) * r / dd).collect()
        }
    };
    let g = |x: &[f64]| f(&project(x));
    let mut best = None;
    for seed in ball_seeds(center, r) {
        let res = nelder_mead(g, &seed, &vec![0.25 * r; d], 1e-12, 400);
        consider(&mut best, project(&res.x), res.fx);
    }
    best
}

fn ball_seeds(center: &[f64], r: f64) -> Vec<Vec<f64>> {
    let mut seeds = vec![center.to_vec()];
    for k in 0..center.len() {
        for sgn in [1.0, -1.0] {
            let mut p = center.to_vec();
            p[k] += sgn * r;
            seeds.push(p);
        }
    }
    seeds
}

/// Points of (or near) a set used to start searches over intersections.
fn seed_points(set: &SetDescriptor) -> Vec<Vec<f64>> {
    match set {
        SetDescriptor::OpenBall { center, radius } | SetDescriptor::ClosedBall { center, radius } => {
            let mut s = ball_seeds(center, 0.999 * radius);
            s.extend(ball_seeds(center, 0.5 * radius));
            s
        }
        SetDescriptor::HalfSpace { normal, offset, .. } => {
            let n2 = dot(normal, normal);
            (0..4).map(|k| normal.iter().map(|n| n * (offset / n2 - 0.1 * k as f64 / n2.sqrt())).collect()).collect()
        }
        SetDescriptor::Hyperbolic => vec![vec![0.0, 1.5], vec![0.5, 2.5], vec![-1.0, 1.0]],
        SetDescriptor::Intersection { parts } => parts.iter().flat_map(seed_points).collect(),
        SetDescriptor::BoxProduct { inner, .. } => seed_points(inner),
    }
}

/// Convex `f` over `{n·w ≤ b}` whose unconstrained minimizer lies outside:
/// search the boundary hyperplane, plus interior probes for laws without a mean.
fn minimize_half_space(f: &dyn Fn(&[f64]) -> f64, normal: &[f64], b: f64) -> Best {
    let d = normal.len();
    let nn = norm(normal);
    let unit: Vec<f64> = normal.iter().map(|v| v / nn).collect();
    let foot: Vec<f64> = unit.iter().map(|u| u * b / nn).collect();
    let mut best = None;
    // Orthonormal basis of the hyperplane directions (Gram–Schmidt).
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        for q in std::iter::once(&unit).chain(basis.iter()) {
            let c = dot(&e, q);
            e.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let en = norm(&e);
        if en > 1e-8 && basis.len() + 1 < d {
            basis.push(e.iter().map(|v| v / en).collect());
        }
    }
    let on_plane = |u: &[f64]| -> Vec<f64> {
        let mut p = foot.clone();
        for (c, q) in u.iter().zip(&basis) {
            p.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
        }
        p
    };
    match basis.len() {
        0 => consider(&mut best, foot.clone(), f(&foot)),
        1 => {
            // Scan a symmetric log grid along the line, then refine.
            let mut us = vec![0.0];
            for k in -3..=3 {
                let a = 10f64.powi(k);
                us.extend([a, -a, 3.0 * a, -3.0 * a]);
            }
            us.sort_by(f64::total_cmp);
            let vals: Vec<f64> = us.iter().map(|&u| f(&on_plane(&[u]))).collect();
            let i = (0..us.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
            consider(&mut best, on_plane(&[us[i]]), vals[i]);
            if vals[i].is_finite() {
                let lo = us[i.saturating_sub(1)];
                let hi = us[(i + 1).min(us.len() - 1)];
                let g = golden_min(|u| f(&on_plane(&[u])), lo, hi, 0.0, 1e-10 * (1.0 + us[i].abs()));
                consider(&mut best, on_plane(&[g.x]), g.fx);
            }
        }
        k => {
            let mut seeds = vec![vec![0.0; k]];
            for j in 0..k {
                for s in [1.0, -1.0] {
                    let mut u = vec![0.0; k];
                    u[j] = s;
                    seeds.push(u);
                }
            }
            for seed in seeds {
                let res = nelder_mead(|u| f(&on_plane(u)), &seed, &vec![0.5; k], 1e-12, 600);
                consider(&mut best, on_plane(&res.x), res.fx);
            }
        }
    }
    for depth in [0.1, 1.0, 10.0] {
        let p: Vec<f64> = foot.iter().zip(&unit).map(|(a, u)| a - depth * u).collect();
        let v = f(&p);
        consider(&mut best, p, v);
    }
    best
}

/// The closed hyperbolic set via `w₁ = 1 − u`, `u = m + e^a`,
/// `w₂ = 1/u + e^b`.
fn minimize_hyperbolic(f: &dyn Fn(&[f64]) -> f64, m: f64) -> Best {
    let to_w = |x: &[f64]| {
        let u = m + x[0].exp();
        vec![1.0 - u, 1.0 / u + x[1].exp()]
    };
    let mut best = None;
    for seed in [[0.0, -3.0], [0.0, 0.0], [2.0, -3.0], [-2.0, -3.0], [0.0, 2.0]] {
        let res = nelder_mead(|x| f(&to_w(x)), &seed, &[1.0, 1.0], 1e-12, 400);
        consider(&mut best, to_w(&res.x), res.fx);
    }
    best
}

/// Nelder–Mead with `+∞` outside the feasible region.
fn minimize_penalized(f: &dyn Fn(&[f64]) -> f64, feasible: &dyn Fn(&[f64]) -> bool, seeds: &[Vec<f64>]) -> Best {
    let g = |x: &[f64]| if feasible(x) { f(x) } else { f64::INFINITY };
    let mut best = None;
    for seed in seeds {
        let v = g(seed);
        consider(&mut best, seed.clone(), v);
        let step: Vec<f64> = seed.iter().map(|s| 0.05 * (1.0 + s.abs())).collect();
        let res = nelder_mead(g, seed, &step, 1e-12, 400);
        consider(&mut best, res.x, res.fx);
    }
    best
}

/// Local grid refinement around the minimizer.
fn certify(f: &dyn Fn(&[f64]) -> f64, feasible: &dyn Fn(&[f64]) -> bool, best: Best, bounded: bool) -> SetInf {
    let Some((x, v)) = best else {
        return SetInf { value: ExtReal::PosInf, argmin: None, certified: false };
    };
    let d = x.len();
    let mut grid_best = (x.clone(), v);
    for scale in [1e-2, 1e-4] {
        let h = scale * (1.0 + norm(&x));
        let mut idx = vec![-2i32; d];
        loop {
            let p: Vec<f64> = x.iter().zip(&idx).map(|(xi, &i)| xi + h * i as f64).collect();
            if feasible(&p) {
                let fp = f(&p);
                if fp < grid_best.1 {
                    grid_best = (p, fp);
                }
            }
            let mut k = 0;
            while k < d && idx[k] == 2 {
                idx[k] = -2;
                k += 1;
            }
            if k == d {
                break;
            }
            idx[k] += 1;
        }
    }
    let certified = grid_best.1 >= v - CERT_TOL && (bounded || norm(&grid_best.0) <= FAR);
    let value = ExtReal::from_f64(grid_best.1.max(0.0));
    let argmin = value.is_finite().then_some(grid_best.0);
    SetInf { value, argmin, certified }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
