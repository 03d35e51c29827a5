//! Small optimizers for the 1-D convex and low-dimensional concave problems
//! that define the rate functions.
//!
//! * [`golden_min`] — golden-section search with a unimodality monitor.
//! * [`maximize_concave`] — concave maximization over a trust region
//!   `‖x‖ ≤ R`: bracketing + golden section in one dimension, BFGS with
//!   Armijo backtracking (Nelder–Mead polish) in several. Objectives may
//!   return `−∞` outside their effective domain.
//! * [`nelder_mead`] — derivative-free minimization.
//!
//! When the maximizer reaches the trust-region boundary the outward slope is
//! measured at `R/2` and `R`: a slope that stays above [`SLOPE_TOL`] without
//! halving certifies an unbounded supremum, a slope below it means the
//! objective has levelled off, anything else is reported as a lower bound.

use serde::Serialize;

/// Outward slope below which the objective counts as levelled off.
pub const SLOPE_TOL: f64 = 1e-6;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of a golden-section minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    /// Interior evaluations that exceeded both bracket ends (a unimodal
    /// objective never produces one).
    pub bracket_violations: usize,
}

/// Minimizes a unimodal `f` on `[a, b]` (endpoints included) until the
/// bracket is narrower than `rel_tol·|x| + abs_tol`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> GoldenResult {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best =
        [(a, fa), (b, fb), (x1, f1), (x2, f2)].into_iter().fold((a, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let violated = |v: f64, fa: f64, fb: f64| {
        let top = fa.max(fb);
        top.is_finite() && v > top + 1e-12 * (1.0 + top.abs())
    };
    let mut violations = usize::from(violated(f1, fa, fb)) + usize::from(violated(f2, fa, fb));
    let mut iterations = 0;
    while (b - a) > rel_tol * x1.abs().max(x2.abs()) + abs_tol && iterations < 500 {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            fb = f2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            if violated(f1, fa, fb) {
                violations += 1;
            }
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            fa = f1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            if violated(f2, fa, fb) {
                violations += 1;
            }
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    GoldenResult { x: best.0, fx: best.1, iterations, bracket_violations: violations }
}

/// How a trust-region maximization ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AscentStatus {
    /// Stationary point inside the trust region.
    Interior,
    /// Reached the boundary with a vanishing outward slope; the value is the
    /// supremum up to `SLOPE_TOL·R`.
    Leveled,
    /// Reached the boundary with a decaying but non-negligible slope; the
    /// value is only a lower bound.
    LowerBound,
    /// Certified unbounded; the supremum is `+∞`.
    Unbounded,
}

/// Result of [`maximize_concave`].
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub x: Vec<f64>,
    /// Best objective value, or `+∞` when certified unbounded.
    pub value: f64,
    pub status: AscentStatus,
    pub iterations: usize,
}

impl Ascent {
    pub fn converged(&self) -> bool {
        self.status != AscentStatus::LowerBound
    }
}

/// An objective value with an optional gradient.
pub type Evaluated = (f64, Option<Vec<f64>>);

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Classifies the boundary behaviour along the ray `x0 + r·u`.
fn certify_ray(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], u: &[f64], r_max: f64) -> (AscentStatus, f64) {
    let at = |r: f64| -> Vec<f64> { x0.iter().zip(u).map(|(a, b)| a + r * b).collect() };
    let slope = |f: &mut dyn FnMut(&[f64]) -> f64, r: f64| {
        let h = 1e-3 * r;
        (f(&at(r)) - f(&at(r - h))) / h
    };
    let s_half = slope(f, 0.5 * r_max);
    let s_full = slope(f, r_max);
    let v = f(&at(r_max));
    if !s_full.is_finite() || s_full <= SLOPE_TOL {
        (AscentStatus::Leveled, v)
    } else if s_full >= 0.5 * s_half {
        (AscentStatus::Unbounded, f64::INFINITY)
    } else {
        (AscentStatus::LowerBound, v)
    }
}

/// Maximizes a concave `f` over `‖x‖ ≤ r_max` starting from `x0` (which must
/// lie inside). The returned value is never below `f(x0)`.
pub fn maximize_concave(mut f: impl FnMut(&[f64]) -> Evaluated, x0: &[f64], r_max: f64) -> Ascent {
    if x0.len() == 1 {
        maximize_1d(|x| f(&[x]).0, x0[0], r_max)
    } else {
        maximize_nd(&mut f, x0, r_max)
    }
}

fn maximize_1d(mut f: impl FnMut(f64) -> f64, x0: f64, r_max: f64) -> Ascent {
    let f0 = f(x0);
    let mut h = 0.5 * (1.0 + x0.abs()).min(r_max);
    let mut iterations = 0;
    // Find an uphill direction, shrinking the probe step if needed.
    let (dir, mut b, mut fb) = loop {
        let (fp, fm) = (f((x0 + h).min(r_max)), f((x0 - h).max(-r_max)));
        iterations += 2;
        if fp > f0 && fp >= fm {
            break (1.0, (x0 + h).min(r_max), fp);
        }
        if fm > f0 {
            break (-1.0, (x0 - h).max(-r_max), fm);
        }
        if h < 1e-10 * (1.0 + x0.abs()) {
            return Ascent { x: vec![x0], value: f0, status: AscentStatus::Interior, iterations };
        }
        if fp.is_finite() && fm.is_finite() {
            // Both neighbours no better: x0 is bracketed.
            return finish_1d(f, (x0 - h).max(-r_max), (x0 + h).min(r_max), x0, f0, iterations, r_max);
        }
        h *= 0.25;
    };
    let mut a = x0;
    let mut step = h;
    loop {
        if b.abs() >= r_max {
            let u = [dir];
            let (status, v) = certify_ray(&mut |p: &[f64]| f(p[0]), &[0.0], &u, r_max);
            let (x, value) = if status == AscentStatus::Unbounded { (b, v) } else { (b, v.max(fb)) };
            return Ascent { x: vec![x], value, status, iterations: iterations + 4 };
        }
        step *= 2.0;
        let c = (b + dir * step).clamp(-r_max, r_max);
        let fc = f(c);
        iterations += 1;
        if fc < fb {
            let (lo, hi) = if dir > 0.0 { (a, c) } else { (c, a) };
            return finish_1d(f, lo, hi, b, fb, iterations, r_max);
        }
        a = b;
        b = c;
        fb = fc;
    }
}

fn finish_1d(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, best_x: f64, best_f: f64, iterations: usize, r_max: f64) -> Ascent {
    let g = golden_min(|x| -f(x), lo, hi, 1e-11, 1e-13);
    let (x, value) = if -g.fx > best_f { (g.x, -g.fx) } else { (best_x, best_f) };
    let iterations = iterations + g.iterations;
    if x.abs() >= r_max * (1.0 - 1e-9) {
        // A maximizer on the trust-region boundary (e.g. from a warm start).
        let (status, v) = certify_ray(&mut |p: &[f64]| f(p[0]), &[0.0], &[x.signum()], r_max);
        let value = if status == AscentStatus::Unbounded { v } else { v.max(value) };
        return Ascent { x: vec![x], value, status, iterations: iterations + 4 };
    }
    Ascent { x: vec![x], value, status: AscentStatus::Interior, iterations }
}

fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> Evaluated, x: &[f64]) -> Option<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-6 * (1.0 + x[k].abs());
        p[k] = x[k] + h;
        let up = f(&p).0;
        p[k] = x[k] - h;
        let dn = f(&p).0;
        p[k] = x[k];
        g[k] = match (up.is_finite(), dn.is_finite()) {
            (true, true) => (up - dn) / (2.0 * h),
            (true, false) => (up - f(x).0) / h,
            (false, true) => (f(x).0 - dn) / h,
            _ => return None,
        };
    }
    Some(g)
}

fn maximize_nd(f: &mut dyn FnMut(&[f64]) -> Evaluated, x0: &[f64], r_max: f64) -> Ascent {
    let n = x0.len();
    let eval = |f: &mut dyn FnMut(&[f64]) -> Evaluated, x: &[f64]| -> (f64, Option<Vec<f64>>) {
        let (v, g) = f(x);
        if !v.is_finite() {
            return (v, None);
        }
        match g {
            Some(g) if g.iter().all(|c| c.is_finite()) => (v, Some(g)),
            _ => (v, fd_gradient(f, x)),
        }
    };
    let (mut fx, mut g) = eval(f, x0);
    let mut x = x0.to_vec();
    let mut hinv = identity(n);
    let mut iterations = 0;
    let mut stalls = 0;
    let mut on_boundary = false;
    while let Some(grad) = g.clone() {
        iterations += 1;
        if iterations > 400 {
            break;
        }
        let gnorm = grad.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if gnorm <= 1e-10 * (1.0 + fx.abs()) {
            break;
        }
        let mut p = matvec(&hinv, &grad);
        let mut slope = dot(&grad, &p);
        if !(slope > 0.0) {
            hinv = identity(n);
            p = grad.clone();
            slope = dot(&grad, &p);
        }
        // Clip the step to the trust region.
        let mut alpha = 1.0;
        let trial_norm = norm(&axpy(&x, 1.0, &p));
        let mut clipped = false;
        if trial_norm > r_max {
            alpha = boundary_step(&x, &p, r_max);
            clipped = true;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let xn = axpy(&x, alpha, &p);
            let (fnew, gnew) = eval(f, &xn);
            if fnew.is_finite() && fnew >= fx + 1e-4 * alpha * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            alpha *= 0.5;
            clipped = false;
        }
        let Some((xn, fnew, gnew)) = accepted else { break };
        let improvement = fnew - fx;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        if let Some(gn) = &gnew {
            // Quasi-Newton update for the minimization of −f.
            let y: Vec<f64> = gn.iter().zip(&grad).map(|(a, b)| b - a).collect();
            let sy = dot(&s, &y);
            if sy > 1e-14 * norm(&s) * norm(&y) {
                bfgs_update(&mut hinv, &s, &y, sy);
            }
        }
        x = xn;
        fx = fnew;
        g = gnew;
        if clipped && norm(&x) >= r_max * (1.0 - 1e-9) {
            on_boundary = true;
            break;
        }
        if improvement <= 1e-15 * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    // Derivative-free polish catches kinks and missing gradients.
    let polish = nelder_mead(
        |p| if norm(p) > r_max { f64::INFINITY } else { -f(p).0 },
        &x,
        &x.iter().map(|v| 1e-3 * (1.0 + v.abs())).collect::<Vec<_>>(),
        1e-14,
        2000,
    );
    iterations += polish.iterations;
    if -polish.fx > fx {
        x = polish.x;
        fx = -polish.fx;
    }
    if on_boundary || norm(&x) >= r_max * (1.0 - 1e-6) {
        let d = norm(&axpy(&x, -1.0, x0));
        if d > 0.0 {
            let u: Vec<f64> = x.iter().zip(x0).map(|(a, b)| (a - b) / d).collect();
            let reach = ray_exit(x0, &u, r_max);
            let (status, v) = certify_ray(&mut |p: &[f64]| f(p).0, x0, &u, reach);
            let value = if status == AscentStatus::Unbounded { v } else { v.max(fx) };
            return Ascent { x, value, status, iterations };
        }
    }
    Ascent { x, value: fx, status: AscentStatus::Interior, iterations }
}

/// Largest `r` with `‖x0 + r·u‖ ≤ r_max` for a unit vector `u`.
fn ray_exit(x0: &[f64], u: &[f64], r_max: f64) -> f64 {
    let b = dot(x0, u);
    let c = dot(x0, x0) - r_max * r_max;
    -b + (b * b - c).max(0.0).sqrt()
}

/// Largest `α ≤ 1` with `‖x + α p‖ ≤ r_max`.
fn boundary_step(x: &[f64], p: &[f64], r_max: f64) -> f64 {
    let pp = dot(p, p);
    let b = dot(x, p);
    let c = dot(x, x) - r_max * r_max;
    ((-b + (b * b - pp * c).max(0.0).sqrt()) / pp).min(1.0)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn axpy(x: &[f64], a: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy = matvec(h, y);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Outcome of [`nelder_mead`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
}

/// Nelder–Mead minimization from `x0` with initial simplex offsets `step`;
/// stops when the simplex values agree within `tol·(1 + |f|)`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: &[f64], tol: f64, max_iter: usize) -> SimplexResult {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = f(x0);
    simplex.push((x0.to_vec(), v0));
    for k in 0..n {
        let mut p = x0.to_vec();
        p[k] += step[k];
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut iterations = 0;
    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal);
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(cmp);
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = simplex.iter().map(|p| norm(&axpy(&p.0, -1.0, &simplex[0].0))).fold(0.0, f64::max);
        if (worst - best).abs() <= tol * (1.0 + best.abs()) && worst.is_finite() && spread < 1e-10 * (1.0 + norm(&simplex[0].0)) {
            break;
        }
        if spread < 1e-15 * (1.0 + norm(&simplex[0].0)) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> = p.0.iter().zip(&x0).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let v = f(&xs);
                    *p = (xs, v);
                }
            }
        }
    }
    simplex.sort_by(cmp);
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult { x, fx, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-10, 1e-12);
        assert_relative_eq!(r.x, 0.3, epsilon = 1e-8);
        assert_eq!(r.bracket_violations, 0);
        // Endpoint minima are returned too.
        let r = golden_min(|x| x, 0.0, 1.0, 1e-10, 1e-12);
        assert_eq!(r.x, 0.0);
    }

    #[test]
    fn golden_reports_non_unimodal_objectives() {
        let r = golden_min(|x: f64| -(x - 1.0).powi(2), 0.0, 3.0, 1e-8, 1e-10);
        assert!(r.bracket_violations > 0);
    }

    #[test]
    fn concave_1d_interior_and_unbounded() {
        let a = maximize_concave(|x| (-(x[0] - 3.0).powi(2), None), &[0.0], 1e3);
        assert_eq!(a.status, AscentStatus::Interior);
        assert_relative_eq!(a.x[0], 3.0, epsilon = 1e-6);
        let a = maximize_concave(|x| (0.5 * x[0], None), &[0.0], 1e3);
        assert_eq!(a.status, AscentStatus::Unbounded);
        assert_eq!(a.value, f64::INFINITY);
        // 1 − e^{x} levels off at 1 as x → −∞.
        let a = maximize_concave(|x| (1.0 - x[0].exp(), None), &[0.0], 1e3);
        assert_eq!(a.status, AscentStatus::Leveled);
        assert_relative_eq!(a.value, 1.0, epsilon = 1e-12);
        // Domain restriction: −∞ outside x < 1.
        let a = maximize_concave(|x| (if x[0] < 1.0 { x[0] + (1.0 - x[0]).ln() } else { f64::NEG_INFINITY }, None), &[0.0], 1e3);
        assert!(a.value.abs() < 1e-12);
    }

    #[test]
    fn concave_nd_with_and_without_gradient() {
        let target = [1.0, -2.0, 0.5];
        let f = |x: &[f64]| {
            let v = -x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() - 0.5 * (x[0] * x[1]);
            (v, None)
        };
        let a = maximize_concave(f, &[0.0, 0.0, 0.0], 1e3);
        assert_eq!(a.status, AscentStatus::Interior);
        let g = |x: &[f64]| {
            let v = -(x[0] - 1.0).powi(2) - 4.0 * (x[1] + 1.0).powi(2);
            (v, Some(vec![-2.0 * (x[0] - 1.0), -8.0 * (x[1] + 1.0)]))
        };
        let a = maximize_concave(g, &[0.0, 0.0], 1e3);
        assert_relative_eq!(a.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(a.x[1], -1.0, epsilon = 1e-6);
        let lin = |x: &[f64]| (0.3 * x[0] - 0.1 * x[1] - (x[0] - x[1]).powi(2), None);
        assert_eq!(maximize_concave(lin, &[0.0, 0.0], 1e3).status, AscentStatus::Unbounded);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r =
            nelder_mead(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.2, 1.0], &[0.5, 0.5], 1e-16, 5000);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-5);
    }
}
