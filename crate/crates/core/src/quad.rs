//! Numerical quadrature: fixed Gauss–Legendre rules, adaptive
//! Gauss–Kronrod (7/15), and tilted log-integrals over the half line.
//!
//! The half-line routine evaluates
//!
//! ```text
//! ln ∫_0^∞ exp(l(s)) ds,   E_l[s],   E_l[g(s)]
//! ```
//!
//! for a log-integrand `l` that is unimodal in practice (a log-density plus a
//! linear or sublinear tilt). The peak is located on a logarithmic grid, the
//! integrand is shifted by its peak value (so nothing overflows), truncated
//! where it falls `TRUNCATION_NATS` below the peak (≈10^{-20} relative), and
//! integrated piecewise with adaptive Gauss–Kronrod.

/// Gauss–Kronrod 15-point abscissae on `[0, 1]` (symmetric rule).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Embedded 7-point Gauss weights (nodes `XGK[1], XGK[3], XGK[5], XGK[7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const TRUNCATION_NATS: f64 = 46.0;
const MAX_INTERVALS: usize = 400;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_a^b f` with the `n`-point Gauss–Legendre rule.
pub fn gauss_legendre_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>()
}

/// One 15-point Kronrod panel; returns (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<const K: usize>(f: &impl Fn(f64) -> [f64; K], a: f64, b: f64) -> ([f64; K], [f64; K]) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let fc = f(mid);
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(mid - dx), f(mid + dx));
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; K];
    for k in 0..K {
        kron[k] *= half;
        err[k] = (kron[k] - gauss[k] * half).abs();
    }
    (kron, err)
}

/// Globally adaptive Gauss–Kronrod integration of a vector integrand on
/// `[a, b]`: bisects the panel with the largest error until every component
/// meets `rel_tol · |total| + abs_tol`.
pub fn adaptive_gk<const K: usize>(f: impl Fn(f64) -> [f64; K], a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> [f64; K] {
    let mut panels = vec![(a, b, gk15(&f, a, b))];
    loop {
        let mut total = [0.0; K];
        let mut err = [0.0; K];
        for (_, _, (v, e)) in &panels {
            for k in 0..K {
                total[k] += v[k];
                err[k] += e[k];
            }
        }
        let done = (0..K).all(|k| err[k] <= rel_tol * total[k].abs() + abs_tol);
        if done || panels.len() >= MAX_INTERVALS {
            return total;
        }
        // Split the panel whose worst component error (relative to the
        // component's total) is largest.
        let score = |e: &[f64; K]| (0..K).map(|k| e[k] / (total[k].abs() + abs_tol + f64::MIN_POSITIVE)).fold(0.0, f64::max);
        let (idx, _) =
            panels
                .iter()
                .enumerate()
                .map(|(i, p)| (i, score(&p.2 .1)))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let (lo, hi, _) = panels.swap_remove(idx);
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            return total;
        }
        panels.push((lo, m, gk15(&f, lo, m)));
        panels.push((m, hi, gk15(&f, m, hi)));
    }
}

/// Result of a tilted half-line integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedMoments {
    /// `ln ∫ exp(l(s)) ds`.
    pub log_mass: f64,
    /// Mean of `s` under the normalized density `exp(l(s)) / mass`.
    pub mean_s: f64,
    /// Mean of `g(s)` under the same density.
    pub mean_g: f64,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Tilted mass and moments on `(0, ∞)`; `None` when the integral diverges.
pub fn tilted_half_line(l: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Option<TiltedMoments> {
    let l = |s: f64| clean(l(s));
    // Coarse log grid 1e-9 .. 1e12, five points per decade.
    let (u_lo, u_hi) = (1e-9f64.ln(), 1e12f64.ln());
    let du = std::f64::consts::LN_10 / 5.0;
    let n = ((u_hi - u_lo) / du).round() as usize;
    let vals: Vec<f64> = (0..=n).map(|k| l((u_lo + k as f64 * du).exp())).collect();
    let (kmax, &vmax) = vals.iter().enumerate().fold((0, &f64::NEG_INFINITY), |acc, x| if *x.1 > *acc.1 { x } else { acc });
    if vmax == f64::NEG_INFINITY {
        return Some(TiltedMoments { log_mass: f64::NEG_INFINITY, mean_s: 0.0, mean_g: 0.0 });
    }
    if vmax == f64::INFINITY || (kmax == n && vals[n] > vals[n - 1]) {
        return None;
    }
    // Refine the peak by golden section on ln s.
    let (mut a, mut b) = (u_lo + kmax.saturating_sub(1) as f64 * du, u_lo + (kmax + 1).min(n) as f64 * du);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (l(x1.exp()), l(x2.exp()));
    for _ in 0..40 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = l(x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = l(x2.exp());
        }
    }
    let (mut peak_s, mut peak) = if f1 >= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    if vmax > peak {
        peak_s = (u_lo + kmax as f64 * du).exp();
        peak = vmax;
    }

    // Breakpoints: geometric steps away from the peak, scaled by the distance
    // over which the integrand drops one nat.
    let scale = |dir: f64| -> Option<f64> {
        let mut d = (peak_s * 1e-6).max(1e-12);
        loop {
            let s = peak_s + dir * d;
            if dir < 0.0 && s <= 0.0 {
                return Some(peak_s);
            }
            if l(s) < peak - 1.0 {
                return Some(d);
            }
            d *= 2.0;
            if d > 1e18 {
                return None;
            }
        }
    };
    let mut breaks = vec![peak_s];
    let d_right = scale(1.0)?;
    let mut k = 0.0;
    loop {
        let s = peak_s + d_right * 2f64.powf(k);
        breaks.push(s);
        if l(s) < peak - TRUNCATION_NATS {
            break;
        }
        k += 1.0;
        if s > 1e18 {
            return None;
        }
    }
    let d_left = scale(-1.0)?;
    let mut k = 0.0;
    loop {
        let s = peak_s - d_left * 2f64.powf(k);
        if s <= 0.0 {
            breaks.push(0.0);
            break;
        }
        breaks.push(s);
        if l(s) < peak - TRUNCATION_NATS {
            break;
        }
        k += 1.0;
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();

    // Rounding noise of `l` near the peak, where `l' ≈ 0`: a large tilt makes
    // `l` large or a difference of big terms, and no rule can beat that noise.
    let noise = (1..=8)
        .map(|k| (l(peak_s * (1.0 + k as f64 * f64::EPSILON)) - peak).abs())
        .filter(|v| v.is_finite())
        .fold(f64::EPSILON * peak.abs(), f64::max);
    let rel_tol = (16.0 * noise).clamp(1e-13, 1e-6);
    let integrand = |s: f64| {
        let e = (l(s) - peak).exp();
        [e, e * s, e * g(s)]
    };
    let mut acc = [0.0; 3];
    for w in breaks.windows(2) {
        let part = adaptive_gk(integrand, w[0], w[1], rel_tol, 1e-300);
        for k in 0..3 {
            acc[k] += part[k];
        }
    }
    if !(acc[0] > 0.0) {
        return Some(TiltedMoments { log_mass: f64::NEG_INFINITY, mean_s: 0.0, mean_g: 0.0 });
    }
    Some(TiltedMoments { log_mass: peak + acc[0].ln(), mean_s: acc[1] / acc[0], mean_g: acc[2] / acc[0] })
}
