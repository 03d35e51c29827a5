//! Event sets `A` for `P[W_t/t ∈ A]` and pair-average events.
//!
//! Half-spaces are written `{w : n·w ≤ b}` (or `< b` when `strict`); e.g.
//! `{w ≥ 1.5}` is `n = [−1], b = −1.5`. The product kind `[α, β] × C` applies
//! to pairs `(s, w)` and is used for the pair-average measures `μ_n`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Relative precision at which membership on a boundary is decided.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn ball_tol(center: &[f64], radius: f64) -> f64 {
    BOUNDARY_TOL * (1.0 + radius + center.iter().map(|c| c.abs()).fold(0.0, f64::max))
}

/// An event set in reward space (or, for `BoxProduct`, in pair space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDescriptor {
    /// `{w : ‖w − center‖ < radius}`.
    OpenBall { center: Vec<f64>, radius: f64 },
    /// `{w : ‖w − center‖ ≤ radius}`.
    ClosedBall { center: Vec<f64>, radius: f64 },
    /// `{w : normal·w ≤ offset}`, or `<` when `strict`.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
        #[serde(default)]
        strict: bool,
    },
    /// `{(s, w) : lo ≤ s ≤ hi, w ∈ inner}`.
    BoxProduct { lo: f64, hi: f64, inner: Box<SetDescriptor> },
    /// `{w ∈ R² : w₁ < 1, (1 − w₁)·w₂ ≥ 1}` — closed and convex, yet every
    /// point has `w₁ < 1`.
    Hyperbolic,
    /// Intersection of reward-space sets.
    Intersection { parts: Vec<SetDescriptor> },
}

impl SetDescriptor {
    pub fn open_ball(center: Vec<f64>, radius: f64) -> Self {
        SetDescriptor::OpenBall { center, radius }
    }

    pub fn closed_ball(center: Vec<f64>, radius: f64) -> Self {
        SetDescriptor::ClosedBall { center, radius }
    }

    pub fn half_space(normal: Vec<f64>, offset: f64, strict: bool) -> Self {
        SetDescriptor::HalfSpace { normal, offset, strict }
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self {
            SetDescriptor::OpenBall { center, radius } | SetDescriptor::ClosedBall { center, radius } => {
                if !(*radius > 0.0) || center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return bad("ball needs a finite center and radius > 0");
                }
            }
            SetDescriptor::HalfSpace { normal, offset, .. } => {
                if normal.iter().all(|v| *v == 0.0) || !offset.is_finite() || normal.iter().any(|v| !v.is_finite()) {
                    return bad("half-space needs a nonzero finite normal and a finite offset");
                }
            }
            SetDescriptor::BoxProduct { lo, hi, inner } => {
                if !(lo <= hi) || lo.is_nan() || hi.is_nan() {
                    return bad("box product needs lo ≤ hi");
                }
                if matches!(**inner, SetDescriptor::BoxProduct { .. }) {
                    return bad("box product cannot be nested");
                }
                inner.validate()?;
            }
            SetDescriptor::Hyperbolic => {}
            SetDescriptor::Intersection { parts } => {
                if parts.is_empty() {
                    return bad("intersection needs at least one part");
                }
                for p in parts {
                    if matches!(p, SetDescriptor::BoxProduct { .. }) {
                        return bad("intersection parts must be reward-space sets");
                    }
                    p.validate()?;
                }
                let dims: Vec<_> = parts.iter().filter_map(|p| p.dim()).collect();
                if dims.windows(2).any(|w| w[0] != w[1]) {
                    return bad("intersection parts disagree on dimension");
                }
            }
        }
        Ok(())
    }

    /// Reward dimension of the set (for `BoxProduct`, of its inner set).
    pub fn dim(&self) -> Option<usize> {
        match self {
            SetDescriptor::OpenBall { center, .. } | SetDescriptor::ClosedBall { center, .. } => Some(center.len()),
            SetDescriptor::HalfSpace { normal, .. } => Some(normal.len()),
            SetDescriptor::BoxProduct { inner, .. } => inner.dim(),
            SetDescriptor::Hyperbolic => Some(2),
            SetDescriptor::Intersection { parts } => parts.iter().find_map(|p| p.dim()),
        }
    }

    /// Validates the set and checks it against a reward dimension.
    pub fn check_for(&self, dim: usize) -> Result<()> {
        self.validate()?;
        match self.dim() {
            Some(d) => check_dim(dim, d),
            None => Ok(()),
        }
    }

    /// Membership of a reward vector (`BoxProduct` tests its inner set).
    ///
    /// Boundaries are resolved at [`BOUNDARY_TOL`] relative precision in
    /// favour of the set's topology: a point that is on the boundary up to
    /// rounding (e.g. `39/20` against the ball `[2] ± 0.05`) belongs to a
    /// closed set and not to an open one.
    pub fn contains(&self, w: &[f64]) -> bool {
        match self {
            SetDescriptor::OpenBall { center, radius } => dist2(w, center).sqrt() < radius - ball_tol(center, *radius),
            SetDescriptor::ClosedBall { center, radius } => dist2(w, center).sqrt() <= radius + ball_tol(center, *radius),
            SetDescriptor::HalfSpace { normal, offset, strict } => {
                let v: f64 = normal.iter().zip(w).map(|(a, b)| a * b).sum();
                let mag: f64 = normal.iter().zip(w).map(|(a, b)| (a * b).abs()).sum();
                let tol = BOUNDARY_TOL * (1.0 + offset.abs() + mag);
                if *strict {
                    v < offset - tol
                } else {
                    v <= offset + tol
                }
            }
            SetDescriptor::BoxProduct { inner, .. } => inner.contains(w),
            SetDescriptor::Hyperbolic => {
                let tol = BOUNDARY_TOL * (1.0 + w[0].abs() + w[1].abs());
                w[0] < 1.0 - tol && (1.0 - w[0]) * w[1] >= 1.0 - tol
            }
            SetDescriptor::Intersection { parts } => parts.iter().all(|p| p.contains(w)),
        }
    }

    /// Membership of a pair `(s, w)` in a `BoxProduct`; other kinds ignore `s`.
    pub fn contains_pair(&self, s: f64, w: &[f64]) -> bool {
        match self {
            SetDescriptor::BoxProduct { lo, hi, inner } => {
                let tol = BOUNDARY_TOL * (1.0 + lo.abs().max(hi.abs()));
                *lo - tol <= s && s <= *hi + tol && inner.contains(w)
            }
            other => other.contains(w),
        }
    }

    /// `true` for sets that are open in reward space.
    pub fn is_open(&self) -> bool {
        match self {
            SetDescriptor::OpenBall { .. } => true,
            SetDescriptor::HalfSpace { strict, .. } => *strict,
            SetDescriptor::Intersection { parts } => parts.iter().all(|p| p.is_open()),
            _ => false,
        }
    }

    /// `true` for bounded closed sets.
    pub fn is_compact(&self) -> bool {
        match self {
            SetDescriptor::ClosedBall { .. } => true,
            SetDescriptor::Intersection { parts } => parts.iter().any(|p| p.is_compact()) && parts.iter().all(|p| !p.is_open()),
            _ => false,
        }
    }

    /// Short text form used in reports.
    pub fn describe(&self) -> String {
        match self {
            SetDescriptor::OpenBall { center, radius } => format!("B({center:?}, {radius})"),
            SetDescriptor::ClosedBall { center, radius } => format!("closed B({center:?}, {radius})"),
            SetDescriptor::HalfSpace { normal, offset, strict } => {
                format!("{{w : {normal:?}·w {} {offset}}}", if *strict { "<" } else { "≤" })
            }
            SetDescriptor::BoxProduct { lo, hi, inner } => format!("[{lo}, {hi}] × {}", inner.describe()),
            SetDescriptor::Hyperbolic => "{w₁ < 1, (1 − w₁)w₂ ≥ 1}".into(),
            SetDescriptor::Intersection { parts } => parts.iter().map(|p| p.describe()).collect::<Vec<_>>().join(" ∩ "),
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
