//! Brillouin-zone quadrature.
//!
//! Two pieces: turning the ballistic Heaviside windows of the kernels into
//! explicit momentum intervals, and a globally adaptive 15-point
//! Gauss-Legendre integrator for `∫ dk/2π f(k)` over such intervals. Gauss
//! nodes never touch panel endpoints, so the logarithmic divergence of `η(k)`
//! at `k ∈ {0, ±π}` is integrated without a change of variables; the
//! integrator keeps bisecting the panel with the largest error estimate until
//! the summed estimate drops below the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::Dispersion;

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_PANELS: usize = 200_000;
const GAUSS_POINTS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimated error {estimate:e} after {panels} panels)")]
    NonConvergence { tol: f64, estimate: f64, panels: usize },
    #[error("invalid momentum window: {0}")]
    Window(String),
    #[error("integrand is not finite at k = {0}")]
    NonFinite(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
}

/// Disjoint, ordered momentum intervals inside `[-π, π]`, none straddling `k = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KWindow {
    intervals: Vec<(f64, f64)>,
}

impl KWindow {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, QuadError> {
        let mut prev_hi = -PI;
        for &(lo, hi) in &intervals {
            if !(lo < hi) {
                return Err(QuadError::Window(format!("empty or reversed interval ({lo}, {hi})")));
            }
            if lo < -PI || hi > PI {
                return Err(QuadError::Window(format!("({lo}, {hi}) leaves the Brillouin zone")));
            }
            if lo < prev_hi {
                return Err(QuadError::Window(format!("({lo}, {hi}) overlaps or is out of order")));
            }
            if lo < 0.0 && hi > 0.0 {
                return Err(QuadError::Window(format!("({lo}, {hi}) straddles k = 0")));
            }
            prev_hi = hi;
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `(0, π)`
    pub fn right_half() -> Self {
        Self { intervals: vec![(0.0, PI)] }
    }

    /// `(-π, 0)`
    pub fn left_half() -> Self {
        Self { intervals: vec![(-PI, 0.0)] }
    }

    pub fn full_zone() -> Self {
        Self { intervals: vec![(-PI, 0.0), (0.0, PI)] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Image under `k → -k`.
    pub fn mirrored(&self) -> Self {
        Self { intervals: self.intervals.iter().rev().map(|&(a, b)| (-b, -a)).collect() }
    }

    /// Same set, cut at every point of `breaks` lying strictly inside an interval.
    pub fn split_at(&self, breaks: &[f64]) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len());
        for &(lo, hi) in &self.intervals {
            let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
            cuts.sort_by(f64::total_cmp);
            let mut a = lo;
            for c in cuts {
                out.push((a, c));
                a = c;
            }
            out.push((a, hi));
        }
        Self { intervals: out }
    }
}

/// `g(k) = 2 v(k) t`, with `t = ∞` mapped to `±∞` by the sign of `v`.
fn travel(disp: &dyn Dispersion, k: f64, t: f64) -> f64 {
    let v = disp.velocity(k);
    if t.is_infinite() {
        if v > 0.0 {
            f64::INFINITY
        } else if v < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        2.0 * v * t
    }
}

/// `{k ∈ (lo, hi) : g(k) > level}` for `g` continuous, split at the supplied
/// branch points so that `g` is monotone on every piece.
const OPEN_END_NUDGE: f64 = 1e-300;

pub(crate) fn superlevel_set(
    g: impl Fn(f64) -> f64,
    level: f64,
    lo: f64,
    hi: f64,
    branch_points: &[f64],
) -> Vec<(f64, f64)> {
    let mut nodes = vec![lo];
    nodes.extend(branch_points.iter().copied().filter(|&b| b > lo && b < hi));
    nodes.push(hi);
    nodes.sort_by(f64::total_cmp);

    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        // The domain is open: probe just inside its ends, where `g` may jump
        // (zero velocity at k = 0 against an infinite time, or a kink).
        let ka = if a == lo { a + OPEN_END_NUDGE } else { a };
        let kb = if b == hi { b - OPEN_END_NUDGE } else { b };
        let (ga, gb) = (g(ka) - level, g(kb) - level);
        let piece = match (ga > 0.0, gb > 0.0) {
            (true, true) => Some((a, b)),
            (false, false) => None,
            (false, true) => Some((crossing(&g, level, a, b), b)),
            (true, false) => Some((a, crossing(&g, level, a, b))),
        };
        if let Some((p, q)) = piece {
            if q > p {
                match pieces.last_mut() {
                    Some(last) if last.1 == p => last.1 = q,
                    _ => pieces.push((p, q)),
                }
            }
        }
    }
    pieces
}

/// Bisection for `g(k) = level` on a monotone branch with a sign change.
fn crossing(g: &impl Fn(f64) -> f64, level: f64, a: f64, b: f64) -> f64 {
    let fa = g(a) - level;
    if fa == 0.0 {
        return a;
    }
    let fb = g(b) - level;
    if fb == 0.0 {
        return b;
    }
    let (mut lo, mut hi) = (a, b);
    let lo_positive = fa > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) - level > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Right movers present at position `x` of a length-`ell` interval:
/// `{k ∈ (0, π) : min(2 v(k) t, ℓ) > x}`.
pub fn solve_window_right(x: f64, t: f64, disp: &dyn Dispersion, ell: f64) -> KWindow {
    if t == 0.0 || x >= ell {
        return KWindow::empty();
    }
    if x <= 0.0 {
        return KWindow::right_half();
    }
    let branches = disp.velocity_extrema();
    let g = |k: f64| travel(disp, k, t);
    KWindow { intervals: superlevel_set(g, x, 0.0, PI, &branches) }
}

/// Left movers present at position `x`: `{k ∈ (-π, 0) : x > max(ℓ - 2|v(k)| t, 0)}`,
/// the mirror image of [`solve_window_right`] under `x → ℓ - x`, `k → -k`.
pub fn solve_window_left(x: f64, t: f64, disp: &dyn Dispersion, ell: f64) -> KWindow {
    if t == 0.0 || x <= 0.0 {
        return KWindow::empty();
    }
    if x >= ell {
        return KWindow::left_half();
    }
    let branches = disp.velocity_extrema();
    let g = |k: f64| -travel(disp, k, t);
    KWindow { intervals: superlevel_set(g, ell - x, -PI, 0.0, &branches) }
}

fn gauss_legendre() -> &'static ([f64; GAUSS_POINTS], [f64; GAUSS_POINTS]) {
    static RULE: OnceLock<([f64; GAUSS_POINTS], [f64; GAUSS_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_POINTS;
        let mut nodes = [0.0; GAUSS_POINTS];
        let mut weights = [0.0; GAUSS_POINTS];
        for i in 0..n {
            // Newton on P_n from the Chebyshev guess.
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (nodes, weights)
    })
}

fn gauss_panel(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> Result<C64, QuadError> {
    let (nodes, weights) = gauss_legendre();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        let k = mid + half * x;
        let v = f(k);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(QuadError::NonFinite(k));
        }
        acc += v * *w;
    }
    Ok(acc * half)
}

struct Panel {
    a: f64,
    b: f64,
    left: C64,
    right: C64,
    error: f64,
}

impl Panel {
    fn new(f: &impl Fn(f64) -> C64, a: f64, b: f64, coarse: C64) -> Result<Self, QuadError> {
        let m = 0.5 * (a + b);
        let left = gauss_panel(f, a, m)?;
        let right = gauss_panel(f, m, b)?;
        let error = (coarse - (left + right)).norm();
        Ok(Self { a, b, left, right, error })
    }

    fn value(&self) -> C64 {
        self.left + self.right
    }

    fn splittable(&self) -> bool {
        let m = 0.5 * (self.a + self.b);
        (self.b - self.a) > 1e-14 * (1.0 + self.a.abs().max(self.b.abs())) && m > self.a && m < self.b
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_window dk/2π f(k)` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> C64, window: &KWindow, tol: f64) -> Result<C64, QuadError> {
    integrate_with_panel_width(f, window, tol, PI / 8.0)
}

/// As [`integrate`], starting from panels no wider than `max_width`.
///
/// Oscillatory integrands such as `e^{ikd}` with large `d` need a starting
/// mesh that resolves the oscillation, or the first error estimates can
/// vanish by accident.
pub fn integrate_with_panel_width(
    f: impl Fn(f64) -> C64,
    window: &KWindow,
    tol: f64,
    max_width: f64,
) -> Result<C64, QuadError> {
    if !(tol > 0.0) {
        return Err(QuadError::Tolerance(tol));
    }
    if window.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    let max_width = max_width.min(PI / 8.0);
    // The 2π measure is folded in so that `tol` refers to the returned value.
    let tol_raw = tol * 2.0 * PI;

    let mut heap = BinaryHeap::new();
    for &(lo, hi) in window.intervals() {
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for i in 0..pieces {
            let a = lo + step * i as f64;
            let b = if i + 1 == pieces { hi } else { lo + step * (i + 1) as f64 };
            let coarse = gauss_panel(&f, a, b)?;
            heap.push(Panel::new(&f, a, b, coarse)?);
        }
    }

    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    let mut frozen_error = 0.0;
    let mut frozen_value = C64::new(0.0, 0.0);
    while total_error + frozen_error > tol_raw {
        if heap.len() > MAX_PANELS {
            return Err(QuadError::NonConvergence {
                tol,
                estimate: (total_error + frozen_error) / (2.0 * PI),
                panels: heap.len(),
            });
        }
        let Some(worst) = heap.pop() else { break };
        total_error -= worst.error;
        if !worst.splittable() {
            frozen_error += worst.error;
            frozen_value += worst.value();
            if frozen_error > tol_raw {
                return Err(QuadError::NonConvergence {
                    tol,
                    estimate: (total_error + frozen_error) / (2.0 * PI),
                    panels: heap.len(),
                });
            }
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let left = Panel::new(&f, worst.a, m, worst.left)?;
        let right = Panel::new(&f, m, worst.b, worst.right)?;
        total_error += left.error + right.error;
        heap.push(left);
        heap.push(right);
        // Guard against drift in the running sum.
        if total_error < 0.0 {
            total_error = heap.iter().map(|p| p.error).sum();
        }
    }

    // Deterministic summation order, independent of heap layout.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let sum = panels.iter().fold(frozen_value, |acc, p| acc + p.value());
    Ok(sum / (2.0 * PI))
}
