//! Quasiparticle prediction for the entanglement Hamiltonian.
//!
//! After the quench the coupling between sites at distance `z` around position
//! `x` of the interval `[0, ℓ]` is predicted to be `𝒦_R(x, z) + 𝒦_L(x, z)`, where
//!
//! ```text
//! 𝒦_R(x, z) = ∫_{k>0} dk/2π η(k) Θ(min(2 v_k t, ℓ) - x) e^{ikz}
//! 𝒦_L(x, z) = ∫_{k<0} dk/2π η(k) Θ(x - max(ℓ + 2 v_k t, 0)) e^{ikz}
//! ```
//!
//! i.e. only modes whose entangled partner has already left the interval
//! contribute. The same picture gives the entropies
//! `S_α(t) = ∫ dk/2π min(2|v_k| t, ℓ) h_α(n(k))`.
//!
//! Lattice alignment: site `j` (1-based) is the unit cell `[j-1, j]`, so it sits
//! at `x = j - ½`. The coupling `h[j][j+z]` is compared with the kernel at the
//! bond midpoint `x = j - ½ + z/2` ([`SamplingConvention::Midpoint`]) or at the
//! far site `x = j + z - ½` ([`SamplingConvention::Endpoint`]).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{binary_renyi, Dispersion, LinearBand, ModeOccupation, ModelError, QuenchSpec, ThermalOccupation};
use crate::quad::{integrate, solve_window_left, solve_window_right, superlevel_set, KWindow, QuadError};

/// Distances covered by a default profile sweep, `0..=DEFAULT_MAX_DISTANCE`.
pub const DEFAULT_MAX_DISTANCE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QppError {
    #[error("position {x} is outside [0, {length}]")]
    Position { x: f64, length: usize },
    #[error("distance {distance} leaves no site pair in a length-{length} interval")]
    Distance { distance: usize, length: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingConvention {
    #[default]
    Midpoint,
    Endpoint,
}

impl SamplingConvention {
    /// Kernel position for the pair `(j, j + z)`, `j` 1-based.
    pub fn position(self, j: usize, z: usize) -> f64 {
        let base = j as f64 - 0.5;
        match self {
            Self::Midpoint => base + 0.5 * z as f64,
            Self::Endpoint => base + z as f64,
        }
    }
}

fn check_position(x: f64, length: usize) -> Result<(), QppError> {
    if (0.0..=length as f64).contains(&x) {
        Ok(())
    } else {
        Err(QppError::Position { x, length })
    }
}

fn eta_wave(occ: &dyn ModeOccupation, z: i64) -> impl Fn(f64) -> C64 + '_ {
    move |k| C64::from_polar(occ.eta(k), k * z as f64)
}

pub fn kernel_right(x: f64, z: i64, spec: &QuenchSpec, tol: f64) -> Result<C64, QppError> {
    check_position(x, spec.length())?;
    let window = solve_window_right(x, spec.time(), spec.dispersion.as_ref(), spec.length() as f64);
    Ok(integrate(eta_wave(spec.occupation.as_ref(), z), &window, tol)?)
}

pub fn kernel_left(x: f64, z: i64, spec: &QuenchSpec, tol: f64) -> Result<C64, QppError> {
    check_position(x, spec.length())?;
    let window = solve_window_left(x, spec.time(), spec.dispersion.as_ref(), spec.length() as f64);
    Ok(integrate(eta_wave(spec.occupation.as_ref(), z), &window, tol)?)
}

/// `𝒦_R + 𝒦_L` at one position.
pub fn kernel(x: f64, z: i64, spec: &QuenchSpec, tol: f64) -> Result<C64, QppError> {
    Ok(kernel_right(x, z, spec, tol)? + kernel_left(x, z, spec, tol)?)
}

/// Predicted couplings along the `z`-th superdiagonal, one value per site
/// pair `(j, j + z)` with `j = 1..=ℓ-z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPrediction {
    pub length: usize,
    pub time: f64,
    pub distance: usize,
    pub convention: SamplingConvention,
    pub positions: Vec<f64>,
    pub values: Vec<C64>,
}

pub fn predict_profile(
    spec: &QuenchSpec,
    z: usize,
    tol: f64,
    convention: SamplingConvention,
) -> Result<KernelPrediction, QppError> {
    let length = spec.length();
    if z >= length {
        return Err(QppError::Distance { distance: z, length });
    }
    let positions: Vec<f64> = (1..=length - z).map(|j| convention.position(j, z)).collect();
    let values = positions
        .par_iter()
        .map(|&x| kernel(x, z as i64, spec, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KernelPrediction { length, time: spec.time(), distance: z, convention, positions, values })
}

/// Stationary coupling `∫_{-π}^{π} dk/2π η(k) e^{ikz}`.
pub fn gge_coupling(z: i64, occ: &dyn ModeOccupation, tol: f64) -> Result<C64, QppError> {
    Ok(integrate(eta_wave(occ, z), &KWindow::full_zone(), tol)?)
}

/// Quasiparticle Rényi entropy `∫ dk/2π min(2|v_k| t, ℓ) h_α(n(k))` of the interval.
pub fn renyi_qpp(alpha: f64, spec: &QuenchSpec, tol: f64) -> Result<f64, QppError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::RenyiIndex(alpha).into());
    }
    let t = spec.time();
    let ell = spec.length() as f64;
    if t == 0.0 {
        return Ok(0.0);
    }
    let disp = spec.dispersion.as_ref();
    let reach = |k: f64| {
        let v = disp.velocity(k).abs();
        if t.is_infinite() {
            if v > 0.0 { ell } else { 0.0 }
        } else {
            (2.0 * v * t).min(ell)
        }
    };
    // Cut the zone where 2|v_k| t = ℓ so every panel sees a smooth integrand.
    let mut breaks = Vec::new();
    if t.is_finite() {
        let extrema = disp.velocity_extrema();
        for (lo, hi) in [(-PI, 0.0), (0.0, PI)] {
            let speed = |k: f64| 2.0 * disp.velocity(k).abs() * t;
            for (a, b) in superlevel_set(speed, ell, lo, hi, &extrema) {
                breaks.extend([a, b]);
            }
        }
    }
    let window = KWindow::full_zone().split_at(&breaks);
    let occ = spec.occupation.as_ref();
    let s = integrate(|k| C64::new(reach(k) * binary_renyi(occ.occupation(k), alpha), 0.0), &window, tol)?;
    Ok(s.re)
}

/// `∫_0^π dk k e^{ikz}`.
fn linear_moment(z: i64) -> C64 {
    if z == 0 {
        return C64::new(0.5 * PI * PI, 0.0);
    }
    let zf = z as f64;
    let phase = if z % 2 == 0 { 1.0 } else { -1.0 }; // e^{iπz}
    // π e^{iπz} / (iz) + (e^{iπz} - 1) / z²
    C64::new(0.0, -PI * phase / zf) + C64::new((phase - 1.0) / (zf * zf), 0.0)
}

/// Sampled positions and distances used by [`cft_factorization_check`].
pub const CFT_POSITIONS: usize = 41;
pub const CFT_MAX_DISTANCE: i64 = 8;

/// For the gapless linear band `ε = v|k|` with thermal-like `η = β ε`, every
/// mode has speed `|v|`, so the kernels factorize into a light-cone window in
/// `x` times a function of `z` alone. Returns the largest deviation of the
/// quadrature kernel from that product over a grid of `(x, z)`.
pub fn cft_factorization_check(beta: f64, v: f64, t: f64, ell: usize, tol: f64) -> Result<f64, QppError> {
    let disp: Arc<dyn Dispersion> = Arc::new(LinearBand { speed: v.abs() });
    let occ = Arc::new(ThermalOccupation { beta, dispersion: disp.clone() });
    let spec = QuenchSpec::new(disp, occ, ell, t)?;
    let l = ell as f64;
    let reach = 2.0 * v.abs() * t;
    let norm = beta * v.abs() / (2.0 * PI);

    let grid: Vec<(f64, i64)> = (0..CFT_POSITIONS)
        .flat_map(|i| {
            let x = l * i as f64 / (CFT_POSITIONS - 1) as f64;
            (0..=CFT_MAX_DISTANCE).map(move |z| (x, z))
        })
        .collect();
    let deviations = grid
        .par_iter()
        .map(|&(x, z)| {
            let right_open = t > 0.0 && x < l && (x <= 0.0 || reach > x);
            let left_open = t > 0.0 && x > 0.0 && (x >= l || reach > l - x);
            let f = linear_moment(z) * norm;
            let mut expected = C64::new(0.0, 0.0);
            if right_open {
                expected += f;
            }
            if left_open {
                expected += f.conj();
            }
            Ok((kernel(x, z, &spec, tol)? - expected).norm())
        })
        .collect::<Result<Vec<f64>, QppError>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}
