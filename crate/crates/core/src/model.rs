//! Band structures, conserved mode occupations and the single-particle
//! entanglement spectrum function `η(k) = log[(1 - n(k)) / n(k)]`.
//!
//! Units: lattice spacing 1, hopping time scale 1. Momenta live on the
//! Brillouin zone `[-π, π)`.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use thiserror::Error;

/// Occupations are clamped to `[OCCUPATION_CLAMP, 1 - OCCUPATION_CLAMP]`
/// before taking the logarithm in [`eta_clamped`].
pub const OCCUPATION_CLAMP: f64 = 1e-12;

/// Sign `s` in the dimer occupation `n(k) = (1 + s cos k) / 2`.
///
/// Fixed by direct evaluation of `⟨D|c†_k c_k|D⟩` for dimers on sites
/// `(1, 2), (3, 4), …` with `c_j = L^{-1/2} Σ_k e^{ikj} c_k`; the ring oracle in
/// [`crate::corr`] pins it in a test.
pub const DIMER_SIGN: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("occupation {0} is outside the open interval (0, 1)")]
    OccupationDomain(f64),
    #[error("subsystem length must be at least 2, got {0}")]
    Length(usize),
    #[error("time must be nonnegative and not NaN, got {0}")]
    Time(f64),
    #[error("Renyi index must be positive and finite, got {0}")]
    RenyiIndex(f64),
}

/// A single-band dispersion `ε(k)` with group velocity `v(k) = ∂ε/∂k`.
pub trait Dispersion: Debug + Send + Sync {
    fn energy(&self, k: f64) -> f64;

    fn velocity(&self, k: f64) -> f64;

    /// `max |v(k)|` over the zone.
    fn v_max(&self) -> f64;

    /// Interior extrema of `v(k)` in `(-π, 0) ∪ (0, π)`, sorted.
    ///
    /// Window solving treats the pieces between consecutive extrema (and
    /// `-π, 0, π`) as monotone branches. The default locates sign changes of
    /// the sampled slope and refines them by golden-section search.
    fn velocity_extrema(&self) -> Vec<f64> {
        scan_extrema(|k| self.velocity(k))
    }
}

fn scan_extrema(v: impl Fn(f64) -> f64) -> Vec<f64> {
    const SAMPLES: usize = 2048;
    let mut out = Vec::new();
    for (lo, hi) in [(-PI, 0.0), (0.0, PI)] {
        let step = (hi - lo) / SAMPLES as f64;
        let grid: Vec<f64> = (0..=SAMPLES).map(|i| lo + step * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&k| v(k)).collect();
        for i in 1..SAMPLES {
            let left = vals[i] - vals[i - 1];
            let right = vals[i + 1] - vals[i];
            if left * right < 0.0 {
                let is_max = left > 0.0;
                out.push(golden_extremum(&v, grid[i - 1], grid[i + 1], is_max));
            }
        }
    }
    out
}

fn golden_extremum(v: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, is_max: bool) -> f64 {
    let sign = if is_max { -1.0 } else { 1.0 };
    let f = |k: f64| sign * v(k);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Nearest-neighbour hopping band `ε(k) = -cos k`, from
/// `H = -½ Σ_i c†_i c_{i+1} + h.c.`
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CosineBand;

impl Dispersion for CosineBand {
    fn energy(&self, k: f64) -> f64 {
        -k.cos()
    }

    fn velocity(&self, k: f64) -> f64 {
        k.sin()
    }

    fn v_max(&self) -> f64 {
        1.0
    }

    fn velocity_extrema(&self) -> Vec<f64> {
        vec![-PI / 2.0, PI / 2.0]
    }
}

/// Gapless linear band `ε(k) = v |k|`: modes with `k > 0` move right and modes
/// with `k < 0` move left, all with speed `|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBand {
    pub speed: f64,
}

impl Dispersion for LinearBand {
    fn energy(&self, k: f64) -> f64 {
        self.speed * k.abs()
    }

    fn velocity(&self, k: f64) -> f64 {
        if k > 0.0 {
            self.speed
        } else if k < 0.0 {
            -self.speed
        } else {
            0.0
        }
    }

    fn v_max(&self) -> f64 {
        self.speed.abs()
    }

    fn velocity_extrema(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub fn hopping_dispersion() -> CosineBand {
    CosineBand
}

/// Conserved post-quench occupation `n(k) = Tr[ρ c†_k c_k]`.
pub trait ModeOccupation: Debug + Send + Sync {
    fn occupation(&self, k: f64) -> f64;

    /// `η(k)`. Implementations with a closed form should override this to
    /// avoid the cancellation in `1 - n(k)`.
    fn eta(&self, k: f64) -> f64 {
        eta_clamped(self.occupation(k))
    }
}

/// Occupation after the quench from the dimer state, `n(k) = (1 + s cos k) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerOccupation {
    sign: f64,
}

impl DimerOccupation {
    pub fn sign(&self) -> f64 {
        self.sign
    }
}

impl ModeOccupation for DimerOccupation {
    fn occupation(&self, k: f64) -> f64 {
        0.5 * (1.0 + self.sign * k.cos())
    }

    // (1 - n) / n = tan²(k/2)^s, without forming 1 ± cos k.
    fn eta(&self, k: f64) -> f64 {
        2.0 * self.sign * (0.5 * k).tan().abs().ln()
    }
}

pub fn dimer_occupation() -> DimerOccupation {
    DimerOccupation { sign: DIMER_SIGN }
}

/// `k`-independent occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatOccupation(pub f64);

impl ModeOccupation for FlatOccupation {
    fn occupation(&self, _k: f64) -> f64 {
        self.0
    }
}

/// Gibbs occupation `n(k) = 1 / (1 + e^{β ε(k)})`, for which `η(k) = β ε(k)`.
#[derive(Debug, Clone)]
pub struct ThermalOccupation {
    pub beta: f64,
    pub dispersion: Arc<dyn Dispersion>,
}

impl ModeOccupation for ThermalOccupation {
    fn occupation(&self, k: f64) -> f64 {
        let x = self.beta * self.dispersion.energy(k);
        if x > 0.0 {
            let e = (-x).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + x.exp())
        }
    }

    fn eta(&self, k: f64) -> f64 {
        self.beta * self.dispersion.energy(k)
    }
}

/// `log[(1 - n) / n]` for `n` strictly inside `(0, 1)`.
pub fn eta(n: f64) -> Result<f64, ModelError> {
    if n > 0.0 && n < 1.0 {
        Ok(((1.0 - n) / n).ln())
    } else {
        Err(ModelError::OccupationDomain(n))
    }
}

/// [`eta`] after clamping `n` to `[OCCUPATION_CLAMP, 1 - OCCUPATION_CLAMP]`.
pub fn eta_clamped(n: f64) -> f64 {
    let n = n.clamp(OCCUPATION_CLAMP, 1.0 - OCCUPATION_CLAMP);
    ((1.0 - n) / n).ln()
}

/// Rényi entropy of a single fermionic mode with occupation `x`:
/// `log(x^α + (1-x)^α) / (1-α)`, and the binary entropy at `α = 1`.
///
/// `x` is clamped to `[0, 1]`; `0 log 0 = 0`.
pub fn binary_renyi(x: f64, alpha: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let y = 1.0 - x;
    if alpha == 1.0 {
        let xlx = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        xlx(x) + xlx(y)
    } else {
        (x.powf(alpha) + y.powf(alpha)).ln() / (1.0 - alpha)
    }
}

/// Parameters of a quench protocol at one time slice.
#[derive(Debug, Clone)]
pub struct QuenchSpec {
    pub dispersion: Arc<dyn Dispersion>,
    pub occupation: Arc<dyn ModeOccupation>,
    length: usize,
    time: f64,
}

impl QuenchSpec {
    /// `time` may be `f64::INFINITY`, which selects the stationary limit.
    pub fn new(
        dispersion: Arc<dyn Dispersion>,
        occupation: Arc<dyn ModeOccupation>,
        length: usize,
        time: f64,
    ) -> Result<Self, ModelError> {
        if length < 2 {
            return Err(ModelError::Length(length));
        }
        if time.is_nan() || time < 0.0 {
            return Err(ModelError::Time(time));
        }
        Ok(Self { dispersion, occupation, length, time })
    }

    /// Dimer state quenched with the hopping chain.
    pub fn dimer(length: usize, time: f64) -> Result<Self, ModelError> {
        Self::new(Arc::new(CosineBand), Arc::new(dimer_occupation()), length, time)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(&self, time: f64) -> Result<Self, ModelError> {
        Self::new(self.dispersion.clone(), self.occupation.clone(), self.length, time)
    }
}
