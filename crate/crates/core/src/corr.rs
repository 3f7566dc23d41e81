//! Subsystem correlation matrices `C[i][j] = ⟨c†_i c_j⟩` on sites `1..=ℓ`.
//!
//! Three builders:
//! - [`dimer_correlation`]: closed form for the dimer state evolved with the
//!   hopping chain, a stationary tridiagonal part plus a Bessel term;
//! - [`gge_correlation`]: the stationary Toeplitz matrix of any occupation;
//! - [`ring_oracle_correlation`]: brute-force evolution of the dimer state on a
//!   finite ring, used to pin the phase conventions of the closed form.
//!
//! Formulas use 1-based site labels; storage is 0-based. Every constructor
//! checks Hermiticity and that the spectrum lies in `[0, 1]`, and keeps the
//! eigendecomposition for later use.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModeOccupation, DIMER_SIGN};
use crate::quad::{integrate_with_panel_width, KWindow, QuadError};
use crate::specfun::{bessel_j_row, BesselError};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const SPECTRUM_TOL: f64 = 1e-10;
pub const DEFAULT_RING: usize = 4096;
/// Absolute tolerance of each Toeplitz entry in [`gge_correlation`].
pub const STATIONARY_ENTRY_TOL: f64 = 1e-12;

/// Overall sign of the Bessel term of [`dimer_correlation`], fixed against
/// [`ring_oracle_correlation`] for dimers on sites `(1, 2), (3, 4), …`.
pub const DIMER_BESSEL_SIGN: f64 = -1.0;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("subsystem length must be at least 2, got {0}")]
    Length(usize),
    #[error("time must be nonnegative and not NaN, got {0}")]
    Time(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("correlation spectrum [{min}, {max}] leaves [0, 1]")]
    Spectrum { min: f64, max: f64 },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("ring size {ring} must be even and at least 4 * {length}")]
    RingSize { ring: usize, length: usize },
    #[error("light cone 2 v_max t = {travel} wraps the ring (limit {limit})")]
    WrapAround { travel: f64, limit: f64 },
    #[error("binary matrix dump has {0} bytes, not 16 n^2")]
    DumpSize(usize),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where a correlation matrix came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationSource {
    Dimer { time: f64 },
    Stationary,
    RingOracle { ring: usize, time: f64 },
    External,
}

impl CorrelationSource {
    /// Time after the quench; `∞` for the stationary state.
    pub fn time(&self) -> Option<f64> {
        match *self {
            Self::Dimer { time } | Self::RingOracle { time, .. } => Some(time),
            Self::Stationary => Some(f64::INFINITY),
            Self::External => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: Mat<C64>,
    source: CorrelationSource,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<C64>,
}

impl CorrelationMatrix {
    pub fn new(entries: Mat<C64>, source: CorrelationSource) -> Result<Self, CorrError> {
        let n = entries.nrows();
        if n != entries.ncols() || n == 0 {
            return Err(CorrError::Length(n));
        }
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for i in j..n {
                dev = dev.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        if !(dev <= HERMITIAN_TOL) {
            return Err(CorrError::NotHermitian(dev));
        }
        let evd = entries
            .as_ref()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| CorrError::Eigen(format!("{e:?}")))?;
        let eigenvalues: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min >= -SPECTRUM_TOL && max <= 1.0 + SPECTRUM_TOL) {
            return Err(CorrError::Spectrum { min, max });
        }
        let eigenvectors = evd.U().to_owned();
        Ok(Self { entries, source, eigenvalues, eigenvectors })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, C64> {
        self.entries.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn source(&self) -> CorrelationSource {
        self.source
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, column `a` belonging to `eigenvalues()[a]`.
    pub fn eigenvectors(&self) -> MatRef<'_, C64> {
        self.eigenvectors.as_ref()
    }

    pub fn trace(&self) -> f64 {
        (0..self.size()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Row-major `(re, im)` pairs of little-endian `f64`, no header.
    pub fn write_le(&self, mut w: impl Write) -> io::Result<()> {
        let n = self.size();
        let mut buf = Vec::with_capacity(16 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.entries[(i, j)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        w.write_all(&buf)
    }

    /// Reads a dump written by [`write_le`](Self::write_le); the size is inferred.
    pub fn read_le(mut r: impl Read, source: CorrelationSource) -> Result<Self, CorrError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let pairs = bytes.len() / 16;
        let n = (pairs as f64).sqrt().round() as usize;
        if bytes.len() % 16 != 0 || n * n != pairs || n == 0 {
            return Err(CorrError::DumpSize(bytes.len()));
        }
        let read = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let entries = Mat::from_fn(n, n, |i, j| {
            let off = 16 * (i * n + j);
            C64::new(read(off), read(off + 8))
        });
        Self::new(entries, source)
    }
}

/// `e^{-iπm/2}` for integer `m`, exactly.
fn quarter_phase(m: i64) -> C64 {
    match m.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// Stationary dimer correlations: `1/2` on the diagonal, `s/4` on the first off-diagonals.
fn dimer_stationary_entry(n: i64) -> f64 {
    match n.abs() {
        0 => 0.5,
        1 => 0.25 * DIMER_SIGN,
        _ => 0.0,
    }
}

/// Correlation matrix of sites `1..=ℓ` at time `t` after the quench from the
/// dimer state with `H = -½ Σ c†_i c_{i+1} + h.c.`:
///
/// `C_ij = C^∞_ij ∓ i (i-j)/(4t) e^{-iπ(i+j)/2} J_{i-j}(2t)`,
///
/// with `(i-j) J_{i-j}(2t) / t` evaluated as `J_{i-j-1}(2t) + J_{i-j+1}(2t)` so
/// that `t = 0` needs no special case. `t = ∞` returns `C^∞`.
pub fn dimer_correlation(length: usize, time: f64) -> Result<CorrelationMatrix, CorrError> {
    if length < 2 {
        return Err(CorrError::Length(length));
    }
    if time.is_nan() || time < 0.0 {
        return Err(CorrError::Time(time));
    }
    let source = CorrelationSource::Dimer { time };
    if time.is_infinite() {
        let entries = Mat::from_fn(length, length, |i, j| {
            C64::new(dimer_stationary_entry(i as i64 - j as i64), 0.0)
        });
        return CorrelationMatrix::new(entries, source);
    }
    let row = bessel_j_row(length, 2.0 * time)?;
    let entries = Mat::from_fn(length, length, |i, j| {
        let (si, sj) = (i as i64 + 1, j as i64 + 1);
        let n = si - sj;
        let bessel = 0.25 * (row.get(n - 1).unwrap() + row.get(n + 1).unwrap());
        let term = C64::new(0.0, DIMER_BESSEL_SIGN * bessel) * quarter_phase(si + sj);
        C64::new(dimer_stationary_entry(n), 0.0) + term
    });
    CorrelationMatrix::new(entries, source)
}

/// Toeplitz matrix `C[i][j] = ∫ dk/2π n(k) e^{ik(i-j)}` of the stationary state.
pub fn gge_correlation(length: usize, occupation: &dyn ModeOccupation) -> Result<CorrelationMatrix, CorrError> {
    if length < 2 {
        return Err(CorrError::Length(length));
    }
    let zone = KWindow::full_zone();
    let symbol: Vec<C64> = (0..length)
        .into_par_iter()
        .map(|d| {
            let width = 2.0 * PI / (d.max(1) as f64);
            integrate_with_panel_width(
                |k| C64::from_polar(occupation.occupation(k), k * d as f64),
                &zone,
                STATIONARY_ENTRY_TOL,
                width,
            )
        })
        .collect::<Result<_, _>>()?;
    let entries = Mat::from_fn(length, length, |i, j| {
        if i >= j {
            symbol[i - j]
        } else {
            symbol[j - i].conj()
        }
    });
    CorrelationMatrix::new(entries, CorrelationSource::Stationary)
}

/// Exact evolution of the dimer state `∏_j (c†_{2j-1} + c†_{2j}) |0⟩ / 2^{L/4}`
/// on a periodic ring of `ring` sites, restricted to sites `1..=ℓ`.
///
/// Uses `C(t) = conj(U) C(0) Uᵀ` with the plane-wave propagator
/// `U_{jm} = (1/L) Σ_k e^{ik(j-m)} e^{it cos k}` of the hopping chain.
pub fn ring_oracle_correlation(length: usize, ring: usize, time: f64) -> Result<CorrelationMatrix, CorrError> {
    if length < 2 {
        return Err(CorrError::Length(length));
    }
    if !time.is_finite() || time < 0.0 {
        return Err(CorrError::Time(time));
    }
    if ring % 2 != 0 || ring < 4 * length {
        return Err(CorrError::RingSize { ring, length });
    }
    let travel = 2.0 * time;
    let limit = ring as f64 / 2.0 - length as f64;
    if travel >= limit {
        return Err(CorrError::WrapAround { travel, limit });
    }

    let l = ring;
    let twiddle: Vec<C64> = (0..l).map(|m| C64::from_polar(1.0, 2.0 * PI * m as f64 / l as f64)).collect();
    let evolution: Vec<C64> = (0..l)
        .map(|m| C64::from_polar(1.0, time * (2.0 * PI * m as f64 / l as f64).cos()))
        .collect();
    let inv_l = 1.0 / l as f64;
    // Propagator as a function of (j - m) mod L.
    let kernel: Vec<C64> = (0..l)
        .into_par_iter()
        .map(|d| {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..l {
                acc += twiddle[(m * d) % l] * evolution[m];
            }
            acc * inv_l
        })
        .collect();
    let prop = |j: usize, m: usize| kernel[(j + l - m) % l];

    // Dimer-summed propagator columns w[i][p] = U_{i,2p} + U_{i,2p+1}.
    let pairs = l / 2;
    let w: Vec<Vec<C64>> = (0..length)
        .map(|i| (0..pairs).map(|p| prop(i, 2 * p) + prop(i, 2 * p + 1)).collect())
        .collect();
    let mut entries = Mat::<C64>::zeros(length, length);
    for i in 0..length {
        for j in i..length {
            let s: C64 = w[i].iter().zip(&w[j]).map(|(a, b)| a.conj() * b).sum();
            entries[(i, j)] = 0.5 * s;
            entries[(j, i)] = 0.5 * s.conj();
        }
    }
    CorrelationMatrix::new(entries, CorrelationSource::RingOracle { ring, time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dimer_occupation, FlatOccupation, ModeOccupation};

    fn max_diff(a: &CorrelationMatrix, b: &CorrelationMatrix) -> f64 {
        let n = a.size();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                m = m.max((a.get(i, j) - b.get(i, j)).norm());
            }
        }
        m
    }

    #[test]
    fn ring_oracle_at_time_zero_reads_off_the_dimers() {
        let c = ring_oracle_correlation(6, 64, 0.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j || i / 2 == j / 2 { 0.5 } else { 0.0 };
                assert!((c.get(i, j) - C64::new(want, 0.0)).norm() < 1e-14, "({i}, {j})");
            }
        }
    }

    #[test]
    fn ring_oracle_conserves_density() {
        for t in [0.0, 0.7, 3.1, 20.0] {
            let c = ring_oracle_correlation(8, 256, t).unwrap();
            assert!((c.trace() - 4.0).abs() < 1e-10, "t = {t}");
            for i in 0..8 {
                assert!((c.get(i, i).re - 0.5).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ring_oracle_rejects_bad_geometry() {
        assert!(matches!(ring_oracle_correlation(8, 30, 1.0), Err(CorrError::RingSize { .. })));
        assert!(matches!(ring_oracle_correlation(8, 33, 1.0), Err(CorrError::RingSize { .. })));
        assert!(matches!(ring_oracle_correlation(8, 64, 12.0), Err(CorrError::WrapAround { .. })));
    }

    #[test]
    fn closed_form_diagonal_is_half() {
        for t in [0.0, 0.7, 3.1] {
            let c = dimer_correlation(8, t).unwrap();
            for i in 0..8 {
                assert!((c.get(i, i) - C64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    /// Golden check of the frozen phase convention.
    #[test]
    fn closed_form_matches_ring_oracle() {
        for &(ell, t) in &[(8usize, 0.0), (8, 0.7), (8, 1.3), (8, 3.1), (5, 2.2)] {
            let closed = dimer_correlation(ell, t).unwrap();
            let oracle = ring_oracle_correlation(ell, DEFAULT_RING, t).unwrap();
            let d = max_diff(&closed, &oracle);
            assert!(d < 1e-8, "ell = {ell}, t = {t}: {d:e}");
        }
    }

    #[test]
    fn flipping_the_bessel_sign_breaks_agreement() {
        let closed = dimer_correlation(8, 1.3).unwrap();
        let oracle = ring_oracle_correlation(8, 1024, 1.3).unwrap();
        let stationary = dimer_correlation(8, f64::INFINITY).unwrap();
        // flipped = 2 C^∞ - C
        let mut worst: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let flipped = 2.0 * stationary.get(i, j) - closed.get(i, j);
                worst = worst.max((flipped - oracle.get(i, j)).norm());
            }
        }
        assert!(worst > 0.1);
    }

    #[test]
    fn late_times_approach_the_stationary_matrix() {
        let late = dimer_correlation(6, 1e4).unwrap();
        let gge = gge_correlation(6, &dimer_occupation()).unwrap();
        let d = max_diff(&late, &gge);
        // |J_n(2t)| ≲ (π t)^{-1/2}
        assert!(d < 0.5 / (PI * 1e4).sqrt(), "{d:e}");
    }

    #[test]
    fn bessel_term_has_the_two_site_phase_structure() {
        let c = dimer_correlation(10, 2.4).unwrap();
        let stat = dimer_correlation(10, f64::INFINITY).unwrap();
        for i in 0..10usize {
            for j in 0..10usize {
                let diff = c.get(i, j) - stat.get(i, j);
                let n = i as i64 - j as i64;
                // odd separations give real corrections, even ones imaginary
                if n % 2 != 0 {
                    assert!(diff.im.abs() < 1e-15);
                } else {
                    assert!(diff.re.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn stationary_builder_examples() {
        let half = gge_correlation(5, &FlatOccupation(0.5)).unwrap();
        let full = gge_correlation(5, &FlatOccupation(1.0)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((half.get(i, j) - C64::new(0.5 * d, 0.0)).norm() < 1e-12);
                assert!((full.get(i, j) - C64::new(d, 0.0)).norm() < 1e-12);
            }
        }
        let occ = dimer_occupation();
        let c = gge_correlation(4, &occ).unwrap();
        for i in 0..4usize {
            for j in 0..4usize {
                let want = match i.abs_diff(j) {
                    0 => 0.5,
                    1 => 0.25 * occ.sign(),
                    _ => 0.0,
                };
                assert!((c.get(i, j) - C64::new(want, 0.0)).norm() < 1e-12, "({i}, {j})");
            }
        }
    }

    #[test]
    fn stationary_dimer_matches_time_infinity_closed_form() {
        let a = gge_correlation(12, &dimer_occupation()).unwrap();
        let b = dimer_correlation(12, f64::INFINITY).unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn dimer_occupation_sign_agrees_with_direct_state_construction() {
        // ⟨D|c†_k c_k|D⟩ on an L = 8 ring from C(0): n(k) = (1/L) Σ_ij e^{-ik(i-j)} C_ij
        // for c_j = L^{-1/2} Σ_k e^{ikj} c_k.
        let l = 8usize;
        let occ = dimer_occupation();
        for m in 0..l {
            let k = 2.0 * PI * m as f64 / l as f64;
            let mut n = C64::new(0.0, 0.0);
            for i in 0..l {
                for j in 0..l {
                    let cij = if i == j || i / 2 == j / 2 { 0.5 } else { 0.0 };
                    n += C64::from_polar(cij, -k * (i as f64 - j as f64));
                }
            }
            n /= l as f64;
            assert!((n.re - occ.occupation(k)).abs() < 1e-14, "k = {k}");
            assert!(n.im.abs() < 1e-14);
        }
    }

    #[test]
    fn construction_rejects_invalid_matrices() {
        let not_herm = Mat::from_fn(2, 2, |i, j| if i < j { C64::new(0.1, 0.0) } else { C64::new(0.5, 0.0) * (i == j) as u8 as f64 });
        assert!(matches!(CorrelationMatrix::new(not_herm, CorrelationSource::External), Err(CorrError::NotHermitian(_))));
        let too_big = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(1.5, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(matches!(CorrelationMatrix::new(too_big, CorrelationSource::External), Err(CorrError::Spectrum { .. })));
        assert!(matches!(dimer_correlation(1, 1.0), Err(CorrError::Length(1))));
        assert!(matches!(dimer_correlation(4, -1.0), Err(CorrError::Time(_))));
    }

    #[test]
    fn binary_dump_round_trips() {
        let c = dimer_correlation(7, 1.9).unwrap();
        let mut buf = Vec::new();
        c.write_le(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 * 49);
        assert_eq!(&buf[0..8], &0.5f64.to_le_bytes());
        let back = CorrelationMatrix::read_le(buf.as_slice(), c.source()).unwrap();
        assert_eq!(max_diff(&c, &back), 0.0);
        assert!(matches!(CorrelationMatrix::read_le(&buf[..20], c.source()), Err(CorrError::DumpSize(20))));
    }

    #[test]
    fn spectrum_and_trace_invariants() {
        for t in [0.0, 0.4, 5.0, 40.0] {
            let c = dimer_correlation(30, t).unwrap();
            assert!((c.trace() - 15.0).abs() < 1e-8);
            assert!(c.eigenvalues().iter().all(|&z| (-1e-10..=1.0 + 1e-10).contains(&z)));
        }
    }
}
