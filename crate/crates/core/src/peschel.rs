//! Single-particle entanglement Hamiltonian `h` from `C = 1/(1 + e^h)`.
//!
//! Modes whose correlation eigenvalue lies within the cutoff of 0 or 1 are
//! projected out; `h` stays in the full site basis and vanishes on them.

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::corr::CorrelationMatrix;

pub const DEFAULT_CUTOFF: f64 = 1e-4;
/// Eigenvalues closer than this across the cutoff boundary make the projection basis-dependent.
pub const DEGENERACY_GAP: f64 = 1e-13;
const ZETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeschelError {
    #[error("cutoff {0} must lie in [0, 0.5)")]
    Cutoff(f64),
    #[error("distance {distance} must be below the subsystem length {length}")]
    Distance { distance: usize, length: usize },
}

/// Two eigenvalues straddling the cutoff boundary with a gap below [`DEGENERACY_GAP`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyWarning {
    pub kept: f64,
    pub discarded: f64,
}

/// `η(ζ) = log((1-ζ)/ζ)` with `ζ` clamped away from 0 and 1.
pub fn entanglement_energy(zeta: f64) -> f64 {
    let z = zeta.clamp(ZETA_FLOOR, 1.0 - ZETA_FLOOR);
    (1.0 - z).max(ZETA_FLOOR).ln() - z.ln()
}

#[derive(Debug, Clone)]
pub struct EntanglementHamiltonian {
    matrix: Mat<C64>,
    kept_modes: usize,
    cutoff: f64,
    energies: Vec<f64>,
    kept_zetas: Vec<f64>,
    time: Option<f64>,
    warning: Option<DegeneracyWarning>,
}

impl EntanglementHamiltonian {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn kept_modes(&self) -> usize {
        self.kept_modes
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Entanglement energies `η(ζ_a)` of the kept modes, in ascending `ζ` order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// The kept correlation eigenvalues, ascending.
    pub fn kept_zetas(&self) -> &[f64] {
        &self.kept_zetas
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn degeneracy_warning(&self) -> Option<DegeneracyWarning> {
        self.warning
    }
}

/// Diagonalizes `C`, keeps `cutoff ≤ ζ ≤ 1 - cutoff` and returns
/// `h = Σ_kept η(ζ_a) u_a u_a†`.
pub fn extract_eh(c: &CorrelationMatrix, cutoff: f64) -> Result<EntanglementHamiltonian, PeschelError> {
    if !(0.0..0.5).contains(&cutoff) {
        return Err(PeschelError::Cutoff(cutoff));
    }
    let n = c.size();
    let zetas = c.eigenvalues();
    let u = c.eigenvectors();
    let keep = |z: f64| cutoff == 0.0 || (z >= cutoff && z <= 1.0 - cutoff);
    let kept: Vec<usize> = (0..n).filter(|&a| keep(zetas[a])).collect();

    let warning = straddling_pair(zetas, &keep);
    if let Some(w) = warning {
        log::warn!(
            "near-degenerate eigenvalues {} (kept) and {} (discarded) straddle the cutoff {cutoff}",
            w.kept,
            w.discarded
        );
    }

    let energies: Vec<f64> = kept.iter().map(|&a| entanglement_energy(zetas[a])).collect();
    // Scaled kept columns: h = (U_k E) U_k†.
    let uk = Mat::from_fn(n, kept.len(), |i, b| u[(i, kept[b])]);
    let uke = Mat::from_fn(n, kept.len(), |i, b| uk[(i, b)] * energies[b]);
    let mut matrix = &uke * uk.adjoint();
    // Remove rounding asymmetry.
    for j in 0..n {
        matrix[(j, j)].im = 0.0;
        for i in j + 1..n {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)].conj());
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg.conj();
        }
    }

    Ok(EntanglementHamiltonian {
        matrix,
        kept_modes: kept.len(),
        cutoff,
        energies,
        kept_zetas: kept.iter().map(|&a| zetas[a]).collect(),
        time: c.source().time(),
        warning,
    })
}

fn straddling_pair(sorted: &[f64], keep: &impl Fn(f64) -> bool) -> Option<DegeneracyWarning> {
    sorted.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if keep(a) != keep(b) && (b - a).abs() < DEGENERACY_GAP {
            let (kept, discarded) = if keep(a) { (a, b) } else { (b, a) };
            Some(DegeneracyWarning { kept, discarded })
        } else {
            None
        }
    })
}

/// The `z`-th superdiagonal `h[j][j+z]`, `j = 1..=ℓ-z`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    pub distance: usize,
    pub values: Vec<C64>,
    pub time: Option<f64>,
    pub length: usize,
}

pub fn coupling_profile(h: &EntanglementHamiltonian, z: usize) -> Result<CouplingProfile, PeschelError> {
    let length = h.size();
    if z >= length {
        return Err(PeschelError::Distance { distance: z, length });
    }
    let values = (0..length - z).map(|j| h.get(j, j + z)).collect();
    Ok(CouplingProfile { distance: z, values, time: h.time(), length })
}
