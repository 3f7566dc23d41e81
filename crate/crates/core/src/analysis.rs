//! Exact versus predicted: error norms of coupling profiles, parity and
//! light-cone diagnostics, and Rényi entropies from a correlation spectrum.

use thiserror::Error;

use crate::corr::CorrelationMatrix;
use crate::model::{binary_renyi, ModelError};
use crate::peschel::{coupling_profile, CouplingProfile, EntanglementHamiltonian, PeschelError};
use crate::qpp::KernelPrediction;

/// Fraction of the interval dropped at each end before comparing.
pub const DEFAULT_EXCLUSION: f64 = 0.05;
/// Extra distance kept from the light cones in [`light_cone_scan`], as a fraction of `ℓ`.
pub const LIGHT_CONE_MARGIN: f64 = 0.05;
const ZETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("profile and prediction disagree: {0}")]
    Shape(String),
    #[error("exclusion {0} must lie in [0, 0.5)")]
    Exclusion(f64),
    #[error("no site pairs left to compare (length {length}, distance {distance}, exclusion {exclusion})")]
    EmptyRange { length: usize, distance: usize, exclusion: f64 },
    #[error("light cones have merged: 4 v_max t = {reach} >= {length}")]
    ConesMerged { reach: f64, length: usize },
    #[error("dark region between the light cones is empty (ℓ = {length}, t = {time})")]
    NoDarkRegion { length: usize, time: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Peschel(#[from] PeschelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub distance: usize,
    pub time: f64,
    pub length: usize,
    pub max_abs_error: f64,
    pub rms_error: f64,
    /// Largest exact coupling magnitude over the compared sites.
    pub peak_coupling: f64,
    pub excluded_fraction: f64,
    /// Largest real part (even `z`) or imaginary part (odd `z`) of the exact
    /// couplings, relative to `peak_coupling`.
    pub parity_violation: f64,
    /// Compared sites, 1-based, inclusive.
    pub first_site: usize,
    pub last_site: usize,
}

impl ComparisonReport {
    pub fn relative_error(&self) -> f64 {
        if self.peak_coupling > 0.0 {
            self.max_abs_error / self.peak_coupling
        } else {
            self.max_abs_error
        }
    }
}

/// Sites `j` (1-based) with `exclusion·ℓ ≤ j ≤ (1 - exclusion)·ℓ - z`.
pub fn comparison_range(length: usize, distance: usize, exclusion: f64) -> Option<(usize, usize)> {
    let l = length as f64;
    let first = (exclusion * l).ceil().max(1.0) as usize;
    let last_f = ((1.0 - exclusion) * l - distance as f64).floor();
    if last_f < 1.0 {
        return None;
    }
    let last = (last_f as usize).min(length.saturating_sub(distance));
    (first <= last).then_some((first, last))
}

pub fn compare(
    profile: &CouplingProfile,
    prediction: &KernelPrediction,
    exclusion: f64,
) -> Result<ComparisonReport, AnalysisError> {
    if !(0.0..0.5).contains(&exclusion) {
        return Err(AnalysisError::Exclusion(exclusion));
    }
    if profile.length != prediction.length {
        return Err(AnalysisError::Shape(format!("length {} vs {}", profile.length, prediction.length)));
    }
    if profile.distance != prediction.distance {
        return Err(AnalysisError::Shape(format!("distance {} vs {}", profile.distance, prediction.distance)));
    }
    if profile.values.len() != prediction.values.len() {
        return Err(AnalysisError::Shape(format!(
            "{} vs {} values",
            profile.values.len(),
            prediction.values.len()
        )));
    }
    if let Some(t) = profile.time {
        if t != prediction.time {
            return Err(AnalysisError::Shape(format!("time {t} vs {}", prediction.time)));
        }
    }
    let (length, distance) = (profile.length, profile.distance);
    let (first, last) = comparison_range(length, distance, exclusion)
        .ok_or(AnalysisError::EmptyRange { length, distance, exclusion })?;

    let odd = distance % 2 == 1;
    let (mut max_err, mut sq, mut peak, mut wrong) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in first..=last {
        let h = profile.values[j - 1];
        let e = (h - prediction.values[j - 1]).norm();
        max_err = max_err.max(e);
        sq += e * e;
        peak = peak.max(h.norm());
        wrong = wrong.max(if odd { h.im.abs() } else { h.re.abs() });
    }
    let count = last - first + 1;
    Ok(ComparisonReport {
        distance,
        time: prediction.time,
        length,
        max_abs_error: max_err,
        rms_error: (sq / count as f64).sqrt(),
        peak_coupling: peak,
        excluded_fraction: 1.0 - count as f64 / profile.values.len() as f64,
        parity_violation: if peak > 0.0 { wrong / peak } else { 0.0 },
        first_site: first,
        last_site: last,
    })
}

/// `Σ_a h_α(ζ_a)` over the correlation spectrum.
pub fn renyi_exact(c: &CorrelationMatrix, alpha: f64) -> Result<f64, AnalysisError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::RenyiIndex(alpha).into());
    }
    Ok(c.eigenvalues()
        .iter()
        .map(|&z| binary_renyi(z.clamp(ZETA_FLOOR, 1.0 - ZETA_FLOOR), alpha))
        .sum())
}

/// Largest `|h[j][j+z]|` with `2 v_max t + m ≤ j ≤ ℓ - 2 v_max t - m`, `m = 0.05 ℓ`:
/// the region no entangled pair has reached yet.
pub fn light_cone_scan(h: &EntanglementHamiltonian, t: f64, z: usize, v_max: f64) -> Result<f64, AnalysisError> {
    let length = h.size();
    let l = length as f64;
    let reach = 4.0 * v_max * t;
    if !(reach < l) {
        return Err(AnalysisError::ConesMerged { reach, length });
    }
    let profile = coupling_profile(h, z)?;
    let margin = LIGHT_CONE_MARGIN * l;
    let lo = (2.0 * v_max * t + margin).ceil().max(1.0) as usize;
    let hi_f = (l - 2.0 * v_max * t - margin).floor();
    let hi = if hi_f < 1.0 { 0 } else { (hi_f as usize).min(length - z) };
    if lo > hi {
        return Err(AnalysisError::NoDarkRegion { length, time: t });
    }
    Ok(profile.values[lo - 1..hi].iter().fold(0.0, |m, v| m.max(v.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::{dimer_correlation, gge_correlation, CorrelationSource};
    use crate::model::{dimer_occupation, ModeOccupation};
    use crate::peschel::extract_eh;
    use crate::qpp::{predict_profile, SamplingConvention};
    use crate::model::QuenchSpec;
    use faer::Mat;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn profile(values: Vec<C64>, length: usize, distance: usize, time: f64) -> CouplingProfile {
        CouplingProfile { distance, values, time: Some(time), length }
    }

    fn prediction(values: Vec<C64>, length: usize, distance: usize, time: f64) -> KernelPrediction {
        KernelPrediction {
            length,
            time,
            distance,
            convention: SamplingConvention::Midpoint,
            positions: (1..=values.len()).map(|j| j as f64).collect(),
            values,
        }
    }

    #[test]
    fn identical_inputs_have_no_error() {
        let vals: Vec<C64> = (0..19).map(|j| C64::new(1.0 / (1.0 + j as f64), 0.0)).collect();
        let r = compare(&profile(vals.clone(), 20, 1, 2.0), &prediction(vals, 20, 1, 2.0), 0.05).unwrap();
        assert_eq!(r.max_abs_error, 0.0);
        assert_eq!(r.rms_error, 0.0);
        assert_eq!((r.first_site, r.last_site), (1, 18));
        assert!((r.excluded_fraction - 1.0 / 19.0).abs() < 1e-15);
        assert!(r.peak_coupling > 0.0);
    }

    #[test]
    fn range_and_metrics_by_hand() {
        let exact: Vec<C64> = (1..=8).map(|j| C64::new(j as f64, 0.5)).collect();
        let pred: Vec<C64> = (1..=8).map(|j| C64::new(j as f64 + if j == 3 { 2.0 } else { 0.0 }, 0.5)).collect();
        let r = compare(&profile(exact, 10, 2, 1.0), &prediction(pred, 10, 2, 1.0), 0.2).unwrap();
        // 2 ≤ j ≤ 6
        assert_eq!((r.first_site, r.last_site), (2, 6));
        assert_eq!(r.max_abs_error, 2.0);
        assert!((r.rms_error - (4.0f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!((r.peak_coupling - C64::new(6.0, 0.5).norm()).abs() < 1e-15);
        // even z: real part is the wrong component
        assert!((r.parity_violation - 6.0 / C64::new(6.0, 0.5).norm()).abs() < 1e-15);
    }

    #[test]
    fn mismatches_are_rejected() {
        let v = vec![C64::new(0.0, 0.0); 9];
        let p = profile(v.clone(), 10, 1, 1.0);
        assert!(matches!(compare(&p, &prediction(v.clone(), 10, 2, 1.0), 0.0), Err(AnalysisError::Shape(_))));
        assert!(matches!(compare(&p, &prediction(v.clone(), 11, 1, 1.0), 0.0), Err(AnalysisError::Shape(_))));
        assert!(matches!(compare(&p, &prediction(v.clone(), 10, 1, 2.0), 0.0), Err(AnalysisError::Shape(_))));
        assert!(matches!(compare(&p, &prediction(v[..8].to_vec(), 10, 1, 1.0), 0.0), Err(AnalysisError::Shape(_))));
        assert!(matches!(compare(&p, &prediction(v, 10, 1, 1.0), 0.5), Err(AnalysisError::Exclusion(_))));
        let short = profile(vec![C64::new(0.0, 0.0); 1], 4, 3, 1.0);
        assert!(matches!(
            compare(&short, &prediction(vec![C64::new(0.0, 0.0)], 4, 3, 1.0), 0.3),
            Err(AnalysisError::EmptyRange { .. })
        ));
    }

    #[test]
    fn renyi_examples() {
        let half = CorrelationMatrix::new(
            Mat::from_fn(5, 5, |i, j| C64::new(if i == j { 0.5 } else { 0.0 }, 0.0)),
            CorrelationSource::External,
        )
        .unwrap();
        assert!((renyi_exact(&half, 1.0).unwrap() - 5.0 * 2f64.ln()).abs() < 1e-14);
        let pure = CorrelationMatrix::new(
            Mat::from_fn(3, 3, |i, j| C64::new(if i == j && i == 1 { 1.0 } else { 0.0 }, 0.0)),
            CorrelationSource::External,
        )
        .unwrap();
        for alpha in [0.5, 1.0, 2.0, 7.0] {
            assert!(renyi_exact(&pure, alpha).unwrap().abs() < 1e-12);
        }
        assert!(renyi_exact(&pure, -1.0).is_err());
    }

    #[test]
    fn stationary_entropy_is_extensive() {
        let occ = dimer_occupation();
        let ell = 120;
        let c = gge_correlation(ell, &occ).unwrap();
        for alpha in [1.0, 2.0] {
            // midpoint rule on a smooth periodic integrand
            let m = 20_000;
            let density: f64 = (0..m)
                .map(|i| binary_renyi(occ.occupation(-PI + 2.0 * PI * (i as f64 + 0.5) / m as f64), alpha))
                .sum::<f64>()
                / m as f64;
            let s = renyi_exact(&c, alpha).unwrap();
            let gap = (s - ell as f64 * density).abs() / (ell as f64 * density);
            assert!(gap < 0.05, "alpha = {alpha}: {gap}");
        }
    }

    #[test]
    fn dark_region_scan() {
        let ell = 200;
        let c = dimer_correlation(ell, 20.0).unwrap();
        let h = extract_eh(&c, 1e-4).unwrap();
        let dark = light_cone_scan(&h, 20.0, 1, 1.0).unwrap();
        assert!(dark < 1e-2, "{dark}");
        // near the edge the couplings are sizeable
        assert!(h.get(2, 3).norm() > 0.1);
        assert!(matches!(light_cone_scan(&h, 50.0, 1, 1.0), Err(AnalysisError::ConesMerged { .. })));
        assert!(matches!(light_cone_scan(&h, 48.0, 1, 1.0), Err(AnalysisError::NoDarkRegion { .. })));
        let g = extract_eh(&gge_correlation(40, &dimer_occupation()).unwrap(), 0.0).unwrap();
        assert!(matches!(light_cone_scan(&g, f64::INFINITY, 1, 1.0), Err(AnalysisError::ConesMerged { .. })));
    }

    #[test]
    fn time_zero_baseline() {
        let c = dimer_correlation(60, 0.0).unwrap();
        let h = extract_eh(&c, 1e-4).unwrap();
        // every dimer lies inside the interval, so nothing survives the cutoff
        assert_eq!(h.kept_modes(), 0);
        assert_eq!(light_cone_scan(&h, 0.0, 1, 1.0).unwrap(), 0.0);
        let spec = QuenchSpec::dimer(60, 0.0).unwrap();
        let pred = predict_profile(&spec, 1, 1e-8, SamplingConvention::Midpoint).unwrap();
        let r = compare(&coupling_profile(&h, 1).unwrap(), &pred, 0.05).unwrap();
        assert_eq!(r.max_abs_error, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn error_metrics_are_symmetric(
            a in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 15),
            b in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 15),
            exclusion in 0.0f64..0.3,
        ) {
            let va: Vec<C64> = a.iter().map(|&(r, i)| C64::new(r, i)).collect();
            let vb: Vec<C64> = b.iter().map(|&(r, i)| C64::new(r, i)).collect();
            let ab = compare(&profile(va.clone(), 16, 1, 1.0), &prediction(vb.clone(), 16, 1, 1.0), exclusion).unwrap();
            let ba = compare(&profile(vb, 16, 1, 1.0), &prediction(va, 16, 1, 1.0), exclusion).unwrap();
            prop_assert_eq!(ab.max_abs_error, ba.max_abs_error);
            prop_assert!((ab.rms_error - ba.rms_error).abs() <= 1e-15 * ab.rms_error.max(1.0));
            prop_assert!(ab.max_abs_error >= ab.rms_error);
            prop_assert!((0.0..1.0).contains(&ab.excluded_fraction));
        }

        // For α < 1, h_α(ζ) ~ ζ^α near 0 turns 1e-16 eigenvalue noise into
        // errors far above 1e-10, so the invariance is checked for α ≥ 1.
        #[test]
        fn renyi_is_permutation_invariant(t in 0.0f64..8.0, shift in 1usize..11, alpha in 1.0f64..4.0) {
            let c = dimer_correlation(12, t).unwrap();
            let p: Vec<usize> = (0..12).map(|i| (i * 5 + shift) % 12).collect();
            let cp = CorrelationMatrix::new(Mat::from_fn(12, 12, |i, j| c.get(p[i], p[j])), CorrelationSource::External).unwrap();
            prop_assert!((renyi_exact(&c, alpha).unwrap() - renyi_exact(&cp, alpha).unwrap()).abs() <= 1e-10);
        }
    }
}
