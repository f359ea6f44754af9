//! Cross-correlation switched-beam system (XSBS).
//!
//! A single directional receiver is switched across K beams, and each beam
//! output is cross-correlated with an omni-directional reference formed by
//! summing a few widely spaced elements. The spectrum value of beam k is
//! `|R_ko|²` with `R_ko = (1/N) Σ x_k[n] x_o[n]*`.
//!
//! The directional receiver and the omni receiver are separate chains with
//! independent noise. All beams of one observation see the same transmitted
//! symbols and the same directional-receiver noise record.

use num_complex::Complex64;

use super::scan::SpectrumSource;
use super::spectrum::{default_azimuth_grid, SpatialSpectrum, SpectrumKind};
use crate::array::{
    beam_gain, draw_noise, draw_symbols, steering_vector, steering_vector_azimuth_only,
    synthesize_beam_signal, ArrayGeometry, AngleOfArrival, SignalModel, SignalSeeds,
};
use crate::error::{Error, Result};

/// Element set that forms the directional beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamElements {
    /// Phased-array weights over the whole ring.
    #[default]
    All,
    /// Weights over the elements not used by the omni reference.
    NonOmni,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XsbsConfig {
    pub total_elements: usize,
    pub omni_element_indices: Vec<usize>,
    pub beam_centers: Vec<f64>,
    pub beam_elements: BeamElements,
}

impl Default for XsbsConfig {
    /// 17 elements, omni reference on elements 0, 2, 4, 6, 8 (two spacings
    /// apart) and 360 beams at 1° steps.
    fn default() -> Self {
        Self {
            total_elements: 17,
            omni_element_indices: vec![0, 2, 4, 6, 8],
            beam_centers: default_azimuth_grid(),
            beam_elements: BeamElements::All,
        }
    }
}

impl XsbsConfig {
    pub fn beam_count(&self) -> usize {
        self.beam_centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_centers.len() < 2 {
            return Err(Error::invalid("XSBS needs at least two beams"));
        }
        if !self.beam_centers.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("beam centers must be strictly increasing"));
        }
        if self
            .beam_centers
            .iter()
            .any(|&b| !(0.0..std::f64::consts::TAU).contains(&b))
        {
            return Err(Error::invalid("beam centers must lie in [0, 2π)"));
        }
        if self.omni_element_indices.is_empty() {
            return Err(Error::invalid("omni reference needs at least one element"));
        }
        let mut seen = vec![false; self.total_elements];
        for &i in &self.omni_element_indices {
            if i >= self.total_elements {
                return Err(Error::invalid(format!(
                    "omni element {i} out of range for {} elements",
                    self.total_elements
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("omni element {i} listed twice")));
            }
        }
        if self.beam_elements == BeamElements::NonOmni
            && self.omni_element_indices.len() == self.total_elements
        {
            return Err(Error::invalid("no elements left for the directional beams"));
        }
        Ok(())
    }

    fn check_geometry(&self, geom: &ArrayGeometry) -> Result<()> {
        if geom.element_count() != self.total_elements {
            return Err(Error::DimensionMismatch {
                expected: self.total_elements,
                actual: geom.element_count(),
            });
        }
        Ok(())
    }

    /// Unit weights on the omni elements, zero elsewhere.
    pub fn omni_weights(&self) -> Vec<Complex64> {
        let mut w = vec![Complex64::new(0.0, 0.0); self.total_elements];
        for &i in &self.omni_element_indices {
            w[i] = Complex64::new(1.0, 0.0);
        }
        w
    }

    /// Element mask applied to steering vectors to form directional weights.
    pub fn beam_mask(&self) -> Vec<f64> {
        let mut mask = vec![1.0; self.total_elements];
        if self.beam_elements == BeamElements::NonOmni {
            for &i in &self.omni_element_indices {
                mask[i] = 0.0;
            }
        }
        mask
    }

    /// Directional weights steered to `aoa`.
    pub fn directional_weights(&self, geom: &ArrayGeometry, aoa: &AngleOfArrival) -> Vec<Complex64> {
        steering_vector(geom, aoa)
            .into_iter()
            .zip(self.beam_mask())
            .map(|(a, m)| a * m)
            .collect()
    }
}

const DIRECTIONAL_RECEIVER: u64 = 0;
const OMNI_RECEIVER: u64 = 1;

/// XSBS azimuth spectrum, synthesizing every beam output explicitly.
///
/// Beams are steered in-plane (`θ = π/2`) at the configured beam centers.
pub fn xsbs_spectrum(
    geom: &ArrayGeometry,
    cfg: &XsbsConfig,
    aoa_truth: &AngleOfArrival,
    model: &SignalModel,
    n: usize,
    rng_seed: u64,
) -> Result<SpatialSpectrum> {
    cfg.validate()?;
    cfg.check_geometry(geom)?;
    let seeds = SignalSeeds::from_master(rng_seed);
    let xo = synthesize_beam_signal(
        geom,
        aoa_truth,
        &cfg.omni_weights(),
        model,
        n,
        seeds.receiver(OMNI_RECEIVER),
    )?
    .row(0);
    let mask = cfg.beam_mask();
    let power = cfg
        .beam_centers
        .iter()
        .map(|&center| {
            let w: Vec<Complex64> = steering_vector_azimuth_only(geom, center)
                .into_iter()
                .zip(&mask)
                .map(|(a, m)| a * *m)
                .collect();
            let xk = synthesize_beam_signal(
                geom,
                aoa_truth,
                &w,
                model,
                n,
                seeds.receiver(DIRECTIONAL_RECEIVER),
            )?
            .row(0);
            Ok(cross_correlation(&xk, &xo).norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    SpatialSpectrum::new(cfg.beam_centers.clone(), power, SpectrumKind::Xsbs)
}

/// `(1/N) Σ x[n] y[n]*`.
pub fn cross_correlation(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let sum: Complex64 = x.iter().zip(y).map(|(a, b)| a * b.conj()).sum();
    sum / x.len() as f64
}

/// Sufficient statistics of one XSBS observation.
///
/// Every directional output is `x_k = g_k s + v` with `g_k = w_kᴴ a`, so
/// `R_ko = g_k·(1/N)Σ s x_o* + (1/N)Σ v x_o*`. Storing the two correlations
/// lets any beam be evaluated in O(M) without regenerating N samples.
#[derive(Debug, Clone)]
pub struct XsbsObservation {
    response: Vec<Complex64>,
    mask: Vec<f64>,
    symbol_correlation: Complex64,
    noise_correlation: Complex64,
}

impl XsbsObservation {
    pub fn observe(
        geom: &ArrayGeometry,
        cfg: &XsbsConfig,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        cfg.check_geometry(geom)?;
        if n == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        let seeds = SignalSeeds::from_master(rng_seed);
        let xo = synthesize_beam_signal(
            geom,
            truth,
            &cfg.omni_weights(),
            model,
            n,
            seeds.receiver(OMNI_RECEIVER),
        )?
        .row(0);
        let directional = seeds.receiver(DIRECTIONAL_RECEIVER);
        let s = draw_symbols(model, n, directional.symbols);
        let v = draw_noise(model.noise_variance(), n, directional.noise);
        Ok(Self {
            response: steering_vector(geom, truth),
            mask: cfg.beam_mask(),
            symbol_correlation: cross_correlation(&s, &xo),
            noise_correlation: cross_correlation(&v, &xo),
        })
    }

    /// `R_ko` for a beam steered by `steering` (before masking).
    pub fn correlation(&self, steering: &[Complex64]) -> Complex64 {
        let gain: Complex64 = steering
            .iter()
            .zip(&self.response)
            .zip(&self.mask)
            .map(|((w, a), m)| w.conj() * a * *m)
            .sum();
        gain * self.symbol_correlation + self.noise_correlation
    }
}

impl SpectrumSource for XsbsObservation {
    fn kind(&self) -> SpectrumKind {
        SpectrumKind::Xsbs
    }

    fn power_at(&self, steering: &[Complex64]) -> f64 {
        self.correlation(steering).norm_sqr()
    }
}

/// Omni reference gain `|Σ_{m∈omni} a_m|` for a given arrival.
pub fn omni_gain(geom: &ArrayGeometry, cfg: &XsbsConfig, aoa: &AngleOfArrival) -> f64 {
    beam_gain(&cfg.omni_weights(), &steering_vector(geom, aoa)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn geom17() -> ArrayGeometry {
        ArrayGeometry::with_element_spacing(17, 0.5).unwrap()
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = XsbsConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.beam_count(), 360);
        assert_eq!(cfg.omni_weights().iter().filter(|w| w.re == 1.0).count(), 5);
    }

    #[test]
    fn config_validation() {
        let mut cfg = XsbsConfig::default();
        cfg.omni_element_indices = vec![0, 0];
        assert!(cfg.validate().is_err());
        cfg.omni_element_indices = vec![17];
        assert!(cfg.validate().is_err());
        cfg = XsbsConfig::default();
        cfg.beam_centers = vec![0.0];
        assert!(cfg.validate().is_err());
        cfg.beam_centers = vec![1.0, 0.5];
        assert!(cfg.validate().is_err());
        let cfg = XsbsConfig::default();
        let wrong = ArrayGeometry::with_element_spacing(16, 0.5).unwrap();
        let truth = AngleOfArrival::azimuth_only(1.0);
        assert!(xsbs_spectrum(&wrong, &cfg, &truth, &SignalModel::noiseless(), 4, 1).is_err());
    }

    #[test]
    fn noiseless_matched_beam_wins() {
        let cfg = XsbsConfig::default();
        let truth = AngleOfArrival::from_degrees(123.0, 90.0).unwrap();
        let s = xsbs_spectrum(&geom17(), &cfg, &truth, &SignalModel::noiseless(), 8, 3).unwrap();
        assert!((s.estimate_azimuth().degrees() - 123.0).abs() < 1e-9);
    }

    #[test]
    fn factored_matches_explicit_synthesis() {
        let cfg = XsbsConfig::default();
        let geom = geom17();
        let truth = AngleOfArrival::from_degrees(270.0, 90.0).unwrap();
        let model = SignalModel::from_snr_db(-15.0).unwrap();
        let explicit = xsbs_spectrum(&geom, &cfg, &truth, &model, 300, 42).unwrap();
        let obs = XsbsObservation::observe(&geom, &cfg, &truth, &model, 300, 42).unwrap();
        for (phi, p) in cfg.beam_centers.iter().zip(explicit.power()) {
            let q = obs.power_at(&steering_vector_azimuth_only(&geom, *phi));
            assert!((p - q).abs() <= 1e-9 * p.max(1e-12), "{p} vs {q}");
        }
    }

    #[test]
    fn beam_order_does_not_matter() {
        let geom = geom17();
        let truth = AngleOfArrival::from_degrees(40.0, 90.0).unwrap();
        let model = SignalModel::from_snr_db(-10.0).unwrap();
        let mut cfg = XsbsConfig::default();
        cfg.beam_centers = crate::estimators::spectrum::degree_grid(0.0, 10.0, 36);
        let full = xsbs_spectrum(&geom, &cfg, &truth, &model, 100, 9).unwrap();
        // scanning a subset of beams yields the same values for those beams
        let mut sub = cfg.clone();
        sub.beam_centers = cfg.beam_centers.iter().copied().step_by(3).collect();
        let part = xsbs_spectrum(&geom, &sub, &truth, &model, 100, 9).unwrap();
        for (k, p) in part.power().iter().enumerate() {
            assert_eq!(*p, full.power()[3 * k]);
        }
    }

    #[test]
    fn non_omni_mask_zeroes_reference_elements() {
        let cfg = XsbsConfig {
            beam_elements: BeamElements::NonOmni,
            ..XsbsConfig::default()
        };
        let w = cfg.directional_weights(&geom17(), &AngleOfArrival::azimuth_only(FRAC_PI_2));
        for &i in &cfg.omni_element_indices {
            assert_eq!(w[i], Complex64::new(0.0, 0.0));
        }
        assert_eq!(w.iter().filter(|z| z.norm() > 0.0).count(), 12);
    }
}
