//! Uniform circular array model and synthetic baseband snapshots.
//!
//! Lengths are measured in wavelengths, so the wavenumber is `2π` per unit
//! length. Element `m` (1-based) sits at azimuth `2πm/M` on a circle of the
//! configured radius. A plane wave from azimuth `φ` and elevation `θ`
//! (measured from the array normal) produces the element response
//! `exp(j·β·r·sin θ·cos(φ − φ_m))`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    element_count: usize,
    radius: f64,
    wavenumber: f64,
    element_azimuths: Vec<f64>,
}

impl ArrayGeometry {
    /// UCA with `element_count` elements on a circle of `radius` wavelengths.
    pub fn new(element_count: usize, radius: f64) -> Result<Self> {
        if element_count < 2 {
            return Err(Error::invalid("a UCA needs at least two elements"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        let element_azimuths = (1..=element_count)
            .map(|m| TAU * m as f64 / element_count as f64)
            .collect();
        Ok(Self {
            element_count,
            radius,
            wavenumber: TAU,
            element_azimuths,
        })
    }

    /// UCA whose neighbouring elements are `spacing` wavelengths apart (chord length).
    pub fn with_element_spacing(element_count: usize, spacing: f64) -> Result<Self> {
        if element_count < 2 {
            return Err(Error::invalid("a UCA needs at least two elements"));
        }
        let radius = spacing / (2.0 * (PI / element_count as f64).sin());
        Self::new(element_count, radius)
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    /// Radius in wavelengths.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn element_azimuths(&self) -> &[f64] {
        &self.element_azimuths
    }

    /// Chord distance between neighbouring elements, in wavelengths.
    pub fn element_spacing(&self) -> f64 {
        2.0 * self.radius * (PI / self.element_count as f64).sin()
    }
}

/// Azimuth in `[0, 2π)` and elevation in `[0, π/2]`.
///
/// A planar UCA responds to `sin θ`, so `θ` and `π − θ` are indistinguishable;
/// elevations are therefore limited to the upper quarter sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleOfArrival {
    azimuth: f64,
    elevation: f64,
}

impl AngleOfArrival {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::NonFinite("angle of arrival"));
        }
        if !(0.0..=FRAC_PI_2).contains(&elevation) {
            return Err(Error::invalid(format!(
                "elevation {elevation} outside [0, π/2]"
            )));
        }
        Ok(Self {
            azimuth: wrap_azimuth(azimuth),
            elevation,
        })
    }

    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg.to_radians(), elevation_deg.to_radians())
    }

    /// In-plane arrival (`θ = π/2`).
    pub fn azimuth_only(azimuth: f64) -> Self {
        Self {
            azimuth: wrap_azimuth(azimuth),
            elevation: FRAC_PI_2,
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth.to_degrees()
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation.to_degrees()
    }

    /// Same elevation, azimuth shifted by `delta` and re-wrapped.
    pub fn rotated(&self, delta: f64) -> Self {
        Self {
            azimuth: wrap_azimuth(self.azimuth + delta),
            elevation: self.elevation,
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_azimuth(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Waveform {
    /// Constant-envelope symbols with uniformly random phase.
    #[default]
    RandomPhase,
    /// Circular complex Gaussian symbols.
    ComplexGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModel {
    source_power: f64,
    noise_variance: f64,
    waveform: Waveform,
}

impl SignalModel {
    pub fn new(source_power: f64, noise_variance: f64, waveform: Waveform) -> Result<Self> {
        if !(source_power.is_finite() && source_power > 0.0) {
            return Err(Error::invalid("source power must be positive"));
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::invalid("noise variance must be non-negative"));
        }
        Ok(Self {
            source_power,
            noise_variance,
            waveform,
        })
    }

    /// Unit-power source with per-element SNR `snr_db`; `+∞` means noiseless.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("unusable SNR {snr_db} dB")));
        }
        let noise_variance = if snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-snr_db / 10.0)
        };
        Self::new(1.0, noise_variance, Waveform::RandomPhase)
    }

    pub fn noiseless() -> Self {
        Self {
            source_power: 1.0,
            noise_variance: 0.0,
            waveform: Waveform::RandomPhase,
        }
    }

    pub fn with_waveform(mut self, waveform: Waveform) -> Self {
        self.waveform = waveform;
        self
    }

    pub fn source_power(&self) -> f64 {
        self.source_power
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn waveform(&self) -> Waveform {
        self.waveform
    }

    pub fn snr_db(&self) -> f64 {
        if self.noise_variance == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (self.source_power / self.noise_variance).log10()
        }
    }
}

/// Independent seeds for the transmitted symbols and for receiver noise.
///
/// Receivers that observe the same transmission share `symbols`; each
/// physical receiver chain has its own `noise` seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalSeeds {
    pub symbols: u64,
    pub noise: u64,
}

impl SignalSeeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            symbols: derive_seed(seed, &[0x5359_4d42]),
            noise: derive_seed(seed, &[0x4e4f_4953]),
        }
    }

    /// Same symbols, a different receiver noise stream.
    pub fn receiver(&self, index: u64) -> Self {
        Self {
            symbols: self.symbols,
            noise: derive_seed(self.noise, &[index]),
        }
    }
}

/// Complex baseband samples: one row per receiver, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<Complex64>,
    snr_db: f64,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>, snr_db: f64) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::Empty("snapshot matrix"));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("snapshot matrix"));
        }
        Ok(Self { data, snr_db })
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn receivers(&self) -> usize {
        self.data.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.data.ncols()
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Samples of a single-receiver (1×N) matrix, or of row 0 otherwise.
    pub fn row(&self, index: usize) -> Vec<Complex64> {
        self.data.row(index).iter().copied().collect()
    }
}

/// Array response `a(φ, θ)` of the UCA.
pub fn steering_vector(geom: &ArrayGeometry, aoa: &AngleOfArrival) -> Vec<Complex64> {
    let scale = geom.wavenumber * geom.radius * aoa.elevation.sin();
    geom.element_azimuths
        .iter()
        .map(|&phi_m| Complex64::from_polar(1.0, scale * (aoa.azimuth - phi_m).cos()))
        .collect()
}

/// Array response for in-plane arrivals (`θ = π/2`).
pub fn steering_vector_azimuth_only(geom: &ArrayGeometry, azimuth: f64) -> Vec<Complex64> {
    steering_vector(geom, &AngleOfArrival::azimuth_only(azimuth))
}

pub(crate) fn complex_normal(rng: &mut SimRng, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

pub(crate) fn draw_symbols(model: &SignalModel, n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_from_seed(seed);
    match model.waveform {
        Waveform::RandomPhase => {
            let amp = model.source_power.sqrt();
            (0..n)
                .map(|_| Complex64::from_polar(amp, TAU * rng.random::<f64>()))
                .collect()
        }
        Waveform::ComplexGaussian => (0..n)
            .map(|_| complex_normal(&mut rng, model.source_power))
            .collect(),
    }
}

/// Noise samples in draw order; row-major when used for a matrix.
pub(crate) fn draw_noise(variance: f64, count: usize, seed: u64) -> Vec<Complex64> {
    if variance == 0.0 {
        return vec![Complex64::new(0.0, 0.0); count];
    }
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| complex_normal(&mut rng, variance)).collect()
}

/// Full-array snapshots `X = a s + V` (M×N).
///
/// Noise is drawn row by row from `seeds.noise`, so row 0 matches the noise of
/// a single-receiver output synthesized from the same seeds.
pub fn synthesize_snapshots(
    geom: &ArrayGeometry,
    aoa: &AngleOfArrival,
    model: &SignalModel,
    n: usize,
    seeds: SignalSeeds,
) -> Result<SnapshotMatrix> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let a = steering_vector(geom, aoa);
    let s = draw_symbols(model, n, seeds.symbols);
    let m = geom.element_count;
    let noise = draw_noise(model.noise_variance, m * n, seeds.noise);
    let data = DMatrix::from_fn(m, n, |row, col| a[row] * s[col] + noise[row * n + col]);
    SnapshotMatrix::new(data, model.snr_db())
}

/// Output of one analog beam `x[n] = wᴴ·a·s[n] + v[n]` (1×N).
///
/// `v` is the noise of the single receiver chain behind the beamformer, with
/// the per-element variance of the model.
pub fn synthesize_beam_signal(
    geom: &ArrayGeometry,
    aoa: &AngleOfArrival,
    beam_weights: &[Complex64],
    model: &SignalModel,
    n: usize,
    seeds: SignalSeeds,
) -> Result<SnapshotMatrix> {
    if beam_weights.len() != geom.element_count {
        return Err(Error::DimensionMismatch {
            expected: geom.element_count,
            actual: beam_weights.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let gain = beam_gain(beam_weights, &steering_vector(geom, aoa));
    let s = draw_symbols(model, n, seeds.symbols);
    let v = draw_noise(model.noise_variance, n, seeds.noise);
    let data = DMatrix::from_fn(1, n, |_, col| gain * s[col] + v[col]);
    SnapshotMatrix::new(data, model.snr_db())
}

/// `wᴴ a`.
pub fn beam_gain(weights: &[Complex64], response: &[Complex64]) -> Complex64 {
    weights
        .iter()
        .zip(response)
        .map(|(w, a)| w.conj() * a)
        .sum()
}
