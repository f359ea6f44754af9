//! MUSIC pseudospectrum `P(φ) = 1 / (aᴴ(φ) P_v a(φ))`.

use num_complex::Complex64;

use super::covariance::SubspaceDecomposition;
use super::scan::SpectrumSource;
use super::spectrum::{SpatialSpectrum, SpectrumKind};
use crate::array::{steering_vector, ArrayGeometry, AngleOfArrival};
use crate::error::{Error, Result};

/// Smallest denominator; spectrum values are capped at its reciprocal.
pub const MUSIC_FLOOR: f64 = 1e-15;

/// MUSIC spectrum over an azimuth grid at a fixed elevation.
pub fn music_spectrum(
    decomp: &SubspaceDecomposition,
    geom: &ArrayGeometry,
    grid: &[f64],
    elevation: f64,
) -> Result<SpatialSpectrum> {
    if grid.is_empty() {
        return Err(Error::Empty("MUSIC grid"));
    }
    let m = geom.element_count();
    if decomp.noise_basis().nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: decomp.noise_basis().nrows(),
        });
    }
    let pv = decomp.noise_projector();
    let power = grid
        .iter()
        .map(|&phi| {
            let a = steering_vector(geom, &AngleOfArrival::new(phi, elevation)?);
            let mut q = Complex64::new(0.0, 0.0);
            for i in 0..m {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..m {
                    row += pv[(i, j)] * a[j];
                }
                q += a[i].conj() * row;
            }
            Ok(1.0 / q.re.max(MUSIC_FLOOR))
        })
        .collect::<Result<Vec<f64>>>()?;
    SpatialSpectrum::new(grid.to_vec(), power, SpectrumKind::Music)
}

/// Evaluates the MUSIC denominator through the signal subspace:
/// `aᴴ P_v a = ‖a‖² − ‖U_sᴴ a‖²`, which costs M·S instead of M².
#[derive(Debug, Clone)]
pub struct MusicScanner {
    signal_columns: Vec<Vec<Complex64>>,
}

impl MusicScanner {
    pub fn new(decomp: &SubspaceDecomposition) -> Self {
        let basis = decomp.signal_basis();
        let signal_columns = (0..basis.ncols())
            .map(|k| basis.column(k).iter().copied().collect())
            .collect();
        Self { signal_columns }
    }
}

impl SpectrumSource for MusicScanner {
    fn kind(&self) -> SpectrumKind {
        SpectrumKind::Music
    }

    fn power_at(&self, steering: &[Complex64]) -> f64 {
        let total: f64 = steering.iter().map(|z| z.norm_sqr()).sum();
        let captured: f64 = self
            .signal_columns
            .iter()
            .map(|u| {
                u.iter()
                    .zip(steering)
                    .map(|(ui, ai)| ui.conj() * ai)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        1.0 / (total - captured).max(MUSIC_FLOOR)
    }
}
