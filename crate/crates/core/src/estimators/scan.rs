//! Precomputed steering tables and grid search over (azimuth, elevation).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectrum::{
    argmax_first, default_azimuth_grid, default_elevation_grid, SpatialSpectrum, SpectrumKind,
};
use crate::array::{steering_vector, ArrayGeometry, AngleOfArrival};
use crate::error::{Error, Result};

/// Default stride of the coarse axis in the first stage of 2-D estimation.
pub const DEFAULT_COARSE_STEP: usize = 5;

/// Anything that assigns a spatial power to a candidate steering vector.
pub trait SpectrumSource {
    fn kind(&self) -> SpectrumKind;
    fn power_at(&self, steering: &[Complex64]) -> f64;
}

/// Steering vectors of one array over an azimuth × elevation grid.
#[derive(Debug, Clone)]
pub struct ScanGrid {
    geometry: ArrayGeometry,
    azimuths: Vec<f64>,
    elevations: Vec<f64>,
    coarse_step: usize,
    table: Vec<Complex64>,
}

impl ScanGrid {
    pub fn new(
        geometry: ArrayGeometry,
        azimuths: Vec<f64>,
        elevations: Vec<f64>,
        coarse_step: usize,
    ) -> Result<Self> {
        if azimuths.is_empty() || elevations.is_empty() {
            return Err(Error::Empty("scan grid"));
        }
        if coarse_step == 0 {
            return Err(Error::invalid("coarse step must be at least 1"));
        }
        for g in [&azimuths, &elevations] {
            if !g.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::invalid("scan grids must be strictly increasing"));
            }
        }
        // snap values within rounding of the π/2 boundary
        let elevations: Vec<f64> = elevations
            .into_iter()
            .map(|e| if (e - FRAC_PI_2).abs() < 1e-12 { FRAC_PI_2 } else { e })
            .collect();
        let m = geometry.element_count();
        let mut table = Vec::with_capacity(azimuths.len() * elevations.len() * m);
        for &el in &elevations {
            for &az in &azimuths {
                let aoa = AngleOfArrival::new(az, el)?;
                table.extend(steering_vector(&geometry, &aoa));
            }
        }
        Ok(Self {
            geometry,
            azimuths,
            elevations,
            coarse_step,
            table,
        })
    }

    /// 1° azimuth and elevation grids with the default coarse stride.
    pub fn with_default_grids(geometry: ArrayGeometry) -> Result<Self> {
        Self::new(
            geometry,
            default_azimuth_grid(),
            default_elevation_grid(),
            DEFAULT_COARSE_STEP,
        )
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn coarse_step(&self) -> usize {
        self.coarse_step
    }

    pub fn steering(&self, az_index: usize, el_index: usize) -> &[Complex64] {
        let m = self.geometry.element_count();
        let start = (el_index * self.azimuths.len() + az_index) * m;
        &self.table[start..start + m]
    }

    /// Index of the in-plane elevation `π/2`, required for azimuth-only scans.
    pub fn planar_elevation_index(&self) -> Result<usize> {
        self.elevations
            .iter()
            .position(|&e| e == FRAC_PI_2)
            .ok_or_else(|| Error::invalid("elevation grid does not contain π/2"))
    }

    fn resolution(grid: &[f64]) -> f64 {
        if grid.len() < 2 {
            0.0
        } else {
            grid[1] - grid[0]
        }
    }

    pub fn azimuth_resolution(&self) -> f64 {
        Self::resolution(&self.azimuths)
    }

    pub fn elevation_resolution(&self) -> f64 {
        Self::resolution(&self.elevations)
    }
}

/// Which angle the coarse first stage resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOrder {
    /// Estimate θ from a coarse-azimuth × full-elevation scan, then φ at θ̂.
    #[default]
    ElevationFirst,
    /// Estimate φ from a full-azimuth × coarse-elevation scan, then θ at φ̂.
    AzimuthFirst,
}

/// Azimuth spectrum at a fixed elevation row of the grid.
pub fn azimuth_spectrum<S: SpectrumSource + ?Sized>(
    source: &S,
    grid: &ScanGrid,
    el_index: usize,
) -> Result<SpatialSpectrum> {
    let power = (0..grid.azimuths.len())
        .map(|a| source.power_at(grid.steering(a, el_index)))
        .collect();
    SpatialSpectrum::new(grid.azimuths.clone(), power, source.kind())
}

/// Elevation spectrum at a fixed azimuth column of the grid.
pub fn elevation_spectrum<S: SpectrumSource + ?Sized>(
    source: &S,
    grid: &ScanGrid,
    az_index: usize,
) -> Result<SpatialSpectrum> {
    let power = (0..grid.elevations.len())
        .map(|e| source.power_at(grid.steering(az_index, e)))
        .collect();
    SpatialSpectrum::new(grid.elevations.clone(), power, source.kind())
}

/// Sequential two-stage (azimuth, elevation) estimate.
///
/// The first stage marginalizes the other angle by taking the maximum over a
/// coarse sub-grid of it; the second stage runs the full 1-D spectrum at the
/// first-stage estimate. Ties resolve to the smallest grid index.
pub fn estimate_2d<S: SpectrumSource + ?Sized>(
    source: &S,
    grid: &ScanGrid,
    order: StageOrder,
) -> Result<AngleOfArrival> {
    let n_az = grid.azimuths.len();
    let n_el = grid.elevations.len();
    let step = grid.coarse_step;
    let (az_index, el_index) = match order {
        StageOrder::ElevationFirst => {
            let profile: Vec<f64> = (0..n_el)
                .map(|e| {
                    (0..n_az)
                        .step_by(step)
                        .map(|a| source.power_at(grid.steering(a, e)))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let e = argmax_first(&profile);
            let spectrum: Vec<f64> = (0..n_az)
                .map(|a| source.power_at(grid.steering(a, e)))
                .collect();
            (argmax_first(&spectrum), e)
        }
        StageOrder::AzimuthFirst => {
            let profile: Vec<f64> = (0..n_az)
                .map(|a| {
                    (0..n_el)
                        .step_by(step)
                        .map(|e| source.power_at(grid.steering(a, e)))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let a = argmax_first(&profile);
            let spectrum: Vec<f64> = (0..n_el)
                .map(|e| source.power_at(grid.steering(a, e)))
                .collect();
            (a, argmax_first(&spectrum))
        }
    };
    AngleOfArrival::new(grid.azimuths[az_index], grid.elevations[el_index])
}
