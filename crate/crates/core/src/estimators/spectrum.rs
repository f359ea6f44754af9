use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Grid points on either side of the peak excluded from the PFR floor.
pub const PFR_GUARD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumKind {
    Music,
    Xsbs,
}

impl SpectrumKind {
    pub fn label(&self) -> &'static str {
        match self {
            SpectrumKind::Music => "MUSIC",
            SpectrumKind::Xsbs => "XSBS",
        }
    }
}

/// An angle picked from a grid, with the grid spacing it was picked at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    pub angle: f64,
    pub resolution: f64,
}

impl AngleEstimate {
    pub fn degrees(&self) -> f64 {
        self.angle.to_degrees()
    }
}

/// Power over an angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    grid: Vec<f64>,
    power: Vec<f64>,
    kind: SpectrumKind,
    periodic: bool,
}

impl SpatialSpectrum {
    pub fn new(grid: Vec<f64>, power: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Empty("spectrum grid"));
        }
        if grid.len() != power.len() {
            return Err(Error::LengthMismatch {
                left: grid.len(),
                right: power.len(),
            });
        }
        if !grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("spectrum grid must be strictly increasing"));
        }
        if power.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("spectrum power"));
        }
        if power.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("spectrum power must be non-negative"));
        }
        let periodic = covers_full_circle(&grid);
        Ok(Self {
            grid,
            power,
            kind,
            periodic,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// True when the grid is a uniform sampling of the whole circle, so the
    /// PFR guard band wraps around.
    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Spacing of the grid (first interval; 0 for a single point).
    pub fn resolution(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    pub(crate) fn peak_index(&self) -> usize {
        argmax_first(&self.power)
    }

    /// Peak location; ties go to the smallest angle.
    pub fn estimate_azimuth(&self) -> AngleEstimate {
        AngleEstimate {
            angle: self.grid[self.peak_index()],
            resolution: self.resolution(),
        }
    }

    /// Peak-to-floor ratio: peak power over the median of the spectrum outside
    /// a guard band of `min(5, (len − 1)/4)` grid points around the peak.
    pub fn pfr(&self) -> Result<f64> {
        let peak = self.peak_index();
        let max = self.power[peak];
        if self.power.iter().all(|&p| p == max) {
            return Err(Error::DegenerateSpectrum);
        }
        let n = self.len();
        let guard = PFR_GUARD.min((n - 1) / 4);
        let excluded = |i: usize| {
            let d = i.abs_diff(peak);
            let d = if self.periodic { d.min(n - d) } else { d };
            d <= guard
        };
        let mut floor: Vec<f64> = (0..n).filter(|&i| !excluded(i)).map(|i| self.power[i]).collect();
        if floor.is_empty() {
            return Err(Error::DegenerateSpectrum);
        }
        let median = median(&mut floor);
        if median <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(max / median)
    }
}

/// Free-function form of [`SpatialSpectrum::pfr`].
pub fn pfr(spectrum: &SpatialSpectrum) -> Result<f64> {
    spectrum.pfr()
}

/// Free-function form of [`SpatialSpectrum::estimate_azimuth`].
pub fn estimate_azimuth(spectrum: &SpatialSpectrum) -> AngleEstimate {
    spectrum.estimate_azimuth()
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn covers_full_circle(grid: &[f64]) -> bool {
    if grid.len() < 3 {
        return false;
    }
    let step = grid[1] - grid[0];
    let uniform = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() < 1e-9);
    uniform && ((grid.len() as f64 * step) - TAU).abs() < 1e-9
}

/// `count` points from `start_deg` in steps of `step_deg`, in radians.
pub fn degree_grid(start_deg: f64, step_deg: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (start_deg + step_deg * i as f64).to_radians())
        .collect()
}

/// 0°, 1°, …, 359°.
pub fn default_azimuth_grid() -> Vec<f64> {
    degree_grid(0.0, 1.0, 360)
}

/// 0°, 1°, …, 90°.
pub fn default_elevation_grid() -> Vec<f64> {
    degree_grid(0.0, 1.0, 91)
}
