//! AoA estimators: MUSIC and XSBS spectra, peak picking and 2-D search.

pub mod covariance;
pub mod music;
pub mod scan;
pub mod spectrum;
pub mod xsbs;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use covariance::{
    draw_sample_covariance, eigendecompose, estimate_covariance, CovarianceMatrix,
    SubspaceDecomposition,
};
pub use music::{music_spectrum, MusicScanner};
pub use scan::{
    azimuth_spectrum, elevation_spectrum, estimate_2d, ScanGrid, SpectrumSource, StageOrder,
};
pub use spectrum::{estimate_azimuth, pfr, AngleEstimate, SpatialSpectrum, SpectrumKind};
pub use xsbs::{xsbs_spectrum, BeamElements, XsbsConfig, XsbsObservation};

use crate::array::{
    synthesize_snapshots, ArrayGeometry, AngleOfArrival, SignalModel, SignalSeeds, SnapshotMatrix,
};
use crate::error::Result;

/// Element count of the MUSIC array.
pub const MUSIC_ELEMENTS: usize = 16;
/// Element count of the XSBS array.
pub const XSBS_ELEMENTS: usize = 17;
/// Element spacing in wavelengths.
pub const DEFAULT_SPACING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Music,
    Xsbs,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Music => "MUSIC",
            Method::Xsbs => "XSBS",
        }
    }
}

/// One noisy observation reduced to what is needed to evaluate its spectrum.
#[derive(Debug, Clone)]
pub enum Observation {
    Music(MusicScanner),
    Xsbs(XsbsObservation),
}

impl SpectrumSource for Observation {
    fn kind(&self) -> SpectrumKind {
        match self {
            Observation::Music(s) => s.kind(),
            Observation::Xsbs(s) => s.kind(),
        }
    }

    fn power_at(&self, steering: &[Complex64]) -> f64 {
        match self {
            Observation::Music(s) => s.power_at(steering),
            Observation::Xsbs(s) => s.power_at(steering),
        }
    }
}

/// An estimator bound to an array and a scan grid.
pub trait AoaEstimator: Send + Sync {
    fn method(&self) -> Method;

    fn grid(&self) -> &ScanGrid;

    /// Simulates one reception of a source at `truth` and reduces it.
    fn observe(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
    ) -> Result<Observation>;

    /// In-plane azimuth spectrum of one observation.
    fn azimuth_spectrum(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
    ) -> Result<SpatialSpectrum> {
        let obs = self.observe(truth, model, n, seed)?;
        azimuth_spectrum(&obs, self.grid(), self.grid().planar_elevation_index()?)
    }

    /// Azimuth estimate with the elevation assumed to be `π/2`.
    fn estimate_azimuth(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
    ) -> Result<AngleEstimate> {
        Ok(self.azimuth_spectrum(truth, model, n, seed)?.estimate_azimuth())
    }

    fn estimate_2d(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
        order: StageOrder,
    ) -> Result<AngleOfArrival> {
        let obs = self.observe(truth, model, n, seed)?;
        estimate_2d(&obs, self.grid(), order)
    }
}

/// How MUSIC obtains its sample covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceRoute {
    /// Synthesize the M×N snapshots and form `(1/N) X Xᴴ`.
    Snapshots,
    /// Draw the sample covariance directly from its exact distribution.
    #[default]
    Direct,
}

#[derive(Debug, Clone)]
pub struct MusicEstimator {
    grid: Arc<ScanGrid>,
    route: CovarianceRoute,
}

impl MusicEstimator {
    pub fn new(grid: Arc<ScanGrid>, route: CovarianceRoute) -> Self {
        Self { grid, route }
    }

    /// 16 elements at half-wavelength spacing on 1° grids.
    pub fn with_defaults() -> Result<Self> {
        let geom = ArrayGeometry::with_element_spacing(MUSIC_ELEMENTS, DEFAULT_SPACING)?;
        Ok(Self::new(
            Arc::new(ScanGrid::with_default_grids(geom)?),
            CovarianceRoute::default(),
        ))
    }

    pub fn route(&self) -> CovarianceRoute {
        self.route
    }
}

impl AoaEstimator for MusicEstimator {
    fn method(&self) -> Method {
        Method::Music
    }

    fn grid(&self) -> &ScanGrid {
        &self.grid
    }

    fn observe(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
    ) -> Result<Observation> {
        let geom = self.grid.geometry();
        let seeds = SignalSeeds::from_master(seed);
        let r = match self.route {
            CovarianceRoute::Snapshots => {
                estimate_covariance(&synthesize_snapshots(geom, truth, model, n, seeds)?)?
            }
            CovarianceRoute::Direct => draw_sample_covariance(geom, truth, model, n, seeds)?,
        };
        Ok(Observation::Music(MusicScanner::new(&eigendecompose(&r, 1)?)))
    }
}

#[derive(Debug, Clone)]
pub struct XsbsEstimator {
    grid: Arc<ScanGrid>,
    config: XsbsConfig,
}

impl XsbsEstimator {
    pub fn new(grid: Arc<ScanGrid>, config: XsbsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { grid, config })
    }

    /// 17 elements at half-wavelength spacing on 1° grids.
    pub fn with_defaults() -> Result<Self> {
        let geom = ArrayGeometry::with_element_spacing(XSBS_ELEMENTS, DEFAULT_SPACING)?;
        Self::new(
            Arc::new(ScanGrid::with_default_grids(geom)?),
            XsbsConfig::default(),
        )
    }

    pub fn config(&self) -> &XsbsConfig {
        &self.config
    }
}

impl AoaEstimator for XsbsEstimator {
    fn method(&self) -> Method {
        Method::Xsbs
    }

    fn grid(&self) -> &ScanGrid {
        &self.grid
    }

    fn observe(
        &self,
        truth: &AngleOfArrival,
        model: &SignalModel,
        n: usize,
        seed: u64,
    ) -> Result<Observation> {
        Ok(Observation::Xsbs(XsbsObservation::observe(
            self.grid.geometry(),
            &self.config,
            truth,
            model,
            n,
            seed,
        )?))
    }
}

/// Default estimator for `method`.
pub fn default_estimator(method: Method) -> Result<Box<dyn AoaEstimator>> {
    Ok(match method {
        Method::Music => Box::new(MusicEstimator::with_defaults()?),
        Method::Xsbs => Box::new(XsbsEstimator::with_defaults()?),
    })
}

/// Sequential 2-D MUSIC estimate from recorded snapshots.
pub fn music_estimate_2d(
    snapshots: &SnapshotMatrix,
    grid: &ScanGrid,
    order: StageOrder,
) -> Result<AngleOfArrival> {
    let decomp = eigendecompose(&estimate_covariance(snapshots)?, 1)?;
    estimate_2d(&MusicScanner::new(&decomp), grid, order)
}
