use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use aoa_keygen::array::{
    synthesize_snapshots, AngleOfArrival, ArrayGeometry, SignalModel, SignalSeeds,
};
use aoa_keygen::estimators::{
    draw_sample_covariance, eigendecompose, estimate_covariance, AoaEstimator, CovarianceMatrix,
    CovarianceRoute, MusicEstimator, ScanGrid, StageOrder, XsbsConfig, XsbsEstimator,
};
use aoa_keygen::rng::rng_from_seed;

fn random_psd(rng: &mut impl Rng, m: usize) -> DMatrix<Complex64> {
    let rank = rng.random_range(1..=m);
    random_gram(rng, m, rank)
}

fn random_gram(rng: &mut impl Rng, m: usize, rank: usize) -> DMatrix<Complex64> {
    let b = DMatrix::from_fn(m, rank, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let r = &b * b.adjoint();
    (&r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

#[test]
fn eigendecomposition_reconstructs_random_psd() {
    let mut rng = rng_from_seed(1);
    for _ in 0..1000 {
        let m = rng.random_range(2..=16);
        let r = random_psd(&mut rng, m);
        let d = eigendecompose(&CovarianceMatrix::from_matrix(r.clone(), 1).unwrap(), 1).unwrap();
        let err = (d.reconstruct() - &r).norm() / r.norm();
        assert!(err < 1e-8, "relative error {err} at M={m}");
    }
}

/// Eigenvalues of a 2×2 or 3×3 Hermitian matrix from its characteristic
/// polynomial, descending.
fn closed_form_eigenvalues(a: &DMatrix<Complex64>) -> Vec<f64> {
    let m = a.nrows();
    let re = |i: usize, j: usize| a[(i, j)].re;
    let mut ev = if m == 2 {
        let mid = (re(0, 0) + re(1, 1)) / 2.0;
        let rad = (((re(0, 0) - re(1, 1)) / 2.0).powi(2) + a[(0, 1)].norm_sqr()).sqrt();
        vec![mid + rad, mid - rad]
    } else {
        let p1 = a[(0, 1)].norm_sqr() + a[(0, 2)].norm_sqr() + a[(1, 2)].norm_sqr();
        let q = (re(0, 0) + re(1, 1) + re(2, 2)) / 3.0;
        let p2 = (re(0, 0) - q).powi(2) + (re(1, 1) - q).powi(2) + (re(2, 2) - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (a - DMatrix::identity(3, 3) * Complex64::new(q, 0.0)) / Complex64::new(p, 0.0);
        let r = (b.determinant().re / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        vec![e1, 3.0 * q - e1 - e3, e3]
    };
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[test]
fn eigenvalues_match_characteristic_polynomial() {
    let mut rng = rng_from_seed(2);
    for _ in 0..500 {
        let m = rng.random_range(2..=3);
        // full rank: the trigonometric roots lose accuracy at repeated eigenvalues
        let r = random_gram(&mut rng, m, m);
        let d = eigendecompose(&CovarianceMatrix::from_matrix(r.clone(), 1).unwrap(), 1).unwrap();
        let oracle = closed_form_eigenvalues(&r);
        for (x, y) in d.eigenvalues().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-9 * r.norm().max(1.0), "{x} vs {y}");
        }
    }
}

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn direct_covariance_matches_literal_moments() {
    let g = ArrayGeometry::with_element_spacing(4, 0.5).unwrap();
    let aoa = AngleOfArrival::from_degrees(40.0, 90.0).unwrap();
    let model = SignalModel::from_snr_db(-3.0).unwrap();
    let n = 20;
    let trials = 4000;
    let mut lit = (Vec::new(), Vec::new());
    let mut dir = (Vec::new(), Vec::new());
    for t in 0..trials {
        let seeds = SignalSeeds::from_master(t);
        let r1 = estimate_covariance(&synthesize_snapshots(&g, &aoa, &model, n, seeds).unwrap())
            .unwrap();
        let r2 = draw_sample_covariance(&g, &aoa, &model, n, seeds).unwrap();
        lit.0.push(r1.data()[(0, 0)].re);
        lit.1.push(r1.data()[(0, 1)].norm());
        dir.0.push(r2.data()[(0, 0)].re);
        dir.1.push(r2.data()[(0, 1)].norm());
    }
    let expected_diag = model.source_power() + model.noise_variance();
    for (a, b) in [(&lit.0, &dir.0), (&lit.1, &dir.1)] {
        let (ma, va) = moments(a);
        let (mb, vb) = moments(b);
        assert!((ma / mb - 1.0).abs() < 0.03, "means {ma} vs {mb}");
        assert!((va / vb - 1.0).abs() < 0.12, "variances {va} vs {vb}");
    }
    assert!((moments(&dir.0).0 / expected_diag - 1.0).abs() < 0.02);
}

#[test]
fn noiseless_argmax_hits_every_grid_angle() {
    let estimators: [Box<dyn AoaEstimator>; 2] = [
        Box::new(MusicEstimator::with_defaults().unwrap()),
        Box::new(XsbsEstimator::with_defaults().unwrap()),
    ];
    for est in &estimators {
        for deg in 0..360 {
            let truth = AngleOfArrival::azimuth_only((deg as f64).to_radians());
            let e = est
                .estimate_azimuth(&truth, &SignalModel::noiseless(), 64, deg)
                .unwrap();
            assert_eq!(
                (e.degrees().round() as i64).rem_euclid(360),
                deg as i64,
                "{:?}",
                est.method()
            );
        }
    }
}

fn small_grid(elements: usize, coarse: usize) -> Arc<ScanGrid> {
    let g = ArrayGeometry::with_element_spacing(elements, 0.5).unwrap();
    let az: Vec<f64> = (0..36).map(|i| (i as f64 * 10.0).to_radians()).collect();
    let el: Vec<f64> = (1..=9).map(|i| (i as f64 * 10.0).to_radians()).collect();
    Arc::new(ScanGrid::new(g, az, el, coarse).unwrap())
}

#[test]
fn both_stage_orders_recover_noiseless_truth() {
    // coarse stride 1: a wide stride may legitimately miss the first stage
    let music = MusicEstimator::new(small_grid(16, 1), CovarianceRoute::Direct);
    let xsbs = XsbsEstimator::new(
        small_grid(17, 1),
        XsbsConfig {
            beam_centers: (0..36).map(|i| (i as f64 * 10.0).to_radians()).collect(),
            ..XsbsConfig::default()
        },
    )
    .unwrap();
    for est in [&music as &dyn AoaEstimator, &xsbs] {
        for az in (0..360).step_by(30) {
            for el in [30, 60, 90] {
                let truth = AngleOfArrival::from_degrees(az as f64, el as f64).unwrap();
                for order in [StageOrder::ElevationFirst, StageOrder::AzimuthFirst] {
                    let e = est
                        .estimate_2d(&truth, &SignalModel::noiseless(), 64, 3, order)
                        .unwrap();
                    assert!(
                        (e.azimuth_deg() - az as f64).abs() < 1e-9
                            && (e.elevation_deg() - el as f64).abs() < 1e-9,
                        "{:?} {order:?}: {az}/{el} -> {}/{}",
                        est.method(),
                        e.azimuth_deg(),
                        e.elevation_deg()
                    );
                }
            }
        }
    }
}

#[test]
fn music_peaks_sharpen_with_samples() {
    let est = MusicEstimator::with_defaults().unwrap();
    let truth = AngleOfArrival::azimuth_only(270f64.to_radians());
    let model = SignalModel::from_snr_db(-15.0).unwrap();
    let mean_pfr = |n: usize| {
        (0..20)
            .map(|s| est.azimuth_spectrum(&truth, &model, n, s).unwrap().pfr().unwrap())
            .sum::<f64>()
            / 20.0
    };
    assert!(mean_pfr(2000) > mean_pfr(100));
}
