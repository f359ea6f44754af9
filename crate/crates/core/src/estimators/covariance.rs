use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::Gamma;

use crate::array::{
    complex_normal, steering_vector, ArrayGeometry, AngleOfArrival, SignalModel, SignalSeeds,
    SnapshotMatrix, Waveform,
};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// Hermitian positive semidefinite M×M sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<Complex64>,
    sample_count: usize,
}

impl CovarianceMatrix {
    /// Wraps a matrix after checking it is square, finite and Hermitian.
    pub fn from_matrix(data: DMatrix<Complex64>, sample_count: usize) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::Empty("covariance matrix"));
        }
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("covariance matrix"));
        }
        let skew = relative_skew(&data);
        if skew > HERMITIAN_TOL {
            return Err(Error::NotHermitian(skew));
        }
        Ok(Self { data, sample_count })
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }
}

fn relative_skew(m: &DMatrix<Complex64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

fn symmetrize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let adj = m.adjoint();
    (m + adj) * Complex64::new(0.5, 0.0)
}

/// `R = X Xᴴ / N`, symmetrized to remove rounding skew.
pub fn estimate_covariance(x: &SnapshotMatrix) -> Result<CovarianceMatrix> {
    let n = x.sample_count();
    let data = x.data();
    let r = data * data.adjoint() / Complex64::new(n as f64, 0.0);
    CovarianceMatrix::from_matrix(symmetrize(r), n)
}

/// Draws the sample covariance of `synthesize_snapshots(..)` directly from its
/// exact distribution, without forming the M×N snapshot matrix.
///
/// With `q = sᴴ/‖s‖`, the noise splits into `g = V q ~ CN(0, σ²I)` and
/// `V(I − q qᴴ)`, whose Gram matrix is complex Wishart with `N − 1` degrees of
/// freedom and independent of `g`. Hence
/// `N·R = (a‖s‖ + g)(a‖s‖ + g)ᴴ + σ² W`, and `W` is sampled by the Bartlett
/// decomposition. Falls back to explicit synthesis when `N − 1 < M`.
pub fn draw_sample_covariance(
    geom: &ArrayGeometry,
    aoa: &AngleOfArrival,
    model: &SignalModel,
    n: usize,
    seeds: SignalSeeds,
) -> Result<CovarianceMatrix> {
    let m = geom.element_count();
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if n - 1 < m {
        let x = crate::array::synthesize_snapshots(geom, aoa, model, n, seeds)?;
        return estimate_covariance(&x);
    }
    let a = steering_vector(geom, aoa);
    let mut rng = rng_from_seed(seeds.noise ^ seeds.symbols.rotate_left(17));
    let p = model.source_power();
    let energy = match model.waveform() {
        Waveform::RandomPhase => p * n as f64,
        Waveform::ComplexGaussian => {
            let gamma = Gamma::new(n as f64, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
            p * rng.sample(gamma)
        }
    };
    let sigma2 = model.noise_variance();
    let amp = energy.sqrt();
    let y: Vec<Complex64> = a
        .iter()
        .map(|&am| am * amp + complex_normal(&mut rng, sigma2))
        .collect();
    let mut r = DMatrix::from_fn(m, m, |i, j| y[i] * y[j].conj());

    if sigma2 > 0.0 {
        let dof = (n - 1) as f64;
        let mut t = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            let gamma = Gamma::new(dof - i as f64, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
            let d: f64 = rng.sample(gamma);
            t[(i, i)] = Complex64::new(d.sqrt(), 0.0);
            for j in 0..i {
                t[(i, j)] = complex_normal(&mut rng, 1.0);
            }
        }
        let w = &t * t.adjoint();
        r += w * Complex64::new(sigma2, 0.0);
    }
    let r = r / Complex64::new(n as f64, 0.0);
    CovarianceMatrix::from_matrix(symmetrize(r), n)
}

/// Eigenstructure of a covariance split into signal and noise subspaces.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    signal_basis: DMatrix<Complex64>,
    noise_basis: DMatrix<Complex64>,
    eigenvalues: Vec<f64>,
}

impl SubspaceDecomposition {
    /// `U_s`, M×S.
    pub fn signal_basis(&self) -> &DMatrix<Complex64> {
        &self.signal_basis
    }

    /// `U_v`, M×(M−S).
    pub fn noise_basis(&self) -> &DMatrix<Complex64> {
        &self.noise_basis
    }

    /// Descending; the first S belong to the signal subspace.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn source_count(&self) -> usize {
        self.signal_basis.ncols()
    }

    #[cfg(test)]
    pub(crate) fn noise_basis_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.noise_basis
    }

    /// `P_v = U_v U_vᴴ`.
    pub fn noise_projector(&self) -> DMatrix<Complex64> {
        &self.noise_basis * self.noise_basis.adjoint()
    }

    /// `U Λ Uᴴ`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let m = self.signal_basis.nrows();
        let mut u = DMatrix::<Complex64>::zeros(m, m);
        u.columns_mut(0, self.source_count())
            .copy_from(&self.signal_basis);
        u.columns_mut(self.source_count(), m - self.source_count())
            .copy_from(&self.noise_basis);
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            m,
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        &u * lambda * u.adjoint()
    }
}

/// Hermitian eigendecomposition with eigenpairs sorted by descending eigenvalue.
pub fn eigendecompose(r: &CovarianceMatrix, source_count: usize) -> Result<SubspaceDecomposition> {
    let m = r.dim();
    if source_count == 0 || source_count >= m {
        return Err(Error::invalid(format!(
            "source count {source_count} must lie in [1, {m})"
        )));
    }
    let skew = relative_skew(r.data());
    if skew > HERMITIAN_TOL {
        return Err(Error::NotHermitian(skew));
    }
    let eig = SymmetricEigen::new(r.data().clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let min = eigenvalues[m - 1];
    if min < -PSD_TOL * r.trace().abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    let column = |k: usize| eig.eigenvectors.column(order[k]).into_owned();
    let signal_basis = DMatrix::from_columns(&(0..source_count).map(column).collect::<Vec<_>>());
    let noise_basis = DMatrix::from_columns(&(source_count..m).map(column).collect::<Vec<_>>());
    Ok(SubspaceDecomposition {
        signal_basis,
        noise_basis,
        eigenvalues,
    })
}
