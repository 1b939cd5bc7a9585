//! Multimode Gaussian states in the covariance-matrix picture.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute tolerance on `|V − Vᵀ|` entries.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Slack allowed below `1/2` for the smallest symplectic eigenvalue.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// The standard symplectic form `Ω = ⊕ [[0, 1], [−1, 0]]` on `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm<T: Real> {
    n_modes: usize,
    matrix: DMatrix<T>,
}

impl<T: Real> SymplecticForm<T> {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidModeCount(n_modes));
        }
        let dim = 2 * n_modes;
        let mut matrix = DMatrix::zeros(dim, dim);
        for k in 0..n_modes {
            matrix[(2 * k, 2 * k + 1)] = T::one();
            matrix[(2 * k + 1, 2 * k)] = -T::one();
        }
        Ok(SymplecticForm { n_modes, matrix })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }
}

/// Outcome of [`physicality`]: symmetry and uncertainty-principle diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalityReport<T: Real> {
    pub symmetry_residual: T,
    pub symmetric: bool,
    /// Symplectic eigenvalues in ascending order, one per mode.
    pub symplectic_eigenvalues: Vec<T>,
    /// Smallest ordinary eigenvalue of the covariance matrix.
    pub min_eigenvalue: T,
    pub physical: bool,
}

impl<T: Real> PhysicalityReport<T> {
    pub fn min_symplectic_eigenvalue(&self) -> T {
        self.symplectic_eigenvalues
            .first()
            .copied()
            .unwrap_or_else(T::zero)
    }
}

/// Symmetry and uncertainty-principle check for a raw `2n × 2n` covariance.
///
/// Symplectic eigenvalues are the moduli of the eigenvalues of `iΩV`,
/// obtained here from the antisymmetric matrix `A = V^{1/2} Ω V^{1/2}`:
/// `AᵀA` is symmetric with each `ν²` appearing twice.
pub fn physicality<T: Real>(cov: &DMatrix<T>) -> Result<PhysicalityReport<T>> {
    let dim = cov.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || cov.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "covariance matrix",
            expected: dim.max(2) + dim % 2,
            found: cov.ncols(),
        });
    }
    let symmetry_residual = (cov - cov.transpose()).amax();
    let symmetric = symmetry_residual <= T::tolerance(SYMMETRY_TOL);

    let sym = (cov + cov.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.min();
    let sqrt_diag = eig.eigenvalues.map(|v| v.max(T::zero()).sqrt());
    let sqrt_cov = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose();

    let omega = SymplecticForm::<T>::new(dim / 2)?.into_matrix();
    let a = &sqrt_cov * omega * &sqrt_cov;
    let squared = a.transpose() * &a;
    let mut nu_sq: Vec<T> = SymmetricEigen::new(squared).eigenvalues.iter().copied().collect();
    nu_sq.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let symplectic_eigenvalues: Vec<T> = nu_sq
        .chunks(2)
        .map(|pair| {
            let mean = (pair[0] + pair[pair.len() - 1]) * T::lit(0.5);
            mean.max(T::zero()).sqrt()
        })
        .collect();

    let floor = T::lit(0.5) - T::tolerance(PHYSICALITY_TOL);
    let physical = symmetric
        && min_eigenvalue > T::zero()
        && symplectic_eigenvalues.iter().all(|&nu| nu >= floor);
    Ok(PhysicalityReport {
        symmetry_residual,
        symmetric,
        symplectic_eigenvalues,
        min_eigenvalue,
        physical,
    })
}

/// Closed-form symplectic eigenvalue of a single-mode covariance, `√det V`.
pub fn single_mode_symplectic_eigenvalue<T: Real>(cov: &Matrix2<T>) -> T {
    cov.determinant().max(T::zero()).sqrt()
}

/// A Gaussian state of `n` bosonic modes: first moments and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    n_modes: usize,
    mean: DVector<T>,
    cov: DMatrix<T>,
}

impl<T: Real> GaussianState<T> {
    /// Builds a state, rejecting inconsistent dimensions, asymmetric
    /// covariances and violations of the uncertainty principle.
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let state = Self::new_unchecked(mean, cov)?;
        let report = physicality(&state.cov)?;
        if !report.symmetric {
            return Err(Error::NotSymmetric {
                residual: report.symmetry_residual.as_f64(),
            });
        }
        if !report.physical {
            return Err(Error::Unphysical {
                min_symplectic_eigenvalue: report.min_symplectic_eigenvalue().as_f64(),
            });
        }
        Ok(state)
    }

    /// Builds a state checking dimensions only.
    pub fn new_unchecked(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidModeCount(dim / 2));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: "covariance vs mean",
                expected: dim,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        Ok(GaussianState {
            n_modes: dim / 2,
            mean,
            cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    /// Mean and covariance block of a single mode.
    pub fn mode_block(&self, mode: usize) -> Result<(Vector2<T>, Matrix2<T>)> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        let mean = Vector2::new(self.mean[i], self.mean[i + 1]);
        let cov = Matrix2::new(
            self.cov[(i, i)],
            self.cov[(i, i + 1)],
            self.cov[(i + 1, i)],
            self.cov[(i + 1, i + 1)],
        );
        Ok((mean, cov))
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::InvalidModeIndex {
                index: mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    pub fn is_physical(&self) -> PhysicalityReport<T> {
        physicality(&self.cov).expect("dimensions validated at construction")
    }

    /// Variance of the linear combination `wᵀ r` of quadratures.
    pub fn quadrature_variance(&self, weights: &DVector<T>) -> Result<T> {
        if weights.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "quadrature weights",
                expected: self.mean.len(),
                found: weights.len(),
            });
        }
        Ok((weights.transpose() * &self.cov * weights)[(0, 0)])
    }
}

/// `n`-mode vacuum: zero mean, covariance `I/2`.
pub fn vacuum_state<T: Real>(n_modes: usize) -> Result<GaussianState<T>> {
    if n_modes == 0 {
        return Err(Error::InvalidModeCount(0));
    }
    let dim = 2 * n_modes;
    Ok(GaussianState {
        n_modes,
        mean: DVector::zeros(dim),
        cov: DMatrix::identity(dim, dim) * T::lit(0.5),
    })
}

/// Coherent state `|α⟩`, `α = (x + ip)/√2`, with quadrature means `(x, p)`.
pub fn coherent_state<T: Real>(x: T, p: T) -> GaussianState<T> {
    GaussianState {
        n_modes: 1,
        mean: DVector::from_vec(vec![x, p]),
        cov: DMatrix::identity(2, 2) * T::lit(0.5),
    }
}

/// Thermal-like single-mode state with covariance `variance · I`.
pub fn isotropic_state<T: Real>(x: T, p: T, variance: T) -> Result<GaussianState<T>> {
    GaussianState::new(
        DVector::from_vec(vec![x, p]),
        DMatrix::identity(2, 2) * variance,
    )
}

/// Two-mode squeezed vacuum with squeezing `r ≥ 0`.
///
/// `Var(x₁ − x₂) = Var(p₁ + p₂) = e^{−2r}`, approaching the EPR state as
/// `r → ∞`.
pub fn two_mode_squeezed_state<T: Real>(r: T) -> Result<GaussianState<T>> {
    if !(r >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "squeezing must be non-negative, got {}",
            r.as_f64()
        )));
    }
    let two_r = r + r;
    let (grow, decay) = (two_r.exp(), (-two_r).exp());
    // c − s is the squeezed variance; building c on top of s keeps it
    // non-negative after rounding even when it is far below ulp(c).
    let s = (grow - decay) * T::lit(0.25);
    let c = s + decay * T::lit(0.5);
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        c, T::zero(), s, T::zero(),
        T::zero(), c, T::zero(), -s,
        s, T::zero(), c, T::zero(),
        T::zero(), -s, T::zero(), c,
    ]);
    Ok(GaussianState {
        n_modes: 2,
        mean: DVector::zeros(4),
        cov,
    })
}

/// Direct sum: `a` occupies the leading modes, `b` the trailing ones.
pub fn tensor<T: Real>(a: &GaussianState<T>, b: &GaussianState<T>) -> GaussianState<T> {
    let (da, db) = (a.mean.len(), b.mean.len());
    let mut mean = DVector::zeros(da + db);
    mean.rows_mut(0, da).copy_from(&a.mean);
    mean.rows_mut(da, db).copy_from(&b.mean);
    let mut cov = DMatrix::zeros(da + db, da + db);
    cov.view_mut((0, 0), (da, da)).copy_from(&a.cov);
    cov.view_mut((da, da), (db, db)).copy_from(&b.cov);
    GaussianState {
        n_modes: a.n_modes + b.n_modes,
        mean,
        cov,
    }
}

/// Reduced state on `keep`, in the order given.
pub fn partial_trace<T: Real>(s: &GaussianState<T>, keep: &[usize]) -> Result<GaussianState<T>> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    for (k, &mode) in keep.iter().enumerate() {
        s.check_mode(mode)?;
        if keep[..k].contains(&mode) {
            return Err(Error::DuplicateMode(mode));
        }
    }
    let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| s.mean[i]));
    let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| s.cov[(idx[r], idx[c])]);
    Ok(GaussianState {
        n_modes: keep.len(),
        mean,
        cov,
    })
}
