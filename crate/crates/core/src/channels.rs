//! Single-mode Gaussian channels `(X, Y)`: `mean → X mean`, `V → X V Xᵀ + Y`.
//!
//! Complete positivity is the Hermitian condition
//! `Y + (i/2)(Ω − X Ω Xᵀ) ⪰ 0`. For phase conjugation `X = diag(1, −1)` the
//! bracket equals `2Ω`, so an isotropic `Y = σ² I` is admissible only for
//! `σ² ≥ 1`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::gaussian::{coherent_state, partial_trace, tensor, GaussianState, SYMMETRY_TOL};
use crate::scalar::Real;
use crate::transforms::{to_quadrature_map, BogoliubovTransform};

/// Slack on the smallest eigenvalue of the complete-positivity matrix.
pub const CP_TOL: f64 = 1e-9;
/// Agreement required between probe outputs and the extracted channel.
pub const DILATION_TOL: f64 = 1e-10;

fn omega2<T: Real>() -> Matrix2<T> {
    Matrix2::new(T::zero(), T::one(), -T::one(), T::zero())
}

/// Eigenvalues `(min, max)` of the Hermitian matrix `[[a, b], [b̄, d]]`.
fn hermitian2_eigenvalues<T: Real>(a: T, d: T, b: Complex<T>) -> (T, T) {
    let half = T::lit(0.5);
    let centre = (a + d) * half;
    let spread = (((a - d) * half).powi(2) + b.norm_sqr()).sqrt();
    (centre - spread, centre + spread)
}

/// Diagnostics of the channel invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpReport<T: Real> {
    pub symmetry_residual: T,
    /// Smallest eigenvalue of `Y`.
    pub min_noise_eigenvalue: T,
    /// Smallest eigenvalue of `Y + (i/2)(Ω − X Ω Xᵀ)`.
    pub min_cp_eigenvalue: T,
    pub completely_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel<T: Real> {
    x: Matrix2<T>,
    y: Matrix2<T>,
}

impl<T: Real> GaussianChannel<T> {
    /// Validates symmetry of `Y` and complete positivity.
    pub fn new(x: Matrix2<T>, y: Matrix2<T>) -> Result<Self> {
        let channel = Self::new_unchecked(x, y);
        let report = channel.cp_report();
        if report.symmetry_residual > T::tolerance(SYMMETRY_TOL) {
            return Err(Error::NotSymmetric {
                residual: report.symmetry_residual.as_f64(),
            });
        }
        if !report.completely_positive {
            return Err(Error::UnphysicalChannel {
                min_eigenvalue: report.min_cp_eigenvalue.as_f64(),
            });
        }
        Ok(channel)
    }

    /// For intermediate maps (like a bare sign flip) that are not channels
    /// on their own.
    pub fn new_unchecked(x: Matrix2<T>, y: Matrix2<T>) -> Self {
        GaussianChannel { x, y }
    }

    pub fn identity() -> Self {
        Self::new_unchecked(Matrix2::identity(), Matrix2::zeros())
    }

    pub fn x(&self) -> &Matrix2<T> {
        &self.x
    }

    pub fn y(&self) -> &Matrix2<T> {
        &self.y
    }

    pub fn cp_report(&self) -> CpReport<T> {
        let symmetry_residual = (self.y - self.y.transpose()).amax();
        let y = (self.y + self.y.transpose()) * T::lit(0.5);
        let (min_noise_eigenvalue, _) =
            hermitian2_eigenvalues(y[(0, 0)], y[(1, 1)], Complex::new(y[(0, 1)], T::zero()));
        let bracket = omega2::<T>() - self.x * omega2::<T>() * self.x.transpose();
        let off = Complex::new(y[(0, 1)], bracket[(0, 1)] * T::lit(0.5));
        let (min_cp_eigenvalue, _) = hermitian2_eigenvalues(y[(0, 0)], y[(1, 1)], off);
        CpReport {
            symmetry_residual,
            min_noise_eigenvalue,
            min_cp_eigenvalue,
            completely_positive: min_cp_eigenvalue >= -T::tolerance(CP_TOL),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &GaussianChannel<T>) -> Self {
        Self::new_unchecked(next.x * self.x, next.x * self.y * next.x.transpose() + next.y)
    }

    /// Entrywise distance to another channel.
    pub fn max_abs_diff(&self, other: &GaussianChannel<T>) -> T {
        (self.x - other.x).amax().max((self.y - other.y).amax())
    }

    /// Applies the channel to one mode of a multimode state.
    pub fn apply_to_mode(&self, s: &GaussianState<T>, mode: usize) -> Result<GaussianState<T>> {
        s.check_mode(mode)?;
        let dim = 2 * s.n_modes();
        let mut big_x = DMatrix::identity(dim, dim);
        let mut big_y = DMatrix::zeros(dim, dim);
        big_x.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&self.x);
        big_y.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&self.y);
        let mean = &big_x * s.mean();
        let cov = &big_x * s.cov() * big_x.transpose() + big_y;
        let cov = (&cov + cov.transpose()) * T::lit(0.5);
        GaussianState::new_unchecked(mean, cov)
    }
}

/// Phase conjugation with isotropic added noise `σ²`: `X = diag(1, −1)`,
/// `Y = σ² I`. Rejects `σ² < 1` (beyond [`CP_TOL`]).
pub fn conjugation_channel<T: Real>(sigma2: T) -> Result<GaussianChannel<T>> {
    if !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be finite, got {}",
            sigma2.as_f64()
        )));
    }
    GaussianChannel::new(phase_flip(), Matrix2::identity() * sigma2)
}

/// `diag(1, −1)`: the (unphysical) noiseless conjugation map on quadratures.
pub fn phase_flip<T: Real>() -> Matrix2<T> {
    Matrix2::new(T::one(), T::zero(), T::zero(), -T::one())
}

/// Applies a channel to a single-mode state.
pub fn apply_channel<T: Real>(c: &GaussianChannel<T>, s: &GaussianState<T>) -> Result<GaussianState<T>> {
    if s.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            context: "single-mode channel input",
            expected: 1,
            found: s.n_modes(),
        });
    }
    c.apply_to_mode(s, 0)
}

/// Smallest `s` for which `(X, s·I)` is completely positive:
/// the largest eigenvalue of `−(i/2)(Ω − X Ω Xᵀ)`.
pub fn min_cp_noise<T: Real>(x: &Matrix2<T>) -> T {
    let bracket = omega2::<T>() - x * omega2::<T>() * x.transpose();
    let off = Complex::new(T::zero(), -bracket[(0, 1)] * T::lit(0.5));
    let (_, max) = hermitian2_eigenvalues(T::zero(), T::zero(), off);
    max.max(T::zero())
}

/// Extracts the channel seen by mode 0 of a two-mode canonical transform
/// whose mode 1 starts in `ancilla`, reading the output on `output_mode`.
///
/// The channel is read off from the vacuum and unit-displacement probes and
/// then checked exactly against a rotated squeezed probe.
pub fn channel_from_dilation<T: Real>(
    t: &BogoliubovTransform<T>,
    ancilla: &GaussianState<T>,
    output_mode: usize,
) -> Result<GaussianChannel<T>> {
    if t.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            context: "dilation transform modes",
            expected: 2,
            found: t.n_modes(),
        });
    }
    if ancilla.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            context: "dilation ancilla modes",
            expected: 1,
            found: ancilla.n_modes(),
        });
    }
    if output_mode >= 2 {
        return Err(Error::InvalidModeIndex {
            index: output_mode,
            n_modes: 2,
        });
    }
    let map = to_quadrature_map(t)?;
    let run = |probe: &GaussianState<T>| -> Result<(Vector2<T>, Matrix2<T>)> {
        let out = map.apply(&tensor(probe, ancilla))?;
        partial_trace(&out, &[output_mode])?.mode_block(0)
    };
    let zero = T::zero();
    let one = T::one();
    let (offset, vac_cov) = run(&coherent_state(zero, zero))?;
    let (mean_x, _) = run(&coherent_state(one, zero))?;
    let (mean_p, _) = run(&coherent_state(zero, one))?;
    let x = Matrix2::from_columns(&[mean_x - offset, mean_p - offset]);
    let vacuum_cov = Matrix2::identity() * T::lit(0.5);
    let y = vac_cov - x * vacuum_cov * x.transpose();

    let (sin, cos) = T::lit(0.3).sin_cos();
    let rot = Matrix2::new(cos, -sin, sin, cos);
    let squeeze = T::lit(0.5);
    let diag = Matrix2::new((squeeze + squeeze).exp(), zero, zero, (-squeeze - squeeze).exp()) * T::lit(0.5);
    let probe_cov = rot * diag * rot.transpose();
    let probe_mean = Vector2::new(T::lit(0.7), T::lit(-1.3));
    let probe = GaussianState::new(
        DVector::from_column_slice(probe_mean.as_slice()),
        DMatrix::from_column_slice(2, 2, probe_cov.as_slice()),
    )?;
    let (sq_mean, sq_cov) = run(&probe)?;
    let residual = offset
        .amax()
        .max((sq_mean - x * probe_mean).amax())
        .max((sq_cov - (x * probe_cov * x.transpose() + y)).amax());
    if residual > T::tolerance(DILATION_TOL) {
        return Err(Error::NonAffine {
            residual: residual.as_f64(),
        });
    }
    GaussianChannel::new(x, (y + y.transpose()) * T::lit(0.5))
}

/// Simultaneous measurement of both quadratures viewed as a channel on the
/// outcome distribution: adds half a vacuum unit to each quadrature.
pub fn heterodyne_channel<T: Real>() -> GaussianChannel<T> {
    GaussianChannel::new_unchecked(Matrix2::identity(), Matrix2::identity() * T::lit(0.5))
}

/// Heterodyne, flip the sign of the measured `p`, prepare a coherent state
/// at the flipped outcome. Net `X = diag(1, −1)`, `Y = I`.
pub fn measure_prepare_conjugation<T: Real>() -> GaussianChannel<T> {
    let flip = GaussianChannel::new_unchecked(phase_flip(), Matrix2::zeros());
    let prepare = GaussianChannel::new_unchecked(Matrix2::identity(), Matrix2::identity() * T::lit(0.5));
    let composed = heterodyne_channel().then(&flip).then(&prepare);
    GaussianChannel::new(composed.x, composed.y).expect("measure-and-prepare is completely positive")
}

/// Joint state of `copies` coherent states all prepared from one heterodyne
/// outcome on `s` with `p` flipped. Every copy shares the same classical
/// outcome, so copies are correlated through `Z (V + I/2) Z`.
pub fn measure_prepare_copies<T: Real>(s: &GaussianState<T>, copies: usize) -> Result<GaussianState<T>> {
    if s.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            context: "measure-and-prepare input",
            expected: 1,
            found: s.n_modes(),
        });
    }
    if copies == 0 {
        return Err(Error::InvalidModeCount(0));
    }
    let (mean, cov) = s.mode_block(0)?;
    let z = phase_flip::<T>();
    let half = T::lit(0.5);
    let outcome_cov = z * (cov + Matrix2::identity() * half) * z;
    let outcome_mean = z * mean;
    let dim = 2 * copies;
    let mut big_mean = DVector::zeros(dim);
    let mut big_cov = DMatrix::zeros(dim, dim);
    for i in 0..copies {
        big_mean.rows_mut(2 * i, 2).copy_from(&outcome_mean);
        for j in 0..copies {
            let block = if i == j {
                outcome_cov + Matrix2::identity() * half
            } else {
                outcome_cov
            };
            big_cov.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&block);
        }
    }
    GaussianState::new(big_mean, big_cov)
}

/// Overlap `⟨β|ρ|β⟩` of a single-mode Gaussian state with the coherent state
/// of quadrature means `(x, p)`:
/// `exp(−½ δᵀ (V + I/2)⁻¹ δ) / √det(V + I/2)`.
pub fn fidelity_coherent<T: Real>(s: &GaussianState<T>, x: T, p: T) -> Result<T> {
    if s.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            context: "fidelity input",
            expected: 1,
            found: s.n_modes(),
        });
    }
    let (mean, cov) = s.mode_block(0)?;
    let w = cov + Matrix2::identity() * T::lit(0.5);
    let det = w.determinant();
    if !(det > T::zero()) {
        return Err(Error::Singular("V + I/2"));
    }
    let inv = w.try_inverse().ok_or(Error::Singular("V + I/2"))?;
    let delta = mean - Vector2::new(x, p);
    let exponent = (delta.transpose() * inv * delta)[(0, 0)] * T::lit(-0.5);
    Ok(exponent.exp() / det.sqrt())
}
