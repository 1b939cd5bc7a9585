//! Linear canonical (Bogoliubov) transformations `b = M a + L a†` and their
//! real quadrature form.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, SymplecticForm};
use crate::scalar::Real;

/// Absolute tolerance on the Frobenius norms of the canonical residuals.
pub const CANONICAL_TOL: f64 = 1e-10;

type CMatrix<T> = DMatrix<Complex<T>>;

/// Residuals of the two canonical conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalityReport<T: Real> {
    /// `‖M M† − L L† − I‖_F`, from `[b_i, b_j†] = δ_ij`.
    pub unitarity_residual: T,
    /// `‖M Lᵀ − L Mᵀ‖_F`, from `[b_i, b_j] = 0`.
    pub symmetry_residual: T,
    pub canonical: bool,
}

/// Checks whether `(M, L)` preserves the bosonic commutation relations.
pub fn is_canonical<T: Real>(m: &CMatrix<T>, l: &CMatrix<T>) -> Result<CanonicalityReport<T>> {
    check_square_pair(m, l)?;
    let n = m.nrows();
    let unitarity = m * m.adjoint() - l * l.adjoint() - CMatrix::<T>::identity(n, n);
    let symmetry = m * l.transpose() - l * m.transpose();
    let unitarity_residual = unitarity.norm();
    let symmetry_residual = symmetry.norm();
    let tol = T::tolerance(CANONICAL_TOL);
    Ok(CanonicalityReport {
        unitarity_residual,
        symmetry_residual,
        canonical: unitarity_residual <= tol && symmetry_residual <= tol,
    })
}

fn check_square_pair<T: Real>(m: &CMatrix<T>, l: &CMatrix<T>) -> Result<()> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::InvalidModeCount(0));
    }
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "M must be square",
            expected: n,
            found: m.ncols(),
        });
    }
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "L must match M",
            expected: n,
            found: if l.nrows() != n { l.nrows() } else { l.ncols() },
        });
    }
    Ok(())
}

/// `b_i = Σ_j M_ij a_j + L_ij a_j†` on `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovTransform<T: Real> {
    n_modes: usize,
    m: CMatrix<T>,
    l: CMatrix<T>,
}

impl<T: Real> BogoliubovTransform<T> {
    /// Wraps a coefficient pair after a shape check. Canonicality is not
    /// enforced here; see [`BogoliubovTransform::canonicality`].
    pub fn new(m: CMatrix<T>, l: CMatrix<T>) -> Result<Self> {
        check_square_pair(&m, &l)?;
        Ok(BogoliubovTransform {
            n_modes: m.nrows(),
            m,
            l,
        })
    }

    /// Real-coefficient convenience constructor, row-major.
    pub fn from_real(n_modes: usize, m: &[T], l: &[T]) -> Result<Self> {
        if m.len() != n_modes * n_modes || l.len() != n_modes * n_modes {
            return Err(Error::DimensionMismatch {
                context: "real coefficient slices",
                expected: n_modes * n_modes,
                found: m.len().max(l.len()),
            });
        }
        let lift = |v: &[T]| {
            CMatrix::from_row_iterator(n_modes, n_modes, v.iter().map(|&x| Complex::new(x, T::zero())))
        };
        Self::new(lift(m), lift(l))
    }

    pub fn identity(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidModeCount(0));
        }
        Ok(BogoliubovTransform {
            n_modes,
            m: CMatrix::identity(n_modes, n_modes),
            l: CMatrix::zeros(n_modes, n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn m(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn l(&self) -> &CMatrix<T> {
        &self.l
    }

    pub fn canonicality(&self) -> CanonicalityReport<T> {
        is_canonical(&self.m, &self.l).expect("shape validated at construction")
    }

    /// The transform applying `self` first and then `next`.
    pub fn then(&self, next: &BogoliubovTransform<T>) -> Result<Self> {
        if next.n_modes != self.n_modes {
            return Err(Error::DimensionMismatch {
                context: "transform composition",
                expected: self.n_modes,
                found: next.n_modes,
            });
        }
        let m = &next.m * &self.m + &next.l * self.l.conjugate();
        let l = &next.m * &self.l + &next.l * self.m.conjugate();
        Self::new(m, l)
    }

    /// Lifts this transform onto `modes` of an `n_modes` system, acting as
    /// the identity elsewhere.
    pub fn embed(&self, modes: &[usize], n_modes: usize) -> Result<Self> {
        if modes.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                context: "embedding targets",
                expected: self.n_modes,
                found: modes.len(),
            });
        }
        for (k, &mode) in modes.iter().enumerate() {
            if mode >= n_modes {
                return Err(Error::InvalidModeIndex { index: mode, n_modes });
            }
            if modes[..k].contains(&mode) {
                return Err(Error::DuplicateMode(mode));
            }
        }
        let mut out = Self::identity(n_modes)?;
        for (r, &mr) in modes.iter().enumerate() {
            out.m[(mr, mr)] = Complex::new(T::zero(), T::zero());
            for (c, &mc) in modes.iter().enumerate() {
                out.m[(mr, mc)] = self.m[(r, c)];
                out.l[(mr, mc)] = self.l[(r, c)];
            }
        }
        Ok(out)
    }
}

/// The optimal universal phase conjugator: `b₁ = a₁† + √2 a₂`,
/// `b₂ = √2 a₁ + a₂†`, with mode 1 the input and mode 2 the ancilla.
pub fn phase_conjugator_transform<T: Real>() -> BogoliubovTransform<T> {
    let o = T::zero();
    let i = T::one();
    let r2 = T::lit(2.0).sqrt();
    BogoliubovTransform::from_real(2, &[o, r2, r2, o], &[i, o, o, i]).expect("2x2 coefficients")
}

/// Beam splitter `M = [[cos θ, sin θ], [sin θ, −cos θ]]`, `L = 0`.
///
/// At `θ = π/4` this is the balanced splitter with
/// `x₁' = (x₁ + x₂)/√2`, `x₂' = (x₁ − x₂)/√2` (likewise for `p`).
pub fn beamsplitter_transform<T: Real>(theta: T) -> BogoliubovTransform<T> {
    let (s, c) = theta.sin_cos();
    let o = T::zero();
    BogoliubovTransform::from_real(2, &[c, s, s, -c], &[o, o, o, o]).expect("2x2 coefficients")
}

/// Single-mode phase rotation `b = e^{iθ} a`.
pub fn phase_rotation_transform<T: Real>(theta: T) -> BogoliubovTransform<T> {
    let (s, c) = theta.sin_cos();
    BogoliubovTransform::new(
        CMatrix::from_element(1, 1, Complex::new(c, s)),
        CMatrix::zeros(1, 1),
    )
    .expect("1x1 coefficients")
}

/// Single-mode squeezer `b = cosh r · a − sinh r · a†` (`x → e^{−r} x`).
pub fn squeezing_transform<T: Real>(r: T) -> BogoliubovTransform<T> {
    BogoliubovTransform::from_real(1, &[r.cosh()], &[-r.sinh()]).expect("1x1 coefficients")
}

/// Two-mode squeezer `b₁ = cosh r · a₁ + sinh r · a₂†`, `b₂ = cosh r · a₂ + sinh r · a₁†`.
pub fn two_mode_squeezing_transform<T: Real>(r: T) -> BogoliubovTransform<T> {
    let (c, s, o) = (r.cosh(), r.sinh(), T::zero());
    BogoliubovTransform::from_real(2, &[c, o, o, c], &[o, s, s, o]).expect("2x2 coefficients")
}

/// Real `2n × 2n` action on the quadrature vector `(x₁, p₁, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMap<T: Real> {
    s: DMatrix<T>,
}

impl<T: Real> QuadratureMap<T> {
    pub fn from_matrix(s: DMatrix<T>) -> Result<Self> {
        let dim = s.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || s.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: "quadrature map",
                expected: dim,
                found: s.ncols(),
            });
        }
        Ok(QuadratureMap { s })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.s
    }

    pub fn n_modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// `‖S Ω Sᵀ − Ω‖_F`.
    pub fn symplectic_residual(&self) -> T {
        let omega = SymplecticForm::<T>::new(self.n_modes())
            .expect("non-empty")
            .into_matrix();
        (&self.s * &omega * self.s.transpose() - omega).norm()
    }

    pub fn compose(&self, next: &QuadratureMap<T>) -> Result<Self> {
        if next.s.nrows() != self.s.nrows() {
            return Err(Error::DimensionMismatch {
                context: "quadrature map composition",
                expected: self.s.nrows(),
                found: next.s.nrows(),
            });
        }
        Ok(QuadratureMap { s: &next.s * &self.s })
    }

    /// `mean → S mean`, `cov → S cov Sᵀ`.
    pub fn apply(&self, state: &GaussianState<T>) -> Result<GaussianState<T>> {
        if state.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                context: "quadrature map vs state",
                expected: self.n_modes(),
                found: state.n_modes(),
            });
        }
        let mean = &self.s * state.mean();
        let cov = &self.s * state.cov() * self.s.transpose();
        let cov = (&cov + cov.transpose()) * T::lit(0.5);
        GaussianState::new_unchecked(mean, cov)
    }
}

/// Real form of a canonical transform.
///
/// With `a = (x + ip)/√2`, the `(i, j)` block is
/// `[[Re(M+L), −Im(M−L)], [Im(M+L), Re(M−L)]]`.
pub fn to_quadrature_map<T: Real>(t: &BogoliubovTransform<T>) -> Result<QuadratureMap<T>> {
    let report = t.canonicality();
    if !report.canonical {
        return Err(Error::NonCanonical {
            unitarity: report.unitarity_residual.as_f64(),
            symmetry: report.symmetry_residual.as_f64(),
        });
    }
    let n = t.n_modes;
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let plus = t.m[(i, j)] + t.l[(i, j)];
            let minus = t.m[(i, j)] - t.l[(i, j)];
            s[(2 * i, 2 * j)] = plus.re;
            s[(2 * i, 2 * j + 1)] = -minus.im;
            s[(2 * i + 1, 2 * j)] = plus.im;
            s[(2 * i + 1, 2 * j + 1)] = minus.re;
        }
    }
    Ok(QuadratureMap { s })
}

/// Applies a canonical transform to a state of the same size.
pub fn apply<T: Real>(t: &BogoliubovTransform<T>, s: &GaussianState<T>) -> Result<GaussianState<T>> {
    if t.n_modes() != s.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "transform vs state",
            expected: t.n_modes(),
            found: s.n_modes(),
        });
    }
    to_quadrature_map(t)?.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{coherent_state, partial_trace, tensor, vacuum_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

    fn real(n: usize, v: &[f64]) -> CMatrix<f64> {
        CMatrix::from_row_iterator(n, n, v.iter().map(|&x| Complex::new(x, 0.0)))
    }

    #[test]
    fn canonical_predicate_on_named_cases() {
        let id = real(2, &[1.0, 0.0, 0.0, 1.0]);
        let zero = real(2, &[0.0; 4]);
        assert!(is_canonical(&id, &zero).unwrap().canonical);
        let m = real(2, &[0.0, SQRT_2, SQRT_2, 0.0]);
        assert!(is_canonical(&m, &id).unwrap().canonical);
        let bad = is_canonical(&id, &id).unwrap();
        assert!(!bad.canonical);
        assert_abs_diff_eq!(bad.unitarity_residual, 2f64.sqrt(), epsilon = 1e-12);
        assert!(is_canonical(&id, &real(1, &[0.0])).is_err());
        assert!(is_canonical(&CMatrix::<f64>::zeros(2, 3), &CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn conjugator_quadrature_rows() {
        let s = to_quadrature_map(&phase_conjugator_transform::<f64>()).unwrap();
        let s = s.matrix();
        // x_b1 = x1 + √2 x2, p_b1 = −p1 + √2 p2
        assert_abs_diff_eq!(s.row(0).clone_owned(), nalgebra::RowDVector::from_vec(vec![1.0, 0.0, SQRT_2, 0.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(s.row(1).clone_owned(), nalgebra::RowDVector::from_vec(vec![0.0, -1.0, 0.0, SQRT_2]), epsilon = 1e-15);
        let t = phase_conjugator_transform::<f64>();
        assert_eq!(t.m()[(0, 0)].norm(), 0.0);
        assert_eq!(t.l()[(0, 0)], Complex::new(1.0, 0.0));
        assert_eq!((t.m()[(0, 1)] * t.l()[(0, 1)]).norm(), 0.0);
    }

    #[test]
    fn identity_map_is_identity() {
        let s = to_quadrature_map(&BogoliubovTransform::<f64>::identity(3).unwrap()).unwrap();
        assert_eq!(s.matrix(), &DMatrix::identity(6, 6));
    }

    #[test]
    fn balanced_beamsplitter_quadrature_matrix() {
        let s = to_quadrature_map(&beamsplitter_transform(FRAC_PI_4)).unwrap();
        let h = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            h, 0.0, h, 0.0,
            0.0, h, 0.0, h,
            h, 0.0, -h, 0.0,
            0.0, h, 0.0, -h,
        ]);
        assert_abs_diff_eq!(s.matrix(), &expected, epsilon = 1e-15);
        let pass = to_quadrature_map(&beamsplitter_transform(0.0)).unwrap();
        assert_eq!(pass.matrix(), &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0])));
    }

    #[test]
    fn conjugator_output_has_three_halves_noise() {
        let (x, p) = (0.8, -2.5);
        let input = tensor(&coherent_state(x, p), &vacuum_state(1).unwrap());
        let out = apply(&phase_conjugator_transform(), &input).unwrap();
        let b1 = partial_trace(&out, &[0]).unwrap();
        assert_abs_diff_eq!(b1.mean().as_slice(), [x, -p].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(b1.cov(), &(DMatrix::identity(2, 2) * 1.5), epsilon = 1e-12);
    }

    #[test]
    fn parallel_pair_recombines_on_first_output() {
        let (x, p) = (1.0, 2.0);
        let input = tensor(&coherent_state(x, p), &coherent_state(x, p));
        let out = apply(&beamsplitter_transform(FRAC_PI_4), &input).unwrap();
        let first = partial_trace(&out, &[0]).unwrap();
        let second = partial_trace(&out, &[1]).unwrap();
        assert_abs_diff_eq!(first.mean().as_slice(), [SQRT_2 * x, SQRT_2 * p].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!(first.cov(), &(DMatrix::identity(2, 2) * 0.5), epsilon = 1e-12);
        assert_abs_diff_eq!(second.mean().as_slice(), [0.0, 0.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn conjugate_pair_separates_x_and_p() {
        let (x, p) = (1.5, -0.5);
        let input = tensor(&coherent_state(x, p), &coherent_state(x, -p));
        let out = apply(&beamsplitter_transform(FRAC_PI_4), &input).unwrap();
        assert_abs_diff_eq!(
            out.mean().as_slice(),
            [SQRT_2 * x, 0.0, 0.0, SQRT_2 * p].as_slice(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn non_canonical_transform_is_rejected() {
        let id = real(1, &[1.0]);
        let t = BogoliubovTransform::new(id.clone(), id).unwrap();
        assert!(matches!(to_quadrature_map(&t), Err(Error::NonCanonical { .. })));
        assert!(matches!(apply(&t, &vacuum_state(1).unwrap()), Err(Error::NonCanonical { .. })));
        let two = phase_conjugator_transform::<f64>();
        assert!(matches!(apply(&two, &vacuum_state(1).unwrap()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_mode_squeezer_reproduces_two_mode_squeezed_state() {
        let r = 0.9;
        let out = apply(&two_mode_squeezing_transform(r), &vacuum_state(2).unwrap()).unwrap();
        let direct = crate::gaussian::two_mode_squeezed_state(r).unwrap();
        assert_abs_diff_eq!(out.cov(), direct.cov(), epsilon = 1e-12);
    }

    #[test]
    fn embedding_and_composition_stay_canonical() {
        let sq = squeezing_transform(0.4f64).embed(&[1], 2).unwrap();
        let rot = phase_rotation_transform(0.3f64).embed(&[0], 2).unwrap();
        let t = sq.then(&rot).unwrap().then(&phase_conjugator_transform()).unwrap();
        assert!(t.canonicality().canonical);
        assert!(squeezing_transform(0.4f64).embed(&[2], 2).is_err());
        assert!(beamsplitter_transform(0.1f64).embed(&[1, 1], 3).is_err());
    }

    #[test]
    fn single_precision_builders_are_canonical() {
        assert!(phase_conjugator_transform::<f32>().canonicality().canonical);
        let s = to_quadrature_map(&beamsplitter_transform(0.3f32)).unwrap();
        assert!(s.symplectic_residual() < 1e-5);
    }
}
