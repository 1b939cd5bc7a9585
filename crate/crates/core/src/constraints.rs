//! The coefficient constraints that single out the universal phase
//! conjugator among two-mode canonical transformations.
//!
//! After gauge fixing the first-row coefficients to be real and
//! non-negative, the conjugator must satisfy
//!
//! * mean preservation `⟨b₁⟩ = ⟨a₁†⟩` with a vacuum ancilla: `M₁₁ = 0`, `L₁₁ = 1`;
//! * universality (phase-insensitive added noise): `M₁₂ L₁₂ = 0`;
//! * `[b₁, b₁†] = 1`, `[b₂, b₂†] = 1`, `[b₁, b₂] = 0` and `[b₁, b₂†] = 0`.
//!
//! The first row is then forced to `(M₁₂, L₁₂) = (√2, 0)`; the ancilla row
//! keeps two real degrees of freedom.

use nalgebra::{Complex, Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{map_shards, RngStream};
use crate::scalar::Real;
use crate::transforms::BogoliubovTransform;

/// Default absolute tolerance for [`check_constraints`].
pub const CONSTRAINT_TOL: f64 = 1e-10;

type C<T> = Complex<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    MeanPreservation,
    Universality,
    CommB1,
    CommB2,
    CommCross,
    CommCrossAdjoint,
}

impl Constraint {
    pub const ALL: [Constraint; 6] = [
        Constraint::MeanPreservation,
        Constraint::Universality,
        Constraint::CommB1,
        Constraint::CommB2,
        Constraint::CommCross,
        Constraint::CommCrossAdjoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::MeanPreservation => "mean_preservation",
            Constraint::Universality => "universality",
            Constraint::CommB1 => "comm_b1",
            Constraint::CommB2 => "comm_b2",
            Constraint::CommCross => "comm_cross",
            Constraint::CommCrossAdjoint => "comm_cross_adjoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResidual<T: Real> {
    pub constraint: Constraint,
    pub residual: T,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport<T: Real> {
    pub residuals: Vec<ConstraintResidual<T>>,
    pub tolerance: T,
}

impl<T: Real> ConstraintReport<T> {
    pub fn all_satisfied(&self) -> bool {
        self.residuals.iter().all(|r| r.satisfied)
    }

    pub fn residual(&self, constraint: Constraint) -> T {
        self.residuals
            .iter()
            .find(|r| r.constraint == constraint)
            .map(|r| r.residual)
            .expect("every constraint is evaluated")
    }

    pub fn satisfied(&self, constraint: Constraint) -> bool {
        self.residual(constraint) <= self.tolerance
    }

    pub fn max_residual(&self) -> T {
        self.residuals
            .iter()
            .fold(T::zero(), |acc, r| acc.max(r.residual))
    }
}

pub fn check_constraints<T: Real>(m: &Matrix2<C<T>>, l: &Matrix2<C<T>>) -> ConstraintReport<T> {
    check_constraints_with_tol(m, l, T::tolerance(CONSTRAINT_TOL))
}

/// Evaluates every conjugator constraint as an absolute residual.
pub fn check_constraints_with_tol<T: Real>(m: &Matrix2<C<T>>, l: &Matrix2<C<T>>, tolerance: T) -> ConstraintReport<T> {
    let one = C::new(T::one(), T::zero());
    let row_norm = |i: usize| {
        m[(i, 0)].norm_sqr() + m[(i, 1)].norm_sqr() - l[(i, 0)].norm_sqr() - l[(i, 1)].norm_sqr() - T::one()
    };
    let cross = (0..2).fold(C::new(T::zero(), T::zero()), |acc, j| {
        acc + m[(0, j)] * l[(1, j)] - l[(0, j)] * m[(1, j)]
    });
    let cross_adjoint = (0..2).fold(C::new(T::zero(), T::zero()), |acc, j| {
        acc + m[(0, j)] * m[(1, j)].conj() - l[(0, j)] * l[(1, j)].conj()
    });
    let values = [
        (Constraint::MeanPreservation, m[(0, 0)].norm_sqr().sqrt().max((l[(0, 0)] - one).norm_sqr().sqrt())),
        (Constraint::Universality, (m[(0, 1)] * l[(0, 1)]).norm_sqr().sqrt()),
        (Constraint::CommB1, row_norm(0).abs()),
        (Constraint::CommB2, row_norm(1).abs()),
        (Constraint::CommCross, cross.norm_sqr().sqrt()),
        (Constraint::CommCrossAdjoint, cross_adjoint.norm_sqr().sqrt()),
    ];
    ConstraintReport {
        residuals: values
            .into_iter()
            .map(|(constraint, residual)| ConstraintResidual {
                constraint,
                residual,
                satisfied: residual <= tolerance,
            })
            .collect(),
        tolerance,
    }
}

/// One branch of the universality condition `M₁₂ L₁₂ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchAnalysis {
    pub branch: String,
    pub feasible: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row1Solution<T: Real> {
    pub m12: T,
    pub l12: T,
    pub branches: Vec<BranchAnalysis>,
}

/// Solves `M₁₂² − L₁₂² = 2` together with `M₁₂ L₁₂ = 0` over real
/// non-negative coefficients.
pub fn solve_row1<T: Real>() -> Row1Solution<T> {
    let target = T::lit(2.0);
    let mut branches = Vec::with_capacity(2);

    // L₁₂ = 0 leaves M₁₂² = 2.
    let m12 = target.sqrt();
    branches.push(BranchAnalysis {
        branch: "l12 = 0".into(),
        feasible: true,
        detail: format!("m12^2 = 2 gives m12 = {:.17e}", m12.as_f64()),
    });

    // M₁₂ = 0 leaves −L₁₂² = 2, i.e. L₁₂² = −2.
    let l12_sq = -target;
    branches.push(BranchAnalysis {
        branch: "m12 = 0".into(),
        feasible: l12_sq >= T::zero(),
        detail: format!("requires l12^2 = {} which has no real solution", l12_sq.as_f64()),
    });

    Row1Solution {
        m12,
        l12: T::zero(),
        branches,
    }
}

/// First row `(M₁₁, M₁₂ | L₁₁, L₁₂) = (0, √2 | 1, 0)` of the conjugator.
pub fn conjugator_row1<T: Real>() -> [C<T>; 4] {
    let z = C::new(T::zero(), T::zero());
    let sol = solve_row1::<T>();
    [z, C::new(sol.m12, T::zero()), C::new(T::one(), T::zero()), C::new(sol.l12, T::zero())]
}

/// Ancilla-row coefficients `(M₂₁, M₂₂, L₂₁, L₂₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaRow<T: Real> {
    pub m21: C<T>,
    pub m22: C<T>,
    pub l21: C<T>,
    pub l22: C<T>,
}

/// Two-real-parameter family of ancilla rows compatible with the conjugator
/// first row.
///
/// With row 1 fixed, `[b₁, b₂] = 0` gives `M₂₁ = √2 L₂₂`, `[b₁, b₂†] = 0`
/// gives `L₂₁ = √2 M₂₂`, and `[b₂, b₂†] = 1` reduces to
/// `|L₂₂|² − |M₂₂|² = 1`. The output phase of `b₂` makes `L₂₂` real and
/// positive, leaving `M₂₂ = u·e^{iφ}` and `L₂₂ = √(1 + u²)`.
/// `u = 0` is the symmetric choice `M₂₂ = 0`, `L₂₂ = 1`.
pub fn ancilla_row_family<T: Real>(u: T, phi: T) -> AncillaRow<T> {
    let sqrt2 = T::lit(2.0).sqrt();
    let (s, c) = phi.sin_cos();
    let m22 = C::new(u * c, u * s);
    let l22 = C::new((T::one() + u * u).sqrt(), T::zero());
    AncillaRow {
        m21: l22 * sqrt2,
        m22,
        l21: m22 * sqrt2,
        l22,
    }
}

impl<T: Real> AncillaRow<T> {
    /// Full `(M, L)` with the conjugator first row.
    pub fn coefficients(&self) -> (Matrix2<C<T>>, Matrix2<C<T>>) {
        let [m11, m12, l11, l12] = conjugator_row1::<T>();
        (
            Matrix2::new(m11, m12, self.m21, self.m22),
            Matrix2::new(l11, l12, self.l21, self.l22),
        )
    }

    pub fn transform(&self) -> BogoliubovTransform<T> {
        let (m, l) = self.coefficients();
        BogoliubovTransform::new(
            nalgebra::DMatrix::from_column_slice(2, 2, m.as_slice()),
            nalgebra::DMatrix::from_column_slice(2, 2, l.as_slice()),
        )
        .expect("2x2 coefficients")
    }
}

/// Grid points of `(M₁₂, L₁₂)` with both row-1 residuals below `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScan {
    pub step: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub points_checked: usize,
    pub feasible: Vec<(f64, f64)>,
}

impl GridScan {
    /// Whether every feasible grid point lies in the grid cell containing
    /// `(√2, 0)`.
    pub fn unique_near_solution(&self) -> bool {
        let target = 2f64.sqrt();
        !self.feasible.is_empty()
            && self
                .feasible
                .iter()
                .all(|&(m, l)| (m - target).abs() <= self.step && l.abs() <= self.step)
    }
}

/// Exhaustive scan of `[0, upper]²` in steps of `step` for points with
/// `|M₁₂ L₁₂| < tol` and `|M₁₂² − L₁₂² − 2| < tol`.
pub fn grid_scan_row1(step: f64, upper: f64, tol: f64) -> Result<GridScan> {
    if !(step > 0.0) || !(upper >= 0.0) {
        return Err(Error::InvalidParameter(format!("grid step {step} / upper {upper}")));
    }
    let n = (upper / step + 1e-9).floor() as usize + 1;
    let mut feasible = Vec::new();
    for i in 0..n {
        let m12 = i as f64 * step;
        for j in 0..n {
            let l12 = j as f64 * step;
            if (m12 * l12).abs() < tol && (m12 * m12 - l12 * l12 - 2.0).abs() < tol {
                feasible.push((m12, l12));
            }
        }
    }
    Ok(GridScan {
        step,
        upper,
        tolerance: tol,
        points_checked: n * n,
        feasible,
    })
}

/// Outcome of [`random_search_uniqueness`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSummary {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Raw draws already satisfying every row-1 constraint.
    pub raw_feasible: usize,
    /// Draws whose projection converged onto the constraint set.
    pub projected_feasible: usize,
    /// Draws whose projection stalled at an infeasible stationary point.
    pub projected_infeasible: usize,
    pub max_m12_deviation: f64,
    pub max_l12: f64,
    /// Feasible points with `|M₁₂ − √2| > 1e-5` or `|L₁₂| > 1e-5`.
    pub counterexamples: usize,
}

const COUNTEREXAMPLE_GAP: f64 = 1e-5;
const DRAW_RANGE: f64 = 3.0;

fn row1_residuals(v: &Vector4<f64>) -> Vector4<f64> {
    let (m11, m12, l11, l12) = (v[0], v[1], v[2], v[3]);
    Vector4::new(m11, l11 - 1.0, m12 * l12, m11 * m11 + m12 * m12 - l11 * l11 - l12 * l12 - 1.0)
}

fn row1_jacobian(v: &Vector4<f64>) -> Matrix4<f64> {
    let (m11, m12, l11, l12) = (v[0], v[1], v[2], v[3]);
    #[rustfmt::skip]
    let j = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, l12, 0.0, m12,
        2.0 * m11, 2.0 * m12, -2.0 * l11, -2.0 * l12,
    );
    j
}

/// Projected Levenberg–Marquardt onto the row-1 constraint set within the
/// non-negative orthant.
fn project_row1(start: Vector4<f64>) -> Vector4<f64> {
    let mut v = start;
    let mut cost = row1_residuals(&v).norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..500 {
        if cost < 1e-30 {
            break;
        }
        let r = row1_residuals(&v);
        let j = row1_jacobian(&v);
        let jt = j.transpose();
        let lhs = jt * j + Matrix4::identity() * lambda;
        let Some(step) = lhs.lu().solve(&(-(jt * r))) else {
            lambda *= 10.0;
            continue;
        };
        let trial = (v + step).map(|x| x.max(0.0));
        let trial_cost = row1_residuals(&trial).norm_squared();
        if trial_cost < cost {
            v = trial;
            cost = trial_cost;
            lambda = (lambda / 3.0).max(1e-12);
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    v
}

/// Numerical evidence that `(M₁₂, L₁₂) = (√2, 0)` is the only gauge-fixed
/// first row meeting the constraints: random non-negative first rows are
/// projected onto the constraint set and every converged point is compared
/// to the analytic solution.
pub fn random_search_uniqueness(samples: usize, seed: u64, tol: f64) -> Result<UniquenessSummary> {
    if samples == 0 {
        return Err(Error::InvalidParameter("random search needs at least one sample".into()));
    }
    let target = 2f64.sqrt();
    let feasible = |v: &Vector4<f64>| row1_residuals(v).amax() <= tol;
    let shards = map_shards(samples, |shard, local| {
        let mut part = UniquenessSummary {
            samples: 0,
            seed,
            tolerance: tol,
            raw_feasible: 0,
            projected_feasible: 0,
            projected_infeasible: 0,
            max_m12_deviation: 0.0,
            max_l12: 0.0,
            counterexamples: 0,
        };
        for shot in local {
            use rand::Rng;
            let mut rng = RngStream::for_shot(seed, shard, shot as u64).rng();
            let start = Vector4::from_fn(|_, _| rng.random_range(0.0..DRAW_RANGE));
            part.samples += 1;
            if feasible(&start) {
                part.raw_feasible += 1;
            }
            let v = project_row1(start);
            if feasible(&v) {
                part.projected_feasible += 1;
                let dev = (v[1] - target).abs();
                part.max_m12_deviation = part.max_m12_deviation.max(dev);
                part.max_l12 = part.max_l12.max(v[3].abs());
                if dev > COUNTEREXAMPLE_GAP || v[3].abs() > COUNTEREXAMPLE_GAP {
                    part.counterexamples += 1;
                }
            } else {
                part.projected_infeasible += 1;
            }
        }
        part
    });
    Ok(shards.into_iter().fold(
        UniquenessSummary {
            samples: 0,
            seed,
            tolerance: tol,
            raw_feasible: 0,
            projected_feasible: 0,
            projected_infeasible: 0,
            max_m12_deviation: 0.0,
            max_l12: 0.0,
            counterexamples: 0,
        },
        |mut acc, part| {
            acc.samples += part.samples;
            acc.raw_feasible += part.raw_feasible;
            acc.projected_feasible += part.projected_feasible;
            acc.projected_infeasible += part.projected_infeasible;
            acc.max_m12_deviation = acc.max_m12_deviation.max(part.max_m12_deviation);
            acc.max_l12 = acc.max_l12.max(part.max_l12);
            acc.counterexamples += part.counterexamples;
            acc
        },
    ))
}
