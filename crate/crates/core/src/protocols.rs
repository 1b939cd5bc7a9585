//! End-to-end experiments: estimating `α = (x + ip)/√2` from two coherent
//! states under three encoding/measurement strategies, the EPR argument for
//! the conjugation noise bound, and conjugation fidelities.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, Matrix2, Vector2};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::channels::{conjugation_channel, fidelity_coherent, phase_flip, GaussianChannel};
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::gaussian::{coherent_state, tensor, two_mode_squeezed_state, GaussianState};
use crate::measurement::{batch, heterodyne_sample, homodyne_sample, BatchMoments, Quadrature};
use crate::transforms::{apply, beamsplitter_transform};
use crate::VACUUM_VARIANCE;

pub const MIN_SHOTS: usize = 100;
pub const DEFAULT_SHOTS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// How `α` is encoded into two modes and read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `|α⟩⊗|α⟩`, heterodyne on each copy, outcomes averaged.
    ParallelProduct,
    /// `|α⟩⊗|α*⟩`, heterodyne on each copy, `p` of the second read as `−p`.
    ConjugateProduct,
    /// `|α⟩⊗|α*⟩` through a balanced beam splitter, homodyne `x` on the
    /// first output and `p` on the second, outcomes divided by `√2`.
    ConjugateEntangled,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::ParallelProduct,
        Strategy::ConjugateProduct,
        Strategy::ConjugateEntangled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ParallelProduct => "parallel_product",
            Strategy::ConjugateProduct => "conjugate_product",
            Strategy::ConjugateEntangled => "conjugate_entangled",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Strategy::ParallelProduct => "|a>|a>, heterodyne each copy, average the readouts",
            Strategy::ConjugateProduct => "|a>|a*>, heterodyne each copy, negate p of the second",
            Strategy::ConjugateEntangled => "|a>|a*>, balanced beam splitter, homodyne x on 1' and p on 2', scale by 1/sqrt2",
        }
    }

    /// The two-mode state sent for amplitude `(x, p)`.
    pub fn encode(self, x: f64, p: f64) -> GaussianState<f64> {
        match self {
            Strategy::ParallelProduct => tensor(&coherent_state(x, p), &coherent_state(x, p)),
            Strategy::ConjugateProduct | Strategy::ConjugateEntangled => {
                tensor(&coherent_state(x, p), &coherent_state(x, -p))
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub strategy: Strategy,
    pub shots: usize,
    pub true_x: f64,
    pub true_p: f64,
    pub est_var_x: f64,
    pub est_var_p: f64,
    pub stderr_x: f64,
    pub stderr_p: f64,
    pub seed: u64,
}

/// An [`EstimationReport`] together with the estimator means.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRun {
    pub report: EstimationReport,
    pub moments: BatchMoments,
}

impl EstimationRun {
    pub fn bias_x(&self) -> f64 {
        self.moments.mean[0] - self.report.true_x
    }

    pub fn bias_p(&self) -> f64 {
        self.moments.mean[1] - self.report.true_p
    }

    pub fn stderr_mean_x(&self) -> f64 {
        self.moments.stderr_mean[0]
    }

    pub fn stderr_mean_p(&self) -> f64 {
        self.moments.stderr_mean[1]
    }
}

/// One shot of `strategy`: the estimate `(x̂, p̂)`.
fn estimate_once<R: rand::Rng + ?Sized>(
    strategy: Strategy,
    state: &GaussianState<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match strategy {
        Strategy::ParallelProduct | Strategy::ConjugateProduct => {
            let first = heterodyne_sample(state, 0, rng)?;
            let second = heterodyne_sample(state, 1, rng)?;
            let sign = if strategy == Strategy::ConjugateProduct { -1.0 } else { 1.0 };
            Ok(vec![
                0.5 * (first.values[0] + second.values[0]),
                0.5 * (first.values[1] + sign * second.values[1]),
            ])
        }
        Strategy::ConjugateEntangled => {
            let (x_out, rest) = homodyne_sample(state, 0, Quadrature::X, rng)?;
            let rest = rest.expect("two-mode state leaves one mode");
            let (p_out, _) = homodyne_sample(&rest, 0, Quadrature::P, rng)?;
            Ok(vec![x_out.values[0] / SQRT_2, p_out.values[0] / SQRT_2])
        }
    }
}

/// State actually measured by `strategy` (after the beam splitter for the
/// entangled readout).
pub fn measured_state(strategy: Strategy, x: f64, p: f64) -> Result<GaussianState<f64>> {
    let encoded = strategy.encode(x, p);
    match strategy {
        Strategy::ConjugateEntangled => apply(&beamsplitter_transform(FRAC_PI_4), &encoded),
        _ => Ok(encoded),
    }
}

pub fn run_estimation_detailed(strategy: Strategy, x: f64, p: f64, shots: usize, seed: u64) -> Result<EstimationRun> {
    if shots < MIN_SHOTS {
        return Err(Error::TooFewShots { shots, min: MIN_SHOTS });
    }
    if !x.is_finite() || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite amplitude ({x}, {p})")));
    }
    let state = measured_state(strategy, x, p)?;
    let moments = batch(|rng| estimate_once(strategy, &state, rng), 2, shots, seed)?;
    let report = EstimationReport {
        strategy,
        shots,
        true_x: x,
        true_p: p,
        est_var_x: moments.cov[(0, 0)],
        est_var_p: moments.cov[(1, 1)],
        stderr_x: moments.stderr_var[0],
        stderr_p: moments.stderr_var[1],
        seed,
    };
    Ok(EstimationRun { report, moments })
}

/// Monte Carlo estimate of the error variances of `strategy`.
pub fn run_estimation(strategy: Strategy, x: f64, p: f64, shots: usize, seed: u64) -> Result<EstimationReport> {
    run_estimation_detailed(strategy, x, p, shots, seed).map(|run| run.report)
}

/// Closed-form error variances `(var_x, var_p)`.
///
/// A heterodyne readout of a coherent state has variance `2Δx²_vac` per
/// quadrature; averaging two of them halves it. The entangled readout
/// measures `√2 x` and `√2 p` with homodyne variance `Δx²_vac` each, so the
/// rescaled estimates have variance `Δx²_vac / 2`.
pub fn analytic_variance(strategy: Strategy) -> (f64, f64) {
    let v = match strategy {
        Strategy::ParallelProduct | Strategy::ConjugateProduct => 2.0 * VACUUM_VARIANCE / 2.0,
        Strategy::ConjugateEntangled => VACUUM_VARIANCE / 2.0,
    };
    (v, v)
}

/// Error variances of `strategy` propagated through the covariance pipeline
/// (encoding, beam splitter, measurement noise, linear estimator), without
/// sampling.
pub fn pipeline_variance(strategy: Strategy) -> Result<(f64, f64)> {
    let state = measured_state(strategy, 0.0, 0.0)?;
    match strategy {
        Strategy::ParallelProduct | Strategy::ConjugateProduct => {
            let mut outcome_cov = state.cov().clone();
            for i in 0..4 {
                outcome_cov[(i, i)] += VACUUM_VARIANCE;
            }
            let sign = if strategy == Strategy::ConjugateProduct { -1.0 } else { 1.0 };
            let wx = DVector::from_vec(vec![0.5, 0.0, 0.5, 0.0]);
            let wp = DVector::from_vec(vec![0.0, 0.5, 0.0, 0.5 * sign]);
            let var = |w: &DVector<f64>| (w.transpose() * &outcome_cov * w)[(0, 0)];
            Ok((var(&wx), var(&wp)))
        }
        Strategy::ConjugateEntangled => {
            let wx = DVector::from_vec(vec![1.0 / SQRT_2, 0.0, 0.0, 0.0]);
            let wp = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0 / SQRT_2]);
            Ok((state.quadrature_variance(&wx)?, state.quadrature_variance(&wp)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub r: f64,
    pub sigma2: f64,
    #[serde(rename = "var_Xp")]
    pub var_xp: f64,
    #[serde(rename = "var_Pp")]
    pub var_pp: f64,
    pub product: f64,
}

/// Conjugates mode 1 of a two-mode squeezed vacuum with squeezing `r` using
/// isotropic noise `σ²`, then reports `Var(x₀ − x₁')`, `Var(p₀ − p₁')` and
/// their product from the output covariance.
///
/// The covariance algebra runs in [`DoubleDouble`]: the variances are
/// `e^{-2r} + σ²` obtained as differences of entries of size `cosh(2r)/2`,
/// which `f64` cannot resolve beyond `r ≈ 5`.
pub fn epr_bound_experiment(r: f64, sigma2: f64) -> Result<EprReport> {
    let channel = conjugation_channel(DoubleDouble::from(sigma2))?;
    epr_with_channel(r, sigma2, &channel)
}

/// As [`epr_bound_experiment`] but accepts `σ² < 1`, for showing how an
/// unphysical conjugator would violate the uncertainty relation.
pub fn epr_bound_experiment_unchecked(r: f64, sigma2: f64) -> Result<EprReport> {
    if !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma2 must be finite, got {sigma2}")));
    }
    let channel =
        GaussianChannel::new_unchecked(phase_flip(), Matrix2::identity() * DoubleDouble::from(sigma2));
    epr_with_channel(r, sigma2, &channel)
}

fn epr_with_channel(r: f64, sigma2: f64, channel: &GaussianChannel<DoubleDouble>) -> Result<EprReport> {
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r must be finite, got {r}")));
    }
    let (one, zero) = (DoubleDouble::one(), DoubleDouble::zero());
    let epr = two_mode_squeezed_state(DoubleDouble::from(r))?;
    let var_xp = output_variance(&epr, channel, [one, zero, -one, zero]);
    let var_pp = output_variance(&epr, channel, [zero, one, zero, -one]);
    Ok(EprReport {
        r,
        sigma2,
        var_xp: var_xp.to_f64_round(),
        var_pp: var_pp.to_f64_round(),
        product: (var_xp * var_pp).to_f64_round(),
    })
}

/// `Var(wᵀ r)` after `channel` acts on mode 1, split by linearity into the
/// input variance of the pulled-back weights plus the added noise.
///
/// Same value as applying the channel and reading the output covariance,
/// but the noise is added after the large squeezed entries have cancelled,
/// so a variance `e^{-2r} + σ²` never rounds below `σ²`.
fn output_variance(epr: &GaussianState<DoubleDouble>, channel: &GaussianChannel<DoubleDouble>, w: [DoubleDouble; 4]) -> DoubleDouble {
    let w1 = Vector2::new(w[2], w[3]);
    let pulled = channel.x().transpose() * w1;
    let u = DVector::from_vec(vec![w[0], w[1], pulled[0], pulled[1]]);
    let cu = epr.cov() * &u;
    u.dot(&cu) + w1.dot(&(channel.y() * w1))
}

/// Fidelity of the conjugation channel's output on `|α⟩` with `|α*⟩`.
pub fn conjugation_fidelity_experiment(x: f64, p: f64, sigma2: f64) -> Result<f64> {
    let channel = conjugation_channel(sigma2)?;
    let out = crate::channels::apply_channel(&channel, &coherent_state(x, p))?;
    fidelity_coherent(&out, x, -p)
}

/// Monte Carlo run of the measure-and-prepare conjugator on `|α⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePrepareFidelity {
    pub shots: usize,
    pub seed: u64,
    /// Mean overlap `|⟨α*|γ⟩|²` over prepared coherent states `|γ⟩`.
    pub overlap_mean: f64,
    pub overlap_stderr: f64,
    /// Fidelity of the Gaussian state rebuilt from the sampled output
    /// moments (sample covariance of `γ` plus `I/2`).
    pub moment_fidelity: f64,
    /// First-order error propagation of the sample variances into
    /// `moment_fidelity`.
    pub moment_stderr: f64,
}

pub fn measure_prepare_fidelity_mc(x: f64, p: f64, shots: usize, seed: u64) -> Result<MeasurePrepareFidelity> {
    if shots < MIN_SHOTS {
        return Err(Error::TooFewShots { shots, min: MIN_SHOTS });
    }
    let input = coherent_state(x, p);
    let moments = batch(
        |rng| {
            let outcome = heterodyne_sample(&input, 0, rng)?;
            let (gx, gp) = (outcome.values[0], -outcome.values[1]);
            let dist2 = (gx - x).powi(2) + (gp + p).powi(2);
            Ok(vec![(-0.5 * dist2).exp(), gx, gp])
        },
        3,
        shots,
        seed,
    )?;
    let centre = DVector::from_vec(vec![moments.mean[1], moments.mean[2]]);
    let mut cov = moments.cov.view((1, 1), (2, 2)).clone_owned();
    cov[(0, 0)] += VACUUM_VARIANCE;
    cov[(1, 1)] += VACUUM_VARIANCE;
    let rebuilt = GaussianState::new_unchecked(centre, cov.clone())?;
    let moment_fidelity = fidelity_coherent(&rebuilt, x, -p)?;
    let w = [cov[(0, 0)] + VACUUM_VARIANCE, cov[(1, 1)] + VACUUM_VARIANCE];
    let moment_stderr = 0.5
        * moment_fidelity
        * ((moments.stderr_var[1] / w[0]).powi(2) + (moments.stderr_var[2] / w[1]).powi(2)).sqrt();
    Ok(MeasurePrepareFidelity {
        shots,
        seed,
        overlap_mean: moments.mean[0],
        overlap_stderr: moments.stderr_mean[0],
        moment_fidelity,
        moment_stderr,
    })
}
