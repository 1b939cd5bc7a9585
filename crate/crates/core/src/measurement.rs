//! Homodyne and heterodyne sampling on Gaussian states, with counter-based
//! random streams so results do not depend on how shots are scheduled.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

/// Shots per shard. Fixed so that the merge tree is independent of the
/// number of worker threads.
pub const SHARD_SHOTS: usize = 4096;

/// A reproducible random stream: a ChaCha8 key derived from `seed` and the
/// 64-bit ChaCha stream selector set to `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Stream for shot `shot` of shard `shard`.
    pub fn for_shot(seed: u64, shard: u64, shot: u64) -> Self {
        debug_assert!(shot < 1 << 32);
        RngStream::new(seed, (shard << 32) | shot)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub mode: usize,
    pub quadrature: Quadrature,
}

/// Measured quadrature values with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub values: Vec<f64>,
    pub labels: Vec<OutcomeLabel>,
}

impl Outcome {
    pub fn value(&self, mode: usize, quadrature: Quadrature) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l.mode == mode && l.quadrature == quadrature)
            .map(|i| self.values[i])
    }
}

/// Gaussian state of the unmeasured modes after an ideal homodyne readout
/// `value` of `quadrature` on `mode`. `None` when nothing is left.
pub fn homodyne_condition(
    s: &GaussianState<f64>,
    mode: usize,
    quadrature: Quadrature,
    value: f64,
) -> Result<Option<GaussianState<f64>>> {
    s.check_mode(mode)?;
    if s.n_modes() == 1 {
        return Ok(None);
    }
    let measured = 2 * mode + quadrature.offset();
    let var = s.cov()[(measured, measured)];
    if !(var > 0.0) {
        return Err(Error::Singular("homodyne marginal variance"));
    }
    let rest: Vec<usize> = (0..2 * s.n_modes())
        .filter(|&i| i / 2 != mode)
        .collect();
    let gain = DVector::from_iterator(rest.len(), rest.iter().map(|&i| s.cov()[(i, measured)] / var));
    let shift = value - s.mean()[measured];
    let mean = DVector::from_iterator(
        rest.len(),
        rest.iter().enumerate().map(|(k, &i)| s.mean()[i] + gain[k] * shift),
    );
    let cov = DMatrix::from_fn(rest.len(), rest.len(), |r, c| {
        s.cov()[(rest[r], rest[c])] - gain[r] * s.cov()[(measured, rest[c])]
    });
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianState::new_unchecked(mean, cov).map(Some)
}

/// Ideal homodyne detection of one quadrature: samples the exact marginal and
/// returns the conditioned state of the other modes.
pub fn homodyne_sample<R: Rng + ?Sized>(
    s: &GaussianState<f64>,
    mode: usize,
    quadrature: Quadrature,
    rng: &mut R,
) -> Result<(Outcome, Option<GaussianState<f64>>)> {
    s.check_mode(mode)?;
    let i = 2 * mode + quadrature.offset();
    let var = s.cov()[(i, i)];
    if !(var >= 0.0) {
        return Err(Error::Singular("homodyne marginal variance"));
    }
    let z: f64 = rng.sample(StandardNormal);
    let value = s.mean()[i] + var.sqrt() * z;
    let post = homodyne_condition(s, mode, quadrature, value)?;
    let outcome = Outcome {
        values: vec![value],
        labels: vec![OutcomeLabel { mode, quadrature }],
    };
    Ok((outcome, post))
}

/// Mean and covariance of the heterodyne outcome `(x̃, p̃)` on `mode`:
/// the mode's moments with `I/2` added to the covariance.
pub fn heterodyne_distribution(s: &GaussianState<f64>, mode: usize) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let (mean, cov) = s.mode_block(mode)?;
    Ok((mean, cov + Matrix2::identity() * 0.5))
}

/// Simultaneous measurement of both quadratures of `mode`.
pub fn heterodyne_sample<R: Rng + ?Sized>(s: &GaussianState<f64>, mode: usize, rng: &mut R) -> Result<Outcome> {
    let (mean, cov) = heterodyne_distribution(s, mode)?;
    let [x, p] = sample_bivariate(&mean, &cov, rng)?;
    Ok(Outcome {
        values: vec![x, p],
        labels: vec![
            OutcomeLabel {
                mode,
                quadrature: Quadrature::X,
            },
            OutcomeLabel {
                mode,
                quadrature: Quadrature::P,
            },
        ],
    })
}

fn sample_bivariate<R: Rng + ?Sized>(mean: &Vector2<f64>, cov: &Matrix2<f64>, rng: &mut R) -> Result<[f64; 2]> {
    let a = cov[(0, 0)];
    if !(a > 0.0) {
        return Err(Error::Singular("bivariate covariance"));
    }
    let l11 = a.sqrt();
    let l21 = cov[(1, 0)] / l11;
    let l22 = (cov[(1, 1)] - l21 * l21).max(0.0).sqrt();
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    Ok([mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2])
}

/// Streaming first and second moments of a vector-valued sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    count: usize,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Welford update.
    pub fn push(&mut self, sample: &[f64]) {
        let dim = self.dim();
        assert_eq!(sample.len(), dim, "sample dimension");
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = sample.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for ((row, x), m) in self.comoment.chunks_mut(dim).zip(sample).zip(&self.mean) {
            let after = x - m;
            for (c, d) in row.iter_mut().zip(&delta) {
                *c += d * after;
            }
        }
    }

    /// Pairwise (Chan et al.) combination.
    pub fn merge(&mut self, other: &Moments) {
        let dim = self.dim();
        assert_eq!(other.dim(), dim, "moment dimension");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..dim {
            for j in 0..dim {
                self.comoment[i * dim + j] += other.comoment[i * dim + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let denom = (self.count.max(2) - 1) as f64;
        DMatrix::from_row_slice(dim, dim, &self.comoment) / denom
    }
}

/// Summary statistics of a batch of shots.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMoments {
    pub shots: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `√(var/shots)` per component.
    pub stderr_mean: DVector<f64>,
    /// `var · √(2/(shots − 1))` per component.
    pub stderr_var: DVector<f64>,
}

impl BatchMoments {
    pub fn from_moments(m: &Moments) -> Self {
        let shots = m.count();
        let cov = m.covariance();
        let var = cov.diagonal();
        let stderr_mean = var.map(|v| (v / shots as f64).sqrt());
        let stderr_var = var.map(|v| v * (2.0 / (shots as f64 - 1.0)).sqrt());
        BatchMoments {
            shots,
            mean: m.mean(),
            cov,
            stderr_mean,
            stderr_var,
        }
    }
}

/// Runs `work(shard, local_shots)` over fixed-size shards in parallel and
/// returns the results in shard order.
pub fn map_shards<A, F>(shots: usize, work: F) -> Vec<A>
where
    A: Send,
    F: Fn(u64, Range<usize>) -> A + Sync,
{
    let shards = shots.div_ceil(SHARD_SHOTS);
    (0..shards)
        .into_par_iter()
        .map(|shard| {
            let start = shard * SHARD_SHOTS;
            let len = SHARD_SHOTS.min(shots - start);
            work(shard as u64, 0..len)
        })
        .collect()
}

/// Draws `shots` samples of dimension `dim` and reports their moments.
///
/// Shot `i` of shard `j` uses [`RngStream::for_shot`]`(seed, j, i)`, and the
/// shard moments are merged in shard order, so the result is bit-identical
/// for any thread count.
pub fn batch<F>(sampler: F, dim: usize, shots: usize, seed: u64) -> Result<BatchMoments>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    if shots < 2 {
        return Err(Error::TooFewShots { shots, min: 2 });
    }
    let shards = map_shards(shots, |shard, local| -> Result<Moments> {
        let mut acc = Moments::new(dim);
        for shot in local {
            let mut rng = RngStream::for_shot(seed, shard, shot as u64).rng();
            let sample = sampler(&mut rng)?;
            if sample.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "sampler output",
                    expected: dim,
                    found: sample.len(),
                });
            }
            acc.push(&sample);
        }
        Ok(acc)
    });
    let mut total = Moments::new(dim);
    for shard in shards {
        total.merge(&shard?);
    }
    Ok(BatchMoments::from_moments(&total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{coherent_state, two_mode_squeezed_state, vacuum_state};
    use approx::assert_abs_diff_eq;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |stream: RngStream| -> Vec<u64> {
            let mut rng = stream.rng();
            (0..4).map(|_| rng.random()).collect()
        };
        let (a, b, c) = (draw(RngStream::new(7, 3)), draw(RngStream::new(7, 3)), draw(RngStream::new(7, 4)));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(RngStream::for_shot(1, 0, 1), RngStream::for_shot(1, 1, 0));
    }

    #[test]
    fn vacuum_homodyne_batch_self_test() {
        let vac = vacuum_state::<f64>(1).unwrap();
        let m = batch(
            |rng| Ok(homodyne_sample(&vac, 0, Quadrature::X, rng)?.0.values),
            1,
            100_000,
            11,
        )
        .unwrap();
        assert!(m.mean[0].abs() < 5.0 * m.stderr_mean[0]);
        assert!((m.cov[(0, 0)] - 0.5).abs() < 5.0 * m.stderr_var[0]);
    }

    #[test]
    fn batch_rejects_single_shot() {
        let r = batch(|_| Ok(vec![0.0]), 1, 1, 0);
        assert_eq!(r, Err(Error::TooFewShots { shots: 1, min: 2 }));
    }

    #[test]
    fn batch_is_independent_of_thread_count() {
        let state = coherent_state(1.0, 2.0);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| batch(|rng| Ok(heterodyne_sample(&state, 0, rng)?.values), 2, 20_000, 5).unwrap())
        };
        let one = run(1);
        let many = run(6);
        assert_eq!(one, many);
        assert_eq!(one.mean.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   many.mean.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_modes_are_rejected() {
        let vac = vacuum_state::<f64>(1).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        assert!(matches!(homodyne_sample(&vac, 1, Quadrature::P, &mut rng), Err(Error::InvalidModeIndex { .. })));
        assert!(matches!(heterodyne_sample(&vac, 2, &mut rng), Err(Error::InvalidModeIndex { .. })));
    }

    #[test]
    fn homodyne_on_two_mode_squeezed_conditions_the_partner() {
        for r in [0.5f64, 1.0, 2.0] {
            let s = two_mode_squeezed_state(r).unwrap();
            let post = homodyne_condition(&s, 0, Quadrature::X, 0.3).unwrap().unwrap();
            let c = (2.0 * r).cosh() / 2.0;
            let sh = (2.0 * r).sinh() / 2.0;
            assert_abs_diff_eq!(post.cov()[(0, 0)], c - sh * sh / c, epsilon = 1e-10);
            assert_abs_diff_eq!(post.cov()[(0, 0)], 1.0 / (2.0 * (2.0 * r).cosh()), epsilon = 1e-10);
            assert_abs_diff_eq!(post.cov()[(1, 1)], c, epsilon = 1e-10);
            assert_abs_diff_eq!(post.mean()[0], sh / c * 0.3, epsilon = 1e-12);
            assert!(post.is_physical().physical);
        }
    }

    #[test]
    fn single_mode_homodyne_leaves_nothing() {
        let mut rng = RngStream::new(0, 0).rng();
        let (outcome, post) = homodyne_sample(&coherent_state(1.0, 0.0), 0, Quadrature::X, &mut rng).unwrap();
        assert!(post.is_none());
        assert_eq!(outcome.labels.len(), outcome.values.len());
        assert!(outcome.value(0, Quadrature::X).is_some());
        assert!(outcome.value(0, Quadrature::P).is_none());
    }

    #[test]
    fn heterodyne_outcomes_carry_extra_half_unit() {
        let (_, cov) = heterodyne_distribution(&coherent_state(3.0, -1.0), 0).unwrap();
        assert_eq!(cov, Matrix2::identity());
        let (_, cov) = heterodyne_distribution(&vacuum_state(1).unwrap(), 0).unwrap();
        assert_eq!(cov, Matrix2::identity());
    }

    #[test]
    fn moment_merge_matches_single_pass() {
        let data: Vec<[f64; 2]> = (0..37).map(|i| [(i as f64).sin(), (i as f64 * 0.7).cos() + i as f64 * 0.01]).collect();
        let mut whole = Moments::new(2);
        data.iter().for_each(|d| whole.push(d));
        let mut left = Moments::new(2);
        let mut right = Moments::new(2);
        data[..10].iter().for_each(|d| left.push(d));
        data[10..].iter().for_each(|d| right.push(d));
        left.merge(&right);
        assert_abs_diff_eq!(left.mean(), whole.mean(), epsilon = 1e-14);
        assert_abs_diff_eq!(left.covariance(), whole.covariance(), epsilon = 1e-13);
    }
}
