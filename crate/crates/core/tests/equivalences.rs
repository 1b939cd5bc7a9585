//! Cross-module checks: the same physics reached by two independent routes.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use cvconj::channels::{
    apply_channel, channel_from_dilation, conjugation_channel, fidelity_coherent, measure_prepare_conjugation,
    min_cp_noise, phase_flip,
};
use cvconj::constraints::{check_constraints, conjugator_row1, solve_row1};
use cvconj::gaussian::{coherent_state, isotropic_state, tensor, vacuum_state, GaussianState};
use cvconj::measurement::{batch, heterodyne_distribution, heterodyne_sample, homodyne_sample, Quadrature};
use cvconj::transforms::{
    apply, beamsplitter_transform, phase_conjugator_transform, phase_rotation_transform, squeezing_transform,
};
use nalgebra::{DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_single_mode(rng: &mut impl Rng) -> GaussianState<f64> {
    let (x, p) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let thermal = isotropic_state(x, p, rng.random_range(0.5..3.0)).unwrap();
    let t = squeezing_transform(rng.random_range(-1.2..1.2))
        .then(&phase_rotation_transform(rng.random_range(-3.2..3.2)))
        .unwrap();
    apply(&t, &thermal).unwrap()
}

#[test]
fn dilation_reproduces_the_conjugation_channel() {
    let channel = channel_from_dilation(&phase_conjugator_transform::<f64>(), &vacuum_state(1).unwrap(), 0).unwrap();
    let direct = conjugation_channel(1.0).unwrap();
    assert!(channel.max_abs_diff(&direct) < 1e-12, "{channel:?}");
}

#[test]
fn conjugator_output_is_three_halves_for_every_coherent_input() {
    let t = phase_conjugator_transform::<f64>();
    for &(x, p) in &[(0.0, 0.0), (1.0, 2.0), (-5.0, 5.0), (3.3, -0.7)] {
        let out = apply(&t, &tensor(&coherent_state(x, p), &vacuum_state(1).unwrap())).unwrap();
        let (mean, cov) = out.mode_block(0).unwrap();
        assert!((cov - Matrix2::identity() * 1.5).amax() < 1e-12);
        assert!((mean[0] - x).abs() < 1e-12 && (mean[1] + p).abs() < 1e-12);
        // Added noise above the vacuum: twice the vacuum variance.
        assert!((cov[(0, 0)] - 0.5 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn measure_and_prepare_equals_optimal_conjugation() {
    let mp = measure_prepare_conjugation::<f64>();
    let direct = conjugation_channel(1.0).unwrap();
    assert!(mp.max_abs_diff(&direct) < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let s = random_single_mode(&mut rng);
        assert!(s.is_physical().physical);
        let a = apply_channel(&mp, &s).unwrap();
        let b = apply_channel(&direct, &s).unwrap();
        assert!((a.mean() - b.mean()).amax() < 1e-10);
        assert!((a.cov() - b.cov()).amax() < 1e-10);
    }
}

#[test]
fn noise_bound_from_channel_and_coefficients_agree() {
    assert!((min_cp_noise(&phase_flip::<f64>()) - 1.0).abs() < 1e-9);
    assert!(conjugation_channel(1.0 - 1e-6).is_err());
    // The conjugator's first row satisfies every commutation constraint.
    let [m11, m12, l11, l12] = conjugator_row1::<f64>();
    let sol = solve_row1::<f64>();
    assert!((sol.m12 - m12.re).abs() < 1e-12 && (sol.l12 - l12.re).abs() < 1e-12);
    assert!(m12.im == 0.0 && l12.im == 0.0);
    let t = phase_conjugator_transform::<f64>();
    let report = check_constraints(&t.m().fixed_view::<2, 2>(0, 0).into(), &t.l().fixed_view::<2, 2>(0, 0).into());
    assert!(report.max_residual() < 1e-12, "{report:?} {m11:?} {l11:?}");
}

#[test]
fn fidelity_is_one_half_over_the_grid() {
    let grid = [-5.0f64, -1.0, 0.0, 1.0, 5.0];
    let channel = conjugation_channel(1.0).unwrap();
    for &x in &grid {
        for &p in &grid {
            let out = apply_channel(&channel, &coherent_state(x, p)).unwrap();
            assert!((fidelity_coherent(&out, x, -p).unwrap() - 0.5).abs() < 1e-12);
        }
    }
}

/// Heterodyne modelled as `V + I/2` smearing versus the explicit route:
/// balanced beam splitter with a vacuum ancilla, homodyne `x` on one output
/// and `p` on the other, rescaled by `√2`.
#[test]
fn heterodyne_matches_explicit_ancilla_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let s = random_single_mode(&mut rng);
        let (mean, cov) = heterodyne_distribution(&s, 0).unwrap();
        let split = apply(&beamsplitter_transform(FRAC_PI_4), &tensor(&s, &vacuum_state(1).unwrap())).unwrap();
        let wx = DVector::from_vec(vec![SQRT_2, 0.0, 0.0, 0.0]);
        let wp = DVector::from_vec(vec![0.0, 0.0, 0.0, SQRT_2]);
        let ex = wx.dot(split.mean());
        let ep = wp.dot(split.mean());
        let vxx = split.quadrature_variance(&wx).unwrap();
        let vpp = split.quadrature_variance(&wp).unwrap();
        let vxp = (wx.transpose() * split.cov() * &wp)[(0, 0)];
        assert!((ex - mean[0]).abs() < 1e-12 && (ep - mean[1]).abs() < 1e-12);
        assert!((vxx - cov[(0, 0)]).abs() < 1e-12);
        assert!((vpp - cov[(1, 1)]).abs() < 1e-12);
        assert!((vxp - cov[(0, 1)]).abs() < 1e-12);
    }

    // Sampled comparison on one squeezed, displaced state.
    let s = apply(&squeezing_transform(0.6), &coherent_state(1.5, -0.5)).unwrap();
    let split = apply(&beamsplitter_transform(FRAC_PI_4), &tensor(&s, &vacuum_state(1).unwrap())).unwrap();
    let direct = batch(|r| Ok(heterodyne_sample(&s, 0, r)?.values), 2, 100_000, 5).unwrap();
    let explicit = batch(
        |r| {
            let (x, rest) = homodyne_sample(&split, 0, Quadrature::X, r)?;
            let (p, _) = homodyne_sample(&rest.unwrap(), 0, Quadrature::P, r)?;
            Ok(vec![SQRT_2 * x.values[0], SQRT_2 * p.values[0]])
        },
        2,
        100_000,
        6,
    )
    .unwrap();
    for k in 0..2 {
        let se = direct.stderr_mean[k].hypot(explicit.stderr_mean[k]);
        assert!((direct.mean[k] - explicit.mean[k]).abs() < 5.0 * se);
        let sv = direct.stderr_var[k].hypot(explicit.stderr_var[k]);
        assert!((direct.cov[(k, k)] - explicit.cov[(k, k)]).abs() < 5.0 * sv);
    }
}

#[test]
fn samplers_match_analytic_moments() {
    let s = apply(
        &squeezing_transform(0.4).then(&phase_rotation_transform(0.9)).unwrap(),
        &coherent_state(-2.0, 0.7),
    )
    .unwrap();
    let (mean, cov) = heterodyne_distribution(&s, 0).unwrap();
    let m = batch(|r| Ok(heterodyne_sample(&s, 0, r)?.values), 2, 100_000, 11).unwrap();
    for k in 0..2 {
        assert!((m.mean[k] - mean[k]).abs() < 5.0 * m.stderr_mean[k]);
        assert!((m.cov[(k, k)] - cov[(k, k)]).abs() < 5.0 * m.stderr_var[k]);
    }
    let h = batch(|r| Ok(homodyne_sample(&s, 0, Quadrature::P, r)?.0.values), 1, 100_000, 12).unwrap();
    assert!((h.mean[0] - s.mean()[1]).abs() < 5.0 * h.stderr_mean[0]);
    assert!((h.cov[(0, 0)] - s.cov()[(1, 1)]).abs() < 5.0 * h.stderr_var[0]);
}

/// After the balanced splitter, `|α⟩ ⊗ |α*⟩` carries `√2 x` on the `x`
/// quadrature of mode 1' and `√2 p` on the `p` quadrature of mode 2'.
#[test]
fn beam_splitter_separates_quadratures() {
    let (x, p) = (1.0, 2.0);
    let split = apply(
        &beamsplitter_transform(FRAC_PI_4),
        &tensor(&coherent_state(x, p), &coherent_state(x, -p)),
    )
    .unwrap();
    let hx = batch(|r| Ok(homodyne_sample(&split, 0, Quadrature::X, r)?.0.values), 1, 100_000, 21).unwrap();
    assert!((hx.mean[0] - SQRT_2 * x).abs() < 5.0 * hx.stderr_mean[0]);
    assert!((hx.cov[(0, 0)] - 0.5).abs() < 5.0 * hx.stderr_var[0]);
    let hp = batch(|r| Ok(homodyne_sample(&split, 1, Quadrature::P, r)?.0.values), 1, 100_000, 22).unwrap();
    assert!((hp.mean[0] - SQRT_2 * p).abs() < 5.0 * hp.stderr_mean[0]);
    assert!((hp.cov[(0, 0)] - 0.5).abs() < 5.0 * hp.stderr_var[0]);
}
