use trimer_core::correlation::{g1_closed_form, g1_qrt, uniform_tau_grid};
use trimer_core::spectrum::{
    default_omega_grid, fourier_tau_grid, linear_grid, spectrum_closed_form, spectrum_fourier, spectrum_fourier_for,
};
use trimer_core::{ChainParams, Error};

fn worst_relative(numeric: &[f64], exact: &[f64]) -> f64 {
    let max = exact.iter().copied().fold(0.0, f64::max);
    numeric
        .iter()
        .zip(exact)
        .filter(|(_, e)| **e > 0.01 * max)
        .map(|(n, e)| (n - e).abs() / e)
        .fold(0.0, f64::max)
}

#[test]
fn transform_of_closed_form_g1_matches_rational_spectrum() {
    let p = ChainParams::resonant(1.0, 2.0, 0.25, 1.0);
    let grid = linear_grid(-3.0, 3.0, 601).unwrap();
    let numeric = spectrum_fourier_for(&p, &grid).unwrap();
    let exact = spectrum_closed_form(&p, &grid).unwrap();
    let err = worst_relative(&numeric.values, &exact.values);
    assert!(err < 1e-3, "relative error {err}");
    assert_eq!(numeric.peaks.len(), exact.peaks.len());
}

#[test]
fn transform_at_the_ep_uses_qrt_and_finds_the_doublet() {
    let p = ChainParams::resonant(1.0, 2.0, 0.5, 2.0);
    let grid = default_omega_grid(1.0);
    let numeric = spectrum_fourier_for(&p, &grid).unwrap();
    let exact = spectrum_closed_form(&p, &grid).unwrap();
    assert!(worst_relative(&numeric.values, &exact.values) < 1e-3);
    let positions: Vec<f64> = numeric.peaks.iter().map(|pk| pk.position).collect();
    assert_eq!(positions.len(), 2);
    let step = grid[1] - grid[0];
    for (got, want) in positions.iter().zip([-0.5f64.sqrt(), 0.5f64.sqrt()]) {
        assert!((got - want).abs() < step, "{got} vs {want}");
    }
}

#[test]
fn numeric_weight_is_normalized() {
    // The weight over ℝ is g¹(0) = 1. The ω⁻⁴ tails beyond ±40γ hold < 1e-5.
    let p = ChainParams::resonant(1.0, 2.0, 0.5, 2.0);
    let grid = linear_grid(-40.0, 40.0, 8001).unwrap();
    let taus = uniform_tau_grid(fourier_tau_grid(&p, 1.0).unwrap().last().copied().unwrap(), 0.0025).unwrap();
    let trace = g1_qrt(&p, &taus).unwrap();
    let spec = spectrum_fourier(&trace, &grid).unwrap();
    assert!((spec.grid_integral() - 1.0).abs() < 1e-3, "{}", spec.grid_integral());
}

#[test]
fn short_trace_is_rejected() {
    let p = ChainParams::resonant(1.0, 2.0, 0.25, 1.0);
    let taus = uniform_tau_grid(20.0, 0.01).unwrap();
    let trace = g1_closed_form(&p, &taus).unwrap();
    match spectrum_fourier(&trace, &[0.0, 1.0]) {
        Err(Error::InsufficientDecay { threshold, tail }) => assert!(tail > threshold),
        other => panic!("expected InsufficientDecay, got {other:?}"),
    }
}

#[test]
fn slow_decay_near_critical_drive_is_rejected() {
    // Ω just below Ω_c = √5: the slowest rate is tiny and the τ cap binds.
    let p = ChainParams::resonant(1.0, 2.0, 0.25, 5f64.sqrt() - 1e-5);
    let r = spectrum_fourier_for(&p, &[0.0, 1.0]);
    assert!(matches!(r, Err(Error::InsufficientDecay { .. })), "{r:?}");
}
