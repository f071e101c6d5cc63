//! First-order coherence g¹(τ) of the driven oscillator B.

use serde::Serialize;

use crate::dynamics::evolve_first_moments;
use crate::model::{build_dyn_matrix, Vec6};
use crate::moments::{steady_state_for, MomentKey};
use crate::{ChainParams, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    ClosedForm,
    QrtNumeric,
    FockOracle,
}

/// g¹ sampled on a τ grid (τ in units of 1/γ when γ = 1).
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTrace {
    pub tau_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub method: CorrelationMethod,
}

impl CorrelationTrace {
    pub fn max_abs_diff(&self, other: &CorrelationTrace) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Distance from the removable singularities Π = 0 and ω± = 0, relative to γ.
pub const EP_EPSILON: f64 = 1e-6;

/// Fails with `NearEpSingularity` when Π or ω± is within `EP_EPSILON·γ` of zero.
pub fn check_away_from_ep(params: &ChainParams) -> Result<()> {
    let s = params.derived_scalars();
    let eps = EP_EPSILON * params.gamma;
    for (name, value) in [
        ("Pi", s.pi_),
        ("omega_minus", s.omega_minus),
        ("omega_plus", s.omega_plus),
    ] {
        if value.norm() <= eps {
            return Err(Error::NearEpSingularity(format!(
                "|{name}| = {:.3e} <= {eps:.1e}",
                value.norm()
            )));
        }
    }
    Ok(())
}

fn check_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidGrid("empty tau grid".into()));
    }
    if tau_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid("tau values must be finite and non-negative".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("tau grid must be non-decreasing".into()));
    }
    Ok(())
}

/// Closed-form g¹(τ) for resonant outer oscillators. Trigonometric
/// functions of the (possibly complex) ω± are evaluated by analytic
/// continuation.
pub fn g1_closed_form(params: &ChainParams, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    params.require_resonant()?;
    params.require_stable()?;
    check_grid(tau_grid)?;
    if params.omega_drive == 0.0 {
        return Err(Error::NoEmission);
    }
    check_away_from_ep(params)?;
    let s = params.derived_scalars();
    let i = C64::i();
    let w = C64::from(params.omega_drive);
    let w3 = w * w * w;
    let w2 = w * w;
    let prefactor = i / (2.0 * s.pi_ * w3);
    let amp_minus = (w3 + i * s.alpha_plus * s.beta_plus * w) / s.omega_minus;
    let amp_plus = (w3 + i * s.alpha_plus * s.beta_minus * w) / s.omega_plus;
    let sin_minus = s.alpha_plus * s.beta_minus - i * w2;
    let sin_plus = -s.alpha_plus * s.beta_plus + i * w2;
    // e^{−Γτ/2}(A cos(ωτ/2) + B sin(ωτ/2)) written as two exponentials
    // e^{(−Γ ± iω)τ/2}(A ∓ iB)/2, which cannot overflow for complex ω.
    let terms = [
        (
            s.gamma_plus,
            s.omega_minus,
            amp_minus * s.beta_minus * s.omega_minus,
            -amp_minus * sin_minus,
        ),
        (
            s.gamma_minus,
            s.omega_plus,
            -amp_plus * s.beta_plus * s.omega_plus,
            -amp_plus * sin_plus,
        ),
    ];
    let values = tau_grid
        .iter()
        .map(|&t| {
            let sum: C64 = terms
                .iter()
                .map(|&(rate, freq, cos_amp, sin_amp)| {
                    let up = ((-rate + i * freq) * (0.5 * t)).exp();
                    let down = ((-rate - i * freq) * (0.5 * t)).exp();
                    0.5 * ((cos_amp - i * sin_amp) * up + (cos_amp + i * sin_amp) * down)
                })
                .sum();
            prefactor * sum
        })
        .collect();
    Ok(CorrelationTrace {
        tau_grid: tau_grid.to_vec(),
        values,
        method: CorrelationMethod::ClosedForm,
    })
}

/// Initial QRT vector ⟨b† x⟩ for x in (a, b, c, a†, b†, c†), taken from the
/// steady-state second moments.
pub fn qrt_initial_vector(params: &ChainParams) -> Result<Vec6> {
    let ss = steady_state_for(params)?;
    use MomentKey::{AnomalousConj, Normal};
    Ok(Vec6::from([
        ss.get(Normal(1, 0)),
        ss.get(Normal(1, 1)),
        ss.get(Normal(1, 2)),
        ss.get(AnomalousConj(1, 0)),
        ss.get(AnomalousConj(1, 1)),
        ss.get(AnomalousConj(1, 2)),
    ]))
}

/// g¹(τ) from the quantum regression theorem: `∂τ v = −iHv`, normalized by ⟨b†b⟩.
pub fn g1_qrt(params: &ChainParams, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    check_grid(tau_grid)?;
    let h = build_dyn_matrix(params)?;
    let v0 = qrt_initial_vector(params)?;
    let population = v0[1].re;
    if population <= 0.0 {
        return Err(Error::NoEmission);
    }
    // The ODE starts at τ = 0; prepend it if the grid does not.
    let starts_at_zero = tau_grid[0] == 0.0;
    let mut grid = Vec::with_capacity(tau_grid.len() + 1);
    if !starts_at_zero {
        grid.push(0.0);
    }
    grid.extend_from_slice(tau_grid);
    let states = evolve_first_moments(&h, &v0, &grid)?;
    let skip = usize::from(!starts_at_zero);
    let values = states[skip..].iter().map(|v| v[1] / population).collect();
    Ok(CorrelationTrace {
        tau_grid: tau_grid.to_vec(),
        values,
        method: CorrelationMethod::QrtNumeric,
    })
}

/// Closed form where it is well conditioned, QRT otherwise.
pub fn g1_auto(params: &ChainParams, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    if params.is_resonant() && check_away_from_ep(params).is_ok() {
        g1_closed_form(params, tau_grid)
    } else {
        g1_qrt(params, tau_grid)
    }
}

/// Uniform grid `0, h, 2h, ...` up to and including `t_end` (rounded up to a whole step).
pub fn uniform_tau_grid(t_end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidGrid(format!("t_end {t_end}, step {step}")));
    }
    let n = (t_end / step).ceil() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}
