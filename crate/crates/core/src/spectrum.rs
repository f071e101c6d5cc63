//! Optical spectrum S(ω) = (1/π) Re ∫₀^∞ g¹(τ) e^{iωτ} dτ, peak analysis
//! and coupling estimation.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::correlation::{check_away_from_ep, g1_auto, uniform_tau_grid, CorrelationTrace, EP_EPSILON};
use crate::linalg::eigenvalues6;
use crate::model::build_dyn_matrix;
use crate::{ChainParams, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Rational closed form.
    ClosedForm,
    /// Sum of the four Lorentzian-type terms.
    LorentzianSum,
    /// Closed form specialized to Ω = Δ.
    EpClosedForm,
    FourierNumeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    /// Full width at half maximum; `None` if a half-height crossing lies off the grid.
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTrace {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub peaks: Vec<Peak>,
    pub method: SpectrumMethod,
}

impl SpectrumTrace {
    fn new(omega_grid: Vec<f64>, values: Vec<f64>, method: SpectrumMethod) -> Self {
        let peaks = find_peaks_in(&omega_grid, &values);
        Self {
            omega_grid,
            values,
            peaks,
            method,
        }
    }

    /// Trapezoidal ∫S dω over the grid only.
    pub fn grid_integral(&self) -> f64 {
        self.omega_grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, s)| 0.5 * (w[1] - w[0]) * (s[0] + s[1]))
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidGrid(format!("{min}:{max}:{points}")));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k == points - 1 { max } else { min + step * k as f64 })
        .collect())
}

/// Figure grid: 2001 points over [−3γ, 3γ].
pub fn default_omega_grid(gamma: f64) -> Vec<f64> {
    linear_grid(-3.0 * gamma, 3.0 * gamma, 2001).expect("valid default grid")
}

fn check_omega_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidGrid("omega values must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("omega grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Rational closed form of S(ω) at one frequency. Finite at Ω = Δ.
pub fn rational_spectrum(params: &ChainParams, omega: f64) -> f64 {
    let (g, j) = (params.gamma, params.j);
    let p2 = (params.omega_drive - params.delta) * (params.omega_drive + params.delta);
    let w2 = omega * omega;
    let g2 = g * g;
    let lorentz = g2 * g2 + 2.0 * g2 * (w2 - p2) + (p2 + w2) * (p2 + w2);
    if j == 0.0 {
        // ω⁴ cancels; keeps ω = 0 finite.
        return 2.0 * g * (g2 - p2) / (PI * lorentz);
    }
    let j2 = j * j;
    let j4 = j2 * j2;
    let w4 = w2 * w2;
    let num = 2.0 * g * w4 * (g2 - p2);
    let den = w4 * lorentz + 16.0 * j4 * j4 - 32.0 * j4 * j2 * w2 + 8.0 * j4 * w2 * (g2 + p2 + 3.0 * w2)
        - 8.0 * j2 * w4 * (g2 + p2 + w2);
    num / (PI * den)
}

/// S(ω) from the rational closed form; the default analytic path.
pub fn spectrum_closed_form(params: &ChainParams, omega_grid: &[f64]) -> Result<SpectrumTrace> {
    params.require_resonant()?;
    params.require_stable()?;
    check_omega_grid(omega_grid)?;
    if params.omega_drive == 0.0 {
        return Err(Error::NoEmission);
    }
    let values = omega_grid.iter().map(|&w| rational_spectrum(params, w)).collect();
    Ok(SpectrumTrace::new(
        omega_grid.to_vec(),
        values,
        SpectrumMethod::ClosedForm,
    ))
}

/// S(ω) assembled from the four Lorentzian-type terms F₁…F₄.
pub fn spectrum_lorentzian(params: &ChainParams, omega_grid: &[f64]) -> Result<SpectrumTrace> {
    params.require_resonant()?;
    params.require_stable()?;
    check_omega_grid(omega_grid)?;
    if params.omega_drive == 0.0 {
        return Err(Error::NoEmission);
    }
    check_away_from_ep(params)?;
    // At ω = 0 each term's denominator reduces to 2J²; at J = 0 two terms
    // carry a zero rate and cancel only in the limit.
    if 2.0 * params.j * params.j <= EP_EPSILON * params.gamma * params.gamma {
        return Err(Error::NearEpSingularity(format!(
            "J = {} leaves zero-rate terms",
            params.j
        )));
    }
    let s = params.derived_scalars();
    let i = C64::i();
    let w = C64::from(params.omega_drive);
    let (w2, w3) = (w * w, w * w * w);
    let prefactor = i / (2.0 * s.pi_ * w3);
    let amp_minus = (w3 + i * s.alpha_plus * s.beta_plus * w) / s.omega_minus;
    let amp_plus = (w3 + i * s.alpha_plus * s.beta_minus * w) / s.omega_plus;
    let (hm, hp) = (0.5 * s.omega_minus, 0.5 * s.omega_plus);
    let values = omega_grid
        .iter()
        .map(|&x| {
            let zm = 0.5 * s.gamma_plus - i * x;
            let zp = 0.5 * s.gamma_minus - i * x;
            let dm = hm * hm + zm * zm;
            let dp = hp * hp + zp * zp;
            let (f1, f2) = (zm / dm, hm / dm);
            let (f3, f4) = (zp / dp, hp / dp);
            let first = amp_minus * (s.beta_minus * s.omega_minus * f1 - (s.alpha_plus * s.beta_minus - i * w2) * f2);
            let second = amp_plus * (s.beta_plus * s.omega_plus * f3 - (s.alpha_plus * s.beta_plus - i * w2) * f4);
            (prefactor * (first - second)).re / PI
        })
        .collect();
    Ok(SpectrumTrace::new(
        omega_grid.to_vec(),
        values,
        SpectrumMethod::LorentzianSum,
    ))
}

/// S(ω) at Ω = Δ: 2γ³ω⁴ / π(γ²ω² + (ω² − 2J²)²)², or 2γ³/π(γ² + ω²)² at J = 0.
pub fn ep_spectrum(gamma: f64, j: f64, omega: f64) -> f64 {
    let g3 = gamma * gamma * gamma;
    if j == 0.0 {
        let d = gamma * gamma + omega * omega;
        return 2.0 * g3 / (PI * d * d);
    }
    let w2 = omega * omega;
    let split = w2 - 2.0 * j * j;
    let d = gamma * gamma * w2 + split * split;
    2.0 * g3 * w2 * w2 / (PI * d * d)
}

/// The EP spectrum written through the shifted Lorentzian pair of each
/// regime: centres at ±√(2J² − γ²/4) when 2J² > γ²/4, and real decay rates
/// γ/2 ± √(γ²/4 − 2J²) otherwise.
pub fn ep_spectrum_factored(gamma: f64, j: f64, omega: f64) -> f64 {
    if j == 0.0 {
        return ep_spectrum(gamma, 0.0, omega);
    }
    let g3 = gamma * gamma * gamma;
    let half = 0.5 * gamma;
    let w4 = omega.powi(4);
    let disc = 2.0 * j * j - half * half;
    let product = if disc > 0.0 {
        let shift = disc.sqrt();
        (half * half + (omega - shift).powi(2)) * (half * half + (omega + shift).powi(2))
    } else {
        let shift = (-disc).sqrt();
        // Each bracket carries a factor 4, hence the 1/16.
        ((gamma - 2.0 * shift).powi(2) + 4.0 * omega * omega) * ((gamma + 2.0 * shift).powi(2) + 4.0 * omega * omega)
            / 16.0
    };
    2.0 * g3 * w4 / (PI * product * product)
}

/// S(ω) at the first exceptional point. Requires Ω = Δ.
pub fn spectrum_ep(params: &ChainParams, omega_grid: &[f64]) -> Result<SpectrumTrace> {
    params.validate()?;
    check_omega_grid(omega_grid)?;
    if params.omega_drive != params.delta {
        return Err(Error::InvalidParams(format!(
            "EP spectrum needs omega_drive = delta, got {} and {}",
            params.omega_drive, params.delta
        )));
    }
    let values = omega_grid
        .iter()
        .map(|&w| ep_spectrum(params.gamma, params.j, w))
        .collect();
    Ok(SpectrumTrace::new(
        omega_grid.to_vec(),
        values,
        SpectrumMethod::EpClosedForm,
    ))
}

/// Level below which g¹ counts as decayed for the Fourier transform.
pub const DECAY_THRESHOLD: f64 = 1e-8;

/// Upper limit on the τ range, in units of 1/γ.
pub const TAU_CAP: f64 = 2000.0;

/// τ grid for the numeric transform: uniform step ≤ min(0.01/γ, 0.1/|ω|max),
/// long enough for the slowest bright-mode rate to bring g¹ below
/// `DECAY_THRESHOLD`, capped at `TAU_CAP/γ`.
pub fn fourier_tau_grid(params: &ChainParams, omega_max: f64) -> Result<Vec<f64>> {
    let h = build_dyn_matrix(params)?;
    let scale = h.norm().max(1.0);
    let slowest = eigenvalues6(&h.entries)?
        .iter()
        .filter(|l| l.norm() > 1e-9 * scale)
        .map(|l| -l.im)
        .fold(f64::INFINITY, f64::min);
    if !(slowest > 0.0) {
        return Err(Error::NoSteadyState {
            omega: params.omega_drive,
            omega_c: params.critical_drive(),
        });
    }
    let gamma = params.gamma;
    // Margin covers prefactors above one and polynomial growth at a defective point.
    let t_end = ((1.3 * (1.0 / DECAY_THRESHOLD).ln() + 4.0) / slowest + 10.0 / gamma).min(TAU_CAP / gamma);
    let mut step = 0.01 / gamma;
    if omega_max.abs() > 0.0 {
        step = step.min(0.1 / omega_max.abs());
    }
    uniform_tau_grid(t_end, step)
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 3 {
        return true;
    }
    let h = grid[1] - grid[0];
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

/// Half-line Fourier transform of a g¹ trace by the trapezoidal rule, no windowing.
pub fn spectrum_fourier(trace: &CorrelationTrace, omega_grid: &[f64]) -> Result<SpectrumTrace> {
    check_omega_grid(omega_grid)?;
    let taus = &trace.tau_grid;
    let g = &trace.values;
    if taus.len() < 2 || taus[0] != 0.0 {
        return Err(Error::InvalidGrid(
            "tau grid must start at 0 and have at least two points".into(),
        ));
    }
    let tail_len = (taus.len() / 100).max(1);
    let tail = g[g.len() - tail_len..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(tail < DECAY_THRESHOLD) {
        return Err(Error::InsufficientDecay {
            threshold: DECAY_THRESHOLD,
            tail,
        });
    }
    let weights: Vec<f64> = (0..taus.len())
        .map(|k| {
            let left = if k > 0 { taus[k] - taus[k - 1] } else { 0.0 };
            let right = if k + 1 < taus.len() { taus[k + 1] - taus[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let uniform = is_uniform(taus);
    let values = omega_grid
        .iter()
        .map(|&w| {
            let mut acc = C64::new(0.0, 0.0);
            if uniform {
                // e^{iωτ_k} by repeated rotation; error grows like k·ε.
                let rot = C64::from_polar(1.0, w * (taus[1] - taus[0]));
                let mut phase = C64::new(1.0, 0.0);
                for (k, gk) in g.iter().enumerate() {
                    acc += gk * phase * weights[k];
                    phase *= rot;
                    if k % 1024 == 1023 && k + 1 < taus.len() {
                        phase = C64::from_polar(1.0, w * taus[k + 1]);
                    }
                }
            } else {
                for (k, gk) in g.iter().enumerate() {
                    acc += gk * C64::from_polar(weights[k], w * taus[k]);
                }
            }
            acc.re / PI
        })
        .collect();
    Ok(SpectrumTrace::new(
        omega_grid.to_vec(),
        values,
        SpectrumMethod::FourierNumeric,
    ))
}

/// Builds a τ grid, evaluates g¹ (closed form or QRT) and transforms it.
pub fn spectrum_fourier_for(params: &ChainParams, omega_grid: &[f64]) -> Result<SpectrumTrace> {
    check_omega_grid(omega_grid)?;
    let omega_max = omega_grid.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let taus = fourier_tau_grid(params, omega_max)?;
    let trace = g1_auto(params, &taus)?;
    spectrum_fourier(&trace, omega_grid)
}

/// ∫ f over the real line via ω = s·tan θ and composite Simpson in θ.
/// Suitable for integrands decaying at least as fast as 1/ω².
pub fn integrate_real_line(f: impl Fn(f64) -> f64, scale: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = PI / n as f64;
    let mut acc = 0.0;
    // Endpoints θ = ±π/2 contribute zero for integrands o(1/ω²).
    for k in 1..n {
        let theta = -FRAC_PI_2 + k as f64 * h;
        let c = theta.cos();
        let value = f(scale * theta.tan()) * scale / (c * c);
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * value;
    }
    acc * h / 3.0
}

/// ∫S dω over ℝ for the rational closed form.
pub fn total_spectral_weight(params: &ChainParams) -> Result<f64> {
    params.require_resonant()?;
    params.require_stable()?;
    Ok(integrate_real_line(
        |w| rational_spectrum(params, w),
        params.gamma,
        200_000,
    ))
}

/// Relative peak threshold.
pub const PEAK_THRESHOLD: f64 = 0.005;
/// Peaks closer than this many grid steps are merged.
pub const MERGE_STEPS: usize = 2;

pub fn find_peaks(spec: &SpectrumTrace) -> Vec<Peak> {
    find_peaks_in(&spec.omega_grid, &spec.values)
}

/// Interior local maxima above `PEAK_THRESHOLD` of the global maximum,
/// refined by a parabola through the three neighbouring samples.
pub fn find_peaks_in(grid: &[f64], values: &[f64]) -> Vec<Peak> {
    let n = values.len();
    if n < 3 || grid.len() != n {
        return Vec::new();
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let mut found: Vec<(usize, Peak)> = Vec::new();
    for i in 1..n - 1 {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        if !(c > l && c >= r && c > PEAK_THRESHOLD * max) {
            continue;
        }
        let (position, height) = parabola_vertex((grid[i - 1], l), (grid[i], c), (grid[i + 1], r));
        let peak = Peak {
            position,
            height,
            width: half_max_width(grid, values, i, height),
        };
        match found.last_mut() {
            Some((j, prev)) if i - *j <= MERGE_STEPS => {
                if peak.height > prev.height {
                    *j = i;
                    *prev = peak;
                }
            }
            _ => found.push((i, peak)),
        }
    }
    found.into_iter().map(|(_, p)| p).collect()
}

fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> (f64, f64) {
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curvature = (d1 - d0) / (x2 - x0);
    if !(curvature < 0.0) {
        return (x1, y1);
    }
    // y = y1 + b (x − x1) + a (x − x1)², slope at x1 from the divided differences.
    let b = d0 + curvature * (x1 - x0);
    let shift = (-b / (2.0 * curvature)).clamp(x0 - x1, x2 - x1);
    (x1 + shift, y1 + b * shift + curvature * shift * shift)
}

fn half_max_width(grid: &[f64], values: &[f64], i: usize, height: f64) -> Option<f64> {
    let half = 0.5 * height;
    let crossing = |a: usize, b: usize| grid[a] + (half - values[a]) * (grid[b] - grid[a]) / (values[b] - values[a]);
    let left = (1..=i)
        .rev()
        .find(|&k| values[k - 1] < half)
        .map(|k| crossing(k - 1, k))?;
    let right = (i..values.len() - 1)
        .find(|&k| values[k + 1] < half)
        .map(|k| crossing(k, k + 1))?;
    Some(right - left)
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingEstimate {
    pub j_hat: f64,
    pub separation: f64,
    pub peaks: [Peak; 2],
    pub notes: Vec<String>,
}

/// Coupling from the doublet separation Δω = 2√2 J.
pub fn estimate_coupling(spec: &SpectrumTrace) -> Result<CouplingEstimate> {
    estimate_coupling_in(&spec.omega_grid, &spec.values)
}

/// [`estimate_coupling`] on bare samples, e.g. a spectrum read back from disk.
pub fn estimate_coupling_in(grid: &[f64], values: &[f64]) -> Result<CouplingEstimate> {
    let peaks = find_peaks_in(grid, values);
    if peaks.len() != 2 {
        return Err(Error::NotDoublet(peaks.len()));
    }
    let separation = peaks[1].position - peaks[0].position;
    let j_hat = separation / (2.0 * 2f64.sqrt());
    let mut notes = Vec::new();
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    notes.push(format!(
        "grid step {step:.3e}; peak positions refined by quadratic interpolation"
    ));
    let centre = 0.5 * (peaks[0].position + peaks[1].position);
    if centre.abs() > step {
        notes.push(format!(
            "doublet centre {centre:.3e} is off zero by more than one grid step"
        ));
    }
    let imbalance = (peaks[0].height - peaks[1].height).abs() / peaks[0].height.max(peaks[1].height);
    if imbalance > 1e-3 {
        notes.push(format!("peak heights differ by {:.2}%", 100.0 * imbalance));
    }
    Ok(CouplingEstimate {
        j_hat,
        separation,
        peaks: [peaks[0], peaks[1]],
        notes,
    })
}
