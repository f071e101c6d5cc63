//! Brute-force master-equation oracle in a truncated three-mode Fock space.
//!
//! ∂tρ = −i[H, ρ] + γ(2bρb† − b†bρ − ρb†b) is integrated with fixed-step RK4
//! and a matrix-free Liouvillian. With `K = H − iγ b†b` the generator reads
//! `L(σ) = −iKσ + iσK† + 2γ bσb†`; for Hermitian σ the first two terms are
//! `X + X†` with `X = −iKσ`, which halves the work.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::correlation::{CorrelationMethod, CorrelationTrace};
use crate::moments::{Ladder, MomentKey, MomentState, N_MOMENTS};
use crate::{ChainParams, Error, Result, C64};

/// Largest Hilbert dimension accepted.
pub const MAX_DIMENSION: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockConfig {
    /// Maximum occupation kept for (a, b, c).
    pub cutoffs: [usize; 3],
    /// RK4 step, in units of 1/γ.
    pub dt: f64,
    /// Longest relaxation time before giving up.
    pub t_end: f64,
    /// Steady state is declared when ‖dm/dt‖∞ / ‖m‖∞ over the 21 quadratic
    /// moments falls below this rate.
    pub tolerance: f64,
    /// Largest tolerated probability of any mode sitting at its cutoff.
    pub saturation_limit: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            cutoffs: [6, 8, 6],
            dt: 0.02,
            t_end: 600.0,
            tolerance: 1e-5,
            saturation_limit: 1e-5,
        }
    }
}

impl FockConfig {
    pub fn with_cutoffs(cutoffs: [usize; 3]) -> Self {
        Self {
            cutoffs,
            ..Self::default()
        }
    }
}

/// Product basis |n_a, n_b, n_c⟩ with index `(n_a (N_b+1) + n_b)(N_c+1) + n_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub cutoffs: [usize; 3],
}

impl FockBasis {
    pub fn new(cutoffs: [usize; 3]) -> Result<Self> {
        let dim = cutoffs.iter().map(|n| n + 1).product::<usize>();
        if dim > MAX_DIMENSION {
            return Err(Error::HilbertTooLarge(dim));
        }
        Ok(Self { cutoffs })
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().map(|n| n + 1).product()
    }

    pub fn index(&self, n: [usize; 3]) -> usize {
        (n[0] * (self.cutoffs[1] + 1) + n[1]) * (self.cutoffs[2] + 1) + n[2]
    }

    pub fn occupations(&self, index: usize) -> [usize; 3] {
        let nc = index % (self.cutoffs[2] + 1);
        let rest = index / (self.cutoffs[2] + 1);
        [rest / (self.cutoffs[1] + 1), rest % (self.cutoffs[1] + 1), nc]
    }

    /// Applies an operator word (rightmost first) to a basis state. Creation
    /// past the cutoff annihilates the state.
    pub fn apply_word(&self, word: &[Ladder], index: usize) -> Option<(usize, f64)> {
        let mut n = self.occupations(index);
        let mut amp = 1.0;
        for op in word.iter().rev() {
            let k = &mut n[op.mode];
            if op.dagger {
                if *k == self.cutoffs[op.mode] {
                    return None;
                }
                *k += 1;
                amp *= (*k as f64).sqrt();
            } else {
                if *k == 0 {
                    return None;
                }
                amp *= (*k as f64).sqrt();
                *k -= 1;
            }
        }
        Some((self.index(n), amp))
    }
}

/// Density operator on the truncated basis, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub basis: FockBasis,
    pub data: Vec<C64>,
}

impl DensityOperator {
    pub fn vacuum(basis: FockBasis) -> Self {
        let d = basis.dim();
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        data[0] = C64::new(1.0, 0.0);
        Self { basis, data }
    }

    pub fn from_matrix(basis: FockBasis, m: &DMatrix<C64>) -> Self {
        let d = basis.dim();
        assert_eq!(m.shape(), (d, d));
        let data = (0..d * d).map(|k| m[(k / d, k % d)]).collect();
        Self { basis, data }
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let d = self.basis.dim();
        DMatrix::from_row_slice(d, d, &self.data)
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// max |ρ_ij − ρ_ji*|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Tr[σ O] for an operator word O.
    pub fn expectation(&self, word: &[Ladder]) -> C64 {
        let d = self.dim();
        (0..d)
            .filter_map(|k| {
                self.basis
                    .apply_word(word, k)
                    .map(|(m, amp)| self.data[k * d + m] * amp)
            })
            .sum()
    }

    pub fn moments(&self) -> MomentState {
        let v = nalgebra::DVector::from_iterator(N_MOMENTS, MomentKey::all().map(|k| self.expectation(&k.word())));
        MomentState::from_vector(&v)
    }

    pub fn population(&self, mode: usize) -> f64 {
        self.expectation(&[Ladder::create(mode), Ladder::annihilate(mode)]).re
    }

    /// Probability that `mode` occupies its highest retained level.
    pub fn top_level_probability(&self, mode: usize) -> f64 {
        let d = self.dim();
        let top = self.basis.cutoffs[mode];
        (0..d)
            .filter(|&i| self.basis.occupations(i)[mode] == top)
            .map(|i| self.data[i * d + i].re)
            .sum()
    }

    pub fn check_saturation(&self, limit: f64) -> Result<()> {
        for mode in 0..3 {
            let population = self.top_level_probability(mode);
            if population > limit {
                return Err(Error::CutoffSaturation {
                    mode: crate::moments::MODE_NAMES[mode],
                    population,
                });
            }
        }
        Ok(())
    }
}

/// Matrix-free Liouvillian for fixed parameters and basis.
pub struct Liouvillian {
    basis: FockBasis,
    gamma: f64,
    /// CSR rows of K = H − iγ b†b.
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    /// For each basis index: (index with n_b + 1, √(n_b + 1)) when inside the cutoff.
    raise_b: Vec<Option<(usize, f64)>>,
}

impl Liouvillian {
    pub fn new(params: &ChainParams, basis: FockBasis) -> Result<Self> {
        params.validate()?;
        let d = basis.dim();
        let (a, b, c) = (0, 1, 2);
        use Ladder as L;
        let mut terms: Vec<(C64, Vec<Ladder>)> = vec![
            (C64::from(params.delta_a), vec![L::create(a), L::annihilate(a)]),
            (
                C64::new(params.delta, -params.gamma),
                vec![L::create(b), L::annihilate(b)],
            ),
            (C64::from(params.delta_c), vec![L::create(c), L::annihilate(c)]),
        ];
        for (x, y) in [(a, b), (b, c)] {
            terms.push((C64::from(params.j), vec![L::create(x), L::annihilate(y)]));
            terms.push((C64::from(params.j), vec![L::create(y), L::annihilate(x)]));
        }
        let half_drive = C64::from(0.5 * params.omega_drive);
        terms.push((half_drive, vec![L::create(b), L::create(b)]));
        terms.push((half_drive, vec![L::annihilate(b), L::annihilate(b)]));

        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); d];
        for (coeff, word) in &terms {
            if *coeff == C64::new(0.0, 0.0) {
                continue;
            }
            for col in 0..d {
                if let Some((row, amp)) = basis.apply_word(word, col) {
                    match rows[row].iter_mut().find(|(k, _)| *k == col) {
                        Some((_, v)) => *v += coeff * amp,
                        None => rows[row].push((col, coeff * amp)),
                    }
                }
            }
        }
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|(k, _)| *k);
            for (k, v) in row {
                cols.push(k);
                vals.push(v);
            }
            row_start.push(cols.len());
        }
        let raise_b = (0..d).map(|i| basis.apply_word(&[L::create(b)], i)).collect();
        Ok(Self {
            basis,
            gamma: params.gamma,
            row_start,
            cols,
            vals,
            raise_b,
        })
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    /// out = −i K σ.
    fn minus_i_k_times(&self, sigma: &[C64], out: &mut [C64]) {
        let d = self.basis.dim();
        let minus_i = C64::new(0.0, -1.0);
        for i in 0..d {
            let row = &mut out[i * d..(i + 1) * d];
            row.fill(C64::new(0.0, 0.0));
            for e in self.row_start[i]..self.row_start[i + 1] {
                let coeff = minus_i * self.vals[e];
                let src = &sigma[self.cols[e] * d..(self.cols[e] + 1) * d];
                for (r, s) in row.iter_mut().zip(src) {
                    *r += coeff * s;
                }
            }
        }
    }

    /// out += 2γ bσb†.
    fn add_jump(&self, sigma: &[C64], out: &mut [C64]) {
        let d = self.basis.dim();
        let g2 = 2.0 * self.gamma;
        for i in 0..d {
            let Some((ui, si)) = self.raise_b[i] else { continue };
            for j in 0..d {
                if let Some((uj, sj)) = self.raise_b[j] {
                    out[i * d + j] += sigma[ui * d + uj] * (g2 * si * sj);
                }
            }
        }
    }

    /// L(σ) for Hermitian σ. `scratch` must have length d².
    pub fn apply_hermitian(&self, sigma: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d = self.basis.dim();
        self.minus_i_k_times(sigma, scratch);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = scratch[i * d + j] + scratch[j * d + i].conj();
            }
        }
        self.add_jump(sigma, out);
    }

    /// L(σ) for arbitrary σ. `scratch` must have length 2d².
    pub fn apply_general(&self, sigma: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d = self.basis.dim();
        let (adj, tmp) = scratch.split_at_mut(d * d);
        // iσK† = (−iKσ†)†.
        for i in 0..d {
            for j in 0..d {
                adj[i * d + j] = sigma[j * d + i].conj();
            }
        }
        self.minus_i_k_times(adj, tmp);
        self.minus_i_k_times(sigma, out);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += tmp[j * d + i].conj();
            }
        }
        self.add_jump(sigma, out);
    }
}

/// Fixed-step RK4 on the vectorized operator.
struct Rk4 {
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
    scratch: Vec<C64>,
    hermitian: bool,
}

impl Rk4 {
    fn new(dim: usize, hermitian: bool) -> Self {
        let n = dim * dim;
        Self {
            k: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]),
            stage: vec![C64::new(0.0, 0.0); n],
            scratch: vec![C64::new(0.0, 0.0); 2 * n],
            hermitian,
        }
    }

    fn eval(&mut self, l: &Liouvillian, which: usize, from_stage: bool, y: &[C64]) {
        let src: &[C64] = if from_stage { &self.stage } else { y };
        if self.hermitian {
            l.apply_hermitian(src, &mut self.k[which], &mut self.scratch[..src.len()]);
        } else {
            l.apply_general(src, &mut self.k[which], &mut self.scratch);
        }
    }

    fn step(&mut self, l: &Liouvillian, y: &mut [C64], h: f64) {
        self.eval(l, 0, false, y);
        for (s, (yi, k)) in self.stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *s = yi + k * (0.5 * h);
        }
        self.eval(l, 1, true, y);
        for (s, (yi, k)) in self.stage.iter_mut().zip(y.iter().zip(&self.k[1])) {
            *s = yi + k * (0.5 * h);
        }
        self.eval(l, 2, true, y);
        for (s, (yi, k)) in self.stage.iter_mut().zip(y.iter().zip(&self.k[2])) {
            *s = yi + k * h;
        }
        self.eval(l, 3, true, y);
        let w = h / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (self.k[0][i] + (self.k[1][i] + self.k[2][i]) * 2.0 + self.k[3][i]) * w;
        }
    }
}

/// Worst trace and hermiticity deviations seen along a trajectory (sampled every 100 steps).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
}

impl TrajectoryStats {
    fn sample(&mut self, rho: &DensityOperator) {
        self.max_trace_error = self.max_trace_error.max((rho.trace() - 1.0).norm());
        self.max_hermiticity_error = self.max_hermiticity_error.max(rho.hermiticity_error());
    }
}

fn validate_config(cfg: &FockConfig) -> Result<FockBasis> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite() && cfg.t_end >= 0.0 && cfg.tolerance > 0.0) {
        return Err(Error::InvalidParams(format!("bad Fock config {cfg:?}")));
    }
    FockBasis::new(cfg.cutoffs)
}

/// ρ(t_end) from ρ0.
pub fn evolve_rho(
    params: &ChainParams,
    cfg: &FockConfig,
    rho0: &DensityOperator,
) -> Result<(DensityOperator, TrajectoryStats)> {
    let basis = validate_config(cfg)?;
    if rho0.basis != basis {
        return Err(Error::InvalidParams(
            "initial state basis differs from config cutoffs".into(),
        ));
    }
    let l = Liouvillian::new(params, basis)?;
    let mut rho = rho0.clone();
    let mut rk = Rk4::new(basis.dim(), true);
    let n = (cfg.t_end / cfg.dt).ceil() as usize;
    let h = if n == 0 { 0.0 } else { cfg.t_end / n as f64 };
    let mut stats = TrajectoryStats::default();
    stats.sample(&rho);
    for step in 1..=n {
        rk.step(&l, &mut rho.data, h);
        if step % 100 == 0 || step == n {
            stats.sample(&rho);
        }
    }
    stats.steps = n;
    rho.check_saturation(cfg.saturation_limit)?;
    Ok((rho, stats))
}

/// Tr[L(σ) O] for each of the 21 quadratic moments.
pub fn moment_derivatives(l: &Liouvillian, rho: &DensityOperator) -> MomentState {
    let d = l.basis().dim();
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    let mut scratch = vec![C64::new(0.0, 0.0); 2 * d * d];
    l.apply_general(&rho.data, &mut out, &mut scratch);
    DensityOperator {
        basis: l.basis(),
        data: out,
    }
    .moments()
}

#[derive(Debug, Clone)]
pub struct FockSteadyState {
    pub rho: DensityOperator,
    pub time: f64,
    pub drift: f64,
    pub stats: TrajectoryStats,
}

/// Relaxes from the vacuum until the moment drift rate drops below `cfg.tolerance`.
pub fn relax_to_steady_state(params: &ChainParams, cfg: &FockConfig) -> Result<FockSteadyState> {
    crate::dynamics::require_numerically_stable(params)?;
    let basis = validate_config(cfg)?;
    let l = Liouvillian::new(params, basis)?;
    let d = basis.dim();
    let mut rho = DensityOperator::vacuum(basis);
    let mut rk = Rk4::new(d, true);
    let mut deriv = vec![C64::new(0.0, 0.0); d * d];
    let mut scratch = vec![C64::new(0.0, 0.0); d * d];
    let check_every = ((1.0 / params.gamma) / cfg.dt).ceil().max(1.0) as usize;
    let mut stats = TrajectoryStats::default();
    stats.sample(&rho);
    let mut step = 0usize;
    let mut drift = f64::INFINITY;
    loop {
        if step.is_multiple_of(check_every) {
            l.apply_hermitian(&rho.data, &mut deriv, &mut scratch);
            let rates = DensityOperator {
                basis,
                data: deriv.clone(),
            }
            .moments()
            .to_vector();
            let size = rho.moments().to_vector().camax();
            drift = if size > 0.0 {
                rates.camax() / size
            } else {
                f64::INFINITY
            };
            if drift < cfg.tolerance {
                break;
            }
        }
        let t = step as f64 * cfg.dt;
        if t >= cfg.t_end {
            return Err(Error::NotConverged {
                t_end: cfg.t_end,
                drift,
            });
        }
        rk.step(&l, &mut rho.data, cfg.dt);
        step += 1;
        if step.is_multiple_of(100) {
            stats.sample(&rho);
        }
    }
    stats.sample(&rho);
    stats.steps = step;
    rho.check_saturation(cfg.saturation_limit)?;
    Ok(FockSteadyState {
        rho,
        time: step as f64 * cfg.dt,
        drift,
        stats,
    })
}

/// g¹(τ) = Tr[b e^{Lτ}(ρ_ss b†)] / Tr[b†b ρ_ss], evolved with RK4 steps no
/// longer than `cfg.dt` between grid points.
pub fn oracle_g1_from(
    steady: &DensityOperator,
    params: &ChainParams,
    cfg: &FockConfig,
    tau_grid: &[f64],
) -> Result<CorrelationTrace> {
    if tau_grid.iter().any(|t| !t.is_finite() || *t < 0.0) || tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid(
            "tau grid must be non-negative and non-decreasing".into(),
        ));
    }
    let basis = steady.basis;
    let l = Liouvillian::new(params, basis)?;
    let d = basis.dim();
    let population = steady.population(1);
    if population <= 0.0 {
        return Err(Error::NoEmission);
    }
    // σ = ρ b†: column j of σ is √(n_b(j)+1)·column up(j) of ρ.
    let mut sigma = DensityOperator {
        basis,
        data: vec![C64::new(0.0, 0.0); d * d],
    };
    for j in 0..d {
        if let Some((uj, s)) = basis.apply_word(&[Ladder::create(1)], j) {
            for i in 0..d {
                sigma.data[i * d + j] = steady.data[i * d + uj] * s;
            }
        }
    }
    let observe = |s: &DensityOperator| s.expectation(&[Ladder::annihilate(1)]) / population;
    let mut rk = Rk4::new(d, false);
    let mut t = 0.0;
    let mut values = Vec::with_capacity(tau_grid.len());
    for &target in tau_grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / cfg.dt).ceil() as usize;
            let h = span / n as f64;
            for _ in 0..n {
                rk.step(&l, &mut sigma.data, h);
            }
            t = target;
        }
        values.push(observe(&sigma));
    }
    Ok(CorrelationTrace {
        tau_grid: tau_grid.to_vec(),
        values,
        method: CorrelationMethod::FockOracle,
    })
}

/// Relaxes to the steady state and then evaluates g¹ on `tau_grid`.
pub fn oracle_g1(params: &ChainParams, cfg: &FockConfig, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    let steady = relax_to_steady_state(params, cfg)?;
    oracle_g1_from(&steady.rho, params, cfg, tau_grid)
}
