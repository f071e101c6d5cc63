//! Second-moment equations of motion and their steady state.
//!
//! The 21 equations are not transcribed by hand. Each monomial `O` is pushed
//! through the adjoint master equation
//!
//! ```text
//! d⟨O⟩/dt = ⟨ i[H, O] + γ (2 b† O b − b†b O − O b†b) ⟩
//! ```
//!
//! with every operator product brought to normal order using `[x, x†] = 1`.
//! Because `H` is quadratic the result closes on the same 21 monomials plus
//! a constant.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::require_numerically_stable;
use crate::linalg::{eigenvalues6, lu_solve, nullspaces};
use crate::model::build_dyn_matrix;
use crate::{ChainParams, Error, Result, C64};

pub const N_MOMENTS: usize = 21;

/// Oscillator index: 0 = A, 1 = B, 2 = C.
pub type ModeIndex = usize;

pub const MODE_NAMES: [char; 3] = ['a', 'b', 'c'];

/// Single creation or annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: ModeIndex,
    pub dagger: bool,
}

impl Ladder {
    pub const fn create(mode: ModeIndex) -> Self {
        Self { mode, dagger: true }
    }

    pub const fn annihilate(mode: ModeIndex) -> Self {
        Self { mode, dagger: false }
    }
}

/// Normal-ordered monomial, stored as creation and annihilation exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub create: [u8; 3],
    pub annihilate: [u8; 3],
}

impl Monomial {
    pub fn degree(&self) -> u8 {
        self.create.iter().chain(&self.annihilate).sum()
    }
}

/// Linear combination of normal-ordered monomials.
pub type Polynomial = BTreeMap<Monomial, C64>;

/// Expands an operator word into normal order.
pub fn normal_order(word: &[Ladder]) -> Polynomial {
    let mut out = Polynomial::new();
    let mut pending: Vec<(C64, Vec<Ladder>)> = vec![(C64::new(1.0, 0.0), word.to_vec())];
    while let Some((coeff, w)) = pending.pop() {
        match w.windows(2).position(|p| !p[0].dagger && p[1].dagger) {
            Some(k) => {
                // x_i x_j† = x_j† x_i + δ_ij
                if w[k].mode == w[k + 1].mode {
                    let mut contracted = w.clone();
                    contracted.drain(k..k + 2);
                    pending.push((coeff, contracted));
                }
                let mut swapped = w;
                swapped.swap(k, k + 1);
                pending.push((coeff, swapped));
            }
            None => {
                let mut mono = Monomial {
                    create: [0; 3],
                    annihilate: [0; 3],
                };
                for op in &w {
                    if op.dagger {
                        mono.create[op.mode] += 1;
                    } else {
                        mono.annihilate[op.mode] += 1;
                    }
                }
                *out.entry(mono).or_insert(C64::new(0.0, 0.0)) += coeff;
            }
        }
    }
    out.retain(|_, c| *c != C64::new(0.0, 0.0));
    out
}

/// Rotating-frame Hamiltonian as a sum of quadratic operator words.
pub fn hamiltonian_terms(p: &ChainParams) -> Vec<(f64, [Ladder; 2])> {
    use Ladder as L;
    let (a, b, c) = (0, 1, 2);
    vec![
        (p.delta_a, [L::create(a), L::annihilate(a)]),
        (p.delta, [L::create(b), L::annihilate(b)]),
        (p.delta_c, [L::create(c), L::annihilate(c)]),
        (p.j, [L::create(a), L::annihilate(b)]),
        (p.j, [L::annihilate(a), L::create(b)]),
        (p.j, [L::create(b), L::annihilate(c)]),
        (p.j, [L::annihilate(b), L::create(c)]),
        (0.5 * p.omega_drive, [L::create(b), L::create(b)]),
        (0.5 * p.omega_drive, [L::annihilate(b), L::annihilate(b)]),
    ]
}

/// Heisenberg-picture generator applied to `O`: `i[H, O] + γ(2b†Ob − b†bO − Ob†b)`.
pub fn adjoint_generator(p: &ChainParams, observable: &[Ladder]) -> Polynomial {
    let mut acc = Polynomial::new();
    let mut add = |poly: Polynomial, scale: C64| {
        for (m, c) in poly {
            *acc.entry(m).or_insert(C64::new(0.0, 0.0)) += c * scale;
        }
    };
    let i = C64::i();
    for (h, word) in hamiltonian_terms(p) {
        if h == 0.0 {
            continue;
        }
        let ho: Vec<Ladder> = word.iter().chain(observable).copied().collect();
        let oh: Vec<Ladder> = observable.iter().chain(&word).copied().collect();
        add(normal_order(&ho), i * h);
        add(normal_order(&oh), -i * h);
    }
    let bd = Ladder::create(1);
    let b = Ladder::annihilate(1);
    let g = C64::from(p.gamma);
    let sandwich: Vec<Ladder> = std::iter::once(bd)
        .chain(observable.iter().copied())
        .chain([b])
        .collect();
    let left: Vec<Ladder> = [bd, b].into_iter().chain(observable.iter().copied()).collect();
    let right: Vec<Ladder> = observable.iter().copied().chain([bd, b]).collect();
    add(normal_order(&sandwich), 2.0 * g);
    add(normal_order(&left), -g);
    add(normal_order(&right), -g);
    acc.retain(|_, c| c.norm() > 0.0);
    acc
}

/// Position of a quadratic moment in the 21-component vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKey {
    /// ⟨x_i† x_j⟩.
    Normal(ModeIndex, ModeIndex),
    /// ⟨x_i x_j⟩, i ≤ j.
    Anomalous(ModeIndex, ModeIndex),
    /// ⟨x_i† x_j†⟩, i ≤ j.
    AnomalousConj(ModeIndex, ModeIndex),
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn pair_slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (i, j)).expect("mode indices below 3")
}

impl MomentKey {
    pub fn index(self) -> usize {
        match self {
            MomentKey::Normal(i, j) => 3 * i + j,
            MomentKey::Anomalous(i, j) => 9 + pair_slot(i, j),
            MomentKey::AnomalousConj(i, j) => 15 + pair_slot(i, j),
        }
    }

    pub fn from_index(k: usize) -> Self {
        match k {
            0..=8 => MomentKey::Normal(k / 3, k % 3),
            9..=14 => {
                let (i, j) = PAIRS[k - 9];
                MomentKey::Anomalous(i, j)
            }
            15..=20 => {
                let (i, j) = PAIRS[k - 15];
                MomentKey::AnomalousConj(i, j)
            }
            _ => panic!("moment index {k} out of range"),
        }
    }

    pub fn all() -> impl Iterator<Item = MomentKey> {
        (0..N_MOMENTS).map(MomentKey::from_index)
    }

    /// Normal-ordered operator word of this moment.
    pub fn word(self) -> [Ladder; 2] {
        match self {
            MomentKey::Normal(i, j) => [Ladder::create(i), Ladder::annihilate(j)],
            MomentKey::Anomalous(i, j) => [Ladder::annihilate(i), Ladder::annihilate(j)],
            MomentKey::AnomalousConj(i, j) => [Ladder::create(i), Ladder::create(j)],
        }
    }

    fn from_monomial(m: &Monomial) -> Option<Self> {
        let expand =
            |e: &[u8; 3]| -> Vec<usize> { (0..3).flat_map(|k| std::iter::repeat_n(k, e[k] as usize)).collect() };
        let cre = expand(&m.create);
        let ann = expand(&m.annihilate);
        match (cre.as_slice(), ann.as_slice()) {
            ([i], [j]) => Some(MomentKey::Normal(*i, *j)),
            ([], [i, j]) => Some(MomentKey::Anomalous(*i, *j)),
            ([i, j], []) => Some(MomentKey::AnomalousConj(*i, *j)),
            _ => None,
        }
    }

    pub fn label(self) -> String {
        let n = MODE_NAMES;
        match self {
            MomentKey::Normal(i, j) => format!("<{}^dag {}>", n[i], n[j]),
            MomentKey::Anomalous(i, j) => format!("<{} {}>", n[i], n[j]),
            MomentKey::AnomalousConj(i, j) => format!("<{}^dag {}^dag>", n[i], n[j]),
        }
    }
}

/// `dm/dt = A m + d` over the 21 quadratic moments.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub system_matrix: DMatrix<C64>,
    pub drive_vector: DVector<C64>,
}

impl MomentSystem {
    /// `A m + d`.
    pub fn derivative(&self, m: &DVector<C64>) -> DVector<C64> {
        &self.system_matrix * m + &self.drive_vector
    }
}

pub fn build_moment_system(params: &ChainParams) -> Result<MomentSystem> {
    params.validate()?;
    let mut a = DMatrix::<C64>::zeros(N_MOMENTS, N_MOMENTS);
    let mut d = DVector::<C64>::zeros(N_MOMENTS);
    for key in MomentKey::all() {
        let row = key.index();
        for (mono, coeff) in adjoint_generator(params, &key.word()) {
            match mono.degree() {
                0 => d[row] += coeff,
                2 => {
                    let col = MomentKey::from_monomial(&mono).expect("degree-2 monomial").index();
                    a[(row, col)] += coeff;
                }
                other => {
                    return Err(Error::InvalidParams(format!(
                        "generator produced a degree-{other} term; the model is not quadratic"
                    )))
                }
            }
        }
    }
    Ok(MomentSystem {
        system_matrix: a,
        drive_vector: d,
    })
}

/// Quadratic moments of the three oscillators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentState {
    /// ⟨x_i† x_j⟩, row-major in (i, j).
    pub normal: [C64; 9],
    /// ⟨x_i x_j⟩ for (i, j) in aa, ab, ac, bb, bc, cc.
    pub anomalous: [C64; 6],
    /// ⟨x_i† x_j†⟩ in the same order.
    pub anomalous_conj: [C64; 6],
}

impl MomentState {
    pub fn from_vector(v: &DVector<C64>) -> Self {
        let mut s = Self {
            normal: [C64::new(0.0, 0.0); 9],
            anomalous: [C64::new(0.0, 0.0); 6],
            anomalous_conj: [C64::new(0.0, 0.0); 6],
        };
        s.normal.copy_from_slice(&v.as_slice()[0..9]);
        s.anomalous.copy_from_slice(&v.as_slice()[9..15]);
        s.anomalous_conj.copy_from_slice(&v.as_slice()[15..21]);
        s
    }

    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_iterator(
            N_MOMENTS,
            self.normal
                .iter()
                .chain(&self.anomalous)
                .chain(&self.anomalous_conj)
                .copied(),
        )
    }

    pub fn get(&self, key: MomentKey) -> C64 {
        match key {
            MomentKey::Normal(i, j) => self.normal[3 * i + j],
            MomentKey::Anomalous(i, j) => self.anomalous[pair_slot(i, j)],
            MomentKey::AnomalousConj(i, j) => self.anomalous_conj[pair_slot(i, j)],
        }
    }

    /// ⟨x†x⟩ of one oscillator.
    pub fn population(&self, mode: ModeIndex) -> f64 {
        self.normal[4 * mode].re
    }
}

/// Number of second-moment rates `−i(λ_i + λ_j)` that vanish, i.e. the
/// dimension of the conserved (dark) sector implied by the first-moment
/// spectrum.
pub fn catalogued_dark_moments(params: &ChainParams) -> Result<usize> {
    let h = build_dyn_matrix(params)?;
    let ev = eigenvalues6(&h.entries)?;
    let tol = 1e-8 * h.norm().max(1.0);
    let mut count = 0;
    for i in 0..6 {
        for j in i..6 {
            if (ev[i] + ev[j]).norm() < tol {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Relative singular-value threshold for the numerical nullspace of `A`.
const NULLSPACE_TOL: f64 = 1e-9;

/// Steady state reached from the vacuum.
///
/// When A and C are resonant the dark mode `(a − c)/√2` decouples and its
/// moments are conserved, so `A` is singular. The conserved combinations
/// (left null vectors `U₀`) are pinned to their vacuum value zero by solving
/// the regularized system `(A + V₀ U₀†) m = −d`, with `V₀` the right null
/// vectors; any solution of it satisfies both `A m = −d` and `U₀† m = 0`.
pub fn steady_state(system: &MomentSystem, params: &ChainParams) -> Result<MomentState> {
    require_numerically_stable(params)?;
    let a = &system.system_matrix;
    let d = &system.drive_vector;
    let (right, left) = nullspaces(a, NULLSPACE_TOL);
    let expected = catalogued_dark_moments(params)?;
    if right.len() > expected {
        return Err(Error::SingularBeyondDarkSector {
            found: right.len(),
            expected,
        });
    }
    let mut regularized = a.clone();
    for (v, u) in right.iter().zip(&left) {
        if u.dotc(d).norm() > 1e-12 * d.norm().max(1.0) {
            // Exactly conserved moments belong to modes the drive never
            // reaches, so a fed null direction is a near-dark mode (e.g.
            // delta_a ≈ delta_c) whose decay rate is below resolution. Its
            // steady value is then not determined in double precision.
            return Err(Error::SingularSystem);
        }
        regularized += v * u.adjoint();
    }
    let m = hermitian_part(&lu_solve(&regularized, &(-d))?);
    let residual = (a * &m + d).norm();
    if residual > 1e-10 * d.norm().max(f64::MIN_POSITIVE) && d.norm() > 0.0 {
        return Err(Error::SingularSystem);
    }
    Ok(MomentState::from_vector(&m))
}

/// Projects onto moment vectors of a Hermitian state, `⟨x_i† x_j⟩ = ⟨x_j† x_i⟩*`
/// and `⟨x_i† x_j†⟩ = ⟨x_i x_j⟩*`. The exact steady state already has this
/// symmetry; near-dark modes with tiny decay rates make `A` ill-conditioned
/// and the raw solve can break it at the 1e-9 level.
fn hermitian_part(m: &DVector<C64>) -> DVector<C64> {
    let mut out = m.clone();
    for i in 0..3 {
        for j in 0..3 {
            let (k, l) = (MomentKey::Normal(i, j).index(), MomentKey::Normal(j, i).index());
            out[k] = 0.5 * (m[k] + m[l].conj());
        }
        for j in i..3 {
            let (k, l) = (
                MomentKey::Anomalous(i, j).index(),
                MomentKey::AnomalousConj(i, j).index(),
            );
            out[k] = 0.5 * (m[k] + m[l].conj());
            out[l] = out[k].conj();
        }
    }
    out
}

/// Builds the system and solves for the steady state in one call.
pub fn steady_state_for(params: &ChainParams) -> Result<MomentState> {
    steady_state(&build_moment_system(params)?, params)
}

/// Closed-form steady-state values in the resonant regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormPopulations {
    /// ⟨a†a⟩ = ⟨c†c⟩ = Ω² / 4(γ² + Δ² − Ω²).
    pub outer: f64,
    /// ⟨b†b⟩ = Ω² / 2(γ² + Δ² − Ω²).
    pub central: f64,
    /// ⟨b†b†⟩ = i(γΩ + iΔΩ) / 2(γ² + Δ² − Ω²).
    pub central_pair: C64,
}

pub fn closed_form_populations(params: &ChainParams) -> Result<ClosedFormPopulations> {
    params.require_resonant()?;
    params.require_stable()?;
    let (g, d, w) = (params.gamma, params.delta, params.omega_drive);
    let denom = g * g + d * d - w * w;
    Ok(ClosedFormPopulations {
        outer: w * w / (4.0 * denom),
        central: w * w / (2.0 * denom),
        central_pair: C64::i() * C64::new(g * w, d * w) / (2.0 * denom),
    })
}
