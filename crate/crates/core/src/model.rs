//! First-moment dynamical matrix and its closed-form spectrum.
//!
//! The first moments Ψ = (⟨a⟩, ⟨b⟩, ⟨c⟩, ⟨a†⟩, ⟨b†⟩, ⟨c†⟩) obey
//! `i dΨ/dt = H Ψ` with the non-Hermitian 6×6 matrix built here.

use nalgebra::SMatrix;
use serde::Serialize;

use crate::{params::principal_sqrt, ChainParams, Result, C64};

pub type Mat6 = SMatrix<C64, 6, 6>;
pub type Vec6 = nalgebra::SVector<C64, 6>;

pub const BASIS_LABELS: [&str; 6] = ["<a>", "<b>", "<c>", "<a^dag>", "<b^dag>", "<c^dag>"];

/// Dynamical matrix together with the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DynMatrix {
    pub entries: Mat6,
    pub params: ChainParams,
}

impl DynMatrix {
    pub fn basis_order(&self) -> [&'static str; 6] {
        BASIS_LABELS
    }

    /// Frobenius norm, used to scale numeric tolerances.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Builds the matrix of `i dΨ/dt = H Ψ`. Detunings of A and C sit on the
/// diagonal of the annihilation block and, negated, of the creation block.
pub fn build_dyn_matrix(params: &ChainParams) -> Result<DynMatrix> {
    params.validate()?;
    let ChainParams {
        delta_a,
        delta,
        delta_c,
        j,
        gamma,
        omega_drive,
    } = *params;
    let c = |re: f64| C64::new(re, 0.0);
    let mut m = Mat6::zeros();
    m[(0, 0)] = c(delta_a);
    m[(0, 1)] = c(j);
    m[(1, 0)] = c(j);
    m[(1, 1)] = C64::new(delta, -gamma);
    m[(1, 2)] = c(j);
    m[(1, 4)] = c(omega_drive);
    m[(2, 1)] = c(j);
    m[(2, 2)] = c(delta_c);

    m[(3, 3)] = c(-delta_a);
    m[(3, 4)] = c(-j);
    m[(4, 1)] = c(-omega_drive);
    m[(4, 3)] = c(-j);
    m[(4, 4)] = C64::new(-delta, -gamma);
    m[(4, 5)] = c(-j);
    m[(5, 4)] = c(-j);
    m[(5, 5)] = c(-delta_c);
    Ok(DynMatrix {
        entries: m,
        params: *params,
    })
}

/// Σ M* Σ, with Σ exchanging the annihilation and creation blocks.
pub fn block_swap_conj(m: &Mat6) -> Mat6 {
    Mat6::from_fn(|r, c| m[((r + 3) % 6, (c + 3) % 6)].conj())
}

/// Closed-form eigenvalues `{0, 0, ½(−i(γ+Π) ± ω₋), ½(−i(γ−Π) ± ω₊)}`,
/// ordered λ₁..λ₆.
pub fn analytic_eigenvalues(params: &ChainParams) -> Result<[C64; 6]> {
    params.require_resonant()?;
    let s = params.derived_scalars();
    let i = C64::i();
    let g = params.gamma;
    let base_minus = -i * (g + s.pi_);
    let base_plus = -i * (g - s.pi_);
    Ok([
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        0.5 * (base_minus + s.omega_minus),
        0.5 * (base_minus - s.omega_minus),
        0.5 * (base_plus + s.omega_plus),
        0.5 * (base_plus - s.omega_plus),
    ])
}

/// Drive strengths at which the square-root arguments of the eigenvalues
/// vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpDriveStrengths {
    /// Ω = Δ, independent of J and γ.
    pub ep1: f64,
    /// √(Δ² + (γ + 2√2 J)²).
    pub ep_plus: f64,
    /// √(Δ² + (γ − 2√2 J)²).
    pub ep_minus: f64,
}

pub fn ep_drive_strengths(params: &ChainParams) -> Result<EpDriveStrengths> {
    params.require_resonant()?;
    let shift = 2.0 * std::f64::consts::SQRT_2 * params.j;
    Ok(EpDriveStrengths {
        ep1: params.delta.abs(),
        ep_plus: params.delta.hypot(params.gamma + shift),
        ep_minus: params.delta.hypot(params.gamma - shift),
    })
}

pub fn critical_drive(params: &ChainParams) -> f64 {
    params.critical_drive()
}

/// Eigenvalues at Ω = Δ where pairs (λ₃, λ₅) and (λ₄, λ₆) coalesce:
/// `−iγ/2 ± √(2J² − (γ/2)²)`.
pub fn ep1_coalesced_eigenvalues(params: &ChainParams) -> [C64; 2] {
    let half = params.gamma / 2.0;
    let root = principal_sqrt(C64::from(2.0 * params.j * params.j - half * half));
    let centre = C64::new(0.0, -half);
    [centre + root, centre - root]
}

/// Coalesced eigenvector `(1, λ/J, 1, 1, −λ/J, 1)` at Ω = Δ, J > 0.
pub fn ep1_coalesced_eigenvector(params: &ChainParams, lambda: C64) -> Vec6 {
    let r = lambda / params.j;
    let one = C64::new(1.0, 0.0);
    Vec6::from([one, r, one, one, -r, one])
}

/// Dark-mode eigenvectors with eigenvalue zero when Δa = Δc = 0.
pub fn dark_modes() -> [Vec6; 2] {
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    [Vec6::from([o, z, -o, z, z, z]), Vec6::from([z, z, z, o, z, -o])]
}
