//! Physical parameters of the driven trimer and the scalars derived from them.
//!
//! All quantities are dimensionless multiples of the loss rate scale; the
//! examples and CLI defaults use `gamma = 1`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// One model instance: rotating-frame detunings, coupling, loss and drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Detuning of oscillator A.
    pub delta_a: f64,
    /// Detuning of the driven oscillator B.
    pub delta: f64,
    /// Detuning of oscillator C.
    pub delta_c: f64,
    /// Nearest-neighbour coupling J.
    pub j: f64,
    /// Loss rate γ; the dissipator acts on B with rate 2γ.
    pub gamma: f64,
    /// Two-photon drive amplitude Ω.
    pub omega_drive: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            delta_a: 0.0,
            delta: 2.0,
            delta_c: 0.0,
            j: 0.25,
            gamma: 1.0,
            omega_drive: 1.0,
        }
    }
}

/// Parameter that a sweep or exceptional-point search varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    OmegaDrive,
    Delta,
    J,
    Gamma,
    DeltaA,
    DeltaC,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::OmegaDrive => "omega_drive",
            Knob::Delta => "delta",
            Knob::J => "j",
            Knob::Gamma => "gamma",
            Knob::DeltaA => "delta_a",
            Knob::DeltaC => "delta_c",
        }
    }
}

impl std::str::FromStr for Knob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "omega" | "omega_drive" | "omega-drive" => Knob::OmegaDrive,
            "delta" => Knob::Delta,
            "j" => Knob::J,
            "gamma" => Knob::Gamma,
            "delta_a" | "delta-a" => Knob::DeltaA,
            "delta_c" | "delta-c" => Knob::DeltaC,
            other => return Err(Error::InvalidParams(format!("unknown knob '{other}'"))),
        })
    }
}

impl ChainParams {
    /// Parameters with A and C resonant with the drive.
    pub fn resonant(gamma: f64, delta: f64, j: f64, omega_drive: f64) -> Self {
        Self {
            delta_a: 0.0,
            delta,
            delta_c: 0.0,
            j,
            gamma,
            omega_drive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.delta_a,
            self.delta,
            self.delta_c,
            self.j,
            self.gamma,
            self.omega_drive,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.j < 0.0 {
            return Err(Error::InvalidParams(format!("j must be >= 0, got {}", self.j)));
        }
        if self.omega_drive < 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega_drive must be >= 0, got {}",
                self.omega_drive
            )));
        }
        Ok(())
    }

    /// True iff A and C are exactly resonant with the drive, the regime in
    /// which all closed forms hold.
    pub fn is_resonant(&self) -> bool {
        self.delta_a == 0.0 && self.delta_c == 0.0
    }

    pub fn require_resonant(&self) -> Result<()> {
        self.validate()?;
        if self.is_resonant() {
            Ok(())
        } else {
            Err(Error::NotResonant {
                delta_a: self.delta_a,
                delta_c: self.delta_c,
            })
        }
    }

    /// Ω_c = √(γ² + Δ²); no steady state exists for Ω ≥ Ω_c.
    pub fn critical_drive(&self) -> f64 {
        self.gamma.hypot(self.delta)
    }

    pub fn is_stable(&self) -> bool {
        self.omega_drive < self.critical_drive()
    }

    pub fn require_stable(&self) -> Result<()> {
        self.validate()?;
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::NoSteadyState {
                omega: self.omega_drive,
                omega_c: self.critical_drive(),
            })
        }
    }

    /// Whether the coupling respects 2J² ≤ γ², the range in which the
    /// closed-form analysis is carried out. Violating it is allowed; callers
    /// may surface it as a warning.
    pub fn within_coupling_bound(&self) -> bool {
        2.0 * self.j * self.j <= self.gamma * self.gamma
    }

    pub fn knob(&self, knob: Knob) -> f64 {
        match knob {
            Knob::OmegaDrive => self.omega_drive,
            Knob::Delta => self.delta,
            Knob::J => self.j,
            Knob::Gamma => self.gamma,
            Knob::DeltaA => self.delta_a,
            Knob::DeltaC => self.delta_c,
        }
    }

    pub fn with_knob(mut self, knob: Knob, value: f64) -> Self {
        match knob {
            Knob::OmegaDrive => self.omega_drive = value,
            Knob::Delta => self.delta = value,
            Knob::J => self.j = value,
            Knob::Gamma => self.gamma = value,
            Knob::DeltaA => self.delta_a = value,
            Knob::DeltaC => self.delta_c = value,
        }
        self
    }

    pub fn derived_scalars(&self) -> DerivedScalars {
        DerivedScalars::new(self)
    }
}

/// Principal square root with the argument of the input taken in (−π, π].
///
/// `num_complex` follows the sign of a signed-zero imaginary part, so
/// `sqrt(-3 - 0i)` would land on `-i√3`; negative zero is folded to positive
/// zero first.
pub fn principal_sqrt(z: C64) -> C64 {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    C64::new(z.re, im).sqrt()
}

/// Scalars that parameterize the closed-form eigenvalues, g¹(τ) and S(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScalars {
    /// Π = √(Ω² − Δ²).
    pub pi_: C64,
    /// Z = 8J² − γ² − Π².
    pub z: C64,
    /// ω₋ = √(Z − 2γΠ).
    pub omega_minus: C64,
    /// ω₊ = √(Z + 2γΠ).
    pub omega_plus: C64,
    /// Γ₊ = γ + Π.
    pub gamma_plus: C64,
    /// Γ₋ = γ − Π.
    pub gamma_minus: C64,
    /// α₊ = γ + iΔ.
    pub alpha_plus: C64,
    /// α₋ = γ − iΔ.
    pub alpha_minus: C64,
    /// β₊ = Δ + iΠ.
    pub beta_plus: C64,
    /// β₋ = Δ − iΠ.
    pub beta_minus: C64,
}

impl DerivedScalars {
    pub fn new(p: &ChainParams) -> Self {
        let (gamma, delta, j, omega) = (p.gamma, p.delta, p.j, p.omega_drive);
        // Ω² − Δ² factored to keep relative accuracy near Ω = Δ.
        let pi_sq = (omega - delta) * (omega + delta);
        let pi_ = if pi_sq >= 0.0 {
            C64::new(pi_sq.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-pi_sq).sqrt())
        };
        let z = C64::from(8.0 * j * j - gamma * gamma - pi_sq);
        let omega_minus = principal_sqrt(z - 2.0 * gamma * pi_);
        let omega_plus = principal_sqrt(z + 2.0 * gamma * pi_);
        let i = C64::i();
        Self {
            pi_,
            z,
            omega_minus,
            omega_plus,
            gamma_plus: gamma + pi_,
            gamma_minus: gamma - pi_,
            alpha_plus: C64::new(gamma, delta),
            alpha_minus: C64::new(gamma, -delta),
            beta_plus: delta + i * pi_,
            beta_minus: delta - i * pi_,
        }
    }
}
