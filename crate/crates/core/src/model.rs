//! Physical parameters, frame conventions and regime classification.
//!
//! Every frequency in this crate is an angular frequency measured from the
//! mean frequency `(ω_cav + ω₀)/2`. The atom sits at `-δ/2`, the cavity at
//! `+δ/2`, and a complex frequency `ω - iΓ/2` describes an amplitude that
//! evolves as `exp(-iωt - Γt/2)`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frame convention string recorded in every machine-readable output.
pub const FRAME: &str = "omega_M";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` is not finite ({value})")]
    NotFinite { name: &'static str, value: f64 },
    #[error("negative rate: `{name}` = {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("no loss channel: gamma and kappa are both zero")]
    NoLossChannel,
}

/// Atomic decay rate `gamma`, cavity decay rate `kappa`, coupling `g` and
/// detuning `delta = ω_cav - ω₀`, all in one shared angular-frequency unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    gamma: f64,
    kappa: f64,
    g: f64,
    delta: f64,
}

impl SystemParams {
    pub fn new(gamma: f64, kappa: f64, g: f64, delta: f64) -> Result<Self, ParamError> {
        validate_params(gamma, kappa, g, delta)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Atom and cavity exchange parts: `gamma <-> kappa`, `delta -> -delta`.
    pub fn exchanged(&self) -> Self {
        Self {
            gamma: self.kappa,
            kappa: self.gamma,
            g: self.g,
            delta: norm_zero(-self.delta),
        }
    }

    /// Same rates with the detuning reversed.
    pub fn mirrored(&self) -> Self {
        Self {
            delta: norm_zero(-self.delta),
            ..*self
        }
    }

    /// Complex frequency of the bare atom, `-δ/2 - iγ/2`.
    pub fn atom_frequency(&self) -> Complex64 {
        Complex64::new(-0.5 * self.delta, -0.5 * self.gamma)
    }

    /// Complex frequency of the bare cavity, `δ/2 - iκ/2`.
    pub fn cavity_frequency(&self) -> Complex64 {
        Complex64::new(0.5 * self.delta, -0.5 * self.kappa)
    }

    /// Loss rate of the mode that holds the excitation at `t = 0`.
    pub(crate) fn excited_rate(&self, role: Role) -> f64 {
        match role {
            Role::AtomicType => self.gamma,
            Role::CavityType => self.kappa,
        }
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gamma={} kappa={} g={} delta={}",
            self.gamma, self.kappa, self.g, self.delta
        )
    }
}

fn norm_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Checks the four raw numbers and builds [`SystemParams`].
pub fn validate_params(
    gamma: f64,
    kappa: f64,
    g: f64,
    delta: f64,
) -> Result<SystemParams, ParamError> {
    for (name, value) in [
        ("gamma", gamma),
        ("kappa", kappa),
        ("g", g),
        ("delta", delta),
    ] {
        if !value.is_finite() {
            return Err(ParamError::NotFinite { name, value });
        }
    }
    for (name, value) in [("gamma", gamma), ("kappa", kappa), ("g", g)] {
        if value < 0.0 {
            return Err(ParamError::NegativeRate { name, value });
        }
    }
    if gamma == 0.0 && kappa == 0.0 {
        return Err(ParamError::NoLossChannel);
    }
    Ok(SystemParams {
        gamma: norm_zero(gamma),
        kappa: norm_zero(kappa),
        g: norm_zero(g),
        delta: norm_zero(delta),
    })
}

/// Which oscillator is initially excited (or driven).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The atom is excited or driven; the cavity is the second oscillator.
    AtomicType,
    /// The cavity is excited or driven; the atom is the second oscillator.
    CavityType,
}

impl Role {
    pub fn swapped(self) -> Self {
        match self {
            Role::AtomicType => Role::CavityType,
            Role::CavityType => Role::AtomicType,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    ByRealPartDescending,
    AtomCavityRole,
}

/// Two complex angular frequencies. With [`Labeling::AtomCavityRole`] the
/// first entry is the initially excited oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexFrequencyPair {
    pub first: Complex64,
    pub second: Complex64,
    pub labeling: Labeling,
}

pub fn complex_frequencies(p: &SystemParams, role: Role) -> ComplexFrequencyPair {
    let (first, second) = match role {
        Role::AtomicType => (p.atom_frequency(), p.cavity_frequency()),
        Role::CavityType => (p.cavity_frequency(), p.atom_frequency()),
    };
    ComplexFrequencyPair {
        first,
        second,
        labeling: Labeling::AtomCavityRole,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Oscillatory,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    GoodEmitter,
    GoodCavity,
    Balanced,
}

impl Quality {
    pub fn swapped(self) -> Self {
        match self {
            Quality::GoodEmitter => Quality::GoodCavity,
            Quality::GoodCavity => Quality::GoodEmitter,
            Quality::Balanced => Quality::Balanced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub coupling: Coupling,
    pub quality: Quality,
    pub detuned: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Resonant oscillation criterion `4g > |κ-γ|`, good-emitter/good-cavity
/// comparison and a reporting-only detuning flag `|δ| > max(γ, κ, g)`.
pub fn classify_regime(p: &SystemParams) -> RegimeReport {
    let four_g = 4.0 * p.g;
    let spread = (p.kappa - p.gamma).abs();
    let coupling = if four_g > spread {
        Coupling::Oscillatory
    } else {
        Coupling::Overdamped
    };
    let quality = if p.gamma < p.kappa {
        Quality::GoodEmitter
    } else if p.kappa < p.gamma {
        Quality::GoodCavity
    } else {
        Quality::Balanced
    };
    let detuned = p.delta.abs() > p.gamma.max(p.kappa).max(p.g);

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("four_g".to_string(), four_g);
    diagnostics.insert("abs_kappa_minus_gamma".to_string(), spread);
    diagnostics.insert("gamma_over_kappa".to_string(), p.gamma / p.kappa);

    RegimeReport {
        coupling,
        quality,
        detuned,
        diagnostics,
    }
}
