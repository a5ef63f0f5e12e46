//! Single-site junction coupled to a lossy cavity mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JunctionModel, NumericsSpec};
use crate::transport::{Solver, TransportResult};
use crate::spectral::{BathNormalization, Shape, SpectralDensitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityFrequency {
    Fixed(f64),
    /// ω_c tuned to the bare electronic level.
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub frequency: CavityFrequency,
    /// α = Ω_R/ω_c.
    pub rabi_ratio: f64,
    pub kappa: f64,
    pub far_field: SpectralDensitySpec,
    #[serde(default)]
    pub normalization: BathNormalization,
}

impl CavityConfig {
    /// Resonant cavity with a super-Ohmic far field of prefactor κ.
    pub fn resonant(rabi_ratio: f64, kappa: f64, cutoff: f64) -> Self {
        CavityConfig {
            frequency: CavityFrequency::Resonant,
            rabi_ratio,
            kappa,
            far_field: SpectralDensitySpec::super_ohmic(kappa, cutoff),
            normalization: BathNormalization::default(),
        }
    }

    pub fn with_rabi_ratio(mut self, rabi_ratio: f64) -> Self {
        self.rabi_ratio = rabi_ratio;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_ratio >= 0.0 && self.rabi_ratio < 1.0) {
            return Err(Error::invalid("cavity.rabi_ratio", "must satisfy 0 <= rabi_ratio < 1"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("cavity.kappa_ev", "must be positive"));
        }
        if let CavityFrequency::Fixed(w) = self.frequency {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid("cavity.omega_c_ev", "must be positive"));
            }
        }
        self.far_field.validate("cavity")?;
        if self.far_field.shape == Shape::Flat {
            return Err(Error::invalid("cavity.shape", "far field must be super_ohmic"));
        }
        Ok(())
    }
}

/// Bare level ω_{e,c} and cavity frequency implied by the stored renormalized level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityLevels {
    pub bare_level: f64,
    pub omega_c: f64,
}

impl CavityLevels {
    /// Bias at which the zero-photon polariton level enters the window.
    pub fn lower_threshold(&self, renormalized_level: f64) -> f64 {
        2.0 * renormalized_level
    }

    /// Bias at which the one-photon sideband enters the window.
    pub fn upper_threshold(&self, renormalized_level: f64) -> f64 {
        2.0 * (renormalized_level + self.omega_c)
    }
}

pub fn cavity_renormalization(model: &JunctionModel, cavity: &CavityConfig) -> Result<CavityLevels> {
    let alpha = cavity.rabi_ratio;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid("cavity.rabi_ratio", "must satisfy 0 <= rabi_ratio < 1"));
    }
    if model.n_sites() != 1 {
        return Err(Error::invalid("junction.n_sites", "cavity coupling needs a single site"));
    }
    let bare_level =
        (model.site_energies[0] + model.vibrations[0].polaron_shift()) / (1.0 - alpha * alpha);
    let omega_c = match cavity.frequency {
        CavityFrequency::Fixed(w) => w,
        CavityFrequency::Resonant => bare_level,
    };
    Ok(CavityLevels { bare_level, omega_c })
}

/// Single-site current with the site-1 transfers dressed by B(τ)·A(τ).
pub fn cavity_current(model: &JunctionModel, cavity: &CavityConfig, numerics: &NumericsSpec) -> Result<TransportResult> {
    Ok(Solver::uncached(*numerics).solve_with_cavity(model, Some(cavity))?.result)
}
