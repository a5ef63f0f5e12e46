//! Distribution functions and bath spectral densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fermi-Dirac occupation. Stable for arbitrarily large |ε−μ|/T.
pub fn fermi(epsilon: f64, mu: f64, temperature: f64) -> f64 {
    let x = (epsilon - mu) / temperature;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Bose-Einstein occupation, defined for ω > 0 only.
pub fn bose(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "bose(omega = {omega}, T = {temperature})"
        )));
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    SuperOhmic,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensitySpec {
    pub shape: Shape,
    pub prefactor: f64,
    /// Required for `SuperOhmic`; ignored for `Flat`.
    pub cutoff: f64,
}

impl SpectralDensitySpec {
    pub fn super_ohmic(prefactor: f64, cutoff: f64) -> Self {
        SpectralDensitySpec {
            shape: Shape::SuperOhmic,
            prefactor,
            cutoff,
        }
    }

    pub fn flat(prefactor: f64) -> Self {
        SpectralDensitySpec {
            shape: Shape::Flat,
            prefactor,
            cutoff: 0.0,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.prefactor > 0.0) || !self.prefactor.is_finite() {
            return Err(Error::invalid(key, "prefactor must be positive"));
        }
        if self.shape == Shape::SuperOhmic && !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::invalid(key, "super-Ohmic cutoff must be positive"));
        }
        Ok(())
    }

    pub fn eval(&self, omega: f64) -> f64 {
        spectral_density(self, omega)
    }
}

/// I(ω) for ω ≥ 0.
pub fn spectral_density(spec: &SpectralDensitySpec, omega: f64) -> f64 {
    match spec.shape {
        Shape::Flat => spec.prefactor,
        Shape::SuperOhmic => {
            let x = omega / spec.cutoff;
            spec.prefactor * x * x * x * (1.0 - x).exp()
        }
    }
}

/// How a bath spectral density relates to the width of the mode it damps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathNormalization {
    /// Rescale the density so that it equals the mode width at the mode frequency.
    #[default]
    Peak,
    /// Use the density with its prefactor as given.
    Prefactor,
}

impl BathNormalization {
    /// Multiplier applied to `spec` so the bath damping a mode at `omega_mode` with
    /// width `width` follows this convention.
    pub fn scale(self, spec: &SpectralDensitySpec, omega_mode: f64, width: f64) -> f64 {
        match self {
            BathNormalization::Prefactor => 1.0,
            BathNormalization::Peak => width / spectral_density(spec, omega_mode),
        }
    }
}
