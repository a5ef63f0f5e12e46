//! Junction description and numerical controls. Energies in eV, ħ = e = k_B = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{BathNormalization, Shape, SpectralDensitySpec};

/// CODATA Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617333262e-5;

/// Current in amperes carried by one eV of current in natural units (e²/ħ × 1 V).
pub const AMPERES_PER_EV: f64 = 2.434_134_8e-4;

pub fn kelvin_to_ev(kelvin: f64) -> f64 {
    kelvin * BOLTZMANN_EV_PER_K
}

/// Primary vibrational mode on one site together with its damping bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibrationSpec {
    pub omega_b: f64,
    pub lambda: f64,
    pub nu: f64,
    pub bath: SpectralDensitySpec,
    #[serde(default)]
    pub normalization: BathNormalization,
}

impl VibrationSpec {
    /// Super-Ohmic bath with prefactor ν, the configuration used throughout the figures.
    pub fn super_ohmic(omega_b: f64, lambda: f64, nu: f64, cutoff: f64) -> Self {
        VibrationSpec {
            omega_b,
            lambda,
            nu,
            bath: SpectralDensitySpec::super_ohmic(nu, cutoff),
            normalization: BathNormalization::default(),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_normalization(mut self, normalization: BathNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    /// λ²ω_b, the polaron shift between bare and renormalized level.
    pub fn polaron_shift(&self) -> f64 {
        self.lambda * self.lambda * self.omega_b
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.omega_b > 0.0 && self.omega_b.is_finite()) {
            return Err(Error::invalid(format!("{key}.omega_b_ev"), "must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("{key}.lambda"), "must be non-negative"));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid(format!("{key}.nu_ev"), "must be positive"));
        }
        self.bath.validate(key)?;
        if self.bath.shape == Shape::Flat {
            return Err(Error::invalid(
                format!("{key}.shape"),
                "a flat bath makes the Franck-Condon exponent diverge; use super_ohmic",
            ));
        }
        Ok(())
    }
}

/// N-site tight-binding junction between two wide-band leads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionModel {
    /// Renormalized on-site energies.
    pub site_energies: Vec<f64>,
    pub hoppings: Vec<f64>,
    pub gamma_left: f64,
    pub gamma_right: f64,
    pub vibrations: Vec<VibrationSpec>,
    pub temperature: f64,
    pub bias: f64,
}

impl JunctionModel {
    /// Chain of identical sites.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform_chain(
        n: usize,
        site_energy: f64,
        hopping: f64,
        gammas: (f64, f64),
        vibration: VibrationSpec,
        temperature: f64,
        bias: f64,
    ) -> Self {
        JunctionModel {
            site_energies: vec![site_energy; n],
            hoppings: vec![hopping; n.saturating_sub(1)],
            gamma_left: gammas.0,
            gamma_right: gammas.1,
            vibrations: vec![vibration; n],
            temperature,
            bias,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn mu_left(&self) -> f64 {
        0.5 * self.bias
    }

    pub fn mu_right(&self) -> f64 {
        -0.5 * self.bias
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_left + self.gamma_right
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        for v in &mut self.vibrations {
            v.lambda = lambda;
        }
        self
    }

    /// Sets Γ_L + Γ_R to `total`, keeping the left/right ratio.
    pub fn with_gamma_total(mut self, total: f64) -> Self {
        let left_share = self.gamma_left / self.gamma_total();
        self.gamma_left = total * left_share;
        self.gamma_right = total - self.gamma_left;
        self
    }

    /// Extends or truncates the chain by repeating the first site; new bonds get `hopping`.
    pub fn with_n_sites(mut self, n: usize, hopping: f64) -> Self {
        let energy = self.site_energies[0];
        let vib = self.vibrations[0];
        self.site_energies.resize(n, energy);
        self.vibrations.resize(n, vib);
        self.hoppings.resize(n.saturating_sub(1), hopping);
        self
    }

    /// True when no site carries electron-vibration coupling.
    pub fn is_coherent(&self) -> bool {
        self.vibrations.iter().all(|v| v.lambda == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 {
            return Err(Error::invalid("junction.n_sites", "must be at least 1"));
        }
        if self.vibrations.len() != n {
            return Err(Error::invalid(
                "vibration",
                format!("expected {n} entries, found {}", self.vibrations.len()),
            ));
        }
        if self.hoppings.len() != n - 1 {
            return Err(Error::invalid(
                "junction.hoppings_ev",
                format!("expected {} entries, found {}", n - 1, self.hoppings.len()),
            ));
        }
        if self.site_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("junction.site_energies_ev", "must be finite"));
        }
        if self.hoppings.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("junction.hoppings_ev", "must be finite"));
        }
        if !(self.gamma_left > 0.0 && self.gamma_left.is_finite()) {
            return Err(Error::invalid("junction.gamma_left_ev", "must be positive"));
        }
        if !(self.gamma_right > 0.0 && self.gamma_right.is_finite()) {
            return Err(Error::invalid("junction.gamma_right_ev", "must be positive"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("junction.temperature", "must be positive"));
        }
        if !self.bias.is_finite() {
            return Err(Error::invalid("junction.bias_ev", "must be finite"));
        }
        for (i, v) in self.vibrations.iter().enumerate() {
            v.validate(&format!("vibration[{i}]"))?;
        }
        Ok(())
    }
}

/// Kernel used for the second-order rates between distinct resonances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaKernel {
    /// Product of the two one-sided transforms, F_n* F_m; diagonal from the
    /// time-local identity.
    #[default]
    Factorized,
    /// Same-site two-time kernel (F_n* + F_m)/(Λ_n* + Λ_m). Conserves charge
    /// identically for any chain.
    SameSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsSpec {
    /// Δτ; derived from the base energy window when absent.
    pub time_step: Option<f64>,
    /// C_t; ln(1/tolerance) when absent.
    pub time_horizon_factor: Option<f64>,
    /// Base energy window, expanded automatically to cover resonances and Fermi edges.
    pub energy_window: [f64; 2],
    pub n_energy: usize,
    /// Upper end of the bath-frequency integrals; 8 × bath cutoff when absent.
    pub freq_max: Option<f64>,
    pub n_freq: usize,
    pub tolerance: f64,
    pub eta_kernel: EtaKernel,
    /// Add the analytic plateau tail beyond the time horizon.
    pub plateau_tail: bool,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        NumericsSpec {
            time_step: None,
            time_horizon_factor: None,
            energy_window: [-2.0, 2.0],
            n_energy: 4001,
            freq_max: None,
            n_freq: 2000,
            tolerance: 1e-6,
            eta_kernel: EtaKernel::default(),
            plateau_tail: true,
        }
    }
}

impl NumericsSpec {
    pub fn horizon_factor(&self) -> f64 {
        self.time_horizon_factor
            .unwrap_or_else(|| (1.0 / self.tolerance).ln())
    }

    /// Δτ resolving the base window with 20 points per fastest period.
    pub fn base_time_step(&self) -> f64 {
        self.time_step.unwrap_or_else(|| {
            let width = self.energy_window[1] - self.energy_window[0];
            2.0 * std::f64::consts::PI / width / 20.0
        })
    }

    /// Same scheme at half the time step and twice the energy points.
    pub fn refined(&self) -> Self {
        NumericsSpec {
            time_step: Some(0.5 * self.base_time_step()),
            n_energy: 2 * self.n_energy - 1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.time_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("numerics.time_step", "must be positive"));
            }
        }
        if let Some(c) = self.time_horizon_factor {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid("numerics.time_horizon_factor", "must be positive"));
            }
        }
        let [lo, hi] = self.energy_window;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("numerics.energy_window_ev", "must be a nonempty interval"));
        }
        if self.n_energy < 2 {
            return Err(Error::invalid("numerics.n_energy", "must be at least 2"));
        }
        if self.n_freq < 2 {
            return Err(Error::invalid("numerics.n_freq", "must be at least 2"));
        }
        if let Some(w) = self.freq_max {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid("numerics.freq_max_ev", "must be positive"));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::invalid("numerics.tolerance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}
