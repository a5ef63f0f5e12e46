//! TOML configuration document.
//!
//! ```toml
//! [junction]
//! n_sites = 2
//! site_energies_ev = 0.3        # scalar applies to every site
//! hoppings_ev = 0.1
//! gamma_left_ev = 0.005
//! gamma_right_ev = 0.005
//! temperature_kelvin = 300
//! bias_ev = 1.0
//!
//! [vibration]                   # or [[vibration]] once per site
//! omega_b_ev = 0.2
//! lambda = 0.6
//! nu_ev = 0.005
//! cutoff_ev = 0.5
//! ```

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, CavityFrequency};
use crate::error::{Error, Result};
use crate::model::{kelvin_to_ev, EtaKernel, JunctionModel, NumericsSpec, VibrationSpec};
use crate::spectral::{BathNormalization, Shape, SpectralDensitySpec};

/// Everything a config document describes.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub model: JunctionModel,
    pub numerics: NumericsSpec,
    pub cavity: Option<CavityConfig>,
    pub sweep: Option<SweepSection>,
    /// Hopping used when a sweep grows the chain.
    pub chain_hopping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Axis descriptors, `NAME:START:STOP:COUNT[:log]`.
    #[serde(default)]
    pub axes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<T>> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::invalid(
                key,
                format!("expected {n} entries, found {}", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    junction: JunctionSection,
    vibration: OneOrMany<VibrationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    numerics: Option<NumericsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cavity: Option<CavitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JunctionSection {
    n_sites: usize,
    site_energies_ev: OneOrMany<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hoppings_ev: Option<OneOrMany<f64>>,
    gamma_left_ev: f64,
    gamma_right_ev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature_kelvin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature_ev: Option<f64>,
    bias_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VibrationSection {
    omega_b_ev: f64,
    lambda: f64,
    nu_ev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<Shape>,
    /// Spectral prefactor; ν when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prefactor_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bath_normalization: Option<BathNormalization>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_horizon_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_window_ev: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_energy: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    freq_max_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_freq: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_kernel: Option<EtaKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plateau_tail: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavitySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_c_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resonant: Option<bool>,
    rabi_ratio: f64,
    kappa_ev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prefactor_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff_ev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    far_field_normalization: Option<BathNormalization>,
}

const DEFAULT_CAVITY_CUTOFF: f64 = 1.0;

fn bath_spec(shape: Option<Shape>, prefactor: f64, cutoff: Option<f64>, key: &str) -> Result<SpectralDensitySpec> {
    match shape.unwrap_or(Shape::SuperOhmic) {
        Shape::SuperOhmic => {
            let cutoff = cutoff
                .ok_or_else(|| Error::invalid(format!("{key}.cutoff_ev"), "required for super_ohmic"))?;
            Ok(SpectralDensitySpec::super_ohmic(prefactor, cutoff))
        }
        Shape::Flat => Ok(SpectralDensitySpec::flat(prefactor)),
    }
}

impl VibrationSection {
    fn to_spec(&self, key: &str) -> Result<VibrationSpec> {
        let bath = bath_spec(
            self.shape,
            self.prefactor_ev.unwrap_or(self.nu_ev),
            self.cutoff_ev,
            key,
        )?;
        Ok(VibrationSpec {
            omega_b: self.omega_b_ev,
            lambda: self.lambda,
            nu: self.nu_ev,
            bath,
            normalization: self.bath_normalization.unwrap_or_default(),
        })
    }

    fn from_spec(v: &VibrationSpec) -> Self {
        VibrationSection {
            omega_b_ev: v.omega_b,
            lambda: v.lambda,
            nu_ev: v.nu,
            shape: Some(v.bath.shape),
            prefactor_ev: Some(v.bath.prefactor),
            cutoff_ev: (v.bath.shape == Shape::SuperOhmic).then_some(v.bath.cutoff),
            bath_normalization: Some(v.normalization),
        }
    }
}

impl NumericsSection {
    fn to_spec(&self, d: &NumericsSpec) -> NumericsSpec {
        NumericsSpec {
            time_step: self.time_step,
            time_horizon_factor: self.time_horizon_factor,
            energy_window: self.energy_window_ev.unwrap_or(d.energy_window),
            n_energy: self.n_energy.unwrap_or(d.n_energy),
            freq_max: self.freq_max_ev,
            n_freq: self.n_freq.unwrap_or(d.n_freq),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            eta_kernel: self.eta_kernel.unwrap_or(d.eta_kernel),
            plateau_tail: self.plateau_tail.unwrap_or(d.plateau_tail),
        }
    }

    fn from_spec(n: &NumericsSpec) -> Self {
        NumericsSection {
            time_step: n.time_step,
            time_horizon_factor: n.time_horizon_factor,
            energy_window_ev: Some(n.energy_window),
            n_energy: Some(n.n_energy),
            freq_max_ev: n.freq_max,
            n_freq: Some(n.n_freq),
            tolerance: Some(n.tolerance),
            eta_kernel: Some(n.eta_kernel),
            plateau_tail: Some(n.plateau_tail),
        }
    }
}

impl CavitySection {
    fn to_config(&self) -> Result<CavityConfig> {
        let frequency = match (self.omega_c_ev, self.resonant) {
            (Some(_), Some(true)) => {
                return Err(Error::invalid(
                    "cavity.omega_c_ev",
                    "give either omega_c_ev or resonant = true, not both",
                ))
            }
            (Some(w), _) => CavityFrequency::Fixed(w),
            (None, Some(true)) => CavityFrequency::Resonant,
            (None, _) => {
                return Err(Error::invalid(
                    "cavity.omega_c_ev",
                    "missing; set omega_c_ev or resonant = true",
                ))
            }
        };
        let cutoff = self.cutoff_ev.unwrap_or(DEFAULT_CAVITY_CUTOFF);
        Ok(CavityConfig {
            frequency,
            rabi_ratio: self.rabi_ratio,
            kappa: self.kappa_ev,
            far_field: SpectralDensitySpec::super_ohmic(self.prefactor_ev.unwrap_or(self.kappa_ev), cutoff),
            normalization: self.far_field_normalization.unwrap_or_default(),
        })
    }

    fn from_config(c: &CavityConfig) -> Self {
        let (omega_c_ev, resonant) = match c.frequency {
            CavityFrequency::Fixed(w) => (Some(w), None),
            CavityFrequency::Resonant => (None, Some(true)),
        };
        CavitySection {
            omega_c_ev,
            resonant,
            rabi_ratio: c.rabi_ratio,
            kappa_ev: c.kappa,
            prefactor_ev: Some(c.far_field.prefactor),
            cutoff_ev: Some(c.far_field.cutoff),
            far_field_normalization: Some(c.normalization),
        }
    }
}

/// Parses and validates a config document.
pub fn load_config(text: &str) -> Result<Config> {
    load_config_with_defaults(text, &NumericsSpec::default())
}

/// As [`load_config`], with `defaults` filling numerics keys the document omits.
pub fn load_config_with_defaults(text: &str, defaults: &NumericsSpec) -> Result<Config> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let j = &doc.junction;
    let n = j.n_sites;
    if n == 0 {
        return Err(Error::invalid("junction.n_sites", "must be at least 1"));
    }
    let site_energies = j.site_energies_ev.expand(n, "junction.site_energies_ev")?;
    let (hoppings, chain_hopping) = match &j.hoppings_ev {
        None if n == 1 => (Vec::new(), None),
        None => return Err(Error::invalid("junction.hoppings_ev", "required when n_sites > 1")),
        Some(OneOrMany::One(g)) => (vec![*g; n - 1], Some(*g)),
        Some(many) => {
            let h = many.expand(n - 1, "junction.hoppings_ev")?;
            let first = h.first().copied();
            (h, first)
        }
    };
    let temperature = match (j.temperature_kelvin, j.temperature_ev) {
        (Some(k), None) => kelvin_to_ev(k),
        (None, Some(t)) => t,
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "junction.temperature_kelvin",
                "give either temperature_kelvin or temperature_ev",
            ))
        }
        (None, None) => return Err(Error::invalid("junction.temperature_kelvin", "missing")),
    };
    let vibrations = match &doc.vibration {
        OneOrMany::One(v) => vec![v.to_spec("vibration")?; n],
        OneOrMany::Many(vs) => {
            if vs.len() != n {
                return Err(Error::invalid(
                    "vibration",
                    format!("expected {n} entries, found {}", vs.len()),
                ));
            }
            vs.iter()
                .enumerate()
                .map(|(i, v)| v.to_spec(&format!("vibration[{i}]")))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let model = JunctionModel {
        site_energies,
        hoppings,
        gamma_left: j.gamma_left_ev,
        gamma_right: j.gamma_right_ev,
        vibrations,
        temperature,
        bias: j.bias_ev,
    };
    model.validate()?;
    let numerics = doc.numerics.unwrap_or_default().to_spec(defaults);
    numerics.validate()?;
    let cavity = doc.cavity.as_ref().map(CavitySection::to_config).transpose()?;
    if let Some(c) = &cavity {
        c.validate()?;
        if n != 1 {
            return Err(Error::invalid("cavity", "cavity coupling needs n_sites = 1"));
        }
    }
    Ok(Config {
        model,
        numerics,
        cavity,
        sweep: doc.sweep,
        chain_hopping,
    })
}

/// Serializes a config so that [`load_config`] reproduces it exactly.
pub fn to_toml(config: &Config) -> Result<String> {
    let m = &config.model;
    let n = m.n_sites();
    let hoppings_ev = match (n, config.chain_hopping) {
        (1, Some(g)) => Some(OneOrMany::One(g)),
        (1, None) => None,
        _ => Some(OneOrMany::Many(m.hoppings.clone())),
    };
    let vibration = if m.vibrations.iter().all(|v| *v == m.vibrations[0]) {
        OneOrMany::One(VibrationSection::from_spec(&m.vibrations[0]))
    } else {
        OneOrMany::Many(m.vibrations.iter().map(VibrationSection::from_spec).collect())
    };
    let doc = Document {
        junction: JunctionSection {
            n_sites: n,
            site_energies_ev: OneOrMany::Many(m.site_energies.clone()),
            hoppings_ev,
            gamma_left_ev: m.gamma_left,
            gamma_right_ev: m.gamma_right,
            temperature_kelvin: None,
            temperature_ev: Some(m.temperature),
            bias_ev: m.bias,
        },
        vibration,
        numerics: Some(NumericsSection::from_spec(&config.numerics)),
        cavity: config.cavity.as_ref().map(CavitySection::from_config),
        sweep: config.sweep.clone(),
    };
    toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))
}
