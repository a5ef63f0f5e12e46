//! Polaron and cavity-photon correlation functions on a uniform time grid.
//!
//! Both have the form exp[−φ(τ)] with
//! φ(τ) = ∫₀^{ω_max} dω w(ω) [c(ω)(1 − cos ωτ) + i sin ωτ],
//! where w is a Lorentzian-filtered spectral density and c(ω) is coth(ω/2T)
//! for a thermal bath or 1 for vacuum. The ω sum for every τ on the grid is a
//! single inverse FFT because ω_j τ_k = 2π jk / L.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cavity::CavityConfig;
use crate::error::{Error, Result};
use crate::model::{NumericsSpec, VibrationSpec};
use crate::spectral::SpectralDensitySpec;

const DEFAULT_FREQ_CUTOFF_FACTOR: f64 = 8.0;
const MAX_REFINEMENTS: usize = 4;

/// Sampled correlation function on τ_k = k·step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationFunction {
    pub step: f64,
    pub values: Vec<Complex64>,
    /// Asymptotic value; real.
    pub plateau: Complex64,
    /// Largest change of the exponent under halving the frequency spacing.
    pub exponent_error: f64,
}

impl CorrelationFunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.step * k as f64
    }

    pub fn is_unity(&self) -> bool {
        self.plateau == Complex64::new(1.0, 0.0) && self.values.iter().all(|v| *v == Complex64::new(1.0, 0.0))
    }

    pub fn unity(step: f64, len: usize) -> Self {
        CorrelationFunction {
            step,
            values: vec![Complex64::new(1.0, 0.0); len],
            plateau: Complex64::new(1.0, 0.0),
            exponent_error: 0.0,
        }
    }

    /// Pointwise product; the shorter table is extended by its plateau.
    pub fn product(&self, other: &CorrelationFunction) -> Result<CorrelationFunction> {
        if self.step != other.step {
            return Err(Error::Quadrature("correlation grids differ in step".into()));
        }
        let len = self.len().max(other.len());
        let at = |c: &CorrelationFunction, k: usize| c.values.get(k).copied().unwrap_or(c.plateau);
        Ok(CorrelationFunction {
            step: self.step,
            values: (0..len).map(|k| at(self, k) * at(other, k)).collect(),
            plateau: self.plateau * other.plateau,
            exponent_error: self.exponent_error + other.exponent_error,
        })
    }

    /// Writes `tau_inv_ev,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau_inv_ev,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{:e},{:e},{:e}", self.time(k), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Lorentzian-filtered bath entering a correlation exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathExponent {
    /// Coupling squared times the spectral-normalization factor.
    pub strength: f64,
    pub center: f64,
    pub width: f64,
    pub density: SpectralDensitySpec,
    /// `None` for a bath prepared in vacuum.
    pub temperature: Option<f64>,
    pub freq_max: f64,
}

impl BathExponent {
    pub fn for_vibration(vib: &VibrationSpec, temperature: f64, numerics: &NumericsSpec) -> Self {
        let scale = vib.normalization.scale(&vib.bath, vib.omega_b, vib.nu);
        BathExponent {
            strength: vib.lambda * vib.lambda * scale,
            center: vib.omega_b,
            width: vib.nu,
            density: vib.bath,
            temperature: Some(temperature),
            freq_max: numerics
                .freq_max
                .unwrap_or(DEFAULT_FREQ_CUTOFF_FACTOR * vib.bath.cutoff),
        }
    }

    pub fn for_cavity(cavity: &CavityConfig, omega_c: f64, numerics: &NumericsSpec) -> Self {
        let scale = cavity.normalization.scale(&cavity.far_field, omega_c, cavity.kappa);
        let a = cavity.rabi_ratio;
        BathExponent {
            strength: a * a * scale,
            center: omega_c,
            width: cavity.kappa,
            density: cavity.far_field,
            temperature: None,
            freq_max: numerics
                .freq_max
                .unwrap_or(DEFAULT_FREQ_CUTOFF_FACTOR * cavity.far_field.cutoff),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.strength == 0.0
    }

    fn weight(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        self.strength * self.density.eval(omega) / (PI * (self.width * self.width + d * d))
    }

    fn thermal(&self, omega: f64) -> f64 {
        match self.temperature {
            Some(t) => 1.0 / (0.5 * omega / t).tanh(),
            None => 1.0,
        }
    }

    /// Trapezoid nodes ω_j = j·h, j = 1..=n with the endpoint at half weight; the
    /// ω = 0 node vanishes and is skipped.
    fn nodes(&self, h: f64, n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        (1..=n).map(move |j| {
            let w = j as f64 * h;
            let q = if j == n { 0.5 * h } else { h };
            (w, q * self.weight(w))
        })
    }

    /// Real plateau exponent ∫ w c.
    pub fn plateau_exponent(&self, n_freq: usize) -> f64 {
        let h = self.freq_max / n_freq as f64;
        self.nodes(h, n_freq).map(|(w, q)| q * self.thermal(w)).sum()
    }

    /// φ(τ) by direct summation; valid for negative τ as well.
    pub fn exponent_at(&self, tau: f64, n_freq: usize) -> Complex64 {
        let h = self.freq_max / n_freq as f64;
        self.nodes(h, n_freq)
            .map(|(w, q)| {
                let (s, c) = (w * tau).sin_cos();
                Complex64::new(q * self.thermal(w) * (1.0 - c), q * s)
            })
            .sum()
    }

    /// Time after which the oscillating part of the exponent is below e^{−c_t}.
    pub fn memory_time(&self, horizon_factor: f64, n_freq: usize) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        let p = self.plateau_exponent(n_freq);
        (horizon_factor + (1.0 + p).ln()) / self.width
    }

    /// Exponent on τ_k = k·step, k < len, with frequency spacing 2π/(fft_len·step).
    /// Nodes on the FFT grid stop below ω_max; the remaining partial interval is
    /// closed with a trapezoid node at ω_max summed directly.
    fn exponent_table(&self, step: f64, len: usize, fft_len: usize) -> (Vec<Complex64>, f64) {
        let h = 2.0 * PI / (fft_len as f64 * step);
        let n = ((self.freq_max / h).floor() as usize).clamp(1, fft_len - 1);
        let rest = self.freq_max - n as f64 * h;
        let mut cos_part = vec![Complex64::new(0.0, 0.0); fft_len];
        let mut sin_part = vec![Complex64::new(0.0, 0.0); fft_len];
        let mut plateau = 0.0;
        for j in 1..=n {
            let w = j as f64 * h;
            let q = if j == n { 0.5 * (h + rest) } else { h } * self.weight(w);
            let qc = q * self.thermal(w);
            cos_part[j] = Complex64::new(qc, 0.0);
            sin_part[j] = Complex64::new(q, 0.0);
            plateau += qc;
        }
        let q_end = 0.5 * rest * self.weight(self.freq_max);
        let qc_end = q_end * self.thermal(self.freq_max);
        plateau += qc_end;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(fft_len);
        fft.process(&mut cos_part);
        fft.process(&mut sin_part);
        let table = (0..len)
            .map(|k| {
                let (s, c) = (self.freq_max * step * k as f64).sin_cos();
                let re = plateau - cos_part[k].re - qc_end * c;
                Complex64::new(re.max(0.0), sin_part[k].im + q_end * s)
            })
            .collect();
        (table, plateau)
    }

    /// Samples exp[−φ] on τ_k = k·step, refining the frequency grid until the
    /// exponent is stable to `tolerance`.
    pub fn tabulate(&self, step: f64, len: usize, n_freq: usize, tolerance: f64) -> Result<CorrelationFunction> {
        if self.is_trivial() {
            return Ok(CorrelationFunction::unity(step, len));
        }
        let horizon = step * (len.max(1) - 1) as f64;
        // Alias copies of the exponent sit at multiples of 2π/h; keep them far
        // enough past the horizon to have decayed.
        let alias_gap = horizon + (tolerance.recip().ln() + 5.0) / self.width;
        let h = (self.freq_max / n_freq as f64)
            .min(0.25 * self.width)
            .min(2.0 * PI / alias_gap);
        let mut fft_len = ((2.0 * PI / (h * step)).ceil() as usize).max(len + 1);
        let (mut table, mut plateau) = self.exponent_table(step, len, fft_len);
        let mut change = f64::INFINITY;
        for _ in 0..MAX_REFINEMENTS {
            fft_len *= 2;
            let (fine, fine_plateau) = self.exponent_table(step, len, fft_len);
            change = table
                .iter()
                .zip(&fine)
                .map(|(a, b)| (a - b).norm())
                .fold((plateau - fine_plateau).abs(), f64::max);
            table = fine;
            plateau = fine_plateau;
            if change <= tolerance {
                break;
            }
        }
        if change > tolerance {
            return Err(Error::Quadrature(format!(
                "bath exponent changes by {change:e} under frequency refinement"
            )));
        }
        let mut values: Vec<Complex64> = table.iter().map(|p| (-p).exp()).collect();
        values[0] = Complex64::new(1.0, 0.0);
        Ok(CorrelationFunction {
            step,
            values,
            plateau: Complex64::new((-plateau).exp(), 0.0),
            exponent_error: change,
        })
    }
}

/// Polaron correlation ⟨D†(τ)D(0)⟩ of one site on τ_k = k·step.
pub fn vib_correlation(
    vib: &VibrationSpec,
    temperature: f64,
    step: f64,
    len: usize,
    numerics: &NumericsSpec,
) -> Result<CorrelationFunction> {
    BathExponent::for_vibration(vib, temperature, numerics).tabulate(step, len, numerics.n_freq, numerics.tolerance)
}

/// Cavity photon correlation in vacuum on τ_k = k·step.
pub fn cavity_correlation(
    cavity: &CavityConfig,
    omega_c: f64,
    step: f64,
    len: usize,
    numerics: &NumericsSpec,
) -> Result<CorrelationFunction> {
    BathExponent::for_cavity(cavity, omega_c, numerics).tabulate(step, len, numerics.n_freq, numerics.tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BathNormalization;
    use proptest::prelude::*;

    const KT: f64 = 0.0258520;

    fn fig2_vib(lambda: f64) -> VibrationSpec {
        VibrationSpec::super_ohmic(0.2, lambda, 0.005, 0.5)
    }

    fn table(lambda: f64, len: usize) -> CorrelationFunction {
        let n = NumericsSpec::default();
        vib_correlation(&fig2_vib(lambda), KT, n.base_time_step(), len, &n).unwrap()
    }

    #[test]
    fn zero_coupling_is_unity() {
        let c = table(0.0, 100);
        assert!(c.is_unity());
        let n = NumericsSpec::default();
        let cav = CavityConfig::resonant(0.0, 0.05, 1.0);
        let a = cavity_correlation(&cav, 0.8, 0.1, 50, &n).unwrap();
        assert!(a.is_unity());
    }

    #[test]
    fn starts_at_one() {
        let c = table(1.3, 2000);
        assert_eq!(c.values[0], Complex64::new(1.0, 0.0));
    }

    // Reference constants from an independent 30-digit adaptive quadrature of the
    // exponent integral over [0, 4] eV.
    #[test]
    fn plateau_matches_reference() {
        let n = NumericsSpec::default();
        let vib = fig2_vib(0.6);
        let bath = BathExponent::for_vibration(&vib, KT, &n);
        let len = (bath.memory_time(n.horizon_factor(), n.n_freq) / n.base_time_step()) as usize + 1;
        let c = vib_correlation(&vib, KT, n.base_time_step(), len, &n).unwrap();
        assert!((c.plateau.re - 0.668400638480744).abs() < 2e-6, "{}", c.plateau);
        assert_eq!(c.plateau.im, 0.0);
        assert!((c.values[len - 1] - c.plateau).norm() < 1e-5);

        let literal = vib.with_normalization(BathNormalization::Prefactor);
        let c = vib_correlation(&literal, KT, n.base_time_step(), len, &n).unwrap();
        assert!((c.plateau.re - 0.954105869203024).abs() < 2e-6, "{}", c.plateau);
    }

    #[test]
    fn samples_match_reference() {
        let n = NumericsSpec::default();
        let h = 0.05;
        let c = vib_correlation(&fig2_vib(0.6), KT, h, 2001, &n).unwrap();
        let expect = [
            (20, Complex64::new(0.968007910156688, -0.0988089536844356)),
            (200, Complex64::new(0.542409095051267, -0.169077091326366)),
            (2000, Complex64::new(0.706193006173325, -0.146759290807907)),
        ];
        for (k, v) in expect {
            assert!((c.values[k] - v).norm() < 2e-6, "tau={} got {}", c.time(k), c.values[k]);
        }
    }

    #[test]
    fn cavity_samples_match_reference() {
        let n = NumericsSpec::default();
        let cav = CavityConfig::resonant(0.8, 0.05, 1.0);
        let omega_c = 0.3 / 0.36;
        let a = cavity_correlation(&cav, omega_c, 0.05, 1001, &n).unwrap();
        let expect = [
            (20, Complex64::new(0.641483701747800, -0.355148889271450)),
            (200, Complex64::new(0.384768437368653, -0.127549898925576)),
            (1000, Complex64::new(0.491102248288537, 0.0211981392021557)),
        ];
        for (k, v) in expect {
            assert!((a.values[k] - v).norm() < 2e-6, "tau={} got {}", a.time(k), a.values[k]);
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let n = NumericsSpec::default();
        let bath = BathExponent::for_vibration(&fig2_vib(1.0), KT, &n);
        let c = bath.tabulate(0.1, 3001, n.n_freq, 1e-9).unwrap();
        for k in [1, 17, 333, 1000, 3000] {
            let direct = (-bath.exponent_at(c.time(k), 400_000)).exp();
            assert!((c.values[k] - direct).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn hermitian_exponent() {
        let n = NumericsSpec::default();
        let bath = BathExponent::for_vibration(&fig2_vib(0.8), KT, &n);
        assert_eq!(bath.exponent_at(0.0, 5000).im, 0.0);
        for tau in [0.3, 2.0, 17.0, 150.0] {
            let p = bath.exponent_at(tau, 5000);
            let m = bath.exponent_at(-tau, 5000);
            assert!((p.im + m.im).abs() < 1e-14);
            assert!((p.re - m.re).abs() < 1e-14);
        }
    }

    #[test]
    fn product_extends_with_plateau() {
        let n = NumericsSpec::default();
        let b = vib_correlation(&fig2_vib(0.6), KT, 0.1, 100, &n).unwrap();
        let u = CorrelationFunction::unity(0.1, 300);
        let p = b.product(&u).unwrap();
        assert_eq!(p.len(), 300);
        assert_eq!(p.values[50], b.values[50]);
        assert_eq!(p.values[250], b.plateau);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn bounded_by_one(lambda in 0.0f64..3.0, nu in 0.003f64..0.05, t in 0.005f64..0.1) {
            let n = NumericsSpec::default();
            let vib = VibrationSpec::super_ohmic(0.2, lambda, nu, 0.5);
            let c = vib_correlation(&vib, t, 0.1, 4000, &n).unwrap();
            prop_assert!(c.values.iter().all(|v| v.norm() <= 1.0));
        }

        #[test]
        fn monotone_in_coupling(l1 in 0.0f64..2.0, dl in 0.01f64..1.0) {
            let n = NumericsSpec::default();
            let a = vib_correlation(&fig2_vib(l1), KT, 0.1, 3000, &n).unwrap();
            let b = vib_correlation(&fig2_vib(l1 + dl), KT, 0.1, 3000, &n).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(x.norm() >= y.norm() - 1e-15);
            }
        }
    }
}
