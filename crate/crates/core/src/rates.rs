//! One-sided Fourier transforms of resonance-damped correlation functions and
//! the first- and second-order transfer rates built from them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::correlations::CorrelationFunction;
use crate::error::{Error, Result};
use crate::model::{EtaKernel, JunctionModel};
use crate::quadrature::pairwise_sum;
use crate::spectral::fermi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lead {
    Left,
    Right,
}

impl Lead {
    pub fn gamma(self, model: &JunctionModel) -> f64 {
        match self {
            Lead::Left => model.gamma_left,
            Lead::Right => model.gamma_right,
        }
    }

    pub fn mu(self, model: &JunctionModel) -> f64 {
        match self {
            Lead::Left => model.mu_left(),
            Lead::Right => model.mu_right(),
        }
    }

    /// Site whose displacement dresses electrons exchanged with this lead.
    pub fn boundary_site(self, model: &JunctionModel) -> usize {
        match self {
            Lead::Left => 0,
            Lead::Right => model.n_sites() - 1,
        }
    }
}

/// Uniform energy grid ε_j = start + j·step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    /// FFT length L with step·Δτ·L = 2π, when the grid is tied to a time grid.
    pub fft_len: Option<usize>,
}

/// Smallest 2^a·3^b·5^c not below `n`.
fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl EnergyGrid {
    /// Plain grid covering `[lo, hi]` with spacing at most `max_step`.
    pub fn covering(lo: f64, hi: f64, max_step: f64) -> Self {
        let intervals = ((hi - lo) / max_step).ceil().max(1.0) as usize;
        EnergyGrid {
            start: lo,
            step: (hi - lo) / intervals as f64,
            len: intervals + 1,
            fft_len: None,
        }
    }

    /// Grid covering `[lo, hi]` whose spacing is 2π/(L·time_step) for an FFT length
    /// L ≥ `min_fft_len`.
    pub fn for_time_grid(lo: f64, hi: f64, max_step: f64, time_step: f64, min_fft_len: usize) -> Self {
        let mut fft_len = next_fast_len(((2.0 * PI / (time_step * max_step)).ceil() as usize).max(min_fft_len));
        loop {
            let step = 2.0 * PI / (fft_len as f64 * time_step);
            let len = ((hi - lo) / step).ceil() as usize + 1;
            if len <= fft_len {
                return EnergyGrid {
                    start: lo,
                    step,
                    len,
                    fft_len: Some(fft_len),
                };
            }
            fft_len = next_fast_len(2 * fft_len);
        }
    }

    pub fn energy(&self, j: usize) -> f64 {
        self.start + self.step * j as f64
    }

    pub fn end(&self) -> f64 {
        self.energy(self.len - 1)
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.step; self.len];
        w[0] *= 0.5;
        w[self.len - 1] *= 0.5;
        w
    }
}

/// F_n(ε_j) = ∫₀^∞ e^{iε_jτ} e^{−Λ_nτ} B(τ) dτ for every resonance n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfFourierTable {
    pub grid: EnergyGrid,
    pub values: Vec<Vec<Complex64>>,
}

/// Filon weights for a linear segment: P(z) = (e^z − 1 − z)/z², Q(z) = (1 + (z − 1)e^z)/z².
fn filon_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.5 {
        // P = Σ z^k/(k+2)!, Q = Σ (k+1) z^k/(k+2)!
        let mut p = Complex64::new(0.0, 0.0);
        let mut q = Complex64::new(0.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        for k in 0..16 {
            p += zk / fact;
            q += zk * ((k + 1) as f64 / fact);
            zk *= z;
            fact *= (k + 3) as f64;
        }
        (p, q)
    } else {
        let e = z.exp();
        let z2 = z * z;
        ((e - 1.0 - z) / z2, (1.0 + (z - 1.0) * e) / z2)
    }
}

/// Options for the numeric half-Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfFourierOptions {
    /// Number of correlation samples used (τ_M = (samples − 1)·Δτ).
    pub samples: usize,
    pub plateau_tail: bool,
    pub tolerance: f64,
}

/// Half-Fourier table. A unit correlation function uses the exact 1/(Λ − iε).
pub fn half_fourier(
    eigenvalues: &[Complex64],
    corr: &CorrelationFunction,
    grid: &EnergyGrid,
    options: HalfFourierOptions,
) -> Result<HalfFourierTable> {
    if corr.is_unity() {
        let values = eigenvalues
            .iter()
            .map(|&l| {
                (0..grid.len)
                    .map(|j| 1.0 / (l - Complex64::new(0.0, grid.energy(j))))
                    .collect()
            })
            .collect();
        return Ok(HalfFourierTable { grid: *grid, values });
    }
    half_fourier_filon(eigenvalues, corr, grid, options)
}

/// Piecewise-linear (Filon) evaluation of the transform for all grid energies at
/// once: the correlation function is interpolated linearly between samples and
/// the exponential is integrated exactly, so the rule is exact for B ≡ 1.
pub fn half_fourier_filon(
    eigenvalues: &[Complex64],
    corr: &CorrelationFunction,
    grid: &EnergyGrid,
    options: HalfFourierOptions,
) -> Result<HalfFourierTable> {
    let fft_len = grid
        .fft_len
        .ok_or_else(|| Error::Quadrature("energy grid is not tied to the time grid".into()))?;
    let h = corr.step;
    if ((grid.step * h * fft_len as f64) / (2.0 * PI) - 1.0).abs() > 1e-12 {
        return Err(Error::Quadrature("energy grid spacing does not match the time step".into()));
    }
    let samples = options.samples.min(corr.len());
    if samples < 2 || samples > fft_len {
        return Err(Error::Quadrature("time grid too short for the energy grid".into()));
    }
    let last = samples - 1;
    let tau_m = h * last as f64;
    let min_width = eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    if !options.plateau_tail && (-min_width * tau_m).exp() > options.tolerance {
        return Err(Error::Quadrature(format!(
            "time horizon {tau_m:.3e} too short for resonance width {min_width:.3e} without the plateau tail"
        )));
    }
    let tail = if options.plateau_tail { corr.plateau } else { Complex64::new(0.0, 0.0) };
    let b0 = corr.values[0];
    let bm = corr.values[last];
    let fft = FftPlanner::new().plan_fft_inverse(fft_len);
    let mut buffer = vec![Complex64::new(0.0, 0.0); fft_len];
    let values = eigenvalues
        .iter()
        .map(|&lambda| {
            let base = Complex64::new(0.0, grid.start) - lambda;
            buffer.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for k in 0..samples {
                buffer[k] = corr.values[k] * (base * (h * k as f64)).exp();
            }
            fft.process(&mut buffer);
            (0..grid.len)
                .map(|j| {
                    let a = Complex64::new(0.0, grid.energy(j)) - lambda;
                    let z = a * h;
                    let (p, q) = filon_weights(z);
                    let qe = q * (-z).exp();
                    let em = (a * tau_m).exp();
                    let s = buffer[j];
                    h * (p * (s - bm * em) + qe * (s - b0)) - tail * em / a
                })
                .collect()
        })
        .collect();
    Ok(HalfFourierTable { grid: *grid, values })
}

/// Filon transforms at Δτ and Δτ/2 combined as (4F_{Δτ/2} − F_{Δτ})/3, which
/// removes the leading O(Δτ²) interpolation error. `fine` must sample the same
/// function at half the step over the same horizon. Also returns the largest
/// extrapolation correction relative to the largest |F|.
pub fn half_fourier_extrapolated(
    eigenvalues: &[Complex64],
    coarse: &CorrelationFunction,
    fine: &CorrelationFunction,
    grid: &EnergyGrid,
    options: HalfFourierOptions,
) -> Result<(HalfFourierTable, f64)> {
    if coarse.is_unity() {
        return Ok((half_fourier(eigenvalues, coarse, grid, options)?, 0.0));
    }
    if (2.0 * fine.step - coarse.step).abs() > 1e-12 * coarse.step {
        return Err(Error::Quadrature("fine correlation table must use half the time step".into()));
    }
    let fft_len = grid
        .fft_len
        .ok_or_else(|| Error::Quadrature("energy grid is not tied to the time grid".into()))?;
    let fine_grid = EnergyGrid {
        fft_len: Some(2 * fft_len),
        ..*grid
    };
    let samples = options.samples.min(coarse.len());
    let fine_options = HalfFourierOptions {
        samples: 2 * (samples - 1) + 1,
        ..options
    };
    if fine_options.samples > fine.len() {
        return Err(Error::Quadrature("fine correlation table is shorter than the horizon".into()));
    }
    let mut table = half_fourier_filon(eigenvalues, coarse, grid, HalfFourierOptions { samples, ..options })?;
    let refined = half_fourier_filon(eigenvalues, fine, &fine_grid, fine_options)?;
    let mut peak = 0.0f64;
    let mut change = 0.0f64;
    for (c, f) in table.values.iter_mut().zip(&refined.values) {
        for (x, y) in c.iter_mut().zip(f) {
            let correction = (y - *x) / 3.0;
            change = change.max(correction.norm());
            *x = y + correction;
            peak = peak.max(x.norm());
        }
    }
    Ok((table, if peak > 0.0 { change / peak } else { 0.0 }))
}

/// Energy weights n_F^v(ε)·dε/2π on the table grid.
fn lead_weights(grid: &EnergyGrid, lead: Lead, model: &JunctionModel) -> Vec<f64> {
    let mu = lead.mu(model);
    grid.weights()
        .iter()
        .enumerate()
        .map(|(j, w)| w * fermi(grid.energy(j), mu, model.temperature) / (2.0 * PI))
        .collect()
}

/// First-order rates χ_n^v = 2Γ_v ∫dε/2π n_F^v F_n.
pub fn chi(hf: &HalfFourierTable, lead: Lead, model: &JunctionModel) -> Vec<Complex64> {
    let weights = lead_weights(&hf.grid, lead, model);
    let gamma = lead.gamma(model);
    hf.values
        .iter()
        .map(|f| {
            let terms: Vec<Complex64> = f.iter().zip(&weights).map(|(x, w)| x * *w).collect();
            2.0 * gamma * pairwise_sum(&terms)
        })
        .collect()
}

/// Second-order rates η_nm^v. The diagonal always follows the time-local
/// identity (2Γ_v/Re Λ_n) Re χ_n^v; off-diagonal entries follow `kernel`.
pub fn eta(
    hf: &HalfFourierTable,
    chi: &[Complex64],
    eigenvalues: &[Complex64],
    lead: Lead,
    model: &JunctionModel,
    kernel: EtaKernel,
) -> DMatrix<Complex64> {
    let n = eigenvalues.len();
    let gamma = lead.gamma(model);
    let weights = lead_weights(&hf.grid, lead, model);
    let mut eta = DMatrix::zeros(n, n);
    for i in 0..n {
        eta[(i, i)] = Complex64::new(2.0 * gamma * chi[i].re / eigenvalues[i].re, 0.0);
        for j in i + 1..n {
            let v = match kernel {
                EtaKernel::Factorized => {
                    let terms: Vec<Complex64> = hf.values[i]
                        .iter()
                        .zip(&hf.values[j])
                        .zip(&weights)
                        .map(|((a, b), w)| a.conj() * b * *w)
                        .collect();
                    4.0 * gamma * gamma * pairwise_sum(&terms)
                }
                EtaKernel::SameSite => {
                    2.0 * gamma * (chi[i].conj() + chi[j]) / (eigenvalues[i].conj() + eigenvalues[j])
                }
            };
            eta[(i, j)] = v;
            eta[(j, i)] = v.conj();
        }
    }
    eta
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSet {
    pub chi_left: Vec<Complex64>,
    pub chi_right: Vec<Complex64>,
    pub eta_left: DMatrix<Complex64>,
    pub eta_right: DMatrix<Complex64>,
}

impl RateSet {
    pub fn from_tables(
        left: &HalfFourierTable,
        right: &HalfFourierTable,
        eigenvalues: &[Complex64],
        model: &JunctionModel,
        kernel: EtaKernel,
    ) -> Self {
        let chi_left = chi(left, Lead::Left, model);
        let chi_right = chi(right, Lead::Right, model);
        let eta_left = eta(left, &chi_left, eigenvalues, Lead::Left, model, kernel);
        let eta_right = eta(right, &chi_right, eigenvalues, Lead::Right, model, kernel);
        RateSet {
            chi_left,
            chi_right,
            eta_left,
            eta_right,
        }
    }

    pub fn chi(&self, lead: Lead) -> &[Complex64] {
        match lead {
            Lead::Left => &self.chi_left,
            Lead::Right => &self.chi_right,
        }
    }

    pub fn eta(&self, lead: Lead) -> &DMatrix<Complex64> {
        match lead {
            Lead::Left => &self.eta_left,
            Lead::Right => &self.eta_right,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(7), 8);
        assert_eq!(next_fast_len(121), 125);
        assert_eq!(next_fast_len(1000), 1000);
    }

    #[test]
    fn filon_series_matches_closed_form() {
        for z in [Complex64::new(0.49, 0.0), Complex64::new(-0.3, 0.35), Complex64::new(0.0, -0.49)] {
            let (p, q) = filon_weights(z);
            let e = z.exp();
            let pz = (e - 1.0 - z) / (z * z);
            let qz = (1.0 + (z - 1.0) * e) / (z * z);
            assert!((p - pz).norm() < 1e-14);
            assert!((q - qz).norm() < 1e-14);
        }
    }

    #[test]
    fn grid_tied_to_time_step() {
        let g = EnergyGrid::for_time_grid(-2.0, 2.0, 1e-3, 0.0785, 1000);
        let l = g.fft_len.unwrap();
        assert!((g.step * 0.0785 * l as f64 - 2.0 * PI).abs() < 1e-12);
        assert!(g.step <= 1e-3);
        assert!(g.end() >= 2.0);
        assert!(g.len <= l);
    }
}
