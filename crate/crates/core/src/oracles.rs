//! Closed forms and limits used to validate the generic pipeline.
//!
//! Every function here is independent of the resonance/rate machinery except
//! `two_site_closed_form`, which recombines the pipeline's rates through the
//! explicit two-site eigenvectors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::correlations::CorrelationFunction;
use crate::error::{Error, Result};
use crate::model::JunctionModel;
use crate::quadrature::integrate;
use crate::rates::{half_fourier_filon, EnergyGrid, HalfFourierOptions, RateSet};
use crate::spectral::fermi;
use crate::transport::Solver;

/// Beyond this many kT from both chemical potentials n_L − n_R is below 1e-17.
const FERMI_WINDOW: f64 = 40.0;
const ORACLE_ABS_TOL: f64 = 1e-15;
const ORACLE_REL_TOL: f64 = 1e-11;

/// Energy range outside which the bias window factor vanishes to double precision.
fn bias_window(model: &JunctionModel) -> (f64, f64) {
    let (a, b) = (model.mu_left(), model.mu_right());
    let t = model.temperature;
    (a.min(b) - FERMI_WINDOW * t, a.max(b) + FERMI_WINDOW * t)
}

fn window_factor(model: &JunctionModel, e: f64) -> f64 {
    fermi(e, model.mu_left(), model.temperature) - fermi(e, model.mu_right(), model.temperature)
}

fn require_sites(model: &JunctionModel, n: usize, what: &str) -> Result<()> {
    if model.n_sites() != n {
        return Err(Error::Domain(format!("{what} needs {n} site(s), got {}", model.n_sites())));
    }
    Ok(())
}

fn bias_integral<F: Fn(f64) -> f64>(model: &JunctionModel, transmission: F, peaks: &[f64]) -> f64 {
    let (lo, hi) = bias_window(model);
    let mut breaks = vec![lo, model.mu_left().clamp(lo, hi), model.mu_right().clamp(lo, hi), hi];
    breaks.extend(peaks.iter().filter(|&&p| p > lo && p < hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate(
        |e| transmission(e) * window_factor(model, e) / (2.0 * PI),
        &breaks,
        ORACLE_ABS_TOL,
        ORACLE_REL_TOL,
    )
}

/// Coherent single-site current, ∫dε/2π 4Γ_LΓ_R/(Γ² + (ε − ω)²)(n_L − n_R).
pub fn lb_single_site(model: &JunctionModel) -> Result<f64> {
    require_sites(model, 1, "single-site Landauer-Buttiker current")?;
    let w = model.site_energies[0];
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let g = gl + gr;
    Ok(bias_integral(model, |e| 4.0 * gl * gr / (g * g + (e - w).powi(2)), &[w]))
}

/// Coherent two-site current with transmission 4Γ_LΓ_R g²/|(ε−ω₁+iΓ_L)(ε−ω₂+iΓ_R)−g²|².
pub fn lb_two_site(model: &JunctionModel) -> Result<f64> {
    require_sites(model, 2, "two-site Landauer-Buttiker current")?;
    let (w1, w2) = (model.site_energies[0], model.site_energies[1]);
    let g = model.hoppings[0];
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let transmission = |e: f64| {
        let d = (Complex64::new(e - w1, gl)) * Complex64::new(e - w2, gr) - g * g;
        4.0 * gl * gr * g * g / d.norm_sqr()
    };
    let mid = 0.5 * (w1 + w2);
    let split = (0.25 * (w1 - w2).powi(2) + g * g).sqrt();
    Ok(bias_integral(model, transmission, &[mid - split, mid + split]))
}

/// Coherent current through a chain of any length. The transmission
/// 4Γ_LΓ_R ∏g²/|D_N(ε)|² uses the continuant D_k = (ε − ω_k + iΓ_k)D_{k−1} − g²_{k−1}D_{k−2}.
pub fn lb_chain(model: &JunctionModel) -> Result<f64> {
    let n = model.n_sites();
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let broadening = |k: usize| {
        let mut g = 0.0;
        if k == 0 {
            g += gl;
        }
        if k == n - 1 {
            g += gr;
        }
        g
    };
    let hopping_product: f64 = model.hoppings.iter().map(|g| g * g).product();
    let transmission = |e: f64| {
        let mut prev = Complex64::new(1.0, 0.0);
        let mut cur = Complex64::new(e - model.site_energies[0], broadening(0));
        for k in 1..n {
            let next = Complex64::new(e - model.site_energies[k], broadening(k)) * cur - model.hoppings[k - 1].powi(2) * prev;
            prev = cur;
            cur = next;
        }
        4.0 * gl * gr * hopping_product / cur.norm_sqr()
    };
    let lo = model.site_energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = model.site_energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let band = 2.0 * model.hoppings.iter().cloned().fold(0.0, f64::max);
    let peaks: Vec<f64> = (0..=8).map(|k| lo - band + (hi - lo + 2.0 * band) * k as f64 / 8.0).collect();
    Ok(bias_integral(model, transmission, &peaks))
}

/// Sequential-tunneling limits. Fields that do not apply to the model are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QmeLimits {
    /// Polaron-frame single-site rate current.
    pub single_site: Option<f64>,
    /// Two-site current to lowest order in Γ with the Γ² broadening retained.
    pub dimer_broadened: Option<f64>,
    /// Two-site current to lowest order in Γ.
    pub dimer_lowest_order: Option<f64>,
}

pub fn qme_dimer_broadened(gamma: f64, hopping: f64, detuning: f64) -> f64 {
    let g2 = hopping * hopping;
    4.0 * gamma * g2 / (gamma * gamma + detuning * detuning + 4.0 * g2)
}

pub fn qme_dimer_lowest_order(gamma: f64, hopping: f64, detuning: f64) -> f64 {
    let g2 = hopping * hopping;
    2.0 * gamma * g2 / (detuning * detuning + 4.0 * g2)
}

/// Γ maximizing `qme_dimer_broadened` at fixed hopping and detuning.
pub fn qme_optimal_gamma(hopping: f64, detuning: f64) -> f64 {
    (detuning * detuning + 4.0 * hopping * hopping).sqrt()
}

/// Single-site rate current ∫dε/2π 4Γ_LΓ_R/Γ B̃(ε)(n_L − n_R) with
/// B̃(ε) = Re∫₀^∞ e^{i(ε−ω)τ}B(τ)dτ.
///
/// The plateau of B gives the elastic line B∞·πδ(ε − ω); the decaying remainder
/// B − B∞ is transformed on the correlation time grid.
pub fn qme_single_site(model: &JunctionModel, corr: &CorrelationFunction) -> Result<f64> {
    require_sites(model, 1, "single-site rate current")?;
    let w = model.site_energies[0];
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let prefactor = 4.0 * gl * gr / (gl + gr);
    let elastic = prefactor * corr.plateau.re * 0.5 * window_factor(model, w);
    if corr.is_unity() {
        return Ok(elastic);
    }
    let remainder = CorrelationFunction {
        values: corr.values.iter().map(|b| b - corr.plateau).collect(),
        plateau: Complex64::new(0.0, 0.0),
        ..corr.clone()
    };
    let (lo, hi) = bias_window(model);
    let max_step = 0.25 * (PI * model.temperature).min(2.0 * PI / corr.horizon());
    let grid = EnergyGrid::for_time_grid(lo, hi, max_step, corr.step, corr.len());
    // A vanishing damping keeps the transform finite at ε = ω; the remainder
    // itself decays within the table.
    let lambda = Complex64::new(1e-12, w);
    let options = HalfFourierOptions {
        samples: corr.len(),
        plateau_tail: true,
        tolerance: 1.0,
    };
    let table = half_fourier_filon(&[lambda], &remainder, &grid, options)?;
    let weights = grid.weights();
    let inelastic: f64 = (0..grid.len)
        .map(|k| weights[k] * table.values[0][k].re * window_factor(model, grid.energy(k)))
        .sum::<f64>()
        * prefactor
        / (2.0 * PI);
    Ok(elastic + inelastic)
}

/// All sequential-tunneling limits that apply to `model`.
pub fn qme_limits(model: &JunctionModel, solver: &Solver) -> Result<QmeLimits> {
    match model.n_sites() {
        1 => {
            let corr = solver.site_correlation(model, 0, None)?;
            Ok(QmeLimits {
                single_site: Some(qme_single_site(model, &corr)?),
                dimer_broadened: None,
                dimer_lowest_order: None,
            })
        }
        2 => {
            let gamma = model.gamma_total();
            let g = model.hoppings[0];
            let detuning = model.site_energies[0] - model.site_energies[1];
            Ok(QmeLimits {
                single_site: None,
                dimer_broadened: Some(qme_dimer_broadened(gamma, g, detuning)),
                dimer_lowest_order: Some(qme_dimer_lowest_order(gamma, g, detuning)),
            })
        }
        n => Err(Error::Domain(format!("sequential-tunneling limits need 1 or 2 sites, got {n}"))),
    }
}

/// Explicit two-site resonances: (Λ₊, Λ₋, √Z) with Λ₊ − Λ₋ = √Z.
pub fn two_site_eigenvalues(model: &JunctionModel) -> Result<(Complex64, Complex64, Complex64)> {
    require_sites(model, 2, "two-site eigenvalues")?;
    let (w1, w2) = (model.site_energies[0], model.site_energies[1]);
    let g = model.hoppings[0];
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let z = Complex64::new(gl - gr, w1 - w2).powi(2) - 4.0 * g * g;
    let root = z.sqrt();
    let centre = 0.5 * Complex64::new(gl + gr, w1 + w2);
    Ok((centre + 0.5 * root, centre - 0.5 * root, root))
}

fn nearest(eigenvalues: &[Complex64], target: Complex64) -> usize {
    (0..eigenvalues.len())
        .min_by(|&a, &b| (eigenvalues[a] - target).norm().total_cmp(&(eigenvalues[b] - target).norm()))
        .unwrap_or(0)
}

/// Two-site left current rebuilt from the pipeline's rates with the explicit
/// eigenvectors. `eigenvalues` gives the resonance order the rates use.
///
/// Symmetric coupling uses the compact form
/// J_L = (2g²/Z)Re[χ₊ᴸ + χ₋ᴸ − χ₊ᴿ − χ₋ᴿ + η₊₋ᴿ − η₊₋ᴸ], Z = (ω₁ − ω₂)² + 4g²,
/// which folds in η_nn = 2Γ_v Re χ_n / Re Λ_n. Otherwise the first-site
/// weights a_± and cross-site weights b_± = ±ig/√Z are summed directly.
pub fn two_site_closed_form(model: &JunctionModel, eigenvalues: &[Complex64], rates: &RateSet) -> Result<f64> {
    let (plus, minus, root) = two_site_eigenvalues(model)?;
    if eigenvalues.len() != 2 {
        return Err(Error::Domain("two-site closed form needs two resonances".into()));
    }
    let p = nearest(eigenvalues, plus);
    let m = 1 - p;
    if p == nearest(eigenvalues, minus) {
        return Err(Error::Defective("two-site resonances coincide".into()));
    }
    let (w1, w2) = (model.site_energies[0], model.site_energies[1]);
    let g = model.hoppings[0];
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    let (cl, cr) = (&rates.chi_left, &rates.chi_right);
    let (el, er) = (&rates.eta_left, &rates.eta_right);

    if gl == gr {
        let z = (w1 - w2).powi(2) + 4.0 * g * g;
        let combo = cl[p] + cl[m] - cr[p] - cr[m] + er[(p, m)] - el[(p, m)];
        return Ok(2.0 * g * g / z * combo.re);
    }

    let shift = |l: Complex64| l - Complex64::new(gr, w2);
    let a = [shift(plus) / root, -shift(minus) / root];
    let b = [Complex64::new(0.0, g) / root, Complex64::new(0.0, -g) / root];
    let idx = [p, m];
    let mut first = 0.0;
    let mut second = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        first += 2.0 * (a[i] * cl[idx[i]]).re;
        for j in 0..2 {
            second += a[i].conj() * a[j] * el[(idx[i], idx[j])];
            second += gl / gr * b[i].conj() * b[j] * er[(idx[i], idx[j])];
        }
    }
    Ok(first - second.re)
}
