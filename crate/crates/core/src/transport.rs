//! Steady-state currents and the end-to-end solver.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;

use crate::cavity::{cavity_renormalization, CavityConfig};
use crate::correlations::{BathExponent, CorrelationFunction};
use crate::error::{Error, Result};
use crate::model::{EtaKernel, JunctionModel, NumericsSpec};
use crate::rates::{half_fourier_extrapolated, EnergyGrid, HalfFourierOptions, HalfFourierTable, Lead, RateSet};
use crate::resonances::{build_m0, decompose, ResonanceSet};
use crate::spectral::fermi;

/// Fermi tails and resonance tails are kept out to this many widths.
const WINDOW_WIDTHS: f64 = 20.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub converged: bool,
    /// Largest exponent change of any correlation function under frequency refinement.
    pub correlation_error: f64,
    pub time_step: f64,
    /// Largest Δτ-extrapolation correction to the transform tables, relative to their peak.
    pub time_step_correction: f64,
    pub time_horizon: f64,
    /// |B(τ_M) − B(∞)|·e^{−min Re Λ τ_M}, the error of the plateau tail.
    pub tail_error: f64,
    pub energy_window: [f64; 2],
    pub energy_step: f64,
    pub energy_points: usize,
    /// Current density at the window edges relative to its peak.
    pub window_edge_ratio: f64,
    pub degeneracy_split: bool,
    pub basis_condition: f64,
    pub sum_phi_left: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub j_left: f64,
    pub j_right: f64,
    pub occupation_site1: f64,
    pub conservation_residual: f64,
    pub diagnostics: Diagnostics,
}

fn lead_term(res: &ResonanceSet, rates: &RateSet, model: &JunctionModel, lead: Lead, site: Lead) -> f64 {
    let c = &res.coefficients;
    let psi = match (site, lead) {
        (Lead::Left, Lead::Left) => &c.psi_left,
        (Lead::Left, Lead::Right) => &c.psi_right,
        (Lead::Right, Lead::Left) => &c.psi_tilde_left,
        (Lead::Right, Lead::Right) => &c.psi_tilde_right,
    };
    let eta = rates.eta(lead);
    let n = res.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += psi[(i, j)] * eta[(i, j)];
        }
    }
    acc.re / lead.gamma(model)
}

/// Currents into the junction from each lead and the first-site occupation.
pub fn current(model: &JunctionModel, res: &ResonanceSet, rates: &RateSet) -> TransportResult {
    let c = &res.coefficients;
    let first_order = |phi: &[Complex64], chi: &[Complex64]| -> f64 {
        2.0 * phi.iter().zip(chi).map(|(p, x)| (p * x).re).sum::<f64>()
    };
    let site1 = lead_term(res, rates, model, Lead::Left, Lead::Left)
        + lead_term(res, rates, model, Lead::Right, Lead::Left);
    let site_n = lead_term(res, rates, model, Lead::Left, Lead::Right)
        + lead_term(res, rates, model, Lead::Right, Lead::Right);
    let j_left = first_order(&c.phi_left, &rates.chi_left) - model.gamma_left * site1;
    let j_right = first_order(&c.phi_right, &rates.chi_right) - model.gamma_right * site_n;
    TransportResult {
        j_left,
        j_right,
        occupation_site1: 0.5 * site1,
        conservation_residual: (j_left + j_right).abs(),
        diagnostics: Diagnostics {
            degeneracy_split: res.perturbed,
            basis_condition: res.basis_condition(),
            sum_phi_left: c.phi_left.iter().sum(),
            ..Diagnostics::default()
        },
    }
}

/// Left-lead current density j(ε_k) at the given grid indices, paired with
/// the gross density |in| + |out| it is the difference of. The first
/// component integrates to J_L.
fn current_density(
    model: &JunctionModel,
    res: &ResonanceSet,
    left: &HalfFourierTable,
    right: &HalfFourierTable,
    kernel: EtaKernel,
    indices: &[usize],
) -> Vec<(f64, f64)> {
    let c = &res.coefficients;
    let eig = &res.eigenvalues;
    let n = res.len();
    let kernel_sum = |table: &HalfFourierTable, psi: &nalgebra::DMatrix<Complex64>, k: usize| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            let fa = table.values[a][k];
            for b in 0..n {
                let fb = table.values[b][k];
                let kab = if a == b {
                    Complex64::new(fa.re / eig[a].re, 0.0)
                } else {
                    match kernel {
                        EtaKernel::Factorized => fa.conj() * fb,
                        EtaKernel::SameSite => (fa.conj() + fb) / (eig[a].conj() + eig[b]),
                    }
                };
                acc += psi[(a, b)] * kab;
            }
        }
        acc.re
    };
    let (gl, gr) = (model.gamma_left, model.gamma_right);
    indices
        .iter()
        .map(|&k| {
            let e = left.grid.energy(k);
            let nl = fermi(e, model.mu_left(), model.temperature);
            let nr = fermi(e, model.mu_right(), model.temperature);
            let first: f64 = c.phi_left.iter().zip(&left.values).map(|(p, f)| (p * f[k]).re).sum();
            let l = 4.0 * gl * nl * (first - gl * kernel_sum(left, &c.psi_left, k));
            let r = 4.0 * gl * gr * nr * kernel_sum(right, &c.psi_right, k);
            ((l - r) / (2.0 * PI), (l.abs() + r.abs()) / (2.0 * PI))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CorrelationKey(Vec<u64>);

impl CorrelationKey {
    fn new(bath: &BathExponent, step: f64, len: usize, numerics: &NumericsSpec) -> Self {
        let d = &bath.density;
        CorrelationKey(vec![
            bath.strength.to_bits(),
            bath.center.to_bits(),
            bath.width.to_bits(),
            d.prefactor.to_bits(),
            d.cutoff.to_bits(),
            d.shape as u64,
            bath.temperature.map_or(u64::MAX, f64::to_bits),
            bath.freq_max.to_bits(),
            step.to_bits(),
            len as u64,
            numerics.n_freq as u64,
            numerics.tolerance.to_bits(),
        ])
    }
}

/// Shared memo tables for correlation functions and resonance sets.
#[derive(Debug, Default)]
pub struct Cache {
    correlations: Mutex<HashMap<CorrelationKey, Arc<CorrelationFunction>>>,
    resonances: Mutex<HashMap<Vec<u64>, Arc<ResonanceSet>>>,
}

/// Everything computed for one junction.
#[derive(Debug, Clone)]
pub struct Solution {
    pub result: TransportResult,
    pub resonances: Arc<ResonanceSet>,
    pub rates: RateSet,
    pub left_correlation: Arc<CorrelationFunction>,
    pub right_correlation: Arc<CorrelationFunction>,
}

/// Computes currents for junction models, sharing correlation functions and
/// resonance sets between calls.
#[derive(Debug, Clone)]
pub struct Solver {
    pub numerics: NumericsSpec,
    cache: Option<Arc<Cache>>,
}

impl Solver {
    pub fn new(numerics: NumericsSpec) -> Self {
        Solver {
            numerics,
            cache: Some(Arc::new(Cache::default())),
        }
    }

    pub fn uncached(numerics: NumericsSpec) -> Self {
        Solver { numerics, cache: None }
    }

    pub fn resonances(&self, model: &JunctionModel) -> Result<Arc<ResonanceSet>> {
        let m0 = build_m0(model);
        let Some(cache) = &self.cache else {
            return Ok(Arc::new(decompose(&m0)?));
        };
        let key: Vec<u64> = m0
            .diagonal
            .iter()
            .chain(&m0.off_diagonal)
            .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
            .collect();
        if let Some(hit) = cache.resonances.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let res = Arc::new(decompose(&m0)?);
        cache.resonances.lock().unwrap().insert(key, res.clone());
        Ok(res)
    }

    fn tabulate(&self, bath: &BathExponent, step: f64, len: usize) -> Result<Arc<CorrelationFunction>> {
        let n = &self.numerics;
        let Some(cache) = &self.cache else {
            return Ok(Arc::new(bath.tabulate(step, len, n.n_freq, n.tolerance)?));
        };
        let key = CorrelationKey::new(bath, step, len, n);
        if let Some(hit) = cache.correlations.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        // Computed outside the lock; a racing duplicate produces identical values.
        let corr = Arc::new(bath.tabulate(step, len, n.n_freq, n.tolerance)?);
        cache.correlations.lock().unwrap().insert(key, corr.clone());
        Ok(corr)
    }

    /// Baths dressing electrons that enter or leave through `site`.
    fn site_baths(&self, model: &JunctionModel, site: usize, cavity: Option<&CavityConfig>) -> Result<Vec<BathExponent>> {
        let mut baths = Vec::new();
        let vib = BathExponent::for_vibration(&model.vibrations[site], model.temperature, &self.numerics);
        if !vib.is_trivial() {
            baths.push(vib);
        }
        if let Some(cav) = cavity {
            let levels = cavity_renormalization(model, cav)?;
            if !(levels.omega_c > 0.0) {
                return Err(Error::invalid("cavity.omega_c_ev", "resonant cavity frequency must be positive"));
            }
            let photon = BathExponent::for_cavity(cav, levels.omega_c, &self.numerics);
            if !photon.is_trivial() {
                baths.push(photon);
            }
        }
        Ok(baths)
    }

    /// Correlation function dressing transfers through `site`, sampled at the
    /// base time step out to the bath memory time.
    pub fn site_correlation(
        &self,
        model: &JunctionModel,
        site: usize,
        cavity: Option<&CavityConfig>,
    ) -> Result<Arc<CorrelationFunction>> {
        self.site_correlation_on(model, site, cavity, self.numerics.base_time_step(), None)
    }

    fn site_correlation_on(
        &self,
        model: &JunctionModel,
        site: usize,
        cavity: Option<&CavityConfig>,
        step: f64,
        len: Option<usize>,
    ) -> Result<Arc<CorrelationFunction>> {
        let baths = self.site_baths(model, site, cavity)?;
        let len = len.unwrap_or_else(|| {
            let c_t = self.numerics.horizon_factor();
            let memory = baths
                .iter()
                .map(|b| b.memory_time(c_t, self.numerics.n_freq))
                .fold(0.0, f64::max);
            ((memory / step).ceil() as usize + 1).max(2)
        });
        let mut corr: Option<Arc<CorrelationFunction>> = None;
        for bath in &baths {
            let next = self.tabulate(bath, step, len)?;
            corr = Some(match corr {
                None => next,
                Some(prev) => Arc::new(prev.product(&next)?),
            });
        }
        Ok(corr.unwrap_or_else(|| Arc::new(CorrelationFunction::unity(step, len))))
    }

    /// The same correlation function at half the step over the same horizon.
    fn halved(
        &self,
        model: &JunctionModel,
        site: usize,
        cavity: Option<&CavityConfig>,
        coarse: &Arc<CorrelationFunction>,
    ) -> Result<Arc<CorrelationFunction>> {
        if coarse.is_unity() {
            return Ok(coarse.clone());
        }
        self.site_correlation_on(model, site, cavity, 0.5 * coarse.step, Some(2 * (coarse.len() - 1) + 1))
    }

    pub fn solve(&self, model: &JunctionModel) -> Result<Solution> {
        self.solve_with_cavity(model, None)
    }

    pub fn solve_with_cavity(&self, model: &JunctionModel, cavity: Option<&CavityConfig>) -> Result<Solution> {
        model.validate()?;
        self.numerics.validate()?;
        if let Some(c) = cavity {
            c.validate()?;
        }
        let num = &self.numerics;
        let res = self.resonances(model)?;
        let n = model.n_sites();
        let left_corr = self.site_correlation(model, 0, cavity)?;
        let right_corr = if n == 1 {
            left_corr.clone()
        } else {
            self.site_correlation(model, n - 1, None)?
        };
        let left_fine = self.halved(model, 0, cavity, &left_corr)?;
        let right_fine = if n == 1 {
            left_fine.clone()
        } else {
            self.halved(model, n - 1, None, &right_corr)?
        };
        let step = left_corr.step;
        let min_width = res.min_width();
        let c_t = num.horizon_factor();
        let needed = ((c_t / min_width / step).ceil() as usize + 1).max(2);
        let samples = needed.min(left_corr.len().max(right_corr.len()));
        let numeric = !(left_corr.is_unity() && right_corr.is_unity());

        let [base_lo, base_hi] = num.energy_window;
        let t = model.temperature;
        let mut lo = base_lo.min(model.mu_left().min(model.mu_right()) - WINDOW_WIDTHS * t);
        let mut hi = base_hi.max(model.mu_left().max(model.mu_right()) + WINDOW_WIDTHS * t);
        for l in &res.eigenvalues {
            lo = lo.min(l.im - WINDOW_WIDTHS * l.re);
            hi = hi.max(l.im + WINDOW_WIDTHS * l.re);
        }
        let max_step = (0.25 * min_width.min(PI * t)).min((base_hi - base_lo) / (num.n_energy - 1) as f64);
        let options = HalfFourierOptions {
            samples,
            plateau_tail: num.plateau_tail,
            tolerance: num.tolerance,
        };

        let mut expansions = 0;
        loop {
            let grid = if numeric {
                EnergyGrid::for_time_grid(lo, hi, max_step, step, samples)
            } else {
                EnergyGrid::covering(lo, hi, max_step)
            };
            let (left, left_change) = half_fourier_extrapolated(&res.eigenvalues, &left_corr, &left_fine, &grid, options)?;
            let (right, right_change) = if Arc::ptr_eq(&left_corr, &right_corr) || *left_corr == *right_corr {
                (left.clone(), left_change)
            } else {
                half_fourier_extrapolated(&res.eigenvalues, &right_corr, &right_fine, &grid, options)?
            };
            let rates = RateSet::from_tables(&left, &right, &res.eigenvalues, model, num.eta_kernel);
            let mut result = current(model, &res, &rates);

            let all: Vec<usize> = (0..grid.len).collect();
            let density = current_density(model, &res, &left, &right, num.eta_kernel, &all);
            let peak = density.iter().fold(0.0f64, |m, d| m.max(d.0.abs()));
            let gross = density.iter().fold(0.0f64, |m, d| m.max(d.1));
            let lo_edge = density[0].0.abs();
            let hi_edge = density[grid.len - 1].0.abs();
            // Near zero bias the net density is cancellation noise; measure
            // the edges against a floor set by the gross flow instead.
            let scale = peak.max(num.tolerance * gross).max(f64::MIN_POSITIVE);
            let edge_ratio = lo_edge.max(hi_edge) / scale;
            let window_ok = edge_ratio <= num.tolerance;
            if !window_ok && expansions == 0 {
                expansions += 1;
                let width = hi - lo;
                if lo_edge / scale > num.tolerance {
                    lo -= width;
                }
                if hi_edge / scale > num.tolerance {
                    hi += width;
                }
                continue;
            }

            let tau_m = step * (samples - 1) as f64;
            let decay = (-min_width * tau_m).exp();
            let tail_error = [&left_corr, &right_corr]
                .iter()
                .map(|c| {
                    let b = c.values[(samples - 1).min(c.len() - 1)];
                    let plateau = if num.plateau_tail { c.plateau } else { Complex64::new(0.0, 0.0) };
                    (b - plateau).norm() * decay
                })
                .fold(0.0, f64::max);
            let correlation_error = left_corr.exponent_error.max(right_corr.exponent_error);
            let d = &mut result.diagnostics;
            d.correlation_error = correlation_error;
            d.time_step = step;
            d.time_step_correction = left_change.max(right_change);
            d.time_horizon = tau_m;
            d.tail_error = tail_error;
            d.energy_window = [grid.start, grid.end()];
            d.energy_step = grid.step;
            d.energy_points = grid.len;
            d.window_edge_ratio = edge_ratio;
            d.converged = window_ok && tail_error <= num.tolerance && correlation_error <= num.tolerance;
            return Ok(Solution {
                result,
                resonances: res,
                rates,
                left_correlation: left_corr,
                right_correlation: right_corr,
            });
        }
    }
}

/// One-off solve with default caching.
pub fn solve(model: &JunctionModel, numerics: &NumericsSpec) -> Result<TransportResult> {
    Ok(Solver::uncached(*numerics).solve(model)?.result)
}
