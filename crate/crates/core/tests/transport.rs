use junction_core::model::{kelvin_to_ev, EtaKernel, JunctionModel, NumericsSpec, VibrationSpec};
use junction_core::oracles::{
    lb_single_site, lb_two_site, qme_dimer_broadened, qme_limits, qme_optimal_gamma, qme_single_site,
    two_site_closed_form,
};
use junction_core::transport::Solver;

const LB_SINGLE_REFERENCE: f64 = 0.004_892_655_478_277_12;
const LB_DIMER_REFERENCE: f64 = 0.004_923_727_509_803_76;

fn room() -> f64 {
    kelvin_to_ev(300.0)
}

fn vib(lambda: f64) -> VibrationSpec {
    VibrationSpec::super_ohmic(0.2, lambda, 0.005, 0.5)
}

fn single(lambda: f64, gamma: f64, bias: f64) -> JunctionModel {
    JunctionModel::uniform_chain(1, 0.3, 0.0, (gamma / 2.0, gamma / 2.0), vib(lambda), room(), bias)
}

fn dimer(lambda: f64, hopping: f64, gamma: f64, bias: f64) -> JunctionModel {
    JunctionModel::uniform_chain(2, 0.3, hopping, (gamma / 2.0, gamma / 2.0), vib(lambda), room(), bias)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn lb_oracles_match_frozen_values() {
    let mut m = single(0.0, 0.01, 1.0);
    m.temperature = 0.025_852;
    assert!(rel(lb_single_site(&m).unwrap(), LB_SINGLE_REFERENCE) < 1e-9);
    let mut d = dimer(0.0, 0.1, 0.01, 1.0);
    d.temperature = 0.025_852;
    assert!(rel(lb_two_site(&d).unwrap(), LB_DIMER_REFERENCE) < 1e-9);
    assert_eq!(lb_single_site(&m.clone().with_bias(0.0)).unwrap(), 0.0);
    assert_eq!(lb_two_site(&dimer(0.0, 0.0, 0.01, 1.0)).unwrap(), 0.0);
}

#[test]
fn coherent_single_site_equals_lb() {
    let solver = Solver::new(NumericsSpec::default());
    for gamma in [0.01, 0.1, 1.0] {
        for bias in [0.1, 0.6, 1.0, 3.0] {
            let m = single(0.0, gamma, bias);
            let j = solver.solve(&m).unwrap().result;
            let lb = lb_single_site(&m).unwrap();
            assert!(rel(j.j_left, lb) < 1e-6, "Γ={gamma} V={bias}: {} vs {lb}", j.j_left);
            assert!(j.conservation_residual < 1e-10 * gamma);
        }
    }
}

#[test]
fn coherent_dimer_equals_lb() {
    let solver = Solver::new(NumericsSpec::default());
    for bias in [0.2, 0.7, 1.5] {
        let m = dimer(0.0, 0.1, 0.01, bias);
        let j = solver.solve(&m).unwrap().result.j_left;
        let lb = lb_two_site(&m).unwrap();
        assert!(rel(j, lb) < 1e-6, "V={bias}: {j} vs {lb}");
    }
    let mut asym = dimer(0.0, 0.1, 0.04, 0.8);
    asym.gamma_left = 0.01;
    asym.gamma_right = 0.03;
    asym.site_energies = vec![0.25, 0.35];
    let j = solver.solve(&asym).unwrap().result.j_left;
    assert!(rel(j, lb_two_site(&asym).unwrap()) < 1e-6);
}

#[test]
fn dimer_closed_form_matches_pipeline() {
    let solver = Solver::new(NumericsSpec::default());
    for lambda in [0.0, 0.6] {
        for bias in [0.3, 1.0] {
            let m = dimer(lambda, 0.1, 0.01, bias);
            let s = solver.solve(&m).unwrap();
            let closed = two_site_closed_form(&m, &s.resonances.eigenvalues, &s.rates).unwrap();
            assert!(rel(closed, s.result.j_left) < 1e-8, "λ={lambda} V={bias}: {closed} vs {}", s.result.j_left);
        }
    }
    let mut asym = dimer(0.6, 0.1, 0.04, 1.0);
    asym.gamma_left = 0.01;
    asym.gamma_right = 0.03;
    asym.site_energies = vec![0.25, 0.35];
    let s = solver.solve(&asym).unwrap();
    let closed = two_site_closed_form(&asym, &s.resonances.eigenvalues, &s.rates).unwrap();
    assert!(rel(closed, s.result.j_left) < 1e-8, "{closed} vs {}", s.result.j_left);
}

#[test]
fn dimer_current_vanishes_without_hopping() {
    let dimer_current = |kernel: EtaKernel, lambda: f64, g: f64| {
        let solver = Solver::new(NumericsSpec {
            eta_kernel: kernel,
            ..NumericsSpec::default()
        });
        solver.solve(&dimer(lambda, g, 0.01, 1.0)).unwrap().result.j_left
    };
    for (kernel, lambda) in [(EtaKernel::Factorized, 0.0), (EtaKernel::SameSite, 0.6)] {
        // Weak hopping is the bottleneck, so J ∝ g².
        let (weak, weaker) = (dimer_current(kernel, lambda, 1e-3), dimer_current(kernel, lambda, 1e-4));
        assert!(weak > 0.0 && weaker > 0.0);
        assert!((weaker / weak - 1e-2).abs() < 5e-4, "{kernel:?}: {weak} {weaker}");
    }
    // The product kernel leaves |F|² − Re F/Re Λ behind at degeneracy, which
    // stays small for weak dressing.
    let strong = dimer_current(EtaKernel::Factorized, 0.1, 0.05);
    let residue = dimer_current(EtaKernel::Factorized, 0.1, 1e-4);
    assert!(residue.abs() < 0.02 * strong, "{residue} vs {strong}");
}

#[test]
fn zero_bias_carries_no_current() {
    let solver = Solver::new(NumericsSpec::default());
    for n in 1..=3 {
        let m = JunctionModel::uniform_chain(n, 0.3, 0.1, (0.005, 0.005), vib(1.0), room(), 0.0);
        let r = solver.solve(&m).unwrap().result;
        assert!(r.j_left.abs() <= solver.numerics.tolerance, "N={n}: {}", r.j_left);
    }
}

#[test]
fn particle_hole_mirror_reverses_coherent_current() {
    let solver = Solver::new(NumericsSpec::default());
    let m = JunctionModel::uniform_chain(2, 0.3, 0.1, (0.01, 0.03), vib(0.0), room(), 0.7);
    let mut mirrored = m.clone().with_bias(-0.7);
    mirrored.site_energies = vec![-0.3, -0.3];
    let fwd = solver.solve(&m).unwrap().result.j_left;
    let back = solver.solve(&mirrored).unwrap().result.j_left;
    assert!(rel(-back, fwd) < 1e-9, "{fwd} vs {back}");
}

#[test]
fn single_site_conserves_charge_and_saturates() {
    let solver = Solver::new(NumericsSpec::default());
    let m = single(0.6, 0.01, 3.0);
    let r = solver.solve(&m).unwrap().result;
    assert!(r.conservation_residual < 1e-4 * 0.01);
    assert!(rel(r.j_left, 0.005) < 0.02, "{}", r.j_left);
    assert!(r.occupation_site1 >= 0.0 && r.occupation_site1 <= 1.0);
    assert!(r.diagnostics.converged, "{:?}", r.diagnostics);
}

#[test]
fn polaron_suppression_is_monotone() {
    let solver = Solver::new(NumericsSpec::default());
    let mut prev = f64::INFINITY;
    for lambda in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let j = solver.solve(&single(lambda, 0.01, 0.4)).unwrap().result.j_left;
        assert!(j <= prev * (1.0 + 1e-9), "λ={lambda}: {j} > {prev}");
        prev = j;
    }
}

#[test]
fn same_site_kernel_conserves_three_sites() {
    let numerics = NumericsSpec {
        eta_kernel: EtaKernel::SameSite,
        ..NumericsSpec::default()
    };
    let solver = Solver::new(numerics);
    let m = JunctionModel::uniform_chain(3, 0.3, 0.1, (0.05, 0.05), vib(1.5), room(), 1.0);
    let r = solver.solve(&m).unwrap().result;
    assert!(r.conservation_residual < 1e-4 * 0.1, "{r:?}");
}

#[test]
fn qme_limits_follow_closed_forms() {
    assert!((qme_dimer_broadened(0.2, 0.05, 0.0) - 0.04).abs() < 1e-15);
    assert!((qme_optimal_gamma(0.1, 0.0) - 0.2).abs() < 1e-15);
    let best = (1..400)
        .map(|k| k as f64 * 1e-3)
        .max_by(|a, b| qme_dimer_broadened(*a, 0.1, 0.0).total_cmp(&qme_dimer_broadened(*b, 0.1, 0.0)))
        .unwrap();
    assert!((best - 0.2).abs() < 1.5e-3);

    let solver = Solver::new(NumericsSpec::default());
    let m = single(0.6, 0.01, 12.0);
    let limits = qme_limits(&m, &solver).unwrap();
    let j = limits.single_site.unwrap();
    assert!(rel(j, 0.005) < 2e-3, "{j}");
    // Without vibrations the rate current is the elastic line alone.
    let coherent = single(0.0, 0.01, 2.0);
    let corr = solver.site_correlation(&coherent, 0, None).unwrap();
    let j0 = qme_single_site(&coherent, &corr).unwrap();
    assert!(rel(j0, 0.005) < 1e-9);
}

#[test]
fn coherent_chains_equal_landauer() {
    let solver = Solver::new(NumericsSpec::default());
    for n in [3, 6, 10] {
        for bias in [0.1, 1.0] {
            let m = JunctionModel::uniform_chain(n, 0.3, 0.1, (0.01, 0.01), vib(0.0), room(), bias);
            let j = solver.solve(&m).unwrap().result.j_left;
            let lb = junction_core::oracles::lb_chain(&m).unwrap();
            assert!(rel(j, lb) < 1e-6, "N={n} V={bias}: {j} vs {lb}");
        }
    }
    let two = dimer(0.0, 0.1, 0.01, 1.0);
    assert!(rel(junction_core::oracles::lb_chain(&two).unwrap(), lb_two_site(&two).unwrap()) < 1e-12);
}

#[test]
fn exceptional_point_is_reported() {
    // Γ/2 = 2g puts the five-site uniform chain on an exceptional point.
    let m = JunctionModel::uniform_chain(5, 0.4, 0.05, (0.1, 0.1), vib(0.0), room(), 0.1);
    let err = Solver::new(NumericsSpec::default()).solve(&m).unwrap_err();
    assert_eq!(err.category(), junction_core::Category::Eigensolver);
}
