use junction_core::cavity::{cavity_current, cavity_renormalization, CavityConfig};
use junction_core::model::{kelvin_to_ev, JunctionModel, NumericsSpec, VibrationSpec};
use junction_core::spectral::BathNormalization;
use junction_core::transport::Solver;

fn junction(lambda: f64, bias: f64) -> JunctionModel {
    JunctionModel::uniform_chain(
        1,
        0.3,
        0.0,
        (0.005, 0.005),
        VibrationSpec::super_ohmic(0.2, lambda, 0.02, 0.5),
        kelvin_to_ev(300.0),
        bias,
    )
}

#[test]
fn renormalized_levels_and_thresholds() {
    let m = junction(0.0, 1.0);
    let levels = cavity_renormalization(&m, &CavityConfig::resonant(0.0, 0.05, 1.0)).unwrap();
    assert_eq!(levels.bare_level, 0.3);
    let levels = cavity_renormalization(&m, &CavityConfig::resonant(0.8, 0.05, 1.0)).unwrap();
    assert!((levels.bare_level - 0.3 / 0.36).abs() < 1e-15);
    assert!((levels.lower_threshold(0.3) - 0.6).abs() < 1e-15);
    assert!((levels.upper_threshold(0.3) - 2.266_666_666_666_667).abs() < 1e-12);
    assert!(cavity_renormalization(&m, &CavityConfig::resonant(1.0, 0.05, 1.0)).is_err());
    assert!(cavity_renormalization(&m.clone().with_n_sites(2, 0.1), &CavityConfig::resonant(0.5, 0.05, 1.0)).is_err());
}

#[test]
fn uncoupled_cavity_leaves_current_unchanged() {
    let numerics = NumericsSpec::default();
    for lambda in [0.0, 0.6] {
        let m = junction(lambda, 1.2);
        let plain = Solver::uncached(numerics).solve(&m).unwrap().result.j_left;
        let off = cavity_current(&m, &CavityConfig::resonant(0.0, 0.05, 1.0), &numerics).unwrap().j_left;
        assert_eq!(plain, off);
        // A vanishing far-field prefactor under the literal normalization is a
        // vanishing photon exponent.
        let mut faint = CavityConfig::resonant(0.8, 0.05, 1.0);
        faint.normalization = BathNormalization::Prefactor;
        faint.far_field.prefactor = 1e-14;
        let weak = cavity_current(&m, &faint, &numerics).unwrap().j_left;
        assert!((weak - plain).abs() < 1e-8 * plain.abs(), "{weak} vs {plain}");
    }
}

#[test]
fn strong_coupling_suppresses_current() {
    let numerics = NumericsSpec::default();
    for bias in [1.0, 3.0] {
        let m = junction(0.0, bias);
        let mut prev = f64::INFINITY;
        for alpha in [0.0, 0.2, 0.4, 0.8] {
            let r = cavity_current(&m, &CavityConfig::resonant(alpha, 0.05, 1.0), &numerics).unwrap();
            assert!(r.j_left <= prev, "V={bias} α={alpha}: {} > {prev}", r.j_left);
            assert!(r.conservation_residual < 1e-4 * 0.01);
            prev = r.j_left;
        }
    }
}
