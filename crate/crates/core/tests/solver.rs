use mhdvac::ring::RingPreset;
use mhdvac::solver::mms::{convergence_study, ConvergenceSetup};
use mhdvac::solver::modal::{mode_growth, scan, ModalSetup};
use mhdvac::state::{EosModel, PhysicsParams};

const PARAMS: PhysicsParams = PhysicsParams {
    epsilon: 0.25,
    sigma_tension: 0.1,
};

#[test]
fn trivial_ring_is_neutral() {
    let setup = ModalSetup {
        n1: 30,
        ..ModalSetup::default()
    };
    for k in [[1.0, 0.0], [2.0, 3.0], [0.0, 6.0]] {
        let m = mode_growth(&RingPreset::Trivial { q0: 1.0 }, &EosModel::default(), &PARAMS, k, &setup)
            .unwrap();
        assert!(m.growth_rate.abs() <= 1e-6, "{k:?}: {}", m.growth_rate);
    }
}

#[test]
fn strong_normal_field_grows_faster_at_short_waves_without_tension() {
    let setup = ModalSetup {
        n1: 30,
        ..ModalSetup::default()
    };
    let p = PhysicsParams {
        sigma_tension: 0.0,
        ..PARAMS
    };
    let rows = scan(
        &RingPreset::BigE { q0: 1.0, e1: 0.6 },
        &EosModel::default(),
        &p,
        &[1.0, 2.0, 4.0],
        [1.0, 0.0],
        &setup,
    )
    .unwrap();
    assert!(rows[0].growth_rate > 0.1);
    assert!(rows.windows(2).all(|w| w[1].growth_rate > w[0].growth_rate));
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let setup = ConvergenceSetup {
        levels: vec![(8, 8), (16, 16)],
        t_end: 0.1,
        ..ConvergenceSetup::default()
    };
    let preset = RingPreset::Shear {
        q0: 1.0,
        v2: 0.5,
        hf: 0.3,
        hv: 0.4,
    };
    let levels = convergence_study(&preset, &EosModel::default(), &PARAMS, &setup).unwrap();
    assert!(levels[1].error < levels[0].error);
    let order = levels[1].order.unwrap();
    assert!(order > 1.6, "order {order}");
}

#[test]
fn invalid_study_is_rejected() {
    let setup = ConvergenceSetup {
        levels: vec![],
        ..ConvergenceSetup::default()
    };
    assert!(convergence_study(&RingPreset::Trivial { q0: 1.0 }, &EosModel::default(), &PARAMS, &setup).is_err());
}
