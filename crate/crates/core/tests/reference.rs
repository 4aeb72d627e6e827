//! Optimal values frozen from an independent general-purpose conic solver
//! (complex Hermitian SDP, interior point, ~1e-9 accuracy) run on the same
//! seeded channel draws.

use jsac_sdr::scenario::{generate, stack, ScenarioConfig};
use jsac_sdr::sdp::solve;

const CONIC_ACCURACY: f64 = 1e-7;

fn check(config: ScenarioConfig, reference: f64) {
    let s = generate(&config).unwrap();
    let sol = solve(&stack(&s)).unwrap();
    let rel = (sol.primal_value - reference).abs() / reference;
    assert!(
        rel <= CONIC_ACCURACY,
        "{config:?}: got {}, reference {reference}, rel {rel:e}",
        sol.primal_value
    );
}

#[test]
fn seed_42_half_weight() {
    check(ScenarioConfig::default(), 15.45171925844857);
}

#[test]
fn seed_42_sensing_leaning() {
    check(ScenarioConfig::default().with_alpha(0.3), 21.2520159513992);
}

#[test]
fn seed_7_two_antennas() {
    let c = ScenarioConfig {
        n_antennas: 2,
        seed: 7,
        alpha: 0.8,
        ..Default::default()
    };
    check(c, 4.7643990416387645);
}

#[test]
fn unequal_noise_and_caps() {
    let c = ScenarioConfig {
        sigma1_sq: 0.7,
        sigma2_sq: 1.8,
        p1_max: 2.0,
        p2_max: 0.5,
        alpha: 0.6,
        ..Default::default()
    };
    check(c, 9.724790610246771);
}

#[test]
fn seed_42_matches_this_solver_value() {
    let s = generate(&ScenarioConfig::default()).unwrap();
    let v = solve(&stack(&s)).unwrap().primal_value;
    assert!((v - 15.451719283709814).abs() <= 1e-12 * v);
}
