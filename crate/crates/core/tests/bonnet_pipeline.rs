mod common;

use bonnet_core::bonnet::{
    bonnet_check, default_tolerance, solve_t, Classification, PfaffianSystem,
};
use bonnet_core::frame::{identity_suite, NormalOrientation};
use common::*;

fn classify(n: usize, o: NormalOrientation) -> (Classification, f64, f64) {
    let b = bundle(&quadratic_jets(n), o);
    let rep = bonnet_check(
        &PfaffianSystem::from_bundle(&b),
        default_tolerance(&identity_suite(&b)),
    );
    (rep.classification, rep.norm_r1, rep.norm_r2)
}

#[test]
fn cylinder_is_cmc_bonnet_and_t_stays_constant() {
    for r in [1.0, 2.0] {
        let b = bundle(&cylinder_jets(r, 33), NormalOrientation::Standard);
        let sys = PfaffianSystem::from_bundle(&b);
        let rep = bonnet_check(&sys, default_tolerance(&identity_suite(&b)));
        assert_eq!(rep.classification, Classification::CMCFlatNormalBonnet);
        let sol = solve_t(&sys, 2.0);
        assert!(sol.path_residual < 1e-10);
        assert!(sol.t.values.iter().all(|v| (v - 2.0).abs() < 1e-10));
    }
}

#[test]
fn cylinder_at_zero_tolerance_is_not_bonnet() {
    let b = bundle(&cylinder_jets(1.0, 33), NormalOrientation::Standard);
    let rep = bonnet_check(&PfaffianSystem::from_bundle(&b), 0.0);
    assert!(!rep.classification.is_bonnet());
}

#[test]
fn classification_invariant_under_normal_flip() {
    let (c1, a1, b1) = classify(65, NormalOrientation::Standard);
    let (c2, a2, b2) = classify(65, NormalOrientation::Flipped);
    assert_eq!(c1, c2);
    assert!((a1 - a2).abs() < 1e-9 && (b1 - b2).abs() < 1e-9);
}

#[test]
fn flip_negates_t() {
    let std =
        PfaffianSystem::from_bundle(&bundle(&quadratic_jets(33), NormalOrientation::Standard));
    let flip =
        PfaffianSystem::from_bundle(&bundle(&quadratic_jets(33), NormalOrientation::Flipped));
    let (a, b) = (solve_t(&std, 2.0), solve_t(&flip, -2.0));
    for (x, y) in a.t.values.iter().zip(&b.t.values) {
        assert!((x + y).abs() < 1e-9, "{x} {y}");
    }
}

#[test]
fn quadratic_graph_fails_second_condition() {
    let (c, r1, r2) = classify(65, NormalOrientation::Standard);
    assert_eq!(c, Classification::NotIntegrable);
    assert!(r1 < 1e-5, "{r1}");
    assert!(r2 > 0.1, "{r2}");
}
