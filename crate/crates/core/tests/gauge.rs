use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::{hermitian_part, random_form};
use ncg_twist::gauge::{
    adjoint_twist_residual, certificate_raw, gauge_transform_potential, opposite_gauge_bridge,
    selfadjointness_certificate, twist_of_adjoint, twisted_conjugate_dirac,
};
use ncg_twist::morita::fluctuate;
use ncg_twist::opcore::compare;
use ncg_twist::sampling::rng;
use ncg_twist::{GaugeUnitary, RealTwistedTriple, Side, Tolerance};
use proptest::prelude::*;

fn fixture(k: usize) -> RealTwistedTriple {
    match k {
        0 => fixtures::fuzzy(FuzzyVariant::Ko0, 2, 7).unwrap(),
        1 => fixtures::fuzzy(FuzzyVariant::Ko6, 2, 7).unwrap(),
        2 => fixtures::fuzzy(FuzzyVariant::Odd, 2, 7).unwrap(),
        _ => fixtures::fuzzy_untwisted(2, 7).unwrap(),
    }
}

#[test]
fn non_unitaries_are_rejected() {
    let t = fixture(0);
    let tol = Tolerance::default();
    let a = t.algebra().random(&mut rng(3));
    assert!(GaugeUnitary::new(&t, a, &tol).is_err());
}

#[test]
fn untwisted_certificate_is_always_positive() {
    let t = fixture(3);
    let tol = Tolerance::default();
    let mut r = rng(4);
    for _ in 0..10 {
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let c = selfadjointness_certificate(&t, &g, None, &tol).unwrap();
        assert!(c.verdict && c.direct_verdict);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ad_is_unitary_and_its_twist_is_consistent(k in 0usize..4, seed in any::<u64>()) {
        let t = fixture(k);
        let tol = Tolerance::default();
        let g = GaugeUnitary::random(&t, &mut rng(seed), &tol).unwrap();
        prop_assert!(g.ad_unitarity_residual() <= 1e-12 * (t.dim() as f64).sqrt());
        prop_assert!(twist_of_adjoint(&t, &g, &tol).unwrap().order_residual.pass());
        prop_assert!(adjoint_twist_residual(&t, &g, &tol).unwrap().pass());
    }

    #[test]
    fn conjugated_fluctuation_is_the_gauged_fluctuation(k in 0usize..4, seed in any::<u64>()) {
        let t = fixture(k);
        let tol = Tolerance::default();
        let mut r = rng(seed);
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let d = fluctuate(&t, t.dirac(), w.value());
        let rep = twisted_conjugate_dirac(&t, &d, &w, &g, &tol).unwrap();
        prop_assert!(rep.identity.pass(), "{:?}", rep.identity);
        prop_assert!(rep.zero_form.pass());
        prop_assert!(opposite_gauge_bridge(&t, &w, &g, &tol).unwrap().pass());
    }

    #[test]
    fn gauge_action_composes(k in 0usize..4, seed in any::<u64>()) {
        let t = fixture(k);
        let tol = Tolerance::default();
        let mut r = rng(seed);
        let gu = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let gv = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let guv = GaugeUnitary::new(&t, gu.u() * gv.u(), &tol).unwrap();
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let stepwise = gauge_transform_potential(&t, &gauge_transform_potential(&t, &w, &gv, &tol).unwrap(), &gu, &tol).unwrap();
        let at_once = gauge_transform_potential(&t, &w, &guv, &tol).unwrap();
        prop_assert!(compare(stepwise.value(), at_once.value(), &tol).pass());
    }

    #[test]
    fn certificate_variants_agree(k in 0usize..4, seed in any::<u64>()) {
        let t = fixture(k);
        let tol = Tolerance::default();
        let mut r = rng(seed);
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let d = fluctuate(&t, t.dirac(), hermitian_part(&t, &w, &tol).unwrap().value());
        let c = certificate_raw(&t, &g, Some(&d), &tol).unwrap();
        prop_assert!(c.variants_agree && c.consistent);
        prop_assert_eq!(c.verdict, c.direct_verdict);
    }
}
