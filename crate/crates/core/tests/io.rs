use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::random_form;
use ncg_twist::io::{parse_json, to_json_pretty, FormJson, TripleJson};
use ncg_twist::opcore::compare;
use ncg_twist::sampling::rng;
use ncg_twist::{Error, Side, Tolerance};
use proptest::prelude::*;

#[test]
fn unknown_fields_are_rejected() {
    let mut v: serde_json::Value =
        serde_json::from_str(&to_json_pretty(&TripleJson::from_triple(&fixtures::two_point(), None))).unwrap();
    v["colour"] = serde_json::json!("blue");
    match parse_json::<TripleJson>(&v.to_string()) {
        Err(Error::Schema { message, .. }) => assert!(message.contains("colour"), "{message}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn null_entries_are_rejected() {
    let text = to_json_pretty(&TripleJson::from_triple(&fixtures::two_point(), None));
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["dirac"][0][0] = serde_json::Value::Null;
    assert!(parse_json::<TripleJson>(&v.to_string()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn triples_round_trip(variant in 0usize..3, n in 1usize..4, seed in any::<u64>()) {
        let v = [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd][variant];
        let t = fixtures::fuzzy(v, n, seed).unwrap();
        let tol = Tolerance::default();
        let text = to_json_pretty(&TripleJson::from_triple(&t, Some("x")));
        let back = parse_json::<TripleJson>(&text).unwrap().build(&tol).unwrap();
        prop_assert_eq!(back.dirac(), t.dirac());
        prop_assert_eq!(back.real_structure().unitary_part(), t.real_structure().unitary_part());
        prop_assert_eq!(back.signs(), t.signs());
        prop_assert_eq!(back.twist().perm(), t.twist().perm());
    }

    #[test]
    fn forms_round_trip(seed in any::<u64>(), terms in 1usize..4) {
        let t = fixtures::fuzzy(FuzzyVariant::Ko6, 2, 7).unwrap();
        let tol = Tolerance::default();
        let w = random_form(&t, &mut rng(seed), terms, Side::Plain, &tol).unwrap();
        let text = to_json_pretty(&FormJson::from_form(&w));
        let back = parse_json::<FormJson>(&text).unwrap().build(&t, &tol).unwrap();
        prop_assert_eq!(back.pairs().len(), terms);
        prop_assert!(compare(back.value(), w.value(), &tol).pass());
    }
}
