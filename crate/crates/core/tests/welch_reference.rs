use serde::Deserialize;
use straddled::analysis::{welch_t_one_tailed, welch_test};

#[derive(Deserialize)]
struct Case {
    a: Vec<f64>,
    b: Vec<f64>,
    t: f64,
    df: f64,
    p: f64,
}

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

#[test]
fn matches_reference_p_values() {
    let text = include_str!("data/welch_reference.json");
    let fixture: Fixture = serde_json::from_str(text).unwrap();
    assert_eq!(fixture.cases.len(), 50);
    for (i, case) in fixture.cases.iter().enumerate() {
        let got = welch_test(&case.a, &case.b).unwrap();
        assert!((got.p_value - case.p).abs() < 1e-9, "case {i}: p {} vs {}", got.p_value, case.p);
        assert!((got.t - case.t).abs() < 1e-9 * case.t.abs().max(1.0), "case {i}: t");
        assert!((got.df - case.df).abs() < 1e-9 * case.df, "case {i}: df");
    }
}

#[test]
fn documented_examples() {
    let a = [0.3, 0.1, 0.4, 0.15];
    assert_eq!(welch_t_one_tailed(&a, &a).unwrap(), 0.5);
    assert!(welch_t_one_tailed(&[0.0; 4], &[1.0, 1.1, 0.9, 1.05]).unwrap() < 0.001);
    let shifted: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
    assert!(welch_t_one_tailed(&shifted, &a).unwrap() > 0.999);
    assert_eq!(welch_t_one_tailed(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap(), 0.5);
    assert!(welch_t_one_tailed(&[1.0], &a).is_err());
}
