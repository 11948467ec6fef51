use std::fs;

use intrisk_core::input::{load_dual_sample, load_scenarios, SetConfig};
use intrisk_core::{
    altered_position, build_report, coherent_dual_set, convex_upper_bound, expected_shortfall,
    intrinsic_dual, intrinsic_risk, membership_via_separation, monetary_from_intrinsic,
    monetary_risk, penalty, probability_below, value_at_risk, AcceptanceSet, DualMeasure,
    EligibleAsset, IntrinsicMethod, Payoff, Position, RiskError, ScenarioSpace,
};

fn demo() -> (ScenarioSpace, EligibleAsset, Position) {
    let space = ScenarioSpace::uniform(4).unwrap();
    let s = EligibleAsset::risk_free(4, 1.0, 1.0).unwrap();
    let x = Position::new(10.0, Payoff::new(vec![-10.0, -2.0, 1.0, 5.0]).unwrap()).unwrap();
    (space, s, x)
}

#[test]
fn var_demo_end_to_end() {
    let (space, s, x) = demo();
    assert_eq!(probability_below(&space, x.payoff(), 0.0).unwrap(), 0.5);
    assert_eq!(value_at_risk(&space, x.payoff(), 0.25).unwrap(), 2.0);
    let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
    let rho = monetary_risk(&set, &s, x.payoff()).unwrap();
    assert!((rho.value - 2.0).abs() < 1e-12);
    let r = intrinsic_risk(&set, &s, &x).unwrap();
    assert_eq!(r.method, IntrinsicMethod::Bisection);
    assert!((r.value - 1.0 / 6.0).abs() < 1e-12);
    assert!((monetary_from_intrinsic(&x, r.value).unwrap() - 2.0).abs() < 1e-10);
    let altered = altered_position(&x, &s, &r).unwrap();
    assert!(set.is_acceptable(altered.payoff()).unwrap());
}

#[test]
fn es_demo_end_to_end() {
    let (space, s, x) = demo();
    assert_eq!(expected_shortfall(&space, x.payoff(), 0.5).unwrap(), 6.0);
    let set = AcceptanceSet::expected_shortfall(&space, 0.5).unwrap();
    let rho = monetary_risk(&set, &s, x.payoff()).unwrap();
    assert!((rho.value - 6.0).abs() < 1e-12);
    let r = intrinsic_risk(&set, &s, &x).unwrap().value;
    let bound = convex_upper_bound(&set, &x, &rho).unwrap();
    assert!((r - 0.375).abs() < 1e-12 && (bound - r).abs() < 1e-8);

    let vertices = coherent_dual_set(&set).unwrap();
    assert_eq!(vertices.len(), 6);
    let dual = intrinsic_dual(&set, &s, &x, &vertices).unwrap();
    assert!((dual.value - 0.375).abs() < 1e-12);
    assert!(!membership_via_separation(&set, x.payoff(), &vertices).unwrap());

    let half = DualMeasure::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
    assert_eq!(penalty(&set, &half).unwrap().value, 0.0);
    assert!(penalty(&set, &DualMeasure::point_mass(4, 0).unwrap())
        .unwrap()
        .value
        .is_infinite());
}

#[test]
fn report_for_var_demo() {
    let (space, s, x) = demo();
    let set = AcceptanceSet::value_at_risk(&space, 0.25).unwrap();
    let rep = build_report(&set, &s, &x, &s).unwrap();
    assert!((rep.capital.intrinsic - 10.0 / 6.0).abs() < 1e-10);
    assert!((rep.capital.traditional - 2.0).abs() < 1e-12);
    // the benchmark is the asset itself, so the excess returns are not constant
    assert!(!rep.sharpe.intrinsic.degenerate);
}

#[test]
fn loads_json_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("demo.json");
    fs::write(
        &json,
        r#"{"probabilities": [0.25, 0.25, 0.25, 0.25],
            "positions": {"X": {"initial_value": 10, "payoff": [-10, -2, 1, 5]}},
            "assets": {"S": {"initial_price": 1, "payoff": [1, 1, 1, 1]}}}"#,
    )
    .unwrap();
    let csv = dir.path().join("demo.csv");
    fs::write(&csv, "scenario,probability,X,S\na,0.25,-10,1\nb,0.25,-2,1\nc,0.25,1,1\nd,0.25,5,1\n").unwrap();
    fs::write(dir.path().join("demo.meta.json"), r#"{"positions": {"X": 10}, "assets": {"S": 1}}"#).unwrap();
    let set_path = dir.path().join("var.json");
    fs::write(&set_path, r#"{"kind": "var", "alpha": 0.25}"#).unwrap();

    let from_json = load_scenarios(&json, None).unwrap();
    let from_csv = load_scenarios(&csv, None).unwrap();
    assert_eq!(from_json.position("X").unwrap(), from_csv.position("X").unwrap());
    let set = SetConfig::load(&set_path).unwrap().build(&from_csv.space, "var.json").unwrap();
    let r = intrinsic_risk(&set, from_csv.asset("S").unwrap(), from_csv.position("X").unwrap()).unwrap();
    assert!((r.value - 1.0 / 6.0).abs() < 1e-12);

    let q = dir.path().join("q.json");
    fs::write(&q, r#"{"measures": [[0.5, 0.5, 0, 0]]}"#).unwrap();
    assert_eq!(load_dual_sample(&q, &from_json.space).unwrap().len(), 1);

    let missing = load_scenarios(&dir.path().join("nope.json"), None).unwrap_err();
    assert!(matches!(missing, RiskError::Input { .. }));
}
