use serde_json::Value;

use super::*;
use crate::config::Params;

fn ctx(seed: u64, workers: usize, pairs: &[(&str, Value)]) -> RunContext {
    let params = Params::from_pairs(pairs.iter().map(|(k, v)| (*k, v.clone())));
    RunContext::new(seed, params, workers).unwrap()
}

fn small_hitting() -> Vec<(&'static str, Value)> {
    vec![
        ("oracle_max_n", Value::from(4)),
        ("excursions", Value::from(2000)),
        ("visit_replicas", Value::from(500)),
        ("nonvisit_replicas", Value::from(500)),
        ("deep_n", Value::from(8)),
        ("deep_replicas", Value::from(500)),
    ]
}

#[test]
fn registry_holds_every_experiment() {
    let r = ExperimentRegistry::default();
    let mut want = vec![
        "cover", "phase-ab", "iso-test", "moments", "hitting", "bessel", "martingale", "negcorr", "zlambda",
        "tau-clt", "rhat", "full-suite",
    ];
    want.sort();
    assert_eq!(r.names(), want);
    for name in SUITE_ORDER {
        assert!(r.get(name).is_ok(), "{name}");
    }
}

#[test]
fn unknown_experiment_is_an_error() {
    let r = ExperimentRegistry::default();
    assert!(matches!(r.get("nope"), Err(Error::UnknownExperiment(_))));
}

#[test]
fn worker_count_does_not_change_the_report() {
    let r = ExperimentRegistry::default();
    let a = r.run("hitting", &ctx(5, 1, &small_hitting())).unwrap();
    let b = r.run("hitting", &ctx(5, 3, &small_hitting())).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn seed_changes_the_samples() {
    let r = ExperimentRegistry::default();
    let a = r.run("hitting", &ctx(5, 1, &small_hitting())).unwrap();
    let b = r.run("hitting", &ctx(6, 1, &small_hitting())).unwrap();
    assert_ne!(a.stat("visit-count").unwrap().values, b.stat("visit-count").unwrap().values);
}

#[test]
fn effective_params_and_unused_keys_are_recorded() {
    let r = ExperimentRegistry::default();
    let mut pairs = small_hitting();
    pairs.push(("bogus", Value::from(1)));
    let rep = r.run("hitting", &ctx(1, 1, &pairs)).unwrap();
    assert_eq!(rep.params["n"], Value::from(8));
    assert!(rep.notes.iter().any(|n| n.contains("bogus")));
}

#[test]
fn suite_scopes_parameters_by_prefix() {
    let r = ExperimentRegistry::default();
    let pairs = vec![
        ("only", Value::from("negcorr")),
        ("negcorr.depth", Value::from(3)),
        ("negcorr.draws", Value::from(500)),
    ];
    let rep = r.run("full-suite", &ctx(2, 1, &pairs)).unwrap();
    assert_eq!(rep.params["negcorr.depth"], Value::from(3));
    assert!(rep.tests.iter().all(|t| t.name.starts_with("negcorr.")));
    assert!(rep.test("negcorr.omega-exact").is_some());
}

#[test]
fn scale_shrinks_default_counts() {
    let c = ctx(1, 1, &[("scale", Value::from(0.01))]);
    assert_eq!(scaled(&c, "replicas", 20_000, 10).unwrap(), 200);
    assert_eq!(scaled(&c, "other", 100, 10).unwrap(), 10);
    let c = ctx(1, 1, &[("scale", Value::from(0.01)), ("replicas", Value::from(7))]);
    assert_eq!(scaled(&c, "replicas", 20_000, 10).unwrap(), 7);
}
