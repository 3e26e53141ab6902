//! Both fitting routes checked against an independent oracle: a
//! golden-section maximization of each model's literal log-likelihood
//! that shares no code with the library's closed forms or IRLS engine.

mod support;

use regscan::stats::{llr_glm, Evaluator, ModelSpec};
use regscan::data::RegionTable;
use regscan::zones::Zone;
use support::{oracle_llr, random_instance, rng};

#[test]
fn closed_forms_match_numeric_maximization() {
    let mut r = rng(41);
    for spec in ModelSpec::all_closed() {
        let mut worst: f64 = 0.0;
        for _ in 0..150 {
            let inst = random_instance(&mut r, spec.family, spec.approach);
            let fit = Evaluator::new(&inst.table, spec)
                .unwrap()
                .evaluate(&inst.zone)
                .unwrap();
            let want = oracle_llr(&inst.table, spec.family, spec.approach, &inst.zone);
            worst = worst.max((fit.llr - want).abs());
        }
        assert!(worst < 1e-7, "{spec}: worst |closed - numeric| = {worst:.3e}");
    }
}

#[test]
fn glm_route_matches_numeric_maximization() {
    let mut r = rng(42);
    for spec in ModelSpec::all_closed() {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let inst = random_instance(&mut r, spec.family, spec.approach);
            let fit = llr_glm(&inst.table, spec.family, spec.approach, &inst.zone).unwrap();
            let want = oracle_llr(&inst.table, spec.family, spec.approach, &inst.zone);
            worst = worst.max((fit.llr - want).abs());
        }
        assert!(worst < 1e-7, "glm-{spec}: worst |irls - numeric| = {worst:.3e}");
    }
}

/// Boundary instances where the zone effect runs off to infinity: the
/// supremum is still finite and both routes must land on it.
#[test]
fn boundary_cases_match_numeric_maximization() {
    use regscan::stats::{Approach, Family};

    let ids = |n: usize| (0..n).map(|i| format!("r{i}")).collect::<Vec<_>>();
    let coords = |n: usize| (0..n).map(|i| [i as f64, 0.0]).collect::<Vec<_>>();

    // A zone with zero events: supremum 0 for the in-zone term, ratio
    // equal to the expected count inside.
    let table = RegionTable::new(ids(4), coords(4), vec![0.0, 0.0, 3.0, 1.0])
        .unwrap()
        .with_baseline(vec![1.5, 0.75, 1.0, 1.0])
        .unwrap();
    let zone = Zone::new(vec![0, 1]).unwrap();
    let spec = ModelSpec::closed(Family::Poisson, Approach::Expectation);
    let closed = Evaluator::new(&table, spec).unwrap().evaluate(&zone).unwrap();
    let numeric = oracle_llr(&table, Family::Poisson, Approach::Expectation, &zone);
    assert!((closed.llr - 2.25).abs() < 1e-9, "expected B_in, got {}", closed.llr);
    assert!((closed.llr - numeric).abs() < 1e-7);

    // A fully saturated Bernoulli zone: ratio n_in * ln 2.
    let table = RegionTable::new(ids(4), coords(4), vec![1.0, 1.0, 0.0, 1.0]).unwrap();
    let zone = Zone::new(vec![0, 1]).unwrap();
    let spec = ModelSpec::closed(Family::Bernoulli, Approach::Expectation);
    let closed = Evaluator::new(&table, spec).unwrap().evaluate(&zone).unwrap();
    let numeric = oracle_llr(&table, Family::Bernoulli, Approach::Expectation, &zone);
    assert!((closed.llr - 2.0 * std::f64::consts::LN_2).abs() < 1e-9);
    assert!((closed.llr - numeric).abs() < 1e-7);
}
