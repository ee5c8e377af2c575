use stacklab::experiments::{run_experiment, DYNAMICS_T, PAMD_T};
use stacklab::sim::read_metrics;

fn label<'a>(out: &'a [stacklab::experiments::RunOutcome], name: &str) -> &'a stacklab::SimResult {
    &out.iter().find(|o| o.label == name).unwrap().results[0]
}

#[test]
fn instance1_commits_on_the_pessimistic_side() {
    let out = run_experiment("instance1", &[0], None).unwrap();
    let x = label(&out, "paal").summary.committed.clone().unwrap();
    assert!((0.58..=0.6).contains(&x[0]), "{:?}", x);
}

#[test]
fn instance2_steering_beats_gradient_optimizer() {
    let out = run_experiment("instance2", &[0], None).unwrap();
    let paal = label(&out, "paal").mean_payoff_after(DYNAMICS_T / 2).unwrap();
    let oga = label(&out, "oga").mean_payoff_after(DYNAMICS_T / 2).unwrap();
    assert!(paal > oga, "paal {paal} oga {oga}");
}

#[test]
fn larger_margin_commits_further_from_the_value() {
    let out = run_experiment("pamd-kl", &[0], None).unwrap();
    let tail = |name| label(&out, name).mean_payoff_after(PAMD_T - PAMD_T / 10).unwrap();
    let (small, large) = (tail("pamd_d0.01"), tail("pamd_d0.05"));
    assert!(small > large, "d=0.01 {small}, d=0.05 {large}");
    assert!((2.0 - small).abs() < (2.0 - large).abs());
}

#[test]
fn experiment_csvs_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment("matching-pennies", &[1, 2], Some(dir.path())).unwrap();
    let (m, n, rows) = read_metrics(dir.path().join("paal_seed2.csv")).unwrap();
    assert_eq!((m, n), (2, 2));
    assert_eq!(rows.first().unwrap().t, 1);
    assert_eq!(rows.last().unwrap().t, DYNAMICS_T);
    let agg = std::fs::read_to_string(dir.path().join("oga_aggregate.csv")).unwrap();
    assert!(agg.lines().count() > 2);
}
