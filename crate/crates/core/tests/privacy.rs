//! Estimates and placements for a slot may only depend on requests issued
//! before it. Changing the trace from slot `tau` on must leave every earlier
//! message and decision untouched.

use revcache::baselines::PolicyKind;
use revcache::sim::{
    prepare_users, prepare_workload, simulate_policy, test_demands, PredictorMode, RunConfig,
    Workload,
};

fn config(mode: PredictorMode) -> RunConfig {
    let mut cfg = RunConfig {
        users: 4,
        seed: 21,
        ..RunConfig::default()
    };
    cfg.workload.history_days = 10;
    cfg.workload.test_days = 3;
    cfg.predictor.mode = mode;
    cfg.predictor.fl.rounds = 2;
    cfg.predictor.hidden = vec![8];
    cfg
}

/// Rewrites every request from mini-slot `start` on.
fn perturbed(work: &Workload, start: usize) -> Workload {
    let mut out = work.clone();
    let f = work.catalog.num_files();
    for row in &mut out.trace.requests {
        for (t, r) in row.iter_mut().enumerate().skip(start) {
            *r = (*r + 1 + t % 7) % f;
        }
    }
    out
}

fn audit(mode: PredictorMode) {
    let cfg = config(mode);
    let work = prepare_workload(&cfg).unwrap();
    let test = work.trace.partition.test_slots();
    let tau = test.start + test.len() / 2;
    let changed = perturbed(&work, tau * cfg.slot_len);
    assert_ne!(changed.trace.requests, work.trace.requests);

    let users = prepare_users(&cfg, &work).unwrap();
    let users_changed = prepare_users(&cfg, &changed).unwrap();
    let demands = test_demands(&cfg, &work, &users).unwrap();
    let demands_changed = test_demands(&cfg, &changed, &users_changed).unwrap();
    let before = tau - test.start;
    assert_eq!(demands[..before], demands_changed[..before]);
    assert_ne!(demands[before..], demands_changed[before..]);

    for policy in PolicyKind::ALL {
        let (mut rows, mut rows_changed) = (Vec::new(), Vec::new());
        let a = simulate_policy(&cfg, &work, &demands, policy, 24, Some(&mut rows)).unwrap();
        let b = simulate_policy(&cfg, &changed, &demands_changed, policy, 24, Some(&mut rows_changed))
            .unwrap();
        assert_eq!(a[..before], b[..before], "{policy}");
        let early = |r: &&revcache::sim::DecisionRow| r.slot < tau;
        assert!(
            rows.iter().filter(early).eq(rows_changed.iter().filter(early)),
            "{policy}: decisions before the perturbation changed"
        );
    }
}

#[test]
fn trained_predictor_sees_only_the_past() {
    audit(PredictorMode::Trained);
}

#[test]
fn oracle_predictor_sees_only_its_own_slot() {
    audit(PredictorMode::Oracle);
}
