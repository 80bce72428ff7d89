use mhcdma::experiment::{run_experiment, scenario_for, ExperimentSpec, Mode, RunStatus};
use mhcdma::game::{nash_solve, GameConfig};
use mhcdma::social::{realize, social_optimum, WeightVector};
use mhcdma::{NetworkConfig, ReceiverKind};

fn small_spec(seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        network: NetworkConfig {
            node_count: 30,
            ..Default::default()
        },
        processing_gains: vec![32, 64],
        repetitions: 3,
        master_seed: seed,
        ..Default::default()
    }
}

#[test]
fn experiments_are_reproducible_and_seed_sensitive() {
    let a = run_experiment(&small_spec(1)).unwrap();
    let b = run_experiment(&small_spec(1)).unwrap();
    let c = run_experiment(&small_spec(2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 3 * 2 * 3 * 2);
}

#[test]
fn rows_match_direct_solver_calls() {
    let spec = small_spec(4);
    let rows = run_experiment(&spec).unwrap();
    let row = rows
        .iter()
        .find(|r| r.processing_gain == 64 && r.receiver == ReceiverKind::Mf && r.mode == Mode::SocialOptimum)
        .unwrap();
    let sc = scenario_for(&spec.network, row.seed, 64).unwrap();
    let cfg = GameConfig {
        receiver: ReceiverKind::Mf,
        ..spec.game.clone()
    };
    let sol = social_optimum(ReceiverKind::Mf, &WeightVector::uniform(30), &sc, &cfg).unwrap();
    assert_eq!(row.mean_utility, realize(&sol, &sc, &cfg).unwrap().mean_utility());

    let ne = nash_solve(&sc, &cfg).unwrap();
    let nc = rows
        .iter()
        .find(|r| r.seed == row.seed && r.processing_gain == 64 && r.receiver == ReceiverKind::Mf && r.mode == Mode::Noncooperative)
        .unwrap();
    assert_eq!(nc.mean_utility, ne.mean_utility());
    assert_eq!(nc.converged, RunStatus::True);
}

#[test]
fn cooperation_never_loses_for_balanced_receivers() {
    // With equal weights the balanced optimum can only match or beat the equilibrium
    // in the objective it maximizes, up to the power cap.
    let spec = small_spec(6);
    let sc = scenario_for(&spec.network, spec.network_seed(0), 64).unwrap();
    for kind in [ReceiverKind::Mf, ReceiverKind::De] {
        let cfg = GameConfig {
            receiver: kind,
            ..Default::default()
        };
        let sol = social_optimum(kind, &WeightVector::uniform(30), &sc, &cfg).unwrap();
        let op = realize(&sol, &sc, &cfg).unwrap();
        let ne = nash_solve(&sc, &cfg).unwrap();
        if op.capped.is_empty() && ne.capped.is_empty() {
            assert!(op.mean_utility() >= ne.mean_utility() * (1.0 - 1e-9), "{kind}");
        }
    }
}
