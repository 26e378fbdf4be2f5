//! Conditioned frequencies from the general simulator against the exact
//! two-state calculator.

use ips_genealogy::counterexample::{exact_conditional, mc_conditional};
use ips_genealogy::model::CounterexampleParams;
use ips_genealogy::simulator::{offspring_counts, simulate, DiscreteModel};
use ips_genealogy::stats::wald_std_err;

fn conditioned_share(alpha: f64, p_a: f64, p_b: f64, n: usize, runs: u64) -> (f64, f64) {
    let model = DiscreteModel::two_state(alpha, p_a, p_b).unwrap();
    let (mut kept, mut hits) = (0u64, 0u64);
    for seed in 0..runs {
        let traj = simulate(&model, n, 2, seed).unwrap();
        // Generation 0 is the earliest time, so a_2 = ancestors[0], a_1 = ancestors[1].
        let nu2 = offspring_counts(&traj.ancestors[0], n).unwrap();
        let nu1 = offspring_counts(&traj.ancestors[1], n).unwrap();
        if nu2.0[0] == 2 && nu1.0[0] == 2 {
            kept += 1;
            hits += u64::from(traj.ancestors[0][0] == 0);
        }
    }
    (hits as f64 / kept as f64, wald_std_err(hits, kept))
}

#[test]
fn general_simulator_agrees_with_exact_value() {
    for (n, runs) in [(3usize, 60_000u64), (4, 60_000)] {
        let exact =
            exact_conditional(&CounterexampleParams::new(0.5, 1.0, 0.075).unwrap(), n).unwrap();
        let (share, se) = conditioned_share(0.5, 1.0, 0.075, n, runs);
        assert!(
            (share - exact).abs() < 3.0 * se,
            "N = {n}: {share} +- {se} vs {exact}"
        );
    }
}

#[test]
fn uniform_case_matches_two_over_n() {
    let params = CounterexampleParams::new(0.4, 2.0, 2.0).unwrap();
    let est = mc_conditional(&params, 10, 1_000_000, 12).unwrap();
    assert!((est.p_hat - 0.2).abs() < 3.0 * est.std_err, "{est:?}");
    assert!(est.target_hits <= est.conditioned_hits && est.conditioned_hits <= est.raw_reps);
}
