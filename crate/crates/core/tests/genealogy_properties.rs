use ips_genealogy::genealogy::{
    ancestral_partition, brute_force_transition, coarsenings, mohle_transition,
    mohle_transition_ratio, partition_at, set_partitions, Partition,
};
use ips_genealogy::simulator::{offspring_counts, simulate, DiscreteModel, OffspringCounts};
use proptest::prelude::*;

fn counts(parents: &[usize], n: usize) -> OffspringCounts {
    offspring_counts(parents, n).unwrap()
}

fn random_model(k: usize, raw: &[f64]) -> DiscreteModel {
    let take = |off: usize, len: usize| -> Vec<f64> {
        let v: Vec<f64> = raw[off..off + len].to_vec();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    };
    let initial_law = take(0, k);
    let kernel = (0..k).map(|i| take(k + i * k, k)).collect();
    let potential = raw[k + k * k..k + k * k + k].to_vec();
    DiscreteModel::new(
        (0..k).map(|i| format!("s{i}")).collect(),
        initial_law,
        kernel,
        potential,
    )
    .unwrap()
}

fn model_strategy() -> impl Strategy<Value = DiscreteModel> {
    (1usize..=4).prop_flat_map(|k| {
        prop::collection::vec(0.05f64..5.0, k + k * k + k)
            .prop_map(move |raw| random_model(k, &raw))
    })
}

#[test]
fn transition_rows_sum_to_one_for_all_small_cases() {
    for n_particles in 1..=6usize {
        for n in 1..=n_particles.min(4) {
            for xi in set_partitions(n) {
                // Every offspring vector of length N summing to N with at most 6 entries.
                let mut nu = vec![0usize; n_particles];
                loop {
                    if nu.iter().sum::<usize>() == n_particles {
                        let nu = OffspringCounts::new(nu.clone());
                        let total: f64 = coarsenings(&xi)
                            .iter()
                            .map(|eta| mohle_transition(&xi, eta, &nu, n_particles).unwrap())
                            .sum();
                        assert!(
                            (total - 1.0).abs() < 1e-10,
                            "xi = {xi}, nu = {nu:?}: {total}"
                        );
                    }
                    let mut i = 0;
                    while i < n_particles && nu[i] == n_particles {
                        nu[i] = 0;
                        i += 1;
                    }
                    if i == n_particles {
                        break;
                    }
                    nu[i] += 1;
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_enumeration(
        n_particles in 2usize..=6,
        parents in prop::collection::vec(0usize..6, 6),
        labels in prop::collection::vec(0usize..4, 4),
    ) {
        let parents: Vec<usize> = parents[..n_particles].iter().map(|p| p % n_particles).collect();
        let nu = counts(&parents, n_particles);
        let n = labels.len().min(n_particles);
        let xi = Partition::from_labels(&labels[..n]);
        for eta in coarsenings(&xi) {
            let a = mohle_transition(&xi, &eta, &nu, n_particles).unwrap();
            let b = brute_force_transition(&xi, &eta, &nu, n_particles).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "xi = {}, eta = {}: {} vs {}", xi, eta, a, b);
        }
    }

    #[test]
    fn transition_is_invariant_under_relabelling(
        perm in Just((1usize..=4).collect::<Vec<_>>()).prop_shuffle(),
        nu_perm in Just((0usize..5).collect::<Vec<_>>()).prop_shuffle(),
        parents in prop::collection::vec(0usize..5, 5),
        labels in prop::collection::vec(0usize..4, 4),
    ) {
        let nu = counts(&parents, 5);
        let shuffled = OffspringCounts::new(nu_perm.iter().map(|&i| nu.0[i]).collect());
        let xi = Partition::from_labels(&labels);
        for eta in coarsenings(&xi) {
            let base = mohle_transition_ratio(&xi, &eta, &nu, 5).unwrap();
            let moved = mohle_transition_ratio(&xi.relabel(&perm).unwrap(), &eta.relabel(&perm).unwrap(), &nu, 5).unwrap();
            let reordered = mohle_transition_ratio(&xi, &eta, &shuffled, 5).unwrap();
            prop_assert_eq!(base, moved);
            prop_assert_eq!(base, reordered);
        }
    }

    #[test]
    fn partitions_only_coarsen_backward(model in model_strategy(), n_particles in 1usize..8, steps in 0usize..6, seed: u64) {
        let traj = simulate(&model, n_particles, steps, seed).unwrap();
        for n in 1..=n_particles {
            let mut prev = partition_at(&traj, n, 0).unwrap();
            prop_assert_eq!(&prev, &Partition::discrete(n));
            for s in 1..=steps {
                let next = partition_at(&traj, n, s).unwrap();
                prop_assert!(next.is_coarsening_of(&prev), "s = {}: {} after {}", s, next, prev);
                prev = next;
            }
        }
    }

    #[test]
    fn permuting_leaves_permutes_partitions(
        model in model_strategy(),
        perm in Just((0usize..6).collect::<Vec<_>>()).prop_shuffle(),
        steps in 1usize..5,
        seed: u64,
    ) {
        let traj = simulate(&model, 6, steps, seed).unwrap();
        let mut permuted = traj.ancestors.clone();
        let last = permuted.last_mut().unwrap();
        *last = perm.iter().map(|&k| traj.ancestors[steps - 1][k]).collect();
        // New leaf k is old leaf perm[k].
        let to_old: Vec<usize> = perm.iter().map(|&k| k + 1).collect();
        for s in 0..=steps {
            let old = ancestral_partition(&traj.ancestors, 6, s).unwrap();
            let new = ancestral_partition(&permuted, 6, s).unwrap();
            prop_assert_eq!(new.relabel(&to_old).unwrap(), old);
        }
    }
}
