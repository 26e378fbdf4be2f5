use std::collections::HashMap;

use ips_genealogy::rng::UniformSource;
use ips_genealogy::simulator::{categorical_ancestors, offspring_counts, simulate, DiscreteModel};
use ips_genealogy::stats::chi_square_sf;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = DiscreteModel> {
    (1usize..=4).prop_flat_map(|k| {
        prop::collection::vec(0.05f64..5.0, k + k * k + k).prop_map(move |raw| {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            DiscreteModel::new(
                (0..k).map(|i| i.to_string()).collect(),
                norm(&raw[..k]),
                (0..k)
                    .map(|i| norm(&raw[k + i * k..k + (i + 1) * k]))
                    .collect(),
                raw[k + k * k..].to_vec(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_and_counts_are_consistent(model in model_strategy(), n in 1usize..20, steps in 0usize..5, seed: u64) {
        let traj = simulate(&model, n, steps, seed).unwrap();
        prop_assert_eq!(traj.positions.len(), steps + 1);
        prop_assert_eq!(traj.ancestors.len(), steps);
        for (pos, w) in traj.positions.iter().zip(&traj.weights) {
            let total: f64 = pos.iter().map(|&x| model.potential[x]).sum();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (&x, &wi) in pos.iter().zip(w) {
                prop_assert!((wi * total - model.potential[x]).abs() < 1e-9);
            }
        }
        for a in &traj.ancestors {
            prop_assert_eq!(offspring_counts(a, n).unwrap().total(), n);
        }
    }

    #[test]
    fn same_seed_same_trajectory(model in model_strategy(), n in 1usize..10, steps in 0usize..4, seed: u64) {
        prop_assert_eq!(simulate(&model, n, steps, seed).unwrap(), simulate(&model, n, steps, seed).unwrap());
    }
}

#[test]
fn uniform_two_way_draws_are_balanced() {
    let draws = categorical_ancestors(&[0.5, 0.5], 100_000, UniformSource::from_seed(5)).unwrap();
    let share = draws.iter().filter(|&&a| a == 0).count() as f64 / 1e5;
    assert!(
        (share - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt(),
        "{share}"
    );
}

/// With equal potentials, the ancestor vector given its offspring counts is
/// uniform over all vectors with those counts.
#[test]
fn ancestor_vectors_are_uniform_given_counts() {
    let model = DiscreteModel::new(
        vec!["x".into(), "y".into()],
        vec![0.3, 0.7],
        vec![vec![0.6, 0.4], vec![0.2, 0.8]],
        vec![2.0, 2.0],
    )
    .unwrap();
    let mut by_counts: HashMap<Vec<usize>, HashMap<Vec<usize>, u64>> = HashMap::new();
    for seed in 0..100_000u64 {
        let traj = simulate(&model, 3, 1, seed).unwrap();
        let a = traj.ancestors[0].clone();
        let nu = offspring_counts(&a, 3).unwrap().0;
        *by_counts.entry(nu).or_default().entry(a).or_default() += 1;
    }
    // Number of vectors with counts nu is the multinomial coefficient.
    let fact = |k: usize| (1..=k).product::<usize>();
    let (mut stat, mut dof) = (0.0, 0usize);
    assert_eq!(by_counts.len(), 10);
    for (nu, cells) in &by_counts {
        let support = fact(3) / nu.iter().map(|&k| fact(k)).product::<usize>();
        assert_eq!(cells.len(), support, "nu = {nu:?}");
        if support == 1 {
            continue;
        }
        let total: u64 = cells.values().sum();
        let expected = total as f64 / support as f64;
        stat += cells
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum::<f64>();
        dof += support - 1;
    }
    let p = chi_square_sf(stat, dof);
    assert!(p > 0.01, "chi2 = {stat}, dof = {dof}, p = {p}");
}
