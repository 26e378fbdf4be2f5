//! Forward simulation of a weighted particle system on a finite state space.
//!
//! Draw order, all from one uniform stream, one uniform per draw:
//!
//! 1. generation 0: `N` draws from the initial law, particle order;
//! 2. for each step: `N` ancestor draws (inverse transform over the
//!    cumulative weights), then `N` kernel draws, particle order.
//!
//! Generations are stored in forward order `g = 0..=T`. Reverse-time views
//! live in [`crate::genealogy`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::UniformSource;

const LAW_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-9;

/// Finite state space with initial law, Markov kernel and positive potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    pub labels: Vec<String>,
    pub initial_law: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub potential: Vec<f64>,
}

impl DiscreteModel {
    pub fn new(
        labels: Vec<String>,
        initial_law: Vec<f64>,
        kernel: Vec<Vec<f64>>,
        potential: Vec<f64>,
    ) -> Result<Self> {
        let model = Self {
            labels,
            initial_law,
            kernel,
            potential,
        };
        model.validate()?;
        Ok(model)
    }

    /// The two-state model `{a, b}` with identity kernel used by the counterexample.
    pub fn two_state(alpha: f64, p_a: f64, p_b: f64) -> Result<Self> {
        Self::new(
            vec!["a".into(), "b".into()],
            vec![alpha, 1.0 - alpha],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![p_a, p_b],
        )
    }

    pub fn state_count(&self) -> usize {
        self.potential.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.potential.len();
        if k == 0 {
            return Err(Error::Parameter("model needs at least one state".into()));
        }
        if self.labels.len() != k || self.initial_law.len() != k || self.kernel.len() != k {
            return Err(Error::Parameter(format!(
                "labels ({}), initial_law ({}), kernel rows ({}) and potential ({k}) must agree in length",
                self.labels.len(),
                self.initial_law.len(),
                self.kernel.len()
            )));
        }
        check_law(&self.initial_law, "initial_law")?;
        for (i, row) in self.kernel.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Parameter(format!(
                    "kernel row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            check_law(row, &format!("kernel row {i}"))?;
        }
        if let Some(g) = self
            .potential
            .iter()
            .find(|g| !(**g > 0.0 && g.is_finite()))
        {
            return Err(Error::Parameter(format!(
                "potential values must be positive and finite, got {g}"
            )));
        }
        Ok(())
    }
}

fn check_law(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::Parameter(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > LAW_TOL {
        return Err(Error::Parameter(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Positions, normalised weights and ancestor vectors of one simulated run.
///
/// Indices are 0-based: `positions[g][i]` is a state index, `ancestors[g - 1][i]`
/// is the generation-`(g - 1)` parent of particle `i` in generation `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_particles: usize,
    pub steps: usize,
    pub seed: u64,
    pub labels: Vec<String>,
    pub positions: Vec<Vec<usize>>,
    pub weights: Vec<Vec<f64>>,
    pub ancestors: Vec<Vec<usize>>,
}

impl Trajectory {
    /// Parent indices used to go from generation `g` back to `g - 1`.
    pub fn ancestors_into(&self, g: usize) -> &[usize] {
        &self.ancestors[g - 1]
    }
}

/// Per-parent offspring counts of one resampling step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OffspringCounts(pub Vec<usize>);

impl OffspringCounts {
    pub fn new(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Cumulative sums of `weights` for inverse-transform sampling.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// Index `k` with `cum[k - 1] <= u < cum[k]`. A `u` beyond the last sum (a
/// rounding artefact) falls on the last index with positive mass.
#[inline]
pub fn inverse_transform(cum: &[f64], u: f64) -> usize {
    let k = cum.partition_point(|&c| c <= u);
    if k < cum.len() {
        return k;
    }
    let mut k = cum.len() - 1;
    while k > 0 && cum[k] == cum[k - 1] {
        k -= 1;
    }
    k
}

/// Draws `count` i.i.d. parent indices from the categorical law `weights`,
/// consuming one uniform per draw.
pub fn categorical_ancestors<I>(weights: &[f64], count: usize, uniforms: I) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = f64>,
{
    if weights.is_empty() || weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::Contract(
            "weights must be a non-empty nonnegative vector".into(),
        ));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Contract(format!("weights sum to {s}, not 1")));
    }
    let cum = cumulative(weights);
    let mut out = Vec::with_capacity(count);
    let mut it = uniforms.into_iter();
    for _ in 0..count {
        let u = it
            .next()
            .ok_or_else(|| Error::Contract("uniform stream exhausted".into()))?;
        out.push(inverse_transform(&cum, u));
    }
    Ok(out)
}

/// `counts[i] = #{j : ancestors[j] = i}`.
pub fn offspring_counts(ancestors: &[usize], n: usize) -> Result<OffspringCounts> {
    let mut counts = vec![0usize; n];
    for &a in ancestors {
        *counts
            .get_mut(a)
            .ok_or_else(|| Error::Contract(format!("ancestor index {a} outside 0..{n}")))? += 1;
    }
    Ok(OffspringCounts(counts))
}

fn normalised_weights(model: &DiscreteModel, positions: &[usize]) -> Vec<f64> {
    let total: f64 = positions.iter().map(|&x| model.potential[x]).sum();
    positions
        .iter()
        .map(|&x| model.potential[x] / total)
        .collect()
}

pub fn simulate(
    model: &DiscreteModel,
    n_particles: usize,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    model.validate()?;
    if n_particles == 0 {
        return Err(Error::Parameter("need at least one particle".into()));
    }
    let mut rng = UniformSource::from_seed(seed);
    let init_cum = cumulative(&model.initial_law);
    let kernel_cum: Vec<Vec<f64>> = model.kernel.iter().map(|r| cumulative(r)).collect();

    let first: Vec<usize> = (0..n_particles)
        .map(|_| inverse_transform(&init_cum, rng.uniform()))
        .collect();
    let mut weights = vec![normalised_weights(model, &first)];
    let mut positions = vec![first];
    let mut ancestors = Vec::with_capacity(steps);

    for g in 0..steps {
        let parents = categorical_ancestors(&weights[g], n_particles, &mut rng)?;
        let prev = &positions[g];
        let next: Vec<usize> = parents
            .iter()
            .map(|&a| inverse_transform(&kernel_cum[prev[a]], rng.uniform()))
            .collect();
        weights.push(normalised_weights(model, &next));
        positions.push(next);
        ancestors.push(parents);
    }

    Ok(Trajectory {
        n_particles,
        steps,
        seed,
        labels: model.labels.clone(),
        positions,
        weights,
        ancestors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_weights_select_the_first_parent() {
        let w = [1.0, 0.0, 0.0, 0.0];
        let a = categorical_ancestors(&w, 6, [0.0, 0.3, 0.5, 0.9, 0.999, 0.1]).unwrap();
        assert_eq!(a, vec![0; 6]);
    }

    #[test]
    fn half_open_interval_convention() {
        let w = [0.25, 0.5, 0.25];
        assert_eq!(categorical_ancestors(&w, 1, [0.3]).unwrap(), vec![1]);
        assert_eq!(categorical_ancestors(&w, 1, [0.25]).unwrap(), vec![1]);
        assert_eq!(categorical_ancestors(&w, 1, [0.75]).unwrap(), vec![2]);
        assert_eq!(categorical_ancestors(&w, 1, [0.0]).unwrap(), vec![0]);
    }

    #[test]
    fn rounding_overflow_lands_on_last_positive_weight() {
        let cum = [0.4, 0.999_999_999_999, 0.999_999_999_999];
        assert_eq!(inverse_transform(&cum, 0.999_999_999_999_5), 1);
    }

    #[test]
    fn unnormalised_weights_violate_the_contract() {
        assert!(matches!(
            categorical_ancestors(&[0.5, 0.6], 1, [0.1]),
            Err(Error::Contract(_))
        ));
        assert!(categorical_ancestors(&[0.5, 0.5], 3, [0.1]).is_err());
    }

    #[test]
    fn uniform_two_way_frequency() {
        let reps = 100_000;
        let a = categorical_ancestors(&[0.5, 0.5], reps, UniformSource::from_seed(3)).unwrap();
        let freq = a.iter().filter(|&&i| i == 0).count() as f64 / reps as f64;
        assert!((freq - 0.5).abs() <= 3.0 * (0.25 / reps as f64).sqrt());
    }

    #[test]
    fn offspring_count_examples() {
        assert_eq!(offspring_counts(&[0, 0, 2], 3).unwrap().0, vec![2, 0, 1]);
        assert_eq!(offspring_counts(&[1, 1, 1], 3).unwrap().0, vec![0, 3, 0]);
        assert!(matches!(
            offspring_counts(&[0, 3], 3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn degenerate_initial_law_and_identity_kernel() {
        let model = DiscreteModel::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![2.0, 1.0],
        )
        .unwrap();
        let t = simulate(&model, 7, 4, 99).unwrap();
        for g in 0..=4 {
            assert!(t.positions[g].iter().all(|&x| x == 0));
            assert!(t.weights[g].iter().all(|&w| (w - 1.0 / 7.0).abs() < 1e-15));
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        let bad_law = DiscreteModel::new(vec!["a".into()], vec![0.9], vec![vec![1.0]], vec![1.0]);
        assert!(bad_law.is_err());
        let bad_kernel = DiscreteModel::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.5],
            vec![vec![0.5, 0.6], vec![0.0, 1.0]],
            vec![1.0, 1.0],
        );
        assert!(bad_kernel.is_err());
        let bad_potential = DiscreteModel::two_state(0.5, 1.0, 0.0);
        assert!(bad_potential.is_err());
        let model = DiscreteModel::two_state(0.5, 1.0, 0.5).unwrap();
        assert!(simulate(&model, 0, 1, 1).is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let model = DiscreteModel::two_state(0.3, 1.0, 0.2).unwrap();
        let a = simulate(&model, 20, 5, 1234).unwrap();
        let b = simulate(&model, 20, 5, 1234).unwrap();
        let c = simulate(&model, 20, 5, 1235).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
