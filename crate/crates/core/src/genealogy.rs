//! Reverse-time ancestral partitions and the falling-factorial transition formula.
//!
//! Leaves are labelled `1..=n` (particles `0..n` of the last generation).
//! Reverse time `s` counts resampling steps walked back from the last
//! generation, so `s = 0` is the discrete partition.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simulator::{OffspringCounts, Trajectory};

/// Largest population the brute-force oracle will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 8;
const MAX_MERGED_BLOCKS: usize = 20;

/// A partition of `{1, ..., n}` in canonical form: elements ascending inside
/// each block, blocks ordered by their least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        if n == 0 {
            return Err(Error::Parse(
                "a partition needs at least one element".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &e in blocks.iter().flatten() {
            if e == 0 || e > n {
                return Err(Error::Parse(format!(
                    "element {e} outside 1..={n} (elements must cover 1..n without gaps)"
                )));
            }
            if std::mem::replace(&mut seen[e - 1], true) {
                return Err(Error::Parse(format!("element {e} appears twice")));
            }
        }
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::Parse("empty block".into()));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks, n })
    }

    /// `{{1}, ..., {n}}`.
    pub fn discrete(n: usize) -> Self {
        Self {
            blocks: (1..=n).map(|i| vec![i]).collect(),
            n,
        }
    }

    /// Groups element `i + 1` by `labels[i]`; equal labels share a block.
    pub fn from_labels<T: Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut index: HashMap<&T, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let b = *index.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i + 1);
        }
        // First-seen order already sorts blocks by least element.
        Self {
            blocks,
            n: labels.len(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of every element, `result[e - 1]`.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                out[e - 1] = b;
            }
        }
        out
    }

    pub fn is_coarsening_of(&self, finer: &Partition) -> bool {
        merge_spec(finer, self).ok().flatten().is_some()
    }

    /// Image of the partition under `e -> perm[e - 1]` (a permutation of `1..=n`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Contract(
                "permutation length differs from ground set".into(),
            ));
        }
        Self::new(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&e| perm[e - 1]).collect())
                .collect(),
        )
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, e) in b.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Blocks separated by `|`, elements by `,`, e.g. `1,2|3`.
    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split('|')
            .map(|block| {
                block
                    .split(',')
                    .map(|tok| {
                        tok.trim().parse::<usize>().map_err(|_| {
                            Error::Parse(format!("bad element {tok:?} in partition {s:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }
}

/// `b[k]`: how many blocks of the finer partition merged into block `k` of the coarser one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeSpec {
    pub b: Vec<usize>,
}

/// The merge multiplicities if `eta` is obtained from `xi` by merging whole blocks.
pub fn merge_spec(xi: &Partition, eta: &Partition) -> Result<Option<MergeSpec>> {
    if xi.n != eta.n {
        return Err(Error::Contract(format!(
            "partitions of different ground sets ({} vs {})",
            xi.n, eta.n
        )));
    }
    let eta_of = eta.block_of();
    let mut b = vec![0usize; eta.block_count()];
    for block in &xi.blocks {
        let target = eta_of[block[0] - 1];
        if block.iter().any(|&e| eta_of[e - 1] != target) {
            return Ok(None);
        }
        b[target] += 1;
    }
    Ok(Some(MergeSpec { b }))
}

/// `(x)_k = x (x - 1) ... (x - k + 1)`.
pub fn falling_factorial(x: u64, k: u64) -> Option<u128> {
    if k > x {
        return Some(0);
    }
    (0..k).try_fold(1u128, |acc, j| acc.checked_mul((x - j) as u128))
}

fn check_offspring(xi: &Partition, nu: &OffspringCounts, n_particles: usize) -> Result<()> {
    if nu.len() != n_particles || nu.total() != n_particles {
        return Err(Error::Contract(format!(
            "offspring counts must have length N = {n_particles} and sum to N (length {}, sum {})",
            nu.len(),
            nu.total()
        )));
    }
    if xi.block_count() > n_particles {
        return Err(Error::Contract(format!(
            "{} lineages cannot be carried by {n_particles} particles",
            xi.block_count()
        )));
    }
    Ok(())
}

/// Exact value of the transition formula as `(numerator, denominator)`:
///
/// `sum over distinct i_1..i_|eta| of prod_k (nu_{i_k})_{b_k}`  /  `(N)_{|xi|}`.
///
/// The sum over injective maps from blocks of `eta` to parents is accumulated
/// with a subset DP over parents, `O(N 2^{|eta|} |eta|)`.
pub fn mohle_transition_ratio(
    xi: &Partition,
    eta: &Partition,
    nu: &OffspringCounts,
    n_particles: usize,
) -> Result<(u128, u128)> {
    check_offspring(xi, nu, n_particles)?;
    let spec = merge_spec(xi, eta)?
        .ok_or_else(|| Error::Domain(format!("{eta} is not a coarsening of {xi}")))?;
    let k = spec.b.len();
    if k > MAX_MERGED_BLOCKS {
        return Err(Error::Resource(format!(
            "{k} target blocks exceed the limit of {MAX_MERGED_BLOCKS}"
        )));
    }
    let overflow = || Error::Resource("transition numerator overflows 128 bits".into());

    let full = (1usize << k) - 1;
    let mut dp = vec![0u128; 1 << k];
    dp[0] = 1;
    for &count in nu.as_slice() {
        let weights: Vec<u128> = spec
            .b
            .iter()
            .map(|&b| falling_factorial(count as u64, b as u64).ok_or_else(overflow))
            .collect::<Result<_>>()?;
        if weights.iter().all(|&w| w == 0) {
            continue;
        }
        // Descending masks so each parent serves at most one block.
        for mask in (1..=full).rev() {
            let mut add = 0u128;
            let mut rest = mask;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if weights[j] != 0 {
                    let term = dp[mask & !(1 << j)]
                        .checked_mul(weights[j])
                        .ok_or_else(overflow)?;
                    add = add.checked_add(term).ok_or_else(overflow)?;
                }
            }
            dp[mask] = dp[mask].checked_add(add).ok_or_else(overflow)?;
        }
    }
    let denom =
        falling_factorial(n_particles as u64, xi.block_count() as u64).ok_or_else(overflow)?;
    Ok((dp[full], denom))
}

pub fn mohle_transition(
    xi: &Partition,
    eta: &Partition,
    nu: &OffspringCounts,
    n_particles: usize,
) -> Result<f64> {
    let (num, den) = mohle_transition_ratio(xi, eta, nu, n_particles)?;
    Ok(num as f64 / den as f64)
}

/// Next lexicographic permutation in place; `false` once the last one is reached.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v
        .iter()
        .rposition(|&x| x > v[i])
        .expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Enumeration oracle for [`mohle_transition`].
///
/// Walks every parental vector with the given offspring counts (all equally
/// likely), lets child `k` carry block `k` of `xi`, and returns the share of
/// vectors whose induced merge of `xi` is exactly `eta`.
pub fn brute_force_transition_ratio(
    xi: &Partition,
    eta: &Partition,
    nu: &OffspringCounts,
    n_particles: usize,
) -> Result<(u64, u64)> {
    if n_particles > BRUTE_FORCE_MAX_N {
        return Err(Error::Resource(format!(
            "brute force is limited to N <= {BRUTE_FORCE_MAX_N}, got {n_particles}"
        )));
    }
    check_offspring(xi, nu, n_particles)?;
    if merge_spec(xi, eta)?.is_none() {
        return Err(Error::Domain(format!("{eta} is not a coarsening of {xi}")));
    }
    let block_of = xi.block_of();
    let mut parents: Vec<usize> = nu
        .as_slice()
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
        .collect();
    let mut labels = vec![0usize; xi.n];
    let (mut hits, mut total) = (0u64, 0u64);
    loop {
        for (e, label) in labels.iter_mut().enumerate() {
            *label = parents[block_of[e]];
        }
        if Partition::from_labels(&labels) == *eta {
            hits += 1;
        }
        total += 1;
        if !next_permutation(&mut parents) {
            break;
        }
    }
    Ok((hits, total))
}

pub fn brute_force_transition(
    xi: &Partition,
    eta: &Partition,
    nu: &OffspringCounts,
    n_particles: usize,
) -> Result<f64> {
    let (hits, total) = brute_force_transition_ratio(xi, eta, nu, n_particles)?;
    Ok(hits as f64 / total as f64)
}

/// Partition of leaves `1..=n` after walking `s` steps back through `ancestors`
/// (forward-ordered: `ancestors[g]` maps generation `g + 1` to generation `g`).
pub fn ancestral_partition(ancestors: &[Vec<usize>], n: usize, s: usize) -> Result<Partition> {
    let steps = ancestors.len();
    if s > steps {
        return Err(Error::Range(format!(
            "reverse time {s} exceeds horizon {steps}"
        )));
    }
    let width = ancestors.last().map_or(usize::MAX, Vec::len);
    if n == 0 || n > width {
        return Err(Error::Range(format!("need 1 <= n <= N, got n = {n}")));
    }
    let mut lineage: Vec<usize> = (0..n).collect();
    for step in ancestors[steps - s..].iter().rev() {
        for l in &mut lineage {
            *l = step[*l];
        }
    }
    Ok(Partition::from_labels(&lineage))
}

pub fn partition_at(trajectory: &Trajectory, n: usize, s: usize) -> Result<Partition> {
    if n == 0 || n > trajectory.n_particles {
        return Err(Error::Range(format!(
            "need 1 <= n <= N = {}, got n = {n}",
            trajectory.n_particles
        )));
    }
    ancestral_partition(&trajectory.ancestors, n, s)
}

/// First reverse time at which leaves `1..=n` share one ancestor.
pub fn mrca_time(trajectory: &Trajectory, n: usize) -> Result<Option<usize>> {
    if n == 0 || n > trajectory.n_particles {
        return Err(Error::Range(format!(
            "need 1 <= n <= N = {}, got n = {n}",
            trajectory.n_particles
        )));
    }
    let mut lineage: Vec<usize> = (0..n).collect();
    let coalesced = |l: &[usize]| l.iter().all(|&x| x == l[0]);
    if coalesced(&lineage) {
        return Ok(Some(0));
    }
    for (s, step) in trajectory.ancestors.iter().rev().enumerate() {
        for l in &mut lineage {
            *l = step[*l];
        }
        if coalesced(&lineage) {
            return Ok(Some(s + 1));
        }
    }
    Ok(None)
}

/// Every partition of `{1, ..., n}`, via restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut rgs = vec![0usize; n];
    loop {
        out.push(Partition::from_labels(&rgs));
        // Advance the restricted growth string: rgs[i] <= 1 + max(rgs[..i]).
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = *rgs[..i].iter().max().expect("non-empty prefix");
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for x in &mut rgs[i + 1..] {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Every partition obtained from `xi` by merging whole blocks (including `xi`).
pub fn coarsenings(xi: &Partition) -> Vec<Partition> {
    let block_of = xi.block_of();
    set_partitions(xi.block_count())
        .into_iter()
        .map(|merge| {
            let group = merge.block_of();
            let labels: Vec<usize> = block_of.iter().map(|&b| group[b]).collect();
            Partition::from_labels(&labels)
        })
        .collect()
}
