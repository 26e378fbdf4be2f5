//! Coupling of the two-state system with surrogate variables.
//!
//! One coupled draw shares uniforms between the true system and two surrogates:
//!
//! * `nu_hat = #{i <= N : U_2^(i) < w_hat}` with `w_hat = g(X_2^(1)) / (N m)`,
//!   `m = alpha p_a + (1 - alpha) p_b`: an offspring count for particle 1 of
//!   generation 2 that ignores the other positions;
//! * the index set `I = {i_1 < ... < i_N}` of the first `N` children (extended
//!   past `N` with extra uniforms `U_2^(N+1), ...`) whose parent is not particle
//!   1, reweighted as `w~(i) = g(X_1^(i)) / sum_{k in I} g(X_1^(k))`, gives
//!   `X~ = X_1^(i_1)` and `nu~ = #{i <= N : U_1^(i) < w~(i_1)}`.
//!
//! Draw order per replicate: `N` uniforms for `X_2`, `N` for `U_2`, `N` for
//! `U_1`, then the extra `U_2` as needed.

use serde::{Deserialize, Serialize};

use crate::counterexample::StateCounts;
use crate::error::{Error, Result};
use crate::model::CounterexampleParams;
use crate::rng::{chunked_replicates, StreamFactory, UniformSource};
use crate::simulator::inverse_transform;
use crate::stats::{chi_square_independence, ls_slope, wald_std_err};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledDraw {
    pub x2_first_is_a: bool,
    pub nu2_first: usize,
    pub nu2_hat: usize,
    pub x1_first_is_a: bool,
    pub nu1_first: usize,
    pub x1_tilde_is_a: bool,
    pub nu1_tilde: usize,
    /// `I = i_1`, 1-based; exceeds `N` when it comes from the extra uniforms.
    pub first_index: usize,
    /// Generation-2 parent of particle 1 of generation 1 (0-based).
    pub parent_of_first: usize,
    /// Extra `U_2` consumed to fill the index set.
    pub extra_uniforms: usize,
    /// `U_1` falling between `w_1^(1)` and `w~(i_1)`.
    pub gap_hits: usize,
    pub seed: u64,
}

impl CoupledDraw {
    pub fn tilde_mismatch(&self) -> bool {
        (self.x1_tilde_is_a, self.nu1_tilde) != (self.x1_first_is_a, self.nu1_first)
    }

    pub fn hat_mismatch(&self) -> bool {
        self.nu2_hat != self.nu2_first
    }
}

struct Scratch {
    x2: Vec<bool>,
    cum2: Vec<f64>,
    parents: Vec<usize>,
    u1: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            x2: vec![false; n],
            cum2: vec![0.0; n],
            parents: vec![0; n],
            u1: vec![0.0; n],
        }
    }
}

fn draw_with(
    params: &CounterexampleParams,
    n: usize,
    rng: &mut UniformSource,
    s: &mut Scratch,
) -> CoupledDraw {
    for x in s.x2.iter_mut() {
        *x = rng.uniform() < params.alpha;
    }
    let s2 = StateCounts::from_positions(&s.x2).total_potential(params);
    let mut acc = 0.0;
    for (c, &x) in s.cum2.iter_mut().zip(s.x2.iter()) {
        acc += params.potential(x) / s2;
        *c = acc;
    }
    let x2_first_is_a = s.x2[0];
    let w_hat = params.potential(x2_first_is_a) / (n as f64 * params.mean_potential());

    let mut nu2_first = 0;
    let mut nu2_hat = 0;
    for p in s.parents.iter_mut() {
        let u = rng.uniform();
        *p = inverse_transform(&s.cum2, u);
        nu2_first += usize::from(*p == 0);
        nu2_hat += usize::from(u < w_hat);
    }
    for u in s.u1.iter_mut() {
        *u = rng.uniform();
    }

    // Generation 1 under the true system.
    let n1_a = s.parents.iter().filter(|&&p| s.x2[p]).count();
    let x1_first_is_a = s.x2[s.parents[0]];
    let s1 = StateCounts {
        n_a: n1_a,
        n_b: n - n1_a,
    }
    .total_potential(params);
    let w1_first = params.potential(x1_first_is_a) / s1;
    let nu1_first = s.u1.iter().filter(|&&u| u < w1_first).count();

    // Index set: children in [N] with parent != 1, then extra children.
    let mut members = n - nu2_first;
    let mut members_a = s.parents.iter().filter(|&&p| p != 0 && s.x2[p]).count();
    let mut first = s
        .parents
        .iter()
        .position(|&p| p != 0)
        .map(|i| (i + 1, s.x2[s.parents[i]]));
    let mut extra_uniforms = 0;
    while members < n {
        let p = inverse_transform(&s.cum2, rng.uniform());
        extra_uniforms += 1;
        if p != 0 {
            if first.is_none() {
                first = Some((n + extra_uniforms, s.x2[p]));
            }
            members += 1;
            members_a += usize::from(s.x2[p]);
        }
    }
    let (first_index, x1_tilde_is_a) = first.expect("index set has N >= 2 members");
    let s_tilde = StateCounts {
        n_a: members_a,
        n_b: n - members_a,
    }
    .total_potential(params);
    let w_tilde = params.potential(x1_tilde_is_a) / s_tilde;
    let nu1_tilde = s.u1.iter().filter(|&&u| u < w_tilde).count();
    let (lo, hi) = if w1_first <= w_tilde {
        (w1_first, w_tilde)
    } else {
        (w_tilde, w1_first)
    };
    let gap_hits = s.u1.iter().filter(|&&u| lo <= u && u < hi).count();

    CoupledDraw {
        x2_first_is_a,
        nu2_first,
        nu2_hat,
        x1_first_is_a,
        nu1_first,
        x1_tilde_is_a,
        nu1_tilde,
        first_index,
        parent_of_first: s.parents[0],
        extra_uniforms,
        gap_hits,
        seed: 0,
    }
}

fn check(params: &CounterexampleParams, n: usize) -> Result<()> {
    params.validate()?;
    if n < 2 {
        return Err(Error::Parameter(format!("need N >= 2, got {n}")));
    }
    Ok(())
}

/// One coupled realisation from stream 0 of `seed`.
pub fn coupled_draw(params: &CounterexampleParams, n: usize, seed: u64) -> Result<CoupledDraw> {
    check(params, n)?;
    let mut draw = draw_with(
        params,
        n,
        &mut StreamFactory::new(seed).stream(0),
        &mut Scratch::new(n),
    );
    draw.seed = seed;
    Ok(draw)
}

/// Replicate `r` of a batch keyed by `seed`.
pub fn coupled_replicate(
    params: &CounterexampleParams,
    n: usize,
    seed: u64,
    r: u64,
) -> Result<CoupledDraw> {
    check(params, n)?;
    let mut draw = draw_with(
        params,
        n,
        &mut StreamFactory::new(seed).stream(r),
        &mut Scratch::new(n),
    );
    draw.seed = seed;
    Ok(draw)
}

fn fold_draws<T, F>(
    params: &CounterexampleParams,
    n: usize,
    reps: u64,
    seed: u64,
    init: fn() -> T,
    add: F,
    merge: fn(T, T) -> T,
) -> T
where
    T: Send,
    F: Fn(&mut T, &CoupledDraw) + Sync,
{
    let streams = StreamFactory::new(seed);
    chunked_replicates(
        reps,
        |range| {
            let mut scratch = Scratch::new(n);
            let mut acc = init();
            for r in range {
                let draw = draw_with(params, n, &mut streams.stream(r), &mut scratch);
                add(&mut acc, &draw);
            }
            acc
        },
        merge,
    )
    .unwrap_or_else(init)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchRow {
    #[serde(rename = "N")]
    pub n_particles: usize,
    pub tilde_mismatch: f64,
    pub tilde_se: f64,
    pub hat_mismatch: f64,
    pub hat_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub rows: Vec<MismatchRow>,
    /// Slope of `ln(rate)` against `ln(N)`, over rows with a positive rate.
    pub tilde_slope: Option<f64>,
    pub hat_slope: Option<f64>,
}

/// Monte Carlo rates of `(X~, nu~) != (X_1^(1), nu_1^(1))` and
/// `nu_hat != nu_2^(1)` for each `N`, with log-log slopes.
pub fn mismatch_rates(
    params: &CounterexampleParams,
    n_list: &[usize],
    reps: u64,
    seed: u64,
) -> Result<MismatchReport> {
    if n_list.len() < 3 {
        return Err(Error::Parameter(format!(
            "slope fitting needs at least 3 population sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "population sizes must be strictly increasing".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::Parameter("need at least one replicate".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        check(params, n)?;
        let (tilde, hat) = fold_draws(
            params,
            n,
            reps,
            seed,
            || (0u64, 0u64),
            |acc, d| {
                acc.0 += u64::from(d.tilde_mismatch());
                acc.1 += u64::from(d.hat_mismatch());
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        rows.push(MismatchRow {
            n_particles: n,
            tilde_mismatch: tilde as f64 / reps as f64,
            tilde_se: wald_std_err(tilde, reps),
            hat_mismatch: hat as f64 / reps as f64,
            hat_se: wald_std_err(hat, reps),
        });
    }
    let slope = |rate: fn(&MismatchRow) -> f64| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| rate(r) > 0.0)
            .map(|r| ((r.n_particles as f64).ln(), rate(r).ln()))
            .collect();
        ls_slope(&pts)
    };
    let tilde_slope = slope(|r| r.tilde_mismatch);
    let hat_slope = slope(|r| r.hat_mismatch);
    Ok(MismatchReport {
        rows,
        tilde_slope,
        hat_slope,
    })
}

/// Offspring-count bins `{0, 1, 2, >=3}`.
pub fn count_bin(nu: usize) -> usize {
    nu.min(3)
}

fn category(is_a: bool, nu: usize) -> usize {
    usize::from(!is_a) * 4 + count_bin(nu)
}

fn category_label(c: usize) -> String {
    let state = if c < 4 { 'a' } else { 'b' };
    match c % 4 {
        3 => format!("{state}:>=3"),
        k => format!("{state}:{k}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceResult {
    /// Raw 8x8 counts: rows `(X_2^(1), nu_hat bin)`, columns `(X~, nu~ bin)`.
    pub table: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Table actually tested, after merging sparse categories.
    pub merged_table: Vec<Vec<u64>>,
    pub merged_row_labels: Vec<String>,
    pub merged_col_labels: Vec<String>,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

type Labelled = (Vec<Vec<u64>>, Vec<String>, Vec<String>);

/// Merges whole categories until every expected count is at least 5.
///
/// Empty categories are dropped first. Then, repeatedly, the cell with the
/// smallest expected count is located and whichever of its row or column has
/// the smaller total is folded into its smaller adjacent neighbour.
fn merge_sparse(
    table: &[Vec<u64>],
    row_labels: &[String],
    col_labels: &[String],
) -> Result<Labelled> {
    let mut t: Vec<Vec<u64>> = table.to_vec();
    let mut rl: Vec<String> = row_labels.to_vec();
    let mut cl: Vec<String> = col_labels.to_vec();

    let row_totals = |t: &[Vec<u64>]| t.iter().map(|r| r.iter().sum::<u64>()).collect::<Vec<_>>();
    let col_totals = |t: &[Vec<u64>]| {
        (0..t[0].len())
            .map(|j| t.iter().map(|r| r[j]).sum::<u64>())
            .collect::<Vec<_>>()
    };

    let rt = row_totals(&t);
    let keep_rows: Vec<usize> = (0..t.len()).filter(|&i| rt[i] > 0).collect();
    t = keep_rows.iter().map(|&i| t[i].clone()).collect();
    rl = keep_rows.iter().map(|&i| rl[i].clone()).collect();
    if t.is_empty() {
        return Err(Error::Diagnostic("empty contingency table".into()));
    }
    let ct = col_totals(&t);
    let keep_cols: Vec<usize> = (0..ct.len()).filter(|&j| ct[j] > 0).collect();
    t = t
        .iter()
        .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
        .collect();
    cl = keep_cols.iter().map(|&j| cl[j].clone()).collect();

    loop {
        if t.len() < 2 || t[0].len() < 2 {
            return Err(Error::Diagnostic(format!(
                "degenerate table after merging: {} rows x {} columns",
                t.len(),
                t.first().map_or(0, Vec::len)
            )));
        }
        let rt = row_totals(&t);
        let ct = col_totals(&t);
        let total: u64 = rt.iter().sum();
        let (mut worst, mut at) = (f64::INFINITY, (0, 0));
        for (i, &r) in rt.iter().enumerate() {
            for (j, &c) in ct.iter().enumerate() {
                let e = r as f64 * c as f64 / total as f64;
                if e < worst {
                    worst = e;
                    at = (i, j);
                }
            }
        }
        if worst >= 5.0 {
            return Ok((t, rl, cl));
        }
        let pick_neighbour = |totals: &[u64], k: usize| -> usize {
            match (k.checked_sub(1), (k + 1 < totals.len()).then_some(k + 1)) {
                (Some(l), Some(r)) => {
                    if totals[l] <= totals[r] {
                        l
                    } else {
                        r
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!("at least two categories"),
            }
        };
        if rt[at.0] <= ct[at.1] {
            let k = at.0;
            let into = pick_neighbour(&rt, k);
            let row = t.remove(k);
            let label = rl.remove(k);
            let into = if into > k { into - 1 } else { into };
            for (dst, src) in t[into].iter_mut().zip(row) {
                *dst += src;
            }
            rl[into] = format!("{}+{}", rl[into], label);
        } else {
            let k = at.1;
            let into = pick_neighbour(&ct, k);
            let into_after = if into > k { into - 1 } else { into };
            for r in t.iter_mut() {
                let v = r.remove(k);
                r[into_after] += v;
            }
            let label = cl.remove(k);
            cl[into_after] = format!("{}+{}", cl[into_after], label);
        }
    }
}

/// Chi-square test of `(X~, nu~)` against `(X_2^(1), nu_hat)` over `reps` coupled draws.
pub fn independence_test(
    params: &CounterexampleParams,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<IndependenceResult> {
    check(params, n)?;
    if reps < 10_000 {
        return Err(Error::Parameter(format!(
            "need at least 10^4 replicates, got {reps}"
        )));
    }
    let flat = fold_draws(
        params,
        n,
        reps,
        seed,
        || vec![0u64; 64],
        |acc, d| {
            let row = category(d.x2_first_is_a, d.nu2_hat);
            let col = category(d.x1_tilde_is_a, d.nu1_tilde);
            acc[row * 8 + col] += 1;
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let table: Vec<Vec<u64>> = flat.chunks(8).map(<[u64]>::to_vec).collect();
    let labels: Vec<String> = (0..8).map(category_label).collect();
    let (merged_table, merged_row_labels, merged_col_labels) =
        merge_sparse(&table, &labels, &labels)?;
    let (chi2, dof, p_value) = chi_square_independence(&merged_table)?;
    Ok(IndependenceResult {
        table,
        row_labels: labels.clone(),
        col_labels: labels,
        merged_table,
        merged_row_labels,
        merged_col_labels,
        chi2,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> CounterexampleParams {
        CounterexampleParams::new(0.5, 1.0, 0.075).unwrap()
    }

    #[test]
    fn draws_are_deterministic() {
        assert_eq!(
            coupled_draw(&reference(), 40, 9).unwrap(),
            coupled_draw(&reference(), 40, 9).unwrap()
        );
        assert_eq!(coupled_draw(&reference(), 40, 9).unwrap().seed, 9);
    }

    #[test]
    fn draw_invariants() {
        for r in 0..500 {
            let d = coupled_replicate(&reference(), 30, 4, r).unwrap();
            for v in [d.nu2_first, d.nu2_hat, d.nu1_first, d.nu1_tilde] {
                assert!(v <= 30);
            }
            if d.parent_of_first != 0 {
                assert_eq!(d.first_index, 1);
            }
            // Exactly nu_2^(1) children of [N] are replaced, plus any extra
            // children that themselves chose particle 1.
            assert!(d.extra_uniforms >= d.nu2_first);
        }
    }

    #[test]
    fn equal_potentials_never_separate_hat_counts() {
        for (alpha, p) in [(0.5, 1.0), (0.3, 0.7), (0.77, 0.1)] {
            let params = CounterexampleParams::new(alpha, p, p).unwrap();
            for r in 0..2000 {
                let d = coupled_replicate(&params, 25, 1, r).unwrap();
                assert_eq!(d.nu2_hat, d.nu2_first);
            }
        }
    }

    #[test]
    fn no_gap_hit_means_tilde_agrees() {
        let mut checked = 0;
        for r in 0..3000 {
            let d = coupled_replicate(&reference(), 20, 2, r).unwrap();
            if d.parent_of_first != 0 && d.gap_hits == 0 {
                assert_eq!(
                    (d.x1_tilde_is_a, d.nu1_tilde),
                    (d.x1_first_is_a, d.nu1_first)
                );
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn mismatch_rates_validate_input() {
        assert!(mismatch_rates(&reference(), &[10, 20], 10, 1).is_err());
        assert!(mismatch_rates(&reference(), &[10, 30, 20], 10, 1).is_err());
        assert!(mismatch_rates(&reference(), &[10, 20, 30], 0, 1).is_err());
    }

    #[test]
    fn equal_potential_hat_rate_is_zero() {
        let params = CounterexampleParams::new(0.4, 2.0, 2.0).unwrap();
        let rep = mismatch_rates(&params, &[10, 20, 40], 5_000, 3).unwrap();
        assert!(rep.rows.iter().all(|r| r.hat_mismatch == 0.0));
        assert!(rep.hat_slope.is_none());
    }

    #[test]
    fn merging_keeps_totals_and_clears_sparse_cells() {
        let table = vec![vec![500, 300, 2, 0], vec![400, 250, 1, 0], vec![3, 1, 0, 0]];
        let labels: Vec<String> = ["r0", "r1", "r2", "r3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (merged, rl, cl) = merge_sparse(&table, &labels[..3], &labels).unwrap();
        let total: u64 = merged.iter().flatten().sum();
        assert_eq!(total, 1457);
        assert_eq!(merged.len(), rl.len());
        assert_eq!(merged[0].len(), cl.len());
        let rt: Vec<u64> = merged.iter().map(|r| r.iter().sum()).collect();
        let ct: Vec<u64> = (0..merged[0].len())
            .map(|j| merged.iter().map(|r| r[j]).sum())
            .collect();
        for r in &rt {
            for c in &ct {
                assert!(*r as f64 * *c as f64 / total as f64 >= 5.0);
            }
        }
    }

    #[test]
    fn merging_reports_degenerate_tables() {
        let labels: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(
            merge_sparse(&[vec![10, 0], vec![20, 0]], &labels, &labels),
            Err(Error::Diagnostic(_))
        ));
    }

    #[test]
    fn independence_table_shape() {
        let res = independence_test(&reference(), 50, 10_000, 8).unwrap();
        assert_eq!(res.table.len(), 8);
        assert!(res.table.iter().all(|r| r.len() == 8));
        let total: u64 = res.table.iter().flatten().sum();
        assert_eq!(total, 10_000);
        assert_eq!(
            res.dof,
            (res.merged_table.len() - 1) * (res.merged_table[0].len() - 1)
        );
        assert!(independence_test(&reference(), 50, 9_999, 8).is_err());
    }
}
