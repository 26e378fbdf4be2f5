//! Small numeric helpers shared by the exact calculators and the Monte Carlo harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Table of `ln k!` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    #[inline]
    pub fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// `count * ln(p)` with the convention `0 * ln 0 = 0`; `None` when the term is
/// `ln 0` (a zero-probability outcome).
#[inline]
pub fn ln_pow(p: f64, count: usize) -> Option<f64> {
    if count == 0 {
        Some(0.0)
    } else if p <= 0.0 {
        None
    } else {
        Some(count as f64 * p.ln())
    }
}

/// `P(Binomial(n, p) = k)`, evaluated in log space.
pub fn binomial_pmf(lf: &LnFactorials, n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    match (ln_pow(p, k), ln_pow(1.0 - p, n - k)) {
        (Some(a), Some(b)) => (lf.ln_choose(n, k) + a + b).exp(),
        _ => 0.0,
    }
}

/// Standard error of a proportion `hits / trials` (Wald).
pub fn wald_std_err(hits: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let p = hits as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Least-squares slope of `y` against `x`. Needs at least two distinct `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Pearson chi-square statistic for independence of a two-way table.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<(f64, usize, f64)> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::Diagnostic(format!(
            "contingency table must be at least 2x2 and rectangular, got {rows}x{cols}"
        )));
    }
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_tot.iter().sum();
    if row_tot.iter().chain(&col_tot).any(|&t| t == 0.0) {
        return Err(Error::Diagnostic(
            "contingency table has an empty margin".into(),
        ));
    }
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_tot[i] * col_tot[j] / total;
            stat += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok((stat, dof, chi_square_sf(stat, dof)))
}

/// Upper tail `P(chi2_dof > x)`.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    dist.sf(x)
}
