//! Closed-form quantities of the two-state model.
//!
//! With `m = alpha p_a + (1 - alpha) p_b` the first-generation intensities are
//! `q_a = p_a / m`, `q_b = p_b / m`, and one generation later
//! `q'_x = p_x / (alpha p_a q_a + (1 - alpha) p_b q_b)`. The bound
//! `R = t1 * t2 * t3` combines the limits of the three conditional factors of
//! `P(a_2^(1) = 1 | nu_2^(1) = 2, nu_1^(1) = 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `x^2 e^{-x} / 2`, the Poisson(x) mass at 2.
pub fn f_weight(x: f64) -> f64 {
    0.5 * x * x * (-x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub alpha: f64,
    pub p_a: f64,
    pub p_b: f64,
}

impl CounterexampleParams {
    pub fn new(alpha: f64, p_a: f64, p_b: f64) -> Result<Self> {
        let params = Self { alpha, p_a, p_b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for (name, v) in [("p_a", self.p_a), ("p_b", self.p_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The strict ordering `p_b < p_a` under which `R > 1` is possible.
    pub fn require_strict_order(&self) -> Result<()> {
        self.validate()?;
        if self.p_b < self.p_a {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "a counterexample needs p_b < p_a, got p_a = {}, p_b = {}",
                self.p_a, self.p_b
            )))
        }
    }

    /// Potential of state `a` (`true`) or `b` (`false`).
    #[inline]
    pub fn potential(&self, is_a: bool) -> f64 {
        if is_a {
            self.p_a
        } else {
            self.p_b
        }
    }

    /// Initial-law mass of state `a` (`true`) or `b` (`false`).
    #[inline]
    pub fn mass(&self, is_a: bool) -> f64 {
        if is_a {
            self.alpha
        } else {
            1.0 - self.alpha
        }
    }

    /// `alpha p_a + (1 - alpha) p_b`, written so that equal potentials return `p_b` exactly.
    #[inline]
    pub fn mean_potential(&self) -> f64 {
        self.p_b + self.alpha * (self.p_a - self.p_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub q_a: f64,
    pub q_b: f64,
    pub q_a_prime: f64,
    pub q_b_prime: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

pub fn analytic_report(params: &CounterexampleParams) -> Result<AnalyticReport> {
    params.validate()?;
    let CounterexampleParams { alpha, p_a, p_b } = *params;
    let beta = 1.0 - alpha;

    let m = alpha * p_a + beta * p_b;
    let q_a = p_a / m;
    let q_b = p_b / m;
    let m_prime = alpha * p_a * q_a + beta * p_b * q_b;
    let q_a_prime = p_a / m_prime;
    let q_b_prime = p_b / m_prime;

    let t1 = 1.0 / (alpha * q_a);
    let t2 = alpha * f_weight(q_a) / (alpha * f_weight(q_a) + beta * f_weight(q_b));
    let a_side = alpha * q_a * f_weight(q_a_prime);
    let t3 = a_side / (a_side + beta * q_b * f_weight(q_b_prime));

    Ok(AnalyticReport {
        q_a,
        q_b,
        q_a_prime,
        q_b_prime,
        t1,
        t2,
        t3,
        r: t1 * t2 * t3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RCurveRow {
    pub p_b: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

/// Evaluates `R(alpha, p_a, p_b)` on an evenly spaced `p_b` grid.
///
/// A lower endpoint of exactly 0 is outside the model, so the grid then becomes
/// `pb_max * k / points` for `k = 1..=points`. Otherwise it is the inclusive
/// grid from `pb_min` to `pb_max`.
pub fn r_curve(
    alpha: f64,
    p_a: f64,
    pb_min: f64,
    pb_max: f64,
    points: usize,
) -> Result<Vec<RCurveRow>> {
    if points < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 grid points, got {points}"
        )));
    }
    if !(pb_min >= 0.0 && pb_max > pb_min && pb_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "need 0 <= pb_min < pb_max, got [{pb_min}, {pb_max}]"
        )));
    }
    let grid: Vec<f64> = if pb_min == 0.0 {
        let step = pb_max / points as f64;
        (1..=points).map(|k| step * k as f64).collect()
    } else {
        let step = (pb_max - pb_min) / (points - 1) as f64;
        (0..points)
            .map(|k| {
                if k == points - 1 {
                    pb_max
                } else {
                    pb_min + step * k as f64
                }
            })
            .collect()
    };
    grid.into_iter()
        .map(|p_b| {
            let report = analytic_report(&CounterexampleParams::new(alpha, p_a, p_b)?)?;
            Ok(RCurveRow { p_b, r: report.r })
        })
        .collect()
}
