//! Offline optimal power management.
//!
//! With the whole trace known, the throughput-optimal schedule under energy
//! causality and an unbounded battery is the tightest "string" pulled under
//! the cumulative-harvest staircase: from the start of each stretch, extend
//! to the block that minimizes the stretch's average arrival (the furthest
//! such block on ties) and spend that average on every block of the stretch.
//! The stretch endpoints are the vertices of the lower convex hull of the
//! points `(ℓ, Σ_{k≤ℓ} E_k)`, which this module builds in linear time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    rate_unchecked, schedule_from_powers, CompensatedSum, EnergyTrace, PolicySchedule, SimConfig,
};

/// Largest horizon the exhaustive oracle accepts.
pub const ORACLE_MAX_BLOCKS: usize = 6;
pub const DEFAULT_GRID_STEP: f64 = 0.05;

/// Non-decreasing staircase of powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpmSchedule {
    powers: Vec<f64>,
    change_points: Vec<usize>,
}

impl OpmSchedule {
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// 0-based indices `c` with `powers[c + 1] > powers[c]`: the last block of
    /// every stretch but the final one. Causality is tight at each of them.
    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn to_schedule(&self, trace: &EnergyTrace, config: &SimConfig) -> Result<PolicySchedule> {
        schedule_from_powers(trace, self.powers.clone(), config)
    }
}

/// Offline schedule keeping power as constant as causality allows.
pub fn opm_schedule(trace: &EnergyTrace) -> OpmSchedule {
    let arrivals = trace.arrivals();
    let n = arrivals.len();

    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = CompensatedSum::default();
    cumulative.push(0.0);
    for &e in arrivals {
        acc.add(e);
        cumulative.push(acc.value());
    }
    let scale = cumulative[n].abs().max(1.0);
    let collinear_tol = 1e-12 * scale;

    // Lower hull of (i, S_i); middle points on or above the chord are dropped,
    // which merges equal-average stretches into the longest one.
    let mut hull: Vec<usize> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let lhs = (cumulative[b] - cumulative[a]) * (i - a) as f64;
            let rhs = (cumulative[i] - cumulative[a]) * (b - a) as f64;
            if lhs >= rhs - collinear_tol * (i - a) as f64 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    let mut powers = Vec::with_capacity(n);
    let mut change_points = Vec::with_capacity(hull.len().saturating_sub(2));
    for w in hull.windows(2) {
        let (start, end) = (w[0], w[1]);
        let level = ((cumulative[end] - cumulative[start]) / (end - start) as f64).max(0.0);
        if let Some(&prev) = powers.last() {
            if level > prev {
                change_points.push(start - 1);
            }
        }
        powers.extend(std::iter::repeat_n(level, end - start));
    }

    OpmSchedule {
        powers,
        change_points,
    }
}

/// Result of the exhaustive grid search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub powers: Vec<f64>,
    pub throughput: f64,
}

/// Exhaustive search over power vectors on `{0, step, 2·step, …}` obeying
/// causality. Only for very short traces.
pub fn opm_oracle(trace: &EnergyTrace, grid_step: f64, config: &SimConfig) -> Result<OracleResult> {
    config.validate()?;
    if trace.len() > ORACLE_MAX_BLOCKS {
        return Err(Error::Domain(format!(
            "oracle accepts at most {ORACLE_MAX_BLOCKS} blocks, got {}",
            trace.len()
        )));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Domain(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }

    let total = trace.total();
    let max_units = ((total + config.tolerance) / grid_step).floor() as usize;
    let rates: Vec<f64> = (0..=max_units)
        .map(|m| rate_unchecked(m as f64 * grid_step, config.log_base))
        .collect();

    let mut search = GridSearch {
        arrivals: trace.arrivals(),
        step: grid_step,
        tolerance: config.tolerance,
        rates: &rates,
        current: Vec::with_capacity(trace.len()),
        best: Vec::new(),
        best_sum: f64::NEG_INFINITY,
    };
    search.visit(0, 0.0, 0.0);

    let powers: Vec<f64> = search.best.iter().map(|&m| m as f64 * grid_step).collect();
    Ok(OracleResult {
        throughput: search.best_sum / trace.len() as f64,
        powers,
    })
}

struct GridSearch<'a> {
    arrivals: &'a [f64],
    step: f64,
    tolerance: f64,
    rates: &'a [f64],
    current: Vec<usize>,
    best: Vec<usize>,
    best_sum: f64,
}

impl GridSearch<'_> {
    fn visit(&mut self, block: usize, battery: f64, rate_sum: f64) {
        let available = battery + self.arrivals[block];
        let max_units = ((available + self.tolerance) / self.step).floor() as usize;
        let last = block + 1 == self.arrivals.len();
        // Rate is increasing, so the last block never leaves grid energy unused.
        let lowest = if last { max_units } else { 0 };
        for m in lowest..=max_units {
            let sum = rate_sum + self.rates[m];
            self.current.push(m);
            if last {
                if sum > self.best_sum {
                    self.best_sum = sum;
                    self.best.clone_from(&self.current);
                }
            } else {
                let next = (available - m as f64 * self.step).max(0.0);
                self.visit(block + 1, next, sum);
            }
            self.current.pop();
        }
    }
}
