//! Replicated simulation over parameter sweeps.
//!
//! Every method at one (sweep value, replication) sees the same trace, drawn
//! with seed `base_seed + replication`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrivals::{sample_trace, DistributionSpec, Seed};
use crate::error::{Error, Result};
use crate::model::{execute, upper_bound, EnergyTrace, PolicySchedule, SimConfig};
use crate::opm::opm_schedule;
use crate::policies::{Policy, PolicyKind, PolicyParams};

pub const DEFAULT_REPLICATIONS: usize = 200;
pub const DEFAULT_HORIZON_GRID: [usize; 7] = [50, 100, 200, 500, 1000, 2000, 5000];
pub const DEFAULT_MEAN_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

/// Anything that yields a throughput on a trace: an online policy, the
/// offline optimum, or the Jensen bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Sat,
    Bet,
    Apa,
    Opm,
    Ub,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Naive,
        Method::Sat,
        Method::Bet,
        Method::Apa,
        Method::Opm,
        Method::Ub,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Sat => "sat",
            Method::Bet => "bet",
            Method::Apa => "apa",
            Method::Opm => "opm",
            Method::Ub => "ub",
        }
    }

    pub fn policy_kind(&self) -> Option<PolicyKind> {
        match self {
            Method::Naive => Some(PolicyKind::Naive),
            Method::Sat => Some(PolicyKind::Sat),
            Method::Bet => Some(PolicyKind::Bet),
            Method::Apa => Some(PolicyKind::Apa),
            Method::Opm | Method::Ub => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "opm" => Ok(Method::Opm),
            "ub" => Ok(Method::Ub),
            other => other.parse::<PolicyKind>().map(Method::from).map_err(|_| {
                Error::InvalidParams(format!(
                    "unknown policy `{other}` (expected naive, sat, bet, apa, opm or ub)"
                ))
            }),
        }
    }
}

impl From<PolicyKind> for Method {
    fn from(k: PolicyKind) -> Self {
        match k {
            PolicyKind::Naive => Method::Naive,
            PolicyKind::Sat => Method::Sat,
            PolicyKind::Bet => Method::Bet,
            PolicyKind::Apa => Method::Apa,
        }
    }
}

/// Outcome of one method on one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub throughput: f64,
    pub outages: usize,
    /// Per-block schedule; absent for the bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<PolicySchedule>,
}

/// Runs every method on one trace and checks the per-trace invariants.
pub fn evaluate_trace(
    trace: &EnergyTrace,
    methods: &[Method],
    params: &PolicyParams,
    config: &SimConfig,
) -> Result<Vec<MethodOutcome>> {
    let ub = upper_bound(trace, config);
    methods
        .iter()
        .map(|&m| evaluate_method(trace, m, params, ub, config))
        .collect()
}

fn evaluate_method(
    trace: &EnergyTrace,
    method: Method,
    params: &PolicyParams,
    ub: f64,
    config: &SimConfig,
) -> Result<MethodOutcome> {
    let schedule = match method {
        Method::Ub => None,
        Method::Opm => Some(opm_schedule(trace).to_schedule(trace, config)?),
        other => {
            let kind = other.policy_kind().expect("online method");
            Some(execute(trace, &Policy::new(kind, *params)?, config)?)
        }
    };
    let (throughput, outages) = match &schedule {
        Some(s) => (s.throughput(), s.outages()),
        None => (ub, 0),
    };
    if throughput > ub + config.tolerance {
        return Err(Error::Invariant(format!(
            "{method} throughput {throughput} exceeds the upper bound {ub}"
        )));
    }
    Ok(MethodOutcome {
        method,
        throughput,
        outages,
        schedule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Mean,
    Horizon,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Mean => "mean",
            SweepParam::Horizon => "L",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Arrival law; its mean is replaced by the sweep value for mean sweeps.
    pub distribution: DistributionSpec,
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Horizon used when sweeping the mean.
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Output order. `ub` is always reported, appended if not listed.
    pub methods: Vec<Method>,
    pub epsilon_rel: f64,
    pub sat_alpha: f64,
    pub config: SimConfig,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        self.config.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidParams(
                "replications must be at least 1".into(),
            ));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidParams(
                "sweep values must not be empty".into(),
            ));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "sweep values must be positive, got {v}"
            )));
        }
        match self.param {
            SweepParam::Horizon => {
                if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "horizon values must be integers, got {v}"
                    )));
                }
            }
            SweepParam::Mean => {
                if self.horizon == 0 {
                    return Err(Error::InvalidParams("horizon must be at least 1".into()));
                }
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParams("no policies selected".into()));
        }
        PolicyParams::from_mean(1.0, self.epsilon_rel, self.sat_alpha)?;
        Ok(())
    }

    /// Methods in output order, with `ub` guaranteed present.
    pub fn reported_methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::with_capacity(self.methods.len() + 1);
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if !out.contains(&Method::Ub) {
            out.push(Method::Ub);
        }
        out
    }

    fn point(&self, value: f64) -> Result<(DistributionSpec, usize)> {
        match self.param {
            SweepParam::Mean => Ok((self.distribution.with_mean(value)?, self.horizon)),
            SweepParam::Horizon => Ok((self.distribution.clone(), value as usize)),
        }
    }
}

/// Aggregate of one method at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodStats {
    pub method: Method,
    pub mean_throughput: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub replications: usize,
    pub mean_outages: f64,
    /// Per-replication throughputs in replication order.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl MethodStats {
    fn from_samples(method: Method, samples: Vec<f64>, outages: &[usize]) -> Self {
        let (mean, stddev) = mean_and_stddev(&samples);
        let n = samples.len();
        Self {
            method,
            mean_throughput: mean,
            stddev,
            stderr: stddev / (n as f64).sqrt(),
            replications: n,
            mean_outages: outages.iter().sum::<usize>() as f64 / n as f64,
            samples,
        }
    }
}

/// Sample mean and (n − 1) standard deviation; zero spread for one sample.
pub fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub horizon: usize,
    pub mean_arrival: f64,
    pub target_power: f64,
    pub stats: Vec<MethodStats>,
    pub upper_bound_mean: f64,
}

impl SweepPoint {
    pub fn get(&self, method: Method) -> Option<&MethodStats> {
        self.stats.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let methods = plan.reported_methods();

    let mut values = plan.values.clone();
    values.sort_by(f64::total_cmp);

    let points = values
        .iter()
        .map(|&value| run_point(plan, &methods, value))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        param: plan.param,
        points,
    })
}

fn run_point(plan: &SweepPlan, methods: &[Method], value: f64) -> Result<SweepPoint> {
    let (spec, horizon) = plan.point(value)?;
    let params = PolicyParams::from_mean(spec.mean(), plan.epsilon_rel, plan.sat_alpha)?;
    let seed = Seed(plan.base_seed);

    // Collect preserves replication order, so the fold below is deterministic.
    let per_rep: Vec<Vec<(f64, usize)>> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let trace = sample_trace(&spec, horizon, seed.replication(r))?;
            let ub = upper_bound(&trace, &plan.config);
            methods
                .iter()
                .map(|&m| {
                    evaluate_method(&trace, m, &params, ub, &plan.config)
                        .map(|o| (o.throughput, o.outages))
                        .map_err(|e| Error::Replication {
                            value,
                            replication: r,
                            policy: m.to_string(),
                            source: Box::new(e),
                        })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let stats: Vec<MethodStats> = methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let samples: Vec<f64> = per_rep.iter().map(|rep| rep[i].0).collect();
            let outages: Vec<usize> = per_rep.iter().map(|rep| rep[i].1).collect();
            MethodStats::from_samples(m, samples, &outages)
        })
        .collect();
    let upper_bound_mean = stats
        .iter()
        .find(|s| s.method == Method::Ub)
        .map(|s| s.mean_throughput)
        .expect("ub is always reported");

    for s in &stats {
        if s.mean_throughput > upper_bound_mean + plan.config.tolerance {
            return Err(Error::Invariant(format!(
                "{} mean throughput {} exceeds mean upper bound {upper_bound_mean} at {value}",
                s.method, s.mean_throughput
            )));
        }
    }

    Ok(SweepPoint {
        value,
        horizon,
        mean_arrival: spec.mean(),
        target_power: params.target_power,
        stats,
        upper_bound_mean,
    })
}
