//! Text renderings of results.
//!
//! CSV: `,` separated, never quoted, `.` decimal point, `\n` line ends.
//! Floats use Rust's shortest round-trip formatting, so they parse back to
//! the identical value.

use std::fmt::Write as _;

use serde::Serialize;

use super::{CliError, RunConfig};
use crate::error::Error;
use crate::model::EnergyTrace;
use crate::montecarlo::{Method, MethodOutcome, SweepPlan, SweepResult};
use crate::policies::PolicyParams;

pub const SWEEP_HEADER: &str =
    "sweep_param,value,policy,mean_throughput,stddev,stderr,replications";

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::new();
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for point in &result.points {
        for st in &point.stats {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                result.param.as_str(),
                point.value,
                st.method,
                st.mean_throughput,
                st.stddev,
                st.stderr,
                st.replications
            )
            .unwrap();
        }
    }
    s
}

/// One parsed row of [`sweep_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_param: String,
    pub value: f64,
    pub policy: Method,
    pub mean_throughput: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub replications: usize,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SWEEP_HEADER => {}
        other => {
            return Err(Error::Domain(format!("unexpected CSV header {other:?}")));
        }
    }
    let bad = |line: &str| Error::Domain(format!("malformed CSV row `{line}`"));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(line));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
            Ok(SweepRow {
                sweep_param: f[0].to_string(),
                value: num(1)?,
                policy: f[2].parse()?,
                mean_throughput: num(3)?,
                stddev: num(4)?,
                stderr: num(5)?,
                replications: f[6].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}

pub fn sweep_table(result: &SweepResult) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:>10}  {:<6} {:>14} {:>12} {:>12} {:>6}",
        result.param.as_str(),
        "policy",
        "throughput",
        "stddev",
        "stderr",
        "reps"
    )
    .unwrap();
    for point in &result.points {
        for st in &point.stats {
            writeln!(
                s,
                "{:>10}  {:<6} {:>14.6} {:>12.6} {:>12.6} {:>6}",
                point.value, st.method, st.mean_throughput, st.stddev, st.stderr, st.replications
            )
            .unwrap();
        }
    }
    s
}

#[derive(Serialize)]
struct SweepJson<'a> {
    plan: &'a SweepPlan,
    result: &'a SweepResult,
}

pub fn sweep_json(plan: &SweepPlan, result: &SweepResult) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&SweepJson { plan, result })
        .map_err(|e| Error::Domain(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn run_table(cfg: &RunConfig, params: &PolicyParams, outcomes: &[MethodOutcome]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "dist {}  L {}  seed {}  P {:.6}  log base {}",
        cfg.distribution, cfg.horizon, cfg.seed, params.target_power, cfg.sim.log_base
    )
    .unwrap();
    writeln!(s, "{:<6} {:>14} {:>8}", "policy", "throughput", "outages").unwrap();
    for o in outcomes {
        writeln!(s, "{:<6} {:>14.9} {:>8}", o.method, o.throughput, o.outages).unwrap();
    }
    s
}

pub fn run_csv(outcomes: &[MethodOutcome]) -> String {
    let mut s = String::from("policy,throughput,outages\n");
    for o in outcomes {
        writeln!(s, "{},{},{}", o.method, o.throughput, o.outages).unwrap();
    }
    s
}

#[derive(Serialize)]
struct RunJson<'a> {
    distribution: String,
    horizon: usize,
    seed: u64,
    target_power: f64,
    log_base: String,
    results: Vec<RunJsonRow<'a>>,
}

#[derive(Serialize)]
struct RunJsonRow<'a> {
    policy: &'a str,
    throughput: f64,
    outages: usize,
}

pub fn run_json(
    cfg: &RunConfig,
    params: &PolicyParams,
    outcomes: &[MethodOutcome],
) -> Result<String, CliError> {
    let doc = RunJson {
        distribution: cfg.distribution.to_string(),
        horizon: cfg.horizon,
        seed: cfg.seed,
        target_power: params.target_power,
        log_base: cfg.sim.log_base.to_string(),
        results: outcomes
            .iter()
            .map(|o| RunJsonRow {
                policy: o.method.as_str(),
                throughput: o.throughput,
                outages: o.outages,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Domain(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Per-block CSV: `block,arrival` then power, rate and battery columns for
/// each scheduled method.
pub fn schedule_csv(trace: &EnergyTrace, outcomes: &[MethodOutcome]) -> String {
    let scheduled: Vec<_> = outcomes
        .iter()
        .filter_map(|o| o.schedule.as_ref().map(|s| (o.method, s)))
        .collect();
    let mut s = String::from("block,arrival");
    for (m, _) in &scheduled {
        write!(s, ",{m}_power,{m}_rate,{m}_battery").unwrap();
    }
    s.push('\n');
    for (i, e) in trace.arrivals().iter().enumerate() {
        write!(s, "{},{}", i + 1, e).unwrap();
        for (_, sch) in &scheduled {
            write!(
                s,
                ",{},{},{}",
                sch.powers()[i],
                sch.rates()[i],
                sch.batteries()[i]
            )
            .unwrap();
        }
        s.push('\n');
    }
    s
}
