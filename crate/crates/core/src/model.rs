//! Block-level system model: arrival traces, battery dynamics, achievable
//! rate and throughput, and the executor that drives a causal policy over a
//! trace.
//!
//! Energies are normalized per block (one channel use per block), so a block
//! with arrival `E` harvests exactly `E` units and a block sent at power `Q`
//! consumes exactly `Q` units.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default feasibility slack on energy comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Logarithm base used for rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Bits per channel use.
    #[default]
    Bits,
    /// Nats per channel use.
    Nats,
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Bits => f.pad("2"),
            LogBase::Nats => f.pad("e"),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" | "bits" => Ok(LogBase::Bits),
            "e" | "nats" => Ok(LogBase::Nats),
            other => Err(Error::InvalidParams(format!(
                "log base must be `2` or `e`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub log_base: LogBase,
    /// Absolute slack for energy comparisons.
    pub tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            log_base: LogBase::Bits,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl SimConfig {
    pub fn with_log_base(log_base: LogBase) -> Self {
        Self {
            log_base,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Realized per-block energy arrivals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    arrivals: Vec<f64>,
}

impl EnergyTrace {
    pub fn new(arrivals: Vec<f64>) -> Result<Self> {
        if arrivals.is_empty() {
            return Err(Error::Domain(
                "energy trace must contain at least one block".into(),
            ));
        }
        if let Some((i, e)) = arrivals
            .iter()
            .enumerate()
            .find(|(_, e)| !(e.is_finite() && **e >= 0.0))
        {
            return Err(Error::Domain(format!(
                "arrival at block {} must be finite and non-negative, got {e}",
                i + 1
            )));
        }
        Ok(Self { arrivals })
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    /// Horizon `L`.
    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.arrivals.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.total() / self.len() as f64
    }
}

/// Energy stored at a block boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatteryState {
    charge: f64,
}

impl BatteryState {
    /// Empty battery, the state before the first block.
    pub fn empty() -> Self {
        Self { charge: 0.0 }
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// Applies one block: bank `arrival`, spend `power`. `block` is the
    /// 1-based index used in the error.
    pub fn step(&self, arrival: f64, power: f64, block: usize, tolerance: f64) -> Result<Self> {
        let available = self.charge + arrival;
        let next = available - power;
        if next <= -tolerance {
            return Err(Error::CausalityViolation {
                block,
                requested: power,
                available,
            });
        }
        Ok(Self {
            charge: next.max(0.0),
        })
    }
}

/// One-block battery update with the default tolerance.
pub fn step_battery(battery: BatteryState, arrival: f64, power: f64) -> Result<BatteryState> {
    battery.step(arrival, power, 1, DEFAULT_TOLERANCE)
}

/// Achievable rate of a block sent at `power`: `log(1 + power) / 2`.
pub fn rate(power: f64, config: &SimConfig) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::Domain(format!(
            "power must be finite and non-negative, got {power}"
        )));
    }
    Ok(rate_unchecked(power, config.log_base))
}

#[inline]
pub(crate) fn rate_unchecked(power: f64, base: LogBase) -> f64 {
    let nats = 0.5 * power.ln_1p();
    match base {
        LogBase::Nats => nats,
        LogBase::Bits => nats / LN_2,
    }
}

/// Derivative of the rate at zero power, the largest slope it attains.
pub fn max_rate_slope(base: LogBase) -> f64 {
    match base {
        LogBase::Nats => 0.5,
        LogBase::Bits => 0.5 / LN_2,
    }
}

/// What a causal policy may observe when deciding block `block`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockContext {
    /// Battery charge at the start of the block.
    pub battery: f64,
    /// Energy harvested during the block.
    pub arrival: f64,
    /// 1-based block index.
    pub block: usize,
    /// Horizon `L`.
    pub horizon: usize,
}

impl BlockContext {
    pub fn available(&self) -> f64 {
        self.battery + self.arrival
    }
}

/// A decision rule that sees only the current block's context.
pub trait OnlinePolicy {
    fn name(&self) -> &str;

    fn power(&self, ctx: &BlockContext) -> f64;

    /// Whether the block is a forced skip the policy wanted to send.
    fn is_outage(&self, _ctx: &BlockContext, _power: f64) -> bool {
        false
    }
}

/// Per-block powers and rates produced by running a policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySchedule {
    powers: Vec<f64>,
    rates: Vec<f64>,
    /// Charge at the start of each block, followed by the final charge.
    batteries: Vec<f64>,
    outages: usize,
}

impl PolicySchedule {
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Battery charge at the start of each block, plus the charge after the
    /// last block (length `L + 1`).
    pub fn batteries(&self) -> &[f64] {
        &self.batteries
    }

    pub fn final_charge(&self) -> f64 {
        *self.batteries.last().expect("schedule is never empty")
    }

    /// Blocks the policy wanted to send but skipped for lack of energy.
    pub fn outages(&self) -> usize {
        self.outages
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn throughput(&self) -> f64 {
        mean_rate(&self.rates)
    }
}

fn mean_rate(rates: &[f64]) -> f64 {
    rates.iter().sum::<f64>() / rates.len() as f64
}

/// Drives `policy` over `trace`, block by block.
pub fn execute<P: OnlinePolicy + ?Sized>(
    trace: &EnergyTrace,
    policy: &P,
    config: &SimConfig,
) -> Result<PolicySchedule> {
    config.validate()?;
    let horizon = trace.len();
    let mut powers = Vec::with_capacity(horizon);
    let mut rates = Vec::with_capacity(horizon);
    let mut batteries = Vec::with_capacity(horizon + 1);
    let mut outages = 0;
    let mut battery = BatteryState::empty();

    for (i, &arrival) in trace.arrivals().iter().enumerate() {
        let ctx = BlockContext {
            battery: battery.charge(),
            arrival,
            block: i + 1,
            horizon,
        };
        let power = policy.power(&ctx);
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::InvalidPower {
                policy: policy.name().to_string(),
                block: i + 1,
                power,
            });
        }
        if policy.is_outage(&ctx, power) {
            outages += 1;
        }
        batteries.push(battery.charge());
        battery = battery.step(arrival, power, i + 1, config.tolerance)?;
        powers.push(power);
        rates.push(rate_unchecked(power, config.log_base));
    }
    batteries.push(battery.charge());

    check_causality(trace.arrivals(), &powers, config.tolerance)?;
    Ok(PolicySchedule {
        powers,
        rates,
        batteries,
        outages,
    })
}

/// Builds a schedule from a precomputed power vector (for non-causal
/// planners), replaying the battery recursion to validate it.
pub fn schedule_from_powers(
    trace: &EnergyTrace,
    powers: Vec<f64>,
    config: &SimConfig,
) -> Result<PolicySchedule> {
    config.validate()?;
    if powers.len() != trace.len() {
        return Err(Error::Domain(format!(
            "power vector has {} blocks, trace has {}",
            powers.len(),
            trace.len()
        )));
    }
    let mut batteries = Vec::with_capacity(trace.len() + 1);
    let mut battery = BatteryState::empty();
    for (i, (&arrival, &power)) in trace.arrivals().iter().zip(&powers).enumerate() {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::InvalidPower {
                policy: "precomputed".into(),
                block: i + 1,
                power,
            });
        }
        batteries.push(battery.charge());
        battery = battery.step(arrival, power, i + 1, config.tolerance)?;
    }
    batteries.push(battery.charge());
    check_causality(trace.arrivals(), &powers, config.tolerance)?;
    let rates = powers
        .iter()
        .map(|&q| rate_unchecked(q, config.log_base))
        .collect();
    Ok(PolicySchedule {
        powers,
        rates,
        batteries,
        outages: 0,
    })
}

/// Checks every prefix: cumulative spend never exceeds cumulative harvest.
///
/// The slack is `tolerance` per unit of harvested energy (with a floor of
/// one unit), so float accumulation over long horizons is absorbed.
pub fn check_causality(arrivals: &[f64], powers: &[f64], tolerance: f64) -> Result<()> {
    let mut harvested = CompensatedSum::default();
    let mut spent = CompensatedSum::default();
    for (i, (&e, &q)) in arrivals.iter().zip(powers).enumerate() {
        harvested.add(e);
        spent.add(q);
        let h = harvested.value();
        let s = spent.value();
        if s > h + tolerance * h.max(1.0) {
            return Err(Error::CausalityViolation {
                block: i + 1,
                requested: s,
                available: h,
            });
        }
    }
    Ok(())
}

/// Average rate `(1/L) Σ R_ℓ`.
pub fn throughput(schedule: &PolicySchedule) -> Result<f64> {
    if schedule.is_empty() {
        return Err(Error::Domain("throughput of an empty schedule".into()));
    }
    Ok(schedule.throughput())
}

/// Throughput of a raw rate sequence.
pub fn throughput_of_rates(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Domain("throughput of an empty schedule".into()));
    }
    Ok(mean_rate(rates))
}

/// Jensen bound: the rate of the trace's mean arrival.
pub fn upper_bound(trace: &EnergyTrace, config: &SimConfig) -> f64 {
    rate_unchecked(trace.mean(), config.log_base)
}

/// Neumaier summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
