//! Simulation of power-management policies for an energy-harvesting AWGN
//! transmitter with an unbounded battery.
//!
//! The model works at block granularity: in block `ℓ` the transmitter
//! harvests `E_ℓ`, spends `Q_ℓ` from battery plus harvest, and earns rate
//! `log(1 + Q_ℓ) / 2`. Policies are compared by their average rate.

pub mod arrivals;
pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod opm;
pub mod policies;

pub use arrivals::{sample_trace, DistributionSpec, Seed};
pub use error::{Error, Result};
pub use model::{
    execute, rate, step_battery, throughput, upper_bound, BatteryState, BlockContext, EnergyTrace,
    LogBase, OnlinePolicy, PolicySchedule, SimConfig,
};
pub use montecarlo::{run_sweep, Method, SweepParam, SweepPlan, SweepResult};
pub use opm::{opm_oracle, opm_schedule, OpmSchedule};
pub use policies::{Policy, PolicyKind, PolicyParams};
