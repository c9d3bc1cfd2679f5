//! Online power-management rules.
//!
//! Every rule is a pure function of the current block's battery charge,
//! arrival, index and horizon; nothing else about the trace is visible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockContext, OnlinePolicy};

pub const DEFAULT_EPSILON_REL: f64 = 0.01;
pub const DEFAULT_SAT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Constant transmit power `P`.
    pub target_power: f64,
    /// Backoff `ε` below the mean arrival, `P = Ē − ε`.
    pub margin: f64,
    /// Save-phase exponent: SAT stays silent for `ceil(L^α)` blocks.
    pub sat_alpha: f64,
}

impl PolicyParams {
    pub fn new(target_power: f64, margin: f64, sat_alpha: f64) -> Result<Self> {
        let p = Self {
            target_power,
            margin,
            sat_alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// `P = Ē·(1 − ε_rel)`.
    pub fn from_mean(mean: f64, epsilon_rel: f64, sat_alpha: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "mean must be non-negative, got {mean}"
            )));
        }
        if !(0.0..=1.0).contains(&epsilon_rel) {
            return Err(Error::InvalidParams(format!(
                "relative margin must lie in [0, 1], got {epsilon_rel}"
            )));
        }
        let margin = mean * epsilon_rel;
        Self::new(mean - margin, margin, sat_alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_power.is_finite() && self.target_power >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "target power must be non-negative, got {}",
                self.target_power
            )));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "margin must be non-negative, got {}",
                self.margin
            )));
        }
        if !(self.sat_alpha > 0.0 && self.sat_alpha < 1.0) {
            return Err(Error::InvalidParams(format!(
                "SAT exponent must lie in (0, 1), got {}",
                self.sat_alpha
            )));
        }
        Ok(())
    }
}

/// Length of SAT's save phase, `ceil(L^α)`.
pub fn save_blocks(horizon: usize, alpha: f64) -> usize {
    let x = (horizon as f64).powf(alpha);
    // powf can land a hair above an exact integer (e.g. 100^0.5).
    let r = x.round();
    let h = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x.ceil()
    };
    (h as usize).min(horizon)
}

pub fn naive_power(_battery: f64, arrival: f64) -> f64 {
    arrival
}

pub fn bet_power(battery: f64, arrival: f64, params: &PolicyParams) -> f64 {
    if battery + arrival >= params.target_power {
        params.target_power
    } else {
        0.0
    }
}

pub fn apa_power(battery: f64, arrival: f64, params: &PolicyParams) -> f64 {
    let available = battery + arrival;
    if available >= params.target_power {
        params.target_power
    } else {
        available
    }
}

/// Silent for the save phase, then BET's send rule.
pub fn sat_power(
    battery: f64,
    arrival: f64,
    block: usize,
    horizon: usize,
    params: &PolicyParams,
) -> f64 {
    if block <= save_blocks(horizon, params.sat_alpha) {
        0.0
    } else {
        bet_power(battery, arrival, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Naive,
    Sat,
    Bet,
    Apa,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Naive,
        PolicyKind::Sat,
        PolicyKind::Bet,
        PolicyKind::Apa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Naive => "naive",
            PolicyKind::Sat => "sat",
            PolicyKind::Bet => "bet",
            PolicyKind::Apa => "apa",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(PolicyKind::Naive),
            "sat" => Ok(PolicyKind::Sat),
            "bet" => Ok(PolicyKind::Bet),
            "apa" => Ok(PolicyKind::Apa),
            other => Err(Error::InvalidParams(format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub params: PolicyParams,
}

impl Policy {
    pub fn new(kind: PolicyKind, params: PolicyParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params })
    }
}

impl OnlinePolicy for Policy {
    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn power(&self, ctx: &BlockContext) -> f64 {
        match self.kind {
            PolicyKind::Naive => naive_power(ctx.battery, ctx.arrival),
            PolicyKind::Sat => sat_power(
                ctx.battery,
                ctx.arrival,
                ctx.block,
                ctx.horizon,
                &self.params,
            ),
            PolicyKind::Bet => bet_power(ctx.battery, ctx.arrival, &self.params),
            PolicyKind::Apa => apa_power(ctx.battery, ctx.arrival, &self.params),
        }
    }

    /// SAT transmit-phase blocks skipped for lack of energy.
    fn is_outage(&self, ctx: &BlockContext, power: f64) -> bool {
        match self.kind {
            PolicyKind::Sat => {
                ctx.block > save_blocks(ctx.horizon, self.params.sat_alpha)
                    && power == 0.0
                    && self.params.target_power > 0.0
            }
            _ => false,
        }
    }
}
