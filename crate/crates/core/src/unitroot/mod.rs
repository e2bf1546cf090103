//! Unit-root tests for single series and balanced panels, and the
//! twelve-test stationarity battery.

mod battery;
mod calibration;
mod panel;
mod regression;
mod series;
mod tables;

pub use battery::{
    battery_slots, run_battery, run_slots, run_battery_on_panel, verdict, BatteryOptions, BatteryVerdict, IntegrationOrder,
    SlotKind, SlotOutcome, VoteCount,
};
pub use calibration::{ips_moments_row, simulate_ips_moments, simulate_llc_adjustment, CalibratedTest, Calibration};
pub use panel::{adf_fisher, breitung_test, fisher_combine, ips_test, llc_test, pp_fisher, FisherCombination};
pub use series::{adf_test, adf_test_fixed_lag, mackinnon_p_value, newey_west_bandwidth, pp_test};
pub use tables::{ips_moments, llc_adjustment, IPS_TABLE_LAGS, IPS_TABLE_T};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicSpec {
    None,
    Constant,
    ConstantAndTrend,
}

impl DeterministicSpec {
    pub const ALL: [DeterministicSpec; 3] = [
        DeterministicSpec::ConstantAndTrend,
        DeterministicSpec::Constant,
        DeterministicSpec::None,
    ];

    pub fn n_terms(self) -> usize {
        match self {
            DeterministicSpec::None => 0,
            DeterministicSpec::Constant => 1,
            DeterministicSpec::ConstantAndTrend => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeterministicSpec::None => "none",
            DeterministicSpec::Constant => "constant",
            DeterministicSpec::ConstantAndTrend => "constant_and_trend",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(DeterministicSpec::None),
            "constant" | "c" => Some(DeterministicSpec::Constant),
            "constant_and_trend" | "ct" | "trend" => Some(DeterministicSpec::ConstantAndTrend),
            _ => None,
        }
    }
}

impl std::fmt::Display for DeterministicSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Alternative hypothesis: a common autoregressive root for all entities or
/// individual roots. Single-series tests report `Individual`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Common,
    Individual,
}

/// Outcome of a unit-root test. The null is always a unit root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: String,
    pub spec: DeterministicSpec,
    pub statistic: f64,
    pub p_value: f64,
    /// Augmentation lag per series, in entity order.
    pub lags: Vec<usize>,
    /// Observations entering the test regression(s).
    pub n_obs: usize,
    pub alternative: Alternative,
}
