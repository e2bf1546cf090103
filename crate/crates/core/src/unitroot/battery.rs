//! The twelve-configuration stationarity battery and its majority verdict.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::calibration::Calibration;
use super::panel::{adf_fisher, breitung_test, ips_test, llc_test, pp_fisher};
use super::regression::first_difference;
use super::{DeterministicSpec, UnitRootResult};
use crate::error::Result;
use crate::paneldata::PanelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    #[serde(rename = "LLC")]
    Llc,
    #[serde(rename = "Breitung")]
    Breitung,
    #[serde(rename = "IPS")]
    Ips,
    #[serde(rename = "ADF-Fisher")]
    AdfFisher,
    #[serde(rename = "PP-Fisher")]
    PpFisher,
}

impl SlotKind {
    pub fn label(self) -> &'static str {
        match self {
            SlotKind::Llc => "LLC",
            SlotKind::Breitung => "Breitung",
            SlotKind::Ips => "IPS",
            SlotKind::AdfFisher => "ADF-Fisher",
            SlotKind::PpFisher => "PP-Fisher",
        }
    }
}

/// The twelve test configurations in reporting order.
pub fn battery_slots() -> [(SlotKind, DeterministicSpec); 12] {
    use DeterministicSpec::*;
    use SlotKind::*;
    [
        (Llc, ConstantAndTrend),
        (Llc, Constant),
        (Llc, None),
        (Breitung, ConstantAndTrend),
        (Ips, ConstantAndTrend),
        (Ips, Constant),
        (AdfFisher, ConstantAndTrend),
        (AdfFisher, Constant),
        (AdfFisher, None),
        (PpFisher, ConstantAndTrend),
        (PpFisher, Constant),
        (PpFisher, None),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub test: SlotKind,
    pub spec: DeterministicSpec,
    pub result: Option<UnitRootResult>,
    /// Why the configuration could not be computed.
    pub skipped: Option<String>,
    pub confirms_stationarity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCount {
    pub votes: usize,
    pub applicable: usize,
}

impl VoteCount {
    pub fn majority(self) -> bool {
        2 * self.votes > self.applicable
    }

    pub fn from_outcomes(outcomes: &[SlotOutcome]) -> Self {
        VoteCount {
            votes: outcomes.iter().filter(|o| o.confirms_stationarity).count(),
            applicable: outcomes.iter().filter(|o| o.result.is_some()).count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrationOrder {
    #[serde(rename = "I(0)")]
    I0,
    #[serde(rename = "I(1)")]
    I1,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl std::fmt::Display for IntegrationOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntegrationOrder::I0 => "I(0)",
            IntegrationOrder::I1 => "I(1)",
            IntegrationOrder::Undetermined => "undetermined",
        })
    }
}

/// Strict majority of the applicable tests at level gives I(0); otherwise a
/// strict majority at first difference gives I(1).
pub fn verdict(level: VoteCount, difference: Option<VoteCount>) -> IntegrationOrder {
    if level.majority() {
        IntegrationOrder::I0
    } else if difference.is_some_and(VoteCount::majority) {
        IntegrationOrder::I1
    } else {
        IntegrationOrder::Undetermined
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryVerdict {
    pub variable: String,
    pub level: Vec<SlotOutcome>,
    pub difference: Option<Vec<SlotOutcome>>,
    pub votes_i0: VoteCount,
    pub votes_i1: Option<VoteCount>,
    pub order: IntegrationOrder,
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub max_lag: usize,
    /// A test confirms stationarity when its p-value is below this.
    pub threshold: f64,
    /// Monte Carlo fallback for lengths outside the LLC/IPS tables.
    pub calibration: Option<Arc<Calibration>>,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            max_lag: 1,
            threshold: 0.05,
            calibration: None,
        }
    }
}

fn run_slot(slices: &[Vec<f64>], kind: SlotKind, spec: DeterministicSpec, opts: &BatteryOptions) -> Result<UnitRootResult> {
    let cal = opts.calibration.as_deref();
    match kind {
        SlotKind::Llc => llc_test(slices, spec, opts.max_lag, cal),
        SlotKind::Breitung => breitung_test(slices, opts.max_lag),
        SlotKind::Ips => ips_test(slices, spec, opts.max_lag, cal),
        SlotKind::AdfFisher => adf_fisher(slices, spec, opts.max_lag),
        SlotKind::PpFisher => pp_fisher(slices, spec),
    }
}

pub fn run_slots(slices: &[Vec<f64>], opts: &BatteryOptions) -> Vec<SlotOutcome> {
    battery_slots()
        .iter()
        .map(|&(test, spec)| match run_slot(slices, test, spec, opts) {
            Ok(r) => SlotOutcome {
                test,
                spec,
                confirms_stationarity: r.p_value < opts.threshold,
                result: Some(r),
                skipped: None,
            },
            Err(e) => SlotOutcome {
                test,
                spec,
                result: None,
                skipped: Some(e.to_string()),
                confirms_stationarity: false,
            },
        })
        .collect()
}

/// Runs the battery at level and, unless the level verdict is already
/// I(0), at first difference.
pub fn run_battery(variable: &str, slices: &[Vec<f64>], opts: &BatteryOptions) -> BatteryVerdict {
    let level = run_slots(slices, opts);
    let votes_i0 = VoteCount::from_outcomes(&level);
    let (difference, votes_i1) = if votes_i0.majority() {
        (None, None)
    } else {
        let diffs: Vec<Vec<f64>> = slices.iter().map(|s| first_difference(s)).collect();
        let d = run_slots(&diffs, opts);
        let v = VoteCount::from_outcomes(&d);
        (Some(d), Some(v))
    };
    BatteryVerdict {
        variable: variable.to_string(),
        order: verdict(votes_i0, votes_i1),
        level,
        difference,
        votes_i0,
        votes_i1,
    }
}

pub fn run_battery_on_panel(panel: &PanelDataset, variable: &str, opts: &BatteryOptions) -> Result<BatteryVerdict> {
    let slices = panel.balanced_slice(variable)?;
    Ok(run_battery(variable, &slices, opts))
}
