//! Reference values for the original 2011-2016 data vintage, and a
//! cell-by-cell comparison against a run. Deviations are warnings only:
//! the vintage itself cannot be certified, so a mismatch may come from
//! the data rather than the code.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::report::{csv_line, DiagnoseReport, EstimateReport};

pub const COEFFICIENT_TOLERANCE: f64 = 0.05;
/// Percentage points.
pub const PROBABILITY_TOLERANCE_PP: f64 = 2.0;

/// (variable, inclusive, extractive)
pub const COEFFICIENTS: [(&str, f64, f64); 6] = [
    ("gini(-1)", 0.143836, 0.153449),
    ("poverty", 0.481713, 0.512410),
    ("neetsrate(-1)", 0.188412, 0.123490),
    ("social", -0.270828, -0.166532),
    ("creditb", 0.015937, 0.005033),
    ("C", 18.95898, 17.47861),
];

/// (test label, inclusive %, extractive %)
pub const PROBABILITIES_PCT: [(&str, f64, f64); 9] = [
    ("Redundant Fixed Effects - Likelihood Ratio test", 0.0, 0.0),
    ("Correlated Random Effects - Hausman test", 100.0, 100.0),
    ("Breusch-Pagan LM", 3.51, 7.08),
    ("Pesaran scaled LM", 37.83, 61.75),
    ("Bias-corrected scaled LM", 60.38, 36.04),
    ("Pesaran CD", 87.91, 71.85),
    ("Jarque-Bera test", 21.58, 43.25),
    ("Breusch-Pagan serial correlation test", 24.10, 24.88),
    ("Breusch-Pagan-Godfrey Heteroskedasticity test", 75.24, 97.71),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffCell {
    pub cluster: String,
    pub quantity: String,
    pub reference: f64,
    pub actual: Option<f64>,
    pub delta: Option<f64>,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDiff {
    pub schema_version: u32,
    pub cells: Vec<DiffCell>,
}

fn cell(cluster: &str, quantity: String, reference: f64, actual: Option<f64>, tolerance: f64) -> DiffCell {
    let delta = actual.map(|a| a - reference);
    DiffCell {
        cluster: cluster.to_string(),
        quantity,
        reference,
        actual,
        delta,
        tolerance,
        within: delta.is_some_and(|d| d.abs() <= tolerance),
    }
}

pub fn compare(estimate: &EstimateReport, diagnose: Option<&DiagnoseReport>) -> ReferenceDiff {
    let mut cells = Vec::new();
    for (k, cluster) in ["inclusive", "extractive"].iter().enumerate() {
        let model = estimate.cluster(cluster).and_then(|c| c.model.as_ref());
        for (name, inc, ext) in COEFFICIENTS {
            let reference = if k == 0 { inc } else { ext };
            let actual = model.and_then(|m| m.coefficient(name)).map(|c| c.coefficient);
            cells.push(cell(cluster, format!("coefficient {name}"), reference, actual, COEFFICIENT_TOLERANCE));
        }
        let Some(diagnose) = diagnose else { continue };
        let diag = diagnose.cluster(cluster);
        for (test, inc, ext) in PROBABILITIES_PCT {
            let reference = if k == 0 { inc } else { ext };
            let actual = diag
                .and_then(|d| d.rows.iter().find(|r| r.test == test))
                .and_then(|r| r.probability)
                .map(|p| 100.0 * p);
            cells.push(cell(cluster, format!("probability % {test}"), reference, actual, PROBABILITY_TOLERANCE_PP));
        }
    }
    ReferenceDiff {
        schema_version: crate::report::SCHEMA_VERSION,
        cells,
    }
}

impl ReferenceDiff {
    pub fn n_outside(&self) -> usize {
        self.cells.iter().filter(|c| !c.within).count()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.cells
            .iter()
            .filter(|c| !c.within)
            .map(|c| match c.actual {
                Some(a) => format!(
                    "reference diff: {} {} = {a:.6}, reference {:.6} (tolerance {})",
                    c.cluster, c.quantity, c.reference, c.tolerance
                ),
                None => format!("reference diff: {} {} not available", c.cluster, c.quantity),
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Comparison with reference vintage values (warnings only)");
        let _ = writeln!(s, "{:<12}{:<62}{:>12}{:>12}{:>12}  Within", "Cluster", "Quantity", "Reference", "Actual", "Delta");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<12}{:<62}{:>12.6}{:>12}{:>12}  {}",
                c.cluster,
                c.quantity,
                c.reference,
                c.actual.map_or("NA".into(), |a| format!("{a:.6}")),
                c.delta.map_or("NA".into(), |d| format!("{d:+.6}")),
                if c.within { "yes" } else { "NO" }
            );
        }
        let _ = writeln!(s, "{} of {} cells outside tolerance", self.n_outside(), self.cells.len());
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = csv_line(&["cluster", "quantity", "reference", "actual", "delta", "tolerance", "within"].map(String::from));
        for c in &self.cells {
            s.push_str(&csv_line(&[
                c.cluster.clone(),
                c.quantity.clone(),
                c.reference.to_string(),
                c.actual.map_or_else(String::new, |v| v.to_string()),
                c.delta.map_or_else(String::new, |v| v.to_string()),
                c.tolerance.to_string(),
                c.within.to_string(),
            ]));
        }
        s
    }
}
