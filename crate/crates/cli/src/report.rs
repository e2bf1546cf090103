//! Serializable report records and their text, CSV and JSON renderings.
//! JSON output is pretty-printed with a trailing newline; re-rendering a
//! parsed report reproduces the same bytes.

use std::fmt::Write as _;

use ineqpanel::cluster::StabilityReport;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Finite values only; NaN and infinities become `None`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Eight significant characters, the usual layout of econometric output
/// (`0.143836`, `18.95898`, `1566.931`).
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e7).contains(&a) {
        return format!("{x:.6e}");
    }
    let before = if a < 1.0 { 1 } else { a.log10().floor() as i32 + 1 };
    let decimals = (7 - before).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_num)
}

pub fn fmt_prob(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |p| format!("{p:.4}"))
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_line(fields: &[String]) -> String {
    let mut s = fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn cluster_title(cluster: &str) -> String {
    match cluster {
        "inclusive" => "Inclusive institutions model".into(),
        "extractive" => "Extractive institutions model".into(),
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------- clusters

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRow {
    pub country: String,
    pub score: f64,
    pub cluster: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub schema_version: u32,
    pub criterion: String,
    pub tie_rule: String,
    pub threshold: f64,
    pub members: Vec<MemberRow>,
    pub inclusive: Vec<String>,
    pub extractive: Vec<String>,
    /// `None` when some sub-index cannot be split (all scores equal).
    pub stability: Option<StabilityReport>,
    pub stability_error: Option<String>,
}

impl ClusterReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Clustering criterion: {}", self.criterion);
        let _ = writeln!(s, "Median threshold: {:.4} (ties go {})", self.threshold, self.tie_rule);
        let _ = writeln!(s, "Inclusive institutions ({}): {}", self.inclusive.len(), self.inclusive.join(" "));
        let _ = writeln!(s, "Extractive institutions ({}): {}", self.extractive.len(), self.extractive.join(" "));
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<8} {:>8}  {:<10}", "Country", "Score", "Cluster");
        for m in &self.members {
            let _ = writeln!(s, "{:<8} {:>8.2}  {:<10}", m.country, m.score, m.cluster);
        }
        let _ = writeln!(s);
        let Some(st) = &self.stability else {
            let _ = writeln!(
                s,
                "Stability analysis unavailable: {}",
                self.stability_error.as_deref().unwrap_or("not computed")
            );
            return s;
        };
        let _ = writeln!(s, "Stability across {} criteria", st.criteria.len());
        let _ = writeln!(s, "Same cluster under every criterion: {}", st.stable.join(" "));
        let _ = writeln!(s, "Sub-indices reproducing the pillar split:");
        for m in &st.matching_subindices {
            let _ = writeln!(s, "  {m}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<8} {:<5} {:>9}  Leaves its cluster on", "Country", "Main", "Inclusive");
        for p in &st.countries {
            let _ = writeln!(
                s,
                "{:<8} {:<5} {:>6}/{:<2}  {}",
                p.country,
                p.main.code(),
                p.inclusive_count,
                st.criteria.len(),
                if p.flips.is_empty() { "-".to_string() } else { p.flips.join("; ") }
            );
        }
        s
    }

    pub fn assignment_csv(&self) -> String {
        let mut s = csv_line(&["country".into(), "score".into(), "cluster".into()]);
        for m in &self.members {
            s.push_str(&csv_line(&[m.country.clone(), m.score.to_string(), m.cluster.clone()]));
        }
        s
    }
}

// --------------------------------------------------------------- unit root

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Votes {
    pub votes: usize,
    pub applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub stage: String,
    pub test: String,
    pub spec: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub lags: Vec<usize>,
    pub confirms_stationarity: bool,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootRow {
    pub variable: String,
    pub level: Option<Votes>,
    pub difference: Option<Votes>,
    pub verdict: Option<String>,
    pub error: Option<String>,
    pub tests: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootCluster {
    pub cluster: String,
    pub cross_sections: usize,
    pub rows: Vec<UnitRootRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootReport {
    pub schema_version: u32,
    pub threshold: f64,
    pub max_lag: usize,
    pub clusters: Vec<UnitRootCluster>,
}

impl UnitRootRow {
    fn level_cell(&self) -> String {
        self.level.map_or_else(|| "-".into(), |v| format!("{} of {}", v.votes, v.applicable))
    }

    fn difference_cell(&self) -> String {
        match (self.level, self.difference) {
            (Some(l), _) if 2 * l.votes > l.applicable => "Stationary at I(0)".into(),
            (_, Some(d)) => format!("{} of {}", d.votes, d.applicable),
            _ => "-".into(),
        }
    }
}

impl UnitRootReport {
    pub fn n_errors(&self) -> usize {
        self.clusters.iter().flat_map(|c| &c.rows).filter(|r| r.error.is_some()).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Stationarity of the data (Schwarz criterion, max lag {}, {}% threshold)",
            self.max_lag,
            self.threshold * 100.0
        );
        let _ = writeln!(
            s,
            "{:<32} {:<16} {:<22} {:<22} Verdict",
            "Model", "Variable", "Tests confirming I(0)", "Tests confirming I(1)"
        );
        for c in &self.clusters {
            for (k, r) in c.rows.iter().enumerate() {
                let model = if k == 0 { cluster_title(&c.cluster) } else { String::new() };
                match &r.error {
                    Some(e) => {
                        let _ = writeln!(s, "{:<32} {:<16} error: {e}", model, r.variable);
                    }
                    None => {
                        let _ = writeln!(
                            s,
                            "{:<32} {:<16} {:<22} {:<22} {}",
                            model,
                            r.variable,
                            r.level_cell(),
                            r.difference_cell(),
                            r.verdict.as_deref().unwrap_or("-")
                        );
                    }
                }
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = csv_line(
            &["cluster", "variable", "level_votes", "level_applicable", "difference_votes", "difference_applicable", "verdict", "error"]
                .map(String::from),
        );
        for c in &self.clusters {
            for r in &c.rows {
                let n = |v: Option<Votes>, f: fn(Votes) -> usize| v.map_or_else(String::new, |v| f(v).to_string());
                s.push_str(&csv_line(&[
                    c.cluster.clone(),
                    r.variable.clone(),
                    n(r.level, |v| v.votes),
                    n(r.level, |v| v.applicable),
                    n(r.difference, |v| v.votes),
                    n(r.difference, |v| v.applicable),
                    r.verdict.clone().unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ]));
            }
        }
        s
    }

    pub fn tests_csv(&self) -> String {
        let mut s = csv_line(
            &["cluster", "variable", "stage", "test", "spec", "statistic", "p_value", "lags", "confirms_stationarity", "skipped"]
                .map(String::from),
        );
        for c in &self.clusters {
            for r in &c.rows {
                for t in &r.tests {
                    s.push_str(&csv_line(&[
                        c.cluster.clone(),
                        r.variable.clone(),
                        t.stage.clone(),
                        t.test.clone(),
                        t.spec.clone(),
                        opt_cell(t.statistic),
                        opt_cell(t.p_value),
                        t.lags.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
                        t.confirms_stationarity.to_string(),
                        t.skipped.clone().unwrap_or_default(),
                    ]));
                }
            }
        }
        s
    }
}

// -------------------------------------------------------------- estimation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRecord {
    pub name: String,
    pub coefficient: f64,
    pub std_error: Option<f64>,
    pub t_statistic: Option<f64>,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub r_squared: Option<f64>,
    pub adjusted_r_squared: Option<f64>,
    pub se_of_regression: Option<f64>,
    pub sum_squared_resid: Option<f64>,
    pub f_statistic: Option<f64>,
    pub prob_f: Option<f64>,
    pub durbin_watson: Option<f64>,
    pub mean_dependent: Option<f64>,
    pub sd_dependent: Option<f64>,
}

impl From<&ineqpanel::linreg::FitStatistics> for StatsRecord {
    fn from(f: &ineqpanel::linreg::FitStatistics) -> Self {
        StatsRecord {
            r_squared: f.r_squared.and_then(finite),
            adjusted_r_squared: f.adjusted_r_squared.and_then(finite),
            se_of_regression: finite(f.se_of_regression),
            sum_squared_resid: finite(f.sum_squared_resid),
            f_statistic: f.f_statistic.and_then(finite),
            prob_f: f.prob_f.and_then(finite),
            durbin_watson: f.durbin_watson.and_then(finite),
            mean_dependent: finite(f.mean_dependent),
            sd_dependent: finite(f.sd_dependent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub method: String,
    pub dependent: String,
    pub first_year: i32,
    pub last_year: i32,
    pub periods_included: usize,
    pub cross_sections: usize,
    pub observations: usize,
    pub balanced: bool,
    pub weighting_note: Option<String>,
    pub covariance_note: String,
    pub coefficients: Vec<CoefRecord>,
    pub effects_specification: String,
    pub effects: Vec<EntityRecord>,
    pub weights: Vec<EntityRecord>,
    pub weighted: Option<StatsRecord>,
    pub unweighted: StatsRecord,
    pub df_resid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCluster {
    pub cluster: String,
    pub model: Option<ModelSection>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub specification: String,
    pub clusters: Vec<EstimateCluster>,
}

fn stats_block(s: &mut String, title: &str, st: &StatsRecord, full: bool) {
    let _ = writeln!(s, "{title}");
    let pair = |s: &mut String, a: &str, x: Option<f64>, b: &str, y: Option<f64>| {
        let _ = writeln!(s, "{:<22}{:>12}    {:<22}{:>12}", a, fmt_opt(x), b, fmt_opt(y));
    };
    pair(s, "R-squared", st.r_squared, "Mean dependent var", st.mean_dependent);
    if full {
        pair(s, "Adjusted R-squared", st.adjusted_r_squared, "S.D. dependent var", st.sd_dependent);
        pair(s, "S.E. of regression", st.se_of_regression, "Sum squared resid", st.sum_squared_resid);
        pair(s, "F-statistic", st.f_statistic, "Durbin-Watson stat", st.durbin_watson);
        let _ = writeln!(s, "{:<22}{:>12}", "Prob(F-statistic)", st.prob_f.map_or("NA".into(), |p| format!("{p:.6}")));
    } else {
        pair(s, "Sum squared resid", st.sum_squared_resid, "Durbin-Watson stat", st.durbin_watson);
    }
}

impl ModelSection {
    pub fn coefficient(&self, name: &str) -> Option<&CoefRecord> {
        self.coefficients.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Dependent Variable: {}", self.dependent.to_uppercase());
        let _ = writeln!(s, "Method: {}", self.method);
        let _ = writeln!(s, "Sample (adjusted): {} {}", self.first_year, self.last_year);
        let _ = writeln!(s, "Periods included: {}", self.periods_included);
        let _ = writeln!(s, "Cross-sections included: {}", self.cross_sections);
        let _ = writeln!(
            s,
            "Total panel ({}) observations: {}",
            if self.balanced { "balanced" } else { "unbalanced" },
            self.observations
        );
        if let Some(w) = &self.weighting_note {
            let _ = writeln!(s, "{w}");
        }
        let _ = writeln!(s, "{}", self.covariance_note);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16}{:>14}{:>14}{:>14}{:>10}", "Variable", "Coefficient", "Std. Error", "t-Statistic", "Prob.");
        for c in &self.coefficients {
            let _ = writeln!(
                s,
                "{:<16}{:>14}{:>14}{:>14}{:>10}",
                c.name.to_uppercase(),
                fmt_num(c.coefficient),
                fmt_opt(c.std_error),
                fmt_opt(c.t_statistic),
                fmt_prob(c.probability)
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Effects Specification");
        let _ = writeln!(s, "{}", self.effects_specification);
        let _ = writeln!(s);
        if let Some(w) = &self.weighted {
            stats_block(&mut s, "Weighted Statistics", w, true);
            let _ = writeln!(s);
            stats_block(&mut s, "Unweighted Statistics", &self.unweighted, false);
        } else {
            stats_block(&mut s, "Statistics", &self.unweighted, true);
        }
        s
    }
}

impl EstimateReport {
    pub fn n_failed(&self) -> usize {
        self.clusters.iter().filter(|c| c.model.is_none()).count()
    }

    pub fn cluster(&self, name: &str) -> Option<&EstimateCluster> {
        self.clusters.iter().find(|c| c.cluster == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Specification: {}", self.specification);
        for c in &self.clusters {
            let _ = writeln!(s);
            let _ = writeln!(s, "== {} ==", cluster_title(&c.cluster));
            match (&c.model, &c.error) {
                (Some(m), _) => s.push_str(&m.to_text()),
                (None, Some(e)) => {
                    let _ = writeln!(s, "error: {e}");
                }
                (None, None) => {
                    let _ = writeln!(s, "not estimated");
                }
            }
        }
        s
    }

    pub fn coefficients_csv(&self) -> String {
        let mut s = csv_line(&["cluster", "variable", "coefficient", "std_error", "t_statistic", "probability", "error"].map(String::from));
        for c in &self.clusters {
            match &c.model {
                Some(m) => {
                    for r in &m.coefficients {
                        s.push_str(&csv_line(&[
                            c.cluster.clone(),
                            r.name.clone(),
                            r.coefficient.to_string(),
                            opt_cell(r.std_error),
                            opt_cell(r.t_statistic),
                            opt_cell(r.probability),
                            String::new(),
                        ]));
                    }
                }
                None => s.push_str(&csv_line(&[
                    c.cluster.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    c.error.clone().unwrap_or_default(),
                ])),
            }
        }
        s
    }
}

// ------------------------------------------------------------- diagnostics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub assumption: String,
    pub test: String,
    pub statistic: Option<f64>,
    pub probability: Option<f64>,
    pub df: Option<usize>,
    pub n: Option<usize>,
    pub cell: String,
    pub rejects_at_5pct: Option<bool>,
    pub note: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseCluster {
    pub cluster: String,
    pub rows: Vec<DiagRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub schema_version: u32,
    pub serial_lags: usize,
    pub clusters: Vec<DiagnoseCluster>,
}

impl DiagnoseReport {
    pub fn n_errors(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| usize::from(c.error.is_some()) + c.rows.iter().filter(|r| r.error.is_some()).count())
            .sum()
    }

    pub fn cluster(&self, name: &str) -> Option<&DiagnoseCluster> {
        self.clusters.iter().find(|c| c.cluster == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Assumptions checked (probabilities)");
        let mut header = format!("{:<38}{:<48}", "Assumption", "Test");
        for c in &self.clusters {
            let _ = write!(header, "{:<32}", cluster_title(&c.cluster));
        }
        let _ = writeln!(s, "{}", header.trim_end());
        let n_rows = self.clusters.iter().map(|c| c.rows.len()).max().unwrap_or(0);
        let mut last_assumption = String::new();
        for i in 0..n_rows {
            let Some(first) = self.clusters.iter().find_map(|c| c.rows.get(i)) else { continue };
            let a = if first.assumption == last_assumption { "" } else { first.assumption.as_str() };
            let mut line = format!("{:<38}{:<48}", a, first.test);
            for c in &self.clusters {
                let cell = c.rows.get(i).map_or_else(|| c.error.clone().map_or("-".into(), |_| "error".into()), |r| r.cell.clone());
                let _ = write!(line, "{cell:<32}");
            }
            let _ = writeln!(s, "{}", line.trim_end());
            last_assumption = first.assumption.clone();
        }
        for c in &self.clusters {
            if let Some(e) = &c.error {
                let _ = writeln!(s, "{}: {e}", cluster_title(&c.cluster));
            }
            for r in &c.rows {
                if let Some(e) = &r.error {
                    let _ = writeln!(s, "{} / {}: {e}", cluster_title(&c.cluster), r.test);
                }
                if let Some(n) = &r.note {
                    let _ = writeln!(s, "note, {} / {}: {n}", cluster_title(&c.cluster), r.test);
                }
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = csv_line(
            &["cluster", "assumption", "test", "statistic", "probability", "n", "df", "cell", "error"].map(String::from),
        );
        for c in &self.clusters {
            for r in &c.rows {
                s.push_str(&csv_line(&[
                    c.cluster.clone(),
                    r.assumption.clone(),
                    r.test.clone(),
                    opt_cell(r.statistic),
                    opt_cell(r.probability),
                    r.n.map_or_else(String::new, |v| v.to_string()),
                    r.df.map_or_else(String::new, |v| v.to_string()),
                    r.cell.clone(),
                    r.error.clone().unwrap_or_default(),
                ]));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_layout() {
        assert_eq!(fmt_num(0.143836), "0.143836");
        assert_eq!(fmt_num(18.95898), "18.95898");
        assert_eq!(fmt_num(-0.270828), "-0.270828");
        assert_eq!(fmt_num(1566.931), "1566.931");
        assert_eq!(fmt_num(0.0), "0.000000");
        assert_eq!(fmt_num(f64::NAN), "NA");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }
}
