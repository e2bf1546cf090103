//! The subcommands as library functions. Each writes its reports under the
//! configured output directory and returns the text rendering, the files
//! written and any warnings; `main` only handles arguments and exit codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ineqpanel::cluster::{
    load_scores_csv, split_by, subindex_stability, write_scores_csv, InstitutionScores, Membership, TieRule,
};
use ineqpanel::diagnostics::{pearson, run_diagnostics};
use ineqpanel::estimators::{panel_egls_fe, Effects, EstimationResult, EstimationSpec, Weighting};
use ineqpanel::linreg::CovarianceKind;
use ineqpanel::paneldata::{read_long_csv, read_wide_csv, write_long_csv, LongCsvSchema, PanelDataset};
use ineqpanel::simulate::{synthetic_inequality_panel, SyntheticConfig};
use ineqpanel::unitroot::{run_battery_on_panel, BatteryOptions, Calibration, SlotOutcome};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, ExitStatus, Result};
use crate::manifest::{sha256_file, InputRecord, Manifest, StageStatus};
use crate::reference;
use crate::report::{
    finite, to_json, ClusterReport, CoefRecord, DiagRecord, DiagnoseCluster, DiagnoseReport, EntityRecord,
    EstimateCluster, EstimateReport, MemberRow, ModelSection, SlotRecord, StatsRecord, UnitRootCluster, UnitRootReport,
    UnitRootRow, Votes, SCHEMA_VERSION,
};

pub const CLUSTERS: [&str; 2] = ["inclusive", "extractive"];

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub status: ExitStatus,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
    pub text: String,
    pub warnings: Vec<String>,
}

// ------------------------------------------------------------------ inputs

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        CliError::Core(ineqpanel::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Long format when the header has `variable` and `value` columns,
/// wide otherwise.
pub fn load_panel(path: &Path) -> Result<PanelDataset> {
    let text = read_input(path)?;
    let header: Vec<String> = text
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(|h| h.trim().trim_matches('"').to_ascii_lowercase())
        .collect();
    let long = header.iter().any(|h| h == "variable") && header.iter().any(|h| h == "value");
    let parsed = if long {
        read_long_csv(text.as_bytes(), &LongCsvSchema::default())
    } else {
        read_wide_csv(text.as_bytes())
    };
    parsed.map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scores(path: &Path) -> Result<Vec<InstitutionScores>> {
    if !path.exists() {
        read_input(path)?;
    }
    load_scores_csv(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Config(format!("no {what} file given (use --{flag} or `{flag} =` in the config)")))
}

// ------------------------------------------------------------------ output

struct OutputDir<'a> {
    dir: &'a Path,
    formats: &'a [Format],
    files: Vec<PathBuf>,
}

impl<'a> OutputDir<'a> {
    fn create(cfg: &'a RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Write {
            path: cfg.out.clone(),
            source: e,
        })?;
        Ok(OutputDir {
            dir: &cfg.out,
            formats: &cfg.formats,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Write {
            path: path.clone(),
            source: e,
        })?;
        self.files.push(path);
        Ok(())
    }

    /// Writes only when `format` was requested.
    fn put(&mut self, format: Format, name: &str, contents: impl FnOnce() -> Result<String>) -> Result<()> {
        if self.formats.contains(&format) {
            let text = contents()?;
            self.write(name, &text)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- clusters

fn tie_name(t: TieRule) -> &'static str {
    match t {
        TieRule::Extractive => "extractive",
        TieRule::Inclusive => "inclusive",
    }
}

pub fn build_cluster_report(cfg: &RunConfig, scores: &[InstitutionScores]) -> ineqpanel::Result<ClusterReport> {
    for s in scores {
        s.validate()?;
    }
    let split = split_by(scores, cfg.criterion, cfg.tie_rule)?;
    let mut members: Vec<MemberRow> = scores
        .iter()
        .map(|s| MemberRow {
            country: s.country.clone(),
            score: s.score(cfg.criterion),
            cluster: match split.membership(&s.country) {
                Some(Membership::Inclusive) => "inclusive".into(),
                _ => "extractive".into(),
            },
        })
        .collect();
    members.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.country.cmp(&b.country)));
    let (stability, stability_error) = match subindex_stability(scores, cfg.tie_rule) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ClusterReport {
        schema_version: SCHEMA_VERSION,
        criterion: cfg.criterion.name(),
        tie_rule: tie_name(cfg.tie_rule).into(),
        threshold: split.threshold,
        members,
        inclusive: split.inclusive,
        extractive: split.extractive,
        stability,
        stability_error,
    })
}

fn write_cluster_files(out: &mut OutputDir, report: &ClusterReport) -> Result<()> {
    out.put(Format::Text, "clusters.txt", || Ok(report.to_text()))?;
    out.put(Format::Csv, "clusters.csv", || Ok(report.assignment_csv()))?;
    if let Some(st) = &report.stability {
        out.put(Format::Csv, "stability.csv", || Ok(st.to_csv()))?;
    }
    out.put(Format::Json, "clusters.json", || to_json(report))
}

fn load_clusters(cfg: &RunConfig) -> Result<ClusterReport> {
    let path = required(&cfg.scores, "institution scores", "scores")?;
    let scores = load_scores(path)?;
    build_cluster_report(cfg, &scores).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_cluster(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let report = load_clusters(cfg)?;
    let mut out = OutputDir::create(cfg)?;
    write_cluster_files(&mut out, &report)?;
    let warnings = report
        .stability_error
        .iter()
        .map(|e| format!("sub-index stability not computed: {e}"))
        .collect();
    Ok(CommandOutput {
        status: ExitStatus::Success,
        files: out.files,
        text: report.to_text(),
        warnings,
    })
}

/// One sub-panel per cluster, restricted to countries present in both the
/// scores and the panel.
pub fn cluster_panels(
    panel: &PanelDataset,
    clusters: &ClusterReport,
    warnings: &mut Vec<String>,
) -> Vec<(String, std::result::Result<PanelDataset, String>)> {
    let scored: Vec<&String> = clusters.inclusive.iter().chain(&clusters.extractive).collect();
    for e in panel.entities() {
        if !scored.contains(&e) {
            warnings.push(format!("panel entity {e} has no institution score and is left out"));
        }
    }
    CLUSTERS
        .iter()
        .zip([&clusters.inclusive, &clusters.extractive])
        .map(|(name, list)| {
            let mut members = Vec::new();
            for c in list {
                if panel.entity_index(c).is_some() {
                    members.push(c.clone());
                } else {
                    warnings.push(format!("{c} has an institution score but no panel data"));
                }
            }
            let sub = if members.len() < 2 {
                Err(format!(
                    "{name} cluster has {} countries with panel data; at least 2 are needed",
                    members.len()
                ))
            } else {
                panel.subset(&members).map_err(|e| e.to_string())
            };
            (name.to_string(), sub)
        })
        .collect()
}

// --------------------------------------------------------------- unit root

fn calibration(cfg: &RunConfig) -> Result<Option<Arc<Calibration>>> {
    if !cfg.calibration {
        return Ok(None);
    }
    let cal = match &cfg.calibration_cache {
        Some(p) => Calibration::with_cache_file(cfg.calibration_reps, cfg.seed, p)?,
        None => Calibration::new(cfg.calibration_reps, cfg.seed),
    };
    Ok(Some(Arc::new(cal)))
}

fn slot_records(stage: &str, slots: &[SlotOutcome]) -> Vec<SlotRecord> {
    slots
        .iter()
        .map(|s| SlotRecord {
            stage: stage.into(),
            test: s.test.label().into(),
            spec: s.spec.as_str().into(),
            statistic: s.result.as_ref().and_then(|r| finite(r.statistic)),
            p_value: s.result.as_ref().and_then(|r| finite(r.p_value)),
            lags: s.result.as_ref().map(|r| r.lags.clone()).unwrap_or_default(),
            confirms_stationarity: s.confirms_stationarity,
            skipped: s.skipped.clone(),
        })
        .collect()
}

fn error_row(variable: String, error: String) -> UnitRootRow {
    UnitRootRow {
        variable,
        level: None,
        difference: None,
        verdict: None,
        error: Some(error),
        tests: Vec::new(),
    }
}

pub fn unitroot_report(
    cfg: &RunConfig,
    panels: &[(String, std::result::Result<PanelDataset, String>)],
    calibration: Option<Arc<Calibration>>,
) -> UnitRootReport {
    let opts = BatteryOptions {
        max_lag: cfg.max_lag,
        threshold: cfg.threshold,
        calibration,
    };
    let vars = cfg.battery_variables();
    let clusters = panels
        .iter()
        .map(|(name, panel)| {
            let rows = vars
                .iter()
                .map(|v| {
                    let label = v.label();
                    let panel = match panel {
                        Ok(p) => p,
                        Err(e) => return error_row(label, e.clone()),
                    };
                    let run = if v.lag > 0 {
                        panel.with_lag(&v.name, v.lag).and_then(|p| run_battery_on_panel(&p, &label, &opts))
                    } else {
                        run_battery_on_panel(panel, &label, &opts)
                    };
                    match run {
                        Ok(b) => {
                            let mut tests = slot_records("level", &b.level);
                            if let Some(d) = &b.difference {
                                tests.extend(slot_records("difference", d));
                            }
                            UnitRootRow {
                                variable: label,
                                level: Some(Votes {
                                    votes: b.votes_i0.votes,
                                    applicable: b.votes_i0.applicable,
                                }),
                                difference: b.votes_i1.map(|v| Votes {
                                    votes: v.votes,
                                    applicable: v.applicable,
                                }),
                                verdict: Some(b.order.to_string()),
                                error: None,
                                tests,
                            }
                        }
                        Err(e) => error_row(label, e.to_string()),
                    }
                })
                .collect();
            UnitRootCluster {
                cluster: name.clone(),
                cross_sections: panel.as_ref().map_or(0, PanelDataset::n_entities),
                rows,
            }
        })
        .collect();
    UnitRootReport {
        schema_version: SCHEMA_VERSION,
        threshold: cfg.threshold,
        max_lag: cfg.max_lag,
        clusters,
    }
}

fn write_unitroot_files(out: &mut OutputDir, report: &UnitRootReport) -> Result<()> {
    out.put(Format::Text, "unitroot.txt", || Ok(report.to_text()))?;
    out.put(Format::Csv, "unitroot.csv", || Ok(report.summary_csv()))?;
    out.put(Format::Csv, "unitroot_tests.csv", || Ok(report.tests_csv()))?;
    out.put(Format::Json, "unitroot.json", || to_json(report))
}

struct Inputs {
    panel: PanelDataset,
    clusters: ClusterReport,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    cfg.validate()?;
    let data = required(&cfg.data, "panel data", "data")?;
    let clusters = load_clusters(cfg)?;
    let panel = load_panel(data)?;
    Ok(Inputs { panel, clusters })
}

pub fn cmd_unitroot(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = load_inputs(cfg)?;
    let mut warnings = Vec::new();
    let panels = cluster_panels(&inputs.panel, &inputs.clusters, &mut warnings);
    let report = unitroot_report(cfg, &panels, calibration(cfg)?);
    let mut out = OutputDir::create(cfg)?;
    write_unitroot_files(&mut out, &report)?;
    Ok(CommandOutput {
        status: if report.n_errors() > 0 { ExitStatus::Partial } else { ExitStatus::Success },
        files: out.files,
        text: report.to_text(),
        warnings,
    })
}

// ---------------------------------------------------------------- estimate

fn estimation_spec(cfg: &RunConfig) -> EstimationSpec {
    let mut spec = EstimationSpec::egls_fixed_effects(cfg.dependent.clone(), cfg.regressors.clone());
    spec.variance_divisor = cfg.variance_divisor;
    spec
}

fn specification_label(cfg: &RunConfig) -> String {
    let regs: Vec<String> = cfg.regressors.iter().map(|r| r.label()).collect();
    format!("{} on {}, C", cfg.dependent.label(), regs.join(", "))
}

pub fn model_section(r: &EstimationResult) -> ModelSection {
    let entity_records =
        |v: &[ineqpanel::estimators::EntityValue]| v.iter().map(|e| EntityRecord { entity: e.entity.clone(), value: e.value }).collect();
    ModelSection {
        method: r.method.clone(),
        dependent: r.dependent.clone(),
        first_year: r.sample.first_year,
        last_year: r.sample.last_year,
        periods_included: r.sample.periods_included,
        cross_sections: r.sample.cross_sections,
        observations: r.sample.observations,
        balanced: r.sample.balanced,
        weighting_note: r
            .weights
            .as_ref()
            .map(|_| "Linear estimation after one-step weighting matrix".to_string()),
        covariance_note: match r.covariance_kind {
            CovarianceKind::Classical => "Coefficient covariance: conventional".into(),
            CovarianceKind::WhiteCrossSection => "White cross-section standard errors & covariance (d.f. corrected)".into(),
        },
        coefficients: r
            .coefficients
            .iter()
            .map(|c| CoefRecord {
                name: c.name.clone(),
                coefficient: c.coefficient,
                std_error: finite(c.std_error),
                t_statistic: finite(c.t_statistic),
                probability: finite(c.probability),
            })
            .collect(),
        effects_specification: match r.effects_kind {
            Effects::CrossSectionFixed => "Cross-section fixed (dummy variables)".into(),
            Effects::CrossSectionRandom => "Cross-section random".into(),
            Effects::None => "None".into(),
        },
        effects: entity_records(&r.effects),
        weights: r.weights.as_deref().map(entity_records).unwrap_or_default(),
        weighted: r.weighted.as_ref().map(StatsRecord::from),
        unweighted: StatsRecord::from(&r.unweighted),
        df_resid: r.df_resid,
    }
}

fn estimate_models(
    cfg: &RunConfig,
    panels: &[(String, std::result::Result<PanelDataset, String>)],
) -> Vec<(String, std::result::Result<EstimationResult, String>)> {
    let spec = estimation_spec(cfg);
    debug_assert_eq!(spec.weighting, Weighting::CrossSectionWeights);
    panels
        .iter()
        .map(|(name, p)| {
            let fit = match p {
                Ok(p) => panel_egls_fe(p, &spec).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            (name.clone(), fit)
        })
        .collect()
}

fn estimate_report(cfg: &RunConfig, models: &[(String, std::result::Result<EstimationResult, String>)]) -> EstimateReport {
    EstimateReport {
        schema_version: SCHEMA_VERSION,
        specification: specification_label(cfg),
        clusters: models
            .iter()
            .map(|(name, m)| EstimateCluster {
                cluster: name.clone(),
                model: m.as_ref().ok().map(model_section),
                error: m.as_ref().err().cloned(),
            })
            .collect(),
    }
}

fn write_estimate_files(out: &mut OutputDir, report: &EstimateReport) -> Result<()> {
    out.put(Format::Text, "estimate.txt", || Ok(report.to_text()))?;
    out.put(Format::Csv, "estimate.csv", || Ok(report.coefficients_csv()))?;
    out.put(Format::Json, "estimate.json", || to_json(report))
}

fn estimate_status(report: &EstimateReport, warnings: &mut Vec<String>) -> ExitStatus {
    match report.n_failed() {
        0 => ExitStatus::Success,
        n if n < report.clusters.len() => {
            for c in report.clusters.iter().filter(|c| c.model.is_none()) {
                warnings.push(format!(
                    "{} cluster not estimated: {}",
                    c.cluster,
                    c.error.as_deref().unwrap_or("unknown error")
                ));
            }
            ExitStatus::Success
        }
        _ => ExitStatus::Partial,
    }
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = load_inputs(cfg)?;
    let mut warnings = Vec::new();
    let panels = cluster_panels(&inputs.panel, &inputs.clusters, &mut warnings);
    let models = estimate_models(cfg, &panels);
    let report = estimate_report(cfg, &models);
    let status = estimate_status(&report, &mut warnings);
    let mut out = OutputDir::create(cfg)?;
    write_estimate_files(&mut out, &report)?;
    let mut text = report.to_text();
    if cfg.reference_diff {
        let diff = reference::compare(&report, None);
        warnings.extend(diff.warnings());
        write_reference_files(&mut out, &diff)?;
        text.push('\n');
        text.push_str(&diff.to_text());
    }
    Ok(CommandOutput {
        status,
        files: out.files,
        text,
        warnings,
    })
}

// ------------------------------------------------------------- diagnostics

fn diagnose_report(cfg: &RunConfig, models: &[(String, std::result::Result<EstimationResult, String>)]) -> DiagnoseReport {
    let clusters = models
        .iter()
        .map(|(name, m)| match m {
            Ok(model) => {
                let d = run_diagnostics(model, cfg.serial_lags);
                DiagnoseCluster {
                    cluster: name.clone(),
                    rows: d
                        .rows
                        .iter()
                        .map(|r| DiagRecord {
                            assumption: r.test.assumption().into(),
                            test: r.test.label().into(),
                            statistic: r.outcome.as_ref().and_then(|o| finite(o.statistic)),
                            probability: r.outcome.as_ref().and_then(|o| finite(o.probability)),
                            df: r.outcome.as_ref().and_then(|o| o.df),
                            n: r.outcome.as_ref().and_then(|o| o.n),
                            cell: r.probability_cell(),
                            rejects_at_5pct: r.outcome.as_ref().map(|o| o.rejects_at_5pct),
                            note: r.outcome.as_ref().and_then(|o| o.note.clone()),
                            error: r.error.clone(),
                        })
                        .collect(),
                    error: None,
                }
            }
            Err(e) => DiagnoseCluster {
                cluster: name.clone(),
                rows: Vec::new(),
                error: Some(format!("model not estimated: {e}")),
            },
        })
        .collect();
    DiagnoseReport {
        schema_version: SCHEMA_VERSION,
        serial_lags: cfg.serial_lags,
        clusters,
    }
}

fn write_diagnose_files(out: &mut OutputDir, report: &DiagnoseReport) -> Result<()> {
    out.put(Format::Text, "diagnose.txt", || Ok(report.to_text()))?;
    out.put(Format::Csv, "diagnose.csv", || Ok(report.to_csv()))?;
    out.put(Format::Json, "diagnose.json", || to_json(report))
}

fn write_reference_files(out: &mut OutputDir, diff: &reference::ReferenceDiff) -> Result<()> {
    out.put(Format::Text, "reference_diff.txt", || Ok(diff.to_text()))?;
    out.put(Format::Csv, "reference_diff.csv", || Ok(diff.to_csv()))?;
    out.put(Format::Json, "reference_diff.json", || to_json(diff))
}

/// Estimates both clusters and runs the diagnostic battery on each fit.
pub fn cmd_diagnose(cfg: &RunConfig) -> Result<CommandOutput> {
    let inputs = load_inputs(cfg)?;
    let mut warnings = Vec::new();
    let panels = cluster_panels(&inputs.panel, &inputs.clusters, &mut warnings);
    let models = estimate_models(cfg, &panels);
    let report = diagnose_report(cfg, &models);
    let mut out = OutputDir::create(cfg)?;
    write_diagnose_files(&mut out, &report)?;
    Ok(CommandOutput {
        status: if report.n_errors() > 0 { ExitStatus::Partial } else { ExitStatus::Success },
        files: out.files,
        text: report.to_text(),
        warnings,
    })
}

// --------------------------------------------------------------- replicate

/// Country-level Pearson correlation between the clustering score and the
/// sample mean of the dependent variable.
pub fn score_outcome_correlation(
    panel: &PanelDataset,
    clusters: &ClusterReport,
    variable: &str,
) -> ineqpanel::Result<(usize, f64)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for m in &clusters.members {
        let Some(i) = panel.entity_index(&m.country) else { continue };
        let vals: Vec<f64> = panel.entity_values(variable, i)?.iter().flatten().copied().collect();
        if vals.is_empty() {
            continue;
        }
        x.push(m.score);
        y.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    Ok((x.len(), pearson(&x, &y)?))
}

fn status_of(errors: usize, total: usize) -> StageStatus {
    match errors {
        0 => StageStatus::Ok,
        e if e < total => StageStatus::Partial,
        _ => StageStatus::Failed,
    }
}

fn summary_text(
    manifest: &Manifest,
    inputs: Option<&Inputs>,
    estimate: Option<&EstimateReport>,
    correlation: Option<std::result::Result<(usize, f64), String>>,
    warnings: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Replication summary");
    let _ = writeln!(s);
    for st in &manifest.stages {
        let _ = write!(s, "{:<12}{}", st.name, st.status.as_str());
        if let Some(m) = &st.message {
            let _ = write!(s, "  ({m})");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "{} of {} stages ok", manifest.stages_ok, manifest.stages.len());
    if let Some(inp) = inputs {
        let c = &inp.clusters;
        let _ = writeln!(s);
        let _ = writeln!(s, "Criterion: {} (median {:.4})", c.criterion, c.threshold);
        let _ = writeln!(s, "Inclusive ({}): {}", c.inclusive.len(), c.inclusive.join(" "));
        let _ = writeln!(s, "Extractive ({}): {}", c.extractive.len(), c.extractive.join(" "));
    }
    if let Some(est) = estimate {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16}{:>14}{:>14}", "Variable", "Inclusive", "Extractive");
        let models: Vec<Option<&ModelSection>> = CLUSTERS
            .iter()
            .map(|c| est.cluster(c).and_then(|c| c.model.as_ref()))
            .collect();
        let mut names: Vec<String> = Vec::new();
        for m in models.iter().flatten() {
            for c in &m.coefficients {
                if !names.contains(&c.name) {
                    names.push(c.name.clone());
                }
            }
        }
        let cell = |m: Option<&ModelSection>, n: &str| {
            m.and_then(|m| m.coefficient(n))
                .map_or("-".to_string(), |c| crate::report::fmt_num(c.coefficient))
        };
        for n in &names {
            let _ = writeln!(s, "{:<16}{:>14}{:>14}", n.to_uppercase(), cell(models[0], n), cell(models[1], n));
        }
        let stat = |f: fn(&StatsRecord) -> Option<f64>| {
            models
                .iter()
                .map(|m| crate::report::fmt_opt(m.and_then(|m| f(m.weighted.as_ref().unwrap_or(&m.unweighted)))))
                .collect::<Vec<_>>()
        };
        for (label, v) in [
            ("R-squared", stat(|s| s.r_squared)),
            ("Durbin-Watson", stat(|s| s.durbin_watson)),
        ] {
            let _ = writeln!(s, "{:<16}{:>14}{:>14}", label, v[0], v[1]);
        }
    }
    if let Some(c) = correlation {
        let _ = writeln!(s);
        match c {
            Ok((n, r)) => {
                let _ = writeln!(s, "Institutions score vs mean dependent variable: r = {r:.4} (n = {n} countries)");
            }
            Err(e) => {
                let _ = writeln!(s, "Institutions score vs mean dependent variable: not computed ({e})");
            }
        }
    }
    if !warnings.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "Warnings");
        for w in warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}

fn finish_manifest(out: &mut OutputDir, mut manifest: Manifest) -> Result<()> {
    for f in &out.files {
        let name = f
            .strip_prefix(out.dir)
            .unwrap_or(f)
            .to_string_lossy()
            .replace('\\', "/");
        manifest.outputs.push(crate::manifest::OutputRecord {
            file: name,
            sha256: sha256_file(f)?,
        });
    }
    let json = to_json(&manifest)?;
    out.write("manifest.json", &json)
}

/// Runs every stage in order. An input failure still leaves a manifest
/// recording zero completed stages.
pub fn cmd_replicate(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut manifest = Manifest::new(cfg.echo());
    if let Some(d) = &cfg.data {
        manifest.inputs.push(InputRecord::describe("panel", d));
    }
    if let Some(s) = &cfg.scores {
        manifest.inputs.push(InputRecord::describe("scores", s));
    }
    let mut out = OutputDir::create(cfg)?;
    let mut warnings = Vec::new();

    let inputs = match load_inputs(cfg) {
        Ok(i) => i,
        Err(e) => {
            manifest.stage("inputs", StageStatus::Failed, Some(e.to_string()));
            for st in ["clusters", "unitroot", "estimate", "diagnose"] {
                manifest.stage(st, StageStatus::Skipped, None);
            }
            let text = summary_text(&manifest, None, None, None, &warnings);
            out.write("summary.txt", &text)?;
            finish_manifest(&mut out, manifest)?;
            return Err(e);
        }
    };
    manifest.stage("inputs", StageStatus::Ok, None);

    write_cluster_files(&mut out, &inputs.clusters)?;
    if let Some(e) = &inputs.clusters.stability_error {
        warnings.push(format!("sub-index stability not computed: {e}"));
    }
    let panels = cluster_panels(&inputs.panel, &inputs.clusters, &mut warnings);
    let cluster_errors: Vec<String> = panels.iter().filter_map(|(_, p)| p.as_ref().err().cloned()).collect();
    manifest.stage(
        "clusters",
        status_of(cluster_errors.len(), panels.len()),
        (!cluster_errors.is_empty()).then(|| cluster_errors.join("; ")),
    );

    let mut estimate = None;
    let mut correlation = None;
    if manifest.stage_status("clusters") == Some(StageStatus::Failed) {
        for st in ["unitroot", "estimate", "diagnose"] {
            manifest.stage(st, StageStatus::Skipped, Some("no usable cluster".into()));
        }
    } else {
        let ur = unitroot_report(cfg, &panels, calibration(cfg)?);
        write_unitroot_files(&mut out, &ur)?;
        let total = ur.clusters.iter().map(|c| c.rows.len()).sum();
        let n = ur.n_errors();
        manifest.stage(
            "unitroot",
            status_of(n, total),
            (n > 0).then(|| format!("{n} of {total} variables failed")),
        );

        let models = estimate_models(cfg, &panels);
        let est = estimate_report(cfg, &models);
        write_estimate_files(&mut out, &est)?;
        let failed = est.n_failed();
        manifest.stage(
            "estimate",
            status_of(failed, est.clusters.len()),
            (failed > 0).then(|| {
                est.clusters
                    .iter()
                    .filter_map(|c| c.error.as_ref().map(|e| format!("{}: {e}", c.cluster)))
                    .collect::<Vec<_>>()
                    .join("; ")
            }),
        );

        if failed == est.clusters.len() {
            manifest.stage("diagnose", StageStatus::Skipped, Some("no estimated model".into()));
        } else {
            let diag = diagnose_report(cfg, &models);
            write_diagnose_files(&mut out, &diag)?;
            let total: usize = diag.clusters.iter().map(|c| c.rows.len().max(1)).sum();
            let n = diag.n_errors();
            manifest.stage(
                "diagnose",
                status_of(n, total),
                (n > 0).then(|| format!("{n} diagnostic cells failed")),
            );
            if cfg.reference_diff {
                let diff = reference::compare(&est, Some(&diag));
                warnings.extend(diff.warnings());
                write_reference_files(&mut out, &diff)?;
            }
        }
        correlation = Some(
            score_outcome_correlation(&inputs.panel, &inputs.clusters, &cfg.dependent.name).map_err(|e| e.to_string()),
        );
        estimate = Some(est);
    }

    let text = summary_text(&manifest, Some(&inputs), estimate.as_ref(), correlation, &warnings);
    out.write("summary.txt", &text)?;
    let status = if manifest.stages.iter().all(|s| s.status == StageStatus::Ok) {
        ExitStatus::Success
    } else {
        ExitStatus::Partial
    };
    finish_manifest(&mut out, manifest)?;
    Ok(CommandOutput {
        status,
        files: out.files,
        text,
        warnings,
    })
}

// ---------------------------------------------------------------- simulate

pub const SYNTHETIC_PANEL: &str = "synthetic_panel.csv";
pub const SYNTHETIC_SCORES: &str = "synthetic_scores.csv";

/// Writes a synthetic inequality panel (long CSV) and matching
/// institution scores into `dir`.
pub fn cmd_simulate(dir: &Path, synth: &SyntheticConfig) -> Result<CommandOutput> {
    let data = synthetic_inequality_panel(synth)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Write {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut buf = Vec::new();
    write_long_csv(&data.panel, &mut buf)?;
    let panel_path = dir.join(SYNTHETIC_PANEL);
    std::fs::write(&panel_path, &buf).map_err(|e| CliError::Write {
        path: panel_path.clone(),
        source: e,
    })?;
    let mut buf = Vec::new();
    write_scores_csv(&data.scores, &mut buf)?;
    let scores_path = dir.join(SYNTHETIC_SCORES);
    std::fs::write(&scores_path, &buf).map_err(|e| CliError::Write {
        path: scores_path.clone(),
        source: e,
    })?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &data.scores {
        *counts
            .entry(if data.inclusive.contains(&s.country) { "inclusive" } else { "extractive" })
            .or_default() += 1;
    }
    let text = format!(
        "Synthetic panel: {} entities x {} periods from {} (seed {})\ninclusive {}, extractive {}\n",
        data.panel.n_entities(),
        data.panel.n_periods(),
        synth.first_year,
        synth.seed,
        counts.get("inclusive").copied().unwrap_or(0),
        counts.get("extractive").copied().unwrap_or(0),
    );
    Ok(CommandOutput {
        status: ExitStatus::Success,
        files: vec![panel_path, scores_path],
        text,
        warnings: Vec::new(),
    })
}
