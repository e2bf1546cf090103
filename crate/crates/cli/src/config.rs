//! Run configuration: a flat `key = value` file, overridden by command-line
//! flags. Every default matches the baseline inequality pipeline.

use std::path::{Path, PathBuf};

use ineqpanel::cluster::{Criterion, TieRule};
use ineqpanel::estimators::VarianceDivisor;
use ineqpanel::paneldata::{Role, VariableSpec};
use ineqpanel::unitroot::Calibration;

use crate::error::{CliError, Result};

pub const OUT_ENV: &str = "INEQPANEL_OUT";
pub const DEFAULT_OUT: &str = "ineqpanel-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" => Some(Format::Text),
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub dependent: VariableSpec,
    pub regressors: Vec<VariableSpec>,
    /// Series run through the unit-root battery; defaults to the model's
    /// dependent variable and regressors.
    pub unitroot_variables: Option<Vec<VariableSpec>>,
    pub criterion: Criterion,
    pub tie_rule: TieRule,
    pub threshold: f64,
    pub max_lag: usize,
    pub variance_divisor: VarianceDivisor,
    pub serial_lags: usize,
    pub calibration: bool,
    pub calibration_reps: usize,
    pub calibration_cache: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub reference_diff: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            scores: None,
            dependent: VariableSpec::dependent("gini"),
            regressors: vec![
                VariableSpec::regressor("gini", 1),
                VariableSpec::regressor("poverty", 0),
                VariableSpec::regressor("neetsrate", 1),
                VariableSpec::regressor("social", 0),
                VariableSpec::regressor("creditb", 0),
            ],
            unitroot_variables: None,
            criterion: Criterion::Pillar,
            tie_rule: TieRule::Extractive,
            threshold: 0.05,
            max_lag: 1,
            variance_divisor: VarianceDivisor::Periods,
            serial_lags: 1,
            calibration: true,
            calibration_reps: Calibration::DEFAULT_REPS,
            calibration_cache: None,
            seed: Calibration::DEFAULT_SEED,
            out: std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
            formats: vec![Format::Text, Format::Csv, Format::Json],
            reference_diff: false,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

fn parse_list(v: &str, role: Role) -> std::result::Result<Vec<VariableSpec>, String> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| VariableSpec::parse(s, role).map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_criterion(v: &str) -> Option<Criterion> {
    let v = v.trim().to_ascii_lowercase();
    if v == "pillar" {
        return Some(Criterion::Pillar);
    }
    let digits = v.strip_prefix("sub").unwrap_or(&v);
    match digits.parse::<usize>() {
        Ok(k) if (1..=21).contains(&k) => Some(Criterion::SubIndex(k - 1)),
        _ => None,
    }
}

pub fn criterion_key(c: Criterion) -> String {
    match c {
        Criterion::Pillar => "pillar".into(),
        Criterion::SubIndex(i) => format!("sub{:02}", i + 1),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let num = |what: &str| format!("`{key}` expects {what}, got `{v}`");
        match key.trim() {
            "data" => self.data = Some(PathBuf::from(v)),
            "scores" => self.scores = Some(PathBuf::from(v)),
            "dependent" => self.dependent = VariableSpec::parse(v, Role::Dependent).map_err(|e| e.to_string())?,
            "regressors" => {
                let r = parse_list(v, Role::Regressor)?;
                if r.is_empty() {
                    return Err("`regressors` is empty".into());
                }
                self.regressors = r;
            }
            "unitroot_variables" => {
                let r = parse_list(v, Role::Regressor)?;
                if r.is_empty() {
                    return Err("`unitroot_variables` is empty".into());
                }
                self.unitroot_variables = Some(r);
            }
            "criterion" => self.criterion = parse_criterion(v).ok_or_else(|| num("`pillar` or a sub-index 1..21"))?,
            "tie_rule" => {
                self.tie_rule = match v.to_ascii_lowercase().as_str() {
                    "extractive" => TieRule::Extractive,
                    "inclusive" => TieRule::Inclusive,
                    _ => return Err(num("`extractive` or `inclusive`")),
                }
            }
            "threshold" => {
                let t: f64 = v.parse().map_err(|_| num("a number"))?;
                if !(t > 0.0 && t < 1.0) {
                    return Err(num("a probability in (0, 1)"));
                }
                self.threshold = t;
            }
            "max_lag" => self.max_lag = v.parse().map_err(|_| num("a non-negative integer"))?,
            "variance_divisor" => {
                self.variance_divisor = match v.to_ascii_lowercase().as_str() {
                    "periods" | "t" => VarianceDivisor::Periods,
                    "periods_less_one" | "t-1" => VarianceDivisor::PeriodsLessOne,
                    _ => return Err(num("`periods` or `periods_less_one`")),
                }
            }
            "serial_lags" => {
                let l: usize = v.parse().map_err(|_| num("a positive integer"))?;
                if l == 0 {
                    return Err(num("a positive integer"));
                }
                self.serial_lags = l;
            }
            "calibration" => self.calibration = parse_bool(v).ok_or_else(|| num("true or false"))?,
            "calibration_reps" => {
                let r: usize = v.parse().map_err(|_| num("a positive integer"))?;
                if r < 100 {
                    return Err(num("at least 100"));
                }
                self.calibration_reps = r;
            }
            "calibration_cache" => self.calibration_cache = Some(PathBuf::from(v)),
            "seed" => self.seed = v.parse().map_err(|_| num("an unsigned integer"))?,
            "out" => self.out = PathBuf::from(v),
            "formats" | "format" => self.formats = parse_formats(v)?,
            "reference_diff" => self.reference_diff = parse_bool(v).ok_or_else(|| num("true or false"))?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::ConfigLine {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(k, v).map_err(|message| CliError::ConfigLine { line: i + 1, message })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Core(ineqpanel::Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
        RunConfig::parse(&text)
    }

    pub fn battery_variables(&self) -> Vec<VariableSpec> {
        match &self.unitroot_variables {
            Some(v) => v.clone(),
            None => {
                let mut v = vec![self.dependent.clone()];
                v.extend(self.regressors.iter().cloned());
                v
            }
        }
    }

    /// Settings echoed into the manifest. The output directory is left out
    /// so that identical runs into different directories match byte for byte.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[VariableSpec]| v.iter().map(VariableSpec::label).collect::<Vec<_>>().join(", ");
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        vec![
            ("data".into(), path(&self.data)),
            ("scores".into(), path(&self.scores)),
            ("dependent".into(), self.dependent.label()),
            ("regressors".into(), list(&self.regressors)),
            ("unitroot_variables".into(), list(&self.battery_variables())),
            ("criterion".into(), criterion_key(self.criterion)),
            (
                "tie_rule".into(),
                match self.tie_rule {
                    TieRule::Extractive => "extractive".into(),
                    TieRule::Inclusive => "inclusive".into(),
                },
            ),
            ("threshold".into(), self.threshold.to_string()),
            ("max_lag".into(), self.max_lag.to_string()),
            (
                "variance_divisor".into(),
                match self.variance_divisor {
                    VarianceDivisor::Periods => "periods".into(),
                    VarianceDivisor::PeriodsLessOne => "periods_less_one".into(),
                },
            ),
            ("serial_lags".into(), self.serial_lags.to_string()),
            ("calibration".into(), self.calibration.to_string()),
            ("calibration_reps".into(), self.calibration_reps.to_string()),
            ("seed".into(), self.seed.to_string()),
            (
                "formats".into(),
                self.formats.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(","),
            ),
            ("reference_diff".into(), self.reference_diff.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.regressors.is_empty() {
            return Err(CliError::Config("no regressors".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("no output formats".into()));
        }
        Ok(())
    }
}

pub fn parse_formats(v: &str) -> std::result::Result<Vec<Format>, String> {
    let mut out: Vec<Format> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Format::parse(s).ok_or_else(|| format!("unknown format `{}`", s.trim())))
        .collect::<std::result::Result<_, _>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err("no formats given".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_baseline() {
        let c = RunConfig::default();
        assert_eq!(c.threshold, 0.05);
        assert_eq!(c.max_lag, 1);
        assert_eq!(c.regressors.len(), 5);
        assert_eq!(c.battery_variables()[1].label(), "gini(-1)");
    }

    #[test]
    fn parses_file() {
        let c = RunConfig::parse(
            "# comment\ndata = panel.csv\nregressors = x, z(-2)\ncriterion = sub21\nformats = json\n",
        )
        .unwrap();
        assert_eq!(c.data.as_deref(), Some(Path::new("panel.csv")));
        assert_eq!(c.regressors[1].lag, 2);
        assert_eq!(c.criterion, Criterion::SubIndex(20));
        assert_eq!(c.formats, vec![Format::Json]);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        match RunConfig::parse("nonsense = 1") {
            Err(CliError::ConfigLine { line: 1, message }) => assert!(message.contains("nonsense")),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("threshold = 2").is_err());
        assert!(RunConfig::parse("just words").is_err());
        assert!(RunConfig::parse("unitroot_variables = ").is_err());
    }
}
