//! Python module `ineqpanel`: institution clustering, Gini, panel EGLS,
//! unit-root battery and residual diagnostics. Structured results come back
//! as plain dicts and lists.

use std::path::PathBuf;
use std::sync::Arc;

use ineqpanel_core::cluster::{
    gini_from_distribution, median_split, read_scores_csv, split_by, subindex_stability, IncomeDistribution,
    IncomeGroup, InstitutionScores, TieRule,
};
use ineqpanel_core::estimators::{panel_egls_fe, EstimationResult, EstimationSpec, VarianceDivisor};
use ineqpanel_core::paneldata::{PanelDataset, Role, VariableSpec};
use ineqpanel_core::simulate::{synthetic_inequality_panel, SyntheticConfig};
use ineqpanel_core::unitroot::{run_battery_on_panel, BatteryOptions, Calibration};
use ineqpanel_cli::config::{parse_criterion, RunConfig};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn err(e: ineqpanel_core::Error) -> PyErr {
    match e {
        ineqpanel_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn cli_err(e: ineqpanel_cli::CliError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON into native Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_tie(tie: &str) -> PyResult<TieRule> {
    match tie {
        "extractive" => Ok(TieRule::Extractive),
        "inclusive" => Ok(TieRule::Inclusive),
        other => Err(PyValueError::new_err(format!("tie must be 'extractive' or 'inclusive', got {other:?}"))),
    }
}

/// Gini index of grouped income data. Population shares default to equal
/// groups; both share vectors must sum to one.
#[pyfunction]
#[pyo3(signature = (income_shares, population_shares=None))]
fn gini(income_shares: Vec<f64>, population_shares: Option<Vec<f64>>) -> PyResult<f64> {
    let d = match population_shares {
        None => IncomeDistribution::from_income_shares(&income_shares),
        Some(p) => {
            if p.len() != income_shares.len() {
                return Err(PyValueError::new_err("share vectors differ in length"));
            }
            IncomeDistribution::new(
                p.iter()
                    .zip(&income_shares)
                    .map(|(&population_share, &income_share)| IncomeGroup {
                        population_share,
                        income_share,
                    })
                    .collect(),
            )
        }
    }
    .map_err(err)?;
    Ok(gini_from_distribution(&d))
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    ineqpanel_core::diagnostics::pearson(&x, &y).map_err(err)
}

/// Median split of `{country: score}`.
#[pyfunction(name = "median_split")]
#[pyo3(signature = (scores, tie="extractive"))]
fn py_median_split<'py>(py: Python<'py>, scores: Vec<(String, f64)>, tie: &str) -> PyResult<Bound<'py, PyAny>> {
    let a = median_split(&scores, parse_tie(tie)?).map_err(err)?;
    to_py(py, &a)
}

/// Institution scores: a pillar value and 21 sub-indices per country.
#[pyclass(module = "ineqpanel", frozen)]
struct Scores {
    inner: Vec<InstitutionScores>,
}

#[pymethods]
impl Scores {
    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Scores {
            inner: read_scores_csv(text.as_bytes()).map_err(err)?,
        })
    }

    #[getter]
    fn countries(&self) -> Vec<String> {
        self.inner.iter().map(|s| s.country.clone()).collect()
    }

    fn pillar(&self) -> Vec<(String, f64)> {
        self.inner.iter().map(|s| (s.country.clone(), s.pillar)).collect()
    }

    /// Split under `criterion`: "pillar", "sub01".."sub21" or 1..21.
    #[pyo3(signature = (criterion="pillar", tie="extractive"))]
    fn split<'py>(&self, py: Python<'py>, criterion: &str, tie: &str) -> PyResult<Bound<'py, PyAny>> {
        let c = parse_criterion(criterion).ok_or_else(|| PyValueError::new_err(format!("unknown criterion {criterion:?}")))?;
        to_py(py, &split_by(&self.inner, c, parse_tie(tie)?).map_err(err)?)
    }

    #[pyo3(signature = (tie="extractive"))]
    fn stability<'py>(&self, py: Python<'py>, tie: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &subindex_stability(&self.inner, parse_tie(tie)?).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(module = "ineqpanel", frozen)]
struct Panel {
    inner: PanelDataset,
}

#[pymethods]
impl Panel {
    /// Long (`entity,year,variable,value`) or wide CSV, detected from the header.
    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        Ok(Panel {
            inner: ineqpanel_cli::pipeline::load_panel(&path).map_err(cli_err)?,
        })
    }

    #[getter]
    fn entities(&self) -> Vec<String> {
        self.inner.entities().to_vec()
    }

    #[getter]
    fn periods(&self) -> Vec<i32> {
        self.inner.periods().to_vec()
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.variables().map(str::to_string).collect()
    }

    /// One list per entity; missing cells are `None`.
    fn values(&self, variable: &str) -> PyResult<Vec<Vec<Option<f64>>>> {
        (0..self.inner.n_entities())
            .map(|i| self.inner.entity_values(variable, i).map(<[_]>::to_vec).map_err(err))
            .collect()
    }

    fn subset(&self, entities: Vec<String>) -> PyResult<Panel> {
        Ok(Panel {
            inner: self.inner.subset(&entities).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Panel({} entities x {} periods, {} variables)",
            self.inner.n_entities(),
            self.inner.n_periods(),
            self.inner.variables().count()
        )
    }
}

/// A fitted fixed-effects EGLS model.
#[pyclass(module = "ineqpanel", frozen)]
struct Estimation {
    inner: EstimationResult,
}

#[pymethods]
impl Estimation {
    #[getter]
    fn method(&self) -> String {
        self.inner.method.clone()
    }

    /// `{name: coefficient}`, slopes then the constant `C`.
    #[getter]
    fn coefficients(&self) -> Vec<(String, f64)> {
        self.inner.coefficients.iter().map(|c| (c.name.clone(), c.coefficient)).collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    /// Full report section: coefficients with standard errors, effects,
    /// weights and fit statistics.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &ineqpanel_cli::pipeline::model_section(&self.inner))
    }

    #[pyo3(signature = (serial_lags=1))]
    fn diagnostics<'py>(&self, py: Python<'py>, serial_lags: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &ineqpanel_core::diagnostics::run_diagnostics(&self.inner, serial_lags))
    }
}

/// Cross-section fixed effects with cross-section weights. Regressors take
/// lags as `name(-k)`.
#[pyfunction]
#[pyo3(signature = (panel, dependent, regressors, variance_divisor="periods"))]
fn estimate(panel: &Panel, dependent: &str, regressors: Vec<String>, variance_divisor: &str) -> PyResult<Estimation> {
    let dep = VariableSpec::parse(dependent, Role::Dependent).map_err(err)?;
    let regs = regressors
        .iter()
        .map(|r| VariableSpec::parse(r, Role::Regressor))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let mut spec = EstimationSpec::egls_fixed_effects(dep, regs);
    spec.variance_divisor = match variance_divisor {
        "periods" => VarianceDivisor::Periods,
        "periods_less_one" => VarianceDivisor::PeriodsLessOne,
        other => return Err(PyValueError::new_err(format!("unknown variance divisor {other:?}"))),
    };
    Ok(Estimation {
        inner: panel_egls_fe(&panel.inner, &spec).map_err(err)?,
    })
}

/// Twelve-test stationarity battery on one variable (`name` or `name(-k)`).
#[pyfunction]
#[pyo3(signature = (panel, variable, max_lag=1, threshold=0.05, calibration_reps=None, seed=20_180_711))]
fn unit_root_battery<'py>(
    py: Python<'py>,
    panel: &Panel,
    variable: &str,
    max_lag: usize,
    threshold: f64,
    calibration_reps: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = VariableSpec::parse(variable, Role::Regressor).map_err(err)?;
    let opts = BatteryOptions {
        max_lag,
        threshold,
        calibration: calibration_reps.map(|r| Arc::new(Calibration::new(r, seed))),
    };
    let label = spec.label();
    let verdict = if spec.lag > 0 {
        let lagged = panel.inner.with_lag(&spec.name, spec.lag).map_err(err)?;
        run_battery_on_panel(&lagged, &label, &opts)
    } else {
        run_battery_on_panel(&panel.inner, &label, &opts)
    }
    .map_err(err)?;
    to_py(py, &verdict)
}

/// Synthetic inequality panel with known coefficients, plus scores that
/// split it into two clusters. Returns `(panel, scores, inclusive)`.
#[pyfunction]
#[pyo3(signature = (seed=20_180_711, entities_per_cluster=14, periods=7))]
fn simulate(seed: u64, entities_per_cluster: usize, periods: usize) -> PyResult<(Panel, Scores, Vec<String>)> {
    let cfg = SyntheticConfig {
        seed,
        entities_per_cluster,
        periods,
        ..SyntheticConfig::default()
    };
    let d = synthetic_inequality_panel(&cfg).map_err(err)?;
    Ok((Panel { inner: d.panel }, Scores { inner: d.scores }, d.inclusive))
}

/// Runs the whole pipeline into `out`; returns `(exit_code, files)`.
#[pyfunction]
#[pyo3(signature = (data, scores, out, calibration_reps=None))]
fn replicate(data: PathBuf, scores: PathBuf, out: PathBuf, calibration_reps: Option<usize>) -> PyResult<(i32, Vec<String>)> {
    let mut cfg = RunConfig {
        data: Some(data),
        scores: Some(scores),
        out,
        ..RunConfig::default()
    };
    if let Some(r) = calibration_reps {
        cfg.calibration_reps = r;
    }
    let o = ineqpanel_cli::cmd_replicate(&cfg).map_err(cli_err)?;
    Ok((o.status.code(), o.files.iter().map(|f| f.display().to_string()).collect()))
}

#[pymodule]
#[pyo3(name = "ineqpanel")]
fn ineqpanel_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Scores>()?;
    m.add_class::<Panel>()?;
    m.add_class::<Estimation>()?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(py_median_split, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(unit_root_battery, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    Ok(())
}
