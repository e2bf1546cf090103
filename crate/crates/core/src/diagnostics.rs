//! Specification tests for a fitted panel model: redundant fixed effects,
//! Hausman, residual normality, heteroskedasticity, serial correlation and
//! cross-section dependence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    fixed_effects_within_frame, pooled_ols_frame, random_effects_frame, EstimationResult,
};
use crate::linalg::{symmetric_pinv, Matrix};
use crate::linreg::{self, CovarianceKind};
use crate::paneldata::RowIndex;
use crate::probdist::{chi2_sf, f_sf, normal_two_sided};

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    ChiSquare,
    Normal,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub reference: Reference,
    pub df: Option<usize>,
    pub df2: Option<usize>,
    pub probability: f64,
    /// Observations in the auxiliary regression, when there is one.
    pub n: Option<usize>,
    pub rejects_at_5pct: bool,
    pub note: Option<String>,
}

impl TestOutcome {
    fn chi2(statistic: f64, df: usize) -> Result<Self> {
        let probability = chi2_sf(statistic.max(0.0), df as f64)?;
        Ok(TestOutcome {
            statistic,
            reference: Reference::ChiSquare,
            df: Some(df),
            df2: None,
            probability,
            n: None,
            rejects_at_5pct: probability < SIGNIFICANCE,
            note: None,
        })
    }

    fn normal(statistic: f64) -> Self {
        let probability = normal_two_sided(statistic);
        TestOutcome {
            statistic,
            reference: Reference::Normal,
            df: None,
            df2: None,
            probability,
            n: None,
            rejects_at_5pct: probability < SIGNIFICANCE,
            note: None,
        }
    }

    fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundantFixedEffects {
    pub likelihood_ratio: TestOutcome,
    pub f_form: TestOutcome,
}

/// `LR = n ln(SSR_pooled / SSR_fe)` on `N - 1` degrees of freedom, plus the
/// equivalent F form.
pub fn redundant_fe_lr(fe: &EstimationResult, pooled: &EstimationResult) -> Result<RedundantFixedEffects> {
    let n = fe.residuals.len();
    if pooled.residuals.len() != n {
        return Err(Error::invalid("fixed-effects and pooled fits use different samples"));
    }
    let ssr_fe = fe.ssr();
    let ssr_pooled = pooled.ssr();
    if !(ssr_fe > 0.0) {
        return Err(Error::Degenerate("fixed-effects fit is saturated (zero SSR)".into()));
    }
    let n_ent = fe.frame.n_active_entities();
    let df1 = n_ent - 1;
    let lr = (n as f64 * (ssr_pooled / ssr_fe).ln()).max(0.0);
    let df2 = fe.df_resid;
    let f = ((ssr_pooled - ssr_fe).max(0.0) / df1 as f64) / (ssr_fe / df2 as f64);
    let pf = f_sf(f, df1 as f64, df2 as f64)?;
    Ok(RedundantFixedEffects {
        likelihood_ratio: TestOutcome::chi2(lr, df1)?,
        f_form: TestOutcome {
            statistic: f,
            reference: Reference::F,
            df: Some(df1),
            df2: Some(df2),
            probability: pf,
            n: None,
            rejects_at_5pct: pf < SIGNIFICANCE,
            note: None,
        },
    })
}

/// `H = d' (V_fe - V_re)^- d`. A variance gap that is not positive definite
/// goes through the pseudo-inverse and is noted; a negative quadratic form
/// is reported as zero.
pub fn hausman_statistic(b_fe: &[f64], v_fe: &Matrix, b_re: &[f64], v_re: &Matrix) -> Result<TestOutcome> {
    let k = b_fe.len();
    if b_re.len() != k || v_fe.nrows() != k || v_re.nrows() != k || v_fe.ncols() != k || v_re.ncols() != k {
        return Err(Error::invalid("Hausman inputs have mismatched dimensions"));
    }
    if k == 0 {
        return Err(Error::invalid("Hausman test needs at least one slope"));
    }
    let d: Vec<f64> = b_fe.iter().zip(b_re).map(|(a, b)| a - b).collect();
    let gap = v_fe.sub(v_re);
    let (pinv, eig) = symmetric_pinv(&gap, 1e-12);
    let max_abs = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let positive_definite = max_abs > 0.0 && eig.iter().all(|&l| l > 1e-12 * max_abs);
    let h = crate::linalg::dot(&d, &pinv.mul_vec(&d));
    let mut notes = Vec::new();
    if !positive_definite {
        notes.push("variance gap not positive definite; pseudo-inverse used".to_string());
    }
    let h = if h < 0.0 {
        notes.push("negative quadratic form set to zero".to_string());
        0.0
    } else {
        h
    };
    let mut out = TestOutcome::chi2(h, k)?;
    if !notes.is_empty() {
        out.note = Some(notes.join("; "));
    }
    Ok(out)
}

/// Correlated random effects Hausman test between an (unweighted,
/// classical-covariance) fixed-effects fit and Swamy-Arora random effects.
/// When the entity variance component is estimated at zero the statistic is
/// set to zero.
pub fn hausman(fe: &EstimationResult, re: &EstimationResult) -> Result<TestOutcome> {
    if fe.n_slopes() != re.n_slopes() {
        return Err(Error::invalid("Hausman: models have different slope sets"));
    }
    if let Some(c) = re.components.filter(|c| c.clamped) {
        let mut out = TestOutcome::chi2(0.0, fe.n_slopes())?;
        out.note = Some(format!(
            "cross-section random effects variance estimated as zero (theta = {:.4}); statistic set to zero",
            c.theta
        ));
        return Ok(out);
    }
    hausman_statistic(&fe.slopes(), &fe.slope_covariance(), &re.slopes(), &re.slope_covariance())
}

/// Jarque-Bera normality test with population moments.
pub fn jarque_bera(residuals: &[f64]) -> Result<TestOutcome> {
    let n = residuals.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("Jarque-Bera needs n >= 8, got {n}")));
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let m = |p: i32| residuals.iter().map(|e| (e - mean).powi(p)).sum::<f64>() / nf;
    let m2 = m(2);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let s = m(3) / m2.powf(1.5);
    let k = m(4) / (m2 * m2);
    let jb = nf / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
    Ok(TestOutcome::chi2(jb, 2)?.with_n(n))
}

fn aux_r_squared(x: &Matrix, y: &[f64], what: &str) -> Result<f64> {
    let fit = linreg::ols(x, y, true).map_err(|e| match e {
        Error::RankDeficient { column, name } => Error::RankDeficient {
            column,
            name: format!("{name} ({what} auxiliary regression)"),
        },
        other => other,
    })?;
    Ok(fit.fit.r_squared.unwrap_or(0.0).max(0.0))
}

/// Breusch-Pagan-Godfrey: squared standardized residuals on the model
/// regressors and a constant; `n R^2` on as many degrees of freedom as
/// regressors.
pub fn bpg_heteroskedasticity(residuals: &[f64], regressors: &Matrix) -> Result<TestOutcome> {
    let n = residuals.len();
    if regressors.nrows() != n {
        return Err(Error::invalid("residuals and regressors differ in length"));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let sd = (residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let z: Vec<f64> = residuals.iter().map(|e| (e / sd).powi(2)).collect();
    let r2 = aux_r_squared(regressors, &z, "heteroskedasticity")?;
    Ok(TestOutcome::chi2(n as f64 * r2, regressors.ncols())?.with_n(n))
}

/// Breusch-Pagan serial correlation test: residuals on the model regressors,
/// a constant and `lags` lagged residuals built within each entity, with
/// `n` times the partial R^2 of the lags on `lags` degrees of freedom. Rows
/// without a complete lag history are dropped.
pub fn bp_serial(residuals: &[f64], regressors: &Matrix, rows: &[RowIndex], lags: usize) -> Result<TestOutcome> {
    let n = residuals.len();
    if regressors.nrows() != n || rows.len() != n {
        return Err(Error::invalid("residuals, regressors and row index differ in length"));
    }
    if lags == 0 {
        return Err(Error::invalid("serial correlation test needs at least one lag"));
    }
    let mut x_rows = Vec::new();
    let mut y = Vec::new();
    for r in 0..n {
        let mut lagged = Vec::with_capacity(lags);
        for l in 1..=lags {
            let ok = r >= l
                && rows[r - l].entity == rows[r].entity
                && rows[r].period >= l
                && rows[r - l].period == rows[r].period - l;
            if !ok {
                break;
            }
            lagged.push(residuals[r - l]);
        }
        if lagged.len() == lags {
            let mut row = regressors.row(r).to_vec();
            row.extend(lagged);
            x_rows.push(row);
            y.push(residuals[r]);
        }
    }
    if y.len() <= regressors.ncols() + lags + 1 {
        return Err(Error::InsufficientData(format!(
            "{lags} residual lags leave {} usable rows",
            y.len()
        )));
    }
    // The lags' contribution is measured against the regressors refitted on
    // the same rows: residuals from the full sample are not orthogonal to
    // the regressors once the first periods are dropped, and a plain aux
    // R^2 would count that as serial correlation.
    let wrap = |e: Error| match e {
        Error::RankDeficient { column, name } => Error::RankDeficient {
            column,
            name: format!("{name} (serial correlation auxiliary regression)"),
        },
        other => other,
    };
    let restricted_rows: Vec<Vec<f64>> = x_rows.iter().map(|r| r[..regressors.ncols()].to_vec()).collect();
    let unrestricted = linreg::ols(&Matrix::from_rows(&x_rows), &y, true).map_err(wrap)?;
    let restricted = linreg::ols(&Matrix::from_rows(&restricted_rows), &y, true).map_err(wrap)?;
    let ssr_r = restricted.ssr();
    if !(ssr_r > 0.0) {
        return Err(Error::Degenerate("residuals are explained exactly by the regressors".into()));
    }
    let partial_r2 = (1.0 - unrestricted.ssr() / ssr_r).max(0.0);
    Ok(TestOutcome::chi2(y.len() as f64 * partial_r2, lags)?.with_n(y.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionDependence {
    pub breusch_pagan_lm: TestOutcome,
    pub pesaran_scaled_lm: TestOutcome,
    pub bias_corrected_scaled_lm: TestOutcome,
    pub pesaran_cd: TestOutcome,
}

/// Pairwise residual correlations `sum e_i e_j / sqrt(sum e_i^2 sum e_j^2)`
/// (the residuals of a model with entity intercepts have mean zero).
pub fn residual_correlations(grid: &[Vec<f64>], entities: &[String]) -> Result<Vec<Vec<f64>>> {
    let n = grid.len();
    let norms: Vec<f64> = grid.iter().map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if let Some(i) = norms.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::CrossSection {
            entity: entities.get(i).cloned().unwrap_or_else(|| i.to_string()),
            message: "zero residual variance; correlation undefined".into(),
        });
    }
    let mut rho = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = crate::linalg::dot(&grid[i], &grid[j]) / (norms[i] * norms[j]);
            rho[i][j] = c;
            rho[j][i] = c;
        }
    }
    Ok(rho)
}

/// Breusch-Pagan LM, Pesaran scaled LM, bias-corrected scaled LM and
/// Pesaran CD from an N x T residual grid.
pub fn cross_section_dependence(grid: &[Vec<f64>], entities: &[String]) -> Result<CrossSectionDependence> {
    let n = grid.len();
    if n < 2 {
        return Err(Error::InsufficientData("cross-section dependence needs N >= 2".into()));
    }
    let t = grid[0].len();
    if grid.iter().any(|g| g.len() != t) {
        return Err(Error::Unbalanced("residual grid is not balanced".into()));
    }
    if t < 3 {
        return Err(Error::InsufficientData("cross-section dependence needs T >= 3".into()));
    }
    let rho = residual_correlations(grid, entities)?;
    let (nf, tf) = (n as f64, t as f64);
    let (mut sum_r, mut sum_r2) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            sum_r += rho[i][j];
            sum_r2 += rho[i][j] * rho[i][j];
        }
    }
    let pairs = nf * (nf - 1.0) / 2.0;
    let lm = tf * sum_r2;
    let scaled = (1.0 / (nf * (nf - 1.0))).sqrt() * (tf * sum_r2 - pairs);
    let bias_corrected = scaled - nf / (2.0 * (tf - 1.0));
    let cd = (2.0 * tf / (nf * (nf - 1.0))).sqrt() * sum_r;
    Ok(CrossSectionDependence {
        breusch_pagan_lm: TestOutcome::chi2(lm, n * (n - 1) / 2)?,
        pesaran_scaled_lm: TestOutcome::normal(scaled),
        bias_corrected_scaled_lm: TestOutcome::normal(bias_corrected),
        pesaran_cd: TestOutcome::normal(cd),
    })
}

/// Pearson correlation; errors on constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("correlation inputs differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData("correlation needs at least 3 observations".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Pairwise Pearson correlations between the model regressors.
pub fn regressor_correlations(result: &EstimationResult) -> Result<CorrelationMatrix> {
    let x = &result.frame.x;
    let k = x.ncols();
    let cols: Vec<Vec<f64>> = (0..k).map(|j| x.column(j)).collect();
    let mut values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = pearson(&cols[i], &cols[j])?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: result.frame.regressors.iter().map(|s| s.to_uppercase()).collect(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticTest {
    RedundantFixedEffects,
    Hausman,
    BreuschPaganLm,
    PesaranScaledLm,
    BiasCorrectedScaledLm,
    PesaranCd,
    JarqueBera,
    SerialCorrelation,
    Heteroskedasticity,
}

impl DiagnosticTest {
    /// Report order.
    pub const ALL: [DiagnosticTest; 9] = [
        DiagnosticTest::RedundantFixedEffects,
        DiagnosticTest::Hausman,
        DiagnosticTest::BreuschPaganLm,
        DiagnosticTest::PesaranScaledLm,
        DiagnosticTest::BiasCorrectedScaledLm,
        DiagnosticTest::PesaranCd,
        DiagnosticTest::JarqueBera,
        DiagnosticTest::SerialCorrelation,
        DiagnosticTest::Heteroskedasticity,
    ];

    pub fn assumption(self) -> &'static str {
        match self {
            DiagnosticTest::RedundantFixedEffects => "Fixed effects model is redundant",
            DiagnosticTest::Hausman => "Random effects model is appropriate",
            DiagnosticTest::BreuschPaganLm
            | DiagnosticTest::PesaranScaledLm
            | DiagnosticTest::BiasCorrectedScaledLm
            | DiagnosticTest::PesaranCd => "Absence of cross-section dependence",
            DiagnosticTest::JarqueBera => "Normal distribution of the residuals",
            DiagnosticTest::SerialCorrelation => "Absence of serial correlation",
            DiagnosticTest::Heteroskedasticity => "Homoskedasticity",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DiagnosticTest::RedundantFixedEffects => "Redundant Fixed Effects - Likelihood Ratio test",
            DiagnosticTest::Hausman => "Correlated Random Effects - Hausman test",
            DiagnosticTest::BreuschPaganLm => "Breusch-Pagan LM",
            DiagnosticTest::PesaranScaledLm => "Pesaran scaled LM",
            DiagnosticTest::BiasCorrectedScaledLm => "Bias-corrected scaled LM",
            DiagnosticTest::PesaranCd => "Pesaran CD",
            DiagnosticTest::JarqueBera => "Jarque-Bera test",
            DiagnosticTest::SerialCorrelation => "Breusch-Pagan serial correlation test",
            DiagnosticTest::Heteroskedasticity => "Breusch-Pagan-Godfrey Heteroskedasticity test",
        }
    }

    /// Whether the report prints the auxiliary `(n, df)` next to the probability.
    pub fn annotated(self) -> bool {
        matches!(self, DiagnosticTest::SerialCorrelation | DiagnosticTest::Heteroskedasticity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub test: DiagnosticTest,
    pub outcome: Option<TestOutcome>,
    pub error: Option<String>,
}

impl DiagnosticRow {
    /// Probability as a percentage with two decimals, with `(n = .., df = ..)`
    /// for auxiliary-regression tests.
    pub fn probability_cell(&self) -> String {
        match (&self.outcome, &self.error) {
            (Some(o), _) => {
                let pct = format!("{:05.2}%", 100.0 * o.probability);
                match (self.test.annotated(), o.n, o.df) {
                    (true, Some(n), Some(df)) => format!("{pct} (n = {n}, df = {df})"),
                    _ => pct,
                }
            }
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "n/a".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub rows: Vec<DiagnosticRow>,
    pub regressor_correlations: Option<CorrelationMatrix>,
}

impl DiagnosticReport {
    pub fn row(&self, test: DiagnosticTest) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.test == test)
    }

    pub fn n_errors(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn row_from(test: DiagnosticTest, r: Result<TestOutcome>) -> DiagnosticRow {
    match r {
        Ok(o) => DiagnosticRow {
            test,
            outcome: Some(o),
            error: None,
        },
        Err(e) => DiagnosticRow {
            test,
            outcome: None,
            error: Some(e.to_string()),
        },
    }
}

/// Residuals arranged as one row per entity.
pub fn residual_grid(result: &EstimationResult) -> Result<Vec<Vec<f64>>> {
    result.frame.require_balanced()?;
    Ok(result
        .frame
        .groups()
        .into_iter()
        .map(|g| result.residuals[g].to_vec())
        .collect())
}

/// Runs the full battery for a fitted fixed-effects model (weighted or
/// not). Residual-based tests use the model's unweighted residuals; the
/// redundant-effects and Hausman comparisons refit unweighted models on the
/// same sample.
pub fn run_diagnostics(model: &EstimationResult, serial_lags: usize) -> DiagnosticReport {
    let frame = &model.frame;
    let fe = fixed_effects_within_frame(frame, CovarianceKind::Classical);
    let pooled = pooled_ols_frame(frame, CovarianceKind::Classical);
    let lr = match (&fe, &pooled) {
        (Ok(fe), Ok(p)) => redundant_fe_lr(fe, p).map(|r| r.likelihood_ratio),
        (Err(e), _) | (_, Err(e)) => Err(Error::invalid(e.to_string())),
    };
    let haus = match &fe {
        Ok(fe) => random_effects_frame(frame).and_then(|re| hausman(fe, &re)),
        Err(e) => Err(Error::invalid(e.to_string())),
    };
    let csd = residual_grid(model).and_then(|g| cross_section_dependence(&g, &frame.entities));
    let csd_part = |f: fn(&CrossSectionDependence) -> &TestOutcome| match &csd {
        Ok(c) => Ok(f(c).clone()),
        Err(e) => Err(Error::invalid(e.to_string())),
    };
    let rows = vec![
        row_from(DiagnosticTest::RedundantFixedEffects, lr),
        row_from(DiagnosticTest::Hausman, haus),
        row_from(DiagnosticTest::BreuschPaganLm, csd_part(|c| &c.breusch_pagan_lm)),
        row_from(DiagnosticTest::PesaranScaledLm, csd_part(|c| &c.pesaran_scaled_lm)),
        row_from(DiagnosticTest::BiasCorrectedScaledLm, csd_part(|c| &c.bias_corrected_scaled_lm)),
        row_from(DiagnosticTest::PesaranCd, csd_part(|c| &c.pesaran_cd)),
        row_from(DiagnosticTest::JarqueBera, jarque_bera(&model.residuals)),
        row_from(
            DiagnosticTest::SerialCorrelation,
            bp_serial(&model.residuals, &frame.x, &frame.rows, serial_lags),
        ),
        row_from(
            DiagnosticTest::Heteroskedasticity,
            bpg_heteroskedasticity(&model.residuals, &frame.x),
        ),
    ];
    DiagnosticReport {
        rows,
        regressor_correlations: regressor_correlations(model).ok(),
    }
}
