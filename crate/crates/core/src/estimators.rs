//! Panel estimators: pooled OLS, cross-section fixed effects (within and
//! LSDV), Swamy-Arora random effects, and the one-step cross-section
//! weighted EGLS fixed-effects fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::linreg::{
    self, compute_statistics, sandwich_by_period, CovarianceKind, FitStatistics, LeastSquaresFit,
    StatisticsInput,
};
use crate::paneldata::{estimation_frame, EstimationFrame, PanelDataset, Role, VariableSpec};
use crate::probdist::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effects {
    None,
    CrossSectionFixed,
    CrossSectionRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    CrossSectionWeights,
}

/// Divisor for the per-entity residual variance that defines the
/// cross-section weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceDivisor {
    /// `T_i`, the entity's periods in the sample.
    #[default]
    Periods,
    /// `T_i - 1`.
    PeriodsLessOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationSpec {
    pub dependent: VariableSpec,
    pub regressors: Vec<VariableSpec>,
    pub effects: Effects,
    pub weighting: Weighting,
    pub covariance: CovarianceKind,
    #[serde(default)]
    pub variance_divisor: VarianceDivisor,
}

impl EstimationSpec {
    /// Fixed effects, cross-section weights, White cross-section covariance.
    pub fn egls_fixed_effects(dependent: VariableSpec, regressors: Vec<VariableSpec>) -> Self {
        EstimationSpec {
            dependent,
            regressors,
            effects: Effects::CrossSectionFixed,
            weighting: Weighting::CrossSectionWeights,
            covariance: CovarianceKind::WhiteCrossSection,
            variance_divisor: VarianceDivisor::Periods,
        }
    }

    /// `gini ~ gini(-1) + poverty + neetsrate(-1) + social + creditb`.
    pub fn inequality_baseline() -> Self {
        EstimationSpec::egls_fixed_effects(
            VariableSpec::dependent("gini"),
            vec![
                VariableSpec::regressor("gini", 1),
                VariableSpec::regressor("poverty", 0),
                VariableSpec::regressor("neetsrate", 1),
                VariableSpec::regressor("social", 0),
                VariableSpec::regressor("creditb", 0),
            ],
        )
    }

    pub fn with_effects(mut self, effects: Effects, weighting: Weighting, covariance: CovarianceKind) -> Self {
        self.effects = effects;
        self.weighting = weighting;
        self.covariance = covariance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dependent.role != Role::Dependent {
            return Err(Error::invalid("dependent variable must carry the dependent role"));
        }
        if self.regressors.is_empty() {
            return Err(Error::invalid("at least one regressor required"));
        }
        let mut labels: Vec<String> = self.regressors.iter().map(VariableSpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("regressor `{}` listed twice", w[0])));
        }
        if self
            .regressors
            .iter()
            .any(|r| r.name == self.dependent.name && r.lag == self.dependent.lag)
        {
            return Err(Error::invalid("dependent variable cannot also be a regressor at the same lag"));
        }
        Ok(())
    }

    pub fn variables(&self) -> Vec<VariableSpec> {
        let mut v = vec![self.dependent.clone()];
        v.extend(self.regressors.iter().cloned().map(|mut r| {
            r.role = Role::Regressor;
            r
        }));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityValue {
    pub entity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDescription {
    pub first_year: i32,
    pub last_year: i32,
    pub periods_included: usize,
    pub cross_sections: usize,
    pub observations: usize,
    pub balanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponents {
    pub sigma_idiosyncratic2: f64,
    pub sigma_entity2: f64,
    pub theta: f64,
    /// The between-based entity variance came out negative and was set to 0.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub method: String,
    pub dependent: String,
    pub effects_kind: Effects,
    pub covariance_kind: CovarianceKind,
    /// Slopes in regressor order, then the constant `C` when present.
    pub coefficients: Vec<CoefficientRow>,
    /// Covariance of `coefficients`, same ordering.
    pub covariance: Matrix,
    /// Per-entity deviations of the intercept from `C`, summing to zero.
    pub effects: Vec<EntityValue>,
    pub weights: Option<Vec<EntityValue>>,
    pub weighted: Option<FitStatistics>,
    pub unweighted: FitStatistics,
    pub sample: SampleDescription,
    /// `y - C - effect_i - X b`, original units, aligned with `frame` rows.
    pub residuals: Vec<f64>,
    pub df_resid: usize,
    /// Parameters counted for degrees of freedom (slopes, constant, effects).
    pub n_params: usize,
    pub components: Option<ErrorComponents>,
    pub frame: EstimationFrame,
}

impl EstimationResult {
    pub fn n_slopes(&self) -> usize {
        self.frame.regressors.len()
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.coefficients[..self.n_slopes()].iter().map(|c| c.coefficient).collect()
    }

    pub fn slope_covariance(&self) -> Matrix {
        let idx: Vec<usize> = (0..self.n_slopes()).collect();
        self.covariance.principal_block(&idx)
    }

    pub fn intercept(&self) -> Option<&CoefficientRow> {
        self.coefficients.get(self.n_slopes())
    }

    pub fn coefficient(&self, name: &str) -> Option<&CoefficientRow> {
        self.coefficients.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// Unweighted sum of squared residuals.
    pub fn ssr(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

fn rename_rank_error(err: Error, names: &[String], offset: usize, context: &str) -> Error {
    match err {
        Error::RankDeficient { column, .. } if column >= offset && column - offset < names.len() => {
            Error::RankDeficient {
                column,
                name: format!("{}{context}", names[column - offset]),
            }
        }
        other => other,
    }
}

fn coefficient_rows(names: &[String], coef: &[f64], cov: &Matrix, df: usize) -> Vec<CoefficientRow> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = cov[(j, j)].max(0.0).sqrt();
            let t = if se > 0.0 { coef[j] / se } else { f64::NAN };
            let p = if t.is_finite() {
                student_t_two_sided(t, df as f64).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            CoefficientRow {
                name: name.clone(),
                coefficient: coef[j],
                std_error: se,
                t_statistic: t,
                probability: p,
            }
        })
        .collect()
}

fn sample_description(frame: &EstimationFrame) -> SampleDescription {
    let (first_year, last_year) = frame.sample_years();
    SampleDescription {
        first_year,
        last_year,
        periods_included: frame.periods_included(),
        cross_sections: frame.n_active_entities(),
        observations: frame.n_rows(),
        balanced: frame.is_balanced(),
    }
}

fn check_panel_frame(frame: &EstimationFrame) -> Result<()> {
    frame.require_balanced()?;
    if frame.n_active_entities() < 2 {
        return Err(Error::InsufficientData("at least two cross-sections required".into()));
    }
    for (i, g) in frame.groups().iter().enumerate() {
        if g.len() < 2 {
            return Err(Error::CrossSection {
                entity: frame.entities[i].clone(),
                message: format!("{} usable periods, need at least 2", g.len()),
            });
        }
    }
    Ok(())
}

fn coefficient_names(frame: &EstimationFrame) -> Vec<String> {
    let mut names: Vec<String> = frame.regressors.iter().map(|r| r.to_uppercase()).collect();
    names.push("C".to_string());
    names
}

fn row_weights(frame: &EstimationFrame, entity_weights: &[f64]) -> Vec<f64> {
    frame.rows.iter().map(|r| entity_weights[r.entity]).collect()
}

/// Design `[1, X, D]` where `D` holds `N - 1` sum-to-zero coded entity
/// columns, so the constant is the average entity intercept.
fn deviation_coded_design(frame: &EstimationFrame) -> Matrix {
    let n_ent = frame.entities.len();
    let k = frame.x.ncols();
    let mut z = Matrix::zeros(frame.n_rows(), 1 + k + n_ent - 1);
    for (r, idx) in frame.rows.iter().enumerate() {
        z[(r, 0)] = 1.0;
        z.row_mut(r)[1..=k].copy_from_slice(frame.x.row(r));
        if idx.entity + 1 == n_ent {
            for j in 0..n_ent - 1 {
                z[(r, 1 + k + j)] = -1.0;
            }
        } else {
            z[(r, 1 + k + idx.entity)] = 1.0;
        }
    }
    z
}

/// Within fit on the frame, optionally with per-entity weights. Slopes
/// come from the demeaned regression; the constant and its covariance come
/// from the equivalent sum-to-zero dummy design.
fn fixed_effects_fit(
    frame: &EstimationFrame,
    entity_weights: Option<&[f64]>,
    covariance: CovarianceKind,
) -> Result<EstimationResult> {
    check_panel_frame(frame)?;
    let within = frame.demeaned()?;
    let n = frame.n_rows();
    let k = frame.x.ncols();
    let n_ent = frame.entities.len();
    let w_rows = entity_weights.map(|w| row_weights(frame, w));
    let slopes_fit = match &w_rows {
        Some(w) => linreg::wls(&within.x, &within.y, w, false),
        None => linreg::ols(&within.x, &within.y, false),
    }
    .map_err(|e| rename_rank_error(e, &frame.regressors, 0, " (after within transformation)"))?;
    let n_params = k + n_ent;
    if n <= n_params {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {n_params} parameters including effects"
        )));
    }
    let df = n - n_params;
    let beta = slopes_fit.coefficients.clone();

    let alphas: Vec<f64> = (0..n_ent)
        .map(|i| within.y_means[i] - crate::linalg::dot(&within.x_means[i], &beta))
        .collect();
    let c = alphas.iter().sum::<f64>() / n_ent as f64;
    let residuals: Vec<f64> = frame
        .rows
        .iter()
        .enumerate()
        .map(|(r, idx)| frame.y[r] - alphas[idx.entity] - crate::linalg::dot(frame.x.row(r), &beta))
        .collect();

    // covariance of (C, slopes) from the full dummy design
    let z = deviation_coded_design(frame);
    let root: Vec<f64> = match &w_rows {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; n],
    };
    let zt = z.scale_rows(&root);
    let ut: Vec<f64> = residuals.iter().zip(&root).map(|(e, r)| e * r).collect();
    let qr = Qr::new(&zt);
    if let Some(j) = qr.first_dependent_column() {
        return Err(rename_rank_error(
            Error::RankDeficient { column: j, name: String::new() },
            &frame.regressors,
            1,
            "",
        ));
    }
    let bread = qr.gram_inverse();
    let full_cov = match covariance {
        CovarianceKind::Classical => {
            let s2 = ut.iter().map(|e| e * e).sum::<f64>() / df as f64;
            bread.scale(s2)
        }
        CovarianceKind::WhiteCrossSection => sandwich_by_period(
            &zt,
            &ut,
            &bread,
            &frame.period_of_row(),
            n as f64 / df as f64,
        )?,
    };
    // reorder to slopes..., C
    let order: Vec<usize> = (1..=k).chain(std::iter::once(0)).collect();
    let cov = full_cov.principal_block(&order);
    let mut coef = beta.clone();
    coef.push(c);
    let names = coefficient_names(frame);
    let coefficients = coefficient_rows(&names, &coef, &cov, df);

    let groups = frame.entity_of_row();
    let weighted = w_rows.as_ref().map(|w| {
        compute_statistics(&StatisticsInput {
            y: &frame.y,
            residuals: &residuals,
            weights: Some(w),
            n_params,
            has_constant: true,
            groups: Some(&groups),
        })
    });
    let unweighted = compute_statistics(&StatisticsInput {
        y: &frame.y,
        residuals: &residuals,
        weights: None,
        n_params,
        has_constant: true,
        groups: Some(&groups),
    });
    Ok(EstimationResult {
        method: if entity_weights.is_some() {
            "Panel EGLS (Cross-section weights)".into()
        } else {
            "Panel Least Squares".into()
        },
        dependent: frame.dependent.to_uppercase(),
        effects_kind: Effects::CrossSectionFixed,
        covariance_kind: covariance,
        coefficients,
        covariance: cov,
        effects: frame
            .entities
            .iter()
            .zip(&alphas)
            .map(|(e, a)| EntityValue {
                entity: e.clone(),
                value: a - c,
            })
            .collect(),
        weights: entity_weights.map(|w| {
            frame
                .entities
                .iter()
                .zip(w)
                .map(|(e, v)| EntityValue {
                    entity: e.clone(),
                    value: *v,
                })
                .collect()
        }),
        weighted,
        unweighted,
        sample: sample_description(frame),
        residuals,
        df_resid: df,
        n_params,
        components: None,
        frame: frame.clone(),
    })
}

fn frame_for(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationFrame> {
    spec.validate()?;
    estimation_frame(panel, &spec.variables())
}

/// Cross-section fixed effects by the within transformation.
pub fn fixed_effects_within(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    let frame = frame_for(panel, spec)?;
    fixed_effects_within_frame(&frame, spec.covariance)
}

pub fn fixed_effects_within_frame(frame: &EstimationFrame, covariance: CovarianceKind) -> Result<EstimationResult> {
    fixed_effects_fit(frame, None, covariance)
}

/// Least-squares dummy variables: a constant plus `N - 1` entity indicators
/// (the last entity is the baseline). Effects are re-expressed as
/// deviations from their average.
pub fn fixed_effects_lsdv(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    let frame = frame_for(panel, spec)?;
    fixed_effects_lsdv_frame(&frame, spec.covariance)
}

/// Indicator columns for all but the last entity.
pub fn entity_dummies(frame: &EstimationFrame) -> Matrix {
    let n_ent = frame.entities.len();
    let mut d = Matrix::zeros(frame.n_rows(), n_ent.saturating_sub(1));
    for (r, idx) in frame.rows.iter().enumerate() {
        if idx.entity + 1 < n_ent {
            d[(r, idx.entity)] = 1.0;
        }
    }
    d
}

pub fn fixed_effects_lsdv_frame(frame: &EstimationFrame, covariance: CovarianceKind) -> Result<EstimationResult> {
    check_panel_frame(frame)?;
    let k = frame.x.ncols();
    let n_ent = frame.entities.len();
    let design = frame.x.hstack(&entity_dummies(frame));
    let mut fit = linreg::ols(&design, &frame.y, true)
        .map_err(|e| rename_rank_error(e, &frame.regressors, 1, ""))?;
    if covariance == CovarianceKind::WhiteCrossSection {
        fit.use_white_cross_section(&frame.period_of_row())?;
    }
    let base = fit.coefficients[0];
    let mut alphas: Vec<f64> = (0..n_ent - 1).map(|i| base + fit.coefficients[1 + k + i]).collect();
    alphas.push(base);
    let c = alphas.iter().sum::<f64>() / n_ent as f64;
    // C = b0 + (1/N) Σ o_i, a linear combination of the fitted coefficients
    let p = fit.n_coefficients();
    let mut a = vec![0.0; p];
    a[0] = 1.0;
    for i in 0..n_ent - 1 {
        a[1 + k + i] = 1.0 / n_ent as f64;
    }
    let va = fit.covariance.mul_vec(&a);
    let var_c = crate::linalg::dot(&a, &va);
    let mut cov = Matrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            cov[(i, j)] = fit.covariance[(1 + i, 1 + j)];
        }
        cov[(i, k)] = va[1 + i];
        cov[(k, i)] = va[1 + i];
    }
    cov[(k, k)] = var_c;
    let mut coef: Vec<f64> = fit.coefficients[1..=k].to_vec();
    coef.push(c);
    let coefficients = coefficient_rows(&coefficient_names(frame), &coef, &cov, fit.df_resid);
    let groups = frame.entity_of_row();
    let unweighted = linreg::fit_statistics(&fit, false, Some(&groups));
    Ok(EstimationResult {
        method: "Panel Least Squares (dummy variables)".into(),
        dependent: frame.dependent.to_uppercase(),
        effects_kind: Effects::CrossSectionFixed,
        covariance_kind: covariance,
        coefficients,
        covariance: cov,
        effects: frame
            .entities
            .iter()
            .zip(&alphas)
            .map(|(e, al)| EntityValue {
                entity: e.clone(),
                value: al - c,
            })
            .collect(),
        weights: None,
        weighted: None,
        unweighted,
        sample: sample_description(frame),
        residuals: fit.residuals.clone(),
        df_resid: fit.df_resid,
        n_params: fit.n_coefficients(),
        components: None,
        frame: frame.clone(),
    })
}

/// Pooled OLS with a common intercept.
pub fn pooled_ols(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    let frame = frame_for(panel, spec)?;
    pooled_ols_frame(&frame, spec.covariance)
}

fn from_plain_fit(
    frame: &EstimationFrame,
    mut fit: LeastSquaresFit,
    covariance: CovarianceKind,
    method: &str,
    effects: Effects,
    has_constant: bool,
) -> Result<EstimationResult> {
    let k = frame.x.ncols();
    if covariance == CovarianceKind::WhiteCrossSection {
        fit.use_white_cross_section(&frame.period_of_row())?;
    }
    // fit columns are [C?, slopes...]; report slopes first
    let order: Vec<usize> = if has_constant {
        (1..=k).chain(std::iter::once(0)).collect()
    } else {
        (0..k).collect()
    };
    let cov = fit.covariance.principal_block(&order);
    let coef: Vec<f64> = order.iter().map(|&j| fit.coefficients[j]).collect();
    let mut names = coefficient_names(frame);
    if !has_constant {
        names.pop();
    }
    let coefficients = coefficient_rows(&names, &coef, &cov, fit.df_resid);
    let groups = frame.entity_of_row();
    let unweighted = compute_statistics(&StatisticsInput {
        y: &frame.y,
        residuals: &fit.residuals,
        weights: None,
        n_params: fit.n_coefficients(),
        has_constant,
        groups: Some(&groups),
    });
    Ok(EstimationResult {
        method: method.into(),
        dependent: frame.dependent.to_uppercase(),
        effects_kind: effects,
        covariance_kind: covariance,
        coefficients,
        covariance: cov,
        effects: vec![],
        weights: None,
        weighted: None,
        unweighted,
        sample: sample_description(frame),
        residuals: fit.residuals.clone(),
        df_resid: fit.df_resid,
        n_params: fit.n_coefficients(),
        components: None,
        frame: frame.clone(),
    })
}

pub fn pooled_ols_frame(frame: &EstimationFrame, covariance: CovarianceKind) -> Result<EstimationResult> {
    frame.require_balanced()?;
    let fit = linreg::ols(&frame.x, &frame.y, true).map_err(|e| rename_rank_error(e, &frame.regressors, 1, ""))?;
    from_plain_fit(frame, fit, covariance, "Panel Least Squares (pooled)", Effects::None, true)
}

/// Swamy-Arora variance components from the within and between regressions.
pub fn swamy_arora_components(frame: &EstimationFrame) -> Result<ErrorComponents> {
    check_panel_frame(frame)?;
    let n_ent = frame.entities.len();
    let k = frame.x.ncols();
    let t = frame.entity_counts[0] as f64;
    let fe = fixed_effects_within_frame(frame, CovarianceKind::Classical)?;
    let sigma_e2 = fe.ssr() / fe.df_resid as f64;
    if n_ent <= k + 1 {
        return Err(Error::InsufficientData(format!(
            "between regression needs more than {} cross-sections, have {n_ent}",
            k + 1
        )));
    }
    let within = frame.demeaned()?;
    let xb = Matrix::from_rows(&within.x_means);
    let between = linreg::ols(&xb, &within.y_means, true)
        .map_err(|e| rename_rank_error(e, &frame.regressors, 1, " (between regression)"))?;
    let sigma_b2 = between.ssr() / (n_ent - k - 1) as f64;
    let raw = sigma_b2 - sigma_e2 / t;
    let (sigma_u2, clamped) = if raw < 0.0 { (0.0, true) } else { (raw, false) };
    let theta = if sigma_e2 + t * sigma_u2 > 0.0 {
        1.0 - (sigma_e2 / (sigma_e2 + t * sigma_u2)).sqrt()
    } else {
        0.0
    };
    Ok(ErrorComponents {
        sigma_idiosyncratic2: sigma_e2,
        sigma_entity2: sigma_u2,
        theta,
        clamped,
    })
}

/// GLS by quasi-demeaning with a given `theta` (0 = pooled, 1 = within).
pub fn random_effects_with_theta(frame: &EstimationFrame, theta: f64) -> Result<EstimationResult> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    check_panel_frame(frame)?;
    let within = frame.demeaned()?;
    let k = frame.x.ncols();
    let n = frame.n_rows();
    let keep_constant = theta < 1.0;
    let ncols = k + usize::from(keep_constant);
    let mut z = Matrix::zeros(n, ncols);
    let mut ys = vec![0.0; n];
    for (r, idx) in frame.rows.iter().enumerate() {
        let i = idx.entity;
        ys[r] = frame.y[r] - theta * within.y_means[i];
        let off = usize::from(keep_constant);
        if keep_constant {
            z[(r, 0)] = 1.0 - theta;
        }
        for j in 0..k {
            z[(r, off + j)] = frame.x[(r, j)] - theta * within.x_means[i][j];
        }
    }
    let fit = linreg::ols(&z, &ys, false)
        .map_err(|e| rename_rank_error(e, &frame.regressors, usize::from(keep_constant), ""))?;
    let mut result = from_plain_fit(
        frame,
        fit.clone(),
        CovarianceKind::Classical,
        "Panel EGLS (Cross-section random effects)",
        Effects::CrossSectionRandom,
        false,
    )?;
    // residuals and statistics in original units
    let c = if keep_constant { fit.coefficients[0] } else { 0.0 };
    let beta = &fit.coefficients[usize::from(keep_constant)..];
    result.residuals = (0..n)
        .map(|r| frame.y[r] - c - crate::linalg::dot(frame.x.row(r), beta))
        .collect();
    let groups = frame.entity_of_row();
    result.unweighted = compute_statistics(&StatisticsInput {
        y: &frame.y,
        residuals: &result.residuals,
        weights: None,
        n_params: ncols,
        has_constant: true,
        groups: Some(&groups),
    });
    if keep_constant {
        // slopes first, then C
        let order: Vec<usize> = (1..=k).chain(std::iter::once(0)).collect();
        result.covariance = fit.covariance.principal_block(&order);
        let coef: Vec<f64> = order.iter().map(|&j| fit.coefficients[j]).collect();
        result.coefficients = coefficient_rows(&coefficient_names(frame), &coef, &result.covariance, fit.df_resid);
    }
    Ok(result)
}

/// Swamy-Arora random effects.
pub fn random_effects_swamy_arora(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    let frame = frame_for(panel, spec)?;
    random_effects_frame(&frame)
}

pub fn random_effects_frame(frame: &EstimationFrame) -> Result<EstimationResult> {
    let comps = swamy_arora_components(frame)?;
    let mut r = random_effects_with_theta(frame, comps.theta)?;
    r.components = Some(comps);
    Ok(r)
}

/// Inverse residual variance per entity from an unweighted first stage.
pub fn cross_section_weights(first_stage: &EstimationResult, divisor: VarianceDivisor) -> Result<Vec<f64>> {
    let frame = &first_stage.frame;
    let total_scale = first_stage.ssr() / first_stage.residuals.len().max(1) as f64;
    frame
        .groups()
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let ti = g.len();
            let d = match divisor {
                VarianceDivisor::Periods => ti,
                VarianceDivisor::PeriodsLessOne => ti.saturating_sub(1),
            };
            if d == 0 {
                return Err(Error::CrossSection {
                    entity: frame.entities[i].clone(),
                    message: "no periods for the residual variance".into(),
                });
            }
            let ss: f64 = first_stage.residuals[g].iter().map(|e| e * e).sum();
            let s2 = ss / d as f64;
            if !(s2 > f64::EPSILON * f64::EPSILON * total_scale.max(f64::MIN_POSITIVE)) {
                return Err(Error::CrossSection {
                    entity: frame.entities[i].clone(),
                    message: "first-stage residual variance is zero; review the specification".into(),
                });
            }
            Ok(1.0 / s2)
        })
        .collect()
}

/// One-step cross-section weighted fixed effects: unweighted within fit,
/// inverse-variance entity weights, weighted within fit, then the chosen
/// covariance on the weighted data.
pub fn panel_egls_fe(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    if spec.effects != Effects::CrossSectionFixed || spec.weighting != Weighting::CrossSectionWeights {
        return Err(Error::invalid(
            "EGLS fixed effects needs cross-section fixed effects with cross-section weights",
        ));
    }
    let frame = frame_for(panel, spec)?;
    panel_egls_fe_frame(&frame, spec.covariance, spec.variance_divisor)
}

pub fn panel_egls_fe_frame(
    frame: &EstimationFrame,
    covariance: CovarianceKind,
    divisor: VarianceDivisor,
) -> Result<EstimationResult> {
    let first = fixed_effects_within_frame(frame, CovarianceKind::Classical)?;
    let weights = cross_section_weights(&first, divisor)?;
    fixed_effects_fit(frame, Some(&weights), covariance)
}

/// Dispatches on the specification's effects and weighting.
pub fn estimate(panel: &PanelDataset, spec: &EstimationSpec) -> Result<EstimationResult> {
    let frame = frame_for(panel, spec)?;
    match (spec.effects, spec.weighting) {
        (Effects::None, Weighting::None) => pooled_ols_frame(&frame, spec.covariance),
        (Effects::CrossSectionFixed, Weighting::None) => fixed_effects_within_frame(&frame, spec.covariance),
        (Effects::CrossSectionFixed, Weighting::CrossSectionWeights) => {
            panel_egls_fe_frame(&frame, spec.covariance, spec.variance_divisor)
        }
        (Effects::CrossSectionRandom, Weighting::None) => random_effects_frame(&frame),
        (e, w) => Err(Error::invalid(format!("unsupported combination: {e:?} with {w:?}"))),
    }
}
