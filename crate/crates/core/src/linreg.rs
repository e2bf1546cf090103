//! Least squares via Householder QR with classical and White cross-section
//! (period-clustered) covariance, plus the goodness-of-fit block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::probdist::{f_sf, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Classical,
    WhiteCrossSection,
}

/// Goodness-of-fit block. Quantities that are undefined for a given fit
/// (zero total variation, no constant for the F test) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub r_squared: Option<f64>,
    pub adjusted_r_squared: Option<f64>,
    pub se_of_regression: f64,
    pub sum_squared_resid: f64,
    pub f_statistic: Option<f64>,
    pub prob_f: Option<f64>,
    pub durbin_watson: Option<f64>,
    pub mean_dependent: f64,
    pub sd_dependent: f64,
}

#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    /// `y - X b` in the original (unweighted) units.
    pub residuals: Vec<f64>,
    pub covariance: Matrix,
    pub standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub fit: FitStatistics,
    pub covariance_kind: CovarianceKind,
    /// Design actually used, including the intercept column when present.
    pub design: Matrix,
    pub y: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub intercept: bool,
    /// Residual degrees of freedom used for s² and the t distribution.
    pub df_resid: usize,
    gram_inverse: Matrix,
}

fn column_name(j: usize, intercept: bool) -> String {
    match (intercept, j) {
        (true, 0) => "intercept".to_string(),
        (true, j) => format!("x{j}"),
        (false, j) => format!("x{}", j + 1),
    }
}

fn fit_design(design: Matrix, y: &[f64], weights: Option<Vec<f64>>, intercept: bool) -> Result<LeastSquaresFit> {
    let (n, k) = (design.nrows(), design.ncols());
    if y.len() != n {
        return Err(Error::invalid(format!("y has {} rows, X has {n}", y.len())));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} coefficients"
        )));
    }
    if design.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in regression data"));
    }
    let (xt, yt) = match &weights {
        Some(w) => {
            let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
            let yt = y.iter().zip(&root).map(|(a, r)| a * r).collect::<Vec<_>>();
            (design.scale_rows(&root), yt)
        }
        None => (design.clone(), y.to_vec()),
    };
    let qr = Qr::new(&xt);
    if let Some(j) = qr.first_dependent_column() {
        return Err(Error::RankDeficient {
            column: j,
            name: column_name(j, intercept),
        });
    }
    let coefficients = qr.solve(&yt);
    let fitted = design.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut fit = LeastSquaresFit {
        coefficients,
        residuals,
        covariance: Matrix::zeros(k, k),
        standard_errors: vec![],
        t_statistics: vec![],
        probabilities: vec![],
        fit: FitStatistics {
            r_squared: None,
            adjusted_r_squared: None,
            se_of_regression: 0.0,
            sum_squared_resid: 0.0,
            f_statistic: None,
            prob_f: None,
            durbin_watson: None,
            mean_dependent: 0.0,
            sd_dependent: 0.0,
        },
        covariance_kind: CovarianceKind::Classical,
        design,
        y: y.to_vec(),
        weights,
        intercept,
        df_resid: n - k,
        gram_inverse: qr.gram_inverse(),
    };
    fit.refresh_classical();
    fit.fit = fit_statistics(&fit, true, None);
    Ok(fit)
}

/// Ordinary least squares; `intercept` prepends a constant column.
pub fn ols(x: &Matrix, y: &[f64], intercept: bool) -> Result<LeastSquaresFit> {
    let design = if intercept { x.with_intercept() } else { x.clone() };
    fit_design(design, y, None, intercept)
}

/// Weighted least squares: OLS on rows scaled by `sqrt(weight)`.
pub fn wls(x: &Matrix, y: &[f64], weights: &[f64], intercept: bool) -> Result<LeastSquaresFit> {
    if weights.len() != x.nrows() {
        return Err(Error::invalid("one weight per row required"));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid(format!(
            "weight at row {i} must be positive, got {}",
            weights[i]
        )));
    }
    let design = if intercept { x.with_intercept() } else { x.clone() };
    fit_design(design, y, Some(weights.to_vec()), intercept)
}

impl LeastSquaresFit {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.coefficients.len()
    }

    /// Residuals on the transformed (weighted) scale.
    pub fn transformed_residuals(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => self.residuals.iter().zip(w).map(|(e, w)| e * w.sqrt()).collect(),
            None => self.residuals.clone(),
        }
    }

    pub fn transformed_design(&self) -> Matrix {
        match &self.weights {
            Some(w) => self.design.scale_rows(&w.iter().map(|v| v.sqrt()).collect::<Vec<_>>()),
            None => self.design.clone(),
        }
    }

    /// `(X̃ᵀX̃)⁻¹` for the transformed design.
    pub fn gram_inverse(&self) -> &Matrix {
        &self.gram_inverse
    }

    /// Weighted sum of squared residuals.
    pub fn ssr(&self) -> f64 {
        self.transformed_residuals().iter().map(|e| e * e).sum()
    }

    /// Changes the residual degrees of freedom (e.g. to count absorbed fixed
    /// effects) and recomputes the classical covariance and inference.
    pub fn set_df_resid(&mut self, df: usize) -> Result<()> {
        if df == 0 {
            return Err(Error::InsufficientData("no residual degrees of freedom".into()));
        }
        self.df_resid = df;
        match self.covariance_kind {
            CovarianceKind::Classical => self.refresh_classical(),
            CovarianceKind::WhiteCrossSection => {}
        }
        Ok(())
    }

    fn refresh_classical(&mut self) {
        let s2 = self.ssr() / self.df_resid as f64;
        let cov = self.gram_inverse.scale(s2);
        self.set_covariance(CovarianceKind::Classical, cov);
    }

    /// Installs a covariance matrix and recomputes standard errors, t
    /// statistics and two-sided probabilities.
    pub fn set_covariance(&mut self, kind: CovarianceKind, cov: Matrix) {
        self.standard_errors = cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
        self.t_statistics = self
            .coefficients
            .iter()
            .zip(&self.standard_errors)
            .map(|(b, s)| if *s > 0.0 { b / s } else { f64::NAN })
            .collect();
        let df = self.df_resid as f64;
        self.probabilities = self
            .t_statistics
            .iter()
            .map(|t| {
                if t.is_finite() {
                    student_t_two_sided(*t, df).unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                }
            })
            .collect();
        self.covariance = cov;
        self.covariance_kind = kind;
    }

    /// Replaces the classical covariance with the period-clustered sandwich.
    pub fn use_white_cross_section(&mut self, period_of_row: &[usize]) -> Result<()> {
        let cov = white_cross_section_cov(self, period_of_row)?;
        self.set_covariance(CovarianceKind::WhiteCrossSection, cov);
        Ok(())
    }
}

/// White cross-section covariance: `B [Σ_t X̃_tᵀ û_t û_tᵀ X̃_t] B` with
/// `B = (X̃ᵀX̃)⁻¹`, grouping rows by period, scaled by `n / df_resid`.
pub fn white_cross_section_cov(fit: &LeastSquaresFit, period_of_row: &[usize]) -> Result<Matrix> {
    let n = fit.n_obs();
    sandwich_by_period(
        &fit.transformed_design(),
        &fit.transformed_residuals(),
        fit.gram_inverse(),
        period_of_row,
        n as f64 / fit.df_resid as f64,
    )
}

/// Period-clustered sandwich for an already transformed design and residual
/// vector, multiplied by `correction`.
pub fn sandwich_by_period(
    xt: &Matrix,
    ut: &[f64],
    bread: &Matrix,
    period_of_row: &[usize],
    correction: f64,
) -> Result<Matrix> {
    let n = xt.nrows();
    if period_of_row.len() != n || ut.len() != n {
        return Err(Error::invalid("one period label and residual per row required"));
    }
    let k = xt.ncols();
    let n_periods = period_of_row.iter().max().map_or(0, |m| m + 1);
    let mut scores = vec![vec![0.0; k]; n_periods];
    for r in 0..n {
        let s = &mut scores[period_of_row[r]];
        for (j, x) in xt.row(r).iter().enumerate() {
            s[j] += x * ut[r];
        }
    }
    let mut meat = Matrix::zeros(k, k);
    for s in &scores {
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += s[a] * s[b];
            }
        }
    }
    let mut cov = bread.matmul(&meat).matmul(bread).scale(correction);
    for a in 0..k {
        for b in 0..a {
            let m = 0.5 * (cov[(a, b)] + cov[(b, a)]);
            cov[(a, b)] = m;
            cov[(b, a)] = m;
        }
    }
    Ok(cov)
}

/// Durbin-Watson over rows in order, skipping differences across group
/// boundaries.
pub fn durbin_watson(resid: &[f64], groups: Option<&[usize]>) -> Option<f64> {
    let denom: f64 = resid.iter().map(|e| e * e).sum();
    if denom <= 0.0 {
        return None;
    }
    let num: f64 = (1..resid.len())
        .filter(|&r| groups.is_none_or(|g| g[r] == g[r - 1]))
        .map(|r| (resid[r] - resid[r - 1]).powi(2))
        .sum();
    Some(num / denom)
}

/// Inputs for the goodness-of-fit block, decoupled from any particular fit
/// so estimators can count absorbed effects in `n_params`.
pub struct StatisticsInput<'a> {
    pub y: &'a [f64],
    pub residuals: &'a [f64],
    pub weights: Option<&'a [f64]>,
    /// Total estimated parameters, including the constant and any effects.
    pub n_params: usize,
    pub has_constant: bool,
    pub groups: Option<&'a [usize]>,
}

pub fn compute_statistics(input: &StatisticsInput<'_>) -> FitStatistics {
    let n = input.y.len();
    let root: Vec<f64> = match input.weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; n],
    };
    let w: Vec<f64> = root.iter().map(|r| r * r).collect();
    let ssr: f64 = input.residuals.iter().zip(&w).map(|(e, w)| w * e * e).sum();
    let sw: f64 = w.iter().sum();
    let ybar_w = input.y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let tss: f64 = if input.has_constant {
        input.y.iter().zip(&w).map(|(y, w)| w * (y - ybar_w).powi(2)).sum()
    } else {
        input.y.iter().zip(&w).map(|(y, w)| w * y * y).sum()
    };
    let k = input.n_params;
    let df = n.saturating_sub(k);
    let r2 = (tss > 0.0).then(|| 1.0 - ssr / tss);
    let adj = r2.and_then(|r| (df > 0).then(|| 1.0 - (1.0 - r) * (n as f64 - 1.0) / df as f64));
    let (f, pf) = match r2 {
        Some(r) if input.has_constant && k > 1 && df > 0 && r < 1.0 => {
            let f = (r / (k - 1) as f64) / ((1.0 - r) / df as f64);
            (Some(f), f_sf(f.max(0.0), (k - 1) as f64, df as f64).ok())
        }
        Some(r) if input.has_constant && k > 1 && df > 0 && r >= 1.0 => (Some(f64::INFINITY), Some(0.0)),
        _ => (None, None),
    };
    let ty: Vec<f64> = input.y.iter().zip(&root).map(|(y, r)| y * r).collect();
    let mean = ty.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (ty.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let te: Vec<f64> = input.residuals.iter().zip(&root).map(|(e, r)| e * r).collect();
    FitStatistics {
        r_squared: r2,
        adjusted_r_squared: adj,
        se_of_regression: if df > 0 { (ssr / df as f64).sqrt() } else { 0.0 },
        sum_squared_resid: ssr,
        f_statistic: f.filter(|v| v.is_finite()),
        prob_f: pf,
        durbin_watson: durbin_watson(&te, input.groups),
        mean_dependent: mean,
        sd_dependent: sd,
    }
}

/// Fit statistics for a least-squares fit. With `weighted` the block is
/// computed on the transformed data; otherwise the unweighted residuals at
/// the same coefficients are used. The dependent-variable mean and S.D. are
/// those of the transformed `y` (`sqrt(w) y`).
pub fn fit_statistics(fit: &LeastSquaresFit, weighted: bool, groups: Option<&[usize]>) -> FitStatistics {
    let n_params = fit.n_obs() - fit.df_resid;
    compute_statistics(&StatisticsInput {
        y: &fit.y,
        residuals: &fit.residuals,
        weights: if weighted { fit.weights.as_deref() } else { None },
        n_params,
        has_constant: fit.intercept,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_no_intercept_fit() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let f = ols(&x, &[1.0, 2.0, 3.0], false).unwrap();
        assert!((f.coefficients[0] - 1.0).abs() < 1e-15);
        assert!(f.fit.sum_squared_resid < 1e-28);
    }

    #[test]
    fn hand_normal_equations() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let f = ols(&x, &[1.0, 3.0, 5.0, 6.0], true).unwrap();
        assert!((f.coefficients[0] - 1.2).abs() < 1e-13);
        assert!((f.coefficients[1] - 1.7).abs() < 1e-13);
    }

    #[test]
    fn zero_column_rejected() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [5.0, 0.0]]);
        match ols(&x, &[1.0, 2.0, 2.0, 4.0], true) {
            Err(Error::RankDeficient { column, .. }) => assert_eq!(column, 2),
            other => panic!("{other:?}"),
        }
        let x = Matrix::from_rows(&[[1.0], [2.0]]);
        assert!(ols(&x, &[1.0, 2.0], true).is_err());
    }

    #[test]
    fn unit_weights_are_bitwise_ols() {
        let x = Matrix::from_rows(&[[0.3, 1.0], [1.1, -2.0], [2.5, 0.5], [3.0, 4.0], [4.2, 1.5]]);
        let y = [1.0, 0.2, 2.2, 5.1, 3.3];
        let a = ols(&x, &y, true).unwrap();
        let b = wls(&x, &y, &[1.0; 5], true).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.standard_errors, b.standard_errors);
    }

    #[test]
    fn nonpositive_weight_names_row() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let err = wls(&x, &[1.0, 2.0, 2.5], &[1.0, 0.0, 1.0], true).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn saturated_weighted_fit() {
        // two points, intercept + slope: n == K is rejected
        let x = Matrix::from_rows(&[[1.0], [3.0]]);
        assert!(matches!(
            wls(&x, &[2.0, 6.0], &[4.0, 1.0], true),
            Err(Error::InsufficientData(_))
        ));
        // points on a line fit exactly whatever the weights
        let x3 = Matrix::from_rows(&[[1.0], [3.0], [2.0]]);
        let f = wls(&x3, &[2.0, 6.0, 4.0], &[4.0, 1.0, 2.0], true).unwrap();
        assert!(f.fit.sum_squared_resid < 1e-20);
    }

    #[test]
    fn duplicated_row_equals_doubled_weight() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]);
        let y = [0.5, 1.9, 2.2, 3.9, 4.1];
        let doubled = wls(&x, &y, &[1.0, 1.0, 2.0, 1.0, 1.0], true).unwrap();
        let xd = Matrix::from_rows(&[[0.0], [1.0], [2.0], [2.0], [3.0], [4.0]]);
        let dup = ols(&xd, &[0.5, 1.9, 2.2, 2.2, 3.9, 4.1], true).unwrap();
        for (a, b) in doubled.coefficients.iter().zip(&dup.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn durbin_watson_alternating() {
        assert_eq!(durbin_watson(&[1.0, -1.0, 1.0, -1.0], None), Some(3.0));
        // boundary between groups is not differenced
        let g = [0, 0, 1, 1];
        assert_eq!(durbin_watson(&[1.0, -1.0, 1.0, -1.0], Some(&g)), Some(2.0));
    }

    #[test]
    fn perfect_fit_statistics() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let f = ols(&x, &[1.0, 3.0, 5.0, 7.0], true).unwrap();
        assert!((f.fit.r_squared.unwrap() - 1.0).abs() < 1e-14);
        assert!(f.fit.sum_squared_resid < 1e-25);
    }

    #[test]
    fn white_cross_section_zero_residuals() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let f = ols(&x, &[1.0, 3.0, 5.0, 7.0], true).unwrap();
        let cov = white_cross_section_cov(&f, &[0, 1, 0, 1]).unwrap();
        assert!(cov.as_slice().iter().all(|v| v.abs() < 1e-20));
    }
}
