//! Small least-squares kernel for the Dickey-Fuller family. Skips the
//! inference machinery of `linreg` because tests and calibration only need
//! coefficients, residuals and one standard error.

use super::DeterministicSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, Qr};

pub(crate) struct QuickFit {
    pub coef: Vec<f64>,
    pub resid: Vec<f64>,
    pub ssr: f64,
    pub gram_inv_diag: Vec<f64>,
}

impl QuickFit {
    pub fn n(&self) -> usize {
        self.resid.len()
    }

    pub fn k(&self) -> usize {
        self.coef.len()
    }

    pub fn s2(&self) -> f64 {
        self.ssr / (self.n() - self.k()) as f64
    }

    pub fn t_stat(&self, j: usize) -> f64 {
        self.coef[j] / (self.s2() * self.gram_inv_diag[j]).sqrt()
    }

    pub fn std_error(&self, j: usize) -> f64 {
        (self.s2() * self.gram_inv_diag[j]).sqrt()
    }
}

/// OLS without an implicit intercept. Rank deficiency and a vanishing
/// residual variance both count as degenerate input.
pub(crate) fn quick_ols(x: &Matrix, y: &[f64], what: &str) -> Result<QuickFit> {
    let (n, k) = (x.nrows(), x.ncols());
    if n <= k {
        return Err(Error::TooShort(format!("{what}: {n} observations for {k} coefficients")));
    }
    let scale: f64 = y.iter().map(|v| v * v).sum();
    if k == 0 {
        let resid = y.to_vec();
        return Ok(QuickFit {
            coef: vec![],
            ssr: scale,
            resid,
            gram_inv_diag: vec![],
        });
    }
    let qr = Qr::new(x);
    if qr.first_dependent_column().is_some() {
        return Err(Error::Degenerate(format!("{what}: regressors are collinear")));
    }
    let coef = qr.solve(y);
    let resid: Vec<f64> = (0..n).map(|r| y[r] - dot(x.row(r), &coef)).collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let gram_inv_diag = qr.gram_inverse().diagonal();
    Ok(QuickFit {
        coef,
        resid,
        ssr,
        gram_inv_diag,
    })
}

pub(crate) fn ensure_variation(ssr: f64, scale: f64, what: &str) -> Result<()> {
    if !(ssr > 1e-24 * scale.max(f64::MIN_POSITIVE)) || !ssr.is_finite() {
        return Err(Error::Degenerate(format!("{what}: residual variance is zero")));
    }
    Ok(())
}

pub(crate) fn first_difference(y: &[f64]) -> Vec<f64> {
    y.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Rows of the Dickey-Fuller regression for `Δy_t`, `t = start..T-1`:
/// columns `[y_{t-1}, Δy_{t-1}, ..., Δy_{t-lag}, 1?, t?]`.
pub(crate) fn df_design(y: &[f64], spec: DeterministicSpec, lag: usize, start: usize) -> (Matrix, Vec<f64>) {
    debug_assert!(start > lag);
    let t_len = y.len();
    let n = t_len.saturating_sub(start);
    let k = 1 + lag + spec.n_terms();
    let mut x = Matrix::zeros(n, k);
    let mut dy = Vec::with_capacity(n);
    for (r, t) in (start..t_len).enumerate() {
        dy.push(y[t] - y[t - 1]);
        let row = x.row_mut(r);
        row[0] = y[t - 1];
        for l in 1..=lag {
            row[l] = y[t - l] - y[t - l - 1];
        }
        match spec {
            DeterministicSpec::None => {}
            DeterministicSpec::Constant => row[1 + lag] = 1.0,
            DeterministicSpec::ConstantAndTrend => {
                row[1 + lag] = 1.0;
                row[2 + lag] = t as f64;
            }
        }
    }
    (x, dy)
}

/// Residuals of `v` on the columns of `x`; `v` itself when `x` has none.
pub(crate) fn partial_out(x: &Matrix, v: &[f64], what: &str) -> Result<Vec<f64>> {
    if x.ncols() == 0 {
        return Ok(v.to_vec());
    }
    Ok(quick_ols(x, v, what)?.resid)
}

/// Columns 1.. of a design (everything except the lagged level).
pub(crate) fn drop_first_column(x: &Matrix) -> Matrix {
    let k = x.ncols();
    let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|r| x.row(r)[1..k].to_vec()).collect();
    if k <= 1 {
        return Matrix::zeros(x.nrows(), 0);
    }
    Matrix::from_rows(&rows)
}
