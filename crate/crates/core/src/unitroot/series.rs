//! Augmented Dickey-Fuller and Phillips-Perron tests for one series.

use super::regression::{df_design, ensure_variation, quick_ols, QuickFit};
use super::tables::mackinnon_row;
use super::{Alternative, DeterministicSpec, UnitRootResult};
use crate::error::{Error, Result};
use crate::probdist::normal_cdf;

/// Asymptotic response-surface p-value for a Dickey-Fuller t statistic
/// (one integrated variable).
pub fn mackinnon_p_value(tau: f64, spec: DeterministicSpec) -> f64 {
    let row = mackinnon_row(spec);
    if tau.is_nan() {
        return f64::NAN;
    }
    if tau > row.tau_max {
        return 1.0;
    }
    if tau < row.tau_min {
        return 0.0;
    }
    let coeffs: &[f64] = if tau <= row.tau_star { &row.small } else { &row.large };
    let poly = coeffs.iter().rev().fold(0.0, |acc, c| acc * tau + c);
    normal_cdf(poly)
}

fn check_finite(y: &[f64]) -> Result<()> {
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("series value {i} is not finite")));
    }
    Ok(())
}

fn schwarz(fit: &QuickFit) -> f64 {
    let n = fit.n() as f64;
    (fit.ssr / n).ln() + fit.k() as f64 * n.ln() / n
}

pub(crate) struct AdfFit {
    pub lag: usize,
    pub tau: f64,
    pub fit: QuickFit,
}

pub(crate) fn adf_fit_at_lag(y: &[f64], spec: DeterministicSpec, lag: usize) -> Result<AdfFit> {
    let (x, dy) = df_design(y, spec, lag, lag + 1);
    let fit = quick_ols(&x, &dy, "Dickey-Fuller regression")?;
    let scale: f64 = dy.iter().map(|v| v * v).sum::<f64>() + x.column(0).iter().map(|v| v * v).sum::<f64>();
    ensure_variation(fit.ssr, scale, "Dickey-Fuller regression")?;
    Ok(AdfFit {
        lag,
        tau: fit.t_stat(0),
        fit,
    })
}

/// Lag in `0..=max_lag` with the smallest Schwarz criterion, every
/// candidate fitted on the sample common to the largest feasible lag.
pub(crate) fn select_lag(y: &[f64], spec: DeterministicSpec, max_lag: usize) -> Result<usize> {
    let t_len = y.len();
    // largest lag whose common-sample regression keeps a residual degree of freedom
    let feasible = (0..=max_lag)
        .rev()
        .find(|&p| t_len > p + 1 && t_len - p - 1 > 1 + p + spec.n_terms())
        .ok_or_else(|| {
            Error::TooShort(format!(
                "series of length {t_len} is too short for a Dickey-Fuller regression ({spec})"
            ))
        })?;
    if feasible == 0 {
        return Ok(0);
    }
    let start = feasible + 1;
    let mut best = (f64::INFINITY, 0);
    for p in 0..=feasible {
        let (x, dy) = df_design(y, spec, p, start);
        let fit = quick_ols(&x, &dy, "Dickey-Fuller regression")?;
        let sc = if fit.ssr > 0.0 { schwarz(&fit) } else { f64::NEG_INFINITY };
        if sc < best.0 {
            best = (sc, p);
        }
    }
    Ok(best.1)
}

fn check_adf_length(y: &[f64], max_lag: usize) -> Result<()> {
    if y.len() < max_lag + 5 {
        return Err(Error::TooShort(format!(
            "ADF with maximum lag {max_lag} needs at least {} observations, got {}",
            max_lag + 5,
            y.len()
        )));
    }
    Ok(())
}

pub(crate) fn adf_core(y: &[f64], spec: DeterministicSpec, max_lag: usize) -> Result<AdfFit> {
    check_finite(y)?;
    check_adf_length(y, max_lag)?;
    let lag = select_lag(y, spec, max_lag)?;
    adf_fit_at_lag(y, spec, lag)
}

/// Augmented Dickey-Fuller test with Schwarz lag selection up to `max_lag`.
/// The chosen lag is re-estimated on its own full sample.
pub fn adf_test(y: &[f64], spec: DeterministicSpec, max_lag: usize) -> Result<UnitRootResult> {
    let f = adf_core(y, spec, max_lag)?;
    Ok(UnitRootResult {
        test: "ADF".into(),
        spec,
        statistic: f.tau,
        p_value: mackinnon_p_value(f.tau, spec),
        lags: vec![f.lag],
        n_obs: f.fit.n(),
        alternative: Alternative::Individual,
    })
}

/// ADF with the augmentation fixed at `lag`.
pub fn adf_test_fixed_lag(y: &[f64], spec: DeterministicSpec, lag: usize) -> Result<UnitRootResult> {
    check_finite(y)?;
    let f = adf_fit_at_lag(y, spec, lag)?;
    Ok(UnitRootResult {
        test: "ADF".into(),
        spec,
        statistic: f.tau,
        p_value: mackinnon_p_value(f.tau, spec),
        lags: vec![lag],
        n_obs: f.fit.n(),
        alternative: Alternative::Individual,
    })
}

/// Bartlett-kernel bandwidth `floor(4 (n/100)^(2/9))`.
pub fn newey_west_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett long-run variance of a (mean-zero) residual sequence.
pub(crate) fn bartlett_long_run_variance(u: &[f64], bandwidth: usize) -> f64 {
    let n = u.len();
    let gamma = |j: usize| (j..n).map(|t| u[t] * u[t - j]).sum::<f64>() / n as f64;
    let mut lrv = gamma(0);
    for j in 1..=bandwidth.min(n.saturating_sub(1)) {
        lrv += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * gamma(j);
    }
    lrv
}

/// Phillips-Perron `Z_t` test: zero-lag Dickey-Fuller regression with a
/// Bartlett long-run variance correction.
pub fn pp_test(y: &[f64], spec: DeterministicSpec) -> Result<UnitRootResult> {
    check_finite(y)?;
    let f = adf_fit_at_lag(y, spec, 0)?;
    let fit = &f.fit;
    let n = fit.n();
    let bw = newey_west_bandwidth(n);
    let gamma0 = fit.ssr / n as f64;
    let lambda2 = bartlett_long_run_variance(&fit.resid, bw);
    if !(lambda2 > 0.0) {
        return Err(Error::Degenerate("Phillips-Perron long-run variance is not positive".into()));
    }
    let s = fit.s2().sqrt();
    let se = fit.std_error(0);
    let lambda = lambda2.sqrt();
    let z = (gamma0 / lambda2).sqrt() * f.tau - (lambda2 - gamma0) / (2.0 * lambda) * (n as f64 * se / s);
    Ok(UnitRootResult {
        test: "PP".into(),
        spec,
        statistic: z,
        p_value: mackinnon_p_value(z, spec),
        lags: vec![bw],
        n_obs: n,
        alternative: Alternative::Individual,
    })
}
