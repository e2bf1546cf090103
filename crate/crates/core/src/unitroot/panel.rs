//! Panel unit-root tests on balanced slices (one vector per entity).

use serde::{Deserialize, Serialize};

use super::calibration::{CalibratedTest, Calibration};
use super::regression::{df_design, drop_first_column, ensure_variation, first_difference, partial_out, quick_ols};
use super::series::{adf_core, adf_fit_at_lag, bartlett_long_run_variance, pp_test, select_lag};
use super::tables::{ips_moments, llc_adjustment};
use super::{adf_test, Alternative, DeterministicSpec, UnitRootResult};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::probdist::{chi2_sf, normal_cdf};

/// Smallest p-value fed into a Fisher combination.
pub const FISHER_P_FLOOR: f64 = 1e-6;

fn check_slices(slices: &[Vec<f64>], min_len: usize, what: &str) -> Result<usize> {
    let first = slices
        .first()
        .ok_or_else(|| Error::InsufficientData(format!("{what}: no cross-sections")))?;
    let t = first.len();
    if let Some(i) = slices.iter().position(|s| s.len() != t) {
        return Err(Error::Unbalanced(format!(
            "{what}: cross-section {i} has {} observations, expected {t}",
            slices[i].len()
        )));
    }
    if t < min_len {
        return Err(Error::TooShort(format!("{what} needs T >= {min_len}, got {t}")));
    }
    for (i, s) in slices.iter().enumerate() {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{what}: cross-section {i} has non-finite values")));
        }
    }
    Ok(t)
}

fn tag_entity(e: Error, i: usize) -> Error {
    match e {
        Error::Degenerate(m) => Error::Degenerate(format!("cross-section {i}: {m}")),
        Error::TooShort(m) => Error::TooShort(format!("cross-section {i}: {m}")),
        other => other,
    }
}

pub(crate) struct LlcEntity {
    /// Normalized orthogonalized differences.
    pub e: Vec<f64>,
    /// Normalized orthogonalized lagged levels.
    pub v: Vec<f64>,
    /// Long-run over short-run standard deviation.
    pub s_ratio: f64,
}

fn remove_deterministics(v: &[f64], spec: DeterministicSpec) -> Result<Vec<f64>> {
    match spec {
        DeterministicSpec::None => Ok(v.to_vec()),
        DeterministicSpec::Constant => {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            Ok(v.iter().map(|x| x - m).collect())
        }
        DeterministicSpec::ConstantAndTrend => {
            let rows: Vec<[f64; 2]> = (0..v.len()).map(|t| [1.0, t as f64]).collect();
            partial_out(&Matrix::from_rows(&rows), v, "detrending")
        }
    }
}

/// Auxiliary regressions for one entity at augmentation `lag`.
pub(crate) fn llc_entity(y: &[f64], spec: DeterministicSpec, lag: usize) -> Result<LlcEntity> {
    let (x, dy) = df_design(y, spec, lag, lag + 1);
    if x.nrows() <= x.ncols() {
        return Err(Error::TooShort(format!(
            "{} observations for an LLC auxiliary regression with {} terms",
            x.nrows(),
            x.ncols()
        )));
    }
    let z = drop_first_column(&x);
    let e_hat = partial_out(&z, &dy, "LLC auxiliary regression")?;
    let v_hat = partial_out(&z, &x.column(0), "LLC auxiliary regression")?;
    let vv: f64 = v_hat.iter().map(|v| v * v).sum();
    let scale: f64 = dy.iter().map(|v| v * v).sum::<f64>() + x.column(0).iter().map(|v| v * v).sum::<f64>();
    ensure_variation(vv, scale, "LLC lagged level")?;
    let delta = e_hat.iter().zip(&v_hat).map(|(a, b)| a * b).sum::<f64>() / vv;
    let ssr: f64 = e_hat.iter().zip(&v_hat).map(|(a, b)| (a - delta * b).powi(2)).sum();
    ensure_variation(ssr, scale, "LLC auxiliary regression")?;
    let sigma = (ssr / e_hat.len() as f64).sqrt();

    let d = remove_deterministics(&first_difference(y), spec)?;
    let kbar = ((3.21 * (y.len() as f64).powf(1.0 / 3.0)).floor() as usize).min(d.len().saturating_sub(1));
    let lrv = bartlett_long_run_variance(&d, kbar).max(0.0);
    Ok(LlcEntity {
        e: e_hat.iter().map(|v| v / sigma).collect(),
        v: v_hat.iter().map(|v| v / sigma).collect(),
        s_ratio: lrv.sqrt() / sigma,
    })
}

/// Levin-Lin-Chu pooled t test with the adjusted statistic `t*`.
pub fn llc_test(
    slices: &[Vec<f64>],
    spec: DeterministicSpec,
    max_lag: usize,
    calibration: Option<&Calibration>,
) -> Result<UnitRootResult> {
    let t = check_slices(slices, 5, "LLC")?;
    let mut lags = Vec::with_capacity(slices.len());
    let mut ents = Vec::with_capacity(slices.len());
    for (i, y) in slices.iter().enumerate() {
        let lag = select_lag(y, spec, max_lag).map_err(|e| tag_entity(e, i))?;
        ents.push(llc_entity(y, spec, lag).map_err(|e| tag_entity(e, i))?);
        lags.push(lag);
    }
    let n = slices.len() as f64;
    let p_bar = lags.iter().sum::<usize>() as f64 / n;
    let t_tilde = t as f64 - p_bar - 1.0;
    let (cross, sq) = ents.iter().fold((0.0, 0.0), |(c, s), ent| {
        (
            c + ent.e.iter().zip(&ent.v).map(|(a, b)| a * b).sum::<f64>(),
            s + ent.v.iter().map(|b| b * b).sum::<f64>(),
        )
    });
    let delta = cross / sq;
    let ssr: f64 = ents
        .iter()
        .flat_map(|ent| ent.e.iter().zip(&ent.v).map(|(a, b)| (a - delta * b).powi(2)))
        .sum();
    let sigma2 = ssr / (n * t_tilde);
    let std_delta = (sigma2 / sq).sqrt();
    let t_delta = delta / std_delta;
    let s_n = ents.iter().map(|e| e.s_ratio).sum::<f64>() / n;
    let (mu, sd) = match llc_adjustment(spec, t_tilde) {
        Ok(v) => v,
        Err(Error::OutsideTable(msg)) => match calibration {
            Some(cal) => cal.moments(CalibratedTest::Llc, spec, t_tilde.round().max(2.0) as usize, 0)?,
            None => return Err(Error::OutsideTable(format!("{msg}; enable Monte Carlo calibration"))),
        },
        Err(e) => return Err(e),
    };
    let stat = (t_delta - n * t_tilde * s_n / sigma2 * std_delta * mu) / sd;
    Ok(UnitRootResult {
        test: "LLC".into(),
        spec,
        statistic: stat,
        p_value: normal_cdf(stat),
        lags,
        n_obs: ents.iter().map(|e| e.e.len()).sum(),
        alternative: Alternative::Common,
    })
}

/// Breitung t test (constant and trend): lag-prewhitened, standardized,
/// forward-orthogonalized differences regressed on detrended levels.
pub fn breitung_test(slices: &[Vec<f64>], max_lag: usize) -> Result<UnitRootResult> {
    let spec = DeterministicSpec::ConstantAndTrend;
    let t = check_slices(slices, 6, "Breitung")?;
    let (mut exy, mut xx, mut ee) = (0.0, 0.0, 0.0);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut lags = Vec::with_capacity(slices.len());
    for (i, y) in slices.iter().enumerate() {
        let lag = select_lag(y, spec, max_lag).map_err(|e| tag_entity(e, i))?;
        let adf = adf_fit_at_lag(y, spec, lag).map_err(|e| tag_entity(e, i))?;
        let s = adf.fit.s2().sqrt();
        // autoregressive filter from Δy_t on its own lags, no deterministics
        let beta = if lag == 0 {
            vec![]
        } else {
            let (x, dy) = df_design(y, DeterministicSpec::None, lag, lag + 1);
            quick_ols(&drop_first_column(&x), &dy, "Breitung prewhitening")
                .map_err(|e| tag_entity(e, i))?
                .coef
        };
        let filtered: Vec<f64> = (lag..t)
            .map(|k| (y[k] - (1..=lag).map(|j| beta[j - 1] * y[k - j]).sum::<f64>()) / s)
            .collect();
        let m = filtered.len() - 1;
        if m < 3 {
            return Err(Error::TooShort(format!("cross-section {i}: too few periods after prewhitening")));
        }
        let d: Vec<f64> = first_difference(&filtered);
        let (l0, lm) = (filtered[0], filtered[m]);
        for k in 1..m {
            let rest = (m - k) as f64;
            let future = d[k..].iter().sum::<f64>() / rest;
            let e = (rest / (rest + 1.0)).sqrt() * (d[k - 1] - future);
            let x = filtered[k - 1] - l0 - ((k - 1) as f64 / m as f64) * (lm - l0);
            pairs.push((e, x));
            exy += e * x;
            xx += x * x;
            ee += e * e;
        }
        lags.push(lag);
    }
    ensure_variation(xx, ee + xx, "Breitung pooled regression")?;
    let delta = exy / xx;
    let ssr: f64 = pairs.iter().map(|(e, x)| (e - delta * x).powi(2)).sum();
    ensure_variation(ssr, ee + xx, "Breitung pooled regression")?;
    let sigma2 = ssr / pairs.len() as f64;
    let stat = delta / (sigma2 / xx).sqrt();
    Ok(UnitRootResult {
        test: "Breitung".into(),
        spec,
        statistic: stat,
        p_value: normal_cdf(stat),
        lags,
        n_obs: pairs.len(),
        alternative: Alternative::Common,
    })
}

/// Im-Pesaran-Shin W statistic from the average of per-entity ADF t
/// statistics, standardized with the moments of the null distribution.
pub fn ips_test(
    slices: &[Vec<f64>],
    spec: DeterministicSpec,
    max_lag: usize,
    calibration: Option<&Calibration>,
) -> Result<UnitRootResult> {
    if spec == DeterministicSpec::None {
        return Err(Error::invalid("IPS requires a constant or constant and trend"));
    }
    let t = check_slices(slices, 5, "IPS")?;
    let n = slices.len() as f64;
    let (mut t_sum, mut m_sum, mut v_sum, mut n_obs) = (0.0, 0.0, 0.0, 0usize);
    let mut lags = Vec::with_capacity(slices.len());
    for (i, y) in slices.iter().enumerate() {
        let f = adf_core(y, spec, max_lag).map_err(|e| tag_entity(e, i))?;
        let (m, v) = match ips_moments(spec, t, f.lag) {
            Ok(mv) => mv,
            Err(Error::OutsideTable(msg)) => match calibration {
                Some(cal) => cal.moments(CalibratedTest::Ips, spec, t, f.lag)?,
                None => return Err(Error::OutsideTable(msg)),
            },
            Err(e) => return Err(e),
        };
        t_sum += f.tau;
        m_sum += m;
        v_sum += v;
        n_obs += f.fit.n();
        lags.push(f.lag);
    }
    let w = n.sqrt() * (t_sum / n - m_sum / n) / (v_sum / n).sqrt();
    Ok(UnitRootResult {
        test: "IPS".into(),
        spec,
        statistic: w,
        p_value: normal_cdf(w),
        lags,
        n_obs,
        alternative: Alternative::Individual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherCombination {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `-2 Σ ln p_i`, chi-square with `2N` degrees of freedom.
pub fn fisher_combine(p_values: &[f64]) -> Result<FisherCombination> {
    if p_values.is_empty() {
        return Err(Error::InsufficientData("Fisher combination of no p-values".into()));
    }
    if let Some(p) = p_values.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::invalid(format!("Fisher combination needs p in (0, 1], got {p}")));
    }
    let statistic = -2.0 * p_values.iter().map(|p| p.ln()).sum::<f64>();
    let statistic = statistic.max(0.0);
    let df = 2 * p_values.len();
    Ok(FisherCombination {
        statistic,
        df,
        p_value: chi2_sf(statistic, df as f64)?,
    })
}

fn fisher_from(test: &str, spec: DeterministicSpec, results: Vec<UnitRootResult>) -> Result<UnitRootResult> {
    let p: Vec<f64> = results.iter().map(|r| r.p_value.clamp(FISHER_P_FLOOR, 1.0)).collect();
    let c = fisher_combine(&p)?;
    Ok(UnitRootResult {
        test: test.into(),
        spec,
        statistic: c.statistic,
        p_value: c.p_value,
        lags: results.iter().map(|r| r.lags[0]).collect(),
        n_obs: results.iter().map(|r| r.n_obs).sum(),
        alternative: Alternative::Individual,
    })
}

/// Fisher combination of per-entity ADF p-values.
pub fn adf_fisher(slices: &[Vec<f64>], spec: DeterministicSpec, max_lag: usize) -> Result<UnitRootResult> {
    check_slices(slices, 1, "ADF-Fisher")?;
    let results = slices
        .iter()
        .enumerate()
        .map(|(i, y)| adf_test(y, spec, max_lag).map_err(|e| tag_entity(e, i)))
        .collect::<Result<Vec<_>>>()?;
    fisher_from("ADF-Fisher", spec, results)
}

/// Fisher combination of per-entity Phillips-Perron p-values.
pub fn pp_fisher(slices: &[Vec<f64>], spec: DeterministicSpec) -> Result<UnitRootResult> {
    check_slices(slices, 1, "PP-Fisher")?;
    let results = slices
        .iter()
        .enumerate()
        .map(|(i, y)| pp_test(y, spec).map_err(|e| tag_entity(e, i)))
        .collect::<Result<Vec<_>>>()?;
    fisher_from("PP-Fisher", spec, results)
}
