//! Embedded critical-value surfaces and moment tables.

use std::sync::OnceLock;

use super::DeterministicSpec;
use crate::error::{Error, Result};

const MACKINNON_CSV: &str = include_str!("../../tables/mackinnon_n1.csv");
const LLC_CSV: &str = include_str!("../../tables/llc_adjustment.csv");
const IPS_CSV: &str = include_str!("../../tables/ips_moments.csv");

/// Series lengths covered by the bundled IPS moment table.
pub const IPS_TABLE_T: &[usize] = &[
    6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 22, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90, 100,
];
/// Augmentation lags covered by the bundled IPS moment table.
pub const IPS_TABLE_LAGS: std::ops::RangeInclusive<usize> = 0..=4;

pub(crate) struct MacKinnonRow {
    pub tau_min: f64,
    pub tau_star: f64,
    pub tau_max: f64,
    pub small: Vec<f64>,
    pub large: Vec<f64>,
}

fn parse_f64(s: &str) -> f64 {
    match s.trim() {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        v => v.parse().expect("malformed bundled table"),
    }
}

fn data_rows(csv: &str) -> impl Iterator<Item = Vec<&str>> {
    csv.lines().skip(1).filter(|l| !l.trim().is_empty()).map(|l| l.split(',').collect())
}

fn mackinnon_rows() -> &'static [(DeterministicSpec, MacKinnonRow)] {
    static ROWS: OnceLock<Vec<(DeterministicSpec, MacKinnonRow)>> = OnceLock::new();
    ROWS.get_or_init(|| {
        data_rows(MACKINNON_CSV)
            .map(|f| {
                let spec = DeterministicSpec::parse(f[0]).expect("bundled table spec");
                let v: Vec<f64> = f[1..].iter().map(|s| parse_f64(s)).collect();
                (
                    spec,
                    MacKinnonRow {
                        tau_min: v[0],
                        tau_star: v[1],
                        tau_max: v[2],
                        small: v[3..6].to_vec(),
                        large: v[6..10].to_vec(),
                    },
                )
            })
            .collect()
    })
}

pub(crate) fn mackinnon_row(spec: DeterministicSpec) -> &'static MacKinnonRow {
    &mackinnon_rows().iter().find(|(s, _)| *s == spec).expect("spec in table").1
}

struct LlcRow {
    t: f64,
    values: [(f64, f64); 3],
}

fn llc_rows() -> &'static [LlcRow] {
    static ROWS: OnceLock<Vec<LlcRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        data_rows(LLC_CSV)
            .map(|f| {
                let v: Vec<f64> = f.iter().map(|s| parse_f64(s)).collect();
                LlcRow {
                    t: v[0],
                    values: [(v[1], v[2]), (v[3], v[4]), (v[5], v[6])],
                }
            })
            .collect()
    })
}

fn spec_column(spec: DeterministicSpec) -> usize {
    match spec {
        DeterministicSpec::None => 0,
        DeterministicSpec::Constant => 1,
        DeterministicSpec::ConstantAndTrend => 2,
    }
}

/// Mean and standard-deviation adjustments `(mu*, sigma*)` for the LLC
/// statistic at average effective length `t_tilde`, interpolated linearly
/// and held constant past the last row.
pub fn llc_adjustment(spec: DeterministicSpec, t_tilde: f64) -> Result<(f64, f64)> {
    let rows = llc_rows();
    let c = spec_column(spec);
    if !(t_tilde >= rows[0].t) {
        return Err(Error::OutsideTable(format!(
            "LLC adjustment table starts at an effective length of {}; got {t_tilde:.2}",
            rows[0].t
        )));
    }
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if t_tilde <= b.t {
            let s = (t_tilde - a.t) / (b.t - a.t);
            let lerp = |x: f64, y: f64| x + s * (y - x);
            return Ok((lerp(a.values[c].0, b.values[c].0), lerp(a.values[c].1, b.values[c].1)));
        }
    }
    // beyond the last tabulated length
    Ok(rows.last().expect("non-empty table").values[c])
}

type IpsKey = (DeterministicSpec, usize, usize);

fn ips_rows() -> &'static [(IpsKey, (f64, f64))] {
    static ROWS: OnceLock<Vec<(IpsKey, (f64, f64))>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let mut rows: Vec<_> = data_rows(IPS_CSV)
            .map(|f| {
                let spec = DeterministicSpec::parse(f[0]).expect("bundled table spec");
                let t: usize = f[1].parse().expect("bundled table T");
                let lag: usize = f[2].parse().expect("bundled table lag");
                ((spec, t, lag), (parse_f64(f[3]), parse_f64(f[4])))
            })
            .collect();
        rows.sort_by_key(|r| r.0);
        rows
    })
}

fn ips_lookup(key: IpsKey) -> Option<(f64, f64)> {
    let rows = ips_rows();
    rows.binary_search_by(|r| r.0.cmp(&key)).ok().map(|i| rows[i].1)
}

/// `E[t]` and `Var[t]` of the ADF t statistic for a driftless random walk of
/// length `t`, augmentation `lag`, interpolated linearly between tabulated
/// lengths.
pub fn ips_moments(spec: DeterministicSpec, t: usize, lag: usize) -> Result<(f64, f64)> {
    if spec == DeterministicSpec::None {
        return Err(Error::invalid("IPS moments exist only with deterministic terms"));
    }
    if let Some(m) = ips_lookup((spec, t, lag)) {
        return Ok(m);
    }
    let lo = IPS_TABLE_T.iter().rev().find(|&&g| g < t);
    let hi = IPS_TABLE_T.iter().find(|&&g| g > t);
    if let (Some(&lo), Some(&hi)) = (lo, hi) {
        if let (Some(a), Some(b)) = (ips_lookup((spec, lo, lag)), ips_lookup((spec, hi, lag))) {
            let s = (t - lo) as f64 / (hi - lo) as f64;
            return Ok((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)));
        }
    }
    Err(Error::OutsideTable(format!(
        "no IPS moments for T = {t}, lag = {lag} ({spec}); enable Monte Carlo calibration"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llc_table_rows_and_interpolation() {
        let (m, s) = llc_adjustment(DeterministicSpec::Constant, 50.0).unwrap();
        assert!((-0.62..-0.58).contains(&m) && (0.80..0.85).contains(&s), "{m} {s}");
        let a = llc_adjustment(DeterministicSpec::ConstantAndTrend, 25.0).unwrap();
        let b = llc_adjustment(DeterministicSpec::ConstantAndTrend, 30.0).unwrap();
        let mid = llc_adjustment(DeterministicSpec::ConstantAndTrend, 27.5).unwrap();
        assert!((mid.0 - (a.0 + b.0) / 2.0).abs() < 1e-12);
        assert!(matches!(
            llc_adjustment(DeterministicSpec::None, 4.0),
            Err(Error::OutsideTable(_))
        ));
        assert_eq!(
            llc_adjustment(DeterministicSpec::Constant, 1e9).unwrap(),
            llc_adjustment(DeterministicSpec::Constant, 250.0).unwrap()
        );
    }

    #[test]
    fn ips_moments_close_to_published_values() {
        // published moments index T by regression observations, one fewer
        // than the series length used here
        let (m, v) = ips_moments(DeterministicSpec::Constant, 11, 0).unwrap();
        assert!((m + 1.504).abs() < 0.02 && (v - 1.069).abs() < 0.03, "{m} {v}");
        let (m, v) = ips_moments(DeterministicSpec::ConstantAndTrend, 50, 0).unwrap();
        assert!((m + 2.176).abs() < 0.02 && (v - 0.633).abs() < 0.03, "{m} {v}");
        assert!(ips_moments(DeterministicSpec::Constant, 7, 3).is_err());
    }
}
