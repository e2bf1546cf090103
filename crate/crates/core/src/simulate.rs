//! Seeded synthetic panels: an inequality panel with known coefficients
//! split across two institutional clusters, and plain stationary or
//! random-walk panels for exercising the unit-root battery.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cluster::InstitutionScores;
use crate::error::{Error, Result};
use crate::paneldata::{PanelDataset, Series};

/// Slopes on `gini(-1), poverty, neetsrate(-1), social, creditb`.
pub const BASELINE_COEFFICIENTS: [f64; 5] = [0.15, 0.5, 0.2, -0.25, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub entities_per_cluster: usize,
    pub periods: usize,
    pub first_year: i32,
    pub coefficients: [f64; 5],
    pub noise_sd: f64,
    /// Scale entity noise by a factor drawn from [0.5, 2].
    pub heteroskedastic: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            entities_per_cluster: 14,
            periods: 7,
            first_year: 2010,
            coefficients: BASELINE_COEFFICIENTS,
            noise_sd: 0.1,
            heteroskedastic: true,
            seed: 20_180_711,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub panel: PanelDataset,
    pub scores: Vec<InstitutionScores>,
    /// Entity codes of the high-score cluster.
    pub inclusive: Vec<String>,
}

const BURN_IN: usize = 30;

fn ar1(rng: &mut ChaCha8Rng, len: usize, mean: f64, rho: f64, sd: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(len);
    let mut dev = sd / (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal);
    for _ in 0..len {
        v.push(mean + dev);
        dev = rho * dev + sd * rng.sample::<f64, _>(StandardNormal);
    }
    v
}

/// Inequality panel following
/// `gini = a_i + b1 gini(-1) + b2 poverty + b3 neetsrate(-1) + b4 social + b5 creditb + e`
/// for `2 * entities_per_cluster` entities, plus institution scores that put
/// the first half above the median.
pub fn synthetic_inequality_panel(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.entities_per_cluster < 2 || cfg.periods < 3 {
        return Err(Error::invalid("synthetic panel needs >= 2 entities per cluster and >= 3 periods"));
    }
    if !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite()) {
        return Err(Error::invalid("noise sd must be finite and non-negative"));
    }
    let b = cfg.coefficients;
    if b[0].abs() >= 1.0 {
        return Err(Error::invalid("autoregressive coefficient must lie in (-1, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = 2 * cfg.entities_per_cluster;
    let t = cfg.periods;
    let len = t + BURN_IN;
    let entities: Vec<String> = (0..n)
        .map(|i| if i < cfg.entities_per_cluster { format!("I{:02}", i + 1) } else { format!("E{:02}", i + 1 - cfg.entities_per_cluster) })
        .collect();
    let names = ["creditb", "gini", "neetsrate", "poverty", "social"];
    let mut series: BTreeMap<String, Series> = names.iter().map(|v| (v.to_string(), Vec::with_capacity(n * t))).collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 0..n {
        let inclusive = i < cfg.entities_per_cluster;
        let shift = rng.random_range(-3.0..3.0);
        let poverty = ar1(&mut rng, len, if inclusive { 18.0 } else { 25.0 } + shift, 0.5, 1.5);
        let shift = rng.random_range(-3.0..3.0);
        let neets = ar1(&mut rng, len, if inclusive { 9.0 } else { 15.0 } + shift, 0.5, 1.2);
        let shift = rng.random_range(-3.0..3.0);
        let social = ar1(&mut rng, len, if inclusive { 29.0 } else { 19.0 } + shift, 0.5, 1.5);
        let shift = rng.random_range(-20.0..20.0);
        let credit = ar1(&mut rng, len, if inclusive { 110.0 } else { 60.0 } + shift, 0.6, 8.0);
        let alpha = 18.0 + rng.random_range(-2.0..2.0);
        let scale = if cfg.heteroskedastic { rng.random_range(0.5..2.0) } else { 1.0 };
        let sd = cfg.noise_sd * scale;
        let driver = |s: usize| alpha + b[1] * poverty[s] + b[2] * neets[s - 1] + b[3] * social[s] + b[4] * credit[s];
        let mut gini = vec![0.0; len];
        gini[0] = (alpha + b[1] * poverty[0] + b[2] * neets[0] + b[3] * social[0] + b[4] * credit[0]) / (1.0 - b[0]);
        for s in 1..len {
            let e: f64 = noise.sample(&mut rng);
            gini[s] = driver(s) + b[0] * gini[s - 1] + sd * e;
        }
        let keep = BURN_IN..len;
        for (name, v) in [("creditb", &credit), ("gini", &gini), ("neetsrate", &neets), ("poverty", &poverty), ("social", &social)] {
            series.get_mut(name).expect("declared above").extend(v[keep.clone()].iter().map(|x| Some(*x)));
        }
    }
    let periods: Vec<i32> = (0..t as i32).map(|k| cfg.first_year + k).collect();
    let panel = PanelDataset::new(entities.clone(), periods, series)?;
    let scores = synthetic_scores(&entities, cfg.entities_per_cluster, &mut rng);
    Ok(SyntheticData {
        panel,
        scores,
        inclusive: entities[..cfg.entities_per_cluster].to_vec(),
    })
}

fn synthetic_scores(entities: &[String], n_high: usize, rng: &mut ChaCha8Rng) -> Vec<InstitutionScores> {
    entities
        .iter()
        .enumerate()
        .map(|(i, e)| {
            // distinct pillar values, high block strictly above low block
            let pillar = if i < n_high { 4.4 + 0.1 * i as f64 } else { 4.2 - 0.05 * (i - n_high) as f64 };
            let mut subindices = [0.0; 21];
            for (k, s) in subindices.iter_mut().enumerate() {
                let v = pillar + rng.random_range(-0.5..0.5);
                *s = if k == 20 { (1.5 * v - 1.0).clamp(1.0, 10.0) } else { v.clamp(1.0, 7.0) };
            }
            InstitutionScores {
                country: e.clone(),
                pillar,
                subindices,
            }
        })
        .collect()
}

/// Panel of `variables`, each following a stationary AR(1) with `rho`
/// around an entity mean (or a driftless random walk when `rho == 1`).
pub fn ar1_panel(variables: &[&str], n: usize, t: usize, rho: f64, seed: u64) -> Result<PanelDataset> {
    if n == 0 || t < 3 {
        return Err(Error::invalid("need at least one entity and three periods"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = BTreeMap::new();
    for v in variables {
        let mut s: Series = Vec::with_capacity(n * t);
        for _ in 0..n {
            let mean = rng.random_range(-5.0..5.0);
            if rho >= 1.0 {
                let mut y = mean;
                for _ in 0..t {
                    y += rng.sample::<f64, _>(StandardNormal);
                    s.push(Some(y));
                }
            } else {
                s.extend(ar1(&mut rng, t, mean, rho, 1.0).into_iter().map(Some));
            }
        }
        series.insert(v.to_string(), s);
    }
    let entities = (0..n).map(|i| format!("S{:02}", i + 1)).collect();
    PanelDataset::new(entities, (0..t as i32).map(|k| 2000 + k).collect(), series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{panel_egls_fe, EstimationSpec};

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SyntheticConfig::default();
        let a = synthetic_inequality_panel(&cfg).unwrap();
        let b = synthetic_inequality_panel(&cfg).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.panel.n_entities(), 28);
        assert_eq!(a.panel.n_periods(), 7);
        assert_eq!(a.scores.len(), 28);
    }

    #[test]
    fn recovers_slopes_with_tiny_noise() {
        let cfg = SyntheticConfig {
            noise_sd: 1e-6,
            ..SyntheticConfig::default()
        };
        let d = synthetic_inequality_panel(&cfg).unwrap();
        let fit = panel_egls_fe(&d.panel, &EstimationSpec::inequality_baseline()).unwrap();
        for (got, want) in fit.slopes().iter().zip(BASELINE_COEFFICIENTS) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }
}
