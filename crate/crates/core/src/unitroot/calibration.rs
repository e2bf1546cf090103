//! Monte Carlo calibration of the LLC adjustments and IPS moments for
//! lengths outside the bundled tables. Every key draws from its own seeded
//! stream, so results do not depend on the order of requests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::panel::llc_entity;
use super::series::adf_fit_at_lag;
use super::DeterministicSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibratedTest {
    Llc,
    Ips,
}

impl CalibratedTest {
    fn as_str(self) -> &'static str {
        match self {
            CalibratedTest::Llc => "llc",
            CalibratedTest::Ips => "ips",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "llc" => Some(CalibratedTest::Llc),
            "ips" => Some(CalibratedTest::Ips),
            _ => None,
        }
    }
}

type Key = (CalibratedTest, DeterministicSpec, usize, usize);

fn key_seed(base: u64, key: Key) -> u64 {
    // FNV-1a over the textual key
    let text = format!("{}|{}|{}|{}", key.0.as_str(), key.1.as_str(), key.2, key.3);
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ base
}

fn random_walk(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(len);
    let mut level = 0.0;
    for _ in 0..len {
        level += rng.sample::<f64, _>(StandardNormal);
        y.push(level);
    }
    y
}

/// Sample mean and variance of the ADF t statistic with augmentation `lag`
/// for Gaussian random walks of length `t`.
pub fn simulate_ips_moments(spec: DeterministicSpec, t: usize, lag: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(reps);
    let mut failures = 0usize;
    while stats.len() < reps {
        let y = random_walk(&mut rng, t);
        match adf_fit_at_lag(&y, spec, lag) {
            Ok(f) => stats.push(f.tau),
            Err(Error::Degenerate(_)) if failures < reps => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(mean_var(&stats))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}

/// `(mu*, sigma*)` for the LLC statistic at effective length `t_tilde`,
/// simulated from zero-lag regressions on Gaussian random walks.
pub fn simulate_llc_adjustment(spec: DeterministicSpec, t_tilde: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tt = t_tilde as f64;
    let (mut xs, mut ys, mut ss) = (Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps));
    let (mut cross, mut sq, mut total_n) = (0.0, 0.0, 0usize);
    let mut cached = Vec::with_capacity(reps);
    while xs.len() < reps {
        let y = random_walk(&mut rng, t_tilde + 1);
        let ent = match llc_entity(&y, spec, 0) {
            Ok(e) => e,
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        let ev: f64 = ent.e.iter().zip(&ent.v).map(|(a, b)| a * b).sum();
        let vv: f64 = ent.v.iter().map(|b| b * b).sum();
        cross += ev;
        sq += vv;
        total_n += ent.e.len();
        xs.push(ev / tt);
        ys.push(vv / (tt * tt));
        ss.push(ent.s_ratio);
        cached.push(ent);
    }
    let delta = cross / sq;
    let pooled_ssr: f64 = cached
        .iter()
        .flat_map(|ent| ent.e.iter().zip(&ent.v).map(move |(a, b)| (a - delta * b).powi(2)))
        .sum();
    let sigma2 = pooled_ssr / total_n as f64;
    let n = reps as f64;
    let mu = xs.iter().sum::<f64>() / ss.iter().sum::<f64>();
    let centred: Vec<f64> = xs.iter().zip(&ss).map(|(x, s)| x - s * mu).collect();
    let (_, var) = mean_var(&centred);
    let mean_y = ys.iter().sum::<f64>() / n;
    Ok((mu, (var / (sigma2 * mean_y)).sqrt()))
}

/// One CSV line of the IPS moment table.
pub fn ips_moments_row(spec: DeterministicSpec, t: usize, lag: usize, moments: (f64, f64)) -> String {
    format!("{},{},{},{:.5},{:.5}", spec.as_str(), t, lag, moments.0, moments.1)
}

/// Cache of simulated values, optionally persisted as CSV
/// (`test,spec,t,lag,first,second`).
#[derive(Debug)]
pub struct Calibration {
    reps: usize,
    seed: u64,
    cache: Mutex<BTreeMap<Key, (f64, f64)>>,
    path: Option<PathBuf>,
}

impl Calibration {
    pub const DEFAULT_REPS: usize = 50_000;
    pub const DEFAULT_SEED: u64 = 20_180_711;

    pub fn new(reps: usize, seed: u64) -> Self {
        Calibration {
            reps: reps.max(2),
            seed,
            cache: Mutex::new(BTreeMap::new()),
            path: None,
        }
    }

    /// Loads `path` if it exists and appends new entries to it.
    pub fn with_cache_file(reps: usize, seed: u64, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cal = Calibration::new(reps, seed);
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut map = BTreeMap::new();
            for (i, line) in text.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split(',').collect();
                let bad = || Error::Parse {
                    row: i + 1,
                    message: format!("malformed calibration cache line `{line}`"),
                };
                if f.len() != 6 {
                    return Err(bad());
                }
                let test = CalibratedTest::parse(f[0]).ok_or_else(bad)?;
                let spec = DeterministicSpec::parse(f[1]).ok_or_else(bad)?;
                let t = f[2].parse().map_err(|_| bad())?;
                let lag = f[3].parse().map_err(|_| bad())?;
                let a = f[4].parse().map_err(|_| bad())?;
                let b = f[5].parse().map_err(|_| bad())?;
                map.insert((test, spec, t, lag), (a, b));
            }
            cal.cache = Mutex::new(map);
        }
        cal.path = Some(path);
        Ok(cal)
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    /// Simulated `(mean, variance)` for IPS or `(mu*, sigma*)` for LLC.
    pub fn moments(&self, test: CalibratedTest, spec: DeterministicSpec, t: usize, lag: usize) -> Result<(f64, f64)> {
        let key = (test, spec, t, lag);
        if let Some(v) = self.cache.lock().expect("calibration cache poisoned").get(&key) {
            return Ok(*v);
        }
        let seed = key_seed(self.seed, key);
        let value = match test {
            CalibratedTest::Ips => simulate_ips_moments(spec, t, lag, self.reps, seed)?,
            CalibratedTest::Llc => simulate_llc_adjustment(spec, t, self.reps, seed)?,
        };
        let mut cache = self.cache.lock().expect("calibration cache poisoned");
        cache.insert(key, value);
        if let Some(path) = &self.path {
            write_cache(path, &cache)?;
        }
        Ok(value)
    }
}

fn write_cache(path: &Path, cache: &BTreeMap<Key, (f64, f64)>) -> Result<()> {
    let mut out = String::from("test,spec,t,lag,first,second\n");
    for ((test, spec, t, lag), (a, b)) in cache {
        out.push_str(&format!("{},{},{},{},{},{}\n", test.as_str(), spec.as_str(), t, lag, a, b));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
