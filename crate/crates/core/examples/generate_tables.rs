//! Regenerates `tables/ips_moments.csv` and `tables/llc_adjustment.csv` with
//! the same seeded simulation the calibration fallback uses.
//!
//!     cargo run --release -p ineqpanel --example generate_tables -- crates/core/tables

use std::path::PathBuf;

use ineqpanel::unitroot::{ips_moments_row, CalibratedTest, Calibration, DeterministicSpec, IPS_TABLE_LAGS, IPS_TABLE_T};

const LLC_T: &[usize] = &[
    5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90,
    100, 250,
];

fn main() -> ineqpanel::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "tables".into()));
    let cal = Calibration::new(Calibration::DEFAULT_REPS, Calibration::DEFAULT_SEED);

    let mut ips = String::from("spec,t,lag,mean,var\n");
    for spec in [DeterministicSpec::Constant, DeterministicSpec::ConstantAndTrend] {
        for &t in IPS_TABLE_T {
            for lag in IPS_TABLE_LAGS {
                // keep cells with at least three residual degrees of freedom
                if t < 2 * lag + spec.n_terms() + 5 {
                    continue;
                }
                let m = cal.moments(CalibratedTest::Ips, spec, t, lag)?;
                ips.push_str(&ips_moments_row(spec, t, lag, m));
                ips.push('\n');
            }
        }
        eprintln!("ips {spec} done");
    }
    std::fs::write(dir.join("ips_moments.csv"), ips).expect("write ips table");

    let mut llc = String::from("t,mu_none,sigma_none,mu_constant,sigma_constant,mu_trend,sigma_trend\n");
    for &t in LLC_T {
        llc.push_str(&t.to_string());
        for spec in [DeterministicSpec::None, DeterministicSpec::Constant, DeterministicSpec::ConstantAndTrend] {
            let (mu, sigma) = cal.moments(CalibratedTest::Llc, spec, t, 0)?;
            llc.push_str(&format!(",{mu:.4},{sigma:.4}"));
        }
        llc.push('\n');
        eprintln!("llc T={t} done");
    }
    std::fs::write(dir.join("llc_adjustment.csv"), llc).expect("write llc table");
    Ok(())
}
