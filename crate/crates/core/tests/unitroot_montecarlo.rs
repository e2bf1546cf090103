//! Seeded Monte Carlo checks of size and power. Rep counts are modest so
//! the suite stays quick; bands are correspondingly wider than nominal.

use ineqpanel::simulate::ar1_panel;
use ineqpanel::unitroot::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn ar(rng: &mut ChaCha8Rng, t: usize, phi: f64) -> Vec<f64> {
    let mut y = 0.0;
    (0..t)
        .map(|_| {
            y = phi * y + rng.sample::<f64, _>(StandardNormal);
            y
        })
        .collect()
}

fn rate(hits: usize, reps: usize) -> f64 {
    hits as f64 / reps as f64
}

#[test]
fn single_series_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let reps = 1000;
    let (mut adf, mut pp) = (0, 0);
    for _ in 0..reps {
        let y = ar(&mut rng, 100, 1.0);
        adf += usize::from(adf_test(&y, DeterministicSpec::Constant, 4).unwrap().p_value < 0.05);
        pp += usize::from(pp_test(&y, DeterministicSpec::Constant).unwrap().p_value < 0.05);
    }
    for (name, r) in [("adf", rate(adf, reps)), ("pp", rate(pp, reps))] {
        assert!((0.025..=0.085).contains(&r), "{name} size {r}");
    }
}

#[test]
fn schwarz_prefers_zero_augmentation_for_ar1() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hits = (0..300)
        .filter(|_| {
            let y = ar(&mut rng, 100, 0.5);
            adf_test(&y, DeterministicSpec::Constant, 4).unwrap().lags[0] == 0
        })
        .count();
    assert!(rate(hits, 300) >= 0.7);
}

#[test]
fn panel_power_on_stationary_ar() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let reps = 150;
    for phi in [0.2, 0.5] {
        let (mut ips, mut llc) = (0, 0);
        for _ in 0..reps {
            let s: Vec<Vec<f64>> = (0..14).map(|_| ar(&mut rng, 50, phi)).collect();
            ips += usize::from(ips_test(&s, DeterministicSpec::Constant, 1, None).unwrap().p_value < 0.05);
            llc += usize::from(llc_test(&s, DeterministicSpec::Constant, 1, None).unwrap().p_value < 0.05);
        }
        assert!(rate(ips, reps) >= 0.8, "ips power {phi}");
        assert!(rate(llc, reps) >= 0.8, "llc power {phi}");
    }
}

#[test]
fn panel_size_on_random_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let reps = 300;
    let (mut ips, mut llc) = (0, 0);
    for _ in 0..reps {
        let s: Vec<Vec<f64>> = (0..14).map(|_| ar(&mut rng, 50, 1.0)).collect();
        ips += usize::from(ips_test(&s, DeterministicSpec::Constant, 1, None).unwrap().p_value < 0.05);
        llc += usize::from(llc_test(&s, DeterministicSpec::Constant, 1, None).unwrap().p_value < 0.05);
    }
    assert!(rate(ips, reps) <= 0.10, "ips size");
    assert!(rate(llc, reps) <= 0.10, "llc size");
}

#[test]
fn battery_on_synthetic_panels() {
    let opts = BatteryOptions::default();
    let stationary = ar1_panel(&["x", "z"], 14, 40, 0.2, 3).unwrap();
    for v in ["x", "z"] {
        let b = run_battery_on_panel(&stationary, v, &opts).unwrap();
        assert_eq!(b.order, IntegrationOrder::I0, "{v}: {:?}", b.votes_i0);
    }
    let walks = ar1_panel(&["x", "z"], 14, 40, 1.0, 4).unwrap();
    for v in ["x", "z"] {
        let b = run_battery_on_panel(&walks, v, &opts).unwrap();
        assert_eq!(b.order, IntegrationOrder::I1, "{v}: {:?} {:?}", b.votes_i0, b.votes_i1);
    }
}

#[test]
fn calibration_fallback_covers_short_panels() {
    // T = 5 is below the IPS table; the calibrated path still answers
    let cal = Calibration::new(2_000, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s: Vec<Vec<f64>> = (0..14).map(|_| ar(&mut rng, 5, 0.3)).collect();
    assert!(ips_test(&s, DeterministicSpec::Constant, 0, None).is_err());
    let r = ips_test(&s, DeterministicSpec::Constant, 0, Some(&cal)).unwrap();
    assert!((0.0..=1.0).contains(&r.p_value));
}
