use std::collections::BTreeMap;

use ineqpanel::diagnostics::*;
use ineqpanel::estimators::{fixed_effects_within, panel_egls_fe, pooled_ols, EstimationSpec};
use ineqpanel::linalg::Matrix;
use ineqpanel::linreg::ols;
use ineqpanel::paneldata::{PanelDataset, RowIndex, VariableSpec};
use ineqpanel::simulate::{synthetic_inequality_panel, SyntheticConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn auxiliary_designs_have_expected_shape() {
    let d = synthetic_inequality_panel(&SyntheticConfig::default()).unwrap();
    let cluster = d.panel.subset(&d.inclusive).unwrap();
    let model = panel_egls_fe(&cluster, &EstimationSpec::inequality_baseline()).unwrap();
    assert_eq!(model.frame.n_rows(), 84);
    let report = run_diagnostics(&model, 1);
    assert_eq!(report.rows.len(), 9);
    let bpg = report.row(DiagnosticTest::Heteroskedasticity).unwrap().outcome.clone().unwrap();
    assert_eq!((bpg.n, bpg.df), (Some(84), Some(5)));
    let ser = report.row(DiagnosticTest::SerialCorrelation).unwrap().outcome.clone().unwrap();
    assert_eq!((ser.n, ser.df), (Some(70), Some(1)));
    let cell = report.row(DiagnosticTest::Heteroskedasticity).unwrap().probability_cell();
    assert!(cell.ends_with("(n = 84, df = 5)"), "{cell}");
    assert_eq!(report.n_errors(), 0);
}

#[test]
fn identical_intercepts_give_zero_lr() {
    // y = 2x + e where e sums to zero within each entity and x has equal
    // entity means, so pooled and FE fits coincide
    let t = 4;
    let xs = [1.0, 3.0, 2.0, 6.0, 4.0, 2.0, 5.0, 1.0, 2.0, 2.0, 4.0, 4.0];
    let es = [0.1, -0.2, 0.3, -0.2, -0.1, 0.05, 0.0, 0.05, 0.2, 0.1, -0.3, 0.0];
    let mut s = BTreeMap::new();
    s.insert("x".to_string(), xs.iter().map(|v| Some(*v)).collect());
    s.insert("y".to_string(), xs.iter().zip(&es).map(|(x, e)| Some(2.0 * x + e)).collect());
    let panel = PanelDataset::new(vec!["A".into(), "B".into(), "C".into()], (0..t).collect(), s).unwrap();
    let spec = EstimationSpec::egls_fixed_effects(VariableSpec::dependent("y"), vec![VariableSpec::regressor("x", 0)]);
    let fe = fixed_effects_within(&panel, &spec).unwrap();
    let pooled = pooled_ols(&panel, &spec).unwrap();
    let lr = redundant_fe_lr(&fe, &pooled).unwrap().likelihood_ratio;
    assert!(lr.statistic.abs() < 1e-9);
    assert!((lr.probability - 1.0).abs() < 1e-9);
}

#[test]
fn null_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let reps = 1000;
    let (n_ent, t) = (14, 6);
    let entities: Vec<String> = (0..n_ent).map(|i| format!("E{i}")).collect();
    let rows: Vec<RowIndex> = (0..n_ent).flat_map(|e| (0..t).map(move |p| RowIndex { entity: e, period: p })).collect();
    let (mut cd, mut jb, mut ser) = (0, 0, 0);
    for _ in 0..reps {
        let grid: Vec<Vec<f64>> = (0..n_ent).map(|_| normals(&mut rng, t)).collect();
        cd += usize::from(cross_section_dependence(&grid, &entities).unwrap().pesaran_cd.rejects_at_5pct);
        jb += usize::from(jarque_bera(&normals(&mut rng, 84)).unwrap().rejects_at_5pct);
        // i.i.d. errors projected off the regressors, as any least-squares residual is
        let x = Matrix::from_columns(&[normals(&mut rng, 84), normals(&mut rng, 84)]);
        let e = ols(&x, &normals(&mut rng, 84), true).unwrap().residuals;
        ser += usize::from(bp_serial(&e, &x, &rows, 1).unwrap().rejects_at_5pct);
    }
    for (name, hits) in [("cd", cd), ("jb", jb), ("serial", ser)] {
        let r = hits as f64 / reps as f64;
        assert!((0.02..=0.08).contains(&r), "{name} size {r}");
    }
}

#[test]
fn serial_power_on_ar_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n_ent, t) = (14, 6);
    let rows: Vec<RowIndex> = (0..n_ent).flat_map(|e| (0..t).map(move |p| RowIndex { entity: e, period: p })).collect();
    let reps = 300;
    let mut hits = 0;
    for _ in 0..reps {
        let mut e = Vec::with_capacity(n_ent * t);
        for _ in 0..n_ent {
            let mut u = rng.sample::<f64, _>(StandardNormal) / (1.0f64 - 0.64).sqrt();
            for _ in 0..t {
                e.push(u);
                u = 0.8 * u + rng.sample::<f64, _>(StandardNormal);
            }
        }
        let x = Matrix::from_columns(&[normals(&mut rng, 84)]);
        hits += usize::from(bp_serial(&e, &x, &rows, 1).unwrap().rejects_at_5pct);
    }
    assert!(hits as f64 / reps as f64 >= 0.9);
}

#[test]
fn report_is_deterministic() {
    let d = synthetic_inequality_panel(&SyntheticConfig::default()).unwrap();
    let cluster = d.panel.subset(&d.inclusive).unwrap();
    let model = panel_egls_fe(&cluster, &EstimationSpec::inequality_baseline()).unwrap();
    assert_eq!(run_diagnostics(&model, 1), run_diagnostics(&model, 1));
}

#[test]
fn serial_statistic_matches_numpy_value() {
    // frozen from an independent least-squares computation
    let (n_ent, t) = (4, 5);
    let r: Vec<f64> = (0..n_ent * t).map(|i| i as f64).collect();
    let e: Vec<f64> = r.iter().map(|r| (1.3 * r).sin() + 0.3 * (0.7 * r).cos()).collect();
    let x1: Vec<f64> = r.iter().map(|r| (r % 5.0) * 0.5 + (r * 0.2).sin()).collect();
    let x2: Vec<f64> = r.iter().map(|r| r.cos()).collect();
    let rows: Vec<RowIndex> = (0..n_ent).flat_map(|e| (0..t).map(move |p| RowIndex { entity: e, period: p })).collect();
    let o = bp_serial(&e, &Matrix::from_columns(&[x1, x2]), &rows, 1).unwrap();
    assert_eq!(o.n, Some(16));
    assert!((o.statistic - 1.0673575009959517).abs() < 1e-10, "{}", o.statistic);
    assert!((o.probability - 0.3015430874340515).abs() < 1e-10);
}
