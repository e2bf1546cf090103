//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned
//! here; a criterion that cannot be met is reported as FAIL and fails the
//! target rather than being loosened.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ineqpanel::cluster::{
    gini_from_distribution, load_scores_csv, split_by, subindex_stability, Criterion, IncomeDistribution, TieRule,
};
use ineqpanel::diagnostics::{bp_serial, cross_section_dependence, jarque_bera, run_diagnostics, DiagnosticTest};
use ineqpanel::estimators::{fixed_effects_lsdv, fixed_effects_within, panel_egls_fe, EstimationSpec};
use ineqpanel::linalg::Matrix;
use ineqpanel::linreg::ols;
use ineqpanel::paneldata::{PanelDataset, RowIndex, VariableSpec};
use ineqpanel::probdist::{chi2_sf, f_sf, normal_cdf, student_t_sf};
use ineqpanel::simulate::{ar1_panel, synthetic_inequality_panel, SyntheticConfig, BASELINE_COEFFICIENTS};
use ineqpanel::unitroot::{
    adf_test, ips_test, llc_test, pp_test, run_battery_on_panel, verdict, BatteryOptions, DeterministicSpec,
    IntegrationOrder, VoteCount,
};
use ineqpanel_cli::report::{from_json, EstimateReport};
use ineqpanel_cli::{cmd_replicate, cmd_simulate, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SLOPES: [&str; 5] = ["gini(-1)", "poverty", "neetsrate(-1)", "social", "creditb"];

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn ar(rng: &mut ChaCha8Rng, t: usize, phi: f64) -> Vec<f64> {
    let mut y = 0.0;
    (0..t)
        .map(|_| {
            y = phi * y + rng.sample::<f64, _>(StandardNormal);
            y
        })
        .collect()
}

fn rows_index(n: usize, t: usize) -> Vec<RowIndex> {
    (0..n).flat_map(|e| (0..t).map(move |p| RowIndex { entity: e, period: p })).collect()
}

fn panel_from(n: usize, t: usize, y: Vec<f64>, xs: Vec<Vec<f64>>) -> (PanelDataset, EstimationSpec) {
    let mut s = BTreeMap::new();
    s.insert("y".to_string(), y.into_iter().map(Some).collect());
    let mut regs = Vec::new();
    for (j, x) in xs.into_iter().enumerate() {
        let name = format!("x{}", j + 1);
        s.insert(name.clone(), x.into_iter().map(Some).collect());
        regs.push(VariableSpec::regressor(&name, 0));
    }
    let panel = PanelDataset::new((0..n).map(|i| format!("E{i:02}")).collect(), (0..t as i32).collect(), s).unwrap();
    (panel, EstimationSpec::egls_fixed_effects(VariableSpec::dependent("y"), regs))
}

// 1
fn within_equals_lsdv() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(2..=14);
        let t = rng.random_range(3..=8);
        let k = rng.random_range(1..=5);
        if n * t <= n + k + 1 {
            continue;
        }
        let xs: Vec<Vec<f64>> = (0..k).map(|_| normals(&mut rng, n * t)).collect();
        let alpha = normals(&mut rng, n);
        let e = normals(&mut rng, n * t);
        let y = (0..n * t)
            .map(|r| 3.0 * alpha[r / t] + xs.iter().enumerate().map(|(j, x)| (j as f64 + 1.0) * x[r]).sum::<f64>() + e[r])
            .collect();
        let (panel, spec) = panel_from(n, t, y, xs);
        let w = fixed_effects_within(&panel, &spec).map_err(|e| e.to_string())?;
        let l = fixed_effects_lsdv(&panel, &spec).map_err(|e| e.to_string())?;
        for (a, b) in w.slopes().iter().zip(l.slopes()) {
            worst = worst.max((a - b).abs());
        }
        done += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-8 && secs < 10.0, format!("200 panels, max |diff| {worst:.1e} (tol 1e-8), {secs:.2}s (limit 10s)"))
}

/// Normal equations by Gauss-Jordan elimination with partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        let pivot_row = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.iter().map(|r| r[k]).collect()
}

// 2
fn ols_matches_normal_equations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(10..80);
        let k = rng.random_range(1..7);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fit = ols(&Matrix::from_rows(&rows), &y, false).map_err(|e| e.to_string())?;
        for (a, b) in fit.coefficients.iter().zip(normal_equations(&rows, &y)) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-9, format!("100 systems, max |diff| {worst:.1e} (tol 1e-9)"))
}

// 3
fn egls_degenerates_to_fe() -> Outcome {
    // one demeaned design shared by all entities, residual patterns of equal
    // size with alternating sign: equal entity variances
    let t = 6;
    let x0 = [0.3, -1.2, 0.8, 2.0, -0.4, 1.1];
    let e0 = [0.5, -0.2, 0.1, -0.6, 0.3, -0.1];
    let n = 6;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for p in 0..t {
            let xv = x0[p] + i as f64;
            x.push(xv);
            y.push(1.0 + 0.4 * i as f64 + 1.5 * xv + sign * e0[p]);
        }
    }
    let (panel, spec) = panel_from(n, t, y, vec![x]);
    let fe = fixed_effects_within(&panel, &spec).map_err(|e| e.to_string())?;
    let egls = panel_egls_fe(&panel, &spec).map_err(|e| e.to_string())?;
    let worst = fe
        .coefficients
        .iter()
        .zip(&egls.coefficients)
        .map(|(a, b)| (a.coefficient - b.coefficient).abs())
        .fold(0.0, f64::max);
    check(worst <= 1e-9, format!("equal entity variances, max |EGLS - FE| {worst:.1e} (tol 1e-9)"))
}

// 4
fn distribution_precision() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/dist_oracle.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (x, a, b): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        let expected: f64 = f[4].parse().unwrap();
        let got = match f[0] {
            "chi2_sf" => chi2_sf(x, a),
            "student_t_sf" => student_t_sf(x, a),
            "f_sf" => f_sf(x, a, b),
            "normal_cdf" => Ok(normal_cdf(x)),
            other => return Err(format!("unknown function {other}")),
        }
        .map_err(|e| e.to_string())?;
        worst = worst.max((got - expected).abs());
        count += 1;
    }
    let mut worst_closed = 0.0f64;
    for i in 0..=400 {
        let x = i as f64 * 0.1;
        worst_closed = worst_closed.max((chi2_sf(x, 2.0).unwrap() - (-x / 2.0).exp()).abs());
    }
    check(
        count == 500 && worst <= 1e-10 && worst_closed <= 1e-13,
        format!(
            "{count}-point grid max error {worst:.1e} (tol 1e-10); chi2(2) vs exp(-x/2) {worst_closed:.1e} (tol 1e-13)"
        ),
    )
}

// 5
fn diagnostic_shapes() -> Outcome {
    let d = synthetic_inequality_panel(&SyntheticConfig::default()).map_err(|e| e.to_string())?;
    let cluster = d.panel.subset(&d.inclusive).map_err(|e| e.to_string())?;
    let model = panel_egls_fe(&cluster, &EstimationSpec::inequality_baseline()).map_err(|e| e.to_string())?;
    let r = run_diagnostics(&model, 1);
    let get = |t| r.row(t).and_then(|row| row.outcome.as_ref()).map(|o| (o.n, o.df));
    let bpg = get(DiagnosticTest::Heteroskedasticity);
    let ser = get(DiagnosticTest::SerialCorrelation);
    check(
        bpg == Some((Some(84), Some(5))) && ser == Some((Some(70), Some(1))),
        format!("BPG {bpg:?}, serial {ser:?}; expected (84, 5) and (70, 1)"),
    )
}

fn rate(hits: usize, reps: usize) -> f64 {
    hits as f64 / reps as f64
}

// 6
fn monte_carlo_size() -> Outcome {
    let start = Instant::now();
    let reps = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(6_000);
    let (mut adf, mut pp) = (0, 0);
    for _ in 0..reps {
        let y = ar(&mut rng, 100, 1.0);
        adf += usize::from(adf_test(&y, DeterministicSpec::Constant, 4).map_err(|e| e.to_string())?.p_value < 0.05);
        pp += usize::from(pp_test(&y, DeterministicSpec::Constant).map_err(|e| e.to_string())?.p_value < 0.05);
    }
    let entities: Vec<String> = (0..14).map(|i| format!("E{i}")).collect();
    let rows = rows_index(14, 6);
    let (mut cd, mut jb, mut ser) = (0, 0, 0);
    for _ in 0..reps {
        let grid: Vec<Vec<f64>> = (0..14).map(|_| normals(&mut rng, 6)).collect();
        cd += usize::from(cross_section_dependence(&grid, &entities).map_err(|e| e.to_string())?.pesaran_cd.rejects_at_5pct);
        jb += usize::from(jarque_bera(&normals(&mut rng, 84)).map_err(|e| e.to_string())?.rejects_at_5pct);
        let x = Matrix::from_columns(&[normals(&mut rng, 84), normals(&mut rng, 84)]);
        let e = ols(&x, &normals(&mut rng, 84), true).map_err(|e| e.to_string())?.residuals;
        ser += usize::from(bp_serial(&e, &x, &rows, 1).map_err(|e| e.to_string())?.rejects_at_5pct);
    }
    let secs = start.elapsed().as_secs_f64();
    let (adf, pp, cd, jb, ser) = (rate(adf, reps), rate(pp, reps), rate(cd, reps), rate(jb, reps), rate(ser, reps));
    let unit = |r: f64| (0.03..=0.08).contains(&r);
    let resid = |r: f64| (0.03..=0.07).contains(&r);
    check(
        unit(adf) && unit(pp) && resid(cd) && resid(jb) && resid(ser) && secs < 300.0,
        format!(
            "{reps} reps: ADF {:.1}%, PP {:.1}% (3-8%); CD {:.1}%, JB {:.1}%, serial {:.1}% (5 +/- 2pp); {secs:.1}s (limit 300s)",
            100.0 * adf,
            100.0 * pp,
            100.0 * cd,
            100.0 * jb,
            100.0 * ser
        ),
    )
}

// 7
fn monte_carlo_power() -> Outcome {
    let reps = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(7_000);
    let mut cells = Vec::new();
    let mut ok = true;
    for phi in [0.2, 0.5] {
        let (mut ips, mut llc) = (0, 0);
        for _ in 0..reps {
            let s: Vec<Vec<f64>> = (0..14).map(|_| ar(&mut rng, 50, phi)).collect();
            ips += usize::from(ips_test(&s, DeterministicSpec::Constant, 1, None).map_err(|e| e.to_string())?.p_value < 0.05);
            llc += usize::from(llc_test(&s, DeterministicSpec::Constant, 1, None).map_err(|e| e.to_string())?.p_value < 0.05);
        }
        let (ips, llc) = (rate(ips, reps), rate(llc, reps));
        ok &= ips >= 0.8 && llc >= 0.8;
        cells.push(format!("AR {phi}: IPS {:.1}%, LLC {:.1}%", 100.0 * ips, 100.0 * llc));
    }
    let rows = rows_index(14, 6);
    let mut hits = 0;
    for _ in 0..reps {
        let mut e = Vec::with_capacity(84);
        for _ in 0..14 {
            let mut u = rng.sample::<f64, _>(StandardNormal) / (1.0f64 - 0.64).sqrt();
            for _ in 0..6 {
                e.push(u);
                u = 0.8 * u + rng.sample::<f64, _>(StandardNormal);
            }
        }
        let x = Matrix::from_columns(&[normals(&mut rng, 84)]);
        hits += usize::from(bp_serial(&e, &x, &rows, 1).map_err(|e| e.to_string())?.rejects_at_5pct);
    }
    let ser = rate(hits, reps);
    ok &= ser >= 0.9;
    cells.push(format!("serial on AR(0.8) {:.1}%", 100.0 * ser));
    check(ok, format!("{reps} reps, {} (IPS/LLC >= 80%, serial >= 90%)", cells.join("; ")))
}

// 8
fn battery_verdicts() -> Outcome {
    let vc = |votes, applicable| VoteCount { votes, applicable };
    let mut ok = verdict(vc(7, 12), None) == IntegrationOrder::I0;
    for level in 0..=6 {
        ok &= verdict(vc(level, 12), Some(vc(7, 12))) == IntegrationOrder::I1;
        ok &= verdict(vc(level, 12), Some(vc(6, 12))) == IntegrationOrder::Undetermined;
    }
    let opts = BatteryOptions::default();
    let stationary = ar1_panel(&["x"], 14, 40, 0.2, 3).map_err(|e| e.to_string())?;
    let walks = ar1_panel(&["x"], 14, 40, 1.0, 4).map_err(|e| e.to_string())?;
    let s = run_battery_on_panel(&stationary, "x", &opts).map_err(|e| e.to_string())?;
    let w = run_battery_on_panel(&walks, "x", &opts).map_err(|e| e.to_string())?;
    ok &= s.order == IntegrationOrder::I0 && w.order == IntegrationOrder::I1;
    check(
        ok,
        format!(
            "7 of 12 gives I(0); <= 6 then > 6 gives I(1); AR(0.2) panel {} ({} of {}), random walks {} ({} of {} at difference)",
            s.order,
            s.votes_i0.votes,
            s.votes_i0.applicable,
            w.order,
            w.votes_i1.map_or(0, |v| v.votes),
            w.votes_i1.map_or(0, |v| v.applicable)
        ),
    )
}

// 9
fn gini_properties() -> Outcome {
    let g = |s: &[f64]| IncomeDistribution::from_income_shares(s).map(|d| gini_from_distribution(&d));
    let equal = g(&[0.25; 4]).map_err(|e| e.to_string())?;
    let extreme = g(&[0.0, 1.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(3..12);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        v.sort_by(f64::total_cmp);
        let total: f64 = v.iter().sum();
        let shares: Vec<f64> = v.iter().map(|x| x / total).collect();
        // transfer from a richer group to a poorer one, keeping their order
        let i = rng.random_range(0..n - 1);
        let j = rng.random_range(i + 1..n);
        let room = (shares[j] - shares[i]) / 2.0;
        if room <= 0.0 {
            continue;
        }
        let d = rng.random_range(0.0..1.0) * room;
        let mut after = shares.clone();
        after[i] += d;
        after[j] -= d;
        let (g0, g1) = (g(&shares).unwrap(), g(&after).unwrap());
        if g1 > g0 + 1e-12 {
            violations += 1;
        }
    }
    check(
        equal.abs() < 1e-12 && (extreme - 0.5).abs() < 1e-12 && violations == 0,
        format!("equal {equal:.1e}, {{0,1}} {extreme}, Pigou-Dalton violations {violations} of 1000"),
    )
}

// 10
fn clustering_fixture() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/institutions_scores.csv");
    let scores = load_scores_csv(&path).map_err(|e| e.to_string())?;
    let a = split_by(&scores, Criterion::Pillar, TieRule::Extractive).map_err(|e| e.to_string())?;
    let st = subindex_stability(&scores, TieRule::Extractive).map_err(|e| e.to_string())?;
    let matching: Vec<String> = st
        .matching_subindices
        .iter()
        .map(|m| m.split('.').next().unwrap_or("").to_string())
        .collect();
    check(
        (a.threshold - 4.29).abs() < 1e-9
            && a.inclusive.len() == 14
            && a.extractive.len() == 14
            && matching == ["1", "3", "4", "17"],
        format!(
            "median {:.2}, split {}/{}, matching sub-indices {}",
            a.threshold,
            a.inclusive.len(),
            a.extractive.len(),
            matching.join(",")
        ),
    )
}

// 11
fn synthetic_end_to_end() -> Outcome {
    // Monte Carlo spread of the estimator under the default design
    let mc_reps = 200;
    let mut draws: Vec<Vec<f64>> = vec![Vec::new(); 10];
    for r in 0..mc_reps {
        let cfg = SyntheticConfig {
            seed: 1_000 + r,
            ..SyntheticConfig::default()
        };
        let d = synthetic_inequality_panel(&cfg).map_err(|e| e.to_string())?;
        let exts: Vec<String> = d.panel.entities().iter().filter(|e| !d.inclusive.contains(e)).cloned().collect();
        for (k, members) in [&d.inclusive, &exts].into_iter().enumerate() {
            let sub = d.panel.subset(members).map_err(|e| e.to_string())?;
            let fit = panel_egls_fe(&sub, &EstimationSpec::inequality_baseline()).map_err(|e| e.to_string())?;
            for (j, s) in fit.slopes().iter().enumerate() {
                draws[5 * k + j].push(*s);
            }
        }
    }
    let sd: Vec<f64> = draws
        .iter()
        .map(|v| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        })
        .collect();

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("input");
    cmd_simulate(&input, &SyntheticConfig::default()).map_err(|e| e.to_string())?;
    let run = |name: &str| {
        let cfg = RunConfig {
            data: Some(input.join("synthetic_panel.csv")),
            scores: Some(input.join("synthetic_scores.csv")),
            calibration_reps: 2000,
            out: tmp.path().join(name),
            ..RunConfig::default()
        };
        cmd_replicate(&cfg).map_err(|e| e.to_string())
    };
    let a = run("a")?;
    let b = run("b")?;
    let mut identical = a.files.len() == b.files.len();
    for (fa, fb) in a.files.iter().zip(&b.files) {
        identical &= fa.file_name() == fb.file_name() && std::fs::read(fa).ok() == std::fs::read(fb).ok();
    }
    let report: EstimateReport =
        from_json(&std::fs::read_to_string(tmp.path().join("a/estimate.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (k, cluster) in ["inclusive", "extractive"].iter().enumerate() {
        let model = report
            .cluster(cluster)
            .and_then(|c| c.model.as_ref())
            .ok_or_else(|| format!("{cluster} cluster not estimated"))?;
        for (j, name) in SLOPES.iter().enumerate() {
            let c = model.coefficient(name).ok_or_else(|| format!("{name} missing"))?;
            worst = worst.max((c.coefficient - BASELINE_COEFFICIENTS[j]).abs() / sd[5 * k + j]);
        }
    }
    check(
        worst <= 3.0 && identical && a.status == ineqpanel_cli::ExitStatus::Success,
        format!(
            "max |estimate - truth| = {worst:.2} MC SD (limit 3, {mc_reps} seeds); {} output files byte-identical: {identical}",
            a.files.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Check; 11] = [
        ("within estimator equals LSDV", within_equals_lsdv),
        ("OLS equals normal-equation oracle", ols_matches_normal_equations),
        ("EGLS with equal variances equals FE", egls_degenerates_to_fe),
        ("distribution tail precision", distribution_precision),
        ("auxiliary regression shapes", diagnostic_shapes),
        ("Monte Carlo size", monte_carlo_size),
        ("Monte Carlo power", monte_carlo_power),
        ("battery verdict patterns", battery_verdicts),
        ("Gini properties", gini_properties),
        ("clustering fixture", clustering_fixture),
        ("synthetic end-to-end recovery", synthetic_end_to_end),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("PASS [{:02}] {name}: {d}", i + 1),
            Err(d) => {
                println!("FAIL [{:02}] {name}: {d}", i + 1);
                failed.push(*name);
            }
        }
    }
    // The reference vintage is not bundled; the comparison runs only when
    // a data file is supplied through the environment.
    match std::env::var_os("INEQPANEL_REFERENCE_DATA") {
        None => println!("SKIP [12] reference vintage comparison: INEQPANEL_REFERENCE_DATA not set"),
        Some(dir) => {
            let dir = Path::new(&dir);
            let tmp = tempfile::tempdir().unwrap();
            let cfg = RunConfig {
                data: Some(dir.join("panel.csv")),
                scores: Some(dir.join("scores.csv")),
                reference_diff: true,
                out: tmp.path().to_path_buf(),
                ..RunConfig::default()
            };
            match cmd_replicate(&cfg) {
                Ok(out) => {
                    let n = out.warnings.iter().filter(|w| w.starts_with("reference diff")).count();
                    println!(
                        "{} [12] reference vintage comparison: {n} cells outside tolerance (warning only)",
                        if n == 0 { "PASS" } else { "WARN" }
                    );
                }
                Err(e) => println!("WARN [12] reference vintage comparison: {e}"),
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
