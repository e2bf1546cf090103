use ineqpanel::cluster::*;
use proptest::prelude::*;

fn fixture() -> Vec<InstitutionScores> {
    load_scores_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/institutions_scores.csv")).unwrap()
}

#[test]
fn fixture_main_split() {
    let s = fixture();
    assert_eq!(s.len(), 28);
    let a = split_by(&s, Criterion::Pillar, TieRule::Extractive).unwrap();
    assert!((a.threshold - 4.29).abs() < 1e-9);
    assert_eq!((a.inclusive.len(), a.extractive.len()), (14, 14));
    for c in ["EE", "MT", "PT", "FI", "SE", "AT", "FR", "DE"] {
        assert!(a.inclusive.contains(&c.to_string()), "{c}");
    }
    for c in ["LV", "LT", "EL", "PL", "RO", "IT", "HU"] {
        assert!(a.extractive.contains(&c.to_string()), "{c}");
    }
}

#[test]
fn fixture_stability_profile() {
    let r = subindex_stability(&fixture(), TieRule::Extractive).unwrap();
    assert_eq!(r.criteria.len(), 22);
    assert_eq!(r.stable, ["AT", "EL", "PL", "RO", "SE"]);
    let matching: Vec<&str> = r.matching_subindices.iter().map(String::as_str).collect();
    assert_eq!(
        matching,
        [
            "1. Property rights",
            "3. Diversion of public funds",
            "4. Public trust in politicians",
            "17. Ethical behaviour of firms"
        ]
    );
    for c in ["FI", "EE"] {
        let p = r.profile(c).unwrap();
        assert_eq!(p.inclusive_count, 21);
        assert_eq!(p.flips, ["21. Strength of investor protection"]);
    }
    for c in ["IT", "HU"] {
        let p = r.profile(c).unwrap();
        assert_eq!(p.inclusive_count, 2);
        assert_eq!(p.flips.len(), 2);
    }
    for c in ["FR", "DE"] {
        let p = r.profile(c).unwrap();
        assert_eq!(p.flips, ["14. Business costs of crime and violence", "15. Organized crime"]);
    }
    for a in &r.assignments {
        assert_eq!(a.inclusive.len(), 14, "{}", a.criterion);
    }
    let csv = r.to_csv();
    assert_eq!(csv.lines().count(), 29);
    assert!(csv.lines().nth(1).unwrap().starts_with("AT,I,I"));
}

#[test]
fn constant_profiles_when_all_criteria_agree() {
    let s: Vec<InstitutionScores> = (0..6)
        .map(|i| InstitutionScores {
            country: format!("C{i}"),
            pillar: 2.0 + i as f64 * 0.5,
            subindices: [2.0 + i as f64 * 0.5; 21],
        })
        .collect();
    let r = subindex_stability(&s, TieRule::Extractive).unwrap();
    assert_eq!(r.stable.len(), 6);
    assert_eq!(r.matching_subindices.len(), 21);
}

#[test]
fn missing_subindex_column_is_named() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/institutions_scores.csv")).unwrap();
    let cut: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(7);
            f.join(",") + "\n"
        })
        .collect();
    let err = read_scores_csv(cut.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("Judicial independence"), "{err}");
}

#[test]
fn out_of_scale_score_names_the_row() {
    let mut text = String::from("country,pillar");
    for i in 1..=21 {
        text.push_str(&format!(",sub{i:02}"));
    }
    text.push_str("\nAA,4.0");
    text.push_str(&",3.0".repeat(20));
    text.push_str(",9.5\nBB,8.0");
    text.push_str(&",3.0".repeat(21));
    text.push('\n');
    let err = read_scores_csv(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("row 3"), "{err}");
}

fn pairwise_gini(incomes: &[f64]) -> f64 {
    let n = incomes.len() as f64;
    let mu = incomes.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for a in incomes {
        for b in incomes {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mu)
}

fn shares(raw: &[f64]) -> Vec<f64> {
    let t: f64 = raw.iter().sum();
    raw.iter().map(|x| x / t).collect()
}

proptest! {
    #[test]
    fn gini_matches_pairwise_oracle(raw in prop::collection::vec(0.01f64..10.0, 2..20)) {
        let s = shares(&raw);
        let g = gini_from_distribution(&IncomeDistribution::from_income_shares(&s).unwrap());
        prop_assert!((g - pairwise_gini(&s)).abs() < 1e-9);
    }

    #[test]
    fn gini_merge_invariance(raw in prop::collection::vec(0.01f64..10.0, 2..10), k in 0usize..9) {
        let s = shares(&raw);
        let n = s.len() as f64;
        let k = k % s.len();
        // split group k into two halves with identical per-capita income
        let mut groups: Vec<IncomeGroup> = s.iter().map(|&x| IncomeGroup { population_share: 1.0 / n, income_share: x }).collect();
        let g0 = gini_from_distribution(&IncomeDistribution::new(groups.clone()).unwrap());
        let half = IncomeGroup { population_share: 0.5 / n, income_share: s[k] / 2.0 };
        groups[k] = half;
        groups.push(half);
        let g1 = gini_from_distribution(&IncomeDistribution::new(groups).unwrap());
        prop_assert!((g0 - g1).abs() < 1e-12);
    }

    #[test]
    fn split_invariant_under_monotone_transform(v in prop::collection::vec(-50.0f64..50.0, 2..30)) {
        prop_assume!(v.iter().any(|x| *x != v[0]));
        let a: Vec<(String, f64)> = v.iter().enumerate().map(|(i, x)| (format!("{i:03}"), *x)).collect();
        let b: Vec<(String, f64)> = a.iter().map(|(c, x)| (c.clone(), (x / 20.0).exp() * 3.0 + 1.0)).collect();
        let sa = median_split(&a, TieRule::Extractive).unwrap();
        let sb = median_split(&b, TieRule::Extractive).unwrap();
        prop_assert_eq!(&sa.inclusive, &sb.inclusive);
        let d = sa.inclusive.len() as i64 - sa.extractive.len() as i64;
        let distinct = { let mut s = v.clone(); s.sort_by(f64::total_cmp); s.windows(2).all(|w| w[0] != w[1]) };
        if distinct { prop_assert!(d.abs() <= 1); }
    }

    #[test]
    fn pearson_affine_invariance(x in prop::collection::vec(-5.0f64..5.0, 3..30), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * 0.3 + (i as f64).sin()).collect();
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let r = pearson_corr(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson_corr(&xs, &y).unwrap() - r).abs() < 1e-9);
        let xn: Vec<f64> = x.iter().map(|v| -a * v).collect();
        prop_assert!((pearson_corr(&xn, &y).unwrap() + r).abs() < 1e-9);
    }
}
