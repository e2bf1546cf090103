//! Tail functions against a frozen 50-digit mpmath grid (tests/data/dist_oracle.csv).

use ineqpanel::probdist::{chi2_sf, f_sf, normal_cdf, student_t_sf};

fn grid() -> Vec<(String, f64, f64, f64, f64)> {
    let text = include_str!("data/dist_oracle.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn all_tail_functions_within_1e10_of_oracle() {
    let rows = grid();
    assert_eq!(rows.len(), 500);
    let mut worst = 0.0f64;
    for (name, x, a, b, expected) in rows {
        let got = match name.as_str() {
            "chi2_sf" => chi2_sf(x, a).unwrap(),
            "student_t_sf" => student_t_sf(x, a).unwrap(),
            "f_sf" => f_sf(x, a, b).unwrap(),
            "normal_cdf" => normal_cdf(x),
            other => panic!("unknown function {other}"),
        };
        let err = (got - expected).abs();
        worst = worst.max(err);
        assert!(err <= 1e-10, "{name}({x}, {a}, {b}) = {got}, oracle {expected}");
    }
    eprintln!("max abs error over grid: {worst:e}");
}
