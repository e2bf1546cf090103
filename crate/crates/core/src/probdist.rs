//! Tail probabilities for the chi-square, Student t, Fisher F and standard
//! normal distributions, built on the regularized incomplete gamma and beta
//! functions.
//!
//! The incomplete gamma uses its power series below `x < a + 1` and a
//! modified-Lentz continued fraction above; the incomplete beta uses the
//! continued fraction on whichever side of `(a + 1) / (a + b + 2)` converges.
//! Across the acceptance grid the absolute error stays under 1e-12 for
//! moderate degrees of freedom.

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    // P(a, x)
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    // Q(a, x)
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` where the caller also supplies
/// `y = 1 - x` computed without cancellation.
fn beta_inc_pair(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, y) / b
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_pair(a, b, x, 1.0 - x)
}

fn check_df(df: f64, what: &str) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} degrees of freedom must be positive, got {df}")))
    }
}

/// Upper tail of the chi-square distribution, `P(X > x)`.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    check_df(df, "chi-square")?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(regularized_gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Upper tail of Student's t, `P(T > x)`.
pub fn student_t_sf(x: f64, df: f64) -> Result<f64> {
    check_df(df, "Student t")?;
    if x.is_nan() {
        return Err(Error::invalid("Student t statistic is NaN"));
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    let t2 = x * x;
    let denom = df + t2;
    let tail = 0.5 * beta_inc_pair(df / 2.0, 0.5, df / denom, t2 / denom);
    Ok(if x >= 0.0 { tail } else { 1.0 - tail })
}

/// Two-sided Student t probability `P(|T| > |x|)`.
pub fn student_t_two_sided(x: f64, df: f64) -> Result<f64> {
    Ok((2.0 * student_t_sf(x.abs(), df)?).min(1.0))
}

/// Upper tail of Fisher's F, `P(F > x)`.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df(df1, "F numerator")?;
    check_df(df2, "F denominator")?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("F statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let denom = df2 + df1 * x;
    Ok(beta_inc_pair(df2 / 2.0, df1 / 2.0, df2 / denom, df1 * x / denom).clamp(0.0, 1.0))
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    if z >= 0.0 {
        regularized_gamma_q(0.5, z * z)
    } else {
        2.0 - regularized_gamma_q(0.5, z * z)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail, `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// Two-sided standard normal probability `P(|Z| > |x|)`.
pub fn normal_two_sided(x: f64) -> f64 {
    (2.0 * normal_sf(x.abs())).min(1.0)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverts a decreasing upper-tail function by bisection on `[lo, hi]`.
/// Test tooling only; it makes no attempt at speed.
pub fn invert_sf(sf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sf(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
