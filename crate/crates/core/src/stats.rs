//! Small numerical statistics kit: chi-square upper tails through the
//! regularized incomplete gamma function, Pearson correlation, and Wilson
//! score intervals.

/// Upper-tail probability of the chi-square distribution with `df` degrees
/// of freedom: Q(df/2, x/2).
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    assert!(df >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Pearson chi-square statistic for observed counts against expected values.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Regularized upper incomplete gamma Q(a, x), accurate to ~1e-14 relative:
/// power series for x < a+1, Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // modified Lentz evaluation of the continued fraction
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEF.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn mean_var(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var))
}

/// Sample Pearson correlation; None on degenerate input.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Wilson score interval for a binomial proportion at the given z quantile.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// z for two-sided 99% coverage.
pub const Z_99: f64 = 2.5758293035489004;

#[cfg(test)]
mod tests {
    use super::*;

    // Closed forms for even df: sf(x, 2k) = exp(-x/2)·Σ_{j<k} (x/2)^j / j!
    fn sf_even_df(x: f64, k: usize) -> f64 {
        let half = x / 2.0;
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..k {
            if j > 0 {
                term *= half / j as f64;
            }
            sum += term;
        }
        (-half).exp() * sum
    }

    #[test]
    fn chi_square_matches_closed_forms() {
        for &(x, df) in &[
            (1.0, 2),
            (3.5, 2),
            (10.0, 4),
            (23.0, 24),
            (60.7, 24),
            (100.0, 40),
            (5.0, 12),
        ] {
            let got = chi_square_sf(x, df);
            let want = sf_even_df(x, df / 2);
            assert!(
                (got - want).abs() <= 1e-10 * want.max(1e-30),
                "x={x} df={df}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn chi_square_reference_points() {
        // df=23 tail near the 1e-3 significance threshold
        let p = chi_square_sf(49.728, 23);
        assert!((p - 1e-3).abs() < 2e-5, "p={p}");
        // large statistic gives a very small tail
        let p = chi_square_sf(60.7, 23);
        assert!(p > 2.0e-5 && p < 4.5e-5, "p={p}");
        assert!(chi_square_sf(0.0, 5) == 1.0);
        assert!(chi_square_sf(1e4, 5) < 1e-30);
    }

    #[test]
    fn ln_gamma_basics() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        let lg5 = ln_gamma(5.0); // ln(24)
        assert!((lg5 - 24f64.ln()).abs() < 1e-12);
        let lg_half = ln_gamma(0.5); // ln(sqrt(pi))
        assert!((lg_half - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn pearson_and_wilson() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let ys_neg = [8.0, 6.0, 4.0, 2.0];
        assert!((pearson(&xs, &ys_neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&xs, &[1.0, 1.0, 1.0, 1.0]).is_none());

        let (lo, hi) = wilson_interval(75, 1000, Z_99);
        assert!(lo < 0.075 && 0.075 < hi);
        assert!(hi - lo < 0.05);
    }

    #[test]
    fn chi_square_statistic_basics() {
        let observed = [10u64, 20, 30];
        let expected = [10.0, 20.0, 30.0];
        assert_eq!(chi_square_statistic(&observed, &expected), 0.0);
        let skew = [15u64, 15, 30];
        assert!((chi_square_statistic(&skew, &expected) - (2.5 + 1.25)).abs() < 1e-12);
    }
}
