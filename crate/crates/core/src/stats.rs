//! Student-t tail probabilities for coefficient significance.

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log(1.0 - x);
    let front = libm::exp(ln_front);
    // the continued fraction converges fast only below the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_case_has_closed_form() {
        // df = 1: p = 1 - 2 atan(|t|) / pi
        for t in [0.0, 0.3, 1.0, 2.5, 10.0] {
            let exact = 1.0 - 2.0 * libm::atan(t) / core::f64::consts::PI;
            assert!((t_two_sided_p(t, 1.0) - exact).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn df_two_closed_form() {
        // df = 2: p = 1 - |t| / sqrt(2 + t²)
        for t in [0.1, 1.0, 4.303] {
            let exact = 1.0 - t / libm::sqrt(2.0 + t * t);
            assert!((t_two_sided_p(t, 2.0) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn textbook_critical_values() {
        // t_{0.975, 10} = 2.228139
        assert!((t_two_sided_p(2.228139, 10.0) - 0.05).abs() < 1e-6);
        assert!((t_two_sided_p(0.0, 7.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_symmetry() {
        for &(x, a, b) in &[(0.3, 2.0, 5.0), (0.8, 0.5, 3.5), (0.5, 4.0, 4.0)] {
            let lhs = incomplete_beta(x, a, b);
            let rhs = 1.0 - incomplete_beta(1.0 - x, b, a);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
