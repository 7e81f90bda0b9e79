//! Special functions behind the chi-square tail probability.
//!
//! The regularized incomplete gamma functions are evaluated the classic way:
//! a power series for `x < s + 1` and a modified-Lentz continued fraction
//! otherwise, with the log-gamma prefactor from a Lanczos approximation
//! (g = 7, nine coefficients). Absolute error is well below 1e-12 over the
//! parameter range used by chi-square tests.

use crate::num::{real, Real};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITERATIONS: usize = 600;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<R: Real>(x: R) -> R {
    debug_assert!(x > R::zero(), "ln_gamma requires x > 0");
    let half = real::<R>(0.5);
    let mut acc = real::<R>(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += real::<R>(c) / (x + real::<R>(i as f64 - 1.0));
    }
    let t = x + real::<R>(LANCZOS_G) - half;
    let ln_sqrt_2pi = real::<R>(0.918_938_533_204_672_7); // ln(2*pi)/2
    ln_sqrt_2pi + (x - half) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(s, x)` for `s > 0`, `x >= 0`.
pub fn reg_lower_gamma<R: Real>(s: R, x: R) -> R {
    debug_assert!(s > R::zero() && x >= R::zero());
    if x == R::zero() {
        return R::zero();
    }
    if x < s + R::one() {
        lower_series(s, x)
    } else {
        R::one() - upper_continued_fraction(s, x)
    }
}

/// Regularized upper incomplete gamma `Q(s, x) = 1 - P(s, x)`.
pub fn reg_upper_gamma<R: Real>(s: R, x: R) -> R {
    debug_assert!(s > R::zero() && x >= R::zero());
    if x == R::zero() {
        return R::one();
    }
    if x < s + R::one() {
        R::one() - lower_series(s, x)
    } else {
        upper_continued_fraction(s, x)
    }
}

fn prefactor<R: Real>(s: R, x: R) -> R {
    (s * x.ln() - x - ln_gamma(s)).exp()
}

fn lower_series<R: Real>(s: R, x: R) -> R {
    let eps = R::epsilon();
    let mut ap = s;
    let mut sum = s.recip();
    let mut term = sum;
    for _ in 0..MAX_ITERATIONS {
        ap += R::one();
        term = term * x / ap;
        sum += term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum * prefactor(s, x)
}

fn upper_continued_fraction<R: Real>(s: R, x: R) -> R {
    let eps = R::epsilon();
    let floor = R::min_positive_value() / eps;
    let one = R::one();
    let two = one + one;
    let mut b = x + one - s;
    let mut c = floor.recip();
    let mut d = b.recip();
    let mut h = d;
    let mut i = one;
    for _ in 0..MAX_ITERATIONS {
        let a = -i * (i - s);
        b += two;
        d = a * d + b;
        if d.abs() < floor {
            d = floor;
        }
        c = b + a / c;
        if c.abs() < floor {
            c = floor;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < eps {
            break;
        }
        i += one;
    }
    h * prefactor(s, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_known_values() {
        assert!(ln_gamma(1.0f64).abs() < 1e-14);
        assert!(ln_gamma(2.0f64).abs() < 1e-14);
        // ln Gamma(0.5) = ln sqrt(pi)
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        // Gamma(6) = 120
        assert!((ln_gamma(6.0f64) - 120.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn regularized_gammas_are_complementary() {
        for &s in &[0.5f64, 1.0, 2.5, 6.0] {
            for &x in &[0.1f64, 0.9, 2.0, 7.5, 30.0] {
                let p = reg_lower_gamma(s, x);
                let q = reg_upper_gamma(s, x);
                assert!((p + q - 1.0).abs() < 1e-12, "s={s} x={x}");
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn upper_gamma_at_s_one_is_exponential() {
        for i in 0..200 {
            let x = i as f64 * 0.15;
            let q = reg_upper_gamma(1.0f64, x);
            assert!((q - (-x).exp()).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn works_in_f32() {
        let q = reg_upper_gamma(1.0f32, 1.0f32);
        assert!((q - (-1.0f32).exp()).abs() < 1e-5);
    }
}
