//! Log-gamma for complex and real arguments.
//!
//! [`complex_log_gamma`] returns the principal branch, the analytic continuation
//! of `ln Γ(x)` from the positive axis with the cut along the negative real axis.
//! [`ln_gamma_fast`] is the cheaper variant used inside Mellin-Barnes integrands,
//! where only `exp(ln Γ)` matters and the imaginary part may be off by a multiple
//! of 2π.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;
const STIRLING_MIN_ABS: f64 = 10.0;

// B_{2k} / (2k (2k - 1)) for k = 1..=9
const STIRLING: [f64; 9] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
];

fn stirling(z: Complex64) -> Complex64 {
    let w = z.inv();
    let w2 = w * w;
    let mut series = Complex64::new(STIRLING[STIRLING.len() - 1], 0.0);
    for c in STIRLING.iter().rev().skip(1) {
        series = series * w2 + c;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series * w
}

fn stirling_real(x: f64) -> f64 {
    let w = 1.0 / x;
    let w2 = w * w;
    let mut series = STIRLING[STIRLING.len() - 1];
    for c in STIRLING.iter().rev().skip(1) {
        series = series * w2 + c;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series * w
}

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Principal-branch `ln Γ(z)`.
///
/// Satisfies `ln Γ(z + 1) = ln Γ(z) + ln z` with the principal logarithm, so it
/// is continuous everywhere off the non-positive real axis.
pub fn complex_log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain {
            field: "z".into(),
            reason: "non-finite argument".into(),
        });
    }
    if is_pole(z) {
        return Err(Error::GammaPole(z.re));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.0 || w.norm() < STIRLING_MIN_ABS {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.im > 20.0 {
        // sin w = e^{-iw} (e^{2iw} - 1) / (2i)
        let i = Complex64::i();
        -i * w + ((i * w * 2.0).exp() - 1.0).ln() - (i * 2.0).ln()
    } else if w.im < -20.0 {
        // sin w = e^{iw} (1 - e^{-2iw}) / (2i)
        let i = Complex64::i();
        i * w + (1.0 - (-i * w * 2.0).exp()).ln() - (i * 2.0).ln()
    } else {
        w.sin().ln()
    }
}

/// `ln Γ(z)` modulo `2πi`. Returns `+∞` at the poles.
pub fn ln_gamma_fast(z: Complex64) -> Complex64 {
    if is_pole(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        return Complex64::new(LN_PI, 0.0) - ln_sin_pi(z) - ln_gamma_fast(1.0 - z);
    }
    if z.norm() >= STIRLING_MIN_ABS {
        return stirling(z);
    }
    let mut prod = z;
    let mut w = z + 1.0;
    while w.norm() < STIRLING_MIN_ABS {
        prod *= w;
        w += 1.0;
    }
    stirling(w) - prod.ln()
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= STIRLING_MIN_ABS {
        return stirling_real(x);
    }
    let mut prod = x;
    let mut w = x + 1.0;
    while w < STIRLING_MIN_ABS {
        prod *= w;
        w += 1.0;
    }
    stirling_real(w) - prod.ln()
}

/// `Γ(x)` for real `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Polygamma `ψ⁽ⁿ⁾(x)` for `n ≥ 1` and real `x > 0`.
pub fn polygamma(n: u32, x: f64) -> f64 {
    debug_assert!(n >= 1 && x > 0.0);
    const BERNOULLI: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut shift = 0.0;
    let mut w = x;
    while w < 15.0 {
        shift += w.powi(-(n as i32) - 1);
        w += 1.0;
    }
    let mut series = fact(n - 1) / w.powi(n as i32) + fact(n) / (2.0 * w.powi(n as i32 + 1));
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = k as u32 + 1;
        series += b * fact(2 * k + n - 1) / (fact(2 * k) * w.powi((2 * k + n) as i32));
    }
    sign * (series + fact(n) * shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polygamma_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        let zeta3 = 1.202_056_903_159_594_3;
        assert!((polygamma(1, 1.0) - pi2 / 6.0).abs() < 1e-13);
        assert!((polygamma(1, 0.5) - pi2 / 2.0).abs() < 1e-12);
        assert!((polygamma(2, 1.0) + 2.0 * zeta3).abs() < 1e-13);
        assert!((polygamma(3, 1.0) - pi2 * pi2 / 15.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn polygamma_recurrence(n in 1u32..4, x in 0.05f64..40.0) {
            // ψ⁽ⁿ⁾(x + 1) = ψ⁽ⁿ⁾(x) + (−1)ⁿ n! / x^(n+1)
            let fact = (1..=n).product::<u32>() as f64;
            let step = if n % 2 == 0 { 1.0 } else { -1.0 } * fact / x.powi(n as i32 + 1);
            let base = polygamma(n, x);
            let (a, b) = (polygamma(n, x + 1.0), base + step);
            prop_assert!((a - b).abs() <= 1e-13 * (base.abs() + step.abs()));
        }
    }

    #[test]
    fn known_values() {
        assert!(complex_log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(complex_log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-15);
        let half = complex_log_gamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - 0.572_364_942_924_700_1).abs() < 1e-14);
        assert!(half.im.abs() < 1e-15);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.572_364_942_924_700_1).abs() < 1e-14);
    }

    // Values from mpmath.loggamma at 30 digits.
    #[test]
    fn principal_branch_reference_values() {
        let cases = [
            (
                c(3.0, 4.0),
                c(-1.756_626_784_603_784, 4.742_664_438_034_658),
            ),
            (
                c(-2.5, 0.5),
                c(-0.935_085_621_298_277_5, -8.870_962_885_247_46),
            ),
            (
                c(0.1, 100.0),
                c(-158.002_761_620_672_6, 359.888_316_732_655),
            ),
            (
                c(-10.3, -2.0),
                c(-20.075_476_555_501_1, 29.158_106_438_274_873),
            ),
        ];
        for (z, want) in cases {
            let got = complex_log_gamma(z).unwrap();
            assert!(
                (got - want).norm() < 1e-12 * want.norm().max(1.0),
                "{z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn reflection_identity() {
        let z = c(3.0, 4.0);
        let lhs = complex_log_gamma(z).unwrap() + complex_log_gamma(1.0 - z).unwrap();
        let rhs = Complex64::new(PI, 0.0).ln() - (z * PI).sin().ln();
        let d = lhs - rhs;
        assert!(d.re.abs() < 1e-12);
        let k = d.im / (2.0 * PI);
        assert!((k - k.round()).abs() < 1e-12);
    }

    #[test]
    fn poles_rejected() {
        assert!(matches!(
            complex_log_gamma(c(0.0, 0.0)),
            Err(Error::GammaPole(_))
        ));
        assert!(matches!(
            complex_log_gamma(c(-3.0, 0.0)),
            Err(Error::GammaPole(_))
        ));
        assert!(ln_gamma_fast(c(-2.0, 0.0)).re.is_infinite());
    }

    #[test]
    fn large_imaginary_part() {
        let z = c(0.7, 1.0e4);
        let a = complex_log_gamma(z).unwrap();
        let b = ln_gamma_fast(z);
        assert!((a.re - b.re).abs() < 1e-13 * a.norm());
        let z = c(-0.3, -9.0e3);
        let a = complex_log_gamma(z).unwrap();
        let b = ln_gamma_fast(z);
        assert!((a.re - b.re).abs() < 1e-13 * a.norm());
    }

    proptest! {
        #[test]
        fn recurrence(re in -30.0f64..30.0, im in -200.0f64..200.0) {
            prop_assume!(im.abs() > 1e-3 || re > 0.0);
            let z = c(re, im);
            let lhs = complex_log_gamma(z + 1.0).unwrap();
            let rhs = z.ln() + complex_log_gamma(z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn fast_matches_principal_mod_2pi(re in -40.0f64..40.0, im in -500.0f64..500.0) {
            prop_assume!(im.abs() > 1e-3 || re > 0.0);
            let z = c(re, im);
            let a = complex_log_gamma(z).unwrap();
            let b = ln_gamma_fast(z);
            let scale = a.norm().max(1.0);
            prop_assert!((a.re - b.re).abs() <= 1e-12 * scale);
            let k = (a.im - b.im) / (2.0 * PI);
            prop_assert!((k - k.round()).abs() * 2.0 * PI <= 1e-11 * scale);
        }
    }
}
