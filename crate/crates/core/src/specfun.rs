//! Scalar special functions used by every kernel evaluation.
//!
//! Log-gamma and digamma use the asymptotic (Stirling) series for arguments
//! at or above [`ASYMPTOTIC_CUTOFF`], and upward recurrence below it. The
//! exponentially scaled Bessel functions use the ascending power series up to
//! [`BESSEL_CROSSOVER`] and the large-argument Hankel expansion above it.
//!
//! All routines are pure and allocation free.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `ln(2π) / 2`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Arguments at or above this value go straight to the asymptotic series.
pub const ASYMPTOTIC_CUTOFF: f64 = 10.0;

/// Power series below, Hankel expansion above.
///
/// The Hankel expansion is divergent; its smallest term is roughly
/// `exp(-2z)`, so full double precision needs `z >= ~18`.
pub const BESSEL_CROSSOVER: f64 = 20.0;

/// `B_{2k} / (2k (2k - 1))` for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `B_{2k} / (2k)` for k = 1..=8.
const DIGAMMA_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

fn check_positive(func: &'static str, z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { func, value: z, expected: "z > 0 and finite" })
    }
}

fn check_nonnegative(func: &'static str, z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { func, value: z, expected: "z >= 0 and finite" })
    }
}

/// Tail of the Stirling series, `Σ B_{2k} / (2k (2k-1) z^{2k-1})`.
///
/// Only meaningful for `z >= ASYMPTOTIC_CUTOFF`; there the truncation error
/// is below 1e-17.
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * r2 + c;
    }
    acc * r
}

/// Shift `z` up to the asymptotic region. Returns `(z + n, ln Π_{k<n} (z + k))`.
fn shift_up(z: f64) -> (f64, f64) {
    let mut w = z;
    let mut prod = 1.0;
    while w < ASYMPTOTIC_CUTOFF {
        prod *= w;
        w += 1.0;
    }
    (w, prod.ln())
}

/// Natural log of the gamma function for `z > 0`.
pub fn log_gamma(z: f64) -> Result<f64> {
    check_positive("log_gamma", z)?;
    Ok(log_gamma_unchecked(z))
}

pub(crate) fn log_gamma_unchecked(z: f64) -> f64 {
    let (w, ln_prod) = if z < ASYMPTOTIC_CUTOFF { shift_up(z) } else { (z, 0.0) };
    (w - 0.5) * w.ln() - w + HALF_LN_2PI + stirling_tail(w) - ln_prod
}

/// `ln Γ(n + 1) - [(n + ½) ln n - n + ½ ln 2π]` for `n > 0`.
///
/// This is the remainder of Stirling's formula for `n!`. It is small and
/// smooth, which lets ratios of large factorials be formed without the
/// catastrophic cancellation of subtracting three large log-gammas.
pub(crate) fn stirling_remainder(n: f64) -> f64 {
    if n >= ASYMPTOTIC_CUTOFF {
        stirling_tail(n)
    } else {
        log_gamma_unchecked(n + 1.0) - ((n + 0.5) * n.ln() - n + HALF_LN_2PI)
    }
}

/// Digamma `ψ(z) = d/dz ln Γ(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    check_positive("digamma", z)?;
    Ok(digamma_unchecked(z))
}

pub(crate) fn digamma_unchecked(z: f64) -> f64 {
    let mut w = z;
    let mut shift = 0.0;
    while w < ASYMPTOTIC_CUTOFF {
        shift += 1.0 / w;
        w += 1.0;
    }
    let r2 = 1.0 / (w * w);
    let mut acc = 0.0;
    for c in DIGAMMA_COEFFS.iter().rev() {
        acc = acc * r2 + c;
    }
    w.ln() - 0.5 / w - acc * r2 - shift
}

/// Exponentially scaled modified Bessel function `e^{-z} I0(z)`, `z >= 0`.
pub fn bessel_i0e(z: f64) -> Result<f64> {
    check_nonnegative("bessel_i0e", z)?;
    Ok(i0e_unchecked(z))
}

/// Exponentially scaled modified Bessel function `e^{-z} I1(z)`, `z >= 0`.
pub fn bessel_i1e(z: f64) -> Result<f64> {
    check_nonnegative("bessel_i1e", z)?;
    Ok(i1e_unchecked(z))
}

pub(crate) fn i0e_unchecked(z: f64) -> f64 {
    if z < BESSEL_CROSSOVER {
        power_series(0, z) * (-z).exp()
    } else {
        hankel_scaled(0, z)
    }
}

pub(crate) fn i1e_unchecked(z: f64) -> f64 {
    if z < BESSEL_CROSSOVER {
        power_series(1, z) * (-z).exp()
    } else {
        hankel_scaled(1, z)
    }
}

/// `I1(z) / z * e^{-z}`, finite at `z = 0` where it equals 1/2.
pub(crate) fn i1e_over_z(z: f64) -> f64 {
    if z == 0.0 {
        0.5
    } else if z < BESSEL_CROSSOVER {
        // Series of I1(z)/z = ½ Σ (z²/4)^k / (k! (k+1)!)
        let q = 0.25 * z * z;
        let mut term = 0.5;
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + 1.0));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum * (-z).exp()
    } else {
        hankel_scaled(1, z) / z
    }
}

/// Ascending series `Σ (z/2)^{2k+ν} / (k! (k+ν)!)` for ν ∈ {0, 1}.
fn power_series(order: u32, z: f64) -> f64 {
    let nu = f64::from(order);
    let q = 0.25 * z * z;
    let mut term = if order == 0 { 1.0 } else { 0.5 * z };
    if term == 0.0 {
        return 0.0;
    }
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Hankel expansion of `e^{-z} I_ν(z)`:
/// `(2πz)^{-1/2} Σ_k (-1)^k a_k(ν) / z^k`,
/// `a_k(ν) = Π_{j=1..k} (4ν² - (2j-1)²) / (k! 8^k)`.
///
/// Summation stops at the first term below 1e-17 relative, or just before the
/// terms start growing.
fn hankel_scaled(order: u32, z: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    loop {
        j += 1.0;
        let odd = 2.0 * j - 1.0;
        let next = -term * (mu - odd * odd) / (j * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

/// Stirling's formula for `z!` keeping `terms` entries of the bracket
/// `1 + 1/(12z) + 1/(288z²)`.
///
/// Provided to quantify how many bracket terms the continuum limit needs;
/// kernels never use it.
pub fn stirling_approx(z: f64, terms: u32) -> Result<f64> {
    if !(z >= 1.0 && z.is_finite()) {
        return Err(Error::Domain { func: "stirling_approx", value: z, expected: "z >= 1" });
    }
    if !(1..=3).contains(&terms) {
        return Err(Error::Domain {
            func: "stirling_approx",
            value: f64::from(terms),
            expected: "terms in {1, 2, 3}",
        });
    }
    let lead = (z * z.ln() - z).exp() * (2.0 * PI * z).sqrt();
    let bracket = [1.0, 1.0 / (12.0 * z), 1.0 / (288.0 * z * z)];
    let partial: f64 = bracket[..terms as usize].iter().sum();
    Ok(lead * partial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn log_gamma_integer_points() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
        assert_relative_eq!(log_gamma(5.0).unwrap(), 24f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn log_gamma_half_integers() {
        // Γ(1/2) = √π, Γ(3/2) = √π/2, Γ(5/2) = 3√π/4
        let sp = PI.sqrt();
        assert_relative_eq!(log_gamma(0.5).unwrap(), sp.ln(), max_relative = 1e-14);
        assert_relative_eq!(log_gamma(1.5).unwrap(), (sp / 2.0).ln(), max_relative = 1e-13);
        assert_relative_eq!(log_gamma(2.5).unwrap(), (0.75 * sp).ln(), max_relative = 1e-13);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain { .. })));
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn stirling_remainder_matches_definition() {
        for &n in &[0.3, 1.0, 7.5, 10.0, 123.0, 1e5] {
            let lg = log_gamma(n + 1.0).unwrap();
            let direct = lg - ((n + 0.5) * f64::ln(n) - n + HALF_LN_2PI);
            // The direct form cancels two numbers of size ~lg.
            let tol = 1e-15 * lg.abs() + 1e-14;
            assert!((stirling_remainder(n) - direct).abs() < tol, "n={n}");
        }
    }

    #[test]
    fn digamma_reference_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-14);
        // ψ(1/2) = -γ - 2 ln 2
        assert!((digamma(0.5).unwrap() + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn digamma_matches_central_difference_of_log_gamma() {
        let z = 10.0;
        let psi = digamma(z).unwrap();
        let mut errs = Vec::new();
        for &h in &[1e-2, 1e-3] {
            let fd = (log_gamma(z + h).unwrap() - log_gamma(z - h).unwrap()) / (2.0 * h);
            errs.push((fd - psi).abs());
        }
        // ψ''(10)/6 ≈ -1.8e-3; O(h²) means roughly a factor 100 between the two.
        assert!(errs[0] < 1e-6 && errs[1] < 1e-8, "{errs:?}");
        assert!(errs[0] / errs[1] > 50.0, "{errs:?}");
    }

    #[test]
    fn bessel_at_origin() {
        assert_eq!(bessel_i0e(0.0).unwrap(), 1.0);
        assert_eq!(bessel_i1e(0.0).unwrap(), 0.0);
        assert_eq!(i1e_over_z(0.0), 0.5);
        assert!(bessel_i0e(-1e-9).is_err());
        assert!(bessel_i1e(-1.0).is_err());
    }

    #[test]
    fn bessel_i0e_large_argument_leading_terms() {
        let z = 100.0;
        let approx = (2.0 * PI * z).powf(-0.5) * (1.0 + 1.0 / (8.0 * z));
        assert_relative_eq!(bessel_i0e(z).unwrap(), approx, max_relative = 1e-4);
    }

    #[test]
    fn bessel_continuous_across_crossover() {
        let below = BESSEL_CROSSOVER - 4e-15;
        let at = BESSEL_CROSSOVER;
        assert_relative_eq!(i0e_unchecked(below), i0e_unchecked(at), max_relative = 1e-13);
        assert_relative_eq!(i1e_unchecked(below), i1e_unchecked(at), max_relative = 1e-13);
        assert_relative_eq!(i1e_over_z(below), i1e_over_z(at), max_relative = 1e-13);
    }

    #[test]
    fn bessel_high_precision_references() {
        // 40-digit values, rounded.
        let refs = [
            (0.5, 0.645_035_270_449_150_1, 0.156_420_803_184_871_7),
            (2.0, 0.308_508_322_553_671_05, 0.215_269_289_248_937_65),
            (10.0, 0.127_833_337_163_428_6, 0.121_262_681_384_455_52),
            (20.0, 0.089_780_311_884_826_02, 0.087_506_222_183_288_67),
            (25.0, 0.080_196_773_547_436_7, 0.078_576_113_319_292_78),
            (100.0, 0.039_944_379_299_096_68, 0.039_744_153_025_130_25),
            (1000.0, 0.012_617_240_455_891_257, 0.012_610_930_256_928_629),
            (1e5, 0.001_261_567_837_976_776_8, 0.001_261_561_530_121_817_1),
        ];
        for (z, i0, i1) in refs {
            assert_relative_eq!(bessel_i0e(z).unwrap(), i0, max_relative = 1e-13);
            assert_relative_eq!(bessel_i1e(z).unwrap(), i1, max_relative = 1e-13);
        }
    }

    #[test]
    fn i1e_over_z_consistent() {
        for &z in &[1e-6, 0.3, 5.0, 19.0, 50.0, 4e3] {
            assert_relative_eq!(i1e_over_z(z), i1e_unchecked(z) / z, max_relative = 1e-14);
        }
    }

    #[test]
    fn stirling_approx_examples() {
        // The first omitted bracket term is -139/(51840 z³), so three terms
        // leave a relative error of about 2.7e-6 at z = 10.
        let exact = log_gamma(11.0).unwrap().exp();
        let s3 = stirling_approx(10.0, 3).unwrap();
        let rel = (s3 - exact) / exact;
        assert!((rel - 139.0 / 51_840.0 / 1e3).abs() < 1e-7, "{rel}");
        let s2 = stirling_approx(10.0, 2).unwrap();
        assert!(((s2 - exact) / exact).abs() > rel.abs());

        let s1 = stirling_approx(1.0, 1).unwrap();
        assert_relative_eq!(s1, (2.0 * PI).sqrt() / std::f64::consts::E, max_relative = 1e-14);
        assert!(((1.0 - s1) - 0.0779).abs() < 1e-3);

        assert!(stirling_approx(0.5, 1).is_err());
        assert!(stirling_approx(3.0, 0).is_err());
        assert!(stirling_approx(3.0, 4).is_err());
    }
}
