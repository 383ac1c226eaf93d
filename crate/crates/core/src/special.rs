//! Special functions needed by the multimode integrand.

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Exponentially scaled modified Bessel function `exp(-|x|) I0(x)`.
///
/// Power series below `|x| = 20`, Hankel asymptotic expansion above; both
/// are accurate to a few ulps times the term count.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 20.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-ax).exp()
    } else {
        // e^{-x} I0(x) ~ (2πx)^{-1/2} Σ_k [(2k-1)!!]^2 / (k! 8^k x^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * ax);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * ax).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route: I0(x) = (1/π) ∫_0^π exp(x cos t) dt, trapezoid rule is
    // spectrally accurate for this periodic integrand.
    fn i0e_integral(x: f64) -> f64 {
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        let mut s = 0.0;
        for j in 0..=n {
            let t = j as f64 * h;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * (x * (t.cos() - 1.0)).exp();
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn i0e_matches_integral_representation() {
        for &x in &[0.0, 1e-3, 0.5, 1.0, 3.7, 10.0, 19.99, 20.01, 35.0, 120.0, 900.0] {
            let a = bessel_i0e(x);
            let b = i0e_integral(x);
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-15, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn i0e_at_zero_is_one() {
        assert_eq!(bessel_i0e(0.0), 1.0);
    }

    #[test]
    fn sinc_continuous_at_switch() {
        let x = 1e-4;
        assert!((sinc(x * (1.0 - 1e-12)) - x.sin() / x).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }
}
