//! Gamma-family special functions and chi-squared quantiles.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;

// Lanczos approximation, g = 7, n = 9.
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

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
///
/// Series for `x < a + 1`, Lentz continued fraction for the complement
/// otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(format!("P(a, x) needs a > 0, x ≥ 0 (a={a}, x={x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        Ok((sum.ln() + log_prefactor).exp().min(1.0))
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
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
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (log_prefactor + h.ln()).exp();
        Ok((1.0 - q).max(0.0))
    }
}

pub fn chi2_cdf(dof: u32, x: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::domain("chi-squared needs dof ≥ 1"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    regularized_gamma_p(dof as f64 / 2.0, x / 2.0)
}

fn chi2_pdf(dof: u32, x: f64) -> f64 {
    let k = dof as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Quantile `q` with `P(dof/2, q/2) = prob`, by bracketing then safeguarded
/// Newton steps (bisection whenever Newton leaves the bracket).
pub fn chi2_quantile(dof: u32, prob: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::domain("chi-squared needs dof ≥ 1"));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::domain(format!("probability {prob} outside (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0) * 2.0;
    while chi2_cdf(dof, hi)? < prob {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::domain("quantile bracket overflow"));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let f = chi2_cdf(dof, x)? - prob;
        if f.abs() <= 1e-13 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi2_pdf(dof, x);
        let newton = x - f / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn p_of_one_is_exponential_cdf() {
        for &x in &[0.1f64, 1.0, 1.5, 7.0, 30.0] {
            let expected = 1.0 - (-x).exp();
            assert!((regularized_gamma_p(1.0, x).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn one_sigma_of_chi2_1() {
        // P(|Z| ≤ 1) = erf(1/√2)
        let prob = 0.682_689_492_137_085_9;
        assert!((chi2_quantile(1, prob).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn table_values() {
        assert!((chi2_quantile(10, 0.95).unwrap() - 18.307).abs() < 1e-3);
        let two = chi2_quantile(2, 0.95).unwrap();
        assert!((two - (-2.0 * 0.05f64.ln())).abs() < 1e-9);
        assert!((two - 5.9915).abs() < 1e-3);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for dof in [1u32, 2, 3, 5, 10, 30, 100] {
            for &p in &[1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let q = chi2_quantile(dof, p).unwrap();
                assert!((chi2_cdf(dof, q).unwrap() - p).abs() < 1e-10, "dof={dof} p={p}");
            }
        }
    }

    #[test]
    fn quantile_strictly_increasing() {
        for dof in [1u32, 4, 10] {
            let grid: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
            let qs: Vec<f64> = grid.iter().map(|&p| chi2_quantile(dof, p).unwrap()).collect();
            assert!(qs.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn quantile_domain_errors() {
        assert!(chi2_quantile(3, 0.0).is_err());
        assert!(chi2_quantile(3, 1.0).is_err());
        assert!(chi2_quantile(3, f64::NAN).is_err());
        assert!(chi2_quantile(0, 0.5).is_err());
    }
}
