//! Limit laws of the external lengths and of the urn chain.

use statrs::function::erf::erfc;

use crate::error::{domain, Result};

/// Mean number of points of the limiting Poisson process (intensity
/// `8 x^-3 dx`) in `[a, b)`: `4 (a^-2 - b^-2)`. `b` may be infinite.
pub fn poisson_mean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b) {
        return domain(format!("need 0 < a < b, got a = {a}, b = {b}"));
    }
    Ok(4.0 * (a.powi(-2) - b.powi(-2)))
}

/// CDF of the limit law of `n R_n`, density `8 (x+2)^-3`: `1 - 4/(x+2)^2`.
pub fn r_limit_cdf(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("x = {x} must be nonnegative"));
    }
    Ok(1.0 - 4.0 / ((x + 2.0) * (x + 2.0)))
}

pub fn r_limit_density(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("x = {x} must be nonnegative"));
    }
    Ok(8.0 / (x + 2.0).powi(3))
}

/// Limiting tail of `tau_n / sqrt(n)`: `exp(-t^2)`.
pub fn tau_limit_tail(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("t = {t} must be nonnegative"));
    }
    Ok((-t * t).exp())
}

fn check_unit(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("time {t} outside [0, 1]"));
    }
    Ok(())
}

/// Limit of `E(U_{floor(nt)}) / n`: `t (1 - t)`.
pub fn gp_mean(t: f64) -> Result<f64> {
    check_unit(t)?;
    Ok(t * (1.0 - t))
}

/// Covariance `s^2 (1-t)^2` of the Gaussian limit of the centered urn chain,
/// for `s <= t`; the arguments are reordered if needed.
pub fn gp_cov(s: f64, t: f64) -> Result<f64> {
    check_unit(s)?;
    check_unit(t)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    Ok(s * s * (1.0 - t) * (1.0 - t))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// The one-dimensional limit laws the verification suite tests against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    NormalStd,
    Poisson { mean: f64 },
    /// Limit of `n R_n`.
    RLimit,
    /// Limit of `tau_n / sqrt(n)`.
    TauTail,
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::NormalStd => normal_cdf(x),
            LimitLaw::Poisson { mean } => {
                if x < 0.0 {
                    return 0.0;
                }
                let kmax = x.floor() as u64;
                (0..=kmax).map(|k| poisson_pmf(mean, k)).sum::<f64>().min(1.0)
            }
            LimitLaw::RLimit => r_limit_cdf(x.max(0.0)).unwrap(),
            LimitLaw::TauTail => 1.0 - tau_limit_tail(x.max(0.0)).unwrap(),
        }
    }

    /// Density for the continuous laws, point mass for the Poisson law.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::NormalStd => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            LimitLaw::Poisson { mean } => {
                if x >= 0.0 && x.fract() == 0.0 {
                    poisson_pmf(mean, x as u64)
                } else {
                    0.0
                }
            }
            LimitLaw::RLimit => {
                if x < 0.0 {
                    0.0
                } else {
                    r_limit_density(x).unwrap()
                }
            }
            LimitLaw::TauTail => {
                if x < 0.0 {
                    0.0
                } else {
                    2.0 * x * (-x * x).exp()
                }
            }
        }
    }
}

/// `e^-mean mean^k / k!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mean.ln() - mean - statrs::function::gamma::ln_gamma(kf + 1.0)).exp()
}
