//! Closed-form moments of the urn chain, the merge counts, the coalescent
//! times and the external lengths, as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::coalescent::{floor_pow, window_levels};
use crate::error::{check_sample_size, domain, Result};
use crate::law::{ratio, to_f64};

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn need_n3(n: usize) -> Result<()> {
    if n < 3 {
        return domain("undefined for n<3");
    }
    Ok(())
}

/// `E(U_k) = k(n-k)/(n-1)`.
pub fn e_u(n: usize, k: usize) -> Result<BigRational> {
    check_sample_size(n)?;
    if k > n {
        return domain(format!("k = {k} outside 0..=n"));
    }
    Ok(int(k * (n - k)) / int(n - 1))
}

/// `Cov(U_k, U_l) = k(k-1)(n-l)(n-l-1) / ((n-1)^2 (n-2))` for `k <= l`.
pub fn cov_u(n: usize, k: usize, l: usize) -> Result<BigRational> {
    need_n3(n)?;
    if !(k <= l && l <= n) {
        return domain(format!("need 0 <= k <= l <= n, got k = {k}, l = {l}"));
    }
    let num = int(k) * int(k.saturating_sub(1)) * int(n - l) * int((n - l).saturating_sub(1));
    Ok(num / (int(n - 1) * int(n - 1) * int(n - 2)))
}

fn check_level(n: usize, k: usize) -> Result<()> {
    if !(1..n).contains(&k) {
        return domain(format!("level {k} outside 1..=n-1"));
    }
    Ok(())
}

/// `E(X_k) = 2k/(n-1)`.
pub fn e_x(n: usize, k: usize) -> Result<BigRational> {
    check_sample_size(n)?;
    check_level(n, k)?;
    Ok(int(2 * k) / int(n - 1))
}

/// `Var(X_k) = 2k(n-k-1)(n-3) / ((n-1)^2 (n-2))`.
pub fn var_x(n: usize, k: usize) -> Result<BigRational> {
    need_n3(n)?;
    check_level(n, k)?;
    Ok(int(2 * k) * int(n - k - 1) * int(n - 3) / (int(n - 1) * int(n - 1) * int(n - 2)))
}

/// `Cov(X_k, X_l) = -4k(n-l-1) / ((n-1)^2 (n-2))` for `k < l`.
pub fn cov_x(n: usize, k: usize, l: usize) -> Result<BigRational> {
    need_n3(n)?;
    check_level(n, k)?;
    check_level(n, l)?;
    if k >= l {
        return domain("need k < l");
    }
    Ok(-(int(4 * k) * int(n - l - 1)) / (int(n - 1) * int(n - 1) * int(n - 2)))
}

fn check_time_index(n: usize, k: usize) -> Result<()> {
    check_sample_size(n)?;
    if !(1..=n).contains(&k) {
        return domain(format!("k = {k} outside 1..=n"));
    }
    Ok(())
}

/// `E(T_k) = 2(1/k - 1/n)`.
pub fn e_t(n: usize, k: usize) -> Result<BigRational> {
    check_time_index(n, k)?;
    Ok(ratio(2, k as i64) - ratio(2, n as i64))
}

/// `Var(T_k) = 4 sum_{j=k+1}^n 1/((j-1)^2 j^2)`.
pub fn var_t(n: usize, k: usize) -> Result<BigRational> {
    check_time_index(n, k)?;
    let mut sum = BigRational::zero();
    for j in k + 1..=n {
        let d = (j - 1) * j;
        sum += BigRational::new(BigInt::one(), BigInt::from(d) * BigInt::from(d));
    }
    Ok(sum * int(4))
}

/// `E(L_n^{alpha,beta}) = 2/(n(n-1)) (B - A)(2n + 1 - B - A)` with
/// `A = ceil(n^alpha)`, `B = ceil(n^beta)`.
pub fn e_l_window(n: usize, alpha: f64, beta: f64) -> Result<BigRational> {
    check_sample_size(n)?;
    let levels = window_levels(n, alpha, beta)?;
    let (a, b) = (levels.start as i64, levels.end as i64);
    let n = n as i64;
    Ok(ratio(2, n * (n - 1)) * ratio((b - a) * (2 * n + 1 - b - a), 1))
}

/// Leading-order window variance `8 (beta - alpha) ln(n) / n`; asymptotic only.
pub fn var_l_window_asymptotic(n: usize, alpha: f64, beta: f64) -> Result<f64> {
    check_sample_size(n)?;
    window_levels(n, alpha, beta)?;
    Ok(8.0 * (beta - alpha) * (n as f64).ln() / n as f64)
}

/// Covariance of two window lengths from the independence of times and
/// merge counts:
/// `sum_{k,l} Cov(T_k,T_l) E(X_k X_l) + E(T_k) E(T_l) Cov(X_k,X_l)`.
/// Evaluated in rationals and returned as a float.
pub fn cov_l_windows(n: usize, first: (f64, f64), second: (f64, f64)) -> Result<f64> {
    need_n3(n)?;
    let w1 = window_levels(n, first.0, first.1)?;
    let w2 = window_levels(n, second.0, second.1)?;
    let lo = w1.start.min(w2.start);
    let hi = w1.end.max(w2.end);
    let mut et = vec![BigRational::zero(); n + 1];
    let mut vt = vec![BigRational::zero(); n + 1];
    let mut ex = vec![BigRational::zero(); n + 1];
    let mut vx = vec![BigRational::zero(); n + 1];
    for k in lo..hi {
        et[k] = e_t(n, k)?;
        vt[k] = var_t(n, k)?;
        ex[k] = e_x(n, k)?;
        vx[k] = var_x(n, k)?;
    }
    let mut total = BigRational::zero();
    for k in w1.clone() {
        for l in w2.clone() {
            let cx = match k.cmp(&l) {
                std::cmp::Ordering::Equal => vx[k].clone(),
                std::cmp::Ordering::Less => cov_x(n, k, l)?,
                std::cmp::Ordering::Greater => cov_x(n, l, k)?,
            };
            let exx = &cx + &ex[k] * &ex[l];
            let ct = &vt[k.max(l)];
            total += ct * exx + &et[k] * &et[l] * cx;
        }
    }
    Ok(to_f64(&total))
}

/// Exact window variance, evaluated numerically from the decomposition above.
pub fn var_l_window_exact(n: usize, alpha: f64, beta: f64) -> Result<f64> {
    cov_l_windows(n, (alpha, beta), (alpha, beta))
}

/// `E(hat L_n^{alpha,1}) = 2 (n-m)/(n-1)` with `m = floor(n^alpha)` supplied
/// by the caller.
pub fn e_hat(n: usize, m: usize) -> Result<BigRational> {
    need_n3(n)?;
    if !(1..=n).contains(&m) {
        return domain(format!("m = {m} outside 1..=n"));
    }
    Ok(int(2 * (n - m)) / int(n - 1))
}

/// `m = floor(n^alpha)` as used by the hat length.
pub fn hat_m(n: usize, alpha: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha = {alpha} outside [0, 1]"));
    }
    Ok(floor_pow(n, alpha).max(1))
}

/// `P(rho < k) = k(k-1) / (n(n-1))`.
pub fn rho_cdf(n: usize, k: usize) -> Result<BigRational> {
    check_time_index(n, k)?;
    Ok(int(k * (k - 1)) / int(n * (n - 1)))
}

/// Moments that need harmonic numbers. The cache holds `h_0..h_{n_max}` over
/// the common denominator `lcm(1..=n_max)`, so no gcd is taken until a value
/// is handed out.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    lcm: BigInt,
    numer: Vec<BigInt>,
}

fn lcm_upto(n: usize) -> BigInt {
    let mut sieve = vec![true; n + 1];
    let mut l = BigInt::one();
    for p in 2..=n {
        if !sieve[p] {
            continue;
        }
        for q in (p * p..=n).step_by(p) {
            sieve[q] = false;
        }
        let mut pk = p;
        while pk <= n / p {
            pk *= p;
        }
        l *= pk;
    }
    l
}

fn big(v: usize) -> BigInt {
    BigInt::from(v)
}

impl MomentOracle {
    pub fn new(n_max: usize) -> Self {
        let lcm = lcm_upto(n_max);
        let mut numer = Vec::with_capacity(n_max + 1);
        let mut h = BigInt::zero();
        numer.push(h.clone());
        for j in 1..=n_max {
            h += &lcm / big(j);
            numer.push(h.clone());
        }
        Self { lcm, numer }
    }

    pub fn n_max(&self) -> usize {
        self.numer.len() - 1
    }

    fn numer(&self, j: usize) -> Result<&BigInt> {
        self.numer
            .get(j)
            .ok_or_else(|| crate::Error::Domain(format!("h_{j} beyond cache size {}", self.n_max())))
    }

    /// `h_j = 1 + 1/2 + ... + 1/j`, `h_0 = 0`.
    pub fn harmonic(&self, j: usize) -> Result<BigRational> {
        Ok(BigRational::new(self.numer(j)?.clone(), self.lcm.clone()))
    }

    /// `Var(L_n) = (8 n h_n - 16 n + 8) / ((n-1)(n-2))`.
    pub fn fu_li_var(&self, n: usize) -> Result<BigRational> {
        let (num, den) = self.fu_li_var_unreduced(n)?;
        Ok(BigRational::new(num, den))
    }

    /// `fu_li_var` as a numerator/denominator pair without the final gcd.
    pub fn fu_li_var_unreduced(&self, n: usize) -> Result<(BigInt, BigInt)> {
        need_n3(n)?;
        let num = big(8 * n) * self.numer(n)? - big(16 * n - 8) * &self.lcm;
        Ok((num, big((n - 1) * (n - 2)) * &self.lcm))
    }

    /// `Var(hat L_n^{alpha,1})` for `m = floor(n^alpha)`:
    /// `8(h_{n-1} - h_{m-1})(n+2m-2)/((n-1)(n-2)) - 4(n-m)(4n+m-5)/((n-1)^2(n-2))`.
    pub fn var_hat(&self, n: usize, m: usize) -> Result<BigRational> {
        let (num, den) = self.var_hat_unreduced(n, m)?;
        Ok(BigRational::new(num, den))
    }

    /// `var_hat` as a numerator/denominator pair without the final gcd.
    pub fn var_hat_unreduced(&self, n: usize, m: usize) -> Result<(BigInt, BigInt)> {
        need_n3(n)?;
        if !(1..=n).contains(&m) {
            return domain(format!("m = {m} outside 1..=n"));
        }
        let dh = self.numer(n - 1)? - self.numer(m - 1)?;
        let num = big(8 * (n - 1) * (n + 2 * m - 2)) * dh - big(4 * (n - m) * (4 * n + m - 5)) * &self.lcm;
        Ok((num, big((n - 1) * (n - 1) * (n - 2)) * &self.lcm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn urn_moment_examples() {
        assert_eq!(e_u(5, 2).unwrap(), ratio(3, 2));
        for l in 0..=7 {
            assert!(cov_u(7, 0, l).unwrap().is_zero());
        }
        assert!(cov_u(2, 1, 1).is_err());
        assert!(cov_u(6, 3, 2).is_err());
        assert!(e_u(5, 6).is_err());
    }

    #[test]
    fn merge_count_examples() {
        for n in 3..30 {
            let s: BigRational = (1..n).map(|k| e_x(n, k).unwrap()).sum();
            assert_eq!(s, int(n));
        }
        assert!(var_x(3, 1).unwrap().is_zero());
        assert!(var_x(3, 2).unwrap().is_zero());
        assert!(cov_x(5, 2, 2).is_err());
        assert!(e_x(5, 5).is_err());
    }

    #[test]
    fn time_examples() {
        assert!(e_t(9, 9).unwrap().is_zero());
        assert_eq!(e_t(2, 1).unwrap(), ratio(1, 1));
        assert_eq!(var_t(3, 1).unwrap(), ratio(10, 9));
        assert!(e_t(4, 0).is_err());
    }

    #[test]
    fn fu_li_small_values() {
        let oracle = MomentOracle::new(60);
        assert_eq!(oracle.harmonic(3).unwrap(), ratio(11, 6));
        assert_eq!(oracle.fu_li_var(3).unwrap(), ratio(2, 1));
        assert!(oracle.fu_li_var(2).is_err());
        assert!(oracle.fu_li_var(61).is_err());
        assert!((to_f64(&oracle.fu_li_var(50).unwrap()) - 0.42844).abs() < 5e-5);
    }

    #[test]
    fn window_mean_examples() {
        assert_eq!(e_l_window(100, 0.0, 1.0).unwrap(), ratio(2, 1));
        // A = 10, B = 100: (2/9900) * 90 * 91
        assert_eq!(e_l_window(100, 0.5, 1.0).unwrap(), ratio(2 * 90 * 91, 9900));
        let v = var_l_window_asymptotic(1000, 0.0, 1.0).unwrap();
        assert!((v - 8.0 * 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert!(e_l_window(100, 0.5, 0.5).is_err());
    }

    #[test]
    fn hat_examples() {
        assert!(e_hat(10, 10).unwrap().is_zero());
        assert_eq!(e_hat(50, hat_m(50, 0.5).unwrap()).unwrap(), ratio(86, 49));
        assert_eq!(rho_cdf(4, 2).unwrap(), ratio(1, 6));
        assert!(rho_cdf(8, 1).unwrap().is_zero());
        assert_eq!(rho_cdf(8, 8).unwrap(), ratio(1, 1));
    }
}
