//! The verification suites: exact rational checks and seeded Monte Carlo
//! checks, one or more [`TestReport`]s per criterion.

use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::coalescent::{
    hat_external_length, sample_merge_history, sample_rho_single, sample_waiting_times,
    scaled_point_pattern, single_branch_length, total_external_length, window_external_length,
};
use crate::error::{Error, Result};
use crate::law::{ratio, to_f64};
use crate::limits::{poisson_mean, poisson_pmf, r_limit_cdf, tau_limit_tail, LimitLaw};
use crate::moments::{cov_u, e_hat, e_u, hat_m, MomentOracle};
use crate::runner::run_replicates;
use crate::stats::{
    chi_square_gof, gp_check, independence_check, ks_test, mean_test, tally, vanishing_window_check,
    variance_test, Direction, EmpiricalSample, KsCriterion, TestReport,
};
use crate::urn::{
    chain_moments, exact_box_scheme_law, exact_marginals, exact_path_law, exact_permutation_law,
    hypergeometric_pmf, reverse_path, sample_urn_path, tau, transition_probs, UrnPath,
};

/// Seed used by the acceptance run.
pub const ACCEPTANCE_SEED: u64 = 7;
/// Significance floor for every p-value gate.
pub const SIGNIFICANCE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Exact,
    Statistical,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Suite::Exact),
            "statistical" => Ok(Suite::Statistical),
            "all" => Ok(Suite::All),
            other => Err(Error::Domain(format!("unknown suite {other:?}"))),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, threads: usize) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    if matches!(suite, Suite::Exact | Suite::All) {
        reports.extend(exact_suite()?);
    }
    if matches!(suite, Suite::Statistical | Suite::All) {
        reports.extend(statistical_suite(seed, threads)?);
    }
    Ok(reports)
}

fn exact_report(criterion: u32, name: &str, checked: usize, mismatches: usize) -> TestReport {
    TestReport::new(name, Direction::AtMost, mismatches as f64, mismatches as f64, 0.0)
        .param("criterion", criterion)
        .param("checked", checked)
}

fn tag(report: TestReport, criterion: u32, name: &str) -> TestReport {
    report.named(name).param("criterion", criterion)
}

// ---------------------------------------------------------------------------
// Exact suite

pub fn exact_suite() -> Result<Vec<TestReport>> {
    Ok(vec![
        check_reversibility()?,
        check_urn_moments()?,
        check_hypergeometric_marginals()?,
        check_permutation_representation()?,
        check_box_scheme()?,
        check_fu_li_identity()?,
        check_martingale_identity()?,
        check_tau_tail()?,
    ])
}

/// Path law invariant under time reversal, `2 <= n <= 9`.
pub fn check_reversibility() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=9 {
        let law = exact_path_law(n)?;
        for (path, p) in law.iter() {
            let rev = reverse_path(&UrnPath::new(path.clone())?).into_values();
            checked += 1;
            if law.prob(&rev) != *p {
                bad += 1;
            }
        }
    }
    Ok(exact_report(1, "path_law_reversibility", checked, bad))
}

/// Dynamic-programming means and covariances against the closed forms, `n <= 12`.
pub fn check_urn_moments() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=12 {
        let dp = chain_moments(n)?;
        for k in 0..=n {
            checked += 1;
            if dp.mean[k] != e_u(n, k)? {
                bad += 1;
            }
            if n < 3 {
                continue;
            }
            for l in k..=n {
                checked += 1;
                if dp.cov[k][l] != cov_u(n, k, l)? {
                    bad += 1;
                }
            }
        }
    }
    Ok(exact_report(2, "urn_moments", checked, bad))
}

/// `U_k - 1` is hypergeometric, `1 <= k <= n-1`, `n <= 50`.
pub fn check_hypergeometric_marginals() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=50 {
        let laws = exact_marginals(n)?;
        for (k, law) in laws.iter().enumerate().take(n).skip(1) {
            for u in 0..=n {
                let expected = if u == 0 { BigRational::zero() } else { hypergeometric_pmf(n, k, u - 1)? };
                checked += 1;
                if law.prob(&u) != expected {
                    bad += 1;
                }
            }
        }
    }
    Ok(exact_report(3, "hypergeometric_marginal", checked, bad))
}

/// All `((n-1)!)^2` permutation pairs reproduce the path law, `n <= 6`.
pub fn check_permutation_representation() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=6 {
        checked += 1;
        if exact_permutation_law(n)? != exact_path_law(n)? {
            bad += 1;
        }
    }
    Ok(exact_report(4, "permutation_representation", checked, bad))
}

/// The box scheme reproduces the path law, `n <= 5`.
pub fn check_box_scheme() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=5 {
        checked += 1;
        if exact_box_scheme_law(n)? != exact_path_law(n)? {
            bad += 1;
        }
    }
    Ok(exact_report(5, "box_scheme_law", checked, bad))
}

/// `var_hat(n, 1) == fu_li_var(n)`, `3 <= n <= 10^4`.
pub fn check_fu_li_identity() -> Result<TestReport> {
    const N_MAX: usize = 10_000;
    let oracle = MomentOracle::new(N_MAX);
    let (mut checked, mut bad) = (0, 0);
    for n in 3..=N_MAX {
        checked += 1;
        let (a, b) = oracle.var_hat_unreduced(n, 1)?;
        let (c, d) = oracle.fu_li_var_unreduced(n)?;
        if a * d != c * b {
            bad += 1;
        }
    }
    Ok(exact_report(6, "hat_variance_recovers_fu_li", checked, bad))
}

/// `E(U_{k+1} | U_k = u) = (n-k-2)/(n-k) u + 1` for every state, `n <= 100`.
pub fn check_martingale_identity() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=100 {
        for k in 0..n {
            let states: Vec<usize> = if k == n - 1 { vec![1] } else { (0..=n - k).collect() };
            for u in states {
                let [down, stay, up] = transition_probs(n, k, u)?;
                let uq = ratio(u as i64, 1);
                let drift = down * (&uq - BigRational::one()) + stay * &uq + up * (&uq + BigRational::one());
                let expected = ratio((n - k) as i64 - 2, (n - k) as i64) * &uq + BigRational::one();
                checked += 1;
                if drift != expected {
                    bad += 1;
                }
            }
        }
    }
    Ok(exact_report(7, "martingale_identity", checked, bad))
}

/// `P(tau_n >= k)` from path enumeration equals the product formula, `n <= 9`.
pub fn check_tau_tail() -> Result<TestReport> {
    let (mut checked, mut bad) = (0, 0);
    for n in 2..=9 {
        let law = exact_path_law(n)?;
        let tau_law = law.push_forward(|p| tau(&UrnPath::new(p.clone()).expect("enumerated paths are valid")));
        for k in 1..=n {
            let tail = tau_law
                .iter()
                .filter(|(t, _)| **t >= k)
                .fold(BigRational::zero(), |acc, (_, p)| acc + p);
            checked += 1;
            if tail != crate::urn::tau_exact_tail(n, k)? {
                bad += 1;
            }
        }
    }
    Ok(exact_report(8, "tau_exact_tail", checked, bad))
}

// ---------------------------------------------------------------------------
// Statistical suite

/// Runs criteria 9 to 17. Each criterion draws from its own stream domain so
/// criteria do not share random numbers.
pub fn statistical_suite(seed: u64, threads: usize) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    out.extend(check_total_length(seed, threads)?);
    out.push(check_hat_normality(seed, threads)?);
    out.extend(check_poisson_counts(seed, threads)?);
    out.push(check_vanishing_window(seed, threads)?);
    out.push(check_tau_limit(seed, threads)?);
    out.push(check_single_branch(seed, threads)?);
    out.push(check_gaussian_process(seed, threads)?);
    out.push(check_window_independence(seed, threads)?);
    Ok(out)
}

fn sample(values: Vec<f64>, n: usize, seed: u64, name: &str) -> Result<EmpiricalSample> {
    EmpiricalSample::new(values, n, seed, name)
}

/// Mean and variance of `L_50` over `10^5` replicates.
pub fn check_total_length(seed: u64, threads: usize) -> Result<Vec<TestReport>> {
    let (n, reps) = (50, 100_000);
    let values = run_replicates(reps, seed, 9, threads, |_, rng| {
        let t = sample_waiting_times(n, rng).expect("n >= 2");
        let h = sample_merge_history(n, rng).expect("n >= 2");
        total_external_length(&t, &h).expect("same n")
    });
    let s = sample(values, n, seed, "L")?;
    let var = to_f64(&MomentOracle::new(n).fu_li_var(n)?);
    Ok(vec![
        tag(mean_test(&s, 2.0, Some(var))?, 9, "total_length_mean"),
        tag(variance_test(&s, var, 0.05)?, 10, "total_length_variance"),
    ])
}

/// `hat L_50^{1/2,1}` standardized with its exact mean and variance, KS
/// against N(0,1).
pub fn check_hat_normality(seed: u64, threads: usize) -> Result<TestReport> {
    let (n, reps, alpha) = (50, 10_000, 0.5);
    let m = hat_m(n, alpha)?;
    let mean = to_f64(&e_hat(n, m)?);
    let sd = to_f64(&MomentOracle::new(n).var_hat(n, m)?).sqrt();
    let values = run_replicates(reps, seed, 11, threads, |_, rng| {
        let t = sample_waiting_times(n, rng).expect("n >= 2");
        let h = sample_merge_history(n, rng).expect("n >= 2");
        (hat_external_length(&t, &h, alpha, 1.0).expect("valid window") - mean) / sd
    });
    let s = sample(values, n, seed, "L_hat_standardized")?;
    let law = LimitLaw::NormalStd;
    Ok(tag(ks_test(&s, |x| law.cdf(x), KsCriterion::PValue(SIGNIFICANCE))?, 11, "hat_length_normality")
        .param("m", m))
}

/// Counts of `eta_n` on `[1, 2)` at `n = 10^4` against Poisson(3).
pub fn check_poisson_counts(seed: u64, threads: usize) -> Result<Vec<TestReport>> {
    let (n, reps, a, b) = (10_000, 10_000, 1.0, 2.0);
    let lambda = poisson_mean(a, b)?;
    let counts = run_replicates(reps, seed, 12, threads, |_, rng| {
        let t = sample_waiting_times(n, rng).expect("n >= 2");
        let h = sample_merge_history(n, rng).expect("n >= 2");
        scaled_point_pattern(&t, &h).expect("same n").count_in(a, b)
    });
    let cells = tally(&counts, 25);
    let mut probs: Vec<f64> = (0..cells.len() as u64 - 1).map(|k| poisson_pmf(lambda, k)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi = chi_square_gof(&cells, &probs)?
        .with_run(seed, reps as u64)
        .param("n", n)
        .param("poisson_mean", lambda);
    let s = sample(counts.iter().map(|&c| c as f64).collect(), n, seed, "eta_count")?;
    Ok(vec![
        tag(chi, 12, "poisson_counts_chi_square"),
        tag(mean_test(&s, lambda, None)?, 12, "poisson_counts_mean"),
    ])
}

/// `P(L^{0,1/4}_{10^4} > 0)` against its explicit finite-n bound.
pub fn check_vanishing_window(seed: u64, threads: usize) -> Result<TestReport> {
    Ok(tag(vanishing_window_check(10_000, 0.25, 10_000, seed ^ 13, threads)?, 13, "vanishing_window_bound")
        .with_run(seed, 10_000))
}

/// `tau_n / sqrt(n)` at `n = 10^4` against the tail `exp(-t^2)`.
pub fn check_tau_limit(seed: u64, threads: usize) -> Result<TestReport> {
    let (n, reps) = (10_000, 10_000);
    let scale = (n as f64).sqrt();
    let values = run_replicates(reps, seed, 14, threads, |_, rng| {
        tau(&sample_urn_path(n, rng).expect("n >= 2")) as f64 / scale
    });
    let s = sample(values, n, seed, "tau_scaled")?;
    Ok(tag(
        ks_test(&s, |t| 1.0 - tau_limit_tail(t.max(0.0)).unwrap(), KsCriterion::Distance(0.03))?,
        14,
        "tau_limit",
    ))
}

/// `n R_n` at `n = 10^3` against the CDF `1 - 4/(x+2)^2`.
pub fn check_single_branch(seed: u64, threads: usize) -> Result<TestReport> {
    let (n, reps) = (1000, 100_000);
    let values = run_replicates(reps, seed, 15, threads, |_, rng| {
        let rho = sample_rho_single(n, rng).expect("n >= 2");
        let t = sample_waiting_times(n, rng).expect("n >= 2");
        n as f64 * single_branch_length(&t, rho).expect("rho in range").0
    });
    let s = sample(values, n, seed, "n_R")?;
    Ok(tag(
        ks_test(&s, |x| r_limit_cdf(x.max(0.0)).unwrap(), KsCriterion::Distance(0.05))?,
        15,
        "single_branch_limit",
    ))
}

/// Covariance and mean of the centered urn chain at `n = 2000`.
pub fn check_gaussian_process(seed: u64, threads: usize) -> Result<TestReport> {
    let ts = [0.25, 0.5, 0.75];
    let grid: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&s| ts.iter().filter(move |&&t| s <= t).map(move |&t| (s, t)))
        .collect();
    Ok(tag(gp_check(2000, &grid, 10_000, seed ^ 16, threads)?, 16, "gaussian_process_covariance")
        .with_run(seed, 10_000))
}

/// Correlation of `L^{1/2,3/4}` and `L^{3/4,1}` at `n = 200`.
pub fn check_window_independence(seed: u64, threads: usize) -> Result<TestReport> {
    let (n, reps) = (200, 10_000);
    let pairs = run_replicates(reps, seed, 17, threads, |_, rng| {
        let t = sample_waiting_times(n, rng).expect("n >= 2");
        let h = sample_merge_history(n, rng).expect("n >= 2");
        (
            window_external_length(&t, &h, 0.5, 0.75).expect("valid window"),
            window_external_length(&t, &h, 0.75, 1.0).expect("valid window"),
        )
    });
    let a = sample(pairs.iter().map(|p| p.0).collect(), n, seed, "L_0.5_0.75")?;
    let b = sample(pairs.iter().map(|p| p.1).collect(), n, seed, "L_0.75_1")?;
    Ok(tag(independence_check(&a, &b)?, 17, "window_independence"))
}
