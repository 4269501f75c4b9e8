//! Estimators and goodness-of-fit tests that turn Monte Carlo samples into
//! pass/fail [`TestReport`]s.
//!
//! All reductions run sequentially in replicate order, so a report depends
//! only on the sample values and never on how they were produced.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use statrs::function::gamma::checked_gamma_ur;

use crate::coalescent::{ceil_pow, sample_merge_history};
use crate::error::{domain, Result};
use crate::limits::gp_cov;
use crate::runner::run_replicates;
use crate::urn::sample_urn_path;

/// Values of one statistic over `reps` seeded replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    n: usize,
    seed: u64,
    statistic_name: String,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>, n: usize, seed: u64, statistic_name: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return domain("empty sample");
        }
        Ok(Self { values, n, seed, statistic_name: statistic_name.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn statistic_name(&self) -> &str {
        &self.statistic_name
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Unbiased sample variance (zero for a single value).
    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Which side of the threshold passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// p-values: pass iff value >= threshold.
    #[default]
    AtLeast,
    /// Distances and error measures: pass iff value <= threshold.
    AtMost,
}

/// One named test outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub statistic: f64,
    pub p_or_distance: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    pub reps: u64,
    #[serde(skip)]
    pub direction: Direction,
}

impl TestReport {
    pub fn new(
        name: impl Into<String>,
        direction: Direction,
        statistic: f64,
        p_or_distance: f64,
        threshold: f64,
    ) -> Self {
        let pass = match direction {
            Direction::AtLeast => p_or_distance >= threshold,
            Direction::AtMost => p_or_distance <= threshold,
        };
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            statistic,
            p_or_distance,
            threshold,
            pass,
            seed: 0,
            reps: 0,
            direction,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_sample(mut self, sample: &EmpiricalSample) -> Self {
        self.seed = sample.seed;
        self.reps = sample.reps() as u64;
        self.param("n", sample.n).param("statistic_name", sample.statistic_name.clone())
    }

    pub fn with_run(mut self, seed: u64, reps: u64) -> Self {
        self.seed = seed;
        self.reps = reps;
        self
    }

    /// Renames the report, keeping everything else.
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }
}

/// Writes reports as JSON lines followed by `PASS k/k` or `FAIL j/k`, where
/// `j` counts the failures.
pub fn render_reports(reports: &[TestReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.to_json());
        out.push('\n');
    }
    out.push_str(&summary_line(reports));
    out.push('\n');
    out
}

pub fn summary_line(reports: &[TestReport]) -> String {
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        format!("PASS {}/{}", reports.len(), reports.len())
    } else {
        format!("FAIL {}/{}", failed, reports.len())
    }
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Upper tail `P(K > x)` of the Kolmogorov distribution, truncating either
/// theta-series at 100 terms.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2)) converges fast for small x
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let s: f64 = (1..=100)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * pi2 / (8.0 * x * x)).exp()
            })
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * x * x).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// `sup_x |F_emp(x) - F(x)|` for a continuous reference CDF.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Pass rule for a KS test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KsCriterion {
    /// Pass iff the asymptotic p-value is at least this.
    PValue(f64),
    /// Pass iff the distance `D` is at most this.
    Distance(f64),
}

/// One-sample Kolmogorov-Smirnov test. The report's `statistic` is `D`; its
/// `p_or_distance` is the p-value or `D` according to `criterion`, and the
/// other one is recorded under `params`.
pub fn ks_test(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64, criterion: KsCriterion) -> Result<TestReport> {
    if sample.reps() < 100 {
        return domain("KS test needs at least 100 replicates");
    }
    let d = ks_distance(&sample.values, cdf);
    let p = kolmogorov_sf(d * (sample.reps() as f64).sqrt());
    let report = match criterion {
        KsCriterion::PValue(min_p) => TestReport::new("ks", Direction::AtLeast, d, p, min_p).param("distance", d),
        KsCriterion::Distance(max_d) => TestReport::new("ks", Direction::AtMost, d, d, max_d).param("p_value", p),
    };
    Ok(report.with_sample(sample))
}

// ---------------------------------------------------------------------------
// Chi-square

/// Minimum expected count per cell after merging.
pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson goodness of fit of `counts` against cell probabilities `probs`.
/// Adjacent cells are merged from the high end until each merged cell expects
/// at least five observations; a short remainder at the low end joins the
/// lowest merged cell.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<TestReport> {
    if counts.len() != probs.len() {
        return domain("counts and probabilities differ in length");
    }
    if probs.iter().any(|&p| !(p >= 0.0)) {
        return domain("cell probabilities must be nonnegative");
    }
    let total_p: f64 = probs.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 {
        return domain(format!("cell probabilities sum to {total_p}"));
    }
    let reps: u64 = counts.iter().sum();
    if reps == 0 {
        return domain("no observations");
    }
    let reps_f = reps as f64;

    let mut cells: Vec<(u64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0u64, 0.0f64);
    for (&c, &p) in counts.iter().zip(probs).rev() {
        obs += c;
        exp += p * reps_f;
        if exp >= MIN_EXPECTED {
            cells.push((obs, exp));
            obs = 0;
            exp = 0.0;
        }
    }
    if obs > 0 || exp > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    if cells.len() < 2 {
        return domain("fewer than 2 cells after merging");
    }
    let stat: f64 = cells
        .iter()
        .map(|&(o, e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = (cells.len() - 1) as f64;
    let p = if stat <= 0.0 {
        1.0
    } else {
        checked_gamma_ur(dof / 2.0, stat / 2.0).map_err(|e| crate::Error::Domain(e.to_string()))?
    };
    Ok(TestReport::new("chi_square", Direction::AtLeast, stat, p, 0.001)
        .param("cells", cells.len())
        .param("dof", dof)
        .with_run(0, reps))
}

/// Tallies integer observations into cells `0..len`, with `len` large enough
/// for both the observations and the reference probabilities.
pub fn tally(values: &[usize], min_len: usize) -> Vec<u64> {
    let len = values.iter().map(|&v| v + 1).max().unwrap_or(0).max(min_len);
    let mut counts = vec![0u64; len];
    for &v in values {
        counts[v] += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// Moment tests

/// Number of standard errors allowed by [`mean_test`].
pub const MEAN_TEST_Z: f64 = 4.0;

/// z-test of the sample mean against an exact mean. The standard error uses
/// `exact_var` when given and the sample variance otherwise.
pub fn mean_test(sample: &EmpiricalSample, exact_mean: f64, exact_var: Option<f64>) -> Result<TestReport> {
    if sample.reps() < 1000 {
        return domain("mean test needs at least 1000 replicates");
    }
    let m = sample.mean();
    let var = exact_var.unwrap_or_else(|| sample.variance());
    let se = (var / sample.reps() as f64).sqrt();
    let z = if se > 0.0 {
        (m - exact_mean) / se
    } else if m == exact_mean {
        0.0
    } else {
        f64::INFINITY
    };
    let mut report = TestReport::new("mean", Direction::AtMost, m, z.abs(), MEAN_TEST_Z)
        .param("exact_mean", exact_mean)
        .param("standard_error", se)
        .param("variance_source", if exact_var.is_some() { "exact" } else { "sample" })
        .with_sample(sample);
    if se == 0.0 && !report.pass {
        report = report.param("diagnostic", "zero variance but the sample mean differs from the exact mean");
    }
    Ok(report)
}

/// Passes iff the sample variance is within `rel_tol * exact_var` of `exact_var`.
pub fn variance_test(sample: &EmpiricalSample, exact_var: f64, rel_tol: f64) -> Result<TestReport> {
    if sample.reps() < 10_000 {
        return domain("variance test needs at least 10^4 replicates");
    }
    let v = sample.variance();
    let rel = (v - exact_var).abs() / exact_var;
    Ok(TestReport::new("variance", Direction::AtMost, v, rel, rel_tol)
        .param("exact_variance", exact_var)
        .with_sample(sample))
}

/// Pearson correlation of paired samples; passes iff
/// `|corr| <= 4/sqrt(reps) + 0.02`.
pub fn independence_check(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<TestReport> {
    if a.reps() != b.reps() {
        return domain("paired samples differ in length");
    }
    let (ma, mb) = (a.mean(), b.mean());
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let corr = if saa > 0.0 && sbb > 0.0 { sab / (saa * sbb).sqrt() } else { 0.0 };
    let threshold = 4.0 / (a.reps() as f64).sqrt() + 0.02;
    Ok(TestReport::new("independence", Direction::AtMost, corr, corr.abs(), threshold)
        .param("first", a.statistic_name.clone())
        .param("second", b.statistic_name.clone())
        .with_sample(a))
}

// ---------------------------------------------------------------------------
// Simulation-backed checks

const GP_DOMAIN: u64 = 0x6770;
const VANISHING_DOMAIN: u64 = 0x7434;

/// Checks the Gaussian limit of `W(t) = n^-1/2 (U_floor(nt) - n t (1-t))`:
/// for each grid pair `(s, t)` the Monte Carlo mean of `W(s) W(t)` must be
/// within `0.01 + 4 SE` of `s^2 (1-t)^2`, and at each grid time the mean of
/// `W` must be within `4 SE` of zero.
///
/// The report's `p_or_distance` is the largest excess over the allowed band
/// (nonpositive when everything passes).
pub fn gp_check(n: usize, grid: &[(f64, f64)], reps: usize, seed: u64, threads: usize) -> Result<TestReport> {
    if grid.is_empty() {
        return domain("grid empty");
    }
    if n < 500 {
        return domain("Gaussian process check needs n >= 500");
    }
    if reps < 2 {
        return domain("need at least 2 replicates");
    }
    if grid.iter().any(|&(s, t)| !(0.0 < s && s <= t && t < 1.0)) {
        return domain("grid points need 0 < s <= t < 1");
    }
    let mut times: Vec<f64> = grid.iter().flat_map(|&(s, t)| [s, t]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let nf = n as f64;
    let index = |t: f64| (nf * t).floor() as usize;

    let paths = run_replicates(reps, seed, GP_DOMAIN, threads, |_, rng| {
        let path = sample_urn_path(n, rng).expect("n validated");
        times
            .iter()
            .map(|&t| (path.get(index(t)) as f64 - nf * t * (1.0 - t)) / nf.sqrt())
            .collect::<Vec<f64>>()
    });
    let col = |t: f64| times.iter().position(|&x| x == t).unwrap();

    let mut worst = f64::NEG_INFINITY;
    let mut report_cells = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let w: Vec<f64> = paths.iter().map(|row| row[j]).collect();
        let m = mean(&w);
        let se = (variance(&w) / reps as f64).sqrt();
        worst = worst.max(m.abs() - MEAN_TEST_Z * se);
        report_cells.push(serde_json::json!({ "t": t, "mean": m, "se": se }));
    }
    for &(s, t) in grid {
        let (i, j) = (col(s), col(t));
        let prod: Vec<f64> = paths.iter().map(|row| row[i] * row[j]).collect();
        let est = mean(&prod);
        let se = (variance(&prod) / reps as f64).sqrt();
        let target = gp_cov(s, t)?;
        let allowed = 0.01 + MEAN_TEST_Z * se;
        worst = worst.max((est - target).abs() - allowed);
        report_cells.push(serde_json::json!({ "s": s, "t": t, "cov": est, "target": target, "allowed": allowed }));
    }
    Ok(TestReport::new("gp_covariance", Direction::AtMost, worst, worst, 0.0)
        .param("n", n)
        .param("cells", Value::Array(report_cells))
        .with_run(seed, reps as u64))
}

/// Checks `P(L_n^{0,beta} > 0) <= B(B-1)/(n-1)`, `B = ceil(n^beta)`, up to
/// `4` binomial standard errors evaluated at the bound. Since `T_k > 0` for
/// every `k < n`, the window length is positive exactly when some `X_k > 0`
/// with `k < B`.
pub fn vanishing_window_check(n: usize, beta: f64, reps: usize, seed: u64, threads: usize) -> Result<TestReport> {
    if !(0.0..0.5).contains(&beta) {
        return domain("need 0 <= beta < 1/2");
    }
    crate::error::check_sample_size(n)?;
    if reps == 0 {
        return domain("need at least one replicate");
    }
    let b = ceil_pow(n, beta);
    let bound = (b * (b - 1)) as f64 / (n - 1) as f64;
    let positive = run_replicates(reps, seed, VANISHING_DOMAIN, threads, |_, rng| {
        let hist = sample_merge_history(n, rng).expect("n validated");
        (1..b.min(n)).any(|k| hist.x(k) > 0)
    });
    let hits = positive.iter().filter(|&&p| p).count();
    let freq = hits as f64 / reps as f64;
    let se = (bound * (1.0 - bound).max(0.0) / reps as f64).sqrt();
    Ok(TestReport::new("vanishing_window_bound", Direction::AtMost, freq, freq, bound + MEAN_TEST_Z * se)
        .param("n", n)
        .param("beta", beta)
        .param("levels", b)
        .param("bound", bound)
        .with_run(seed, reps as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_reference_values() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_sf(0.5) - 0.963_945_243_664_875).abs() < 1e-10);
        assert!((kolmogorov_sf(1.0) - 0.269_999_671_677_354_6).abs() < 1e-10);
        assert!((kolmogorov_sf(2.0) - 0.000_670_925_255_779_7).abs() < 1e-10);
    }

    #[test]
    fn constant_sample_fails_ks() {
        let s = EmpiricalSample::new(vec![0.0; 500], 1, 0, "const").unwrap();
        let r = ks_test(&s, crate::limits::normal_cdf, KsCriterion::PValue(0.001)).unwrap();
        assert!(r.statistic >= 0.5);
        assert!(!r.pass);
        let few = EmpiricalSample::new(vec![0.0; 10], 1, 0, "few").unwrap();
        assert!(ks_test(&few, crate::limits::normal_cdf, KsCriterion::PValue(0.001)).is_err());
        assert!(EmpiricalSample::new(vec![], 1, 0, "empty").is_err());
    }

    #[test]
    fn chi_square_merging() {
        // expected 50, 30, 15, 4, 1: the last two merge into a cell of 5
        let probs = [0.5, 0.3, 0.15, 0.04, 0.01];
        let counts = [50, 30, 15, 4, 1];
        let r = chi_square_gof(&counts, &probs).unwrap();
        assert_eq!(r.params["cells"], 4);
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_or_distance - 1.0).abs() < 1e-12);
        assert!(chi_square_gof(&[3, 1], &[0.5, 0.5]).is_err());
        assert!(chi_square_gof(&[3, 1], &[0.5, 0.4]).is_err());
    }

    #[test]
    fn chi_square_tail_matches_closed_form() {
        // dof 2: survival is exp(-x/2)
        let counts = [60, 25, 15];
        let probs = [0.5, 0.3, 0.2];
        let r = chi_square_gof(&counts, &probs).unwrap();
        assert!((r.p_or_distance - (-r.statistic / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn mean_test_zero_variance() {
        let s = EmpiricalSample::new(vec![1.0; 1000], 2, 0, "c").unwrap();
        assert!(mean_test(&s, 1.0, None).unwrap().pass);
        let r = mean_test(&s, 2.0, None).unwrap();
        assert!(!r.pass);
        assert!(r.params.contains_key("diagnostic"));
    }

    #[test]
    fn identical_samples_are_dependent() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let a = EmpiricalSample::new(v.clone(), 1, 0, "a").unwrap();
        let r = independence_check(&a, &a).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!(!r.pass);
        let b = EmpiricalSample::new(v[..999].to_vec(), 1, 0, "b").unwrap();
        assert!(independence_check(&a, &b).is_err());
    }

    #[test]
    fn summary_lines() {
        let ok = TestReport::new("a", Direction::AtLeast, 0.0, 0.5, 0.001);
        let bad = TestReport::new("b", Direction::AtMost, 0.0, 0.5, 0.001);
        assert_eq!(summary_line(&[ok.clone(), ok.clone()]), "PASS 2/2");
        assert_eq!(summary_line(&[ok, bad]), "FAIL 1/2");
    }

    #[test]
    fn argument_errors() {
        assert!(gp_check(2000, &[], 10, 0, 1).is_err());
        assert!(gp_check(100, &[(0.5, 0.5)], 10, 0, 1).is_err());
        assert!(gp_check(1000, &[(0.6, 0.5)], 10, 0, 1).is_err());
        assert!(vanishing_window_check(100, 0.5, 10, 0, 1).is_err());
    }
}
