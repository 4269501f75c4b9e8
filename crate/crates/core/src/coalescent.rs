//! Kingman coalescent realizations and their external-branch functionals.
//!
//! Levels are indexed as in the usual tree picture: `T_k` is the time at
//! which the coalescent has just reached `k` blocks (`T_n = 0` at the leaves),
//! and `X_k` counts the leaves whose external branch ends at level `k`.

use rand::Rng;

use crate::error::{check_sample_size, domain, Result};
use crate::rng::unit_exponential;
use crate::urn::{sample_urn_path, UrnPath};

/// Coalescent times `T_1 > T_2 > ... > T_n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentTimes {
    // t[k - 1] = T_k
    t: Vec<f64>,
}

impl CoalescentTimes {
    /// Validates a user-supplied sequence `T_1, ..., T_n`.
    pub fn new(t: Vec<f64>) -> Result<Self> {
        check_sample_size(t.len())?;
        if *t.last().unwrap() != 0.0 {
            return domain("T_n must be 0");
        }
        if t.iter().any(|x| !x.is_finite()) {
            return domain("coalescent times must be finite");
        }
        if t.windows(2).any(|w| w[0] <= w[1]) {
            return domain("coalescent times must be strictly decreasing");
        }
        Ok(Self { t })
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// `T_k` for `1 <= k <= n`.
    pub fn t(&self, k: usize) -> f64 {
        self.t[k - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }
}

/// Draws the waiting times: `C(k,2) (T_{k-1} - T_k)` are independent unit
/// exponentials for `k = n, ..., 2`.
pub fn sample_waiting_times<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CoalescentTimes> {
    check_sample_size(n)?;
    let mut t = vec![0.0; n];
    for k in (2..=n).rev() {
        let pairs = (k * (k - 1) / 2) as f64;
        t[k - 2] = t[k - 1] + unit_exponential(rng) / pairs;
    }
    Ok(CoalescentTimes { t })
}

/// External-branch counts `X_1..X_{n-1}` and internal-branch counts
/// `V_0..V_n`, linked by `X_k = 1 + V_k - V_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeHistory {
    // x[k - 1] = X_k
    x: Vec<u8>,
    v: Vec<i64>,
}

impl MergeHistory {
    /// Embeds an urn path: `V_k = U_{n-k}`.
    pub fn from_urn_path(path: &UrnPath) -> Self {
        let n = path.n();
        let v: Vec<i64> = (0..=n).map(|k| path.get(n - k) as i64).collect();
        let x = (1..n).map(|k| (1 + v[k] - v[k + 1]) as u8).collect();
        Self { x, v }
    }

    /// Builds a history from the counts `X_1..X_{n-1}` and checks every
    /// invariant of a genuine coalescent.
    pub fn from_counts(x: Vec<u8>) -> Result<Self> {
        let h = Self::from_counts_unchecked(x);
        h.validate()?;
        Ok(h)
    }

    /// Like [`MergeHistory::from_counts`] without the invariant checks, for
    /// evaluating the functionals on hypothetical count vectors.
    pub fn from_counts_unchecked(x: Vec<u8>) -> Self {
        let n = x.len() + 1;
        let mut v = vec![0i64; n + 1];
        for k in (1..n).rev() {
            v[k] = v[k + 1] + x[k - 1] as i64 - 1;
        }
        Self { x, v }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        check_sample_size(n)?;
        if self.x.iter().any(|&c| c > 2) {
            return domain("X_k must lie in {0, 1, 2}");
        }
        if self.x.iter().map(|&c| c as usize).sum::<usize>() != n {
            return domain("external branch counts must total n");
        }
        if self.v[1] != 1 || self.v[n] != 0 {
            return domain("need V_1 = 1 and V_n = 0");
        }
        for k in 1..n {
            if self.v[k] < 1 || self.v[k] > k.min(n - k) as i64 {
                return domain(format!("V_{k} = {} outside 1..=min(k, n-k)", self.v[k]));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.len() + 1
    }

    /// `X_k` for `1 <= k <= n-1`.
    pub fn x(&self, k: usize) -> u8 {
        self.x[k - 1]
    }

    /// `V_k` for `0 <= k <= n`.
    pub fn v(&self, k: usize) -> i64 {
        self.v[k]
    }

    pub fn counts(&self) -> &[u8] {
        &self.x
    }
}

/// Merge history drawn through the urn chain.
pub fn sample_merge_history<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MergeHistory> {
    Ok(MergeHistory::from_urn_path(&sample_urn_path(n, rng)?))
}

/// `rho(i)` for every leaf: the level of the internal node its external
/// branch attaches to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledHistory {
    // rho[i - 1] = rho(i)
    rho: Vec<usize>,
}

impl LabeledHistory {
    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// `rho(i)` for leaves `1..=n`.
    pub fn rho(&self, i: usize) -> usize {
        self.rho[i - 1]
    }

    pub fn levels(&self) -> &[usize] {
        &self.rho
    }

    /// `X_k = #{i : rho(i) = k}`.
    pub fn merge_counts(&self) -> Vec<u8> {
        let mut x = vec![0u8; self.n() - 1];
        for &k in &self.rho {
            x[k - 1] += 1;
        }
        x
    }

    pub fn to_merge_history(&self) -> Result<MergeHistory> {
        MergeHistory::from_counts(self.merge_counts())
    }
}

/// Runs the partition chain `pi_n -> pi_1` on labeled leaves, merging a
/// uniformly chosen unordered pair of blocks at each step.
pub fn sample_labeled_history<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<LabeledHistory> {
    check_sample_size(n)?;
    // Some(i) marks the singleton block {i}; merged blocks are None.
    let mut blocks: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut rho = vec![0usize; n];
    for k in (2..=n).rev() {
        let i = rng.random_range(0..k);
        let mut j = rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        for b in [i, j] {
            if let Some(leaf) = blocks[b] {
                rho[leaf] = k - 1;
            }
        }
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        blocks.swap_remove(hi);
        blocks.swap_remove(lo);
        blocks.push(None);
    }
    Ok(LabeledHistory { rho })
}

/// `rho(1)` alone: walking down from `n` blocks, the leaf's singleton is
/// merged on the way from `k` to `k - 1` blocks with probability `2/k`.
pub fn sample_rho_single<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<usize> {
    check_sample_size(n)?;
    for k in (3..=n).rev() {
        if rng.random_range(0..k) < 2 {
            return Ok(k - 1);
        }
    }
    Ok(1)
}

fn check_same_n(times: &CoalescentTimes, hist: &MergeHistory) -> Result<usize> {
    if times.n() != hist.n() {
        return domain(format!("times are for n = {} but history for n = {}", times.n(), hist.n()));
    }
    Ok(times.n())
}

fn check_window(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || alpha >= beta {
        return domain(format!("need 0 <= alpha < beta <= 1, got alpha = {alpha}, beta = {beta}"));
    }
    Ok(())
}

/// `n^e` rounded to the nearest integer if it is within floating round-off of
/// one, otherwise `None`.
fn integral_power(n: usize, e: f64) -> (f64, Option<usize>) {
    let p = (n as f64).powf(e);
    let r = p.round();
    if (p - r).abs() <= 1e-9 * p.max(1.0) {
        (p, Some(r as usize))
    } else {
        (p, None)
    }
}

/// `ceil(n^e)`, exact for integral powers such as `100^0.5`.
pub fn ceil_pow(n: usize, e: f64) -> usize {
    match integral_power(n, e) {
        (_, Some(r)) => r,
        (p, None) => p.ceil() as usize,
    }
}

/// `floor(n^e)`, exact for integral powers.
pub fn floor_pow(n: usize, e: f64) -> usize {
    match integral_power(n, e) {
        (_, Some(r)) => r,
        (p, None) => p.floor() as usize,
    }
}

/// Integer levels `k` with `n^alpha <= k < n^beta`, as the half-open range
/// `ceil(n^alpha)..ceil(n^beta)`.
pub fn window_levels(n: usize, alpha: f64, beta: f64) -> Result<std::ops::Range<usize>> {
    check_window(alpha, beta)?;
    Ok(ceil_pow(n, alpha)..ceil_pow(n, beta))
}

/// `L_n = sum_k T_k X_k`.
pub fn total_external_length(times: &CoalescentTimes, hist: &MergeHistory) -> Result<f64> {
    let n = check_same_n(times, hist)?;
    Ok(level_sum(times, hist, 1..n))
}

fn level_sum(times: &CoalescentTimes, hist: &MergeHistory, levels: std::ops::Range<usize>) -> f64 {
    let mut sum = 0.0;
    for k in levels {
        sum += times.t(k) * hist.x(k) as f64;
    }
    sum
}

/// `L_n^{alpha,beta}`: external length of the branches attached at levels
/// `n^alpha <= k < n^beta`.
pub fn window_external_length(
    times: &CoalescentTimes,
    hist: &MergeHistory,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    check_same_n(times, hist)?;
    let levels = window_levels(times.n(), alpha, beta)?;
    Ok(level_sum(times, hist, levels))
}

/// `floor(n^alpha)` and `floor(n^beta)`: the truncation levels of the hat
/// length.
pub fn hat_levels(n: usize, alpha: f64, beta: f64) -> Result<(usize, usize)> {
    check_window(alpha, beta)?;
    Ok((floor_pow(n, alpha).max(1), floor_pow(n, beta).min(n)))
}

/// `hat L_n^{alpha,beta}`: the part of the external length lying between
/// `T_M` and `T_m` with `m = floor(n^alpha)`, `M = floor(n^beta)`, summed leaf
/// by leaf as `sum_i (T_rho(i) ^ T_m - T_rho(i) ^ T_M)`.
pub fn hat_external_length(
    times: &CoalescentTimes,
    hist: &MergeHistory,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let n = check_same_n(times, hist)?;
    let (m, big_m) = hat_levels(n, alpha, beta)?;
    let (tm, t_big_m) = (times.t(m), times.t(big_m));
    let mut sum = 0.0;
    for k in 1..n {
        let tk = times.t(k);
        sum += hist.x(k) as f64 * (tk.min(tm) - tk.min(t_big_m));
    }
    Ok(sum)
}

/// The same quantity from the level increments: between levels `k - 1` and
/// `k` there are `k - V_k` external branches, so the length is
/// `sum_{m < k <= M} (T_{k-1} - T_k)(k - V_k)`.
pub fn hat_external_length_increments(
    times: &CoalescentTimes,
    hist: &MergeHistory,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let n = check_same_n(times, hist)?;
    let (m, big_m) = hat_levels(n, alpha, beta)?;
    let mut sum = 0.0;
    for k in m + 1..=big_m {
        sum += (times.t(k - 1) - times.t(k)) * (k as i64 - hist.v(k)) as f64;
    }
    Ok(sum)
}

/// The point process `eta_n`: atoms `sqrt(n) T_k` with multiplicity `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPointPattern {
    atoms: Vec<(f64, u8)>,
}

impl ScaledPointPattern {
    /// Atoms with positive multiplicity, as `(location, multiplicity)`.
    pub fn atoms(&self) -> &[(f64, u8)] {
        &self.atoms
    }

    pub fn total_multiplicity(&self) -> usize {
        self.atoms.iter().map(|&(_, c)| c as usize).sum()
    }

    /// Number of points in `[a, b)`; `b` may be infinite.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.atoms
            .iter()
            .filter(|&&(x, _)| a <= x && x < b)
            .map(|&(_, c)| c as usize)
            .sum()
    }

    /// The multiset expanded into a sorted list.
    pub fn points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .atoms
            .iter()
            .flat_map(|&(x, c)| std::iter::repeat_n(x, c as usize))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }
}

pub fn scaled_point_pattern(times: &CoalescentTimes, hist: &MergeHistory) -> Result<ScaledPointPattern> {
    let n = check_same_n(times, hist)?;
    let scale = (n as f64).sqrt();
    let atoms = (1..n)
        .filter(|&k| hist.x(k) > 0)
        .map(|k| (scale * times.t(k), hist.x(k)))
        .collect();
    Ok(ScaledPointPattern { atoms })
}

/// `(R_n, R_n') = (T_rho, 2(1/rho - 1/n))` for the branch ending at level `rho`.
pub fn single_branch_length(times: &CoalescentTimes, rho: usize) -> Result<(f64, f64)> {
    let n = times.n();
    if !(1..n).contains(&rho) {
        return domain(format!("rho = {rho} outside 1..=n-1"));
    }
    Ok((times.t(rho), 2.0 * (1.0 / rho as f64 - 1.0 / n as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_stream;

    #[test]
    fn n2_realization() {
        let mut rng = replicate_stream(11, 0, 0);
        let t = sample_waiting_times(2, &mut rng).unwrap();
        assert_eq!(t.t(2), 0.0);
        assert!(t.t(1) > 0.0);
        let h = sample_merge_history(2, &mut rng).unwrap();
        assert_eq!(h.counts(), &[2]);
        assert_eq!((h.v(1), h.v(2)), (1, 0));
        let l = total_external_length(&t, &h).unwrap();
        assert_eq!(l, 2.0 * t.t(1));
        let eta = scaled_point_pattern(&t, &h).unwrap();
        assert_eq!(eta.atoms(), &[(2f64.sqrt() * t.t(1), 2)]);
        assert_eq!(single_branch_length(&t, 1).unwrap().1, 1.0);
        let lab = sample_labeled_history(2, &mut rng).unwrap();
        assert_eq!(lab.levels(), &[1, 1]);
        assert_eq!(sample_rho_single(2, &mut rng).unwrap(), 1);
    }

    #[test]
    fn n3_history_is_forced() {
        let mut rng = replicate_stream(11, 0, 1);
        for _ in 0..20 {
            assert_eq!(sample_merge_history(3, &mut rng).unwrap().counts(), &[1, 2]);
            assert_eq!(sample_labeled_history(3, &mut rng).unwrap().merge_counts(), vec![1, 2]);
        }
    }

    #[test]
    fn n5_times_strictly_decrease() {
        let mut rng = replicate_stream(5, 0, 0);
        let t = sample_waiting_times(5, &mut rng).unwrap();
        assert!(CoalescentTimes::new(t.as_slice().to_vec()).is_ok());
        assert_eq!(t.as_slice().windows(2).filter(|w| w[0] > w[1]).count(), 4);
    }

    #[test]
    fn errors() {
        let mut rng = replicate_stream(5, 0, 0);
        assert!(sample_waiting_times(1, &mut rng).is_err());
        assert!(sample_merge_history(0, &mut rng).is_err());
        assert!(sample_labeled_history(1, &mut rng).is_err());
        assert!(sample_rho_single(1, &mut rng).is_err());
        assert!(CoalescentTimes::new(vec![1.0, 1.0, 0.0]).is_err());
        assert!(CoalescentTimes::new(vec![1.0, 0.5]).is_err());
        let t = sample_waiting_times(5, &mut rng).unwrap();
        let h = sample_merge_history(6, &mut rng).unwrap();
        assert!(total_external_length(&t, &h).is_err());
        let h = sample_merge_history(5, &mut rng).unwrap();
        assert!(window_external_length(&t, &h, 0.5, 0.5).is_err());
        assert!(window_external_length(&t, &h, -0.1, 0.5).is_err());
        assert!(hat_external_length(&t, &h, 0.2, 1.1).is_err());
        assert!(single_branch_length(&t, 0).is_err());
        assert!(single_branch_length(&t, 5).is_err());
        assert!(MergeHistory::from_counts(vec![2, 2, 1, 0]).is_err());
        assert!(MergeHistory::from_counts(vec![1, 1, 1, 2]).is_ok());
    }

    #[test]
    fn single_level_count_vector() {
        let t = CoalescentTimes::new(vec![3.0, 2.0, 1.0, 0.0]).unwrap();
        let h = MergeHistory::from_counts_unchecked(vec![0, 2, 0]);
        assert_eq!(total_external_length(&t, &h).unwrap(), 4.0);
    }

    #[test]
    fn integral_powers_are_exact() {
        assert_eq!(ceil_pow(100, 0.5), 10);
        assert_eq!(floor_pow(100, 0.5), 10);
        assert_eq!(floor_pow(50, 0.5), 7);
        assert_eq!(ceil_pow(50, 0.5), 8);
        assert_eq!(ceil_pow(10_000, 0.25), 10);
        assert_eq!(ceil_pow(1000, 1.0 / 3.0), 10);
        assert_eq!(window_levels(100, 0.0, 1.0).unwrap(), 1..100);
        assert_eq!(window_levels(100, 0.0, 0.4).unwrap(), 1..7);
    }

    #[test]
    fn point_counts() {
        let t = CoalescentTimes::new(vec![3.0, 2.0, 1.0, 0.0]).unwrap();
        let h = MergeHistory::from_counts(vec![1, 1, 2]).unwrap();
        let eta = scaled_point_pattern(&t, &h).unwrap();
        assert_eq!(eta.total_multiplicity(), 4);
        assert_eq!(eta.count_in(3.0, f64::INFINITY), 2);
        assert_eq!(eta.count_in(0.0, 2.5), 2);
        assert_eq!(eta.points(), vec![2.0, 2.0, 4.0, 6.0]);
    }
}
