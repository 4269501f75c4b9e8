//! The urn chain behind the coalescent: `n` black balls, each step removes a
//! random pair and puts back one red ball, the final step removes the last
//! ball. `U_k` is the number of red balls after `k` steps.
//!
//! Three samplers live here (the urn itself, the two-box scheme and the
//! permutation-pair representation) together with exact rational laws used to
//! check them against each other.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{check_sample_size, domain, Result};
use crate::law::ExactLaw;

/// Largest `n` for which whole-path laws are enumerated.
pub const MAX_PATH_ENUMERATION_N: usize = 9;
/// Largest `n` for the pairwise joint dynamic program.
pub const MAX_JOINT_DP_N: usize = 12;
/// Largest `n` for brute-force enumeration of the box scheme and of
/// permutation pairs.
pub const MAX_BRUTE_FORCE_N: usize = 6;

/// A trajectory `U_0, ..., U_n` of red-ball counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UrnPath {
    u: Vec<usize>,
}

impl UrnPath {
    pub fn new(u: Vec<usize>) -> Result<Self> {
        if u.len() < 3 {
            return domain("an urn path needs n >= 2, i.e. at least 3 entries");
        }
        let n = u.len() - 1;
        if u[0] != 0 || u[n] != 0 {
            return domain("urn path must start and end at 0");
        }
        if u[1] != 1 || u[n - 1] != 1 {
            return domain("urn path must have U_1 = U_{n-1} = 1");
        }
        for k in 1..n {
            if u[k] < 1 || u[k] > k.min(n - k) {
                return domain(format!("U_{k} = {} outside 1..=min(k, n-k)", u[k]));
            }
        }
        if u.windows(2).any(|w| w[0].abs_diff(w[1]) > 1) {
            return domain("urn path moves by more than one ball per step");
        }
        Ok(Self { u })
    }

    pub fn n(&self) -> usize {
        self.u.len() - 1
    }

    pub fn values(&self) -> &[usize] {
        &self.u
    }

    /// `U_k`.
    pub fn get(&self, k: usize) -> usize {
        self.u[k]
    }

    pub fn into_values(self) -> Vec<usize> {
        self.u
    }
}

/// Integer weights of the three possible moves out of state `u` at step `k`.
/// Probabilities are the weights divided by [`StepWeights::total`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepWeights {
    pub down: u64,
    pub stay: u64,
    pub up: u64,
}

impl StepWeights {
    pub fn total(&self) -> u64 {
        self.down + self.stay + self.up
    }
}

fn choose2(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// Move weights from `U_k = u`: pairs of two reds, one red and one black, or
/// two blacks among the `n - k` balls in the urn. The last step, `k = n - 1`,
/// removes the single remaining (red) ball.
pub fn step_weights(n: usize, k: usize, u: usize) -> Result<StepWeights> {
    check_sample_size(n)?;
    if k >= n {
        return domain(format!("step {k} outside 0..n for n = {n}"));
    }
    let balls = (n - k) as u64;
    let u = u as u64;
    if u > balls {
        return domain(format!("{u} red balls but only {balls} balls in the urn"));
    }
    if k == n - 1 {
        if u != 1 {
            return domain("the last ball in the urn is always red");
        }
        return Ok(StepWeights { down: 1, stay: 0, up: 0 });
    }
    Ok(StepWeights {
        down: choose2(u),
        stay: u * (balls - u),
        up: choose2(balls - u),
    })
}

/// Exact transition probabilities `(down, stay, up)` out of `U_k = u`.
pub fn transition_probs(n: usize, k: usize, u: usize) -> Result<[BigRational; 3]> {
    let w = step_weights(n, k, u)?;
    let total = BigInt::from(w.total());
    let p = |x: u64| BigRational::new(BigInt::from(x), total.clone());
    Ok([p(w.down), p(w.stay), p(w.up)])
}

fn draw_step<R: Rng + ?Sized>(n: usize, k: usize, u: usize, rng: &mut R) -> usize {
    let w = step_weights(n, k, u).expect("sampler only visits admissible states");
    let r = rng.random_range(0..w.total());
    if r < w.down {
        u - 1
    } else if r < w.down + w.stay {
        u
    } else {
        u + 1
    }
}

/// Runs the urn chain forward from `U_0 = 0`.
pub fn sample_urn_path<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UrnPath> {
    check_sample_size(n)?;
    let mut u = Vec::with_capacity(n + 1);
    u.push(0);
    let mut cur = 0;
    for k in 0..n {
        cur = draw_step(n, k, cur, rng);
        u.push(cur);
    }
    debug_assert!(UrnPath::new(u.clone()).is_ok());
    Ok(UrnPath { u })
}

/// `(U_n, ..., U_0)`.
pub fn reverse_path(p: &UrnPath) -> UrnPath {
    let mut u = p.u.clone();
    u.reverse();
    UrnPath { u }
}

// ---------------------------------------------------------------------------
// Box scheme

/// Runs the two-box scheme on `n - 1` balls. Box A starts with all balls,
/// black; odd steps move a uniformly chosen ball from A to B, even steps
/// recolor a uniformly chosen black ball red. `choose(m)` must return an index
/// in `0..m` and supplies every random choice, in order.
///
/// Returns `(0, U'_1 + 1, ..., U'_{n-1} + 1, 0)` where `U'_k` is the number of
/// red balls in A after step `2k - 1`.
pub fn box_scheme_path<F: FnMut(usize) -> usize>(n: usize, mut choose: F) -> Result<UrnPath> {
    check_sample_size(n)?;
    let balls = n - 1;
    let mut in_a: Vec<usize> = (0..balls).collect();
    let mut black: Vec<usize> = (0..balls).collect();
    let mut located_in_a = vec![true; balls];
    let mut red = vec![false; balls];
    let mut red_in_a = 0usize;

    let mut u = Vec::with_capacity(n + 1);
    u.push(0);
    for _ in 0..balls {
        let i = choose(in_a.len());
        let ball = in_a.swap_remove(i);
        located_in_a[ball] = false;
        if red[ball] {
            red_in_a -= 1;
        }
        u.push(red_in_a + 1);

        let j = choose(black.len());
        let ball = black.swap_remove(j);
        red[ball] = true;
        if located_in_a[ball] {
            red_in_a += 1;
        }
    }
    u.push(0);
    UrnPath::new(u)
}

pub fn sample_box_scheme<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UrnPath> {
    box_scheme_path(n, |m| rng.random_range(0..m))
}

/// Law of the box-scheme path, by enumerating all `((n-1)!)^2` equally likely
/// choice sequences.
pub fn exact_box_scheme_law(n: usize) -> Result<ExactLaw<Vec<usize>>> {
    check_sample_size(n)?;
    if n > MAX_BRUTE_FORCE_N {
        return domain(format!("box scheme enumeration limited to n ≤ {MAX_BRUTE_FORCE_N}"));
    }
    let radices: Vec<usize> = (1..n).rev().flat_map(|m| [m, m]).collect();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut total = 0u64;
    for digits in radices.iter().map(|&m| 0..m).multi_cartesian_product() {
        let mut it = digits.into_iter();
        let path = box_scheme_path(n, |_| it.next().expect("one digit per choice"))?;
        *counts.entry(path.into_values()).or_default() += 1;
        total += 1;
    }
    counts_to_law(counts, total)
}

fn counts_to_law(counts: BTreeMap<Vec<usize>, u64>, total: u64) -> Result<ExactLaw<Vec<usize>>> {
    let total = BigInt::from(total);
    ExactLaw::from_map(
        counts
            .into_iter()
            .map(|(k, c)| (k, BigRational::new(BigInt::from(c), total.clone())))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Permutation representation

/// Coloring times `rho` and shifting times `sigma` of balls `1..=n-1`; both
/// are permutations of `{1, ..., n-1}` (one-based values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPair {
    rho: Vec<usize>,
    sigma: Vec<usize>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&v| {
        (1..=p.len()).contains(&v) && !std::mem::replace(&mut seen[v - 1], true)
    })
}

impl PermutationPair {
    pub fn new(rho: Vec<usize>, sigma: Vec<usize>) -> Result<Self> {
        if rho.is_empty() || rho.len() != sigma.len() {
            return domain("permutations must be nonempty and of equal length");
        }
        if !is_permutation(&rho) || !is_permutation(&sigma) {
            return domain("not a permutation of 1..=n-1");
        }
        Ok(Self { rho, sigma })
    }

    /// Two independent uniform permutations of `{1, ..., n-1}`.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_sample_size(n)?;
        let mut rho: Vec<usize> = (1..n).collect();
        let mut sigma = rho.clone();
        rho.shuffle(rng);
        sigma.shuffle(rng);
        Ok(Self { rho, sigma })
    }

    pub fn n(&self) -> usize {
        self.rho.len() + 1
    }

    pub fn rho(&self) -> &[usize] {
        &self.rho
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }
}

/// `U_k = #{m : rho_m < k < sigma_m} + 1` for `1 <= k <= n-1`, zero at both ends.
pub fn path_from_permutations(pair: &PermutationPair) -> UrnPath {
    let n = pair.n();
    // diff[k] accumulates +1 at rho_m + 1 and -1 at sigma_m
    let mut diff = vec![0isize; n + 1];
    for (&r, &s) in pair.rho.iter().zip(&pair.sigma) {
        if r + 1 < s {
            diff[r + 1] += 1;
            diff[s] -= 1;
        }
    }
    let mut u = Vec::with_capacity(n + 1);
    u.push(0);
    let mut running = 0isize;
    for d in &diff[1..n] {
        running += d;
        u.push(running as usize + 1);
    }
    u.push(0);
    debug_assert!(UrnPath::new(u.clone()).is_ok());
    UrnPath { u }
}

pub fn sample_permutation_path<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UrnPath> {
    Ok(path_from_permutations(&PermutationPair::sample(n, rng)?))
}

/// Law of the permutation-pair path over all `((n-1)!)^2` pairs.
pub fn exact_permutation_law(n: usize) -> Result<ExactLaw<Vec<usize>>> {
    check_sample_size(n)?;
    if n > MAX_BRUTE_FORCE_N {
        return domain(format!("permutation enumeration limited to n ≤ {MAX_BRUTE_FORCE_N}"));
    }
    let perms: Vec<Vec<usize>> = (1..n).permutations(n - 1).collect();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut total = 0u64;
    for rho in &perms {
        for sigma in &perms {
            let pair = PermutationPair { rho: rho.clone(), sigma: sigma.clone() };
            *counts.entry(path_from_permutations(&pair).into_values()).or_default() += 1;
            total += 1;
        }
    }
    counts_to_law(counts, total)
}

// ---------------------------------------------------------------------------
// Exact laws of the chain
//
// Every path of length n has the same denominator, the product of the step
// totals, so the dynamic programs below carry integer weights and divide once.

fn step_totals(n: usize) -> Vec<BigInt> {
    (0..n)
        .map(|k| if k == n - 1 { BigInt::one() } else { BigInt::from(choose2((n - k) as u64)) })
        .collect()
}

/// Law of the whole path `(U_0, ..., U_n)`, `2 <= n <= 9`.
pub fn exact_path_law(n: usize) -> Result<ExactLaw<Vec<usize>>> {
    if !(2..=MAX_PATH_ENUMERATION_N).contains(&n) {
        return domain(format!("exact path enumeration limited to n ≤ {MAX_PATH_ENUMERATION_N}"));
    }
    let denominator: BigInt = step_totals(n).iter().product();
    let mut probs = BTreeMap::new();
    let mut stack: Vec<(Vec<usize>, BigInt)> = vec![(vec![0], BigInt::one())];
    while let Some((path, weight)) = stack.pop() {
        let k = path.len() - 1;
        if k == n {
            probs.insert(path, BigRational::new(weight, denominator.clone()));
            continue;
        }
        let u = path[k];
        let w = step_weights(n, k, u)?;
        for (next, wt) in [(u.wrapping_sub(1), w.down), (u, w.stay), (u + 1, w.up)] {
            if wt > 0 {
                let mut p = path.clone();
                p.push(next);
                stack.push((p, &weight * BigInt::from(wt)));
            }
        }
    }
    ExactLaw::from_map(probs)
}

/// Propagates integer weights (over a common denominator) from step `from`
/// to step `to`.
fn propagate(n: usize, from: usize, to: usize, mut w: Vec<BigInt>) -> Vec<BigInt> {
    for k in from..to {
        let mut next = vec![BigInt::zero(); n + 1];
        for (u, wu) in w.iter().enumerate() {
            if wu.is_zero() {
                continue;
            }
            let s = step_weights(n, k, u).expect("reachable states are admissible");
            if s.down > 0 {
                next[u - 1] += wu * s.down;
            }
            if s.stay > 0 {
                next[u] += wu * s.stay;
            }
            if s.up > 0 {
                next[u + 1] += wu * s.up;
            }
        }
        w = next;
    }
    w
}

fn weights_to_law(w: Vec<BigInt>, denominator: &BigInt) -> ExactLaw<usize> {
    let probs = w
        .into_iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(u, x)| (u, BigRational::new(x, denominator.clone())))
        .collect();
    ExactLaw::from_map(probs).expect("forward weights are normalized")
}

fn point_weights(n: usize, u: usize) -> Vec<BigInt> {
    let mut w = vec![BigInt::zero(); n + 1];
    w[u] = BigInt::one();
    w
}

/// Law of `U_k` by forward dynamic programming.
pub fn exact_marginal(n: usize, k: usize) -> Result<ExactLaw<usize>> {
    check_sample_size(n)?;
    if k > n {
        return domain(format!("k = {k} outside 0..=n"));
    }
    let denominator: BigInt = step_totals(n)[..k].iter().product();
    Ok(weights_to_law(propagate(n, 0, k, point_weights(n, 0)), &denominator))
}

/// Laws of `U_0, ..., U_n` in a single forward pass.
pub fn exact_marginals(n: usize) -> Result<Vec<ExactLaw<usize>>> {
    check_sample_size(n)?;
    let totals = step_totals(n);
    let mut w = point_weights(n, 0);
    let mut denominator = BigInt::one();
    let mut laws = vec![weights_to_law(w.clone(), &denominator)];
    for k in 0..n {
        w = propagate(n, k, k + 1, w);
        denominator *= &totals[k];
        laws.push(weights_to_law(w.clone(), &denominator));
    }
    Ok(laws)
}

/// Joint law of `(U_k, U_l)` for `k <= l`, `n <= 12`.
pub fn exact_joint(n: usize, k: usize, l: usize) -> Result<ExactLaw<(usize, usize)>> {
    check_sample_size(n)?;
    if n > MAX_JOINT_DP_N {
        return domain(format!("pairwise joint dynamic program limited to n ≤ {MAX_JOINT_DP_N}"));
    }
    if !(k <= l && l <= n) {
        return domain(format!("need 0 <= k <= l <= n, got k = {k}, l = {l}"));
    }
    let totals = step_totals(n);
    let denominator: BigInt = totals[..l].iter().product();
    let at_k = propagate(n, 0, k, point_weights(n, 0));
    let mut probs = BTreeMap::new();
    for (a, wa) in at_k.iter().enumerate() {
        if wa.is_zero() {
            continue;
        }
        for (b, wb) in propagate(n, k, l, point_weights(n, a)).into_iter().enumerate() {
            if !wb.is_zero() {
                probs.insert((a, b), BigRational::new(wa * wb, denominator.clone()));
            }
        }
    }
    ExactLaw::from_map(probs)
}

/// Means and covariance matrix of `(U_0, ..., U_n)` from the joint dynamic
/// program.
#[derive(Debug, Clone)]
pub struct ChainMoments {
    pub mean: Vec<BigRational>,
    /// `cov[k][l]`, symmetric.
    pub cov: Vec<Vec<BigRational>>,
}

pub fn chain_moments(n: usize) -> Result<ChainMoments> {
    let mean: Vec<BigRational> = exact_marginals(n)?
        .iter()
        .map(|law| law.expect(|&u| BigRational::from_integer(u.into())))
        .collect();
    let mut cov = vec![vec![BigRational::zero(); n + 1]; n + 1];
    for k in 0..=n {
        for l in k..=n {
            let cross = exact_joint(n, k, l)?.expect(|&(a, b)| BigRational::from_integer((a * b).into()));
            let c = cross - &mean[k] * &mean[l];
            cov[l][k] = c.clone();
            cov[k][l] = c;
        }
    }
    Ok(ChainMoments { mean, cov })
}

/// `P(U_k - 1 = r)` for the hypergeometric law with population `n - 1`,
/// `k - 1` marked items and `n - k - 1` unmarked items left out of the draw.
pub fn hypergeometric_pmf(n: usize, k: usize, r: usize) -> Result<BigRational> {
    check_sample_size(n)?;
    if !(1..n).contains(&k) {
        return domain(format!("k = {k} outside 1..=n-1"));
    }
    if r > k - 1 || r > n - k - 1 {
        return Ok(BigRational::zero());
    }
    let c = |a: usize, b: usize| num_integer::binomial(BigInt::from(a), BigInt::from(b));
    Ok(BigRational::new(c(k - 1, r) * c(n - k, n - k - 1 - r), c(n - 1, n - k - 1)))
}

// ---------------------------------------------------------------------------
// tau

/// `max{k >= 1 : U_{n-k} = k}`: red balls left when the last black ball goes.
pub fn tau(p: &UrnPath) -> usize {
    let n = p.n();
    let found = (1..=n).rev().find(|&k| p.u[n - k] == k);
    found.expect("U_{n-1} = 1 on every admissible path")
}

/// `max{k >= 1 : U_k = k}`: the step before the first red ball is removed.
pub fn tau_forward(p: &UrnPath) -> usize {
    let found = (1..=p.n()).rev().find(|&k| p.u[k] == k);
    found.expect("U_1 = 1 on every admissible path")
}

/// `P(tau_n >= k) = (n-k)...(n-2k+1) / ((n-1)...(n-k))`, zero once `2k > n`.
pub fn tau_exact_tail(n: usize, k: usize) -> Result<BigRational> {
    check_sample_size(n)?;
    if k == 0 {
        return domain("tau tail defined for k >= 1");
    }
    if 2 * k > n {
        return Ok(BigRational::zero());
    }
    let num: BigInt = (n - 2 * k + 1..=n - k).map(BigInt::from).product();
    let den: BigInt = (n - k..=n - 1).map(BigInt::from).product();
    Ok(BigRational::new(num, den))
}
