//! Replicate-parallel Monte Carlo with index-ordered results.

use rayon::prelude::*;

use crate::rng::{replicate_stream, StreamRng};

/// Runs `f` once per replicate index `0..reps` on a pool of `threads`
/// workers. Replicate `r` receives the stream `(seed, domain, r)`; results are
/// returned in replicate order, so the output does not depend on `threads`.
pub fn run_replicates<T, F>(reps: usize, seed: u64, domain: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StreamRng) -> T + Sync,
{
    let work = |r: usize| {
        let mut rng = replicate_stream(seed, domain, r as u64);
        f(r as u64, &mut rng)
    };
    if threads <= 1 {
        return (0..reps).map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build worker pool");
    pool.install(|| (0..reps).into_par_iter().map(work).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn thread_count_does_not_change_results() {
        let f = |_r: u64, rng: &mut StreamRng| rng.random::<u64>();
        let one = run_replicates(1000, 42, 5, 1, f);
        let many = run_replicates(1000, 42, 5, 8, f);
        assert_eq!(one, many);
    }
}
