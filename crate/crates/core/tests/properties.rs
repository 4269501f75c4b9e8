use kingman_core::coalescent::{hat_external_length_increments, window_levels};
use kingman_core::urn::{
    exact_marginal, path_from_permutations, reverse_path, sample_urn_path, tau, tau_forward, transition_probs,
};
use kingman_core::*;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn admissible(p: &UrnPath) -> bool {
    let u = p.values();
    let n = p.n();
    u[0] == 0
        && u[n] == 0
        && u.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
        && u.iter().enumerate().all(|(k, &v)| v <= n - k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sampled_paths_are_admissible_and_reverse_cleanly(n in 2usize..300, seed: u64) {
        let mut rng = replicate_stream(seed, 1, 0);
        let p = sample_urn_path(n, &mut rng).unwrap();
        prop_assert!(admissible(&p));
        prop_assert_eq!(p.get(1), 1);
        prop_assert_eq!(p.get(n - 1), 1);
        let r = reverse_path(&p);
        prop_assert!(UrnPath::new(r.values().to_vec()).is_ok());
        prop_assert_eq!(reverse_path(&r), p.clone());
        prop_assert_eq!(tau(&p), tau_forward(&r));
    }

    #[test]
    fn merge_histories_are_consistent(n in 2usize..300, seed: u64) {
        let mut rng = replicate_stream(seed, 2, 0);
        let h = sample_merge_history(n, &mut rng).unwrap();
        prop_assert_eq!(h.counts().iter().map(|&x| x as usize).sum::<usize>(), n);
        prop_assert!(h.counts().iter().all(|&x| x <= 2));
        prop_assert_eq!(h.x(n - 1), 2);
        let again = MergeHistory::from_counts(h.counts().to_vec()).unwrap();
        prop_assert_eq!(again, h);

        let l = sample_labeled_history(n, &mut rng).unwrap();
        prop_assert!(l.levels().iter().all(|&k| (1..n).contains(&k)));
        prop_assert!(l.to_merge_history().is_ok());
    }

    #[test]
    fn permutation_pairs_give_admissible_paths(n in 2usize..200, seed: u64) {
        let mut rng = replicate_stream(seed, 3, 0);
        let pair = PermutationPair::sample(n, &mut rng).unwrap();
        prop_assert!(admissible(&path_from_permutations(&pair)));
    }

    #[test]
    fn times_decrease_and_functionals_agree(n in 2usize..400, seed: u64, alpha in 0.0f64..0.9) {
        let mut rng = replicate_stream(seed, 4, 0);
        let t = sample_waiting_times(n, &mut rng).unwrap();
        prop_assert_eq!(t.t(n), 0.0);
        prop_assert!(t.as_slice().windows(2).all(|w| w[0] > w[1]));
        let h = sample_merge_history(n, &mut rng).unwrap();
        let beta = 1.0;
        let total = total_external_length(&t, &h).unwrap();
        let window = window_external_length(&t, &h, alpha, beta).unwrap();
        prop_assert!(window >= 0.0 && window <= total + 1e-12);
        let leaf = hat_external_length(&t, &h, alpha, beta).unwrap();
        let inc = hat_external_length_increments(&t, &h, alpha, beta).unwrap();
        prop_assert!((leaf - inc).abs() <= 1e-12 * leaf.abs().max(1.0));
        prop_assert!(leaf <= total + 1e-12);
        let levels = window_levels(n, alpha, beta).unwrap();
        prop_assert!(levels.start >= 1 && levels.end <= n);
    }

    #[test]
    fn transition_rows_are_distributions(n in 2usize..60, k_frac in 0.0f64..1.0, u_frac in 0.0f64..1.0) {
        let k = ((n - 1) as f64 * k_frac) as usize;
        let u = if k == n - 1 { 1 } else { ((n - k) as f64 * u_frac) as usize };
        let row = transition_probs(n, k, u).unwrap();
        prop_assert!(row.iter().all(|p| *p >= BigRational::from_integer(0.into())));
        let total: BigRational = row.iter().cloned().sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn marginal_laws_are_symmetric(n in 2usize..40, k_frac in 0.0f64..1.0) {
        let k = ((n + 1) as f64 * k_frac) as usize;
        prop_assert_eq!(exact_marginal(n, k).unwrap(), exact_marginal(n, n - k).unwrap());
    }

    #[test]
    fn streams_depend_only_on_their_coordinates(seed: u64, domain: u64, rep: u64) {
        use rand::Rng;
        let a: u64 = replicate_stream(seed, domain, rep).random();
        let b: u64 = replicate_stream(seed, domain, rep).random();
        prop_assert_eq!(a, b);
        let c: u64 = replicate_stream(seed, domain, rep.wrapping_add(1)).random();
        prop_assert_ne!(a, c);
    }
}
