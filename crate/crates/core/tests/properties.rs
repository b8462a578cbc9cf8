use num_bigint::BigUint;
use proptest::prelude::*;
use qcomp_core::channel::{build_compression, build_decompression, compose, COMPOSED_COMPLETENESS_TOL};
use qcomp_core::fidelity::{
    check_inequalities, ensemble_fidelity, entanglement_fidelity_kraus, fidelity, trace_distance, Ensemble,
};
use qcomp_core::linalg::{hermitian_eigenvalues, partial_trace};
use qcomp_core::random::{random_channel, random_density, random_distribution, random_pure, random_unitary};
use qcomp_core::typicality::{beta, eta, eta_usize, typical_subspace, von_neumann_entropy, MASS_TOL};
use qcomp_core::validate::oracle;
use qcomp_core::{ClassSpectrum, DensityOperator, MarkovChain, Projector, SourceModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-stochastic matrix with strictly positive entries, so the chain is
/// irreducible and aperiodic.
fn positive_chain(seed: u64, dim: usize) -> MarkovChain {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            random_distribution(&mut r, dim)
                .into_iter()
                .map(|p| 0.9 * p + 0.1 / dim as f64)
                .collect()
        })
        .collect();
    MarkovChain::new(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_beta_is_minimal(seed in any::<u64>(), dim in 1usize..=9, eps in 0.01f64..0.99) {
        let values = random_distribution(&mut rng(seed), dim);
        let hp = beta(&ClassSpectrum::from_values(&values), eps).unwrap();
        prop_assert_eq!(hp.count, BigUint::from(oracle::min_subset_count(&values, eps)));
        prop_assert!(hp.mass >= 1.0 - eps - MASS_TOL);
    }

    #[test]
    fn beta_shrinks_as_eps_grows(seed in any::<u64>(), dim in 2usize..=12, a in 0.01f64..0.98, b in 0.01f64..0.98) {
        let spec = ClassSpectrum::from_values(&random_distribution(&mut rng(seed), dim));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(beta(&spec, hi).unwrap().count <= beta(&spec, lo).unwrap().count);
    }

    #[test]
    fn eta_is_ky_fan_maximum(seed in any::<u64>(), dim in 1usize..=8) {
        let values = random_distribution(&mut rng(seed), dim);
        let spec = ClassSpectrum::from_values(&values);
        let mut prev = 0.0;
        for d in 1..=dim {
            let e = eta_usize(&spec, d).unwrap();
            prop_assert!((e - oracle::max_subset_sum(&values, d)).abs() <= 1e-12);
            prop_assert!(e >= prev && e >= d as f64 / dim as f64 - 1e-12);
            prev = e;
        }
        prop_assert!((prev - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn iid_classes_match_dense_spectrum(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let site = random_density(&mut r, 2);
        let src = SourceModel::iid(site);
        let classes = src.class_spectrum(n).unwrap();
        prop_assert!((classes.mass() - 1.0).abs() <= 1e-12);
        let dense = hermitian_eigenvalues(src.block_state(n).unwrap().matrix()).unwrap();
        let expanded = classes.expanded(1 << n).unwrap();
        prop_assert_eq!(expanded.len(), dense.len());
        for (a, b) in expanded.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn markov_word_and_transition_classes_agree(seed in any::<u64>(), dim in 2usize..=3, n in 1usize..=5) {
        let chain = positive_chain(seed, dim);
        let src = SourceModel::rotated_markov(chain, random_unitary(&mut rng(seed ^ 1), dim)).unwrap();
        let w = src.word_spectrum(n).unwrap().expanded(1 << 12).unwrap();
        let t = src.transition_spectrum(n).unwrap().expanded(1 << 12).unwrap();
        prop_assert_eq!(w.len(), t.len());
        for (a, b) in w.iter().zip(&t) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn markov_blocks_are_consistent(seed in any::<u64>(), n in 1usize..=4) {
        let chain = positive_chain(seed, 2);
        let src = SourceModel::rotated_markov(chain, random_unitary(&mut rng(seed ^ 2), 2)).unwrap();
        let big = src.block_state(n + 1).unwrap();
        let small = src.block_state(n).unwrap();
        let dims = vec![2; n + 1];
        let first: Vec<usize> = (0..n).collect();
        let last: Vec<usize> = (1..=n).collect();
        prop_assert!(partial_trace(&big, &dims, &first).unwrap().matrix().max_abs_diff(small.matrix()) <= 1e-10);
        prop_assert!(partial_trace(&big, &dims, &last).unwrap().matrix().max_abs_diff(small.matrix()) <= 1e-10);
    }

    #[test]
    fn typical_dimension_respects_window(seed in any::<u64>(), n in 1usize..=60, eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let values = random_distribution(&mut r, 2);
        let src = SourceModel::iid(DensityOperator::diagonal(&values).unwrap());
        let s = src.entropy_rate_exact();
        let t = typical_subspace(&src.class_spectrum(n).unwrap(), n, s, eps).unwrap();
        if !t.is_empty() {
            let nf = n as f64;
            prop_assert!(t.log2_dim <= nf * (s + eps) + 1e-9);
            prop_assert!(t.mass.log2() + nf * (s - eps) <= t.log2_dim + 1e-9);
        }
    }

    #[test]
    fn compression_round_trip_is_trace_preserving(seed in any::<u64>(), dim in 2usize..=6, rank_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let rank = 1 + ((dim - 1) as f64 * rank_frac) as usize;
        let vectors: Vec<_> = {
            let u = random_unitary(&mut r, dim);
            (0..rank).map(|k| u.column(k)).collect()
        };
        let p = Projector::from_vectors(dim, &vectors).unwrap();
        let c = build_compression(&p, &vectors[0]).unwrap();
        let d = build_decompression(&p).unwrap();
        let round = compose(&c, &d).unwrap();
        prop_assert!(c.completeness_residual() <= 1e-10);
        prop_assert!(d.completeness_residual() <= 1e-10);
        prop_assert!(round.completeness_residual() <= COMPOSED_COMPLETENESS_TOL);
        let rho = random_density(&mut r, dim);
        let out = round.apply(&rho).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-10);
        // states inside the range pass through unchanged
        let inside = DensityOperator::pure(&vectors[rank - 1]).unwrap();
        prop_assert!(round.apply(&inside).unwrap().matrix().max_abs_diff(inside.matrix()) <= 1e-10);
    }

    #[test]
    fn fidelity_chain_and_ranges(seed in any::<u64>(), dim in 2usize..=4, terms in 1usize..=4) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, dim);
        let sigma = random_density(&mut r, dim);
        let ch = random_channel(&mut r, dim, terms);
        let report = check_inequalities(&rho, &sigma, &Ensemble::eigen(&rho).unwrap(), &ch, None).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() <= 1e-9);
        let t = trace_distance(&rho, &sigma).unwrap();
        prop_assert!(1.0 - f <= t + 1e-9 && t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn ensemble_fidelity_bounds_entanglement_fidelity(seed in any::<u64>(), dim in 2usize..=4, members in 1usize..=5) {
        let mut r = rng(seed);
        let weights = random_distribution(&mut r, members);
        let kets: Vec<_> = (0..members).map(|_| random_pure(&mut r, dim)).collect();
        let ens = Ensemble::pure(weights.into_iter().zip(kets).collect()).unwrap();
        let rho = ens.average();
        let ch = random_channel(&mut r, dim, 3);
        let fe = entanglement_fidelity_kraus(&rho, &ch).unwrap();
        let fbar = ensemble_fidelity(&ens, &ch).unwrap();
        prop_assert!(fe <= fbar + 1e-9);
        prop_assert!(fbar <= fidelity(&rho, &ch.apply(&rho).unwrap()).unwrap() + 1e-9);
    }

    #[test]
    fn entropy_bounded_by_log_dimension(seed in any::<u64>(), dim in 1usize..=6) {
        let rho = random_density(&mut rng(seed), dim);
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= -1e-12 && s <= (dim as f64).log2() + 1e-12);
    }

    #[test]
    fn eta_of_flat_spectrum(n in 1usize..=40, k in 0u32..=40) {
        // IID(I/2): eta_d = d / 2^n
        let spec = SourceModel::iid(DensityOperator::maximally_mixed(2)).class_spectrum(n).unwrap();
        let d = BigUint::from(2u8).pow(k.min(n as u32));
        let expected = 2f64.powi(k.min(n as u32) as i32 - n as i32);
        prop_assert!((eta(&spec, &d).unwrap() - expected).abs() <= 1e-12);
    }
}
