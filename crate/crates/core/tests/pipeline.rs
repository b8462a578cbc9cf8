use approx::assert_abs_diff_eq;
use num_bigint::BigUint;
use qcomp_core::channel::{make_scheme, SchemeMode};
use qcomp_core::fidelity::{entanglement_fidelity_kraus, fs_bounds, fs_bounds_with_spectrum};
use qcomp_core::source::{qutrit_sources, reference_chain, reference_sources};
use qcomp_core::typicality::{beta, eta};
use qcomp_core::{ComplexMatrix, DensityOperator, Error, SourceModel};

#[test]
fn markov_scheme_meets_guaranteed_fidelity() {
    let src = SourceModel::rotated_markov(reference_chain(), ComplexMatrix::hadamard()).unwrap();
    let scheme = make_scheme(&src, 8, SchemeMode::Epsilon(0.1)).unwrap();
    let fe = entanglement_fidelity_kraus(&scheme.state, &scheme.round_trip).unwrap();
    assert!(fe >= 0.81, "F_e = {fe}");
    assert!(fe >= scheme.captured_mass.powi(2) - 1e-9);
    // the dense rank equals the greedy count from the structured spectrum
    let hp = beta(&src.class_spectrum(8).unwrap(), 0.1).unwrap();
    assert_eq!(BigUint::from(scheme.rank()), hp.count);
}

#[test]
fn full_rate_scheme_is_identity() {
    for (name, src) in reference_sources() {
        let scheme = make_scheme(&src, 3, SchemeMode::Rate(1.0)).unwrap();
        assert_eq!(scheme.rank(), 8, "{name}");
        let fe = entanglement_fidelity_kraus(&scheme.state, &scheme.round_trip).unwrap();
        assert_abs_diff_eq!(fe, 1.0, epsilon = 1e-9);
        let b = fs_bounds(&scheme.state, &scheme.round_trip, scheme.rank()).unwrap();
        assert_abs_diff_eq!(b.six_eta, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn bounds_routes_agree() {
    let src = &qutrit_sources()[1].1;
    let scheme = make_scheme(src, 3, SchemeMode::Epsilon(0.2)).unwrap();
    let a = fs_bounds(&scheme.state, &scheme.round_trip, scheme.rank()).unwrap();
    let b = fs_bounds_with_spectrum(&scheme.state, &scheme.spectrum, &scheme.round_trip, scheme.rank()).unwrap();
    assert_abs_diff_eq!(a.lower, b.lower, epsilon = 1e-9);
    assert_abs_diff_eq!(a.f_output, b.f_output, epsilon = 1e-9);
    assert_abs_diff_eq!(a.six_eta, b.six_eta, epsilon = 1e-12);
    assert!(a.lower <= a.upper + 1e-9);
}

#[test]
fn dense_cap_is_enforced() {
    let src = SourceModel::iid(DensityOperator::diagonal(&[0.9, 0.1]).unwrap()).with_dense_cap(16);
    assert!(matches!(
        make_scheme(&src, 5, SchemeMode::Epsilon(0.1)),
        Err(Error::DenseCapExceeded { .. })
    ));
    // structured quantities stay available
    let spec = src.class_spectrum(5).unwrap();
    assert!(eta(&spec, &BigUint::from(4u8)).unwrap() > 0.0);
}
