//! Fidelity, trace distance, entanglement and ensemble fidelities, and the
//! inequalities relating them.

use num_bigint::BigUint;
use num_complex::Complex64;

use crate::channel::{KrausChannel, KrausOp};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermitian_eigenvalues, inner, kron, matrix_sqrt_psd, noise_floor, norm, trace_norm, ComplexMatrix,
    DensityOperator, Ket, Spectrum, ZERO,
};
use crate::source::{neumaier_sum, ClassSpectrum};
use crate::typicality::{eta, von_neumann_entropy};

/// Slack below which an inequality counts as violated.
pub const INEQUALITY_TOL: f64 = 1e-9;
const PURE_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-10;
/// Largest joint dimension `N^2` for the purification route by default.
pub const DEFAULT_PURIFICATION_CAP: usize = 4096;

fn same_dim(context: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            context,
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// `F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho))`, unsquared.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim("fidelity", rho.dim(), sigma.dim())?;
    fidelity_with_sqrt(&matrix_sqrt_psd(rho.matrix())?, sigma)
}

fn fidelity_with_sqrt(s: &ComplexMatrix, sigma: &DensityOperator) -> Result<f64> {
    let inner_m = s.matmul(sigma.matrix()).matmul(s).hermitian_part();
    let values = hermitian_eigenvalues(&inner_m)?;
    let floor = noise_floor(&values);
    Ok(values
        .iter()
        .filter(|&&v| v > floor)
        .map(|v| v.sqrt())
        .sum::<f64>()
        .min(1.0))
}

/// `F` as the nuclear norm of `sqrt(rho) sqrt(sigma)`; an independent route
/// for cross-checking [`fidelity`].
pub fn fidelity_nuclear(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim("fidelity", rho.dim(), sigma.dim())?;
    let a = matrix_sqrt_psd(rho.matrix())?.matmul(&matrix_sqrt_psd(sigma.matrix())?);
    let sv = a
        .to_faer()
        .singular_values()
        .map_err(|e| Error::Numerical(format!("{e:?}")))?;
    Ok(sv.iter().sum::<f64>().min(1.0))
}

/// `F(|psi><psi|, sigma) = sqrt(<psi|sigma|psi>)` for a unit vector `psi`.
pub fn pure_fidelity(psi: &[Complex64], sigma: &DensityOperator) -> Result<f64> {
    same_dim("fidelity", psi.len(), sigma.dim())?;
    Ok(sigma.expectation(psi).max(0.0).sqrt().min(1.0))
}

/// `(1/2) tr |rho - sigma|`
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim("trace distance", rho.dim(), sigma.dim())?;
    Ok(0.5 * trace_norm(&(rho.matrix() - sigma.matrix()))?)
}

fn check_channel_on(rho_dim: usize, ch: &KrausChannel) -> Result<()> {
    ch.require_square()?;
    same_dim("channel input", ch.in_dim(), rho_dim)
}

/// `F_e = sum_i |tr(rho E_i)|^2`
pub fn entanglement_fidelity_kraus(rho: &DensityOperator, ch: &KrausChannel) -> Result<f64> {
    check_channel_on(rho.dim(), ch)?;
    let m = rho.matrix();
    let mut terms = Vec::with_capacity(ch.len());
    let mut kets = Vec::new();
    let mut bras = Vec::new();
    for op in ch.ops() {
        match op {
            KrausOp::Dense(_) => terms.push(op.trace_against(m).norm_sqr()),
            KrausOp::RankOne { ket, bra } => {
                kets.push(ket.clone());
                bras.push(bra);
            }
        }
    }
    if !kets.is_empty() {
        // tr(rho |k><b|) = <b| rho |k>
        let rk = m.matmul(&ComplexMatrix::from_columns(m.rows(), &kets));
        for (i, b) in bras.iter().enumerate() {
            let t: Complex64 = b.iter().enumerate().map(|(r, z)| z.conj() * rk[(r, i)]).sum();
            terms.push(t.norm_sqr());
        }
    }
    Ok(neumaier_sum(terms.into_iter()).min(1.0))
}

/// `F_e` from its definition: the squared fidelity between a purification
/// `|Psi> = sum_i sqrt(lambda_i) |i>_R |v_i>` and `(1 (x) E)(|Psi><Psi|)`.
///
/// `reference` optionally rotates the reference system, giving another
/// purification of the same state. Refuses joint dimensions above `cap`.
pub fn entanglement_fidelity_purification(
    rho: &DensityOperator,
    ch: &KrausChannel,
    reference: Option<&ComplexMatrix>,
    cap: usize,
) -> Result<f64> {
    check_channel_on(rho.dim(), ch)?;
    let n = rho.dim();
    let joint = n * n;
    if joint > cap {
        return Err(Error::DenseCapExceeded {
            size: joint as u128,
            cap,
        });
    }
    let spec = hermitian_eig(rho.matrix())?;
    let vecs = spec.vectors().expect("eigenvectors requested");
    let lambdas = spec.clamped_values();
    let mut psi = vec![ZERO; joint];
    for (i, &l) in lambdas.iter().enumerate() {
        let w = l.max(0.0).sqrt();
        for a in 0..n {
            psi[i * n + a] = vecs[(a, i)] * w;
        }
    }
    if let Some(w) = reference {
        same_dim("reference unitary", n, w.rows())?;
        psi = kron(w, &ComplexMatrix::identity(n)).mul_vec(&psi);
    }
    let id = ComplexMatrix::identity(n);
    let extended: Vec<ComplexMatrix> = ch.ops().iter().map(|op| kron(&id, &op.to_matrix())).collect();
    let extended = KrausChannel::from_matrices(extended)?;
    let out = extended.apply(&DensityOperator::pure(&psi)?)?;
    let f = fidelity(&DensityOperator::pure(&psi)?, &out)?;
    Ok(f * f)
}

/// Member of an ensemble decomposition.
#[derive(Clone, Debug)]
pub enum EnsembleState {
    Pure(Ket),
    Mixed(DensityOperator),
}

impl EnsembleState {
    pub fn dim(&self) -> usize {
        match self {
            EnsembleState::Pure(k) => k.len(),
            EnsembleState::Mixed(r) => r.dim(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            EnsembleState::Pure(k) => DensityOperator::pure(k).expect("unit vector"),
            EnsembleState::Mixed(r) => r.clone(),
        }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            EnsembleState::Pure(_) => true,
            EnsembleState::Mixed(r) => (r.purity() - 1.0).abs() <= PURE_TOL,
        }
    }
}

/// Weighted decomposition `{(p_i, rho_i)}` with `sum p_i = 1`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    dim: usize,
    items: Vec<(f64, EnsembleState)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, EnsembleState)>) -> Result<Self> {
        let dim = items
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| Error::Precondition("empty ensemble".into()))?;
        let mut total = 0.0;
        for (w, s) in &items {
            same_dim("ensemble member", dim, s.dim())?;
            if !(*w >= 0.0 && *w <= 1.0 + WEIGHT_TOL) {
                return Err(Error::OutOfRange {
                    what: "ensemble weight",
                    value: *w,
                    range: "[0, 1]",
                });
            }
            if let EnsembleState::Pure(k) = s {
                let nk = norm(k);
                if (nk * nk - 1.0).abs() > PURE_TOL {
                    return Err(Error::Precondition(format!("pure member has squared norm {}", nk * nk)));
                }
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidTrace { trace: total });
        }
        Ok(Self { dim, items })
    }

    pub fn mixed(items: Vec<(f64, DensityOperator)>) -> Result<Self> {
        Self::new(items.into_iter().map(|(w, r)| (w, EnsembleState::Mixed(r))).collect())
    }

    pub fn pure(items: Vec<(f64, Ket)>) -> Result<Self> {
        Self::new(items.into_iter().map(|(w, k)| (w, EnsembleState::Pure(k))).collect())
    }

    /// Eigen-decomposition of `rho` as a pure-state ensemble (zero weights dropped).
    pub fn eigen(rho: &DensityOperator) -> Result<Self> {
        Self::from_spectrum(&hermitian_eig(rho.matrix())?)
    }

    /// Eigen-ensemble from an already computed decomposition with vectors.
    pub fn from_spectrum(spec: &Spectrum) -> Result<Self> {
        if spec.vectors().is_none() {
            return Err(Error::Precondition("eigen-ensemble needs eigenvectors".into()));
        }
        let values = spec.clamped_values();
        let total: f64 = values.iter().filter(|&&v| v > 0.0).sum();
        let items = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (v / total, EnsembleState::Pure(spec.vector(i).expect("eigenvectors"))))
            .collect();
        Self::new(items)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[(f64, EnsembleState)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// All members pure (`tr rho_i^2 = 1` within 1e-9).
    pub fn is_pure(&self) -> bool {
        self.items.iter().all(|(_, s)| s.is_pure())
    }

    /// `sum p_i rho_i`
    pub fn average(&self) -> DensityOperator {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        let mut kets = Vec::new();
        for (w, s) in &self.items {
            match s {
                EnsembleState::Pure(k) => kets.push(k.iter().map(|z| z * w.sqrt()).collect::<Ket>()),
                EnsembleState::Mixed(r) => acc = &acc + &r.matrix().scale_real(*w),
            }
        }
        if !kets.is_empty() {
            let k = ComplexMatrix::from_columns(self.dim, &kets);
            acc = &acc + &k.matmul(&k.adjoint());
        }
        DensityOperator::from_psd_unchecked(acc)
    }
}

/// `F(psi, E(psi))^2 = sum_k |<psi|E_k|psi>|^2` for each column of `kets`.
fn pure_output_fidelities_sq(ch: &KrausChannel, kets: &ComplexMatrix) -> Vec<f64> {
    let m = kets.cols();
    let mut acc = vec![0.0; m];
    let kets_h = kets.adjoint();
    let mut rank_kets = Vec::new();
    let mut rank_bras = Vec::new();
    for op in ch.ops() {
        match op {
            KrausOp::Dense(e) => {
                let ep = e.matmul(kets);
                for (i, a) in acc.iter_mut().enumerate() {
                    let d: Complex64 = (0..kets.rows()).map(|r| kets_h[(i, r)] * ep[(r, i)]).sum();
                    *a += d.norm_sqr();
                }
            }
            KrausOp::RankOne { ket, bra } => {
                rank_kets.push(ket.clone());
                rank_bras.push(bra.clone());
            }
        }
    }
    if !rank_kets.is_empty() {
        let dim = kets.rows();
        // <psi|k><b|psi>
        let kp = ComplexMatrix::from_columns(dim, &rank_kets).adjoint().matmul(kets);
        let bp = ComplexMatrix::from_columns(dim, &rank_bras).adjoint().matmul(kets);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += (0..rank_kets.len())
                .map(|j| kp[(j, i)].norm_sqr() * bp[(j, i)].norm_sqr())
                .sum::<f64>();
        }
    }
    acc.into_iter().map(|v| v.min(1.0)).collect()
}

/// `F_bar = sum_i p_i F(rho_i, E(rho_i))^2`
pub fn ensemble_fidelity(ens: &Ensemble, ch: &KrausChannel) -> Result<f64> {
    check_channel_on(ens.dim(), ch)?;
    let mut terms = Vec::with_capacity(ens.len());
    let mut pure_weights = Vec::new();
    let mut pure_kets = Vec::new();
    for (w, s) in ens.items() {
        match s {
            EnsembleState::Pure(k) => {
                pure_weights.push(*w);
                pure_kets.push(k.clone());
            }
            EnsembleState::Mixed(r) => {
                let f = fidelity(r, &ch.apply(r)?)?;
                terms.push(w * f * f);
            }
        }
    }
    if !pure_kets.is_empty() {
        let kets = ComplexMatrix::from_columns(ens.dim(), &pure_kets);
        let f2 = pure_output_fidelities_sq(ch, &kets);
        terms.extend(pure_weights.iter().zip(f2).map(|(w, f)| w * f));
    }
    Ok(neumaier_sum(terms.into_iter()).min(1.0))
}

/// Computable bracket for the supremum of `F_bar` over pure decompositions.
#[derive(Clone, Debug, PartialEq)]
pub struct FsBounds {
    /// `F_bar` of the eigen-ensemble.
    pub lower: f64,
    /// `min(six_eta, f_output)`
    pub upper: f64,
    /// `6 eta_d(rho)`
    pub six_eta: f64,
    /// `F(rho, E(rho))`
    pub f_output: f64,
}

pub fn fs_bounds(rho: &DensityOperator, ch: &KrausChannel, d_compressed: usize) -> Result<FsBounds> {
    fs_bounds_with_spectrum(rho, &hermitian_eig(rho.matrix())?, ch, d_compressed)
}

/// [`fs_bounds`] reusing `spectrum`, the eigendecomposition of `rho` with vectors.
pub fn fs_bounds_with_spectrum(
    rho: &DensityOperator,
    spectrum: &Spectrum,
    ch: &KrausChannel,
    d_compressed: usize,
) -> Result<FsBounds> {
    check_channel_on(rho.dim(), ch)?;
    same_dim("spectrum", rho.dim(), spectrum.len())?;
    let ens = Ensemble::from_spectrum(spectrum)?;
    let lower = ensemble_fidelity(&ens, ch)?;
    let classes = ClassSpectrum::from_spectrum(spectrum);
    let six_eta = 6.0 * eta(&classes, &BigUint::from(d_compressed))?;
    let floor = noise_floor(spectrum.values());
    let sqrt_rho = spectrum
        .map_reconstruct(|x| if x > floor { x.sqrt() } else { 0.0 })
        .expect("checked above")
        .hermitian_part();
    let f_output = fidelity_with_sqrt(&sqrt_rho, &ch.apply(rho)?)?;
    Ok(FsBounds {
        lower,
        upper: six_eta.min(f_output),
        six_eta,
        f_output,
    })
}

/// Slack of each checked inequality; negative means violated.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    /// `T(rho, sigma) - (1 - F(rho, sigma))`
    pub trace_distance_lower: f64,
    /// `sqrt(1 - F^2) - T`
    pub trace_distance_upper: f64,
    /// `F_e`
    pub fe_nonnegative: f64,
    /// `F_bar - F_e`
    pub fe_below_fbar: f64,
    /// `F(rho, E(rho)) - F_bar`
    pub fbar_below_f: f64,
    /// `1 - F(rho, E(rho))`
    pub f_below_one: f64,
    /// `2 log2(d) sqrt(1 - F^2) + 1/n - |S(rho) - S(E(rho))| / n`
    pub fannes: f64,
}

impl InequalityReport {
    pub fn slacks(&self) -> [(&'static str, f64); 7] {
        [
            ("trace_distance_lower", self.trace_distance_lower),
            ("trace_distance_upper", self.trace_distance_upper),
            ("fe_nonnegative", self.fe_nonnegative),
            ("fe_below_fbar", self.fe_below_fbar),
            ("fbar_below_f", self.fbar_below_f),
            ("f_below_one", self.f_below_one),
            ("fannes", self.fannes),
        ]
    }

    pub fn worst(&self) -> f64 {
        self.slacks().iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.worst() >= -INEQUALITY_TOL
    }
}

/// Evaluates the fidelity/trace-distance inequalities, the chain
/// `0 <= F_e <= F_bar <= F(rho, E(rho)) <= 1` and the entropy continuity bound.
///
/// `sites = (d, n)` describes `rho` as an `n`-site block over a `d`-level
/// site; without it the whole space counts as one site.
pub fn check_inequalities(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    ens: &Ensemble,
    ch: &KrausChannel,
    sites: Option<(usize, usize)>,
) -> Result<InequalityReport> {
    same_dim("inequality check", rho.dim(), sigma.dim())?;
    same_dim("ensemble", rho.dim(), ens.dim())?;
    check_channel_on(rho.dim(), ch)?;
    let avg_dev = ens.average().matrix().max_abs_diff(rho.matrix());
    if avg_dev > INEQUALITY_TOL {
        return Err(Error::Precondition(format!(
            "ensemble average differs from rho by {avg_dev:e}"
        )));
    }
    let f = fidelity(rho, sigma)?;
    let t = trace_distance(rho, sigma)?;
    let fe = entanglement_fidelity_kraus(rho, ch)?;
    let fbar = ensemble_fidelity(ens, ch)?;
    let out = ch.apply(rho)?;
    let f_out = fidelity(rho, &out)?;
    let (d, n) = sites.unwrap_or((rho.dim(), 1));
    let nf = n as f64;
    let ds = (von_neumann_entropy(rho)? - von_neumann_entropy(&out)?).abs();
    Ok(InequalityReport {
        trace_distance_lower: t - (1.0 - f),
        trace_distance_upper: (1.0 - f * f).max(0.0).sqrt() - t,
        fe_nonnegative: fe,
        fe_below_fbar: fbar - fe,
        fbar_below_f: f_out - fbar,
        f_below_one: 1.0 - f_out,
        fannes: 2.0 * (d as f64).log2() * (1.0 - f_out * f_out).max(0.0).sqrt() + 1.0 / nf - ds / nf,
    })
}

/// `|<psi|phi>|` for unit vectors.
pub fn overlap(psi: &[Complex64], phi: &[Complex64]) -> f64 {
    inner(psi, phi).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_compression, build_decompression, compose};
    use crate::linalg::{Projector, ONE};
    use crate::random::{random_channel, random_density, random_pure, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reset_channel() -> KrausChannel {
        KrausChannel::from_matrices(vec![
            ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
            ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    fn ket0() -> DensityOperator {
        DensityOperator::diagonal(&[1.0, 0.0]).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&mut rng, 3);
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);
        let one = DensityOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(fidelity(&ket0(), &one).unwrap(), 0.0, epsilon = 1e-12);
        let half = DensityOperator::maximally_mixed(2);
        assert_abs_diff_eq!(fidelity(&ket0(), &half).unwrap(), 0.5_f64.sqrt(), epsilon = 1e-12);
        assert!(fidelity(&ket0(), &DensityOperator::maximally_mixed(3)).is_err());
    }

    #[test]
    fn fidelity_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [2, 3, 4] {
            let a = random_density(&mut rng, dim);
            let b = random_density(&mut rng, dim);
            let f = fidelity(&a, &b).unwrap();
            assert_abs_diff_eq!(f, fidelity_nuclear(&a, &b).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(f, fidelity(&b, &a).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn pure_states_reduce_to_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_pure(&mut rng, 4);
        let phi = random_pure(&mut rng, 4);
        let f = fidelity(
            &DensityOperator::pure(&psi).unwrap(),
            &DensityOperator::pure(&phi).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(f, overlap(&psi, &phi), epsilon = 1e-9);
    }

    #[test]
    fn trace_distance_examples() {
        let rho = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-15);
        let one = DensityOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(trace_distance(&ket0(), &one).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            trace_distance(&rho, &DensityOperator::maximally_mixed(2)).unwrap(),
            0.4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn entanglement_fidelity_examples() {
        let half = DensityOperator::maximally_mixed(2);
        let id = KrausChannel::identity(2);
        assert_abs_diff_eq!(entanglement_fidelity_kraus(&half, &id).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            entanglement_fidelity_purification(&half, &id, None, DEFAULT_PURIFICATION_CAP).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        let ch = reset_channel();
        assert_abs_diff_eq!(entanglement_fidelity_kraus(&half, &ch).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(
            entanglement_fidelity_purification(&half, &ch, None, DEFAULT_PURIFICATION_CAP).unwrap(),
            0.25,
            epsilon = 1e-8
        );
        assert!(entanglement_fidelity_purification(
            &DensityOperator::maximally_mixed(70),
            &KrausChannel::identity(70),
            None,
            DEFAULT_PURIFICATION_CAP
        )
        .is_err());
    }

    #[test]
    fn purification_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(&mut rng, 3);
        let ch = random_channel(&mut rng, 3, 3);
        let w = random_unitary(&mut rng, 3);
        let a = entanglement_fidelity_purification(&rho, &ch, None, 4096).unwrap();
        let b = entanglement_fidelity_purification(&rho, &ch, Some(&w), 4096).unwrap();
        let c = entanglement_fidelity_kraus(&rho, &ch).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        assert_abs_diff_eq!(a, c, epsilon = 1e-8);
    }

    #[test]
    fn ensemble_fidelity_examples() {
        let half = DensityOperator::maximally_mixed(2);
        let ens = Ensemble::eigen(&half).unwrap();
        assert_abs_diff_eq!(
            ensemble_fidelity(&ens, &KrausChannel::identity(2)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(ensemble_fidelity(&ens, &reset_channel()).unwrap(), 0.5, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density(&mut rng, 3);
        let ch = random_channel(&mut rng, 3, 2);
        let single = Ensemble::mixed(vec![(1.0, rho.clone())]).unwrap();
        let f = fidelity(&rho, &ch.apply(&rho).unwrap()).unwrap();
        assert_abs_diff_eq!(ensemble_fidelity(&single, &ch).unwrap(), f * f, epsilon = 1e-12);
    }

    #[test]
    fn pure_and_mixed_members_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch = random_channel(&mut rng, 4, 3);
        let kets: Vec<Ket> = (0..3).map(|_| random_pure(&mut rng, 4)).collect();
        let weights = [0.5, 0.3, 0.2];
        let pure = Ensemble::pure(weights.iter().copied().zip(kets.iter().cloned()).collect()).unwrap();
        let mixed = Ensemble::mixed(
            weights
                .iter()
                .zip(&kets)
                .map(|(&w, k)| (w, DensityOperator::pure(k).unwrap()))
                .collect(),
        )
        .unwrap();
        assert!(pure.is_pure() && mixed.is_pure());
        assert_abs_diff_eq!(
            ensemble_fidelity(&pure, &ch).unwrap(),
            ensemble_fidelity(&mixed, &ch).unwrap(),
            epsilon = 1e-9
        );
        assert!(pure.average().matrix().max_abs_diff(mixed.average().matrix()) < 1e-12);
    }

    #[test]
    fn fs_bounds_examples() {
        let half = DensityOperator::maximally_mixed(2);
        let b = fs_bounds(&half, &KrausChannel::identity(2), 2).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-9);

        let p = Projector::from_vectors(2, &[vec![ONE, ZERO]]).unwrap();
        let c = build_compression(&p, &[ONE, ZERO]).unwrap();
        let rt = compose(&c, &build_decompression(&p).unwrap()).unwrap();
        let b = fs_bounds(&half, &rt, 1).unwrap();
        assert_abs_diff_eq!(b.lower, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.six_eta, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.upper, 0.5_f64.sqrt(), epsilon = 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = DensityOperator::pure(&random_pure(&mut rng, 3)).unwrap();
        let ch = random_channel(&mut rng, 3, 2);
        let b = fs_bounds(&psi, &ch, 1).unwrap();
        assert_abs_diff_eq!(b.lower, entanglement_fidelity_kraus(&psi, &ch).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn inequalities_hold_on_equal_states() {
        let rho = DensityOperator::diagonal(&[0.7, 0.3]).unwrap();
        let ens = Ensemble::eigen(&rho).unwrap();
        let r = check_inequalities(&rho, &rho, &ens, &KrausChannel::identity(2), None).unwrap();
        assert_abs_diff_eq!(r.trace_distance_lower, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.trace_distance_upper, 0.0, epsilon = 1e-4);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn mismatched_ensemble_is_rejected() {
        let rho = DensityOperator::diagonal(&[0.7, 0.3]).unwrap();
        let ens = Ensemble::eigen(&DensityOperator::maximally_mixed(2)).unwrap();
        let r = check_inequalities(&rho, &rho, &ens, &KrausChannel::identity(2), None);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
