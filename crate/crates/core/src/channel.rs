//! Trace-preserving operations in Kraus form and the projective compression
//! schemes built from high-probability subspaces.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::bigmath::floor_pow2;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, inner, norm, ComplexMatrix, DensityOperator, Ket, Projector, Spectrum, ZERO};
use crate::source::{ClassSpectrum, SourceModel};
use crate::typicality::{beta, eta_usize, HighProbSubspace};

/// Completeness tolerance for constructed channels.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Looser completeness tolerance accepted for compositions.
pub const COMPOSED_COMPLETENESS_TOL: f64 = 1e-9;
/// Kraus operators with Frobenius norm below this are dropped by [`compose`].
pub const PRUNE_NORM: f64 = 1e-14;

/// One Kraus operator. Compression maps carry many operators of the form
/// `|0><e|`, which are kept factored.
#[derive(Clone, Debug, PartialEq)]
pub enum KrausOp {
    Dense(ComplexMatrix),
    /// `|ket><bra|`
    RankOne {
        ket: Ket,
        bra: Ket,
    },
}

impl KrausOp {
    pub fn out_dim(&self) -> usize {
        match self {
            KrausOp::Dense(m) => m.rows(),
            KrausOp::RankOne { ket, .. } => ket.len(),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            KrausOp::Dense(m) => m.cols(),
            KrausOp::RankOne { bra, .. } => bra.len(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            KrausOp::Dense(m) => m.frobenius_norm(),
            KrausOp::RankOne { ket, bra } => norm(ket) * norm(bra),
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        match self {
            KrausOp::Dense(m) => m.clone(),
            KrausOp::RankOne { ket, bra } => ComplexMatrix::outer(ket, bra),
        }
    }

    /// `E v`
    pub fn apply_vec(&self, v: &[Complex64]) -> Ket {
        match self {
            KrausOp::Dense(m) => m.mul_vec(v),
            KrausOp::RankOne { ket, bra } => {
                let c = inner(bra, v);
                ket.iter().map(|k| k * c).collect()
            }
        }
    }

    /// `tr(rho E)`
    pub fn trace_against(&self, rho: &ComplexMatrix) -> Complex64 {
        match self {
            KrausOp::Dense(e) => {
                let n = rho.rows();
                let mut acc = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        acc += rho[(i, j)] * e[(j, i)];
                    }
                }
                acc
            }
            KrausOp::RankOne { ket, bra } => inner(bra, &rho.mul_vec(ket)),
        }
    }

    /// `self * other` (apply `other` first).
    fn after(&self, other: &KrausOp) -> KrausOp {
        match (self, other) {
            (KrausOp::Dense(b), KrausOp::Dense(a)) => KrausOp::Dense(b.matmul(a)),
            (KrausOp::Dense(b), KrausOp::RankOne { ket, bra }) => KrausOp::RankOne {
                ket: b.mul_vec(ket),
                bra: bra.clone(),
            },
            (KrausOp::RankOne { ket, bra }, KrausOp::Dense(a)) => KrausOp::RankOne {
                ket: ket.clone(),
                bra: a.adjoint().mul_vec(bra),
            },
            (KrausOp::RankOne { ket: k2, bra: b2 }, KrausOp::RankOne { ket: k1, bra: b1 }) => {
                let c = inner(b2, k1);
                KrausOp::RankOne {
                    ket: k2.iter().map(|z| z * c).collect(),
                    bra: b1.clone(),
                }
            }
        }
    }
}

/// Completely positive trace-preserving map `rho -> sum_i E_i rho E_i^dagger`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    ops: Vec<KrausOp>,
    pruned: usize,
}

impl KrausChannel {
    /// Validates shapes and completeness `sum E_i^dagger E_i = 1` within 1e-10.
    pub fn new(ops: Vec<KrausOp>) -> Result<Self> {
        Self::with_tolerance(ops, COMPLETENESS_TOL, 0)
    }

    fn with_tolerance(ops: Vec<KrausOp>, tol: f64, pruned: usize) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Numerical("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = (first.out_dim(), first.in_dim());
        for op in &ops {
            if op.out_dim() != out_dim || op.in_dim() != in_dim {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator shape",
                    expected: out_dim * in_dim,
                    got: op.out_dim() * op.in_dim(),
                });
            }
        }
        let ch = Self {
            in_dim,
            out_dim,
            ops,
            pruned,
        };
        let residual = ch.completeness_residual();
        if !(residual <= tol) {
            return Err(Error::Numerical(format!(
                "Kraus completeness violated: max |sum E^dagger E - 1| = {residual:e}"
            )));
        }
        Ok(ch)
    }

    pub fn from_matrices(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(ops.into_iter().map(KrausOp::Dense).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            ops: vec![KrausOp::Dense(ComplexMatrix::identity(dim))],
            pruned: 0,
        }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::NotSquare {
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        Self::new(vec![KrausOp::Dense(u)])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn ops(&self) -> &[KrausOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Operators dropped as negligible while composing.
    pub fn pruned(&self) -> usize {
        self.pruned
    }

    pub fn is_square(&self) -> bool {
        self.in_dim == self.out_dim
    }

    pub(crate) fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NonSquareChannel {
                in_dim: self.in_dim,
                out_dim: self.out_dim,
            })
        }
    }

    fn split_ops(&self) -> (Vec<&ComplexMatrix>, Vec<(&Ket, &Ket)>) {
        let mut dense = Vec::new();
        let mut rank_one = Vec::new();
        for op in &self.ops {
            match op {
                KrausOp::Dense(m) => dense.push(m),
                KrausOp::RankOne { ket, bra } => rank_one.push((ket, bra)),
            }
        }
        (dense, rank_one)
    }

    /// `max |sum E_i^dagger E_i - 1|`
    pub fn completeness_residual(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        let (dense, rank_one) = self.split_ops();
        for e in dense {
            acc = &acc + &e.adjoint().matmul(e);
        }
        if !rank_one.is_empty() {
            // sum |k|^2 |b><b| = B diag(|k|^2) B^dagger
            let bras: Vec<Ket> = rank_one
                .iter()
                .map(|(k, b)| {
                    let s = norm(k);
                    b.iter().map(|z| z * s).collect()
                })
                .collect();
            let b = ComplexMatrix::from_columns(self.in_dim, &bras);
            acc = &acc + &b.matmul(&b.adjoint());
        }
        acc.max_abs_diff(&ComplexMatrix::identity(self.in_dim))
    }

    /// `sum_i E_i m E_i^dagger` for an arbitrary `in_dim x in_dim` matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.in_dim || m.cols() != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "channel input",
                expected: self.in_dim,
                got: m.rows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        let (dense, rank_one) = self.split_ops();
        for e in dense {
            out = &out + &e.matmul(m).matmul(&e.adjoint());
        }
        if !rank_one.is_empty() {
            // each term is <b|m|b> |k><k|, i.e. K diag(w) K^dagger
            let bras: Vec<Ket> = rank_one.iter().map(|(_, b)| (*b).clone()).collect();
            let mb = m.matmul(&ComplexMatrix::from_columns(self.in_dim, &bras));
            let weights: Vec<Complex64> = rank_one
                .iter()
                .enumerate()
                .map(|(i, (_, b))| b.iter().enumerate().map(|(r, z)| z.conj() * mb[(r, i)]).sum())
                .collect();
            let kets: Vec<Ket> = rank_one.iter().map(|(k, _)| (*k).clone()).collect();
            let km = ComplexMatrix::from_columns(self.out_dim, &kets);
            let scaled = ComplexMatrix::from_fn(self.out_dim, kets.len(), |r, c| km[(r, c)] * weights[c]);
            out = &out + &scaled.matmul(&km.adjoint());
        }
        Ok(out)
    }

    /// `E(rho)`
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.matrix())?;
        Ok(DensityOperator::from_psd_unchecked(out.hermitian_part()))
    }
}

/// `b o a`: Kraus set `{B_j A_i}`, negligible products dropped and counted.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.out_dim != b.in_dim {
        return Err(Error::DimensionMismatch {
            context: "channel composition",
            expected: a.out_dim,
            got: b.in_dim,
        });
    }
    let mut ops = Vec::with_capacity(a.ops.len() * b.ops.len());
    let mut pruned = a.pruned + b.pruned;
    for bj in &b.ops {
        for ai in &a.ops {
            let op = bj.after(ai);
            if op.frobenius_norm() < PRUNE_NORM {
                pruned += 1;
            } else {
                ops.push(op);
            }
        }
    }
    KrausChannel::with_tolerance(ops, COMPOSED_COMPLETENESS_TOL, pruned)
}

/// Compression onto the range of `p`:
/// `rho -> P rho P + sum_e |0><e| rho |e><0|` over a basis of the complement,
/// written in the coordinates of `p`'s basis (output dimension `rank P`).
pub fn build_compression(p: &Projector, zero_vec: &[Complex64]) -> Result<KrausChannel> {
    let complement = p.complement();
    let basis: Vec<Ket> = (0..complement.rank()).map(|k| complement.basis_vector(k)).collect();
    build_compression_with_complement(p, zero_vec, &basis)
}

/// As [`build_compression`], with a caller-supplied orthonormal basis of the complement.
pub fn build_compression_with_complement(
    p: &Projector,
    zero_vec: &[Complex64],
    complement: &[Ket],
) -> Result<KrausChannel> {
    if zero_vec.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "zero vector",
            expected: p.dim(),
            got: zero_vec.len(),
        });
    }
    if p.rank() == 0 {
        return Err(Error::EmptySubspace("compression onto a rank-0 projector".into()));
    }
    if complement.len() + p.rank() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "complement basis size",
            expected: p.dim() - p.rank(),
            got: complement.len(),
        });
    }
    let residual = p.range_residual(zero_vec);
    if residual > 1e-10 || (norm(zero_vec) - 1.0).abs() > 1e-10 {
        return Err(Error::OutsideRange { residual });
    }
    let zero_c = p.coordinates(zero_vec);
    let mut ops = Vec::with_capacity(1 + complement.len());
    ops.push(KrausOp::Dense(p.basis().adjoint()));
    ops.extend(complement.iter().map(|e| KrausOp::RankOne {
        ket: zero_c.clone(),
        bra: e.clone(),
    }));
    KrausChannel::new(ops)
}

/// Canonical embedding of the compressed coordinates back into the full space.
pub fn build_decompression(p: &Projector) -> Result<KrausChannel> {
    KrausChannel::new(vec![KrausOp::Dense(p.basis().clone())])
}

/// How the subspace of a scheme is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeMode {
    /// Minimal high-probability subspace with mass at least `1 - eps`.
    Epsilon(f64),
    /// Top `floor(2^{nR})` eigenvectors.
    Rate(f64),
}

/// Compressor/decompressor pair for one block length, with the data it was built from.
#[derive(Clone, Debug)]
pub struct CompressionScheme {
    pub n: usize,
    pub mode: SchemeMode,
    pub state: DensityOperator,
    pub spectrum: Spectrum,
    pub classes: ClassSpectrum,
    /// Present in epsilon mode.
    pub high_prob: Option<HighProbSubspace>,
    pub projector: Projector,
    /// `tr(rho P)`
    pub captured_mass: f64,
    pub zero_vec: Ket,
    pub compressor: KrausChannel,
    pub decompressor: KrausChannel,
    /// `D o C`
    pub round_trip: KrausChannel,
}

impl CompressionScheme {
    pub fn rank(&self) -> usize {
        self.projector.rank()
    }

    /// `log2(rank P)`
    pub fn rate_log2dim(&self) -> f64 {
        (self.rank() as f64).log2()
    }

    /// `log2(rank P) / n`
    pub fn rate(&self) -> f64 {
        self.rate_log2dim() / self.n as f64
    }

    /// `ceil(log2 rank P)`, qubits needed for the compressed space.
    pub fn qubits(&self) -> u32 {
        (self.rank() as u64).next_power_of_two().trailing_zeros()
    }
}

/// Builds the compression scheme for `src` at block length `n` from the
/// dense block state.
pub fn make_scheme(src: &SourceModel, n: usize, mode: SchemeMode) -> Result<CompressionScheme> {
    let state = src.block_state(n)?;
    let spectrum = hermitian_eig(state.matrix())?;
    let classes = ClassSpectrum::from_spectrum(&spectrum);
    let dim = state.dim();
    let (rank, high_prob) = match mode {
        SchemeMode::Epsilon(eps) => {
            let hp = beta(&classes, eps)?;
            let rank = hp.rank().expect("dense rank fits usize");
            (rank, Some(hp))
        }
        SchemeMode::Rate(r) => {
            if !r.is_finite() {
                return Err(Error::OutOfRange {
                    what: "target rate",
                    value: r,
                    range: "finite",
                });
            }
            let k = floor_pow2(n as f64 * r).min(BigUint::from(dim));
            let k = k.to_usize().expect("bounded by dimension");
            if k == 0 {
                return Err(Error::EmptySubspace(format!("2^(nR) < 1 at n={n}, R={r}")));
            }
            (k, None)
        }
    };
    // classes are single eigenvectors in spectrum order, so the selection is a prefix
    let vecs = spectrum.vectors().expect("dense eigenvectors");
    let selected: Vec<Ket> = (0..rank).map(|k| vecs.column(k)).collect();
    let rest: Vec<Ket> = (rank..dim).map(|k| vecs.column(k)).collect();
    let projector = Projector::from_vectors(dim, &selected)?;
    let zero_vec = selected[0].clone();
    let compressor = build_compression_with_complement(&projector, &zero_vec, &rest)?;
    let decompressor = build_decompression(&projector)?;
    let round_trip = compose(&compressor, &decompressor)?;
    let captured_mass = eta_usize(&classes, rank)?;
    Ok(CompressionScheme {
        n,
        mode,
        state,
        spectrum,
        classes,
        high_prob,
        projector,
        captured_mass,
        zero_vec,
        compressor,
        decompressor,
        round_trip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::random::{random_density, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn amplitude_reset() -> KrausChannel {
        KrausChannel::from_matrices(vec![
            ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
            ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&mut rng, 3);
        let same = KrausChannel::identity(3).apply(&rho).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let u = random_unitary(&mut rng, 3);
        let out = KrausChannel::unitary(u.clone()).unwrap().apply(&rho).unwrap();
        assert!(out.matrix().max_abs_diff(&u.matmul(rho.matrix()).matmul(&u.adjoint())) < 1e-14);

        let reset = amplitude_reset().apply(&DensityOperator::maximally_mixed(2)).unwrap();
        assert!(reset.matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn incomplete_kraus_set_is_rejected() {
        let half = ComplexMatrix::diag(&[1.0, 0.5]);
        assert!(KrausChannel::from_matrices(vec![half]).is_err());
        assert!(KrausChannel::unitary(ComplexMatrix::diag(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn qubit_compression_resets_to_zero() {
        let p = Projector::from_vectors(2, &[vec![ONE, ZERO]]).unwrap();
        let c = build_compression(&p, &[ONE, ZERO]).unwrap();
        assert_eq!(c.out_dim(), 1);
        assert_eq!(c.len(), 2);
        let d = build_decompression(&p).unwrap();
        let rt = compose(&c, &d).unwrap();
        let m = rt.ops().iter().map(KrausOp::to_matrix).collect::<Vec<_>>();
        assert!(m[0].max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()) < 1e-15);
        assert!(m[1].max_abs_diff(&ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = rt.apply(&random_density(&mut rng, 2)).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn zero_vec_outside_range_is_rejected() {
        let p = Projector::from_vectors(2, &[vec![ONE, ZERO]]).unwrap();
        assert!(matches!(
            build_compression(&p, &[ZERO, ONE]),
            Err(Error::OutsideRange { .. })
        ));
    }

    #[test]
    fn full_projector_gives_identity() {
        let p = Projector::full(3);
        let c = build_compression(&p, &[ONE, ZERO, ZERO]).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.ops()[0].to_matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        let d = build_decompression(&p).unwrap();
        assert!(d.ops()[0].to_matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn composition_of_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary(&mut rng, 3);
        let v = random_unitary(&mut rng, 3);
        let ch = compose(
            &KrausChannel::unitary(u.clone()).unwrap(),
            &KrausChannel::unitary(v.clone()).unwrap(),
        )
        .unwrap();
        assert!(ch.ops()[0].to_matrix().max_abs_diff(&v.matmul(&u)) < 1e-14);
        assert!(compose(&KrausChannel::identity(2), &KrausChannel::identity(3)).is_err());
    }

    #[test]
    fn scheme_examples() {
        let src = SourceModel::iid(DensityOperator::diagonal(&[0.9, 0.1]).unwrap());
        let s = make_scheme(&src, 1, SchemeMode::Epsilon(0.15)).unwrap();
        assert_eq!(s.rank(), 1);
        assert_eq!(s.rate_log2dim(), 0.0);

        let s = make_scheme(&src, 3, SchemeMode::Epsilon(0.999)).unwrap();
        assert_eq!(s.rank(), 1);

        let s = make_scheme(&src, 3, SchemeMode::Rate(1.0)).unwrap();
        assert_eq!(s.rank(), 8);
        let out = s.round_trip.apply(&s.state).unwrap();
        assert!(out.matrix().max_abs_diff(s.state.matrix()) < 1e-14);

        assert_eq!(make_scheme(&src, 2, SchemeMode::Rate(0.1)).unwrap().rank(), 1);
        assert!(matches!(
            make_scheme(&src, 2, SchemeMode::Rate(-0.1)),
            Err(Error::EmptySubspace(_))
        ));
    }

    #[test]
    fn round_trip_fixes_states_in_range() {
        let src = SourceModel::iid(
            DensityOperator::diagonal(&[0.8, 0.2])
                .unwrap()
                .conjugate(&ComplexMatrix::hadamard()),
        );
        let s = make_scheme(&src, 4, SchemeMode::Epsilon(0.2)).unwrap();
        let v = s.projector.basis_vector(s.rank() - 1);
        let psi = DensityOperator::pure(&v).unwrap();
        let out = s.round_trip.apply(&psi).unwrap();
        assert!(out.matrix().max_abs_diff(psi.matrix()) < 1e-10);
        assert!(s.captured_mass >= 0.8);
        assert!(s.round_trip.completeness_residual() <= COMPOSED_COMPLETENESS_TOL);
    }
}
