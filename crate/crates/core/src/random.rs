//! Seeded generators for random states, unitaries and channels.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{KrausChannel, KrausOp};
use crate::linalg::{inner, norm, ComplexMatrix, DensityOperator, Ket};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_ket(rng: &mut impl Rng, dim: usize) -> Ket {
    (0..dim).map(|_| gaussian(rng)).collect()
}

/// Haar-random unit vector.
pub fn random_pure(rng: &mut impl Rng, dim: usize) -> Ket {
    let v = gaussian_ket(rng, dim);
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// `G G^dagger / tr(G G^dagger)` for a complex Gaussian `G`; full rank almost surely.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let t = w.trace().re;
    DensityOperator::from_psd_unchecked(w.scale_real(1.0 / t))
}

/// `rows x cols` matrix with orthonormal columns (Gram-Schmidt on Gaussian columns).
pub fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows);
    let mut columns: Vec<Ket> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v = gaussian_ket(rng, rows);
        for _ in 0..2 {
            for q in &columns {
                let c = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            columns.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_columns(rows, &columns)
}

pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    random_isometry(rng, dim, dim)
}

/// Channel on `dim` with `terms` Kraus operators cut from one random isometry
/// `C^dim -> C^(terms * dim)`.
pub fn random_channel(rng: &mut impl Rng, dim: usize, terms: usize) -> KrausChannel {
    let v = random_isometry(rng, dim * terms, dim);
    let ops = (0..terms)
        .map(|k| KrausOp::Dense(ComplexMatrix::from_fn(dim, dim, |i, j| v[(k * dim + i, j)])))
        .collect();
    KrausChannel::new(ops).expect("isometry blocks are complete")
}

/// Random probability vector of the given length (normalized exponentials).
pub fn random_distribution(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
