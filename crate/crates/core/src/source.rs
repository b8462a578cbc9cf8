//! Stationary ergodic sources and the spectra of their block states.
//!
//! Two families are provided:
//!
//! - i.i.d. product sources `rho_1^{(x) n}`;
//! - classical irreducible aperiodic Markov chains whose letters are rotated
//!   by a fixed single-site unitary, `U^{(x) n} diag(p(w)) U^{(x) n}^dagger`.
//!
//! Both admit exact entropy rates and spectra that can be enumerated without
//! materializing `d^n x d^n` matrices ([`ClassSpectrum`]). For the Markov
//! family the spectrum is the distribution of word probabilities, aggregated
//! either word by word or by (first letter, transition count matrix).

use std::fmt;

use faer::Mat;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bigmath::{det_i128, factorials, log2_big};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_site, hermitian_eig, kron, partial_trace, ComplexMatrix, DensityOperator, Spectrum};

pub const DEFAULT_DENSE_CAP: usize = 4096;
pub const DEFAULT_WORD_CAP_BITS: f64 = 24.0;
pub const DEFAULT_CLASS_CAP: usize = 4_000_000;

const STOCHASTIC_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;
/// Site eigenvalues closer than this are merged into one level.
const LEVEL_MERGE_TOL: f64 = 1e-12;

/// Row-stochastic transition matrix with an initial distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    dim: usize,
    transition: Vec<f64>,
    initial: Vec<f64>,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// Stationary chain: validates the matrix and starts in its stationary law.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let (dim, transition) = validate_transition(rows)?;
        let stationary = stationary_distribution(dim, &transition)?;
        Ok(Self {
            dim,
            initial: stationary.clone(),
            transition,
            stationary,
        })
    }

    /// Chain started from an arbitrary distribution. The resulting family is
    /// not shift invariant unless `initial` is stationary; useful for
    /// exercising the consistency checks.
    pub fn with_initial(rows: &[Vec<f64>], initial: Vec<f64>) -> Result<Self> {
        let mut chain = Self::new(rows)?;
        if initial.len() != chain.dim {
            return Err(Error::DimensionMismatch {
                context: "initial distribution",
                expected: chain.dim,
                got: initial.len(),
            });
        }
        let total: f64 = initial.iter().sum();
        if initial.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidSource {
                invariant: "probability-vector",
                detail: format!("initial distribution {initial:?}"),
            });
        }
        chain.initial = initial;
        Ok(chain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.dim + j]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `max_j |(pi M)_j - pi_j|` for the initial distribution.
    pub fn stationarity_residual(&self) -> f64 {
        (0..self.dim)
            .map(|j| {
                let pushed: f64 = (0..self.dim).map(|i| self.initial[i] * self.transition(i, j)).sum();
                (pushed - self.initial[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `-sum_i pi_i sum_j M_ij log2 M_ij` in bits per letter.
    pub fn entropy_rate(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let row: f64 = (0..self.dim)
                    .map(|j| {
                        let m = self.transition(i, j);
                        if m > 0.0 {
                            -m * m.log2()
                        } else {
                            0.0
                        }
                    })
                    .sum();
                self.stationary[i] * row
            })
            .sum()
    }

    /// Probabilities of all words of length `n`, first letter most significant.
    pub fn word_probabilities(&self, n: usize) -> Vec<f64> {
        let d = self.dim;
        let mut probs = self.initial.clone();
        for _ in 1..n {
            let mut next = Vec::with_capacity(probs.len() * d);
            for (w, &p) in probs.iter().enumerate() {
                let last = w % d;
                next.extend((0..d).map(|j| p * self.transition(last, j)));
            }
            probs = next;
        }
        probs
    }
}

fn validate_transition(rows: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let dim = rows.len();
    if dim == 0 {
        return Err(Error::InvalidSource {
            invariant: "row-stochastic",
            detail: "empty transition matrix".into(),
        });
    }
    let mut flat = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::InvalidSource {
                invariant: "row-stochastic",
                detail: format!("row {i} has {} entries, expected {dim}", row.len()),
            });
        }
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidSource {
                invariant: "row-stochastic",
                detail: format!("row {i} has a negative or non-finite entry"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidSource {
                invariant: "row-stochastic",
                detail: format!("row {i} sums to {sum}"),
            });
        }
        flat.extend_from_slice(row);
    }
    if !is_primitive(dim, &flat) {
        return Err(Error::InvalidSource {
            invariant: "irreducible-aperiodic",
            detail: format!("no power M^k with k <= {} is entrywise positive", dim * dim),
        });
    }
    Ok((dim, flat))
}

/// Some power `M^k`, `k <= dim^2`, has all entries positive.
fn is_primitive(dim: usize, m: &[f64]) -> bool {
    let pattern: Vec<bool> = m.iter().map(|&x| x > 0.0).collect();
    let mut power = pattern.clone();
    for _ in 0..dim * dim {
        if power.iter().all(|&b| b) {
            return true;
        }
        let mut next = vec![false; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                next[i * dim + j] = (0..dim).any(|k| power[i * dim + k] && pattern[k * dim + j]);
            }
        }
        power = next;
    }
    power.iter().all(|&b| b)
}

/// Solves `pi M = pi`, `sum pi = 1` by replacing one balance equation with the normalization.
fn stationary_distribution(dim: usize, m: &[f64]) -> Result<Vec<f64>> {
    let a = Mat::<f64>::from_fn(dim, dim, |r, c| {
        if r == dim - 1 {
            1.0
        } else {
            m[c * dim + r] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut rhs = Mat::<f64>::zeros(dim, 1);
    rhs[(dim - 1, 0)] = 1.0;
    let lu = a.partial_piv_lu();
    let sol = faer::linalg::solvers::Solve::solve(&lu, &rhs);
    let pi: Vec<f64> = (0..dim).map(|i| sol[(i, 0)].max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.into_iter().map(|p| p / total).collect();
    let residual = (0..dim)
        .map(|j| ((0..dim).map(|i| pi[i] * m[i * dim + j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_TOL {
        return Err(Error::InvalidSource {
            invariant: "stationary",
            detail: format!("pi M = pi residual {residual:e}"),
        });
    }
    Ok(pi)
}

#[derive(Clone, Debug)]
pub enum SourceKind {
    Iid {
        site_state: DensityOperator,
    },
    RotatedMarkov {
        chain: MarkovChain,
        rotation: ComplexMatrix,
    },
}

/// Generator of the consistent family of block states `rho^(n)`.
#[derive(Clone, Debug)]
pub struct SourceModel {
    kind: SourceKind,
    dense_cap: usize,
    word_cap_bits: f64,
    class_cap: usize,
}

impl SourceModel {
    pub fn iid(site_state: DensityOperator) -> Self {
        Self::with_kind(SourceKind::Iid { site_state })
    }

    pub fn rotated_markov(chain: MarkovChain, rotation: ComplexMatrix) -> Result<Self> {
        if rotation.rows() != chain.dim() || rotation.cols() != chain.dim() {
            return Err(Error::InvalidSource {
                invariant: "unitary",
                detail: format!(
                    "rotation is {}x{}, alphabet size {}",
                    rotation.rows(),
                    rotation.cols(),
                    chain.dim()
                ),
            });
        }
        let dev = rotation
            .adjoint()
            .matmul(&rotation)
            .max_abs_diff(&ComplexMatrix::identity(chain.dim()));
        if dev > UNITARY_TOL {
            return Err(Error::InvalidSource {
                invariant: "unitary",
                detail: format!("|U^dagger U - 1|_max = {dev:e}"),
            });
        }
        Ok(Self::with_kind(SourceKind::RotatedMarkov { chain, rotation }))
    }

    fn with_kind(kind: SourceKind) -> Self {
        Self {
            kind,
            dense_cap: DEFAULT_DENSE_CAP,
            word_cap_bits: DEFAULT_WORD_CAP_BITS,
            class_cap: DEFAULT_CLASS_CAP,
        }
    }

    /// Largest `d^n` for which dense block states are built.
    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    /// Largest `n log2 d` for word-by-word Markov enumeration.
    pub fn with_word_cap_bits(mut self, bits: f64) -> Self {
        self.word_cap_bits = bits;
        self
    }

    /// Largest number of spectral classes generated by the structured paths.
    pub fn with_class_cap(mut self, cap: usize) -> Self {
        self.class_cap = cap;
        self
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    pub fn site_dim(&self) -> usize {
        match &self.kind {
            SourceKind::Iid { site_state } => site_state.dim(),
            SourceKind::RotatedMarkov { chain, .. } => chain.dim(),
        }
    }

    /// `d^n`, `None` on overflow.
    pub fn block_dim(&self, n: usize) -> Option<u128> {
        (self.site_dim() as u128).checked_pow(u32::try_from(n).ok()?)
    }

    pub fn dense_feasible(&self, n: usize) -> bool {
        n >= 1 && self.block_dim(n).is_some_and(|s| s <= self.dense_cap as u128)
    }

    fn check_dense(&self, n: usize) -> Result<usize> {
        check_block_length(n)?;
        match self.block_dim(n) {
            Some(size) if size <= self.dense_cap as u128 => Ok(size as usize),
            size => Err(Error::DenseCapExceeded {
                size: size.unwrap_or(u128::MAX),
                cap: self.dense_cap,
            }),
        }
    }

    /// Dense block state `rho^(n)`.
    pub fn block_state(&self, n: usize) -> Result<DensityOperator> {
        let size = self.check_dense(n)?;
        match &self.kind {
            SourceKind::Iid { site_state } => {
                let mut m = site_state.matrix().clone();
                for _ in 1..n {
                    m = kron(&m, site_state.matrix());
                }
                Ok(DensityOperator::from_psd_unchecked(m))
            }
            SourceKind::RotatedMarkov { chain, rotation } => {
                let probs = chain.word_probabilities(n);
                debug_assert_eq!(probs.len(), size);
                let mut m = ComplexMatrix::diag(&probs);
                if *rotation != ComplexMatrix::identity(chain.dim()) {
                    let dims = vec![chain.dim(); n];
                    for site in 0..n {
                        m = conjugate_site(&m, &dims, site, rotation)?;
                    }
                }
                Ok(DensityOperator::from_psd_unchecked(m))
            }
        }
    }

    /// Exact entropy rate in bits per site.
    pub fn entropy_rate_exact(&self) -> f64 {
        match &self.kind {
            SourceKind::Iid { site_state } => {
                let spec = hermitian_eig(site_state.matrix()).expect("validated density operator");
                crate::typicality::entropy_of_values(&spec.clamped_values())
            }
            SourceKind::RotatedMarkov { chain, .. } => chain.entropy_rate(),
        }
    }

    /// Spectrum of `rho^(n)` in class form, without dense matrices.
    ///
    /// Markov sources use word enumeration while `n log2 d` is within the word
    /// cap, and aggregation by transition counts beyond it.
    pub fn class_spectrum(&self, n: usize) -> Result<ClassSpectrum> {
        check_block_length(n)?;
        match &self.kind {
            SourceKind::Iid { site_state } => iid_class_spectrum(site_state, n, self.class_cap),
            SourceKind::RotatedMarkov { chain, .. } => {
                if n as f64 * (chain.dim() as f64).log2() <= self.word_cap_bits {
                    Ok(word_class_spectrum(chain, n))
                } else {
                    transition_class_spectrum(chain, n, self.class_cap)
                }
            }
        }
    }

    /// Word-by-word Markov spectrum (one class per word), subject to the word cap.
    pub fn word_spectrum(&self, n: usize) -> Result<ClassSpectrum> {
        check_block_length(n)?;
        let SourceKind::RotatedMarkov { chain, .. } = &self.kind else {
            return Err(Error::SpectralCapExceeded(
                "word enumeration applies to Markov sources".into(),
            ));
        };
        let bits = n as f64 * (chain.dim() as f64).log2();
        if bits > self.word_cap_bits {
            return Err(Error::SpectralCapExceeded(format!(
                "n log2 d = {bits} exceeds word cap {}",
                self.word_cap_bits
            )));
        }
        Ok(word_class_spectrum(chain, n))
    }

    /// Markov spectrum aggregated by (first letter, transition counts).
    pub fn transition_spectrum(&self, n: usize) -> Result<ClassSpectrum> {
        check_block_length(n)?;
        let SourceKind::RotatedMarkov { chain, .. } = &self.kind else {
            return Err(Error::SpectralCapExceeded(
                "transition-count aggregation applies to Markov sources".into(),
            ));
        };
        transition_class_spectrum(chain, n, self.class_cap)
    }

    /// Compares `rho^(n)` with both one-site partial traces of `rho^(n+1)`.
    pub fn check_consistency(&self, n: usize) -> Result<ConsistencyReport> {
        self.check_dense(n + 1)?;
        let d = self.site_dim();
        let rho_n = self.block_state(n)?;
        let rho_next = self.block_state(n + 1)?;
        let dims = vec![d; n + 1];
        let drop_last = partial_trace(&rho_next, &dims, &(0..n).collect::<Vec<_>>())?;
        let drop_first = partial_trace(&rho_next, &dims, &(1..=n).collect::<Vec<_>>())?;
        Ok(ConsistencyReport {
            n,
            last_site_residual: drop_last.matrix().max_abs_diff(rho_n.matrix()),
            first_site_residual: drop_first.matrix().max_abs_diff(rho_n.matrix()),
        })
    }
}

impl fmt::Display for SourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SourceKind::Iid { site_state } => write!(f, "iid(d={})", site_state.dim()),
            SourceKind::RotatedMarkov { chain, .. } => write!(f, "rotated-markov(d={})", chain.dim()),
        }
    }
}

fn check_block_length(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "block length",
            value: 0.0,
            range: "n >= 1",
        });
    }
    Ok(())
}

/// Residuals of the stationarity/consistency conditions at block length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub n: usize,
    /// `max |tr_last rho^(n+1) - rho^(n)|`
    pub last_site_residual: f64,
    /// `max |tr_first rho^(n+1) - rho^(n)|`
    pub first_site_residual: f64,
}

impl ConsistencyReport {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn passed(&self) -> bool {
        self.last_site_residual <= Self::TOLERANCE && self.first_site_residual <= Self::TOLERANCE
    }

    pub fn worst(&self) -> f64 {
        self.last_site_residual.max(self.first_site_residual)
    }
}

/// How the eigenvectors of one class are labelled.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassLabel {
    /// Index into a dense [`Spectrum`].
    Eigenvector(usize),
    /// Markov word, first letter most significant; eigenvector `U^{(x) n}|w>`.
    Word(usize),
    /// Occupation numbers of each distinct site eigenvalue (i.i.d. type class).
    Type(Vec<u32>),
    /// First letter and row-major transition counts.
    Transitions { first: usize, counts: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralClass {
    /// `log2` of the shared eigenvalue; `-inf` for zero.
    pub log2_eigenvalue: f64,
    pub multiplicity: BigUint,
    pub label: ClassLabel,
}

impl SpectralClass {
    pub fn eigenvalue(&self) -> f64 {
        self.log2_eigenvalue.exp2()
    }

    /// `eigenvalue * multiplicity`
    pub fn mass(&self) -> f64 {
        (self.log2_eigenvalue + log2_big(&self.multiplicity)).exp2()
    }
}

/// Eigenvalues with multiplicities, sorted non-increasing.
#[derive(Clone, Debug)]
pub struct ClassSpectrum {
    classes: Vec<SpectralClass>,
    total_dim: BigUint,
}

impl ClassSpectrum {
    /// Sorts classes by eigenvalue, larger first, ties broken by label.
    pub fn new(mut classes: Vec<SpectralClass>) -> Self {
        classes.sort_by(|a, b| {
            b.log2_eigenvalue
                .total_cmp(&a.log2_eigenvalue)
                .then_with(|| a.label.cmp(&b.label))
        });
        let total_dim = classes.iter().map(|c| &c.multiplicity).sum();
        Self { classes, total_dim }
    }

    /// One class per eigenvalue of a dense spectrum, labelled by index.
    pub fn from_spectrum(spec: &Spectrum) -> Self {
        let classes = spec
            .clamped_values()
            .into_iter()
            .enumerate()
            .map(|(i, v)| SpectralClass {
                log2_eigenvalue: if v > 0.0 { v.log2() } else { f64::NEG_INFINITY },
                multiplicity: BigUint::one(),
                label: ClassLabel::Eigenvector(i),
            })
            .collect();
        Self::new(classes)
    }

    /// Values-only spectrum, e.g. a probability vector.
    pub fn from_values(values: &[f64]) -> Self {
        Self::from_spectrum(&Spectrum::from_values(values.to_vec()))
    }

    pub fn classes(&self) -> &[SpectralClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn total_dim(&self) -> &BigUint {
        &self.total_dim
    }

    /// `sum eigenvalue * multiplicity`
    pub fn mass(&self) -> f64 {
        neumaier_sum(self.classes.iter().map(SpectralClass::mass))
    }

    /// von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        neumaier_sum(
            self.classes
                .iter()
                .filter(|c| c.log2_eigenvalue.is_finite())
                .map(|c| -c.mass() * c.log2_eigenvalue),
        )
    }

    /// Eigenvalues repeated by multiplicity; refuses more than `limit` entries.
    pub fn expanded(&self, limit: usize) -> Result<Vec<f64>> {
        if self.total_dim > BigUint::from(limit) {
            return Err(Error::SpectralCapExceeded(format!(
                "expanding {} eigenvalues exceeds limit {limit}",
                self.total_dim
            )));
        }
        let mut out = Vec::new();
        for c in &self.classes {
            let m: usize = c.multiplicity.to_string().parse().expect("bounded by limit");
            out.extend(std::iter::repeat_n(c.eigenvalue(), m));
        }
        Ok(out)
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    values.for_each(|v| acc.add(v));
    acc.value()
}

/// Distinct site eigenvalues with their degeneracies, largest first.
fn site_levels(site_state: &DensityOperator) -> Vec<(f64, u32)> {
    let values = hermitian_eig(site_state.matrix())
        .expect("validated density operator")
        .clamped_values();
    let mut levels: Vec<(f64, u32)> = Vec::new();
    for v in values {
        match levels.last_mut() {
            Some((mean, count)) if (*mean - v).abs() <= LEVEL_MERGE_TOL => {
                *mean = (*mean * *count as f64 + v) / (*count + 1) as f64;
                *count += 1;
            }
            _ => levels.push((v, 1)),
        }
    }
    levels
}

/// All compositions of `total` into `parts` non-negative parts, lexicographic.
fn compositions(total: u32, parts: usize, out: &mut Vec<Vec<u32>>) {
    fn rec(rem: u32, prefix: &mut Vec<u32>, parts: usize, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == parts {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=rem).rev() {
            prefix.push(k);
            rec(rem - k, prefix, parts, out);
            prefix.pop();
        }
    }
    if parts == 0 {
        return;
    }
    rec(total, &mut Vec::with_capacity(parts), parts, out);
}

fn count_compositions(total: usize, parts: usize) -> BigUint {
    crate::bigmath::binomial((total + parts - 1) as u64, (parts - 1) as u64)
}

fn iid_class_spectrum(site_state: &DensityOperator, n: usize, class_cap: usize) -> Result<ClassSpectrum> {
    let levels = site_levels(site_state);
    let r = levels.len();
    let count = count_compositions(n, r);
    if count > BigUint::from(class_cap) {
        return Err(Error::SpectralCapExceeded(format!(
            "{count} type classes exceed class cap {class_cap}"
        )));
    }
    let fact = factorials(n);
    let mut types = Vec::new();
    compositions(n as u32, r, &mut types);
    let classes = types
        .into_par_iter()
        .map(|k| {
            let mut denom = BigUint::one();
            let mut degeneracy = BigUint::one();
            let mut log2_eigenvalue = 0.0;
            for (&(p, deg), &kk) in levels.iter().zip(&k) {
                denom *= &fact[kk as usize];
                degeneracy *= BigUint::from(deg).pow(kk);
                if kk > 0 {
                    log2_eigenvalue += if p > 0.0 {
                        kk as f64 * p.log2()
                    } else {
                        f64::NEG_INFINITY
                    };
                }
            }
            SpectralClass {
                log2_eigenvalue,
                multiplicity: &fact[n] / denom * degeneracy,
                label: ClassLabel::Type(k),
            }
        })
        .collect();
    Ok(ClassSpectrum::new(classes))
}

fn word_class_spectrum(chain: &MarkovChain, n: usize) -> ClassSpectrum {
    let classes = chain
        .word_probabilities(n)
        .into_iter()
        .enumerate()
        .map(|(w, p)| SpectralClass {
            log2_eigenvalue: if p > 0.0 { p.log2() } else { f64::NEG_INFINITY },
            multiplicity: BigUint::one(),
            label: ClassLabel::Word(w),
        })
        .collect();
    ClassSpectrum::new(classes)
}

/// Number of words with first letter `first`, last letter `last` and
/// transition counts `counts` (row-major `d x d`), via the BEST theorem on the
/// transition multigraph closed by one extra edge `last -> first`.
pub(crate) fn words_with_transition_counts(
    d: usize,
    first: usize,
    last: usize,
    counts: &[u32],
    fact: &[BigUint],
) -> BigUint {
    let mut out_deg = vec![0u64; d];
    let mut touched = vec![false; d];
    for i in 0..d {
        for j in 0..d {
            let c = counts[i * d + j] as u64;
            out_deg[i] += c;
            if c > 0 {
                touched[i] = true;
                touched[j] = true;
            }
        }
    }
    out_deg[last] += 1;
    touched[last] = true;
    touched[first] = true;
    let vertices: Vec<usize> = (0..d).filter(|&v| touched[v]).collect();

    // out-degree Laplacian with the closing edge, root `first` removed
    let reduced: Vec<usize> = vertices.iter().copied().filter(|&v| v != first).collect();
    let lap: Vec<Vec<i128>> = reduced
        .iter()
        .map(|&x| {
            reduced
                .iter()
                .map(|&y| {
                    let mut a = counts[x * d + y] as i128;
                    if x == last && y == first {
                        a += 1;
                    }
                    if x == y {
                        out_deg[x] as i128 - a
                    } else {
                        -a
                    }
                })
                .collect()
        })
        .collect();
    let trees = det_i128(lap);
    if trees <= 0 {
        return BigUint::zero();
    }
    let mut numer = BigUint::from(trees as u128);
    for &v in &vertices {
        numer *= &fact[(out_deg[v] - 1) as usize];
    }
    let mut denom = BigUint::one();
    for &c in counts {
        denom *= &fact[c as usize];
    }
    numer / denom
}

fn transition_class_spectrum(chain: &MarkovChain, n: usize, class_cap: usize) -> Result<ClassSpectrum> {
    let d = chain.dim();
    if n == 1 {
        let classes = (0..d)
            .map(|u| SpectralClass {
                log2_eigenvalue: safe_log2(chain.initial()[u]),
                multiplicity: BigUint::one(),
                label: ClassLabel::Transitions {
                    first: u,
                    counts: vec![0; d * d],
                },
            })
            .collect();
        return Ok(ClassSpectrum::new(classes));
    }
    let steps = (n - 1) as u32;
    let off: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let candidates = count_compositions(steps as usize + 1, off.len() + 1);
    if candidates > BigUint::from(class_cap) {
        return Err(Error::SpectralCapExceeded(format!(
            "{candidates} off-diagonal count patterns exceed class cap {class_cap}"
        )));
    }
    // off-diagonal count vectors with total <= steps (the slack part is dropped)
    let mut patterns = Vec::new();
    compositions(steps, off.len() + 1, &mut patterns);

    let log_m: Vec<f64> = (0..d * d).map(|k| safe_log2(chain.transition[k])).collect();
    let fact = factorials(n);

    let classes: Vec<SpectralClass> = patterns
        .into_par_iter()
        .flat_map_iter(|pattern| {
            let mut out = Vec::new();
            let mut net = vec![0i64; d];
            let mut touched = vec![false; d];
            let mut base = vec![0u32; d * d];
            for (&(i, j), &c) in off.iter().zip(&pattern) {
                base[i * d + j] = c;
                net[i] += c as i64;
                net[j] -= c as i64;
                if c > 0 {
                    touched[i] = true;
                    touched[j] = true;
                }
            }
            let used: u32 = pattern[..off.len()].iter().sum();
            let loops = steps - used;
            // first/last pairs compatible with the flow imbalance
            let ends: Vec<(usize, usize)> = if net.iter().all(|&x| x == 0) {
                (0..d).filter(|&u| touched[u] || used == 0).map(|u| (u, u)).collect()
            } else {
                let src: Vec<usize> = (0..d).filter(|&v| net[v] == 1).collect();
                let dst: Vec<usize> = (0..d).filter(|&v| net[v] == -1).collect();
                let rest_ok = net.iter().all(|&x| x.abs() <= 1);
                if src.len() == 1 && dst.len() == 1 && rest_ok {
                    vec![(src[0], dst[0])]
                } else {
                    Vec::new()
                }
            };
            for (first, last) in ends {
                let hosts: Vec<usize> = (0..d).filter(|&v| touched[v] || v == first).collect();
                let mut splits = Vec::new();
                compositions(loops, hosts.len(), &mut splits);
                for split in splits {
                    let mut counts = base.clone();
                    for (&v, &c) in hosts.iter().zip(&split) {
                        counts[v * d + v] = c;
                    }
                    let mult = words_with_transition_counts(d, first, last, &counts, &fact);
                    if mult.is_zero() {
                        continue;
                    }
                    let mut log2_eigenvalue = safe_log2(chain.initial()[first]);
                    for (k, &c) in counts.iter().enumerate() {
                        if c > 0 {
                            log2_eigenvalue += c as f64 * log_m[k];
                        }
                    }
                    out.push(SpectralClass {
                        log2_eigenvalue,
                        multiplicity: mult,
                        label: ClassLabel::Transitions { first, counts },
                    });
                }
            }
            out.into_iter()
        })
        .collect();
    if classes.len() > class_cap {
        return Err(Error::SpectralCapExceeded(format!(
            "{} transition classes exceed class cap {class_cap}",
            classes.len()
        )));
    }
    Ok(ClassSpectrum::new(classes))
}

fn safe_log2(p: f64) -> f64 {
    if p > 0.0 {
        p.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// Reference chain used throughout the examples and acceptance checks.
pub fn reference_chain() -> MarkovChain {
    MarkovChain::new(&[vec![0.9, 0.1], vec![0.5, 0.5]]).expect("reference chain is valid")
}

/// Real rotation `[[c, -s], [s, c]]` with a relative phase `e^{i phi}` on the second column.
fn phased_rotation(theta: f64, phi: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    let ph = Complex64::from_polar(1.0, phi);
    ComplexMatrix::from_vec(
        2,
        2,
        vec![Complex64::new(c, 0.0), -ph * s, Complex64::new(s, 0.0), ph * c],
    )
    .expect("2x2")
}

/// Qubit sources covering both kinds, with and without rotation.
pub fn reference_sources() -> Vec<(&'static str, SourceModel)> {
    let h = ComplexMatrix::hadamard();
    let generic = DensityOperator::diagonal(&[0.75, 0.25])
        .expect("valid")
        .conjugate(&phased_rotation(0.4, 1.1));
    vec![
        (
            "iid-diag",
            SourceModel::iid(DensityOperator::diagonal(&[0.9, 0.1]).expect("valid")),
        ),
        (
            "iid-hadamard",
            SourceModel::iid(DensityOperator::diagonal(&[0.9, 0.1]).expect("valid").conjugate(&h)),
        ),
        ("iid-generic", SourceModel::iid(generic)),
        ("iid-mixed", SourceModel::iid(DensityOperator::maximally_mixed(2))),
        (
            "markov-identity",
            SourceModel::rotated_markov(reference_chain(), ComplexMatrix::identity(2)).expect("valid"),
        ),
        (
            "markov-hadamard",
            SourceModel::rotated_markov(reference_chain(), h).expect("valid"),
        ),
        (
            "markov-phased",
            SourceModel::rotated_markov(
                MarkovChain::new(&[vec![0.6, 0.4], vec![0.3, 0.7]]).expect("valid"),
                phased_rotation(0.7, 0.3),
            )
            .expect("valid"),
        ),
    ]
}

/// Three-level sources, for checks whose dense cost allows `d = 3`.
pub fn qutrit_sources() -> Vec<(&'static str, SourceModel)> {
    let rot =
        ComplexMatrix::from_real_rows(&[vec![0.6, -0.8, 0.0], vec![0.8, 0.6, 0.0], vec![0.0, 0.0, 1.0]]).expect("3x3");
    vec![
        (
            "iid-qutrit",
            SourceModel::iid(
                DensityOperator::diagonal(&[0.6, 0.3, 0.1])
                    .expect("valid")
                    .conjugate(&rot),
            ),
        ),
        (
            "markov-qutrit",
            SourceModel::rotated_markov(
                MarkovChain::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]]).expect("valid"),
                rot,
            )
            .expect("valid"),
        ),
    ]
}
