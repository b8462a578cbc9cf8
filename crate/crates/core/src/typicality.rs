//! Entropies, typical subspaces, minimal high-probability subspaces and the
//! Ky Fan sums `eta_d`.
//!
//! Everything here works on [`ClassSpectrum`], so the same code serves dense
//! spectra (one class per eigenvector) and structured spectra at block
//! lengths far beyond dense reach.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bigmath::{ceil_from_log2, log2_big};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, DensityOperator, Ket, Projector, Spectrum};
use crate::source::{neumaier_sum, ClassLabel, ClassSpectrum, CompensatedSum, SourceModel};

/// Slack (per site, in log2 units) applied to the closed typicality window.
const WINDOW_SLACK: f64 = 1e-12;
/// Eigenvalues of the second argument at or below this count as zero in
/// the relative entropy.
const SUPPORT_TOL: f64 = 1e-12;
/// Weight of the first argument outside the support of the second that is
/// still tolerated as round-off.
const LEAK_TOL: f64 = 1e-10;

/// `-sum v log2 v` with `0 log 0 = 0`.
pub fn entropy_of_values(values: &[f64]) -> f64 {
    neumaier_sum(values.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()))
}

/// von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(entropy_of_values(&rho.spectrum()?.clamped_values()))
}

/// `S(rho || sigma) = tr rho (log2 rho - log2 sigma)`, `+inf` when the
/// support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "relative entropy",
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let neg_entropy = -von_neumann_entropy(rho)?;
    let sig = hermitian_eig(sigma.matrix())?;
    let vecs = sig.vectors().expect("eigenvectors requested");
    let mut cross = Vec::with_capacity(sig.len());
    for (j, &mu) in sig.values().iter().enumerate() {
        let w = vecs.column(j);
        let p = rho.expectation(&w);
        if mu <= SUPPORT_TOL {
            if p > LEAK_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross.push(-p * mu.log2());
    }
    let value = neg_entropy + neumaier_sum(cross.into_iter());
    Ok(if value < 0.0 && value > -1e-12 { 0.0 } else { value })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// Span of the eigenvectors whose eigenvalues lie in
/// `[2^{-n(s+eps)}, 2^{-n(s-eps)}]`.
#[derive(Clone, Debug)]
pub struct TypicalSubspace {
    pub n: usize,
    pub epsilon: f64,
    pub entropy_rate: f64,
    /// `(-n(s+eps), -n(s-eps))`, the window in log2 units.
    pub log2_window: (f64, f64),
    /// Indices of selected classes; every class is taken whole.
    pub selected: Vec<usize>,
    pub count: BigUint,
    /// `log2(count)`, `-inf` when empty.
    pub log2_dim: f64,
    pub mass: f64,
}

impl TypicalSubspace {
    pub fn is_empty(&self) -> bool {
        self.count.is_zero()
    }

    /// Window endpoints as eigenvalues (may underflow to zero at large `n`).
    pub fn window(&self) -> (f64, f64) {
        (self.log2_window.0.exp2(), self.log2_window.1.exp2())
    }

    /// Dense projector; `dense` must be the spectrum `classes` was built from.
    pub fn projector(&self, classes: &ClassSpectrum, dense: &Spectrum) -> Result<Projector> {
        let picks: Vec<(usize, BigUint)> = self
            .selected
            .iter()
            .map(|&c| (c, classes.classes()[c].multiplicity.clone()))
            .collect();
        selection_projector(classes, dense, &picks)
    }
}

/// Typical subspace of a spectrum for block length `n` and rate `s`.
pub fn typical_subspace(spec: &ClassSpectrum, n: usize, s: f64, epsilon: f64) -> Result<TypicalSubspace> {
    check_epsilon(epsilon)?;
    if !(s >= 0.0) {
        return Err(Error::OutOfRange {
            what: "entropy rate",
            value: s,
            range: "s >= 0",
        });
    }
    let nf = n as f64;
    let lo = -nf * (s + epsilon);
    let hi = -nf * (s - epsilon);
    let slack = WINDOW_SLACK * nf.max(1.0);
    let selected: Vec<usize> = spec
        .classes()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.log2_eigenvalue >= lo - slack && c.log2_eigenvalue <= hi + slack)
        .map(|(i, _)| i)
        .collect();
    let count: BigUint = selected.iter().map(|&i| &spec.classes()[i].multiplicity).sum();
    let mass = neumaier_sum(selected.iter().map(|&i| spec.classes()[i].mass()));
    Ok(TypicalSubspace {
        n,
        epsilon,
        entropy_rate: s,
        log2_window: (lo, hi),
        log2_dim: log2_big(&count),
        count,
        selected,
        mass,
    })
}

/// A class, or the leading part of one, taken into a selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub class: usize,
    pub count: BigUint,
}

/// Smallest eigenvector selection carrying mass at least `1 - epsilon`.
#[derive(Clone, Debug)]
pub struct HighProbSubspace {
    pub epsilon: f64,
    pub selection: Vec<Selection>,
    pub count: BigUint,
    /// `beta = log2(count)`
    pub log2_dim: f64,
    pub mass: f64,
    /// log2 of the smallest selected eigenvalue.
    pub log2_smallest: f64,
    /// Mass after dropping one eigenvector of the smallest selected eigenvalue.
    pub mass_without_smallest: f64,
}

impl HighProbSubspace {
    pub fn beta(&self) -> f64 {
        self.log2_dim
    }

    /// `ceil(beta)`, the number of qubits needed to hold the subspace.
    pub fn qubits(&self) -> u64 {
        if self.count <= BigUint::one() {
            0
        } else {
            (&self.count - BigUint::one()).bits()
        }
    }

    /// Rank as `usize`, `None` when it does not fit.
    pub fn rank(&self) -> Option<usize> {
        self.count.to_usize()
    }

    pub fn projector(&self, classes: &ClassSpectrum, dense: &Spectrum) -> Result<Projector> {
        let picks: Vec<(usize, BigUint)> = self.selection.iter().map(|s| (s.class, s.count.clone())).collect();
        selection_projector(classes, dense, &picks)
    }
}

/// Round-off allowance when comparing a selected mass with `1 - epsilon`.
pub const MASS_TOL: f64 = 1e-12;

/// Greedy selection of the largest eigenvalues until the mass reaches `1 - epsilon`.
///
/// The `k` largest eigenvalues maximize `tr rho q` over rank-`k` projectors,
/// so the greedy count is the minimum. Classes are consumed in bulk; the last
/// one may be consumed partially.
pub fn beta(spec: &ClassSpectrum, epsilon: f64) -> Result<HighProbSubspace> {
    check_epsilon(epsilon)?;
    let target = 1.0 - epsilon;
    let mut selection = Vec::new();
    let mut acc = CompensatedSum::default();
    for (idx, class) in spec.classes().iter().enumerate() {
        if class.multiplicity.is_zero() || class.log2_eigenvalue == f64::NEG_INFINITY {
            continue;
        }
        let full_mass = class.mass();
        if acc.value() + full_mass < target {
            acc.add(full_mass);
            selection.push(Selection {
                class: idx,
                count: class.multiplicity.clone(),
            });
            continue;
        }
        let take = partial_count(acc.value(), target, class.log2_eigenvalue).min(class.multiplicity.clone());
        acc.add((class.log2_eigenvalue + log2_big(&take)).exp2());
        selection.push(Selection {
            class: idx,
            count: take,
        });
        return Ok(finish(epsilon, spec, selection, acc.value()));
    }
    // Round-off left the total just short of the target: everything is needed.
    Ok(finish(epsilon, spec, selection, acc.value()))
}

/// Smallest `k` with `cum + k * 2^log2_lambda >= target`.
fn partial_count(cum: f64, target: f64, log2_lambda: f64) -> BigUint {
    let need = target - cum;
    if need <= 0.0 {
        return BigUint::one();
    }
    let y = need.log2() - log2_lambda;
    if y >= 52.0 {
        return ceil_from_log2(y);
    }
    let lambda = log2_lambda.exp2();
    let mut k = (need / lambda).ceil().max(1.0);
    while k > 1.0 && cum + (k - 1.0) * lambda >= target {
        k -= 1.0;
    }
    while cum + k * lambda < target {
        k += 1.0;
    }
    BigUint::from(k as u64)
}

fn finish(epsilon: f64, spec: &ClassSpectrum, selection: Vec<Selection>, mass: f64) -> HighProbSubspace {
    let count: BigUint = selection.iter().map(|s| &s.count).sum();
    let log2_smallest = selection
        .last()
        .map_or(f64::NEG_INFINITY, |s| spec.classes()[s.class].log2_eigenvalue);
    HighProbSubspace {
        epsilon,
        log2_dim: log2_big(&count),
        count,
        selection,
        mass,
        log2_smallest,
        mass_without_smallest: mass - log2_smallest.exp2(),
    }
}

/// Sum of the `d` largest eigenvalues (Ky Fan maximum of `tr rho P` over
/// rank-`d` projectors).
pub fn eta(spec: &ClassSpectrum, d: &BigUint) -> Result<f64> {
    if d.is_zero() || d > spec.total_dim() {
        return Err(Error::OutOfRange {
            what: "eta rank",
            value: log2_big(d).exp2(),
            range: "1 <= d <= total dimension",
        });
    }
    let mut remaining = d.clone();
    let mut parts = Vec::new();
    for class in spec.classes() {
        if remaining.is_zero() {
            break;
        }
        let take = if class.multiplicity <= remaining {
            class.multiplicity.clone()
        } else {
            remaining.clone()
        };
        remaining -= &take;
        if class.log2_eigenvalue.is_finite() {
            parts.push((class.log2_eigenvalue + log2_big(&take)).exp2());
        }
    }
    Ok(neumaier_sum(parts.into_iter()).min(1.0))
}

/// [`eta`] for a machine-sized rank.
pub fn eta_usize(spec: &ClassSpectrum, d: usize) -> Result<f64> {
    eta(spec, &BigUint::from(d))
}

/// One row of a `beta / n` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaRate {
    pub n: usize,
    pub beta: f64,
    pub beta_rate: f64,
    pub mass: f64,
}

/// `beta_{eps,n} / n` over the given block lengths, computed from class spectra.
pub fn beta_rate_sweep(src: &SourceModel, epsilon: f64, n_list: &[usize]) -> Result<Vec<BetaRate>> {
    check_epsilon(epsilon)?;
    n_list
        .par_iter()
        .map(|&n| {
            let hp = beta(&src.class_spectrum(n)?, epsilon)?;
            Ok(BetaRate {
                n,
                beta: hp.log2_dim,
                beta_rate: hp.log2_dim / n as f64,
                mass: hp.mass,
            })
        })
        .collect()
}

/// Eigenvectors for `(class, count)` picks of a dense-labelled class spectrum.
pub(crate) fn selection_vectors(
    classes: &ClassSpectrum,
    dense: &Spectrum,
    picks: &[(usize, BigUint)],
) -> Result<Vec<Ket>> {
    let mut out = Vec::new();
    for (class, count) in picks {
        let c = &classes.classes()[*class];
        let ClassLabel::Eigenvector(i) = c.label else {
            return Err(Error::InvalidProjector(
                "projector materialization needs a dense spectrum".into(),
            ));
        };
        if *count != BigUint::one() {
            return Err(Error::InvalidProjector(format!(
                "class {class} is not a single eigenvector"
            )));
        }
        out.push(
            dense
                .vector(i)
                .ok_or_else(|| Error::InvalidProjector("spectrum carries no eigenvectors".into()))?,
        );
    }
    Ok(out)
}

fn selection_projector(classes: &ClassSpectrum, dense: &Spectrum, picks: &[(usize, BigUint)]) -> Result<Projector> {
    let dim = dense.len();
    let vectors = selection_vectors(classes, dense, picks)?;
    Projector::from_vectors(dim, &vectors)
}
