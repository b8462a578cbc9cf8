//! Numerical toolkit for compressing stationary ergodic quantum sources.
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition,
//!   partial traces, density operators and projectors.
//! - [`source`]: i.i.d. and rotated-Markov sources, their block states and
//!   class spectra.
//! - [`typicality`]: entropies, typical subspaces, `beta_{eps,n}` and `eta_d`.
//! - [`channel`]: Kraus channels and projective compression schemes.
//! - [`fidelity`]: fidelity, trace distance, entanglement and ensemble fidelities.
//! - [`validate`]: randomized and oracle-based property suites.

mod bigmath;
pub mod channel;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod random;
pub mod source;
pub mod typicality;
pub mod validate;

pub use bigmath::{big_to_f64, floor_pow2, log2_big};
pub use channel::{compose, make_scheme, CompressionScheme, KrausChannel, KrausOp, SchemeMode};
pub use error::{Error, Result};
pub use fidelity::{Ensemble, EnsembleState, FsBounds, InequalityReport};
pub use linalg::{ComplexMatrix, DensityOperator, Ket, Projector, Spectrum};
pub use source::{ClassSpectrum, MarkovChain, SourceKind, SourceModel};
pub use typicality::{beta, eta, typical_subspace, HighProbSubspace, TypicalSubspace};
