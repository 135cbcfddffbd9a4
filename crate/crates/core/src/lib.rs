//! Exact and Monte Carlo engine for decoupled polymer path measures.
//!
//! A path of length `N` is built from three ingredients: a law on its zero
//! level set (the contact set), a law on positive excursions that end at
//! zero, and a law on a final strictly positive meander. Conditionally on
//! the contact set the excursions are independent. With the excursion laws
//! taken from a lazy symmetric walk conditioned to stay positive, this
//! covers homogeneous, periodic and disordered pinning, wetting and
//! copolymer models, which differ only through the contact-set weights.
//!
//! Modules, bottom up:
//!
//! - [`walk`]: the lazy walk, its pmf, first-passage laws and the
//!   reflection and ruin identities.
//! - [`excursion`]: conditioned one-step kernels (Doob transforms) for the
//!   bulk excursion and final meander laws; exact evaluation and sampling.
//! - [`contact`]: contact-set laws from renewal weights, their partition
//!   function and exact backward sampling.
//! - [`assembly`]: the composite path measure, its diffusive rescaling and
//!   seeded parallel ensembles.
//! - [`diagnostics`]: continuity moduli, the uniform-integrability
//!   functional `C(a)`, the maximum-tail bound and first-passage asymptotics.
//! - [`oracle`]: brute-force enumerations used as independent cross-checks.

// `!(x >= 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod contact;
pub mod diagnostics;
pub mod error;
pub mod excursion;
pub mod oracle;
pub mod rng;
pub mod walk;

pub use assembly::{exact_path_probability, rescale, PolymerSampler, RescaledPath};
pub use contact::{ContactSet, ContactSetLaw, WeightFamily};
pub use error::{Error, Result};
pub use excursion::{ConditionedKernel, Excursion, ExcursionKind, KernelCache};
pub use rng::StreamSeed;
pub use walk::{LatticePath, WalkParams};
