//! Tightness diagnostics: continuity moduli, integrability of the
//! excursion maximum, the first-passage constant and ensemble sweeps.

pub mod asymptotics;
pub mod integrability;
pub mod modulus;
pub mod report;
pub mod tightness;

pub use asymptotics::{ck_series, CkSeries};
pub use integrability::{c_of_a, c_table, lemma_bound, lemma_table, CTable, Estimate, LemmaTable, MaxLaw, Mode, C_functional};
pub use modulus::{modified_modulus, moduli, modulus, Moduli, ModulusScratch};
pub use report::{DiagnosticsReport, Table};
pub use tightness::{modulus_curve, tightness_sweep, EnsembleSource, TightnessGrid};
