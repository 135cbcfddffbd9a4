//! The guide's chapters, compiled so that their code blocks run as
//! doc-tests.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/walk.md")]
pub mod walk {}

#[doc = include_str!("../../../book/src/excursions.md")]
pub mod excursions {}

#[doc = include_str!("../../../book/src/contact-sets.md")]
pub mod contact_sets {}

#[doc = include_str!("../../../book/src/assembly.md")]
pub mod assembly {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}

#[doc = include_str!("../../../book/src/oracles.md")]
pub mod oracles {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
