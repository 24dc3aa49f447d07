//! The book's chapters, compiled as doc-tests.
//!
//! mdbook renders `book/` for reading; including the same Markdown here makes
//! `cargo test --doc` build and run every code snippet in the guide, so the
//! prose cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/systems.md")]
pub mod systems {}

#[doc = include_str!("../../../book/src/special-functions.md")]
pub mod special_functions {}

#[doc = include_str!("../../../book/src/heat-kernel.md")]
pub mod heat_kernel {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}

#[doc = include_str!("../../../book/src/weights-and-norms.md")]
pub mod weights_and_norms {}

#[doc = include_str!("../../../book/src/semigroup-and-resolvent.md")]
pub mod semigroup_and_resolvent {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
