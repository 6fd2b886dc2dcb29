//! The guide under `book/src`, included chapter by chapter so its Rust
//! listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/effects.md")]
pub mod effects {}

#[doc = include_str!("../../../book/src/designs.md")]
pub mod designs {}

#[doc = include_str!("../../../book/src/variance.md")]
pub mod variance {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}

#[doc = include_str!("../../../book/src/protocol.md")]
pub mod protocol {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
