// mdbook cannot run listings that depend on a local crate, so every chapter
// is pulled in as a module doc comment and `cargo test --doc` runs them.

#[doc = include_str!("../../../book/src/getting_started.md")]
pub mod getting_started {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/planning.md")]
pub mod planning {}
#[doc = include_str!("../../../book/src/qubo.md")]
pub mod qubo {}
#[doc = include_str!("../../../book/src/circuit.md")]
pub mod circuit {}
#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}
