// mdbook cannot run listings against a workspace crate, so each chapter is
// pulled in here as a module doc and `cargo test --doc` runs its code blocks.
// One module per chapter keeps a failing listing traceable to its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/meshing.md")]
pub mod meshing {}
#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}
#[doc = include_str!("../../../book/src/corners.md")]
pub mod corners {}
#[doc = include_str!("../../../book/src/thin-layer.md")]
pub mod thin_layer {}
#[doc = include_str!("../../../book/src/studies.md")]
pub mod studies {}
#[doc = include_str!("../../../book/src/qubits.md")]
pub mod qubits {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
