//! Doc-test harness for the guide in `book/`.
//!
//! mdbook cannot run snippets that depend on workspace crates, so each
//! chapter is pulled in as the docs of an empty module and `cargo test --doc`
//! runs its code blocks. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}
#[doc = include_str!("../../../book/src/morphology.md")]
pub mod morphology {}
#[doc = include_str!("../../../book/src/accessibility.md")]
pub mod accessibility {}
#[doc = include_str!("../../../book/src/fea.md")]
pub mod fea {}
#[doc = include_str!("../../../book/src/optimization.md")]
pub mod optimization {}
#[doc = include_str!("../../../book/src/planning.md")]
pub mod planning {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
