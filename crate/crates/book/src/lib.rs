//! The guide's listings, compiled and run as doctests. mdbook cannot link
//! listings against workspace crates, so each chapter is attached to an
//! empty module here instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/quickstart.md")]
pub mod quickstart {}
#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/hypotheses.md")]
pub mod hypotheses {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/density.md")]
pub mod density {}
#[doc = include_str!("../../../book/src/exterior.md")]
pub mod exterior {}
#[doc = include_str!("../../../book/src/outputs.md")]
pub mod outputs {}
