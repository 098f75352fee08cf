//! Doctests for the guide in `book/`.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/colorings.md")]
mod colorings {}
#[doc = include_str!("../../../book/src/coupling.md")]
mod coupling {}
#[doc = include_str!("../../../book/src/classification.md")]
mod classification {}
#[doc = include_str!("../../../book/src/linear-programs.md")]
mod linear_programs {}
#[doc = include_str!("../../../book/src/constructions.md")]
mod constructions {}
#[doc = include_str!("../../../book/src/experiments.md")]
mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
