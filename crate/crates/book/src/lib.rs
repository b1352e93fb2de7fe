//! Doc-test harness for the guide in `book/`. Each chapter becomes a module so
//! a failing snippet points at its chapter.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/geometries.md")]
pub mod geometries {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/estimator.md")]
pub mod estimator {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/testing.md")]
pub mod testing {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/null-limits.md")]
pub mod null_limits {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub mod readme {}
