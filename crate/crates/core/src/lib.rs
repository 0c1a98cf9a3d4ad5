//! Learns a framework's API usage specification from a corpus of example
//! programs, validates training programs against dependencies mined from the
//! framework's own source, and uses the learned model to recommend next API
//! calls and to detect and fix API misuses.
//!
//! The pipeline runs in four phases over MiniLang sources:
//!
//! 1. parse and lower programs, build 1-CFA call graphs and system
//!    dependence graphs ([`frontend`]);
//! 2. slice out framework-related statements into per-entrypoint usage
//!    graphs ([`slicer`]) and reject usages that violate the framework's
//!    mined writer/reader order constraints ([`ifd`]);
//! 3. canonicalize usages into order-constraint models ([`graam`]) and merge
//!    them into a frequency-labeled specification ([`fspec`]);
//! 4. answer next-API and misuse queries against the learned specification
//!    ([`recommend`]) and measure accuracy on held-out programs ([`eval`]).

pub mod driver;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod fspec;
pub mod graam;
pub mod ifd;
pub mod model;
pub mod recommend;
pub mod rng;
pub mod slicer;

pub use error::{Error, Result};
