//! Single-pass instruction sequences and their behaviours.
//!
//! Programs are terms over primitive instructions built with concatenation
//! and infinite repetition. The crate parses and prints them
//! ([`syntax`]), decides instruction-sequence equality ([`canonical`]),
//! extracts behaviours as regular threads ([`extraction`], [`thread`]), lets
//! threads use services such as Boolean registers ([`services`]), compiles
//! any regular thread into a jump-free program over Boolean registers
//! ([`jumpfree`]) and gives label/goto programs a meaning by projection to
//! jump programs ([`goto`]).
//!
//! [`oracle`], [`gen`] and [`reproduce`] support testing: a reference
//! executor on raw terms, seeded generators and the randomized
//! reproduction suite.

pub mod canonical;
pub mod extraction;
pub mod gen;
pub mod goto;
pub mod jumpfree;
pub mod oracle;
pub mod reproduce;
pub mod services;
pub mod syntax;
pub mod thread;

pub use canonical::{canonicalize, seq_equal, CanonicalSequence};
pub use extraction::extract;
pub use syntax::{parse, BasicInstruction, Dialect, Instruction, Term};
pub use thread::{bisimilar, minimize, ThreadSpec};
