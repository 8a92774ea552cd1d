//! core of a vectorizing compiler from an array language to simd homomorphic
//! encryption circuits.
//!
//! the pipeline runs source text through [`lang`] (parse, check, interpret),
//! [`index_free`] (traversals), [`sched`] (layouts and search),
//! [`materialize`] (vectors and derivations), [`circ`] (circuit generation and
//! cost), [`opt`] (rewriting and plaintext hoisting), [`lnest`] (loop nests)
//! and finally [`sim`] (slot-vector simulation and decoding).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circ;
pub mod corpus;
pub mod driver;
pub mod error;
pub mod index_free;
pub mod lang;
pub mod lnest;
pub mod materialize;
pub mod opt;
pub mod sched;
pub mod sim;
pub mod tensor;
pub mod util;

pub use error::{Error, Result};
pub use tensor::Tensor;
