//! slot-vector simulation of loop-nest programs and client-side decoding.

mod decode;
mod emit;
mod vm;

pub use decode::decode_output;
pub use emit::{emit_script, Binding};
pub use vm::{simulate, OpTrace, SimOutput};

#[cfg(test)]
mod tests;
