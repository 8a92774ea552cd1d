//! circuit ir: parameterized vector expressions, let statements and the
//! registry that resolves circuit variables per coordinate.

mod cgen;
mod cost;
mod eval;
mod ir;
mod outlayout;

pub use cgen::{cgen, cgen_cached, Compiled, MatCache};
pub use cost::{cost, CostValue, CostWeights, OpCounts, VType};
pub use eval::{eval_program, object_slots, LetValues};
pub(crate) use eval::rotate;
pub use ir::{
    CircExpr, CircLet, CircObj, Circuit, CircuitProgram, Node, NodeId, OffsetExpr, Registry, ValueMap, VarKind,
};
pub use outlayout::{coerce, coercion, reduce_layout, reduce_preprocess, unify, OutVecDim, OutputLayout};
