//! MiniLang frontend: parsing, lowering to program facts, 1-CFA call graph
//! and system dependence graph construction.
//!
//! Parsing and dependence-graph construction for distinct programs are pure
//! and may run in parallel; all outputs are immutable.

pub mod ast;
pub mod callgraph;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod sdg;

pub use callgraph::{build_call_graph, CallEdge, CallGraph, Context, ContextId};
pub use lower::{
    build_framework_model, lower, Callee, LoweredKind, LoweredStmt, MethodFacts, Operand,
    ParamSlot, ProgramFacts, UNKNOWN_TYPE,
};
pub use parser::parse;
pub use sdg::{build_sdg, Sdg, SdgEdgeKind, SdgNode};
