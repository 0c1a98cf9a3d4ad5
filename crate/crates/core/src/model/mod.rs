//! Core vocabulary shared by all phases: framework declarations, the class
//! hierarchy, framework-related statements and the usage graphs.
//!
//! All types are immutable after construction and safe to share across
//! threads; construction is single-threaded per program.

mod framework;
mod graph;
mod hierarchy;
mod statement;

pub use framework::{
    method_key, AccessMode, FieldAccess, FieldDecl, FrameworkModel, MethodSig, Param, TypeDecl,
    CTOR_NAME,
};
pub use graph::{
    FSpec, FspecEdge, Graam, GraamEdge, GraamEdgeKind, GraamNode, NodeId, NodeRole,
    PrimaryApiUsageGraph, PrimaryNode,
};
pub use hierarchy::{build_class_hierarchy, classify_target, ClassHierarchy};
pub use statement::{ApiKind, ApiLabel, ApiStatement, Location, Relation};
