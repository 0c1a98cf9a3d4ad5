//! Framework-related statements and the labels under which usage nodes are
//! compared across programs.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Instruction type of an API usage node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiKind {
    ObjectInit,
    MethodInvoke,
    FieldRead,
    FieldWrite,
}

impl fmt::Display for ApiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ApiKind::ObjectInit => "init",
            ApiKind::MethodInvoke => "invoke",
            ApiKind::FieldRead => "read",
            ApiKind::FieldWrite => "write",
        };
        f.write_str(s)
    }
}

/// How a statement relates to the framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Direct,
    IndirectViaInheritance,
    None,
}

/// Stable statement identity: file, enclosing method, intra-method index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub file: String,
    pub method: String,
    pub index: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}#{}", self.file, self.method, self.index)
    }
}

/// A framework-related statement as it appears in one program.
///
/// `target_type` is always a framework data type: for statements related via
/// inheritance it names the framework supertype, not the application class,
/// so equivalent usages in different programs carry the same label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApiStatement {
    pub kind: ApiKind,
    pub target_type: String,
    /// Method or field name; constructors use `<init>`.
    pub member: String,
    /// Human-readable signature, e.g. `login()`.
    pub signature: String,
    pub relation: Relation,
    pub location: Location,
}

impl ApiStatement {
    /// Unique statement identifier derived from the location.
    pub fn id(&self) -> String {
        self.location.to_string()
    }
}

/// The label under which usage nodes are compared: instruction type, target
/// framework type, member name, plus an occurrence index that distinguishes
/// repeated calls to the same member within one usage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ApiLabel {
    pub kind: ApiKind,
    pub target: String,
    pub member: String,
    pub occurrence: u32,
}

impl ApiLabel {
    /// Label without the occurrence index, as reported to users.
    pub fn api_name(&self) -> String {
        match self.kind {
            ApiKind::ObjectInit => format!("init {}", self.target),
            ApiKind::MethodInvoke => format!("{}.{}()", self.target, self.member),
            ApiKind::FieldRead | ApiKind::FieldWrite => {
                format!("{}.{}", self.target, self.member)
            }
        }
    }
}

impl fmt::Display for ApiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.api_name())?;
        if self.occurrence > 1 {
            write!(f, "#{}", self.occurrence)?;
        }
        Ok(())
    }
}
