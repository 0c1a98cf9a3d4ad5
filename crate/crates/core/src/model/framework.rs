//! Declarations of the framework under study: its data types, method
//! signatures, and the per-method field-access summaries consumed by the
//! dependency miner.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A field declaration inside a class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
}

/// A method parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

/// A method signature. Constructors use the reserved name `<init>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodSig {
    pub name: String,
    pub is_static: bool,
    pub params: Vec<Param>,
    pub return_type: String,
}

impl MethodSig {
    pub fn is_ctor(&self) -> bool {
        self.name == CTOR_NAME
    }
}

/// Reserved member name for constructors.
pub const CTOR_NAME: &str = "<init>";

/// A class or interface declaration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    pub is_interface: bool,
    /// Names of extended/implemented types, in declaration order.
    pub supertypes: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodSig>,
}

impl TypeDecl {
    pub fn method(&self, name: &str) -> Option<&MethodSig> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Whether a method body reads or writes a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Read,
    Write,
}

/// One field access observed in a framework method body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldAccess {
    /// Type that declares the field.
    pub field_owner: String,
    pub field: String,
    pub mode: AccessMode,
}

/// The framework under study: its declared types plus, for every method,
/// the list of field accesses found in its body. Method keys are formatted
/// `Owner.name`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameworkModel {
    pub name: String,
    pub types: Vec<TypeDecl>,
    pub method_bodies: BTreeMap<String, Vec<FieldAccess>>,
    /// Same-class helper calls per method, used to propagate field accesses
    /// through internal helpers when mining dependencies.
    #[serde(default)]
    pub internal_calls: BTreeMap<String, Vec<String>>,
}

/// Formats the canonical `Owner.name` key for a method.
pub fn method_key(owner: &str, name: &str) -> String {
    format!("{owner}.{name}")
}

impl FrameworkModel {
    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn is_framework_type(&self, name: &str) -> bool {
        self.type_decl(name).is_some()
    }

    /// Looks a method up on `ty` or the nearest declaring supertype.
    pub fn resolve_method(&self, ty: &str, method: &str) -> Option<(&TypeDecl, &MethodSig)> {
        let mut queue = vec![ty.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(t) = queue.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            if let Some(decl) = self.type_decl(&t) {
                if let Some(sig) = decl.method(method) {
                    return Some((decl, sig));
                }
                queue.extend(decl.supertypes.iter().cloned());
            }
        }
        None
    }

    /// Checks the declaration invariants: acyclic supertype links and field
    /// accesses that name declared fields.
    pub fn validate(&self) -> Result<(), ModelError> {
        // Supertype links must form a DAG.
        let mut state: BTreeMap<&str, u8> = BTreeMap::new(); // 1 = visiting, 2 = done
        fn visit<'a>(
            fw: &'a FrameworkModel,
            ty: &'a str,
            state: &mut BTreeMap<&'a str, u8>,
        ) -> Result<(), ModelError> {
            match state.get(ty) {
                Some(1) => return Err(ModelError::InheritanceCycle(ty.to_string())),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(ty, 1);
            if let Some(decl) = fw.type_decl(ty) {
                for sup in &decl.supertypes {
                    visit(fw, sup, state)?;
                }
            }
            state.insert(ty, 2);
            Ok(())
        }
        for t in &self.types {
            visit(self, &t.name, &mut state)?;
        }
        // Field accesses must reference declared fields.
        for (method, accesses) in &self.method_bodies {
            for acc in accesses {
                let owner = self
                    .type_decl(&acc.field_owner)
                    .ok_or_else(|| ModelError::UnresolvedType(acc.field_owner.clone()))?;
                if owner.field(&acc.field).is_none() {
                    return Err(ModelError::UnresolvedType(format!(
                        "{}.{} (accessed from {method})",
                        acc.field_owner, acc.field
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(name: &str, supers: &[&str]) -> TypeDecl {
        TypeDecl {
            name: name.into(),
            is_interface: false,
            supertypes: supers.iter().map(|s| s.to_string()).collect(),
            fields: vec![],
            methods: vec![],
        }
    }

    #[test]
    fn validate_rejects_inheritance_cycle() {
        let fw = FrameworkModel {
            name: "f".into(),
            types: vec![ty("A", &["B"]), ty("B", &["A"])],
            method_bodies: BTreeMap::new(),
            internal_calls: BTreeMap::new(),
        };
        assert!(matches!(
            fw.validate(),
            Err(ModelError::InheritanceCycle(_))
        ));
    }

    #[test]
    fn validate_rejects_access_to_undeclared_field() {
        let mut fw = FrameworkModel {
            name: "f".into(),
            types: vec![ty("A", &[])],
            method_bodies: BTreeMap::new(),
            internal_calls: BTreeMap::new(),
        };
        fw.method_bodies.insert(
            method_key("A", "m"),
            vec![FieldAccess {
                field_owner: "A".into(),
                field: "ghost".into(),
                mode: AccessMode::Read,
            }],
        );
        assert!(fw.validate().is_err());
    }

    #[test]
    fn resolve_method_walks_supertypes() {
        let mut base = ty("Base", &[]);
        base.methods.push(MethodSig {
            name: "m".into(),
            is_static: false,
            params: vec![],
            return_type: "void".into(),
        });
        let fw = FrameworkModel {
            name: "f".into(),
            types: vec![base, ty("Sub", &["Base"])],
            method_bodies: BTreeMap::new(),
            internal_calls: BTreeMap::new(),
        };
        let (owner, _) = fw.resolve_method("Sub", "m").unwrap();
        assert_eq!(owner.name, "Base");
    }
}
