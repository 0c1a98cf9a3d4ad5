//! Class hierarchy over application and framework types, with the
//! framework-relatedness classification used by the slicer.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::framework::{FrameworkModel, TypeDecl};
use crate::model::statement::Relation;

/// Reflexive-transitive subtype relation over declared type names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHierarchy {
    /// Maps a type to all of its supertypes, including itself.
    pub subtype_of: BTreeMap<String, BTreeSet<String>>,
    /// Direct supertype links as declared, used for breadth-first walks.
    pub direct_supers: BTreeMap<String, Vec<String>>,
}

impl ClassHierarchy {
    pub fn contains(&self, ty: &str) -> bool {
        self.subtype_of.contains_key(ty)
    }

    /// Reflexive subtype test. Unknown types are only subtypes of themselves.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        self.subtype_of
            .get(sub)
            .map(|s| s.contains(sup))
            .unwrap_or(false)
    }

    /// All declared types that are subtypes of `sup`, including `sup` itself
    /// when declared.
    pub fn subtypes_of(&self, sup: &str) -> Vec<String> {
        self.subtype_of
            .iter()
            .filter(|(_, supers)| supers.contains(sup))
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// Framework supertypes of `ty` in breadth-first order from `ty`,
    /// ties broken alphabetically. The first entry is the framework type an
    /// indirectly-related statement is labeled with; when a class implements
    /// several framework types the choice is deterministic but recorded as a
    /// single target.
    pub fn framework_supertypes(&self, ty: &str, framework: &FrameworkModel) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        queue.push_back(ty.to_string());
        seen.insert(ty.to_string());
        while let Some(t) = queue.pop_front() {
            if t != ty && framework.is_framework_type(&t) {
                out.push(t.clone());
            }
            let mut nexts: Vec<String> = self.direct_supers.get(&t).cloned().unwrap_or_default();
            nexts.sort();
            for n in nexts {
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
        out
    }
}

/// Builds the reflexive-transitive closure of the declared extends/implements
/// links over the combined framework and application type sets.
pub fn build_class_hierarchy(
    framework: &FrameworkModel,
    app_types: &[TypeDecl],
) -> Result<ClassHierarchy, ModelError> {
    let mut decls: BTreeMap<&str, &TypeDecl> = BTreeMap::new();
    for t in framework.types.iter().chain(app_types.iter()) {
        if decls.insert(&t.name, t).is_some() {
            return Err(ModelError::UnresolvedType(format!(
                "duplicate type declaration `{}`",
                t.name
            )));
        }
    }
    // Every supertype reference must resolve.
    for t in decls.values() {
        for sup in &t.supertypes {
            if !decls.contains_key(sup.as_str()) {
                return Err(ModelError::UnresolvedType(sup.clone()));
            }
        }
    }

    let mut closure: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for name in decls.keys() {
        let mut supers = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        let mut on_path: Vec<String> = Vec::new();
        // Iterative DFS with an explicit path for cycle detection.
        fn walk(
            decls: &BTreeMap<&str, &TypeDecl>,
            ty: &str,
            supers: &mut BTreeSet<String>,
            on_path: &mut Vec<String>,
        ) -> Result<(), ModelError> {
            if on_path.iter().any(|p| p == ty) {
                return Err(ModelError::InheritanceCycle(ty.to_string()));
            }
            if !supers.insert(ty.to_string()) {
                return Ok(());
            }
            on_path.push(ty.to_string());
            if let Some(decl) = decls.get(ty) {
                for sup in &decl.supertypes {
                    walk(decls, sup, supers, on_path)?;
                }
            }
            on_path.pop();
            Ok(())
        }
        while let Some(t) = stack.pop() {
            walk(&decls, &t, &mut supers, &mut on_path)?;
        }
        closure.insert(name.to_string(), supers);
    }

    let direct_supers = decls
        .iter()
        .map(|(name, t)| (name.to_string(), t.supertypes.clone()))
        .collect();
    Ok(ClassHierarchy {
        subtype_of: closure,
        direct_supers,
    })
}

/// Classifies a statement target against the framework: direct use of a
/// framework data type, indirect use via an application type that inherits
/// or implements one, or unrelated.
pub fn classify_target(
    target: &str,
    framework: &FrameworkModel,
    ch: &ClassHierarchy,
) -> Result<Relation, ModelError> {
    if framework.is_framework_type(target) {
        return Ok(Relation::Direct);
    }
    if !ch.contains(target) {
        return Err(ModelError::UnresolvedType(target.to_string()));
    }
    let fw_supers = ch.framework_supertypes(target, framework);
    if fw_supers.is_empty() {
        Ok(Relation::None)
    } else {
        Ok(Relation::IndirectViaInheritance)
    }
}
