//! Context-sensitive call graph. A context is a (method, creating call site)
//! pair: a method invoked from k distinct call sites yields k distinct
//! contexts, recursion folds back onto the existing context for its site, and
//! entrypoints get root contexts. Dispatch is resolved by class-hierarchy
//! analysis over the receiver's static type.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::frontend::lower::{Callee, LoweredKind, ProgramFacts};
use crate::model::{method_key, ClassHierarchy, FrameworkModel, CTOR_NAME};

pub type ContextId = usize;

/// A call site: enclosing method key plus statement index.
pub type Site = (String, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    /// Method key `Owner.name`.
    pub method: String,
    /// The call site that created this context; root contexts have none.
    pub site: Option<Site>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEdge {
    pub caller: ContextId,
    pub callee: ContextId,
    /// Statement index of the call site in the caller's method.
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallGraph {
    pub contexts: Vec<Context>,
    pub edges: Vec<CallEdge>,
    pub roots: BTreeMap<String, ContextId>,
}

impl CallGraph {
    pub fn edges_from(&self, ctx: ContextId) -> impl Iterator<Item = &CallEdge> {
        self.edges.iter().filter(move |e| e.caller == ctx)
    }

    /// Contexts reachable from an entrypoint's root context.
    pub fn reachable(&self, entrypoint: &str) -> BTreeSet<ContextId> {
        let mut seen = BTreeSet::new();
        let Some(&root) = self.roots.get(entrypoint) else {
            return seen;
        };
        let mut queue = VecDeque::from([root]);
        seen.insert(root);
        while let Some(c) = queue.pop_front() {
            for e in self.edges_from(c) {
                if seen.insert(e.callee) {
                    queue.push_back(e.callee);
                }
            }
        }
        seen
    }
}

/// Application method bodies a call statement may dispatch to. Calls into
/// framework or external types resolve to nothing here; those statements are
/// API uses, not traversable calls.
pub fn resolve_targets(
    kind: &LoweredKind,
    facts: &ProgramFacts,
    framework: &FrameworkModel,
    ch: &ClassHierarchy,
) -> Vec<String> {
    let app_has_body = |key: &str| facts.methods.contains_key(key);
    let declares = |ty: &str, name: &str| -> Option<String> {
        // Walk up the hierarchy from `ty` for the nearest declaration.
        let mut queue = vec![ty.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(t) = queue.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            let decl = facts
                .types
                .iter()
                .find(|d| d.name == t)
                .or_else(|| framework.type_decl(&t));
            if let Some(d) = decl {
                if d.method(name).is_some() {
                    return Some(t);
                }
                queue.extend(d.supertypes.iter().cloned());
            }
        }
        None
    };
    let mut out = BTreeSet::new();
    match kind {
        LoweredKind::New { class, .. } => {
            let key = method_key(class, CTOR_NAME);
            if app_has_body(&key) {
                out.insert(key);
            }
        }
        LoweredKind::Call {
            callee,
            method,
            receiver_type,
            ..
        } => match callee {
            Callee::Class(c) => {
                if let Some(owner) = declares(c, method) {
                    let key = method_key(&owner, method);
                    if app_has_body(&key) {
                        out.insert(key);
                    }
                }
            }
            Callee::Var(_) => {
                // Class-hierarchy analysis: every subtype of the static
                // receiver type contributes its resolved override.
                let mut types = ch.subtypes_of(receiver_type);
                if types.is_empty() {
                    types.push(receiver_type.clone());
                }
                for t in types {
                    if let Some(owner) = declares(&t, method) {
                        let key = method_key(&owner, method);
                        if app_has_body(&key) {
                            out.insert(key);
                        }
                    }
                }
            }
        },
        _ => {}
    }
    out.into_iter().collect()
}

/// Builds the 1-CFA call graph from the entrypoints listed in the facts.
pub fn build_call_graph(
    facts: &ProgramFacts,
    framework: &FrameworkModel,
    ch: &ClassHierarchy,
) -> Result<CallGraph, AnalysisError> {
    if facts.entrypoints.is_empty() {
        return Err(AnalysisError::NoEntrypoint(facts.program.clone()));
    }
    let mut contexts: Vec<Context> = Vec::new();
    let mut index: BTreeMap<(String, Option<Site>), ContextId> = BTreeMap::new();
    let mut roots = BTreeMap::new();
    let mut edges = Vec::new();
    let mut queue = VecDeque::new();

    let intern = |contexts: &mut Vec<Context>,
                  index: &mut BTreeMap<(String, Option<Site>), ContextId>,
                  method: &str,
                  site: Option<Site>|
     -> (ContextId, bool) {
        let key = (method.to_string(), site.clone());
        if let Some(&id) = index.get(&key) {
            return (id, false);
        }
        let id = contexts.len();
        contexts.push(Context {
            method: method.to_string(),
            site,
        });
        index.insert(key, id);
        (id, true)
    };

    for entry in &facts.entrypoints {
        if !facts.methods.contains_key(entry) {
            return Err(AnalysisError::NoEntrypoint(format!(
                "{}: entrypoint `{entry}` has no body",
                facts.program
            )));
        }
        let (id, fresh) = intern(&mut contexts, &mut index, entry, None);
        roots.insert(entry.clone(), id);
        if fresh {
            queue.push_back(id);
        }
    }

    while let Some(ctx_id) = queue.pop_front() {
        let method = contexts[ctx_id].method.clone();
        let m = &facts.methods[&method];
        for stmt in &m.statements {
            let targets = resolve_targets(&stmt.kind, facts, framework, ch);
            for target in targets {
                let site = (method.clone(), stmt.index);
                let (callee_id, fresh) = intern(&mut contexts, &mut index, &target, Some(site));
                edges.push(CallEdge {
                    caller: ctx_id,
                    callee: callee_id,
                    site: stmt.index,
                });
                if fresh {
                    queue.push_back(callee_id);
                }
            }
        }
    }
    edges.sort_unstable_by_key(|e| (e.caller, e.site, e.callee));
    edges.dedup();
    Ok(CallGraph {
        contexts,
        edges,
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lower::lower;
    use crate::frontend::parser::parse;
    use crate::model::build_class_hierarchy;
    use std::collections::BTreeMap as Map;

    fn fw_empty() -> FrameworkModel {
        FrameworkModel {
            name: "fw".into(),
            types: vec![],
            method_bodies: Map::new(),
            internal_calls: Map::new(),
        }
    }

    fn graph_of(src: &str) -> (ProgramFacts, CallGraph) {
        let ast = parse("a.mini", src).unwrap();
        let fw = fw_empty();
        let facts = lower("p", &[ast], &fw).unwrap();
        let ch = build_class_hierarchy(&fw, &facts.types).unwrap();
        let cg = build_call_graph(&facts, &fw, &ch).unwrap();
        (facts, cg)
    }

    #[test]
    fn single_call_site_yields_one_context() {
        let (_, cg) = graph_of(
            r#"
            class A {
                static void main() { A.helper(); }
                static void helper() { }
            }
            "#,
        );
        let helpers: Vec<_> = cg
            .contexts
            .iter()
            .filter(|c| c.method == "A.helper")
            .collect();
        assert_eq!(helpers.len(), 1);
        assert!(helpers[0].site.is_some());
    }

    #[test]
    fn two_call_sites_yield_two_contexts() {
        let (_, cg) = graph_of(
            r#"
            class A {
                static void main() { A.helper(); A.helper(); A.other(); }
                static void other() { A.helper(); }
                static void helper() { }
            }
            "#,
        );
        // main has two distinct sites, other one more
        let helpers: Vec<_> = cg
            .contexts
            .iter()
            .filter(|c| c.method == "A.helper")
            .collect();
        assert_eq!(helpers.len(), 3);
    }

    #[test]
    fn recursion_folds_onto_existing_context() {
        // Hand-built expectation for a three-function recursive cycle:
        // main -> f (site) -> g (site) -> f folds back to a context keyed by
        // g's call site, not an unbounded chain.
        let (_, cg) = graph_of(
            r#"
            class A {
                static void main() { A.f(); }
                static void f() { A.g(); }
                static void g() { A.f(); }
            }
            "#,
        );
        let expected: BTreeSet<(String, Option<Site>)> = [
            ("A.main".to_string(), None),
            ("A.f".to_string(), Some(("A.main".to_string(), 0))),
            ("A.g".to_string(), Some(("A.f".to_string(), 0))),
            ("A.f".to_string(), Some(("A.g".to_string(), 0))),
        ]
        .into_iter()
        .collect();
        let actual: BTreeSet<(String, Option<Site>)> = cg
            .contexts
            .iter()
            .map(|c| (c.method.clone(), c.site.clone()))
            .collect();
        assert_eq!(actual, expected);
        // The fold: the second f context calls back into the existing g
        // context instead of spawning a new one.
        assert_eq!(cg.edges.len(), 4);
        let g_ctx = cg.contexts.iter().position(|c| c.method == "A.g").unwrap();
        assert_eq!(
            cg.edges.iter().filter(|e| e.callee == g_ctx).count(),
            2,
            "both f contexts target the single g context"
        );
    }

    #[test]
    fn dispatch_over_subtypes() {
        let (_, cg) = graph_of(
            r#"
            class Base { Base() { } void m() { } }
            class Sub extends Base { Sub() { } void m() { } }
            class A {
                static void main() { Base b = new Base(); b.m(); }
            }
            "#,
        );
        // CHA considers both Base.m and Sub.m for a Base-typed receiver.
        let methods: BTreeSet<_> = cg.contexts.iter().map(|c| c.method.as_str()).collect();
        assert!(methods.contains("Base.m"));
        assert!(methods.contains("Sub.m"));
    }

    #[test]
    fn missing_entrypoint_is_an_error() {
        let ast = parse("a.mini", "class A { void m() { } A() { } }").unwrap();
        let fw = fw_empty();
        let facts = lower("p", &[ast], &fw).unwrap();
        let ch = build_class_hierarchy(&fw, &facts.types).unwrap();
        assert!(matches!(
            build_call_graph(&facts, &fw, &ch),
            Err(AnalysisError::NoEntrypoint(_))
        ));
    }
}
