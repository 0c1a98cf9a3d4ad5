//! Dependencies between a framework's own API methods, mined from the
//! framework source. A method that writes a field must run before any method
//! that reads it; programs calling a reader before every writer of the field
//! on the same receiver violate an implicit framework rule and are filtered
//! out of the training corpus.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{method_key, AccessMode, ApiKind, FrameworkModel, NodeId, PrimaryApiUsageGraph};

/// Rule tag carried on every violation.
pub const READER_BEFORE_WRITER: &str = "reader-before-writer";

/// One writer-to-reader dependency: `reader` consumes a field value that
/// `writer` produces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IfdEdge {
    /// Method key `Owner.name` of the writing method.
    pub writer: String,
    /// Method key `Owner.name` of the reading method.
    pub reader: String,
    /// Type declaring the field.
    pub field_owner: String,
    pub field: String,
}

/// The mined dependency model: the set of writer-to-reader edges, which
/// induces a strict partial order on API methods (self edges are excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfdModel {
    pub framework: String,
    pub edges: Vec<IfdEdge>,
}

impl IfdModel {
    pub fn edges_reading<'a>(&'a self, reader: &'a str) -> impl Iterator<Item = &'a IfdEdge> + 'a {
        self.edges.iter().filter(move |e| e.reader == reader)
    }

    /// Methods that write `field` (of `field_owner`) according to the model.
    pub fn writers_of(&self, field_owner: &str, field: &str) -> BTreeSet<&str> {
        self.edges
            .iter()
            .filter(|e| e.field_owner == field_owner && e.field == field)
            .map(|e| e.writer.as_str())
            .collect()
    }

    /// Whether `earlier` must precede `later` for some field.
    pub fn requires_order(&self, earlier: &str, later: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.writer == earlier && e.reader == later)
    }
}

/// Mines the dependency model with the default one-level propagation through
/// same-class helper calls.
pub fn mine_ifd(framework: &FrameworkModel) -> IfdModel {
    mine_ifd_with_depth(framework, 1)
}

/// Mines the dependency model. `transitive_depth` is the number of
/// same-class call hops through which field accesses propagate: a method
/// calling its own class's writer counts as a writer at depth one.
pub fn mine_ifd_with_depth(framework: &FrameworkModel, transitive_depth: u32) -> IfdModel {
    // Effective accesses per method: direct accesses plus accesses reached
    // through up to `transitive_depth` internal call hops.
    let mut effective: BTreeMap<&str, BTreeSet<(&str, &str, AccessMode)>> = BTreeMap::new();
    for method in framework.method_bodies.keys() {
        let mut acc: BTreeSet<(&str, &str, AccessMode)> = BTreeSet::new();
        let mut frontier: BTreeSet<&str> = BTreeSet::from([method.as_str()]);
        let mut seen = frontier.clone();
        for hop in 0..=transitive_depth {
            let mut next = BTreeSet::new();
            for m in &frontier {
                if let Some(direct) = framework.method_bodies.get(*m) {
                    for a in direct {
                        acc.insert((a.field_owner.as_str(), a.field.as_str(), a.mode));
                    }
                }
                if hop < transitive_depth {
                    for callee in framework.internal_calls.get(*m).into_iter().flatten() {
                        if seen.insert(callee.as_str()) {
                            next.insert(callee.as_str());
                        }
                    }
                }
            }
            frontier = next;
        }
        effective.insert(method.as_str(), acc);
    }

    let mut writers: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    let mut readers: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for (method, acc) in &effective {
        for (owner, field, mode) in acc {
            let entry = match mode {
                AccessMode::Write => writers.entry((owner, field)).or_default(),
                AccessMode::Read => readers.entry((owner, field)).or_default(),
            };
            entry.insert(*method);
        }
    }

    let mut edges = BTreeSet::new();
    for ((owner, field), ws) in &writers {
        if let Some(rs) = readers.get(&(owner, field)) {
            for w in ws {
                for r in rs {
                    if w != r {
                        edges.insert(IfdEdge {
                            writer: w.to_string(),
                            reader: r.to_string(),
                            field_owner: owner.to_string(),
                            field: field.to_string(),
                        });
                    }
                }
            }
        }
    }
    IfdModel {
        framework: framework.name.clone(),
        edges: edges.into_iter().collect(),
    }
}

/// A reader called before any writer of its field on the same receiver.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub program: String,
    pub entrypoint: String,
    /// The reading statement, which executes too early.
    pub reader_node: NodeId,
    pub reader: String,
    /// The writing statement it should follow.
    pub writer_node: NodeId,
    pub writer: String,
    pub field_owner: String,
    pub field: String,
    pub rule: String,
}

/// One API call site with the data a violation check needs.
struct CallSite {
    node: NodeId,
    method: String,
    exec_order: u32,
    receiver_origin: Option<NodeId>,
}

fn check_call_sites(
    program: &str,
    entrypoint: &str,
    invokes: &[CallSite],
    ifd: &IfdModel,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for r in invokes {
        let Some(r_origin) = r.receiver_origin else {
            continue;
        };
        // Group this reader's dependencies by field.
        let mut fields: BTreeSet<(&str, &str)> = BTreeSet::new();
        for e in ifd.edges_reading(&r.method) {
            fields.insert((e.field_owner.as_str(), e.field.as_str()));
        }
        for (owner, field) in fields {
            let writer_methods = ifd.writers_of(owner, field);
            let writes: Vec<&CallSite> = invokes
                .iter()
                .filter(|w| {
                    w.node != r.node
                        && w.receiver_origin == Some(r_origin)
                        && writer_methods.contains(w.method.as_str())
                })
                .collect();
            let satisfied = writes.iter().any(|w| w.exec_order < r.exec_order);
            if satisfied {
                continue;
            }
            for w in writes {
                if w.exec_order > r.exec_order {
                    out.push(Violation {
                        program: program.to_string(),
                        entrypoint: entrypoint.to_string(),
                        reader_node: r.node,
                        reader: r.method.clone(),
                        writer_node: w.node,
                        writer: w.method.clone(),
                        field_owner: owner.to_string(),
                        field: field.to_string(),
                        rule: READER_BEFORE_WRITER.to_string(),
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// Checks a usage graph against the model: for every reader that precedes a
/// same-receiver writer of its field with no earlier write, one violation is
/// reported per trailing writer.
pub fn check_violations(g: &PrimaryApiUsageGraph, ifd: &IfdModel) -> Vec<Violation> {
    let invokes: Vec<CallSite> = g
        .api_nodes()
        .filter_map(|n| {
            let s = n.stmt.as_ref()?;
            (s.kind == ApiKind::MethodInvoke).then(|| CallSite {
                node: n.id,
                method: method_key(&s.target_type, &s.member),
                exec_order: n.exec_order,
                receiver_origin: n.receiver_origin,
            })
        })
        .collect();
    check_call_sites(&g.program, &g.entrypoint, &invokes, ifd)
}

/// The same check over a usage model, using the execution order its nodes
/// carry. Used when diagnosing partial or unsound programs whose sliced
/// graph is no longer at hand.
pub fn check_violations_model(g: &crate::model::Graam, ifd: &IfdModel) -> Vec<Violation> {
    let invokes: Vec<CallSite> = g
        .api_nodes()
        .filter_map(|n| {
            let l = n.label.as_ref()?;
            (l.kind == ApiKind::MethodInvoke).then(|| CallSite {
                node: n.id,
                method: method_key(&l.target, &l.member),
                exec_order: n.exec_order,
                receiver_origin: n.receiver_origin,
            })
        })
        .collect();
    check_call_sites(&g.program, &g.entrypoint, &invokes, ifd)
}

/// Splits a corpus into sound usages and usages with violations.
pub fn filter_sound(
    corpus: Vec<PrimaryApiUsageGraph>,
    ifd: &IfdModel,
) -> (
    Vec<PrimaryApiUsageGraph>,
    Vec<(PrimaryApiUsageGraph, Vec<Violation>)>,
) {
    let mut sound = Vec::new();
    let mut unsound = Vec::new();
    for g in corpus {
        let violations = check_violations(&g, ifd);
        if violations.is_empty() {
            sound.push(g);
        } else {
            unsound.push((g, violations));
        }
    }
    (sound, unsound)
}
