//! Usage-model construction: semantic equivalence of API node sets, the
//! per-program order-constraint model built from a validated usage graph,
//! and canonical forms.
//!
//! Two programs that use the framework the same way but interleave the calls
//! differently end up with isomorphic models: incidental statement order is
//! erased, and only data dependencies, mined framework dependencies and
//! start/end wiring remain.

mod canonical;

pub use canonical::{canonical_form, canonical_form_with_limit, CanonicalForm, DEFAULT_NODE_LIMIT};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{AnalysisError, ModelError};
use crate::ifd::IfdModel;
use crate::model::{
    method_key, ApiKind, ApiLabel, Graam, GraamEdge, GraamEdgeKind, GraamNode, NodeId, NodeRole,
    PrimaryApiUsageGraph,
};

// ---------------------------------------------------------------------------
// Semantic equivalence
// ---------------------------------------------------------------------------

/// A set of API nodes with the dependency edges among them, lifted out of a
/// usage graph or usage model for comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiSubgraph {
    pub labels: Vec<ApiLabel>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl ApiSubgraph {
    /// Induced data-dependency subgraph over `nodes` of a usage graph.
    pub fn from_primary(g: &PrimaryApiUsageGraph, nodes: &[NodeId]) -> ApiSubgraph {
        let keep: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&id| g.nodes[id].role == NodeRole::Api)
            .collect();
        let index: BTreeMap<NodeId, usize> =
            keep.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let labels = keep
            .iter()
            .map(|&id| g.nodes[id].label().expect("api node"))
            .collect();
        let edges = g
            .data_edges
            .iter()
            .filter_map(|&(s, d)| Some((*index.get(&s)?, *index.get(&d)?)))
            .collect();
        ApiSubgraph { labels, edges }
    }

    /// Induced order-constraint subgraph over `nodes` of a usage model.
    pub fn from_graam(g: &Graam, nodes: &[NodeId]) -> ApiSubgraph {
        let keep: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&id| g.nodes[id].role == NodeRole::Api)
            .collect();
        let index: BTreeMap<NodeId, usize> =
            keep.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let labels = keep
            .iter()
            .map(|&id| g.nodes[id].label.clone().expect("api node"))
            .collect();
        let edges = g
            .edges
            .iter()
            .filter_map(|e| Some((*index.get(&e.src)?, *index.get(&e.dst)?)))
            .collect();
        ApiSubgraph { labels, edges }
    }
}

/// True when a bijection pairs nodes of equal kind, target and member and
/// maps one edge set onto the other.
pub fn equivalent(a: &ApiSubgraph, b: &ApiSubgraph) -> bool {
    if a.labels.len() != b.labels.len() {
        return false;
    }
    let mut a_sorted = a.labels.clone();
    let mut b_sorted = b.labels.clone();
    a_sorted.sort();
    b_sorted.sort();
    if a_sorted != b_sorted {
        return false;
    }
    let n = a.labels.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn assign(
        k: usize,
        a: &ApiSubgraph,
        b: &ApiSubgraph,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let n = a.labels.len();
        if k == n {
            return true;
        }
        for j in 0..n {
            if used[j] || a.labels[k] != b.labels[j] {
                continue;
            }
            // incremental edge consistency against already-mapped nodes
            let consistent = (0..k).all(|m| {
                a.edges.contains(&(k, m)) == b.edges.contains(&(j, map[m]))
                    && a.edges.contains(&(m, k)) == b.edges.contains(&(map[m], j))
            }) && a.edges.contains(&(k, k)) == b.edges.contains(&(j, j));
            if !consistent {
                continue;
            }
            map[k] = j;
            used[j] = true;
            if assign(k + 1, a, b, map, used) {
                return true;
            }
            used[j] = false;
            map[k] = usize::MAX;
        }
        false
    }
    assign(0, a, b, &mut map, &mut used)
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

/// Builds the order-constraint model from a usage graph: keep the data
/// dependencies and the start/end wiring, drop every other sequence edge,
/// and add the order constraints the framework itself imposes between the
/// present calls (same receiver only). Nodes left unreachable by the edge
/// removal are re-wired to start or end.
///
/// If the data dependencies contradict a mined order constraint the result
/// would be cyclic; that signals an inconsistent input and is an error
/// rather than a silent repair.
pub fn build_graam(g: &PrimaryApiUsageGraph, ifd: &IfdModel) -> crate::Result<Graam> {
    g.validate()?;
    let start = g.start().expect("validated graph has a start");
    let ends: BTreeSet<NodeId> = g.ends().into_iter().collect();

    // New layout: start, API nodes in id order, one end.
    let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut nodes = vec![GraamNode::start(0)];
    remap.insert(start, 0);
    for n in g.api_nodes() {
        let id = nodes.len();
        remap.insert(n.id, id);
        nodes.push(GraamNode {
            id,
            role: NodeRole::Api,
            label: n.label(),
            exec_order: n.exec_order,
            relation: n.stmt.as_ref().map(|s| s.relation),
            location: n.stmt.as_ref().map(|s| s.location.clone()),
            receiver_origin: None,
        });
    }
    let end_id = nodes.len();
    nodes.push(GraamNode::end(end_id));
    for &e in &ends {
        remap.insert(e, end_id);
    }
    // receiver origins carry over through the remap
    for n in g.api_nodes() {
        if let Some(orig) = n.receiver_origin {
            let id = remap[&n.id];
            nodes[id].receiver_origin = remap.get(&orig).copied();
        }
    }

    let mut edges: Vec<GraamEdge> = Vec::new();
    for &(s, d) in &g.data_edges {
        edges.push(GraamEdge {
            src: remap[&s],
            dst: remap[&d],
            kind: GraamEdgeKind::Data,
        });
    }
    for &(s, d) in &g.sequence_edges {
        if s == start || ends.contains(&d) {
            edges.push(GraamEdge {
                src: remap[&s],
                dst: remap[&d],
                kind: GraamEdgeKind::Wiring,
            });
        }
    }
    // Order constraints mined from the framework, between present calls on
    // the same receiver.
    let invokes: Vec<&GraamNode> = nodes
        .iter()
        .filter(|n| {
            n.role == NodeRole::Api
                && n.label.as_ref().map(|l| l.kind) == Some(ApiKind::MethodInvoke)
        })
        .collect();
    let mut ifd_edges = Vec::new();
    for w in &invokes {
        for r in &invokes {
            if w.id == r.id || w.receiver_origin.is_none() {
                continue;
            }
            if w.receiver_origin != r.receiver_origin {
                continue;
            }
            let (wl, rl) = (w.label.as_ref().unwrap(), r.label.as_ref().unwrap());
            if ifd.requires_order(
                &method_key(&wl.target, &wl.member),
                &method_key(&rl.target, &rl.member),
            ) {
                ifd_edges.push(GraamEdge {
                    src: w.id,
                    dst: r.id,
                    kind: GraamEdgeKind::Ifd,
                });
            }
        }
    }
    edges.extend(ifd_edges);

    let mut model = Graam {
        program: g.program.clone(),
        entrypoint: g.entrypoint.clone(),
        nodes,
        edges,
    };
    model.dedup_edges();
    if let Err(cycle) = acyclic(&model) {
        return Err(AnalysisError::CycleAfterAugmentation(cycle).into());
    }
    model.normalize();
    model.validate()?;
    Ok(model)
}

/// Kahn check; on failure returns a description of the cyclic remainder.
fn acyclic(g: &Graam) -> Result<(), String> {
    let succs = g.succs();
    let mut in_deg = vec![0usize; g.nodes.len()];
    for ss in &succs {
        for &d in ss {
            in_deg[d] += 1;
        }
    }
    let mut queue: Vec<NodeId> = (0..g.nodes.len()).filter(|&i| in_deg[i] == 0).collect();
    let mut seen = 0;
    while let Some(x) = queue.pop() {
        seen += 1;
        for &d in &succs[x] {
            in_deg[d] -= 1;
            if in_deg[d] == 0 {
                queue.push(d);
            }
        }
    }
    if seen == g.nodes.len() {
        Ok(())
    } else {
        let cyclic: Vec<String> = g
            .nodes
            .iter()
            .filter(|n| in_deg[n.id] > 0)
            .map(|n| {
                n.label
                    .as_ref()
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| format!("node {}", n.id))
            })
            .collect();
        Err(cyclic.join(", "))
    }
}

/// Every start-to-end path as its sequence of API node labels, in a
/// deterministic order. Intended for corpora whose models stay small; the
/// path count is exponential in the worst case.
pub fn label_paths(g: &Graam) -> Vec<Vec<String>> {
    let succs = g.succs();
    let start = g.start();
    let mut out = Vec::new();
    let mut path: Vec<String> = Vec::new();
    fn walk(
        g: &Graam,
        succs: &[Vec<NodeId>],
        at: NodeId,
        path: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        if g.nodes[at].role == NodeRole::End {
            out.push(path.clone());
            return;
        }
        for &d in &succs[at] {
            let pushed = if g.nodes[d].role == NodeRole::Api {
                path.push(g.nodes[d].label.as_ref().unwrap().to_string());
                true
            } else {
                false
            };
            walk(g, succs, d, path, out);
            if pushed {
                path.pop();
            }
        }
    }
    walk(g, &succs, start, &mut path, &mut out);
    out.sort();
    out
}

/// Full model validation: the structural invariants plus the canonical-form
/// requirement that no node has two semantically equivalent outgoing
/// branches.
pub fn validate_graam(g: &Graam) -> Result<(), ModelError> {
    g.validate()?;
    let succs = g.succs();
    for n in &g.nodes {
        let ss = &succs[n.id];
        for i in 0..ss.len() {
            for j in (i + 1)..ss.len() {
                let (a, b) = (ss[i], ss[j]);
                if g.nodes[a].label != g.nodes[b].label || g.nodes[a].label.is_none() {
                    continue;
                }
                if branch_form(g, a) == branch_form(g, b) {
                    return Err(ModelError::InvalidGraph(format!(
                        "node {} has two equivalent outgoing branches ({} and {})",
                        n.id, a, b
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Canonical form of the sub-model reachable from `root` (the branch rooted
/// there), with the root individualized.
fn branch_form(g: &Graam, root: NodeId) -> CanonicalForm {
    let succs = g.succs();
    let mut keep = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        for &d in &succs[x] {
            if g.nodes[d].role == NodeRole::Api && keep.insert(d) {
                stack.push(d);
            }
        }
    }
    let mut sub = g.induced_upper(&keep.iter().copied().collect::<Vec<_>>());
    // Individualize the root so the form is anchored at the branch head.
    let new_root = sub
        .nodes
        .iter()
        .find(|n| n.label == g.nodes[root].label)
        .map(|n| n.id)
        .unwrap();
    if let Some(l) = &mut sub.nodes[new_root].label {
        l.occurrence = u32::MAX; // reserved marker, never produced by lowering
    }
    canonical_form_with_limit(&sub, 1 << 16).expect("branch within bounds")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver;
    use crate::ifd::mine_ifd;
    use crate::model::FrameworkModel;
    use std::path::{Path, PathBuf};

    fn fixture_root() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/jaas-analog")
    }

    fn fixture_graam(name: &str) -> Graam {
        let root = fixture_root();
        let fw = driver::load_framework(&root.join("framework"), "jaas").unwrap();
        let ifd = mine_ifd(&fw);
        let facts =
            driver::load_program(&root.join("programs").join(name), name, &fw, None).unwrap();
        let usages = driver::extract_usages(&facts, &fw).unwrap();
        build_graam(&usages[0], &ifd).unwrap()
    }

    fn fw_jaas() -> FrameworkModel {
        driver::load_framework(&fixture_root().join("framework"), "jaas").unwrap()
    }

    fn edge_labels(g: &Graam) -> BTreeSet<(String, String)> {
        let name = |id: NodeId| match g.nodes[id].role {
            NodeRole::Start => "start".to_string(),
            NodeRole::End => "end".to_string(),
            NodeRole::Api => g.nodes[id].label.as_ref().unwrap().to_string(),
        };
        g.edges.iter().map(|e| (name(e.src), name(e.dst))).collect()
    }

    #[test]
    fn listing1_model_shape() {
        let g = fixture_graam("listing1");
        validate_graam(&g).unwrap();
        let expected: BTreeSet<(String, String)> = [
            ("start", "init CallbackHandler"),
            ("start", "init Subject"),
            ("init CallbackHandler", "init LoginContext"),
            ("init Subject", "init LoginContext"),
            ("init LoginContext", "LoginContext.login()"),
            ("LoginContext.login()", "end"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(edge_labels(&g), expected);
    }

    #[test]
    fn listing2_model_shape_includes_mined_order_edge() {
        let g = fixture_graam("listing2");
        validate_graam(&g).unwrap();
        let expected: BTreeSet<(String, String)> = [
            ("start", "init Subject"),
            ("start", "init CallbackHandler"),
            ("init Subject", "init LoginContext"),
            ("init CallbackHandler", "init LoginContext"),
            ("init LoginContext", "LoginContext.login()"),
            ("init LoginContext", "LoginContext.getSubject()"),
            ("LoginContext.login()", "LoginContext.getSubject()"),
            ("LoginContext.getSubject()", "Subject.getPrincipals()"),
            ("Subject.getPrincipals()", "end"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(edge_labels(&g), expected);
        // The login-to-getSubject order constraint is the mined one.
        let login = g
            .api_nodes()
            .find(|n| n.label.as_ref().unwrap().member == "login")
            .unwrap();
        let get = g
            .api_nodes()
            .find(|n| n.label.as_ref().unwrap().member == "getSubject")
            .unwrap();
        assert!(g
            .edges
            .iter()
            .any(|e| e.src == login.id && e.dst == get.id && e.kind == GraamEdgeKind::Ifd));
    }

    #[test]
    fn api_nodes_are_connected_only_by_data_or_mined_edges() {
        // Incidental statement order never survives: an edge between two
        // API nodes is always a data dependency or a mined constraint.
        for name in ["listing1", "listing2"] {
            let g = fixture_graam(name);
            for e in &g.edges {
                if g.nodes[e.src].role == NodeRole::Api && g.nodes[e.dst].role == NodeRole::Api {
                    assert!(
                        matches!(e.kind, GraamEdgeKind::Data | GraamEdgeKind::Ifd),
                        "bare order edge {}->{} in {name}",
                        e.src,
                        e.dst
                    );
                }
            }
        }
    }

    #[test]
    fn single_api_node_model() {
        let fw = fw_jaas();
        let ifd = mine_ifd(&fw);
        let ast = crate::frontend::parse(
            "a.mini",
            "class A { static void main() { Subject s = new Subject(); } }",
        )
        .unwrap();
        let facts = crate::frontend::lower("p", &[ast], &fw).unwrap();
        let usages = driver::extract_usages(&facts, &fw).unwrap();
        let g = build_graam(&usages[0], &ifd).unwrap();
        assert_eq!(g.api_count(), 1);
        assert_eq!(g.edges.len(), 2); // start -> node -> end
    }

    #[test]
    fn contradictory_order_is_a_cycle_error() {
        use crate::ifd::IfdEdge;
        // A usage whose data flow runs reader -> writer while the framework
        // demands writer-before-reader.
        let fw = fw_jaas();
        let ast = crate::frontend::parse(
            "a.mini",
            r#"
            class A {
                static void main() {
                    LoginContext lc = new LoginContext("n", new Subject(), new JH("u","p"));
                    Subject s = lc.getSubject();
                    lc.login();
                }
            }
            class JH implements CallbackHandler {
                JH(String u, String p) { }
                void handle(String prompt) { }
            }
            "#,
        )
        .unwrap();
        let facts = crate::frontend::lower("p", &[ast], &fw).unwrap();
        let usages = driver::extract_usages(&facts, &fw).unwrap();
        // Forged dependency in the wrong direction: getSubject writes what
        // login reads.
        let ifd = crate::ifd::IfdModel {
            framework: "jaas".into(),
            edges: vec![
                IfdEdge {
                    writer: "LoginContext.login".into(),
                    reader: "LoginContext.getSubject".into(),
                    field_owner: "LoginContext".into(),
                    field: "subject".into(),
                },
                IfdEdge {
                    writer: "LoginContext.getSubject".into(),
                    reader: "LoginContext.login".into(),
                    field_owner: "LoginContext".into(),
                    field: "loginSucceeded".into(),
                },
            ],
        };
        let err = build_graam(&usages[0], &ifd).unwrap_err();
        assert!(matches!(
            err,
            crate::Error::Analysis(AnalysisError::CycleAfterAugmentation(_))
        ));
    }

    #[test]
    fn equivalent_accepts_reordered_instantiations() {
        let g1 = fixture_graam("listing1");
        let g2 = fixture_graam("listing2");
        let region = |g: &Graam| -> Vec<NodeId> {
            g.api_nodes()
                .filter(|n| {
                    let l = n.label.as_ref().unwrap();
                    l.member == "<init>" || l.member == "login"
                })
                .map(|n| n.id)
                .collect()
        };
        let a = ApiSubgraph::from_graam(&g1, &region(&g1));
        let b = ApiSubgraph::from_graam(&g2, &region(&g2));
        assert_eq!(a.labels.len(), 4);
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn equivalent_on_sliced_usage_graphs() {
        // The same four-statement usage, interleaved differently in the two
        // sample programs, compares equal on the data-dependency shape.
        let root = fixture_root();
        let fw = fw_jaas();
        let usage = |name: &str| {
            let facts =
                driver::load_program(&root.join("programs").join(name), name, &fw, None).unwrap();
            driver::extract_usages(&facts, &fw).unwrap().remove(0)
        };
        let u1 = usage("listing1");
        let u2 = usage("listing2");
        let region = |g: &crate::model::PrimaryApiUsageGraph| -> Vec<NodeId> {
            g.api_nodes()
                .filter(|n| {
                    let s = n.stmt.as_ref().unwrap();
                    s.member == "<init>" || s.member == "login"
                })
                .map(|n| n.id)
                .collect()
        };
        let a = ApiSubgraph::from_primary(&u1, &region(&u1));
        let b = ApiSubgraph::from_primary(&u2, &region(&u2));
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn equivalent_rejects_target_mismatch() {
        let g2 = fixture_graam("listing2");
        let pick = |member: &str| -> Vec<NodeId> {
            g2.api_nodes()
                .filter(|n| n.label.as_ref().unwrap().member == member)
                .map(|n| n.id)
                .collect()
        };
        let subj = ApiSubgraph::from_graam(&g2, &pick("login"));
        let lc = ApiSubgraph::from_graam(&g2, &pick("getSubject"));
        assert!(!equivalent(&subj, &lc));
    }

    #[test]
    fn equivalent_rejects_reversed_edge() {
        let mk = |edges: &[(usize, usize)]| {
            let labels = vec![
                ApiLabel {
                    kind: ApiKind::MethodInvoke,
                    target: "T".into(),
                    member: "a".into(),
                    occurrence: 1,
                },
                ApiLabel {
                    kind: ApiKind::MethodInvoke,
                    target: "T".into(),
                    member: "b".into(),
                    occurrence: 1,
                },
            ];
            ApiSubgraph {
                labels,
                edges: edges.iter().copied().collect(),
            }
        };
        let fwd = mk(&[(0, 1)]);
        let rev = mk(&[(1, 0)]);
        assert!(!equivalent(&fwd, &rev));
        // brute force over both 2-node bijections agrees
        let bijections = [[0usize, 1], [1, 0]];
        let survives = bijections.iter().any(|m| {
            fwd.labels[0] == rev.labels[m[0]]
                && fwd.labels[1] == rev.labels[m[1]]
                && fwd
                    .edges
                    .iter()
                    .all(|&(s, d)| rev.edges.contains(&(m[s], m[d])))
                && rev
                    .edges
                    .iter()
                    .all(|&(s, d)| fwd.edges.contains(&(m[s], m[d])))
        });
        assert!(!survives);
    }

    #[test]
    fn canonical_forms_match_across_the_two_listings() {
        let g1 = fixture_graam("listing1");
        let g2 = fixture_graam("listing2");
        let region: Vec<NodeId> = g2
            .api_nodes()
            .filter(|n| {
                let l = n.label.as_ref().unwrap();
                l.member == "<init>" || l.member == "login"
            })
            .map(|n| n.id)
            .collect();
        let g2_upper = g2.induced_upper(&region);
        let g1_upper = g1.induced_upper(&g1.api_nodes().map(|n| n.id).collect::<Vec<_>>());
        assert_eq!(
            canonical_form(&g1_upper).unwrap(),
            canonical_form(&g2_upper).unwrap()
        );
    }

    #[test]
    fn branch_validation_flags_duplicated_branches() {
        use crate::model::GraamEdge;
        let mk_node = |id: usize, member: &str, occ: u32| GraamNode {
            id,
            role: NodeRole::Api,
            label: Some(ApiLabel {
                kind: ApiKind::MethodInvoke,
                target: "T".into(),
                member: member.into(),
                occurrence: occ,
            }),
            exec_order: id as u32,
            relation: None,
            location: None,
            receiver_origin: None,
        };
        let mut g = Graam {
            program: "t".into(),
            entrypoint: "t".into(),
            nodes: vec![
                GraamNode::start(0),
                mk_node(1, "m", 1),
                mk_node(2, "m", 1),
                GraamNode::end(3),
            ],
            edges: vec![
                GraamEdge {
                    src: 0,
                    dst: 1,
                    kind: GraamEdgeKind::Wiring,
                },
                GraamEdge {
                    src: 0,
                    dst: 2,
                    kind: GraamEdgeKind::Wiring,
                },
                GraamEdge {
                    src: 1,
                    dst: 3,
                    kind: GraamEdgeKind::Wiring,
                },
                GraamEdge {
                    src: 2,
                    dst: 3,
                    kind: GraamEdgeKind::Wiring,
                },
            ],
        };
        g.normalize();
        assert!(validate_graam(&g).is_err());
        // distinct occurrence indices keep the branches apart
        g.nodes[2].label.as_mut().unwrap().occurrence = 2;
        validate_graam(&g).unwrap();
    }
}
