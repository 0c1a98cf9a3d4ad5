//! Inference of the framework API specification model: sound usage models
//! merge into a single graph whose every edge counts how many training
//! usages followed it.
//!
//! Merging is conservative. Only upper parts merge: a region is eligible
//! when it contains the start node, is predecessor-closed on both sides and
//! is semantically equivalent under a label-preserving bijection. The
//! remainder of the incoming model grafts on with frequency one. Merging
//! middle or lower parts would fabricate paths no training program ever
//! exhibited, so it is never done, and every start-to-end path of the
//! result stays equivalent to some observed usage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graam::{canonical_form_with_limit, CanonicalForm};
use crate::model::{FSpec, FspecEdge, Graam, GraamEdgeKind, NodeId, NodeRole};

// ---------------------------------------------------------------------------
// Upper-part embedding search
// ---------------------------------------------------------------------------

/// Uniform adjacency view over a usage model or specification model.
pub(crate) struct View {
    pub labels: Vec<Option<String>>,
    pub start: NodeId,
    pub preds: Vec<BTreeSet<NodeId>>,
    pub api: Vec<NodeId>,
}

impl View {
    pub fn from_graam(g: &Graam) -> View {
        let n = g.nodes.len();
        let mut preds = vec![BTreeSet::new(); n];
        for e in &g.edges {
            preds[e.dst].insert(e.src);
        }
        View {
            labels: g
                .nodes
                .iter()
                .map(|nd| nd.label.as_ref().map(|l| l.to_string()))
                .collect(),
            start: g.start(),
            preds,
            api: g
                .nodes
                .iter()
                .filter(|nd| nd.role == NodeRole::Api)
                .map(|nd| nd.id)
                .collect(),
        }
    }

    pub fn from_fspec(f: &FSpec) -> View {
        View::from_graam(&f.as_graam())
    }
}

/// All maximal start-inclusive predecessor-closed embeddings of the guest's
/// upper parts into the host, as guest-to-host maps over API nodes. With a
/// `hole`, that host node counts as matched without a guest counterpart.
pub(crate) fn maximal_embeddings(
    host: &View,
    guest: &View,
    hole: Option<NodeId>,
) -> Vec<BTreeMap<NodeId, NodeId>> {
    let mut results: BTreeSet<Vec<(NodeId, NodeId)>> = BTreeSet::new();
    let mut seen: BTreeSet<Vec<(NodeId, NodeId)>> = BTreeSet::new();
    let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut used_host: BTreeSet<NodeId> = BTreeSet::new();
    dfs(
        host,
        guest,
        hole,
        &mut map,
        &mut used_host,
        &mut seen,
        &mut results,
    );
    results
        .into_iter()
        .map(|pairs| pairs.into_iter().collect())
        .collect()
}

fn frontier_pairs(
    host: &View,
    guest: &View,
    hole: Option<NodeId>,
    map: &BTreeMap<NodeId, NodeId>,
    used_host: &BTreeSet<NodeId>,
) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for &v in &guest.api {
        if map.contains_key(&v) {
            continue;
        }
        // all guest predecessors already matched (start is implicit)
        if !guest.preds[v]
            .iter()
            .all(|p| *p == guest.start || map.contains_key(p))
        {
            continue;
        }
        let image: BTreeSet<NodeId> = guest.preds[v]
            .iter()
            .map(|p| {
                if *p == guest.start {
                    host.start
                } else {
                    map[p]
                }
            })
            .collect();
        for &u in &host.api {
            if used_host.contains(&u) || Some(u) == hole {
                continue;
            }
            if host.labels[u] != guest.labels[v] {
                continue;
            }
            let mut host_preds: BTreeSet<NodeId> = host.preds[u].clone();
            let mut image = image.clone();
            if let Some(h) = hole {
                // A node right behind the skipped one loses that
                // predecessor; the guest side may carry start wiring in its
                // place, which the hole explains away.
                if host_preds.remove(&h) {
                    host_preds.remove(&host.start);
                    image.remove(&host.start);
                }
            }
            if host_preds == image {
                out.push((v, u));
            }
        }
    }
    out
}

fn dfs(
    host: &View,
    guest: &View,
    hole: Option<NodeId>,
    map: &mut BTreeMap<NodeId, NodeId>,
    used_host: &mut BTreeSet<NodeId>,
    seen: &mut BTreeSet<Vec<(NodeId, NodeId)>>,
    results: &mut BTreeSet<Vec<(NodeId, NodeId)>>,
) {
    let frontier = frontier_pairs(host, guest, hole, map, used_host);
    if frontier.is_empty() {
        results.insert(map.iter().map(|(&a, &b)| (a, b)).collect());
        return;
    }
    for (v, u) in frontier {
        map.insert(v, u);
        used_host.insert(u);
        let key: Vec<(NodeId, NodeId)> = map.iter().map(|(&a, &b)| (a, b)).collect();
        if seen.insert(key) {
            dfs(host, guest, hole, map, used_host, seen, results);
        }
        used_host.remove(&u);
        map.remove(&v);
    }
}

// ---------------------------------------------------------------------------
// Merge candidates
// ---------------------------------------------------------------------------

/// A mergeable pair of upper parts: both include the start node, both are
/// predecessor-closed, and the bijection witnesses semantic equivalence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeCandidate {
    /// Guest (incoming) API node -> host (specification) API node.
    pub bijection: BTreeMap<NodeId, NodeId>,
    /// Number of matched API nodes.
    pub size: usize,
    /// Canonical form of the matched host region, the deterministic
    /// tie-break between equal-size candidates.
    pub region_form: CanonicalForm,
}

/// All maximal mergeable pairs, largest first; ties are broken by the
/// lexicographically smallest canonical form of the matched region, then by
/// the bijection itself.
pub fn find_mergeable(fspec: &FSpec, g: &Graam) -> Vec<MergeCandidate> {
    let host = View::from_fspec(fspec);
    let guest = View::from_graam(g);
    let host_graam = fspec.as_graam();
    let mut out: Vec<MergeCandidate> = maximal_embeddings(&host, &guest, None)
        .into_iter()
        .map(|bijection| {
            let host_nodes: Vec<NodeId> = bijection.values().copied().collect();
            let region = host_graam.induced_upper(&host_nodes);
            let region_form =
                canonical_form_with_limit(&region, 1 << 16).expect("region within bounds");
            MergeCandidate {
                size: bijection.len(),
                bijection,
                region_form,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then_with(|| a.region_form.cmp(&b.region_form))
            .then_with(|| {
                a.bijection
                    .iter()
                    .collect::<Vec<_>>()
                    .cmp(&b.bijection.iter().collect::<Vec<_>>())
            })
    });
    out
}

// ---------------------------------------------------------------------------
// Merging and training
// ---------------------------------------------------------------------------

fn bump_edge(fspec: &mut FSpec, src: NodeId, dst: NodeId, kind: GraamEdgeKind, by: u64) {
    if let Some(e) = fspec
        .edges
        .iter_mut()
        .find(|e| e.src == src && e.dst == dst)
    {
        e.frequency += by;
    } else {
        fspec.edges.push(FspecEdge {
            src,
            dst,
            kind,
            frequency: by,
        });
    }
}

/// Merges one sound usage model into the specification: the largest
/// mergeable upper pair is selected, its edge frequencies increment, and the
/// unmatched remainder grafts on with frequency one, keeping
/// predecessor-closure through the matched frontier.
pub fn merge(mut fspec: FSpec, g: &Graam) -> FSpec {
    let candidates = find_mergeable(&fspec, g);
    let bijection = candidates
        .into_iter()
        .next()
        .map(|c| c.bijection)
        .unwrap_or_default();

    let g_start = g.start();
    let host_start = fspec.start();
    let host_end = fspec.end();

    // Full node map: matched nodes to their images, unmatched nodes to fresh
    // ids; start and every end node unify with the host's.
    let mut full: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    full.insert(g_start, host_start);
    for n in &g.nodes {
        if n.role == NodeRole::End {
            full.insert(n.id, host_end);
        }
    }
    for (&v, &u) in &bijection {
        full.insert(v, u);
    }
    for n in g.api_nodes() {
        if full.contains_key(&n.id) {
            continue;
        }
        let id = fspec.nodes.len();
        let mut grafted = n.clone();
        grafted.id = id;
        grafted.receiver_origin = None;
        fspec.nodes.push(grafted);
        full.insert(n.id, id);
    }
    // fix up grafted receiver origins now that the whole map exists
    for n in g.api_nodes() {
        if bijection.contains_key(&n.id) {
            continue;
        }
        if let Some(orig) = n.receiver_origin {
            let id = full[&n.id];
            fspec.nodes[id].receiver_origin = full.get(&orig).copied();
        }
    }

    for e in &g.edges {
        let both_matched =
            (e.src == g_start || bijection.contains_key(&e.src)) && bijection.contains_key(&e.dst);
        if both_matched {
            // The candidate is an induced isomorphism, so the image edge
            // exists; its frequency absorbs the incoming usage.
            let (src, dst) = (full[&e.src], full[&e.dst]);
            let edge = fspec
                .edges
                .iter_mut()
                .find(|h| h.src == src && h.dst == dst)
                .expect("matched regions are edge-isomorphic");
            edge.frequency += 1;
        } else {
            bump_edge(&mut fspec, full[&e.src], full[&e.dst], e.kind, 1);
        }
    }

    fspec.trained_on += 1;
    fspec.sort_edges();
    debug_assert!(fspec.validate().is_ok(), "{:?}", fspec.validate());
    fspec
}

/// One learning-curve sample, taken after each merge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveRow {
    pub graams_visited: usize,
    pub cumulative_graam_nodes: usize,
    pub fspec_nodes: usize,
    pub fspec_edges: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,cum_graam_nodes,fspec_nodes,fspec_edges\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.graams_visited, r.cumulative_graam_nodes, r.fspec_nodes, r.fspec_edges
            ));
        }
        out
    }
}

/// Trains a specification from sound usage models, visiting them by
/// descending node count (identifier ascending on ties) and sampling the
/// learning curve after each merge.
pub fn train(framework: &str, graams: &[Graam]) -> (FSpec, LearningCurve) {
    let mut order: Vec<&Graam> = graams.iter().collect();
    order.sort_by(|a, b| {
        b.api_count()
            .cmp(&a.api_count())
            .then_with(|| (&a.program, &a.entrypoint).cmp(&(&b.program, &b.entrypoint)))
    });
    train_in_order(framework, &order)
}

/// Trains visiting the models exactly in the given order.
pub fn train_in_order(framework: &str, ordered: &[&Graam]) -> (FSpec, LearningCurve) {
    let mut fspec = FSpec::empty(framework);
    let mut curve = LearningCurve::default();
    let mut cumulative = 0usize;
    for (k, g) in ordered.iter().enumerate() {
        fspec = merge(fspec, g);
        cumulative += g.api_count();
        curve.rows.push(CurveRow {
            graams_visited: k + 1,
            cumulative_graam_nodes: cumulative,
            fspec_nodes: fspec.api_count(),
            fspec_edges: fspec.edges.len(),
        });
    }
    (fspec, curve)
}

/// Smallest k whose specification size reaches `threshold` of the final
/// size. `threshold` must lie in (0, 1]; an empty curve has no saturation
/// point.
pub fn saturation_point(curve: &LearningCurve, threshold: f64) -> Option<usize> {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold in (0, 1]");
    let last = curve.rows.last()?;
    let target = threshold * last.fspec_nodes as f64;
    curve
        .rows
        .iter()
        .find(|r| r.fspec_nodes as f64 >= target)
        .map(|r| r.graams_visited)
}
