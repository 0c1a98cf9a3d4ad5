//! Usage graphs: the sliced per-program API usage graph with sequence and
//! data edges, the order-constraint usage model derived from it, and the
//! frequency-labeled merged specification model.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::statement::{ApiLabel, ApiStatement, Location, Relation};

pub type NodeId = usize;

/// Node partition tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Start,
    End,
    Api,
}

// ---------------------------------------------------------------------------
// Primary API usage graph
// ---------------------------------------------------------------------------

/// A node of the sliced usage graph. `stmt` is present exactly on API nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimaryNode {
    pub id: NodeId,
    pub role: NodeRole,
    pub stmt: Option<ApiStatement>,
    /// 1-based index among nodes with the same (kind, target, member) in
    /// execution order; 0 on start/end nodes.
    pub occurrence: u32,
    /// Position in the entrypoint's execution order; 0 on start, max on end.
    pub exec_order: u32,
    /// The object-creation node this statement's receiver traces back to,
    /// when uniquely determined.
    pub receiver_origin: Option<NodeId>,
}

impl PrimaryNode {
    pub fn label(&self) -> Option<ApiLabel> {
        self.stmt.as_ref().map(|s| ApiLabel {
            kind: s.kind,
            target: s.target_type.clone(),
            member: s.member.clone(),
            occurrence: self.occurrence,
        })
    }
}

/// Sliced, framework-only usage graph of one entrypoint: a single start node,
/// one or more end nodes, API usage nodes, sequence edges and data-dependency
/// edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimaryApiUsageGraph {
    pub program: String,
    pub entrypoint: String,
    pub nodes: Vec<PrimaryNode>,
    pub sequence_edges: Vec<(NodeId, NodeId)>,
    pub data_edges: Vec<(NodeId, NodeId)>,
}

impl PrimaryApiUsageGraph {
    pub fn start(&self) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Start)
            .map(|n| n.id)
    }

    pub fn ends(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.role == NodeRole::End)
            .map(|n| n.id)
            .collect()
    }

    pub fn api_nodes(&self) -> impl Iterator<Item = &PrimaryNode> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Api)
    }

    fn all_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.sequence_edges
            .iter()
            .chain(self.data_edges.iter())
            .copied()
    }

    /// Transitive sequence-precedence test over the kept cover pairs.
    pub fn seq_precedes(&self, a: NodeId, b: NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([a]);
        while let Some(n) = queue.pop_front() {
            for &(s, d) in &self.sequence_edges {
                if s == n && seen.insert(d) {
                    if d == b {
                        return true;
                    }
                    queue.push_back(d);
                }
            }
        }
        false
    }

    /// Checks the structural invariants of the partitioned graph.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::InvalidGraph(m));
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return err(format!("node ids not contiguous at {i}"));
            }
            match n.role {
                NodeRole::Api if n.stmt.is_none() => {
                    return err(format!("api node {i} without statement"))
                }
                NodeRole::Start | NodeRole::End if n.stmt.is_some() => {
                    return err(format!("start/end node {i} carries a statement"))
                }
                _ => {}
            }
        }
        let starts: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Start)
            .collect();
        if starts.len() != 1 {
            return err(format!(
                "expected exactly one start node, got {}",
                starts.len()
            ));
        }
        let start = starts[0].id;
        let ends = self.ends();
        if ends.is_empty() {
            return err("no end node".into());
        }
        let role = |id: NodeId| -> Result<NodeRole, ModelError> {
            self.nodes
                .get(id)
                .map(|n| n.role)
                .ok_or_else(|| ModelError::InvalidGraph(format!("edge references node {id}")))
        };
        for (s, d) in self.sequence_edges.iter().copied() {
            let ok = matches!(
                (role(s)?, role(d)?),
                (NodeRole::Start, NodeRole::Api)
                    | (NodeRole::Api, NodeRole::End)
                    | (NodeRole::Api, NodeRole::Api)
            );
            if !ok {
                return err(format!("sequence edge {s}->{d} violates partition"));
            }
        }
        for (s, d) in self.data_edges.iter().copied() {
            if !(role(s)? == NodeRole::Api && role(d)? == NodeRole::Api) {
                return err(format!("data edge {s}->{d} violates partition"));
            }
        }
        for (s, d) in self.all_edges() {
            if d == start {
                return err(format!("start node has incoming edge {s}->{d}"));
            }
            if ends.contains(&s) {
                return err(format!("end node has outgoing edge {s}->{d}"));
            }
        }
        // Reachability: every API node lies on a start-to-end path over all
        // edges.
        let n = self.nodes.len();
        let mut fwd = vec![false; n];
        let mut queue = VecDeque::from([start]);
        fwd[start] = true;
        while let Some(x) = queue.pop_front() {
            for (s, d) in self.all_edges() {
                if s == x && !fwd[d] {
                    fwd[d] = true;
                    queue.push_back(d);
                }
            }
        }
        let mut bwd = vec![false; n];
        for &e in &ends {
            bwd[e] = true;
        }
        let mut queue: VecDeque<NodeId> = ends.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for (s, d) in self.all_edges() {
                if d == x && !bwd[s] {
                    bwd[s] = true;
                    queue.push_back(s);
                }
            }
        }
        for node in self.api_nodes() {
            if !fwd[node.id] || !bwd[node.id] {
                return err(format!("api node {} not on a start-to-end path", node.id));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Usage model (order-constraint graph)
// ---------------------------------------------------------------------------

/// Provenance of an order-constraint edge. All kinds constrain order equally;
/// the tag records where the edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraamEdgeKind {
    /// Data dependency observed in the program.
    Data,
    /// Writer-to-reader dependency mined from the framework source.
    Ifd,
    /// Start/end wiring.
    Wiring,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraamNode {
    pub id: NodeId,
    pub role: NodeRole,
    pub label: Option<ApiLabel>,
    pub exec_order: u32,
    pub relation: Option<Relation>,
    pub location: Option<Location>,
    pub receiver_origin: Option<NodeId>,
}

impl GraamNode {
    pub fn start(id: NodeId) -> Self {
        GraamNode {
            id,
            role: NodeRole::Start,
            label: None,
            exec_order: 0,
            relation: None,
            location: None,
            receiver_origin: None,
        }
    }

    pub fn end(id: NodeId) -> Self {
        GraamNode {
            id,
            role: NodeRole::End,
            label: None,
            exec_order: u32::MAX,
            relation: None,
            location: None,
            receiver_origin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraamEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: GraamEdgeKind,
}

/// Per-program usage model: the API nodes of a primary usage graph under a
/// single edge type, the API order constraint. Incidental statement order is
/// erased; only data dependencies, mined framework dependencies and start/end
/// wiring remain, so programs with the same behavior have isomorphic models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graam {
    pub program: String,
    pub entrypoint: String,
    pub nodes: Vec<GraamNode>,
    pub edges: Vec<GraamEdge>,
}

impl Graam {
    pub fn start(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Start)
            .map(|n| n.id)
            .expect("usage model has a start node")
    }

    pub fn end(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::End)
            .map(|n| n.id)
            .expect("usage model has an end node")
    }

    pub fn api_nodes(&self) -> impl Iterator<Item = &GraamNode> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Api)
    }

    pub fn api_count(&self) -> usize {
        self.api_nodes().count()
    }

    pub fn succs(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            out[e.src].push(e.dst);
        }
        for v in &mut out {
            v.sort_unstable();
            v.dedup();
        }
        out
    }

    pub fn preds(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            out[e.dst].push(e.src);
        }
        for v in &mut out {
            v.sort_unstable();
            v.dedup();
        }
        out
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst)
    }

    /// Adds missing start/end wiring so every API node lies on a
    /// start-to-end path, then sorts and dedupes edges.
    pub fn normalize(&mut self) {
        let start = self.start();
        let end = self.end();
        let mut in_deg = vec![0usize; self.nodes.len()];
        let mut out_deg = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            in_deg[e.dst] += 1;
            out_deg[e.src] += 1;
        }
        for n in &self.nodes {
            if n.role != NodeRole::Api {
                continue;
            }
            if in_deg[n.id] == 0 {
                self.edges.push(GraamEdge {
                    src: start,
                    dst: n.id,
                    kind: GraamEdgeKind::Wiring,
                });
            }
            if out_deg[n.id] == 0 {
                self.edges.push(GraamEdge {
                    src: n.id,
                    dst: end,
                    kind: GraamEdgeKind::Wiring,
                });
            }
        }
        self.dedup_edges();
    }

    /// Dedupes parallel edges, preferring the most specific kind tag
    /// (data over mined over wiring), and sorts for stable serialization.
    pub fn dedup_edges(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup_by(|b, a| a.src == b.src && a.dst == b.dst);
    }

    /// Copy of the model without one API node; edges are dropped with it and
    /// the remainder re-wired to keep every node on a start-to-end path.
    pub fn without_node(&self, id: NodeId) -> Graam {
        let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut nodes = Vec::new();
        for n in &self.nodes {
            if n.id == id {
                continue;
            }
            let mut n2 = n.clone();
            n2.id = nodes.len();
            if let Some(orig) = n2.receiver_origin {
                n2.receiver_origin = if orig == id { None } else { Some(orig) };
            }
            remap.insert(n.id, n2.id);
            nodes.push(n2);
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            if e.src == id || e.dst == id {
                continue;
            }
            edges.push(GraamEdge {
                src: remap[&e.src],
                dst: remap[&e.dst],
                kind: e.kind,
            });
        }
        for n in &mut nodes {
            if let Some(orig) = n.receiver_origin {
                n.receiver_origin = remap.get(&orig).copied();
            }
        }
        let mut g = Graam {
            program: self.program.clone(),
            entrypoint: self.entrypoint.clone(),
            nodes,
            edges,
        };
        g.normalize();
        g
    }

    /// Copy with node ids renamed by `perm` (old id `i` becomes `perm[i]`).
    /// The graph is unchanged up to isomorphism.
    pub fn with_permuted_ids(&self, perm: &[usize]) -> Graam {
        assert_eq!(perm.len(), self.nodes.len());
        let mut nodes: Vec<GraamNode> = self.nodes.clone();
        for n in &mut nodes {
            n.id = perm[n.id];
            if let Some(orig) = n.receiver_origin {
                n.receiver_origin = Some(perm[orig]);
            }
        }
        nodes.sort_by_key(|n| n.id);
        let mut edges: Vec<GraamEdge> = self
            .edges
            .iter()
            .map(|e| GraamEdge {
                src: perm[e.src],
                dst: perm[e.dst],
                kind: e.kind,
            })
            .collect();
        edges.sort_unstable();
        Graam {
            program: self.program.clone(),
            entrypoint: self.entrypoint.clone(),
            nodes,
            edges,
        }
    }

    /// Copy with the API payloads of two nodes exchanged while the edge
    /// structure and positions stay put. Models calling the right APIs in
    /// the wrong places.
    pub fn with_labels_swapped(&self, a: NodeId, b: NodeId) -> Graam {
        let mut g = self.clone();
        debug_assert!(g.nodes[a].role == NodeRole::Api && g.nodes[b].role == NodeRole::Api);
        let (la, ra, pa) = (
            g.nodes[a].label.clone(),
            g.nodes[a].relation,
            g.nodes[a].location.clone(),
        );
        let (lb, rb, pb) = (
            g.nodes[b].label.clone(),
            g.nodes[b].relation,
            g.nodes[b].location.clone(),
        );
        g.nodes[a].label = lb;
        g.nodes[a].relation = rb;
        g.nodes[a].location = pb;
        g.nodes[b].label = la;
        g.nodes[b].relation = ra;
        g.nodes[b].location = pa;
        g
    }

    /// Start-inclusive induced subgraph over `keep` (API node ids). Used to
    /// compare upper regions of two models.
    pub fn induced_upper(&self, keep: &[NodeId]) -> Graam {
        let mut keep_set: BTreeSet<NodeId> = keep.iter().copied().collect();
        keep_set.insert(self.start());
        let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut nodes = Vec::new();
        for n in &self.nodes {
            if n.role == NodeRole::End || !keep_set.contains(&n.id) {
                continue;
            }
            let mut n2 = n.clone();
            n2.id = nodes.len();
            remap.insert(n.id, n2.id);
            nodes.push(n2);
        }
        let end_id = nodes.len();
        nodes.push(GraamNode::end(end_id));
        let mut edges = Vec::new();
        for e in &self.edges {
            if let (Some(&s), Some(&d)) = (remap.get(&e.src), remap.get(&e.dst)) {
                edges.push(GraamEdge {
                    src: s,
                    dst: d,
                    kind: e.kind,
                });
            }
        }
        for n in &mut nodes {
            if let Some(orig) = n.receiver_origin {
                n.receiver_origin = remap.get(&orig).copied();
            }
        }
        let mut g = Graam {
            program: self.program.clone(),
            entrypoint: self.entrypoint.clone(),
            nodes,
            edges,
        };
        g.normalize();
        g
    }

    /// Checks the structural invariants: unique start with in-degree zero,
    /// ends with out-degree zero, acyclicity, full start-to-end reachability
    /// and labeled API nodes.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::InvalidGraph(m));
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return err(format!("node ids not contiguous at {i}"));
            }
            if n.role == NodeRole::Api && n.label.is_none() {
                return err(format!("api node {i} without label"));
            }
        }
        let starts: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Start)
            .collect();
        if starts.len() != 1 {
            return err(format!(
                "expected exactly one start node, got {}",
                starts.len()
            ));
        }
        let ends: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::End)
            .map(|n| n.id)
            .collect();
        if ends.is_empty() {
            return err("no end node".into());
        }
        let start = starts[0].id;
        for e in &self.edges {
            if e.src >= self.nodes.len() || e.dst >= self.nodes.len() {
                return err(format!("edge {}->{} out of range", e.src, e.dst));
            }
            if e.dst == start {
                return err("start node has an incoming edge".into());
            }
            if ends.contains(&e.src) {
                return err("end node has an outgoing edge".into());
            }
        }
        // Acyclic: Kahn's algorithm must consume every node.
        let succs = self.succs();
        let mut in_deg = vec![0usize; self.nodes.len()];
        for ss in &succs {
            for &d in ss {
                in_deg[d] += 1;
            }
        }
        let mut queue: VecDeque<NodeId> =
            (0..self.nodes.len()).filter(|&i| in_deg[i] == 0).collect();
        let mut seen = 0;
        while let Some(x) = queue.pop_front() {
            seen += 1;
            for &d in &succs[x] {
                in_deg[d] -= 1;
                if in_deg[d] == 0 {
                    queue.push_back(d);
                }
            }
        }
        if seen != self.nodes.len() {
            return err("order-constraint graph has a cycle".into());
        }
        // Every API node on a start-to-end path.
        let mut fwd = vec![false; self.nodes.len()];
        fwd[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &d in &succs[x] {
                if !fwd[d] {
                    fwd[d] = true;
                    queue.push_back(d);
                }
            }
        }
        let preds = self.preds();
        let mut bwd = vec![false; self.nodes.len()];
        let mut queue: VecDeque<NodeId> = ends.clone().into();
        for &e in &ends {
            bwd[e] = true;
        }
        while let Some(x) = queue.pop_front() {
            for &p in &preds[x] {
                if !bwd[p] {
                    bwd[p] = true;
                    queue.push_back(p);
                }
            }
        }
        for n in self.api_nodes() {
            if !fwd[n.id] || !bwd[n.id] {
                return err(format!("api node {} not on a start-to-end path", n.id));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Specification model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FspecEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: GraamEdgeKind,
    /// Number of training usages observed along this edge.
    pub frequency: u64,
}

/// The learned specification: the merged union of sound usage models, with a
/// frequency counter on every order-constraint edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FSpec {
    pub framework: String,
    /// Number of usage models merged in.
    pub trained_on: u64,
    pub nodes: Vec<GraamNode>,
    pub edges: Vec<FspecEdge>,
}

impl FSpec {
    /// An untrained model: start and end only, no edges.
    pub fn empty(framework: &str) -> FSpec {
        FSpec {
            framework: framework.to_string(),
            trained_on: 0,
            nodes: vec![GraamNode::start(0), GraamNode::end(1)],
            edges: vec![],
        }
    }

    pub fn start(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Start)
            .map(|n| n.id)
            .expect("specification model has a start node")
    }

    pub fn end(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::End)
            .map(|n| n.id)
            .expect("specification model has an end node")
    }

    pub fn api_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.role == NodeRole::Api)
            .count()
    }

    /// View of the model as a usage graph, dropping frequencies.
    pub fn as_graam(&self) -> Graam {
        Graam {
            program: self.framework.clone(),
            entrypoint: String::new(),
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| GraamEdge {
                    src: e.src,
                    dst: e.dst,
                    kind: e.kind,
                })
                .collect(),
        }
    }

    pub fn sort_edges(&mut self) {
        self.edges.sort_unstable();
    }

    /// Structural invariants plus positive frequencies.
    pub fn validate(&self) -> Result<(), ModelError> {
        for e in &self.edges {
            if e.frequency == 0 {
                return Err(ModelError::InvalidGraph(format!(
                    "edge {}->{} with zero frequency",
                    e.src, e.dst
                )));
            }
        }
        if self.trained_on == 0 {
            // An untrained model is just the start/end pair.
            return Ok(());
        }
        self.as_graam().validate()
    }
}
