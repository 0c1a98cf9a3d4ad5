//! Canonical labeling for usage models: a deterministic encoding that is
//! equal for two models exactly when a bijection pairing nodes of equal
//! kind, target and member maps one edge set onto the other. Built on
//! iterative color refinement with exhaustive individualization at ties;
//! the node bound keeps the tie-break search tractable.

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::model::{Graam, GraamNode, NodeRole};

/// Largest model the canonicalizer accepts.
pub const DEFAULT_NODE_LIMIT: usize = 64;

/// Ordered node/edge encoding, comparable and hashable. Equal forms mean
/// isomorphic models under the label-preserving bijection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalForm(pub String);

impl std::fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Text form of a node label; occurrence indices keep repeated members
/// distinct so bijections stay well-defined.
pub(crate) fn node_label_text(n: &GraamNode) -> String {
    match n.role {
        NodeRole::Start => "S".to_string(),
        NodeRole::End => "E".to_string(),
        NodeRole::Api => {
            let l = n.label.as_ref().expect("api node carries a label");
            format!("A|{}|{}|{}|{}", l.kind, l.target, l.member, l.occurrence)
        }
    }
}

pub(crate) struct Dag {
    pub labels: Vec<String>,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
}

impl Dag {
    pub fn from_graam(g: &Graam) -> Dag {
        let n = g.nodes.len();
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![Vec::new(); n];
        for e in &g.edges {
            succs[e.src].push(e.dst);
            preds[e.dst].push(e.src);
        }
        for v in succs.iter_mut().chain(preds.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        Dag {
            labels: g.nodes.iter().map(node_label_text).collect(),
            succs,
            preds,
        }
    }
}

pub fn canonical_form(g: &Graam) -> Result<CanonicalForm, AnalysisError> {
    canonical_form_with_limit(g, DEFAULT_NODE_LIMIT)
}

pub fn canonical_form_with_limit(g: &Graam, limit: usize) -> Result<CanonicalForm, AnalysisError> {
    if g.nodes.len() > limit {
        return Err(AnalysisError::SizeLimitExceeded {
            actual: g.nodes.len(),
            limit,
        });
    }
    let dag = Dag::from_graam(g);
    Ok(CanonicalForm(canonical_encode(&dag)))
}

/// Refines colors by neighborhood signatures until the partition stops
/// splitting. Ranks are content-derived, so corresponding nodes of
/// isomorphic graphs always receive equal colors.
fn refine(dag: &Dag, colors: &mut Vec<usize>) {
    loop {
        let before = distinct(colors);
        let mut sigs: Vec<(usize, Vec<usize>, Vec<usize>, usize)> = (0..colors.len())
            .map(|v| {
                let mut p: Vec<usize> = dag.preds[v].iter().map(|&u| colors[u]).collect();
                let mut s: Vec<usize> = dag.succs[v].iter().map(|&u| colors[u]).collect();
                p.sort_unstable();
                s.sort_unstable();
                (colors[v], p, s, v)
            })
            .collect();
        sigs.sort();
        let mut next = vec![0usize; colors.len()];
        let mut rank = 0usize;
        for i in 0..sigs.len() {
            if i > 0
                && (sigs[i].0, &sigs[i].1, &sigs[i].2)
                    != (sigs[i - 1].0, &sigs[i - 1].1, &sigs[i - 1].2)
            {
                rank += 1;
            }
            next[sigs[i].3] = rank;
        }
        let after = rank + 1;
        *colors = next;
        if after == before {
            return;
        }
    }
}

fn distinct(colors: &[usize]) -> usize {
    let mut seen: Vec<usize> = colors.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn encode(dag: &Dag, colors: &[usize]) -> String {
    let n = colors.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| colors[v]);
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut out = String::new();
    out.push_str(&format!("n={n};"));
    for &v in &order {
        out.push_str(&dag.labels[v]);
        out.push(';');
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (v, ss) in dag.succs.iter().enumerate() {
        for &d in ss {
            edges.push((pos[v], pos[d]));
        }
    }
    edges.sort_unstable();
    out.push_str("E:");
    for (a, b) in edges {
        out.push_str(&format!("{a}>{b},"));
    }
    out
}

fn canonical_encode(dag: &Dag) -> String {
    // Initial colors: rank of the label text.
    let mut sorted_labels: Vec<&String> = dag.labels.iter().collect();
    sorted_labels.sort();
    sorted_labels.dedup();
    let init: Vec<usize> = dag
        .labels
        .iter()
        .map(|l| sorted_labels.binary_search(&l).unwrap())
        .collect();
    search(dag, init)
}

fn search(dag: &Dag, mut colors: Vec<usize>) -> String {
    refine(dag, &mut colors);
    let n = colors.len();
    if distinct(&colors) == n {
        return encode(dag, &colors);
    }
    // Individualize every member of the first tied cell and keep the
    // lexicographically smallest encoding.
    let mut cell_color = usize::MAX;
    let mut counts = std::collections::BTreeMap::new();
    for &c in &colors {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    for (&c, &cnt) in &counts {
        if cnt >= 2 {
            cell_color = c;
            break;
        }
    }
    let mut best: Option<String> = None;
    let mut seen_shapes: Vec<usize> = Vec::new();
    for v in 0..n {
        if colors[v] != cell_color {
            continue;
        }
        // Swapping two cell members with identical neighbor sets is an
        // automorphism, so one representative covers them all. This keeps
        // clusters of interchangeable nodes from exploding the search.
        if seen_shapes
            .iter()
            .any(|&u| dag.preds[u] == dag.preds[v] && dag.succs[u] == dag.succs[v])
        {
            continue;
        }
        seen_shapes.push(v);
        // Give v its own class just below the rest of its cell.
        let mut branched = colors.clone();
        for (u, c) in branched.iter_mut().enumerate() {
            if *c >= cell_color && u != v {
                *c += 1;
            }
        }
        let candidate = search(dag, branched);
        if best.as_ref().map(|b| candidate < *b).unwrap_or(true) {
            best = Some(candidate);
        }
    }
    best.expect("tied cell has members")
}
