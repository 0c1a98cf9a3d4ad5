//! Recommender queries against a trained specification: complete a partial
//! usage with the next API, locate a missing API call, and detect wrong-order
//! misuses with fix suggestions. Scores are raw edge frequencies; ranked
//! lists are deterministic, with equal scores ordered by the candidate's
//! label. The specification is read-only throughout, so concurrent queries
//! are safe.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::RecommendError;
use crate::fspec::{maximal_embeddings, View};
use crate::graam::canonical_form_with_limit;
use crate::ifd::{check_violations_model, IfdModel, Violation};
use crate::model::{ApiKind, ApiLabel, FSpec, Graam, NodeId, NodeRole};

/// Edit a recommendation proposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Add,
    Remove,
    Replace,
    Reorder,
}

/// An API referenced by a recommendation, or the end of the usage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiRef {
    Api {
        kind: ApiKind,
        target: String,
        member: String,
    },
    /// Complete the usage here.
    End,
}

impl ApiRef {
    fn from_label(l: &ApiLabel) -> ApiRef {
        ApiRef::Api {
            kind: l.kind,
            target: l.target.clone(),
            member: l.member.clone(),
        }
    }

    /// Deterministic ordering key for equal-score candidates.
    fn sort_key(&self) -> String {
        match self {
            ApiRef::Api {
                kind,
                target,
                member,
            } => format!("a|{target}|{member}|{kind}"),
            ApiRef::End => "z|end".to_string(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ApiRef::Api {
                kind,
                target,
                member,
            } => ApiLabel {
                kind: *kind,
                target: target.clone(),
                member: member.clone(),
                occurrence: 1,
            }
            .api_name(),
            ApiRef::End => "end of usage".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub action: Action,
    pub api: ApiRef,
    /// Partner API for reorder and replace fixes.
    pub with: Option<ApiRef>,
    /// Node in the query model the action applies at.
    pub anchor: Option<NodeId>,
    /// Raw frequency backing the recommendation.
    pub score: u64,
    /// 1-based position in the ranked list.
    pub rank: u32,
}

/// An unranked candidate: (api, partner, action, anchor, score).
type Candidate = (ApiRef, Option<ApiRef>, Action, Option<NodeId>, u64);

/// Ranks candidates by descending score, label order on ties, and assigns
/// contiguous 1-based ranks.
fn rank_and_truncate(mut cands: Vec<Candidate>, k: usize) -> Vec<Recommendation> {
    cands.sort_by(|a, b| {
        b.4.cmp(&a.4)
            .then_with(|| a.0.sort_key().cmp(&b.0.sort_key()))
            .then_with(|| {
                a.1.as_ref()
                    .map(|x| x.sort_key())
                    .cmp(&b.1.as_ref().map(|x| x.sort_key()))
            })
    });
    cands
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (api, with, action, anchor, score))| Recommendation {
            action,
            api,
            with,
            anchor,
            score,
            rank: (i + 1) as u32,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Context matching
// ---------------------------------------------------------------------------

/// The best start-inclusive embedding of a partial usage into the
/// specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMatch {
    /// Query API node -> specification API node.
    pub bijection: BTreeMap<NodeId, NodeId>,
    /// Query API nodes outside the matched upper part.
    pub unmatched_query: Vec<NodeId>,
    /// Continuation edges out of the matched region:
    /// (spec source, spec target, frequency).
    pub frontier: Vec<(NodeId, NodeId, u64)>,
    /// Total frequency inside the matched region.
    pub matched_frequency: u64,
}

fn region_frequency(fspec: &FSpec, matched: &BTreeSet<NodeId>) -> u64 {
    let start = fspec.start();
    fspec
        .edges
        .iter()
        .filter(|e| (matched.contains(&e.src) || e.src == start) && matched.contains(&e.dst))
        .map(|e| e.frequency)
        .sum()
}

/// Finds the maximum-node-count equivalent embedding of the partial usage's
/// upper part; ties fall to the region with the higher total frequency, then
/// to the smallest canonical form. Soundness of the partial is not required;
/// it may contain the misuse under diagnosis.
pub fn match_context(fspec: &FSpec, partial: &Graam) -> Result<ContextMatch, RecommendError> {
    let host = View::from_fspec(fspec);
    let guest = View::from_graam(partial);
    let embeddings = maximal_embeddings(&host, &guest, None);
    let host_graam = fspec.as_graam();
    let mut best: Option<(BTreeMap<NodeId, NodeId>, u64, String)> = None;
    for emb in embeddings {
        let matched: BTreeSet<NodeId> = emb.values().copied().collect();
        let freq = region_frequency(fspec, &matched);
        let form = canonical_form_with_limit(
            &host_graam.induced_upper(&matched.iter().copied().collect::<Vec<_>>()),
            1 << 16,
        )
        .expect("region within bounds")
        .0;
        let better = match &best {
            None => true,
            Some((bmap, bf, bform)) => {
                emb.len() > bmap.len()
                    || (emb.len() == bmap.len() && (freq > *bf || (freq == *bf && form < *bform)))
            }
        };
        if better {
            best = Some((emb, freq, form));
        }
    }
    let (bijection, matched_frequency, _) = best.ok_or(RecommendError::NoMatch)?;
    if bijection.is_empty() {
        return Err(RecommendError::NoMatch);
    }
    let matched: BTreeSet<NodeId> = bijection.values().copied().collect();
    let start = fspec.start();
    let end = fspec.end();
    // Continuations leave the matched region, and everything else they
    // require must already be matched: a sibling branch that never joins the
    // context is an alternative beginning, not a next step.
    let enabled = |x: NodeId| {
        x == end
            || host.preds[x]
                .iter()
                .all(|p| *p == start || matched.contains(p))
    };
    let frontier: Vec<(NodeId, NodeId, u64)> = fspec
        .edges
        .iter()
        .filter(|e| matched.contains(&e.src) && !matched.contains(&e.dst) && enabled(e.dst))
        .map(|e| (e.src, e.dst, e.frequency))
        .collect();
    let unmatched_query: Vec<NodeId> = partial
        .api_nodes()
        .map(|n| n.id)
        .filter(|id| !bijection.contains_key(id))
        .collect();
    Ok(ContextMatch {
        bijection,
        unmatched_query,
        frontier,
        matched_frequency,
    })
}

// ---------------------------------------------------------------------------
// Next-API recommendation
// ---------------------------------------------------------------------------

/// Top-k continuations after the matched context, ranked by edge frequency.
pub fn next_api(
    fspec: &FSpec,
    partial: &Graam,
    k: usize,
) -> Result<Vec<Recommendation>, RecommendError> {
    let cm = match_context(fspec, partial)?;
    let end = fspec.end();
    // Collapse frontier edges onto their target API; the score is the best
    // edge frequency leading there.
    let mut by_api: BTreeMap<ApiRef, (u64, Option<NodeId>)> = BTreeMap::new();
    let back: BTreeMap<NodeId, NodeId> = cm.bijection.iter().map(|(&q, &h)| (h, q)).collect();
    for &(src, dst, freq) in &cm.frontier {
        let api = if dst == end {
            ApiRef::End
        } else {
            ApiRef::from_label(fspec.nodes[dst].label.as_ref().expect("api node"))
        };
        let anchor = back.get(&src).copied();
        let entry = by_api.entry(api).or_insert((0, anchor));
        if freq > entry.0 {
            *entry = (freq, anchor);
        }
    }
    let cands = by_api
        .into_iter()
        .map(|(api, (score, anchor))| (api, None, Action::Add, anchor, score))
        .collect();
    Ok(rank_and_truncate(cands, k))
}

// ---------------------------------------------------------------------------
// Missing-API detection
// ---------------------------------------------------------------------------

/// Whether an embedding covers every API node of the query and respects its
/// end edges (optionally explained through the skipped host node).
fn full_cover(
    fspec: &FSpec,
    g: &Graam,
    emb: &BTreeMap<NodeId, NodeId>,
    hole: Option<NodeId>,
) -> bool {
    if emb.len() != g.api_count() {
        return false;
    }
    let host_end = fspec.end();
    let has = |s: NodeId, d: NodeId| fspec.edges.iter().any(|e| e.src == s && e.dst == d);
    let g_start = g.start();
    for e in &g.edges {
        if g.nodes[e.dst].role != NodeRole::End || e.src == g_start {
            continue;
        }
        let img = emb[&e.src];
        let direct = has(img, host_end);
        // A dangling end is explained when the node's continuation was the
        // skipped one.
        let through_hole = hole.map(|h| has(img, h)).unwrap_or(false);
        if !direct && !through_hole {
            return false;
        }
    }
    true
}

/// Finds the single missing API call: the specification node that, when
/// skipped, lets the whole query embed, with its own predecessors matched.
/// Ranked by the frequency of the edges that would lead into the insertion.
pub fn detect_missed(
    fspec: &FSpec,
    g: &Graam,
    k: usize,
) -> Result<Vec<Recommendation>, RecommendError> {
    let host = View::from_fspec(fspec);
    let guest = View::from_graam(g);
    // A full embedding with consistent end edges means nothing is missing.
    for emb in maximal_embeddings(&host, &guest, None) {
        if full_cover(fspec, g, &emb, None) {
            return Err(RecommendError::NothingMissing);
        }
    }
    let start = fspec.start();
    let mut cands: Vec<Candidate> = Vec::new();
    let mut best_by_api: BTreeMap<ApiRef, (u64, Option<NodeId>)> = BTreeMap::new();
    for hole in fspec.nodes.iter().filter(|n| n.role == NodeRole::Api) {
        for emb in maximal_embeddings(&host, &guest, Some(hole.id)) {
            if !full_cover(fspec, g, &emb, Some(hole.id)) {
                continue;
            }
            let matched: BTreeSet<NodeId> = emb.values().copied().collect();
            // The insertion must be anchored: every predecessor of the hole
            // is matched (or the start node).
            let preds_ok = host.preds[hole.id]
                .iter()
                .all(|p| *p == start || matched.contains(p));
            if !preds_ok {
                continue;
            }
            let score = fspec
                .edges
                .iter()
                .filter(|e| e.dst == hole.id && (e.src == start || matched.contains(&e.src)))
                .map(|e| e.frequency)
                .max()
                .unwrap_or(0);
            // Anchor at the query node matched to the hole's deepest
            // predecessor, when one exists.
            let back: BTreeMap<NodeId, NodeId> = emb.iter().map(|(&q, &h)| (h, q)).collect();
            let anchor = host.preds[hole.id]
                .iter()
                .filter_map(|p| back.get(p).copied())
                .max();
            let api = ApiRef::from_label(hole.label.as_ref().expect("api node"));
            let entry = best_by_api.entry(api).or_insert((0, anchor));
            if score > entry.0 {
                *entry = (score, anchor);
            }
        }
    }
    for (api, (score, anchor)) in best_by_api {
        cands.push((api, None, Action::Add, anchor, score));
    }
    Ok(rank_and_truncate(cands, k))
}

// ---------------------------------------------------------------------------
// Misuse detection
// ---------------------------------------------------------------------------

/// A detected misuse: an order violation against the mined framework
/// dependencies, or a usage shape the specification cannot explain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Misuse {
    OrderViolation { violation: Violation },
    NotEmbeddable { detail: String },
}

fn embeds_with_at_most_one_hole(fspec: &FSpec, g: &Graam) -> bool {
    let host = View::from_fspec(fspec);
    let guest = View::from_graam(g);
    for emb in maximal_embeddings(&host, &guest, None) {
        if full_cover(fspec, g, &emb, None) {
            return true;
        }
    }
    for hole in fspec.nodes.iter().filter(|n| n.role == NodeRole::Api) {
        for emb in maximal_embeddings(&host, &guest, Some(hole.id)) {
            if full_cover(fspec, g, &emb, Some(hole.id)) {
                return true;
            }
        }
    }
    false
}

/// Total matched frequency of the best embedding of `g`, if `g` embeds
/// fully (no hole).
fn full_embedding_frequency(fspec: &FSpec, g: &Graam) -> Option<u64> {
    let host = View::from_fspec(fspec);
    let guest = View::from_graam(g);
    maximal_embeddings(&host, &guest, None)
        .into_iter()
        .filter(|emb| full_cover(fspec, g, emb, None))
        .map(|emb| {
            let matched: BTreeSet<NodeId> = emb.values().copied().collect();
            region_frequency(fspec, &matched)
        })
        .max()
}

/// Detects wrong-order and wrong-API usages and proposes fixes.
///
/// A misuse is flagged when the mined dependencies are violated, or when the
/// usage embeds into the specification neither as-is nor with one skipped
/// node. Fixes enumerate the minimal transpositions and single-node
/// replacements that restore an embedding, ranked by the frequency of the
/// region the repaired usage matches.
pub fn detect_misuse(
    fspec: &FSpec,
    ifd: &IfdModel,
    g: &Graam,
    k: usize,
) -> (Vec<Misuse>, Vec<Recommendation>) {
    let mut misuses: Vec<Misuse> = Vec::new();
    let violations = check_violations_model(g, ifd);
    let embeds = embeds_with_at_most_one_hole(fspec, g);
    if violations.is_empty() && embeds {
        return (vec![], vec![]);
    }
    let mut cands: Vec<Candidate> = Vec::new();

    for v in &violations {
        misuses.push(Misuse::OrderViolation {
            violation: v.clone(),
        });
        // Reorder fix: run the writer before the reader. Swapping the two
        // call positions must yield an explainable usage; score it by the
        // frequency of the region the repaired usage matches.
        let repaired = swap_exec_order(g, v.reader_node, v.writer_node);
        let score = full_embedding_frequency(fspec, &repaired).unwrap_or(0);
        let writer_api = ApiRef::from_label(g.nodes[v.writer_node].label.as_ref().unwrap());
        let reader_api = ApiRef::from_label(g.nodes[v.reader_node].label.as_ref().unwrap());
        cands.push((
            writer_api,
            Some(reader_api),
            Action::Reorder,
            Some(v.reader_node),
            score.max(1),
        ));
    }

    if !embeds {
        misuses.push(Misuse::NotEmbeddable {
            detail: format!(
                "usage of {} API nodes does not embed into the specification",
                g.api_count()
            ),
        });
        let api_ids: Vec<NodeId> = g.api_nodes().map(|n| n.id).collect();
        // Transpositions: swap two call positions and retry.
        for i in 0..api_ids.len() {
            for j in (i + 1)..api_ids.len() {
                let (a, b) = (api_ids[i], api_ids[j]);
                let swapped = g.with_labels_swapped(a, b);
                if let Some(freq) = full_embedding_frequency(fspec, &swapped) {
                    cands.push((
                        ApiRef::from_label(g.nodes[b].label.as_ref().unwrap()),
                        Some(ApiRef::from_label(g.nodes[a].label.as_ref().unwrap())),
                        Action::Reorder,
                        Some(a),
                        freq,
                    ));
                }
            }
        }
        // Replacements: rewrite one call to another API from the
        // specification's vocabulary and retry.
        let vocabulary: BTreeSet<ApiLabel> =
            fspec.nodes.iter().filter_map(|n| n.label.clone()).collect();
        for &x in &api_ids {
            let original = g.nodes[x].label.clone().unwrap();
            for replacement in &vocabulary {
                if replacement.kind == original.kind
                    && replacement.target == original.target
                    && replacement.member == original.member
                {
                    continue;
                }
                let mut patched = g.clone();
                patched.nodes[x].label = Some(replacement.clone());
                if let Some(freq) = full_embedding_frequency(fspec, &patched) {
                    cands.push((
                        ApiRef::from_label(replacement),
                        Some(ApiRef::from_label(&original)),
                        Action::Replace,
                        Some(x),
                        freq,
                    ));
                }
            }
        }
    }

    // The same fix can surface through several routes; keep the best score.
    type FixKey = (ApiRef, Option<ApiRef>, Action);
    let mut dedup: BTreeMap<FixKey, (Option<NodeId>, u64)> = BTreeMap::new();
    for (api, with, action, anchor, score) in cands {
        let entry = dedup.entry((api, with, action)).or_insert((anchor, score));
        if score > entry.1 {
            *entry = (anchor, score);
        }
    }
    let cands: Vec<_> = dedup
        .into_iter()
        .map(|((api, with, action), (anchor, score))| (api, with, action, anchor, score))
        .collect();
    (misuses, rank_and_truncate(cands, k))
}

/// Copy of `g` with the execution order of two call sites exchanged, the
/// shape of a reorder fix.
fn swap_exec_order(g: &Graam, a: NodeId, b: NodeId) -> Graam {
    let mut out = g.clone();
    let (ea, eb) = (out.nodes[a].exec_order, out.nodes[b].exec_order);
    out.nodes[a].exec_order = eb;
    out.nodes[b].exec_order = ea;
    out
}
