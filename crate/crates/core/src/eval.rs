//! Evaluation harness: splits a corpus by program, derives labeled test
//! cases by mutating held-out usage models, and measures top-k accuracy of
//! the recommender against the labels. Every random choice flows from a
//! recorded SplitMix64 seed, so reports are reproducible byte for byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, RecommendError};
use crate::graam::canonical_form_with_limit;
use crate::ifd::IfdModel;
use crate::model::{FSpec, Graam, NodeId};
use crate::recommend::{detect_missed, detect_misuse, next_api, Action, ApiRef};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Predict the final API call after seeing the prefix.
    Next,
    /// Locate an API call removed from the middle of a usage.
    Missed,
    /// Detect a wrong-order usage and propose the repair.
    Misuse,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Next => "next",
            Task::Missed => "missed",
            Task::Misuse => "misuse",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "next" => Ok(Task::Next),
            "missed" => Ok(Task::Missed),
            "misuse" => Ok(Task::Misuse),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

/// How a test case was derived from its source usage model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mutation {
    DropLast { node: NodeId },
    DropRandom { node: NodeId },
    Swap { a: NodeId, b: NodeId },
}

/// The expected answer of a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    /// The removed API must be recommended.
    Api(ApiRef),
    /// The swapped pair must be reordered (orientation-free).
    ReorderPair(ApiRef, ApiRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub source: String,
    pub mutation: Mutation,
    pub label: CaseLabel,
    pub seed: u64,
    pub mutated: Graam,
}

// ---------------------------------------------------------------------------
// Corpus split
// ---------------------------------------------------------------------------

/// Splits by program so multi-entrypoint programs never straddle the two
/// sides. Deterministic for a given seed; the train side gets
/// round(ratio * programs), clamped so both sides stay non-empty.
pub fn split_corpus(
    graams: &[Graam],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<Graam>, Vec<Graam>), EvalError> {
    assert!(ratio > 0.0 && ratio < 1.0, "ratio in (0, 1)");
    let mut programs: Vec<String> = Vec::new();
    for g in graams {
        if !programs.contains(&g.program) {
            programs.push(g.program.clone());
        }
    }
    programs.sort();
    if programs.len() < 2 {
        return Err(EvalError::CorpusTooSmall(programs.len()));
    }
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut programs);
    let n = programs.len();
    let train_n = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let train_set: Vec<&String> = programs[..train_n].iter().collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for g in graams {
        if train_set.iter().any(|p| **p == g.program) {
            train.push(g.clone());
        } else {
            test.push(g.clone());
        }
    }
    Ok((train, test))
}

// ---------------------------------------------------------------------------
// Case generation
// ---------------------------------------------------------------------------

fn api_ref_of(g: &Graam, node: NodeId) -> ApiRef {
    let l = g.nodes[node].label.as_ref().expect("api node");
    ApiRef::Api {
        kind: l.kind,
        target: l.target.clone(),
        member: l.member.clone(),
    }
}

fn graam_id(g: &Graam) -> String {
    format!("{}/{}", g.program, g.entrypoint)
}

/// Derives labeled cases from held-out usage models. Undersized models are
/// skipped; swaps that leave the model isomorphic carry no signal and are
/// skipped as well.
pub fn generate_cases(test_graams: &[Graam], task: Task, seed: u64) -> Vec<TestCase> {
    let mut out = Vec::new();
    for g in test_graams {
        let mut api_ids: Vec<NodeId> = g.api_nodes().map(|n| n.id).collect();
        api_ids.sort_by_key(|&id| g.nodes[id].exec_order);
        match task {
            Task::Next => {
                let Some(&last) = api_ids.last() else {
                    continue;
                };
                out.push(TestCase {
                    id: format!("{}#next#0", graam_id(g)),
                    source: graam_id(g),
                    mutation: Mutation::DropLast { node: last },
                    label: CaseLabel::Api(api_ref_of(g, last)),
                    seed,
                    mutated: g.without_node(last),
                });
            }
            Task::Missed => {
                for (i, &node) in api_ids.iter().enumerate() {
                    out.push(TestCase {
                        id: format!("{}#missed#{i}", graam_id(g)),
                        source: graam_id(g),
                        mutation: Mutation::DropRandom { node },
                        label: CaseLabel::Api(api_ref_of(g, node)),
                        seed,
                        mutated: g.without_node(node),
                    });
                }
            }
            Task::Misuse => {
                if api_ids.len() < 2 {
                    continue;
                }
                let base_form = canonical_form_with_limit(g, 1 << 16).ok();
                let mut i_case = 0usize;
                for i in 0..api_ids.len() {
                    for j in (i + 1)..api_ids.len() {
                        let (a, b) = (api_ids[i], api_ids[j]);
                        let mutated = g.with_labels_swapped(a, b);
                        // A swap that produces an isomorphic model is not a
                        // misuse at all.
                        let same = canonical_form_with_limit(&mutated, 1 << 16).ok() == base_form;
                        if same {
                            continue;
                        }
                        out.push(TestCase {
                            id: format!("{}#misuse#{i_case}", graam_id(g)),
                            source: graam_id(g),
                            mutation: Mutation::Swap { a, b },
                            label: CaseLabel::ReorderPair(api_ref_of(g, a), api_ref_of(g, b)),
                            seed,
                            mutated,
                        });
                        i_case += 1;
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Running the evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub split: String,
    pub seed: u64,
    pub n_cases: usize,
    /// (k, accuracy) for k = 1..=kmax; accuracy is non-decreasing in k.
    pub rows: Vec<(usize, f64)>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,k,accuracy,n_cases,seed\n");
        for (k, acc) in &self.rows {
            out.push_str(&format!(
                "{},{},{:.4},{},{}\n",
                self.task.as_str(),
                k,
                acc,
                self.n_cases,
                self.seed
            ));
        }
        out
    }

    pub fn accuracy_at(&self, k: usize) -> f64 {
        self.rows
            .iter()
            .find(|(rk, _)| *rk == k)
            .map(|(_, a)| *a)
            .unwrap_or(0.0)
    }
}

/// Rank of the case's label in the recommender's answer, if present.
fn answer_rank(fspec: &FSpec, ifd: &IfdModel, case: &TestCase, kmax: usize) -> Option<usize> {
    match (&case.mutation, &case.label) {
        (Mutation::DropLast { .. }, CaseLabel::Api(api)) => {
            match next_api(fspec, &case.mutated, kmax) {
                Ok(recs) => recs.iter().find(|r| r.api == *api).map(|r| r.rank as usize),
                Err(RecommendError::NoMatch | RecommendError::NothingMissing) => None,
            }
        }
        (Mutation::DropRandom { .. }, CaseLabel::Api(api)) => {
            match detect_missed(fspec, &case.mutated, kmax) {
                Ok(recs) => recs.iter().find(|r| r.api == *api).map(|r| r.rank as usize),
                Err(_) => None,
            }
        }
        (Mutation::Swap { .. }, CaseLabel::ReorderPair(x, y)) => {
            let (_, fixes) = detect_misuse(fspec, ifd, &case.mutated, kmax);
            fixes
                .iter()
                .filter(|f| f.action == Action::Reorder)
                .find(|f| {
                    let pair = (Some(&f.api), f.with.as_ref());
                    pair == (Some(x), Some(y)) || pair == (Some(y), Some(x))
                })
                .map(|f| f.rank as usize)
        }
        _ => None,
    }
}

/// Runs every case against the trained specification and accumulates top-k
/// accuracy for k = 1..=kmax.
pub fn run_eval(
    fspec: &FSpec,
    ifd: &IfdModel,
    cases: &[TestCase],
    kmax: usize,
    task: Task,
    split: &str,
    seed: u64,
) -> EvalReport {
    let mut correct_at = vec![0usize; kmax + 1];
    for case in cases {
        if let Some(rank) = answer_rank(fspec, ifd, case, kmax) {
            for slot in correct_at.iter_mut().take(kmax + 1).skip(rank) {
                *slot += 1;
            }
        }
    }
    let n = cases.len();
    let rows: Vec<(usize, f64)> = (1..=kmax)
        .map(|k| {
            let acc = if n == 0 {
                0.0
            } else {
                correct_at[k] as f64 / n as f64
            };
            (k, acc)
        })
        .collect();
    for w in rows.windows(2) {
        debug_assert!(w[0].1 <= w[1].1, "accuracy must be monotone in k");
    }
    EvalReport {
        task,
        split: split.to_string(),
        seed,
        n_cases: n,
        rows,
    }
}

/// End-to-end experiment: split by program, train on the training side,
/// derive cases from the held-out side, evaluate.
pub fn evaluate(
    framework: &str,
    corpus: &[Graam],
    ifd: &IfdModel,
    task: Task,
    ratio: f64,
    seed: u64,
    kmax: usize,
) -> Result<EvalReport, EvalError> {
    let (train_side, test_side) = split_corpus(corpus, ratio, seed)?;
    let (fspec, _) = crate::fspec::train(framework, &train_side);
    let cases = generate_cases(&test_side, task, seed);
    let split = format!(
        "programs train={} test={} ratio={ratio}",
        count_programs(&train_side),
        count_programs(&test_side)
    );
    Ok(run_eval(&fspec, ifd, &cases, kmax, task, &split, seed))
}

fn count_programs(graams: &[Graam]) -> usize {
    let mut seen = BTreeMap::new();
    for g in graams {
        seen.insert(&g.program, ());
    }
    seen.len()
}
