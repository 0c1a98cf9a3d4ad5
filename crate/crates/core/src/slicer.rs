//! Slices the dependence graph around framework-related statements and emits
//! the per-entrypoint primary API usage graph.
//!
//! A statement is framework-related when it instantiates, invokes or accesses
//! a framework data type, directly or through an application type that
//! inherits or implements one. The slice keeps those statements plus
//! everything that may affect or be affected by them; the primary graph then
//! drops the non-framework statements while contracting their data
//! dependencies, so a flow through removed intermediaries becomes a direct
//! edge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::AnalysisError;
use crate::frontend::lower::{Callee, LoweredKind, LoweredStmt, ProgramFacts};
use crate::frontend::sdg::{Sdg, SdgEdgeKind};
use crate::frontend::ParamSlot;
use crate::model::{
    ApiKind, ApiStatement, ClassHierarchy, FrameworkModel, Location, NodeRole,
    PrimaryApiUsageGraph, PrimaryNode, Relation, CTOR_NAME,
};

/// The slice: retained dependence-graph nodes plus the API statement of every
/// framework-related node.
#[derive(Debug)]
pub struct SlicedSdg<'a> {
    pub sdg: &'a Sdg,
    pub retained: BTreeSet<usize>,
    pub api: BTreeMap<usize, ApiStatement>,
}

fn fw_field_owner(fw: &FrameworkModel, ty: &str, field: &str) -> Option<String> {
    let mut queue = vec![ty.to_string()];
    let mut seen = BTreeSet::new();
    while let Some(t) = queue.pop() {
        if !seen.insert(t.clone()) {
            continue;
        }
        if let Some(decl) = fw.type_decl(&t) {
            if decl.field(field).is_some() {
                return Some(t);
            }
            queue.extend(decl.supertypes.iter().cloned());
        }
    }
    None
}

/// Classifies one lowered statement against the framework and builds its API
/// statement when it is framework-related. Statements on unknown (external
/// library) types are unrelated by definition.
pub fn classify_api(
    stmt: &LoweredStmt,
    file: &str,
    method: &str,
    fw: &FrameworkModel,
    ch: &ClassHierarchy,
) -> Option<ApiStatement> {
    let (kind, raw_target, member, arity) = match &stmt.kind {
        LoweredKind::New { class, args, .. } => (
            ApiKind::ObjectInit,
            class.clone(),
            CTOR_NAME.to_string(),
            args.len(),
        ),
        LoweredKind::Call {
            method: m,
            receiver_type,
            args,
            ..
        } => (
            ApiKind::MethodInvoke,
            receiver_type.clone(),
            m.clone(),
            args.len(),
        ),
        LoweredKind::ReadField {
            field,
            receiver_type,
            ..
        } => (ApiKind::FieldRead, receiver_type.clone(), field.clone(), 0),
        LoweredKind::WriteField {
            field,
            receiver_type,
            ..
        } => (ApiKind::FieldWrite, receiver_type.clone(), field.clone(), 0),
        _ => return None,
    };
    let (relation, target) = if fw.is_framework_type(&raw_target) {
        // Direct use; label with the framework type declaring the member.
        let declaring = match kind {
            ApiKind::MethodInvoke => fw
                .resolve_method(&raw_target, &member)
                .map(|(decl, _)| decl.name.clone()),
            ApiKind::FieldRead | ApiKind::FieldWrite => fw_field_owner(fw, &raw_target, &member),
            ApiKind::ObjectInit => None,
        };
        (Relation::Direct, declaring.unwrap_or(raw_target))
    } else {
        // Indirect use through an application type below a framework type.
        let supers = ch.framework_supertypes(&raw_target, fw);
        let fw_super = supers.first()?;
        (Relation::IndirectViaInheritance, fw_super.clone())
    };
    let signature = match kind {
        ApiKind::MethodInvoke | ApiKind::ObjectInit => format!("{member}/{arity}"),
        ApiKind::FieldRead | ApiKind::FieldWrite => member.clone(),
    };
    Some(ApiStatement {
        kind,
        target_type: target,
        member,
        signature,
        relation,
        location: Location {
            file: file.to_string(),
            method: method.to_string(),
            index: stmt.index,
        },
    })
}

/// Computes the slice of the dependence graph whose criterion is the set of
/// framework-related statements: those statements plus everything reachable
/// from or reaching one over data and control edges. An empty slice is
/// allowed.
pub fn slice<'a>(
    sdg: &'a Sdg,
    facts: &ProgramFacts,
    fw: &FrameworkModel,
    ch: &ClassHierarchy,
) -> SlicedSdg<'a> {
    let mut api = BTreeMap::new();
    let mut cache: BTreeMap<(String, usize), Option<ApiStatement>> = BTreeMap::new();
    for node in &sdg.nodes {
        let m = &facts.methods[&node.method];
        let classified = cache
            .entry((node.method.clone(), node.stmt))
            .or_insert_with(|| {
                classify_api(&m.statements[node.stmt], &m.file, &node.method, fw, ch)
            });
        if let Some(a) = classified {
            api.insert(node.id, a.clone());
        }
    }

    let mut succs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut preds: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(s, d, _) in &sdg.edges {
        succs.entry(s).or_default().push(d);
        preds.entry(d).or_default().push(s);
    }
    let mut retained: BTreeSet<usize> = api.keys().copied().collect();
    let mut queue: VecDeque<usize> = retained.iter().copied().collect();
    // Forward closure: statements the criterion may affect.
    let mut fwd_seen = retained.clone();
    while let Some(n) = queue.pop_front() {
        for &d in succs.get(&n).into_iter().flatten() {
            if fwd_seen.insert(d) {
                queue.push_back(d);
            }
        }
    }
    // Backward closure: statements that may affect the criterion.
    let mut bwd_seen: BTreeSet<usize> = api.keys().copied().collect();
    let mut queue: VecDeque<usize> = bwd_seen.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &p in preds.get(&n).into_iter().flatten() {
            if bwd_seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    retained.extend(fwd_seen);
    retained.extend(bwd_seen);
    SlicedSdg { sdg, retained, api }
}

/// Variables at `dst` that a dependence edge `src -> dst` feeds.
fn edge_vars(sdg: &Sdg, facts: &ProgramFacts, src: usize, dst: usize) -> Vec<String> {
    let s = &sdg.nodes[src];
    let d = &sdg.nodes[dst];
    let dm = &facts.methods[&d.method];
    let mut out: Vec<String> = Vec::new();
    if s.ctx == d.ctx && s.method == d.method {
        out.extend(
            dm.def_use
                .iter()
                .filter(|(ds, us, _)| *ds == s.stmt && *us == d.stmt)
                .map(|(_, _, v)| v.clone()),
        );
    }
    let sm = &facts.methods[&s.method];
    if matches!(sm.statements[s.stmt].kind, LoweredKind::Return { .. }) {
        // Return binding feeds the call result, not a named variable use.
        out.extend(dm.statements[d.stmt].def().map(|v| v.to_string()));
    } else if s.ctx != d.ctx || !out.is_empty() {
        // Argument/receiver binding: the bound slots used at dst.
        if sdg.call_sites.contains(&src) {
            out.extend(
                dm.param_uses
                    .iter()
                    .filter(|(_, u)| *u == d.stmt)
                    .map(|(slot, _)| match slot {
                        ParamSlot::This => "this".to_string(),
                        ParamSlot::Index(i) => dm
                            .params
                            .get(*i)
                            .map(|p| p.name.clone())
                            .unwrap_or_default(),
                    }),
            );
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Value channels a dependence edge can carry. At an analyzed call site the
/// argument and result values are distinct: arguments enter the callee,
/// results arrive from its returns, and the two never cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Channel {
    /// Local def-to-use flow; the value arrives as an operand.
    DefUse,
    /// Call site into callee; the value arrives as a parameter or receiver.
    Param,
    /// Return statement back to its call site; the value arrives as the
    /// call result.
    Return,
}

/// How a value sits at a node after arriving over some channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Mode {
    /// The value is one of the node's operands.
    Operand,
    /// The value is the node's call result.
    Result,
}

fn channels(sdg: &Sdg, facts: &ProgramFacts, src: usize, dst: usize) -> Vec<Channel> {
    let s = &sdg.nodes[src];
    let d = &sdg.nodes[dst];
    let mut out = Vec::new();
    if s.ctx == d.ctx
        && facts.methods[&s.method]
            .def_use
            .iter()
            .any(|(ds, us, _)| *ds == s.stmt && *us == d.stmt)
    {
        out.push(Channel::DefUse);
    }
    if matches!(
        facts.methods[&s.method].statements[s.stmt].kind,
        LoweredKind::Return { .. }
    ) {
        out.push(Channel::Return);
    }
    if sdg.call_sites.contains(&src)
        && facts.methods[&d.method]
            .param_uses
            .iter()
            .any(|(_, u)| *u == d.stmt)
    {
        out.push(Channel::Param);
    }
    out
}

fn channel_mode(ch: Channel) -> Mode {
    match ch {
        Channel::DefUse | Channel::Param => Mode::Operand,
        Channel::Return => Mode::Result,
    }
}

/// Whether a value in `mode` at node `n` may leave along channel `ch`.
fn may_forward(sdg: &Sdg, n: usize, mode: Mode, ch: Channel) -> bool {
    match ch {
        // An operand only turns into the local result at nodes that compute
        // it in place; at analyzed call sites the result comes from the
        // callee's returns instead.
        Channel::DefUse => mode == Mode::Result || !sdg.call_sites.contains(&n),
        Channel::Param => mode == Mode::Operand,
        Channel::Return => mode == Mode::Operand,
    }
}

/// Builds the primary API usage graph for one entrypoint from the slice:
/// framework-related statements only, data edges contracted through removed
/// intermediaries, a sequence-edge chain in execution order, and start/end
/// wiring.
pub fn build_primary_graph(
    sliced: &SlicedSdg,
    facts: &ProgramFacts,
    entrypoint: &str,
) -> Result<PrimaryApiUsageGraph, AnalysisError> {
    let sdg = sliced.sdg;
    let order = sdg
        .exec_order
        .get(entrypoint)
        .ok_or_else(|| AnalysisError::NoEntrypoint(entrypoint.to_string()))?;
    let in_order: BTreeSet<usize> = order.iter().copied().collect();

    let api_in_order: Vec<usize> = order
        .iter()
        .copied()
        .filter(|n| sliced.api.contains_key(n))
        .collect();
    if api_in_order.is_empty() {
        return Err(AnalysisError::EmptyUsage(entrypoint.to_string()));
    }

    // Primary node ids: start = 0, API nodes 1..=k in execution order.
    let mut primary_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut occurrence_seen: BTreeMap<(ApiKind, String, String), u32> = BTreeMap::new();
    let mut nodes = vec![PrimaryNode {
        id: 0,
        role: NodeRole::Start,
        stmt: None,
        occurrence: 0,
        exec_order: 0,
        receiver_origin: None,
    }];
    for (i, &sdg_id) in api_in_order.iter().enumerate() {
        let stmt = sliced.api[&sdg_id].clone();
        let key = (stmt.kind, stmt.target_type.clone(), stmt.member.clone());
        let occ = occurrence_seen.entry(key).or_insert(0);
        *occ += 1;
        let id = i + 1;
        primary_of.insert(sdg_id, id);
        nodes.push(PrimaryNode {
            id,
            role: NodeRole::Api,
            stmt: Some(stmt),
            occurrence: *occ,
            exec_order: id as u32,
            receiver_origin: None,
        });
    }
    let end_id = nodes.len();
    nodes.push(PrimaryNode {
        id: end_id,
        role: NodeRole::End,
        stmt: None,
        occurrence: 0,
        exec_order: u32::MAX,
        receiver_origin: None,
    });

    // Sequence edges: the cover pairs of the execution order, wired to start
    // and end.
    let mut sequence_edges = vec![(0, 1)];
    for w in api_in_order.windows(2) {
        sequence_edges.push((primary_of[&w[0]], primary_of[&w[1]]));
    }
    sequence_edges.push((primary_of[api_in_order.last().unwrap()], end_id));

    // Data edges: contract flows through retained non-framework nodes.
    let in_slice = |n: usize| sliced.retained.contains(&n) && in_order.contains(&n);
    let mut data_out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(s, d, k) in &sdg.edges {
        if k == SdgEdgeKind::Data && in_slice(s) && in_slice(d) {
            data_out.entry(s).or_default().push(d);
        }
    }
    let receiver_var = |sdg_id: usize| -> Option<String> {
        let n = &sdg.nodes[sdg_id];
        let stmt = &facts.methods[&n.method].statements[n.stmt];
        match &stmt.kind {
            LoweredKind::Call {
                callee: Callee::Var(v),
                ..
            }
            | LoweredKind::ReadField {
                callee: Callee::Var(v),
                ..
            }
            | LoweredKind::WriteField {
                callee: Callee::Var(v),
                ..
            } => Some(v.clone()),
            _ => None,
        }
    };

    let mut data_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut origin_candidates: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &u in &api_in_order {
        // Walk forward over value flows until the next framework statement,
        // tracking whether the value travels as an operand or a call result
        // so argument and return flows never cross at a call site.
        let mut queue: VecDeque<(usize, usize, Mode)> = VecDeque::new();
        let mut seen: BTreeSet<(usize, usize, Mode)> = BTreeSet::new();
        for &d in data_out.get(&u).into_iter().flatten() {
            for ch in channels(sdg, facts, u, d) {
                let item = (u, d, channel_mode(ch));
                if seen.insert(item) {
                    queue.push_back(item);
                }
            }
        }
        while let Some((s, d, mode)) = queue.pop_front() {
            if let Some(&pd) = primary_of.get(&d) {
                // Reached another framework statement: contract the path
                // into a direct edge and stop here.
                if d == u {
                    continue;
                }
                data_edges.insert((primary_of[&u], pd));
                if sliced.api[&u].kind == ApiKind::ObjectInit {
                    if let Some(rv) = receiver_var(d) {
                        if edge_vars(sdg, facts, s, d).contains(&rv) {
                            origin_candidates
                                .entry(pd)
                                .or_default()
                                .insert(primary_of[&u]);
                        }
                    }
                }
            } else {
                for &d2 in data_out.get(&d).into_iter().flatten() {
                    for ch in channels(sdg, facts, d, d2) {
                        if may_forward(sdg, d, mode, ch) {
                            let item = (d, d2, channel_mode(ch));
                            if seen.insert(item) {
                                queue.push_back(item);
                            }
                        }
                    }
                }
            }
        }
    }

    for (node, candidates) in origin_candidates {
        if candidates.len() == 1 {
            nodes[node].receiver_origin = candidates.into_iter().next();
        }
    }

    let g = PrimaryApiUsageGraph {
        program: facts.program.clone(),
        entrypoint: entrypoint.to_string(),
        nodes,
        sequence_edges,
        data_edges: data_edges.into_iter().collect(),
    };
    debug_assert!(g.validate().is_ok(), "{:?}", g.validate());
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver;
    use std::path::{Path, PathBuf};

    fn fixture_root() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/jaas-analog")
    }

    fn listing(name: &str) -> (ProgramFacts, FrameworkModel, ClassHierarchy, Sdg) {
        let root = fixture_root();
        let fw = driver::load_framework(&root.join("framework"), "jaas").unwrap();
        let facts =
            driver::load_program(&root.join("programs").join(name), name, &fw, None).unwrap();
        let ch = crate::model::build_class_hierarchy(&fw, &facts.types).unwrap();
        let cg = crate::frontend::build_call_graph(&facts, &fw, &ch).unwrap();
        let sdg = crate::frontend::build_sdg(&cg, &facts);
        (facts, fw, ch, sdg)
    }

    fn labels(g: &PrimaryApiUsageGraph) -> Vec<String> {
        g.api_nodes()
            .map(|n| n.label().unwrap().to_string())
            .collect()
    }

    fn data_label_pairs(g: &PrimaryApiUsageGraph) -> BTreeSet<(String, String)> {
        g.data_edges
            .iter()
            .map(|&(s, d)| {
                (
                    g.nodes[s].label().unwrap().to_string(),
                    g.nodes[d].label().unwrap().to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn listing1_primary_graph_shape() {
        let (facts, fw, ch, sdg) = listing("listing1");
        let sliced = slice(&sdg, &facts, &fw, &ch);
        let g = build_primary_graph(&sliced, &facts, "TestJaasAuthentication.main").unwrap();
        g.validate().unwrap();
        assert_eq!(
            labels(&g),
            vec![
                "init CallbackHandler",
                "init Subject",
                "init LoginContext",
                "LoginContext.login()",
            ]
        );
        let expected: BTreeSet<(String, String)> = [
            ("init CallbackHandler", "init LoginContext"),
            ("init Subject", "init LoginContext"),
            ("init LoginContext", "LoginContext.login()"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(data_label_pairs(&g), expected);
        // The receiver of login() traces back to the LoginContext creation.
        let login = g.api_nodes().find(|n| n.exec_order == 4).unwrap();
        let lc = g.api_nodes().find(|n| n.exec_order == 3).unwrap();
        assert_eq!(login.receiver_origin, Some(lc.id));
    }

    #[test]
    fn listing2_primary_graph_shape() {
        let (facts, fw, ch, sdg) = listing("listing2");
        let sliced = slice(&sdg, &facts, &fw, &ch);
        let g = build_primary_graph(&sliced, &facts, "LoginUsecase.main").unwrap();
        assert_eq!(
            labels(&g),
            vec![
                "init Subject",
                "init CallbackHandler",
                "init LoginContext",
                "LoginContext.login()",
                "LoginContext.getSubject()",
                "Subject.getPrincipals()",
            ]
        );
        let expected: BTreeSet<(String, String)> = [
            ("init Subject", "init LoginContext"),
            ("init CallbackHandler", "init LoginContext"),
            ("init LoginContext", "LoginContext.login()"),
            ("init LoginContext", "LoginContext.getSubject()"),
            ("LoginContext.getSubject()", "Subject.getPrincipals()"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(data_label_pairs(&g), expected);
    }

    #[test]
    fn slice_keeps_def_chain_and_drops_isolated_logging() {
        let (facts, fw, ch, sdg) = listing("listing2");
        let sliced = slice(&sdg, &facts, &fw, &ch);
        let retained_kinds: Vec<&LoweredStmt> = sdg
            .nodes
            .iter()
            .filter(|n| sliced.retained.contains(&n.id))
            .map(|n| &facts.methods[&n.method].statements[n.stmt])
            .collect();
        // the logging call has no flow to or from framework statements
        assert!(retained_kinds.iter().all(|s| !matches!(
            &s.kind,
            LoweredKind::Call { callee: Callee::Class(c), .. } if c == "Logger"
        )));
        // the try entry controls the catch body and is itself framework-free
        // but the framework statements flow through the slice
        assert!(sliced.api.len() >= 6);
    }

    #[test]
    fn listing1_slice_keeps_argument_sources() {
        let (facts, fw, ch, sdg) = listing("listing1");
        let sliced = slice(&sdg, &facts, &fw, &ch);
        // The System.getProperty statements feed the handler's constructor
        // arguments and must survive slicing.
        let retained_getproperty = sdg
            .nodes
            .iter()
            .filter(|n| sliced.retained.contains(&n.id))
            .filter(|n| {
                matches!(
                    &facts.methods[&n.method].statements[n.stmt].kind,
                    LoweredKind::Call { method, .. } if method == "getProperty"
                )
            })
            .count();
        assert_eq!(retained_getproperty, 2);
    }

    #[test]
    fn program_without_framework_use_yields_empty_usage() {
        let fw = driver::load_framework(&fixture_root().join("framework"), "jaas").unwrap();
        let ast = crate::frontend::parse(
            "a.mini",
            r#"class A { static void main() { String x = System.getProperty("k"); } }"#,
        )
        .unwrap();
        let facts = crate::frontend::lower("p", &[ast], &fw).unwrap();
        let ch = crate::model::build_class_hierarchy(&fw, &facts.types).unwrap();
        let cg = crate::frontend::build_call_graph(&facts, &fw, &ch).unwrap();
        let sdg = crate::frontend::build_sdg(&cg, &facts);
        let sliced = slice(&sdg, &facts, &fw, &ch);
        assert!(sliced.api.is_empty());
        assert!(matches!(
            build_primary_graph(&sliced, &facts, "A.main"),
            Err(AnalysisError::EmptyUsage(_))
        ));
    }

    #[test]
    fn single_framework_statement() {
        let fw = driver::load_framework(&fixture_root().join("framework"), "jaas").unwrap();
        let ast = crate::frontend::parse(
            "a.mini",
            "class A { static void main() { Subject s = new Subject(); } }",
        )
        .unwrap();
        let facts = crate::frontend::lower("p", &[ast], &fw).unwrap();
        let ch = crate::model::build_class_hierarchy(&fw, &facts.types).unwrap();
        let cg = crate::frontend::build_call_graph(&facts, &fw, &ch).unwrap();
        let sdg = crate::frontend::build_sdg(&cg, &facts);
        let sliced = slice(&sdg, &facts, &fw, &ch);
        let g = build_primary_graph(&sliced, &facts, "A.main").unwrap();
        assert_eq!(g.api_nodes().count(), 1);
        assert!(g.data_edges.is_empty());
        assert_eq!(g.sequence_edges, vec![(0, 1), (1, 2)]);
    }

    /// Independent oracle for contraction soundness: exhaustive enumeration
    /// of simple data-edge paths through non-framework slice members, with a
    /// hand-rolled check that some channel assignment keeps argument and
    /// return values apart at call sites.
    #[test]
    fn contraction_matches_brute_force_path_enumeration() {
        #[derive(Clone, Copy, PartialEq)]
        enum Ch {
            DefUse,
            Param,
            Return,
        }

        for name in ["listing1", "listing2"] {
            let (facts, fw, ch, sdg) = listing(name);
            let sliced = slice(&sdg, &facts, &fw, &ch);
            let entry = facts.entrypoints[0].clone();
            let g = build_primary_graph(&sliced, &facts, &entry).unwrap();

            let order: BTreeSet<usize> = sdg.exec_order[&entry].iter().copied().collect();
            let in_slice = |n: usize| sliced.retained.contains(&n) && order.contains(&n);
            let is_return = |n: usize| {
                let node = &sdg.nodes[n];
                matches!(
                    facts.methods[&node.method].statements[node.stmt].kind,
                    LoweredKind::Return { .. }
                )
            };
            let uses_params = |n: usize| {
                let node = &sdg.nodes[n];
                facts.methods[&node.method]
                    .param_uses
                    .iter()
                    .any(|(_, u)| *u == node.stmt)
            };
            let has_defuse = |s: usize, d: usize| {
                let (sn, dn) = (&sdg.nodes[s], &sdg.nodes[d]);
                sn.ctx == dn.ctx
                    && facts.methods[&sn.method]
                        .def_use
                        .iter()
                        .any(|(ds, us, _)| *ds == sn.stmt && *us == dn.stmt)
            };
            let edge_channels = |s: usize, d: usize| {
                let mut chans = Vec::new();
                if has_defuse(s, d) {
                    chans.push(Ch::DefUse);
                }
                if is_return(s) {
                    chans.push(Ch::Return);
                }
                if sdg.call_sites.contains(&s) && uses_params(d) {
                    chans.push(Ch::Param);
                }
                chans
            };
            // A value that arrived over `prev` may continue over `next` at
            // the shared node `n`.
            let chain_ok = |prev: Ch, n: usize, next: Ch| {
                let is_result = prev == Ch::Return;
                match next {
                    Ch::DefUse => is_result || !sdg.call_sites.contains(&n),
                    Ch::Param | Ch::Return => !is_result,
                }
            };

            let mut succs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (s, d) in sdg.data_edges() {
                if in_slice(s) && in_slice(d) {
                    succs.entry(s).or_default().push(d);
                }
            }

            let api_ids: Vec<usize> = sdg.exec_order[&entry]
                .iter()
                .copied()
                .filter(|x| sliced.api.contains_key(x))
                .collect();
            let primary_of: BTreeMap<usize, usize> = api_ids
                .iter()
                .enumerate()
                .map(|(i, &x)| (x, i + 1))
                .collect();

            // Depth-first enumeration of simple paths from each framework
            // node; every channel continuation is explored.
            #[allow(clippy::too_many_arguments)]
            fn explore(
                at: usize,
                prev: Ch,
                origin: usize,
                succs: &BTreeMap<usize, Vec<usize>>,
                is_api: &dyn Fn(usize) -> bool,
                edge_channels: &dyn Fn(usize, usize) -> Vec<Ch>,
                chain_ok: &dyn Fn(Ch, usize, Ch) -> bool,
                on_path: &mut Vec<usize>,
                found: &mut BTreeSet<(usize, usize)>,
            ) {
                for &next in succs.get(&at).into_iter().flatten() {
                    for ch in edge_channels(at, next) {
                        if at != origin && !chain_ok(prev, at, ch) {
                            continue;
                        }
                        if is_api(next) {
                            if next != origin {
                                found.insert((origin, next));
                            }
                        } else if !on_path.contains(&next) {
                            on_path.push(next);
                            explore(
                                next,
                                ch,
                                origin,
                                succs,
                                is_api,
                                edge_channels,
                                chain_ok,
                                on_path,
                                found,
                            );
                            on_path.pop();
                        }
                    }
                }
            }

            let is_api = |n: usize| sliced.api.contains_key(&n) && primary_of.contains_key(&n);
            let mut found = BTreeSet::new();
            for &u in &api_ids {
                let mut on_path = vec![u];
                explore(
                    u,
                    Ch::DefUse,
                    u,
                    &succs,
                    &is_api,
                    &edge_channels,
                    &chain_ok,
                    &mut on_path,
                    &mut found,
                );
            }
            let expected: BTreeSet<(usize, usize)> = found
                .into_iter()
                .map(|(u, v)| (primary_of[&u], primary_of[&v]))
                .collect();
            let actual: BTreeSet<(usize, usize)> = g.data_edges.iter().copied().collect();
            assert_eq!(actual, expected, "contraction mismatch on {name}");
        }
    }

    /// Every relatedness case at once: direct and indirect instantiation,
    /// invocation and field access, plus a second entrypoint.
    #[test]
    fn extended_program_classifies_all_statement_kinds() {
        let root = fixture_root();
        let fw = driver::load_framework(&root.join("framework"), "jaas").unwrap();
        let facts =
            driver::load_program(&root.join("programs/extended"), "extended", &fw, None).unwrap();
        assert_eq!(facts.entrypoints.len(), 1, "only main is static main");
        let mut facts = facts;
        facts.entrypoints = vec!["ExtendedFlow.main".into(), "ExtendedFlow.alt".into()];
        let usages = driver::extract_usages(&facts, &fw).unwrap();
        assert_eq!(usages.len(), 2, "one usage per entrypoint");

        let main = usages
            .iter()
            .find(|u| u.entrypoint.ends_with("main"))
            .unwrap();
        main.validate().unwrap();
        let got: Vec<(ApiKind, String, String, Relation)> = main
            .api_nodes()
            .map(|n| {
                let s = n.stmt.as_ref().unwrap();
                (s.kind, s.target_type.clone(), s.member.clone(), s.relation)
            })
            .collect();
        use crate::model::Relation as R;
        let expected: Vec<(ApiKind, &str, &str, R)> = vec![
            (
                ApiKind::ObjectInit,
                "CallbackHandler",
                "<init>",
                R::IndirectViaInheritance,
            ),
            (
                ApiKind::MethodInvoke,
                "CallbackHandler",
                "handle",
                R::IndirectViaInheritance,
            ),
            (
                ApiKind::FieldWrite,
                "CallbackHandler",
                "lastPrompt",
                R::IndirectViaInheritance,
            ),
            (
                ApiKind::FieldRead,
                "CallbackHandler",
                "lastPrompt",
                R::IndirectViaInheritance,
            ),
            (ApiKind::ObjectInit, "Subject", "<init>", R::Direct),
            (ApiKind::ObjectInit, "LoginContext", "<init>", R::Direct),
            (ApiKind::MethodInvoke, "LoginContext", "login", R::Direct),
            (ApiKind::FieldRead, "LoginContext", "subject", R::Direct),
        ];
        let expected: Vec<(ApiKind, String, String, R)> = expected
            .into_iter()
            .map(|(k, t, m, r)| (k, t.to_string(), m.to_string(), r))
            .collect();
        assert_eq!(got, expected);

        let alt = usages
            .iter()
            .find(|u| u.entrypoint.ends_with("alt"))
            .unwrap();
        assert_eq!(alt.api_nodes().count(), 2);

        // the whole thing still builds a valid usage model
        let model = crate::ifd::mine_ifd(&fw);
        let g = crate::graam::build_graam(main, &model).unwrap();
        crate::graam::validate_graam(&g).unwrap();
    }

    #[test]
    fn sequence_edges_follow_execution_order() {
        let (facts, fw, ch, sdg) = listing("listing1");
        let sliced = slice(&sdg, &facts, &fw, &ch);
        let g = build_primary_graph(&sliced, &facts, "TestJaasAuthentication.main").unwrap();
        for &(s, d) in &g.sequence_edges {
            assert!(g.nodes[s].exec_order < g.nodes[d].exec_order);
        }
        // Cover pairs only: as many edges as nodes on the chain plus wiring.
        assert_eq!(g.sequence_edges.len(), g.api_nodes().count() + 1);
    }
}
