//! System dependence graph: statements instantiated per calling context,
//! connected by data and control dependence edges within and across methods.
//! Flow-sensitive (intra-method data edges follow reaching definitions),
//! context-sensitive (a statement appearing in two contexts is two nodes)
//! and inter-procedural (argument, receiver and return bindings become data
//! edges).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::callgraph::{CallGraph, ContextId};
use crate::frontend::lower::{LoweredKind, Operand, ParamSlot, ProgramFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdgEdgeKind {
    Data,
    Control,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdgNode {
    pub id: usize,
    pub ctx: ContextId,
    pub method: String,
    pub stmt: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sdg {
    pub program: String,
    pub nodes: Vec<SdgNode>,
    pub edges: Vec<(usize, usize, SdgEdgeKind)>,
    /// Node ids that are call sites with at least one analyzed callee. At
    /// such nodes argument values flow into the callee, not straight to the
    /// call result.
    pub call_sites: BTreeSet<usize>,
    /// Per-entrypoint execution order over node ids: statements in source
    /// order, call sites expanded depth-first, recursion folded, shared
    /// contexts emitted at first encounter.
    pub exec_order: BTreeMap<String, Vec<usize>>,
    /// Contexts reachable from each entrypoint.
    pub reachable: BTreeMap<String, Vec<ContextId>>,
}

impl Sdg {
    pub fn node_index(&self) -> BTreeMap<(ContextId, usize), usize> {
        self.nodes.iter().map(|n| ((n.ctx, n.stmt), n.id)).collect()
    }

    pub fn data_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|(_, _, k)| *k == SdgEdgeKind::Data)
            .map(|&(s, d, _)| (s, d))
    }
}

/// Builds the dependence graph over the call graph's contexts.
pub fn build_sdg(cg: &CallGraph, facts: &ProgramFacts) -> Sdg {
    let mut nodes = Vec::new();
    let mut index: BTreeMap<(ContextId, usize), usize> = BTreeMap::new();
    for (ctx_id, ctx) in cg.contexts.iter().enumerate() {
        let m = &facts.methods[&ctx.method];
        for stmt in &m.statements {
            let id = nodes.len();
            nodes.push(SdgNode {
                id,
                ctx: ctx_id,
                method: ctx.method.clone(),
                stmt: stmt.index,
            });
            index.insert((ctx_id, stmt.index), id);
        }
    }

    let mut edges = BTreeSet::new();
    // Intra-method data and control dependencies, per context.
    for (ctx_id, ctx) in cg.contexts.iter().enumerate() {
        let m = &facts.methods[&ctx.method];
        for (d, u, _var) in &m.def_use {
            edges.insert((
                index[&(ctx_id, *d)],
                index[&(ctx_id, *u)],
                SdgEdgeKind::Data,
            ));
        }
        for (c, s) in &m.control_deps {
            edges.insert((
                index[&(ctx_id, *c)],
                index[&(ctx_id, *s)],
                SdgEdgeKind::Control,
            ));
        }
    }
    // Inter-procedural bindings along call edges.
    let mut call_sites = BTreeSet::new();
    for edge in &cg.edges {
        call_sites.insert(index[&(edge.caller, edge.site)]);
        let caller = &cg.contexts[edge.caller];
        let callee_m = &facts.methods[&cg.contexts[edge.callee].method];
        let call_stmt = &facts.methods[&caller.method].statements[edge.site];
        let call_node = index[&(edge.caller, edge.site)];
        let (args, has_result) = match &call_stmt.kind {
            LoweredKind::Call { args, def, .. } => (args.clone(), def.is_some()),
            LoweredKind::New { args, .. } => (args.clone(), true),
            _ => (vec![], false),
        };
        for (slot, use_stmt) in &callee_m.param_uses {
            let bound = match slot {
                // The receiver (or freshly created object) flows into the
                // callee's `this` uses.
                ParamSlot::This => true,
                ParamSlot::Index(i) => *i < args.len(),
            };
            if bound {
                edges.insert((
                    call_node,
                    index[&(edge.callee, *use_stmt)],
                    SdgEdgeKind::Data,
                ));
            }
        }
        if has_result && !matches!(call_stmt.kind, LoweredKind::New { .. }) {
            for stmt in &callee_m.statements {
                if let LoweredKind::Return {
                    value: Some(Operand::Var(_)),
                } = &stmt.kind
                {
                    edges.insert((
                        index[&(edge.callee, stmt.index)],
                        call_node,
                        SdgEdgeKind::Data,
                    ));
                }
            }
        }
    }

    // Execution order and reachable contexts per entrypoint.
    let mut exec_order = BTreeMap::new();
    let mut reachable = BTreeMap::new();
    for (entry, &root) in &cg.roots {
        let mut order = Vec::new();
        let mut emitted_ctx = BTreeSet::new();
        let mut stack = Vec::new();
        emit(
            cg,
            facts,
            &index,
            root,
            &mut stack,
            &mut emitted_ctx,
            &mut order,
        );
        exec_order.insert(entry.clone(), order);
        reachable.insert(entry.clone(), cg.reachable(entry).into_iter().collect());
    }

    Sdg {
        program: facts.program.clone(),
        nodes,
        edges: edges.into_iter().collect(),
        call_sites,
        exec_order,
        reachable,
    }
}

fn emit(
    cg: &CallGraph,
    facts: &ProgramFacts,
    index: &BTreeMap<(ContextId, usize), usize>,
    ctx: ContextId,
    stack: &mut Vec<ContextId>,
    emitted_ctx: &mut BTreeSet<ContextId>,
    order: &mut Vec<usize>,
) {
    if stack.contains(&ctx) || !emitted_ctx.insert(ctx) {
        return;
    }
    stack.push(ctx);
    let m = &facts.methods[&cg.contexts[ctx].method];
    for stmt in &m.statements {
        order.push(index[&(ctx, stmt.index)]);
        let mut callees: Vec<ContextId> = cg
            .edges_from(ctx)
            .filter(|e| e.site == stmt.index)
            .map(|e| e.callee)
            .collect();
        callees.sort_unstable();
        for callee in callees {
            emit(cg, facts, index, callee, stack, emitted_ctx, order);
        }
    }
    stack.pop();
}
