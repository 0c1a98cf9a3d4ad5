//! Lowers parsed MiniLang into program facts: numbered statements per method,
//! intra-method def/use pairs, control dependencies and call sites. Also
//! extracts the framework model (declarations plus per-method field-access
//! summaries) from framework sources.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::LowerError;
use crate::frontend::ast::*;
use crate::model::{
    method_key, AccessMode, FieldAccess, FieldDecl, FrameworkModel, MethodSig, Param, TypeDecl,
};

/// Placeholder static type for values produced by external library calls.
pub const UNKNOWN_TYPE: &str = "$unknown";

/// A value position in a lowered statement: a variable or an inline literal.
/// Literals carry no data edges of their own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Var(String),
    Lit,
}

/// Receiver of a call or field access.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Callee {
    /// Instance access through a local variable (includes `this`).
    Var(String),
    /// Static access through a class name.
    Class(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum LoweredKind {
    New {
        def: String,
        class: String,
        args: Vec<Operand>,
    },
    Call {
        def: Option<String>,
        callee: Callee,
        method: String,
        args: Vec<Operand>,
        /// Static type of the receiver (class name for static calls).
        receiver_type: String,
    },
    ReadField {
        def: String,
        callee: Callee,
        field: String,
        receiver_type: String,
    },
    WriteField {
        callee: Callee,
        field: String,
        receiver_type: String,
        value: Operand,
    },
    Copy {
        def: String,
        from: String,
    },
    Const {
        def: String,
    },
    Branch {
        cond: Operand,
    },
    TryEntry,
    Return {
        value: Option<Operand>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoweredStmt {
    pub index: usize,
    pub line: u32,
    pub kind: LoweredKind,
}

impl LoweredStmt {
    /// Variable defined by this statement, if any.
    pub fn def(&self) -> Option<&str> {
        match &self.kind {
            LoweredKind::New { def, .. } => Some(def),
            LoweredKind::Call { def, .. } => def.as_deref(),
            LoweredKind::ReadField { def, .. } => Some(def),
            LoweredKind::Copy { def, .. } => Some(def),
            LoweredKind::Const { def } => Some(def),
            _ => None,
        }
    }

    /// Receiver variable, when the statement goes through a local.
    pub fn receiver_var(&self) -> Option<&str> {
        match &self.kind {
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
            } => Some(v),
            _ => None,
        }
    }

    /// All variables this statement uses.
    pub fn uses(&self) -> Vec<&str> {
        fn op<'a>(o: &'a Operand, out: &mut Vec<&'a str>) {
            if let Operand::Var(v) = o {
                out.push(v.as_str());
            }
        }
        let mut out = Vec::new();
        match &self.kind {
            LoweredKind::New { args, .. } => {
                for a in args {
                    op(a, &mut out);
                }
            }
            LoweredKind::Call { callee, args, .. } => {
                if let Callee::Var(v) = callee {
                    out.push(v.as_str());
                }
                for a in args {
                    op(a, &mut out);
                }
            }
            LoweredKind::ReadField {
                callee: Callee::Var(v),
                ..
            } => out.push(v.as_str()),
            LoweredKind::WriteField { callee, value, .. } => {
                if let Callee::Var(v) = callee {
                    out.push(v.as_str());
                }
                op(value, &mut out);
            }
            LoweredKind::Copy { from, .. } => out.push(from.as_str()),
            LoweredKind::Branch { cond } => op(cond, &mut out),
            LoweredKind::Return { value: Some(v) } => op(v, &mut out),
            _ => {}
        }
        out
    }
}

/// Which incoming value slot a use reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSlot {
    This,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodFacts {
    pub owner: String,
    pub name: String,
    pub is_static: bool,
    pub file: String,
    pub params: Vec<Param>,
    pub return_type: String,
    pub statements: Vec<LoweredStmt>,
    /// Intra-method flows: (defining stmt, using stmt, variable).
    pub def_use: Vec<(usize, usize, String)>,
    /// Uses of parameters and of `this`: (slot, using stmt).
    pub param_uses: Vec<(ParamSlot, usize)>,
    /// (controlling stmt, dependent stmt) pairs from branches and try/catch.
    pub control_deps: Vec<(usize, usize)>,
}

impl MethodFacts {
    pub fn key(&self) -> String {
        method_key(&self.owner, &self.name)
    }
}

/// Lowered representation of one program: application types, per-method
/// statement lists with local flows, and the entrypoint list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramFacts {
    pub program: String,
    pub types: Vec<TypeDecl>,
    pub methods: BTreeMap<String, MethodFacts>,
    pub entrypoints: Vec<String>,
}

impl ProgramFacts {
    /// Static methods named `main`, the default entrypoints when none are
    /// configured explicitly.
    pub fn default_entrypoints(&self) -> Vec<String> {
        self.methods
            .values()
            .filter(|m| m.is_static && m.name == "main")
            .map(|m| m.key())
            .collect()
    }
}

fn decl_to_type(d: &TypeDeclAst) -> TypeDecl {
    TypeDecl {
        name: d.name.clone(),
        is_interface: d.is_interface,
        supertypes: d
            .extends
            .iter()
            .chain(d.implements.iter())
            .cloned()
            .collect(),
        fields: d
            .fields
            .iter()
            .map(|f| FieldDecl {
                name: f.name.clone(),
                ty: f.ty.clone(),
            })
            .collect(),
        methods: d
            .methods
            .iter()
            .map(|m| MethodSig {
                name: m.name.clone(),
                is_static: m.is_static,
                params: m
                    .params
                    .iter()
                    .map(|(ty, name)| Param {
                        ty: ty.clone(),
                        name: name.clone(),
                    })
                    .collect(),
                return_type: m.return_type.clone(),
            })
            .collect(),
    }
}

/// Combined type table used for static method/field resolution.
struct TypeTable {
    types: BTreeMap<String, TypeDecl>,
}

impl TypeTable {
    fn new(app: &[TypeDecl], framework: &FrameworkModel) -> Self {
        let mut types = BTreeMap::new();
        for t in framework.types.iter().chain(app.iter()) {
            types.insert(t.name.clone(), t.clone());
        }
        TypeTable { types }
    }

    fn known(&self, ty: &str) -> bool {
        self.types.contains_key(ty)
    }

    /// Resolves a method on `ty` or the nearest supertype declaring it.
    fn resolve_method(&self, ty: &str, method: &str) -> Option<(String, MethodSig)> {
        let mut queue = vec![ty.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(t) = queue.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            if let Some(decl) = self.types.get(&t) {
                if let Some(sig) = decl.method(method) {
                    return Some((t, sig.clone()));
                }
                queue.extend(decl.supertypes.iter().cloned());
            }
        }
        None
    }

    fn resolve_field(&self, ty: &str, field: &str) -> Option<(String, FieldDecl)> {
        let mut queue = vec![ty.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(t) = queue.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            if let Some(decl) = self.types.get(&t) {
                if let Some(f) = decl.field(field) {
                    return Some((t, f.clone()));
                }
                queue.extend(decl.supertypes.iter().cloned());
            }
        }
        None
    }
}

/// Lowers the parsed sources of one program against the framework model.
pub fn lower(
    program: &str,
    asts: &[Program],
    framework: &FrameworkModel,
) -> Result<ProgramFacts, LowerError> {
    let mut types = Vec::new();
    let mut seen = BTreeSet::new();
    for ast in asts {
        for d in &ast.decls {
            if !seen.insert(d.name.clone()) {
                return Err(LowerError::NameResolution {
                    file: ast.file.clone(),
                    line: d.pos.line,
                    message: format!("duplicate type declaration `{}`", d.name),
                });
            }
            types.push(decl_to_type(d));
        }
    }
    let table = TypeTable::new(&types, framework);
    let mut methods = BTreeMap::new();
    for ast in asts {
        for d in &ast.decls {
            for m in &d.methods {
                let Some(body) = &m.body else { continue };
                let facts = LowerCtx::run(&ast.file, d, m, body, &table)?;
                methods.insert(facts.key(), facts);
            }
        }
    }
    let mut facts = ProgramFacts {
        program: program.to_string(),
        types,
        methods,
        entrypoints: Vec::new(),
    };
    facts.entrypoints = facts.default_entrypoints();
    Ok(facts)
}

/// A reaching definition: a statement, a parameter, or the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Def {
    Stmt(usize),
    Param(usize),
    This,
}

type Reach = BTreeMap<String, BTreeSet<Def>>;

struct LowerCtx<'a> {
    file: String,
    owner: String,
    table: &'a TypeTable,
    /// variable name -> static type, innermost block last
    scope: Vec<BTreeMap<String, String>>,
    stmts: Vec<LoweredStmt>,
    def_use: BTreeSet<(usize, usize, String)>,
    param_uses: BTreeSet<(ParamSlot, usize)>,
    control_deps: BTreeSet<(usize, usize)>,
    control_stack: Vec<usize>,
    /// Union of post-statement states for each active try frame.
    try_frames: Vec<Reach>,
    reach: Reach,
    temp_count: usize,
}

impl<'a> LowerCtx<'a> {
    fn run(
        file: &str,
        decl: &TypeDeclAst,
        m: &MethodAst,
        body: &[StmtAst],
        table: &'a TypeTable,
    ) -> Result<MethodFacts, LowerError> {
        let mut scope0 = BTreeMap::new();
        let mut reach: Reach = BTreeMap::new();
        if !m.is_static {
            scope0.insert("this".to_string(), decl.name.clone());
            reach.insert("this".into(), BTreeSet::from([Def::This]));
        }
        for (i, (ty, name)) in m.params.iter().enumerate() {
            scope0.insert(name.clone(), ty.clone());
            reach.insert(name.clone(), BTreeSet::from([Def::Param(i)]));
        }
        let mut ctx = LowerCtx {
            file: file.to_string(),
            owner: decl.name.clone(),
            table,
            scope: vec![scope0],
            stmts: Vec::new(),
            def_use: BTreeSet::new(),
            param_uses: BTreeSet::new(),
            control_deps: BTreeSet::new(),
            control_stack: Vec::new(),
            try_frames: Vec::new(),
            reach,
            temp_count: 0,
        };
        ctx.block(body)?;
        Ok(MethodFacts {
            owner: decl.name.clone(),
            name: m.name.clone(),
            is_static: m.is_static,
            file: file.to_string(),
            params: m
                .params
                .iter()
                .map(|(ty, name)| Param {
                    ty: ty.clone(),
                    name: name.clone(),
                })
                .collect(),
            return_type: m.return_type.clone(),
            statements: ctx.stmts,
            def_use: ctx.def_use.into_iter().collect(),
            param_uses: ctx.param_uses.into_iter().collect(),
            control_deps: ctx.control_deps.into_iter().collect(),
        })
    }

    fn err(&self, pos: Pos, message: String) -> LowerError {
        LowerError::NameResolution {
            file: self.file.clone(),
            line: pos.line,
            message,
        }
    }

    fn lookup_var(&self, name: &str) -> Option<&str> {
        self.scope
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .map(|s| s.as_str())
    }

    fn declare(&mut self, name: &str, ty: &str, pos: Pos) -> Result<(), LowerError> {
        if self.lookup_var(name).is_some() {
            return Err(self.err(pos, format!("variable `{name}` already declared")));
        }
        self.scope
            .last_mut()
            .unwrap()
            .insert(name.to_string(), ty.to_string());
        Ok(())
    }

    fn fresh_temp(&mut self) -> String {
        let n = self.temp_count;
        self.temp_count += 1;
        format!("$t{n}")
    }

    /// Emits a statement, records its uses against the reaching definitions,
    /// kills and re-binds its definition, and tags control dependencies.
    fn emit(&mut self, kind: LoweredKind, line: u32) -> usize {
        let index = self.stmts.len();
        let stmt = LoweredStmt { index, line, kind };
        for v in stmt.uses() {
            if let Some(defs) = self.reach.get(v) {
                for d in defs.clone() {
                    match d {
                        Def::Stmt(s) => {
                            self.def_use.insert((s, index, v.to_string()));
                        }
                        Def::Param(i) => {
                            self.param_uses.insert((ParamSlot::Index(i), index));
                        }
                        Def::This => {
                            self.param_uses.insert((ParamSlot::This, index));
                        }
                    }
                }
            }
        }
        if let Some(def) = stmt.def() {
            self.reach
                .insert(def.to_string(), BTreeSet::from([Def::Stmt(index)]));
        }
        for &c in &self.control_stack {
            self.control_deps.insert((c, index));
        }
        self.stmts.push(stmt);
        // Any enclosing try frame may transfer to its catch block after this
        // statement; fold the current state in.
        for frame in &mut self.try_frames {
            join_into(frame, &self.reach);
        }
        index
    }

    fn block(&mut self, stmts: &[StmtAst]) -> Result<(), LowerError> {
        self.scope.push(BTreeMap::new());
        for s in stmts {
            self.stmt(s)?;
        }
        self.scope.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &StmtAst) -> Result<(), LowerError> {
        match s {
            StmtAst::Local {
                ty,
                name,
                init,
                pos,
            } => {
                self.declare(name, ty, *pos)?;
                if let Some(init) = init {
                    self.lower_into(name, init)?;
                }
                Ok(())
            }
            StmtAst::Assign { target, value, pos } => match target {
                LValueAst::Var(name) => {
                    if self.lookup_var(name).is_none() {
                        return Err(self.err(*pos, format!("undeclared variable `{name}`")));
                    }
                    self.lower_into(name, value)
                }
                LValueAst::Field { recv, name } => {
                    let (callee, recv_ty) = self.lower_receiver(recv)?;
                    if self.table.known(&recv_ty)
                        && self.table.resolve_field(&recv_ty, name).is_none()
                    {
                        return Err(self.err(*pos, format!("unknown field `{recv_ty}.{name}`")));
                    }
                    let value = self.lower_operand(value)?;
                    self.emit(
                        LoweredKind::WriteField {
                            callee,
                            field: name.clone(),
                            receiver_type: recv_ty,
                            value,
                        },
                        pos.line,
                    );
                    Ok(())
                }
            },
            StmtAst::Expr { expr, pos } => match expr {
                ExprAst::Call { .. } | ExprAst::New { .. } | ExprAst::Field { .. } => {
                    self.lower_value(expr, None)?;
                    Ok(())
                }
                _ => Err(self.err(*pos, "expression statement has no effect".into())),
            },
            StmtAst::If {
                cond,
                then_block,
                else_block,
                pos,
            } => {
                let cond_op = self.lower_operand(cond)?;
                let branch = self.emit(LoweredKind::Branch { cond: cond_op }, pos.line);
                let before = self.reach.clone();
                self.control_stack.push(branch);
                self.block(then_block)?;
                let after_then = std::mem::replace(&mut self.reach, before.clone());
                self.block(else_block)?;
                let mut joined = std::mem::take(&mut self.reach);
                join_into(&mut joined, &after_then);
                if else_block.is_empty() {
                    join_into(&mut joined, &before);
                }
                self.reach = joined;
                self.control_stack.pop();
                Ok(())
            }
            StmtAst::Try {
                body,
                exc_type,
                exc_name,
                catch,
                pos,
            } => {
                let entry = self.emit(LoweredKind::TryEntry, pos.line);
                self.try_frames.push(self.reach.clone());
                self.block(body)?;
                let after_body = self.reach.clone();
                let catch_in = self.try_frames.pop().unwrap();
                self.reach = catch_in;
                self.control_stack.push(entry);
                self.scope.push(BTreeMap::new());
                self.scope
                    .last_mut()
                    .unwrap()
                    .insert(exc_name.clone(), exc_type.clone());
                for s in catch {
                    self.stmt(s)?;
                }
                self.scope.pop();
                self.control_stack.pop();
                let mut joined = std::mem::take(&mut self.reach);
                join_into(&mut joined, &after_body);
                self.reach = joined;
                Ok(())
            }
            StmtAst::Return { value, pos } => {
                let value = match value {
                    Some(v) => Some(self.lower_operand(v)?),
                    None => None,
                };
                self.emit(LoweredKind::Return { value }, pos.line);
                Ok(())
            }
        }
    }

    /// Lowers an initializer/assignment right-hand side into `def`.
    fn lower_into(&mut self, def: &str, value: &ExprAst) -> Result<(), LowerError> {
        match value {
            ExprAst::Lit { pos } => {
                self.emit(LoweredKind::Const { def: def.into() }, pos.line);
                Ok(())
            }
            ExprAst::Var { name, pos } => {
                if self.lookup_var(name).is_none() {
                    return Err(self.err(*pos, format!("undeclared variable `{name}`")));
                }
                self.emit(
                    LoweredKind::Copy {
                        def: def.into(),
                        from: name.clone(),
                    },
                    pos.line,
                );
                Ok(())
            }
            ExprAst::This { pos } => {
                if self.lookup_var("this").is_none() {
                    return Err(self.err(*pos, "`this` used in a static method".into()));
                }
                self.emit(
                    LoweredKind::Copy {
                        def: def.into(),
                        from: "this".into(),
                    },
                    pos.line,
                );
                Ok(())
            }
            _ => {
                self.lower_value(value, Some(def.to_string()))?;
                Ok(())
            }
        }
    }

    /// Lowers an expression to an operand, hoisting compound expressions
    /// into fresh temporaries.
    fn lower_operand(&mut self, e: &ExprAst) -> Result<Operand, LowerError> {
        match e {
            ExprAst::Lit { .. } => Ok(Operand::Lit),
            ExprAst::Var { name, pos } => {
                if self.lookup_var(name).is_none() {
                    return Err(self.err(*pos, format!("undeclared variable `{name}`")));
                }
                Ok(Operand::Var(name.clone()))
            }
            ExprAst::This { pos } => {
                if self.lookup_var("this").is_none() {
                    return Err(self.err(*pos, "`this` used in a static method".into()));
                }
                Ok(Operand::Var("this".into()))
            }
            _ => {
                let tmp = self.fresh_temp();
                let ty = self.lower_value(e, Some(tmp.clone()))?;
                self.scope.last_mut().unwrap().insert(tmp.clone(), ty);
                Ok(Operand::Var(tmp))
            }
        }
    }

    /// Lowers a receiver expression; class names denote static access.
    fn lower_receiver(&mut self, e: &ExprAst) -> Result<(Callee, String), LowerError> {
        match e {
            ExprAst::Var { name, .. } => {
                if let Some(ty) = self.lookup_var(name) {
                    Ok((Callee::Var(name.clone()), ty.to_string()))
                } else {
                    // Not a variable: a declared class or an external one.
                    Ok((Callee::Class(name.clone()), name.clone()))
                }
            }
            ExprAst::This { pos } => {
                if self.lookup_var("this").is_none() {
                    return Err(self.err(*pos, "`this` used in a static method".into()));
                }
                Ok((Callee::Var("this".into()), self.owner.clone()))
            }
            _ => {
                let op = self.lower_operand(e)?;
                match op {
                    Operand::Var(v) => {
                        let ty = self.lookup_var(&v).unwrap_or(UNKNOWN_TYPE).to_string();
                        Ok((Callee::Var(v), ty))
                    }
                    Operand::Lit => Err(self.err(e.pos(), "literal cannot be a receiver".into())),
                }
            }
        }
    }

    /// Lowers a value-producing expression into `def` (or a throwaway temp)
    /// and returns its static type.
    fn lower_value(&mut self, e: &ExprAst, def: Option<String>) -> Result<String, LowerError> {
        match e {
            ExprAst::New { class, args, pos } => {
                let args = args
                    .iter()
                    .map(|a| self.lower_operand(a))
                    .collect::<Result<Vec<_>, _>>()?;
                let def = match def {
                    Some(d) => d,
                    None => {
                        let t = self.fresh_temp();
                        self.scope
                            .last_mut()
                            .unwrap()
                            .insert(t.clone(), class.clone());
                        t
                    }
                };
                self.emit(
                    LoweredKind::New {
                        def,
                        class: class.clone(),
                        args,
                    },
                    pos.line,
                );
                Ok(class.clone())
            }
            ExprAst::Call {
                recv,
                method,
                args,
                pos,
            } => {
                let (callee, recv_ty) = self.lower_receiver(recv)?;
                let resolved = self.table.resolve_method(&recv_ty, method);
                if self.table.known(&recv_ty) && resolved.is_none() {
                    return Err(self.err(
                        *pos,
                        format!("unknown method `{method}` on type `{recv_ty}`"),
                    ));
                }
                let return_type = resolved
                    .map(|(_, sig)| sig.return_type)
                    .unwrap_or_else(|| UNKNOWN_TYPE.to_string());
                let args = args
                    .iter()
                    .map(|a| self.lower_operand(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.emit(
                    LoweredKind::Call {
                        def: def.clone(),
                        callee,
                        method: method.clone(),
                        args,
                        receiver_type: recv_ty,
                    },
                    pos.line,
                );
                Ok(return_type)
            }
            ExprAst::Field { recv, name, pos } => {
                let (callee, recv_ty) = self.lower_receiver(recv)?;
                let resolved = self.table.resolve_field(&recv_ty, name);
                if self.table.known(&recv_ty) && resolved.is_none() {
                    return Err(self.err(*pos, format!("unknown field `{recv_ty}.{name}`")));
                }
                let field_ty = resolved
                    .map(|(_, f)| f.ty)
                    .unwrap_or_else(|| UNKNOWN_TYPE.to_string());
                let def = match def {
                    Some(d) => d,
                    None => {
                        let t = self.fresh_temp();
                        self.scope
                            .last_mut()
                            .unwrap()
                            .insert(t.clone(), field_ty.clone());
                        t
                    }
                };
                self.emit(
                    LoweredKind::ReadField {
                        def,
                        callee,
                        field: name.clone(),
                        receiver_type: recv_ty,
                    },
                    pos.line,
                );
                Ok(field_ty)
            }
            ExprAst::Var { .. } | ExprAst::This { .. } | ExprAst::Lit { .. } => {
                // Only reached for a bare value in statement position with a
                // definite target; handled by lower_into.
                unreachable!("plain values are lowered by lower_into")
            }
        }
    }
}

fn join_into(dst: &mut Reach, src: &Reach) {
    for (k, v) in src {
        dst.entry(k.clone()).or_default().extend(v.iter().copied());
    }
}

// ---------------------------------------------------------------------------
// Framework model extraction
// ---------------------------------------------------------------------------

/// Builds the framework model from parsed framework sources: declarations
/// plus, for every method body, the `this.field` reads/writes and the
/// same-class helper calls used by transitive dependency mining.
pub fn build_framework_model(name: &str, asts: &[Program]) -> Result<FrameworkModel, LowerError> {
    let mut types = Vec::new();
    let mut seen = BTreeSet::new();
    for ast in asts {
        for d in &ast.decls {
            if !seen.insert(d.name.clone()) {
                return Err(LowerError::NameResolution {
                    file: ast.file.clone(),
                    line: d.pos.line,
                    message: format!("duplicate type declaration `{}`", d.name),
                });
            }
            types.push(decl_to_type(d));
        }
    }
    let mut fw = FrameworkModel {
        name: name.to_string(),
        types,
        method_bodies: BTreeMap::new(),
        internal_calls: BTreeMap::new(),
    };
    for ast in asts {
        for d in &ast.decls {
            for m in &d.methods {
                let Some(body) = &m.body else { continue };
                let mut accesses = Vec::new();
                let mut calls = Vec::new();
                scan_block(&fw, &d.name, body, &mut accesses, &mut calls);
                accesses.sort();
                accesses.dedup();
                calls.sort();
                calls.dedup();
                let key = method_key(&d.name, &m.name);
                fw.method_bodies.insert(key.clone(), accesses);
                fw.internal_calls.insert(key, calls);
            }
        }
    }
    Ok(fw)
}

fn field_owner(fw: &FrameworkModel, ty: &str, field: &str) -> Option<String> {
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

fn scan_block(
    fw: &FrameworkModel,
    owner: &str,
    stmts: &[StmtAst],
    accesses: &mut Vec<FieldAccess>,
    calls: &mut Vec<String>,
) {
    for s in stmts {
        match s {
            StmtAst::Local { init, .. } => {
                if let Some(e) = init {
                    scan_expr(fw, owner, e, accesses, calls);
                }
            }
            StmtAst::Assign { target, value, .. } => {
                if let LValueAst::Field { recv, name } = target {
                    if matches!(recv, ExprAst::This { .. }) {
                        if let Some(fo) = field_owner(fw, owner, name) {
                            accesses.push(FieldAccess {
                                field_owner: fo,
                                field: name.clone(),
                                mode: AccessMode::Write,
                            });
                        }
                    } else {
                        scan_expr(fw, owner, recv, accesses, calls);
                    }
                }
                scan_expr(fw, owner, value, accesses, calls);
            }
            StmtAst::Expr { expr, .. } => scan_expr(fw, owner, expr, accesses, calls),
            StmtAst::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                scan_expr(fw, owner, cond, accesses, calls);
                scan_block(fw, owner, then_block, accesses, calls);
                scan_block(fw, owner, else_block, accesses, calls);
            }
            StmtAst::Try { body, catch, .. } => {
                scan_block(fw, owner, body, accesses, calls);
                scan_block(fw, owner, catch, accesses, calls);
            }
            StmtAst::Return { value, .. } => {
                if let Some(e) = value {
                    scan_expr(fw, owner, e, accesses, calls);
                }
            }
        }
    }
}

fn scan_expr(
    fw: &FrameworkModel,
    owner: &str,
    e: &ExprAst,
    accesses: &mut Vec<FieldAccess>,
    calls: &mut Vec<String>,
) {
    match e {
        ExprAst::New { args, .. } => {
            for a in args {
                scan_expr(fw, owner, a, accesses, calls);
            }
        }
        ExprAst::Call {
            recv, method, args, ..
        } => {
            if matches!(recv.as_ref(), ExprAst::This { .. }) {
                calls.push(method_key(owner, method));
            } else {
                scan_expr(fw, owner, recv, accesses, calls);
            }
            for a in args {
                scan_expr(fw, owner, a, accesses, calls);
            }
        }
        ExprAst::Field { recv, name, .. } => {
            if matches!(recv.as_ref(), ExprAst::This { .. }) {
                if let Some(fo) = field_owner(fw, owner, name) {
                    accesses.push(FieldAccess {
                        field_owner: fo,
                        field: name.clone(),
                        mode: AccessMode::Read,
                    });
                }
            } else {
                scan_expr(fw, owner, recv, accesses, calls);
            }
        }
        ExprAst::Var { .. } | ExprAst::This { .. } | ExprAst::Lit { .. } => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    fn fw_empty() -> FrameworkModel {
        FrameworkModel {
            name: "fw".into(),
            types: vec![],
            method_bodies: BTreeMap::new(),
            internal_calls: BTreeMap::new(),
        }
    }

    fn fw_jaas() -> FrameworkModel {
        let src = r#"
            interface CallbackHandler { void handle(String prompt); }
            class Subject {
                PrincipalSet principals;
                Subject() { }
                PrincipalSet getPrincipals() { return this.principals; }
            }
            class PrincipalSet { PrincipalSet() { } }
            class LoginContext {
                Subject subject;
                boolean loginSucceeded;
                LoginContext(String name, Subject s, CallbackHandler h) { }
                void login() { this.subject = new Subject(); this.loginSucceeded = true; }
                Subject getSubject() { return this.subject; }
                void logout() { Subject s = this.subject; boolean ok = this.loginSucceeded; }
            }
            class LoginException { LoginException() { } }
        "#;
        let ast = parse("jaas.mini", src).unwrap();
        build_framework_model("jaas", &[ast]).unwrap()
    }

    #[test]
    fn def_use_chain_through_locals() {
        let src = r#"
            class A {
                static void main() {
                    Subject x = new Subject();
                    LoginContext lc = new LoginContext("n", x, x);
                }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_jaas()).unwrap();
        let m = &facts.methods["A.main"];
        assert_eq!(m.statements.len(), 2);
        assert!(m.def_use.contains(&(0, 1, "x".into())));
    }

    #[test]
    fn empty_method_has_no_statements() {
        let src = "class A { static void main() { } }";
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_empty()).unwrap();
        assert!(facts.methods["A.main"].statements.is_empty());
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let src = "class A { static void main() { String x = y; } }";
        let ast = parse("a.mini", src).unwrap();
        let err = lower("p", &[ast], &fw_empty()).unwrap_err();
        let LowerError::NameResolution { message, .. } = err;
        assert!(message.contains("undeclared variable `y`"));
    }

    #[test]
    fn nested_constructor_argument_is_hoisted() {
        let src = r#"
            class A {
                static void main() {
                    LoginContext lc = new LoginContext("n", new Subject(), new Subject());
                }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_jaas()).unwrap();
        let m = &facts.methods["A.main"];
        // two hoisted inits before the outer one
        assert_eq!(m.statements.len(), 3);
        assert!(matches!(
            m.statements[2].kind,
            LoweredKind::New { ref class, .. } if class == "LoginContext"
        ));
    }

    #[test]
    fn branch_controls_both_arms_and_joins_defs() {
        let src = r#"
            class A {
                static void main() {
                    boolean ok = true;
                    if (ok) { ok = false; } else { ok = true; }
                    A.consume(ok);
                }
                static void consume(boolean b) { }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_empty()).unwrap();
        let m = &facts.methods["A.main"];
        // stmt 1 is the branch, stmts 2 and 3 the arms, stmt 4 the call
        assert!(m.control_deps.contains(&(1, 2)));
        assert!(m.control_deps.contains(&(1, 3)));
        assert!(m.def_use.contains(&(2, 4, "ok".into())));
        assert!(m.def_use.contains(&(3, 4, "ok".into())));
        assert!(!m.def_use.contains(&(0, 4, "ok".into())));
    }

    #[test]
    fn catch_sees_defs_from_anywhere_in_try() {
        let src = r#"
            class A {
                static void main() {
                    String x = "a";
                    try {
                        x = "b";
                        A.use(x);
                    } catch (E e) {
                        A.use(x);
                    }
                }
                static void use(String s) { }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_empty()).unwrap();
        let m = &facts.methods["A.main"];
        // statements: 0 const x, 1 try-entry, 2 const x, 3 use, 4 use(catch)
        assert!(m.def_use.contains(&(0, 4, "x".into())));
        assert!(m.def_use.contains(&(2, 4, "x".into())));
        assert!(m.control_deps.contains(&(1, 4)));
        assert!(!m.control_deps.contains(&(1, 3)));
    }

    #[test]
    fn instance_methods_bind_this_and_resolve_fields() {
        let src = r#"
            class Box {
                String content;
                Box(String c) { this.content = c; }
                String unwrap() { return this.content; }
                String relabel(String c) {
                    String old = this.content;
                    this.content = c;
                    this.log(old);
                    return old;
                }
                void log(String s) { }
            }
            class A {
                static void main() {
                    Box b = new Box("x");
                    String v = b.unwrap();
                }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_empty()).unwrap();
        let relabel = &facts.methods["Box.relabel"];
        // statements: 0 read, 1 write, 2 call this.log(old), 3 return old
        assert!(matches!(
            relabel.statements[0].kind,
            LoweredKind::ReadField { ref receiver_type, .. } if receiver_type == "Box"
        ));
        assert!(matches!(
            relabel.statements[1].kind,
            LoweredKind::WriteField { ref receiver_type, .. } if receiver_type == "Box"
        ));
        // every this-access reads the receiver slot
        assert!(relabel
            .param_uses
            .iter()
            .any(|(slot, _)| *slot == ParamSlot::This));
        // the local flows from the read into the helper call and the return
        assert!(relabel.def_use.contains(&(0, 2, "old".into())));
        assert!(relabel.def_use.contains(&(0, 3, "old".into())));
    }

    #[test]
    fn chained_receivers_are_hoisted() {
        let src = r#"
            class Inner { Inner() { } void go() { } }
            class Outer {
                Inner inner;
                Outer() { }
                Inner get() { return new Inner(); }
            }
            class A {
                static void main() {
                    Outer o = new Outer();
                    o.get().go();
                    o.inner.go();
                }
            }
        "#;
        let ast = parse("a.mini", src).unwrap();
        let facts = lower("p", &[ast], &fw_empty()).unwrap();
        let m = &facts.methods["A.main"];
        // o.get() is hoisted into a temp that becomes go()'s receiver
        let call_go = m
            .statements
            .iter()
            .find(|s| matches!(&s.kind, LoweredKind::Call { method, .. } if method == "go"))
            .unwrap();
        assert!(matches!(
            &call_go.kind,
            LoweredKind::Call { callee: Callee::Var(v), receiver_type, .. }
                if v.starts_with("$t") && receiver_type == "Inner"
        ));
        // o.inner is hoisted into a typed temp before the call on it
        let read = m
            .statements
            .iter()
            .find(|s| matches!(&s.kind, LoweredKind::ReadField { field, .. } if field == "inner"))
            .unwrap();
        assert!(matches!(
            &read.kind,
            LoweredKind::ReadField { receiver_type, .. } if receiver_type == "Outer"
        ));
    }

    #[test]
    fn framework_model_mines_reads_and_writes() {
        let fw = fw_jaas();
        let login = &fw.method_bodies["LoginContext.login"];
        assert!(login.contains(&FieldAccess {
            field_owner: "LoginContext".into(),
            field: "subject".into(),
            mode: AccessMode::Write,
        }));
        assert!(login.contains(&FieldAccess {
            field_owner: "LoginContext".into(),
            field: "loginSucceeded".into(),
            mode: AccessMode::Write,
        }));
        let get = &fw.method_bodies["LoginContext.getSubject"];
        assert_eq!(
            get,
            &vec![FieldAccess {
                field_owner: "LoginContext".into(),
                field: "subject".into(),
                mode: AccessMode::Read,
            }]
        );
        fw.validate().unwrap();
    }
}
