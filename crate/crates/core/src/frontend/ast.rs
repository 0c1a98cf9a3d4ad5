//! Abstract syntax tree for MiniLang.

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub file: String,
    pub decls: Vec<TypeDeclAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDeclAst {
    pub name: String,
    pub is_interface: bool,
    pub extends: Vec<String>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldAst>,
    pub methods: Vec<MethodAst>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldAst {
    pub ty: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodAst {
    /// Constructors carry the reserved name `<init>`.
    pub name: String,
    pub is_static: bool,
    pub return_type: String,
    pub params: Vec<(String, String)>, // (type, name)
    /// Interface method signatures have no body.
    pub body: Option<Vec<StmtAst>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtAst {
    /// `Type name = expr;` or `Type name;`
    Local {
        ty: String,
        name: String,
        init: Option<ExprAst>,
        pos: Pos,
    },
    /// `lvalue = expr;`
    Assign {
        target: LValueAst,
        value: ExprAst,
        pos: Pos,
    },
    /// `expr;`
    Expr {
        expr: ExprAst,
        pos: Pos,
    },
    If {
        cond: ExprAst,
        then_block: Vec<StmtAst>,
        else_block: Vec<StmtAst>,
        pos: Pos,
    },
    Try {
        body: Vec<StmtAst>,
        exc_type: String,
        exc_name: String,
        catch: Vec<StmtAst>,
        pos: Pos,
    },
    Return {
        value: Option<ExprAst>,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValueAst {
    Var(String),
    Field { recv: ExprAst, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprAst {
    New {
        class: String,
        args: Vec<ExprAst>,
        pos: Pos,
    },
    Call {
        recv: Box<ExprAst>,
        method: String,
        args: Vec<ExprAst>,
        pos: Pos,
    },
    Field {
        recv: Box<ExprAst>,
        name: String,
        pos: Pos,
    },
    Var {
        name: String,
        pos: Pos,
    },
    This {
        pos: Pos,
    },
    Lit {
        pos: Pos,
    },
}

impl ExprAst {
    pub fn pos(&self) -> Pos {
        match self {
            ExprAst::New { pos, .. }
            | ExprAst::Call { pos, .. }
            | ExprAst::Field { pos, .. }
            | ExprAst::Var { pos, .. }
            | ExprAst::This { pos }
            | ExprAst::Lit { pos } => *pos,
        }
    }
}
