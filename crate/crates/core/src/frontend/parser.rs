//! Recursive-descent parser for MiniLang.
//!
//! Grammar sketch (full EBNF in `docs/minilang.md`):
//!
//! ```text
//! program       := (classdecl | interfacedecl)*
//! interfacedecl := "interface" ID ("extends" idlist)? "{" methodsig* "}"
//! classdecl     := "class" ID ("extends" ID)? ("implements" idlist)?
//!                  "{" (fielddecl | ctordecl | methoddecl)* "}"
//! stmt          := localdecl | assign | exprstmt | if | try | return
//! ```

use crate::error::SyntaxError;
use crate::frontend::ast::*;
use crate::frontend::lexer::{tokenize, Tok, Token};

pub fn parse(file: &str, source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(file, source)?;
    let mut p = Parser {
        file: file.to_string(),
        tokens,
        at: 0,
    };
    p.program()
}

struct Parser {
    file: String,
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.at + 1).min(self.tokens.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        let t = &self.tokens[self.at];
        Pos {
            line: t.line,
            col: t.col,
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let t = &self.tokens[self.at];
        SyntaxError {
            file: self.file.clone(),
            line: t.line,
            col: t.col,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut decls = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Class => decls.push(self.class_decl()?),
                Tok::Interface => decls.push(self.interface_decl()?),
                _ => return Err(self.error("`class` or `interface`")),
            }
        }
        Ok(Program {
            file: self.file.clone(),
            decls,
        })
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        let mut names = vec![self.ident("type name")?];
        while *self.peek() == Tok::Comma {
            self.bump();
            names.push(self.ident("type name")?);
        }
        Ok(names)
    }

    fn interface_decl(&mut self) -> Result<TypeDeclAst, SyntaxError> {
        let pos = self.pos();
        self.expect(Tok::Interface, "`interface`")?;
        let name = self.ident("interface name")?;
        let extends = if *self.peek() == Tok::Extends {
            self.bump();
            self.ident_list()?
        } else {
            vec![]
        };
        self.expect(Tok::LBrace, "`{`")?;
        let mut methods = Vec::new();
        while *self.peek() != Tok::RBrace {
            let mpos = self.pos();
            let return_type = self.return_type()?;
            let mname = self.ident("method name")?;
            let params = self.params()?;
            self.expect(Tok::Semi, "`;` after interface method signature")?;
            methods.push(MethodAst {
                name: mname,
                is_static: false,
                return_type,
                params,
                body: None,
                pos: mpos,
            });
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(TypeDeclAst {
            name,
            is_interface: true,
            extends,
            implements: vec![],
            fields: vec![],
            methods,
            pos,
        })
    }

    fn class_decl(&mut self) -> Result<TypeDeclAst, SyntaxError> {
        let pos = self.pos();
        self.expect(Tok::Class, "`class`")?;
        let name = self.ident("class name")?;
        let extends = if *self.peek() == Tok::Extends {
            self.bump();
            vec![self.ident("superclass name")?]
        } else {
            vec![]
        };
        let implements = if *self.peek() == Tok::Implements {
            self.bump();
            self.ident_list()?
        } else {
            vec![]
        };
        self.expect(Tok::LBrace, "`{`")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while *self.peek() != Tok::RBrace {
            let mpos = self.pos();
            if *self.peek() == Tok::Static {
                self.bump();
                let return_type = self.return_type()?;
                let mname = self.ident("method name")?;
                let params = self.params()?;
                let body = self.block()?;
                methods.push(MethodAst {
                    name: mname,
                    is_static: true,
                    return_type,
                    params,
                    body: Some(body),
                    pos: mpos,
                });
                continue;
            }
            // Constructor: the class name followed directly by `(`.
            if let Tok::Ident(id) = self.peek() {
                if *id == name && *self.peek2() == Tok::LParen {
                    self.bump();
                    let params = self.params()?;
                    let body = self.block()?;
                    methods.push(MethodAst {
                        name: crate::model::CTOR_NAME.to_string(),
                        is_static: false,
                        return_type: name.clone(),
                        params,
                        body: Some(body),
                        pos: mpos,
                    });
                    continue;
                }
            }
            let ty = self.return_type()?;
            let mname = self.ident("member name")?;
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    fields.push(FieldAst {
                        ty,
                        name: mname,
                        pos: mpos,
                    });
                }
                Tok::LParen => {
                    let params = self.params()?;
                    let body = self.block()?;
                    methods.push(MethodAst {
                        name: mname,
                        is_static: false,
                        return_type: ty,
                        params,
                        body: Some(body),
                        pos: mpos,
                    });
                }
                _ => return Err(self.error("`;` or `(`")),
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(TypeDeclAst {
            name,
            is_interface: false,
            extends,
            implements,
            fields,
            methods,
            pos,
        })
    }

    fn return_type(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Void => {
                self.bump();
                Ok("void".into())
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("type name or `void`")),
        }
    }

    fn params(&mut self) -> Result<Vec<(String, String)>, SyntaxError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.ident("parameter type")?;
                let name = self.ident("parameter name")?;
                params.push((ty, name));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(params)
    }

    fn block(&mut self) -> Result<Vec<StmtAst>, SyntaxError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.error("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<StmtAst, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::Else {
                    self.bump();
                    self.block()?
                } else {
                    vec![]
                };
                Ok(StmtAst::If {
                    cond,
                    then_block,
                    else_block,
                    pos,
                })
            }
            Tok::Try => {
                self.bump();
                let body = self.block()?;
                self.expect(Tok::Catch, "`catch`")?;
                self.expect(Tok::LParen, "`(`")?;
                let exc_type = self.ident("exception type")?;
                let exc_name = self.ident("exception name")?;
                self.expect(Tok::RParen, "`)`")?;
                let catch = self.block()?;
                Ok(StmtAst::Try {
                    body,
                    exc_type,
                    exc_name,
                    catch,
                    pos,
                })
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(StmtAst::Return { value, pos })
            }
            // `Type name ...` declares a local when two identifiers appear in
            // a row; otherwise it is an expression or assignment.
            Tok::Ident(ty) if matches!(self.peek2(), Tok::Ident(_)) => {
                self.bump();
                let name = self.ident("variable name")?;
                let init = if *self.peek() == Tok::Eq {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(StmtAst::Local {
                    ty,
                    name,
                    init,
                    pos,
                })
            }
            _ => {
                let expr = self.expr()?;
                if *self.peek() == Tok::Eq {
                    self.bump();
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    let target = match expr {
                        ExprAst::Var { name, .. } => LValueAst::Var(name),
                        ExprAst::Field { recv, name, .. } => LValueAst::Field { recv: *recv, name },
                        _ => return Err(self.error("assignable place")),
                    };
                    Ok(StmtAst::Assign { target, value, pos })
                } else {
                    self.expect(Tok::Semi, "`;`")?;
                    Ok(StmtAst::Expr { expr, pos })
                }
            }
        }
    }

    fn expr(&mut self) -> Result<ExprAst, SyntaxError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            let pos = self.pos();
            let name = self.ident("member name")?;
            if *self.peek() == Tok::LParen {
                let args = self.args()?;
                e = ExprAst::Call {
                    recv: Box::new(e),
                    method: name,
                    args,
                    pos,
                };
            } else {
                e = ExprAst::Field {
                    recv: Box::new(e),
                    name,
                    pos,
                };
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<ExprAst>, SyntaxError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<ExprAst, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::New => {
                self.bump();
                let class = self.ident("class name")?;
                let args = self.args()?;
                Ok(ExprAst::New { class, args, pos })
            }
            Tok::This => {
                self.bump();
                Ok(ExprAst::This { pos })
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(ExprAst::Var { name, pos })
            }
            Tok::Str(_) | Tok::Int(_) | Tok::True | Tok::False | Tok::Null => {
                self.bump();
                Ok(ExprAst::Lit { pos })
            }
            _ => Err(self.error("expression")),
        }
    }
}
