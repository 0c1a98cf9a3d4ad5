//! Tokenizer for MiniLang sources.

use crate::error::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    // keywords
    Class,
    Interface,
    Extends,
    Implements,
    Static,
    New,
    If,
    Else,
    Try,
    Catch,
    Return,
    This,
    True,
    False,
    Null,
    Void,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Eq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(_) => "integer literal".into(),
            Tok::Class => "`class`".into(),
            Tok::Interface => "`interface`".into(),
            Tok::Extends => "`extends`".into(),
            Tok::Implements => "`implements`".into(),
            Tok::Static => "`static`".into(),
            Tok::New => "`new`".into(),
            Tok::If => "`if`".into(),
            Tok::Else => "`else`".into(),
            Tok::Try => "`try`".into(),
            Tok::Catch => "`catch`".into(),
            Tok::Return => "`return`".into(),
            Tok::This => "`this`".into(),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Null => "`null`".into(),
            Tok::Void => "`void`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn tokenize(file: &str, src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();
    loop {
        let (tline, tcol) = (line, col);
        let c = match chars.next() {
            Some(c) => c,
            None => {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            }
        };
        let advance = |c: char, line: &mut u32, col: &mut u32| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => advance(c, &mut line, &mut col),
            '/' => {
                advance(c, &mut line, &mut col);
                if chars.peek() == Some(&'/') {
                    // line comment
                    for c in chars.by_ref() {
                        advance(c, &mut line, &mut col);
                        if c == '\n' {
                            break;
                        }
                    }
                } else {
                    return Err(SyntaxError {
                        file: file.into(),
                        line: tline,
                        col: tcol,
                        expected: "`//` comment".into(),
                        found: "`/`".into(),
                    });
                }
            }
            '"' => {
                advance(c, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            advance('"', &mut line, &mut col);
                            break;
                        }
                        Some(c) => {
                            advance(c, &mut line, &mut col);
                            s.push(c);
                        }
                        None => {
                            return Err(SyntaxError {
                                file: file.into(),
                                line: tline,
                                col: tcol,
                                expected: "closing `\"`".into(),
                                found: "end of file".into(),
                            })
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_digit() => {
                advance(c, &mut line, &mut col);
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        chars.next();
                        advance(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Int(s.parse().unwrap()),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                advance(c, &mut line, &mut col);
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        advance(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "class" => Tok::Class,
                    "interface" => Tok::Interface,
                    "extends" => Tok::Extends,
                    "implements" => Tok::Implements,
                    "static" => Tok::Static,
                    "new" => Tok::New,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "try" => Tok::Try,
                    "catch" => Tok::Catch,
                    "return" => Tok::Return,
                    "this" => Tok::This,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "null" => Tok::Null,
                    "void" => Tok::Void,
                    _ => Tok::Ident(s),
                };
                out.push(Token {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
            _ => {
                advance(c, &mut line, &mut col);
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '=' => Tok::Eq,
                    other => {
                        return Err(SyntaxError {
                            file: file.into(),
                            line: tline,
                            col: tcol,
                            expected: "token".into(),
                            found: format!("`{other}`"),
                        })
                    }
                };
                out.push(Token {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
        }
    }
}
