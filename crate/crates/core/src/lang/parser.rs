//! Recursive-descent parser.
//!
//! ```text
//! program  := proc*
//! proc     := "proc" IDENT "(" (IDENT ("," IDENT)*)? ")" block
//! block    := "{" stmt* "}"
//! stmt     := "let" target ("," target)* "=" expr ";"
//!           | IDENT "(" args ")" ";"
//!           | "if" expr block ("else" (block | if-stmt))?
//!           | "match" expr "{" (pattern "=>" block ","?)* "}"
//!           | "return" (expr ("," expr)*)? ";"
//! expr     := binary expression over || && comparisons + - ++ * / %,
//!             unary - and !, literals, variables, constructors,
//!             calls, and "match" expr "{" pattern "=>" expr, ... "}"
//! ```

use thiserror::Error;

use super::ast::*;
use super::token::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self
                .tokens
                .last()
                .map(|t| Span::new(t.span.line, t.span.col + 1))
                .unwrap_or(Span::new(1, 1)),
        }
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Some(kind) => kind.to_string(),
            None => "end of input".to_string(),
        };
        Err(ParseError {
            span: self.span(),
            expected: expected.into(),
            found,
        })
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Span> {
        let span = self.span();
        if self.eat(&kind) {
            Ok(span)
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Ident(name)) if !is_reserved(name) => {
                self.pos += 1;
                Ok(name.clone())
            }
            _ => self.error("identifier"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut procedures = Vec::new();
        while self.peek().is_some() {
            procedures.push(self.procedure()?);
        }
        Ok(Program { procedures })
    }

    fn procedure(&mut self) -> PResult<Procedure> {
        let span = self.expect(TokenKind::Proc, "'proc'")?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                params.push(self.ident()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        let body = self.block()?;
        Ok(Procedure {
            name,
            params,
            body,
            span,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut stmts = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            if self.peek().is_none() {
                return self.error("'}'");
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Let) => {
                self.pos += 1;
                let mut targets = vec![self.target()?];
                while self.eat(&TokenKind::Comma) {
                    targets.push(self.target()?);
                }
                self.expect(TokenKind::Eq, "'='")?;
                let value = self.expr()?;
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::Let { targets, value }
            }
            Some(TokenKind::If) => return self.if_stmt(),
            Some(TokenKind::Match) => {
                self.pos += 1;
                let scrutinee = self.expr()?;
                self.expect(TokenKind::LBrace, "'{'")?;
                let mut arms = Vec::new();
                while !self.eat(&TokenKind::RBrace) {
                    let span = self.span();
                    let pattern = self.pattern()?;
                    self.expect(TokenKind::FatArrow, "'=>'")?;
                    let body = self.block()?;
                    self.eat(&TokenKind::Comma);
                    arms.push(StmtArm {
                        pattern,
                        body,
                        span,
                    });
                }
                StmtKind::Match { scrutinee, arms }
            }
            Some(TokenKind::Return) => {
                self.pos += 1;
                let mut values = Vec::new();
                if !self.at(&TokenKind::Semi) {
                    values.push(self.expr()?);
                    while self.eat(&TokenKind::Comma) {
                        values.push(self.expr()?);
                    }
                }
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::Return(values)
            }
            Some(TokenKind::Ident(_)) if self.peek_at(1) == Some(&TokenKind::LParen) => {
                let name = self.ident()?;
                let args = self.args()?;
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::Call { name, args }
            }
            _ => return self.error("statement"),
        };
        Ok(Stmt { kind, span })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect(TokenKind::If, "'if'")?;
        let cond = self.expr()?;
        let then_block = self.block()?;
        let else_block = if self.eat(&TokenKind::Else) {
            if self.at(&TokenKind::If) {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
            span,
        })
    }

    fn target(&mut self) -> PResult<Target> {
        if matches!(self.peek(), Some(TokenKind::Ident(n)) if n == "_") {
            self.pos += 1;
            return Ok(Target::Discard);
        }
        Ok(Target::Name(self.ident()?))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokenKind::LParen, "'('")?;
        let mut args = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        use TokenKind as T;
        Some(match self.peek()? {
            T::OrOr => BinaryOp::Or,
            T::AndAnd => BinaryOp::And,
            T::EqEq => BinaryOp::Eq,
            T::NotEq => BinaryOp::Ne,
            T::Lt => BinaryOp::Lt,
            T::Le => BinaryOp::Le,
            T::Gt => BinaryOp::Gt,
            T::Ge => BinaryOp::Ge,
            T::Plus => BinaryOp::Add,
            T::Minus => BinaryOp::Sub,
            T::PlusPlus => BinaryOp::Concat,
            T::Star => BinaryOp::Mul,
            T::Slash => BinaryOp::Div,
            T::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing. Comparisons do not chain.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op().filter(|op| op.precedence() >= min_prec) {
            let span = lhs.span;
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
            if op.precedence() == 3 && self.binary_op().is_some_and(|next| next.precedence() == 3)
            {
                return self.error("operator other than a comparison");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = if self.eat(&TokenKind::Minus) {
            UnaryOp::Neg
        } else if self.eat(&TokenKind::Bang) {
            UnaryOp::Not
        } else {
            return self.primary();
        };
        let operand = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Int(i)) => {
                self.pos += 1;
                ExprKind::Int(*i)
            }
            Some(TokenKind::Char(c)) => {
                self.pos += 1;
                ExprKind::Char(*c)
            }
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                ExprKind::Str(s.clone())
            }
            Some(TokenKind::True) => {
                self.pos += 1;
                ExprKind::Bool(true)
            }
            Some(TokenKind::False) => {
                self.pos += 1;
                ExprKind::Bool(false)
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                if self.eat(&TokenKind::RParen) {
                    ExprKind::Unit
                } else {
                    let inner = self.expr()?;
                    self.expect(TokenKind::RParen, "')'")?;
                    return Ok(inner);
                }
            }
            Some(TokenKind::Match) => {
                self.pos += 1;
                let scrutinee = self.expr()?;
                self.expect(TokenKind::LBrace, "'{'")?;
                let mut arms = Vec::new();
                while !self.eat(&TokenKind::RBrace) {
                    let pattern = self.pattern()?;
                    self.expect(TokenKind::FatArrow, "'=>'")?;
                    let body = self.expr()?;
                    arms.push(ExprArm { pattern, body });
                    if !self.eat(&TokenKind::Comma) {
                        self.expect(TokenKind::RBrace, "',' or '}'")?;
                        break;
                    }
                }
                ExprKind::Match {
                    scrutinee: Box::new(scrutinee),
                    arms,
                }
            }
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                if let Some(tag) = Ctor::from_name(&name) {
                    self.pos += 1;
                    let arg = self.ctor_payload(tag, |p| p.expr())?;
                    ExprKind::Ctor { tag, arg }
                } else if name == "stdin" || name == "stdout" {
                    self.pos += 1;
                    ExprKind::Std(if name == "stdin" {
                        StdStream::Stdin
                    } else {
                        StdStream::Stdout
                    })
                } else {
                    let name = self.ident()?;
                    if self.at(&TokenKind::LParen) {
                        let args = self.args()?;
                        ExprKind::Call { name, args }
                    } else {
                        ExprKind::Var(name)
                    }
                }
            }
            _ => return self.error("expression"),
        };
        Ok(Expr { kind, span })
    }

    fn ctor_payload<T>(
        &mut self,
        tag: Ctor,
        mut item: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Option<Box<T>>> {
        let has_paren = self.at(&TokenKind::LParen);
        match (tag.payload(), has_paren) {
            (Payload::None, true) => self.error(format!("no payload after '{}'", tag.name())),
            (Payload::Required, false) => self.error(format!("'(' after '{}'", tag.name())),
            (_, false) => Ok(None),
            (_, true) => {
                self.pos += 1;
                let inner = item(self)?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(Some(Box::new(inner)))
            }
        }
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        Ok(match self.peek() {
            Some(TokenKind::Int(i)) => {
                self.pos += 1;
                Pattern::Int(*i)
            }
            Some(TokenKind::Minus) => {
                self.pos += 1;
                match self.peek() {
                    Some(TokenKind::Int(i)) => {
                        self.pos += 1;
                        Pattern::Int(-*i)
                    }
                    _ => return self.error("integer literal"),
                }
            }
            Some(TokenKind::Char(c)) => {
                self.pos += 1;
                Pattern::Char(*c)
            }
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                Pattern::Str(s.clone())
            }
            Some(TokenKind::True) => {
                self.pos += 1;
                Pattern::Bool(true)
            }
            Some(TokenKind::False) => {
                self.pos += 1;
                Pattern::Bool(false)
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                self.expect(TokenKind::RParen, "')'")?;
                Pattern::Unit
            }
            Some(TokenKind::Ident(name)) if name == "_" => {
                self.pos += 1;
                Pattern::Wildcard
            }
            Some(TokenKind::Ident(name)) => {
                if let Some(tag) = Ctor::from_name(name) {
                    self.pos += 1;
                    let arg = self.ctor_payload(tag, |p| p.pattern())?;
                    Pattern::Ctor { tag, arg }
                } else {
                    Pattern::Bind(self.ident()?)
                }
            }
            _ => return self.error("pattern"),
        })
    }
}

pub fn parse_program(tokens: &[Token]) -> Result<Program, ParseError> {
    Parser { tokens, pos: 0 }.program()
}
