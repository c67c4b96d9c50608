//! Syntax tree produced by the parser.

pub use super::token::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub procedures: Vec<Procedure>,
}

pub const ENTRY: &str = "main";

#[derive(Debug, Clone, PartialEq)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    pub span: Span,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

/// Left-hand side of a `let`. `_` discards the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Name(String),
    Discard,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `let a, b = e;` More than one target requires `e` to be a call.
    Let { targets: Vec<Target>, value: Expr },
    /// A call whose outputs are all discarded: `f(x);`
    Call { name: String, args: Vec<Expr> },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    Match { scrutinee: Expr, arms: Vec<StmtArm> },
    Return(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StmtArm {
    pub pattern: Pattern,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Concat => "++",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            And => "&&",
            Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Or => 1,
            And => 2,
            Eq | Ne | Lt | Le | Gt | Ge => 3,
            Add | Sub | Concat => 4,
            Mul | Div | Rem => 5,
        }
    }
}

/// Standard stream constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StdStream {
    Stdin,
    Stdout,
}

impl StdStream {
    pub fn handle(self) -> u64 {
        match self {
            StdStream::Stdin => 0,
            StdStream::Stdout => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Unit,
    Bool(bool),
    Int(i64),
    Char(char),
    Str(String),
    Var(String),
    Std(StdStream),
    /// Built-in constructor: `yes(e)`, `no`, `ok`, `ok(e)`, `error(e)`, `eof`.
    Ctor { tag: Ctor, arg: Option<Box<Expr>> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call { name: String, args: Vec<Expr> },
    Match { scrutinee: Box<Expr>, arms: Vec<ExprArm> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprArm {
    pub pattern: Pattern,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ctor {
    Yes,
    No,
    Ok,
    Error,
    Eof,
}

impl Ctor {
    pub fn from_name(name: &str) -> Option<Ctor> {
        Some(match name {
            "yes" => Ctor::Yes,
            "no" => Ctor::No,
            "ok" => Ctor::Ok,
            "error" => Ctor::Error,
            "eof" => Ctor::Eof,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Ctor::Yes => "yes",
            Ctor::No => "no",
            Ctor::Ok => "ok",
            Ctor::Error => "error",
            Ctor::Eof => "eof",
        }
    }

    pub fn payload(self) -> Payload {
        match self {
            Ctor::Yes | Ctor::Error => Payload::Required,
            Ctor::Ok => Payload::Optional,
            Ctor::No | Ctor::Eof => Payload::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    None,
    Optional,
    Required,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Wildcard,
    Bind(String),
    Unit,
    Bool(bool),
    Int(i64),
    Char(char),
    Str(String),
    Ctor { tag: Ctor, arg: Option<Box<Pattern>> },
}

impl Pattern {
    /// Names bound by the pattern, in left-to-right order.
    pub fn bindings(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_bindings(&mut out);
        out
    }

    fn collect_bindings<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pattern::Bind(name) => out.push(name),
            Pattern::Ctor { arg: Some(p), .. } => p.collect_bindings(out),
            _ => {}
        }
    }
}

/// Names that are not usable as variables or procedure names.
pub fn is_reserved(name: &str) -> bool {
    Ctor::from_name(name).is_some() || matches!(name, "stdin" | "stdout" | "_")
}
