//! Static checks and lowering to the executable program form.
//!
//! Every variable must be bound before it is used and at most once along any
//! control path. The analysis tracks two sets per program point: names bound
//! on every path reaching it and names bound on some path. A use needs the
//! first, a binding needs absence from the second. Because nothing is ever
//! rebound, resetting a frame to its arguments restores it exactly.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use super::ast::*;
use crate::io::registry::{self, PrimId};

pub type Ident = Rc<str>;
pub type ProcId = usize;
pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct CheckError {
    pub span: Span,
    pub message: String,
}

/// Newtype over a list of check errors so it can be returned as one error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckErrors(pub Vec<CheckError>);

impl fmt::Display for CheckErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CheckErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Callee {
    Proc(ProcId),
    Primitive(PrimId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// `let x = e;` where `e` is pure.
    Bind { target: Option<Ident>, value: Expr },
    /// A user call or primitive call at statement level. `targets` is empty
    /// when every output is discarded.
    Call {
        targets: Vec<Option<Ident>>,
        callee: Callee,
        args: Vec<Expr>,
    },
    If {
        cond: Expr,
        then_block: BlockId,
        else_block: Option<BlockId>,
    },
    Match {
        scrutinee: Expr,
        arms: Vec<(Pattern, BlockId)>,
    },
    Return(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckedStmt {
    pub op: Op,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckedProc {
    pub name: String,
    pub params: Vec<Ident>,
    pub body: BlockId,
    pub n_outputs: usize,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckedProgram {
    pub procs: Vec<CheckedProc>,
    pub blocks: Vec<Vec<CheckedStmt>>,
    pub entry: ProcId,
}

impl CheckedProgram {
    pub fn proc_by_name(&self, name: &str) -> Option<ProcId> {
        self.procs.iter().position(|p| p.name == name)
    }

    /// Every statement span in the program, with the procedure it belongs to.
    pub fn statement_spans(&self) -> Vec<(ProcId, Span)> {
        let mut out = Vec::new();
        for (id, proc) in self.procs.iter().enumerate() {
            let mut pending = vec![proc.body];
            while let Some(b) = pending.pop() {
                for stmt in &self.blocks[b] {
                    out.push((id, stmt.span));
                    match &stmt.op {
                        Op::If {
                            then_block,
                            else_block,
                            ..
                        } => {
                            pending.push(*then_block);
                            pending.extend(*else_block);
                        }
                        Op::Match { arms, .. } => pending.extend(arms.iter().map(|(_, b)| *b)),
                        _ => {}
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
struct Bindings {
    /// Bound on every path.
    definite: HashSet<String>,
    /// Bound on at least one path.
    possible: HashSet<String>,
}

impl Bindings {
    fn merge(branches: Vec<Bindings>) -> Bindings {
        let mut iter = branches.into_iter();
        let Some(mut acc) = iter.next() else {
            return Bindings::default();
        };
        for b in iter {
            acc.definite.retain(|n| b.definite.contains(n));
            acc.possible.extend(b.possible);
        }
        acc
    }
}

struct Checker<'p> {
    procs: HashMap<&'p str, (ProcId, &'p Procedure, usize)>,
    errors: Vec<CheckError>,
    blocks: Vec<Vec<CheckedStmt>>,
    idents: HashMap<String, Ident>,
}

enum Resolved<'p> {
    User(ProcId, &'p Procedure, usize),
    Prim(PrimId, &'static registry::PrimitiveDescriptor),
}

impl<'p> Checker<'p> {
    fn err(&mut self, span: Span, message: impl Into<String>) {
        self.errors.push(CheckError {
            span,
            message: message.into(),
        });
    }

    fn ident(&mut self, name: &str) -> Ident {
        self.idents
            .entry(name.to_string())
            .or_insert_with(|| Rc::from(name))
            .clone()
    }

    fn resolve(&mut self, name: &str, span: Span) -> Option<Resolved<'p>> {
        if let Some(&(id, proc, n_out)) = self.procs.get(name) {
            return Some(Resolved::User(id, proc, n_out));
        }
        if let Some((id, d)) = registry::lookup(name) {
            return Some(Resolved::Prim(id, d));
        }
        self.err(span, format!("unknown callee {name}"));
        None
    }

    fn bind(&mut self, env: &mut Bindings, name: &str, span: Span) {
        if env.possible.contains(name) {
            self.err(span, format!("{name} rebound"));
        }
        env.definite.insert(name.to_string());
        env.possible.insert(name.to_string());
    }

    fn expr(&mut self, e: &Expr, env: &mut Bindings) {
        match &e.kind {
            ExprKind::Var(name) => {
                if !env.definite.contains(name) {
                    self.err(e.span, format!("unbound variable {name}"));
                }
            }
            ExprKind::Ctor { arg: Some(a), .. } => self.expr(a, env),
            ExprKind::Unary { operand, .. } => self.expr(operand, env),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs, env);
                self.expr(rhs, env);
            }
            ExprKind::Call { name, args } => {
                for a in args {
                    self.expr(a, env);
                }
                match self.resolve(name, e.span) {
                    Some(Resolved::Prim(_, d)) if !d.effectful => {
                        if d.n_inputs != args.len() {
                            self.err(
                                e.span,
                                format!(
                                    "arity mismatch: {name} takes {} argument(s), called with {}",
                                    d.n_inputs,
                                    args.len()
                                ),
                            );
                        }
                    }
                    Some(_) => self.err(
                        e.span,
                        format!("call to {name} must be a statement of its own"),
                    ),
                    None => {}
                }
            }
            ExprKind::Match { scrutinee, arms } => {
                self.expr(scrutinee, env);
                let mut introduced = HashSet::new();
                for arm in arms {
                    let mut local = env.clone();
                    self.pattern(&arm.pattern, &mut local, e.span);
                    self.expr(&arm.body, &mut local);
                    introduced.extend(local.possible.difference(&env.possible).cloned());
                }
                // Arm bindings live in the frame, so they may not be reused later.
                env.possible.extend(introduced);
            }
            _ => {}
        }
    }

    fn pattern(&mut self, p: &Pattern, env: &mut Bindings, span: Span) {
        for name in p.bindings() {
            self.bind(env, name, span);
        }
    }

    fn call_args(&mut self, name: &str, expected: usize, args: &[Expr], span: Span) {
        if expected != args.len() {
            self.err(
                span,
                format!(
                    "arity mismatch: {name} takes {expected} argument(s), called with {}",
                    args.len()
                ),
            );
        }
    }

    /// Checks and lowers a block. Returns its id and whether every path
    /// through it ends in `return`.
    fn block(&mut self, stmts: &[Stmt], env: &mut Bindings) -> (BlockId, bool) {
        let id = self.blocks.len();
        self.blocks.push(Vec::new());
        let mut lowered = Vec::with_capacity(stmts.len());
        let mut returns = false;
        for s in stmts {
            if returns {
                self.err(s.span, "unreachable statement");
                break;
            }
            let (op, r) = self.stmt(s, env);
            returns = r;
            if let Some(op) = op {
                lowered.push(CheckedStmt { op, span: s.span });
            }
        }
        self.blocks[id] = lowered;
        (id, returns)
    }

    fn targets(&mut self, targets: &[Target], env: &mut Bindings, span: Span) -> Vec<Option<Ident>> {
        targets
            .iter()
            .map(|t| match t {
                Target::Name(n) => {
                    self.bind(env, n, span);
                    Some(self.ident(n))
                }
                Target::Discard => None,
            })
            .collect()
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Bindings) -> (Option<Op>, bool) {
        let span = s.span;
        match &s.kind {
            StmtKind::Let { targets, value } => {
                let call = match &value.kind {
                    ExprKind::Call { name, args } => Some((name, args)),
                    _ => None,
                };
                let resolved = call.and_then(|(name, _)| match self.procs.get(name.as_str()) {
                    Some(&(id, p, n)) => Some(Resolved::User(id, p, n)),
                    None => registry::lookup(name)
                        .filter(|(_, d)| d.effectful || targets.len() != 1)
                        .map(|(id, d)| Resolved::Prim(id, d)),
                });
                match (call, resolved) {
                    (Some((name, args)), Some(resolved)) => {
                        for a in args {
                            self.expr(a, env);
                        }
                        let (callee, n_in, n_out) = match resolved {
                            Resolved::User(id, p, n) => (Callee::Proc(id), p.params.len(), n),
                            Resolved::Prim(id, d) => (Callee::Primitive(id), d.n_inputs, d.n_outputs),
                        };
                        self.call_args(name, n_in, args, span);
                        if n_out != targets.len() {
                            self.err(
                                span,
                                format!(
                                    "arity mismatch: {name} returns {n_out} value(s), {} target(s) given",
                                    targets.len()
                                ),
                            );
                        }
                        let targets = self.targets(targets, env, span);
                        (
                            Some(Op::Call {
                                targets,
                                callee,
                                args: args.clone(),
                            }),
                            false,
                        )
                    }
                    _ => {
                        self.expr(value, env);
                        if targets.len() != 1 {
                            self.err(span, "multiple targets require a call");
                        }
                        let mut lowered = self.targets(targets, env, span);
                        (
                            Some(Op::Bind {
                                target: lowered.swap_remove(0),
                                value: value.clone(),
                            }),
                            false,
                        )
                    }
                }
            }
            StmtKind::Call { name, args } => {
                for a in args {
                    self.expr(a, env);
                }
                let callee = match self.resolve(name, span) {
                    Some(Resolved::User(id, p, _)) => {
                        self.call_args(name, p.params.len(), args, span);
                        Callee::Proc(id)
                    }
                    Some(Resolved::Prim(id, d)) => {
                        self.call_args(name, d.n_inputs, args, span);
                        Callee::Primitive(id)
                    }
                    None => return (None, false),
                };
                (
                    Some(Op::Call {
                        targets: Vec::new(),
                        callee,
                        args: args.clone(),
                    }),
                    false,
                )
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expr(cond, env);
                let mut then_env = env.clone();
                let (then_id, then_ret) = self.block(then_block, &mut then_env);
                let mut else_env = env.clone();
                let (else_id, else_ret) = match else_block {
                    Some(b) => {
                        let (id, r) = self.block(b, &mut else_env);
                        (Some(id), r)
                    }
                    None => (None, false),
                };
                let live: Vec<Bindings> = [(then_env, then_ret), (else_env, else_ret)]
                    .into_iter()
                    .filter(|(_, ret)| !ret)
                    .map(|(b, _)| b)
                    .collect();
                let returns = live.is_empty();
                if !returns {
                    *env = Bindings::merge(live);
                }
                (
                    Some(Op::If {
                        cond: cond.clone(),
                        then_block: then_id,
                        else_block: else_id,
                    }),
                    returns,
                )
            }
            StmtKind::Match { scrutinee, arms } => {
                self.expr(scrutinee, env);
                let mut lowered = Vec::with_capacity(arms.len());
                let mut live = Vec::new();
                for arm in arms {
                    let mut arm_env = env.clone();
                    self.pattern(&arm.pattern, &mut arm_env, arm.span);
                    let (id, ret) = self.block(&arm.body, &mut arm_env);
                    lowered.push((arm.pattern.clone(), id));
                    if !ret {
                        live.push(arm_env);
                    }
                }
                let returns = !arms.is_empty() && live.is_empty();
                if !returns {
                    *env = Bindings::merge(live);
                }
                (
                    Some(Op::Match {
                        scrutinee: scrutinee.clone(),
                        arms: lowered,
                    }),
                    returns,
                )
            }
            StmtKind::Return(values) => {
                for v in values {
                    self.expr(v, env);
                }
                (Some(Op::Return(values.clone())), true)
            }
        }
    }
}

fn return_arities(stmts: &[Stmt], out: &mut Vec<(usize, Span)>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Return(values) => out.push((values.len(), s.span)),
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                return_arities(then_block, out);
                if let Some(b) = else_block {
                    return_arities(b, out);
                }
            }
            StmtKind::Match { arms, .. } => {
                for arm in arms {
                    return_arities(&arm.body, out);
                }
            }
            _ => {}
        }
    }
}

/// Verifies a parsed program and lowers it for execution.
pub fn check_program(program: &Program) -> Result<CheckedProgram, CheckErrors> {
    let mut checker = Checker {
        procs: HashMap::new(),
        errors: Vec::new(),
        blocks: Vec::new(),
        idents: HashMap::new(),
    };

    for (id, proc) in program.procedures.iter().enumerate() {
        let mut arities = Vec::new();
        return_arities(&proc.body, &mut arities);
        let n_outputs = arities.first().map_or(0, |(n, _)| *n);
        for &(n, span) in &arities {
            if n != n_outputs {
                checker.err(
                    span,
                    format!("inconsistent return arity in {}: {n} vs {n_outputs}", proc.name),
                );
            }
        }
        if registry::lookup(&proc.name).is_some() {
            checker.err(proc.span, format!("procedure {} shadows a primitive", proc.name));
        }
        if checker
            .procs
            .insert(&proc.name, (id, proc, n_outputs))
            .is_some()
        {
            checker.err(proc.span, format!("duplicate procedure {}", proc.name));
        }
    }

    let entry = match checker.procs.get(ENTRY) {
        Some(&(id, proc, _)) => {
            if !proc.params.is_empty() {
                checker.err(proc.span, "main must take no parameters");
            }
            id
        }
        None => {
            checker.err(Span::new(1, 1), "no procedure main");
            0
        }
    };

    let mut procs = Vec::with_capacity(program.procedures.len());
    for proc in &program.procedures {
        let mut env = Bindings::default();
        let params: Vec<Ident> = proc
            .params
            .iter()
            .map(|p| {
                checker.bind(&mut env, p, proc.span);
                checker.ident(p)
            })
            .collect();
        let (body, returns) = checker.block(&proc.body, &mut env);
        let n_outputs = checker.procs[proc.name.as_str()].2;
        if n_outputs > 0 && !returns {
            checker.err(proc.span, format!("missing return in {}", proc.name));
        }
        procs.push(CheckedProc {
            name: proc.name.clone(),
            params,
            body,
            n_outputs,
            span: proc.span,
        });
    }

    if checker.errors.is_empty() {
        Ok(CheckedProgram {
            procs,
            blocks: checker.blocks,
            entry,
        })
    } else {
        checker.errors.sort_by_key(|e| e.span);
        Err(CheckErrors(checker.errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parser::parse_program, token::tokenize};

    fn check(src: &str) -> Result<CheckedProgram, CheckErrors> {
        check_program(&parse_program(&tokenize(src).unwrap()).unwrap())
    }

    fn messages(src: &str) -> Vec<String> {
        check(src).unwrap_err().0.into_iter().map(|e| e.message).collect()
    }

    #[test]
    fn rebinding() {
        assert_eq!(messages("proc main() { let x = 1; let x = 2; }"), ["x rebound"]);
    }

    #[test]
    fn primitive_call_resolution() {
        let p = check("proc main() { let c = read_char(stdin); }").unwrap();
        let stmt = &p.blocks[p.procs[p.entry].body][0];
        let Op::Call {
            callee: Callee::Primitive(id),
            targets,
            ..
        } = &stmt.op
        else {
            panic!("expected primitive call, got {:?}", stmt.op)
        };
        let d = registry::descriptor(*id);
        assert_eq!((d.name, d.n_inputs, d.n_outputs), ("read_char", 1, 1));
        assert_eq!(targets.len(), 1);
    }

    #[test]
    fn arity_mismatch() {
        let msgs = messages("proc f(a) { return a; } proc main() { let y = f(1, 2); }");
        assert_eq!(msgs.len(), 1);
        assert!(msgs[0].starts_with("arity mismatch"), "{msgs:?}");
    }

    #[test]
    fn output_arity_mismatch() {
        let msgs = messages("proc f(a) { return a; } proc main() { let y, z = f(1); }");
        assert!(msgs[0].starts_with("arity mismatch"), "{msgs:?}");
    }

    #[test]
    fn unbound_and_unknown() {
        let msgs = messages("proc main() { let y = x + 1; nope(); }");
        assert_eq!(msgs, ["unbound variable x", "unknown callee nope"]);
    }

    #[test]
    fn branch_local_binding_is_not_definite() {
        let msgs = messages(
            "proc main() { if true { let x = 1; } else { } let y = x; }",
        );
        assert_eq!(msgs, ["unbound variable x"]);
        // Bound on both branches: fine.
        check("proc main() { if true { let x = 1; } else { let x = 2; } let y = x; }").unwrap();
        // Bound on one path, rebound after: rejected.
        let msgs = messages("proc main() { if true { let x = 1; } let x = 2; }");
        assert_eq!(msgs, ["x rebound"]);
    }

    #[test]
    fn returning_branch_does_not_merge() {
        check(
            "proc f(c) { if c { return 1; } else { let x = 2; } return x; } proc main() { let r = f(true); }",
        )
        .unwrap();
    }

    #[test]
    fn missing_entry_and_params() {
        assert_eq!(messages("proc f() { }"), ["no procedure main"]);
        assert_eq!(messages("proc main(a) { }"), ["main must take no parameters"]);
    }

    #[test]
    fn effectful_call_in_expression_rejected() {
        let msgs = messages("proc main() { let x = 1 + read_char(stdin); }");
        assert!(msgs[0].contains("must be a statement"), "{msgs:?}");
    }

    #[test]
    fn pure_helper_in_expression() {
        check("proc main() { let n = string_length(\"ab\") + 1; }").unwrap();
    }

    #[test]
    fn missing_return_and_inconsistent_arity() {
        assert_eq!(
            messages("proc f(c) { if c { return 1; } } proc main() { let x = f(true); }"),
            ["missing return in f"]
        );
        let msgs = messages("proc f(c) { if c { return 1; } return 1, 2; } proc main() { f(true); }");
        assert!(msgs[0].starts_with("inconsistent return arity"), "{msgs:?}");
    }

    #[test]
    fn unreachable_after_return() {
        assert_eq!(
            messages("proc main() { return; let x = 1; }"),
            ["unreachable statement"]
        );
    }

    #[test]
    fn match_arm_bindings_scope() {
        check(
            "proc main() { let m = yes(1); match m { yes(v) => { let a = v; } no => { } } }",
        )
        .unwrap();
        let msgs = messages(
            "proc main() { let m = yes(1); match m { yes(v) => { } no => { } } let b = v; }",
        );
        assert_eq!(msgs, ["unbound variable v"]);
    }

    #[test]
    fn expression_match_bindings_cannot_be_reused() {
        let msgs = messages(
            "proc main() { let m = yes(1); let a = match m { yes(v) => v, _ => 0 }; let v = 2; }",
        );
        assert_eq!(msgs, ["v rebound"]);
    }
}
