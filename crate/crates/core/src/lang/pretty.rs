//! Canonical source rendering of a syntax tree.

use std::fmt::Write;

use super::ast::*;
use crate::value::{quote_char, quote_str};

pub fn pretty_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, proc) in program.procedures.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "proc {}({}) {{", proc.name, proc.params.join(", "));
        block(&mut out, &proc.body, 1);
        out.push_str("}\n");
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        indent(out, level);
        stmt(out, s, level);
        out.push('\n');
    }
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Let { targets, value } => {
            let names: Vec<&str> = targets
                .iter()
                .map(|t| match t {
                    Target::Name(n) => n.as_str(),
                    Target::Discard => "_",
                })
                .collect();
            let _ = write!(out, "let {} = {};", names.join(", "), expr(value));
        }
        StmtKind::Call { name, args } => {
            let _ = write!(out, "{name}({});", expr_list(args));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "if {} {{", expr(cond));
            block(out, then_block, level + 1);
            indent(out, level);
            out.push('}');
            match else_block.as_deref() {
                None => {}
                Some(
                    [nested @ Stmt {
                        kind: StmtKind::If { .. },
                        ..
                    }],
                ) => {
                    out.push_str(" else ");
                    stmt(out, nested, level);
                }
                Some(other) => {
                    out.push_str(" else {\n");
                    block(out, other, level + 1);
                    indent(out, level);
                    out.push('}');
                }
            }
        }
        StmtKind::Match { scrutinee, arms } => {
            let _ = writeln!(out, "match {} {{", expr(scrutinee));
            for arm in arms {
                indent(out, level + 1);
                let _ = writeln!(out, "{} => {{", pattern(&arm.pattern));
                block(out, &arm.body, level + 2);
                indent(out, level + 1);
                out.push_str("}\n");
            }
            indent(out, level);
            out.push('}');
        }
        StmtKind::Return(values) if values.is_empty() => out.push_str("return;"),
        StmtKind::Return(values) => {
            let _ = write!(out, "return {};", expr_list(values));
        }
    }
}

fn expr_list(exprs: &[Expr]) -> String {
    exprs.iter().map(expr).collect::<Vec<_>>().join(", ")
}

/// Renders an expression, parenthesizing every nested operator application.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Unit => "()".into(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Int(i) if *i < 0 => format!("({i})"),
        ExprKind::Int(i) => i.to_string(),
        ExprKind::Char(c) => quote_char(*c),
        ExprKind::Str(s) => quote_str(s),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Std(StdStream::Stdin) => "stdin".into(),
        ExprKind::Std(StdStream::Stdout) => "stdout".into(),
        ExprKind::Ctor { tag, arg: None } => tag.name().into(),
        ExprKind::Ctor { tag, arg: Some(a) } => format!("{}({})", tag.name(), expr(a)),
        ExprKind::Unary { op, operand } => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            };
            format!("{sym}{}", operand_expr(operand))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            format!("{} {} {}", operand_expr(lhs), op.symbol(), operand_expr(rhs))
        }
        ExprKind::Call { name, args } => format!("{name}({})", expr_list(args)),
        ExprKind::Match { scrutinee, arms } => {
            let arms: Vec<String> = arms
                .iter()
                .map(|a| format!("{} => {}", pattern(&a.pattern), expr(&a.body)))
                .collect();
            format!("match {} {{ {} }}", expr(scrutinee), arms.join(", "))
        }
    }
}

fn operand_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary { .. } | ExprKind::Unary { .. } | ExprKind::Match { .. } => {
            format!("({})", expr(e))
        }
        _ => expr(e),
    }
}

pub fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::Wildcard => "_".into(),
        Pattern::Bind(n) => n.clone(),
        Pattern::Unit => "()".into(),
        Pattern::Bool(b) => b.to_string(),
        Pattern::Int(i) => i.to_string(),
        Pattern::Char(c) => quote_char(*c),
        Pattern::Str(s) => quote_str(s),
        Pattern::Ctor { tag, arg: None } => tag.name().into(),
        Pattern::Ctor { tag, arg: Some(a) } => format!("{}({})", tag.name(), pattern(a)),
    }
}

/// Resets every span to the default so trees can be compared structurally.
pub fn strip_spans(program: &mut Program) {
    for proc in &mut program.procedures {
        proc.span = Span::default();
        strip_block(&mut proc.body);
    }
}

fn strip_block(stmts: &mut [Stmt]) {
    for s in stmts {
        s.span = Span::default();
        match &mut s.kind {
            StmtKind::Let { value, .. } => strip_expr(value),
            StmtKind::Call { args, .. } => args.iter_mut().for_each(strip_expr),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                strip_expr(cond);
                strip_block(then_block);
                if let Some(b) = else_block {
                    strip_block(b);
                }
            }
            StmtKind::Match { scrutinee, arms } => {
                strip_expr(scrutinee);
                for arm in arms {
                    arm.span = Span::default();
                    strip_block(&mut arm.body);
                }
            }
            StmtKind::Return(values) => values.iter_mut().for_each(strip_expr),
        }
    }
}

fn strip_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Ctor { arg: Some(a), .. } => strip_expr(a),
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(strip_expr),
        ExprKind::Match { scrutinee, arms } => {
            strip_expr(scrutinee);
            for arm in arms {
                strip_expr(&mut arm.body);
            }
        }
        _ => {}
    }
}
