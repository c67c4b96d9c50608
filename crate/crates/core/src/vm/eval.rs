//! Expression evaluation and pattern matching.
//!
//! Evaluation is strict and left to right. Expressions cannot perform I/O:
//! the checker only admits pure primitives in expression position.

use std::collections::HashMap;
use std::rc::Rc;

use crate::io::{eval_pure, registry};
use crate::lang::ast::{BinaryOp, Ctor, Expr, ExprKind, Pattern, Payload, UnaryOp};
use crate::lang::check::Ident;
use crate::value::Value;

pub type Env = HashMap<Ident, Value>;

fn overflow() -> String {
    "arithmetic overflow".into()
}

fn type_fault(op: &str, l: &Value, r: &Value) -> String {
    format!("operator {op} cannot apply to {} and {}", l.kind(), r.kind())
}

pub fn ctor_value(tag: Ctor, arg: Option<Value>) -> Value {
    match tag {
        Ctor::Eof => Value::Eof,
        _ => Value::Variant(tag.name().into(), arg.into_iter().collect()),
    }
}

pub fn eval(e: &Expr, env: &mut Env) -> Result<Value, String> {
    Ok(match &e.kind {
        ExprKind::Unit => Value::Unit,
        ExprKind::Bool(b) => Value::Bool(*b),
        ExprKind::Int(i) => Value::Int(*i),
        ExprKind::Char(c) => Value::Char(*c),
        ExprKind::Str(s) => Value::Str(s.clone()),
        ExprKind::Var(name) => env
            .get(name.as_str())
            .cloned()
            .ok_or_else(|| format!("unbound variable {name}"))?,
        ExprKind::Std(s) => Value::Handle(s.handle()),
        ExprKind::Ctor { tag, arg } => {
            let arg = match arg {
                Some(a) => Some(eval(a, env)?),
                None => None,
            };
            ctor_value(*tag, arg)
        }
        ExprKind::Unary { op, operand } => match (op, eval(operand, env)?) {
            (UnaryOp::Neg, Value::Int(i)) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
            (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnaryOp::Neg, v) => return Err(format!("cannot negate {}", v.kind())),
            (UnaryOp::Not, v) => return Err(format!("cannot apply ! to {}", v.kind())),
        },
        ExprKind::Binary { op, lhs, rhs } => binary(*op, lhs, rhs, env)?,
        ExprKind::Call { name, args } => {
            let (_, desc) =
                registry::lookup(name).ok_or_else(|| format!("unknown callee {name}"))?;
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(eval(a, env)?);
            }
            let mut out = eval_pure(desc, &values).map_err(|f| f.to_string())?;
            out.swap_remove(0)
        }
        ExprKind::Match { scrutinee, arms } => {
            let v = eval(scrutinee, env)?;
            for arm in arms {
                let mut binds = Vec::new();
                if match_pattern(&arm.pattern, &v, &mut binds) {
                    bind_all(env, binds);
                    return eval(&arm.body, env);
                }
            }
            return Err(format!("no match arm for {v}"));
        }
    })
}

fn binary(op: BinaryOp, lhs: &Expr, rhs: &Expr, env: &mut Env) -> Result<Value, String> {
    use BinaryOp::*;
    let l = eval(lhs, env)?;
    if let (And | Or, Value::Bool(b)) = (op, &l) {
        if (op == And) != *b {
            return Ok(Value::Bool(*b));
        }
        return match eval(rhs, env)? {
            Value::Bool(r) => Ok(Value::Bool(r)),
            r => Err(type_fault(op.symbol(), &l, &r)),
        };
    }
    let r = eval(rhs, env)?;
    let v = match (op, &l, &r) {
        (Add, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_add(*b).ok_or_else(overflow)?),
        (Sub, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_sub(*b).ok_or_else(overflow)?),
        (Mul, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_mul(*b).ok_or_else(overflow)?),
        (Div | Rem, Value::Int(_), Value::Int(0)) => return Err("division by zero".into()),
        (Div, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_div(*b).ok_or_else(overflow)?),
        (Rem, Value::Int(a), Value::Int(b)) => Value::Int(a.checked_rem(*b).ok_or_else(overflow)?),
        (Concat, Value::Str(a), Value::Str(b)) => Value::Str(format!("{a}{b}")),
        (Eq, a, b) => Value::Bool(a == b),
        (Ne, a, b) => Value::Bool(a != b),
        (Lt | Le | Gt | Ge, a, b) => {
            let ord = match (a, b) {
                (Value::Int(x), Value::Int(y)) => x.cmp(y),
                (Value::Char(x), Value::Char(y)) => x.cmp(y),
                (Value::Str(x), Value::Str(y)) => x.cmp(y),
                _ => return Err(type_fault(op.symbol(), a, b)),
            };
            Value::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        _ => return Err(type_fault(op.symbol(), &l, &r)),
    };
    Ok(v)
}

/// Tests `v` against `p`, collecting bindings on success. A constructor
/// pattern without an argument matches an optional-payload value either way.
pub fn match_pattern(p: &Pattern, v: &Value, binds: &mut Vec<(String, Value)>) -> bool {
    match (p, v) {
        (Pattern::Wildcard, _) => true,
        (Pattern::Bind(name), v) => {
            binds.push((name.clone(), v.clone()));
            true
        }
        (Pattern::Unit, Value::Unit) => true,
        (Pattern::Bool(a), Value::Bool(b)) => a == b,
        (Pattern::Int(a), Value::Int(b)) => a == b,
        (Pattern::Char(a), Value::Char(b)) => a == b,
        (Pattern::Str(a), Value::Str(b)) => a == b,
        (Pattern::Ctor { tag: Ctor::Eof, .. }, v) => *v == Value::Eof,
        (Pattern::Ctor { tag, arg }, Value::Variant(t, payload)) if t == tag.name() => {
            match (arg, payload.as_slice()) {
                (Some(p), [inner]) => match_pattern(p, inner, binds),
                (None, []) => true,
                (None, _) => tag.payload() == Payload::Optional,
                _ => false,
            }
        }
        _ => false,
    }
}

pub fn bind_all(env: &mut Env, binds: Vec<(String, Value)>) {
    for (name, v) in binds {
        env.insert(Rc::from(name), v);
    }
}
