//! Runtime values of the Tardi language.
//!
//! The `Display` impl renders a value in the language's literal syntax. That
//! rendering is also the encoding used by effects-trace dumps and I/O table
//! listings, so it must stay stable.

use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Char(char),
    Str(String),
    /// End of input. Distinct from every character.
    Eof,
    /// Opaque stream handle. Programs may only compare handles for equality.
    Handle(u64),
    Variant(String, Vec<Value>),
}

impl Value {
    pub fn ok() -> Value {
        Value::Variant("ok".into(), Vec::new())
    }

    pub fn ok_with(v: Value) -> Value {
        Value::Variant("ok".into(), vec![v])
    }

    pub fn error(msg: impl Into<String>) -> Value {
        Value::Variant("error".into(), vec![Value::Str(msg.into())])
    }

    pub fn yes(v: Value) -> Value {
        Value::Variant("yes".into(), vec![v])
    }

    pub fn no() -> Value {
        Value::Variant("no".into(), Vec::new())
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Value::Variant(tag, _) if tag == "error")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Char(_) => "char",
            Value::Str(_) => "string",
            Value::Eof => "eof",
            Value::Handle(_) => "handle",
            Value::Variant(..) => "variant",
        }
    }
}

/// Writes `s` with the escapes the lexer understands, without surrounding quotes.
pub(crate) fn escape_into(out: &mut impl fmt::Write, c: char, quote: char) -> fmt::Result {
    match c {
        '\\' => out.write_str("\\\\"),
        '\n' => out.write_str("\\n"),
        '\t' => out.write_str("\\t"),
        '\r' => out.write_str("\\r"),
        '\0' => out.write_str("\\0"),
        c if c == quote => {
            out.write_char('\\')?;
            out.write_char(c)
        }
        c if c.is_control() => write!(out, "\\u{{{:x}}}", c as u32),
        c => out.write_char(c),
    }
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        escape_into(&mut out, c, '"').expect("writing to a String cannot fail");
    }
    out.push('"');
    out
}

pub fn quote_char(c: char) -> String {
    let mut out = String::from("'");
    escape_into(&mut out, c, '\'').expect("writing to a String cannot fail");
    out.push('\'');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Char(c) => f.write_str(&quote_char(*c)),
            Value::Str(s) => f.write_str(&quote_str(s)),
            Value::Eof => f.write_str("eof"),
            Value::Handle(h) => write!(f, "handle({h})"),
            Value::Variant(tag, payload) => {
                f.write_str(tag)?;
                if !payload.is_empty() {
                    f.write_str("(")?;
                    write_list(f, payload)?;
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, values: &[Value]) -> fmt::Result {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

/// Renders a value list as `[v1, v2]`.
pub fn render_list(values: &[Value]) -> String {
    struct List<'a>(&'a [Value]);
    impl fmt::Display for List<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("[")?;
            write_list(f, self.0)?;
            f.write_str("]")
        }
    }
    List(values).to_string()
}

// Values cross the wire in their literal rendering.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_rendering() {
        assert_eq!(Value::Unit.to_string(), "()");
        assert_eq!(Value::Char('\'').to_string(), "'\\''");
        assert_eq!(Value::Str("a\"b\n".into()).to_string(), "\"a\\\"b\\n\"");
        assert_eq!(Value::Handle(1).to_string(), "handle(1)");
        assert_eq!(Value::ok().to_string(), "ok");
        assert_eq!(Value::error("x").to_string(), "error(\"x\")");
        assert_eq!(
            render_list(&[Value::Handle(1), Value::Str("hi".into())]),
            "[handle(1), \"hi\"]"
        );
        assert_eq!(render_list(&[]), "[]");
    }

    #[test]
    fn eof_is_not_a_char() {
        assert_ne!(Value::Eof, Value::Char('\u{0}'));
        assert_ne!(Value::Eof.to_string(), Value::Char('e').to_string());
    }
}
