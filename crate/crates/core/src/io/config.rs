//! Loader for scripted-backend description files.
//!
//! ```text
//! # comments start with '#'
//! stdin:
//! "first line\nsecond line\n"
//! file in.txt:
//! "contents of in.txt"
//! fail 3 "disk full"
//! ```
//!
//! Every payload is a single quoted string using the language's escapes.
//! `fail <n> "<message>"` makes backend operation `n` fail.

use thiserror::Error;

use super::ScriptedBackend;
use crate::lang::token::{tokenize, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptConfigError {
    pub line: usize,
    pub message: String,
}

fn quoted(line_no: usize, text: &str) -> Result<String, ScriptConfigError> {
    let err = |message: String| ScriptConfigError {
        line: line_no,
        message,
    };
    let tokens = tokenize(text).map_err(|e| err(e.message))?;
    match tokens.as_slice() {
        [tok] => match &tok.kind {
            TokenKind::Str(s) => Ok(s.clone()),
            other => Err(err(format!("expected a quoted string, found {other}"))),
        },
        _ => Err(err("expected exactly one quoted string".into())),
    }
}

pub fn parse_script(text: &str) -> Result<ScriptedBackend, ScriptConfigError> {
    let mut stdin = String::new();
    let mut files = Vec::new();
    let mut failures = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    while let Some((no, line)) = lines.next() {
        let mut payload = |what: &str| match lines.next() {
            Some((n, l)) => quoted(n, l),
            None => Err(ScriptConfigError {
                line: no,
                message: format!("missing contents for {what}"),
            }),
        };
        if line == "stdin:" {
            stdin = payload("stdin")?;
        } else if let Some(path) = line.strip_prefix("file ").and_then(|r| r.strip_suffix(':')) {
            let path = path.trim();
            if path.is_empty() {
                return Err(ScriptConfigError {
                    line: no,
                    message: "empty file path".into(),
                });
            }
            files.push((path.to_string(), payload(path)?));
        } else if let Some(rest) = line.strip_prefix("fail ") {
            let rest = rest.trim_start();
            let (index, msg) = rest.split_once(char::is_whitespace).ok_or(ScriptConfigError {
                line: no,
                message: "expected: fail <op-index> \"<message>\"".into(),
            })?;
            let index = index.parse::<usize>().map_err(|_| ScriptConfigError {
                line: no,
                message: format!("bad operation index {index}"),
            })?;
            failures.push((index, quoted(no, msg.trim())?));
        } else {
            return Err(ScriptConfigError {
                line: no,
                message: format!("unrecognized line: {line}"),
            });
        }
    }

    let mut backend = ScriptedBackend::new(&stdin);
    for (path, content) in files {
        backend = backend.with_file(path, content);
    }
    for (index, msg) in failures {
        backend = backend.with_failure(index, msg);
    }
    Ok(backend)
}
