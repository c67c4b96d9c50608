use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Proc,
    Let,
    If,
    Else,
    Return,
    Match,
    True,
    False,
    Ident(String),
    Int(i64),
    Char(char),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Eq,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    PlusPlus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Bang,
    FatArrow,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        let s = match self {
            Proc => "PROC",
            Let => "LET",
            If => "IF",
            Else => "ELSE",
            Return => "RETURN",
            Match => "MATCH",
            True => "TRUE",
            False => "FALSE",
            Ident(name) => return write!(f, "IDENT {name}"),
            Int(i) => return write!(f, "INT {i}"),
            Char(c) => return write!(f, "CHAR {}", crate::value::quote_char(*c)),
            Str(s) => return write!(f, "STRING {}", crate::value::quote_str(s)),
            LParen => "LPAREN",
            RParen => "RPAREN",
            LBrace => "LBRACE",
            RBrace => "RBRACE",
            Comma => "COMMA",
            Semi => "SEMI",
            Eq => "EQ",
            EqEq => "EQEQ",
            NotEq => "NE",
            Lt => "LT",
            Le => "LE",
            Gt => "GT",
            Ge => "GE",
            Plus => "PLUS",
            PlusPlus => "CONCAT",
            Minus => "MINUS",
            Star => "STAR",
            Slash => "SLASH",
            Percent => "PERCENT",
            AndAnd => "AND",
            OrOr => "OR",
            Bang => "NOT",
            FatArrow => "ARROW",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Lexer<'_> {
    fn pos(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Reads one (possibly escaped) character of a char or string literal.
    fn literal_char(&mut self, start: Span, what: &str) -> Result<char, LexError> {
        let unterminated = || LexError {
            span: start,
            message: format!("unterminated {what}"),
        };
        let c = self.bump().ok_or_else(unterminated)?;
        if c == '\n' {
            return Err(unterminated());
        }
        if c != '\\' {
            return Ok(c);
        }
        let at = self.pos();
        let bad = |message: String| LexError { span: at, message };
        match self.bump().ok_or_else(unterminated)? {
            'n' => Ok('\n'),
            't' => Ok('\t'),
            'r' => Ok('\r'),
            '0' => Ok('\0'),
            '\\' => Ok('\\'),
            '"' => Ok('"'),
            '\'' => Ok('\''),
            'u' => {
                if !self.eat('{') {
                    return Err(bad("expected '{' in unicode escape".into()));
                }
                let mut digits = String::new();
                while let Some(d) = self.peek() {
                    if d == '}' {
                        break;
                    }
                    digits.push(d);
                    self.bump();
                }
                if !self.eat('}') {
                    return Err(unterminated());
                }
                u32::from_str_radix(&digits, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| bad(format!("invalid unicode escape \\u{{{digits}}}")))
            }
            other => Err(bad(format!("unknown escape \\{other}"))),
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, LexError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.next() == Some('/') {
                        while let Some(c) = self.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        let span = self.pos();
        let Some(c) = self.bump() else {
            return Ok(None);
        };
        use TokenKind::*;
        let kind = match c {
            '(' => LParen,
            ')' => RParen,
            '{' => LBrace,
            '}' => RBrace,
            ',' => Comma,
            ';' => Semi,
            '*' => Star,
            '/' => Slash,
            '%' => Percent,
            '-' => Minus,
            '+' if self.eat('+') => PlusPlus,
            '+' => Plus,
            '=' if self.eat('=') => EqEq,
            '=' if self.eat('>') => FatArrow,
            '=' => Eq,
            '!' if self.eat('=') => NotEq,
            '!' => Bang,
            '<' if self.eat('=') => Le,
            '<' => Lt,
            '>' if self.eat('=') => Ge,
            '>' => Gt,
            '&' if self.eat('&') => AndAnd,
            '|' if self.eat('|') => OrOr,
            '"' => {
                let mut s = String::new();
                loop {
                    if self.peek() == Some('"') {
                        self.bump();
                        break;
                    }
                    s.push(self.literal_char(span, "string")?);
                }
                Str(s)
            }
            '\'' => {
                if self.peek() == Some('\'') {
                    return Err(LexError {
                        span,
                        message: "empty character literal".into(),
                    });
                }
                let c = self.literal_char(span, "character literal")?;
                if !self.eat('\'') {
                    return Err(LexError {
                        span,
                        message: "unterminated character literal".into(),
                    });
                }
                Char(c)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    self.bump();
                }
                Int(digits.parse().map_err(|_| LexError {
                    span,
                    message: format!("integer literal {digits} out of range"),
                })?)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(d) = self.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                    word.push(d);
                    self.bump();
                }
                match word.as_str() {
                    "proc" => Proc,
                    "let" => Let,
                    "if" => If,
                    "else" => Else,
                    "return" => Return,
                    "match" => Match,
                    "true" => True,
                    "false" => False,
                    _ => Ident(word),
                }
            }
            other => {
                return Err(LexError {
                    span,
                    message: format!("illegal character {other:?}"),
                })
            }
        };
        Ok(Some(Token { kind, span }))
    }
}

/// Splits source text into tokens. Whitespace and `//` comments are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer {
        chars: source.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        tokens.push(tok);
    }
    Ok(tokens)
}
