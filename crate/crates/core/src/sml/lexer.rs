use std::fmt;

use serde::{Deserialize, Serialize};

use super::{SmlError, Span};
use crate::scene::{ColorRgba, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    /// First word of a statement.
    Command(String),
    /// Any later bare word (`player`, `cube`, ...).
    Word(String),
    Str(String),
    Number(f64),
    Color(ColorRgba),
    Vector(Vec3),
    Newline,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Command(c) => write!(f, "[CMD {c}]"),
            TokenKind::Word(w) => write!(f, "[WORD {w}]"),
            TokenKind::Str(s) => write!(f, "[STR {s}]"),
            TokenKind::Number(n) => write!(f, "[NUM {n}]"),
            TokenKind::Color(c) => write!(f, "[COLOR {c}]"),
            TokenKind::Vector(v) => write!(f, "[VEC {v}]"),
            TokenKind::Newline => f.write_str("[NEWLINE]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
    at_statement_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
            at_statement_start: true,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> SmlError {
        SmlError::Lex {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_blanks(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.bump();
        }
    }

    fn run(mut self) -> Result<Vec<Token>, SmlError> {
        let mut tokens = Vec::new();
        loop {
            self.skip_blanks();
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else { break };
            let kind = match c {
                ';' => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                    continue;
                }
                '\n' => {
                    self.bump();
                    self.at_statement_start = true;
                    TokenKind::Newline
                }
                '"' | '\'' => TokenKind::Str(self.string(c)?),
                '#' => TokenKind::Color(self.color()?),
                '(' => TokenKind::Vector(self.vector()?),
                '-' | '+' | '0'..='9' => TokenKind::Number(self.number()?),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let word = self.word();
                    if std::mem::replace(&mut self.at_statement_start, false) {
                        TokenKind::Command(word)
                    } else {
                        TokenKind::Word(word)
                    }
                }
                other => {
                    return Err(self.error(line, column, format!("unexpected character '{other}'")));
                }
            };
            if !matches!(kind, TokenKind::Newline) {
                self.at_statement_start = false;
            }
            tokens.push(Token {
                kind,
                span: Span {
                    line,
                    column,
                    end_column: if self.line == line { self.column } else { column + 1 },
                },
            });
        }
        Ok(tokens)
    }

    fn word(&mut self) -> String {
        let start = self.offset();
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            self.bump();
        }
        let end = self.offset();
        self.src[start..end].to_string()
    }

    fn string(&mut self, quote: char) -> Result<String, SmlError> {
        let (line, column) = (self.line, self.column);
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.error(line, column, "unterminated string"));
                }
                Some(c) if c == quote => return Ok(out),
                Some('\\') => {
                    let (el, ec) = (self.line, self.column);
                    match self.bump() {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some(c @ ('"' | '\'' | '\\')) => out.push(c),
                        Some(other) => {
                            return Err(self.error(el, ec, format!("unknown escape '\\{other}'")));
                        }
                        None => return Err(self.error(line, column, "unterminated string")),
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn color(&mut self) -> Result<ColorRgba, SmlError> {
        let (line, column) = (self.line, self.column);
        self.bump();
        let start = self.offset();
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.bump();
        }
        let digits = &self.src[start..self.offset()];
        if !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(self.error(line, column, format!("'#{digits}' is not a HEX color")));
        }
        if digits.len() != 6 {
            return Err(self.error(
                line,
                column,
                format!("HEX color needs 6 digits, found {}", digits.len()),
            ));
        }
        Ok(ColorRgba::from_hex(&format!("#{digits}")).expect("six hex digits"))
    }

    fn number(&mut self) -> Result<f64, SmlError> {
        let (line, column) = (self.line, self.column);
        let start = self.offset();
        if matches!(self.peek(), Some('-' | '+')) {
            self.bump();
        }
        let mut digits = 0;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            digits += 1;
        }
        if digits == 0 {
            return Err(self.error(line, column, "expected digits"));
        }
        if self.peek() == Some('.') {
            self.bump();
            let mut frac = 0;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                frac += 1;
            }
            if frac == 0 {
                return Err(self.error(line, column, "expected digits after '.'"));
            }
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            let (l, c) = (self.line, self.column);
            return Err(self.error(l, c, "unexpected letter in number"));
        }
        let text = &self.src[start..self.offset()];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(line, column, format!("invalid number '{text}'")))?;
        if !value.is_finite() {
            return Err(self.error(line, column, format!("number '{text}' out of range")));
        }
        Ok(value)
    }

    fn vector(&mut self) -> Result<Vec3, SmlError> {
        let (line, column) = (self.line, self.column);
        self.bump();
        let mut parts = [0.0; 3];
        for (i, part) in parts.iter_mut().enumerate() {
            self.skip_blanks();
            if !matches!(self.peek(), Some('-' | '+' | '0'..='9')) {
                let (l, c) = (self.line, self.column);
                return Err(self.error(l, c, "expected number in vector"));
            }
            *part = self.number()?;
            self.skip_blanks();
            let expected = if i < 2 { ',' } else { ')' };
            if self.peek() != Some(expected) {
                let (l, c) = (self.line, self.column);
                return Err(self.error(
                    l,
                    c,
                    format!("expected '{expected}' in vector starting at {line}:{column}"),
                ));
            }
            self.bump();
        }
        Ok(Vec3::new(parts[0], parts[1], parts[2]))
    }
}

/// Splits source text into tokens. Newlines terminate statements; `;`
/// comments run to end of line.
pub fn lex(src: &str) -> Result<Vec<Token>, SmlError> {
    Lexer::new(src).run()
}
