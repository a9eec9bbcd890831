//! Tokenizer for the clear-text exchange structure.
//!
//! Tokens keep their byte span into the source so the stream can be written
//! back out verbatim; string tokens also carry the decoded value.

use crate::error::{Position, StepError};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Standard or user-defined (`!NAME`) keyword. Also covers the
    /// `ISO-10303-21` / `END-ISO-10303-21` delimiters.
    Keyword(String),
    EntityRef(u64),
    Str(String),
    Enum(String),
    Integer(i64),
    Real(f64),
    Binary(String),
    Dollar,
    Star,
    LParen,
    RParen,
    Comma,
    Semicolon,
    Equals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn raw<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }
}

/// Maps a byte offset to a 1-based line/column pair.
pub fn position_of(src: &str, offset: usize) -> Position {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    Position {
        line,
        column: src[line_start..offset].chars().count() + 1,
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> StepError {
        StepError::Lexical {
            pos: position_of(self.src, offset),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), StepError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'/') if self.bytes.get(self.pos + 1) == Some(&b'*') => {
                    let start = self.pos;
                    match self.src[self.pos + 2..].find("*/") {
                        Some(i) => self.pos += i + 4,
                        None => return Err(self.error(start, "unterminated comment")),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, StepError> {
        self.skip_trivia()?;
        let start = self.pos;
        let Some(b) = self.peek() else {
            return Ok(None);
        };
        let kind = match b {
            b'(' => self.single(TokenKind::LParen),
            b')' => self.single(TokenKind::RParen),
            b',' => self.single(TokenKind::Comma),
            b';' => self.single(TokenKind::Semicolon),
            b'=' => self.single(TokenKind::Equals),
            b'$' => self.single(TokenKind::Dollar),
            b'*' => self.single(TokenKind::Star),
            b'#' => self.entity_ref()?,
            b'\'' => self.string()?,
            b'"' => self.binary()?,
            b'.' if self
                .bytes
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphabetic() || *c == b'_') =>
            {
                self.enumeration()?
            }
            b'+' | b'-' | b'0'..=b'9' | b'.' => self.number()?,
            b'!' | b'A'..=b'Z' | b'a'..=b'z' | b'_' => self.keyword(),
            _ => {
                let c = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.error(start, format!("unexpected character {c:?}")));
            }
        };
        Ok(Some(Token {
            kind,
            start,
            end: self.pos,
        }))
    }

    fn single(&mut self, kind: TokenKind) -> TokenKind {
        self.pos += 1;
        kind
    }

    fn entity_ref(&mut self) -> Result<TokenKind, StepError> {
        let start = self.pos;
        self.pos += 1;
        let digits_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.error(start, "`#` must be followed by an instance number"));
        }
        self.src[digits_start..self.pos]
            .parse()
            .map(TokenKind::EntityRef)
            .map_err(|_| self.error(start, "instance number out of range"))
    }

    fn keyword(&mut self) -> TokenKind {
        let start = self.pos;
        self.pos += 1;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        {
            self.pos += 1;
        }
        TokenKind::Keyword(self.src[start..self.pos].to_string())
    }

    fn enumeration(&mut self) -> Result<TokenKind, StepError> {
        let start = self.pos;
        self.pos += 1;
        let name_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        if self.peek() != Some(b'.') {
            return Err(self.error(start, "unterminated enumeration"));
        }
        let name = self.src[name_start..self.pos].to_string();
        self.pos += 1;
        Ok(TokenKind::Enum(name))
    }

    fn number(&mut self) -> Result<TokenKind, StepError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let int_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        let mut real = false;
        if self.pos == int_start {
            return Err(self.error(start, "malformed number"));
        }
        if self.peek() == Some(b'.') {
            real = true;
            self.pos += 1;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'E' | b'e')) {
            real = true;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                return Err(self.error(start, "malformed exponent"));
            }
        }
        let text = &self.src[start..self.pos];
        if real {
            // Rust does not accept a bare trailing dot before an exponent ("1.E3")
            let normalized = text.replacen(".E", ".0E", 1).replacen(".e", ".0e", 1);
            normalized
                .parse::<f64>()
                .map(TokenKind::Real)
                .map_err(|_| self.error(start, format!("malformed real `{text}`")))
        } else {
            text.parse::<i64>()
                .map(TokenKind::Integer)
                .map_err(|_| self.error(start, format!("integer `{text}` out of range")))
        }
    }

    fn binary(&mut self) -> Result<TokenKind, StepError> {
        let start = self.pos;
        self.pos += 1;
        let body_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_hexdigit()) {
            self.pos += 1;
        }
        if self.peek() != Some(b'"') {
            return Err(self.error(start, "malformed binary literal"));
        }
        let body = self.src[body_start..self.pos].to_string();
        self.pos += 1;
        Ok(TokenKind::Binary(body))
    }

    fn string(&mut self) -> Result<TokenKind, StepError> {
        let start = self.pos;
        self.pos += 1;
        let body_start = self.pos;
        loop {
            match self.peek() {
                None => return Err(self.error(start, "unterminated string")),
                Some(b'\'') if self.bytes.get(self.pos + 1) == Some(&b'\'') => self.pos += 2,
                Some(b'\'') => break,
                Some(_) => {
                    let c = self.src[self.pos..].chars().next().expect("in bounds");
                    self.pos += c.len_utf8();
                }
            }
        }
        let body = &self.src[body_start..self.pos];
        self.pos += 1;
        decode_string(body)
            .map(TokenKind::Str)
            .map_err(|(off, msg)| self.error(body_start + off, msg))
    }
}

fn hex_value(s: &str) -> Option<u32> {
    u32::from_str_radix(s, 16).ok()
}

/// Decodes the control directives of a string body (`''`, `\\`, `\S\`,
/// `\X\`, `\X2\`, `\X4\`, `\P?\`). Errors carry a byte offset into `body`.
pub fn decode_string(body: &str) -> Result<String, (usize, String)> {
    let mut out = String::with_capacity(body.len());
    let b = body.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'\'' => {
                // doubled quote; the lexer guarantees the pair
                out.push('\'');
                i += 2;
            }
            b'\\' => {
                let rest = &body[i..];
                if rest.starts_with("\\\\") {
                    out.push('\\');
                    i += 2;
                } else if rest.starts_with("\\S\\") {
                    let c = body[i + 3..]
                        .chars()
                        .next()
                        .ok_or((i, "dangling \\S\\ directive".to_string()))?;
                    let code = c as u32 + 128;
                    out.push(char::from_u32(code).ok_or((i, "invalid \\S\\ character".to_string()))?);
                    i += 3 + c.len_utf8();
                } else if rest.len() >= 4 && rest.starts_with("\\P") && rest.as_bytes()[3] == b'\\' {
                    // code page switch, only meaningful with \S\
                    i += 4;
                } else if rest.starts_with("\\X2\\") || rest.starts_with("\\X4\\") {
                    let width = if rest.starts_with("\\X2\\") { 4 } else { 8 };
                    let end = rest
                        .find("\\X0\\")
                        .ok_or((i, "unterminated \\X2\\/\\X4\\ directive".to_string()))?;
                    let hex = &rest[4..end];
                    if !hex.len().is_multiple_of(width) {
                        return Err((i, "odd-length \\X2\\/\\X4\\ payload".to_string()));
                    }
                    let units: Vec<u32> = hex
                        .as_bytes()
                        .chunks(width)
                        .map(|c| std::str::from_utf8(c).ok().and_then(hex_value))
                        .collect::<Option<_>>()
                        .ok_or((i, "invalid hex in \\X2\\/\\X4\\ directive".to_string()))?;
                    if width == 4 {
                        let u16s: Vec<u16> = units.iter().map(|&u| u as u16).collect();
                        out.push_str(
                            &String::from_utf16(&u16s).map_err(|_| (i, "invalid UTF-16 in \\X2\\".to_string()))?,
                        );
                    } else {
                        for u in units {
                            out.push(char::from_u32(u).ok_or((i, "invalid code point".to_string()))?);
                        }
                    }
                    i += end + 4;
                } else if rest.starts_with("\\X\\") {
                    let code = rest
                        .get(3..5)
                        .and_then(hex_value)
                        .ok_or((i, "invalid \\X\\ directive".to_string()))?;
                    out.push(char::from_u32(code).expect("byte value"));
                    i += 5;
                } else {
                    return Err((i, "unknown control directive".to_string()));
                }
            }
            _ => {
                let c = body[i..].chars().next().expect("in bounds");
                out.push(c);
                i += c.len_utf8();
            }
        }
    }
    Ok(out)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, StepError> {
    let mut lexer = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
    };
    let mut out = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        out.push(tok);
    }
    Ok(out)
}

/// Decodes file bytes: UTF-8 when valid, otherwise ISO 8859-1.
pub fn decode_bytes(bytes: &[u8]) -> std::borrow::Cow<'_, str> {
    match std::str::from_utf8(bytes) {
        Ok(s) => std::borrow::Cow::Borrowed(s),
        Err(_) => std::borrow::Cow::Owned(bytes.iter().map(|&b| b as char).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn basic_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds("#12=CARTESIAN_POINT('',(0.,-1.5,2.E-3));"),
            vec![
                EntityRef(12),
                Equals,
                Keyword("CARTESIAN_POINT".into()),
                LParen,
                Str(String::new()),
                Comma,
                LParen,
                Real(0.0),
                Comma,
                Real(-1.5),
                Comma,
                Real(0.002),
                RParen,
                RParen,
                Semicolon
            ]
        );
        assert_eq!(
            kinds("(.T.,$,*,\"0F\",42) /* c */ ISO-10303-21"),
            vec![
                LParen,
                Enum("T".into()),
                Comma,
                Dollar,
                Comma,
                Star,
                Comma,
                Binary("0F".into()),
                Comma,
                Integer(42),
                RParen,
                Keyword("ISO-10303-21".into())
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(decode_string("it''s").unwrap(), "it's");
        assert_eq!(decode_string("a\\\\b").unwrap(), "a\\b");
        assert_eq!(decode_string("\\X\\E4").unwrap(), "ä");
        assert_eq!(decode_string("\\X2\\00E400F6\\X0\\").unwrap(), "äö");
        assert_eq!(decode_string("\\X4\\0001F600\\X0\\").unwrap(), "😀");
        assert_eq!(decode_string("\\PA\\\\S\\d").unwrap(), "ä");
        assert!(decode_string("\\Q\\").is_err());
        assert!(decode_string("\\X2\\00E4").is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let err = tokenize("#1=A(\n  'ok', @);").unwrap_err();
        match err {
            StepError::Lexical { pos, .. } => assert_eq!((pos.line, pos.column), (2, 9)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(tokenize("#1=A('open);"), Err(StepError::Lexical { .. })));
        assert!(matches!(tokenize("/* never closed"), Err(StepError::Lexical { .. })));
    }

    #[test]
    fn latin1_fallback() {
        let bytes = b"'Gr\xf6\xdfe'";
        assert_eq!(decode_bytes(bytes), "'Größe'");
    }
}
