//! Syntactic layer: header and data sections into an instance table.

use std::collections::BTreeMap;

use crate::error::{Position, StepError};
use crate::lexer::{position_of, tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    /// `$`
    Unset,
    /// `*`
    Derived,
    Ref(u64),
    Int(i64),
    Real(f64),
    Str(String),
    Enum(String),
    Binary(String),
    List(Vec<Param>),
    /// Typed value such as `LENGTH_MEASURE(2.5)`.
    Typed(String, Box<Param>),
}

impl Param {
    pub fn as_ref_id(&self) -> Option<u64> {
        match self {
            Param::Ref(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Param::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Param]> {
        match self {
            Param::List(items) => Some(items),
            _ => None,
        }
    }

    /// Numeric value, looking through a typed wrapper.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Param::Int(i) => Some(*i as f64),
            Param::Real(r) => Some(*r),
            Param::Typed(_, inner) => inner.as_f64(),
            _ => None,
        }
    }

    fn collect_refs(&self, out: &mut Vec<u64>) {
        match self {
            Param::Ref(id) => out.push(*id),
            Param::List(items) => items.iter().for_each(|p| p.collect_refs(out)),
            Param::Typed(_, inner) => inner.collect_refs(out),
            _ => {}
        }
    }
}

/// One `NAME(params)` record. Simple instances have one; complex instances
/// (`#1=(A() B(...));`) have several.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: u64,
    pub records: Vec<Record>,
    pub complex: bool,
    pub pos: Position,
}

impl Entity {
    /// First record of the given type, case-insensitive.
    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name.eq_ignore_ascii_case(name))
    }

    pub fn is(&self, name: &str) -> bool {
        self.record(name).is_some()
    }

    /// Type name of a simple instance.
    pub fn type_name(&self) -> &str {
        &self.records[0].name
    }

    pub fn refs(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for r in &self.records {
            r.params.iter().for_each(|p| p.collect_refs(&mut out));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub description: Vec<String>,
    pub file_name: String,
    pub timestamp: String,
    pub schema: Vec<String>,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub header: Header,
    pub entities: BTreeMap<u64, Entity>,
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    refs: Vec<(u64, u64, usize)>,
    current: u64,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.src.len(), |t| t.start)
    }

    fn error(&self, message: impl Into<String>) -> StepError {
        StepError::Syntax {
            pos: position_of(self.src, self.offset()),
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<TokenKind> {
        let t = self.tokens.get(self.pos).map(|t| t.kind.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: TokenKind, what: &str) -> Result<(), StepError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(k)) if k.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self) -> Result<String, StepError> {
        match self.peek() {
            Some(TokenKind::Keyword(k)) => {
                let k = k.clone();
                self.pos += 1;
                Ok(k)
            }
            _ => Err(self.error("expected keyword")),
        }
    }

    fn param(&mut self) -> Result<Param, StepError> {
        let offset = self.offset();
        let Some(tok) = self.bump() else {
            return Err(self.error("unexpected end of file in parameter list"));
        };
        Ok(match tok {
            TokenKind::Dollar => Param::Unset,
            TokenKind::Star => Param::Derived,
            TokenKind::EntityRef(id) => {
                self.refs.push((id, self.current, offset));
                Param::Ref(id)
            }
            TokenKind::Integer(i) => Param::Int(i),
            TokenKind::Real(r) => Param::Real(r),
            TokenKind::Str(s) => Param::Str(s),
            TokenKind::Enum(e) => Param::Enum(e),
            TokenKind::Binary(b) => Param::Binary(b),
            TokenKind::LParen => {
                self.pos -= 1;
                Param::List(self.param_list()?)
            }
            TokenKind::Keyword(name) => {
                self.expect(TokenKind::LParen, "`(` after typed parameter")?;
                let inner = self.param()?;
                self.expect(TokenKind::RParen, "`)` closing typed parameter")?;
                Param::Typed(name, Box::new(inner))
            }
            _ => {
                self.pos -= 1;
                return Err(self.error("expected parameter"));
            }
        })
    }

    fn param_list(&mut self) -> Result<Vec<Param>, StepError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut out = Vec::new();
        if self.peek() == Some(&TokenKind::RParen) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.param()?);
            match self.peek() {
                Some(TokenKind::Comma) => self.pos += 1,
                Some(TokenKind::RParen) => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.error("expected `,` or `)` in parameter list")),
            }
        }
    }

    fn record(&mut self) -> Result<Record, StepError> {
        let name = self.keyword()?;
        let params = self.param_list()?;
        Ok(Record { name, params })
    }

    fn header(&mut self) -> Result<Header, StepError> {
        if !self.at_keyword("ISO-10303-21") {
            return Err(StepError::MissingHeader(
                "file does not start with ISO-10303-21;".into(),
            ));
        }
        self.pos += 1;
        self.expect(TokenKind::Semicolon, "`;`")?;
        if !self.at_keyword("HEADER") {
            return Err(StepError::MissingHeader("no HEADER section".into()));
        }
        self.pos += 1;
        self.expect(TokenKind::Semicolon, "`;`")?;
        let mut header = Header::default();
        while !self.at_keyword("ENDSEC") {
            if self.peek().is_none() {
                return Err(StepError::MissingHeader("HEADER section not closed".into()));
            }
            let rec = self.record()?;
            self.expect(TokenKind::Semicolon, "`;` after header entity")?;
            header.records.push(rec);
        }
        self.pos += 1;
        self.expect(TokenKind::Semicolon, "`;`")?;

        let strings = |p: Option<&Param>| -> Vec<String> {
            p.and_then(Param::as_list)
                .map(|l| l.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
                .unwrap_or_default()
        };
        let find = |n: &str| header.records.iter().find(|r| r.name.eq_ignore_ascii_case(n));
        let name = find("FILE_NAME").ok_or_else(|| StepError::MissingHeader("FILE_NAME entity absent".into()))?;
        let file_name = name.params.first().and_then(Param::as_str).unwrap_or("").to_string();
        let timestamp = name.params.get(1).and_then(Param::as_str).unwrap_or("").to_string();
        let schema = find("FILE_SCHEMA").ok_or_else(|| StepError::MissingHeader("FILE_SCHEMA entity absent".into()))?;
        let schema = strings(schema.params.first());
        let description = strings(find("FILE_DESCRIPTION").and_then(|r| r.params.first()));
        Ok(Header {
            description,
            file_name,
            timestamp,
            schema,
            ..header
        })
    }

    fn data_section(&mut self, entities: &mut BTreeMap<u64, Entity>) -> Result<(), StepError> {
        self.pos += 1; // DATA
        if self.peek() == Some(&TokenKind::LParen) {
            self.param_list()?;
        }
        self.expect(TokenKind::Semicolon, "`;` after DATA")?;
        loop {
            let offset = self.offset();
            match self.bump() {
                Some(TokenKind::Keyword(k)) if k.eq_ignore_ascii_case("ENDSEC") => {
                    return self.expect(TokenKind::Semicolon, "`;` after ENDSEC");
                }
                Some(TokenKind::EntityRef(id)) => {
                    let pos = position_of(self.src, offset);
                    self.expect(TokenKind::Equals, "`=` after instance name")?;
                    self.current = id;
                    let (records, complex) = if self.peek() == Some(&TokenKind::LParen) {
                        self.pos += 1;
                        let mut recs = Vec::new();
                        while self.peek() != Some(&TokenKind::RParen) {
                            if self.peek().is_none() {
                                return Err(self.error("unterminated complex instance"));
                            }
                            recs.push(self.record()?);
                        }
                        self.pos += 1;
                        if recs.is_empty() {
                            return Err(self.error("empty complex instance"));
                        }
                        (recs, true)
                    } else {
                        (vec![self.record()?], false)
                    };
                    self.expect(TokenKind::Semicolon, "`;` after instance")?;
                    if entities.contains_key(&id) {
                        return Err(StepError::DuplicateInstance { id, pos });
                    }
                    entities.insert(
                        id,
                        Entity {
                            id,
                            records,
                            complex,
                            pos,
                        },
                    );
                }
                None => return Err(self.error("DATA section not closed")),
                Some(_) => {
                    self.pos -= 1;
                    return Err(self.error("expected instance name `#n`"));
                }
            }
        }
    }
}

/// Parses the clear-text encoding into header and instance table, checking
/// that every reference resolves.
pub fn parse_exchange(src: &str) -> Result<Exchange, StepError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        src,
        tokens,
        pos: 0,
        refs: Vec::new(),
        current: 0,
    };
    let header = p.header()?;
    let mut entities = BTreeMap::new();
    while p.at_keyword("DATA") {
        p.data_section(&mut entities)?;
    }
    if !p.at_keyword("END-ISO-10303-21") {
        return Err(p.error("expected DATA section or END-ISO-10303-21"));
    }
    p.pos += 1;
    p.expect(TokenKind::Semicolon, "`;` after END-ISO-10303-21")?;
    if p.peek().is_some() {
        return Err(p.error("content after END-ISO-10303-21"));
    }
    for &(target, from, offset) in &p.refs {
        if !entities.contains_key(&target) {
            return Err(StepError::UnresolvedReference {
                target,
                from,
                pos: position_of(src, offset),
            });
        }
    }
    Ok(Exchange { header, entities })
}

/// Byte range of the DATA sections' contents (after the first `DATA;`,
/// up to the final `ENDSEC;`), or `None` when absent.
pub fn data_section_range(src: &str) -> Option<std::ops::Range<usize>> {
    let tokens = tokenize(src).ok()?;
    let is_kw = |t: &Token, k: &str| matches!(&t.kind, TokenKind::Keyword(x) if x.eq_ignore_ascii_case(k));
    let data = tokens.iter().position(|t| is_kw(t, "DATA"))?;
    let semi = tokens[data..].iter().position(|t| t.kind == TokenKind::Semicolon)? + data;
    let end = tokens.iter().rposition(|t| is_kw(t, "ENDSEC"))?;
    (end > semi).then(|| tokens[semi].end..tokens[end].start)
}
