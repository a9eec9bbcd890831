//! Text normalization and sentence segmentation.
//!
//! Offsets are character (Unicode scalar) positions in the normalized text.

use unicode_normalization::UnicodeNormalization;
use workbench_core::{DocFormat, Model, Span, Uid};

use crate::error::DocError;

const ABBREVIATIONS: &[&str] = &["e.g", "i.e", "etc", "vs", "cf", "approx", "fig"];

/// Decodes UTF-8, drops a leading BOM, converts CRLF/CR to LF and applies NFC.
pub fn normalize(raw: &[u8]) -> Result<String, DocError> {
    let text = std::str::from_utf8(raw).map_err(|e| DocError::InvalidEncoding {
        offset: e.valid_up_to(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let text: String = text.nfc().collect();
    if text.trim().is_empty() {
        return Err(DocError::EmptyDocument);
    }
    Ok(text)
}

/// Length of the Markdown block marker at the start of a line (indentation,
/// `#`, `>`, list bullets and ordered-list numbers) and whether the marker
/// makes the line a unit of its own (headings and list items).
fn markdown_prefix(line: &[char]) -> (usize, bool) {
    let mut i = 0;
    let mut standalone = false;
    loop {
        while i < line.len() && (line[i] == ' ' || line[i] == '\t') {
            i += 1;
        }
        let rest = &line[i..];
        let spaced = |n: usize| rest.get(n).is_some_and(|c| *c == ' ' || *c == '\t');
        if rest.first() == Some(&'>') {
            i += 1;
            continue;
        }
        let hashes = rest.iter().take_while(|c| **c == '#').count();
        if (1..=6).contains(&hashes) && (spaced(hashes) || hashes == rest.len()) {
            return (i + hashes, true);
        }
        if matches!(rest.first(), Some('-' | '*' | '+')) && spaced(1) {
            i += 1;
            standalone = true;
            continue;
        }
        let digits = rest.iter().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 && digits <= 9 && matches!(rest.get(digits), Some('.' | ')')) && spaced(digits + 1) {
            i += digits + 1;
            standalone = true;
            continue;
        }
        return (i, standalone);
    }
}

fn is_fence(line: &[char]) -> bool {
    let s: String = line.iter().collect();
    let t = s.trim_start();
    t.starts_with("```") || t.starts_with("~~~")
}

fn is_table_rule(line: &[char]) -> bool {
    let s: String = line.iter().collect();
    let t = s.trim();
    t.starts_with('|') && t.chars().all(|c| matches!(c, '|' | '-' | ':' | ' '))
}

/// True when the `.` at `dot` closes one of the guarded abbreviations.
fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut start = dot;
    while start > 0 && (chars[start - 1].is_alphanumeric() || chars[start - 1] == '.') {
        start -= 1;
    }
    let word: String = chars[start..dot].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

struct Segmenter<'a> {
    chars: &'a [char],
    spans: Vec<Span>,
    open: Option<usize>,
}

impl Segmenter<'_> {
    /// Closes the open sentence at `end` (exclusive), trimming trailing
    /// whitespace and discarding fragments without letters.
    fn close(&mut self, end: usize) {
        let Some(start) = self.open.take() else {
            return;
        };
        let mut end = end;
        while end > start && self.chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if self.chars[start..end].iter().any(|c| c.is_alphabetic()) {
            self.spans.push(Span::new(start, end));
        }
    }

    fn scan(&mut self, from: usize, to: usize) {
        let c = self.chars;
        let mut i = from;
        while i < to {
            let ch = c[i];
            if self.open.is_none() {
                if !ch.is_whitespace() {
                    self.open = Some(i);
                }
            } else if matches!(ch, '.' | '?' | '!') {
                let mut end = i + 1;
                while end < c.len() && matches!(c[end], '.' | '?' | '!') {
                    end += 1;
                }
                while end < c.len() && matches!(c[end], '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                    end += 1;
                }
                let boundary = end >= c.len() || c[end].is_whitespace();
                if boundary && !(ch == '.' && end == i + 1 && is_abbreviation(c, i)) {
                    self.close(end);
                    i = end;
                    continue;
                }
            }
            i += 1;
        }
    }
}

/// Sentence spans of `text`. Sentences end at `.`, `?` or `!` followed by
/// whitespace, at blank lines, and (Markdown) at the end of headings and list
/// items; block markers are left outside the spans.
pub fn segment(text: &str, format: DocFormat) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut seg = Segmenter {
        chars: &chars,
        spans: Vec::new(),
        open: None,
    };
    let mut in_fence = false;
    let mut line_start = 0;
    while line_start <= chars.len() {
        let line_end = chars[line_start..]
            .iter()
            .position(|c| *c == '\n')
            .map_or(chars.len(), |p| line_start + p);
        let line = &chars[line_start..line_end];
        if line.iter().all(|c| c.is_whitespace()) {
            seg.close(line_start);
        } else if format == DocFormat::Markdown {
            if is_fence(line) {
                seg.close(line_start);
                in_fence = !in_fence;
            } else if !in_fence && !is_table_rule(line) {
                let (skip, standalone) = markdown_prefix(line);
                let standalone = standalone || line.iter().find(|c| !c.is_whitespace()) == Some(&'|');
                if skip > 0 || standalone {
                    seg.close(line_start);
                }
                seg.scan(line_start + skip, line_end);
                if standalone {
                    seg.close(line_end);
                }
            }
        } else {
            seg.scan(line_start, line_end);
        }
        line_start = line_end + 1;
    }
    seg.close(chars.len());
    seg.spans
}

/// Normalizes and segments a document and registers it in the model.
pub fn ingest_document(model: &mut Model, title: &str, raw: &[u8], format: DocFormat) -> Result<Uid, DocError> {
    let text = normalize(raw)?;
    let sentences = segment(&text, format);
    Ok(model.add_document(title, text, format, sentences)?)
}
