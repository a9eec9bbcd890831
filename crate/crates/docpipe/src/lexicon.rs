//! Word lists driving noun-phrase detection, plus the component vocabulary
//! with function tags. Shipped as data so domain teams can extend it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use workbench_core::Span;

use crate::error::DocError;

pub const MODALS: [&str; 4] = ["shall", "must", "will", "should"];

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.json");

/// Words that may sit between a modal and its verb.
pub const AUXILIARIES: [&str; 6] = ["not", "be", "also", "always", "only", "never"];

#[derive(Debug, Clone, Deserialize)]
pub struct Lexicon {
    stopwords: BTreeSet<String>,
    /// Component term (singular, lowercase) to function tags.
    components: BTreeMap<String, BTreeSet<String>>,
    nouns: BTreeSet<String>,
    modifiers: BTreeSet<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Break,
    Noun,
    Modifier,
}

/// A noun phrase found in a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMatch {
    /// Lowercased phrase, words joined by single spaces.
    pub term: String,
    /// Phrase as written.
    pub surface: String,
    /// Character span relative to the scanned text.
    pub span: Span,
}

struct Word {
    text: String,
    start: usize,
    end: usize,
    /// Only whitespace separates this word from the previous one.
    joined: bool,
}

fn words(text: &str) -> Vec<Word> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut last_end: Option<usize> = None;
    while i < chars.len() {
        if chars[i].is_alphabetic() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric()
                    || (matches!(chars[i], '-' | '\'') && chars.get(i + 1).is_some_and(|c| c.is_alphanumeric())))
            {
                i += 1;
            }
            let joined = last_end.is_some_and(|e| chars[e..start].iter().all(|c| c.is_whitespace()));
            out.push(Word {
                text: chars[start..i].iter().collect(),
                start,
                end: i,
                joined,
            });
            last_end = Some(i);
        } else if chars[i].is_numeric() {
            // digits break phrases and are not words
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '.') {
                i += 1;
            }
            last_end = None;
        } else {
            i += 1;
        }
    }
    out
}

fn is_acronym(w: &str) -> bool {
    w.chars().count() >= 2
        && w.chars().all(|c| c.is_uppercase() || c.is_ascii_digit() || c == '-')
        && w.chars().any(|c| c.is_alphabetic())
}

fn is_capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

/// English plural to singular for the final word of a phrase, leaving
/// acronyms alone.
pub fn singularize(term: &str) -> String {
    let (head_start, head) = match term.rfind(' ') {
        Some(i) => (i + 1, &term[i + 1..]),
        None => (0, term),
    };
    if is_acronym(head) {
        return term.to_string();
    }
    let lower = head.to_lowercase();
    let cut = if lower.ends_with("ies") && lower.len() > 4 {
        return format!("{}{}y", &term[..head_start], &head[..head.len() - 3]);
    } else if ["ches", "shes", "sses", "xes", "zes"]
        .iter()
        .any(|s| lower.ends_with(s))
    {
        2
    } else if lower.ends_with('s') && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s)) && lower.len() > 3 {
        1
    } else {
        0
    };
    format!("{}{}", &term[..head_start], &head[..head.len() - cut])
}

/// Title case preserving acronyms and hyphenated parts.
pub fn title_case(term: &str) -> String {
    term.split(' ')
        .map(|w| {
            if is_acronym(w) {
                return w.to_string();
            }
            w.split('-')
                .map(|part| {
                    let mut cs = part.chars();
                    match cs.next() {
                        Some(f) => f.to_uppercase().chain(cs.flat_map(char::to_lowercase)).collect(),
                        None => String::new(),
                    }
                })
                .collect::<Vec<String>>()
                .join("-")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self, DocError> {
        let mut lex: Lexicon = serde_json::from_str(text).map_err(|e| DocError::Lexicon(e.to_string()))?;
        lex.stopwords = lex.stopwords.iter().map(|w| w.to_lowercase()).collect();
        for m in MODALS {
            lex.stopwords.insert(m.to_string());
        }
        // component phrases feed the noun/modifier classes
        let comps: Vec<String> = lex.components.keys().cloned().collect();
        for c in comps {
            let parts: Vec<&str> = c.split(' ').collect();
            let (head, mods) = parts.split_last().expect("non-empty key");
            lex.nouns.insert(head.to_string());
            for m in mods {
                lex.modifiers.insert(m.to_string());
            }
        }
        Ok(lex)
    }

    pub fn is_stopword(&self, w: &str) -> bool {
        self.stopwords.contains(&w.to_lowercase())
    }

    fn is_noun(&self, lower: &str) -> bool {
        self.nouns.contains(lower) || self.nouns.contains(&singularize(lower))
    }

    fn classify(&self, w: &Word, sentence_initial: bool, after_modal: bool) -> Class {
        let lower = w.text.to_lowercase();
        if after_modal || self.stopwords.contains(&lower) {
            return Class::Break;
        }
        if self.is_noun(&lower) {
            return Class::Noun;
        }
        if self.modifiers.contains(&lower) {
            return Class::Modifier;
        }
        if is_acronym(&w.text) || (!sentence_initial && is_capitalized(&w.text)) {
            return Class::Noun;
        }
        Class::Break
    }

    /// Maximal runs of noun-like words, trimmed so every phrase ends in a
    /// noun. `text` is taken to start a sentence.
    pub fn terms(&self, text: &str) -> Vec<TermMatch> {
        let ws = words(text);
        let mut classes = Vec::with_capacity(ws.len());
        let mut verb_slot = false;
        for (i, w) in ws.iter().enumerate() {
            let lower = w.text.to_lowercase();
            let is_modal = MODALS.contains(&lower.as_str());
            let aux = AUXILIARIES.contains(&lower.as_str());
            classes.push(self.classify(w, i == 0, verb_slot && !aux));
            if is_modal {
                verb_slot = true;
            } else if !aux {
                verb_slot = false;
            }
        }
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < ws.len() {
            if classes[i] == Class::Break {
                i += 1;
                continue;
            }
            let start = i;
            let mut end = i + 1;
            while end < ws.len() && ws[end].joined && classes[end] != Class::Break {
                end += 1;
            }
            let mut last = end;
            while last > start && classes[last - 1] != Class::Noun {
                last -= 1;
            }
            if last > start {
                let span = Span::new(ws[start].start, ws[last - 1].end);
                let surface: String = chars[span.start..span.end].iter().collect();
                let term = ws[start..last]
                    .iter()
                    .map(|w| w.text.to_lowercase())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(TermMatch { term, surface, span });
            }
            i = end;
        }
        out
    }

    /// Component vocabulary entry for a phrase: the whole singular phrase,
    /// else its last two words, else its head noun.
    pub fn component_entry(&self, term: &str) -> Option<(&str, &BTreeSet<String>)> {
        let lower = term.to_lowercase();
        let singular = singularize(&lower);
        let words: Vec<&str> = singular.split(' ').collect();
        let mut candidates = vec![lower.clone(), singular.clone()];
        if words.len() > 2 {
            candidates.push(words[words.len() - 2..].join(" "));
        }
        candidates.push(words.last().copied().unwrap_or("").to_string());
        candidates
            .iter()
            .find_map(|c| self.components.get_key_value(c.as_str()))
            .map(|(k, v)| (k.as_str(), v))
    }
}

/// Whole-word, case-insensitive modal tokens in `text`, with their
/// character offsets, in order.
pub fn modal_tokens(text: &str) -> Vec<(String, usize)> {
    words(text)
        .into_iter()
        .filter_map(|w| {
            let lower = w.text.to_lowercase();
            MODALS.contains(&lower.as_str()).then_some((lower, w.start))
        })
        .collect()
}
