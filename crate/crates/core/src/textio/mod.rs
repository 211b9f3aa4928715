//! Conversion between formal theories and their English surface forms.
//!
//! Every sentence follows a fixed template, so rendering and parsing are
//! exact inverses: `parse_*` re-renders what it read and rejects any
//! sentence whose canonical rendering differs from the input.

mod parse;
mod render;
mod vocab;

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::rules::RuleError;

pub use parse::{parse_bare_rule, parse_fact, parse_hypothesis, parse_rule};
pub use render::{format_percent, render_context, render_fact, render_hypothesis, render_rule, RuleStyle};
pub use vocab::{Vocabulary, VocabularyEntry, BUILTIN_VOCABULARY};

/// Most premises a rule sentence may carry.
pub const MAX_PREMISES: usize = 3;

/// A sentence that does not match any template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub sentence: String,
    /// Byte range of the offending part of `sentence`.
    pub span: Range<usize>,
}

impl ParseError {
    pub(crate) fn new(sentence: &str, span: Range<usize>, message: impl Into<String>) -> Self {
        let end = span.end.min(sentence.len());
        let start = span.start.min(end);
        ParseError { message: message.into(), sentence: sentence.to_string(), span: start..end }
    }

    pub fn offending(&self) -> &str {
        self.sentence.get(self.span.clone()).unwrap_or("")
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at bytes {}..{} (`{}`) in \"{}\"",
            self.message,
            self.span.start,
            self.span.end,
            self.offending(),
            self.sentence
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextError {
    #[error("predicate `{0}` is not in the vocabulary")]
    UnknownPredicate(String),
    #[error("adverb style requested for a rule without an adverb")]
    MissingAdverb,
    #[error("rule has {0} premises; at most {MAX_PREMISES} can be rendered")]
    TooManyPremises(usize),
    #[error("vocabulary line {line}: {message}")]
    Vocabulary { line: usize, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

pub type Result<T, E = TextError> = std::result::Result<T, E>;
