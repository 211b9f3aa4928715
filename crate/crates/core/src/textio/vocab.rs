use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Result, TextError};
use crate::rules::{Arity, Predicate};

/// Attribute words in the RuleTaker style plus a small family-relations
/// vocabulary.
pub const BUILTIN_VOCABULARY: &str = "\
# predicate  arity  phrase
Big          1      big
Blue         1      blue
Cold         1      cold
Furry        1      furry
Green        1      green
Kind         1      kind
Nice         1      nice
Quiet        1      quiet
Red          1      red
Rough        1      rough
Round        1      round
Sad          1      sad
Smart        1      smart
White        1      white
Young        1      young
Rich         1      rich
Cousin       2      a cousin of
Spouse       2      a spouse of
Child        2      a child of
Parent       2      the parent of
Sibling      2      a sibling of
Grandparent  2      a grandparent of
Relative     2      a relative of
Friend       2      a friend of
";

/// Words that structure rule sentences and may not appear in a phrase.
const RESERVED: &[&str] = &["and", "then", "if", "is", "are", "someone", "they", "with"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyEntry {
    pub predicate: Predicate,
    /// `big` renders `X is big.`; `a cousin of` renders `X is a cousin of Y.`
    pub phrase: String,
}

/// Predicate → template table. Phrases are unique and no phrase is a
/// word-prefix of another, so sentence parsing is unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VocabularyEntry>", into = "Vec<VocabularyEntry>")]
pub struct Vocabulary {
    entries: Vec<VocabularyEntry>,
    #[serde(skip)]
    by_name: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn builtin() -> Self {
        Vocabulary::parse(BUILTIN_VOCABULARY).expect("builtin vocabulary is well formed")
    }

    /// Reads the plain-text table: `Name arity phrase words...`, one per
    /// line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| TextError::Vocabulary { line: i + 1, message };
            let mut fields = line.split_whitespace();
            let name = fields.next().unwrap_or_default();
            let arity: usize = fields
                .next()
                .ok_or_else(|| err("missing arity".into()))?
                .parse()
                .map_err(|_| err("arity is not an integer".into()))?;
            let phrase = fields.collect::<Vec<_>>().join(" ");
            let predicate = Predicate::new(name, arity).map_err(|e| err(e.to_string()))?;
            entries.push(VocabularyEntry { predicate, phrase });
        }
        Vocabulary::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<VocabularyEntry>) -> Result<Self> {
        let mut by_name = BTreeMap::new();
        for (i, entry) in entries.iter().enumerate() {
            let err = |message: String| TextError::Vocabulary { line: i + 1, message };
            if entry.phrase.is_empty() {
                return Err(err(format!("empty phrase for `{}`", entry.predicate.name())));
            }
            for word in entry.phrase.split(' ') {
                let ok = !word.is_empty() && word.bytes().all(|b| b.is_ascii_lowercase());
                if !ok || RESERVED.contains(&word) {
                    return Err(err(format!("phrase word `{word}` is not allowed")));
                }
            }
            if by_name.insert(entry.predicate.name().to_string(), i).is_some() {
                return Err(err(format!("duplicate predicate `{}`", entry.predicate.name())));
            }
            for (j, other) in entries[..i].iter().enumerate() {
                let clash = other.phrase == entry.phrase
                    || other.phrase.starts_with(&format!("{} ", entry.phrase))
                    || entry.phrase.starts_with(&format!("{} ", other.phrase));
                if clash {
                    return Err(err(format!("phrase `{}` is ambiguous with line {}", entry.phrase, j + 1)));
                }
            }
        }
        Ok(Vocabulary { entries, by_name })
    }

    pub fn entries(&self) -> &[VocabularyEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&VocabularyEntry> {
        self.by_name.get(name).map(|&i| &self.entries[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Phrase for `predicate`, checking that the arity agrees.
    pub fn phrase(&self, predicate: &Predicate) -> Result<&str> {
        match self.get(predicate.name()) {
            Some(e) if e.predicate.arity() == predicate.arity() => Ok(&e.phrase),
            _ => Err(TextError::UnknownPredicate(predicate.name().to_string())),
        }
    }

    pub fn attributes(&self) -> impl Iterator<Item = &Predicate> {
        self.entries.iter().map(|e| &e.predicate).filter(|p| p.arity() == Arity::Unary)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Predicate> {
        self.entries.iter().map(|e| &e.predicate).filter(|p| p.arity() == Arity::Binary)
    }

    pub(crate) fn unary_by_phrase(&self, phrase: &str) -> Option<&Predicate> {
        self.entries.iter().find(|e| e.predicate.arity() == Arity::Unary && e.phrase == phrase).map(|e| &e.predicate)
    }

    /// Splits `rest` into a binary phrase and the object word after it.
    pub(crate) fn binary_prefix<'a>(&self, rest: &'a str) -> Option<(&Predicate, &'a str)> {
        self.entries.iter().filter(|e| e.predicate.arity() == Arity::Binary).find_map(|e| {
            let tail = rest.strip_prefix(e.phrase.as_str())?.strip_prefix(' ')?;
            Some((&e.predicate, tail))
        })
    }
}

impl TryFrom<Vec<VocabularyEntry>> for Vocabulary {
    type Error = TextError;

    fn try_from(entries: Vec<VocabularyEntry>) -> Result<Self> {
        Vocabulary::from_entries(entries)
    }
}

impl From<Vocabulary> for Vec<VocabularyEntry> {
    fn from(v: Vocabulary) -> Self {
        v.entries
    }
}

impl fmt::Display for Vocabulary {
    /// Writes the plain-text table accepted by [`Vocabulary::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# predicate  arity  phrase")?;
        for e in &self.entries {
            writeln!(f, "{:<12} {}      {}", e.predicate.name(), e.predicate.arity().count(), e.phrase)?;
        }
        Ok(())
    }
}
