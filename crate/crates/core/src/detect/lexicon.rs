use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{lemmatize, DetectError};
use crate::LineDiagnostic;

/// Coarse ACE event categories used to annotate extracted events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventType {
    Life,
    Transportation,
    Personnel,
    Conflict,
    Justice,
    Transaction,
    Contact,
}

impl EventType {
    pub const ALL: [EventType; 7] = [
        EventType::Life,
        EventType::Transportation,
        EventType::Personnel,
        EventType::Conflict,
        EventType::Justice,
        EventType::Transaction,
        EventType::Contact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Life => "Life",
            EventType::Transportation => "Transportation",
            EventType::Personnel => "Personnel",
            EventType::Conflict => "Conflict",
            EventType::Justice => "Justice",
            EventType::Transaction => "Transaction",
            EventType::Contact => "Contact",
        }
    }

    /// Marker printed next to tagged events in reports.
    pub fn symbol(self) -> char {
        match self {
            EventType::Life => '◆',
            EventType::Transportation => '♥',
            EventType::Personnel => '⊕',
            EventType::Conflict => '▲',
            EventType::Justice => '■',
            EventType::Transaction => '✱',
            EventType::Contact => '△',
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "life" => Ok(EventType::Life),
            "transportation" | "movement" => Ok(EventType::Transportation),
            "personnel" => Ok(EventType::Personnel),
            "conflict" => Ok(EventType::Conflict),
            "justice" => Ok(EventType::Justice),
            "transaction" => Ok(EventType::Transaction),
            "contact" => Ok(EventType::Contact),
            other => Err(format!("unknown event type tag {other:?}")),
        }
    }
}

/// The set of lemmas treated as event triggers, plus optional type tags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriggerLexicon {
    entries: BTreeSet<String>,
    type_map: BTreeMap<String, EventType>,
}

impl TriggerLexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TriggerLexicon {
            entries: entries.into_iter().map(|e| e.as_ref().to_lowercase()).collect(),
            type_map: BTreeMap::new(),
        }
    }

    pub fn with_type(mut self, lemma: &str, tag: EventType) -> Self {
        let lemma = lemma.to_lowercase();
        self.entries.insert(lemma.clone());
        self.type_map.insert(lemma, tag);
        self
    }

    /// Parses one lemma per line with an optional tab-separated type tag.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, DetectError> {
        let mut lex = TriggerLexicon::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let lemma = cols.next().unwrap_or("").trim().to_lowercase();
            if lemma.is_empty() || lemma.contains(char::is_whitespace) {
                errors.push(LineDiagnostic { line: i + 1, message: format!("invalid lemma {lemma:?} (single tokens only)") });
                continue;
            }
            if lemmatize(&lemma) != lemma {
                log::warn!("lexicon line {}: {lemma:?} is not in lemma form (lemmatizes to {:?})", i + 1, lemmatize(&lemma));
            }
            if let Some(tag) = cols.next().map(str::trim).filter(|t| !t.is_empty()) {
                match tag.parse::<EventType>() {
                    Ok(t) => {
                        lex.type_map.insert(lemma.clone(), t);
                    }
                    Err(e) => errors.push(LineDiagnostic { line: i + 1, message: e }),
                }
            }
            lex.entries.insert(lemma);
        }
        if errors.is_empty() {
            Ok(lex)
        } else {
            Err(DetectError::Lexicon(errors))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DetectError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DetectError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// The bundled lexicon: event nouns and verbs, with type tags.
    pub fn bundled() -> Self {
        Self::parse(crate::resources::LEXICON).expect("bundled lexicon parses")
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.entries.contains(lemma)
    }

    pub fn entries(&self) -> &BTreeSet<String> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn type_of(&self, lemma: &str) -> Option<EventType> {
        self.type_map.get(lemma).copied()
    }
}

/// Type tag for an event lemma, `None` when the lexicon does not tag it.
pub fn tag_event_type(lemma: &str, lexicon: &TriggerLexicon) -> Option<EventType> {
    lexicon.type_of(lemma)
}
