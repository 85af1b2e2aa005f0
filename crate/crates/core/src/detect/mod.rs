//! Event trigger detection, lemmatization and per-gender frequency tables.
//!
//! Detection is pluggable through [`EventDetector`]. The built-in
//! [`TriggerLexicon`] marks every token whose lemma is a lexicon entry;
//! output from an external extractor enters through
//! [`ingest_annotations`].

mod annotations;
mod frequency;
mod lemma;
mod lexicon;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{token_spans, Sentence};
use crate::error::{join_diagnostics, LineDiagnostic};

pub use annotations::{ingest_annotations, parse_annotations, write_annotations, AnnotationLine, SentenceIndex};
pub use frequency::{build_frequency_tables, select_documents, FrequencyTable, FrequencyTables, SliceFilter};
pub use lemma::lemmatize;
pub use lexicon::{tag_event_type, EventType, TriggerLexicon};

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trigger lexicon is empty")]
    EmptyLexicon,
    #[error("invalid lexicon:\n{}", join_diagnostics(.0))]
    Lexicon(Vec<LineDiagnostic>),
    #[error("invalid annotations:\n{}", join_diagnostics(.0))]
    Annotations(Vec<LineDiagnostic>),
    #[error("mention refers to unknown document {0:?}")]
    UnknownDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionSource {
    Lexicon,
    External,
}

/// A detected, lemmatized event trigger.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventMention {
    pub doc_id: String,
    pub section: String,
    pub sentence_index: usize,
    /// Char offsets of the trigger within the sentence text.
    pub char_span: (usize, usize),
    pub surface: String,
    pub lemma: String,
    pub source: MentionSource,
}

impl EventMention {
    /// Position key used for ordering and span-exact matching.
    pub fn locus(&self) -> (&str, &str, usize, usize, usize) {
        (&self.doc_id, &self.section, self.sentence_index, self.char_span.0, self.char_span.1)
    }
}

/// A trigger found inside one piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub lemma: String,
}

/// Anything that can mark event triggers in a sentence.
pub trait EventDetector: Sync {
    fn find_triggers(&self, text: &str) -> Vec<Trigger>;

    fn source(&self) -> MentionSource {
        MentionSource::External
    }
}

impl EventDetector for TriggerLexicon {
    fn find_triggers(&self, text: &str) -> Vec<Trigger> {
        token_spans(text)
            .into_iter()
            .filter_map(|t| {
                let lemma = lemmatize(t.text);
                self.contains(&lemma).then(|| Trigger {
                    start: t.start,
                    end: t.end,
                    surface: t.text.to_string(),
                    lemma,
                })
            })
            .collect()
    }

    fn source(&self) -> MentionSource {
        MentionSource::Lexicon
    }
}

/// Runs the lexicon detector over sentences.
pub fn detect_events(sentences: &[Sentence], lexicon: &TriggerLexicon) -> Result<Vec<EventMention>, DetectError> {
    if lexicon.is_empty() {
        return Err(DetectError::EmptyLexicon);
    }
    Ok(detect_with(sentences, lexicon))
}

/// Runs any detector over sentences; output is sorted by
/// (doc, section, sentence, start).
pub fn detect_with<D: EventDetector + ?Sized>(sentences: &[Sentence], detector: &D) -> Vec<EventMention> {
    let source = detector.source();
    let mut out: Vec<EventMention> = sentences
        .par_iter()
        .flat_map_iter(|s| {
            detector.find_triggers(&s.text).into_iter().map(move |t| EventMention {
                doc_id: s.doc_id.clone(),
                section: s.section.clone(),
                sentence_index: s.index,
                char_span: (t.start, t.end),
                surface: t.surface,
                lemma: t.lemma,
                source,
            })
        })
        .collect();
    out.sort();
    out
}
