//! Annotation JSONL: one trigger per line.
//!
//! ```text
//! {"doc_id": str, "section": str, "sentence_index": int, "start": int, "end": int, "surface": str, "lemma": str}
//! ```
//!
//! `start`/`end` are char offsets into the sentence produced by the core
//! sentence splitter for that section.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DetectError, EventMention, MentionSource};
use crate::corpus::{normalize_section_key, Corpus, Sentence};
use crate::LineDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLine {
    pub doc_id: String,
    pub section: String,
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub lemma: String,
}

impl From<&EventMention> for AnnotationLine {
    fn from(m: &EventMention) -> Self {
        AnnotationLine {
            doc_id: m.doc_id.clone(),
            section: m.section.clone(),
            sentence_index: m.sentence_index,
            start: m.char_span.0,
            end: m.char_span.1,
            surface: m.surface.clone(),
            lemma: m.lemma.clone(),
        }
    }
}

/// Sentences addressable by (doc, section, index).
#[derive(Debug, Default)]
pub struct SentenceIndex {
    docs: HashSet<String>,
    sentences: HashMap<(String, String), Vec<Vec<char>>>,
}

impl SentenceIndex {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut idx = Self::from_sentences(corpus.sentences(None));
        idx.docs.extend(corpus.iter().map(|r| r.id.clone()));
        idx
    }

    pub fn from_sentences<I: IntoIterator<Item = Sentence>>(sentences: I) -> Self {
        let mut idx = SentenceIndex::default();
        for s in sentences {
            idx.docs.insert(s.doc_id.clone());
            let slot = idx.sentences.entry((s.doc_id, s.section)).or_default();
            if slot.len() <= s.index {
                slot.resize(s.index + 1, Vec::new());
            }
            slot[s.index] = s.text.chars().collect();
        }
        idx
    }

    fn sentence(&self, doc: &str, section: &str, index: usize) -> Option<&[char]> {
        self.sentences
            .get(&(doc.to_string(), section.to_string()))
            .and_then(|v| v.get(index))
            .map(Vec::as_slice)
    }

    fn check(&self, a: &AnnotationLine) -> Result<(), String> {
        if !self.docs.contains(&a.doc_id) {
            return Err(format!("unknown doc_id {:?}", a.doc_id));
        }
        let chars = self
            .sentence(&a.doc_id, &a.section, a.sentence_index)
            .ok_or_else(|| format!("no sentence {} in {}/{}", a.sentence_index, a.doc_id, a.section))?;
        if a.start >= a.end || a.end > chars.len() {
            return Err(format!(
                "span [{}, {}) out of bounds for sentence of length {}",
                a.start,
                a.end,
                chars.len()
            ));
        }
        let slice: String = chars[a.start..a.end].iter().collect();
        if slice != a.surface {
            return Err(format!("surface {:?} does not match sentence text {:?}", a.surface, slice));
        }
        if a.lemma.trim().is_empty() {
            return Err("empty lemma".into());
        }
        Ok(())
    }
}

/// Reads and validates annotation lines against a sentence index.
pub fn parse_annotations<R: BufRead>(reader: R, index: &SentenceIndex) -> Result<Vec<EventMention>, DetectError> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DetectError::Io { path: Default::default(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut a: AnnotationLine = match serde_json::from_str(&line) {
            Ok(a) => a,
            Err(e) => {
                errors.push(LineDiagnostic { line: i + 1, message: format!("malformed annotation: {e}") });
                continue;
            }
        };
        a.section = normalize_section_key(&a.section);
        if let Err(message) = index.check(&a) {
            errors.push(LineDiagnostic { line: i + 1, message });
            continue;
        }
        out.push(EventMention {
            doc_id: a.doc_id,
            section: a.section,
            sentence_index: a.sentence_index,
            char_span: (a.start, a.end),
            surface: a.surface,
            lemma: a.lemma.trim().to_lowercase(),
            source: MentionSource::External,
        });
    }
    if !errors.is_empty() {
        return Err(DetectError::Annotations(errors));
    }
    out.sort();
    Ok(out)
}

/// Loads external detector output for a corpus.
pub fn ingest_annotations(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Vec<EventMention>, DetectError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DetectError::Io { path: path.to_path_buf(), source })?;
    parse_annotations(BufReader::new(file), &SentenceIndex::from_corpus(corpus))
}

pub fn write_annotations<W: Write>(mentions: &[EventMention], mut w: W) -> std::io::Result<()> {
    for m in mentions {
        serde_json::to_writer(&mut w, &AnnotationLine::from(m))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn corpus() -> Corpus {
        let line = r#"{"id":"c1","name":"Ann Lee","gender":"F","occupation":"chef","sections":{"career":"They were married in Yuma. She cooked."}}"#;
        parse_corpus(line.as_bytes()).unwrap().0
    }

    fn parse(lines: &str) -> Result<Vec<EventMention>, DetectError> {
        parse_annotations(lines.as_bytes(), &SentenceIndex::from_corpus(&corpus()))
    }

    fn diag_message(e: DetectError) -> String {
        match e {
            DetectError::Annotations(d) => d[0].to_string(),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn valid_line() {
        let m = parse(r#"{"doc_id":"c1","section":"career","sentence_index":0,"start":10,"end":17,"surface":"married","lemma":"marry"}"#).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].source, MentionSource::External);
        assert_eq!(m[0].char_span, (10, 17));
    }

    #[test]
    fn span_out_of_bounds() {
        let e = parse(r#"{"doc_id":"c1","section":"career","sentence_index":1,"start":4,"end":40,"surface":"x","lemma":"cook"}"#).unwrap_err();
        assert!(diag_message(e).contains("out of bounds"));
    }

    #[test]
    fn surface_mismatch() {
        // slice [10,15) reads "marri", not "marry"
        let e = parse(r#"{"doc_id":"c1","section":"career","sentence_index":0,"start":10,"end":15,"surface":"marry","lemma":"marry"}"#).unwrap_err();
        let msg = diag_message(e);
        assert!(msg.contains("does not match"), "{msg}");
        assert!(msg.starts_with("line 1"));
    }

    #[test]
    fn unknown_doc() {
        let e = parse(r#"{"doc_id":"zz","section":"career","sentence_index":0,"start":0,"end":1,"surface":"T","lemma":"t"}"#).unwrap_err();
        assert!(diag_message(e).contains("unknown doc_id"));
    }

    #[test]
    fn write_then_parse_round_trip() {
        let c = corpus();
        let mentions = crate::detect::detect_events(&c.sentences(None), &crate::detect::TriggerLexicon::bundled()).unwrap();
        assert!(!mentions.is_empty());
        let mut buf = Vec::new();
        write_annotations(&mentions, &mut buf).unwrap();
        let back = parse_annotations(buf.as_slice(), &SentenceIndex::from_corpus(&c)).unwrap();
        let strip = |v: &[EventMention]| v.iter().map(|m| (m.locus().0.to_string(), m.char_span, m.lemma.clone())).collect::<Vec<_>>();
        assert_eq!(strip(&mentions), strip(&back));
    }
}
