//! Biography corpus: data model, JSONL ingestion and statistics.
//!
//! One record per line:
//!
//! ```text
//! {"id": str, "name": str, "gender": "F"|"M", "occupation": str, "sections": {str: str}}
//! ```
//!
//! Section keys are normalized to lowercase snake_case on load
//! (`"Personal Life"` becomes `"personal_life"`). Unknown top-level fields
//! are kept on the record and written back out by [`Corpus::to_jsonl`].

mod segment;
mod stats;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{join_diagnostics, LineDiagnostic};
use crate::Gender;

pub use segment::{split_sentences, tokenize, token_spans, Sentence, Token, ABBREVIATIONS};
pub use stats::{corpus_stats, CorpusStats};

pub const CAREER: &str = "career";
pub const PERSONAL_LIFE: &str = "personal_life";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus validation failed:\n{}", join_diagnostics(.0))]
    Invalid(Vec<LineDiagnostic>),
}

impl CorpusError {
    pub fn diagnostics(&self) -> &[LineDiagnostic] {
        match self {
            CorpusError::Invalid(d) => d,
            CorpusError::Io { .. } => &[],
        }
    }
}

/// One biography.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CelebrityRecord {
    pub id: String,
    pub name: String,
    pub gender: Gender,
    pub occupation: String,
    pub sections: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl CelebrityRecord {
    /// Section text when present and non-blank.
    pub fn section(&self, key: &str) -> Option<&str> {
        self.sections
            .get(key)
            .map(String::as_str)
            .filter(|t| !t.trim().is_empty())
    }

    /// Whitespace-separated parts of the full name.
    pub fn name_parts(&self) -> impl Iterator<Item = &str> {
        self.name.split_whitespace()
    }
}

// Wire shape; gender stays a string so bad labels get a line-numbered error.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    name: String,
    gender: String,
    occupation: String,
    sections: BTreeMap<String, String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

/// Lowercase snake_case form of a section heading.
pub fn normalize_section_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    let mut pending_sep = false;
    for c in key.trim().chars() {
        if c.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(c.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

/// Non-fatal findings from ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub records: usize,
    pub blank_lines: usize,
    pub warnings: Vec<LineDiagnostic>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// An ordered, id-indexed collection of biographies. Immutable after load.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<CelebrityRecord>,
    index: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Corpus {
    /// Builds a corpus from records, rejecting empty or duplicate ids.
    pub fn from_records(records: Vec<CelebrityRecord>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(records.len());
        let mut diags = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if r.id.is_empty() {
                diags.push(LineDiagnostic { line: i + 1, message: "empty id".into() });
            } else if let Some(prev) = index.insert(r.id.clone(), i) {
                diags.push(LineDiagnostic {
                    line: i + 1,
                    message: format!("duplicate id {:?} (first seen at record {})", r.id, prev + 1),
                });
            }
        }
        if diags.is_empty() {
            Ok(Corpus { records, index })
        } else {
            Err(CorpusError::Invalid(diags))
        }
    }

    pub fn records(&self) -> &[CelebrityRecord] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CelebrityRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CelebrityRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn gender_of(&self, id: &str) -> Option<Gender> {
        self.get(id).map(|r| r.gender)
    }

    /// Sentences of every record, in corpus order, optionally restricted to
    /// one section key.
    pub fn sentences(&self, section: Option<&str>) -> Vec<Sentence> {
        self.records
            .par_iter()
            .flat_map_iter(|r| {
                r.sections
                    .iter()
                    .filter(move |(k, _)| section.is_none_or(|s| s == k.as_str()))
                    .flat_map(move |(k, text)| Sentence::split_section(&r.id, k, text))
            })
            .collect()
    }

    /// Serializes back to the JSONL wire format, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a CelebrityRecord;
    type IntoIter = std::slice::Iter<'a, CelebrityRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Reads a corpus JSONL file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<(Corpus, ValidationReport), CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

/// Parses corpus JSONL from any reader. All line errors are collected
/// before failing so a single run reports every problem.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<(Corpus, ValidationReport), CorpusError> {
    let mut report = ValidationReport::default();
    let mut errors = Vec::new();
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| CorpusError::Io { path: PathBuf::new(), source })?;
        if line.trim().is_empty() {
            report.blank_lines += 1;
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineDiagnostic { line: lineno, message: format!("malformed record: {e}") });
                continue;
            }
        };
        let gender = match raw.gender.parse::<Gender>() {
            Ok(g) => g,
            Err(e) => {
                errors.push(LineDiagnostic { line: lineno, message: e.to_string() });
                continue;
            }
        };
        if raw.id.is_empty() {
            errors.push(LineDiagnostic { line: lineno, message: "empty id".into() });
            continue;
        }
        if let Some(first) = seen.get(&raw.id) {
            errors.push(LineDiagnostic {
                line: lineno,
                message: format!("duplicate id {:?} (first seen on line {first})", raw.id),
            });
            continue;
        }
        seen.insert(raw.id.clone(), lineno);

        let mut sections = BTreeMap::new();
        let mut bad = false;
        for (key, text) in raw.sections {
            let norm = normalize_section_key(&key);
            if norm.is_empty() {
                errors.push(LineDiagnostic { line: lineno, message: format!("section key {key:?} is empty after normalization") });
                bad = true;
                continue;
            }
            if norm != key {
                report.warnings.push(LineDiagnostic {
                    line: lineno,
                    message: format!("section {key:?} normalized to {norm:?}"),
                });
            }
            if sections.insert(norm.clone(), text).is_some() {
                errors.push(LineDiagnostic { line: lineno, message: format!("section {norm:?} given twice after normalization") });
                bad = true;
            }
        }
        if bad {
            continue;
        }
        if !sections.contains_key(CAREER) && !sections.contains_key(PERSONAL_LIFE) {
            report.warnings.push(LineDiagnostic {
                line: lineno,
                message: format!("record {:?} has neither a career nor a personal_life section", raw.id),
            });
        }
        records.push(CelebrityRecord {
            id: raw.id,
            name: raw.name,
            gender,
            occupation: raw.occupation,
            sections,
            extra: raw.extra,
        });
    }

    if !errors.is_empty() {
        return Err(CorpusError::Invalid(errors));
    }
    report.records = records.len();
    let corpus = Corpus::from_records(records)?;
    Ok((corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<(Corpus, ValidationReport), CorpusError> {
        parse_corpus(s.as_bytes())
    }

    #[test]
    fn minimal_record_loads() {
        let (c, report) = parse(
            r#"{"id":"c1","name":"A B","gender":"F","occupation":"chef","sections":{"career":"She cooked."}}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(report.records, 1);
        let r = c.get("c1").unwrap();
        assert_eq!(r.gender, Gender::F);
        assert_eq!(r.section("career"), Some("She cooked."));
    }

    #[test]
    fn duplicate_id_names_second_line() {
        let input = concat!(
            r#"{"id":"c1","name":"A","gender":"F","occupation":"chef","sections":{}}"#,
            "\n",
            r#"{"id":"c1","name":"B","gender":"M","occupation":"chef","sections":{}}"#,
        );
        let err = parse(input).unwrap_err();
        let d = err.diagnostics();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, 2);
        assert!(d[0].message.contains("duplicate id"));
    }

    #[test]
    fn non_binary_gender_rejected() {
        let err = parse(r#"{"id":"c1","name":"A","gender":"X","occupation":"chef","sections":{}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown gender value"));
        assert_eq!(err.diagnostics()[0].line, 1);
    }

    #[test]
    fn malformed_lines_are_all_reported() {
        let input = "{not json}\n\n{\"id\":\"c2\"}\n";
        let err = parse(input).unwrap_err();
        let lines: Vec<_> = err.diagnostics().iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![1, 3]);
    }

    #[test]
    fn section_keys_are_normalized() {
        let (c, report) = parse(
            r#"{"id":"c1","name":"A","gender":"M","occupation":"writer","sections":{"Personal Life":"x","Early years":"y"}}"#,
        )
        .unwrap();
        let r = c.get("c1").unwrap();
        assert!(r.sections.contains_key("personal_life"));
        assert!(r.sections.contains_key("early_years"));
        assert_eq!(report.warnings.len(), 2);
    }

    #[test]
    fn colliding_section_keys_rejected() {
        let err = parse(
            r#"{"id":"c1","name":"A","gender":"M","occupation":"writer","sections":{"Career":"x","career":"y"}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("twice"));
    }

    #[test]
    fn extra_fields_survive_round_trip() {
        let line = r#"{"id":"c1","name":"A","gender":"M","occupation":"writer","sections":{"career":"x"},"url":"https://example.org"}"#;
        let (c, _) = parse(line).unwrap();
        assert_eq!(c.get("c1").unwrap().extra["url"], "https://example.org");
        let (again, _) = parse(&c.to_jsonl()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_section_key("Personal Life"), "personal_life");
        assert_eq!(normalize_section_key("  Career "), "career");
        assert_eq!(normalize_section_key("Awards & honours"), "awards_honours");
        assert_eq!(normalize_section_key("!!"), "");
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        let (c, r) = parse("").unwrap();
        assert!(c.is_empty());
        assert_eq!(r.records, 0);
    }
}
