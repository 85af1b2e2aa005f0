use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{Corpus, CAREER, PERSONAL_LIFE};
use crate::Gender;

/// Per occupation × section × gender document counts.
///
/// A document counts for a section when it has non-blank text under that
/// key. `documents` counts every record regardless of sections.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub cells: BTreeMap<(String, String, Gender), usize>,
    pub documents: BTreeMap<(String, Gender), usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for r in corpus {
        *stats.documents.entry((r.occupation.clone(), r.gender)).or_default() += 1;
        for key in r.sections.keys() {
            if r.section(key).is_some() {
                *stats
                    .cells
                    .entry((r.occupation.clone(), key.clone(), r.gender))
                    .or_default() += 1;
            }
        }
    }
    stats
}

impl CorpusStats {
    pub fn count(&self, occupation: &str, section: &str, gender: Gender) -> usize {
        self.cells
            .get(&(occupation.to_string(), section.to_string(), gender))
            .copied()
            .unwrap_or(0)
    }

    pub fn documents(&self, occupation: &str, gender: Gender) -> usize {
        self.documents.get(&(occupation.to_string(), gender)).copied().unwrap_or(0)
    }

    /// Sum of a section's counts over all occupations.
    pub fn total(&self, section: &str, gender: Gender) -> usize {
        self.cells
            .iter()
            .filter(|((_, s, g), _)| s == section && *g == gender)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn total_documents(&self, gender: Gender) -> usize {
        self.documents.iter().filter(|((_, g), _)| *g == gender).map(|(_, n)| n).sum()
    }

    pub fn occupations(&self) -> BTreeSet<&str> {
        self.documents.keys().map(|(o, _)| o.as_str()).collect()
    }

    pub fn sections(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|(_, s, _)| s.as_str()).collect()
    }

    /// Career / Personal Life / Collection table with F and M columns per
    /// group and a totals row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let header = ["Occupation", "Career F", "Career M", "Personal Life F", "Personal Life M", "Collection F", "Collection M"];
        writeln!(out, "{}", header.join("\t")).unwrap();
        let row = |label: &str, vals: [usize; 6]| {
            let mut s = label.to_string();
            for v in vals {
                s.push('\t');
                s.push_str(&v.to_string());
            }
            s
        };
        for occ in self.occupations() {
            let vals = [
                self.count(occ, CAREER, Gender::F),
                self.count(occ, CAREER, Gender::M),
                self.count(occ, PERSONAL_LIFE, Gender::F),
                self.count(occ, PERSONAL_LIFE, Gender::M),
                self.documents(occ, Gender::F),
                self.documents(occ, Gender::M),
            ];
            writeln!(out, "{}", row(occ, vals)).unwrap();
        }
        let totals = [
            self.total(CAREER, Gender::F),
            self.total(CAREER, Gender::M),
            self.total(PERSONAL_LIFE, Gender::F),
            self.total(PERSONAL_LIFE, Gender::M),
            self.total_documents(Gender::F),
            self.total_documents(Gender::M),
        ];
        writeln!(out, "{}", row("All", totals)).unwrap();
        out
    }
}
