use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DetectError, EventMention};
use crate::corpus::{CelebrityRecord, Corpus};
use crate::Gender;

/// Lemma → occurrence count for one gender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    gender: Gender,
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn new(gender: Gender) -> Self {
        FrequencyTable { gender, counts: BTreeMap::new(), total: 0 }
    }

    /// Builds a table, dropping zero counts.
    pub fn from_counts<I, S>(gender: Gender, counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut t = FrequencyTable::new(gender);
        for (lemma, n) in counts {
            t.add(lemma, n);
        }
        t
    }

    pub fn add(&mut self, lemma: impl Into<String>, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(lemma.into()).or_default() += n;
        self.total += n;
    }

    pub fn merge(&mut self, other: &FrequencyTable) {
        for (lemma, &n) in &other.counts {
            self.add(lemma.clone(), n);
        }
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }

    pub fn count(&self, lemma: &str) -> u64 {
        self.counts.get(lemma).copied().unwrap_or(0)
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.counts.contains_key(lemma)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct events.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTables {
    pub male: FrequencyTable,
    pub female: FrequencyTable,
    /// Documents in the slice per gender (after sampling).
    pub documents: BTreeMap<Gender, usize>,
    pub warnings: Vec<String>,
}

impl FrequencyTables {
    pub fn table(&self, gender: Gender) -> &FrequencyTable {
        match gender {
            Gender::F => &self.female,
            Gender::M => &self.male,
        }
    }
}

/// Which documents contribute to a frequency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceFilter {
    pub section: String,
    pub occupation: Option<String>,
    /// When set, each occupation is downsampled to the same number of
    /// female and male documents, using this seed.
    pub balance_seed: Option<u64>,
}

impl SliceFilter {
    pub fn section(section: impl Into<String>) -> Self {
        SliceFilter { section: section.into(), occupation: None, balance_seed: None }
    }

    pub fn occupation(mut self, occupation: impl Into<String>) -> Self {
        self.occupation = Some(occupation.into());
        self
    }

    pub fn balanced(mut self, seed: u64) -> Self {
        self.balance_seed = Some(seed);
        self
    }
}

/// Documents that have non-blank text for the slice's section and match
/// its occupation, in corpus order.
pub fn select_documents<'a>(corpus: &'a Corpus, filter: &SliceFilter) -> Vec<&'a CelebrityRecord> {
    let eligible: Vec<&CelebrityRecord> = corpus
        .iter()
        .filter(|r| r.section(&filter.section).is_some())
        .filter(|r| filter.occupation.as_deref().is_none_or(|o| r.occupation == o))
        .collect();
    let Some(seed) = filter.balance_seed else {
        return eligible;
    };

    let mut groups: BTreeMap<&str, [Vec<&CelebrityRecord>; 2]> = BTreeMap::new();
    for r in &eligible {
        let slot = groups.entry(r.occupation.as_str()).or_default();
        slot[r.gender as usize].push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = std::collections::HashSet::new();
    for (_, [mut f, mut m]) in groups {
        let n = f.len().min(m.len());
        for side in [&mut f, &mut m] {
            side.sort_by(|a, b| a.id.cmp(&b.id));
            side.shuffle(&mut rng);
            keep.extend(side.iter().take(n).map(|r| r.id.as_str()));
        }
    }
    eligible.into_iter().filter(|r| keep.contains(r.id.as_str())).collect()
}

/// Aggregates mentions into per-gender lemma counts for one corpus slice.
pub fn build_frequency_tables(
    mentions: &[EventMention],
    corpus: &Corpus,
    filter: &SliceFilter,
) -> Result<FrequencyTables, DetectError> {
    let docs = select_documents(corpus, filter);
    let mut warnings = Vec::new();
    if docs.is_empty() {
        warnings.push(format!("no documents with a {:?} section in this slice", filter.section));
    }
    let genders: HashMap<&str, Gender> = docs.iter().map(|r| (r.id.as_str(), r.gender)).collect();
    let mut documents = BTreeMap::new();
    for g in Gender::ALL {
        documents.insert(g, docs.iter().filter(|r| r.gender == g).count());
    }

    if let Some(m) = mentions.iter().find(|m| corpus.get(&m.doc_id).is_none()) {
        return Err(DetectError::UnknownDocument(m.doc_id.clone()));
    }

    let empty = || (FrequencyTable::new(Gender::M), FrequencyTable::new(Gender::F));
    let (male, female) = mentions
        .par_iter()
        .filter(|m| m.section == filter.section)
        .filter_map(|m| genders.get(m.doc_id.as_str()).map(|&g| (g, m)))
        .fold(empty, |(mut male, mut female), (g, m)| {
            match g {
                Gender::M => male.add(m.lemma.clone(), 1),
                Gender::F => female.add(m.lemma.clone(), 1),
            }
            (male, female)
        })
        .reduce(empty, |(mut m1, mut f1), (m2, f2)| {
            m1.merge(&m2);
            f1.merge(&f2);
            (m1, f1)
        });

    if !docs.is_empty() && male.is_empty() && female.is_empty() {
        warnings.push(format!("no events found in the {:?} slice", filter.section));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FrequencyTables { male, female, documents, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::detect::MentionSource;

    fn corpus() -> Corpus {
        let lines = [
            r#"{"id":"f1","name":"A","gender":"F","occupation":"acting","sections":{"career":"x","personal_life":"y"}}"#,
            r#"{"id":"f2","name":"B","gender":"F","occupation":"acting","sections":{"career":"x"}}"#,
            r#"{"id":"m1","name":"C","gender":"M","occupation":"acting","sections":{"career":"x"}}"#,
            r#"{"id":"f3","name":"D","gender":"F","occupation":"writer","sections":{"career":"x"}}"#,
        ];
        parse_corpus(lines.join("\n").as_bytes()).unwrap().0
    }

    fn mention(doc: &str, section: &str, lemma: &str) -> EventMention {
        EventMention {
            doc_id: doc.into(),
            section: section.into(),
            sentence_index: 0,
            char_span: (0, 1),
            surface: lemma.into(),
            lemma: lemma.into(),
            source: MentionSource::External,
        }
    }

    #[test]
    fn direct_count() {
        let m = vec![mention("f1", "career", "marry"), mention("f2", "career", "marry"), mention("m1", "career", "marry")];
        let t = build_frequency_tables(&m, &corpus(), &SliceFilter::section("career")).unwrap();
        assert_eq!(t.female.count("marry"), 2);
        assert_eq!(t.male.count("marry"), 1);
        assert_eq!(t.female.total(), 2);
    }

    #[test]
    fn no_mentions_gives_empty_tables() {
        let t = build_frequency_tables(&[], &corpus(), &SliceFilter::section("career")).unwrap();
        assert!(t.male.is_empty() && t.female.is_empty());
    }

    #[test]
    fn filter_excludes_other_sections() {
        let m = vec![mention("f1", "personal_life", "marry")];
        let t = build_frequency_tables(&m, &corpus(), &SliceFilter::section("career")).unwrap();
        assert!(t.male.is_empty() && t.female.is_empty());
        assert!(!t.warnings.is_empty());
        let t = build_frequency_tables(&m, &corpus(), &SliceFilter::section("early_life")).unwrap();
        assert!(t.warnings[0].contains("no documents"));
    }

    #[test]
    fn occupation_filter() {
        let m = vec![mention("f1", "career", "act"), mention("f3", "career", "write")];
        let t = build_frequency_tables(&m, &corpus(), &SliceFilter::section("career").occupation("writer")).unwrap();
        assert_eq!(t.female.count("write"), 1);
        assert_eq!(t.female.count("act"), 0);
    }

    #[test]
    fn balanced_sampling_equalizes_and_is_seeded() {
        let c = corpus();
        let f = SliceFilter::section("career").balanced(7);
        let docs = select_documents(&c, &f);
        let ids: Vec<_> = docs.iter().map(|r| r.id.as_str()).collect();
        // acting has 2 F / 1 M; writer has 1 F / 0 M
        assert_eq!(docs.iter().filter(|r| r.gender == Gender::F).count(), 1);
        assert_eq!(docs.iter().filter(|r| r.gender == Gender::M).count(), 1);
        let again: Vec<_> = select_documents(&c, &f).iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, again);
    }

    #[test]
    fn unknown_doc_is_error() {
        let err = build_frequency_tables(&[mention("zz", "career", "x")], &corpus(), &SliceFilter::section("career")).unwrap_err();
        assert!(matches!(err, DetectError::UnknownDocument(_)));
    }

    #[test]
    fn merge_matches_serial_count() {
        let mut a = FrequencyTable::from_counts(Gender::F, [("x", 2), ("y", 1)]);
        let b = FrequencyTable::from_counts(Gender::F, [("y", 3), ("z", 0)]);
        a.merge(&b);
        assert_eq!(a, FrequencyTable::from_counts(Gender::F, [("x", 2), ("y", 4)]));
        assert_eq!(a.total(), 6);
    }
}
