//! Percentile position of extracted events and detector quality metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::detect::{EventMention, FrequencyTable};
use crate::rank::RankedEvents;
use crate::Gender;

/// Percentile of events ranked by descending frequency: `100 · rank / N`
/// where tied counts share the best rank and `N` is the number of
/// distinct events.
#[derive(Debug, Clone)]
pub struct PercentileIndex {
    /// Counts sorted descending.
    counts: Vec<u64>,
}

impl PercentileIndex {
    pub fn new(table: &FrequencyTable) -> Self {
        let mut counts: Vec<u64> = table.iter().map(|(_, n)| n).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        PercentileIndex { counts }
    }

    /// Percentile of an event seen `count` times; `None` for a count of 0.
    pub fn percentile_of_count(&self, count: u64) -> Option<f64> {
        if count == 0 || self.counts.is_empty() {
            return None;
        }
        let ahead = self.counts.partition_point(|&c| c > count);
        Some(100.0 * (ahead + 1) as f64 / self.counts.len() as f64)
    }
}

/// Percentile of `lemma` in `table`, absent when the table lacks it.
pub fn frequency_percentile(lemma: &str, table: &FrequencyTable) -> Option<f64> {
    PercentileIndex::new(table).percentile_of_count(table.count(lemma))
}

pub const OWN_BAND: f64 = 10.0;
pub const OPPOSITE_BAND: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub lemma: String,
    /// Gender whose top list the event came from.
    pub gender: Gender,
    pub own_pct: f64,
    pub opposite_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileReport {
    pub rows: Vec<PercentileRow>,
    /// Every event lies within the top 10% of its own gender's events.
    pub own_band_holds: bool,
    /// Every event lies within the top 40% of the other gender's events.
    pub opposite_band_holds: bool,
}

impl PercentileReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lemma,own_pct,opposite_pct,gender\n");
        for r in &self.rows {
            let opp = r.opposite_pct.map_or(String::new(), |p| format!("{p:.4}"));
            writeln!(out, "{},{:.4},{opp},{}", r.lemma, r.own_pct, r.gender).unwrap();
        }
        out
    }
}

/// Own- and opposite-gender percentiles of each extracted event, female
/// list first.
pub fn percentile_report(ranked: &RankedEvents, male: &FrequencyTable, female: &FrequencyTable) -> PercentileReport {
    let index = |g: Gender| match g {
        Gender::M => (PercentileIndex::new(male), male),
        Gender::F => (PercentileIndex::new(female), female),
    };
    let mut rows = Vec::new();
    for g in Gender::ALL {
        let (own_idx, own) = index(g);
        let (opp_idx, opp) = index(g.opposite());
        for e in ranked.side(g) {
            // events in a top list are present in both tables
            let own_pct = own_idx.percentile_of_count(own.count(&e.lemma)).unwrap_or(100.0);
            let opposite_pct = opp_idx.percentile_of_count(opp.count(&e.lemma));
            rows.push(PercentileRow { lemma: e.lemma.clone(), gender: g, own_pct, opposite_pct });
        }
    }
    let own_band_holds = rows.iter().all(|r| r.own_pct <= OWN_BAND);
    let opposite_band_holds = rows.iter().all(|r| r.opposite_pct.is_some_and(|p| p <= OPPOSITE_BAND));
    PercentileReport { rows, own_band_holds, opposite_band_holds }
}

/// Precision, recall and F1 on a 0..1 scale; a metric is absent when its
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl EvalMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) => Some(f1(p, r)),
            _ => None,
        };
        EvalMetrics { tp, fp, fn_, precision, recall, f1 }
    }
}

/// Harmonic mean of precision and recall (0 when both are 0).
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// How a predicted mention is matched to a gold one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Same document, section, sentence and char span.
    #[default]
    Exact,
    /// Same document, section, sentence and lemma.
    Relaxed,
}

type Key = (String, String, usize, String);

fn key(m: &EventMention, mode: MatchMode) -> Key {
    let tail = match mode {
        MatchMode::Exact => format!("{}:{}", m.char_span.0, m.char_span.1),
        MatchMode::Relaxed => m.lemma.clone(),
    };
    (m.doc_id.clone(), m.section.clone(), m.sentence_index, tail)
}

fn counts<'a>(mentions: impl Iterator<Item = &'a EventMention>, mode: MatchMode) -> BTreeMap<Key, usize> {
    let mut out = BTreeMap::new();
    for m in mentions {
        *out.entry(key(m, mode)).or_insert(0) += 1;
    }
    out
}

fn score<'a>(
    gold: impl Iterator<Item = &'a EventMention>,
    predicted: impl Iterator<Item = &'a EventMention>,
    mode: MatchMode,
) -> EvalMetrics {
    let g = counts(gold, mode);
    let p = counts(predicted, mode);
    let tp: usize = g.iter().map(|(k, n)| (*n).min(p.get(k).copied().unwrap_or(0))).sum();
    let total_g: usize = g.values().sum();
    let total_p: usize = p.values().sum();
    EvalMetrics::from_counts(tp, total_p - tp, total_g - tp)
}

/// Scores predicted mentions against gold ones. Duplicate mentions are
/// matched one to one.
pub fn evaluate_detector(gold: &[EventMention], predicted: &[EventMention], mode: MatchMode) -> EvalMetrics {
    score(gold.iter(), predicted.iter(), mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorEvaluation {
    pub overall: EvalMetrics,
    pub by_gender: BTreeMap<Gender, EvalMetrics>,
}

/// Overall metrics plus a breakdown by the gender of each mention's document.
pub fn evaluate_by_gender(
    gold: &[EventMention],
    predicted: &[EventMention],
    corpus: &Corpus,
    mode: MatchMode,
) -> DetectorEvaluation {
    let of = |g: Gender| move |m: &&EventMention| corpus.gender_of(&m.doc_id) == Some(g);
    let by_gender = Gender::ALL
        .into_iter()
        .map(|g| (g, score(gold.iter().filter(of(g)), predicted.iter().filter(of(g)), mode)))
        .collect();
    DetectorEvaluation { overall: evaluate_detector(gold, predicted, mode), by_gender }
}
