//! Detector-recall calibration.
//!
//! Sentences where the detector found an event are turned into templates,
//! each template is rewritten with 50 female and 50 male names (swapping
//! pronouns and gendered words when the gender changes), and the detector
//! is rerun over the copies. Every copy contains the event, so the share it
//! finds is its recall for that gender. When the two recalls differ by more
//! than a gate, raw counts are divided by recall before the odds ratio is
//! recomputed.

mod lists;
mod template;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CelebrityRecord, Corpus};
use crate::detect::{EventDetector, FrequencyTable};
use crate::error::{join_diagnostics, LineDiagnostic};
use crate::rank::{rank_events, rank_events_adjusted, split_top, Adjustment, RankError, RankOptions, RankedEvents};
use crate::Gender;

pub use lists::{match_case, NameList, SwapKind, SwapTable, NAMES_PER_GENDER};
pub use template::{
    generate_synthetic, harvest_templates, load_review, read_review, substitute, write_review, LocatedSpans,
    SpanLocator, SyntheticInstance, TemplateSentence,
};

/// Default recall-gap threshold above which counts are corrected.
pub const DEFAULT_GATE: f64 = 0.05;

/// Slack on the gate comparison so gaps that equal the gate in exact
/// arithmetic do not trip it through rounding.
const GATE_EPSILON: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CalibrateError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid review file:\n{}", join_diagnostics(.0))]
    Review(Vec<LineDiagnostic>),
    #[error("template {0:?} has not been verified")]
    Unverified(String),
    #[error("replacement name is blank")]
    EmptyName,
    #[error("invalid name list: {0}")]
    NameList(String),
    #[error("invalid swap table:\n{}", join_diagnostics(.0))]
    SwapTable(Vec<LineDiagnostic>),
    #[error("template {template:?} has an invalid span {span:?}")]
    BadSpan { template: String, span: (usize, usize) },
    #[error("no {kind} swap for {word:?}")]
    NoSwap { word: String, kind: SwapKind },
    #[error("recall of {lemma:?} for {gender} is 0; cannot calibrate")]
    ZeroRecall { lemma: String, gender: Gender },
    #[error("recall {0} is outside (0, 1]")]
    InvalidRecall(f64),
    #[error("no {gender} instances for {lemma:?}")]
    NoInstances { lemma: String, gender: Gender },
    #[error("instances disagree on the expected event ({0:?} vs {1:?})")]
    MixedEvents(String, String),
    #[error("calibration gate must be a non-negative number, got {0}")]
    InvalidGate(f64),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Detection recall of one event for one gender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub lemma: String,
    pub gender: Gender,
    pub n_instances: usize,
    pub n_detected: usize,
    pub recall: f64,
}

impl RecallRecord {
    pub fn new(lemma: impl Into<String>, gender: Gender, n_instances: usize, n_detected: usize) -> Self {
        assert!(n_instances > 0 && n_detected <= n_instances);
        RecallRecord {
            lemma: lemma.into(),
            gender,
            n_instances,
            n_detected,
            recall: n_detected as f64 / n_instances as f64,
        }
    }
}

/// Per-gender recall over instances, given a detection predicate.
pub fn detection_recall_with<F>(
    instances: &[SyntheticInstance],
    lemma: &str,
    detected: F,
) -> Result<(RecallRecord, RecallRecord), CalibrateError>
where
    F: Fn(&SyntheticInstance) -> bool + Sync,
{
    if let Some(i) = instances.iter().find(|i| i.expected_event != lemma) {
        return Err(CalibrateError::MixedEvents(lemma.to_string(), i.expected_event.clone()));
    }
    let hits: Vec<(Gender, bool)> = instances.par_iter().map(|i| (i.assigned_gender, detected(i))).collect();
    let record = |g: Gender| {
        let n = hits.iter().filter(|(h, _)| *h == g).count();
        if n == 0 {
            return Err(CalibrateError::NoInstances { lemma: lemma.to_string(), gender: g });
        }
        let d = hits.iter().filter(|(h, hit)| *h == g && *hit).count();
        if d == 0 {
            log::warn!("detector found {lemma:?} in none of the {n} {} instances", g.word());
        }
        Ok(RecallRecord::new(lemma, g, n, d))
    };
    Ok((record(Gender::F)?, record(Gender::M)?))
}

/// Per-gender recall of `detector` on instances that all contain `lemma`.
pub fn detection_recall<D: EventDetector + ?Sized>(
    detector: &D,
    instances: &[SyntheticInstance],
    lemma: &str,
) -> Result<(RecallRecord, RecallRecord), CalibrateError> {
    detection_recall_with(instances, lemma, |i| {
        detector.find_triggers(&i.substituted_text).iter().any(|t| t.lemma == lemma)
    })
}

/// Generates instances for every verified template and measures recall per
/// target event, pooling templates that share an event. Output is sorted
/// by lemma, female record first.
pub fn measure_recalls<F>(
    templates: &[TemplateSentence],
    names: &NameList,
    swaps: &SwapTable,
    detected: F,
) -> Result<Vec<RecallRecord>, CalibrateError>
where
    F: Fn(&SyntheticInstance) -> bool + Sync,
{
    let by_event = synthesize_all(templates, names, swaps)?;
    let mut out = Vec::new();
    for (lemma, instances) in by_event {
        let (f, m) = detection_recall_with(&instances, &lemma, &detected)?;
        out.push(f);
        out.push(m);
    }
    Ok(out)
}

/// Instances of all verified templates, grouped by event.
pub fn synthesize_all(
    templates: &[TemplateSentence],
    names: &NameList,
    swaps: &SwapTable,
) -> Result<BTreeMap<String, Vec<SyntheticInstance>>, CalibrateError> {
    let verified: Vec<&TemplateSentence> = templates.iter().filter(|t| t.verified).collect();
    let skipped = templates.len() - verified.len();
    if skipped > 0 {
        log::info!("skipping {skipped} unverified templates");
    }
    let generated: Vec<Vec<SyntheticInstance>> = verified
        .par_iter()
        .map(|t| generate_synthetic(t, names, swaps))
        .collect::<Result<_, _>>()?;
    let mut by_event: BTreeMap<String, Vec<SyntheticInstance>> = BTreeMap::new();
    for batch in generated {
        if let Some(first) = batch.first() {
            by_event.entry(first.expected_event.clone()).or_default().extend(batch);
        }
    }
    Ok(by_event)
}

/// Instances as corpus records, so an external detector can process them.
/// Each record has the instance id and one `synthetic` section.
pub fn instances_to_corpus(instances: &[SyntheticInstance]) -> Result<Corpus, crate::corpus::CorpusError> {
    let records = instances
        .iter()
        .map(|i| CelebrityRecord {
            id: i.id.clone(),
            name: i.assigned_name.clone(),
            gender: i.assigned_gender,
            occupation: "synthetic".into(),
            sections: BTreeMap::from([(SYNTHETIC_SECTION.to_string(), i.substituted_text.clone())]),
            extra: BTreeMap::new(),
        })
        .collect();
    Corpus::from_records(records)
}

pub const SYNTHETIC_SECTION: &str = "synthetic";

/// `|e|* = |e| / recall`.
pub fn calibrate_frequency(raw_count: u64, recall: f64) -> Result<f64, CalibrateError> {
    if recall == 0.0 {
        return Err(CalibrateError::InvalidRecall(0.0));
    }
    if !(recall > 0.0 && recall <= 1.0) {
        return Err(CalibrateError::InvalidRecall(recall));
    }
    Ok(raw_count as f64 / recall)
}

/// Re-ranks with recall-corrected counts for every event whose female and
/// male recall differ by more than `gate`. Events without a recall pair are
/// left as they are. With no event over the gate the result is exactly
/// [`rank_events`].
pub fn calibrated_ranking(
    male: &FrequencyTable,
    female: &FrequencyTable,
    recalls: &[RecallRecord],
    opts: RankOptions,
    gate: f64,
) -> Result<RankedEvents, CalibrateError> {
    if gate.is_nan() || gate < 0.0 {
        return Err(CalibrateError::InvalidGate(gate));
    }
    let mut pairs: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
    for r in recalls {
        pairs.entry(r.lemma.as_str()).or_default()[r.gender as usize] = Some(r.recall);
    }
    let mut adjustments = BTreeMap::new();
    let mut excluded = BTreeSet::new();
    let mut warnings = Vec::new();
    for (lemma, pair) in pairs {
        let [Some(rf), Some(rm)] = pair else { continue };
        if (rf - rm).abs() - gate <= GATE_EPSILON {
            continue;
        }
        let corrected = |n: u64, r: f64, g: Gender| {
            calibrate_frequency(n, r).map_err(|_| CalibrateError::ZeroRecall { lemma: lemma.to_string(), gender: g })
        };
        match (corrected(male.count(lemma), rm, Gender::M), corrected(female.count(lemma), rf, Gender::F)) {
            (Ok(m), Ok(f)) => {
                adjustments.insert(lemma.to_string(), Adjustment { male: m, female: f });
            }
            (Err(e), _) | (_, Err(e)) => {
                warnings.push(format!("{e}; event excluded"));
                excluded.insert(lemma.to_string());
            }
        }
    }
    if adjustments.is_empty() && excluded.is_empty() {
        return Ok(rank_events(male, female, opts)?);
    }
    let mut ranked = rank_events_adjusted(male, female, &adjustments, opts)?;
    if !excluded.is_empty() {
        ranked.ordered.retain(|e| !excluded.contains(&e.lemma));
        ranked.exclusive.retain(|e| !excluded.contains(&e.lemma));
        let (top_male, top_female) = split_top(&ranked.ordered, opts.k, &mut ranked.warnings);
        ranked.top_male = top_male;
        ranked.top_female = top_female;
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    ranked.warnings.extend(warnings);
    Ok(ranked)
}

/// `lemma,gender,n_instances,n_detected,recall` rows.
pub fn recall_csv(records: &[RecallRecord]) -> String {
    let mut out = String::from("lemma,gender,n_instances,n_detected,recall\n");
    for r in records {
        writeln!(out, "{},{},{},{},{:.6}", r.lemma, r.gender, r.n_instances, r.n_detected, r.recall).unwrap();
    }
    out
}
