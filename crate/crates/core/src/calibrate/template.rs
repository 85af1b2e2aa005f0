use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lists::{match_case, NameList, SwapKind, SwapTable, NAMES_PER_GENDER};
use super::CalibrateError;
use crate::corpus::{token_spans, Corpus, Sentence};
use crate::detect::{lemmatize, EventMention};
use crate::resources::{self, list_lines};
use crate::{Gender, LineDiagnostic};

/// Function words after which "her" is an object rather than a
/// possessive determiner ("gave her a", "with her in").
const CLOSED_CLASS: &[&str] = &[
    "a", "about", "above", "across", "after", "again", "against", "along", "also", "among", "an", "and", "around",
    "as", "at", "away", "back", "because", "before", "behind", "below", "beside", "besides", "between", "beyond",
    "both", "but", "by", "despite", "down", "during", "either", "even", "for", "from", "had", "has", "have", "her",
    "here", "him", "his", "how", "if", "in", "into", "is", "it", "its", "just", "later", "like", "more", "most", "near",
    "neither", "never", "nor", "not", "now", "of", "off", "on", "once", "only", "onto", "or", "out", "outside",
    "over", "past", "since", "so", "soon", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "though", "through", "throughout", "thus", "till", "to", "together", "too", "toward", "towards",
    "under", "unless", "until", "up", "upon", "very", "via", "was", "were", "what", "when", "where", "whether",
    "which", "while", "who", "whom", "why", "with", "within", "without", "would", "yet",
];

/// A sentence (with leading context) in which the detector found a target
/// event, with the gendered spans that substitution will rewrite. All
/// offsets are char offsets into `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSentence {
    pub id: String,
    pub source_doc: String,
    pub source_gender: Gender,
    pub section: String,
    pub sentence_index: usize,
    pub target_event: String,
    pub target_span: (usize, usize),
    pub text: String,
    pub name_spans: Vec<(usize, usize)>,
    pub pronoun_spans: Vec<(usize, usize, SwapKind)>,
    pub attribute_spans: Vec<(usize, usize, SwapKind)>,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub review_notes: Vec<String>,
}

/// One substituted copy of a template. Spans point into
/// `substituted_text` and carry the same kinds as the template's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticInstance {
    pub id: String,
    pub template_id: String,
    pub source_gender: Gender,
    pub substituted_text: String,
    pub assigned_name: String,
    pub assigned_gender: Gender,
    pub expected_event: String,
    pub name_spans: Vec<(usize, usize)>,
    pub pronoun_spans: Vec<(usize, usize, SwapKind)>,
    pub attribute_spans: Vec<(usize, usize, SwapKind)>,
}

impl SyntheticInstance {
    /// The instance viewed as a verified template of its assigned gender,
    /// so it can be substituted again.
    pub fn as_template(&self) -> TemplateSentence {
        TemplateSentence {
            id: self.id.clone(),
            source_doc: self.template_id.clone(),
            source_gender: self.assigned_gender,
            section: String::new(),
            sentence_index: 0,
            target_event: self.expected_event.clone(),
            target_span: (0, 0),
            text: self.substituted_text.clone(),
            name_spans: self.name_spans.clone(),
            pronoun_spans: self.pronoun_spans.clone(),
            attribute_spans: self.attribute_spans.clone(),
            verified: true,
            review_notes: Vec::new(),
        }
    }
}

/// Finds names, pronouns and gender attributes in text.
#[derive(Debug, Clone)]
pub struct SpanLocator {
    swaps: SwapTable,
    verbs: HashSet<String>,
}

/// Spans found in one text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocatedSpans {
    pub names: Vec<(usize, usize)>,
    pub pronouns: Vec<(usize, usize, SwapKind)>,
    pub attributes: Vec<(usize, usize, SwapKind)>,
    pub notes: Vec<String>,
}

impl SpanLocator {
    pub fn new(swaps: SwapTable, verbs: impl IntoIterator<Item = String>) -> Self {
        SpanLocator { swaps, verbs: verbs.into_iter().map(|v| v.to_lowercase()).collect() }
    }

    pub fn bundled() -> Self {
        Self::new(SwapTable::bundled(), list_lines(resources::VERBS).map(String::from))
    }

    pub fn swaps(&self) -> &SwapTable {
        &self.swaps
    }

    fn is_verb(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.verbs.contains(&w) || self.verbs.contains(&lemmatize(&w))
    }

    /// Locates spans for a person of `gender` whose name parts are `name_parts`.
    pub fn locate(&self, text: &str, name_parts: &[&str], gender: Gender) -> LocatedSpans {
        let chars: Vec<char> = text.chars().collect();
        let tokens = token_spans(text);
        let parts: HashSet<&str> = name_parts.iter().copied().filter(|p| !p.is_empty()).collect();
        let mut out = LocatedSpans::default();

        for (i, tok) in tokens.iter().enumerate() {
            if parts.contains(tok.text) {
                // adjacent name parts separated only by spaces form one span
                if let Some(last) = out.names.last_mut() {
                    if last.1 <= tok.start && chars[last.1..tok.start].iter().all(|c| *c == ' ') && i > 0 && tokens[i - 1].end == last.1 {
                        last.1 = tok.end;
                        continue;
                    }
                }
                out.names.push((tok.start, tok.end));
                continue;
            }
            let lower = tok.text.to_lowercase();
            let kinds = self.swaps.kinds_of(&lower, gender);
            if kinds.is_empty() {
                continue;
            }
            let pronoun: Vec<SwapKind> = kinds.iter().copied().filter(|k| k.is_pronoun()).collect();
            if !pronoun.is_empty() {
                let kind = if pronoun.len() == 1 {
                    pronoun[0]
                } else {
                    self.resolve(&pronoun, &chars, &tokens, i, &mut out.notes)
                };
                out.pronouns.push((tok.start, tok.end, kind));
            } else if kinds.contains(&SwapKind::Title) && tok.text.chars().next().is_some_and(char::is_uppercase) {
                out.attributes.push((tok.start, tok.end, SwapKind::Title));
            } else if kinds.contains(&SwapKind::Attribute) {
                out.attributes.push((tok.start, tok.end, SwapKind::Attribute));
            }
        }
        out
    }

    /// Chooses between a possessive determiner reading ("her book") and
    /// the other reading ("saw her", "the book is his") from the next token.
    fn resolve(
        &self,
        candidates: &[SwapKind],
        chars: &[char],
        tokens: &[crate::corpus::Token<'_>],
        i: usize,
        notes: &mut Vec<String>,
    ) -> SwapKind {
        let other = candidates.iter().copied().find(|k| *k != SwapKind::PossDet).unwrap_or(candidates[0]);
        if !candidates.contains(&SwapKind::PossDet) {
            return other;
        }
        let tok = &tokens[i];
        let gap_is_space = |next: &crate::corpus::Token<'_>| chars[tok.end..next.start].iter().all(|c| c.is_whitespace());
        let determiner = match tokens.get(i + 1) {
            Some(next) if gap_is_space(next) => {
                let w = next.text.to_lowercase();
                !CLOSED_CLASS.contains(&w.as_str()) && !self.is_verb(&w) && !w.chars().all(|c| c.is_ascii_digit())
            }
            _ => false,
        };
        let kind = if determiner { SwapKind::PossDet } else { other };
        if determiner && i > 0 && self.is_verb(tokens[i - 1].text) {
            notes.push(format!(
                "{:?} at {}..{} read as {} after verb {:?}; check",
                tok.text,
                tok.start,
                tok.end,
                kind,
                tokens[i - 1].text
            ));
        }
        kind
    }
}

fn char_slice(chars: &[char], start: usize, end: usize) -> String {
    chars[start..end].iter().collect()
}

/// Builds one unverified template per sentence where the detector found
/// `target_event`. Each template text is the sentence preceded by up to
/// `context` earlier sentences of the same section.
pub fn harvest_templates(
    corpus: &Corpus,
    mentions: &[EventMention],
    target_event: &str,
    locator: &SpanLocator,
    context: usize,
) -> Vec<TemplateSentence> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in mentions.iter().filter(|m| m.lemma == target_event) {
        let key = (m.doc_id.as_str(), m.section.as_str(), m.sentence_index);
        if !seen.insert(key) {
            continue;
        }
        let Some(record) = corpus.get(&m.doc_id) else { continue };
        let Some(section_text) = record.section(&m.section) else { continue };
        let sentences = Sentence::split_section(&record.id, &m.section, section_text);
        let Some(target) = sentences.get(m.sentence_index) else { continue };
        let first = &sentences[m.sentence_index.saturating_sub(context)];
        let section_chars: Vec<char> = section_text.chars().collect();
        let text = char_slice(&section_chars, first.char_offset, target.char_offset + target.char_len());
        let shift = target.char_offset - first.char_offset;
        let parts: Vec<&str> = token_spans(&record.name).into_iter().map(|t| t.text).collect();
        let spans = locator.locate(&text, &parts, record.gender);
        out.push(TemplateSentence {
            id: format!("{}:{}:{}:{}", record.id, m.section, m.sentence_index, target_event),
            source_doc: record.id.clone(),
            source_gender: record.gender,
            section: m.section.clone(),
            sentence_index: m.sentence_index,
            target_event: target_event.to_string(),
            target_span: (m.char_span.0 + shift, m.char_span.1 + shift),
            text,
            name_spans: spans.names,
            pronoun_spans: spans.pronouns,
            attribute_spans: spans.attributes,
            verified: false,
            review_notes: spans.notes,
        });
    }
    if out.is_empty() {
        log::warn!("no sentences with a detected {target_event:?} event; no templates harvested");
    }
    out
}

/// Replaces `template`'s name spans with `name` and, when the target
/// gender differs from the source, swaps its pronouns and attributes.
pub fn substitute(
    template: &TemplateSentence,
    name: &str,
    target_gender: Gender,
    swaps: &SwapTable,
) -> Result<SyntheticInstance, CalibrateError> {
    if !template.verified {
        return Err(CalibrateError::Unverified(template.id.clone()));
    }
    if name.trim().is_empty() {
        return Err(CalibrateError::EmptyName);
    }
    let chars: Vec<char> = template.text.chars().collect();
    let swap_gender = target_gender != template.source_gender;

    enum Slot {
        Name,
        Pronoun(SwapKind),
        Attribute(SwapKind),
    }
    let mut edits: Vec<(usize, usize, Slot)> = template.name_spans.iter().map(|&(s, e)| (s, e, Slot::Name)).collect();
    edits.extend(template.pronoun_spans.iter().map(|&(s, e, k)| (s, e, Slot::Pronoun(k))));
    edits.extend(template.attribute_spans.iter().map(|&(s, e, k)| (s, e, Slot::Attribute(k))));
    edits.sort_by_key(|&(s, e, _)| (s, e));

    let mut text = String::with_capacity(template.text.len());
    let mut inst = SyntheticInstance {
        id: String::new(),
        template_id: template.id.clone(),
        source_gender: template.source_gender,
        substituted_text: String::new(),
        assigned_name: name.to_string(),
        assigned_gender: target_gender,
        expected_event: template.target_event.clone(),
        name_spans: Vec::new(),
        pronoun_spans: Vec::new(),
        attribute_spans: Vec::new(),
    };
    let mut cursor = 0;
    let mut out_len = 0;
    for (s, e, slot) in edits {
        if s < cursor || e > chars.len() || s >= e {
            return Err(CalibrateError::BadSpan { template: template.id.clone(), span: (s, e) });
        }
        let gap = char_slice(&chars, cursor, s);
        out_len += gap.chars().count();
        text.push_str(&gap);
        let original = char_slice(&chars, s, e);
        let replacement = match slot {
            Slot::Name => name.to_string(),
            Slot::Pronoun(k) | Slot::Attribute(k) if swap_gender => {
                let swapped = swaps
                    .swap(k, &original.to_lowercase(), template.source_gender)
                    .ok_or_else(|| CalibrateError::NoSwap { word: original.clone(), kind: k })?;
                match_case(&original, swapped)
            }
            _ => original.clone(),
        };
        let new_span = (out_len, out_len + replacement.chars().count());
        match slot {
            Slot::Name => inst.name_spans.push(new_span),
            Slot::Pronoun(k) => inst.pronoun_spans.push((new_span.0, new_span.1, k)),
            Slot::Attribute(k) => inst.attribute_spans.push((new_span.0, new_span.1, k)),
        }
        out_len = new_span.1;
        text.push_str(&replacement);
        cursor = e;
    }
    text.push_str(&char_slice(&chars, cursor, chars.len()));
    inst.substituted_text = text;
    Ok(inst)
}

/// 100 instances per template: the 50 female names, then the 50 male ones.
pub fn generate_synthetic(
    template: &TemplateSentence,
    names: &NameList,
    swaps: &SwapTable,
) -> Result<Vec<SyntheticInstance>, CalibrateError> {
    let mut out = Vec::with_capacity(2 * NAMES_PER_GENDER);
    for g in Gender::ALL {
        for name in names.names(g) {
            let mut inst = substitute(template, name, g, swaps)?;
            inst.id = format!("{}#{:03}", template.id, out.len());
            out.push(inst);
        }
    }
    Ok(out)
}

fn check_spans(t: &TemplateSentence) -> Result<(), String> {
    let len = t.text.chars().count();
    let mut all: Vec<(usize, usize)> = t.name_spans.clone();
    all.extend(t.pronoun_spans.iter().map(|&(s, e, _)| (s, e)));
    all.extend(t.attribute_spans.iter().map(|&(s, e, _)| (s, e)));
    all.sort();
    for &(s, e) in &all {
        if s >= e || e > len {
            return Err(format!("span [{s}, {e}) out of bounds for text of length {len}"));
        }
    }
    if let Some(w) = all.windows(2).find(|w| w[1].0 < w[0].1) {
        return Err(format!("spans {:?} and {:?} overlap", w[0], w[1]));
    }
    if t.target_event.trim().is_empty() {
        return Err("empty target_event".into());
    }
    Ok(())
}

/// Reads a review file: one template per line, `verified` set by a reviewer.
pub fn read_review<R: BufRead>(reader: R) -> Result<Vec<TemplateSentence>, CalibrateError> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CalibrateError::Io { path: Default::default(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let diag = |message: String| LineDiagnostic { line: i + 1, message };
        match serde_json::from_str::<TemplateSentence>(&line) {
            Ok(t) => {
                if let Err(m) = check_spans(&t) {
                    errors.push(diag(m));
                } else if !ids.insert(t.id.clone()) {
                    errors.push(diag(format!("duplicate template id {:?}", t.id)));
                } else {
                    out.push(t);
                }
            }
            Err(e) => errors.push(diag(format!("malformed template: {e}"))),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CalibrateError::Review(errors))
    }
}

pub fn load_review(path: impl AsRef<Path>) -> Result<Vec<TemplateSentence>, CalibrateError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|source| CalibrateError::Io { path: path.to_path_buf(), source })?;
    read_review(BufReader::new(f))
}

pub fn write_review<W: Write>(templates: &[TemplateSentence], mut w: W) -> std::io::Result<()> {
    for t in templates {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::detect::{detect_events, TriggerLexicon};

    pub(crate) const BASKIN: &str = "At the age of 17, Baskin worked at a Tampa department store. To make money, she began breeding show cats; she also began rescuing bobcats, and used llamas for a lawn trimming business. In January 1991, she married her second husband and joined his real estate business.";
    pub(crate) const RAHMAN: &str = "In 1952, although married, and with a child, she became the first Miss India, and went on to compete in the Miss Universe 1952 Pageant, held at Long Beach, California.";

    fn record(id: &str, name: &str, text: &str) -> String {
        serde_json::json!({"id": id, "name": name, "gender": "F", "occupation": "x", "sections": {"career": text}}).to_string()
    }

    fn harvest(id: &str, name: &str, text: &str) -> Vec<TemplateSentence> {
        let (corpus, _) = parse_corpus(record(id, name, text).as_bytes()).unwrap();
        let lex = TriggerLexicon::new(["marry"]);
        let mentions = detect_events(&corpus.sentences(None), &lex).unwrap();
        harvest_templates(&corpus, &mentions, "marry", &SpanLocator::bundled(), 2)
    }

    fn words(text: &str, spans: impl Iterator<Item = (usize, usize)>) -> Vec<String> {
        let c: Vec<char> = text.chars().collect();
        spans.map(|(s, e)| char_slice(&c, s, e)).collect()
    }

    fn verified(mut t: TemplateSentence) -> TemplateSentence {
        t.verified = true;
        t
    }

    #[test]
    fn baskin_template_spans() {
        let t = harvest("baskin", "Carole Baskin", BASKIN);
        assert_eq!(t.len(), 1);
        let t = &t[0];
        assert_eq!(t.text, BASKIN);
        assert_eq!(words(&t.text, t.name_spans.iter().copied()), ["Baskin"]);
        assert_eq!(words(&t.text, t.pronoun_spans.iter().map(|&(s, e, _)| (s, e))), ["she", "she", "she", "her"]);
        assert_eq!(t.pronoun_spans[3].2, SwapKind::PossDet);
        assert!(!t.verified);
        assert_eq!(words(&t.text, std::iter::once(t.target_span)), ["married"]);
    }

    #[test]
    fn baskin_substitution() {
        let t = verified(harvest("baskin", "Carole Baskin", BASKIN).remove(0));
        let inst = substitute(&t, "Mike", Gender::M, &SwapTable::bundled()).unwrap();
        assert!(inst.substituted_text.starts_with("At the age of 17, Mike worked"));
        assert!(inst.substituted_text.contains("he began breeding"));
        assert!(inst.substituted_text.contains("he married his second husband and joined his real estate"));
        assert!(!inst.substituted_text.contains("she"));
    }

    #[test]
    fn same_gender_only_changes_name() {
        let t = verified(harvest("baskin", "Carole Baskin", BASKIN).remove(0));
        let inst = substitute(&t, "Linda", Gender::F, &SwapTable::bundled()).unwrap();
        assert_eq!(inst.substituted_text, BASKIN.replace("Baskin", "Linda"));
    }

    #[test]
    fn rahman_template_and_swap() {
        let t = harvest("rahman", "Indrani Rahman", RAHMAN);
        assert_eq!(t.len(), 1);
        let t = verified(t.into_iter().next().unwrap());
        assert!(t.name_spans.is_empty());
        assert_eq!(words(&t.text, t.attribute_spans.iter().map(|&(s, e, _)| (s, e))), ["Miss", "Miss"]);
        let inst = substitute(&t, "Mike", Gender::M, &SwapTable::bundled()).unwrap();
        assert!(inst.substituted_text.contains("he became the first Mr India"));
        assert!(inst.substituted_text.contains("the Mr Universe 1952"));
    }

    #[test]
    fn rahman_her_mother_is_possessive() {
        let text = "Soon, she was travelling along with her mother and performing all over the world. She married in 1960.";
        let t = verified(harvest("r", "Indrani Rahman", text).remove(0));
        let inst = substitute(&t, "Mike", Gender::M, &SwapTable::bundled()).unwrap();
        assert!(inst.substituted_text.starts_with("Soon, he was travelling along with his mother"), "{}", inst.substituted_text);
        assert!(inst.substituted_text.contains("He married in 1960."));
    }

    #[test]
    fn her_as_object() {
        let text = "He met her in Paris and married her.";
        let loc = SpanLocator::bundled();
        let spans = loc.locate(text, &[], Gender::F);
        assert_eq!(spans.pronouns.iter().map(|p| p.2).collect::<Vec<_>>(), [SwapKind::Object, SwapKind::Object]);
        let spans = loc.locate("They saw her perform.", &[], Gender::F);
        assert_eq!(spans.pronouns[0].2, SwapKind::Object);
    }

    #[test]
    fn ambiguous_her_is_flagged() {
        let spans = SpanLocator::bundled().locate("Critics called her brilliant.", &[], Gender::F);
        assert_eq!(spans.pronouns[0].2, SwapKind::PossDet);
        assert_eq!(spans.notes.len(), 1);
    }

    #[test]
    fn full_name_is_one_span() {
        let spans = SpanLocator::bundled().locate("Carole Baskin married. Baskin left.", &["Carole", "Baskin"], Gender::F);
        assert_eq!(spans.names, [(0, 13), (23, 29)]);
    }

    #[test]
    fn kin_words_not_swapped() {
        let spans = SpanLocator::bundled().locate("She married her husband; her mother came.", &[], Gender::F);
        assert!(spans.attributes.is_empty());
        assert_eq!(spans.pronouns.len(), 3);
    }

    #[test]
    fn unverified_and_empty_name_rejected() {
        let t = harvest("baskin", "Carole Baskin", BASKIN).remove(0);
        let swaps = SwapTable::bundled();
        assert!(matches!(substitute(&t, "Mike", Gender::M, &swaps), Err(CalibrateError::Unverified(_))));
        let t = verified(t);
        assert!(matches!(substitute(&t, "  ", Gender::M, &swaps), Err(CalibrateError::EmptyName)));
    }

    #[test]
    fn hundred_instances() {
        let t = verified(harvest("baskin", "Carole Baskin", BASKIN).remove(0));
        let inst = generate_synthetic(&t, &NameList::bundled(), &SwapTable::bundled()).unwrap();
        assert_eq!(inst.len(), 100);
        assert!(inst[..50].iter().all(|i| i.assigned_gender == Gender::F));
        assert!(inst[50..].iter().all(|i| i.assigned_gender == Gender::M));
        assert_eq!(inst[0].id, format!("{}#000", t.id));
        for i in &inst {
            let c: Vec<char> = i.substituted_text.chars().collect();
            for &(s, e) in &i.name_spans {
                assert_eq!(char_slice(&c, s, e), i.assigned_name);
            }
        }
    }

    #[test]
    fn nameless_template_copies() {
        let t = verified(harvest("rahman", "Indrani Rahman", RAHMAN).remove(0));
        let inst = generate_synthetic(&t, &NameList::bundled(), &SwapTable::bundled()).unwrap();
        assert!(inst[..50].iter().all(|i| i.substituted_text == RAHMAN));
        let male = &inst[50].substituted_text;
        assert!(inst[50..].iter().all(|i| &i.substituted_text == male));
        assert_ne!(male, RAHMAN);
    }

    #[test]
    fn round_trip_restores_text() {
        let swaps = SwapTable::bundled();
        for (id, name, text) in [("b", "Carole Baskin", BASKIN), ("r", "Indrani Rahman", RAHMAN)] {
            let t = verified(harvest(id, name, text).remove(0));
            let there = substitute(&t, "Mike", Gender::M, &swaps).unwrap();
            let back = substitute(&there.as_template(), name.split(' ').next_back().unwrap(), Gender::F, &swaps).unwrap();
            assert_eq!(back.substituted_text, text);
        }
    }

    #[test]
    fn review_round_trip_and_validation() {
        let t = harvest("baskin", "Carole Baskin", BASKIN);
        let mut buf = Vec::new();
        write_review(&t, &mut buf).unwrap();
        assert_eq!(read_review(buf.as_slice()).unwrap(), t);

        let mut bad = t[0].clone();
        bad.pronoun_spans.push((0, 9999, SwapKind::Subject));
        let mut buf = Vec::new();
        write_review(&[bad], &mut buf).unwrap();
        match read_review(buf.as_slice()).unwrap_err() {
            CalibrateError::Review(d) => assert!(d[0].message.contains("out of bounds")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sentence_without_target_is_excluded() {
        assert!(harvest("x", "Ann Lee", "She worked as a chef. She retired.").is_empty());
    }
}
