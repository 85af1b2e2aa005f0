//! Word-embedding association scores between event words and gender
//! attribute words.
//!
//! For a word `w` and attribute lists `A` (female) and `B` (male),
//! `s(w, A, B)` is the mean cosine of `w` to `A` minus its mean cosine to
//! `B`. The raw score of female events `Ef` against male events `Em` is
//! `Σ s(ef) − Σ s(em)`; the effect size divides the difference of means by
//! the sample standard deviation of all `s` values.
//!
//! Sums run over tokens in sorted order, so results do not depend on the
//! order of any input list.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus};
use crate::detect::{select_documents, SliceFilter};
use crate::error::{join_diagnostics, LineDiagnostic};
use crate::resources::{self, list_lines};
use crate::Gender;

#[derive(Debug, thiserror::Error)]
pub enum WeatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid embedding file:\n{}", join_diagnostics(.0))]
    Embeddings(Vec<LineDiagnostic>),
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("similarity with a zero vector is undefined")]
    ZeroVector,
    #[error("no token of attribute list {0} has an embedding")]
    NoAttributeEmbeddings(char),
    #[error("no {gender} target token has an embedding (skipped: {})", .skipped.join(", "))]
    NoTargetEmbeddings { gender: Gender, skipped: Vec<String> },
    #[error("invalid attribute list: {0}")]
    Attributes(String),
}

/// Token vectors of one shared dimension. Tokens are lowercase.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
    pub warnings: Vec<String>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors.
    pub fn from_vectors<I, S>(vectors: I) -> Result<Self, WeatError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut table = EmbeddingTable { dimension: 0, vectors: HashMap::new(), warnings: Vec::new() };
        for (token, v) in vectors {
            if table.vectors.is_empty() {
                table.dimension = v.len();
            } else if v.len() != table.dimension {
                return Err(WeatError::DimensionMismatch(table.dimension, v.len()));
            }
            table.vectors.insert(token.as_ref().to_lowercase(), v);
        }
        Ok(table)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }
}

/// Parses `token f1 … fd` lines, keeping only `vocab` tokens when given. A
/// leading `count dimension` header line is skipped.
pub fn parse_embeddings<R: BufRead>(reader: R, vocab: Option<&HashSet<String>>) -> Result<EmbeddingTable, WeatError> {
    let mut table = EmbeddingTable { dimension: 0, vectors: HashMap::new(), warnings: Vec::new() };
    let mut dimension: Option<usize> = None;
    let mut errors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| WeatError::Io { path: PathBuf::new(), source })?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if i == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let diag = |message: String| LineDiagnostic { line: i + 1, message };
        match dimension {
            None if rest.is_empty() => {
                errors.push(diag(format!("token {token:?} has no vector")));
                continue;
            }
            None => dimension = Some(rest.len()),
            Some(d) if d != rest.len() => {
                errors.push(diag(format!("expected {d} values, found {}", rest.len())));
                continue;
            }
            Some(_) => {}
        }
        let token = token.to_lowercase();
        if vocab.is_some_and(|v| !v.contains(&token)) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = rest.iter().map(|x| x.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                if table.vectors.insert(token.clone(), v).is_some() {
                    let w = format!("line {}: duplicate token {token:?}; keeping the later vector", i + 1);
                    log::warn!("{w}");
                    table.warnings.push(w);
                }
            }
            Ok(_) => errors.push(diag("non-finite value".into())),
            Err(e) => errors.push(diag(format!("bad number: {e}"))),
        }
    }
    if !errors.is_empty() {
        return Err(WeatError::Embeddings(errors));
    }
    table.dimension = dimension.unwrap_or(0);
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>, vocab: Option<&HashSet<String>>) -> Result<EmbeddingTable, WeatError> {
    let path = path.as_ref();
    let io = |source| WeatError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    match parse_embeddings(BufReader::new(file), vocab) {
        Err(WeatError::Io { source, .. }) => Err(io(source)),
        other => other,
    }
}

/// Cosine similarity, clamped to [−1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, WeatError> {
    if u.len() != v.len() {
        return Err(WeatError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(WeatError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Female (`a`) and male (`b`) attribute words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeLists {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl Default for AttributeLists {
    fn default() -> Self {
        Self::parse(resources::ATTRIBUTES).expect("bundled attribute lists are valid")
    }
}

impl AttributeLists {
    pub fn new<S: Into<String>>(a: impl IntoIterator<Item = S>, b: impl IntoIterator<Item = S>) -> Self {
        AttributeLists {
            a: a.into_iter().map(|s| s.into().to_lowercase()).collect(),
            b: b.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }

    /// Parses `A|B<TAB>token` lines.
    pub fn parse(text: &str) -> Result<Self, WeatError> {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for line in list_lines(text) {
            match line.split_once('\t').map(|(g, t)| (g.trim(), t.trim().to_lowercase())) {
                Some(("A", t)) if !t.is_empty() => a.push(t),
                Some(("B", t)) if !t.is_empty() => b.push(t),
                _ => return Err(WeatError::Attributes(format!("expected `A|B<TAB>token`, got {line:?}"))),
            }
        }
        if a.is_empty() || b.is_empty() {
            return Err(WeatError::Attributes("both lists need at least one token".into()));
        }
        Ok(AttributeLists { a, b })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WeatError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| WeatError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn swapped(&self) -> Self {
        AttributeLists { a: self.b.clone(), b: self.a.clone() }
    }
}

fn sorted(tokens: &[String]) -> Vec<&str> {
    let mut v: Vec<&str> = tokens.iter().map(String::as_str).collect();
    v.sort_unstable();
    v
}

/// Attribute vectors, with tokens lacking embeddings dropped.
struct EmbeddedAttributes<'e> {
    a: Vec<&'e [f64]>,
    b: Vec<&'e [f64]>,
    missing: Vec<String>,
}

impl<'e> EmbeddedAttributes<'e> {
    fn new(attrs: &AttributeLists, emb: &'e EmbeddingTable) -> Result<Self, WeatError> {
        let mut missing = Vec::new();
        let mut pick = |list: &[String], name: char| {
            let v: Vec<&'e [f64]> = sorted(list)
                .into_iter()
                .filter_map(|t| {
                    let got = emb.get(t);
                    if got.is_none() {
                        missing.push(t.to_string());
                    }
                    got
                })
                .collect();
            if v.is_empty() {
                Err(WeatError::NoAttributeEmbeddings(name))
            } else {
                Ok(v)
            }
        };
        let a = pick(&attrs.a, 'A')?;
        let b = pick(&attrs.b, 'B')?;
        if !missing.is_empty() {
            log::warn!("attribute tokens without embeddings skipped: {}", missing.join(", "));
        }
        Ok(EmbeddedAttributes { a, b, missing })
    }

    fn association(&self, w: &[f64]) -> Result<f64, WeatError> {
        let mean = |list: &[&[f64]]| -> Result<f64, WeatError> {
            let mut sum = 0.0;
            for x in list {
                sum += cosine(w, x)?;
            }
            Ok(sum / list.len() as f64)
        };
        Ok(mean(&self.a)? - mean(&self.b)?)
    }
}

/// `s(w, A, B)`, or `None` when `w` has no embedding.
pub fn association(w: &str, attrs: &AttributeLists, emb: &EmbeddingTable) -> Result<Option<f64>, WeatError> {
    let Some(v) = emb.get(w) else { return Ok(None) };
    EmbeddedAttributes::new(attrs, emb)?.association(v).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    /// `Σ s(ef) − Σ s(em)`.
    pub raw_score: f64,
    /// Difference of mean associations over their pooled sample standard
    /// deviation; absent with fewer than two values or zero spread.
    pub effect_size: Option<f64>,
    pub per_word: BTreeMap<String, f64>,
    pub skipped_tokens: Vec<String>,
    pub skipped_attributes: Vec<String>,
    pub n_female: usize,
    pub n_male: usize,
}

/// WEAT of female event words against male event words.
pub fn weat_score(
    e_f: &[String],
    e_m: &[String],
    attrs: &AttributeLists,
    emb: &EmbeddingTable,
) -> Result<WeatResult, WeatError> {
    let embedded = EmbeddedAttributes::new(attrs, emb)?;
    let mut per_word = BTreeMap::new();
    let mut skipped = BTreeSet::new();

    let mut score = |list: &[String], gender: Gender| -> Result<Vec<f64>, WeatError> {
        let tokens = sorted(list);
        let values: Vec<Option<f64>> = tokens
            .par_iter()
            .map(|t| emb.get(t).map(|v| embedded.association(v)).transpose())
            .collect::<Result<_, _>>()?;
        let mut kept = Vec::new();
        let mut missed = Vec::new();
        for (t, v) in tokens.iter().zip(values) {
            match v {
                Some(s) => {
                    per_word.insert(t.to_string(), s);
                    kept.push(s);
                }
                None => missed.push(t.to_string()),
            }
        }
        if kept.is_empty() {
            return Err(WeatError::NoTargetEmbeddings { gender, skipped: missed });
        }
        skipped.extend(missed);
        Ok(kept)
    };
    let sf = score(e_f, Gender::F)?;
    let sm = score(e_m, Gender::M)?;

    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let raw_score = sum(&sf) - sum(&sm);
    let mut all: Vec<f64> = sf.iter().chain(&sm).copied().collect();
    all.sort_by(f64::total_cmp);
    let effect_size = if all.len() >= 2 {
        let mean = sum(&all) / all.len() as f64;
        let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (all.len() - 1) as f64;
        let sd = var.sqrt();
        (sd > 0.0).then(|| (sum(&sf) / sf.len() as f64 - sum(&sm) / sm.len() as f64) / sd)
    } else {
        None
    };
    Ok(WeatResult {
        raw_score,
        effect_size,
        per_word,
        skipped_tokens: skipped.into_iter().collect(),
        skipped_attributes: embedded.missing,
        n_female: sf.len(),
        n_male: sm.len(),
    })
}

/// The bundled stop-word list.
pub fn stop_words() -> HashSet<String> {
    list_lines(resources::STOP_WORDS).map(str::to_lowercase).collect()
}

/// Distinct non-stop-word tokens of each gender's text in a corpus slice.
pub fn slice_tokens(corpus: &Corpus, filter: &SliceFilter, stop: &HashSet<String>) -> [Vec<String>; 2] {
    let mut out: [BTreeSet<String>; 2] = Default::default();
    for r in select_documents(corpus, filter) {
        if let Some(text) = r.section(&filter.section) {
            out[r.gender as usize].extend(tokenize(text).into_iter().filter(|t| !stop.contains(t)));
        }
    }
    out.map(|s| s.into_iter().collect())
}

/// WEAT over every distinct non-stop-word token of the slice rather than
/// over extracted events.
pub fn weat_star(
    corpus: &Corpus,
    filter: &SliceFilter,
    stop: &HashSet<String>,
    attrs: &AttributeLists,
    emb: &EmbeddingTable,
) -> Result<WeatResult, WeatError> {
    let [f, m] = slice_tokens(corpus, filter, stop);
    weat_score(&f, &m, attrs, emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn unit_emb() -> (EmbeddingTable, AttributeLists) {
        let emb = EmbeddingTable::from_vectors([
            ("wed", vec![1.0, 0.0]),
            ("war", vec![0.0, 1.0]),
            ("she", vec![1.0, 0.0]),
            ("woman", vec![1.0, 0.0]),
            ("he", vec![0.0, 1.0]),
            ("man", vec![0.0, 1.0]),
        ])
        .unwrap();
        (emb, AttributeLists::new(["she", "woman"], ["he", "man"]))
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(WeatError::ZeroVector)));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(WeatError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn association_cases() {
        let (emb, attrs) = unit_emb();
        assert_eq!(association("wed", &attrs, &emb).unwrap(), Some(1.0));
        assert_eq!(association("war", &attrs, &emb).unwrap(), Some(-1.0));
        assert_eq!(association("nope", &attrs, &emb).unwrap(), None);
        let same = EmbeddingTable::from_vectors([("w", vec![1.0, 1.0]), ("a", vec![1.0, 1.0]), ("b", vec![1.0, 1.0])]).unwrap();
        assert_eq!(association("w", &AttributeLists::new(["a"], ["b"]), &same).unwrap(), Some(0.0));
    }

    #[test]
    fn raw_score_cases() {
        let (emb, attrs) = unit_emb();
        let r = weat_score(&s(&["wed"]), &s(&["war"]), &attrs, &emb).unwrap();
        assert_eq!(r.raw_score, 2.0);
        assert_eq!(weat_score(&s(&["wed"]), &s(&["war"]), &attrs.swapped(), &emb).unwrap().raw_score, -2.0);
        assert_eq!(weat_score(&s(&["wed", "war"]), &s(&["war", "wed"]), &attrs, &emb).unwrap().raw_score, 0.0);
    }

    #[test]
    fn skipped_tokens_listed() {
        let (emb, attrs) = unit_emb();
        let r = weat_score(&s(&["wed", "zzz"]), &s(&["war"]), &attrs, &emb).unwrap();
        assert_eq!(r.skipped_tokens, ["zzz"]);
        assert_eq!(r.n_female, 1);
        let err = weat_score(&s(&["zzz"]), &s(&["war"]), &attrs, &emb).unwrap_err();
        assert!(matches!(err, WeatError::NoTargetEmbeddings { gender: Gender::F, .. }));
    }

    #[test]
    fn missing_attributes() {
        let (emb, _) = unit_emb();
        let attrs = AttributeLists::new(["she", "sister"], ["qq"]);
        assert!(matches!(weat_score(&s(&["wed"]), &s(&["war"]), &attrs, &emb), Err(WeatError::NoAttributeEmbeddings('B'))));
    }

    #[test]
    fn default_attributes() {
        let a = AttributeLists::default();
        assert_eq!(a.a, s(&["female", "woman", "girl", "sister", "she", "her", "hers", "daughter"]));
        assert_eq!(a.b, s(&["male", "man", "boy", "brother", "he", "him", "his", "son"]));
    }

    #[test]
    fn parse_file() {
        let t = parse_embeddings("a 1 0\nb 0 1\n".as_bytes(), None).unwrap();
        assert_eq!((t.dimension(), t.len()), (2, 2));
        let vocab: HashSet<String> = ["a".to_string()].into();
        assert_eq!(parse_embeddings("a 1 0\nb 0 1\n".as_bytes(), Some(&vocab)).unwrap().len(), 1);
        match parse_embeddings("a 1 0\nb 0 1\nc 1\n".as_bytes(), None).unwrap_err() {
            WeatError::Embeddings(d) => assert_eq!(d[0].line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_and_duplicates() {
        let t = parse_embeddings("2 2\nA 1 0\na 0 1\n".as_bytes(), None).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[0.0, 1.0][..]));
        assert_eq!(t.warnings.len(), 1);
    }

    #[test]
    fn weat_star_identical_texts_is_zero() {
        use crate::corpus::parse_corpus;
        let lines = [
            r#"{"id":"f","name":"A","gender":"F","occupation":"x","sections":{"career":"the wed war"}}"#,
            r#"{"id":"m","name":"B","gender":"M","occupation":"x","sections":{"career":"the wed war"}}"#,
        ];
        let (c, _) = parse_corpus(lines.join("\n").as_bytes()).unwrap();
        let (emb, attrs) = unit_emb();
        let r = weat_star(&c, &SliceFilter::section("career"), &stop_words(), &attrs, &emb).unwrap();
        assert_eq!(r.raw_score, 0.0);
        assert!(!r.per_word.contains_key("the"));
    }

    fn arb_case() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, usize, usize, usize)> {
        (1usize..=5, 1usize..=5, 1usize..=5, 1usize..=5).prop_flat_map(|(nf, nm, na, nb)| {
            let v = prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6), nf + nm + na + nb);
            (v, Just(nf), Just(nm), Just(na), Just(nb))
        })
    }

    fn equal_sizes() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, usize)> {
        (1usize..=5, 1usize..=4, 1usize..=4).prop_flat_map(|(n, na, nb)| {
            let v = prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6), 2 * n + na + nb);
            (v, Just(n), Just(na))
        })
    }

    fn build(vs: &[Vec<f64>], nf: usize, nm: usize, na: usize) -> (EmbeddingTable, Vec<String>, Vec<String>, AttributeLists) {
        let names: Vec<String> = (0..vs.len()).map(|i| format!("t{i}")).collect();
        let emb = EmbeddingTable::from_vectors(names.iter().cloned().zip(vs.iter().cloned())).unwrap();
        let ef = names[..nf].to_vec();
        let em = names[nf..nf + nm].to_vec();
        let attrs = AttributeLists { a: names[nf + nm..nf + nm + na].to_vec(), b: names[nf + nm + na..].to_vec() };
        (emb, ef, em, attrs)
    }

    proptest! {
        #[test]
        fn antisymmetry((vs, nf, nm, na, _nb) in arb_case()) {
            let (emb, ef, em, attrs) = build(&vs, nf, nm, na);
            let r = weat_score(&ef, &em, &attrs, &emb).unwrap().raw_score;
            let ab = weat_score(&ef, &em, &attrs.swapped(), &emb).unwrap().raw_score;
            let fm = weat_score(&em, &ef, &attrs, &emb).unwrap().raw_score;
            prop_assert!((r + ab).abs() < 1e-9);
            prop_assert!((r + fm).abs() < 1e-9);
        }

        #[test]
        fn permutation_invariance((vs, nf, nm, na, _nb) in arb_case(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let (emb, ef, em, attrs) = build(&vs, nf, nm, na);
            let a = weat_score(&ef, &em, &attrs, &emb).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (mut ef2, mut em2, mut attrs2) = (ef.clone(), em.clone(), attrs.clone());
            ef2.shuffle(&mut rng);
            em2.shuffle(&mut rng);
            attrs2.a.shuffle(&mut rng);
            attrs2.b.shuffle(&mut rng);
            let b = weat_score(&ef2, &em2, &attrs2, &emb).unwrap();
            prop_assert_eq!(a.raw_score, b.raw_score);
            prop_assert_eq!(a.effect_size, b.effect_size);
        }

        #[test]
        fn bounded_values((vs, n, na) in equal_sizes()) {
            let (emb, ef, em, attrs) = build(&vs, n, n, na);
            let r = weat_score(&ef, &em, &attrs, &emb).unwrap();
            for v in r.per_word.values() {
                prop_assert!((-2.0..=2.0).contains(v));
            }
            if let Some(d) = r.effect_size {
                prop_assert!(d.abs() < 2.0, "{}", d);
            }
        }
    }
}
