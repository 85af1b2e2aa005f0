use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CalibrateError;
use crate::resources::{self, list_lines};
use crate::{Gender, LineDiagnostic};

/// Replacement first names: exactly 50 female and 50 male.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameList {
    female: Vec<String>,
    male: Vec<String>,
}

pub const NAMES_PER_GENDER: usize = 50;

impl NameList {
    pub fn new(female: Vec<String>, male: Vec<String>) -> Result<Self, CalibrateError> {
        for (g, list) in [(Gender::F, &female), (Gender::M, &male)] {
            if list.len() != NAMES_PER_GENDER {
                return Err(CalibrateError::NameList(format!(
                    "expected {NAMES_PER_GENDER} {} names, found {}",
                    g.word(),
                    list.len()
                )));
            }
            if let Some(bad) = list.iter().find(|n| n.trim().is_empty()) {
                return Err(CalibrateError::NameList(format!("blank {} name {bad:?}", g.word())));
            }
        }
        let lower: std::collections::HashSet<String> = female.iter().map(|n| n.to_lowercase()).collect();
        if let Some(shared) = male.iter().find(|n| lower.contains(&n.to_lowercase())) {
            return Err(CalibrateError::NameList(format!("{shared:?} appears in both name lists")));
        }
        Ok(NameList { female, male })
    }

    /// Parses `F|M<TAB>name` lines.
    pub fn parse(text: &str) -> Result<Self, CalibrateError> {
        let (mut female, mut male) = (Vec::new(), Vec::new());
        for line in list_lines(text) {
            let (g, name) = line
                .split_once('\t')
                .ok_or_else(|| CalibrateError::NameList(format!("expected `F|M<TAB>name`, got {line:?}")))?;
            let g: Gender = g.trim().parse().map_err(|e| CalibrateError::NameList(format!("{e}")))?;
            match g {
                Gender::F => female.push(name.trim().to_string()),
                Gender::M => male.push(name.trim().to_string()),
            }
        }
        NameList::new(female, male)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CalibrateError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn bundled() -> Self {
        Self::parse(resources::NAMES).expect("bundled name list is valid")
    }

    pub fn names(&self, gender: Gender) -> &[String] {
        match gender {
            Gender::F => &self.female,
            Gender::M => &self.male,
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<String, CalibrateError> {
    std::fs::read_to_string(path).map_err(|source| CalibrateError::Io { path: path.to_path_buf(), source })
}

/// Grammatical role of a swappable word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapKind {
    Subject,
    Object,
    PossDet,
    PossPron,
    Reflexive,
    /// Honorific; only matched when capitalized.
    Title,
    Attribute,
}

impl SwapKind {
    pub fn is_pronoun(self) -> bool {
        !matches!(self, SwapKind::Title | SwapKind::Attribute)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SwapKind::Subject => "subject",
            SwapKind::Object => "object",
            SwapKind::PossDet => "poss_det",
            SwapKind::PossPron => "poss_pron",
            SwapKind::Reflexive => "reflexive",
            SwapKind::Title => "title",
            SwapKind::Attribute => "attribute",
        }
    }
}

impl fmt::Display for SwapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SwapKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "subject" => SwapKind::Subject,
            "object" => SwapKind::Object,
            "poss_det" => SwapKind::PossDet,
            "poss_pron" => SwapKind::PossPron,
            "reflexive" => SwapKind::Reflexive,
            "title" => SwapKind::Title,
            "attribute" => SwapKind::Attribute,
            other => return Err(format!("unknown swap kind {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SwapPair {
    kind: SwapKind,
    female: String,
    male: String,
}

impl SwapPair {
    fn side(&self, g: Gender) -> &str {
        match g {
            Gender::F => &self.female,
            Gender::M => &self.male,
        }
    }
}

/// Gendered word pairs. Lookups return the first matching pair, so when
/// several female words map to one male word the first one listed is
/// used in the male-to-female direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapTable {
    pairs: Vec<SwapPair>,
}

impl SwapTable {
    /// Parses `kind<TAB>female<TAB>male` lines.
    pub fn parse(text: &str) -> Result<Self, CalibrateError> {
        let mut pairs = Vec::new();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let diag = |message: String| LineDiagnostic { line: i + 1, message };
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                errors.push(diag(format!("expected `kind<TAB>female<TAB>male`, got {line:?}")));
                continue;
            }
            match cols[0].parse::<SwapKind>() {
                Ok(kind) => pairs.push(SwapPair { kind, female: cols[1].to_lowercase(), male: cols[2].to_lowercase() }),
                Err(e) => errors.push(diag(e)),
            }
        }
        if !errors.is_empty() {
            return Err(CalibrateError::SwapTable(errors));
        }
        Ok(SwapTable { pairs })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CalibrateError> {
        Self::parse(&read(path.as_ref())?)
    }

    pub fn bundled() -> Self {
        Self::parse(resources::SWAPS).expect("bundled swap table is valid")
    }

    /// Kinds under which `word` (lowercase) is a `gender` word.
    pub fn kinds_of(&self, word: &str, gender: Gender) -> Vec<SwapKind> {
        let mut kinds: Vec<SwapKind> = self.pairs.iter().filter(|p| p.side(gender) == word).map(|p| p.kind).collect();
        kinds.dedup();
        kinds
    }

    /// The opposite-gender counterpart of a `from`-gender word.
    pub fn swap(&self, kind: SwapKind, word: &str, from: Gender) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.kind == kind && p.side(from) == word)
            .map(|p| p.side(from.opposite()))
    }

    /// True when swapping there and back returns `word`.
    pub fn is_invertible(&self, kind: SwapKind, word: &str, from: Gender) -> bool {
        self.swap(kind, word, from)
            .and_then(|w| self.swap(kind, w, from.opposite()))
            .is_some_and(|back| back == word)
    }
}

/// Re-applies the casing of `model` to lowercase `word`.
pub fn match_case(model: &str, word: &str) -> String {
    let mut chars = model.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let rest_upper = model.chars().count() > 1 && model.chars().skip(1).all(|c| !c.is_lowercase());
    if first_upper && rest_upper {
        word.to_uppercase()
    } else if first_upper {
        let mut w = word.chars();
        w.next().map(|c| c.to_uppercase().chain(w).collect()).unwrap_or_default()
    } else {
        word.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_names_are_valid() {
        let n = NameList::bundled();
        assert_eq!(n.names(Gender::F).len(), 50);
        assert_eq!(n.names(Gender::M).len(), 50);
    }

    #[test]
    fn wrong_sized_list_rejected() {
        let err = NameList::new(vec!["Ann".into()], vec!["Bob".into()]).unwrap_err();
        assert!(err.to_string().contains("expected 50"));
        assert!(NameList::parse("").is_err());
    }

    #[test]
    fn overlapping_lists_rejected() {
        let f: Vec<String> = (0..50).map(|i| format!("F{i}")).collect();
        let mut m: Vec<String> = (0..50).map(|i| format!("M{i}")).collect();
        m[3] = "f7".into();
        assert!(NameList::new(f, m).unwrap_err().to_string().contains("both"));
    }

    #[test]
    fn swap_lookup() {
        let t = SwapTable::bundled();
        assert_eq!(t.swap(SwapKind::Subject, "she", Gender::F), Some("he"));
        assert_eq!(t.swap(SwapKind::PossDet, "her", Gender::F), Some("his"));
        assert_eq!(t.swap(SwapKind::Object, "her", Gender::F), Some("him"));
        assert_eq!(t.swap(SwapKind::PossPron, "his", Gender::M), Some("hers"));
        assert_eq!(t.swap(SwapKind::Title, "mr", Gender::M), Some("miss"));
        assert_eq!(t.kinds_of("her", Gender::F), vec![SwapKind::Object, SwapKind::PossDet]);
        assert!(t.kinds_of("mother", Gender::F).is_empty());
    }

    #[test]
    fn pronouns_are_invertible() {
        let t = SwapTable::bundled();
        for (k, w) in [
            (SwapKind::Subject, "she"),
            (SwapKind::Object, "her"),
            (SwapKind::PossDet, "her"),
            (SwapKind::PossPron, "hers"),
            (SwapKind::Reflexive, "herself"),
            (SwapKind::Title, "miss"),
        ] {
            assert!(t.is_invertible(k, w, Gender::F), "{k} {w}");
        }
        assert!(!t.is_invertible(SwapKind::Title, "mrs", Gender::F));
    }

    #[test]
    fn bad_swap_line() {
        match SwapTable::parse("subject\tshe\thet\nbogus\ta\tb\n").unwrap_err() {
            CalibrateError::SwapTable(d) => assert_eq!(d[0].line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn casing() {
        assert_eq!(match_case("She", "he"), "He");
        assert_eq!(match_case("she", "he"), "he");
        assert_eq!(match_case("MISS", "mr"), "MR");
        assert_eq!(match_case("Miss", "mr"), "Mr");
        assert_eq!(match_case("I", "x"), "X");
    }
}
