//! Word lists shipped with the crate. Every one of them can be replaced by
//! a user file with the same format.

/// `lemma[<TAB>type]` per line.
pub const LEXICON: &str = include_str!("../resources/lexicon.tsv");
/// Base-form verbs, one per line; used to resolve "her"/"his".
pub const VERBS: &str = include_str!("../resources/verbs.txt");
/// `F|M<TAB>name` per line, 50 of each.
pub const NAMES: &str = include_str!("../resources/names.txt");
/// `kind<TAB>female<TAB>male` per line.
pub const SWAPS: &str = include_str!("../resources/swaps.tsv");
/// `A|B<TAB>token` per line.
pub const ATTRIBUTES: &str = include_str!("../resources/attributes.txt");
/// English stop words, one per line.
pub const STOP_WORDS: &str = include_str!("../resources/stop_words.txt");

/// Non-empty, non-comment lines of a word list.
pub fn list_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}
