//! Rule-based sentence splitting and tokenization.
//!
//! All offsets are counted in Unicode scalar values (`char`s), which is
//! what the annotation files use.

use serde::{Deserialize, Serialize};

/// Tokens ending in a period that never close a sentence.
pub const ABBREVIATIONS: &[&str] = &["Mr.", "Mrs.", "Ms.", "Dr.", "St.", "e.g.", "i.e."];

const TERMINALS: &[char] = &['.', '?', '!'];
const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')'];
const OPENING_QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{2018}'];

/// One sentence of a section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub section: String,
    pub index: usize,
    pub text: String,
    /// Start of `text` within the section, in chars.
    pub char_offset: usize,
}

impl Sentence {
    /// Splits a section text into sentences tagged with their provenance.
    pub fn split_section(doc_id: &str, section: &str, text: &str) -> Vec<Sentence> {
        split_byte_ranges(text)
            .into_iter()
            .enumerate()
            .map(|(index, (start, end, char_offset))| Sentence {
                doc_id: doc_id.to_string(),
                section: section.to_string(),
                index,
                text: text[start..end].to_string(),
                char_offset,
            })
            .collect()
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Splits prose on `.`, `?` or `!` followed by whitespace and an uppercase
/// letter or opening quote, except after the tokens in [`ABBREVIATIONS`].
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    Sentence::split_section("", "", text)
}

// (byte start, byte end, char offset) of each trimmed sentence.
fn split_byte_ranges(text: &str) -> Vec<(usize, usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize; // index into chars
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !TERMINALS.contains(&c) {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while end < chars.len() && CLOSERS.contains(&chars[end].1) {
            end += 1;
        }
        let mut next = end;
        while next < chars.len() && chars[next].1.is_whitespace() {
            next += 1;
        }
        let boundary = next > end
            && next < chars.len()
            && (chars[next].1.is_uppercase() || OPENING_QUOTES.contains(&chars[next].1))
            && !(c == '.' && ends_with_abbreviation(text, &chars, start, i));
        if boundary {
            push_trimmed(text, &chars, start, end, &mut out);
            start = next;
            i = next;
        } else {
            i = end;
        }
    }
    push_trimmed(text, &chars, start, chars.len(), &mut out);
    out
}

fn ends_with_abbreviation(text: &str, chars: &[(usize, char)], floor: usize, period: usize) -> bool {
    let mut word_start = period;
    while word_start > floor && !chars[word_start - 1].1.is_whitespace() {
        word_start -= 1;
    }
    let from = chars[word_start].0;
    let to = chars[period].0 + 1;
    let word = text[from..to].trim_start_matches(|c: char| OPENING_QUOTES.contains(&c) || c == '(');
    ABBREVIATIONS.contains(&word)
}

fn push_trimmed(text: &str, chars: &[(usize, char)], mut from: usize, mut to: usize, out: &mut Vec<(usize, usize, usize)>) {
    while from < to && chars[from].1.is_whitespace() {
        from += 1;
    }
    while to > from && chars[to - 1].1.is_whitespace() {
        to -= 1;
    }
    if from < to {
        let byte_end = chars.get(to).map_or(text.len(), |&(b, _)| b);
        out.push((chars[from].0, byte_end, from));
    }
}

/// A token borrowed from its source text, with char offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Maximal alphanumeric runs of `text`. Punctuation, hyphens and
/// apostrophes separate tokens and are dropped.
pub fn token_spans(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None; // (byte start, char start)
    let mut char_pos = 0usize;
    for (b, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if run.is_none() {
                run = Some((b, char_pos));
            }
        } else if let Some((bs, cs)) = run.take() {
            out.push(Token { text: &text[bs..b], start: cs, end: char_pos });
        }
        char_pos += 1;
    }
    if let Some((bs, cs)) = run {
        out.push(Token { text: &text[bs..], start: cs, end: char_pos });
    }
    out
}

/// Lowercased tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text).into_iter().map(|t| t.text.to_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(s: &str) -> Vec<String> {
        split_sentences(s).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn two_terminals() {
        assert_eq!(texts("He left. She stayed."), vec!["He left.", "She stayed."]);
    }

    #[test]
    fn abbreviation_suppresses_split() {
        // Rule table: a period after "Mr." never splits; so only the final
        // terminal (end of text) closes the sentence.
        assert_eq!(texts("Mr. Smith left."), vec!["Mr. Smith left."]);
        assert_eq!(texts("She met Dr. Jones. He left."), vec!["She met Dr. Jones.", "He left."]);
        assert_eq!(texts("Cats, e.g. Tabby, stay."), vec!["Cats, e.g. Tabby, stay."]);
    }

    #[test]
    fn empty_text() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        assert_eq!(texts("It cost 3.5 million. done."), vec!["It cost 3.5 million. done."]);
    }

    #[test]
    fn quotes_and_questions() {
        assert_eq!(
            texts("She asked \"Why?\" Then she left! \"Fine,\" he said."),
            vec!["She asked \"Why?\"", "Then she left!", "\"Fine,\" he said."]
        );
    }

    #[test]
    fn offsets_are_chars() {
        let s = split_sentences("Café opened. Niño left.");
        assert_eq!(s[1].char_offset, 13);
        assert_eq!(s[1].index, 1);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Too Young to Marry"), vec!["too", "young", "to", "marry"]);
        assert_eq!(tokenize("she married; he left"), vec!["she", "married", "he", "left"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("well-known author's"), vec!["well", "known", "author", "s"]);
    }

    #[test]
    fn token_offsets_point_at_surface() {
        let text = "they were married in Yuma";
        let t = token_spans(text);
        assert_eq!(t[2].text, "married");
        assert_eq!((t[2].start, t[2].end), (10, 17));
    }

    proptest! {
        #[test]
        fn split_reconstructs_text(words in proptest::collection::vec("[A-Za-z]{1,6}[.?!,]?", 0..30)) {
            let text = words.join(" ");
            let chars: Vec<char> = text.chars().collect();
            let mut cursor = 0;
            for s in split_sentences(&text) {
                let slice: String = chars[s.char_offset..s.char_offset + s.char_len()].iter().collect();
                prop_assert_eq!(&slice, &s.text);
                prop_assert!(s.char_offset >= cursor);
                prop_assert!(chars[cursor..s.char_offset].iter().all(|c| c.is_whitespace()));
                cursor = s.char_offset + s.char_len();
            }
            prop_assert!(chars[cursor..].iter().all(|c| c.is_whitespace()));
        }

        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            // Lowercasing can itself change alphanumeric segmentation for a
            // handful of exotic scalars; restrict to stable ones.
            prop_assume!(once.iter().all(|t| t.chars().all(|c| c.to_lowercase().count() == 1 && c.is_alphanumeric())));
            prop_assert_eq!(once, twice);
        }
    }
}
