//! Rule-based English lemmatizer.
//!
//! Lookup order: irregular/exception table, then the invariant list, then
//! suffix rules (`-ies`, `-ied`, `-es`, `-s`, `-ed`, `-ing`) with
//! consonant undoubling and silent-e restoration. Suffix rules are applied
//! until a fixed point so the result is always its own lemma.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

const EXCEPTIONS: &[(&str, &str)] = &[
    // be / have / do / go
    ("am", "be"), ("is", "be"), ("are", "be"), ("was", "be"), ("were", "be"), ("been", "be"), ("being", "be"),
    ("has", "have"), ("had", "have"), ("having", "have"),
    ("does", "do"), ("did", "do"), ("done", "do"), ("doing", "do"),
    ("goes", "go"), ("went", "go"), ("gone", "go"),
    // irregular verbs
    ("arose", "arise"), ("arisen", "arise"), ("awoke", "awake"),
    ("bore", "bear"), ("borne", "bear"), ("became", "become"), ("becoming", "become"),
    ("began", "begin"), ("begun", "begin"), ("bent", "bend"), ("bit", "bite"), ("bitten", "bite"),
    ("bled", "bleed"), ("blew", "blow"), ("blown", "blow"), ("broke", "break"), ("broken", "break"),
    ("bred", "breed"), ("brought", "bring"), ("built", "build"), ("bought", "buy"),
    ("caught", "catch"), ("chose", "choose"), ("chosen", "choose"), ("came", "come"),
    ("crept", "creep"), ("dealt", "deal"), ("dug", "dig"), ("drew", "draw"), ("drawn", "draw"),
    ("drank", "drink"), ("drunk", "drink"), ("drove", "drive"), ("driven", "drive"),
    ("ate", "eat"), ("eaten", "eat"), ("fell", "fall"), ("fallen", "fall"), ("fed", "feed"),
    ("felt", "feel"), ("fought", "fight"), ("fled", "flee"), ("flew", "fly"), ("flown", "fly"),
    ("forbade", "forbid"), ("forgot", "forget"), ("forgotten", "forget"), ("forgave", "forgive"),
    ("forgiven", "forgive"), ("froze", "freeze"), ("frozen", "freeze"), ("got", "get"), ("gotten", "get"),
    ("gave", "give"), ("given", "give"), ("grew", "grow"), ("grown", "grow"), ("hung", "hang"),
    ("heard", "hear"), ("hid", "hide"), ("hidden", "hide"), ("held", "hold"), ("kept", "keep"),
    ("knelt", "kneel"), ("knew", "know"), ("known", "know"), ("laid", "lay"), ("led", "lead"),
    ("leapt", "leap"), ("left", "leave"), ("lent", "lend"), ("lost", "lose"), ("meant", "mean"),
    ("met", "meet"), ("paid", "pay"), ("rode", "ride"), ("ridden", "ride"), ("rang", "ring"),
    ("rung", "ring"), ("rose", "rise"), ("risen", "rise"), ("ran", "run"), ("said", "say"),
    ("saw", "see"), ("seen", "see"), ("sought", "seek"), ("sold", "sell"), ("sent", "send"),
    ("shook", "shake"), ("shaken", "shake"), ("shone", "shine"), ("shot", "shoot"), ("shown", "show"),
    ("shrank", "shrink"), ("sang", "sing"), ("sung", "sing"), ("sank", "sink"), ("sunk", "sink"),
    ("sat", "sit"), ("slept", "sleep"), ("slid", "slide"), ("spoke", "speak"), ("spoken", "speak"),
    ("spent", "spend"), ("spun", "spin"), ("sprang", "spring"), ("stood", "stand"), ("stole", "steal"),
    ("stolen", "steal"), ("stuck", "stick"), ("stung", "sting"), ("struck", "strike"), ("swore", "swear"),
    ("sworn", "swear"), ("swept", "sweep"), ("swam", "swim"), ("swum", "swim"), ("swung", "swing"),
    ("took", "take"), ("taken", "take"), ("taught", "teach"), ("tore", "tear"), ("torn", "tear"),
    ("told", "tell"), ("thought", "think"), ("threw", "throw"), ("thrown", "throw"),
    ("understood", "understand"), ("woke", "wake"), ("woken", "wake"), ("wore", "wear"), ("worn", "wear"),
    ("wept", "weep"), ("won", "win"), ("wrote", "write"), ("written", "write"), ("withdrew", "withdraw"),
    ("withdrawn", "withdraw"), ("overcame", "overcome"), ("oversaw", "oversee"), ("overseen", "oversee"),
    ("undertook", "undertake"), ("undertaken", "undertake"), ("rebuilt", "rebuild"), ("remade", "remake"),
    ("retold", "retell"), ("rewrote", "rewrite"), ("rewritten", "rewrite"), ("upheld", "uphold"),
    ("foresaw", "foresee"), ("mistook", "mistake"), ("misled", "mislead"),
    // suffix rules get these wrong
    ("eloped", "elope"), ("eloping", "elope"),
    ("created", "create"), ("creating", "create"), ("recreated", "recreate"),
    ("added", "add"), ("adding", "add"),
    ("accused", "accuse"), ("focused", "focus"), ("focusing", "focus"), ("focuses", "focus"),
    ("biased", "bias"), ("embedded", "embed"), ("embedding", "embed"),
    ("controlled", "control"), ("controlling", "control"), ("compelled", "compel"),
    ("propelled", "propel"), ("rebelled", "rebel"), ("patrolled", "patrol"), ("excelled", "excel"),
    ("expelled", "expel"), ("cancelled", "cancel"), ("travelled", "travel"), ("travelling", "travel"),
    ("labelled", "label"), ("modelled", "model"), ("modelling", "model"), ("enrolled", "enroll"),
    ("changed", "change"), ("changing", "change"), ("arranged", "arrange"), ("arranging", "arrange"),
    ("exchanged", "exchange"), ("challenged", "challenge"), ("ranged", "range"), ("plunged", "plunge"),
    ("avenged", "avenge"), ("estranged", "estrange"),
    ("invited", "invite"), ("inviting", "invite"), ("united", "unite"), ("excited", "excite"),
    ("cited", "cite"), ("recited", "recite"), ("ignited", "ignite"), ("incited", "incite"),
    ("competed", "compete"), ("competing", "compete"), ("completed", "complete"), ("completing", "complete"),
    ("deleted", "delete"), ("depleted", "deplete"),
    ("guided", "guide"), ("guiding", "guide"), ("persuaded", "persuade"), ("escaped", "escape"),
    ("interfered", "interfere"), ("adhered", "adhere"), ("persevered", "persevere"),
    ("explored", "explore"), ("exploring", "explore"), ("ignored", "ignore"), ("restored", "restore"),
    ("adored", "adore"), ("implored", "implore"), ("deplored", "deplore"),
    ("compiled", "compile"), ("reconciled", "reconcile"), ("exiled", "exile"),
    ("welcomed", "welcome"), ("welcoming", "welcome"), ("postponed", "postpone"),
    ("condoned", "condone"), ("atoned", "atone"), ("intervened", "intervene"), ("convened", "convene"),
    ("pivoted", "pivot"), ("piloted", "pilot"),
    ("eyed", "eye"), ("dyed", "dye"), ("dying", "die"), ("lying", "lie"), ("tying", "tie"),
    ("wives", "wife"), ("lives", "live"), ("heroes", "hero"), ("children", "child"),
    ("men", "man"), ("women", "woman"),
];

const INVARIANT: &[&str] = &[
    "wedding", "meeting", "morning", "evening", "nothing", "something", "anything", "everything",
    "during", "ceiling", "darling", "news", "series", "species", "always", "perhaps", "sometimes",
    "besides", "towards", "afterwards", "whereas", "politics", "physics", "economics", "mathematics",
    "athletics", "hers", "yours", "ours", "theirs", "bias", "alias", "atlas", "canvas", "chaos",
    "embed", "hundred", "speed", "breed", "bleed", "greed", "creed", "steed", "indeed", "born",
];

// Bases ending in "nge" whose "-ed"/"-ing" forms lose the e.
const NGE_BASES: &[&str] = &["change", "arrange", "exchange", "challenge", "range", "plunge", "avenge", "estrange", "lunge", "binge", "hinge", "cringe", "infringe", "impinge"];

fn exceptions() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| EXCEPTIONS.iter().copied().collect())
}

fn invariants() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| INVARIANT.iter().copied().collect())
}

/// English lemma of a single token.
pub fn lemmatize(token: &str) -> String {
    let mut word = token.to_lowercase();
    if word.is_empty() || !word.chars().all(|c| c.is_ascii_alphabetic()) {
        return word;
    }
    loop {
        if let Some(&base) = exceptions().get(word.as_str()) {
            return base.to_string();
        }
        if invariants().contains(word.as_str()) {
            return word;
        }
        match strip_once(&word) {
            Some(next) if next != word => word = next,
            _ => return word,
        }
    }
}

fn strip_once(w: &str) -> Option<String> {
    let n = w.len();
    if n <= 3 {
        return None;
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return Some(if n > 4 { format!("{stem}y") } else { format!("{stem}ie") });
    }
    if let Some(stem) = w.strip_suffix("ied") {
        return Some(if n > 4 { format!("{stem}y") } else { format!("{stem}ie") });
    }
    if w.ends_with("sses") || w.ends_with("ches") || w.ends_with("shes") || w.ends_with("xes") || w.ends_with("zzes") {
        return Some(w[..n - 2].to_string());
    }
    if w.ends_with('s') {
        if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
            return None;
        }
        return Some(w[..n - 1].to_string());
    }
    if w.ends_with("eed") {
        if n <= 4 || w.ends_with("ceed") {
            return None;
        }
        return Some(w[..n - 1].to_string());
    }
    if let Some(stem) = w.strip_suffix("ed") {
        return restore_stem(stem);
    }
    if let Some(stem) = w.strip_suffix("ing") {
        return restore_stem(stem);
    }
    None
}

fn is_vowel_at(b: &[u8], i: usize) -> bool {
    match b[i] {
        b'a' | b'e' | b'i' | b'o' => true,
        b'u' => !(i > 0 && b[i - 1] == b'q'),
        _ => false,
    }
}

fn vowel_groups(b: &[u8]) -> usize {
    let mut groups = 0;
    let mut prev = false;
    for i in 0..b.len() {
        let v = is_vowel_at(b, i);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    groups
}

// Turns the stem left by "-ed"/"-ing" into a base form.
fn restore_stem(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    if n < 2 || vowel_groups(b) == 0 {
        return None;
    }
    let last = b[n - 1];
    let prev = b[n - 2];
    let last_vowel = is_vowel_at(b, n - 1);
    let prev_vowel = is_vowel_at(b, n - 2);

    // stopped -> stop, but called -> call, passed -> pass
    if last == prev && !last_vowel && !matches!(last, b'l' | b's' | b'z' | b'f') {
        return Some(stem[..n - 1].to_string());
    }
    let with_e = || Some(format!("{stem}e"));
    if last == b'g' && prev == b'n' {
        let candidate = format!("{stem}e");
        return if NGE_BASES.contains(&candidate.as_str()) { Some(candidate) } else { Some(stem.to_string()) };
    }
    match last {
        b'v' | b'z' | b'c' => return with_e(),
        b'u' if !(n >= 2 && prev == b'q') => return with_e(),
        b's' if prev != b's' => return with_e(),
        b'g' if prev != b'g' => return with_e(),
        b'h' if prev == b't' && n >= 3 && is_vowel_at(b, n - 3) => return with_e(),
        b'l' if matches!(prev, b'b' | b'c' | b'd' | b'f' | b'g' | b'k' | b'p' | b't' | b'z') => return with_e(),
        _ => {}
    }
    // graduated, negotiated, evaluated
    if n >= 3 && last == b't' && prev == b'a' && matches!(b[n - 3], b'i' | b'u') {
        return with_e();
    }
    // consonant-vowel-consonant ending
    let cvc = !last_vowel
        && prev_vowel
        && n >= 3
        && !is_vowel_at(b, n - 3)
        && !matches!(last, b'w' | b'x' | b'y');
    if cvc {
        if vowel_groups(b) == 1 {
            return with_e();
        }
        let pair = (prev, last);
        let takes_e = matches!(
            pair,
            (b'a', b't') | (b'u', b't') | (b'o', b't')
                | (b'i', b'd') | (b'u', b'd') | (b'o', b'd') | (b'a', b'd')
                | (b'a', b'r') | (b'i', b'r') | (b'u', b'r')
                | (b'a', b'm') | (b'u', b'm')
                | (b'i', b'n')
                | (b'o', b'k') | (b'i', b'k')
                | (b'a', b'b') | (b'i', b'b') | (b'o', b'b') | (b'u', b'b')
        );
        if takes_e {
            return with_e();
        }
    }
    Some(stem.to_string())
}
