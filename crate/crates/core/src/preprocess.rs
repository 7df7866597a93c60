//! Text normalization for social-media posts.
//!
//! The pipeline is four ordered stages:
//!
//! 1. [`normalize_entities`] swaps URLs, e-mails, user mentions, money,
//!    percentages, phone numbers, times, dates and bare numbers for
//!    `<kind>` placeholders.
//! 2. [`tokenize_social`] splits on whitespace, peels punctuation runs off
//!    word edges, and keeps placeholders, emoticons and emoji atomic.
//! 3. [`strip_punct_and_correct`] drops punctuation-only tokens and, when
//!    asked, applies a single-candidate edit-distance-1 spelling fix.
//! 4. [`Lemmatizer::lemmatize`] strips common English inflections.
//!
//! Non-ASCII words (e.g. Devanagari) pass through stages 3 and 4 untouched.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: String,
    pub text: String,
}

impl RawPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawPost {
            id: id.into(),
            text: text.into(),
        }
    }
}

pub type TokenList = Vec<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Url,
    Email,
    User,
    Money,
    Percent,
    Phone,
    Time,
    Date,
    Number,
}

impl EntityKind {
    /// Application order; earlier kinds claim overlapping spans first.
    pub const PRIORITY: [EntityKind; 9] = [
        EntityKind::Url,
        EntityKind::Email,
        EntityKind::User,
        EntityKind::Money,
        EntityKind::Percent,
        EntityKind::Phone,
        EntityKind::Time,
        EntityKind::Date,
        EntityKind::Number,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Url => "url",
            EntityKind::Email => "email",
            EntityKind::User => "user",
            EntityKind::Money => "money",
            EntityKind::Percent => "percent",
            EntityKind::Phone => "phone",
            EntityKind::Time => "time",
            EntityKind::Date => "date",
            EntityKind::Number => "number",
        }
    }

    pub fn placeholder(self) -> &'static str {
        match self {
            EntityKind::Url => "<url>",
            EntityKind::Email => "<email>",
            EntityKind::User => "<user>",
            EntityKind::Money => "<money>",
            EntityKind::Percent => "<percent>",
            EntityKind::Phone => "<phone>",
            EntityKind::Time => "<time>",
            EntityKind::Date => "<date>",
            EntityKind::Number => "<number>",
        }
    }
}

pub fn is_placeholder(token: &str) -> bool {
    EntityKind::PRIORITY.iter().any(|k| k.placeholder() == token)
}

pub struct NormalizationRule {
    pub kind: EntityKind,
    pattern: Regex,
}

impl NormalizationRule {
    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn placeholder(&self) -> &'static str {
        self.kind.placeholder()
    }

    fn accepts(&self, text: &str, start: usize) -> bool {
        let prev = text[..start].chars().next_back();
        match self.kind {
            // `foo@bar` without a dot is not a mention.
            EntityKind::User => !prev.is_some_and(|c| c.is_alphanumeric() || c == '_'),
            // Keeps the `<3` emoticon intact.
            EntityKind::Number => prev != Some('<'),
            _ => true,
        }
    }

    fn trim_match<'t>(&self, m: &'t str) -> &'t str {
        match self.kind {
            EntityKind::Url => m.trim_end_matches(['.', ',', '!', '?', ';', ':', ')', '\'', '"']),
            _ => m,
        }
    }
}

const MONTH: &str = r"(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";
const NUM: &str = r"\d+(?:[.,]\d+)*";

static RULES: LazyLock<Vec<NormalizationRule>> = LazyLock::new(|| {
    let src = |kind: EntityKind| -> String {
        match kind {
            EntityKind::Url => r#"(?i)\b(?:https?://|www\.)[^\s<>"]+"#.to_string(),
            EntityKind::Email => r"(?i)\b[\w.+-]+@[\w-]+(?:\.[\w-]+)+\b".to_string(),
            EntityKind::User => r"@\w+".to_string(),
            EntityKind::Money => format!(
                r"(?i)[$€£₹]\s?{NUM}(?:\s?(?:k|m|bn)\b)?|\brs\.?\s?{NUM}|\b{NUM}\s?(?:[$€£₹]|(?:dollars?|usd|euros?|eur|rupees?|inr|bucks)\b)"
            ),
            EntityKind::Percent => format!(r"(?i)\b{NUM}\s?(?:%|percent\b|pct\b)"),
            EntityKind::Phone => {
                r"(?:\+\d{1,3}[\s-]?)?(?:\(\d{3}\)|\b\d{3})[\s.-]?\d{3}[\s.-]?\d{4}\b".to_string()
            }
            EntityKind::Time => {
                r"(?i)\b(?:[01]?\d|2[0-3]):[0-5]\d(?::[0-5]\d)?(?:\s?[ap]m\b)?|\b(?:1[0-2]|0?[1-9])\s?[ap]m\b"
                    .to_string()
            }
            EntityKind::Date => format!(
                r"(?i)\b\d{{1,4}}[/.-]\d{{1,2}}[/.-]\d{{1,4}}\b|\b\d{{1,2}}(?:st|nd|rd|th)?\s{MONTH}\b\.?(?:,?\s\d{{4}}\b)?|\b{MONTH}\.?\s\d{{1,2}}(?:st|nd|rd|th)?\b(?:,?\s\d{{4}}\b)?"
            ),
            // Ordinals count as numbers so that a stray "5th" cannot pair up with a
            // month once punctuation between them is gone.
            EntityKind::Number => format!(r"\b{NUM}(?:st|nd|rd|th)?\b"),
        }
    };
    EntityKind::PRIORITY
        .iter()
        .map(|&kind| NormalizationRule {
            kind,
            pattern: Regex::new(&src(kind)).expect("entity pattern compiles"),
        })
        .collect()
});

pub fn normalization_rules() -> &'static [NormalizationRule] {
    &RULES
}

/// Replaces every entity span with its placeholder, rule by rule in
/// priority order. Passes repeat until nothing changes: a replacement can
/// expose a word boundary (`10:307pm` → `<time>7pm`) that the previous
/// pass could not see.
pub fn normalize_entities(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = normalize_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn normalize_pass(text: &str) -> String {
    let mut current = text.to_string();
    for rule in RULES.iter() {
        if !rule.pattern.is_match(&current) {
            continue;
        }
        let mut out = String::with_capacity(current.len());
        let mut last = 0;
        for m in rule.pattern.find_iter(&current) {
            if !rule.accepts(&current, m.start()) {
                continue;
            }
            let span = rule.trim_match(m.as_str());
            if span.is_empty() {
                continue;
            }
            out.push_str(&current[last..m.start()]);
            out.push_str(rule.placeholder());
            last = m.start() + span.len();
        }
        out.push_str(&current[last..]);
        current = out;
    }
    current
}

/// Emoticons kept as single tokens. Edge peeling takes the longest match.
pub const EMOTICONS: &[&str] = &[
    ":'-(", ":'(", ":-))", ":-((", ":))", ":((", ":-)", ":-(", ":-D", ":-P", ":-p", ":-/", ":-|",
    ":-*", ":-o", ":-O", ";-)", ";-P", "</3", "^_^", "^^", "-_-", "T_T", ":)", ":(", ":D", ":P",
    ":p", ":/", ":|", ":*", ":o", ":O", ":3", ";)", ";P", "=)", "=(", "=D", "<3", "xD", "XD",
    "xP", "XP",
];

fn punct_led(e: &&&str) -> bool {
    e.starts_with(is_punct)
}

fn emoticon_suffix(s: &str) -> Option<&'static str> {
    EMOTICONS
        .iter()
        .filter(punct_led)
        .filter(|e| s.ends_with(**e))
        .max_by_key(|e| e.len())
        .copied()
}

/// A letter-final emoticon only counts when no word character follows it,
/// so `:people` is not read as `:p` + `eople`.
fn emoticon_prefix(s: &str) -> Option<&'static str> {
    EMOTICONS
        .iter()
        .filter(punct_led)
        .filter(|e| s.starts_with(**e))
        .filter(|e| {
            let last_alnum = e.ends_with(char::is_alphanumeric);
            !last_alnum || !s[e.len()..].starts_with(char::is_alphanumeric)
        })
        .max_by_key(|e| e.len())
        .copied()
}

/// ASCII punctuation and symbols plus the common Unicode punctuation blocks.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32,
            0x00A1..=0x00BF
            | 0x00D7
            | 0x00F7
            | 0x2010..=0x205E
            | 0x20A0..=0x20CF
            | 0x3000..=0x303F
            | 0x0964
            | 0x0965
            | 0xFF01..=0xFF0F)
}

pub fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct)
}

fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2B00..=0x2BFF
        | 0x2300..=0x23FF)
}

/// Characters that extend the preceding emoji into one grapheme-ish unit.
fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0F | 0x200D | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F)
}

/// Splits a whitespace-free chunk into placeholder, emoji and plain pieces.
fn split_atomic(chunk: &str) -> Vec<(&str, bool)> {
    let mut pieces = Vec::new();
    let mut plain_start = 0;
    let mut i = 0;
    while i < chunk.len() {
        let rest = &chunk[i..];
        let c = rest.chars().next().expect("non-empty");
        let atom_len = if c == '<' {
            EntityKind::PRIORITY
                .iter()
                .map(|k| k.placeholder())
                .find(|p| rest.starts_with(p))
                .map(str::len)
        } else if is_emoji(c) {
            let mut len = c.len_utf8();
            let mut prev_zwj = false;
            for d in rest[len..].chars() {
                if is_emoji_modifier(d) || (prev_zwj && is_emoji(d)) {
                    prev_zwj = d == '\u{200D}';
                    len += d.len_utf8();
                } else {
                    break;
                }
            }
            Some(len)
        } else {
            None
        };
        match atom_len {
            Some(len) => {
                if plain_start < i {
                    pieces.push((&chunk[plain_start..i], false));
                }
                pieces.push((&chunk[i..i + len], true));
                i += len;
                plain_start = i;
            }
            None => i += c.len_utf8(),
        }
    }
    if plain_start < chunk.len() {
        pieces.push((&chunk[plain_start..], false));
    }
    pieces
}

/// ASCII lowercasing plus collapse of letter runs longer than two.
fn normalize_word(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    let mut prev: Option<char> = None;
    let mut run = 0;
    for c in word.chars().map(|c| c.to_ascii_lowercase()) {
        if Some(c) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(c);
        }
        if run <= 2 || !c.is_alphabetic() {
            out.push(c);
        }
    }
    out
}

fn split_plain(piece: &str, out: &mut Vec<String>) {
    if EMOTICONS.contains(&piece) {
        out.push(piece.to_string());
        return;
    }
    let mut rest = piece;

    // Leading punctuation runs and emoticons.
    while rest.starts_with(is_punct) {
        if let Some(e) = emoticon_prefix(rest) {
            out.push(e.to_string());
            rest = &rest[e.len()..];
            continue;
        }
        let mut cut = rest.find(|c: char| !is_punct(c)).unwrap_or(rest.len());
        if let Some((k, _)) = rest[..cut]
            .char_indices()
            .skip(1)
            .find(|&(k, _)| emoticon_prefix(&rest[k..]).is_some())
        {
            cut = k;
        }
        out.push(rest[..cut].to_string());
        rest = &rest[cut..];
    }

    // Trailing punctuation runs and emoticons, collected back to front.
    let mut tail = Vec::new();
    while !rest.is_empty() {
        if let Some(e) = emoticon_suffix(rest) {
            tail.push(e.to_string());
            rest = &rest[..rest.len() - e.len()];
            continue;
        }
        let mut cut = rest.len();
        while let Some(c) = rest[..cut].chars().next_back().filter(|&c| is_punct(c)) {
            if cut < rest.len() && emoticon_suffix(&rest[..cut]).is_some() {
                break;
            }
            cut -= c.len_utf8();
        }
        if cut == rest.len() {
            break;
        }
        tail.push(rest[cut..].to_string());
        rest = &rest[..cut];
    }

    if !rest.is_empty() {
        out.push(normalize_word(rest));
    }
    out.extend(tail.into_iter().rev());
}

/// Social-media aware tokenization of entity-normalized text.
pub fn tokenize_social(text: &str) -> TokenList {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        for (piece, atomic) in split_atomic(chunk) {
            if atomic {
                tokens.push(piece.to_string());
            } else {
                split_plain(piece, &mut tokens);
            }
        }
    }
    tokens.retain(|t| !t.is_empty());
    tokens
}

/// Every string at edit distance one over lowercase ASCII.
fn edits1(word: &str) -> HashSet<String> {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let bytes = word.as_bytes();
    let mut out = HashSet::new();
    for i in 0..=bytes.len() {
        let (l, r) = (&word[..i], &word[i..]);
        if !r.is_empty() {
            out.insert(format!("{l}{}", &r[1..]));
            for &c in LETTERS {
                out.insert(format!("{l}{}{}", c as char, &r[1..]));
            }
        }
        if r.len() > 1 {
            out.insert(format!("{l}{}{}{}", &r[1..2], &r[..1], &r[2..]));
        }
        for &c in LETTERS {
            out.insert(format!("{l}{}{r}", c as char));
        }
    }
    out.remove(word);
    out
}

fn is_ascii_word(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_lowercase())
}

pub fn strip_punct_and_correct(
    tokens: TokenList,
    vocab: Option<&HashSet<String>>,
    enable_spell: bool,
) -> TokenList {
    let speller = vocab.filter(|_| enable_spell);
    tokens
        .into_iter()
        .filter(|t| !is_punct_token(t))
        .map(|t| match speller {
            Some(v) if is_ascii_word(&t) && !v.contains(&t) => {
                let mut hits = edits1(&t).into_iter().filter(|c| v.contains(c));
                match (hits.next(), hits.next()) {
                    (Some(only), None) => only,
                    _ => t,
                }
            }
            _ => t,
        })
        .collect()
}

/// Built-in irregular forms. Targets must be fixed points of the suffix rules.
const IRREGULAR: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("wives", "wife"),
    ("lives", "life"),
    ("knives", "knife"),
    ("leaves", "leaf"),
    ("does", "do"),
    ("goes", "go"),
    ("was", "was"),
    ("has", "has"),
    ("this", "this"),
    ("yes", "yes"),
    ("news", "news"),
    ("series", "series"),
    ("species", "species"),
];

/// Rule-based English lemmatizer with an exception table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemmatizer {
    exceptions: BTreeMap<String, String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Lemmatizer {
            exceptions: IRREGULAR
                .iter()
                .map(|&(s, l)| (s.to_string(), l.to_string()))
                .collect(),
        }
    }
}

impl Lemmatizer {
    /// Built-in table extended by a `surface<TAB>lemma` file (`#` comments).
    pub fn with_exception_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lem = Lemmatizer::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                line: n as u64 + 1,
                msg: "expected surface<TAB>lemma".into(),
            })?;
            lem.insert(surface.trim(), lemma.trim());
        }
        Ok(lem)
    }

    pub fn insert(&mut self, surface: &str, lemma: &str) {
        self.exceptions
            .insert(surface.to_lowercase(), lemma.to_lowercase());
    }

    pub fn exceptions(&self) -> impl Iterator<Item = (&str, &str)> {
        self.exceptions.iter().map(|(s, l)| (s.as_str(), l.as_str()))
    }

    /// Applies suffix rules to a fixed point; an exception hit is final.
    pub fn lemmatize(&self, token: &str) -> String {
        if !is_ascii_word(token) {
            return token.to_string();
        }
        let mut word = token.to_string();
        loop {
            if let Some(lemma) = self.exceptions.get(&word) {
                return lemma.clone();
            }
            match strip_suffix_once(&word) {
                Some(next) => word = next,
                None => return word,
            }
        }
    }
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| b"aeiouy".contains(&b))
}

fn undouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !b"aeioulsz".contains(&b[n - 1]) {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

fn strip_suffix_once(w: &str) -> Option<String> {
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = w.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    for es in ["ches", "shes", "xes", "zzes"] {
        if let Some(stem) = w.strip_suffix(es) {
            let stem = format!("{stem}{}", &es[..es.len() - 2]);
            if stem.len() >= 3 {
                return Some(stem);
            }
        }
    }
    if w.ends_with('s') && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is")) {
        let stem = &w[..w.len() - 1];
        if stem.len() >= 3 {
            return Some(stem.to_string());
        }
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return Some(undouble(stem));
        }
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 3 && has_vowel(stem) && !stem.ends_with('e') {
            return Some(undouble(stem));
        }
    }
    None
}

pub fn lemmatize(token: &str) -> String {
    static DEFAULT: LazyLock<Lemmatizer> = LazyLock::new(Lemmatizer::default);
    DEFAULT.lemmatize(token)
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    pub enable_spell: bool,
    pub spell_vocab: Option<HashSet<String>>,
    pub lemmatizer: Lemmatizer,
}

/// Stages 1 and 2: the token stream the baseline features are computed on.
pub fn tokenize_stage(text: &str) -> TokenList {
    tokenize_social(&normalize_entities(text))
}

pub fn preprocess_text(text: &str, options: &PreprocessOptions) -> TokenList {
    let tokens = tokenize_stage(text);
    let tokens =
        strip_punct_and_correct(tokens, options.spell_vocab.as_ref(), options.enable_spell);
    tokens
        .into_iter()
        .map(|t| options.lemmatizer.lemmatize(&t))
        .collect()
}

pub fn preprocess_pipeline(post: &RawPost, options: &PreprocessOptions) -> TokenList {
    preprocess_text(&post.text, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn toks(v: &[&str]) -> TokenList {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn entity_examples() {
        assert_eq!(normalize_entities("see http://a.b/c now"), "see <url> now");
        assert_eq!(normalize_entities("thanks @someone"), "thanks <user>");
        assert_eq!(normalize_entities("plain text"), "plain text");
    }

    #[test]
    fn entity_kinds() {
        let cases = [
            ("go to www.example.com.", "go to <url>."),
            ("mail me at a.b@c.co.in", "mail me at <email>"),
            ("mail@x.com and @bob", "<email> and <user>"),
            ("costs $50 or Rs. 200", "costs <money> or <money>"),
            ("up 45% today", "up <percent> today"),
            ("call 987-654-3210", "call <phone>"),
            ("call +91 9876543210", "call <phone>"),
            ("at 10:30 pm sharp", "at <time> sharp"),
            ("10:307pm", "<time><time>"),
            ("at 7pm", "at <time>"),
            ("on 12/05/2018 ok", "on <date> ok"),
            ("on 5th May, 2018", "on <date>"),
            ("the 5th - march", "the <number> - march"),
            ("I have 12 cats", "I have <number> cats"),
            ("I <3 you", "I <3 you"),
            ("abc123 stays", "abc123 stays"),
        ];
        for (input, want) in cases {
            assert_eq!(normalize_entities(input), want, "{input}");
        }
    }

    #[test]
    fn placeholders_are_well_formed() {
        for rule in normalization_rules() {
            let p = rule.placeholder();
            assert_eq!(p, format!("<{}>", rule.kind.name()));
            assert_eq!(p, p.to_lowercase());
            assert!(!rule.pattern().is_empty());
        }
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(
            tokenize_social("I hate this:("),
            toks(&["i", "hate", "this", ":("])
        );
        assert_eq!(
            tokenize_social("<url> rocks!!!"),
            toks(&["<url>", "rocks", "!!!"])
        );
        assert!(tokenize_social("").is_empty());
    }

    #[test]
    fn tokenizer_edge_cases() {
        assert_eq!(tokenize_social("Goooood"), toks(&["good"]));
        assert_eq!(tokenize_social(":D :-) <3"), toks(&[":D", ":-)", "<3"]));
        assert_eq!(
            tokenize_social("(see<url>)"),
            toks(&["(", "see", "<url>", ")"])
        );
        assert_eq!(tokenize_social("wow!!!:)"), toks(&["wow", "!!!", ":)"]));
        assert_eq!(tokenize_social("\"quoted\""), toks(&["\"", "quoted", "\""]));
        assert_eq!(tokenize_social("don't"), toks(&["don't"]));
        assert_eq!(tokenize_social("love😀😀"), toks(&["love", "😀", "😀"]));
        assert_eq!(tokenize_social("👍🏽nice"), toks(&["👍🏽", "nice"]));
        assert_eq!(tokenize_social("अच्छा।"), toks(&["अच्छा", "।"]));
    }

    #[test]
    fn strip_examples() {
        assert_eq!(
            strip_punct_and_correct(toks(&["hi", "!!!", "there"]), None, false),
            toks(&["hi", "there"])
        );
        let vocab: HashSet<String> = ["good".to_string()].into();
        assert_eq!(
            strip_punct_and_correct(toks(&["goud"]), Some(&vocab), true),
            toks(&["good"])
        );
        assert_eq!(
            strip_punct_and_correct(toks(&["goud"]), Some(&vocab), false),
            toks(&["goud"])
        );
    }

    #[test]
    fn spell_requires_unique_neighbour() {
        let vocab: HashSet<String> = ["cat", "cut"].iter().map(|s| s.to_string()).collect();
        // "cot" is one edit from both.
        assert_eq!(
            strip_punct_and_correct(toks(&["cot", "catt"]), Some(&vocab), true),
            toks(&["cot", "cat"])
        );
    }

    #[test]
    fn edits1_oracle() {
        // Brute-force Levenshtein/transposition check over a small alphabet.
        let e = edits1("ab");
        assert!(e.contains("b") && e.contains("a") && e.contains("ba"));
        assert!(e.contains("abz") && e.contains("zb") && e.contains("azb"));
        assert!(!e.contains("ab") && !e.contains("ba ") && !e.contains("xyz"));
        // |deletes| + |transposes| + |replaces| + |inserts|, deduplicated
        assert_eq!(edits1("a").len(), 1 + 25 + 52 - 1);
    }

    #[test]
    fn lemma_examples() {
        assert_eq!(lemmatize("neighbourhoods"), "neighbourhood");
        assert_eq!(lemmatize("cities"), "city");
        assert_eq!(lemmatize("अच्छा"), "अच्छा");
        assert_eq!(lemmatize("men"), "man");
        assert_eq!(lemmatize("children"), "child");
        assert_eq!(lemmatize("classes"), "class");
        assert_eq!(lemmatize("running"), "run");
        assert_eq!(lemmatize("hopped"), "hop");
        assert_eq!(lemmatize("missed"), "miss");
        assert_eq!(lemmatize("string"), "string");
        assert_eq!(lemmatize("is"), "is");
        assert_eq!(lemmatize("bus"), "bus");
        assert_eq!(lemmatize("<url>"), "<url>");
    }

    #[test]
    fn irregular_targets_are_fixed_points() {
        let lem = Lemmatizer::default();
        for (_, lemma) in IRREGULAR {
            assert_eq!(lem.lemmatize(lemma), *lemma);
        }
    }

    #[test]
    fn exception_file_extends_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.tsv");
        std::fs::write(&path, "# irregulars\nwent\tgo\n\nbetter\tgood\n").unwrap();
        let lem = Lemmatizer::with_exception_file(&path).unwrap();
        assert_eq!(lem.lemmatize("went"), "go");
        assert_eq!(lem.lemmatize("better"), "good");
        assert_eq!(lem.lemmatize("men"), "man");

        std::fs::write(&path, "no tab here\n").unwrap();
        let err = Lemmatizer::with_exception_file(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }

    #[test]
    fn pipeline_examples() {
        let opts = PreprocessOptions::default();
        let run = |t: &str| preprocess_pipeline(&RawPost::new("", t), &opts);
        assert_eq!(run("Visit http://x.y NOW!!!"), toks(&["visit", "<url>", "now"]));
        assert!(run("").is_empty());
        assert_eq!(
            run("These aliens are filthy"),
            toks(&["these", "alien", "are", "filthy"])
        );
    }

    const WORDS: &[&str] = &[
        "These", "aliens", "are", "filthy", "but", "they", "live", "in", "a", "good",
        "neighbourhood", "CITIES", "running", "hopped", "goooood", "cats", "classes", "men",
        "children", "don't", "string", "अच्छा", "है", "😀", ":)", ":D", "<3", "!!!", "?", "...",
        "(wow)", "\"hi\"", "@someone", "http://a.b/c", "www.x.com", "me@x.org", "$50", "45%",
        "10:30", "7pm", "12/05/2018", "987-654-3210", "42", "3.14", "x", "-", "<", ">", "<url>",
        "rs.", "abc123", "a-1", "5th", "Mayhem", "march",
    ];

    #[test]
    fn pipeline_is_idempotent_on_random_corpus() {
        let opts = PreprocessOptions::default();
        let mut rng = Rng::new(2018);
        for _ in 0..1000 {
            let n = rng.below(12);
            let mut text = String::new();
            for _ in 0..n {
                text.push_str(WORDS[rng.below(WORDS.len())]);
                if rng.bernoulli(0.8) {
                    text.push(' ');
                }
            }
            let once = preprocess_text(&text, &opts);
            let twice = preprocess_text(&once.join(" "), &opts);
            assert_eq!(once, twice, "input {text:?}");
            for t in &once {
                assert!(!t.is_empty() && !t.contains(char::is_whitespace), "{t:?}");
                assert!(!is_punct_token(t), "{t:?} in {text:?}");
            }
            // Placeholders only from the nine kinds.
            let normalized = normalize_entities(&text);
            for (i, _) in normalized.match_indices('<') {
                let rest = &normalized[i..];
                if let Some(end) = rest.find('>') {
                    let cand = &rest[..=end];
                    if cand[1..cand.len() - 1].chars().all(|c| c.is_ascii_lowercase())
                        && cand.len() > 2
                    {
                        assert!(is_placeholder(cand) || text.contains(cand), "{cand}");
                    }
                }
            }
        }
    }
}
