//! Seeded synthetic corpora for end-to-end tests.
//!
//! Shared between the integration tests and `examples/synth_corpus.rs`.

#![allow(dead_code)]

use std::path::Path;

use aggro::corpus::ClassLabel;
use aggro::numerics::Rng;

#[derive(Debug, Clone)]
pub struct Row {
    pub id: String,
    pub text: String,
    pub label: ClassLabel,
}

const FILLER: &[&str] = &[
    "the", "a", "this", "that", "is", "was", "it", "and", "to", "of", "in", "on", "for", "with",
    "about", "today", "people", "post", "video", "news", "they", "we", "you", "all", "just",
    "really", "some", "more", "time", "country", "government", "party", "story", "comment",
];

const NAG_WORDS: &[&str] = &[
    "congratulations", "thanks", "beautiful", "wonderful", "helpful", "agree", "peace",
    "respect", "proud", "happy", "blessings", "welcome", "support", "inspiring", "lovely",
];

const CAG_WORDS: &[&str] = &[
    "surely", "genius", "apparently", "clap", "obviously", "wow", "hmm", "sarcasm", "shame",
    "pretend", "suddenly", "interesting", "coincidence", "brilliant", "slowclap",
];

const OAG_WORDS: &[&str] = &[
    "idiot", "stupid", "moron", "disgusting", "filthy", "trash", "liar", "traitor", "scum",
    "useless", "pathetic", "shut", "coward", "fool", "garbage",
];

const DECOR: &[&str] = &["!!!", "@someone", "http://x.co/abc", ":)", ":(", "...", "?", "#tag"];

fn pick<'a>(rng: &mut Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.below(pool.len())]
}

fn class_words(label: ClassLabel) -> &'static [&'static str] {
    match label {
        ClassLabel::Nag => NAG_WORDS,
        ClassLabel::Cag => CAG_WORDS,
        ClassLabel::Oag => OAG_WORDS,
    }
}

/// Posts of filler words plus two to four keywords drawn from the post's
/// class pool (with probability 0.1 each keyword comes from another class
/// instead). Class frequencies follow the 5051/4240/2708 training split.
pub fn keyword_corpus(n: usize, seed: u64) -> Vec<Row> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let u = rng.below(5051 + 4240 + 2708);
            let label = if u < 5051 {
                ClassLabel::Nag
            } else if u < 5051 + 4240 {
                ClassLabel::Cag
            } else {
                ClassLabel::Oag
            };
            let mut words: Vec<String> = (0..4 + rng.below(10))
                .map(|_| pick(&mut rng, FILLER).to_string())
                .collect();
            for _ in 0..2 + rng.below(3) {
                let pool = if rng.bernoulli(0.1) {
                    class_words(ClassLabel::ALL[rng.below(3)])
                } else {
                    class_words(label)
                };
                let w = pick(&mut rng, pool);
                let w = if rng.bernoulli(0.2) { w.to_uppercase() } else { w.to_string() };
                let at = rng.below(words.len() + 1);
                words.insert(at, w);
            }
            if rng.bernoulli(0.3) {
                let at = rng.below(words.len() + 1);
                words.insert(at, pick(&mut rng, DECOR).to_string());
            }
            Row {
                id: format!("kw{i:05}"),
                text: words.join(" "),
                label,
            }
        })
        .collect()
}

pub const POSITIVE: &[&str] = &[
    "good", "great", "love", "nice", "happy", "excellent", "kind", "brave", "honest", "fair",
];

pub const NEGATIVE: &[&str] = &[
    "bad", "hate", "ugly", "evil", "dirty", "liar", "stupid", "corrupt", "vile", "rotten",
];

const NEUTRAL: &[&str] = &[
    "the", "government", "said", "people", "today", "will", "about", "country", "party", "new",
];

fn lexicon_post(rng: &mut Rng, pos: usize, neg: usize, punct: usize, filler: usize) -> String {
    let mut words: Vec<&str> = Vec::new();
    words.extend((0..pos).map(|_| pick(rng, POSITIVE)));
    words.extend((0..neg).map(|_| pick(rng, NEGATIVE)));
    words.extend((0..filler).map(|_| pick(rng, NEUTRAL)));
    rng.shuffle(&mut words);
    let mut text = words.join(" ");
    for _ in 0..punct {
        text.push_str(" !");
    }
    text
}

/// Lexicon counts determine the class exactly: NAG posts carry positive
/// words only, CAG posts one negative word and a burst of punctuation, OAG
/// posts four or more negative words.
pub fn separable_corpus(n: usize, seed: u64) -> Vec<Row> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let label = ClassLabel::ALL[i % 3];
            let filler = 2 + rng.below(6);
            let extra = rng.below(3);
            let (pos, neg, punct) = match label {
                ClassLabel::Nag => (2 + extra, 0, 0),
                ClassLabel::Cag => (0, 1, 3 + extra),
                ClassLabel::Oag => (0, 4 + extra, 0),
            };
            let text = lexicon_post(&mut rng, pos, neg, punct, filler);
            Row {
                id: format!("sep{i:05}"),
                text,
                label,
            }
        })
        .collect()
}

/// Heavily overlapping count distributions with a weak class signal, in the
/// test-set class proportions 1233/1057/711.
pub fn noisy_corpus(n: usize, seed: u64) -> Vec<Row> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let u = rng.below(1233 + 1057 + 711);
            let label = if u < 1233 {
                ClassLabel::Nag
            } else if u < 1233 + 1057 {
                ClassLabel::Cag
            } else {
                ClassLabel::Oag
            };
            let (p_pos, p_neg) = match label {
                ClassLabel::Nag => (0.5, 0.25),
                ClassLabel::Cag => (0.35, 0.35),
                ClassLabel::Oag => (0.25, 0.5),
            };
            let draws = 2 + rng.below(5);
            let pos = (0..draws).filter(|_| rng.bernoulli(p_pos)).count();
            let neg = (0..draws).filter(|_| rng.bernoulli(p_neg)).count();
            let punct = rng.below(3);
            let filler = 3 + rng.below(8);
            Row {
                id: format!("noisy{i:05}"),
                text: lexicon_post(&mut rng, pos, neg, punct, filler),
                label,
            }
        })
        .collect()
}

/// Twenty short posts, keyword-disjoint across classes.
pub const OVERFIT: &[(&str, &str)] = &[
    ("Thank you so much for sharing this lovely story", "NAG"),
    ("What a beautiful morning in the city", "NAG"),
    ("Congratulations to the whole team, well played", "NAG"),
    ("I agree with your point, very helpful", "NAG"),
    ("Wishing everyone peace and happiness", "NAG"),
    ("Great news for farmers this season", "NAG"),
    ("Respect to the doctors working day and night", "NAG"),
    ("Oh sure, because that worked so well last time", "CAG"),
    ("Wow, what a genius idea, nobody ever thought of that", "CAG"),
    ("Some people clearly read only headlines", "CAG"),
    ("Interesting how the rules change when it suits them", "CAG"),
    ("Nice speech, shame about the facts", "CAG"),
    ("Of course the minister knows best, as always", "CAG"),
    ("You are a stupid idiot and a liar", "OAG"),
    ("Shut up you disgusting moron", "OAG"),
    ("These traitors should be thrown out of the country", "OAG"),
    ("Go to hell with your filthy lies", "OAG"),
    ("Useless scum, all of you", "OAG"),
    ("Pathetic coward, hiding behind a screen", "OAG"),
    ("Get lost, you worthless garbage", "OAG"),
];

pub fn overfit_rows() -> Vec<Row> {
    OVERFIT
        .iter()
        .enumerate()
        .map(|(i, (text, label))| Row {
            id: format!("of{i:02}"),
            text: text.to_string(),
            label: label.parse().expect("fixture label"),
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[Row]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "text", "label"])?;
    for r in rows {
        w.write_record([r.id.as_str(), r.text.as_str(), r.label.name()])?;
    }
    w.flush()
}

/// Opinion-lexicon style files: a `;` comment header, one word per line.
pub fn write_lexicons(pos: &Path, neg: &Path) -> std::io::Result<()> {
    let render = |words: &[&str]| {
        let mut s = String::from(";; synthetic opinion lexicon\n;\n");
        for w in words {
            s.push_str(w);
            s.push('\n');
        }
        s
    };
    std::fs::write(pos, render(POSITIVE))?;
    std::fs::write(neg, render(NEGATIVE))
}

/// Deterministic 80/20 split, stratified by class.
pub fn split_80_20(rows: &[Row], seed: u64) -> (Vec<Row>, Vec<Row>) {
    aggro::corpus::stratified_split(rows, |r| r.label, 0.2, seed).expect("every class populated")
}
