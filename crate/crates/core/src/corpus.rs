//! Dataset ingestion, vocabulary and sequence encoding.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::preprocess::{preprocess_text, PreprocessOptions, RawPost, TokenList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Nag = 0,
    Cag = 1,
    Oag = 2,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Nag, ClassLabel::Cag, ClassLabel::Oag];
    pub const COUNT: usize = 3;

    #[inline]
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        ClassLabel::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Nag => "NAG",
            ClassLabel::Cag => "CAG",
            ClassLabel::Oag => "OAG",
        }
    }

    /// Index of the largest probability; ties go to the lower code.
    pub fn argmax(probs: &[f64]) -> ClassLabel {
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate().take(Self::COUNT) {
            if p > probs[best] {
                best = i;
            }
        }
        ClassLabel::ALL[best]
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NAG" => Ok(ClassLabel::Nag),
            "CAG" => Ok(ClassLabel::Cag),
            "OAG" => Ok(ClassLabel::Oag),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub tokens: TokenList,
    pub label: ClassLabel,
    pub raw_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Csv,
    Tsv,
}

impl DatasetFormat {
    fn delimiter(self) -> u8 {
        match self {
            DatasetFormat::Csv => b',',
            DatasetFormat::Tsv => b'\t',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    /// Rows dropped because their text was empty.
    pub skipped_empty: usize,
}

impl Dataset {
    pub fn class_counts(&self) -> [usize; 3] {
        class_counts(self.examples.iter().map(|e| e.label))
    }
}

pub fn class_counts(labels: impl IntoIterator<Item = ClassLabel>) -> [usize; 3] {
    let mut counts = [0; 3];
    for l in labels {
        counts[l.code()] += 1;
    }
    counts
}

fn read_records(path: &Path, format: DatasetFormat) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(format.delimiter())
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("{other:?}"),
            },
        })?;
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                rows.push((line, record.iter().map(str::to_string).collect()));
            }
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(match e.into_kind() {
                    csv::ErrorKind::Io(io) => Error::io(path, io),
                    csv::ErrorKind::Utf8 { .. } => Error::Malformed {
                        path: path.to_path_buf(),
                        line,
                        msg: "invalid UTF-8".into(),
                    },
                    other => Error::Malformed {
                        path: path.to_path_buf(),
                        line,
                        msg: format!("{other:?}"),
                    },
                });
            }
        }
    }
    Ok(rows)
}

/// Loads `id,text,label` rows and runs each text through the preprocessing
/// pipeline. A first row whose label column is not a class name is taken as
/// a header.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    options: &PreprocessOptions,
) -> Result<Dataset> {
    let rows = read_records(path, format)?;
    let mut parsed = Vec::with_capacity(rows.len());
    let mut skipped_empty = 0;
    for (i, (line, fields)) in rows.into_iter().enumerate() {
        if fields.len() != 3 {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 3 columns (id,text,label), found {}", fields.len()),
            });
        }
        let label = match fields[2].parse::<ClassLabel>() {
            Ok(l) => l,
            Err(()) if i == 0 => continue,
            Err(()) => {
                return Err(Error::UnknownLabel {
                    path: path.to_path_buf(),
                    line,
                    label: fields[2].clone(),
                })
            }
        };
        let mut fields = fields.into_iter();
        let id = fields.next().unwrap_or_default();
        let text = fields.next().unwrap_or_default();
        if text.trim().is_empty() {
            skipped_empty += 1;
            continue;
        }
        parsed.push((id, text, label));
    }
    let examples = parsed
        .into_par_iter()
        .map(|(id, text, label)| LabeledExample {
            tokens: preprocess_text(&text, options),
            id,
            label,
            raw_text: text,
        })
        .collect();
    Ok(Dataset {
        examples,
        skipped_empty,
    })
}

/// Loads unlabeled posts: one `text` column or `id,text`. A first row of
/// exactly `id,text` or `text` is skipped as a header.
pub fn load_unlabeled(path: &Path, format: DatasetFormat) -> Result<Vec<RawPost>> {
    let rows = read_records(path, format)?;
    let mut posts = Vec::with_capacity(rows.len());
    for (i, (line, fields)) in rows.into_iter().enumerate() {
        let is_header = |f: &[String]| {
            let lower: Vec<String> = f.iter().map(|s| s.trim().to_ascii_lowercase()).collect();
            lower == ["id", "text"] || lower == ["text"]
        };
        if i == 0 && is_header(&fields) {
            continue;
        }
        let post = match fields.as_slice() {
            [text] => RawPost::new(String::new(), text.clone()),
            [id, text] => RawPost::new(id.clone(), text.clone()),
            _ => {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("expected 1 or 2 columns (id,text), found {}", fields.len()),
                })
            }
        };
        posts.push(post);
    }
    Ok(posts)
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_tokens(vec![PAD_TOKEN.into(), UNK_TOKEN.into()])
            .expect("special tokens form a valid vocabulary")
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its index-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::invalid("vocabulary must start with <pad>, <unk>"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Index of `token`, or [`UNK`].
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Regular (non-special) entries.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens[2..].iter().map(String::as_str)
    }
}

pub fn build_vocab<'a>(
    token_lists: impl IntoIterator<Item = &'a TokenList>,
    min_freq: usize,
) -> Result<Vocabulary> {
    if min_freq == 0 {
        return Err(Error::invalid("min_freq must be at least 1"));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for list in token_lists {
        for t in list {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, n)| n >= min_freq && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Vocabulary::from_tokens(tokens)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub indices: Vec<usize>,
    pub label: ClassLabel,
}

/// Maps tokens to indices, truncating to the first `max_len`. An empty token
/// list becomes `[UNK]` so every post still gets a prediction.
pub fn encode(tokens: &[String], vocab: &Vocabulary, max_len: Option<usize>) -> Vec<usize> {
    let limit = max_len.unwrap_or(usize::MAX).max(1);
    let mut indices: Vec<usize> = tokens.iter().take(limit).map(|t| vocab.lookup(t)).collect();
    if indices.is_empty() {
        indices.push(UNK);
    }
    indices
}

pub fn decode(indices: &[usize], vocab: &Vocabulary) -> Vec<String> {
    indices
        .iter()
        .map(|&i| vocab.token(i).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

pub fn encode_examples(
    examples: &[LabeledExample],
    vocab: &Vocabulary,
    max_len: Option<usize>,
) -> Vec<EncodedExample> {
    examples
        .iter()
        .map(|e| EncodedExample {
            indices: encode(&e.tokens, vocab, max_len),
            label: e.label,
        })
        .collect()
}

/// Per-class proportional split. Each present class contributes
/// `floor(count * dev_fraction)` items to dev; relative order is kept.
pub fn stratified_split<T: Clone>(
    items: &[T],
    label_of: impl Fn(&T) -> ClassLabel,
    dev_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(dev_fraction > 0.0 && dev_fraction < 0.5) {
        return Err(Error::invalid(format!(
            "dev_fraction must lie in (0, 0.5), got {dev_fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; 3] = Default::default();
    for (i, item) in items.iter().enumerate() {
        by_class[label_of(item).code()].push(i);
    }
    let mut in_dev = vec![false; items.len()];
    for (code, members) in by_class.iter_mut().enumerate() {
        if members.len() == 1 {
            return Err(Error::invalid(format!(
                "class {} has fewer than 2 examples",
                ClassLabel::ALL[code]
            )));
        }
        let take = (members.len() as f64 * dev_fraction).floor() as usize;
        Rng::derive(seed, code as u64).shuffle(members);
        for &i in &members[..take] {
            in_dev[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (item, dev_flag) in items.iter().zip(in_dev) {
        if dev_flag {
            dev.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((train, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        path
    }

    fn toks(s: &str) -> TokenList {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn label_parsing_and_codes() {
        assert_eq!("oag".parse(), Ok(ClassLabel::Oag));
        assert_eq!(" Cag ".parse(), Ok(ClassLabel::Cag));
        assert!("xyz".parse::<ClassLabel>().is_err());
        for (i, l) in ClassLabel::ALL.iter().enumerate() {
            assert_eq!(l.code(), i);
            assert_eq!(ClassLabel::from_code(i), Some(*l));
        }
        assert_eq!(ClassLabel::argmax(&[0.2, 0.5, 0.3]), ClassLabel::Cag);
        assert_eq!(ClassLabel::argmax(&[0.4, 0.4, 0.2]), ClassLabel::Nag);
    }

    #[test]
    fn load_well_formed_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "d.csv",
            "a1,\"Hello, world\",NAG\na2,you are an idiot,oag\n,\"quoted \"\"text\"\"\",CAG\n",
        );
        let ds = load_dataset(&p, DatasetFormat::Csv, &PreprocessOptions::default()).unwrap();
        let ids: Vec<_> = ds.examples.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a1", "a2", ""]);
        assert_eq!(ds.examples[0].tokens, toks("hello world"));
        assert_eq!(ds.examples[2].raw_text, "quoted \"text\"");
        assert_eq!(ds.class_counts(), [1, 1, 1]);
    }

    #[test]
    fn header_detection_and_empty_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "d.csv",
            "id,text,label\n1,fine,NAG\n2,,OAG\n3,  ,CAG\n",
        );
        let ds = load_dataset(&p, DatasetFormat::Csv, &PreprocessOptions::default()).unwrap();
        assert_eq!(ds.examples.len(), 1);
        assert_eq!(ds.skipped_empty, 2);

        let p = write_file(dir.path(), "t.tsv", "1\tfine\tNAG\n");
        let ds = load_dataset(&p, DatasetFormat::Tsv, &PreprocessOptions::default()).unwrap();
        assert_eq!(ds.examples.len(), 1);
    }

    #[test]
    fn load_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "d.csv", "1,ok,NAG\n2,bad,xyz\n");
        let err = load_dataset(&p, DatasetFormat::Csv, &PreprocessOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { line: 2, .. }), "{err}");

        let p = write_file(dir.path(), "e.csv", "1,ok,NAG\n2,NAG\n");
        let err = load_dataset(&p, DatasetFormat::Csv, &PreprocessOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");

        let err = load_dataset(
            &dir.path().join("missing.csv"),
            DatasetFormat::Csv,
            &PreprocessOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn table_one_histogram() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::new();
        for (label, n) in [("NAG", 5051), ("CAG", 4240), ("OAG", 2708)] {
            for i in 0..n {
                body.push_str(&format!("{label}{i},post number {i},{label}\n"));
            }
        }
        let p = write_file(dir.path(), "t1.csv", &body);
        let opts = PreprocessOptions::default();
        let ds = load_dataset(&p, DatasetFormat::Csv, &opts).unwrap();
        assert_eq!(ds.class_counts(), [5051, 4240, 2708]);
        assert_eq!(ds.examples.len(), 11_999);
        assert_eq!(ds, load_dataset(&p, DatasetFormat::Csv, &opts).unwrap());
    }

    #[test]
    fn unlabeled_loader() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(dir.path(), "u.csv", "id,text\n1,hello\n2,\"a, b\"\n");
        let posts = load_unlabeled(&p, DatasetFormat::Csv).unwrap();
        assert_eq!(posts, vec![RawPost::new("1", "hello"), RawPost::new("2", "a, b")]);
        let p = write_file(dir.path(), "v.csv", "just text\nmore\n");
        assert_eq!(load_unlabeled(&p, DatasetFormat::Csv).unwrap().len(), 2);
    }

    #[test]
    fn vocab_examples() {
        let v = build_vocab([&toks("a a b")], 2).unwrap();
        assert!(v.contains("a") && !v.contains("b"));
        assert_eq!(v.lookup("b"), UNK);

        let v = build_vocab([&toks("b a")], 1).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "a", "b"]);

        let v = build_vocab(std::iter::empty(), 2).unwrap();
        assert_eq!(v.len(), 2);
        assert!(build_vocab([&toks("a")], 0).is_err());

        let v = build_vocab([&toks("c c c b b a a")], 1).unwrap();
        assert_eq!(v.words().collect::<Vec<_>>(), ["c", "a", "b"]);
    }

    #[test]
    fn encode_examples() {
        let words: TokenList = (0..60).map(|i| format!("w{i}")).collect();
        let v = build_vocab([&words], 1).unwrap();
        assert_eq!(encode(&words, &v, Some(45)).len(), 45);
        assert_eq!(encode(&words, &v, None).len(), 60);
        assert_eq!(encode(&[], &v, None), vec![UNK]);
        assert_eq!(decode(&encode(&words[..3], &v, None), &v), words[..3]);
    }

    #[test]
    fn split_examples() {
        let items: Vec<(usize, ClassLabel)> = (0..300)
            .map(|i| (i, ClassLabel::ALL[i % 3]))
            .collect();
        let (train, dev) = stratified_split(&items, |x| x.1, 0.1, 9).unwrap();
        assert_eq!(class_counts(dev.iter().map(|x| x.1)), [10, 10, 10]);
        assert_eq!(train.len(), 270);
        assert_eq!(
            (train.clone(), dev.clone()),
            stratified_split(&items, |x| x.1, 0.1, 9).unwrap()
        );
        assert!(stratified_split(&items, |x| x.1, 0.6, 9).is_err());
        assert!(stratified_split(&items[..4], |x| x.1, 0.1, 9).is_err());
    }

    proptest! {
        #[test]
        fn encode_in_range(words in prop::collection::vec("[a-e]{1,3}", 0..30), min_freq in 1usize..3, max_len in prop::option::of(1usize..10)) {
            let v = build_vocab([&words], min_freq).unwrap();
            let enc = encode(&words, &v, max_len);
            prop_assert!(!enc.is_empty());
            prop_assert!(enc.iter().all(|&i| i < v.len()));
            if let Some(m) = max_len { prop_assert!(enc.len() <= m); }
            if min_freq == 1 && !words.is_empty() && max_len.is_none() {
                prop_assert_eq!(decode(&enc, &v), words);
            }
        }

        #[test]
        fn split_is_partition(labels in prop::collection::vec(0usize..3, 0..80), frac in 0.01f64..0.49, seed in any::<u64>()) {
            let items: Vec<(usize, ClassLabel)> = labels.iter().enumerate().map(|(i, &c)| (i, ClassLabel::ALL[c])).collect();
            match stratified_split(&items, |x| x.1, frac, seed) {
                Ok((train, dev)) => {
                    let mut all: Vec<usize> = train.iter().chain(&dev).map(|x| x.0).collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..items.len()).collect::<Vec<_>>());
                }
                Err(_) => prop_assert!(class_counts(items.iter().map(|x| x.1)).contains(&1)),
            }
        }
    }
}
