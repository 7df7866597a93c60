//! End-to-end training and inference on raw text, and the mapping between
//! a trained model and the `.agrm` container.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{
    build_vocab, class_counts, encode, encode_examples, load_dataset, stratified_split,
    ClassLabel, Dataset, DatasetFormat, EncodedExample, LabeledExample, Vocabulary, PAD_TOKEN,
    UNK_TOKEN,
};
use crate::error::{Error, Result};
use crate::model::{self, predict_indices, EpochLog, ModelConfig, ModelParams};
use crate::modelfile::{ModelFile, ModelFileError, Tensor};
use crate::numerics::{Rng, Vector};
use crate::preprocess::{preprocess_text, Lemmatizer, PreprocessOptions, TokenList};

/// Named hyperparameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// First 45 words, dropout 0.2.
    EngA,
    /// Full length, dropout 0.3.
    #[default]
    EngB,
    /// Full length, dropout 0.3.
    HiA,
    Custom,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::EngA, Variant::EngB, Variant::HiA, Variant::Custom];

    pub fn name(self) -> &'static str {
        match self {
            Variant::EngA => "eng-a",
            Variant::EngB => "eng-b",
            Variant::HiA => "hi-a",
            Variant::Custom => "custom",
        }
    }

    /// Overwrites only the fields this preset names.
    pub fn apply(self, cfg: &mut ModelConfig) {
        match self {
            Variant::EngA => {
                cfg.max_len = Some(45);
                cfg.dropout_rate = 0.2;
            }
            Variant::EngB | Variant::HiA => {
                cfg.max_len = None;
                cfg.dropout_rate = 0.3;
            }
            Variant::Custom => {}
        }
    }

    pub fn config(self) -> ModelConfig {
        let mut cfg = ModelConfig::default();
        self.apply(&mut cfg);
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant {s:?} (expected eng-a, eng-b, hi-a or custom)"))
    }
}

#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub variant: Variant,
    pub model: ModelConfig,
    pub min_freq: usize,
    pub dev_fraction: f64,
    pub enable_spell: bool,
    pub lemmatizer: Lemmatizer,
    pub format: DatasetFormat,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            variant: Variant::default(),
            model: Variant::default().config(),
            min_freq: 2,
            dev_fraction: 0.1,
            enable_spell: false,
            lemmatizer: Lemmatizer::default(),
            format: DatasetFormat::Csv,
        }
    }
}

/// Everything inference needs: preprocessing settings, vocabulary, weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub variant: Variant,
    pub config: ModelConfig,
    pub min_freq: usize,
    pub enable_spell: bool,
    pub lemmatizer: Lemmatizer,
    pub vocab: Vocabulary,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct VocabStats {
    pub vocab_size: usize,
    pub min_freq: usize,
    pub train_examples: usize,
    pub dev_examples: usize,
    pub skipped_empty: usize,
    pub train_tokens: usize,
    pub train_unk_tokens: usize,
    pub train_class_counts: [usize; 3],
}

impl VocabStats {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "vocab_size={}\nmin_freq={}\ntrain_examples={}\ndev_examples={}\nskipped_empty={}\ntrain_tokens={}\ntrain_unk_tokens={}\n",
            self.vocab_size,
            self.min_freq,
            self.train_examples,
            self.dev_examples,
            self.skipped_empty,
            self.train_tokens,
            self.train_unk_tokens,
        );
        for c in ClassLabel::ALL {
            s.push_str(&format!("train_{}={}\n", c.name(), self.train_class_counts[c.code()]));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: TrainedModel,
    pub log: Vec<EpochLog>,
    pub best_epoch: Option<usize>,
    pub stats: VocabStats,
}

pub fn format_epoch_log(log: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_loss,dev_weighted_f1\n");
    for e in log {
        s.push_str(&format!("{},{:?},{:?}\n", e.epoch, e.train_loss, e.dev_weighted_f1));
    }
    s
}

// Independent streams for the split, the initial weights and the training loop.
const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

fn spell_vocab(vocab: &Vocabulary) -> HashSet<String> {
    vocab.words().map(str::to_string).collect()
}

fn reprocess(examples: &mut [LabeledExample], opts: &PreprocessOptions) {
    examples
        .par_iter_mut()
        .for_each(|e| e.tokens = preprocess_text(&e.raw_text, opts));
}

/// Trains from labelled files. Without `dev`, a stratified slice of `train`
/// is held out. With spelling correction on, the corrector's dictionary is
/// the vocabulary of a first uncorrected pass, and the final vocabulary is
/// rebuilt from the corrected tokens.
pub fn train_from_files(
    train: &Path,
    dev: Option<&Path>,
    settings: &TrainSettings,
) -> Result<TrainReport> {
    let base = PreprocessOptions {
        enable_spell: false,
        spell_vocab: None,
        lemmatizer: settings.lemmatizer.clone(),
    };
    let train_set = load_dataset(train, settings.format, &base)?;
    let dev_set = dev
        .map(|p| load_dataset(p, settings.format, &base))
        .transpose()?;
    train_from_datasets(train_set, dev_set, settings)
}

pub fn train_from_datasets(
    train_set: Dataset,
    dev_set: Option<Dataset>,
    settings: &TrainSettings,
) -> Result<TrainReport> {
    let cfg = &settings.model;
    cfg.validate()?;
    if settings.min_freq == 0 {
        return Err(Error::invalid("min_freq must be at least 1"));
    }
    if train_set.examples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let skipped_empty = train_set.skipped_empty;
    let (mut train_ex, mut dev_ex) = match dev_set {
        Some(d) => (train_set.examples, d.examples),
        None => stratified_split(
            &train_set.examples,
            |e| e.label,
            settings.dev_fraction,
            Rng::derive(cfg.seed, SPLIT_STREAM).next_u64(),
        )?,
    };

    let mut vocab = build_vocab(train_ex.iter().map(|e| &e.tokens), settings.min_freq)?;
    if settings.enable_spell {
        let opts = PreprocessOptions {
            enable_spell: true,
            spell_vocab: Some(spell_vocab(&vocab)),
            lemmatizer: settings.lemmatizer.clone(),
        };
        reprocess(&mut train_ex, &opts);
        reprocess(&mut dev_ex, &opts);
        vocab = build_vocab(train_ex.iter().map(|e| &e.tokens), settings.min_freq)?;
    }

    let train_enc = encode_examples(&train_ex, &vocab, cfg.max_len);
    let dev_enc = encode_examples(&dev_ex, &vocab, cfg.max_len);
    let train_tokens: usize = train_enc.iter().map(|e| e.indices.len()).sum();
    let train_unk_tokens = train_enc
        .iter()
        .flat_map(|e| &e.indices)
        .filter(|&&i| i == crate::corpus::UNK)
        .count();

    let init = ModelParams::init(vocab.len(), cfg, &mut Rng::derive(cfg.seed, INIT_STREAM))?;
    let outcome = model::train(
        init,
        cfg,
        &train_enc,
        &dev_enc,
        &mut Rng::derive(cfg.seed, TRAIN_STREAM),
    )?;

    let stats = VocabStats {
        vocab_size: vocab.len(),
        min_freq: settings.min_freq,
        train_examples: train_ex.len(),
        dev_examples: dev_ex.len(),
        skipped_empty,
        train_tokens,
        train_unk_tokens,
        train_class_counts: class_counts(train_ex.iter().map(|e| e.label)),
    };
    Ok(TrainReport {
        model: TrainedModel {
            variant: settings.variant,
            config: cfg.clone(),
            min_freq: settings.min_freq,
            enable_spell: settings.enable_spell,
            lemmatizer: settings.lemmatizer.clone(),
            vocab,
            params: outcome.params,
        },
        log: outcome.log,
        best_epoch: outcome.best_epoch,
        stats,
    })
}

const LEMMA_PREFIX: &str = "lemma_exception.";

fn opt_to_string<T: fmt::Debug>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:?}"))
}

impl TrainedModel {
    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            enable_spell: self.enable_spell,
            spell_vocab: self.enable_spell.then(|| spell_vocab(&self.vocab)),
            lemmatizer: self.lemmatizer.clone(),
        }
    }

    pub fn tokens(&self, text: &str) -> TokenList {
        preprocess_text(text, &self.preprocess_options())
    }

    pub fn encode_text(&self, text: &str) -> Vec<usize> {
        encode(&self.tokens(text), &self.vocab, self.config.max_len)
    }

    pub fn predict_text(&self, text: &str) -> Result<(ClassLabel, Vector)> {
        predict_indices(&self.params, &self.config, &self.encode_text(text))
    }

    /// Batch inference; rows are independent, so this runs in parallel.
    pub fn predict_texts(&self, texts: &[&str]) -> Result<Vec<(ClassLabel, Vector)>> {
        let opts = self.preprocess_options();
        texts
            .par_iter()
            .map(|t| {
                let idx = encode(&preprocess_text(t, &opts), &self.vocab, self.config.max_len);
                predict_indices(&self.params, &self.config, &idx)
            })
            .collect()
    }

    pub fn predict_examples(&self, examples: &[LabeledExample]) -> Result<Vec<(ClassLabel, Vector)>> {
        let enc: Vec<EncodedExample> = encode_examples(examples, &self.vocab, self.config.max_len);
        enc.par_iter()
            .map(|e| predict_indices(&self.params, &self.config, &e.indices))
            .collect()
    }

    /// Loads and preprocesses a labelled file the same way training did.
    pub fn load_labeled(&self, path: &Path, format: DatasetFormat) -> Result<Dataset> {
        load_dataset(path, format, &self.preprocess_options())
    }

    pub fn to_file(&self) -> ModelFile {
        let c = &self.config;
        let mut config: Vec<(String, String)> = vec![
            ("variant".into(), self.variant.name().into()),
            ("embed_dim".into(), c.embed_dim.to_string()),
            ("hidden_dim".into(), c.hidden_dim.to_string()),
            ("num_classes".into(), c.num_classes.to_string()),
            ("dropout_rate".into(), format!("{:?}", c.dropout_rate)),
            ("learning_rate".into(), format!("{:?}", c.learning_rate)),
        ];
        if let Some(m) = c.max_len {
            config.push(("max_len".into(), m.to_string()));
        }
        config.extend([
            ("epochs".into(), c.epochs.to_string()),
            ("seed".into(), c.seed.to_string()),
            ("init_scale".into(), format!("{:?}", c.init_scale)),
            ("adam_beta1".into(), format!("{:?}", c.adam_beta1)),
            ("adam_beta2".into(), format!("{:?}", c.adam_beta2)),
            ("adam_eps".into(), format!("{:?}", c.adam_eps)),
            ("patience".into(), opt_to_string(c.patience)),
            ("clip_norm".into(), opt_to_string(c.clip_norm)),
            ("min_freq".into(), self.min_freq.to_string()),
            ("spell".into(), self.enable_spell.to_string()),
        ]);
        for (surface, lemma) in self.lemmatizer.exceptions() {
            if !surface.contains(['=', '\n']) && !lemma.contains('\n') {
                config.push((format!("{LEMMA_PREFIX}{surface}"), lemma.to_string()));
            }
        }
        let tensors = self
            .params
            .blocks()
            .iter()
            .map(|b| Tensor {
                name: b.name.to_string(),
                rows: b.rows,
                cols: b.cols,
                data: b.data.to_vec(),
            })
            .collect();
        ModelFile {
            config,
            vocab: self.vocab.tokens().to_vec(),
            tensors,
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let get = |key: &str| {
            file.config_value(key)
                .ok_or_else(|| bad(format!("config is missing {key}")))
        };
        let config = ModelConfig {
            embed_dim: parse(get("embed_dim")?, "embed_dim")?,
            hidden_dim: parse(get("hidden_dim")?, "hidden_dim")?,
            num_classes: parse(get("num_classes")?, "num_classes")?,
            dropout_rate: parse(get("dropout_rate")?, "dropout_rate")?,
            learning_rate: parse(get("learning_rate")?, "learning_rate")?,
            max_len: file
                .config_value("max_len")
                .map(|v| parse(v, "max_len"))
                .transpose()?,
            epochs: parse(get("epochs")?, "epochs")?,
            seed: parse(get("seed")?, "seed")?,
            init_scale: parse(get("init_scale")?, "init_scale")?,
            adam_beta1: parse(get("adam_beta1")?, "adam_beta1")?,
            adam_beta2: parse(get("adam_beta2")?, "adam_beta2")?,
            adam_eps: parse(get("adam_eps")?, "adam_eps")?,
            patience: parse_opt(get("patience")?, "patience")?,
            clip_norm: parse_opt(get("clip_norm")?, "clip_norm")?,
        };
        config
            .validate()
            .map_err(|e| bad(format!("invalid config: {e}")))?;
        let variant = get("variant")?.parse::<Variant>().map_err(bad)?;
        let min_freq = parse(get("min_freq")?, "min_freq")?;
        let enable_spell = parse(get("spell")?, "spell")?;
        let mut lemmatizer = Lemmatizer::default();
        for (k, v) in &file.config {
            if let Some(surface) = k.strip_prefix(LEMMA_PREFIX) {
                lemmatizer.insert(surface, v);
            }
        }

        let vocab = Vocabulary::from_tokens(file.vocab)
            .map_err(|e| bad(format!("invalid vocabulary: {e}")))?;
        let blocks = file
            .tensors
            .into_iter()
            .map(|t| (t.name, t.rows, t.cols, t.data))
            .collect();
        let params = ModelParams::from_blocks(vocab.len(), &config, blocks)
            .map_err(|e| bad(format!("tensors do not match config: {e}")))?;
        Ok(TrainedModel {
            variant,
            config,
            min_freq,
            enable_spell,
            lemmatizer,
            vocab,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.to_file().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(ModelFile::load(path)?)
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFile(ModelFileError::Malformed(msg.into()))
}

fn parse<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(format!("config value {key}={v:?} does not parse")))
}

fn parse_opt<T: FromStr>(v: &str, key: &str) -> Result<Option<T>> {
    if v == "none" {
        Ok(None)
    } else {
        parse(v, key).map(Some)
    }
}

/// Index → token table without the two reserved entries, in index order.
pub fn vocab_words(vocab: &Vocabulary) -> Vec<&str> {
    vocab
        .tokens()
        .iter()
        .map(String::as_str)
        .filter(|t| *t != PAD_TOKEN && *t != UNK_TOKEN)
        .collect()
}
