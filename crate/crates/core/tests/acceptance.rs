//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.
//!
//! Criterion 10 needs the TRAC shared-task files, which are not shipped.
//! Point these variables at them to run it:
//!
//! ```text
//! AGGRO_TRAC_EN_TRAIN, AGGRO_TRAC_EN_TEST   English Facebook train / test
//! AGGRO_TRAC_HI_TRAIN, AGGRO_TRAC_HI_TEST   Hindi Facebook train / test
//! ```

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use aggro::corpus::ClassLabel;
use aggro::eval::{confusion, random_baseline, random_predictions, weighted_f1};
use aggro::model::{
    attention, backward, cross_entropy, forward, lstm_step, LstmParams, LstmState, ModelConfig,
    ModelParams,
};
use aggro::numerics::{Rng, Vector};
use common::{aggro, p, printed, stderr, synth};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s as f64, || {
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn loss(params: &ModelParams, cfg: &ModelConfig, idx: &[usize], gold: ClassLabel) -> f64 {
    let (probs, _) = forward(params, cfg, idx, None).expect("forward");
    cross_entropy(&probs, gold)
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = ModelConfig {
        embed_dim: 3,
        hidden_dim: 4,
        dropout_rate: 0.0,
        init_scale: 0.5,
        ..Default::default()
    };
    let (eps, tol, floor) = (1e-5, 1e-4, 1e-5);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for seed in 0..10u64 {
        let mut rng = Rng::new(1000 + seed);
        let params = ModelParams::init(7, &cfg, &mut rng).map_err(|e| e.to_string())?;
        let idx: Vec<usize> = (0..5).map(|_| rng.below(7)).collect();
        let gold = ClassLabel::ALL[rng.below(3)];
        let (_, trace) = forward(&params, &cfg, &idx, None).map_err(|e| e.to_string())?;
        let grads = backward(&params, &trace, gold).map_err(|e| e.to_string())?;

        let mut analytic: Vec<Vec<f64>> = vec![grads.embedding_dense(7, 3).as_slice().to_vec()];
        analytic.extend(grads.dense_blocks().iter().map(|b| b.to_vec()));

        let mut probe = params.clone();
        for (b, name) in aggro::model::BLOCK_NAMES.iter().enumerate() {
            for k in 0..analytic[b].len() {
                let orig = probe.blocks_mut()[b][k];
                probe.blocks_mut()[b][k] = orig + eps;
                let up = loss(&probe, &cfg, &idx, gold);
                probe.blocks_mut()[b][k] = orig - eps;
                let down = loss(&probe, &cfg, &idx, gold);
                probe.blocks_mut()[b][k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[b][k];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
                check(rel < tol, || {
                    format!("seed {seed} {name}[{k}]: analytic {a:e} vs numeric {numeric:e}")
                })?;
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "{checked} coordinates over 10 models, worst relative error {worst:.2e} ({:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

fn lstm_oracle() -> Outcome {
    let tol = 1e-10;
    let sigma10 = 1.0 / (1.0 + (-10.0f64).exp());
    let cases: [(usize, f64, f64, f64, f64); 3] = [
        // (hidden, b_f, c_prev, expected c, expected h)
        (3, 0.0, 0.0, 0.0, 0.0),
        (3, 0.0, 1.0, 0.5, 0.5 * 0.5f64.tanh()),
        (1, 10.0, 1.0, sigma10, 0.5 * sigma10.tanh()),
    ];
    let mut worst = 0.0f64;
    for (n, (hidden, b_f, c_prev, c_want, h_want)) in cases.into_iter().enumerate() {
        let mut p = LstmParams::zeros(2, hidden);
        p.b_f = Vector::filled(hidden, b_f);
        let prev = LstmState {
            h: Vector::zeros(hidden),
            c: Vector::filled(hidden, c_prev),
        };
        let (next, cache) = lstm_step(&p, &Vector::zeros(2), &prev).map_err(|e| e.to_string())?;
        for k in 0..hidden {
            let err = (next.c[k] - c_want).abs().max((next.h[k] - h_want).abs());
            check(err < tol, || {
                format!("case {}: c={} h={} want c={c_want} h={h_want}", n + 1, next.c[k], next.h[k])
            })?;
            if b_f == 0.0 {
                check(cache.f[k] == 0.5 && cache.i[k] == 0.5 && cache.o[k] == 0.5, || {
                    format!("case {}: gates not 0.5", n + 1)
                })?;
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("3 cases, worst error {worst:.1e}; c after open forget gate = {sigma10:.5}"))
}

fn attention_contract() -> Outcome {
    let mut rng = Rng::new(77);
    let mut worst_sum = 0.0f64;
    for n in 0..1000 {
        let t = 1 + rng.below(20);
        let h = 1 + rng.below(8);
        let hs: Vec<Vector> = (0..t)
            .map(|_| (0..h).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>().into())
            .collect();
        let scale = [0.1, 1.0, 10.0, 100.0][rng.below(4)];
        let w: Vector = (0..h)
            .map(|_| rng.uniform(-scale, scale))
            .collect::<Vec<_>>()
            .into();
        let out = attention(&hs, &w).map_err(|e| e.to_string())?;
        let sum: f64 = out.weights.iter().sum();
        check((sum - 1.0).abs() <= 1e-12, || format!("instance {n}: weights sum to {sum}"))?;
        worst_sum = worst_sum.max((sum - 1.0).abs());
        for k in 0..h {
            let lo = hs.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
            let hi = hs.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
            let c = out.context[k];
            check(c >= lo - 1e-12 && c <= hi + 1e-12, || {
                format!("instance {n}: context[{k}]={c} outside [{lo}, {hi}]")
            })?;
        }
        if t == 1 {
            check(out.weights[0] == 1.0 && out.context == hs[0], || {
                format!("instance {n}: single step weight {}", out.weights[0])
            })?;
        }
    }
    Ok(format!("1000 instances, worst |sum - 1| = {worst_sum:.1e}"))
}

fn train_accuracy(preds: &Path) -> Result<f64, String> {
    let text = std::fs::read_to_string(preds).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let correct = rows.iter().filter(|r| r[1] == r[2]).count();
    Ok(correct as f64 / rows.len() as f64)
}

fn run_ok(args: &[&str]) -> Result<std::process::Output, String> {
    let o = aggro(args);
    if o.status.code() == Some(0) {
        Ok(o)
    } else {
        Err(format!("aggro {} failed: {}", args[0], stderr(&o).trim()))
    }
}

fn overfit_fixture(dir: &Path) -> Outcome {
    let start = Instant::now();
    let data = dir.join("overfit.csv");
    synth::write_csv(&data, &synth::overfit_rows()).map_err(|e| e.to_string())?;
    let out = dir.join("overfit");
    run_ok(&[
        "train", "--train", p(&data), "--dev", p(&data), "--variant", "eng-b", "--epochs", "50",
        "--min-freq", "1", "--out", p(&out),
    ])?;
    let o = run_ok(&[
        "eval", "--model", p(&out.join("model.agrm")), "--test", p(&data), "--out",
        p(&out.join("eval")),
    ])?;
    let line = common::stdout(&o);
    let acc = train_accuracy(&out.join("eval").join("predictions.csv"))?;
    check(acc == 1.0, || format!("train accuracy {acc}"))?;
    check(line.lines().next() == Some("weighted_f1=1.0"), || {
        format!("eval printed {:?}", line.trim())
    })?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "train accuracy 100%, eval printed weighted_f1=1.0 ({:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

fn synthetic_learning(dir: &Path) -> Outcome {
    let start = Instant::now();
    let rows = synth::keyword_corpus(1500, 2018);
    let (train, test) = synth::split_80_20(&rows, 2018);
    let (train_path, test_path) = (dir.join("kw_train.csv"), dir.join("kw_test.csv"));
    synth::write_csv(&train_path, &train).map_err(|e| e.to_string())?;
    synth::write_csv(&test_path, &test).map_err(|e| e.to_string())?;
    let out = dir.join("kw");
    run_ok(&["train", "--train", p(&train_path), "--variant", "eng-b", "--out", p(&out)])?;
    let o = run_ok(&[
        "eval", "--model", p(&out.join("model.agrm")), "--test", p(&test_path), "--out",
        p(&out.join("eval")),
    ])?;
    let f1 = printed(&o, "weighted_f1").ok_or("no weighted_f1 line")?;
    check(f1 >= 0.95, || format!("held-out weighted F1 {f1:.4} < 0.95"))?;
    within(start.elapsed(), 600)?;
    Ok(format!(
        "held-out weighted F1 {f1:.4} on {} posts ({:.1} s)",
        test.len(),
        start.elapsed().as_secs_f64()
    ))
}

/// Weighted F1 recomputed from raw pairs, sharing no code with the scorer.
fn recount_f1(gold: &[ClassLabel], pred: &[ClassLabel]) -> ([[u64; 3]; 3], f64) {
    let mut m = [[0u64; 3]; 3];
    for (g, p) in gold.iter().zip(pred) {
        m[g.code()][p.code()] += 1;
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let mut weighted = 0.0;
    for c in 0..3 {
        let tp = m[c][c] as f64;
        let predicted = (0..3).map(|g| m[g][c]).sum::<u64>() as f64;
        let support = m[c].iter().sum::<u64>();
        let precision = div(tp, predicted);
        let recall = div(tp, support as f64);
        let f1 = div(2.0 * precision * recall, precision + recall);
        weighted += support as f64 * f1;
    }
    (m, div(weighted, gold.len() as f64))
}

fn table1_test_gold() -> Vec<ClassLabel> {
    [(ClassLabel::Nag, 1233), (ClassLabel::Cag, 1057), (ClassLabel::Oag, 711)]
        .iter()
        .flat_map(|&(l, n)| std::iter::repeat_n(l, n))
        .collect()
}

fn random_baseline_consistency() -> Outcome {
    let gold = table1_test_gold();
    let mean = random_baseline(&gold, 2018, 1000).map_err(|e| e.to_string())?;
    check((0.33..=0.37).contains(&mean), || format!("mean {mean:.4} outside [0.33, 0.37]"))?;

    let fast = random_baseline(&gold, 5, 100).map_err(|e| e.to_string())?;
    let oracle = (0..100)
        .map(|t| recount_f1(&gold, &random_predictions(gold.len(), 5, t)).1)
        .sum::<f64>()
        / 100.0;
    check((fast - oracle).abs() <= 1e-9, || format!("{fast} vs recount {oracle}"))?;
    Ok(format!(
        "mean over 1000 trials {mean:.4}; 100-trial recount differs by {:.1e}",
        (fast - oracle).abs()
    ))
}

fn baseline_ordering(dir: &Path) -> Outcome {
    let (pos, neg) = (dir.join("pos.txt"), dir.join("neg.txt"));
    synth::write_lexicons(&pos, &neg).map_err(|e| e.to_string())?;
    let mut scores = Vec::new();
    for (name, rows) in [
        ("noisy", synth::noisy_corpus(3000, 2018)),
        ("separable", synth::separable_corpus(900, 2018)),
    ] {
        let (train, test) = synth::split_80_20(&rows, 2018);
        let (tr, te) = (dir.join(format!("{name}_train.csv")), dir.join(format!("{name}_test.csv")));
        synth::write_csv(&tr, &train).map_err(|e| e.to_string())?;
        synth::write_csv(&te, &test).map_err(|e| e.to_string())?;
        let o = run_ok(&[
            "baseline", "--train", p(&tr), "--test", p(&te), "--pos-lexicon", p(&pos),
            "--neg-lexicon", p(&neg), "--out", p(&dir.join(name)), "--random-baseline",
        ])?;
        let f1 = printed(&o, "weighted_f1").ok_or("no weighted_f1 line")?;
        let random = printed(&o, "random_baseline_weighted_f1").ok_or("no baseline line")?;
        scores.push((f1, random));
    }
    let [(noisy, random), (separable, _)] = [scores[0], scores[1]];
    check(noisy > random, || format!("noisy corpus: RF {noisy:.4} <= random {random:.4}"))?;
    check(separable >= 0.9, || format!("separable corpus: RF {separable:.4} < 0.9"))?;
    Ok(format!("noisy RF {noisy:.4} > random {random:.4}; separable RF {separable:.4}"))
}

fn scorer_exactness() -> Outcome {
    let mut rng = Rng::new(31337);
    for n in 0..1000 {
        let len = 1 + rng.below(200);
        let gold: Vec<ClassLabel> = (0..len).map(|_| ClassLabel::ALL[rng.below(3)]).collect();
        let pred: Vec<ClassLabel> = (0..len).map(|_| ClassLabel::ALL[rng.below(3)]).collect();
        let m = confusion(&gold, &pred).map_err(|e| e.to_string())?;
        let (counts, f1) = recount_f1(&gold, &pred);
        check(m.counts == counts, || format!("vector {n}: counts differ"))?;
        let got = weighted_f1(&m).weighted_f1;
        check(got.to_bits() == f1.to_bits(), || format!("vector {n}: {got} vs {f1}"))?;
    }
    let gold: Vec<ClassLabel> = ClassLabel::ALL.iter().flat_map(|&l| [l; 4]).collect();
    let pred = vec![ClassLabel::Nag; gold.len()];
    let f1 = weighted_f1(&confusion(&gold, &pred).map_err(|e| e.to_string())?).weighted_f1;
    check((f1 - 1.0 / 6.0).abs() <= 1e-12, || format!("balanced single-class case {f1}"))?;
    Ok(format!("1000 vectors bit-identical to recount; single-class case {f1:.12}"))
}

fn determinism_and_persistence(dir: &Path) -> Outcome {
    let data = dir.join("det.csv");
    synth::write_csv(&data, &synth::keyword_corpus(300, 9)).map_err(|e| e.to_string())?;
    let mut models = Vec::new();
    for run in ["run1", "run2"] {
        let out = dir.join(run);
        run_ok(&[
            "train", "--train", p(&data), "--variant", "eng-a", "--epochs", "3", "--seed", "11",
            "--out", p(&out),
        ])?;
        let o = run_ok(&[
            "eval", "--model", p(&out.join("model.agrm")), "--test", p(&data), "--out",
            p(&out.join("eval")),
        ])?;
        models.push((
            std::fs::read(out.join("model.agrm")).map_err(|e| e.to_string())?,
            std::fs::read(out.join("eval").join("metrics.txt")).map_err(|e| e.to_string())?,
            common::stdout(&o),
        ));
    }
    check(models[0] == models[1], || "two seeded runs differ".into())?;

    // In-memory model against its reloaded copy.
    let settings = aggro::pipeline::TrainSettings {
        model: ModelConfig {
            embed_dim: 10,
            hidden_dim: 10,
            epochs: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let report =
        aggro::pipeline::train_from_files(&data, None, &settings).map_err(|e| e.to_string())?;
    let path = dir.join("mem.agrm");
    report.model.save(&path).map_err(|e| e.to_string())?;
    let loaded = aggro::pipeline::TrainedModel::load(&path).map_err(|e| e.to_string())?;
    let test = report
        .model
        .load_labeled(&data, aggro::corpus::DatasetFormat::Csv)
        .map_err(|e| e.to_string())?;
    let a = report.model.predict_examples(&test.examples).map_err(|e| e.to_string())?;
    let b = loaded.predict_examples(&test.examples).map_err(|e| e.to_string())?;
    let same = a.iter().zip(&b).all(|((la, pa), (lb, pb))| {
        la == lb && pa.iter().zip(pb.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    check(same && a.len() == b.len(), || "reloaded model scores differently".into())?;

    // Corruption: one flipped byte and a truncated tail.
    let bytes = &models[0].0;
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 3] ^= 0x10;
    let cases = [("flipped", flipped), ("truncated", bytes[..bytes.len() - 9].to_vec())];
    for (name, contents) in cases {
        let bad = dir.join(format!("{name}.agrm"));
        std::fs::write(&bad, contents).map_err(|e| e.to_string())?;
        let o = aggro(&["predict", "--model", p(&bad), "--text", "hello"]);
        check(o.status.code() == Some(1) && stderr(&o).contains("corrupt model"), || {
            format!("{name} model accepted: {}", stderr(&o).trim())
        })?;
    }
    Ok(format!(
        "identical {}-byte model files, exact reload ({} posts), corrupt files rejected",
        bytes.len(),
        a.len()
    ))
}

fn trac_pair(train: &str, test: &str) -> Option<(PathBuf, PathBuf)> {
    Some((std::env::var_os(train)?.into(), std::env::var_os(test)?.into()))
}

fn trac_dataset(dir: &Path) -> Outcome {
    let runs = [
        ("English Facebook", "eng-b", 0.57, trac_pair("AGGRO_TRAC_EN_TRAIN", "AGGRO_TRAC_EN_TEST")),
        ("Hindi Facebook", "hi-a", 0.60, trac_pair("AGGRO_TRAC_HI_TRAIN", "AGGRO_TRAC_HI_TEST")),
    ];
    if runs.iter().all(|r| r.3.is_none()) {
        return Ok("skipped: TRAC files not supplied (set AGGRO_TRAC_EN_TRAIN/TEST or AGGRO_TRAC_HI_TRAIN/TEST)".into());
    }
    let mut notes = Vec::new();
    for (name, variant, target, files) in runs {
        let Some((train, test)) = files else {
            notes.push(format!("{name} skipped"));
            continue;
        };
        let out = dir.join(variant);
        run_ok(&["train", "--train", p(&train), "--variant", variant, "--out", p(&out)])?;
        let o = run_ok(&[
            "eval", "--model", p(&out.join("model.agrm")), "--test", p(&test), "--out",
            p(&out.join("eval")),
        ])?;
        let f1 = printed(&o, "weighted_f1").ok_or("no weighted_f1 line")?;
        check((f1 - target).abs() <= 0.05, || {
            format!("{name}: weighted F1 {f1:.4} outside {target} +/- 0.05")
        })?;
        notes.push(format!("{name} {f1:.4}"));
    }
    Ok(notes.join("; "))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("gradient oracle", Box::new(gradient_oracle)),
        ("LSTM step oracle", Box::new(lstm_oracle)),
        ("attention contract", Box::new(attention_contract)),
        ("overfit fixture", Box::new(|| overfit_fixture(d))),
        ("synthetic corpus learning", Box::new(|| synthetic_learning(d))),
        ("random baseline consistency", Box::new(random_baseline_consistency)),
        ("baseline ordering", Box::new(|| baseline_ordering(d))),
        ("scorer exactness", Box::new(scorer_exactness)),
        ("determinism and persistence", Box::new(|| determinism_and_persistence(d))),
        ("TRAC dataset (conditional)", Box::new(|| trac_dataset(d))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
