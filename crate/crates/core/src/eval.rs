//! Confusion matrices, support-weighted F1 and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: ClassLabel) -> u64 {
        self.counts[class.code()].iter().sum()
    }

    pub fn predicted(&self, class: ClassLabel) -> u64 {
        self.counts.iter().map(|row| row[class.code()]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|c| self.counts[c][c]).sum()
    }
}

pub fn confusion(gold: &[ClassLabel], pred: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::Shape {
            op: "confusion",
            left: (gold.len(), 1),
            right: (pred.len(), 1),
        });
    }
    if gold.is_empty() {
        return Err(Error::Empty("confusion"));
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        m.counts[g.code()][p.code()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: [ClassMetrics; 3],
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class precision, recall and F1 (0/0 read as 0) and their
/// support-weighted mean.
pub fn weighted_f1(m: &ConfusionMatrix) -> MetricsReport {
    let total = m.total();
    let mut per_class = [ClassMetrics::default(); 3];
    let mut weighted = 0.0;
    for class in ClassLabel::ALL {
        let c = class.code();
        let tp = m.counts[c][c] as f64;
        let precision = ratio(tp, m.predicted(class) as f64);
        let recall = ratio(tp, m.support(class) as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let support = m.support(class);
        weighted += support as f64 * f1;
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1,
            support,
        };
    }
    MetricsReport {
        per_class,
        weighted_f1: ratio(weighted, total as f64),
        accuracy: ratio(m.correct() as f64, total as f64),
        total,
    }
}

pub const DEFAULT_TRIALS: usize = 1000;

/// Uniform random predictions for trial `trial`.
pub fn random_predictions(n: usize, seed: u64, trial: usize) -> Vec<ClassLabel> {
    let mut rng = Rng::derive(seed, trial as u64);
    (0..n).map(|_| ClassLabel::ALL[rng.below(3)]).collect()
}

/// Mean weighted F1 of uniform-random guessing over `trials` seeded trials.
pub fn random_baseline(gold: &[ClassLabel], seed: u64, trials: usize) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let scores: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let pred = random_predictions(gold.len(), seed, t);
            confusion(gold, &pred).map(|m| weighted_f1(&m).weighted_f1)
        })
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / trials as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub metrics: PathBuf,
    pub confusion: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn format_metrics(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "weighted_f1={:?}", report.weighted_f1);
    let _ = writeln!(s, "accuracy={:?}", report.accuracy);
    let _ = writeln!(s, "total={}", report.total);
    for class in ClassLabel::ALL {
        let m = &report.per_class[class.code()];
        let _ = writeln!(s, "precision_{class}={:?}", m.precision);
        let _ = writeln!(s, "recall_{class}={:?}", m.recall);
        let _ = writeln!(s, "f1_{class}={:?}", m.f1);
        let _ = writeln!(s, "support_{class}={}", m.support);
    }
    s
}

pub fn format_confusion_csv(m: &ConfusionMatrix) -> String {
    let mut s = String::from("gold\\pred,NAG,CAG,OAG\n");
    for class in ClassLabel::ALL {
        let row = m.counts[class.code()];
        let _ = writeln!(s, "{class},{},{},{}", row[0], row[1], row[2]);
    }
    s
}

/// Heatmap with cells shaded by `count / max` and annotated with counts.
pub fn format_confusion_svg(m: &ConfusionMatrix) -> String {
    const CELL: u32 = 80;
    const MARGIN: u32 = 70;
    let size = MARGIN + 3 * CELL + 10;
    let max = m.counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" font-family=\"sans-serif\" font-size=\"14\">\n"
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">predicted</text>",
        MARGIN + 3 * CELL / 2
    );
    for class in ClassLabel::ALL {
        let i = class.code() as u32;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{class}</text>",
            MARGIN + i * CELL + CELL / 2,
            MARGIN - 10
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{class}</text>",
            MARGIN - 8,
            MARGIN + i * CELL + CELL / 2 + 5
        );
    }
    for (g, row) in m.counts.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            let shade = count as f64 / max;
            let level = (255.0 - 200.0 * shade).round() as u8;
            let (x, y) = (MARGIN + p as u32 * CELL, MARGIN + g as u32 * CELL);
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb({level},{level},255)\" stroke=\"#333\"/>"
            );
            let ink = if shade > 0.6 { "#fff" } else { "#000" };
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{ink}\">{count}</text>",
                x + CELL / 2,
                y + CELL / 2 + 5
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `metrics.txt`, `confusion.csv` and optionally `confusion.svg`
/// into `dir`, creating it if needed.
pub fn emit_report(
    report: &MetricsReport,
    matrix: &ConfusionMatrix,
    dir: &Path,
    svg: bool,
) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles {
        metrics: dir.join("metrics.txt"),
        confusion: dir.join("confusion.csv"),
        svg: svg.then(|| dir.join("confusion.svg")),
    };
    write(&files.metrics, &format_metrics(report))?;
    write(&files.confusion, &format_confusion_csv(matrix))?;
    if let Some(path) = &files.svg {
        write(path, &format_confusion_svg(matrix))?;
    }
    Ok(files)
}

pub fn read_metrics(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let malformed = |msg: &str| Error::Malformed {
            path: path.to_path_buf(),
            line: n as u64 + 1,
            msg: msg.to_string(),
        };
        let (k, v) = line.split_once('=').ok_or_else(|| malformed("expected key=value"))?;
        let v: f64 = v.parse().map_err(|_| malformed("value is not a number"))?;
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

pub fn read_confusion_csv(path: &Path) -> Result<ConfusionMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = ConfusionMatrix::default();
    let mut lines = text.lines();
    lines.next();
    for (g, line) in lines.enumerate().take(3) {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Malformed {
            path: path.to_path_buf(),
            line: g as u64 + 2,
            msg: "expected class,count,count,count".into(),
        };
        if fields.len() != 4 {
            return Err(bad());
        }
        for p in 0..3 {
            m.counts[g][p] = fields[p + 1].parse().map_err(|_| bad())?;
        }
    }
    Ok(m)
}
