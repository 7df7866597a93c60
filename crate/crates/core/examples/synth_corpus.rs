//! Writes the seeded synthetic corpora used by the test suite.
//!
//! ```text
//! cargo run -p aggro --example synth_corpus -- <out-dir> [seed]
//! ```

#[path = "../tests/common/synth.rs"]
mod synth;

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(out) = args.next().map(PathBuf::from) else {
        eprintln!("usage: synth_corpus <out-dir> [seed]");
        std::process::exit(2);
    };
    let seed: u64 = match args.next().map(|s| s.parse()) {
        None => 2018,
        Some(Ok(s)) => s,
        Some(Err(_)) => {
            eprintln!("seed must be an unsigned integer");
            std::process::exit(2);
        }
    };
    std::fs::create_dir_all(&out)?;

    let keyword = synth::keyword_corpus(1500, seed);
    let (train, test) = synth::split_80_20(&keyword, seed);
    synth::write_csv(&out.join("keyword.csv"), &keyword)?;
    synth::write_csv(&out.join("keyword_train.csv"), &train)?;
    synth::write_csv(&out.join("keyword_test.csv"), &test)?;

    for (name, rows) in [
        ("separable", synth::separable_corpus(900, seed)),
        ("noisy", synth::noisy_corpus(3000, seed)),
    ] {
        let (train, test) = synth::split_80_20(&rows, seed);
        synth::write_csv(&out.join(format!("{name}_train.csv")), &train)?;
        synth::write_csv(&out.join(format!("{name}_test.csv")), &test)?;
    }
    synth::write_lexicons(&out.join("positive-words.txt"), &out.join("negative-words.txt"))?;
    synth::write_csv(&out.join("overfit.csv"), &synth::overfit_rows())?;
    eprintln!("wrote corpora to {}", out.display());
    Ok(())
}
