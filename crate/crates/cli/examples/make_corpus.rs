//! Regenerates the bundled benchmark corpus under `data/corpus/`.
//!
//! cargo run -p fabba-cli --example make_corpus

use std::path::Path;

use fabba::bench::synthetic_corpus;
use fabba::io::write_series_csv;
use fabba::model::TimeSeries;

fn main() -> fabba::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus");
    std::fs::create_dir_all(&dir)?;
    let corpus = synthetic_corpus(20, 500, 2024)?;
    // six decimals keep the files small without changing the character of the data
    let round = |s: &TimeSeries| TimeSeries::new(s.values().iter().map(|v| (v * 1e6).round() / 1e6).collect());
    let sines = corpus.iter().step_by(2).map(round).collect::<fabba::Result<Vec<_>>>()?;
    let walks = corpus.iter().skip(1).step_by(2).map(round).collect::<fabba::Result<Vec<_>>>()?;
    write_series_csv(dir.join("sines.csv"), &sines)?;
    write_series_csv(dir.join("walks.csv"), &walks)?;
    println!("wrote {} series to {}", sines.len() + walks.len(), dir.display());
    Ok(())
}
