//! Regenerates the bundled sample dataset.
//!
//! `cargo run -p accsev --example make_fixture -- data/sample_accidents.csv`

use accsev::synth::accident_fixture;
use accsev::table::write_csv;

const ROWS: usize = 1000;
const SEED: u64 = 2020;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/sample_accidents.csv".to_string());
    let t = accident_fixture(ROWS, SEED);
    if let Err(e) = write_csv(&t, &path) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    println!("wrote {ROWS} rows to {path}");
}
