//! Runs a preset end to end and prints the manifest summary.
//!
//! cargo run --release --example reproduce_pipeline -- level-statistics out

use std::path::PathBuf;

use z2lgt::pipeline::{preset, run_pipeline};

fn main() -> z2lgt::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("observables");
    let out = PathBuf::from(args.get(2).map(String::as_str).unwrap_or("out")).join(name);
    let manifest = run_pipeline(&preset(name, &out, 2024)?)?;
    println!("{} artifacts in {}", manifest.files.len(), out.display());
    for (k, v) in &manifest.summary {
        println!("{k:<40} {v:.4}");
    }
    for (k, v) in &manifest.timings {
        println!("{k:<10} {v:.2}s");
    }
    std::process::exit(manifest.exit_code());
}
