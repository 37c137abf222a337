//! Helpers shared across integration tests.

use std::path::PathBuf;

use drbml::corpus::{build_entry, DrbMlEntry, Microbenchmark};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Source text for one generated microbenchmark.
pub fn benchmark_source(id: u32, racy: bool) -> (String, String) {
    let name = format!("DRB{id:03}-gen{id}-{}.c", if racy { "yes" } else { "no" });
    let source = if racy {
        format!(
            "/*\nA generated racy loop.\nData race pair: v{id}[i]@6:3:W vs. v{id}[i+1]@6:12:R\n*/\n#pragma omp parallel for\n  v{id}[i]=v{id}[i+1]+{id};\n"
        )
    } else {
        format!("/* generated race-free */\nint main() {{ return {id}; }}\n")
    };
    (name, source)
}

/// Builds `positives` racy then `negatives` race-free entries, ids from 1.
pub fn synthetic_corpus(positives: usize, negatives: usize) -> Vec<DrbMlEntry> {
    (0..positives + negatives)
        .map(|i| {
            let id = (i + 1) as u32;
            let (name, source) = benchmark_source(id, i < positives);
            build_entry(&Microbenchmark::from_source(name, source), id, None)
                .unwrap()
                .entry
        })
        .collect()
}
