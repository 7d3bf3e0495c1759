//! Generates a synthetic trace corpus in the on-disk dataset layout
//! (`<root>/user_<i>/app_<j>/session_<1|2>/{bm,eg,hj,fe}.csv`) and scans
//! it back.
//!
//! ```bash
//! cargo run --release --example generate_corpus -- /tmp/vrident-data
//! ```

use vrident::ingest::scan_dataset;
use vrident::synth::{
    builtin_archetypes, generate_cohort, write_corpus, CohortMode, CohortSpec, SynthProvider,
};

fn main() -> vrident::Result<()> {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "/tmp/vrident-data".into());
    let root = std::path::PathBuf::from(root);

    let profiles = generate_cohort(&CohortSpec::new(8, CohortMode::Distinct), 42)?;
    let mut archetypes = builtin_archetypes(0.6);
    archetypes.truncate(4);
    let provider = SynthProvider::new(profiles, archetypes, 42);

    std::fs::create_dir_all(&root).expect("create corpus root");
    let written = write_corpus(&provider, &root)?;
    println!("wrote {written} trace files under {}", root.display());

    let index = scan_dataset(&root)?;
    println!(
        "scan: {} entries, {} users, {} apps, {} incomplete pairs",
        index.entries.len(),
        index.users().len(),
        index.apps().len(),
        index.incomplete.len()
    );
    for ((app, group), stats) in index.duration_stats().iter().take(4) {
        println!(
            "  {app}/{group}: mean session-1 duration {:.2}s (variance {:.4}, n={})",
            stats.mean, stats.variance, stats.count
        );
    }
    Ok(())
}
