//! Sweeps the block-amount ratio `r`: more blocks of shorter length versus
//! fewer, longer ones, reporting table dimensions and mean app-model
//! accuracy per ratio.
//!
//! ```bash
//! cargo run --release --example sweep_ratio
//! ```

use vrident::adversary::{build_model, evaluate, AdversaryScope};
use vrident::config::{BlockMode, PipelineConfig};
use vrident::domain::{ElementMap, SensorGroup};
use vrident::ingest::TraceProvider;
use vrident::pipeline::app_block_table;
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let profiles = generate_cohort(&CohortSpec::new(12, CohortMode::Distinct), 5)?;
    let mut archetypes = builtin_archetypes(0.7);
    archetypes.truncate(4);
    let provider = SynthProvider::new(profiles, archetypes, 5);
    let map = ElementMap::default_map();
    let sensor = SensorGroup::Bm;

    println!("r     blocks  features  mean app accuracy");
    for r in [0.1, 0.2, 0.5, 1.0, 2.0] {
        let cfg = PipelineConfig {
            block_mode: BlockMode::Fba { r },
            ..PipelineConfig::default()
        };
        let mut blocks = 0;
        let mut width = 0;
        let mut accs = Vec::new();
        for app in provider.apps() {
            let table = app_block_table(&provider, app, sensor, &cfg)?;
            blocks += table.rows.len();
            width = width.max(table.width());
            let sm = build_model(&provider, AdversaryScope::App(app), sensor, &cfg, &map)?;
            accs.push(evaluate(&provider, &sm, app, None)?.accuracy());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("{r:<5} {blocks:>6}  {width:>8}  {mean:.3}");
    }
    Ok(())
}
