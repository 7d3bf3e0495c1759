//! Zero-day-app protocol: train a group model on all member apps but one,
//! identify users on the held-out app, and contrast with evaluation on
//! apps from other groups.
//!
//! ```bash
//! cargo run --release --example zero_day
//! ```

use vrident::adversary::{build_model, evaluate, zero_day_eval, AdversaryScope};
use vrident::config::PipelineConfig;
use vrident::domain::{ElementMap, SensorGroup};
use vrident::ingest::TraceProvider;
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let profiles = generate_cohort(&CohortSpec::new(20, CohortMode::Distinct), 7)?;
    let provider = SynthProvider::new(profiles, builtin_archetypes(1.0), 7);
    let cfg = PipelineConfig::default();
    let map = ElementMap::default_map();
    let sensor = SensorGroup::Bm;

    let groups: Vec<_> = provider.catalog().groups().to_vec();
    let mut within = Vec::new();
    let mut cross = Vec::new();

    for g in &groups {
        for &held_out in &g.members {
            let report = zero_day_eval(&provider, &g.name, held_out, sensor, &cfg, &map)?;
            println!(
                "train {} minus {held_out}, test {held_out}: {:.2}",
                g.name,
                report.accuracy()
            );
            within.push(report.accuracy());
        }
    }

    for g in &groups {
        let sm = build_model(
            &provider,
            AdversaryScope::Group(g.name.clone()),
            sensor,
            &cfg,
            &map,
        )?;
        for other in groups.iter().filter(|o| o.name != g.name) {
            let app = other.members[0];
            let report = evaluate(&provider, &sm, app, None)?;
            println!(
                "train {} (all members), test {app} from {}: {:.2}",
                g.name,
                other.name,
                report.accuracy()
            );
            cross.push(report.accuracy());
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "\nmean within-group {:.3} vs cross-group {:.3} (separation {:.3})",
        mean(&within),
        mean(&cross),
        mean(&within) - mean(&cross)
    );
    Ok(())
}
