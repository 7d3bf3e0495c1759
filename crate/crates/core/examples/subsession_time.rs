//! Sub-session curves: identification accuracy when only the first `s`
//! evaluation blocks per user are available, i.e. how many seconds of
//! sensor data an adversary needs.
//!
//! ```bash
//! cargo run --release --example subsession_time
//! ```

use vrident::adversary::{build_model, subsession_curve, AdversaryScope};
use vrident::config::PipelineConfig;
use vrident::domain::{AppId, ElementMap, SensorGroup};
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let profiles = generate_cohort(&CohortSpec::new(20, CohortMode::Distinct), 7)?;
    let provider = SynthProvider::new(profiles, builtin_archetypes(1.0), 7);
    let cfg = PipelineConfig::default();
    let map = ElementMap::default_map();
    let app = AppId(5);

    for sensor in [SensorGroup::Bm, SensorGroup::Eg] {
        let sm = build_model(&provider, AdversaryScope::App(app), sensor, &cfg, &map)?;
        let curve = subsession_curve(&provider, &sm, app)?;
        println!("{sensor} app model on {app}:");
        for p in &curve.points {
            let bar = "#".repeat((p.accuracy() * 40.0) as usize);
            println!(
                "  s={:2}  S_t={:5.1}s  accuracy {:.2}  {bar}",
                p.s,
                p.s_t_seconds,
                p.accuracy()
            );
        }
    }
    Ok(())
}
