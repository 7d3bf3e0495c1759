//! Compares the app adversary against the device adversary (group and
//! universal models), including equal-share (`a_avg`) evaluation.
//!
//! ```bash
//! cargo run --release --example adversary_scopes
//! ```

use vrident::adversary::{build_model, evaluate, evaluate_avg, AdversaryScope};
use vrident::config::PipelineConfig;
use vrident::domain::{AppId, ElementMap, SensorGroup};
use vrident::ingest::TraceProvider;
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let profiles = generate_cohort(&CohortSpec::new(20, CohortMode::Distinct), 7)?;
    let provider = SynthProvider::new(profiles, builtin_archetypes(1.0), 7);
    let cfg = PipelineConfig::default();
    let map = ElementMap::default_map();
    let app = AppId(3);
    let group = "cockpit"; // the group containing a_3

    for sensor in [SensorGroup::Bm, SensorGroup::Fe] {
        let t0 = std::time::Instant::now();

        let app_model = build_model(&provider, AdversaryScope::App(app), sensor, &cfg, &map)?;
        let app_acc = evaluate(&provider, &app_model, app, None)?.accuracy();

        let group_model = build_model(
            &provider,
            AdversaryScope::Group(group.into()),
            sensor,
            &cfg,
            &map,
        )?;
        let group_acc = evaluate(&provider, &group_model, app, None)?.accuracy();
        let members = provider
            .catalog()
            .group_named(group)
            .unwrap()
            .members
            .clone();
        let avg_acc = evaluate_avg(&provider, &group_model, &members)?.accuracy();

        let universal = build_model(&provider, AdversaryScope::Universal, sensor, &cfg, &map)?;
        let uni_acc = evaluate(&provider, &universal, app, None)?.accuracy();
        let uni_avg = evaluate_avg(&provider, &universal, &provider.apps())?.accuracy();

        println!(
            "{sensor}: app {:.2} | group on {app} {:.2} | group a_avg {:.2} | universal on {app} {:.2} | universal a_avg {:.2}  ({:.1?})",
            app_acc, group_acc, avg_acc, uni_acc, uni_avg,
            t0.elapsed()
        );
    }
    Ok(())
}
