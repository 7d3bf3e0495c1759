//! Trains one app-scoped identifier on synthetic traces and inspects the
//! tuning record, validation accuracy, and top features.
//!
//! ```bash
//! cargo run --release --example train_identifier
//! ```

use vrident::adversary::{build_model, evaluate, AdversaryScope};
use vrident::classifier::feature_importance;
use vrident::config::PipelineConfig;
use vrident::domain::{AppId, ElementMap, SensorGroup};
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let start = std::time::Instant::now();

    let cohort = CohortSpec::new(20, CohortMode::Distinct);
    let profiles = generate_cohort(&cohort, 7)?;
    let provider = SynthProvider::new(profiles, builtin_archetypes(1.0), 7);

    let cfg = PipelineConfig::default();
    let map = ElementMap::default_map();

    let sm = build_model(
        &provider,
        AdversaryScope::App(AppId(1)),
        SensorGroup::Bm,
        &cfg,
        &map,
    )?;

    println!("scope {} / {}", sm.scope.label(), sm.sensor);
    println!("columns after selection: {}", sm.model.columns.len());
    for t in &sm.model.tuning.tried {
        println!(
            "  tried n_estimators={:3} max_depth={:2} -> cv {:.3}",
            t.n_estimators, t.max_depth, t.cv_accuracy
        );
    }
    let chosen = &sm.model.tuning.tried[sm.model.tuning.chosen];
    println!(
        "chosen n_estimators={} max_depth={} | validation accuracy {:.3}",
        chosen.n_estimators, chosen.max_depth, sm.model.tuning.val_accuracy
    );

    let report = evaluate(&provider, &sm, AppId(1), None)?;
    println!(
        "evaluation on {}: {}/{} users identified ({:.0}%)",
        report.eval_app,
        report.correct,
        report.n_evaluated,
        report.accuracy() * 100.0
    );

    println!("top features:");
    for (col, imp) in feature_importance(&sm.model, 5) {
        println!("  {col}  {imp:.4}");
    }

    println!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
