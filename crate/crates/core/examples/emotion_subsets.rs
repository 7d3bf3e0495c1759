//! Facial-expression feature subsets: the 63 blend-shape elements map to
//! Action Units, and each emotion selects the elements behind its AU
//! combination. An identifier can train on one emotion's features alone.
//!
//! ```bash
//! cargo run --release --example emotion_subsets
//! ```

use vrident::adversary::{build_model, evaluate, AdversaryScope};
use vrident::config::{FeMethod, PipelineConfig};
use vrident::domain::{AppId, ElementMap, SensorGroup};
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn main() -> vrident::Result<()> {
    let map = ElementMap::default_map();
    println!(
        "element map: {} elements onto {} action units",
        map.au_map.len(),
        map.distinct_aus()
    );
    for (emotion, _) in &map.emotions {
        let elems = map.emotion_elements(emotion)?;
        println!(
            "  {emotion}: elements {elems:?} -> {} features",
            elems.len() * 5
        );
    }
    println!(
        "  union over all emotions: {} elements -> {} features",
        map.all_emotion_elements().len(),
        map.all_emotion_elements().len() * 5
    );

    // identify users from happiness features alone
    let profiles = generate_cohort(&CohortSpec::new(12, CohortMode::Distinct), 3)?;
    let mut archetypes = builtin_archetypes(0.6);
    archetypes.truncate(2);
    let provider = SynthProvider::new(profiles, archetypes, 3);
    for method in [
        FeMethod::Emotion("happiness".into()),
        FeMethod::AllEmotions,
        FeMethod::All,
    ] {
        let cfg = PipelineConfig {
            fe_method: method.clone(),
            ..PipelineConfig::default()
        };
        let sm = build_model(
            &provider,
            AdversaryScope::App(AppId(1)),
            SensorGroup::Fe,
            &cfg,
            &map,
        )?;
        let report = evaluate(&provider, &sm, AppId(1), None)?;
        println!(
            "fe_method {:<18} {} features -> accuracy {:.2}",
            method.as_string(),
            sm.model.columns.len(),
            report.accuracy()
        );
    }
    Ok(())
}
