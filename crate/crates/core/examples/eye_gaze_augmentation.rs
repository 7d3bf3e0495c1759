//! Eye-gaze feature augmentation: for every paired left/right channel the
//! absolute difference becomes a derived channel. The derived pos-y
//! channel is the inter-pupillary distance, which survives gaze wander
//! because the shared component cancels.
//!
//! ```bash
//! cargo run --example eye_gaze_augmentation
//! ```

use vrident::domain::{ElementMap, SensorGroup, SessionId};
use vrident::features::augment_eye_gaze;
use vrident::ingest::preprocess;
use vrident::synth::{
    builtin_archetypes, generate_cohort, generate_trace, CohortMode, CohortSpec, SampleRates,
};

fn main() -> vrident::Result<()> {
    let mut spec = CohortSpec::new(2, CohortMode::VaryIpd);
    spec.noise_scale = 0.0;
    let profiles = generate_cohort(&spec, 9)?;
    let archetype = &builtin_archetypes(0.5)[0];
    let map = ElementMap::default_map();

    for p in &profiles {
        let raw = generate_trace(
            p,
            archetype,
            SessionId::TRAIN,
            SensorGroup::Eg,
            SampleRates::default(),
            &map,
            9,
        );
        let (clean, _) = preprocess(&raw)?;
        let augmented = augment_eye_gaze(&clean)?;
        println!(
            "{}: {} channels -> {} after augmentation",
            p.user,
            clean.channels.len(),
            augmented.channels.len()
        );

        let ipd_ch = augmented.channel_index("eye_lr_pos_y").unwrap();
        let mean_ipd: f64 =
            augmented.values.iter().map(|r| r[ipd_ch]).sum::<f64>() / augmented.len() as f64;
        println!(
            "  profile IPD {:.4} m, derived channel mean {:.4} m",
            p.ipd_m, mean_ipd
        );

        // raw eye positions wander with gaze; the difference does not
        let ly = augmented.channel_index("eye_l_pos_y").unwrap();
        let spread = |ch: usize| {
            let vals: Vec<f64> = augmented.values.iter().map(|r| r[ch]).collect();
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            max - min
        };
        println!(
            "  raw eye_l_pos_y spread {:.4} m vs derived spread {:.6} m",
            spread(ly),
            spread(ipd_ch)
        );
    }
    Ok(())
}
