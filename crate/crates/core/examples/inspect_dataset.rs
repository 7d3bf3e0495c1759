//! Validates and preprocesses a raw trace: duplicate timestamps, corrupt
//! cells repaired from neighbors, dead channels dropped.
//!
//! ```bash
//! cargo run --example inspect_dataset
//! ```

use vrident::domain::{validate_trace, AppId, SensorGroup, SessionId, SessionTrace, UserId};
use vrident::ingest::preprocess;

fn main() -> vrident::Result<()> {
    // a deliberately messy 33-channel body-motion trace
    let channels = SensorGroup::Bm.channel_names();
    let mut values = Vec::new();
    for i in 0..6 {
        let mut row = vec![0.2 + 0.01 * i as f64; channels.len()];
        for slot in SensorGroup::Bm.quaternion_slots() {
            row[slot[0]] = 0.0;
            row[slot[1]] = 0.0;
            row[slot[2]] = 0.0;
            row[slot[3]] = 1.0;
        }
        row[2] = 0.0; // headset_pos_z silent for the whole trace
        values.push(row);
    }
    values[3][0] = f64::NAN; // corrupt cell, e.g. an "ERR" token in the CSV
    let trace = SessionTrace {
        user: UserId(1),
        app: AppId(1),
        session: SessionId::TRAIN,
        group: SensorGroup::Bm,
        channels,
        timestamps_ms: vec![0, 14, 14, 28, 42, 56], // duplicate at 14
        values,
    };

    println!("violations before preprocessing:");
    for v in validate_trace(&trace, 0.05) {
        println!("  [{:?}] {}: {}", v.severity, v.rule, v.detail);
    }

    let (clean, log) = preprocess(&trace)?;
    println!(
        "\npreprocess: {} duplicate timestamps removed, {} cells repaired",
        log.duplicates_removed, log.repaired_cells
    );
    for (channel, reason) in &log.dropped_channels {
        println!("  dropped {channel} ({reason})");
    }
    println!(
        "clean trace: {} samples x {} channels, duration {:.3}s",
        clean.len(),
        clean.channels.len(),
        clean.duration_s()
    );
    println!(
        "repaired cell interpolated to {:.4} (between {:.4} and {:.4})",
        clean.values[2][0], clean.values[1][0], clean.values[3][0]
    );
    assert!(clean.timestamps_ms.windows(2).all(|w| w[1] > w[0]));
    Ok(())
}
