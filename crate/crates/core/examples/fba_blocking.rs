//! Fixed-block-amount division: the number of blocks per app comes from
//! the floor of the mean session duration, scaled by the ratio `r`, so
//! every user's session splits into the same number of blocks no matter
//! how long they took.
//!
//! ```bash
//! cargo run --example fba_blocking
//! ```

use vrident::blocking::{divide_blocks, make_block_plan, summarize_trace, BlockPlan, Stat};
use vrident::domain::{AppId, SensorGroup, SessionId, SessionTrace, UserId};

fn trace_of(user: u32, duration_s: f64) -> SessionTrace {
    let n = (duration_s * 72.0) as i64;
    let timestamps: Vec<i64> = (0..=n).map(|i| i * 1000 / 72).collect();
    let values = timestamps
        .iter()
        .map(|&t| vec![(t as f64 / 1000.0).sin(), 1.65 + 0.001 * user as f64])
        .collect();
    SessionTrace {
        user: UserId(user),
        app: AppId(1),
        session: SessionId::TRAIN,
        group: SensorGroup::Bm,
        channels: vec!["headset_pos_x".into(), "headset_pos_y".into()],
        timestamps_ms: timestamps,
        values,
    }
}

fn main() -> vrident::Result<()> {
    // three users finish the same activity in different times
    let durations = [3.6, 4.1, 4.6];
    let plan = make_block_plan(&durations, 1.0, AppId(1), SensorGroup::Bm)?;
    println!("session durations: {durations:?}");
    println!("plan: {:?}", plan.mode);

    for (user, d) in durations.iter().enumerate() {
        let t = trace_of(user as u32 + 1, *d);
        let blocks = divide_blocks(&t, &plan)?;
        let len = (blocks[0].end_ms - blocks[0].start_ms) / 1000.0;
        println!(
            "  u_{}: {:.1}s trace -> {} blocks of {:.3}s each",
            user + 1,
            d,
            blocks.len(),
            len
        );
    }

    // a lower ratio merges blocks, a higher one splits finer
    for r in [0.5, 2.0] {
        let plan = make_block_plan(&durations, r, AppId(1), SensorGroup::Bm)?;
        println!("r = {r}: {:?}", plan.mode);
    }

    // fixed-block-length baseline for contrast
    let fbl = BlockPlan::fbl(AppId(1), SensorGroup::Bm, 2.0);
    let blocks = divide_blocks(&trace_of(1, 5.0), &fbl)?;
    println!(
        "FBL 2s on a 5.0s trace -> {} blocks (last spans {:.1}..{:.1}s)",
        blocks.len(),
        blocks.last().unwrap().start_ms / 1000.0,
        blocks.last().unwrap().end_ms / 1000.0
    );

    // summarization: five statistics per channel per block
    let table = summarize_trace(&trace_of(2, 4.1), &plan)?;
    println!(
        "\nsummarized table: {} rows x {} columns",
        table.rows.len(),
        table.width()
    );
    let col = table
        .column_index(&vrident::blocking::ColumnId {
            channel: "headset_pos_y".into(),
            stat: Stat::Mean,
        })
        .unwrap();
    println!(
        "headset_pos_y:mean of block 0 = {:.4}",
        table.rows[0].values[col]
    );
    Ok(())
}
