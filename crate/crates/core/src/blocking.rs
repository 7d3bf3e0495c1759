//! Block division and summarization.
//!
//! FBA (fixed-block amount) divides every user's trace for a given app into
//! the same number of blocks, letting per-user block length absorb duration
//! variability so that similar phases of the user-app interaction line up.
//! FBL (fixed-block length) is the constant-duration baseline.
//!
//! Each block is summarized per channel into five statistics: max, min,
//! mean, population standard deviation, and median (even counts take the
//! mean of the middle two). Summation is in sample-index order so results
//! are reproducible bit for bit.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::domain::{AppId, SensorGroup, SessionId, SessionTrace, UserId};
use crate::error::{Error, Result};

/// The five block statistics, in manifest order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Max,
    Min,
    Mean,
    Std,
    Median,
}

impl Stat {
    pub const ALL: [Stat; 5] = [Stat::Max, Stat::Min, Stat::Mean, Stat::Std, Stat::Median];

    pub fn key(self) -> &'static str {
        match self {
            Stat::Max => "max",
            Stat::Min => "min",
            Stat::Mean => "mean",
            Stat::Std => "std",
            Stat::Median => "median",
        }
    }

    pub fn from_key(s: &str) -> Option<Stat> {
        match s {
            "max" => Some(Stat::Max),
            "min" => Some(Stat::Min),
            "mean" => Some(Stat::Mean),
            "std" => Some(Stat::Std),
            "median" => Some(Stat::Median),
            _ => None,
        }
    }
}

/// One feature column: a (channel, statistic) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnId {
    pub channel: String,
    pub stat: Stat,
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.channel, self.stat.key())
    }
}

impl ColumnId {
    pub fn parse(s: &str) -> Option<ColumnId> {
        let (channel, stat) = s.rsplit_once(':')?;
        Some(ColumnId {
            channel: channel.to_string(),
            stat: Stat::from_key(stat)?,
        })
    }
}

/// How many blocks an app's traces are divided into, or the fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlanMode {
    Fba { n_j: u32, r: f64, n_fba: u32 },
    Fbl { length_s: f64 },
}

/// Per-app, per-sensor-group block-division parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub app: AppId,
    pub group: SensorGroup,
    pub mode: PlanMode,
}

impl BlockPlan {
    pub fn fbl(app: AppId, group: SensorGroup, length_s: f64) -> BlockPlan {
        BlockPlan {
            app,
            group,
            mode: PlanMode::Fbl { length_s },
        }
    }

    /// FBA block count, when in FBA mode.
    pub fn n_fba(&self) -> Option<u32> {
        match self.mode {
            PlanMode::Fba { n_fba, .. } => Some(n_fba),
            PlanMode::Fbl { .. } => None,
        }
    }
}

/// Builds the FBA plan for one app and sensor group from per-user session
/// durations (seconds): `N_j = floor(mean durations)`, then
/// `N_FBA = round(r * N_j)` (half-up) with a floor of 1.
pub fn make_block_plan(
    durations_s: &[f64],
    r: f64,
    app: AppId,
    group: SensorGroup,
) -> Result<BlockPlan> {
    if durations_s.is_empty() {
        return Err(Error::NoSessions(app.to_string()));
    }
    if durations_s.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParam(format!(
            "non-positive session duration for {app}"
        )));
    }
    if !(r > 0.0 && r <= 2.0) {
        return Err(Error::InvalidParam(format!("r must be in (0, 2], got {r}")));
    }
    let mut sum = 0.0;
    for &d in durations_s {
        sum += d;
    }
    let mean = sum / durations_s.len() as f64;
    let n_j = (mean.floor() as u32).max(1);
    let n_fba = ((r * n_j as f64).round() as u32).max(1);
    Ok(BlockPlan {
        app,
        group,
        mode: PlanMode::Fba { n_j, r, n_fba },
    })
}

/// One block: a contiguous slice of a trace's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub user: UserId,
    pub app: AppId,
    pub session: SessionId,
    pub group: SensorGroup,
    pub index: u32,
    /// Block boundaries in milliseconds (closed on the right for the last
    /// block of a trace).
    pub start_ms: f64,
    pub end_ms: f64,
    /// Sample index range `[first, last)` into the trace.
    pub first: usize,
    pub last: usize,
}

impl Block {
    pub fn sample_count(&self) -> usize {
        self.last - self.first
    }
}

/// Divides a preprocessed trace into blocks according to the plan.
///
/// FBA splits the time span into `N_FBA` equal-duration intervals and
/// returns exactly `N_FBA` blocks (some possibly empty; those rows are
/// flagged invalid at summarization). FBL cuts consecutive fixed-length
/// intervals, keeping a final partial interval only when it holds at least
/// two samples.
pub fn divide_blocks(trace: &SessionTrace, plan: &BlockPlan) -> Result<Vec<Block>> {
    if plan.app != trace.app || plan.group != trace.group {
        return Err(Error::InvalidParam(format!(
            "plan for ({}, {}) applied to trace ({}, {})",
            plan.app, plan.group, trace.app, trace.group
        )));
    }
    let m = trace.len();
    let ts = &trace.timestamps_ms;
    match plan.mode {
        PlanMode::Fba { n_fba, .. } => {
            let n = n_fba as usize;
            if m < n {
                return Err(Error::Undersampled {
                    samples: m,
                    blocks: n,
                });
            }
            let t0 = ts[0] as f64;
            let span = ts[m - 1] as f64 - t0;
            let len = span / n as f64;
            let mut blocks = Vec::with_capacity(n);
            let mut cursor = 0usize;
            for k in 0..n {
                let start = t0 + len * k as f64;
                let end = t0 + len * (k + 1) as f64;
                let first = cursor;
                while cursor < m {
                    let t = ts[cursor] as f64;
                    let inside = if k + 1 == n { t <= end + 1e-9 } else { t < end };
                    if inside {
                        cursor += 1;
                    } else {
                        break;
                    }
                }
                blocks.push(Block {
                    user: trace.user,
                    app: trace.app,
                    session: trace.session,
                    group: trace.group,
                    index: k as u32,
                    start_ms: start,
                    end_ms: end,
                    first,
                    last: cursor,
                });
            }
            debug_assert_eq!(cursor, m);
            Ok(blocks)
        }
        PlanMode::Fbl { length_s } => {
            if !(length_s > 0.0) {
                return Err(Error::InvalidParam("FBL length must be positive".into()));
            }
            if m < 2 {
                return Err(Error::TraceTooShort(m));
            }
            let len = length_s * 1000.0;
            let t0 = ts[0] as f64;
            let span = ts[m - 1] as f64 - t0;
            let n_full = (span / len).floor() as usize;
            let rem = span - n_full as f64 * len;
            let total = if rem > 0.0 { n_full + 1 } else { n_full.max(1) };
            let mut blocks = Vec::with_capacity(total);
            let mut cursor = 0usize;
            for k in 0..total {
                let start = t0 + len * k as f64;
                let end = if k + 1 == total {
                    ts[m - 1] as f64
                } else {
                    t0 + len * (k + 1) as f64
                };
                let first = cursor;
                while cursor < m {
                    let t = ts[cursor] as f64;
                    let inside = if k + 1 == total {
                        t <= end + 1e-9
                    } else {
                        t < end
                    };
                    if inside {
                        cursor += 1;
                    } else {
                        break;
                    }
                }
                blocks.push(Block {
                    user: trace.user,
                    app: trace.app,
                    session: trace.session,
                    group: trace.group,
                    index: k as u32,
                    start_ms: start,
                    end_ms: end,
                    first,
                    last: cursor,
                });
            }
            // drop a final partial interval that holds fewer than 2 samples
            if rem > 0.0 && blocks.last().map(|b| b.sample_count() < 2).unwrap_or(false) {
                blocks.pop();
            }
            Ok(blocks)
        }
    }
}

/// One summarized block with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub user: UserId,
    pub app: AppId,
    pub session: SessionId,
    pub block: u32,
    /// Raw samples behind the row; 0 marks an invalid (empty-block) row.
    pub sample_count: usize,
    /// Fraction of raw samples that are exactly zero across all channels.
    pub zero_fraction: f64,
    pub values: Vec<f64>,
}

impl FeatureRow {
    /// Stable identity of the row, independent of table ordering.
    pub fn key(&self) -> (AppId, UserId, SessionId, u32) {
        (self.app, self.user, self.session, self.block)
    }
}

/// A table of summarized blocks sharing one column manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTable {
    pub group: SensorGroup,
    pub columns: Vec<ColumnId>,
    pub rows: Vec<FeatureRow>,
    /// Free-form provenance note (plan, config hash), carried to sidecars.
    #[serde(default)]
    pub provenance: Option<String>,
}

impl BlockTable {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, col: &ColumnId) -> Option<usize> {
        self.columns.iter().position(|c| c == col)
    }

    pub fn sort_rows(&mut self) {
        self.rows.sort_by_key(|r| r.key());
    }
}

/// Five statistics of one channel slice, in [`Stat::ALL`] order.
/// Summation runs in index order; median of an even count is the mean of
/// the middle two values.
pub fn channel_stats(vals: &[f64]) -> [f64; 5] {
    let n = vals.len();
    if n == 0 {
        return [f64::NAN; 5];
    }
    let mut mx = vals[0];
    let mut mn = vals[0];
    for &v in vals {
        if v > mx {
            mx = v;
        }
        if v < mn {
            mn = v;
        }
    }
    let mut sum = 0.0;
    for &v in vals {
        sum += v;
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for &v in vals {
        let d = v - mean;
        ss += d * d;
    }
    let std = (ss / n as f64).sqrt();
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    [mx, mn, mean, std, median]
}

/// Summarizes one block into a feature row. Empty blocks produce a row
/// with `sample_count == 0` and NaN features; post-processing removes it.
pub fn summarize_block(trace: &SessionTrace, block: &Block) -> FeatureRow {
    let width = trace.channels.len() * Stat::ALL.len();
    let count = block.sample_count();
    if count == 0 {
        return FeatureRow {
            user: block.user,
            app: block.app,
            session: block.session,
            block: block.index,
            sample_count: 0,
            zero_fraction: 0.0,
            values: vec![f64::NAN; width],
        };
    }
    let mut values = Vec::with_capacity(width);
    let mut chan = Vec::with_capacity(count);
    for c in 0..trace.channels.len() {
        chan.clear();
        for i in block.first..block.last {
            chan.push(trace.values[i][c]);
        }
        values.extend_from_slice(&channel_stats(&chan));
    }
    let zero_rows = (block.first..block.last)
        .filter(|&i| trace.values[i].iter().all(|&v| v == 0.0))
        .count();
    FeatureRow {
        user: block.user,
        app: block.app,
        session: block.session,
        block: block.index,
        sample_count: count,
        zero_fraction: zero_rows as f64 / count as f64,
        values,
    }
}

/// Column manifest for a trace's channels: each channel crossed with the
/// five statistics.
pub fn manifest_for(channels: &[String]) -> Vec<ColumnId> {
    let mut cols = Vec::with_capacity(channels.len() * Stat::ALL.len());
    for ch in channels {
        for s in Stat::ALL {
            cols.push(ColumnId {
                channel: ch.clone(),
                stat: s,
            });
        }
    }
    cols
}

/// Divides and summarizes one trace into a single-trace table.
pub fn summarize_trace(trace: &SessionTrace, plan: &BlockPlan) -> Result<BlockTable> {
    let blocks = divide_blocks(trace, plan)?;
    let rows = blocks.iter().map(|b| summarize_block(trace, b)).collect();
    Ok(BlockTable {
        group: trace.group,
        columns: manifest_for(&trace.channels),
        rows,
        provenance: None,
    })
}

/// Pools per-trace tables into one table over the intersection of their
/// column manifests (channels dropped by preprocessing in any trace are
/// dropped everywhere, so every row shares one column set). Rows come out
/// sorted by their stable key.
pub fn align_tables(tables: Vec<BlockTable>) -> Result<BlockTable> {
    let mut iter = tables.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidParam("align_tables on empty input".into()))?;
    let group = first.group;
    let mut shared: Vec<ColumnId> = first.columns.clone();
    let mut parts = vec![first];
    for t in iter {
        if t.group != group {
            return Err(Error::ManifestMismatch(format!(
                "cannot pool {} table into {} table",
                t.group, group
            )));
        }
        let have: BTreeSet<&ColumnId> = t.columns.iter().collect();
        shared.retain(|c| have.contains(c));
        parts.push(t);
    }
    if shared.is_empty() {
        return Err(Error::ManifestMismatch(
            "no common columns across pooled tables".into(),
        ));
    }
    let mut rows = Vec::new();
    for t in &parts {
        let idx: Vec<usize> = shared
            .iter()
            .map(|c| t.column_index(c).expect("intersection column present"))
            .collect();
        for r in &t.rows {
            let values = idx.iter().map(|&i| r.values[i]).collect();
            rows.push(FeatureRow {
                values,
                ..r.clone()
            });
        }
    }
    let mut table = BlockTable {
        group,
        columns: shared,
        rows,
        provenance: None,
    };
    table.sort_rows();
    Ok(table)
}

/// What block post-processing changed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PostprocessLog {
    pub removed_rows: usize,
    pub repaired_medians: usize,
    pub dropped_columns: Vec<String>,
}

/// Cleans a summarized table:
/// (a) removes rows whose blocks are empty or whose raw samples are
///     all-zero in more than `tolerances.zero_block_fraction` of samples;
/// (b) replaces non-finite median values with the row's mean for the same
///     channel;
/// (c) drops columns with zero variance across the remaining rows.
///
/// Running it twice changes nothing the second time.
pub fn postprocess_blocks(
    table: &BlockTable,
    tolerances: &Tolerances,
) -> Result<(BlockTable, PostprocessLog)> {
    let mut log = PostprocessLog::default();

    let mut rows: Vec<FeatureRow> = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        if r.sample_count == 0 || r.zero_fraction > tolerances.zero_block_fraction {
            log.removed_rows += 1;
        } else {
            rows.push(r.clone());
        }
    }
    if rows.is_empty() {
        return Err(Error::NoValidBlocks);
    }

    // (b) median repair: the paired mean lives in the same channel's stat
    // group, offset by the manifest layout.
    let mean_of: Vec<Option<usize>> = table
        .columns
        .iter()
        .map(|c| {
            if c.stat == Stat::Median {
                table.column_index(&ColumnId {
                    channel: c.channel.clone(),
                    stat: Stat::Mean,
                })
            } else {
                None
            }
        })
        .collect();
    for r in &mut rows {
        for (i, slot) in mean_of.iter().enumerate() {
            if let Some(mi) = slot {
                if !r.values[i].is_finite() && r.values[*mi].is_finite() {
                    r.values[i] = r.values[*mi];
                    log.repaired_medians += 1;
                }
            }
        }
    }

    // (c) zero-variance columns, judged over the surviving rows
    let mut keep = Vec::with_capacity(table.columns.len());
    for (i, col) in table.columns.iter().enumerate() {
        let first = rows[0].values[i];
        let constant = rows.iter().all(|r| r.values[i] == first);
        if constant {
            log.dropped_columns.push(col.to_string());
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::DegenerateTable(
            "every column has zero variance".into(),
        ));
    }
    let columns: Vec<ColumnId> = keep.iter().map(|&i| table.columns[i].clone()).collect();
    for r in &mut rows {
        r.values = keep.iter().map(|&i| r.values[i]).collect();
    }

    Ok((
        BlockTable {
            group: table.group,
            columns,
            rows,
            provenance: table.provenance.clone(),
        },
        log,
    ))
}

/// Projects a table onto a target manifest (used to align evaluation rows
/// with a training table after post-processing). Columns missing from the
/// source manifest are an error.
pub fn project_table(table: &BlockTable, columns: &[ColumnId]) -> Result<BlockTable> {
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            table
                .column_index(c)
                .ok_or_else(|| Error::ManifestMismatch(format!("missing column {c}")))
        })
        .collect::<Result<_>>()?;
    let rows = table
        .rows
        .iter()
        .map(|r| FeatureRow {
            values: idx.iter().map(|&i| r.values[i]).collect(),
            ..r.clone()
        })
        .collect();
    Ok(BlockTable {
        group: table.group,
        columns: columns.to_vec(),
        rows,
        provenance: table.provenance.clone(),
    })
}

// -------- serialization --------

/// Writes the table as CSV (`user,app,session,block` labels first) with a
/// `*.columns.json` manifest sidecar.
pub fn write_table_csv(table: &BlockTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut header = vec![
        "user".to_string(),
        "app".to_string(),
        "session".to_string(),
        "block".to_string(),
    ];
    header.extend(table.columns.iter().map(|c| c.to_string()));
    w.write_record(&header).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for r in &table.rows {
        let mut rec = vec![
            r.user.0.to_string(),
            r.app.0.to_string(),
            r.session.0.to_string(),
            r.block.to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = sidecar_path(path);
    #[derive(Serialize)]
    struct Sidecar<'a> {
        group: SensorGroup,
        columns: &'a [ColumnId],
        provenance: &'a Option<String>,
    }
    let body = serde_json::to_string_pretty(&Sidecar {
        group: table.group,
        columns: &table.columns,
        provenance: &table.provenance,
    })
    .expect("sidecar serializes");
    std::fs::write(&sidecar, body).map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("columns.json")
}

/// Reads a table written by [`write_table_csv`].
pub fn read_table_csv(path: &Path, group: SensorGroup) -> Result<BlockTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    if header.len() < 4 {
        return Err(Error::SchemaMismatch {
            path: path.to_path_buf(),
            message: "block table needs 4 label columns".into(),
        });
    }
    let columns: Vec<ColumnId> = header
        .iter()
        .skip(4)
        .map(|h| {
            ColumnId::parse(h).ok_or_else(|| Error::SchemaMismatch {
                path: path.to_path_buf(),
                message: format!("bad column name '{h}'"),
            })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let parse_u32 = |i: usize| -> Result<u32> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Csv {
                    path: path.to_path_buf(),
                    message: format!("bad label in record {rec:?}"),
                })
        };
        let values: Vec<f64> = (4..rec.len())
            .map(|i| rec.get(i).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN))
            .collect();
        let count = values.len().max(1);
        rows.push(FeatureRow {
            user: UserId(parse_u32(0)?),
            app: AppId(parse_u32(1)?),
            session: SessionId(parse_u32(2)? as u8),
            block: parse_u32(3)?,
            sample_count: count, // raw sample metadata is not round-tripped
            zero_fraction: 0.0,
            values,
        });
    }
    Ok(BlockTable {
        group,
        columns,
        rows,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace_with(timestamps: Vec<i64>, channels: Vec<&str>, rows: Vec<Vec<f64>>) -> SessionTrace {
        SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Bm,
            channels: channels.into_iter().map(String::from).collect(),
            timestamps_ms: timestamps,
            values: rows,
        }
    }

    #[test]
    fn plan_worked_example() {
        let plan = make_block_plan(&[3.6, 4.1, 4.6], 1.0, AppId(1), SensorGroup::Bm).unwrap();
        assert_eq!(
            plan.mode,
            PlanMode::Fba {
                n_j: 4,
                r: 1.0,
                n_fba: 4
            }
        );
    }

    #[test]
    fn plan_single_duration() {
        let plan = make_block_plan(&[5.0], 1.0, AppId(1), SensorGroup::Bm).unwrap();
        assert_eq!(plan.n_fba(), Some(5));
    }

    #[test]
    fn plan_half_ratio_rounds_half_up() {
        // mean 4.0 -> N_j = 4; r = 0.5 -> round(2.0) = 2
        let plan = make_block_plan(&[4.2, 4.0, 3.8], 0.5, AppId(1), SensorGroup::Bm).unwrap();
        assert_eq!(plan.n_fba(), Some(2));
        // N_j = 5, r = 0.5 -> round(2.5) = 3 (half-up)
        let plan = make_block_plan(&[5.0], 0.5, AppId(1), SensorGroup::Bm).unwrap();
        assert_eq!(plan.n_fba(), Some(3));
    }

    #[test]
    fn plan_floors_at_one_block() {
        let plan = make_block_plan(&[3.0], 0.1, AppId(1), SensorGroup::Bm).unwrap();
        assert_eq!(plan.n_fba(), Some(1));
    }

    #[test]
    fn plan_empty_durations_errors() {
        assert!(matches!(
            make_block_plan(&[], 1.0, AppId(3), SensorGroup::Bm),
            Err(Error::NoSessions(_))
        ));
    }

    fn uniform_trace(duration_ms: i64, step_ms: i64) -> SessionTrace {
        let ts: Vec<i64> = (0..=duration_ms / step_ms).map(|i| i * step_ms).collect();
        let rows = ts.iter().map(|&t| vec![t as f64 / 1000.0]).collect();
        trace_with(ts, vec!["headset_pos_x"], rows)
    }

    #[test]
    fn fba_divides_into_equal_intervals() {
        let t = uniform_trace(4000, 100); // 4.0 s
        let plan = BlockPlan {
            app: AppId(1),
            group: SensorGroup::Bm,
            mode: PlanMode::Fba {
                n_j: 4,
                r: 1.0,
                n_fba: 4,
            },
        };
        let blocks = divide_blocks(&t, &plan).unwrap();
        assert_eq!(blocks.len(), 4);
        for b in &blocks {
            assert!((b.end_ms - b.start_ms - 1000.0).abs() < 1e-9);
        }
        // every sample lands in exactly one block
        let covered: usize = blocks.iter().map(|b| b.sample_count()).sum();
        assert_eq!(covered, t.len());
    }

    #[test]
    fn fba_adapts_block_length_per_user() {
        let t = uniform_trace(4600, 100); // 4.6 s
        let plan = BlockPlan {
            app: AppId(1),
            group: SensorGroup::Bm,
            mode: PlanMode::Fba {
                n_j: 4,
                r: 1.0,
                n_fba: 4,
            },
        };
        let blocks = divide_blocks(&t, &plan).unwrap();
        assert_eq!(blocks.len(), 4);
        assert!((blocks[0].end_ms - blocks[0].start_ms - 1150.0).abs() < 1e-9);
    }

    #[test]
    fn fbl_keeps_partial_tail_with_two_samples() {
        let t = uniform_trace(5000, 100); // 5.0 s
        let plan = BlockPlan::fbl(AppId(1), SensorGroup::Bm, 2.0);
        let blocks = divide_blocks(&t, &plan).unwrap();
        assert_eq!(blocks.len(), 3);
        assert!((blocks[2].start_ms - 4000.0).abs() < 1e-9);
        assert!((blocks[2].end_ms - 5000.0).abs() < 1e-9);
        assert!(blocks[2].sample_count() >= 2);
    }

    #[test]
    fn fbl_drops_sparse_partial_tail() {
        // samples at 0..=4000 step 1000, plus one stray sample at 4100
        let ts = vec![0, 1000, 2000, 3000, 4000, 4100];
        let rows = ts.iter().map(|&t| vec![t as f64]).collect();
        let t = trace_with(ts, vec!["headset_pos_x"], rows);
        let plan = BlockPlan::fbl(AppId(1), SensorGroup::Bm, 2.0);
        let blocks = divide_blocks(&t, &plan).unwrap();
        // [0,2s) [2s,4s) then partial [4s,4.1s] has 2 samples -> kept
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[2].sample_count(), 2);
    }

    #[test]
    fn undersampled_trace_errors() {
        let t = uniform_trace(300, 100); // 4 samples
        let plan = BlockPlan {
            app: AppId(1),
            group: SensorGroup::Bm,
            mode: PlanMode::Fba {
                n_j: 5,
                r: 1.0,
                n_fba: 5,
            },
        };
        assert!(matches!(
            divide_blocks(&t, &plan),
            Err(Error::Undersampled {
                samples: 4,
                blocks: 5
            })
        ));
    }

    #[test]
    fn stats_constant_channel() {
        let s = channel_stats(&[3.5, 3.5, 3.5]);
        assert_eq!(s, [3.5, 3.5, 3.5, 0.0, 3.5]);
    }

    #[test]
    fn stats_one_two_three_four() {
        let s = channel_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s[0], 4.0);
        assert_eq!(s[1], 1.0);
        assert_eq!(s[2], 2.5);
        assert!((s[3] - 1.118033988749895).abs() < 1e-12); // population std
        assert_eq!(s[4], 2.5); // even-count median
    }

    #[test]
    fn bm_block_yields_165_features() {
        let names = SensorGroup::Bm.channel_names();
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.1; 33]).collect();
        let t = SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Bm,
            channels: names,
            timestamps_ms: (0..10).map(|i| i * 14).collect(),
            values: rows,
        };
        let plan = BlockPlan {
            app: AppId(1),
            group: SensorGroup::Bm,
            mode: PlanMode::Fba {
                n_j: 1,
                r: 1.0,
                n_fba: 1,
            },
        };
        let table = summarize_trace(&t, &plan).unwrap();
        assert_eq!(table.width(), 165);
        assert_eq!(table.rows[0].values.len(), 165);
    }

    fn small_table(rows: Vec<FeatureRow>, columns: Vec<ColumnId>) -> BlockTable {
        BlockTable {
            group: SensorGroup::Bm,
            columns,
            rows,
            provenance: None,
        }
    }

    fn row(user: u32, block: u32, values: Vec<f64>) -> FeatureRow {
        FeatureRow {
            user: UserId(user),
            app: AppId(1),
            session: SessionId::TRAIN,
            block,
            sample_count: 10,
            zero_fraction: 0.0,
            values,
        }
    }

    fn cols(names: &[(&str, Stat)]) -> Vec<ColumnId> {
        names
            .iter()
            .map(|(c, s)| ColumnId {
                channel: c.to_string(),
                stat: *s,
            })
            .collect()
    }

    #[test]
    fn postprocess_removes_mostly_zero_blocks() {
        let mut bad = row(1, 0, vec![0.0, 1.0]);
        bad.zero_fraction = 1.0;
        let good1 = row(1, 1, vec![1.0, 2.0]);
        let good2 = row(2, 0, vec![2.0, 1.0]);
        let t = small_table(
            vec![bad, good1, good2],
            cols(&[("a", Stat::Mean), ("b", Stat::Mean)]),
        );
        let (out, log) = postprocess_blocks(&t, &Tolerances::default()).unwrap();
        assert_eq!(log.removed_rows, 1);
        assert_eq!(out.rows.len(), 2);
    }

    #[test]
    fn postprocess_repairs_missing_median_from_mean() {
        let columns = cols(&[("a", Stat::Mean), ("a", Stat::Median)]);
        let r1 = row(1, 0, vec![0.7, f64::NAN]);
        let r2 = row(2, 0, vec![0.3, 0.3]);
        let t = small_table(vec![r1, r2], columns);
        let (out, log) = postprocess_blocks(&t, &Tolerances::default()).unwrap();
        assert_eq!(log.repaired_medians, 1);
        let repaired = out.rows.iter().find(|r| r.user == UserId(1)).unwrap();
        let mi = out
            .column_index(&ColumnId {
                channel: "a".into(),
                stat: Stat::Median,
            })
            .unwrap();
        assert_eq!(repaired.values[mi], 0.7);
    }

    #[test]
    fn postprocess_drops_constant_columns() {
        let columns = cols(&[("a", Stat::Mean), ("b", Stat::Mean)]);
        let r1 = row(1, 0, vec![1.0, 0.4]);
        let r2 = row(2, 0, vec![1.0, 0.9]);
        let t = small_table(vec![r1, r2], columns);
        let (out, log) = postprocess_blocks(&t, &Tolerances::default()).unwrap();
        assert_eq!(log.dropped_columns, vec!["a:mean".to_string()]);
        assert_eq!(out.width(), 1);
    }

    #[test]
    fn postprocess_empty_result_errors() {
        let mut bad = row(1, 0, vec![0.0]);
        bad.zero_fraction = 1.0;
        let t = small_table(vec![bad], cols(&[("a", Stat::Mean)]));
        assert!(matches!(
            postprocess_blocks(&t, &Tolerances::default()),
            Err(Error::NoValidBlocks)
        ));
    }

    #[test]
    fn align_intersects_columns() {
        let t1 = small_table(
            vec![row(1, 0, vec![1.0, 2.0])],
            cols(&[("a", Stat::Mean), ("b", Stat::Mean)]),
        );
        let t2 = small_table(vec![row(2, 0, vec![3.0])], cols(&[("b", Stat::Mean)]));
        let out = align_tables(vec![t1, t2]).unwrap();
        assert_eq!(out.width(), 1);
        assert_eq!(out.columns[0].channel, "b");
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[0].values, vec![2.0]);
    }

    #[test]
    fn table_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blocks.csv");
        let t = small_table(
            vec![row(1, 0, vec![1.5, -2.25]), row(2, 1, vec![0.1, 1e-12])],
            cols(&[("a", Stat::Mean), ("b", Stat::Std)]),
        );
        write_table_csv(&t, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = read_table_csv(&path, SensorGroup::Bm).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[0].values, t.rows[0].values);
        assert_eq!(back.rows[1].values, t.rows[1].values);
    }

    // ---- independent sort/scan oracle for the five statistics ----

    fn oracle_stats(vals: &[f64]) -> [f64; 5] {
        let mut sorted = vals.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let max = sorted[n - 1];
        let min = sorted[0];
        let mut acc = 0.0;
        for &v in vals {
            acc += v;
        }
        let mean = acc / n as f64;
        let mut dev = 0.0;
        for &v in vals {
            dev += (v - mean) * (v - mean);
        }
        let std = (dev / n as f64).sqrt();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        [max, min, mean, std, median]
    }

    proptest! {
        #[test]
        fn summarization_matches_oracle(vals in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let got = channel_stats(&vals);
            let want = oracle_stats(&vals);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn n_fba_monotone_in_r(
            durations in proptest::collection::vec(1.0f64..300.0, 1..20),
            r1 in 0.01f64..2.0,
            r2 in 0.01f64..2.0,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let a = make_block_plan(&durations, lo, AppId(1), SensorGroup::Bm).unwrap();
            let b = make_block_plan(&durations, hi, AppId(1), SensorGroup::Bm).unwrap();
            prop_assert!(a.n_fba().unwrap() <= b.n_fba().unwrap());
        }

        #[test]
        fn fba_partitions_all_samples(
            n_samples in 30usize..300,
            n_blocks in 1u32..20,
            step in 5i64..50,
        ) {
            prop_assume!(n_samples as u32 >= n_blocks);
            let ts: Vec<i64> = (0..n_samples as i64).map(|i| i * step).collect();
            let rows = ts.iter().map(|&t| vec![t as f64]).collect();
            let t = trace_with(ts, vec!["headset_pos_x"], rows);
            let plan = BlockPlan {
                app: AppId(1),
                group: SensorGroup::Bm,
                mode: PlanMode::Fba { n_j: n_blocks, r: 1.0, n_fba: n_blocks },
            };
            let blocks = divide_blocks(&t, &plan).unwrap();
            prop_assert_eq!(blocks.len(), n_blocks as usize);
            // contiguous, non-overlapping, exhaustive
            let mut cursor = 0usize;
            for b in &blocks {
                prop_assert_eq!(b.first, cursor);
                cursor = b.last;
            }
            prop_assert_eq!(cursor, n_samples);
        }

        #[test]
        fn postprocess_is_idempotent(
            seed_vals in proptest::collection::vec(-5.0f64..5.0, 24),
        ) {
            let columns = cols(&[("a", Stat::Mean), ("a", Stat::Median), ("b", Stat::Std)]);
            let rows: Vec<FeatureRow> = seed_vals
                .chunks(3)
                .enumerate()
                .map(|(i, c)| row(1 + (i % 4) as u32, (i / 4) as u32, c.to_vec()))
                .collect();
            let t = small_table(rows, columns);
            if let Ok((once, _)) = postprocess_blocks(&t, &Tolerances::default()) {
                let (twice, log2) = postprocess_blocks(&once, &Tolerances::default()).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert_eq!(log2.removed_rows, 0);
                prop_assert_eq!(log2.repaired_medians, 0);
                prop_assert!(log2.dropped_columns.is_empty());
            }
        }
    }
}
