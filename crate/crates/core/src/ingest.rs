//! Dataset loading and pre-processing.
//!
//! A dataset on disk follows the layout
//! `<root>/user_<i>/app_<j>/session_<1|2>/{bm,eg,hj,fe}.csv`, one CSV per
//! sensor group with a `timestamp_ms` column followed by the schema's
//! channels. Pre-processing de-duplicates timestamps (keeping the first
//! occurrence), removes invalid columns, and repairs corrupt cells from
//! their neighbors by linear interpolation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{AppCatalog, AppId, SensorGroup, SessionId, SessionTrace, UserId};
use crate::error::{Error, Result};

pub type TraceKey = (UserId, AppId, SessionId, SensorGroup);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EntryStatus {
    Ok { duration_s: f64 },
    Corrupt { message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub path: PathBuf,
    pub status: EntryStatus,
}

/// Index of every trace file found under a dataset root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: BTreeMap<TraceKey, TraceEntry>,
    /// (user, app, sensor group) tuples where exactly one of the two
    /// sessions is present. Flagged, not dropped.
    pub incomplete: BTreeSet<(UserId, AppId, SensorGroup)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl DatasetIndex {
    pub fn users(&self) -> Vec<UserId> {
        self.entries
            .keys()
            .map(|k| k.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn apps(&self) -> Vec<AppId> {
        self.entries
            .keys()
            .map(|k| k.1)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Session-1 durations in seconds per user, for one (app, sensor group).
    pub fn train_durations(&self, app: AppId, group: SensorGroup) -> Vec<(UserId, f64)> {
        self.entries
            .iter()
            .filter_map(|(k, e)| {
                if k.1 == app && k.2 == SessionId::TRAIN && k.3 == group {
                    match e.status {
                        EntryStatus::Ok { duration_s } => Some((k.0, duration_s)),
                        EntryStatus::Corrupt { .. } => None,
                    }
                } else {
                    None
                }
            })
            .collect()
    }

    /// Mean and variance of session-1 durations across users, per
    /// (app, sensor group).
    pub fn duration_stats(&self) -> BTreeMap<(AppId, SensorGroup), DurationStats> {
        let mut acc: BTreeMap<(AppId, SensorGroup), Vec<f64>> = BTreeMap::new();
        for (k, e) in &self.entries {
            if k.2 != SessionId::TRAIN {
                continue;
            }
            if let EntryStatus::Ok { duration_s } = e.status {
                acc.entry((k.1, k.3)).or_default().push(duration_s);
            }
        }
        acc.into_iter()
            .map(|(key, ds)| {
                let n = ds.len() as f64;
                let mean = ds.iter().sum::<f64>() / n;
                let variance = ds.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
                (
                    key,
                    DurationStats {
                        mean,
                        variance,
                        count: ds.len(),
                    },
                )
            })
            .collect()
    }
}

fn parse_indexed(name: &str, prefix: &str) -> Option<u32> {
    name.strip_prefix(prefix)?.parse().ok()
}

/// Reads the first and last data-row timestamps of a trace CSV without
/// parsing the value columns.
fn scan_duration(path: &Path) -> std::result::Result<f64, String> {
    let file = std::fs::File::open(path).map_err(|e| e.to_string())?;
    let reader = BufReader::new(file);
    let mut first: Option<i64> = None;
    let mut last: Option<i64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if i == 0 || line.is_empty() {
            continue; // header
        }
        let ts_text = line.split(',').next().unwrap_or("");
        let ts: i64 = match ts_text.trim().parse() {
            Ok(t) => t,
            Err(_) => continue, // corrupt timestamp rows are dropped at load
        };
        if first.is_none() {
            first = Some(ts);
        }
        last = Some(ts);
    }
    match (first, last) {
        (Some(a), Some(b)) if b >= a => Ok((b - a) as f64 / 1000.0),
        (Some(_), Some(_)) => Err("timestamps not sorted".into()),
        _ => Err("no data rows".into()),
    }
}

/// Enumerates all trace files under `root`. Incomplete (user, app) session
/// pairs are flagged; unreadable files are kept with a corrupt status. An
/// empty root yields an empty index; a missing root is fatal.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::RootMissing(root.to_path_buf()));
    }
    let mut entries = BTreeMap::new();
    let read_dir = |p: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        v.sort();
        Ok(v)
    };
    for user_dir in read_dir(root)? {
        let Some(user) = user_dir
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| parse_indexed(n, "user_"))
        else {
            continue;
        };
        if !user_dir.is_dir() {
            continue;
        }
        for app_dir in read_dir(&user_dir)? {
            let Some(app) = app_dir
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| parse_indexed(n, "app_"))
            else {
                continue;
            };
            if !app_dir.is_dir() {
                continue;
            }
            for session_dir in read_dir(&app_dir)? {
                let Some(session) = session_dir
                    .file_name()
                    .and_then(|n| n.to_str())
                    .and_then(|n| parse_indexed(n, "session_"))
                else {
                    continue;
                };
                if !session_dir.is_dir() || !(1..=2).contains(&session) {
                    continue;
                }
                for group in SensorGroup::ALL {
                    let path = session_dir.join(format!("{}.csv", group.key()));
                    if !path.is_file() {
                        continue;
                    }
                    let status = match scan_duration(&path) {
                        Ok(duration_s) => EntryStatus::Ok { duration_s },
                        Err(message) => EntryStatus::Corrupt { message },
                    };
                    entries.insert(
                        (UserId(user), AppId(app), SessionId(session as u8), group),
                        TraceEntry { path, status },
                    );
                }
            }
        }
    }

    let mut incomplete = BTreeSet::new();
    let combos: BTreeSet<(UserId, AppId, SensorGroup)> =
        entries.keys().map(|k| (k.0, k.1, k.3)).collect();
    for (u, a, g) in combos {
        let s1 = entries.contains_key(&(u, a, SessionId(1), g));
        let s2 = entries.contains_key(&(u, a, SessionId(2), g));
        if s1 != s2 {
            incomplete.insert((u, a, g));
        }
    }

    Ok(DatasetIndex {
        root: root.to_path_buf(),
        entries,
        incomplete,
    })
}

/// Loads one raw trace CSV. The header must carry `timestamp_ms` followed
/// by exactly the schema's channels (any order; columns are normalized to
/// schema order). Non-numeric value cells become NaN and are repaired by
/// [`preprocess`]; rows whose timestamp does not parse are dropped.
pub fn load_session(
    path: &Path,
    user: UserId,
    app: AppId,
    session: SessionId,
    group: SensorGroup,
) -> Result<SessionTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv {
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
    if header.get(0) != Some("timestamp_ms") {
        return Err(Error::SchemaMismatch {
            path: path.to_path_buf(),
            message: "first column must be timestamp_ms".into(),
        });
    }
    let schema = group.channel_names();
    if header.len() != schema.len() + 1 {
        return Err(Error::SchemaMismatch {
            path: path.to_path_buf(),
            message: format!(
                "{} channels in file, schema defines {}",
                header.len() - 1,
                schema.len()
            ),
        });
    }
    // normalize column order to schema order
    let mut order = Vec::with_capacity(schema.len());
    for name in &schema {
        let pos = header
            .iter()
            .skip(1)
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch {
                path: path.to_path_buf(),
                message: format!("missing channel '{name}'"),
            })?;
        order.push(pos + 1);
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let Some(ts) = rec.get(0).and_then(|s| s.trim().parse::<i64>().ok()) else {
            continue;
        };
        let row: Vec<f64> = order
            .iter()
            .map(|&i| {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .unwrap_or(f64::NAN)
            })
            .collect();
        timestamps.push(ts);
        values.push(row);
    }
    Ok(SessionTrace {
        user,
        app,
        session,
        group,
        channels: schema,
        timestamps_ms: timestamps,
        values,
    })
}

/// What [`preprocess`] changed on one trace.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PreprocessLog {
    pub duplicates_removed: usize,
    /// Channel names removed, with the reason (`all-zero` or `all-invalid`).
    pub dropped_channels: Vec<(String, String)>,
    pub repaired_cells: usize,
}

/// Cleans a raw trace:
/// - rows are sorted by timestamp and duplicate timestamps collapsed,
///   keeping the first occurrence;
/// - channels with no finite values are removed (nothing to repair from);
/// - remaining NaN cells are repaired by linear interpolation between the
///   nearest valid neighbors in time (nearest-value copy at boundaries);
/// - channels that are zero everywhere are removed and logged.
///
/// Output timestamps are strictly increasing. The function is idempotent.
pub fn preprocess(trace: &SessionTrace) -> Result<(SessionTrace, PreprocessLog)> {
    let mut log = PreprocessLog::default();

    let mut order: Vec<usize> = (0..trace.len()).collect();
    order.sort_by_key(|&i| trace.timestamps_ms[i]);

    let mut timestamps: Vec<i64> = Vec::with_capacity(order.len());
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    for &i in &order {
        let ts = trace.timestamps_ms[i];
        if timestamps.last() == Some(&ts) {
            log.duplicates_removed += 1;
            continue;
        }
        timestamps.push(ts);
        rows.push(trace.values[i].clone());
    }
    if timestamps.len() < 2 {
        return Err(Error::TraceTooShort(timestamps.len()));
    }

    let n = timestamps.len();
    let mut keep: Vec<bool> = vec![true; trace.channels.len()];
    for (c, name) in trace.channels.iter().enumerate() {
        if !rows.iter().any(|r| r[c].is_finite()) {
            keep[c] = false;
            log.dropped_channels
                .push((name.clone(), "all-invalid".into()));
        }
    }

    // repair NaN cells channel by channel
    for c in 0..trace.channels.len() {
        if !keep[c] {
            continue;
        }
        let mut i = 0;
        while i < n {
            if rows[i][c].is_finite() {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < n && !rows[i][c].is_finite() {
                i += 1;
            }
            let left = run_start
                .checked_sub(1)
                .map(|j| (timestamps[j], rows[j][c]));
            let right = if i < n {
                Some((timestamps[i], rows[i][c]))
            } else {
                None
            };
            for j in run_start..i {
                let v = match (left, right) {
                    (Some((ta, a)), Some((tb, b))) => {
                        let f = (timestamps[j] - ta) as f64 / (tb - ta) as f64;
                        a + (b - a) * f
                    }
                    (Some((_, a)), None) => a,
                    (None, Some((_, b))) => b,
                    (None, None) => unreachable!("all-invalid channels were dropped"),
                };
                rows[j][c] = v;
                log.repaired_cells += 1;
            }
        }
    }

    // all-zero channels carry nothing; checked after repair so the result
    // is stable under a second pass
    for (c, name) in trace.channels.iter().enumerate() {
        if keep[c] && rows.iter().all(|r| r[c] == 0.0) {
            keep[c] = false;
            log.dropped_channels.push((name.clone(), "all-zero".into()));
        }
    }

    let kept_idx: Vec<usize> = (0..trace.channels.len()).filter(|&c| keep[c]).collect();
    let channels: Vec<String> = kept_idx
        .iter()
        .map(|&c| trace.channels[c].clone())
        .collect();
    let values: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| kept_idx.iter().map(|&c| r[c]).collect())
        .collect();

    Ok((
        SessionTrace {
            user: trace.user,
            app: trace.app,
            session: trace.session,
            group: trace.group,
            channels,
            timestamps_ms: timestamps,
            values,
        },
        log,
    ))
}

/// Uniform access to traces, whether loaded from disk or generated.
pub trait TraceProvider: Sync {
    fn users(&self) -> Vec<UserId>;
    fn apps(&self) -> Vec<AppId>;
    fn catalog(&self) -> &AppCatalog;
    /// Raw (unpreprocessed) trace for one key.
    fn raw_trace(
        &self,
        user: UserId,
        app: AppId,
        session: SessionId,
        group: SensorGroup,
    ) -> Result<SessionTrace>;
    /// Session-1 durations (seconds) per user for (app, group).
    fn train_durations(&self, app: AppId, group: SensorGroup) -> Result<Vec<(UserId, f64)>>;
    /// Stable fingerprint of the underlying data, for run manifests.
    fn fingerprint(&self) -> String;
}

/// Trace provider over an on-disk dataset.
pub struct DiskProvider {
    pub index: DatasetIndex,
    pub catalog: AppCatalog,
}

impl DiskProvider {
    pub fn new(index: DatasetIndex, catalog: AppCatalog) -> Self {
        DiskProvider { index, catalog }
    }
}

impl TraceProvider for DiskProvider {
    fn users(&self) -> Vec<UserId> {
        self.index.users()
    }

    fn apps(&self) -> Vec<AppId> {
        self.index.apps()
    }

    fn catalog(&self) -> &AppCatalog {
        &self.catalog
    }

    fn raw_trace(
        &self,
        user: UserId,
        app: AppId,
        session: SessionId,
        group: SensorGroup,
    ) -> Result<SessionTrace> {
        let entry = self
            .index
            .entries
            .get(&(user, app, session, group))
            .ok_or_else(|| {
                Error::Other(format!("no trace for ({user}, {app}, {session}, {group})"))
            })?;
        load_session(&entry.path, user, app, session, group)
    }

    fn train_durations(&self, app: AppId, group: SensorGroup) -> Result<Vec<(UserId, f64)>> {
        let d = self.index.train_durations(app, group);
        if d.is_empty() {
            return Err(Error::NoSessions(app.to_string()));
        }
        Ok(d)
    }

    fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for (k, e) in &self.index.entries {
            h.update(format!("{:?}|{}|", k, e.path.display()).as_bytes());
            if let EntryStatus::Ok { duration_s } = e.status {
                h.update(duration_s.to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..16])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn bm_header() -> String {
        let mut h = vec!["timestamp_ms".to_string()];
        h.extend(SensorGroup::Bm.channel_names());
        h.join(",")
    }

    fn write_bm_csv(path: &Path, rows: &[(i64, Vec<f64>)]) {
        let mut f = std::fs::File::create(path).unwrap();
        writeln!(f, "{}", bm_header()).unwrap();
        for (ts, vals) in rows {
            let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{},{}", ts, cells.join(",")).unwrap();
        }
    }

    fn mini_trace(timestamps: Vec<i64>, chan_values: Vec<Vec<f64>>) -> SessionTrace {
        // chan_values is channel-major for test readability
        let n = timestamps.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| chan_values.iter().map(|c| c[i]).collect())
            .collect();
        SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Bm,
            channels: (0..chan_values.len()).map(|c| format!("ch{c}")).collect(),
            timestamps_ms: timestamps,
            values: rows,
        }
    }

    #[test]
    fn scan_full_layout_counts_entries() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<(i64, Vec<f64>)> = (0..3).map(|i| (i * 10, vec![1.0; 33])).collect();
        for u in 1..=2 {
            for a in 1..=2 {
                for s in 1..=2 {
                    let d = dir
                        .path()
                        .join(format!("user_{u}"))
                        .join(format!("app_{a}"))
                        .join(format!("session_{s}"));
                    std::fs::create_dir_all(&d).unwrap();
                    write_bm_csv(&d.join("bm.csv"), &rows);
                }
            }
        }
        let idx = scan_dataset(dir.path()).unwrap();
        assert_eq!(idx.entries.len(), 2 * 2 * 2); // bm only
        assert!(idx.incomplete.is_empty());
        let stats = idx.duration_stats();
        let s = stats[&(AppId(1), SensorGroup::Bm)];
        assert_eq!(s.count, 2);
        assert!((s.mean - 0.02).abs() < 1e-12);
    }

    #[test]
    fn scan_flags_missing_session_as_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<(i64, Vec<f64>)> = (0..3).map(|i| (i * 10, vec![1.0; 33])).collect();
        let d1 = dir.path().join("user_3/app_7/session_1");
        std::fs::create_dir_all(&d1).unwrap();
        write_bm_csv(&d1.join("bm.csv"), &rows);
        let idx = scan_dataset(dir.path()).unwrap();
        assert!(idx
            .incomplete
            .contains(&(UserId(3), AppId(7), SensorGroup::Bm)));
        assert_eq!(idx.entries.len(), 1);
    }

    #[test]
    fn scan_empty_root_is_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        let idx = scan_dataset(dir.path()).unwrap();
        assert!(idx.entries.is_empty());
    }

    #[test]
    fn scan_missing_root_is_fatal() {
        assert!(matches!(
            scan_dataset(Path::new("/nonexistent/vrident-root")),
            Err(Error::RootMissing(_))
        ));
    }

    #[test]
    fn load_parses_five_row_bm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bm.csv");
        let rows: Vec<(i64, Vec<f64>)> = (0..5).map(|i| (i * 10, vec![0.5; 33])).collect();
        write_bm_csv(&path, &rows);
        let t = load_session(&path, UserId(1), AppId(1), SessionId(1), SensorGroup::Bm).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.channels.len(), 33);
    }

    #[test]
    fn load_rejects_wrong_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bm.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        let names = SensorGroup::Bm.channel_names();
        writeln!(f, "timestamp_ms,{}", names[..32].join(",")).unwrap();
        writeln!(f, "0,{}", vec!["1.0"; 32].join(",")).unwrap();
        drop(f);
        assert!(matches!(
            load_session(&path, UserId(1), AppId(1), SessionId(1), SensorGroup::Bm),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn load_flags_text_cell_as_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bm.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{}", bm_header()).unwrap();
        let mut cells = vec!["1.0".to_string(); 33];
        writeln!(f, "0,{}", cells.join(",")).unwrap();
        cells[4] = "ERR".to_string();
        writeln!(f, "10,{}", cells.join(",")).unwrap();
        drop(f);
        let t = load_session(&path, UserId(1), AppId(1), SessionId(1), SensorGroup::Bm).unwrap();
        assert!(t.values[1][4].is_nan());
        assert!(t.values[0][4].is_finite());
    }

    #[test]
    fn preprocess_keeps_first_duplicate() {
        let t = mini_trace(vec![10, 10, 20], vec![vec![1.0, 9.0, 3.0]]);
        let (out, log) = preprocess(&t).unwrap();
        assert_eq!(out.timestamps_ms, vec![10, 20]);
        assert_eq!(out.values[0][0], 1.0); // first occurrence kept
        assert_eq!(log.duplicates_removed, 1);
    }

    #[test]
    fn preprocess_interpolates_corrupt_cell() {
        let t = mini_trace(vec![10, 20, 30], vec![vec![1.0, f64::NAN, 3.0]]);
        let (out, log) = preprocess(&t).unwrap();
        assert_eq!(out.values[1][0], 2.0);
        assert_eq!(log.repaired_cells, 1);
    }

    #[test]
    fn preprocess_copies_nearest_at_boundary() {
        let t = mini_trace(vec![10, 20, 30], vec![vec![f64::NAN, 2.0, f64::NAN]]);
        let (out, _) = preprocess(&t).unwrap();
        assert_eq!(out.values[0][0], 2.0);
        assert_eq!(out.values[2][0], 2.0);
    }

    #[test]
    fn preprocess_drops_all_zero_channel() {
        let t = mini_trace(
            vec![10, 20, 30],
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]],
        );
        let (out, log) = preprocess(&t).unwrap();
        assert_eq!(out.channels, vec!["ch1".to_string()]);
        assert_eq!(
            log.dropped_channels,
            vec![("ch0".into(), "all-zero".into())]
        );
    }

    #[test]
    fn preprocess_drops_unrepairable_channel() {
        let t = mini_trace(vec![10, 20], vec![vec![f64::NAN, f64::NAN], vec![1.0, 2.0]]);
        let (out, log) = preprocess(&t).unwrap();
        assert_eq!(out.channels, vec!["ch1".to_string()]);
        assert!(log
            .dropped_channels
            .iter()
            .any(|(c, r)| c == "ch0" && r == "all-invalid"));
    }

    #[test]
    fn preprocess_short_trace_is_fatal() {
        let t = mini_trace(vec![10, 10], vec![vec![1.0, 2.0]]);
        assert!(matches!(preprocess(&t), Err(Error::TraceTooShort(1))));
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(
            raw in proptest::collection::vec((0i64..500, -10.0f64..10.0, -10.0f64..10.0), 2..60)
        ) {
            let ts: Vec<i64> = raw.iter().map(|r| r.0).collect();
            let c0: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let c1: Vec<f64> = raw.iter().map(|r| r.2).collect();
            let t = mini_trace(ts, vec![c0, c1]);
            if let Ok((once, _)) = preprocess(&t) {
                let (twice, log2) = preprocess(&once).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert_eq!(log2.duplicates_removed, 0);
                prop_assert_eq!(log2.repaired_cells, 0);
                prop_assert!(log2.dropped_channels.is_empty());
                // counts never increase
                prop_assert!(once.len() <= t.len());
                prop_assert!(once.channels.len() <= t.channels.len());
                // strictly increasing timestamps
                prop_assert!(once.timestamps_ms.windows(2).all(|w| w[1] > w[0]));
            }
        }

        #[test]
        fn repaired_values_between_neighbors(gap in 1usize..5, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let n = gap + 2;
            let ts: Vec<i64> = (0..n as i64).map(|i| i * 10).collect();
            let mut col = vec![f64::NAN; n];
            col[0] = a;
            col[n - 1] = b;
            let t = mini_trace(ts, vec![col]);
            let (out, _) = preprocess(&t).unwrap();
            let lo = a.min(b);
            let hi = a.max(b);
            for i in 1..n - 1 {
                prop_assert!(out.values[i][0] >= lo - 1e-12 && out.values[i][0] <= hi + 1e-12);
            }
        }
    }
}
