//! Per-sensor-group feature engineering.
//!
//! Eye gaze gains derived left-right distance channels (the pos-y one is
//! the inter-pupillary distance), hand joints keep the top-k columns by
//! preliminary importance, and facial expression can be narrowed to the
//! element sets of one emotion or of all emotions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blocking::{BlockTable, ColumnId};
use crate::domain::{ElementMap, SensorGroup, SessionId, SessionTrace};
use crate::error::{Error, Result};

/// How a selection was derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMethod {
    All,
    EgAugmented,
    HjTopK { k: usize },
    FeAll,
    FeEmotion { name: String },
    FeAllEmotions,
}

/// Record of what the selection was fitted on, for leakage checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FittedOn {
    /// Hash over the stable keys of the rows used for fitting.
    pub row_digest: String,
    /// Sessions those rows came from; evaluation data must not appear here.
    pub sessions: Vec<u8>,
    pub rows: usize,
}

impl FittedOn {
    pub fn from_table(table: &BlockTable) -> FittedOn {
        let mut keys: Vec<_> = table.rows.iter().map(|r| r.key()).collect();
        keys.sort();
        let mut h = Sha256::new();
        for k in &keys {
            h.update(format!("{}|{}|{}|{}", k.0 .0, k.1 .0, k.2 .0, k.3).as_bytes());
        }
        let mut sessions: Vec<u8> = table.rows.iter().map(|r| r.session.0).collect();
        sessions.sort_unstable();
        sessions.dedup();
        FittedOn {
            row_digest: hex::encode(&h.finalize()[..16]),
            sessions,
            rows: table.rows.len(),
        }
    }

    /// True when no evaluation-session rows took part in the fit.
    pub fn train_only(&self) -> bool {
        !self.sessions.contains(&SessionId::EVAL.0)
    }
}

/// An ordered set of kept columns, remembered verbatim so evaluation data
/// is projected exactly as training data was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub group: SensorGroup,
    pub columns: Vec<ColumnId>,
    pub method: SelectionMethod,
    pub fitted_on: FittedOn,
}

/// Appends one derived channel per paired eye axis: the absolute
/// left-right difference at every sample. The derived `eye_lr_pos_y`
/// channel is the inter-pupillary distance. Operates on raw samples so the
/// five statistics later summarize the per-sample distances.
pub fn augment_eye_gaze(trace: &SessionTrace) -> Result<SessionTrace> {
    if trace.group != SensorGroup::Eg {
        return Err(Error::InvalidParam(format!(
            "eye-gaze augmentation on {} trace",
            trace.group
        )));
    }
    let axes = [
        "pos_x", "pos_y", "pos_z", "quat_x", "quat_y", "quat_z", "quat_w",
    ];
    let mut out = trace.clone();
    for axis in axes {
        let left = trace.channel_index(&format!("eye_l_{axis}"));
        let right = trace.channel_index(&format!("eye_r_{axis}"));
        let (Some(li), Some(ri)) = (left, right) else {
            continue; // a side was dropped in preprocessing; skip the pair
        };
        out.channels.push(format!("eye_lr_{axis}"));
        for (row, src) in out.values.iter_mut().zip(&trace.values) {
            row.push((src[li] - src[ri]).abs());
        }
    }
    Ok(out)
}

/// Keeps the `k` columns with the highest importance; ties break toward
/// the earlier manifest position. Importances come from a preliminary
/// classifier fitted on training rows only.
pub fn select_hand_features(
    train: &BlockTable,
    importances: &[f64],
    k: usize,
) -> Result<FeatureSelection> {
    if k == 0 {
        return Err(Error::InvalidParam(
            "hand-joint top-k must be positive".into(),
        ));
    }
    if importances.len() != train.width() {
        return Err(Error::ManifestMismatch(format!(
            "{} importances for {} columns",
            importances.len(),
            train.width()
        )));
    }
    if k > train.width() {
        return Err(Error::InvalidParam(format!(
            "top-k {} exceeds column count {}",
            k,
            train.width()
        )));
    }
    let mut order: Vec<usize> = (0..train.width()).collect();
    // stable sort keeps manifest order among equal importances
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]));
    let mut kept: Vec<usize> = order.into_iter().take(k).collect();
    kept.sort_unstable(); // selection preserves manifest order
    Ok(FeatureSelection {
        group: train.group,
        columns: kept.iter().map(|&i| train.columns[i].clone()).collect(),
        method: SelectionMethod::HjTopK { k },
        fitted_on: FittedOn::from_table(train),
    })
}

/// Facial-expression subset to select.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmotionChoice {
    All,
    AllEmotions,
    Emotion(String),
}

/// Keeps the columns whose FE element belongs to the chosen emotion's
/// element set (`AllEmotions` takes the union over the six emotions,
/// `All` keeps every column).
pub fn select_emotion_features(
    table: &BlockTable,
    choice: &EmotionChoice,
    map: &ElementMap,
) -> Result<FeatureSelection> {
    if table.group != SensorGroup::Fe {
        return Err(Error::InvalidParam(format!(
            "emotion selection on {} table",
            table.group
        )));
    }
    let (elements, method): (Option<BTreeSet<u8>>, SelectionMethod) = match choice {
        EmotionChoice::All => (None, SelectionMethod::FeAll),
        EmotionChoice::AllEmotions => (
            Some(map.all_emotion_elements().into_iter().collect()),
            SelectionMethod::FeAllEmotions,
        ),
        EmotionChoice::Emotion(name) => (
            Some(map.emotion_elements(name)?.into_iter().collect()),
            SelectionMethod::FeEmotion { name: name.clone() },
        ),
    };
    if let Some(set) = &elements {
        if set.is_empty() {
            return Err(Error::EmptyEmotion(format!("{choice:?}")));
        }
    }
    let columns: Vec<ColumnId> = table
        .columns
        .iter()
        .filter(|c| match &elements {
            None => true,
            Some(set) => fe_element_of(&c.channel)
                .map(|e| set.contains(&e))
                .unwrap_or(false),
        })
        .cloned()
        .collect();
    if columns.is_empty() {
        return Err(Error::EmptyEmotion(format!(
            "no columns left for {choice:?}"
        )));
    }
    Ok(FeatureSelection {
        group: SensorGroup::Fe,
        columns,
        method,
        fitted_on: FittedOn::from_table(table),
    })
}

/// Element index behind an FE channel name (`fe_e07` -> 7).
pub fn fe_element_of(channel: &str) -> Option<u8> {
    channel.strip_prefix("fe_e")?.parse().ok()
}

/// Identity selection over a table's full manifest.
pub fn select_all(table: &BlockTable) -> FeatureSelection {
    FeatureSelection {
        group: table.group,
        columns: table.columns.clone(),
        method: SelectionMethod::All,
        fitted_on: FittedOn::from_table(table),
    }
}

/// Projects a table onto a selection. Selection columns missing from the
/// table (pruned upstream) are dropped from the projection with a warning
/// returned to the caller.
pub fn apply_selection(
    table: &BlockTable,
    sel: &FeatureSelection,
) -> Result<(BlockTable, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut idx = Vec::with_capacity(sel.columns.len());
    let mut columns = Vec::with_capacity(sel.columns.len());
    for c in &sel.columns {
        match table.column_index(c) {
            Some(i) => {
                idx.push(i);
                columns.push(c.clone());
            }
            None => warnings.push(format!("selection column {c} pruned upstream")),
        }
    }
    if columns.is_empty() {
        return Err(Error::ManifestMismatch(
            "selection has no columns in common with table".into(),
        ));
    }
    let rows = table
        .rows
        .iter()
        .map(|r| crate::blocking::FeatureRow {
            values: idx.iter().map(|&i| r.values[i]).collect(),
            ..r.clone()
        })
        .collect();
    Ok((
        BlockTable {
            group: table.group,
            columns,
            rows,
            provenance: table.provenance.clone(),
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::{manifest_for, FeatureRow, Stat};
    use crate::domain::{AppId, UserId};
    use proptest::prelude::*;

    fn eg_trace(left_y: Vec<f64>, right_y: Vec<f64>) -> SessionTrace {
        let channels = SensorGroup::Eg.channel_names();
        let n = left_y.len();
        let ly = channels.iter().position(|c| c == "eye_l_pos_y").unwrap();
        let ry = channels.iter().position(|c| c == "eye_r_pos_y").unwrap();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![0.1; channels.len()];
                row[ly] = left_y[i];
                row[ry] = right_y[i];
                row
            })
            .collect();
        SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Eg,
            channels,
            timestamps_ms: (0..n as i64).map(|i| i * 14).collect(),
            values,
        }
    }

    #[test]
    fn augmentation_appends_seven_channels() {
        let t = eg_trace(vec![0.1; 4], vec![0.1; 4]);
        let out = augment_eye_gaze(&t).unwrap();
        assert_eq!(out.channels.len(), 21);
        assert!(out.channel_index("eye_lr_pos_y").is_some());
        // equal eyes -> derived channels identically zero
        let lr = out.channel_index("eye_lr_pos_x").unwrap();
        assert!(out.values.iter().all(|r| r[lr] == 0.0));
    }

    #[test]
    fn ipd_channel_is_absolute_difference() {
        let t = eg_trace(vec![0.03], vec![-0.03]);
        // single-sample trace is fine for augmentation itself
        let out = augment_eye_gaze(&t).unwrap();
        let lr = out.channel_index("eye_lr_pos_y").unwrap();
        assert!((out.values[0][lr] - 0.06).abs() < 1e-15);
    }

    #[test]
    fn augmentation_rejects_other_groups() {
        let t = SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Bm,
            channels: SensorGroup::Bm.channel_names(),
            timestamps_ms: vec![0],
            values: vec![vec![0.0; 33]],
        };
        assert!(augment_eye_gaze(&t).is_err());
    }

    fn table_with_width(group: SensorGroup, columns: Vec<ColumnId>, rows: usize) -> BlockTable {
        let width = columns.len();
        BlockTable {
            group,
            columns,
            rows: (0..rows)
                .map(|i| FeatureRow {
                    user: UserId(1 + i as u32),
                    app: AppId(1),
                    session: SessionId::TRAIN,
                    block: 0,
                    sample_count: 5,
                    zero_fraction: 0.0,
                    values: vec![i as f64; width],
                })
                .collect(),
            provenance: None,
        }
    }

    #[test]
    fn hj_top_k_keeps_k_columns() {
        let cols = manifest_for(&SensorGroup::Hj.channel_names());
        assert_eq!(cols.len(), 1820);
        let table = table_with_width(SensorGroup::Hj, cols, 3);
        let importances: Vec<f64> = (0..1820).map(|i| i as f64).collect();
        let sel = select_hand_features(&table, &importances, 500).unwrap();
        assert_eq!(sel.columns.len(), 500);
        // highest importances sit at the tail of the manifest
        assert_eq!(sel.columns[0], table.columns[1320]);
    }

    #[test]
    fn hj_top_k_identity_when_k_equals_width() {
        let cols = manifest_for(&["a".to_string(), "b".to_string()]);
        let table = table_with_width(SensorGroup::Hj, cols.clone(), 2);
        let sel = select_hand_features(&table, &vec![0.5; 10], 10).unwrap();
        assert_eq!(sel.columns, cols);
    }

    #[test]
    fn hj_ties_break_by_manifest_order() {
        let cols = manifest_for(&["a".to_string(), "b".to_string()]);
        let table = table_with_width(SensorGroup::Hj, cols, 2);
        let sel = select_hand_features(&table, &vec![1.0; 10], 3).unwrap();
        // first three manifest columns win the all-tied contest
        assert_eq!(sel.columns[0].channel, "a");
        assert_eq!(sel.columns[0].stat, Stat::Max);
        assert_eq!(sel.columns[2].stat, Stat::Mean);
    }

    #[test]
    fn hj_rejects_k_zero() {
        let cols = manifest_for(&["a".to_string()]);
        let table = table_with_width(SensorGroup::Hj, cols, 2);
        assert!(select_hand_features(&table, &vec![0.0; 5], 0).is_err());
    }

    #[test]
    fn emotion_subsets_have_expected_widths() {
        let map = ElementMap::default_map();
        let cols = manifest_for(&SensorGroup::Fe.channel_names());
        let table = table_with_width(SensorGroup::Fe, cols, 2);
        let happiness =
            select_emotion_features(&table, &EmotionChoice::Emotion("happiness".into()), &map)
                .unwrap();
        assert_eq!(happiness.columns.len(), 20);
        let all_em = select_emotion_features(&table, &EmotionChoice::AllEmotions, &map).unwrap();
        assert_eq!(all_em.columns.len(), 125);
        let all = select_emotion_features(&table, &EmotionChoice::All, &map).unwrap();
        assert_eq!(all.columns.len(), 315);
    }

    #[test]
    fn unknown_emotion_errors() {
        let map = ElementMap::default_map();
        let cols = manifest_for(&SensorGroup::Fe.channel_names());
        let table = table_with_width(SensorGroup::Fe, cols, 2);
        assert!(
            select_emotion_features(&table, &EmotionChoice::Emotion("zeal".into()), &map).is_err()
        );
    }

    #[test]
    fn apply_selection_projects_and_warns_on_pruned() {
        let cols = manifest_for(&["a".to_string(), "b".to_string()]);
        let table = table_with_width(SensorGroup::Fe, cols.clone(), 2);
        let sel = FeatureSelection {
            group: SensorGroup::Fe,
            columns: vec![
                cols[0].clone(),
                ColumnId {
                    channel: "gone".into(),
                    stat: Stat::Mean,
                },
            ],
            method: SelectionMethod::All,
            fitted_on: FittedOn::from_table(&table),
        };
        let (out, warnings) = apply_selection(&table, &sel).unwrap();
        assert_eq!(out.width(), 1);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn fitted_on_flags_eval_rows() {
        let cols = manifest_for(&["a".to_string()]);
        let mut table = table_with_width(SensorGroup::Fe, cols, 2);
        assert!(FittedOn::from_table(&table).train_only());
        table.rows[1].session = SessionId::EVAL;
        assert!(!FittedOn::from_table(&table).train_only());
    }

    proptest! {
        #[test]
        fn augmented_channels_nonnegative_and_symmetric(
            ly in proptest::collection::vec(-1.0f64..1.0, 3..30),
            ry in proptest::collection::vec(-1.0f64..1.0, 3..30),
        ) {
            let n = ly.len().min(ry.len());
            let t = eg_trace(ly[..n].to_vec(), ry[..n].to_vec());
            let swapped = eg_trace(ry[..n].to_vec(), ly[..n].to_vec());
            let a = augment_eye_gaze(&t).unwrap();
            let b = augment_eye_gaze(&swapped).unwrap();
            let lr = a.channel_index("eye_lr_pos_y").unwrap();
            for i in 0..n {
                prop_assert!(a.values[i][lr] >= 0.0);
                prop_assert_eq!(a.values[i][lr], b.values[i][lr]);
            }
        }

        #[test]
        fn top_k_is_prefix_of_top_k_plus_one(k in 1usize..9) {
            let cols = manifest_for(&["a".to_string(), "b".to_string()]);
            let table = table_with_width(SensorGroup::Hj, cols, 2);
            let imps = vec![0.3, 0.1, 0.7, 0.2, 0.9, 0.05, 0.4, 0.6, 0.8, 0.15];
            let small = select_hand_features(&table, &imps, k).unwrap();
            let big = select_hand_features(&table, &imps, k + 1).unwrap();
            for c in &small.columns {
                prop_assert!(big.columns.contains(c));
            }
        }
    }
}
