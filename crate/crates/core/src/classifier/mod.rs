//! Seed-deterministic multi-class identification.
//!
//! Training samples hyperparameter configurations uniformly from the grid,
//! scores each by stratified k-fold cross-validation on the training split,
//! refits the best configuration, and records the whole tuning trail.
//! Identical inputs and seed give bit-identical models at any worker count:
//! every random stream derives from the seed plus stable keys (user ids,
//! tree and fold indices), never from input order or scheduling.

mod forest;
mod tree;

pub use forest::{ForestParams, RandomForest};

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blocking::{BlockTable, ColumnId};
use crate::config::RfGrid;
use crate::domain::UserId;
use crate::error::{Error, Result};
use crate::features::FittedOn;
use crate::seeding::derive_u64;

/// Row-split parameters: train fraction for the train/validation split and
/// the fold count for cross-validation, both stratified by user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub folds: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriedConfig {
    pub n_estimators: u32,
    pub max_depth: u32,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub tried: Vec<TriedConfig>,
    /// Index into `tried` of the refitted configuration.
    pub chosen: usize,
    /// Accuracy on the held-out validation split (diagnostic only).
    pub val_accuracy: f64,
    pub train_rows: usize,
    pub val_rows: usize,
}

/// A fitted identifier plus everything needed to apply and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub classes: Vec<UserId>,
    pub columns: Vec<ColumnId>,
    pub forest: RandomForest,
    /// Information-gain importances, one per column, summing to 1.
    pub importances: Vec<f64>,
    pub tuning: TuningRecord,
    pub seed: u64,
    pub fitted_on: FittedOn,
}

/// Row order that does not depend on the table's incoming order.
fn canonical_order(table: &BlockTable) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.rows.len()).collect();
    order.sort_by_key(|&i| table.rows[i].key());
    order
}

/// Stratified train/validation split. Returns `(train, val)` indices into
/// `table.rows`. Membership depends only on row keys and the seed, never on
/// row order.
pub fn split_train_val(table: &BlockTable, spec: &SplitSpec) -> (Vec<usize>, Vec<usize>) {
    let order = canonical_order(table);
    let mut per_class: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        per_class.entry(table.rows[i].user).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (user, mut idx) in per_class {
        let mut rng = crate::seeding::derive_rng(spec.seed, "split", &[user.0 as u64]);
        shuffle(&mut idx, &mut rng);
        let k = idx.len();
        let want = (k as f64 * spec.train_fraction).round() as usize;
        let n_train = want.clamp(1, k.saturating_sub(1).max(1));
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn shuffle<T>(v: &mut [T], rng: &mut rand_chacha::ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// Stratified fold labels for the given rows (indices into `table.rows`).
fn fold_assignment(
    table: &BlockTable,
    rows: &[usize],
    folds: u32,
    seed: u64,
) -> BTreeMap<usize, u32> {
    let mut per_class: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    let mut sorted: Vec<usize> = rows.to_vec();
    sorted.sort_by_key(|&i| table.rows[i].key());
    for &i in &sorted {
        per_class.entry(table.rows[i].user).or_default().push(i);
    }
    let mut assignment = BTreeMap::new();
    for (user, mut idx) in per_class {
        let mut rng = crate::seeding::derive_rng(seed, "fold", &[user.0 as u64]);
        shuffle(&mut idx, &mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment.insert(i, pos as u32 % folds);
        }
    }
    assignment
}

struct Dataset {
    cols: Vec<Vec<f64>>,
    labels: Vec<u32>,
    /// Position of each `table.rows` index in the matrix.
    matrix_row: BTreeMap<usize, u32>,
}

fn build_dataset(table: &BlockTable, classes: &[UserId]) -> Dataset {
    let order = canonical_order(table);
    let class_of: BTreeMap<UserId, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i as u32))
        .collect();
    let mut cols = vec![Vec::with_capacity(order.len()); table.width()];
    let mut labels = Vec::with_capacity(order.len());
    let mut matrix_row = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        let r = &table.rows[i];
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(r.values[c]);
        }
        labels.push(class_of[&r.user]);
        matrix_row.insert(i, pos as u32);
    }
    Dataset {
        cols,
        labels,
        matrix_row,
    }
}

/// Trains the identifier on a block table.
///
/// Preconditions: at least two classes, and every class has at least
/// `spec.folds` rows. The table should be post-processed (no NaN cells,
/// no all-constant manifest).
pub fn train(table: &BlockTable, spec: &SplitSpec, grid: &RfGrid) -> Result<TrainedModel> {
    let mut classes: Vec<UserId> = table.rows.iter().map(|r| r.user).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateTable(format!(
            "{} class(es) present, need at least 2",
            classes.len()
        )));
    }
    for &u in &classes {
        let rows = table.rows.iter().filter(|r| r.user == u).count();
        if rows < spec.folds as usize {
            return Err(Error::ClassTooSmall {
                user: u.0,
                rows,
                need: spec.folds as usize,
            });
        }
    }
    if table.width() == 0 {
        return Err(Error::DegenerateTable("no feature columns".into()));
    }
    let any_varying = (0..table.width()).any(|c| {
        let first = table.rows[0].values[c];
        table.rows.iter().any(|r| r.values[c] != first)
    });
    if !any_varying {
        return Err(Error::DegenerateTable(
            "every feature column is constant".into(),
        ));
    }

    let data = build_dataset(table, &classes);
    let (train_idx, val_idx) = split_train_val(table, spec);
    // matrix positions in canonical order, so nothing depends on how the
    // caller ordered the rows
    let to_matrix = |idx: &[usize]| -> Vec<u32> {
        let mut v: Vec<u32> = idx.iter().map(|i| data.matrix_row[i]).collect();
        v.sort_unstable();
        v
    };
    let train_rows = to_matrix(&train_idx);

    // sample configurations uniformly from the grid
    let mut grid_rng = crate::seeding::derive_rng(spec.seed, "grid", &[]);
    let configs: Vec<ForestParams> = (0..grid.iterations)
        .map(|_| ForestParams {
            n_estimators: grid_rng.gen_range(grid.n_estimators.0..=grid.n_estimators.1),
            max_depth: grid_rng.gen_range(grid.max_depth.0..=grid.max_depth.1),
        })
        .collect();

    let folds = fold_assignment(table, &train_idx, spec.folds, spec.seed);
    let mut tried = Vec::with_capacity(configs.len());
    for (ci, params) in configs.iter().enumerate() {
        let mut fold_acc = Vec::with_capacity(spec.folds as usize);
        for f in 0..spec.folds {
            let fit_idx: Vec<usize> = train_idx
                .iter()
                .copied()
                .filter(|i| folds[i] != f)
                .collect();
            let eval_idx: Vec<usize> = train_idx
                .iter()
                .copied()
                .filter(|i| folds[i] == f)
                .collect();
            let fit_rows = to_matrix(&fit_idx);
            let eval_rows = to_matrix(&eval_idx);
            let forest = RandomForest::fit(
                &data.cols,
                &data.labels,
                classes.len(),
                &fit_rows,
                *params,
                derive_u64(spec.seed, "cv", &[ci as u64, f as u64]),
            );
            fold_acc.push(accuracy_on(&forest, &data, &eval_rows));
        }
        let cv_accuracy = fold_acc.iter().sum::<f64>() / fold_acc.len() as f64;
        tried.push(TriedConfig {
            n_estimators: params.n_estimators,
            max_depth: params.max_depth,
            cv_accuracy,
        });
    }

    let chosen = tried
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.cv_accuracy
                .total_cmp(&b.1.cv_accuracy)
                .then(b.0.cmp(&a.0)) // first sampled wins a tie
        })
        .map(|(i, _)| i)
        .unwrap();

    let forest = RandomForest::fit(
        &data.cols,
        &data.labels,
        classes.len(),
        &train_rows,
        configs[chosen],
        derive_u64(spec.seed, "final", &[]),
    );
    let val_rows = to_matrix(&val_idx);
    let val_accuracy = accuracy_on(&forest, &data, &val_rows);

    let train_table_rows: Vec<_> = train_idx.iter().map(|&i| table.rows[i].clone()).collect();
    let fitted_on = FittedOn::from_table(&BlockTable {
        group: table.group,
        columns: table.columns.clone(),
        rows: train_table_rows,
        provenance: None,
    });

    let importances = forest.importances.clone();
    Ok(TrainedModel {
        format_version: 1,
        classes,
        columns: table.columns.clone(),
        forest,
        importances,
        tuning: TuningRecord {
            tried,
            chosen,
            val_accuracy,
            train_rows: train_idx.len(),
            val_rows: val_idx.len(),
        },
        seed: spec.seed,
        fitted_on,
    })
}

/// Importances from a single forest fitted on a subset of the table's rows
/// (indices into `table.rows`); used for preliminary feature ranking.
pub fn preliminary_importances(
    table: &BlockTable,
    rows: &[usize],
    params: ForestParams,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut classes: Vec<UserId> = rows.iter().map(|&i| table.rows[i].user).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateTable(
            "preliminary fit needs at least 2 classes".into(),
        ));
    }
    let data = build_dataset(table, &classes);
    let mut fit_rows: Vec<u32> = rows.iter().map(|i| data.matrix_row[i]).collect();
    fit_rows.sort_unstable();
    let forest = RandomForest::fit(
        &data.cols,
        &data.labels,
        classes.len(),
        &fit_rows,
        params,
        seed,
    );
    Ok(forest.importances)
}

fn accuracy_on(forest: &RandomForest, data: &Dataset, rows: &[u32]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut row_buf = vec![0.0; data.cols.len()];
    let mut correct = 0usize;
    for &r in rows {
        for (c, col) in data.cols.iter().enumerate() {
            row_buf[c] = col[r as usize];
        }
        if forest.predict(&row_buf) == data.labels[r as usize] {
            correct += 1;
        }
    }
    correct as f64 / rows.len() as f64
}

/// Predicts the user behind one feature row, returning the tree-vote
/// distribution alongside. Ties go to the lowest user id.
pub fn predict_block(model: &TrainedModel, values: &[f64]) -> Result<(UserId, Vec<f64>)> {
    if values.len() != model.columns.len() {
        return Err(Error::ManifestMismatch(format!(
            "row has {} values, model expects {}",
            values.len(),
            model.columns.len()
        )));
    }
    let votes = model.forest.vote(values);
    let class = model.forest.predict(values) as usize;
    Ok((model.classes[class], votes))
}

/// Predicts every row of a table after checking the manifest matches.
pub fn predict_table(model: &TrainedModel, table: &BlockTable) -> Result<Vec<UserId>> {
    if table.columns != model.columns {
        return Err(Error::ManifestMismatch(
            "table manifest differs from model manifest".into(),
        ));
    }
    table
        .rows
        .iter()
        .map(|r| predict_block(model, &r.values).map(|(u, _)| u))
        .collect()
}

/// Columns ranked by importance, descending; ties keep manifest order.
pub fn feature_importance(model: &TrainedModel, top: usize) -> Vec<(ColumnId, f64)> {
    let mut ranked: Vec<(ColumnId, f64)> = model
        .columns
        .iter()
        .cloned()
        .zip(model.importances.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1)); // stable: manifest order on ties
    ranked.truncate(top);
    ranked
}

/// Persists the model as versioned JSON. Loading restores bit-identical
/// prediction behavior.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let body =
        serde_json::to_vec(model).map_err(|e| Error::Other(format!("model serialization: {e}")))?;
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let body = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let model: TrainedModel = serde_json::from_slice(&body)
        .map_err(|e| Error::Other(format!("model deserialization: {e}")))?;
    if model.format_version != 1 {
        return Err(Error::Other(format!(
            "unsupported model format version {}",
            model.format_version
        )));
    }
    Ok(model)
}
