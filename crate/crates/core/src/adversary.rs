//! Adversary scopes, model building, and the evaluation protocols.
//!
//! An app adversary trains on one app's session-1 blocks; a device
//! adversary pools a group of apps or all of them (universal). Evaluation
//! predicts the first `s` session-2 blocks per user (a sub-session),
//! majority-votes the block labels, and scores the fraction of users whose
//! voted label is correct, so every reported accuracy is a multiple of
//! `1/n`. Group models additionally support equal-share evaluation across
//! member apps (`a_avg`) and the zero-day protocol (train on all members
//! but one, identify users on the held-out app).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocking::{
    align_tables, divide_blocks, make_block_plan, summarize_block, BlockPlan, BlockTable, ColumnId,
    FeatureRow, PlanMode,
};
use crate::classifier::{
    predict_block, preliminary_importances, train, ForestParams, SplitSpec, TrainedModel,
};
use crate::config::{BlockMode, FeMethod, PipelineConfig};
use crate::domain::{AppCatalog, AppId, ElementMap, SensorGroup, SessionId, UserId};
use crate::error::{Error, Result};
use crate::features::{
    apply_selection, augment_eye_gaze, select_all, select_emotion_features, select_hand_features,
    EmotionChoice, FeatureSelection, SelectionMethod,
};
use crate::ingest::{preprocess, TraceProvider};
use crate::seeding::derive_u64;

/// What data a model trains on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdversaryScope {
    App(AppId),
    Group(String),
    Universal,
    /// Ad-hoc app set (zero-day training scopes).
    Custom {
        label: String,
        apps: Vec<AppId>,
    },
}

impl AdversaryScope {
    pub fn label(&self) -> String {
        match self {
            AdversaryScope::App(a) => format!("app:{a}"),
            AdversaryScope::Group(g) => format!("group:{g}"),
            AdversaryScope::Universal => "universal".into(),
            AdversaryScope::Custom { label, .. } => label.clone(),
        }
    }

    pub fn apps(&self, catalog: &AppCatalog) -> Result<Vec<AppId>> {
        match self {
            AdversaryScope::App(a) => Ok(vec![*a]),
            AdversaryScope::Group(name) => catalog
                .group_named(name)
                .map(|g| g.members.clone())
                .ok_or_else(|| Error::Config(format!("unknown app group '{name}'"))),
            AdversaryScope::Universal => Ok(catalog.apps()),
            AdversaryScope::Custom { apps, .. } => Ok(apps.clone()),
        }
    }
}

/// A trained model with the fitted transforms needed to apply it.
pub struct ScopedModel {
    pub scope: AdversaryScope,
    pub sensor: SensorGroup,
    pub model: TrainedModel,
    pub selection: FeatureSelection,
    /// Block plans for the scope's apps.
    pub plans: BTreeMap<AppId, BlockPlan>,
    /// Training-table manifest after post-processing (pre-selection);
    /// evaluation rows are projected onto it.
    pub postprocess_columns: Vec<ColumnId>,
    pub block_mode: BlockMode,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn plan_for(
    provider: &dyn TraceProvider,
    app: AppId,
    sensor: SensorGroup,
    mode: BlockMode,
) -> Result<BlockPlan> {
    match mode {
        BlockMode::Fba { r } => {
            let durations: Vec<f64> = provider
                .train_durations(app, sensor)?
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            make_block_plan(&durations, r, app, sensor)
        }
        BlockMode::Fbl { length_s } => Ok(BlockPlan::fbl(app, sensor, length_s)),
    }
}

/// Preprocess + (for EG) augmentation + blocking + summarization of one
/// user's trace under an app plan.
fn trace_table(
    provider: &dyn TraceProvider,
    user: UserId,
    app: AppId,
    session: SessionId,
    sensor: SensorGroup,
    plan: &BlockPlan,
) -> Result<BlockTable> {
    let raw = provider.raw_trace(user, app, session, sensor)?;
    let (clean, _log) = preprocess(&raw)?;
    let clean = if sensor == SensorGroup::Eg {
        augment_eye_gaze(&clean)?
    } else {
        clean
    };
    let blocks = divide_blocks(&clean, plan)?;
    let rows: Vec<FeatureRow> = blocks.iter().map(|b| summarize_block(&clean, b)).collect();
    Ok(BlockTable {
        group: sensor,
        columns: crate::blocking::manifest_for(&clean.channels),
        rows,
        provenance: None,
    })
}

/// Pools one session's tables over (users x apps). Tasks are independent;
/// results are collected in input order so worker count cannot matter.
fn pooled_table(
    provider: &dyn TraceProvider,
    users: &[UserId],
    apps: &[AppId],
    session: SessionId,
    sensor: SensorGroup,
    plans: &BTreeMap<AppId, BlockPlan>,
) -> Result<BlockTable> {
    let keys: Vec<(UserId, AppId)> = apps
        .iter()
        .flat_map(|&a| users.iter().map(move |&u| (u, a)))
        .collect();
    let tables: Vec<Result<BlockTable>> = keys
        .par_iter()
        .map(|&(u, a)| trace_table(provider, u, a, session, sensor, &plans[&a]))
        .collect();
    align_tables(tables.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Row-level cleanup for evaluation tables: drops empty and mostly-zero
/// blocks and repairs missing medians, without touching columns.
fn clean_rows(table: &BlockTable, cfg: &PipelineConfig) -> BlockTable {
    let mut out = table.clone();
    out.rows
        .retain(|r| r.sample_count > 0 && r.zero_fraction <= cfg.tolerances.zero_block_fraction);
    let mean_of: Vec<Option<usize>> = out
        .columns
        .iter()
        .map(|c| {
            if c.stat == crate::blocking::Stat::Median {
                out.columns
                    .iter()
                    .position(|m| m.channel == c.channel && m.stat == crate::blocking::Stat::Mean)
            } else {
                None
            }
        })
        .collect();
    for r in &mut out.rows {
        for (i, slot) in mean_of.iter().enumerate() {
            if let Some(mi) = slot {
                if !r.values[i].is_finite() && r.values[*mi].is_finite() {
                    r.values[i] = r.values[*mi];
                }
            }
        }
    }
    out
}

/// Trains a model for one (scope, sensor group).
///
/// Session-1 blocks of the scoped apps are pooled, post-processed, and the
/// sensor group's feature selection is fitted on the training split only;
/// the classifier then tunes and refits inside the same split.
pub fn build_model(
    provider: &dyn TraceProvider,
    scope: AdversaryScope,
    sensor: SensorGroup,
    cfg: &PipelineConfig,
    element_map: &ElementMap,
) -> Result<ScopedModel> {
    let seed = derive_u64_scope(cfg.seed, &scope, sensor);
    let apps = scope.apps(provider.catalog())?;
    if apps.is_empty() {
        return Err(Error::Config(format!(
            "scope {} has no apps",
            scope.label()
        )));
    }
    let users = provider.users();
    let mut plans = BTreeMap::new();
    for &a in &apps {
        plans.insert(a, plan_for(provider, a, sensor, cfg.block_mode)?);
    }

    let train_raw = pooled_table(provider, &users, &apps, SessionId::TRAIN, sensor, &plans)?;
    let (train_clean, _plog) = crate::blocking::postprocess_blocks(&train_raw, &cfg.tolerances)?;

    let spec = SplitSpec {
        train_fraction: cfg.train_fraction,
        folds: cfg.cv_folds,
        seed,
    };
    let mut warnings = Vec::new();

    let selection = match sensor {
        SensorGroup::Bm => select_all(&train_clean),
        SensorGroup::Eg => {
            let mut sel = select_all(&train_clean);
            sel.method = SelectionMethod::EgAugmented;
            sel
        }
        SensorGroup::Hj => {
            let (train_idx, _) = crate::classifier::split_train_val(&train_clean, &spec);
            let k = cfg.hj_top_k.min(train_clean.width());
            if k < cfg.hj_top_k {
                warnings.push(format!(
                    "hand-joint top-k capped at {k} (table width after pruning)"
                ));
            }
            let params = ForestParams {
                n_estimators: (cfg.grid.n_estimators.0 + cfg.grid.n_estimators.1) / 2,
                max_depth: cfg.grid.max_depth.1,
            };
            let importances = preliminary_importances(
                &train_clean,
                &train_idx,
                params,
                derive_u64(seed, "prelim", &[]),
            )?;
            let fit_table = BlockTable {
                group: train_clean.group,
                columns: train_clean.columns.clone(),
                rows: train_idx
                    .iter()
                    .map(|&i| train_clean.rows[i].clone())
                    .collect(),
                provenance: None,
            };
            select_hand_features(&fit_table, &importances, k)?
        }
        SensorGroup::Fe => {
            let choice = match &cfg.fe_method {
                FeMethod::All => EmotionChoice::All,
                FeMethod::AllEmotions => EmotionChoice::AllEmotions,
                FeMethod::Emotion(name) => EmotionChoice::Emotion(name.clone()),
            };
            select_emotion_features(&train_clean, &choice, element_map)?
        }
    };
    debug_assert!(selection.fitted_on.train_only());

    let (train_sel, mut sel_warnings) = apply_selection(&train_clean, &selection)?;
    warnings.append(&mut sel_warnings);

    let model = train(&train_sel, &spec, &cfg.grid)?;
    Ok(ScopedModel {
        scope,
        sensor,
        model,
        selection,
        plans,
        postprocess_columns: train_clean.columns,
        block_mode: cfg.block_mode,
        seed,
        warnings,
    })
}

fn derive_u64_scope(master: u64, scope: &AdversaryScope, sensor: SensorGroup) -> u64 {
    crate::seeding::derive_u64_text(
        master,
        "model",
        &format!("{}|{}", scope.label(), sensor.key()),
    )
}

/// Most frequent label; ties break toward the lowest user id.
pub fn majority_vote(labels: &[UserId]) -> Result<UserId> {
    if labels.is_empty() {
        return Err(Error::EmptyVote);
    }
    let mut counts: BTreeMap<UserId, u32> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut best = None;
    for (&user, &count) in &counts {
        match best {
            None => best = Some((user, count)),
            Some((_, c)) if count > c => best = Some((user, count)),
            _ => {}
        }
    }
    Ok(best.unwrap().0)
}

/// One evaluation outcome. `accuracy()` is `correct / n_evaluated`, a
/// multiple of `1/n` by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub scope: String,
    pub sensor: SensorGroup,
    /// Evaluated app, or "a_avg" for equal-share group evaluation.
    pub eval_app: String,
    pub n_evaluated: u32,
    pub correct: u32,
    /// Users without usable evaluation data, noted rather than scored.
    pub excluded: Vec<UserId>,
    /// Voted label and per-label block tallies per user.
    pub votes: BTreeMap<UserId, (UserId, BTreeMap<UserId, u32>)>,
    /// Sub-session block count (None = full session).
    pub s: Option<u32>,
    /// Mean sub-session seconds across evaluated users.
    pub s_t_seconds: f64,
}

impl AccuracyReport {
    pub fn accuracy(&self) -> f64 {
        if self.n_evaluated == 0 {
            0.0
        } else {
            self.correct as f64 / self.n_evaluated as f64
        }
    }

    /// Accuracy is a whole number of `1/n` shares.
    pub fn is_quantized(&self) -> bool {
        self.correct <= self.n_evaluated
    }
}

/// Builds the predict-ready evaluation table for one app: session-2 rows,
/// row-level cleanup, projection onto the model's post-processing manifest,
/// then the fitted selection. Users whose session-2 trace is missing or
/// unusable are left out and returned separately.
pub fn eval_table(
    provider: &dyn TraceProvider,
    sm: &ScopedModel,
    app: AppId,
) -> Result<(BlockTable, Vec<UserId>, BTreeMap<UserId, f64>)> {
    let users = provider.users();
    let plan = match sm.plans.get(&app) {
        Some(p) => p.clone(),
        None => plan_for(provider, app, sm.sensor, sm.block_mode)?,
    };
    let results: Vec<(UserId, Result<BlockTable>)> = users
        .par_iter()
        .map(|&u| {
            (
                u,
                trace_table(provider, u, app, SessionId::EVAL, sm.sensor, &plan),
            )
        })
        .collect();
    let mut tables = Vec::new();
    let mut excluded = Vec::new();
    let mut durations = BTreeMap::new();
    for (u, res) in results {
        match res {
            Ok(t) => {
                let d = provider
                    .raw_trace(u, app, SessionId::EVAL, sm.sensor)
                    .map(|tr| tr.duration_s())
                    .unwrap_or(0.0);
                durations.insert(u, d);
                tables.push(t);
            }
            Err(_) => excluded.push(u),
        }
    }
    if tables.is_empty() {
        return Err(Error::NoSessions(app.to_string()));
    }
    let pooled = align_tables(tables)?;
    let cfg_like = PipelineConfig {
        block_mode: sm.block_mode,
        ..PipelineConfig::default()
    };
    let cleaned = clean_rows(&pooled, &cfg_like);
    let projected = crate::blocking::project_table(&cleaned, &sm.postprocess_columns)?;
    let (selected, _w) = apply_selection(&projected, &sm.selection)?;
    Ok((selected, excluded, durations))
}

fn vote_over_rows(
    sm: &ScopedModel,
    rows_by_user: &BTreeMap<UserId, Vec<&FeatureRow>>,
) -> Result<(u32, u32, BTreeMap<UserId, (UserId, BTreeMap<UserId, u32>)>)> {
    let mut votes = BTreeMap::new();
    let mut correct = 0u32;
    let mut n = 0u32;
    for (&user, rows) in rows_by_user {
        if rows.is_empty() {
            continue;
        }
        let mut labels = Vec::with_capacity(rows.len());
        let mut tally: BTreeMap<UserId, u32> = BTreeMap::new();
        for r in rows {
            let (label, _) = predict_block(&sm.model, &r.values)?;
            *tally.entry(label).or_insert(0) += 1;
            labels.push(label);
        }
        let voted = majority_vote(&labels)?;
        if voted == user {
            correct += 1;
        }
        n += 1;
        votes.insert(user, (voted, tally));
    }
    Ok((correct, n, votes))
}

fn rows_by_user<'t>(
    table: &'t BlockTable,
    take: impl Fn(UserId) -> usize,
) -> BTreeMap<UserId, Vec<&'t FeatureRow>> {
    let mut by_user: BTreeMap<UserId, Vec<&FeatureRow>> = BTreeMap::new();
    for r in &table.rows {
        by_user.entry(r.user).or_default().push(r);
    }
    for (u, rows) in by_user.iter_mut() {
        rows.sort_by_key(|r| (r.app, r.block));
        rows.truncate(take(*u));
    }
    by_user
}

/// Evaluates a model on one app's session-2 data. `s` limits each user to
/// the first `s` blocks (their sub-session); `None` means the whole
/// session. Accuracy is the fraction of users whose majority-voted label
/// is correct.
pub fn evaluate(
    provider: &dyn TraceProvider,
    sm: &ScopedModel,
    app: AppId,
    s: Option<u32>,
) -> Result<AccuracyReport> {
    let (table, excluded, durations) = eval_table(provider, sm, app)?;
    if let (Some(s), Some(n_fba)) = (s, plan_blocks(sm, app)) {
        if s == 0 || s > n_fba {
            return Err(Error::InvalidParam(format!(
                "sub-session s={s} outside 1..={n_fba}"
            )));
        }
    }
    let take = |_u: UserId| s.map(|v| v as usize).unwrap_or(usize::MAX);
    let by_user = rows_by_user(&table, take);
    let (correct, n, votes) = vote_over_rows(sm, &by_user)?;
    let s_t = mean_subsession_seconds(sm, app, s, &by_user, &durations);
    Ok(AccuracyReport {
        scope: sm.scope.label(),
        sensor: sm.sensor,
        eval_app: app.to_string(),
        n_evaluated: n,
        correct,
        excluded,
        votes,
        s,
        s_t_seconds: s_t,
    })
}

fn plan_blocks(sm: &ScopedModel, app: AppId) -> Option<u32> {
    sm.plans.get(&app).and_then(|p| p.n_fba())
}

fn mean_subsession_seconds(
    sm: &ScopedModel,
    app: AppId,
    s: Option<u32>,
    by_user: &BTreeMap<UserId, Vec<&FeatureRow>>,
    durations: &BTreeMap<UserId, f64>,
) -> f64 {
    if by_user.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (u, rows) in by_user {
        let d = durations.get(u).copied().unwrap_or(0.0);
        let t = match (sm.plans.get(&app).map(|p| p.mode), plan_blocks(sm, app)) {
            (Some(PlanMode::Fba { .. }), Some(n_fba)) if n_fba > 0 => d / n_fba as f64,
            (Some(PlanMode::Fbl { length_s }), _) => length_s,
            _ => {
                if rows.is_empty() {
                    0.0
                } else {
                    d / rows.len() as f64
                }
            }
        };
        let blocks = s.map(|v| v as usize).unwrap_or(rows.len()).min(rows.len());
        total += t * blocks as f64;
    }
    total / by_user.len() as f64
}

/// Equal-share group evaluation (`a_avg`): every member app contributes
/// the same share of each user's sub-session, `1/n_g` of the blocks, with
/// remainder blocks drawn from the first apps in group order so totals
/// match across users.
pub fn evaluate_avg(
    provider: &dyn TraceProvider,
    sm: &ScopedModel,
    group_apps: &[AppId],
) -> Result<AccuracyReport> {
    if group_apps.is_empty() {
        return Err(Error::Config("a_avg over empty group".into()));
    }
    let n_g = group_apps.len() as u32;

    // per-app block budgets
    let mut budgets: BTreeMap<AppId, u32> = BTreeMap::new();
    let mut caps: BTreeMap<AppId, u32> = BTreeMap::new();
    let mut sum_caps = 0u64;
    for &a in group_apps {
        let cap = match plan_blocks(sm, a) {
            Some(n_fba) => n_fba,
            // FBL: equal budgeting needs a per-app cap; use the smallest
            // session-2 block count across users
            None => {
                let (table, _, _) = eval_table(provider, sm, a)?;
                let by_user = rows_by_user(&table, |_| usize::MAX);
                by_user.values().map(|v| v.len() as u32).min().unwrap_or(0)
            }
        };
        caps.insert(a, cap);
        sum_caps += cap as u64;
        budgets.insert(a, cap / n_g);
    }
    let target = sum_caps.div_ceil(n_g as u64) as u32;
    let mut assigned: u32 = budgets.values().sum();
    'outer: while assigned < target {
        for &a in group_apps {
            if budgets[&a] < caps[&a] {
                *budgets.get_mut(&a).unwrap() += 1;
                assigned += 1;
                if assigned >= target {
                    break 'outer;
                }
            }
        }
        if group_apps.iter().all(|a| budgets[a] >= caps[a]) {
            break;
        }
    }
    for b in budgets.values_mut() {
        *b = (*b).max(1);
    }

    let mut combined: BTreeMap<UserId, Vec<FeatureRow>> = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut s_t_total = 0.0;
    for &a in group_apps {
        let (table, mut exc, durations) = eval_table(provider, sm, a)?;
        excluded.append(&mut exc);
        let budget = budgets[&a] as usize;
        let by_user = rows_by_user(&table, |_| budget);
        for (u, rows) in &by_user {
            let d = durations.get(u).copied().unwrap_or(0.0);
            let t = match plan_blocks(sm, a) {
                Some(n_fba) if n_fba > 0 => d / n_fba as f64,
                _ => match sm.plans.get(&a).map(|p| p.mode) {
                    Some(PlanMode::Fbl { length_s }) => length_s,
                    _ => 0.0,
                },
            };
            s_t_total += t * rows.len() as f64;
            combined
                .entry(*u)
                .or_default()
                .extend(rows.iter().map(|r| (*r).clone()));
        }
    }
    excluded.sort_unstable();
    excluded.dedup();

    let refs: BTreeMap<UserId, Vec<&FeatureRow>> = combined
        .iter()
        .map(|(u, v)| (*u, v.iter().collect()))
        .collect();
    let (correct, n, votes) = vote_over_rows(sm, &refs)?;
    Ok(AccuracyReport {
        scope: sm.scope.label(),
        sensor: sm.sensor,
        eval_app: "a_avg".into(),
        n_evaluated: n,
        correct,
        excluded,
        votes,
        s: None,
        s_t_seconds: if n > 0 { s_t_total / n as f64 } else { 0.0 },
    })
}

/// Zero-day protocol: train a group model on all member apps except
/// `held_out` (session 1), evaluate on `held_out` (session 2, full
/// session). Singleton groups have no held-out split to make.
pub fn zero_day_eval(
    provider: &dyn TraceProvider,
    group_name: &str,
    held_out: AppId,
    sensor: SensorGroup,
    cfg: &PipelineConfig,
    element_map: &ElementMap,
) -> Result<AccuracyReport> {
    let group = provider
        .catalog()
        .group_named(group_name)
        .ok_or_else(|| Error::Config(format!("unknown app group '{group_name}'")))?;
    if group.members.len() < 2 {
        return Err(Error::ZeroDayUndefined(group_name.to_string()));
    }
    if !group.members.contains(&held_out) {
        return Err(Error::Config(format!(
            "{held_out} is not a member of group '{group_name}'"
        )));
    }
    let apps: Vec<AppId> = group
        .members
        .iter()
        .copied()
        .filter(|&a| a != held_out)
        .collect();
    let scope = AdversaryScope::Custom {
        label: format!("zero-day:{group_name}-minus-{held_out}"),
        apps,
    };
    let sm = build_model(provider, scope, sensor, cfg, element_map)?;
    evaluate(provider, &sm, held_out, None)
}

/// One point per sub-session length `s = 1..=N_FBA`; the final point uses
/// the whole evaluation session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsessionCurve {
    pub scope: String,
    pub sensor: SensorGroup,
    pub app: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: u32,
    pub s_t_seconds: f64,
    pub n_evaluated: u32,
    pub correct: u32,
}

impl CurvePoint {
    pub fn accuracy(&self) -> f64 {
        if self.n_evaluated == 0 {
            0.0
        } else {
            self.correct as f64 / self.n_evaluated as f64
        }
    }
}

/// Accuracy for every sub-session length on one app. The evaluation table
/// is built once; only the per-user prefix grows with `s`.
pub fn subsession_curve(
    provider: &dyn TraceProvider,
    sm: &ScopedModel,
    app: AppId,
) -> Result<SubsessionCurve> {
    let n_fba = plan_blocks(sm, app).ok_or_else(|| {
        Error::InvalidParam("sub-session curves need fixed-block-amount plans".into())
    })?;
    let (table, _excluded, durations) = eval_table(provider, sm, app)?;
    let full = rows_by_user(&table, |_| usize::MAX);
    let mut points = Vec::with_capacity(n_fba as usize);
    for s in 1..=n_fba {
        let by_user: BTreeMap<UserId, Vec<&FeatureRow>> = full
            .iter()
            .map(|(u, rows)| (*u, rows.iter().copied().take(s as usize).collect()))
            .collect();
        let (correct, n, _votes) = vote_over_rows(sm, &by_user)?;
        let s_t = mean_subsession_seconds(sm, app, Some(s), &by_user, &durations);
        points.push(CurvePoint {
            s,
            s_t_seconds: s_t,
            n_evaluated: n,
            correct,
        });
    }
    Ok(SubsessionCurve {
        scope: sm.scope.label(),
        sensor: sm.sensor,
        app: app.to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: u32) -> UserId {
        UserId(i)
    }

    #[test]
    fn vote_unanimous() {
        assert_eq!(majority_vote(&[u(5), u(5), u(5)]).unwrap(), u(5));
    }

    #[test]
    fn vote_tie_takes_lower_id() {
        assert_eq!(
            majority_vote(&[u(2), u(1), u(2), u(1), u(2), u(1)]).unwrap(),
            u(1)
        );
    }

    #[test]
    fn vote_plain_majority() {
        let labels: Vec<UserId> = [2, 2, 7, 2, 7, 1, 2, 7, 2, 7]
            .iter()
            .map(|&i| u(i))
            .collect();
        assert_eq!(majority_vote(&labels).unwrap(), u(2));
    }

    #[test]
    fn vote_empty_errors() {
        assert!(matches!(majority_vote(&[]), Err(Error::EmptyVote)));
    }

    #[test]
    fn scope_labels() {
        assert_eq!(AdversaryScope::App(AppId(3)).label(), "app:a_3");
        assert_eq!(AdversaryScope::Group("calm".into()).label(), "group:calm");
        assert_eq!(AdversaryScope::Universal.label(), "universal");
    }
}
