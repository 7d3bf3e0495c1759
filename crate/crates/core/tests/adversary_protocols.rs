//! Protocol-level checks on a small synthetic corpus with a singleton
//! group (three apps: one two-member group plus one singleton).

use vrident::adversary::{
    build_model, evaluate, evaluate_avg, subsession_curve, zero_day_eval, AdversaryScope,
};
use vrident::config::PipelineConfig;
use vrident::domain::{AppId, ElementMap, SensorGroup};
use vrident::error::Error;
use vrident::ingest::TraceProvider;
use vrident::synth::{builtin_archetypes, generate_cohort, CohortMode, CohortSpec, SynthProvider};

fn small_provider() -> SynthProvider {
    let profiles = generate_cohort(&CohortSpec::new(8, CohortMode::Distinct), 13).unwrap();
    let mut archetypes = builtin_archetypes(0.6);
    archetypes.truncate(3); // roaming {a_1, a_2} + singleton cockpit {a_3}
    SynthProvider::new(profiles, archetypes, 13)
}

fn cfg() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.seed = 13;
    cfg.grid.n_estimators = (20, 60);
    cfg.grid.iterations = 2;
    cfg
}

#[test]
fn catalog_has_singleton_group() {
    let p = small_provider();
    assert_eq!(p.catalog().group_named("cockpit").unwrap().members.len(), 1);
    assert_eq!(p.catalog().group_named("roaming").unwrap().members.len(), 2);
}

#[test]
fn avg_over_singleton_group_equals_full_session_evaluation() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let sm = build_model(
        &p,
        AdversaryScope::Group("cockpit".into()),
        SensorGroup::Bm,
        &cfg(),
        &map,
    )
    .unwrap();
    let avg = evaluate_avg(&p, &sm, &[AppId(3)]).unwrap();
    let full = evaluate(&p, &sm, AppId(3), None).unwrap();
    assert_eq!(avg.correct, full.correct);
    assert_eq!(avg.n_evaluated, full.n_evaluated);
    for (user, (voted, _)) in &full.votes {
        assert_eq!(avg.votes[user].0, *voted);
    }
}

#[test]
fn zero_day_on_singleton_group_is_undefined() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let err = zero_day_eval(&p, "cockpit", AppId(3), SensorGroup::Bm, &cfg(), &map).unwrap_err();
    assert!(matches!(err, Error::ZeroDayUndefined(_)));
}

#[test]
fn zero_day_trains_without_the_held_out_app() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let report = zero_day_eval(&p, "roaming", AppId(2), SensorGroup::Bm, &cfg(), &map).unwrap();
    assert_eq!(report.scope, "zero-day:roaming-minus-a_2");
    assert_eq!(report.eval_app, "a_2");
    assert_eq!(report.n_evaluated, 8);
}

#[test]
fn subsession_curve_final_point_matches_full_evaluation() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let sm = build_model(
        &p,
        AdversaryScope::App(AppId(1)),
        SensorGroup::Bm,
        &cfg(),
        &map,
    )
    .unwrap();
    let n_fba = sm.plans[&AppId(1)].n_fba().unwrap();
    let curve = subsession_curve(&p, &sm, AppId(1)).unwrap();
    assert_eq!(curve.points.len(), n_fba as usize);
    let full = evaluate(&p, &sm, AppId(1), Some(n_fba)).unwrap();
    let last = curve.points.last().unwrap();
    assert_eq!(last.correct, full.correct);
    assert_eq!(last.n_evaluated, full.n_evaluated);
}

#[test]
fn subsession_s_outside_plan_is_rejected() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let sm = build_model(
        &p,
        AdversaryScope::App(AppId(1)),
        SensorGroup::Bm,
        &cfg(),
        &map,
    )
    .unwrap();
    let n_fba = sm.plans[&AppId(1)].n_fba().unwrap();
    assert!(evaluate(&p, &sm, AppId(1), Some(n_fba + 1)).is_err());
    assert!(evaluate(&p, &sm, AppId(1), Some(0)).is_err());
}

#[test]
fn selections_are_fitted_on_training_session_only() {
    let p = small_provider();
    let map = ElementMap::default_map();
    for sensor in [SensorGroup::Hj, SensorGroup::Fe, SensorGroup::Eg] {
        let sm = build_model(&p, AdversaryScope::App(AppId(1)), sensor, &cfg(), &map).unwrap();
        assert!(
            sm.selection.fitted_on.train_only(),
            "{sensor} selection leaks"
        );
        assert!(sm.model.fitted_on.train_only(), "{sensor} model leaks");
    }
}

#[test]
fn fba_gives_every_user_the_same_block_count() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let sm = build_model(
        &p,
        AdversaryScope::App(AppId(1)),
        SensorGroup::Bm,
        &cfg(),
        &map,
    )
    .unwrap();
    let n_fba = sm.plans[&AppId(1)].n_fba().unwrap();

    // session durations differ per user under the +/-10% jitter
    let durations: Vec<f64> = p
        .train_durations(AppId(1), SensorGroup::Bm)
        .unwrap()
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let spread = durations.iter().cloned().fold(f64::MIN, f64::max)
        - durations.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.1, "durations barely differ: {durations:?}");

    // yet every user's evaluation session divides into exactly N_FBA blocks
    let (table, _, _) = vrident::adversary::eval_table(&p, &sm, AppId(1)).unwrap();
    let mut per_user: std::collections::BTreeMap<_, u32> = Default::default();
    for row in &table.rows {
        *per_user.entry(row.user).or_insert(0) += 1;
    }
    assert_eq!(per_user.len(), 8);
    for (user, count) in per_user {
        assert_eq!(count, n_fba, "{user} has {count} blocks, plan says {n_fba}");
    }
}

#[test]
fn group_model_pools_member_apps() {
    let p = small_provider();
    let map = ElementMap::default_map();
    let scope = AdversaryScope::Group("roaming".into());
    let sm = build_model(&p, scope, SensorGroup::Bm, &cfg(), &map).unwrap();
    assert_eq!(sm.plans.len(), 2);
    // pooled training rows: both apps' session-1 blocks contribute
    let per_app_rows: u32 = sm.plans.values().map(|pl| pl.n_fba().unwrap()).sum();
    assert!(sm.model.tuning.train_rows + sm.model.tuning.val_rows <= (per_app_rows * 8) as usize);
    assert!(sm.model.tuning.train_rows > sm.model.tuning.val_rows);
}
