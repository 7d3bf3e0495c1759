//! Run orchestration: the subcommand implementations behind the CLI, the
//! report writers, and the run manifest.
//!
//! Reports are plain CSV, written in a fixed row order with shortest
//! round-trip float formatting, so two runs with the same config and seed
//! produce byte-identical files at any worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::{
    build_model, evaluate, evaluate_avg, subsession_curve, zero_day_eval, AccuracyReport,
    AdversaryScope, ScopedModel,
};
use crate::blocking::{postprocess_blocks, write_table_csv};
use crate::classifier::{feature_importance, load_model, save_model};
use crate::config::{PipelineConfig, RunConfig};
use crate::domain::{AppCatalog, AppId, ElementMap, SensorGroup, SessionId};
use crate::error::{Error, Result};
use crate::ingest::{
    load_session, preprocess, scan_dataset, DiskProvider, EntryStatus, TraceProvider,
};
use crate::synth::{
    builtin_archetypes, builtin_catalog, generate_cohort, CohortMode, CohortSpec, SynthProvider,
};

/// Everything resolved from the run configuration.
pub struct RunContext {
    pub cfg: RunConfig,
    pub pipeline: PipelineConfig,
    pub element_map: ElementMap,
}

impl RunContext {
    pub fn new(cfg: RunConfig) -> Result<RunContext> {
        let pipeline = cfg.pipeline()?;
        let element_map = match &cfg.dataset.element_map_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                ElementMap::from_toml(&text)?
            }
            None => ElementMap::default_map(),
        };
        Ok(RunContext {
            cfg,
            pipeline,
            element_map,
        })
    }

    /// Catalog from the groups file, from the synthetic corpus default,
    /// or the builtin 20-app grouping, in that order of preference.
    pub fn catalog(&self) -> Result<AppCatalog> {
        if let Some(path) = &self.cfg.dataset.groups_file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return AppCatalog::from_toml(&text);
        }
        let in_root = self.cfg.dataset.root.join("groups.toml");
        if in_root.is_file() {
            let text = std::fs::read_to_string(&in_root).map_err(|e| Error::io(&in_root, e))?;
            return AppCatalog::from_toml(&text);
        }
        Ok(AppCatalog::default_twenty())
    }

    pub fn synth_provider(&self) -> Result<SynthProvider> {
        let mode = CohortMode::parse(&self.cfg.synth.mode)?;
        let mut spec = CohortSpec::new(self.cfg.synth.users, mode);
        spec.noise_scale = self.cfg.synth.noise_scale;
        let profiles = generate_cohort(&spec, self.cfg.seed)?;
        let mut archetypes = builtin_archetypes(self.cfg.synth.duration_scale);
        let wanted = self.cfg.synth.apps as usize;
        if wanted == 0 || wanted > archetypes.len() {
            return Err(Error::Config(format!(
                "synth apps must be 1..={}, got {wanted}",
                archetypes.len()
            )));
        }
        archetypes.truncate(wanted);
        Ok(SynthProvider::new(profiles, archetypes, self.cfg.seed))
    }

    pub fn disk_provider(&self) -> Result<DiskProvider> {
        let index = scan_dataset(&self.cfg.dataset.root)?;
        if index.entries.is_empty() {
            return Err(Error::Config(format!(
                "dataset root {} holds no traces (run `synth` first or point dataset.root elsewhere)",
                self.cfg.dataset.root.display()
            )));
        }
        Ok(DiskProvider::new(index, self.catalog()?))
    }

    fn out_dir(&self) -> &Path {
        &self.cfg.dataset.out_dir
    }
}

/// Installs a rayon pool of the configured size for the duration of `f`.
/// Results must not depend on the pool size; this only bounds parallelism.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("worker pool")
        .install(f)
}

// -------- run manifest --------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one run: config hash, seed, tool version, input
/// fingerprint, wall-clock bounds, and the hashes of everything written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub dataset_fingerprint: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<ArtifactRecord>,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let body = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    h.update(&body);
    Ok(hex::encode(h.finalize()))
}

struct ManifestBuilder {
    command: String,
    config_hash: String,
    seed: u64,
    dataset_fingerprint: String,
    started: u64,
    artifacts: Vec<ArtifactRecord>,
}

impl ManifestBuilder {
    fn new(command: &str, ctx: &RunContext, fingerprint: String) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_hash: ctx.cfg.config_hash(),
            seed: ctx.cfg.seed,
            dataset_fingerprint: fingerprint,
            started: now_unix(),
            artifacts: Vec::new(),
        }
    }

    fn add(&mut self, path: &Path) -> Result<()> {
        self.artifacts.push(ArtifactRecord {
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    fn write(mut self, out_dir: &Path, name: &str) -> Result<PathBuf> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: self.command,
            config_hash: self.config_hash,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_fingerprint: self.dataset_fingerprint,
            started_unix: self.started,
            finished_unix: now_unix(),
            artifacts: self.artifacts,
        };
        let path = out_dir.join(name);
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

// -------- synth --------

/// Generates the synthetic corpus into `dataset.root` in the on-disk
/// layout, plus the app-group mapping file.
pub fn cmd_synth(ctx: &RunContext) -> Result<usize> {
    let provider = ctx.synth_provider()?;
    ensure_dir(&ctx.cfg.dataset.root)?;
    let written = crate::synth::write_corpus(&provider, &ctx.cfg.dataset.root)?;
    let groups_path = ctx.cfg.dataset.root.join("groups.toml");
    std::fs::write(
        &groups_path,
        builtin_catalog(&provider.archetypes).to_toml(),
    )
    .map_err(|e| Error::io(&groups_path, e))?;
    ensure_dir(ctx.out_dir())?;
    let mut mb = ManifestBuilder::new("synth", ctx, provider.fingerprint());
    mb.add(&groups_path)?;
    mb.write(ctx.out_dir(), "synth_manifest.json")?;
    Ok(written)
}

// -------- ingest --------

#[derive(Debug, Serialize)]
struct IngestSummary {
    entries: usize,
    corrupt: usize,
    incomplete: usize,
    users: usize,
    apps: usize,
    duration_stats: Vec<(String, String, f64, f64, usize)>,
}

/// Scans the dataset, validates and preprocesses every trace, and writes
/// one preprocess log per trace plus an index summary.
pub fn cmd_ingest(ctx: &RunContext) -> Result<PathBuf> {
    let index = scan_dataset(&ctx.cfg.dataset.root)?;
    let out = ctx.out_dir();
    ensure_dir(out)?;
    let mut mb = ManifestBuilder::new("ingest", ctx, String::new());

    let mut corrupt = 0usize;
    for (key, entry) in &index.entries {
        let (user, app, session, group) = *key;
        if let EntryStatus::Corrupt { .. } = entry.status {
            corrupt += 1;
            continue;
        }
        let trace = match load_session(&entry.path, user, app, session, group) {
            Ok(t) => t,
            Err(_) => {
                corrupt += 1;
                continue;
            }
        };
        let violations = crate::domain::validate_trace(&trace, ctx.pipeline.tolerances.quat_norm);
        let (_, log) = preprocess(&trace)?;
        let dir = out
            .join("preprocess")
            .join(format!("user_{}", user.0))
            .join(format!("app_{}", app.0))
            .join(format!("session_{}", session.0));
        ensure_dir(&dir)?;
        let path = dir.join(format!("{}.preprocess_log.json", group.key()));
        #[derive(Serialize)]
        struct TraceLog<'a> {
            violations: &'a [crate::domain::Violation],
            preprocess: &'a crate::ingest::PreprocessLog,
        }
        let body = serde_json::to_string_pretty(&TraceLog {
            violations: &violations,
            preprocess: &log,
        })
        .expect("log serializes");
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }

    let stats = index.duration_stats();
    let summary = IngestSummary {
        entries: index.entries.len(),
        corrupt,
        incomplete: index.incomplete.len(),
        users: index.users().len(),
        apps: index.apps().len(),
        duration_stats: stats
            .iter()
            .map(|((a, g), s)| (a.to_string(), g.to_string(), s.mean, s.variance, s.count))
            .collect(),
    };
    let index_path = out.join("dataset_index.json");
    let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&index_path, body).map_err(|e| Error::io(&index_path, e))?;
    mb.add(&index_path)?;
    mb.write(out, "ingest_manifest.json")?;
    Ok(index_path)
}

// -------- summarize --------

/// Builds the per-app, per-sensor block tables (both sessions, pooled and
/// post-processed) and writes them as CSV with column-manifest sidecars.
pub fn cmd_summarize(ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let provider = ctx.disk_provider()?;
    let sensors = ctx.cfg.eval_sensors()?;
    let out = ctx.out_dir().join("blocks");
    ensure_dir(&out)?;
    let mut mb = ManifestBuilder::new("summarize", ctx, provider.fingerprint());
    let mut written = Vec::new();
    for sensor in sensors {
        for app in provider.apps() {
            let table = app_block_table(&provider, app, sensor, &ctx.pipeline)?;
            let path = out.join(format!("{}_a{}.csv", sensor.key(), app.0));
            write_table_csv(&table, &path)?;
            mb.add(&path)?;
            written.push(path);
        }
    }
    mb.write(ctx.out_dir(), "summarize_manifest.json")?;
    Ok(written)
}

/// Both sessions of one app summarized into a single post-processed table.
pub fn app_block_table(
    provider: &dyn TraceProvider,
    app: AppId,
    sensor: SensorGroup,
    cfg: &PipelineConfig,
) -> Result<crate::blocking::BlockTable> {
    use crate::blocking::{align_tables, divide_blocks, manifest_for, summarize_block};
    use crate::features::augment_eye_gaze;

    let plan = match cfg.block_mode {
        crate::config::BlockMode::Fba { r } => {
            let durations: Vec<f64> = provider
                .train_durations(app, sensor)?
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            crate::blocking::make_block_plan(&durations, r, app, sensor)?
        }
        crate::config::BlockMode::Fbl { length_s } => {
            crate::blocking::BlockPlan::fbl(app, sensor, length_s)
        }
    };
    let mut tables = Vec::new();
    for user in provider.users() {
        for session in [SessionId::TRAIN, SessionId::EVAL] {
            let raw = provider.raw_trace(user, app, session, sensor)?;
            let (clean, _) = preprocess(&raw)?;
            let clean = if sensor == SensorGroup::Eg {
                augment_eye_gaze(&clean)?
            } else {
                clean
            };
            let blocks = divide_blocks(&clean, &plan)?;
            let rows = blocks.iter().map(|b| summarize_block(&clean, b)).collect();
            tables.push(crate::blocking::BlockTable {
                group: sensor,
                columns: manifest_for(&clean.channels),
                rows,
                provenance: None,
            });
        }
    }
    let pooled = align_tables(tables)?;
    let (mut table, _) = postprocess_blocks(&pooled, &cfg.tolerances)?;
    table.provenance = Some(format!(
        "app={app} sensor={sensor} mode={:?}",
        cfg.block_mode
    ));
    Ok(table)
}

// -------- train --------

fn scope_file_name(sensor: SensorGroup, scope: &AdversaryScope) -> String {
    let label = scope.label().replace([':', '/', ' '], "_");
    format!("{}__{}.json", sensor.key(), label)
}

/// Scopes requested by the config, in deterministic order.
pub fn requested_scopes(
    cfg: &RunConfig,
    catalog: &AppCatalog,
    apps: &[AppId],
) -> Result<Vec<AdversaryScope>> {
    let mut scopes = Vec::new();
    for kind in &cfg.eval.scopes {
        match kind.as_str() {
            "app" => scopes.extend(apps.iter().map(|&a| AdversaryScope::App(a))),
            "group" => scopes.extend(
                catalog
                    .groups()
                    .iter()
                    .filter(|g| g.members.iter().any(|m| apps.contains(m)))
                    .map(|g| AdversaryScope::Group(g.name.clone())),
            ),
            "universal" => scopes.push(AdversaryScope::Universal),
            other => {
                // allow explicit "app:a_3" / "group:social" forms
                if let Some(rest) = other.strip_prefix("app:a_") {
                    let id: u32 = rest
                        .parse()
                        .map_err(|_| Error::Config(format!("bad scope '{other}'")))?;
                    scopes.push(AdversaryScope::App(AppId(id)));
                } else if let Some(name) = other.strip_prefix("group:") {
                    scopes.push(AdversaryScope::Group(name.to_string()));
                } else {
                    return Err(Error::Config(format!(
                        "unknown scope '{other}' (expected app, group, universal, app:a_<i>, group:<name>)"
                    )));
                }
            }
        }
    }
    Ok(scopes)
}

/// Trains every requested (scope, sensor) model and persists it.
pub fn cmd_train(ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let provider = ctx.disk_provider()?;
    let sensors = ctx.cfg.eval_sensors()?;
    let scopes = requested_scopes(&ctx.cfg, provider.catalog(), &provider.apps())?;
    let dir = ctx.out_dir().join("models");
    ensure_dir(&dir)?;
    let mut mb = ManifestBuilder::new("train", ctx, provider.fingerprint());
    let mut written = Vec::new();
    for &sensor in &sensors {
        for scope in &scopes {
            let sm = build_model(
                &provider,
                scope.clone(),
                sensor,
                &ctx.pipeline,
                &ctx.element_map,
            )?;
            let path = dir.join(scope_file_name(sensor, scope));
            save_model(&sm.model, &path)?;
            mb.add(&path)?;
            // the fitted selection travels with the model, fingerprint included
            let sel_path = path.with_extension("selection.json");
            let body = serde_json::to_string_pretty(&sm.selection).expect("selection serializes");
            std::fs::write(&sel_path, body).map_err(|e| Error::io(&sel_path, e))?;
            mb.add(&sel_path)?;
            written.push(path);
        }
    }
    mb.write(ctx.out_dir(), "train_manifest.json")?;
    Ok(written)
}

// -------- evaluate --------

/// One row of `accuracy_table.csv`.
fn accuracy_row(report: &AccuracyReport, protocol: &str) -> Vec<String> {
    vec![
        report.sensor.key().to_string(),
        report.scope.clone(),
        report.eval_app.clone(),
        protocol.to_string(),
        report
            .s
            .map(|s| s.to_string())
            .unwrap_or_else(|| "max".into()),
        report.s_t_seconds.to_string(),
        report.n_evaluated.to_string(),
        report.correct.to_string(),
        report.accuracy().to_string(),
        report
            .excluded
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    ]
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Everything `evaluate` produces, before serialization. Exposed so the
/// verification suites can assert on reports without touching disk.
pub struct EvaluationOutput {
    pub accuracy: Vec<AccuracyReport>,
    pub curves: Vec<crate::adversary::SubsessionCurve>,
    pub zero_day: Vec<ZeroDayCell>,
    pub top_features: Vec<(SensorGroup, String, usize, String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroDayCell {
    pub sensor: SensorGroup,
    pub train_group: String,
    pub eval_app: String,
    pub eval_app_group: String,
    pub within_group: bool,
    pub n_evaluated: u32,
    pub correct: u32,
}

impl ZeroDayCell {
    pub fn accuracy(&self) -> f64 {
        if self.n_evaluated == 0 {
            0.0
        } else {
            self.correct as f64 / self.n_evaluated as f64
        }
    }
}

/// Runs the full evaluation suite against a provider. Models are loaded
/// from `models_dir` when present (as written by `train`), otherwise
/// trained in place.
pub fn run_evaluation(
    provider: &dyn TraceProvider,
    ctx: &RunContext,
    models_dir: Option<&Path>,
) -> Result<EvaluationOutput> {
    let sensors = ctx.cfg.eval_sensors()?;
    let apps = provider.apps();
    let catalog = provider.catalog().clone();
    let scopes = requested_scopes(&ctx.cfg, &catalog, &apps)?;
    let zero_day_sensors = ctx.cfg.zero_day_sensors()?;

    let mut accuracy = Vec::new();
    let mut curves = Vec::new();
    let mut zero_day = Vec::new();
    let mut top_features = Vec::new();

    for &sensor in &sensors {
        let mut group_models: BTreeMap<String, ScopedModel> = BTreeMap::new();
        for scope in &scopes {
            let sm = build_or_load(provider, ctx, sensor, scope, models_dir)?;
            // evaluation targets per scope
            let scope_apps = scope.apps(&catalog)?;
            let s_full = ctx.cfg.eval_s()?;
            for &app in &scope_apps {
                accuracy.push(evaluate(provider, &sm, app, s_full)?);
                if ctx.cfg.eval.subsession_curves
                    && sm.plans.get(&app).and_then(|p| p.n_fba()).is_some()
                {
                    curves.push(subsession_curve(provider, &sm, app)?);
                }
            }
            if scope_apps.len() > 1 {
                accuracy.push(evaluate_avg(provider, &sm, &scope_apps)?);
            }
            for (rank, (col, imp)) in feature_importance(&sm.model, ctx.cfg.eval.top_features)
                .into_iter()
                .enumerate()
            {
                top_features.push((sensor, sm.scope.label(), rank + 1, col.to_string(), imp));
            }
            if let AdversaryScope::Group(name) = &sm.scope {
                group_models.insert(name.clone(), sm);
            }
        }

        if zero_day_sensors.contains(&sensor) {
            for g in catalog.groups() {
                if !g.members.iter().any(|m| apps.contains(m)) {
                    continue;
                }
                for &app in &apps {
                    let in_group = g.members.contains(&app);
                    if in_group {
                        if g.members.len() < 2 {
                            continue; // zero-day undefined for singletons
                        }
                        let report = zero_day_eval(
                            provider,
                            &g.name,
                            app,
                            sensor,
                            &ctx.pipeline,
                            &ctx.element_map,
                        )?;
                        zero_day.push(ZeroDayCell {
                            sensor,
                            train_group: g.name.clone(),
                            eval_app: app.to_string(),
                            eval_app_group: g.name.clone(),
                            within_group: true,
                            n_evaluated: report.n_evaluated,
                            correct: report.correct,
                        });
                    } else {
                        let sm = match group_models.get(&g.name) {
                            Some(m) => m,
                            None => {
                                let built = build_model(
                                    provider,
                                    AdversaryScope::Group(g.name.clone()),
                                    sensor,
                                    &ctx.pipeline,
                                    &ctx.element_map,
                                )?;
                                group_models.entry(g.name.clone()).or_insert(built)
                            }
                        };
                        let report = evaluate(provider, sm, app, None)?;
                        let eval_group = catalog
                            .group_of(app)
                            .map(|x| x.name.clone())
                            .unwrap_or_default();
                        zero_day.push(ZeroDayCell {
                            sensor,
                            train_group: g.name.clone(),
                            eval_app: app.to_string(),
                            eval_app_group: eval_group,
                            within_group: false,
                            n_evaluated: report.n_evaluated,
                            correct: report.correct,
                        });
                    }
                }
            }
        }
    }

    Ok(EvaluationOutput {
        accuracy,
        curves,
        zero_day,
        top_features,
    })
}

fn build_or_load(
    provider: &dyn TraceProvider,
    ctx: &RunContext,
    sensor: SensorGroup,
    scope: &AdversaryScope,
    models_dir: Option<&Path>,
) -> Result<ScopedModel> {
    // A persisted model restores the forest exactly, but the fitted
    // transforms (plans, selection) are cheap and deterministic, so they
    // are rebuilt either way; the stored forest then replaces the refit.
    let mut sm = build_model(
        provider,
        scope.clone(),
        sensor,
        &ctx.pipeline,
        &ctx.element_map,
    )?;
    if let Some(dir) = models_dir {
        let path = dir.join(scope_file_name(sensor, scope));
        if path.is_file() {
            let stored = load_model(&path)?;
            if stored.columns == sm.model.columns && stored.classes == sm.model.classes {
                sm.model = stored;
            }
        }
    }
    Ok(sm)
}

/// Writes the four evaluation reports plus the run manifest.
pub fn cmd_evaluate(ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let provider = ctx.disk_provider()?;
    let models_dir = ctx.out_dir().join("models");
    let models_dir = models_dir.is_dir().then_some(models_dir);
    let output = run_evaluation(&provider, ctx, models_dir.as_deref())?;
    let out = ctx.out_dir();
    ensure_dir(out)?;
    let mut mb = ManifestBuilder::new("evaluate", ctx, provider.fingerprint());
    let written = write_reports(&output, out)?;
    for path in &written {
        mb.add(path)?;
    }
    mb.write(out, "run_manifest.json")?;
    Ok(written)
}

/// Serializes the evaluation output into the four report CSVs.
pub fn write_reports(output: &EvaluationOutput, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    for report in &output.accuracy {
        if !report.is_quantized() {
            return Err(Error::Other(format!(
                "accuracy report for {} / {} is not a whole number of 1/n shares",
                report.scope, report.eval_app
            )));
        }
    }

    let path = out.join("accuracy_table.csv");
    let rows: Vec<Vec<String>> = output
        .accuracy
        .iter()
        .map(|r| {
            let protocol = if r.eval_app == "a_avg" { "avg" } else { "full" };
            accuracy_row(r, protocol)
        })
        .collect();
    write_csv(
        &path,
        &[
            "sensor",
            "scope",
            "eval_app",
            "protocol",
            "s",
            "s_t_seconds",
            "n_evaluated",
            "correct",
            "accuracy",
            "excluded",
        ],
        &rows,
    )?;
    written.push(path);

    let path = out.join("subsession_curves.csv");
    let mut rows = Vec::new();
    for c in &output.curves {
        for p in &c.points {
            rows.push(vec![
                c.sensor.key().to_string(),
                c.scope.clone(),
                c.app.clone(),
                p.s.to_string(),
                p.s_t_seconds.to_string(),
                p.n_evaluated.to_string(),
                p.correct.to_string(),
                p.accuracy().to_string(),
            ]);
        }
    }
    write_csv(
        &path,
        &[
            "sensor",
            "scope",
            "app",
            "s",
            "s_t_seconds",
            "n_evaluated",
            "correct",
            "accuracy",
        ],
        &rows,
    )?;
    written.push(path);

    let path = out.join("zero_day_matrix.csv");
    let rows: Vec<Vec<String>> = output
        .zero_day
        .iter()
        .map(|c| {
            vec![
                c.sensor.key().to_string(),
                c.train_group.clone(),
                c.eval_app.clone(),
                c.eval_app_group.clone(),
                if c.within_group { "within" } else { "cross" }.to_string(),
                c.n_evaluated.to_string(),
                c.correct.to_string(),
                c.accuracy().to_string(),
            ]
        })
        .collect();
    write_csv(
        &path,
        &[
            "sensor",
            "train_group",
            "eval_app",
            "eval_app_group",
            "kind",
            "n_evaluated",
            "correct",
            "accuracy",
        ],
        &rows,
    )?;
    written.push(path);

    let path = out.join("top_features.csv");
    let rows: Vec<Vec<String>> = output
        .top_features
        .iter()
        .map(|(sensor, scope, rank, column, importance)| {
            vec![
                sensor.key().to_string(),
                scope.clone(),
                rank.to_string(),
                column.clone(),
                importance.to_string(),
            ]
        })
        .collect();
    write_csv(
        &path,
        &["sensor", "scope", "rank", "column", "importance"],
        &rows,
    )?;
    written.push(path);

    Ok(written)
}

// -------- sweep-r --------

/// Reruns summarize + train + evaluate for each block-amount ratio and
/// writes a per-ratio summary of table dimensions and mean app accuracy.
pub fn cmd_sweep_r(ctx: &RunContext, values: &[f64]) -> Result<PathBuf> {
    if values.is_empty() {
        return Err(Error::Config("sweep-r needs at least one ratio".into()));
    }
    let provider = ctx.disk_provider()?;
    let out = ctx.out_dir();
    ensure_dir(out)?;
    let mut mb = ManifestBuilder::new("sweep-r", ctx, provider.fingerprint());
    let mut summary_rows = Vec::new();
    for &r in values {
        if !(r > 0.0 && r <= 2.0) {
            return Err(Error::Config(format!("sweep ratio {r} outside (0, 2]")));
        }
        let mut sub = ctx.cfg.clone();
        sub.blocking.mode = "fba".into();
        sub.blocking.r = r;
        sub.dataset.out_dir = out.join("sweep_r").join(format!("r_{r}"));
        let sub_ctx = RunContext::new(sub)?;
        ensure_dir(sub_ctx.out_dir())?;

        let sensors = sub_ctx.cfg.eval_sensors()?;
        for &sensor in &sensors {
            // dimensions: pooled over all apps, mirroring the summary shape
            let mut blocks = 0usize;
            let mut width = 0usize;
            for app in provider.apps() {
                let table = app_block_table(&provider, app, sensor, &sub_ctx.pipeline)?;
                blocks += table.rows.len();
                width = width.max(table.width());
            }
            let output = {
                let mut eval_cfg = sub_ctx.cfg.clone();
                eval_cfg.eval.scopes = vec!["app".into()];
                eval_cfg.eval.subsession_curves = false;
                eval_cfg.eval.zero_day_sensors = Vec::new();
                eval_cfg.eval.sensors = vec![sensor.key().to_string()];
                let eval_ctx = RunContext::new(eval_cfg)?;
                run_evaluation(&provider, &eval_ctx, None)?
            };
            let per_app: Vec<f64> = output
                .accuracy
                .iter()
                .filter(|a| a.eval_app != "a_avg")
                .map(|a| a.accuracy())
                .collect();
            let mean = if per_app.is_empty() {
                0.0
            } else {
                per_app.iter().sum::<f64>() / per_app.len() as f64
            };
            summary_rows.push(vec![
                r.to_string(),
                sensor.key().to_string(),
                blocks.to_string(),
                width.to_string(),
                mean.to_string(),
            ]);
            let mut sub_mb = ManifestBuilder::new("evaluate", &sub_ctx, provider.fingerprint());
            for path in write_reports(&output, sub_ctx.out_dir())? {
                sub_mb.add(&path)?;
            }
            sub_mb.write(sub_ctx.out_dir(), "run_manifest.json")?;
        }
    }
    let path = out.join("sweep_r.csv");
    write_csv(
        &path,
        &["r", "sensor", "blocks", "features", "mean_app_accuracy"],
        &summary_rows,
    )?;
    mb.add(&path)?;
    mb.write(out, "sweep_manifest.json")?;
    Ok(path)
}

// -------- report --------

/// Bundles the known output artifacts into `out/report/` with a manifest.
pub fn cmd_report(ctx: &RunContext) -> Result<PathBuf> {
    let out = ctx.out_dir();
    let bundle = out.join("report");
    ensure_dir(&bundle)?;
    let mut mb = ManifestBuilder::new("report", ctx, String::new());
    let known = [
        "accuracy_table.csv",
        "subsession_curves.csv",
        "zero_day_matrix.csv",
        "top_features.csv",
        "sweep_r.csv",
        "dataset_index.json",
        "run_manifest.json",
    ];
    let mut copied = 0;
    for name in known {
        let src = out.join(name);
        if src.is_file() {
            let dst = bundle.join(name);
            std::fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
            mb.add(&dst)?;
            copied += 1;
        }
    }
    if copied == 0 {
        return Err(Error::Config(format!(
            "nothing to bundle under {} (run `evaluate` first)",
            out.display()
        )));
    }
    mb.write(&bundle, "report_manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn small_cfg(root: &Path, out: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.seed = 11;
        cfg.dataset.root = root.to_path_buf();
        cfg.dataset.out_dir = out.to_path_buf();
        cfg.synth.users = 5;
        cfg.synth.apps = 2;
        cfg.synth.duration_scale = 0.45;
        cfg.eval.sensors = vec!["bm".into()];
        cfg.eval.scopes = vec!["app".into()];
        cfg.eval.zero_day_sensors = Vec::new();
        cfg.eval.subsession_curves = false;
        cfg.classifier.n_estimators_min = 15;
        cfg.classifier.n_estimators_max = 40;
        cfg.classifier.iterations = 2;
        cfg
    }

    #[test]
    fn synth_ingest_summarize_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("data");
        let out = dir.path().join("out");
        let ctx = RunContext::new(small_cfg(&root, &out)).unwrap();

        let written = cmd_synth(&ctx).unwrap();
        assert_eq!(written, 5 * 2 * 2 * 4);
        assert!(root.join("groups.toml").is_file());

        cmd_ingest(&ctx).unwrap();
        assert!(out.join("dataset_index.json").is_file());
        assert!(out
            .join("preprocess/user_1/app_1/session_1/bm.preprocess_log.json")
            .is_file());

        let tables = cmd_summarize(&ctx).unwrap();
        assert_eq!(tables.len(), 2); // bm x 2 apps
        for t in &tables {
            assert!(crate::blocking::sidecar_path(t).is_file());
        }
    }

    #[test]
    fn evaluate_writes_quantized_reports() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("data");
        let out = dir.path().join("out");
        let ctx = RunContext::new(small_cfg(&root, &out)).unwrap();
        cmd_synth(&ctx).unwrap();
        let reports = cmd_evaluate(&ctx).unwrap();
        assert_eq!(reports.len(), 4);
        let table = std::fs::read_to_string(out.join("accuracy_table.csv")).unwrap();
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("sensor,scope,eval_app"));
        let mut data_rows = 0;
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            let n: f64 = cells[6].parse().unwrap();
            let acc: f64 = cells[8].parse().unwrap();
            assert!((acc * n - (acc * n).round()).abs() < 1e-9);
            data_rows += 1;
        }
        assert_eq!(data_rows, 2); // one row per app scope
        assert!(out.join("run_manifest.json").is_file());
    }

    #[test]
    fn report_bundles_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("data");
        let out = dir.path().join("out");
        let ctx = RunContext::new(small_cfg(&root, &out)).unwrap();
        cmd_synth(&ctx).unwrap();
        cmd_evaluate(&ctx).unwrap();
        cmd_report(&ctx).unwrap();
        assert!(out.join("report/accuracy_table.csv").is_file());
        assert!(out.join("report/report_manifest.json").is_file());
    }

    #[test]
    fn report_without_artifacts_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = RunContext::new(small_cfg(&dir.path().join("d"), &dir.path().join("o"))).unwrap();
        assert!(cmd_report(&ctx).is_err());
    }
}
