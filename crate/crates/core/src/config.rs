//! Run configuration: a single TOML file with one section per pipeline
//! stage. Flags on the CLI override individual fields. Unknown keys are
//! rejected so typos surface as config errors with line positions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::SensorGroup;
use crate::error::{Error, Result};

/// How a trace is divided into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BlockMode {
    /// Fixed block amount: the number of blocks per app is `r * N_j` where
    /// `N_j` is the floor of the app's mean session duration in seconds.
    Fba { r: f64 },
    /// Fixed block length in seconds.
    Fbl { length_s: f64 },
}

/// Random-forest hyperparameter search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfGrid {
    pub n_estimators: (u32, u32),
    pub max_depth: (u32, u32),
    pub iterations: u32,
}

impl Default for RfGrid {
    fn default() -> Self {
        RfGrid {
            n_estimators: (50, 200),
            max_depth: (1, 20),
            iterations: 5,
        }
    }
}

/// Thresholds used by validation and block post-processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Quaternion norms further than this from 1 draw a validation warning.
    pub quat_norm: f64,
    /// A block whose raw samples are all-zero in more than this fraction is
    /// removed as invalid.
    pub zero_block_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quat_norm: 0.05,
            zero_block_fraction: 0.8,
        }
    }
}

/// Which facial-expression feature subset a model trains on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeMethod {
    All,
    AllEmotions,
    Emotion(String),
}

impl FeMethod {
    pub fn parse(s: &str) -> Result<FeMethod> {
        match s {
            "all" => Ok(FeMethod::All),
            "all-emotions" => Ok(FeMethod::AllEmotions),
            other => match other.strip_prefix("emotion:") {
                Some(name) if !name.is_empty() => Ok(FeMethod::Emotion(name.to_string())),
                _ => Err(Error::Config(format!(
                    "fe_method must be 'all', 'all-emotions', or 'emotion:<name>', got '{s}'"
                ))),
            },
        }
    }

    pub fn as_string(&self) -> String {
        match self {
            FeMethod::All => "all".into(),
            FeMethod::AllEmotions => "all-emotions".into(),
            FeMethod::Emotion(n) => format!("emotion:{n}"),
        }
    }
}

/// Resolved pipeline parameters shared by all stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub block_mode: BlockMode,
    pub grid: RfGrid,
    pub cv_folds: u32,
    pub train_fraction: f64,
    pub seed: u64,
    pub hj_top_k: usize,
    pub fe_method: FeMethod,
    pub tolerances: Tolerances,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            block_mode: BlockMode::Fba { r: 1.0 },
            grid: RfGrid::default(),
            cv_folds: 5,
            train_fraction: 0.9,
            seed: 7,
            hj_top_k: 500,
            fe_method: FeMethod::All,
            tolerances: Tolerances::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        match self.block_mode {
            BlockMode::Fba { r } => {
                if !(r > 0.0 && r <= 2.0) {
                    return Err(Error::Config(format!(
                        "blocking r must be in (0, 2], got {r}"
                    )));
                }
            }
            BlockMode::Fbl { length_s } => {
                if !(length_s > 0.0) {
                    return Err(Error::Config(format!(
                        "fbl_length_s must be positive, got {length_s}"
                    )));
                }
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(format!(
                "cv_folds must be at least 2, got {}",
                self.cv_folds
            )));
        }
        if self.grid.iterations == 0 {
            return Err(Error::Config("grid iterations must be at least 1".into()));
        }
        if self.grid.n_estimators.0 > self.grid.n_estimators.1
            || self.grid.n_estimators.0 == 0
            || self.grid.max_depth.0 > self.grid.max_depth.1
            || self.grid.max_depth.0 == 0
        {
            return Err(Error::Config("malformed rf grid ranges".into()));
        }
        if self.hj_top_k == 0 {
            return Err(Error::Config("hj_top_k must be positive".into()));
        }
        Ok(())
    }
}

// -------- file-level schema --------

fn default_r() -> f64 {
    1.0
}
fn default_fbl() -> f64 {
    1.0
}
fn default_hj_top_k() -> usize {
    500
}
fn default_fe_method() -> String {
    "all".into()
}
fn default_train_fraction() -> f64 {
    0.9
}
fn default_cv_folds() -> u32 {
    5
}
fn default_seed() -> u64 {
    7
}
fn default_sensors() -> Vec<String> {
    vec!["bm".into(), "eg".into(), "hj".into(), "fe".into()]
}
fn default_scopes() -> Vec<String> {
    vec!["app".into(), "group".into(), "universal".into()]
}
fn default_zero_day_sensors() -> Vec<String> {
    vec!["bm".into()]
}
fn default_true() -> bool {
    true
}
fn default_users() -> u32 {
    20
}
fn default_apps() -> u32 {
    8
}
fn default_mode() -> String {
    "distinct".into()
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub root: PathBuf,
    pub out_dir: PathBuf,
    pub groups_file: Option<PathBuf>,
    pub element_map_file: Option<PathBuf>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            root: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            groups_file: None,
            element_map_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    #[serde(default = "default_users")]
    pub users: u32,
    #[serde(default = "default_apps")]
    pub apps: u32,
    /// Cohort mode: distinct | clone | vary-height | vary-ipd.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Multiplier on every per-channel noise sigma.
    #[serde(default = "default_scale")]
    pub noise_scale: f64,
    /// Multiplier on nominal session durations.
    #[serde(default = "default_scale")]
    pub duration_scale: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            users: default_users(),
            apps: default_apps(),
            mode: default_mode(),
            noise_scale: 1.0,
            duration_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockingSection {
    /// "fba" or "fbl".
    #[serde(default = "default_mode_fba")]
    pub mode: String,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_fbl")]
    pub fbl_length_s: f64,
}

fn default_mode_fba() -> String {
    "fba".into()
}

impl Default for BlockingSection {
    fn default() -> Self {
        BlockingSection {
            mode: "fba".into(),
            r: 1.0,
            fbl_length_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesSection {
    #[serde(default = "default_hj_top_k")]
    pub hj_top_k: usize,
    #[serde(default = "default_fe_method")]
    pub fe_method: String,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            hj_top_k: 500,
            fe_method: "all".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    #[serde(default = "default_n_min")]
    pub n_estimators_min: u32,
    #[serde(default = "default_n_max")]
    pub n_estimators_max: u32,
    #[serde(default = "default_d_min")]
    pub max_depth_min: u32,
    #[serde(default = "default_d_max")]
    pub max_depth_max: u32,
    #[serde(default = "default_iters")]
    pub iterations: u32,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: u32,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_n_min() -> u32 {
    50
}
fn default_n_max() -> u32 {
    200
}
fn default_d_min() -> u32 {
    1
}
fn default_d_max() -> u32 {
    20
}
fn default_iters() -> u32 {
    5
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            n_estimators_min: 50,
            n_estimators_max: 200,
            max_depth_min: 1,
            max_depth_max: 20,
            iterations: 5,
            cv_folds: 5,
            train_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_sensors")]
    pub sensors: Vec<String>,
    /// Scope kinds to train and evaluate: app | group | universal.
    #[serde(default = "default_scopes")]
    pub scopes: Vec<String>,
    /// Sensor groups for which the zero-day matrix is produced.
    #[serde(default = "default_zero_day_sensors")]
    pub zero_day_sensors: Vec<String>,
    #[serde(default = "default_true")]
    pub subsession_curves: bool,
    /// Number of top features per model in the top-features report.
    #[serde(default = "default_top_k")]
    pub top_features: usize,
    /// Sub-session length for the accuracy table: "max" or a block count.
    #[serde(default = "default_s")]
    pub s: String,
}

fn default_s() -> String {
    "max".into()
}

fn default_top_k() -> usize {
    3
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            sensors: default_sensors(),
            scopes: default_scopes(),
            zero_day_sensors: default_zero_day_sensors(),
            subsession_curves: true,
            top_features: 3,
            s: "max".into(),
        }
    }
}

/// Top-level run configuration as read from the config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 means one per core. Outputs do not depend on this.
    pub jobs: usize,
    pub dataset: DatasetSection,
    pub synth: SynthSection,
    pub blocking: BlockingSection,
    pub features: FeaturesSection,
    pub classifier: ClassifierSection,
    pub eval: EvalSection,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        cfg.pipeline()?; // validate eagerly
        cfg.eval_sensors()?;
        cfg.eval_s()?;
        Ok(cfg)
    }

    /// Resolves the validated pipeline parameters.
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let block_mode = match self.blocking.mode.as_str() {
            "fba" => BlockMode::Fba { r: self.blocking.r },
            "fbl" => BlockMode::Fbl {
                length_s: self.blocking.fbl_length_s,
            },
            other => {
                return Err(Error::Config(format!(
                    "blocking mode must be 'fba' or 'fbl', got '{other}'"
                )))
            }
        };
        let cfg = PipelineConfig {
            block_mode,
            grid: RfGrid {
                n_estimators: (
                    self.classifier.n_estimators_min,
                    self.classifier.n_estimators_max,
                ),
                max_depth: (self.classifier.max_depth_min, self.classifier.max_depth_max),
                iterations: self.classifier.iterations,
            },
            cv_folds: self.classifier.cv_folds,
            train_fraction: self.classifier.train_fraction,
            seed: self.seed,
            hj_top_k: self.features.hj_top_k,
            fe_method: FeMethod::parse(&self.features.fe_method)?,
            tolerances: self.tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn eval_sensors(&self) -> Result<Vec<SensorGroup>> {
        parse_sensors(&self.eval.sensors)
    }

    pub fn zero_day_sensors(&self) -> Result<Vec<SensorGroup>> {
        parse_sensors(&self.eval.zero_day_sensors)
    }

    /// Sub-session block count for the accuracy table (None = whole
    /// evaluation session).
    pub fn eval_s(&self) -> Result<Option<u32>> {
        if self.eval.s == "max" {
            return Ok(None);
        }
        self.eval.s.parse::<u32>().map(Some).map_err(|_| {
            Error::Config(format!(
                "eval s must be 'max' or a block count, got '{}'",
                self.eval.s
            ))
        })
    }

    /// Stable hash of the configuration, recorded in run manifests.
    pub fn config_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex::encode(&h.finalize()[..16])
    }
}

pub fn parse_sensors(keys: &[String]) -> Result<Vec<SensorGroup>> {
    let mut out = Vec::new();
    for k in keys {
        if k == "all" {
            return Ok(SensorGroup::ALL.to_vec());
        }
        let g = SensorGroup::from_key(k)
            .ok_or_else(|| Error::Config(format!("unknown sensor group '{k}'")))?;
        if !out.contains(&g) {
            out.push(g);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        let p = cfg.pipeline().unwrap();
        assert_eq!(p.hj_top_k, 500);
        assert_eq!(p.cv_folds, 5);
        assert!(matches!(p.block_mode, BlockMode::Fba { r } if r == 1.0));
        assert_eq!(p.grid.n_estimators, (50, 200));
        assert_eq!(p.grid.max_depth, (1, 20));
    }

    #[test]
    fn rejects_out_of_range_r() {
        let text = "[blocking]\nmode = \"fba\"\nr = 2.5\n";
        assert!(RunConfig::from_toml(text).is_err());
        let text = "[blocking]\nmode = \"fba\"\nr = 0.0\n";
        assert!(RunConfig::from_toml(text).is_err());
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = "[blocking]\nmoed = \"fba\"\n";
        let err = RunConfig::from_toml(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("moed") || msg.contains("line"), "got: {msg}");
    }

    #[test]
    fn fe_method_parse_forms() {
        assert_eq!(FeMethod::parse("all").unwrap(), FeMethod::All);
        assert_eq!(
            FeMethod::parse("all-emotions").unwrap(),
            FeMethod::AllEmotions
        );
        assert_eq!(
            FeMethod::parse("emotion:happiness").unwrap(),
            FeMethod::Emotion("happiness".into())
        );
        assert!(FeMethod::parse("emotion:").is_err());
        assert!(FeMethod::parse("bogus").is_err());
    }

    #[test]
    fn config_hash_stable_and_sensitive() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = RunConfig::default();
        c.seed = 8;
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
