//! Canonical domain types: users, apps, sensor-group channel schemas, and
//! session traces.
//!
//! Everything here is immutable after construction and safe to share across
//! worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one user in a cohort. Indices are 1-based and stable across
/// apps and sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u_{}", self.0)
    }
}

/// Identifies one app. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AppId(pub u32);

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a_{}", self.0)
    }
}

/// Session number within a user-app pair: 1 is the training session, 2 the
/// evaluation session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionId(pub u8);

impl SessionId {
    pub const TRAIN: SessionId = SessionId(1);
    pub const EVAL: SessionId = SessionId(2);
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "session_{}", self.0)
    }
}

/// One named app group. Groups partition the app set; singleton groups are
/// allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppGroup {
    pub name: String,
    pub members: Vec<AppId>,
}

/// The full app catalog: every app with its group assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppCatalog {
    groups: Vec<AppGroup>,
}

impl AppCatalog {
    /// Builds a catalog, checking that groups partition the app set.
    pub fn new(groups: Vec<AppGroup>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for g in &groups {
            if g.members.is_empty() {
                return Err(Error::Config(format!("app group '{}' is empty", g.name)));
            }
            for a in &g.members {
                if !seen.insert(*a) {
                    return Err(Error::Config(format!(
                        "app {a} appears in more than one group"
                    )));
                }
            }
        }
        Ok(AppCatalog { groups })
    }

    /// The default grouping of the 20-app corpus into eight activity groups.
    pub fn default_twenty() -> Self {
        let g = |name: &str, ids: &[u32]| AppGroup {
            name: name.to_string(),
            members: ids.iter().map(|&i| AppId(i)).collect(),
        };
        AppCatalog {
            groups: vec![
                g("social", &[12, 15, 18]),
                g("flight_simulation", &[3, 19, 20]),
                g("golfing", &[6]),
                g("interactive_navigation", &[2, 9, 10, 11, 16, 17]),
                g("knuckle_walking", &[7]),
                g("rhythm", &[1]),
                g("shooting_archery", &[5, 13, 14]),
                g("teleportation", &[4, 8]),
            ],
        }
    }

    pub fn groups(&self) -> &[AppGroup] {
        &self.groups
    }

    pub fn group_of(&self, app: AppId) -> Option<&AppGroup> {
        self.groups.iter().find(|g| g.members.contains(&app))
    }

    pub fn group_named(&self, name: &str) -> Option<&AppGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// All apps in catalog order (group order, then member order).
    pub fn apps(&self) -> Vec<AppId> {
        let mut v: Vec<AppId> = self.groups.iter().flat_map(|g| g.members.clone()).collect();
        v.sort();
        v
    }

    /// Parses the app-group mapping file format: one `name = [ids]` table.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<u32>> =
            toml::from_str(text).map_err(|e| Error::Config(format!("group file: {e}")))?;
        let groups = raw
            .into_iter()
            .map(|(name, ids)| AppGroup {
                name,
                members: ids.into_iter().map(AppId).collect(),
            })
            .collect();
        AppCatalog::new(groups)
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let ids: Vec<String> = g.members.iter().map(|a| a.0.to_string()).collect();
            out.push_str(&format!("{} = [{}]\n", g.name, ids.join(", ")));
        }
        out
    }
}

/// The four sensor data streams captured on the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorGroup {
    /// Body motion: headset pose plus both controller poses and velocities.
    Bm,
    /// Eye gaze: pose of each eye.
    Eg,
    /// Hand joints: 26 articulated joints per hand.
    Hj,
    /// Facial expression: 63 blend-shape element weights.
    Fe,
}

impl SensorGroup {
    pub const ALL: [SensorGroup; 4] = [
        SensorGroup::Bm,
        SensorGroup::Eg,
        SensorGroup::Hj,
        SensorGroup::Fe,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SensorGroup::Bm => "bm",
            SensorGroup::Eg => "eg",
            SensorGroup::Hj => "hj",
            SensorGroup::Fe => "fe",
        }
    }

    pub fn from_key(s: &str) -> Option<SensorGroup> {
        match s {
            "bm" => Some(SensorGroup::Bm),
            "eg" => Some(SensorGroup::Eg),
            "hj" => Some(SensorGroup::Hj),
            "fe" => Some(SensorGroup::Fe),
            _ => None,
        }
    }

    /// Number of channels in the raw schema: 33 / 14 / 364 / 63.
    pub fn channel_count(self) -> usize {
        match self {
            SensorGroup::Bm => 33,
            SensorGroup::Eg => 14,
            SensorGroup::Hj => 364,
            SensorGroup::Fe => 63,
        }
    }

    /// Ordered channel names for the raw schema.
    ///
    /// BM: headset pos(3)+quat(4), then per controller (left, right)
    /// pos(3)+quat(4)+linear velocity(3)+angular velocity(3).
    /// EG: per eye (left, right) pos(3)+quat(4).
    /// HJ: per hand (left, right), 26 joints of pos(3)+quat(4).
    /// FE: elements 1..=63, each a blend-shape weight.
    pub fn channel_names(self) -> Vec<String> {
        let pos = ["pos_x", "pos_y", "pos_z"];
        let quat = ["quat_x", "quat_y", "quat_z", "quat_w"];
        let vel = ["linvel_x", "linvel_y", "linvel_z"];
        let ang = ["angvel_x", "angvel_y", "angvel_z"];
        let mut names = Vec::with_capacity(self.channel_count());
        match self {
            SensorGroup::Bm => {
                for a in pos.iter().chain(quat.iter()) {
                    names.push(format!("headset_{a}"));
                }
                for side in ["left_controller", "right_controller"] {
                    for a in pos
                        .iter()
                        .chain(quat.iter())
                        .chain(vel.iter())
                        .chain(ang.iter())
                    {
                        names.push(format!("{side}_{a}"));
                    }
                }
            }
            SensorGroup::Eg => {
                for side in ["eye_l", "eye_r"] {
                    for a in pos.iter().chain(quat.iter()) {
                        names.push(format!("{side}_{a}"));
                    }
                }
            }
            SensorGroup::Hj => {
                for side in ["hand_l", "hand_r"] {
                    for j in 1..=26 {
                        for a in pos.iter().chain(quat.iter()) {
                            names.push(format!("{side}_j{j:02}_{a}"));
                        }
                    }
                }
            }
            SensorGroup::Fe => {
                for e in 1..=63 {
                    names.push(format!("fe_e{e:02}"));
                }
            }
        }
        debug_assert_eq!(names.len(), self.channel_count());
        names
    }

    /// Channel indices that hold quaternion components, grouped per
    /// quaternion in (x, y, z, w) order. Used by trace validation.
    pub fn quaternion_slots(self) -> Vec<[usize; 4]> {
        let names = self.channel_names();
        let mut slots = Vec::new();
        let mut i = 0;
        while i < names.len() {
            if names[i].ends_with("quat_x") {
                slots.push([i, i + 1, i + 2, i + 3]);
                i += 4;
            } else {
                i += 1;
            }
        }
        slots
    }
}

impl fmt::Display for SensorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorGroup::Bm => "BM",
            SensorGroup::Eg => "EG",
            SensorGroup::Hj => "HJ",
            SensorGroup::Fe => "FE",
        })
    }
}

/// One user x app x session multi-channel time series for one sensor group.
///
/// `channels` may be a subset of the raw schema after preprocessing removes
/// invalid columns, and may extend beyond it after eye-gaze augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub user: UserId,
    pub app: AppId,
    pub session: SessionId,
    pub group: SensorGroup,
    pub channels: Vec<String>,
    /// Millisecond timestamps, strictly increasing after preprocessing.
    pub timestamps_ms: Vec<i64>,
    /// Row-major samples: `values[i][c]` is channel `c` at timestamp `i`.
    pub values: Vec<Vec<f64>>,
}

impl SessionTrace {
    pub fn len(&self) -> usize {
        self.timestamps_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ms.is_empty()
    }

    /// Session duration in seconds (last minus first timestamp).
    pub fn duration_s(&self) -> f64 {
        if self.timestamps_ms.len() < 2 {
            return 0.0;
        }
        (self.timestamps_ms[self.timestamps_ms.len() - 1] - self.timestamps_ms[0]) as f64 / 1000.0
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warn,
    Error,
}

/// One diagnostic produced by [`validate_trace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub severity: Severity,
    pub detail: String,
}

impl Violation {
    fn warn(rule: &str, detail: String) -> Self {
        Violation {
            rule: rule.to_string(),
            severity: Severity::Warn,
            detail,
        }
    }
    fn error(rule: &str, detail: String) -> Self {
        Violation {
            rule: rule.to_string(),
            severity: Severity::Error,
            detail,
        }
    }
}

/// Diagnostic pass over a raw trace. An empty result means the trace is
/// clean. Duplicate timestamps, FE values outside [0, 1], and quaternion
/// norms further than `quat_tolerance` from 1 are warnings (they are
/// repairable or tolerated downstream); schema mismatches and decreasing
/// timestamps are errors.
pub fn validate_trace(trace: &SessionTrace, quat_tolerance: f64) -> Vec<Violation> {
    let mut out = Vec::new();

    let expected = trace.group.channel_count();
    if trace.channels.len() != expected {
        out.push(Violation::error(
            "schema mismatch",
            format!(
                "{} trace has {} channels, schema defines {}",
                trace.group,
                trace.channels.len(),
                expected
            ),
        ));
    }
    for (i, row) in trace.values.iter().enumerate() {
        if row.len() != trace.channels.len() {
            out.push(Violation::error(
                "schema mismatch",
                format!(
                    "sample {i} has {} values, expected {}",
                    row.len(),
                    trace.channels.len()
                ),
            ));
            break;
        }
    }

    for w in trace.timestamps_ms.windows(2) {
        if w[1] == w[0] {
            out.push(Violation::warn(
                "duplicate timestamp",
                format!("timestamp {} repeats", w[0]),
            ));
        } else if w[1] < w[0] {
            out.push(Violation::error(
                "non-monotone timestamps",
                format!("timestamp {} follows {}", w[1], w[0]),
            ));
        }
    }

    if trace.group == SensorGroup::Fe && trace.channels.len() == expected {
        'fe: for (i, row) in trace.values.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v.is_finite() && !(0.0..=1.0).contains(&v) {
                    out.push(Violation::warn(
                        "FE out of [0,1]",
                        format!("element {} value {} at sample {}", c + 1, v, i),
                    ));
                    break 'fe; // one representative warning is enough
                }
            }
        }
    }

    if trace.channels.len() == expected {
        let slots = trace.group.quaternion_slots();
        'quat: for slot in &slots {
            for row in &trace.values {
                let n = (row[slot[0]].powi(2)
                    + row[slot[1]].powi(2)
                    + row[slot[2]].powi(2)
                    + row[slot[3]].powi(2))
                .sqrt();
                if n.is_finite() && (n - 1.0).abs() > quat_tolerance {
                    out.push(Violation::warn(
                        "non-unit quaternion",
                        format!("norm {n:.4} on channel {}", trace.channels[slot[0]]),
                    ));
                    continue 'quat;
                }
            }
        }
    }

    out
}

/// Default facial element-to-Action-Unit map and emotion element sets,
/// shipped as data. The 63 elements (1-based, blend-shape order) map onto
/// 31 distinct Action Units; the six emotions resolve to 25 distinct
/// elements in total.
const DEFAULT_ELEMENT_MAP: &str = r#"
[au_map]
# brow
1 = 4
2 = 4
23 = 1
24 = 1
58 = 2
59 = 2
# eyes and lids
13 = 43
14 = 43
15 = 64
16 = 64
17 = 61
18 = 61
19 = 62
20 = 62
21 = 63
22 = 63
29 = 7
30 = 7
60 = 5
61 = 5
# cheeks and nose
3 = 33
4 = 33
5 = 6
6 = 6
7 = 35
8 = 35
56 = 9
57 = 9
# jaw
25 = 26
26 = 30
27 = 30
28 = 29
# mouth and lips
9 = 17
10 = 17
11 = 14
12 = 14
31 = 15
32 = 15
33 = 12
34 = 12
35 = 22
36 = 22
37 = 22
38 = 22
39 = 24
40 = 24
41 = 18
42 = 18
43 = 20
44 = 20
45 = 28
46 = 28
47 = 28
48 = 28
49 = 23
50 = 23
51 = 8
52 = 16
53 = 16
54 = 13
55 = 13
62 = 10
63 = 10

# Emotion element sets follow the standard AU combinations routed through
# the map above. Sets other than happiness are approximate.
[emotions]
happiness = [5, 6, 33, 34]
surprise = [23, 24, 58, 59, 60, 61, 25]
anger = [1, 2, 60, 61, 29, 30, 49, 50]
disgust = [56, 57, 31, 32, 52, 53]
fear = [23, 24, 58, 59, 1, 2, 60, 61, 29, 30, 43, 44, 25]
sadness = [23, 24, 1, 2, 31, 32]
"#;

/// Facial element metadata: element index -> Action Unit id, plus
/// emotion -> element set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementMap {
    pub au_map: BTreeMap<u8, u8>,
    pub emotions: BTreeMap<String, Vec<u8>>,
}

impl ElementMap {
    pub fn default_map() -> Self {
        Self::from_toml(DEFAULT_ELEMENT_MAP).expect("builtin element map parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            au_map: BTreeMap<String, u8>,
            emotions: BTreeMap<String, Vec<u8>>,
        }
        let raw: Raw =
            toml::from_str(text).map_err(|e| Error::Config(format!("element map: {e}")))?;
        let mut au_map = BTreeMap::new();
        for (k, v) in raw.au_map {
            let e: u8 = k
                .parse()
                .map_err(|_| Error::Config(format!("element map: bad element index '{k}'")))?;
            au_map.insert(e, v);
        }
        let map = ElementMap {
            au_map,
            emotions: raw.emotions,
        };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        for e in 1..=63u8 {
            if !self.au_map.contains_key(&e) {
                return Err(Error::Config(format!("element map: element {e} unmapped")));
            }
        }
        if self.au_map.keys().any(|&e| e == 0 || e > 63) {
            return Err(Error::Config(
                "element map: element index out of 1..=63".into(),
            ));
        }
        for (name, elems) in &self.emotions {
            if elems.is_empty() {
                return Err(Error::EmptyEmotion(name.clone()));
            }
            if elems.iter().any(|&e| e == 0 || e > 63) {
                return Err(Error::Config(format!(
                    "element map: emotion '{name}' references element outside 1..=63"
                )));
            }
        }
        Ok(())
    }

    /// Elements for one emotion, sorted ascending.
    pub fn emotion_elements(&self, emotion: &str) -> Result<Vec<u8>> {
        let mut v = self
            .emotions
            .get(emotion)
            .ok_or_else(|| Error::UnknownEmotion(emotion.to_string()))?
            .clone();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptyEmotion(emotion.to_string()));
        }
        Ok(v)
    }

    /// Union of every emotion's elements, sorted ascending.
    pub fn all_emotion_elements(&self) -> Vec<u8> {
        let mut set = BTreeSet::new();
        for elems in self.emotions.values() {
            set.extend(elems.iter().copied());
        }
        set.into_iter().collect()
    }

    pub fn distinct_aus(&self) -> usize {
        self.au_map.values().collect::<BTreeSet<_>>().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm_trace(samples: usize) -> SessionTrace {
        let names = SensorGroup::Bm.channel_names();
        let mut values = Vec::new();
        for i in 0..samples {
            let mut row = vec![0.5; names.len()];
            // make quaternions unit
            for slot in SensorGroup::Bm.quaternion_slots() {
                row[slot[0]] = 0.0;
                row[slot[1]] = 0.0;
                row[slot[2]] = 0.0;
                row[slot[3]] = 1.0;
            }
            row[0] = i as f64 * 0.01;
            values.push(row);
        }
        SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Bm,
            channels: names,
            timestamps_ms: (0..samples as i64).map(|i| i * 10).collect(),
            values,
        }
    }

    #[test]
    fn channel_counts_match_schema() {
        assert_eq!(SensorGroup::Bm.channel_count(), 33);
        assert_eq!(SensorGroup::Eg.channel_count(), 14);
        assert_eq!(SensorGroup::Hj.channel_count(), 364);
        assert_eq!(SensorGroup::Fe.channel_count(), 63);
        for g in SensorGroup::ALL {
            assert_eq!(g.channel_names().len(), g.channel_count());
        }
    }

    #[test]
    fn bm_layout_headset_then_controllers() {
        let names = SensorGroup::Bm.channel_names();
        assert_eq!(names[0], "headset_pos_x");
        assert_eq!(names[1], "headset_pos_y");
        assert_eq!(names[6], "headset_quat_w");
        assert_eq!(names[7], "left_controller_pos_x");
        assert_eq!(names[20], "right_controller_pos_x");
        assert_eq!(names[32], "right_controller_angvel_z");
    }

    #[test]
    fn well_formed_trace_validates_clean() {
        let t = bm_trace(5);
        assert!(validate_trace(&t, 0.05).is_empty());
    }

    #[test]
    fn duplicate_timestamp_is_a_warning() {
        let mut t = bm_trace(3);
        t.timestamps_ms = vec![10, 10, 20];
        let v = validate_trace(&t, 0.05);
        assert!(v
            .iter()
            .any(|x| x.rule == "duplicate timestamp" && x.severity == Severity::Warn));
    }

    #[test]
    fn fe_out_of_range_is_a_warning() {
        let names = SensorGroup::Fe.channel_names();
        let mut row = vec![0.2; 63];
        row[11] = 1.3; // element 12
        let t = SessionTrace {
            user: UserId(1),
            app: AppId(1),
            session: SessionId::TRAIN,
            group: SensorGroup::Fe,
            channels: names,
            timestamps_ms: vec![0, 10],
            values: vec![row.clone(), row],
        };
        let v = validate_trace(&t, 0.05);
        assert!(v
            .iter()
            .any(|x| x.rule == "FE out of [0,1]" && x.severity == Severity::Warn));
    }

    #[test]
    fn non_unit_quaternion_warns_beyond_tolerance() {
        let mut t = bm_trace(2);
        // scale headset quaternion to norm 1.2
        for row in &mut t.values {
            row[6] = 1.2;
        }
        let v = validate_trace(&t, 0.05);
        assert!(v.iter().any(|x| x.rule == "non-unit quaternion"));
    }

    #[test]
    fn decreasing_timestamps_are_errors() {
        let mut t = bm_trace(3);
        t.timestamps_ms = vec![10, 30, 20];
        let v = validate_trace(&t, 0.05);
        assert!(v
            .iter()
            .any(|x| x.rule == "non-monotone timestamps" && x.severity == Severity::Error));
    }

    #[test]
    fn default_catalog_partitions_twenty_apps() {
        let cat = AppCatalog::default_twenty();
        let apps = cat.apps();
        assert_eq!(apps.len(), 20);
        for a in apps {
            assert!(cat.group_of(a).is_some());
        }
        // singleton groups exist
        assert_eq!(cat.group_named("golfing").unwrap().members.len(), 1);
    }

    #[test]
    fn catalog_rejects_duplicate_membership() {
        let groups = vec![
            AppGroup {
                name: "a".into(),
                members: vec![AppId(1), AppId(2)],
            },
            AppGroup {
                name: "b".into(),
                members: vec![AppId(2)],
            },
        ];
        assert!(AppCatalog::new(groups).is_err());
    }

    #[test]
    fn default_element_map_invariants() {
        let m = ElementMap::default_map();
        assert_eq!(m.au_map.len(), 63);
        assert_eq!(m.distinct_aus(), 31);
        assert_eq!(m.emotions.len(), 6);
        assert_eq!(m.emotion_elements("happiness").unwrap(), vec![5, 6, 33, 34]);
        assert_eq!(m.all_emotion_elements().len(), 25);
    }

    #[test]
    fn unknown_emotion_is_an_error() {
        let m = ElementMap::default_map();
        assert!(matches!(
            m.emotion_elements("boredom"),
            Err(Error::UnknownEmotion(_))
        ));
    }

    #[test]
    fn catalog_toml_round_trip() {
        let cat = AppCatalog::default_twenty();
        let text = cat.to_toml();
        let back = AppCatalog::from_toml(&text).unwrap();
        assert_eq!(back.apps(), cat.apps());
        assert_eq!(
            back.group_of(AppId(15)).unwrap().name,
            cat.group_of(AppId(15)).unwrap().name
        );
    }
}
