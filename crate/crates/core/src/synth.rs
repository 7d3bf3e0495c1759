//! Deterministic synthetic-user trace generator.
//!
//! Each user profile carries the physical parameters that drive the
//! identity signal: height (headset pos-y baseline), inter-pupillary
//! distance (eye pos-y separation), horizontal head range, hand geometry,
//! facial resting weights with per-emotion gains, motion tempo, and noise
//! level. App archetypes supply activity templates on a normalized
//! progress axis, so users completing the same script at different paces
//! produce time-scaled versions of the same signal; archetypes in the same
//! synthetic group share their posture and gain mappings while groups
//! differ, which is what makes within-group transfer work and cross-group
//! transfer fail.
//!
//! Everything derives from (profiles, archetype, session, seed): the same
//! inputs regenerate byte-identical traces.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    AppCatalog, AppGroup, AppId, ElementMap, SensorGroup, SessionId, SessionTrace, UserId,
};
use crate::error::{Error, Result};
use crate::ingest::TraceProvider;
use crate::seeding::derive_rng;

pub const EMOTIONS: [&str; 6] = [
    "happiness",
    "surprise",
    "anger",
    "disgust",
    "fear",
    "sadness",
];

/// Plausible parameter ranges a cohort is drawn from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamRanges {
    pub height_m: (f64, f64),
    pub ipd_m: (f64, f64),
    pub head_range_m: (f64, f64),
    pub hand_scale: (f64, f64),
    pub tempo_hz: (f64, f64),
    /// Per-user response amplitude to app activity.
    pub amplitude: (f64, f64),
    /// Per-user response to individual script segments.
    pub segment_response: (f64, f64),
    /// Per-user intensity of scripted action bursts.
    pub burst_gain: (f64, f64),
    /// Amplitude range of the per-user script-path harmonics.
    pub path_wave: (f64, f64),
    pub emotion_gain: (f64, f64),
    /// Spread of per-element facial resting weights around the base face.
    pub face_jitter: f64,
    /// Spread of per-joint rest offsets (meters).
    pub joint_jitter_m: f64,
    /// Per-channel Gaussian sigma per sensor group (BM, EG, HJ, FE order).
    pub noise_sigma: [f64; 4],
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            height_m: (1.50, 1.90),
            ipd_m: (0.054, 0.072),
            head_range_m: (0.15, 0.45),
            hand_scale: (0.85, 1.15),
            tempo_hz: (0.8, 1.3),
            amplitude: (0.75, 1.25),
            segment_response: (0.7, 1.3),
            burst_gain: (0.6, 1.4),
            path_wave: (-1.0, 1.0),
            emotion_gain: (0.6, 1.4),
            face_jitter: 0.10,
            joint_jitter_m: 0.008,
            noise_sigma: [0.0045, 0.0012, 0.003, 0.012],
        }
    }
}

/// How profile parameters vary across the cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CohortMode {
    /// Every parameter drawn from its range.
    Distinct,
    /// All profiles identical (range midpoints); only noise differs.
    Clone,
    /// Only height varies; everything else at midpoint.
    VaryHeight,
    /// Only inter-pupillary distance varies.
    VaryIpd,
}

impl CohortMode {
    pub fn parse(s: &str) -> Result<CohortMode> {
        match s {
            "distinct" => Ok(CohortMode::Distinct),
            "clone" => Ok(CohortMode::Clone),
            "vary-height" => Ok(CohortMode::VaryHeight),
            "vary-ipd" => Ok(CohortMode::VaryIpd),
            other => Err(Error::Config(format!("unknown cohort mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: u32,
    pub mode: CohortMode,
    pub ranges: ParamRanges,
    pub noise_scale: f64,
}

impl CohortSpec {
    pub fn new(n: u32, mode: CohortMode) -> Self {
        CohortSpec {
            n,
            mode,
            ranges: ParamRanges::default(),
            noise_scale: 1.0,
        }
    }
}

/// One synthetic user's physical and behavioral parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: UserId,
    pub height_m: f64,
    pub ipd_m: f64,
    pub head_range_m: f64,
    pub hand_scale: f64,
    pub tempo_hz: f64,
    pub amplitude: f64,
    /// How strongly the user responds to each quarter of the activity
    /// script; an identity signal that only aligned blocks can read.
    pub segment_response: Vec<f64>,
    /// Intensity of the user's reaction to scripted burst events.
    pub burst_gain: f64,
    /// Harmonic coefficients (amplitude, phase) x3 of the user's movement
    /// profile along the script, the idiosyncratic path through the
    /// activity that aligned blocks resample at identical positions.
    pub path_wave: Vec<f64>,
    /// Per-joint radial rest offsets, left then right hand (26 each).
    pub joint_offsets_m: Vec<f64>,
    /// Resting blend-shape weights, elements 1..=63.
    pub face_baseline: Vec<f64>,
    /// Gain per emotion, in [`EMOTIONS`] order.
    pub emotion_gains: Vec<f64>,
    /// Per-channel Gaussian sigma per sensor group (BM, EG, HJ, FE order).
    pub noise_sigma: [f64; 4],
}

fn mid(range: (f64, f64)) -> f64 {
    (range.0 + range.1) / 2.0
}

fn draw(rng: &mut rand_chacha::ChaCha8Rng, range: (f64, f64), vary: bool) -> f64 {
    // always consume one draw so streams stay aligned across modes
    let v = rng.gen_range(range.0..=range.1);
    if vary {
        v
    } else {
        mid(range)
    }
}

/// Base resting face: mild asymmetric weights, deterministic per element.
fn base_face(element: usize) -> f64 {
    0.12 + 0.08 * ((element as f64 * 0.61803).sin().abs())
}

/// Generates `n` user profiles. In `Distinct` mode parameters are drawn
/// from the configured ranges; `Clone` collapses everything to midpoints
/// so only noise separates users.
pub fn generate_cohort(spec: &CohortSpec, seed: u64) -> Result<Vec<UserProfile>> {
    if spec.n < 2 {
        return Err(Error::InvalidParam(format!(
            "cohort needs at least 2 users, got {}",
            spec.n
        )));
    }
    let r = &spec.ranges;
    let vary_all = spec.mode == CohortMode::Distinct;
    let mut out = Vec::with_capacity(spec.n as usize);
    for u in 1..=spec.n {
        let mut rng = derive_rng(seed, "profile", &[u as u64]);
        let height = draw(
            &mut rng,
            r.height_m,
            vary_all || spec.mode == CohortMode::VaryHeight,
        );
        let ipd = draw(
            &mut rng,
            r.ipd_m,
            vary_all || spec.mode == CohortMode::VaryIpd,
        );
        let head_range = draw(&mut rng, r.head_range_m, vary_all);
        let hand_scale = draw(&mut rng, r.hand_scale, vary_all);
        let tempo = draw(&mut rng, r.tempo_hz, vary_all);
        let amplitude = draw(&mut rng, r.amplitude, vary_all);
        let segment_response = (0..4)
            .map(|_| draw(&mut rng, r.segment_response, vary_all))
            .collect();
        let burst_gain = draw(&mut rng, r.burst_gain, vary_all);
        let path_wave = (0..3)
            .flat_map(|_| {
                let a = draw(&mut rng, r.path_wave, vary_all);
                let p = rng.gen_range(0.0..std::f64::consts::TAU);
                [a, if vary_all { p } else { 0.0 }]
            })
            .collect();
        let joint_offsets = (0..52)
            .map(|_| {
                let v = rng.gen_range(-r.joint_jitter_m..=r.joint_jitter_m);
                if vary_all {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        let face_baseline = (1..=63)
            .map(|e| {
                let v = rng.gen_range(-r.face_jitter..=r.face_jitter);
                let jitter = if vary_all { v } else { 0.0 };
                (base_face(e) + jitter).clamp(0.02, 0.85)
            })
            .collect();
        let emotion_gains = (0..EMOTIONS.len())
            .map(|_| draw(&mut rng, r.emotion_gain, vary_all))
            .collect();
        out.push(UserProfile {
            user: UserId(u),
            height_m: height,
            ipd_m: ipd,
            head_range_m: head_range,
            hand_scale,
            tempo_hz: tempo,
            amplitude,
            segment_response,
            burst_gain,
            path_wave,
            joint_offsets_m: joint_offsets,
            face_baseline,
            emotion_gains,
            noise_sigma: [
                r.noise_sigma[0] * spec.noise_scale,
                r.noise_sigma[1] * spec.noise_scale,
                r.noise_sigma[2] * spec.noise_scale,
                r.noise_sigma[3] * spec.noise_scale,
            ],
        });
    }
    Ok(out)
}

/// Posture and gain mapping shared by the apps of one synthetic group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTemplate {
    pub name: String,
    /// Headset pos-y = offset + gain * height + bob.
    pub posture_gain: f64,
    pub posture_offset: f64,
    /// Horizontal head movement amplitudes (fraction of the user's range).
    pub head_amp_x: f64,
    pub head_amp_z: f64,
    /// Head yaw amplitude (radians).
    pub look_amp: f64,
    /// Controller movement amplitude (meters).
    pub ctrl_amp: f64,
    /// Hand joint movement amplitude (meters).
    pub hand_amp: f64,
    /// Eye gaze wander amplitude (meters) and cycles per session.
    pub gaze_amp: f64,
    pub gaze_cycles: f64,
    /// Activity script: per-quarter intensity multipliers on normalized
    /// session progress.
    pub envelope: [f64; 4],
    /// Amplitude of scripted action bursts (grabs, shots, waves) that fire
    /// at fixed script-progress positions.
    pub burst_amp: f64,
    /// Emotion weights in [`EMOTIONS`] order, driving FE elements.
    pub emotion_weights: [f64; 6],
}

/// One synthetic app: a group template plus app-specific pacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppArchetype {
    pub app: AppId,
    pub name: String,
    pub group: GroupTemplate,
    /// App-specific multiplier on the user's tempo.
    pub freq_mult: f64,
    pub phase: f64,
    pub nominal_duration_s: f64,
    /// Relative session-duration jitter (0.1 = +/-10%).
    pub duration_jitter: f64,
}

fn group_templates() -> Vec<GroupTemplate> {
    vec![
        GroupTemplate {
            name: "roaming".into(),
            posture_gain: 1.0,
            posture_offset: 0.0,
            head_amp_x: 0.7,
            head_amp_z: 0.55,
            look_amp: 0.5,
            ctrl_amp: 0.25,
            hand_amp: 0.05,
            gaze_amp: 0.045,
            gaze_cycles: 3.0,
            envelope: [0.8, 1.5, 1.0, 1.3],
            burst_amp: 0.35,
            emotion_weights: [0.9, 0.7, 0.1, 0.05, 0.1, 0.1],
        },
        GroupTemplate {
            name: "cockpit".into(),
            posture_gain: 0.72,
            posture_offset: -0.35,
            head_amp_x: 0.5,
            head_amp_z: 0.25,
            look_amp: 0.8,
            ctrl_amp: 0.12,
            hand_amp: 0.025,
            gaze_amp: 0.06,
            gaze_cycles: 5.0,
            envelope: [1.2, 0.7, 1.4, 0.9],
            burst_amp: 0.24,
            emotion_weights: [0.15, 0.3, 0.5, 0.2, 0.8, 0.4],
        },
        GroupTemplate {
            name: "target".into(),
            posture_gain: 0.92,
            posture_offset: 0.03,
            head_amp_x: 0.4,
            head_amp_z: 0.28,
            look_amp: 0.35,
            ctrl_amp: 0.22,
            hand_amp: 0.08,
            gaze_amp: 0.035,
            gaze_cycles: 8.0,
            envelope: [1.0, 1.6, 0.7, 1.4],
            burst_amp: 0.24,
            emotion_weights: [0.3, 0.4, 0.7, 0.3, 0.9, 0.3],
        },
        GroupTemplate {
            name: "calm".into(),
            posture_gain: 0.82,
            posture_offset: -0.14,
            head_amp_x: 0.3,
            head_amp_z: 0.2,
            look_amp: 0.25,
            ctrl_amp: 0.09,
            hand_amp: 0.015,
            gaze_amp: 0.05,
            gaze_cycles: 2.0,
            envelope: [1.1, 0.8, 1.3, 0.9],
            burst_amp: 0.18,
            emotion_weights: [0.5, 0.8, 0.1, 0.1, 0.2, 0.5],
        },
    ]
}

/// The builtin library: eight archetypes in four synthetic groups of two,
/// enough to exercise group models, equal-share evaluation, and the
/// zero-day protocol.
pub fn builtin_archetypes(duration_scale: f64) -> Vec<AppArchetype> {
    let groups = group_templates();
    let spec: [(&str, usize, f64, f64, f64); 8] = [
        // (name, group index, freq_mult, phase, nominal duration)
        ("atrium-walk", 0, 1.0, 0.0, 16.0),
        ("plaza-mingle", 0, 1.15, 0.9, 18.0),
        ("prop-flight", 1, 0.9, 0.3, 20.0),
        ("glide-trainer", 1, 1.05, 1.6, 17.0),
        ("range-practice", 2, 1.3, 0.5, 15.0),
        ("arrow-lanes", 2, 1.45, 2.1, 19.0),
        ("waypoint-hop", 3, 0.8, 1.2, 14.0),
        ("vista-points", 3, 0.95, 2.8, 16.0),
    ];
    spec.iter()
        .enumerate()
        .map(|(i, (name, gi, freq, phase, dur))| AppArchetype {
            app: AppId(i as u32 + 1),
            name: name.to_string(),
            group: groups[*gi].clone(),
            freq_mult: *freq,
            phase: *phase,
            nominal_duration_s: dur * duration_scale,
            duration_jitter: 0.10,
        })
        .collect()
}

/// App catalog matching [`builtin_archetypes`].
pub fn builtin_catalog(archetypes: &[AppArchetype]) -> AppCatalog {
    let mut groups: Vec<AppGroup> = Vec::new();
    for a in archetypes {
        match groups.iter_mut().find(|g| g.name == a.group.name) {
            Some(g) => g.members.push(a.app),
            None => groups.push(AppGroup {
                name: a.group.name.clone(),
                members: vec![a.app],
            }),
        }
    }
    AppCatalog::new(groups).expect("builtin groups partition the apps")
}

/// Sampling rates per sensor group (Hz). Hand joints run sparser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRates {
    pub bm: u32,
    pub eg: u32,
    pub hj: u32,
    pub fe: u32,
}

impl Default for SampleRates {
    fn default() -> Self {
        SampleRates {
            bm: 72,
            eg: 72,
            hj: 30,
            fe: 72,
        }
    }
}

impl SampleRates {
    fn of(self, group: SensorGroup) -> u32 {
        match group {
            SensorGroup::Bm => self.bm,
            SensorGroup::Eg => self.eg,
            SensorGroup::Hj => self.hj,
            SensorGroup::Fe => self.fe,
        }
    }
}

/// Session duration in seconds for one (user, app, session): the nominal
/// archetype duration with a seeded relative jitter.
pub fn session_duration(
    archetype: &AppArchetype,
    user: UserId,
    session: SessionId,
    seed: u64,
) -> f64 {
    let mut rng = derive_rng(
        seed,
        "duration",
        &[user.0 as u64, archetype.app.0 as u64, session.0 as u64],
    );
    let jitter = rng.gen_range(-archetype.duration_jitter..=archetype.duration_jitter);
    archetype.nominal_duration_s * (1.0 + jitter)
}

/// The user's movement profile at script progress `u`: three decaying
/// harmonics with per-user coefficients.
fn path_wave_at(coeffs: &[f64], u: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut v = 0.0;
    for h in 0..3 {
        let (a, p) = (coeffs[2 * h], coeffs[2 * h + 1]);
        v += a * (tau * (h + 1) as f64 * u + p).sin() / (h + 1) as f64;
    }
    v
}

/// Scripted event intensity at progress `u`: six prompt-driven action
/// bursts at fixed script positions (slightly shifted per app). Aligned
/// blocks always see the same events; misaligned ones mix them.
fn burst_at(u: f64, app_phase: f64) -> f64 {
    let mut b = 0.0;
    for k in 0..6 {
        let center = (k as f64 + 0.5) / 6.0 + 0.012 * (app_phase + k as f64).sin();
        let d = (u - center) / 0.02;
        b += (-d * d).exp();
    }
    b
}

/// Unit quaternion for a rotation of `angle` radians around `axis`
/// (0 = x, 1 = y, 2 = z), in (x, y, z, w) channel order.
fn axis_quat(axis: usize, angle: f64) -> [f64; 4] {
    let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
    let mut q = [0.0, 0.0, 0.0, c];
    q[axis] = s;
    q
}

/// Hamilton product; unit inputs give a unit result.
fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let (ax, ay, az, aw) = (a[0], a[1], a[2], a[3]);
    let (bx, by, bz, bw) = (b[0], b[1], b[2], b[3]);
    [
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    ]
}

/// Two-axis pose: primary rotation composed with a secondary tilt, so all
/// four quaternion channels carry variation.
fn pose_quat(primary_axis: usize, primary: f64, secondary_axis: usize, secondary: f64) -> [f64; 4] {
    quat_mul(
        axis_quat(primary_axis, primary),
        axis_quat(secondary_axis, secondary),
    )
}

/// Deterministic per-joint rest geometry of a hand (meters, wrist frame).
fn joint_rest(joint: usize) -> [f64; 3] {
    let a = joint as f64 * 0.61803 * std::f64::consts::TAU;
    let reach = 0.02 + 0.004 * joint as f64;
    [
        reach * a.cos(),
        -0.01 + 0.0015 * joint as f64,
        reach * a.sin(),
    ]
}

/// Generates one trace. Fully determined by the inputs; session 2 draws a
/// different noise stream and its own duration jitter.
pub fn generate_trace(
    profile: &UserProfile,
    archetype: &AppArchetype,
    session: SessionId,
    group: SensorGroup,
    rates: SampleRates,
    element_map: &ElementMap,
    seed: u64,
) -> SessionTrace {
    let duration = session_duration(archetype, profile.user, session, seed);
    let rate = rates.of(group);
    let n = (duration * rate as f64).floor() as usize + 1;
    let timestamps: Vec<i64> = (0..n)
        .map(|i| (i as u64 * 1000 / rate as u64) as i64)
        .collect();
    let t_total = *timestamps.last().unwrap() as f64 / 1000.0;

    let mut rng = derive_rng(
        seed,
        "noise",
        &[
            profile.user.0 as u64,
            archetype.app.0 as u64,
            session.0 as u64,
            group as u64,
        ],
    );
    let sigma = match group {
        SensorGroup::Bm => profile.noise_sigma[0],
        SensorGroup::Eg => profile.noise_sigma[1],
        SensorGroup::Hj => profile.noise_sigma[2],
        SensorGroup::Fe => profile.noise_sigma[3],
    };
    let noise = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * sigma
    };

    let g = &archetype.group;
    let tau = std::f64::consts::TAU;
    // cycles per session: the user's tempo paced by the app, expressed on
    // the script-progress axis (faster completion = faster motion)
    let cyc = profile.tempo_hz * archetype.freq_mult * archetype.nominal_duration_s;
    let amp = profile.amplitude;
    // users start the activity at uncontrolled offsets; a per-session
    // phase keeps fast oscillations from lining up across sessions
    let session_phase: f64 = rng.gen_range(0.0..tau);
    // uneven pacing through the script: a monotone warp of progress that
    // differs per session, so block content is never memorizable
    let pacing: f64 = rng.gen_range(-0.08..=0.08);

    // precompute emotion element membership for FE
    let emotion_sets: Vec<Vec<bool>> = EMOTIONS
        .iter()
        .map(|name| {
            let elems = element_map.emotion_elements(name).unwrap_or_default();
            let mut mask = vec![false; 64];
            for e in elems {
                mask[e as usize] = true;
            }
            mask
        })
        .collect();

    let mut values = Vec::with_capacity(n);
    for (i, &ts) in timestamps.iter().enumerate() {
        let t = ts as f64 / 1000.0;
        let u_time = if t_total > 0.0 { t / t_total } else { 0.0 };
        let u = u_time + pacing * (std::f64::consts::PI * u_time).sin();
        let seg = ((u * 4.0) as usize).min(3);
        let burst = g.burst_amp * profile.burst_gain * burst_at(u, archetype.phase);
        let env = (g.envelope[seg] * profile.segment_response[seg] + burst) * amp;
        let mut row = Vec::with_capacity(group.channel_count());
        match group {
            SensorGroup::Bm => {
                // headset position
                let path = path_wave_at(&profile.path_wave, u);
                let path_z = path_wave_at(&profile.path_wave, (u + 0.37).fract());
                let px = profile.head_range_m
                    * g.head_amp_x
                    * ((tau * (0.9 * cyc * u + archetype.phase) + session_phase).sin() * env
                        + 0.35 * path);
                let py = g.posture_offset
                    + g.posture_gain * profile.height_m
                    + 0.015 * (tau * 1.1 * cyc * u + session_phase).sin() * env;
                let pz = profile.head_range_m
                    * g.head_amp_z
                    * ((tau * (1.45 * cyc * u + 2.0 * archetype.phase) + session_phase).sin()
                        * env
                        + 0.35 * path_z);
                row.push(px + noise(&mut rng));
                row.push(py + noise(&mut rng));
                row.push(pz + noise(&mut rng));
                // headset yaw and pitch; noise folded into the angles so
                // the quaternion stays unit
                let yaw = g.look_amp
                    * (tau * (0.17 * cyc * u + archetype.phase) + session_phase).sin()
                    * env
                    + noise(&mut rng) * 2.0;
                let pitch =
                    0.3 * g.look_amp * (tau * (0.11 * cyc * u + 1.3) + session_phase).sin() * env
                        + 0.08
                        + noise(&mut rng) * 2.0;
                row.extend_from_slice(&pose_quat(1, yaw, 0, pitch));
                // controllers
                for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
                    let base_y = g.posture_offset + g.posture_gain * profile.height_m
                        - (0.22 + 0.20 * profile.hand_scale);
                    let fc = cyc * (1.0 + 0.1 * side as f64);
                    let swing = g.ctrl_amp * env;
                    // arm span scales with hand geometry, mapped through
                    // the group's posture, so it transfers within a group
                    // but not across groups
                    let reach = (0.06 + 0.18 * profile.hand_scale) * (0.5 + 0.5 * g.posture_gain);
                    let cx = sign * reach
                        + swing
                            * (tau * (fc * u + archetype.phase + side as f64) + session_phase)
                                .sin()
                        + g.ctrl_amp
                            * 0.35
                            * path_wave_at(
                                &profile.path_wave,
                                (u + 0.8 + 0.05 * side as f64).fract(),
                            );
                    let cy = base_y
                        + swing * 0.6 * (tau * (0.8 * fc * u) + session_phase).cos()
                        + g.ctrl_amp
                            * 0.4
                            * path_wave_at(
                                &profile.path_wave,
                                (u + 0.61 + 0.1 * side as f64).fract(),
                            );
                    let cz = -(0.13 + 0.10 * profile.amplitude)
                        + swing
                            * 0.8
                            * (tau * (0.6 * fc * u + archetype.phase) + session_phase).cos();
                    row.push(cx + noise(&mut rng));
                    row.push(cy + noise(&mut rng));
                    row.push(cz + noise(&mut rng));
                    let roll = 0.4
                        * g.look_amp
                        * (tau * (0.4 * fc * u + side as f64) + session_phase).sin()
                        * env
                        + noise(&mut rng) * 2.0;
                    let tilt = 0.25
                        * g.look_amp
                        * (tau * (0.27 * fc * u + 0.4) + session_phase).sin()
                        * env
                        + 0.05
                        + noise(&mut rng) * 2.0;
                    row.extend_from_slice(&pose_quat(2, roll, 0, tilt));
                    // linear velocity: phase-shifted swing derivative scale
                    let vscale = swing * tau * fc / t_total.max(1.0);
                    row.push(
                        vscale
                            * (tau * (fc * u + archetype.phase + side as f64) + session_phase)
                                .cos()
                            + noise(&mut rng),
                    );
                    row.push(
                        -vscale * 0.6 * (tau * (0.8 * fc * u) + session_phase).sin()
                            + noise(&mut rng),
                    );
                    row.push(
                        -vscale
                            * 0.8
                            * (tau * (0.6 * fc * u + archetype.phase) + session_phase).sin()
                            + noise(&mut rng),
                    );
                    // angular velocity
                    let w = 0.4 * g.look_amp * tau * 0.4 * fc / t_total.max(1.0);
                    row.push(
                        w * (tau * (0.4 * fc * u + side as f64) + session_phase).cos()
                            + noise(&mut rng),
                    );
                    row.push(
                        0.2 * w * (tau * (0.3 * fc * u) + session_phase).sin() + noise(&mut rng),
                    );
                    row.push(
                        0.1 * w * (tau * (0.5 * fc * u) + session_phase).cos() + noise(&mut rng),
                    );
                }
            }
            SensorGroup::Eg => {
                // shared gaze base wanders with session progress; the
                // left-right separation carries the IPD
                let base_x = 0.031
                    + g.gaze_amp
                        * (tau * (g.gaze_cycles * u + archetype.phase) + 0.3 * session_phase).sin();
                let base_y = g.gaze_amp
                    * (tau * (g.gaze_cycles * 0.7 * u + 2.0 * archetype.phase)
                        + 0.3 * session_phase)
                        .sin();
                let base_z = -0.012
                    + g.gaze_amp
                        * 0.5
                        * (tau * (g.gaze_cycles * 1.3 * u) + 0.3 * session_phase).cos();
                let pitch = 0.3 * (tau * (g.gaze_cycles * u) + 0.3 * session_phase).cos() * env;
                let yaw = 0.4
                    * (tau * (g.gaze_cycles * 0.9 * u + archetype.phase) + 0.3 * session_phase)
                        .sin()
                    * env;
                // eyes converge on a wandering focal point; the vergence
                // angle carries the inter-pupillary distance
                let focal = 0.8 + 0.5 * (tau * (g.gaze_cycles * 0.4 * u)).sin().powi(2);
                let vergence = (profile.ipd_m / (2.0 * focal)).atan();
                for sign in [1.0f64, -1.0] {
                    row.push(base_x + noise(&mut rng));
                    row.push(base_y + sign * profile.ipd_m / 2.0 + noise(&mut rng));
                    row.push(base_z + noise(&mut rng));
                    let eye_yaw = yaw - sign * vergence + noise(&mut rng) * 2.0;
                    let eye_pitch = pitch + noise(&mut rng) * 2.0;
                    row.extend_from_slice(&pose_quat(1, eye_yaw, 0, eye_pitch));
                }
            }
            SensorGroup::Hj => {
                for hand in 0..2usize {
                    let hand_phase = hand as f64 * 1.7 + archetype.phase;
                    let hand_path = g.hand_amp
                        * 0.4
                        * path_wave_at(&profile.path_wave, (u + 0.23 + 0.31 * hand as f64).fract());
                    for j in 0..26usize {
                        let rest = joint_rest(j + 1);
                        let off = profile.joint_offsets_m[hand * 26 + j];
                        let wiggle = g.hand_amp
                            * env
                            * (tau * (cyc * u + hand_phase + j as f64 * 0.23) + session_phase)
                                .sin();
                        row.push(
                            rest[0] * profile.hand_scale
                                + off
                                + wiggle
                                + hand_path
                                + noise(&mut rng),
                        );
                        row.push(
                            rest[1] * profile.hand_scale
                                + off * 0.5
                                + 0.4 * wiggle
                                + noise(&mut rng),
                        );
                        row.push(
                            rest[2] * profile.hand_scale + off + 0.7 * wiggle + noise(&mut rng),
                        );
                        let curl = 0.3
                            * (tau * (0.5 * cyc * u + j as f64 * 0.37) + session_phase).sin()
                            * env
                            + noise(&mut rng) * 3.0;
                        let twist = 0.15
                            * (tau * (0.3 * cyc * u + j as f64 * 0.51) + session_phase).sin()
                            * env
                            + 0.04
                            + noise(&mut rng) * 3.0;
                        row.extend_from_slice(&pose_quat(0, curl, 1, twist));
                    }
                }
            }
            SensorGroup::Fe => {
                let flow =
                    0.5 + 0.5 * (tau * (2.5 * u + archetype.phase) + 0.3 * session_phase).sin();
                for e in 1..=63usize {
                    let mut v = profile.face_baseline[e - 1];
                    for (ei, mask) in emotion_sets.iter().enumerate() {
                        if mask[e] {
                            v += 0.22
                                * g.emotion_weights[ei]
                                * profile.emotion_gains[ei]
                                * flow
                                * env;
                        }
                    }
                    row.push((v + noise(&mut rng)).clamp(0.0, 1.0));
                }
            }
        }
        debug_assert_eq!(row.len(), group.channel_count());
        values.push(row);
        let _ = i;
    }

    SessionTrace {
        user: profile.user,
        app: archetype.app,
        session,
        group,
        channels: group.channel_names(),
        timestamps_ms: timestamps,
        values,
    }
}

/// All four sensor-group traces for one (profile, archetype, session).
pub fn generate_session(
    profile: &UserProfile,
    archetype: &AppArchetype,
    session: SessionId,
    rates: SampleRates,
    element_map: &ElementMap,
    seed: u64,
) -> Vec<SessionTrace> {
    SensorGroup::ALL
        .iter()
        .map(|&g| generate_trace(profile, archetype, session, g, rates, element_map, seed))
        .collect()
}

/// Trace provider that generates traces on demand. Regeneration is cheap
/// and deterministic, so nothing is cached.
pub struct SynthProvider {
    pub profiles: Vec<UserProfile>,
    pub archetypes: Vec<AppArchetype>,
    pub catalog: AppCatalog,
    pub rates: SampleRates,
    pub element_map: ElementMap,
    pub seed: u64,
}

impl SynthProvider {
    pub fn new(profiles: Vec<UserProfile>, archetypes: Vec<AppArchetype>, seed: u64) -> Self {
        let catalog = builtin_catalog(&archetypes);
        SynthProvider {
            profiles,
            archetypes,
            catalog,
            rates: SampleRates::default(),
            element_map: ElementMap::default_map(),
            seed,
        }
    }

    fn profile(&self, user: UserId) -> Result<&UserProfile> {
        self.profiles
            .iter()
            .find(|p| p.user == user)
            .ok_or_else(|| Error::Other(format!("no profile for {user}")))
    }

    fn archetype(&self, app: AppId) -> Result<&AppArchetype> {
        self.archetypes
            .iter()
            .find(|a| a.app == app)
            .ok_or_else(|| Error::Other(format!("no archetype for {app}")))
    }
}

impl TraceProvider for SynthProvider {
    fn users(&self) -> Vec<UserId> {
        self.profiles.iter().map(|p| p.user).collect()
    }

    fn apps(&self) -> Vec<AppId> {
        self.archetypes.iter().map(|a| a.app).collect()
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
        Ok(generate_trace(
            self.profile(user)?,
            self.archetype(app)?,
            session,
            group,
            self.rates,
            &self.element_map,
            self.seed,
        ))
    }

    fn train_durations(&self, app: AppId, group: SensorGroup) -> Result<Vec<(UserId, f64)>> {
        let archetype = self.archetype(app)?;
        let _ = group; // every group shares the session clock
        Ok(self
            .profiles
            .iter()
            .map(|p| {
                (
                    p.user,
                    session_duration(archetype, p.user, SessionId::TRAIN, self.seed),
                )
            })
            .collect())
    }

    fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(serde_json::to_vec(&self.profiles).expect("profiles serialize"));
        h.update(serde_json::to_vec(&self.archetypes).expect("archetypes serialize"));
        hex::encode(&h.finalize()[..16])
    }
}

/// Writes the provider's full corpus in the on-disk dataset layout, byte
/// for byte reproducible.
pub fn write_corpus(provider: &SynthProvider, root: &std::path::Path) -> Result<usize> {
    use std::io::Write;
    let mut written = 0usize;
    for p in &provider.profiles {
        for a in &provider.archetypes {
            for s in [SessionId::TRAIN, SessionId::EVAL] {
                let dir = root
                    .join(format!("user_{}", p.user.0))
                    .join(format!("app_{}", a.app.0))
                    .join(format!("session_{}", s.0));
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                for g in SensorGroup::ALL {
                    let trace = provider.raw_trace(p.user, a.app, s, g)?;
                    let path = dir.join(format!("{}.csv", g.key()));
                    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    let mut w = std::io::BufWriter::new(file);
                    let mut header = String::from("timestamp_ms");
                    for c in &trace.channels {
                        header.push(',');
                        header.push_str(c);
                    }
                    writeln!(w, "{header}").map_err(|e| Error::io(&path, e))?;
                    let mut line = String::new();
                    for (i, &ts) in trace.timestamps_ms.iter().enumerate() {
                        line.clear();
                        line.push_str(&ts.to_string());
                        for v in &trace.values[i] {
                            line.push(',');
                            line.push_str(&v.to_string());
                        }
                        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
                    }
                    w.flush().map_err(|e| Error::io(&path, e))?;
                    written += 1;
                }
            }
        }
    }
    Ok(written)
}
