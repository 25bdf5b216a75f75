//! Quasi-periodic pulse timelines and measurement grids.
//!
//! Two π-pulse trains about ŷ fire at `n₁τ₁` and `n₂τ₂` with `τ₂ = φτ₁`.
//! Pulses are instantaneous rotations by `(1 − ε)π`. In Z₂×Z₂ mode the second
//! train only addresses group A, optionally followed by a cancelling
//! ±x̂ pulse pair on group B.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::Group;
use crate::{Error, Result};

/// Two pulse times closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Dense sampling runs at ten samples per τ₁.
pub const DENSE_SAMPLES_PER_TAU1: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Y,
    PlusX,
    MinusX,
}

impl Axis {
    pub fn vector(self) -> [f64; 3] {
        match self {
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::PlusX => [1.0, 0.0, 0.0],
            Axis::MinusX => [-1.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    All,
    A,
    B,
}

impl Targets {
    pub fn contains(self, g: Group) -> bool {
        match self {
            Targets::All => true,
            Targets::A => g == Group::A,
            Targets::B => g == Group::B,
        }
    }

    pub fn groups(self) -> Vec<Group> {
        match self {
            Targets::All => vec![Group::A, Group::B],
            Targets::A => vec![Group::A],
            Targets::B => vec![Group::B],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSource {
    Train1,
    Train2,
    Compensation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    /// µs
    pub time: f64,
    pub axis: Axis,
    /// radians
    pub angle: f64,
    pub targets: Targets,
    pub source: PulseSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    SingleGroup,
    Z2z2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    Dense,
    #[default]
    Quasiperiodic,
}

/// Whether a sample coinciding with a pulse is taken after or before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleEdge {
    #[default]
    After,
    Before,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub tau1: f64,
    pub phi: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub pulses: Vec<PulseEvent>,
    pub sample_times: Vec<f64>,
    pub sampling: SamplingScheme,
    pub edge: SampleEdge,
    pub mode: DriveMode,
    pub compensation: bool,
}

fn validate(tau1: f64, phi: f64, horizon: f64, epsilon: f64) -> Result<()> {
    if !(tau1 > 0.0 && tau1.is_finite()) {
        return Err(Error::InvalidConfig(format!("tau1 must be positive, got {tau1}")));
    }
    if !(phi > 1.0 && phi.is_finite()) {
        return Err(Error::InvalidConfig(format!("phi must exceed 1, got {phi}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
    }
    if !epsilon.is_finite() {
        return Err(Error::InvalidConfig("epsilon must be finite".into()));
    }
    Ok(())
}

/// Times `n·period` for `n = 1, 2, …` up to and including the horizon.
fn train_times(period: f64, horizon: f64) -> Vec<f64> {
    let slack = COINCIDENCE_TOL * horizon.max(1.0);
    let count = ((horizon + slack) / period).floor() as usize;
    (1..=count).map(|n| n as f64 * period).filter(|t| *t <= horizon + slack).collect()
}

fn drive_pulse(time: f64, epsilon: f64, targets: Targets, source: PulseSource) -> PulseEvent {
    PulseEvent {
        time,
        axis: Axis::Y,
        angle: (1.0 - epsilon) * PI,
        targets,
        source,
    }
}

/// Merges the two trains; coincident times keep both events, train 1 first,
/// at train 1's timestamp.
fn merge_trains(
    tau1: f64,
    phi: f64,
    epsilon: f64,
    horizon: f64,
    second_targets: Targets,
    compensation: bool,
) -> Vec<PulseEvent> {
    let t1 = train_times(tau1, horizon);
    // n·φ·τ₁ rather than n·(φτ₁) keeps the rounding error of each time independent of n.
    let slack = COINCIDENCE_TOL * horizon.max(1.0);
    let count2 = ((horizon + slack) / (phi * tau1)).floor() as usize;
    let t2: Vec<f64> = (1..=count2)
        .map(|n| n as f64 * phi * tau1)
        .filter(|t| *t <= horizon + slack)
        .collect();

    let mut out = Vec::with_capacity(t1.len() + 3 * t2.len());
    let push_second = |out: &mut Vec<PulseEvent>, time: f64| {
        out.push(drive_pulse(time, epsilon, second_targets, PulseSource::Train2));
        if compensation {
            let half = (1.0 - epsilon) * PI / 2.0;
            for axis in [Axis::PlusX, Axis::MinusX] {
                out.push(PulseEvent {
                    time,
                    axis,
                    angle: half,
                    targets: Targets::B,
                    source: PulseSource::Compensation,
                });
            }
        }
    };
    let (mut i, mut j) = (0, 0);
    while i < t1.len() || j < t2.len() {
        match (t1.get(i), t2.get(j)) {
            (Some(&a), Some(&b)) if (a - b).abs() <= COINCIDENCE_TOL => {
                out.push(drive_pulse(a, epsilon, Targets::All, PulseSource::Train1));
                push_second(&mut out, a);
                i += 1;
                j += 1;
            }
            (Some(&a), Some(&b)) if a < b => {
                out.push(drive_pulse(a, epsilon, Targets::All, PulseSource::Train1));
                i += 1;
            }
            (Some(_), Some(&b)) | (None, Some(&b)) => {
                push_second(&mut out, b);
                j += 1;
            }
            (Some(&a), None) => {
                out.push(drive_pulse(a, epsilon, Targets::All, PulseSource::Train1));
                i += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Single-group quasi-periodic schedule; both trains address every spin.
/// Sampling defaults to the quasi-periodic scheme.
pub fn build_schedule(tau1: f64, phi: f64, epsilon: f64, horizon: f64) -> Result<DriveSchedule> {
    validate(tau1, phi, horizon, epsilon)?;
    let mut s = DriveSchedule {
        tau1,
        phi,
        epsilon,
        horizon,
        pulses: merge_trains(tau1, phi, epsilon, horizon, Targets::All, false),
        sample_times: Vec::new(),
        sampling: SamplingScheme::Quasiperiodic,
        edge: SampleEdge::After,
        mode: DriveMode::SingleGroup,
        compensation: false,
    };
    s.sample_times = sampling_times(&s, s.sampling);
    Ok(s)
}

/// Z₂×Z₂ schedule: train 1 flips both groups, train 2 flips only group A.
pub fn build_z2z2_schedule(
    tau1: f64,
    phi: f64,
    epsilon: f64,
    horizon: f64,
    compensation: bool,
) -> Result<DriveSchedule> {
    validate(tau1, phi, horizon, epsilon)?;
    let mut s = DriveSchedule {
        tau1,
        phi,
        epsilon,
        horizon,
        pulses: merge_trains(tau1, phi, epsilon, horizon, Targets::A, compensation),
        sample_times: Vec::new(),
        sampling: SamplingScheme::Quasiperiodic,
        edge: SampleEdge::After,
        mode: DriveMode::Z2z2,
        compensation,
    };
    s.sample_times = sampling_times(&s, s.sampling);
    Ok(s)
}

/// Measurement times for `scheme`. Dense: every τ₁/10 from 0 to the horizon.
/// Quasi-periodic: t = 0 plus one sample per distinct pulse timestamp.
pub fn sampling_times(schedule: &DriveSchedule, scheme: SamplingScheme) -> Vec<f64> {
    match scheme {
        SamplingScheme::Dense => {
            let per = DENSE_SAMPLES_PER_TAU1 as f64;
            let slack = COINCIDENCE_TOL * schedule.horizon.max(1.0);
            let count = ((schedule.horizon + slack) * per / schedule.tau1).floor() as usize;
            (0..=count).map(|k| k as f64 * schedule.tau1 / per).collect()
        }
        SamplingScheme::Quasiperiodic => {
            let mut times = vec![0.0];
            for p in &schedule.pulses {
                if p.time - times.last().copied().unwrap_or(0.0) > COINCIDENCE_TOL {
                    times.push(p.time);
                }
            }
            times
        }
    }
}

impl DriveSchedule {
    pub fn tau2(&self) -> f64 {
        self.phi * self.tau1
    }

    pub fn omega1(&self) -> f64 {
        2.0 * PI / self.tau1
    }

    pub fn omega2(&self) -> f64 {
        2.0 * PI / self.tau2()
    }

    pub fn with_sampling(mut self, scheme: SamplingScheme, edge: SampleEdge) -> Self {
        self.sample_times = sampling_times(&self, scheme);
        self.sampling = scheme;
        self.edge = edge;
        self
    }

    /// Drive pulses only (compensation events excluded).
    pub fn drive_pulse_count(&self) -> usize {
        self.pulses
            .iter()
            .filter(|p| p.source != PulseSource::Compensation)
            .count()
    }

    pub fn timeline(&self) -> Timeline {
        Timeline {
            tau1_us: self.tau1,
            tau2_us: self.tau2(),
            phi: self.phi,
            epsilon: self.epsilon,
            horizon_us: self.horizon,
            mode: self.mode,
            compensation: self.compensation,
            events: self
                .pulses
                .iter()
                .map(|p| TimelineEvent {
                    time_us: p.time,
                    axis: p.axis.vector(),
                    angle_rad: p.angle,
                    targets: p.targets.groups(),
                    source: p.source,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.timeline())?)
    }

    /// SHA-256 of the JSON timeline plus sampling grid, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.timeline()).expect("timeline serializes"));
        for t in &self.sample_times {
            h.update(t.to_le_bytes());
        }
        h.update([self.edge as u8]);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Instruction-list view of a schedule for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub tau1_us: f64,
    pub tau2_us: f64,
    pub phi: f64,
    pub epsilon: f64,
    pub horizon_us: f64,
    pub mode: DriveMode,
    pub compensation: bool,
    pub events: Vec<TimelineEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub time_us: f64,
    pub axis: [f64; 3],
    pub angle_rad: f64,
    pub targets: Vec<Group>,
    pub source: PulseSource,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GOLDEN_RATIO_TRUNCATED as PHI;
    use proptest::prelude::*;

    fn times(s: &DriveSchedule) -> Vec<f64> {
        s.pulses.iter().map(|p| p.time).collect()
    }

    #[test]
    fn enumerates_both_trains() {
        let s = build_schedule(1.0, PHI, 0.0, 5.0).unwrap();
        let expected = [1.0, 1.618, 2.0, 3.0, 3.236, 4.0, 4.854, 5.0];
        let got = times(&s);
        assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn perfect_pulses_at_zero_epsilon() {
        let s = build_schedule(0.7, PHI, 0.0, 50.0).unwrap();
        assert!(s.pulses.iter().all(|p| p.angle == PI && p.axis == Axis::Y));
        let s = build_schedule(0.7, PHI, 0.1, 50.0).unwrap();
        assert!(s.pulses.iter().all(|p| (p.angle - 0.9 * PI).abs() < 1e-15));
    }

    #[test]
    fn z2z2_targets() {
        let s = build_z2z2_schedule(1.0, PHI, 0.0, 2.0, false).unwrap();
        let got: Vec<(f64, Targets)> = s.pulses.iter().map(|p| (p.time, p.targets)).collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0], (1.0, Targets::All));
        assert!((got[1].0 - 1.618).abs() < 1e-12 && got[1].1 == Targets::A);
        assert_eq!(got[2], (2.0, Targets::All));
    }

    #[test]
    fn compensation_pair_follows_train_two() {
        let s = build_z2z2_schedule(1.0, PHI, 0.05, 2.0, true).unwrap();
        assert_eq!(s.pulses.len(), 5);
        let c1 = s.pulses[2];
        let c2 = s.pulses[3];
        assert_eq!((c1.axis, c2.axis), (Axis::PlusX, Axis::MinusX));
        assert_eq!(c1.targets, Targets::B);
        assert_eq!(c1.time, s.pulses[1].time);
        assert!((c1.angle - 0.95 * PI / 2.0).abs() < 1e-15);
        assert_eq!(s.drive_pulse_count(), 3);
    }

    #[test]
    fn single_group_matches_z2z2_all_a_without_compensation() {
        let s = build_schedule(0.9, PHI, 0.03, 40.0).unwrap();
        let z = build_z2z2_schedule(0.9, PHI, 0.03, 40.0, false).unwrap();
        assert_eq!(times(&s), times(&z));
        // With every spin in A, Targets::All and Targets::A address the same spins.
        for (a, b) in s.pulses.iter().zip(&z.pulses) {
            assert_eq!(a.angle, b.angle);
            assert_eq!(a.targets.contains(Group::A), b.targets.contains(Group::A));
        }
    }

    #[test]
    fn dense_grid() {
        let s = build_schedule(1.0, PHI, 0.0, 2.0).unwrap();
        let t = sampling_times(&s, SamplingScheme::Dense);
        assert_eq!(t.len(), 21);
        for (k, tk) in t.iter().enumerate() {
            assert!((tk - k as f64 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn quasiperiodic_grid() {
        let s = build_schedule(1.0, PHI, 0.0, 5.0).unwrap();
        let t = sampling_times(&s, SamplingScheme::Quasiperiodic);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], 0.0);
        let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(f64::total_cmp);
        gaps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert!(gaps.len() >= 2);
    }

    #[test]
    fn coincident_pulses_keep_train_order() {
        // φ = 1.5: n₂ = 2 coincides with n₁ = 3
        let s = build_schedule(1.0, 1.5, 0.0, 3.0).unwrap();
        let at3: Vec<PulseSource> = s.pulses.iter().filter(|p| p.time == 3.0).map(|p| p.source).collect();
        assert_eq!(at3, vec![PulseSource::Train1, PulseSource::Train2]);
        // one sample for the shared timestamp
        assert_eq!(s.sample_times.iter().filter(|t| **t == 3.0).count(), 1);
    }

    #[test]
    fn rational_times_match() {
        // φ = 809/500 exactly: n₂τ₂ = 809·n₂·τ₁/500
        let tau1 = 0.75;
        let s = build_schedule(tau1, PHI, 0.0, 200.0 * tau1).unwrap();
        for p in s.pulses.iter().filter(|p| p.source == PulseSource::Train2) {
            let n2 = (p.time / (PHI * tau1)).round();
            let exact = 809.0 * n2 * tau1 / 500.0;
            assert!((p.time - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn json_timeline_and_digest() {
        let s = build_z2z2_schedule(1.0, PHI, 0.1, 3.0, true).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v["events"].as_array().unwrap().len(), s.pulses.len());
        assert_eq!(v["events"][0]["axis"], serde_json::json!([0.0, 1.0, 0.0]));
        assert_eq!(s.digest(), s.clone().digest());
        assert_ne!(s.digest(), build_z2z2_schedule(1.0, PHI, 0.2, 3.0, true).unwrap().digest());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_schedule(0.0, PHI, 0.0, 1.0).is_err());
        assert!(build_schedule(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(build_schedule(1.0, PHI, 0.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn pulse_count_formula(tau1 in 0.1..3.0f64, periods in 1.0..250.0f64, exact in any::<bool>()) {
            let phi = if exact { crate::units::GOLDEN_RATIO } else { PHI };
            let horizon = periods * tau1;
            let s = build_schedule(tau1, phi, 0.0, horizon).unwrap();
            let n1 = ((horizon + 1e-9 * horizon.max(1.0)) / tau1).floor() as usize;
            let n2 = ((horizon + 1e-9 * horizon.max(1.0)) / (phi * tau1)).floor() as usize;
            prop_assert_eq!(s.pulses.len(), n1 + n2);
            prop_assert!(s.pulses.windows(2).all(|w| w[0].time <= w[1].time));
        }

        #[test]
        fn epsilon_sign_only_changes_angles(eps in -0.3..0.3f64) {
            let a = build_z2z2_schedule(1.0, PHI, eps, 30.0, true).unwrap();
            let b = build_z2z2_schedule(1.0, PHI, -eps, 30.0, true).unwrap();
            prop_assert_eq!(a.pulses.len(), b.pulses.len());
            for (p, q) in a.pulses.iter().zip(&b.pulses) {
                prop_assert_eq!(p.time, q.time);
                prop_assert_eq!(p.targets, q.targets);
                prop_assert_eq!(p.axis, q.axis);
            }
        }
    }
}
