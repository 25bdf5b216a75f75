//! State evolution through a pulse timeline.
//!
//! A run prepares `|+x⟩`, evolves under the static Hamiltonian between
//! consecutive pulse or sample times, applies each pulse as an exact product
//! of single-spin rotations, and records observables at the sample times.

pub mod engine;
pub mod krylov;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use engine::{
    make_propagator, resolve_engine, Engine, KrylovPropagator, Propagator, SpectralPropagator, XBasisPropagator,
    MAX_DENSE_SPINS,
};
pub use krylov::{KrylovOptions, KrylovStats};

use crate::drive::{Axis, DriveSchedule, PulseEvent, SampleEdge, COINCIDENCE_TOL};
use crate::ensemble::{Group, SpinEnsemble};
use crate::hamiltonian::{HamiltonianSpec, StaticHamiltonian};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n_spins: usize, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), 1 << n_spins);
        Self { n_spins, amps }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sums `f(a, b)` over amplitude pairs differing only in bit `i`
    /// (`a` has the bit cleared).
    fn pair_sum(&self, i: usize, f: impl Fn(C64, C64) -> f64) -> f64 {
        let m = 1 << i;
        let d = self.amps.len();
        let mut acc = 0.0;
        for base in (0..d).step_by(2 * m) {
            for k in base..base + m {
                acc += f(self.amps[k], self.amps[k + m]);
            }
        }
        acc
    }

    pub fn expect_sx(&self, i: usize) -> f64 {
        self.pair_sum(i, |a, b| (a.conj() * b).re)
    }

    pub fn expect_sy(&self, i: usize) -> f64 {
        self.pair_sum(i, |a, b| (a.conj() * b).im)
    }

    pub fn expect_sz(&self, i: usize) -> f64 {
        self.pair_sum(i, |a, b| 0.5 * (a.norm_sqr() - b.norm_sqr()))
    }

    /// ⟨ψ|φ⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Applies a 2×2 unitary `[[u00, u01], [u10, u11]]` to spin `i`.
    pub fn apply_single(&mut self, i: usize, u: [[C64; 2]; 2]) {
        rotate_spin(&mut self.amps, i, u);
    }

    /// Applies the same 2×2 unitary to every spin whose bit is set in `mask`.
    /// Low spins are handled block by block so each block stays in cache.
    pub fn apply_uniform(&mut self, mask: usize, u: [[C64; 2]; 2]) {
        let low = self.n_spins.min(CACHE_BLOCK_BITS);
        let low_mask = mask & ((1 << low) - 1);
        if low_mask != 0 {
            for block in self.amps.chunks_exact_mut(1 << low) {
                for i in (0..low).filter(|i| low_mask >> i & 1 == 1) {
                    rotate_spin(block, i, u);
                }
            }
        }
        for i in (low..self.n_spins).filter(|i| mask >> i & 1 == 1) {
            rotate_spin(&mut self.amps, i, u);
        }
    }
}

/// 2^11 amplitudes = 32 KiB.
const CACHE_BLOCK_BITS: usize = 11;

fn rotate_spin(amps: &mut [C64], i: usize, u: [[C64; 2]; 2]) {
    let m = 1 << i;
    if u.iter().flatten().all(|z| z.im == 0.0) {
        let r = u.map(|row| row.map(|z| z.re));
        for block in amps.chunks_exact_mut(2 * m) {
            let (lo, hi) = block.split_at_mut(m);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x * r[0][0] + y * r[0][1];
                *b = x * r[1][0] + y * r[1][1];
            }
        }
        return;
    }
    for block in amps.chunks_exact_mut(2 * m) {
        let (lo, hi) = block.split_at_mut(m);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = u[0][0] * x + u[0][1] * y;
            *b = u[1][0] * x + u[1][1] * y;
        }
    }
}

/// `|+x⟩^{⊗N}`: every amplitude equals 2^(−N/2).
pub fn initial_plus_x(n_spins: usize) -> StateVector {
    assert!(n_spins >= 1, "need at least one spin");
    let d = 1usize << n_spins;
    let a = C64::new((d as f64).sqrt().recip(), 0.0);
    StateVector::from_amplitudes(n_spins, vec![a; d])
}

/// `exp(−iθ n̂·S)` for a single spin-1/2.
pub fn rotation(axis: Axis, angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = (0.5 * angle).sin_cos();
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    match axis {
        Axis::Y => [[re(c), re(-s)], [re(s), re(c)]],
        Axis::PlusX => [[re(c), im(-s)], [im(-s), re(c)]],
        Axis::MinusX => [[re(c), im(s)], [im(s), re(c)]],
    }
}

/// Applies `⊗_{i ∈ targets} exp(−i·angle·(axis·S_i))` in place.
pub fn apply_pulse_in_place(psi: &mut StateVector, event: &PulseEvent, ens: &SpinEnsemble) {
    psi.apply_uniform(target_mask(event, ens), rotation(event.axis, event.angle));
}

pub(crate) fn target_mask(event: &PulseEvent, ens: &SpinEnsemble) -> usize {
    ens.groups
        .iter()
        .enumerate()
        .filter(|(_, g)| event.targets.contains(**g))
        .fold(0, |m, (i, _)| m | 1 << i)
}

pub fn apply_pulse(psi: &StateVector, event: &PulseEvent, ens: &SpinEnsemble) -> StateVector {
    let mut out = psi.clone();
    apply_pulse_in_place(&mut out, event, ens);
    out
}

/// `exp(−iH·dt)·ψ` by adaptive Lanczos with tolerance `tol` on the output vector.
pub fn evolve_segment(psi: &StateVector, h: &StaticHamiltonian, dt: f64, tol: f64) -> Result<StateVector> {
    let mut out = psi.clone();
    let opts = KrylovOptions {
        tol,
        ..Default::default()
    };
    krylov::expm_multiply(h, &mut out.amps, dt, &opts)?;
    Ok(out)
}

/// `exp(−iH·dt)·ψ` by full diagonalization; verification oracle for N ≤ 10.
pub fn evolve_segment_dense(psi: &StateVector, h: &StaticHamiltonian, dt: f64) -> Result<StateVector> {
    let prop = SpectralPropagator::new(h)?;
    let mut out = psi.clone();
    prop.evolve(&mut out, dt)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// ⟨S^x⟩ of the spin closest to the box centre.
    CenterSx,
    TotalSx,
    GroupSx(Group),
}

impl Observable {
    pub fn evaluate(self, psi: &StateVector, ens: &SpinEnsemble) -> f64 {
        match self {
            Observable::CenterSx => psi.expect_sx(ens.center_index),
            Observable::TotalSx => (0..ens.n_spins()).map(|i| psi.expect_sx(i)).sum(),
            Observable::GroupSx(g) => (0..ens.n_spins())
                .filter(|&i| ens.groups[i] == g)
                .map(|i| psi.expect_sx(i))
                .sum(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Observable::CenterSx => "center_sx",
            Observable::TotalSx => "total_sx",
            Observable::GroupSx(Group::A) => "group_a_sx",
            Observable::GroupSx(Group::B) => "group_b_sx",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "center_sx" => Observable::CenterSx,
            "total_sx" => Observable::TotalSx,
            "group_a_sx" => Observable::GroupSx(Group::A),
            "group_b_sx" => Observable::GroupSx(Group::B),
            _ => return None,
        })
    }
}

/// Provenance carried alongside a time series.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub n_spins: usize,
    pub realizations: usize,
    pub master_seed: u64,
    pub seed_offsets: Vec<u64>,
    pub schedule_digest: String,
    pub hamiltonian: Option<HamiltonianSpec>,
    pub engine: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// µs
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub observable: Observable,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same times and observable, values produced by `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|v| f(*v)).collect(),
            ..self.clone()
        }
    }
}

/// Per-segment diagnostics handed to a monitor during a run.
pub struct Segment<'a> {
    pub t_start: f64,
    pub t_end: f64,
    pub before: &'a StateVector,
    pub after: &'a StateVector,
}

/// One action in the walk through a schedule.
pub(crate) enum Step<'a> {
    Evolve { t_start: f64, t_end: f64 },
    Pulse(&'a PulseEvent),
    /// Record the current state for this many consecutive sample times.
    Record(usize),
}

/// Visits evolution segments, pulses and sample points in time order. Pulses
/// and samples closer than the coincidence tolerance share a timestamp; the
/// sample edge decides whether such samples see the state before or after.
pub(crate) fn walk_schedule(schedule: &DriveSchedule, mut f: impl FnMut(Step<'_>) -> Result<()>) -> Result<()> {
    let samples = &schedule.sample_times;
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("sample times must be sorted".into()));
    }
    let pulses = &schedule.pulses;
    let (mut pi, mut si) = (0usize, 0usize);
    let mut t = 0.0;
    while si < samples.len() {
        let next_pulse = pulses.get(pi).map_or(f64::INFINITY, |p| p.time);
        let now = next_pulse.min(samples[si]);
        if now - t > COINCIDENCE_TOL {
            f(Step::Evolve { t_start: t, t_end: now })?;
            t = now;
        }
        let pulse_end = pulses[pi..]
            .iter()
            .position(|p| p.time - now > COINCIDENCE_TOL)
            .map_or(pulses.len(), |k| pi + k);
        let sample_end = samples[si..]
            .iter()
            .position(|s| s - now > COINCIDENCE_TOL)
            .map_or(samples.len(), |k| si + k);
        let count = sample_end - si;
        if schedule.edge == SampleEdge::Before && count > 0 {
            f(Step::Record(count))?;
        }
        for p in &pulses[pi..pulse_end] {
            f(Step::Pulse(p))?;
        }
        if schedule.edge == SampleEdge::After && count > 0 {
            f(Step::Record(count))?;
        }
        pi = pulse_end;
        si = sample_end;
    }
    Ok(())
}

pub(crate) fn collect_series(
    values: Vec<Vec<f64>>,
    observables: &[Observable],
    ens: &SpinEnsemble,
    schedule: &DriveSchedule,
    engine: &str,
) -> Vec<TimeSeries> {
    let meta = SeriesMeta {
        n_spins: ens.n_spins(),
        realizations: 1,
        master_seed: ens.seed,
        seed_offsets: vec![ens.seed_offset],
        schedule_digest: schedule.digest(),
        hamiltonian: None,
        engine: engine.into(),
    };
    observables
        .iter()
        .zip(values)
        .map(|(obs, v)| TimeSeries {
            times: schedule.sample_times.clone(),
            values: v,
            observable: *obs,
            meta: meta.clone(),
        })
        .collect()
}

/// Runs the schedule with `prop` in the S^z basis, recording each observable
/// at every sample time. `monitor` sees the state around every free-evolution
/// segment.
pub fn run_with<P: Propagator + ?Sized>(
    prop: &P,
    ens: &SpinEnsemble,
    schedule: &DriveSchedule,
    observables: &[Observable],
    mut monitor: Option<&mut dyn FnMut(&Segment<'_>)>,
) -> Result<Vec<TimeSeries>> {
    let mut psi = initial_plus_x(ens.n_spins());
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(schedule.sample_times.len()); observables.len()];
    walk_schedule(schedule, |step| {
        match step {
            Step::Evolve { t_start, t_end } => match monitor.as_mut() {
                Some(m) => {
                    let before = psi.clone();
                    prop.evolve(&mut psi, t_end - t_start)?;
                    m(&Segment {
                        t_start,
                        t_end,
                        before: &before,
                        after: &psi,
                    });
                }
                None => prop.evolve(&mut psi, t_end - t_start)?,
            },
            Step::Pulse(p) => apply_pulse_in_place(&mut psi, p, ens),
            Step::Record(count) => {
                for (obs, out) in observables.iter().zip(values.iter_mut()) {
                    let v = obs.evaluate(&psi, ens);
                    out.extend(std::iter::repeat_n(v, count));
                }
            }
        }
        Ok(())
    })?;
    Ok(collect_series(values, observables, ens, schedule, prop.name()))
}

/// Krylov-propagated run of `schedule` under `h`, recording one observable.
pub fn run_experiment(
    ens: &SpinEnsemble,
    h: &StaticHamiltonian,
    schedule: &DriveSchedule,
    observable: Observable,
    tol: f64,
) -> Result<TimeSeries> {
    let prop = KrylovPropagator {
        hamiltonian: Arc::new(h.clone()),
        options: KrylovOptions {
            tol,
            ..Default::default()
        },
    };
    let mut out = prop.run(ens, schedule, &[observable])?;
    let mut series = out.pop().expect("one observable");
    series.meta.hamiltonian = Some(h.spec);
    Ok(series)
}

#[cfg(test)]
mod tests;
