//! Disorder-averaged sweeps and the in-memory side of the experiment commands.
//!
//! Work is split by realization: each task draws one ensemble, builds a
//! propagator once per Hamiltonian spec, and runs every sweep point against
//! it. Averages are accumulated in realization order, so results do not
//! depend on the number of workers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    argmax_curve, critical_epsilon, fraction_at, nudft_samples, rigid_interval, split_at, PeakTarget, PhaseBoundary,
    Spectrum, SplitVerdict,
};
use crate::config::RunConfig;
use crate::drive::{DriveSchedule, SamplingScheme};
use crate::ensemble::{build_ensemble, Group};
use crate::exec::Executor;
use crate::hamiltonian::HamiltonianSpec;
use crate::propagate::{make_propagator, resolve_engine, Observable, Propagator, SeriesMeta, TimeSeries};
use crate::units::mhz;
use crate::{Error, Result};

/// One drive setting evaluated in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau1: f64,
    pub epsilon: f64,
    pub spec: HamiltonianSpec,
    pub sampling: SamplingScheme,
}

/// Disorder-averaged traces, `series[point][observable]`.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub observables: Vec<Observable>,
    pub series: Vec<Vec<TimeSeries>>,
    pub info: RunInfo,
}

/// What a manifest needs to know about how a sweep ran.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub engines: Vec<String>,
    pub seed_offsets: Vec<u64>,
    pub simulated_runs: usize,
    pub elapsed_s: f64,
}

impl RunInfo {
    fn absorb(&mut self, other: &RunInfo) {
        for e in &other.engines {
            if !self.engines.contains(e) {
                self.engines.push(e.clone());
            }
        }
        if self.seed_offsets.is_empty() {
            self.seed_offsets = other.seed_offsets.clone();
        }
        self.simulated_runs += other.simulated_runs;
        self.elapsed_s += other.elapsed_s;
    }
}

/// Runs every point for every realization and averages in realization order.
pub fn simulate(cfg: &RunConfig, points: &[SweepPoint], observables: &[Observable]) -> Result<SweepResult> {
    if points.is_empty() || observables.is_empty() {
        return Err(Error::Empty("sweep has no points or observables"));
    }
    if cfg.realizations == 0 {
        return Err(Error::InvalidConfig("realizations must be at least 1".into()));
    }
    let start = Instant::now();
    let ens_cfg = cfg.ensemble_config();
    ens_cfg.validate()?;
    let schedules = points
        .iter()
        .map(|p| Ok(cfg.schedule_for(p.tau1, p.epsilon)?.with_sampling(p.sampling, cfg.sampling.edge)))
        .collect::<Result<Vec<_>>>()?;
    let mut specs: Vec<HamiltonianSpec> = Vec::new();
    for p in points {
        p.spec.validate()?;
        if !specs.contains(&p.spec) {
            specs.push(p.spec);
        }
    }

    let exec = Executor::with_workers(cfg.workers);
    let one = |r: usize| -> Result<Vec<Vec<TimeSeries>>> {
        let ens = build_ensemble(&ens_cfg, r as u64)?;
        let props = specs
            .iter()
            .map(|spec| make_propagator(&ens, spec, cfg.engine, cfg.krylov))
            .collect::<Result<Vec<Box<dyn Propagator>>>>()?;
        points
            .iter()
            .zip(&schedules)
            .map(|(p, sched)| {
                let k = specs.iter().position(|s| *s == p.spec).expect("spec registered");
                props[k].run(&ens, sched, observables)
            })
            .collect()
    };

    // Chunks bound memory; the running sum still visits realizations 0, 1, 2, ...
    let chunk = (4 * exec.workers()).max(1);
    let mut sums: Vec<Vec<Vec<f64>>> = schedules
        .iter()
        .map(|s| vec![vec![0.0; s.sample_times.len()]; observables.len()])
        .collect();
    let mut metas: Vec<Vec<SeriesMeta>> = Vec::new();
    let mut lo = 0;
    while lo < cfg.realizations {
        let hi = (lo + chunk).min(cfg.realizations);
        let batch = exec.map(hi - lo, |k| one(lo + k))?;
        for runs in batch {
            if metas.is_empty() {
                metas = runs.iter().map(|per| per.iter().map(|s| s.meta.clone()).collect()).collect();
            }
            for (acc_p, run_p) in sums.iter_mut().zip(&runs) {
                for (acc, run) in acc_p.iter_mut().zip(run_p) {
                    for (a, v) in acc.iter_mut().zip(&run.values) {
                        *a += v;
                    }
                }
            }
        }
        lo = hi;
    }

    let n = cfg.realizations as f64;
    let seed_offsets: Vec<u64> = (0..cfg.realizations as u64).collect();
    let series = sums
        .into_iter()
        .enumerate()
        .map(|(pi, per_obs)| {
            per_obs
                .into_iter()
                .enumerate()
                .map(|(oi, mut values)| {
                    values.iter_mut().for_each(|v| *v /= n);
                    TimeSeries {
                        times: schedules[pi].sample_times.clone(),
                        values,
                        observable: observables[oi],
                        meta: SeriesMeta {
                            realizations: cfg.realizations,
                            seed_offsets: seed_offsets.clone(),
                            hamiltonian: Some(points[pi].spec),
                            ..metas[pi][oi].clone()
                        },
                    }
                })
                .collect()
        })
        .collect();

    let probe = build_ensemble(&ens_cfg, 0)?;
    let engines = specs
        .iter()
        .map(|s| resolve_engine(&probe, s, cfg.engine).label().to_string())
        .collect();
    Ok(SweepResult {
        points: points.to_vec(),
        observables: observables.to_vec(),
        series,
        info: RunInfo {
            engines,
            seed_offsets,
            simulated_runs: cfg.realizations * points.len(),
            elapsed_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Spectrum of a trace on the configured grid for its τ₁.
pub fn spectrum_of(cfg: &RunConfig, series: &TimeSeries, tau1: f64) -> Result<Spectrum> {
    let grid = cfg.analysis.grid(cfg.horizon(tau1), tau1)?;
    nudft_samples(&series.times, &series.values, &grid, cfg.analysis.window)
}

/// A predicted response line and what the spectrum shows there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub label: String,
    /// rad/µs
    pub predicted: f64,
    pub predicted_over_omega1: f64,
    /// Largest magnitude within one grid step of the prediction.
    pub magnitude: f64,
    pub fraction: f64,
    pub verdict: SplitVerdict,
}

pub fn peak_report(spec: &Spectrum, target: PeakTarget, tau1: f64, phi: f64, delta: f64) -> Result<PeakReport> {
    let nu = target.frequency(tau1, phi);
    let magnitude = spec.max_near(nu);
    Ok(PeakReport {
        label: target.label(),
        predicted: nu,
        predicted_over_omega1: nu * tau1 / (2.0 * std::f64::consts::PI),
        magnitude,
        fraction: fraction_at(spec, nu, delta)?,
        verdict: split_at(spec, nu, delta)?,
    })
}

#[derive(Debug, Clone)]
pub struct TraceResult {
    pub tau1: f64,
    pub epsilon: f64,
    pub series: TimeSeries,
    pub spectrum: Spectrum,
    pub peaks: Vec<PeakReport>,
    pub schedule: DriveSchedule,
    pub info: RunInfo,
}

/// Disorder-averaged trace at the configured (τ₁, ε), its spectrum, and the
/// configured peaks.
pub fn run_trace(cfg: &RunConfig) -> Result<TraceResult> {
    let (tau1, epsilon) = (cfg.drive.tau1_us, cfg.drive.epsilon);
    let point = SweepPoint {
        tau1,
        epsilon,
        spec: cfg.hamiltonian_spec(),
        sampling: cfg.sampling.scheme,
    };
    let mut sweep = simulate(cfg, &[point], &[cfg.observable()])?;
    let series = sweep.series.remove(0).remove(0);
    let spectrum = spectrum_of(cfg, &series, tau1)?;
    let delta = cfg.analysis.delta(tau1);
    let peaks = cfg
        .peak_targets()?
        .into_iter()
        .map(|t| peak_report(&spectrum, t, tau1, cfg.drive.phi, delta))
        .collect::<Result<_>>()?;
    Ok(TraceResult {
        tau1,
        epsilon,
        series,
        spectrum,
        peaks,
        schedule: cfg.schedule_for(tau1, epsilon)?,
        info: sweep.info,
    })
}

/// Spectra and per-peak verdicts along an ε grid at one τ₁.
#[derive(Debug, Clone)]
pub struct EpsilonScan {
    pub tau1: f64,
    pub epsilons: Vec<f64>,
    pub peaks: Vec<PeakTarget>,
    pub spectra: Vec<Spectrum>,
    /// `fractions[peak][ε]`
    pub fractions: Vec<Vec<f64>>,
    /// `verdicts[peak][ε]`
    pub verdicts: Vec<Vec<SplitVerdict>>,
}

impl EpsilonScan {
    pub fn curve(&self, peak: usize) -> Vec<(f64, f64)> {
        self.epsilons.iter().copied().zip(self.fractions[peak].iter().copied()).collect()
    }

    /// Longest unsplit ε run for a peak.
    pub fn rigid_interval(&self, peak: usize) -> Option<(f64, f64)> {
        let scan: Vec<(f64, bool)> = self
            .epsilons
            .iter()
            .zip(&self.verdicts[peak])
            .map(|(e, v)| (*e, !v.is_split()))
            .collect();
        rigid_interval(&scan)
    }

    pub fn argmax(&self, peak: usize) -> f64 {
        self.epsilons[argmax_curve(&self.curve(peak))]
    }

    pub fn critical(&self, peak: usize, threshold: f64) -> Result<(f64, f64)> {
        critical_epsilon(&self.curve(peak), threshold)
    }

    /// ε values where `f > threshold`.
    pub fn support(&self, peak: usize, threshold: f64) -> Vec<f64> {
        self.curve(peak).into_iter().filter(|p| p.1 > threshold).map(|p| p.0).collect()
    }
}

fn analyse_scan(
    cfg: &RunConfig,
    tau1: f64,
    epsilons: &[f64],
    traces: &[TimeSeries],
    peaks: &[PeakTarget],
) -> Result<EpsilonScan> {
    let delta = cfg.analysis.delta(tau1);
    let spectra = traces
        .iter()
        .map(|s| spectrum_of(cfg, s, tau1))
        .collect::<Result<Vec<_>>>()?;
    let mut fractions = Vec::with_capacity(peaks.len());
    let mut verdicts = Vec::with_capacity(peaks.len());
    for p in peaks {
        let nu = p.frequency(tau1, cfg.drive.phi);
        fractions.push(spectra.iter().map(|s| fraction_at(s, nu, delta)).collect::<Result<Vec<_>>>()?);
        verdicts.push(spectra.iter().map(|s| split_at(s, nu, delta)).collect::<Result<Vec<_>>>()?);
    }
    Ok(EpsilonScan {
        tau1,
        epsilons: epsilons.to_vec(),
        peaks: peaks.to_vec(),
        spectra,
        fractions,
        verdicts,
    })
}

/// One disorder-averaged sweep over the (τ₁, ε) product for a single spec.
fn run_scans(
    cfg: &RunConfig,
    spec: HamiltonianSpec,
    sampling: SamplingScheme,
    tau1_values: &[f64],
    epsilons: &[f64],
    peaks: &[PeakTarget],
) -> Result<(Vec<EpsilonScan>, RunInfo)> {
    if tau1_values.is_empty() || epsilons.is_empty() {
        return Err(Error::Empty("τ₁ or ε grid"));
    }
    if epsilons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("ε grid must be strictly increasing".into()));
    }
    let points: Vec<SweepPoint> = tau1_values
        .iter()
        .flat_map(|&tau1| {
            epsilons.iter().map(move |&epsilon| SweepPoint {
                tau1,
                epsilon,
                spec,
                sampling,
            })
        })
        .collect();
    let sweep = simulate(cfg, &points, &[cfg.observable()])?;
    let traces: Vec<TimeSeries> = sweep.series.into_iter().map(|mut s| s.remove(0)).collect();
    let scans = tau1_values
        .iter()
        .zip(traces.chunks(epsilons.len()))
        .map(|(&tau1, chunk)| analyse_scan(cfg, tau1, epsilons, chunk, peaks))
        .collect::<Result<Vec<_>>>()?;
    Ok((scans, sweep.info))
}

/// ε scan at the configured τ₁ over `epsilons`.
pub fn run_epsilon_scan(cfg: &RunConfig, epsilons: &[f64]) -> Result<(EpsilonScan, RunInfo)> {
    let peaks = cfg.peak_targets()?;
    let (mut scans, info) = run_scans(cfg, cfg.hamiltonian_spec(), cfg.sampling.scheme, &[cfg.drive.tau1_us], epsilons, &peaks)?;
    Ok((scans.remove(0), info))
}

#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub scans: Vec<EpsilonScan>,
    pub boundaries: Vec<PhaseBoundary>,
}

pub fn run_phase_diagram(cfg: &RunConfig, tau1_values: &[f64], epsilons: &[f64]) -> Result<(PhaseDiagram, RunInfo)> {
    let peaks = cfg.peak_targets()?;
    let (scans, info) = run_scans(cfg, cfg.hamiltonian_spec(), cfg.sampling.scheme, tau1_values, epsilons, &peaks)?;
    let threshold = cfg.analysis.threshold;
    let boundaries = peaks
        .iter()
        .enumerate()
        .map(|(pi, &peak)| {
            let (minus, plus): (Vec<f64>, Vec<f64>) = scans
                .iter()
                .map(|s| s.critical(pi, threshold))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            Ok(PhaseBoundary {
                peak,
                threshold,
                tau1_values: tau1_values.to_vec(),
                eps_c_minus: minus,
                eps_c_plus: plus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((PhaseDiagram { scans, boundaries }, info))
}

/// The four response lines of the two-group drive, as multiples of ω₁.
pub fn z2z2_predicted(phi: f64) -> [(&'static str, f64); 4] {
    let w2 = 1.0 / phi;
    [
        ("(w1+w2)/2", 0.5 * (1.0 + w2)),
        ("(w1-w2)/2", 0.5 * (1.0 - w2)),
        ("(-w1+3w2)/2", 0.5 * (-1.0 + 3.0 * w2)),
        ("w1/2", 0.5),
    ]
}

/// Lines that quasi-periodic sampling adds on top of the physical response,
/// as multiples of ω₁.
pub fn z2z2_sampling_artifacts(phi: f64) -> [(&'static str, f64); 2] {
    let w2 = 1.0 / phi;
    [("w2-w1/2", w2 - 0.5), ("2w2-w1/2", 2.0 * w2 - 0.5)]
}

#[derive(Debug, Clone)]
pub struct Z2z2Result {
    pub tau1: f64,
    /// Dense-sampled ε = 0 traces: group A, group B, total, centre spin.
    pub traces: Vec<TimeSeries>,
    pub dense_spectrum: Spectrum,
    /// Total S^x sampled only at pulse times.
    pub quasi_spectrum: Spectrum,
    /// `(bin_lo, bin_hi, count)` over the dense total trace.
    pub histogram: Vec<(f64, f64, usize)>,
    pub interacting: EpsilonScan,
    pub decoupled: EpsilonScan,
    pub decoupled_spec: HamiltonianSpec,
    pub info: RunInfo,
}

pub const Z2Z2_HISTOGRAM_BINS: usize = 24;

/// Two-group drive: traces and both spectra at ε = 0, then f(ε) at ω₁/2 with
/// and without interactions. The f(ε) scans sample at pulse times whatever
/// the configured scheme; the extra sampling lines stay clear of ω₁/2.
pub fn run_z2z2(cfg: &RunConfig, epsilons: &[f64]) -> Result<Z2z2Result> {
    let spec = cfg.hamiltonian_spec();
    if cfg.ensemble.n_groups != 2 {
        return Err(Error::InvalidConfig("z2z2 needs ensemble.n_groups = 2".into()));
    }
    let tau1 = cfg.drive.tau1_us;
    let observables = [
        Observable::GroupSx(Group::A),
        Observable::GroupSx(Group::B),
        Observable::TotalSx,
        Observable::CenterSx,
    ];
    let base = |sampling| SweepPoint {
        tau1,
        epsilon: 0.0,
        spec,
        sampling,
    };
    let sweep = simulate(
        cfg,
        &[base(SamplingScheme::Dense), base(SamplingScheme::Quasiperiodic)],
        &observables,
    )?;
    let mut info = sweep.info.clone();
    let mut series = sweep.series.into_iter();
    let traces = series.next().expect("dense point");
    let quasi = series.next().expect("quasi-periodic point");
    let dense_spectrum = spectrum_of(cfg, &traces[2], tau1)?;
    let quasi_spectrum = spectrum_of(cfg, &quasi[2], tau1)?;
    let histogram = histogram(&traces[2].values, Z2Z2_HISTOGRAM_BINS);

    let peaks = [PeakTarget::HalfOmega1];
    let (mut inter, i1) = run_scans(cfg, spec, SamplingScheme::Quasiperiodic, &[tau1], epsilons, &peaks)?;
    let decoupled_spec = HamiltonianSpec {
        rabi_b: mhz(cfg.z2z2.decoupled_rabi_b_mhz),
        interactions_on: false,
        ..spec
    };
    let (mut dec, i2) = run_scans(cfg, decoupled_spec, SamplingScheme::Quasiperiodic, &[tau1], epsilons, &peaks)?;
    info.absorb(&i1);
    info.absorb(&i2);
    Ok(Z2z2Result {
        tau1,
        traces,
        dense_spectrum,
        quasi_spectrum,
        histogram,
        interacting: inter.remove(0),
        decoupled: dec.remove(0),
        decoupled_spec,
        info,
    })
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::disorder_average;
    use crate::hamiltonian::Variant;
    use crate::propagate::{run_with, Engine};

    fn small(n: usize, realizations: usize) -> RunConfig {
        let mut c = RunConfig::default();
        c.ensemble.n_spins = n;
        c.realizations = realizations;
        c.master_seed = 7;
        c.drive.horizon_periods = 20.0;
        c
    }

    #[test]
    fn running_sum_matches_disorder_average() {
        let mut cfg = small(6, 5);
        cfg.workers = 1;
        let spec = cfg.hamiltonian_spec();
        let point = SweepPoint {
            tau1: 1.0,
            epsilon: 0.03,
            spec,
            sampling: SamplingScheme::Quasiperiodic,
        };
        let got = simulate(&cfg, &[point], &[Observable::CenterSx]).unwrap();
        let sched = cfg.schedule_for(1.0, 0.03).unwrap();
        let runs: Vec<TimeSeries> = (0..5)
            .map(|r| {
                let ens = build_ensemble(&cfg.ensemble_config(), r).unwrap();
                let prop = make_propagator(&ens, &spec, Engine::Krylov, cfg.krylov).unwrap();
                run_with(prop.as_ref(), &ens, &sched, &[Observable::CenterSx], None)
                    .unwrap()
                    .remove(0)
            })
            .collect();
        let want = disorder_average(&runs).unwrap();
        for (a, b) in got.series[0][0].values.iter().zip(&want.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(got.series[0][0].meta.seed_offsets, vec![0, 1, 2, 3, 4]);
        assert_eq!(got.info.engines, vec!["dense".to_string()]);
    }

    #[test]
    fn worker_count_does_not_change_averages() {
        let mut cfg = small(6, 7);
        let eps = [-0.05, 0.0, 0.05];
        cfg.workers = 1;
        let (a, _) = run_epsilon_scan(&cfg, &eps).unwrap();
        cfg.workers = 3;
        let (b, _) = run_epsilon_scan(&cfg, &eps).unwrap();
        assert_eq!(a.fractions, b.fractions);
        assert_eq!(a.spectra[1].magnitudes, b.spectra[1].magnitudes);
    }

    #[test]
    fn trace_reports_configured_peaks() {
        let cfg = small(4, 2);
        let t = run_trace(&cfg).unwrap();
        assert_eq!(t.peaks.len(), 3);
        assert_eq!(t.peaks[0].label, "(0,0)");
        assert!((t.peaks[0].predicted_over_omega1 - 0.5 * (1.0 + 1.0 / 1.618)).abs() < 1e-12);
        assert_eq!(t.series.len(), t.schedule.sample_times.len());
    }

    #[test]
    fn phase_diagram_shapes() {
        let cfg = small(4, 2);
        let (pd, info) = run_phase_diagram(&cfg, &[0.5, 1.0], &[-0.1, 0.0, 0.1]).unwrap();
        assert_eq!(pd.scans.len(), 2);
        assert_eq!(pd.boundaries.len(), 3);
        for b in &pd.boundaries {
            assert_eq!(b.tau1_values, vec![0.5, 1.0]);
            for (m, p) in b.eps_c_minus.iter().zip(&b.eps_c_plus) {
                assert!(m <= p && *m >= -0.1 && *p <= 0.1);
            }
        }
        assert_eq!(info.simulated_runs, 12);
    }

    #[test]
    fn z2z2_requires_two_groups() {
        let cfg = small(4, 1);
        assert!(run_z2z2(&cfg, &[0.0]).is_err());
    }

    #[test]
    fn z2z2_runs_both_cases() {
        let mut cfg = RunConfig::preset("fig4").unwrap();
        cfg.ensemble.n_spins = 4;
        cfg.realizations = 1;
        cfg.drive.horizon_periods = 20.0;
        let z = run_z2z2(&cfg, &[-0.05, 0.0, 0.05]).unwrap();
        assert_eq!(z.traces.len(), 4);
        assert!(!z.decoupled_spec.interactions_on);
        assert_eq!(z.decoupled_spec.variant, Variant::TwoGroup);
        assert_eq!(z.histogram.iter().map(|b| b.2).sum::<usize>(), z.traces[2].len());
        assert_eq!(z.interacting.epsilons, z.decoupled.epsilons);
        assert_eq!(z.interacting.peaks, vec![PeakTarget::HalfOmega1]);
    }

    #[test]
    fn group_traces_add_to_total() {
        let mut cfg = RunConfig::preset("fig4").unwrap();
        cfg.ensemble.n_spins = 4;
        cfg.realizations = 2;
        cfg.drive.horizon_periods = 10.0;
        let z = run_z2z2(&cfg, &[0.0]).unwrap();
        for k in 0..z.traces[2].len() {
            let sum = z.traces[0].values[k] + z.traces[1].values[k];
            assert!((sum - z.traces[2].values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn predicted_z2z2_lines() {
        let p = z2z2_predicted(1.618);
        assert!((p[0].1 - 0.809).abs() < 1e-3);
        assert!((p[1].1 - 0.191).abs() < 1e-3);
        assert!((p[2].1 - 0.427).abs() < 1e-3);
        let a = z2z2_sampling_artifacts(1.618);
        assert!((a[0].1 - 0.118).abs() < 1e-3);
        assert!((a[1].1 - 0.736).abs() < 1e-3);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0, -1.0], 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[3].2, 3);
        assert_eq!(h[0].0, -1.0);
        assert!(histogram(&[], 3).is_empty());
    }
}
