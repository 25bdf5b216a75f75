//! Spectra of time traces, predicted sub-harmonic peaks, crystalline
//! fractions, split detection and phase-boundary extraction.
//!
//! Spectra use `S(ν) = (1/M) Σ_k s(t_k) e^{−iνt_k}` over the M samples, so
//! a unit cosine has `|S| ≈ 1/2` at its frequency. [`Spectrum::magnitudes`]
//! stores `2|S|`, which puts that peak at ≈ 1.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::propagate::{SeriesMeta, TimeSeries};
use crate::{Error, Result};

/// Relative slack when comparing frequencies against grid steps.
const GRID_SLACK: f64 = 1e-9;

/// Uniform angular-frequency grid `start + k·step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::InvalidConfig(format!("bad frequency grid step {step}")));
        }
        if len == 0 {
            return Err(Error::Empty("frequency grid"));
        }
        Ok(Self { start, step, len })
    }

    /// `[0, max_omega1·ω₁]` with spacing `2π/(oversample·T)` for a record of length `T`.
    pub fn for_record(duration: f64, omega1: f64, oversample: f64, max_omega1: f64) -> Result<Self> {
        if !(duration > 0.0) || !(oversample > 0.0) || !(max_omega1 > 0.0) || !(omega1 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frequency grid needs positive duration, ω₁, oversampling and range \
                 (got T={duration}, ω₁={omega1}, oversample={oversample}, max={max_omega1})"
            )));
        }
        let step = 2.0 * PI / (oversample * duration);
        let hi = max_omega1 * omega1;
        let len = (hi / step * (1.0 + GRID_SLACK)).floor() as usize + 1;
        Self::new(0.0, step, len)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }

    /// Index of the grid point nearest `nu` (clamped to the grid).
    pub fn nearest(&self, nu: f64) -> usize {
        let k = ((nu - self.start) / self.step).round();
        k.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Indices `k` with `|at(k) − nu| ≤ half_width` (plus round-off slack).
    fn within(&self, nu: f64, half_width: f64) -> std::ops::RangeInclusive<usize> {
        let slack = GRID_SLACK * self.step.max(half_width);
        let lo = ((nu - half_width - slack - self.start) / self.step).ceil().max(0.0) as usize;
        let hi = ((nu + half_width + slack - self.start) / self.step).floor();
        let hi = hi.min((self.len - 1) as f64).max(-1.0);
        if hi < lo as f64 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo..=hi as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    /// `sin²(π(t−t₀)/T)` over the record, normalized by the sum of weights.
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub amplitudes: Vec<C64>,
    /// `2|S(ν)|`
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.values()
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    /// Magnitudes multiplied by `c`; amplitudes follow.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            magnitudes: self.magnitudes.iter().map(|m| m * c.abs()).collect(),
        }
    }

    /// Strict local maxima (plateaus count once, at their left edge) over the
    /// whole grid. Grid ends count when they exceed their single neighbour.
    pub fn local_maxima(&self) -> Vec<usize> {
        let m = &self.magnitudes;
        let n = m.len();
        let mut out = Vec::new();
        let mut k = 0;
        while k < n {
            let mut r = k;
            while r + 1 < n && m[r + 1] == m[k] {
                r += 1;
            }
            let left_ok = k == 0 || m[k - 1] < m[k];
            let right_ok = r + 1 == n || m[r + 1] < m[k];
            if left_ok && right_ok && m[k] > 0.0 && n > 1 {
                out.push(k);
            }
            k = r + 1;
        }
        out
    }

    /// Largest magnitude within one grid step of `nu`.
    pub fn max_near(&self, nu: f64) -> f64 {
        self.grid
            .within(nu, self.grid.step)
            .map(|k| self.magnitudes[k])
            .fold(0.0, f64::max)
    }

    /// The `count` largest local maxima with frequency in `[lo, hi]`, largest
    /// first. A maximum closer than `min_separation` to a larger accepted one is
    /// skipped, so window sidelobes are not counted as separate lines.
    pub fn top_peaks(&self, lo: f64, hi: f64, count: usize, min_separation: f64) -> Vec<usize> {
        let mut candidates: Vec<usize> = self
            .local_maxima()
            .into_iter()
            .filter(|&k| {
                let nu = self.grid.at(k);
                nu >= lo - GRID_SLACK * self.grid.step && nu <= hi + GRID_SLACK * self.grid.step
            })
            .collect();
        candidates.sort_by(|a, b| self.magnitudes[*b].total_cmp(&self.magnitudes[*a]).then(a.cmp(b)));
        let mut peaks: Vec<usize> = Vec::with_capacity(count);
        for k in candidates {
            if peaks.len() == count {
                break;
            }
            let nu = self.grid.at(k);
            if peaks.iter().all(|&p| (self.grid.at(p) - nu).abs() >= min_separation) {
                peaks.push(k);
            }
        }
        peaks
    }

    /// Whether a local maximum lies within `steps` grid steps of `nu`.
    pub fn has_local_max_near(&self, nu: f64, steps: f64) -> bool {
        self.local_maxima()
            .iter()
            .any(|&k| (self.grid.at(k) - nu).abs() <= steps * self.grid.step * (1.0 + GRID_SLACK))
    }
}

fn check_samples(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::GridMismatch(format!(
            "{} sample times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::Empty("a spectrum needs at least two samples"));
    }
    Ok(())
}

/// Nonuniform DFT of `(times, values)` on `grid`, with optional taper.
pub fn nudft_samples(times: &[f64], values: &[f64], grid: &FrequencyGrid, window: Window) -> Result<Spectrum> {
    check_samples(times, values)?;
    let weights: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; times.len()],
        Window::Hann => {
            let t0 = times[0];
            let span = times[times.len() - 1] - t0;
            times
                .iter()
                .map(|t| if span > 0.0 { (PI * (t - t0) / span).sin().powi(2) } else { 1.0 })
                .collect()
        }
    };
    let norm: f64 = weights.iter().sum();
    let weighted: Vec<f64> = values.iter().zip(&weights).map(|(v, w)| v * w / norm).collect();
    let at = |k: usize| -> C64 {
        let nu = grid.at(k);
        times
            .iter()
            .zip(&weighted)
            .map(|(t, s)| {
                let (sin, cos) = (nu * t).sin_cos();
                C64::new(s * cos, -s * sin)
            })
            .sum()
    };
    #[cfg(feature = "parallel")]
    let amplitudes: Vec<C64> = (0..grid.len).into_par_iter().map(at).collect();
    #[cfg(not(feature = "parallel"))]
    let amplitudes: Vec<C64> = (0..grid.len).map(at).collect();
    let magnitudes = amplitudes.iter().map(|a| 2.0 * a.norm()).collect();
    Ok(Spectrum {
        grid: *grid,
        amplitudes,
        magnitudes,
    })
}

/// Rectangular-window NUDFT of a time series.
pub fn nudft(series: &TimeSeries, grid: &FrequencyGrid) -> Result<Spectrum> {
    nudft_samples(&series.times, &series.values, grid, Window::Rectangular)
}

/// `(N₁, N₂)` labelling the peak at `(N₁+½)ω₁ + (N₂+½)ω₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubharmonicIndex {
    pub n1: i64,
    pub n2: i64,
}

impl SubharmonicIndex {
    pub const fn new(n1: i64, n2: i64) -> Self {
        Self { n1, n2 }
    }

    /// (0,0), (0,−1), (−1,1): the three dominant single-group peaks.
    pub const PRIMARY: [SubharmonicIndex; 3] = [Self::new(0, 0), Self::new(0, -1), Self::new(-1, 1)];
}

impl fmt::Display for SubharmonicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n1, self.n2)
    }
}

impl FromStr for SubharmonicIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("expected a peak index like \"(0,-1)\", got {s:?}"));
        let inner = s.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        Ok(Self {
            n1: a.trim().parse().map_err(|_| bad())?,
            n2: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// `|(N₁+½)ω₁ + (N₂+½)ω₂|` with `ω₁ = 2π/τ₁`, `ω₂ = ω₁/φ`.
pub fn subharmonic_frequency(idx: SubharmonicIndex, tau1: f64, phi: f64) -> f64 {
    let w1 = 2.0 * PI / tau1;
    let w2 = w1 / phi;
    ((idx.n1 as f64 + 0.5) * w1 + (idx.n2 as f64 + 0.5) * w2).abs()
}

/// A frequency whose spectral weight is tracked across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakTarget {
    Subharmonic(SubharmonicIndex),
    /// ω₁/2, the period-doubling line of the two-group drive.
    HalfOmega1,
}

impl PeakTarget {
    pub fn frequency(self, tau1: f64, phi: f64) -> f64 {
        match self {
            PeakTarget::Subharmonic(idx) => subharmonic_frequency(idx, tau1, phi),
            PeakTarget::HalfOmega1 => PI / tau1,
        }
    }

    pub fn label(self) -> String {
        match self {
            PeakTarget::Subharmonic(idx) => idx.to_string(),
            PeakTarget::HalfOmega1 => "w1/2".into(),
        }
    }
}

impl From<SubharmonicIndex> for PeakTarget {
    fn from(idx: SubharmonicIndex) -> Self {
        PeakTarget::Subharmonic(idx)
    }
}

fn window_indices(spec: &Spectrum, nu0: f64, delta: f64) -> Result<std::ops::RangeInclusive<usize>> {
    let g = &spec.grid;
    let slack = GRID_SLACK * g.step;
    if !(delta > 0.0) || nu0 - delta < g.start - slack || nu0 + delta > g.end() + slack {
        return Err(Error::WindowOutOfRange {
            lo: nu0 - delta,
            hi: nu0 + delta,
            grid_lo: g.start,
            grid_hi: g.end(),
        });
    }
    Ok(g.within(nu0, delta))
}

/// Peak weight at `nu0` relative to the summed weight within `±delta`.
/// The numerator is the largest magnitude within one grid step of `nu0`.
pub fn fraction_at(spec: &Spectrum, nu0: f64, delta: f64) -> Result<f64> {
    let window = window_indices(spec, nu0, delta)?;
    let m = &spec.magnitudes;
    let total: f64 = window.map(|k| m[k]).sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok((spec.max_near(nu0) / total).min(1.0))
}

pub fn crystalline_fraction(
    spec: &Spectrum,
    idx: SubharmonicIndex,
    tau1: f64,
    phi: f64,
    delta: f64,
) -> Result<f64> {
    fraction_at(spec, subharmonic_frequency(idx, tau1, phi), delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitVerdict {
    Unsplit { nu: f64 },
    /// `lo == hi` when the window holds a single maximum away from the prediction.
    Split { lo: f64, hi: f64 },
}

impl SplitVerdict {
    pub fn is_split(&self) -> bool {
        matches!(self, SplitVerdict::Split { .. })
    }

    pub fn separation(&self) -> f64 {
        match *self {
            SplitVerdict::Unsplit { .. } => 0.0,
            SplitVerdict::Split { lo, hi } => hi - lo,
        }
    }
}

/// Classifies the line shape around `nu0` within `±delta`.
pub fn split_at(spec: &Spectrum, nu0: f64, delta: f64) -> Result<SplitVerdict> {
    let window = window_indices(spec, nu0, delta)?;
    let m = &spec.magnitudes;
    let g = &spec.grid;
    let mut maxima: Vec<usize> = spec
        .local_maxima()
        .into_iter()
        .filter(|k| window.contains(k))
        .collect();
    if maxima.is_empty() {
        let best = window.clone().max_by(|a, b| m[*a].total_cmp(&m[*b]).then(b.cmp(a)));
        maxima.extend(best);
    }
    maxima.sort_by(|a, b| m[*b].total_cmp(&m[*a]).then(a.cmp(b)));
    let dom = maxima[0];
    let near = (g.at(dom) - nu0).abs() <= g.step * (1.0 + GRID_SLACK);
    let secondary_small = maxima.get(1).is_none_or(|&k| m[k] <= 0.5 * m[dom]);
    if near && secondary_small {
        return Ok(SplitVerdict::Unsplit { nu: g.at(dom) });
    }
    let other = maxima.get(1).copied().unwrap_or(dom);
    let (a, b) = (g.at(dom), g.at(other));
    Ok(SplitVerdict::Split {
        lo: a.min(b),
        hi: a.max(b),
    })
}

pub fn detect_split(
    spec: &Spectrum,
    idx: SubharmonicIndex,
    tau1: f64,
    phi: f64,
    delta: f64,
) -> Result<SplitVerdict> {
    split_at(spec, subharmonic_frequency(idx, tau1, phi), delta)
}

/// Pointwise mean over realizations, accumulated in list order.
pub fn disorder_average(runs: &[TimeSeries]) -> Result<TimeSeries> {
    let first = runs.first().ok_or(Error::Empty("no runs to average"))?;
    for (k, r) in runs.iter().enumerate().skip(1) {
        if r.times != first.times {
            return Err(Error::GridMismatch(format!("run {k} has a different sampling grid")));
        }
        if r.observable != first.observable {
            return Err(Error::GridMismatch(format!("run {k} records a different observable")));
        }
        if r.values.len() != first.values.len() {
            return Err(Error::GridMismatch(format!("run {k} has a different length")));
        }
    }
    let n = runs.len() as f64;
    let mut values = vec![0.0; first.values.len()];
    for r in runs {
        for (acc, v) in values.iter_mut().zip(&r.values) {
            *acc += v;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    let meta = SeriesMeta {
        realizations: runs.iter().map(|r| r.meta.realizations).sum(),
        seed_offsets: runs.iter().flat_map(|r| r.meta.seed_offsets.iter().copied()).collect(),
        ..first.meta.clone()
    };
    Ok(TimeSeries {
        times: first.times.clone(),
        values,
        observable: first.observable,
        meta,
    })
}

/// `(ε_c⁻, ε_c⁺)`: outermost threshold crossings on either side of the
/// maximum of `f`, linearly interpolated. A curve that reaches the first or
/// last ε while still above threshold is clamped there. If `f` never exceeds
/// the threshold the pair collapses onto the argmax.
pub fn critical_epsilon(curve: &[(f64, f64)], threshold: f64) -> Result<(f64, f64)> {
    if curve.is_empty() {
        return Err(Error::Empty("f(ε) curve"));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidConfig("f(ε) curve must be strictly increasing in ε".into()));
    }
    let imax = argmax_curve(curve);
    let (e_max, f_max) = curve[imax];
    if f_max <= threshold {
        return Ok((e_max, e_max));
    }
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (threshold - a.1) * (b.0 - a.0) / (b.1 - a.1);

    let hi = (imax..curve.len()).rev().find(|&k| curve[k].1 > threshold).unwrap_or(imax);
    let plus = if hi + 1 < curve.len() {
        cross(curve[hi], curve[hi + 1])
    } else {
        curve[hi].0
    };
    let lo = (0..=imax).find(|&k| curve[k].1 > threshold).unwrap_or(imax);
    let minus = if lo > 0 { cross(curve[lo - 1], curve[lo]) } else { curve[lo].0 };
    Ok((minus, plus))
}

/// Index of the largest `f` (first on ties).
pub fn argmax_curve(curve: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (k, p) in curve.iter().enumerate() {
        if p.1 > curve[best].1 {
            best = k;
        }
    }
    best
}

/// Longest contiguous run of unsplit verdicts in an ε-sorted scan, as
/// `(ε_first, ε_last)`. Ties go to the run closest to ε = 0.
pub fn rigid_interval(scan: &[(f64, bool)]) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < scan.len() {
        if !scan[k].1 {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < scan.len() && scan[k + 1].1 {
            k += 1;
        }
        let better = match best {
            None => true,
            Some((s, e)) => {
                let (len, cur) = (k - start, e - s);
                // distance of [ε_a, ε_b] from zero
                let dist = |a: usize, b: usize| {
                    if scan[a].0 <= 0.0 && scan[b].0 >= 0.0 {
                        0.0
                    } else {
                        scan[a].0.abs().min(scan[b].0.abs())
                    }
                };
                len > cur || (len == cur && dist(start, k) < dist(s, e))
            }
        };
        if better {
            best = Some((start, k));
        }
        k += 1;
    }
    best.map(|(s, e)| (scan[s].0, scan[e].0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub peak: PeakTarget,
    pub threshold: f64,
    /// µs
    pub tau1_values: Vec<f64>,
    pub eps_c_minus: Vec<f64>,
    pub eps_c_plus: Vec<f64>,
}

impl PhaseBoundary {
    pub fn widths(&self) -> Vec<f64> {
        self.eps_c_plus.iter().zip(&self.eps_c_minus).map(|(p, m)| p - m).collect()
    }

    /// Boundary at the `τ₁` closest to `tau1`.
    pub fn at(&self, tau1: f64) -> Option<(f64, f64)> {
        let k = self
            .tau1_values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - tau1).abs().total_cmp(&(b.1 - tau1).abs()))?
            .0;
        Some((self.eps_c_minus[k], self.eps_c_plus[k]))
    }
}
