//! On-disk formats: RFC 4180 CSV tables, JSON sidecars and the run manifest.
//!
//! Floats are written in Rust's shortest round-trip form, so a CSV re-read
//! gives back the exact values and identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{PhaseBoundary, Spectrum, SplitVerdict};
use crate::config::RunConfig;
use crate::experiment::{EpsilonScan, PeakReport, RunInfo};
use crate::propagate::{Observable, SeriesMeta, TimeSeries};
use crate::{drive, ensemble, propagate, units, Result};

/// Collects written file names (relative to the output directory) for the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Path for `name`, recorded as written.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub columns: [String; 2],
    pub observable: Observable,
    pub samples: usize,
    pub meta: SeriesMeta,
}

/// `time_us,value` plus a JSON sidecar with the provenance next to it.
pub fn write_series(path: &Path, series: &TimeSeries) -> Result<PathBuf> {
    write_rows(
        path,
        &["time_us", "value"],
        series.times.iter().zip(&series.values).map(|(t, v)| vec![num(*t), num(*v)]),
    )?;
    let sidecar = path.with_extension("json");
    write_json(
        &sidecar,
        &SeriesSidecar {
            columns: ["time_us".into(), "value".into()],
            observable: series.observable,
            samples: series.len(),
            meta: series.meta.clone(),
        },
    )?;
    Ok(sidecar)
}

/// Reads back a `time_us,value` file.
pub fn read_series_values(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.deserialize() {
        let (t, v): (f64, f64) = rec?;
        times.push(t);
        values.push(v);
    }
    Ok((times, values))
}

/// Several series on a shared time axis, one column each.
pub fn write_series_table(path: &Path, series: &[&TimeSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(crate::Error::Empty("no series to tabulate"));
    };
    if series.iter().any(|s| s.times != first.times) {
        return Err(crate::Error::GridMismatch("series table needs a shared time axis".into()));
    }
    let mut header = vec!["time_us"];
    header.extend(series.iter().map(|s| s.observable.label()));
    write_rows(
        path,
        &header,
        (0..first.len()).map(|k| {
            let mut row = vec![num(first.times[k])];
            row.extend(series.iter().map(|s| num(s.values[k])));
            row
        }),
    )
}

pub fn write_spectrum(path: &Path, spec: &Spectrum, omega1: f64) -> Result<()> {
    write_rows(
        path,
        &["omega_rad_per_us", "omega_over_omega1", "re", "im", "magnitude"],
        spec.amplitudes.iter().zip(&spec.magnitudes).enumerate().map(|(k, (a, m))| {
            let nu = spec.grid.at(k);
            vec![num(nu), num(nu / omega1), num(a.re), num(a.im), num(*m)]
        }),
    )
}

fn verdict_cols(v: &SplitVerdict) -> [String; 4] {
    match *v {
        SplitVerdict::Unsplit { nu } => ["false".into(), num(nu), num(nu), num(0.0)],
        SplitVerdict::Split { lo, hi } => ["true".into(), num(lo), num(hi), num(hi - lo)],
    }
}

pub fn write_peaks(path: &Path, peaks: &[PeakReport]) -> Result<()> {
    write_rows(
        path,
        &[
            "peak",
            "predicted_rad_per_us",
            "predicted_over_omega1",
            "magnitude",
            "fraction",
            "split",
            "line_lo",
            "line_hi",
            "separation",
        ],
        peaks.iter().map(|p| {
            let mut row = vec![
                p.label.clone(),
                num(p.predicted),
                num(p.predicted_over_omega1),
                num(p.magnitude),
                num(p.fraction),
            ];
            row.extend(verdict_cols(&p.verdict));
            row
        }),
    )
}

/// Long format: one row per (τ₁, ε, peak).
pub fn write_fractions(path: &Path, scans: &[&EpsilonScan]) -> Result<()> {
    let mut rows = Vec::new();
    for s in scans {
        for (pi, peak) in s.peaks.iter().enumerate() {
            for (ei, eps) in s.epsilons.iter().enumerate() {
                let mut row = vec![num(s.tau1), num(*eps), peak.label(), num(s.fractions[pi][ei])];
                row.extend(verdict_cols(&s.verdicts[pi][ei]));
                rows.push(row);
            }
        }
    }
    write_rows(
        path,
        &["tau1_us", "epsilon", "peak", "fraction", "split", "line_lo", "line_hi", "separation"],
        rows,
    )
}

/// Long format: `epsilon, omega, omega/ω₁, magnitude` for every spectrum of a scan.
pub fn write_scan_spectra(path: &Path, scan: &EpsilonScan) -> Result<()> {
    let omega1 = 2.0 * std::f64::consts::PI / scan.tau1;
    let mut rows = Vec::new();
    for (eps, spec) in scan.epsilons.iter().zip(&scan.spectra) {
        for (k, m) in spec.magnitudes.iter().enumerate() {
            let nu = spec.grid.at(k);
            rows.push(vec![num(*eps), num(nu), num(nu / omega1), num(*m)]);
        }
    }
    write_rows(path, &["epsilon", "omega_rad_per_us", "omega_over_omega1", "magnitude"], rows)
}

/// `tau1_us, eps_c_minus, eps_c_plus, peak, threshold` rows.
pub fn write_boundaries(path: &Path, boundaries: &[PhaseBoundary]) -> Result<()> {
    let mut rows = Vec::new();
    for b in boundaries {
        for k in 0..b.tau1_values.len() {
            rows.push(vec![
                num(b.tau1_values[k]),
                num(b.eps_c_minus[k]),
                num(b.eps_c_plus[k]),
                b.peak.label(),
                num(b.threshold),
            ]);
        }
    }
    write_rows(path, &["tau1_us", "eps_c_minus", "eps_c_plus", "peak", "threshold"], rows)
}

pub fn write_histogram(path: &Path, bins: &[(f64, f64, usize)]) -> Result<()> {
    write_rows(
        path,
        &["bin_lo", "bin_hi", "count"],
        bins.iter().map(|(lo, hi, c)| vec![num(*lo), num(*hi), c.to_string()]),
    )
}

/// Fixed numbers a run depends on beyond its config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub dipolar_coefficient_mhz_nm3: f64,
    pub diamond_carbon_density_per_cm3: f64,
    pub ppm_to_spins_per_nm3: f64,
    pub golden_ratio: f64,
    pub coincidence_tol_us: f64,
    pub dense_samples_per_tau1: usize,
    pub max_dense_spins: usize,
    pub units: String,
}

impl Constants {
    pub fn current() -> Self {
        Self {
            dipolar_coefficient_mhz_nm3: units::DIPOLAR_COEFFICIENT_MHZ_NM3,
            diamond_carbon_density_per_cm3: units::DIAMOND_CARBON_DENSITY_PER_CM3,
            ppm_to_spins_per_nm3: units::ppm_to_density(1.0),
            golden_ratio: units::GOLDEN_RATIO,
            coincidence_tol_us: drive::COINCIDENCE_TOL,
            dense_samples_per_tau1: drive::DENSE_SAMPLES_PER_TAU1,
            max_dense_spins: propagate::MAX_DENSE_SPINS,
            units: "lengths nm, times us, frequencies rad/us (hbar = 1)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub simulate_s: f64,
    pub total_s: f64,
}

/// Everything needed to repeat a run: the resolved config, constants and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub parallel_build: bool,
    pub config: RunConfig,
    pub constants: Constants,
    pub ensemble_constants: ensemble::EnsembleConstants,
    pub master_seed: u64,
    pub seed_offsets: Vec<u64>,
    pub engines: Vec<String>,
    pub simulated_runs: usize,
    pub timings: Timings,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, info: &RunInfo, total_s: f64, files: &[String]) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            parallel_build: cfg!(feature = "parallel"),
            config: cfg.clone(),
            constants: Constants::current(),
            ensemble_constants: ensemble::EnsembleConstants::current(),
            master_seed: cfg.master_seed,
            seed_offsets: info.seed_offsets.clone(),
            engines: info.engines.clone(),
            simulated_runs: info.simulated_runs,
            timings: Timings {
                simulate_s: info.elapsed_s,
                total_s,
            },
            files: files.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{FrequencyGrid, PeakTarget, SubharmonicIndex};

    fn series() -> TimeSeries {
        TimeSeries {
            times: vec![0.0, 0.1, 1.0 / 3.0],
            values: vec![0.5, -0.25, 1e-17],
            observable: Observable::CenterSx,
            meta: SeriesMeta {
                n_spins: 3,
                realizations: 2,
                master_seed: 9,
                seed_offsets: vec![0, 1],
                schedule_digest: "abc".into(),
                hamiltonian: None,
                engine: "dense".into(),
            },
        }
    }

    #[test]
    fn series_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        let side = write_series(&p, &series()).unwrap();
        let (t, v) = read_series_values(&p).unwrap();
        assert_eq!(t, series().times);
        assert_eq!(v, series().values);
        let meta: SeriesSidecar = serde_json::from_str(&fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(meta.meta.seed_offsets, vec![0, 1]);
        assert_eq!(meta.samples, 3);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("time_us,value\n0,0.5\n"));
    }

    #[test]
    fn labels_with_commas_are_quoted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let b = PhaseBoundary {
            peak: PeakTarget::Subharmonic(SubharmonicIndex::new(0, -1)),
            threshold: 0.05,
            tau1_values: vec![1.0],
            eps_c_minus: vec![-0.07],
            eps_c_plus: vec![0.05],
        };
        write_boundaries(&p, &[b]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "tau1_us,eps_c_minus,eps_c_plus,peak,threshold\n1,-0.07,0.05,\"(0,-1)\",0.05\n"
        );
    }

    #[test]
    fn spectrum_rows_follow_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let grid = FrequencyGrid::new(0.0, 0.5, 3).unwrap();
        let spec = crate::analysis::nudft_samples(&[0.0, 1.0], &[1.0, 1.0], &grid, Default::default()).unwrap();
        write_spectrum(&p, &spec, 2.0).unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(&rows[2][0], "1");
        assert_eq!(&rows[2][1], "0.5");
    }

    #[test]
    fn output_dir_records_names_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("nested/run")).unwrap();
        out.path("a.csv");
        out.path("b.csv");
        out.path("a.csv");
        assert_eq!(out.files(), ["a.csv", "b.csv"]);
        assert!(out.root().is_dir());
    }

    #[test]
    fn manifest_carries_config_and_seeds() {
        let cfg = RunConfig::default();
        let info = RunInfo {
            engines: vec!["krylov".into()],
            seed_offsets: vec![0, 1, 2],
            simulated_runs: 3,
            elapsed_s: 0.5,
        };
        let m = RunManifest::new("trace", &cfg, &info, 0.7, &["trace.csv".into()]);
        let text = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.seed_offsets, vec![0, 1, 2]);
        assert_eq!(back.constants.golden_ratio, units::GOLDEN_RATIO);
    }
}
