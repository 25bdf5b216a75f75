//! The CLI commands: run an experiment, then write its tables, sidecars,
//! plots and manifest into one output directory.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::ensemble::build_ensemble;
use crate::experiment::{
    run_epsilon_scan, run_phase_diagram, run_trace, run_z2z2, z2z2_predicted, z2z2_sampling_artifacts, EpsilonScan,
    PhaseDiagram, RunInfo, TraceResult, Z2z2Result,
};
use crate::hamiltonian::build;
use crate::output::{self, write_json, OutputDir, RunManifest};
use crate::validate::{self, Check};
use crate::{plot, Result};

fn finish(out: &mut OutputDir, command: &str, cfg: &RunConfig, info: &RunInfo, start: Instant) -> Result<()> {
    let cfg_path = out.path("config.toml");
    fs::write(cfg_path, cfg.to_toml_string()?)?;
    let manifest_path = out.path("manifest.json");
    let manifest = RunManifest::new(command, cfg, info, start.elapsed().as_secs_f64(), out.files());
    write_json(&manifest_path, &manifest)
}

/// Disorder-averaged trace and spectrum at the configured (τ₁, ε).
/// `export_matrix` also writes realization 0's Hamiltonian in coordinate form.
pub fn cmd_trace(cfg: &RunConfig, out_dir: &Path, export_matrix: bool) -> Result<TraceResult> {
    let start = Instant::now();
    let res = run_trace(cfg)?;
    let mut out = OutputDir::create(out_dir)?;
    let omega1 = res.schedule.omega1();

    let p = out.path("trace.csv");
    output::write_series(&p, &res.series)?;
    out.path("trace.json");
    output::write_spectrum(&out.path("spectrum.csv"), &res.spectrum, omega1)?;
    output::write_peaks(&out.path("peaks.csv"), &res.peaks)?;
    fs::write(out.path("schedule.json"), res.schedule.to_json()?)?;
    let ens = build_ensemble(&cfg.ensemble_config(), 0)?;
    fs::write(out.path("ensemble.json"), ens.to_json()?)?;
    if export_matrix {
        let h = build(&ens, &cfg.hamiltonian_spec())?;
        let f = fs::File::create(out.path("hamiltonian.coo"))?;
        h.write_coordinate(BufWriter::new(f))?;
    }
    plot::plot_trace(&out.path("trace.svg"), &res.series, &res.spectrum, res.tau1, &res.peaks)?;
    finish(&mut out, "trace", cfg, &res.info, start)?;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
struct PeakSummary {
    peak: String,
    rigid_interval: Option<(f64, f64)>,
    argmax_epsilon: f64,
    max_fraction: f64,
    eps_c_minus: f64,
    eps_c_plus: f64,
}

fn summarize(scan: &EpsilonScan, threshold: f64) -> Result<Vec<PeakSummary>> {
    scan.peaks
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (m, pl) = scan.critical(k, threshold)?;
            Ok(PeakSummary {
                peak: p.label(),
                rigid_interval: scan.rigid_interval(k),
                argmax_epsilon: scan.argmax(k),
                max_fraction: scan.fractions[k].iter().copied().fold(0.0, f64::max),
                eps_c_minus: m,
                eps_c_plus: pl,
            })
        })
        .collect()
}

/// Spectra and crystalline fractions along `epsilons` at the configured τ₁.
pub fn cmd_epsilon_scan(cfg: &RunConfig, epsilons: &[f64], out_dir: &Path) -> Result<EpsilonScan> {
    let start = Instant::now();
    let (scan, info) = run_epsilon_scan(cfg, epsilons)?;
    let mut out = OutputDir::create(out_dir)?;
    output::write_fractions(&out.path("fractions.csv"), &[&scan])?;
    output::write_scan_spectra(&out.path("spectra.csv"), &scan)?;
    write_json(&out.path("scan_summary.json"), &summarize(&scan, cfg.analysis.threshold)?)?;
    plot::plot_scan(&out.path("epsilon_scan.svg"), &scan, cfg.analysis.threshold)?;
    finish(&mut out, "epsilon-scan", cfg, &info, start)?;
    Ok(scan)
}

/// Full (τ₁, ε) sweep and the critical-ε boundary of each configured peak.
pub fn cmd_phase_diagram(cfg: &RunConfig, tau1_values: &[f64], epsilons: &[f64], out_dir: &Path) -> Result<PhaseDiagram> {
    let start = Instant::now();
    let (pd, info) = run_phase_diagram(cfg, tau1_values, epsilons)?;
    let mut out = OutputDir::create(out_dir)?;
    output::write_boundaries(&out.path("phase_boundary.csv"), &pd.boundaries)?;
    let scans: Vec<&EpsilonScan> = pd.scans.iter().collect();
    output::write_fractions(&out.path("fractions.csv"), &scans)?;
    plot::plot_boundaries(&out.path("phase_diagram.svg"), &pd.boundaries)?;
    finish(&mut out, "phase-diagram", cfg, &info, start)?;
    Ok(pd)
}

/// Two-group drive: traces, both spectra, histogram and f(ε) at ω₁/2.
pub fn cmd_z2z2(cfg: &RunConfig, epsilons: &[f64], out_dir: &Path) -> Result<Z2z2Result> {
    let start = Instant::now();
    let z = run_z2z2(cfg, epsilons)?;
    let mut out = OutputDir::create(out_dir)?;
    let omega1 = 2.0 * std::f64::consts::PI / z.tau1;

    let traces: Vec<_> = z.traces.iter().collect();
    output::write_series_table(&out.path("z2z2_traces.csv"), &traces)?;
    output::write_series(&out.path("total_sx.csv"), &z.traces[2])?;
    out.path("total_sx.json");
    output::write_spectrum(&out.path("spectrum_dense.csv"), &z.dense_spectrum, omega1)?;
    output::write_spectrum(&out.path("spectrum_quasiperiodic.csv"), &z.quasi_spectrum, omega1)?;
    output::write_histogram(&out.path("histogram.csv"), &z.histogram)?;

    let phi = cfg.drive.phi;
    let mut lines = csv::Writer::from_path(out.path("z2z2_lines.csv"))?;
    lines.write_record(["line", "kind", "omega_over_omega1", "dense_magnitude", "quasiperiodic_magnitude"])?;
    let kinds = z2z2_predicted(phi)
        .into_iter()
        .map(|l| (l, "response"))
        .chain(z2z2_sampling_artifacts(phi).into_iter().map(|l| (l, "sampling")));
    for ((label, x), kind) in kinds {
        let nu = x * omega1;
        lines.write_record([
            label.to_string(),
            kind.to_string(),
            format!("{x}"),
            format!("{}", z.dense_spectrum.max_near(nu)),
            format!("{}", z.quasi_spectrum.max_near(nu)),
        ])?;
    }
    lines.flush()?;

    let mut fr = csv::Writer::from_path(out.path("z2z2_fraction.csv"))?;
    fr.write_record(["epsilon", "interacting", "decoupled"])?;
    for (k, e) in z.interacting.epsilons.iter().enumerate() {
        fr.write_record([
            format!("{e}"),
            format!("{}", z.interacting.fractions[0][k]),
            format!("{}", z.decoupled.fractions[0][k]),
        ])?;
    }
    fr.flush()?;

    plot::plot_z2z2(&out.path("z2z2.svg"), &z, phi, cfg.analysis.threshold)?;
    finish(&mut out, "z2z2", cfg, &z.info, start)?;
    Ok(z)
}

/// The oracle suite; writes `validation.csv` and returns every check.
pub fn cmd_validate(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<Check>> {
    let start = Instant::now();
    let checks = validate::run_all(cfg.master_seed)?;
    let mut out = OutputDir::create(out_dir)?;
    let mut w = csv::Writer::from_path(out.path("validation.csv"))?;
    w.write_record(["check", "passed", "metric", "tolerance", "detail"])?;
    for c in &checks {
        w.write_record([
            c.name.clone(),
            c.passed.to_string(),
            format!("{:e}", c.metric),
            format!("{:e}", c.tolerance),
            c.detail.clone(),
        ])?;
    }
    w.flush()?;
    let info = RunInfo {
        elapsed_s: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    finish(&mut out, "validate", cfg, &info, start)?;
    Ok(checks)
}
