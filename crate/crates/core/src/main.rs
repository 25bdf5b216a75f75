use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dtqc::commands;
use dtqc::config::{Overrides, RunConfig};
use dtqc::propagate::Engine;

/// Quasi-periodically driven dipolar spin ensembles.
#[derive(Parser)]
#[command(name = "dtqc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; its keys override the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// fig1-short, fig1-long, fig2, fig3 or fig4.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Master seed for disorder realizations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of spins.
    #[arg(long, global = true)]
    spins: Option<usize>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Krylov,
    Dense,
    XBasis,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => Engine::Auto,
            EngineArg::Krylov => Engine::Krylov,
            EngineArg::Dense => Engine::Dense,
            EngineArg::XBasis => Engine::XBasis,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Averaged time trace, spectrum and predicted peaks (default preset fig1-long).
    Trace {
        /// Also write realization 0's Hamiltonian as (row, col, re, im) text.
        #[arg(long)]
        export_matrix: bool,
    },
    /// Spectra and crystalline fraction over the sweep ε grid (default preset fig2).
    EpsilonScan,
    /// Critical ε over the sweep τ₁ and ε grids (default preset fig3).
    PhaseDiagram,
    /// Two-group drive (default preset fig4).
    Z2z2,
    /// Oracle checks of the propagators and the spectral transform.
    Validate,
}

impl Command {
    fn default_preset(&self) -> Option<&'static str> {
        match self {
            Command::Trace { .. } => Some("fig1-long"),
            Command::EpsilonScan => Some("fig2"),
            Command::PhaseDiagram => Some("fig3"),
            Command::Z2z2 => Some("fig4"),
            Command::Validate => None,
        }
    }
}

fn run(cli: Cli) -> dtqc::Result<bool> {
    let c = &cli.common;
    let overrides = Overrides {
        seed: c.seed,
        realizations: c.realizations,
        workers: c.workers,
        out: c.out.clone(),
        n_spins: c.spins,
        engine: c.engine.map(Engine::from),
    };
    let preset = match (&c.preset, &c.config) {
        (Some(p), _) => Some(p.as_str()),
        (None, Some(_)) => None,
        (None, None) => cli.command.default_preset(),
    };
    let cfg = RunConfig::resolve(preset, c.config.as_deref(), &overrides)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Trace { export_matrix } => {
            let r = commands::cmd_trace(&cfg, &out, export_matrix)?;
            for p in &r.peaks {
                println!(
                    "{:>8}  nu/w1 = {:.4}  |S| = {:.4}  f = {:.4}  {}",
                    p.label,
                    p.predicted_over_omega1,
                    p.magnitude,
                    p.fraction,
                    if p.verdict.is_split() { "split" } else { "unsplit" }
                );
            }
        }
        Command::EpsilonScan => {
            let s = commands::cmd_epsilon_scan(&cfg, &cfg.sweep.epsilons(), &out)?;
            for (k, p) in s.peaks.iter().enumerate() {
                println!(
                    "{:>8}  rigid {:?}  argmax eps = {}",
                    p.label(),
                    s.rigid_interval(k),
                    s.argmax(k)
                );
            }
        }
        Command::PhaseDiagram => {
            let pd = commands::cmd_phase_diagram(&cfg, &cfg.sweep.tau1_us, &cfg.sweep.epsilons(), &out)?;
            for b in &pd.boundaries {
                for (k, t) in b.tau1_values.iter().enumerate() {
                    println!(
                        "{:>8}  tau1 = {t}  eps_c = [{:.4}, {:.4}]",
                        b.peak.label(),
                        b.eps_c_minus[k],
                        b.eps_c_plus[k]
                    );
                }
            }
        }
        Command::Z2z2 => {
            let z = commands::cmd_z2z2(&cfg, &cfg.sweep.epsilons(), &out)?;
            let t = cfg.analysis.threshold;
            println!("interacting support at w1/2: {:?}", z.interacting.support(0, t));
            println!("decoupled support at w1/2:   {:?}", z.decoupled.support(0, t));
        }
        Command::Validate => {
            let checks = commands::cmd_validate(&cfg, &out)?;
            for ch in &checks {
                println!("{ch}");
            }
            println!("wrote {}", out.display());
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    println!("wrote {}", out.display());
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
