//! Run configuration: a TOML document with nested sections, named presets,
//! and command-line overrides. Physical inputs are ordinary MHz, µs and ppm;
//! conversion to rad/µs and nm⁻³ happens in the accessors here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{FrequencyGrid, PeakTarget, SubharmonicIndex, Window};
use crate::drive::{self, DriveMode, DriveSchedule, SampleEdge, SamplingScheme};
use crate::ensemble::EnsembleConfig;
use crate::hamiltonian::{HamiltonianSpec, Variant};
use crate::propagate::{Engine, KrylovOptions, Observable};
use crate::units::{self, GOLDEN_RATIO_TRUNCATED};
use crate::{Error, Result};

pub const PRESETS: [&str; 5] = ["fig1-short", "fig1-long", "fig2", "fig3", "fig4"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_spins: usize,
    pub density_ppm: f64,
    pub min_distance_nm: f64,
    pub field_sigma_mhz: f64,
    pub n_groups: u8,
    pub group_fraction: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_spins: 16,
            density_ppm: 1.125,
            min_distance_nm: 2.0,
            field_sigma_mhz: 1.7,
            n_groups: 1,
            group_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonianSection {
    pub variant: Variant,
    pub rabi_mhz: f64,
    /// Defaults to `rabi_mhz`.
    pub rabi_b_mhz: Option<f64>,
    pub interactions: bool,
}

impl Default for HamiltonianSection {
    fn default() -> Self {
        Self {
            variant: Variant::FullDipolar,
            rabi_mhz: 8.3,
            rabi_b_mhz: None,
            interactions: true,
        }
    }
}

impl HamiltonianSection {
    pub fn spec(&self) -> HamiltonianSpec {
        let rabi = units::mhz(self.rabi_mhz);
        HamiltonianSpec {
            variant: self.variant,
            rabi,
            rabi_b: self.rabi_b_mhz.map_or(rabi, units::mhz),
            interactions_on: self.interactions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub tau1_us: f64,
    pub phi: f64,
    pub epsilon: f64,
    /// Horizon in units of τ₁.
    pub horizon_periods: f64,
    pub mode: DriveMode,
    pub compensation: bool,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            tau1_us: 1.0,
            phi: GOLDEN_RATIO_TRUNCATED,
            epsilon: 0.0,
            horizon_periods: 200.0,
            mode: DriveMode::SingleGroup,
            compensation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub scheme: SamplingScheme,
    pub edge: SampleEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Grid spacing is 2π/(oversample·T).
    pub oversample: f64,
    /// Grid upper edge in units of ω₁.
    pub max_omega1: f64,
    /// Half-width of the crystalline-fraction window in units of ω₁.
    pub delta_omega1: f64,
    pub threshold: f64,
    pub window: Window,
    /// Peaks tracked by sweeps, written like "(0,-1)".
    pub peaks: Vec<String>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            oversample: 4.0,
            max_omega1: 1.5,
            delta_omega1: 0.1,
            threshold: 0.05,
            window: Window::Rectangular,
            peaks: SubharmonicIndex::PRIMARY.iter().map(|p| p.to_string()).collect(),
        }
    }
}

impl AnalysisSection {
    pub fn peak_indices(&self) -> Result<Vec<SubharmonicIndex>> {
        self.peaks.iter().map(|p| p.parse()).collect()
    }

    pub fn grid(&self, horizon: f64, tau1: f64) -> Result<FrequencyGrid> {
        FrequencyGrid::for_record(horizon, 2.0 * std::f64::consts::PI / tau1, self.oversample, self.max_omega1)
    }

    pub fn delta(&self, tau1: f64) -> f64 {
        self.delta_omega1 * 2.0 * std::f64::consts::PI / tau1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_points: usize,
    pub tau1_us: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eps_min: -0.2,
            eps_max: 0.2,
            eps_points: 41,
            tau1_us: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0],
        }
    }
}

impl SweepSection {
    pub fn epsilons(&self) -> Vec<f64> {
        linspace(self.eps_min, self.eps_max, self.eps_points)
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive; values are rounded
/// to 12 decimals so that e.g. 0 and 0.05 come out exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                (x * 1e12).round() / 1e12
            })
            .collect(),
    }
}

/// Settings for the two-group command's decoupled reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Z2z2Section {
    pub decoupled_rabi_b_mhz: f64,
}

impl Default for Z2z2Section {
    fn default() -> Self {
        Self {
            decoupled_rabi_b_mhz: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Preset this file builds on; CLI `--preset` takes precedence.
    pub preset: Option<String>,
    pub realizations: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// 0 = one worker per core.
    pub workers: usize,
    pub engine: Engine,
    pub observable: String,
    pub ensemble: EnsembleSection,
    pub hamiltonian: HamiltonianSection,
    pub drive: DriveSection,
    pub sampling: SamplingSection,
    pub analysis: AnalysisSection,
    pub sweep: SweepSection,
    pub z2z2: Z2z2Section,
    pub krylov: KrylovOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            realizations: 50,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
            engine: Engine::Auto,
            observable: "center_sx".into(),
            ensemble: EnsembleSection::default(),
            hamiltonian: HamiltonianSection::default(),
            drive: DriveSection::default(),
            sampling: SamplingSection::default(),
            analysis: AnalysisSection::default(),
            sweep: SweepSection::default(),
            z2z2: Z2z2Section::default(),
            krylov: KrylovOptions::default(),
        }
    }
}

/// Values given on the command line; `None` keeps the config's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub n_spins: Option<usize>,
    pub engine: Option<Engine>,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = RunConfig {
            preset: Some(name.to_string()),
            ..Default::default()
        };
        match name {
            "fig1-short" => {
                c.drive.tau1_us = 0.25;
                c.drive.epsilon = 0.067;
            }
            "fig1-long" => {
                c.drive.tau1_us = 2.0;
                c.drive.epsilon = 0.067;
            }
            "fig2" => {
                c.drive.tau1_us = 1.0;
            }
            "fig3" => {}
            "fig4" => {
                c.drive.tau1_us = 1.0;
                c.drive.mode = DriveMode::Z2z2;
                c.ensemble.n_groups = 2;
                c.hamiltonian.variant = Variant::TwoGroup;
                c.sampling.scheme = SamplingScheme::Dense;
                c.observable = "total_sx".into();
                // the two-group support at ω₁/2 is a few hundredths wide
                c.sweep.eps_min = -0.1;
                c.sweep.eps_max = 0.1;
                c.sweep.eps_points = 41;
            }
            other => return Err(Error::UnknownPreset(other.to_string())),
        }
        Ok(c)
    }

    /// Preset (if any) overlaid with the file (if any) overlaid with CLI flags.
    pub fn resolve(preset: Option<&str>, path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let value: toml::Value = toml::from_str(&text).map_err(|e| parse_error(p, e))?;
                // strict pass on the file alone for located diagnostics
                let parsed: RunConfig = toml::from_str(&text).map_err(|e| parse_error(p, e))?;
                Some((p, value, parsed))
            }
            None => None,
        };
        let preset = preset
            .map(str::to_string)
            .or_else(|| file.as_ref().and_then(|f| f.2.preset.clone()));
        let base = match &preset {
            Some(name) => Self::preset(name)?,
            None => Self::default(),
        };
        let mut cfg = match file {
            Some((p, value, _)) => {
                let mut merged = toml::Value::try_from(&base)
                    .map_err(|e| Error::InvalidConfig(format!("serializing preset: {e}")))?;
                merge(&mut merged, value);
                let mut cfg: RunConfig = merged.try_into().map_err(|e: toml::de::Error| parse_error(p, e))?;
                cfg.preset = preset;
                cfg
            }
            None => base,
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| parse_error(Path::new("<string>"), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(format!("serializing config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(r) = o.realizations {
            self.realizations = r;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(n) = o.n_spins {
            self.ensemble.n_spins = n;
        }
        if let Some(e) = o.engine {
            self.engine = e;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        self.ensemble_config().validate()?;
        let spec = self.hamiltonian_spec();
        spec.validate()?;
        if spec.variant == Variant::TwoGroup && self.ensemble.n_groups != 2 {
            return bad("hamiltonian.variant = \"two_group\" needs ensemble.n_groups = 2".into());
        }
        if self.drive.mode == DriveMode::Z2z2 && self.ensemble.n_groups != 2 {
            return bad("drive.mode = \"z2z2\" needs ensemble.n_groups = 2".into());
        }
        if !(self.drive.horizon_periods > 0.0) {
            return bad(format!("drive.horizon_periods must be positive, got {}", self.drive.horizon_periods));
        }
        self.schedule_for(self.drive.tau1_us, self.drive.epsilon)?;
        let a = &self.analysis;
        if !(a.threshold > 0.0 && a.threshold < 1.0) {
            return bad(format!("analysis.threshold must lie in (0, 1), got {}", a.threshold));
        }
        if !(a.delta_omega1 > 0.0) || !(a.oversample > 0.0) || !(a.max_omega1 > 0.0) {
            return bad("analysis.delta_omega1, oversample and max_omega1 must be positive".into());
        }
        a.peak_indices()?;
        if Observable::parse(&self.observable).is_none() {
            return bad(format!(
                "observable must be one of center_sx, total_sx, group_a_sx, group_b_sx; got {:?}",
                self.observable
            ));
        }
        if self.sweep.eps_points == 0 || self.sweep.eps_min > self.sweep.eps_max {
            return bad("sweep needs eps_points ≥ 1 and eps_min ≤ eps_max".into());
        }
        if self.sweep.tau1_us.iter().any(|t| !(*t > 0.0)) {
            return bad("sweep.tau1_us entries must be positive".into());
        }
        if !(self.z2z2.decoupled_rabi_b_mhz >= 0.0) {
            return bad("z2z2.decoupled_rabi_b_mhz must be non-negative".into());
        }
        Ok(())
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        let e = &self.ensemble;
        EnsembleConfig {
            n_spins: e.n_spins,
            density: units::ppm_to_density(e.density_ppm),
            min_distance: e.min_distance_nm,
            field_sigma: e.field_sigma_mhz,
            n_groups: e.n_groups,
            group_fraction: e.group_fraction,
            seed: self.master_seed,
        }
    }

    pub fn hamiltonian_spec(&self) -> HamiltonianSpec {
        self.hamiltonian.spec()
    }

    pub fn observable(&self) -> Observable {
        Observable::parse(&self.observable).expect("validated observable")
    }

    pub fn horizon(&self, tau1: f64) -> f64 {
        self.drive.horizon_periods * tau1
    }

    /// The configured drive at a given (τ₁, ε), with the configured sampling.
    pub fn schedule_for(&self, tau1: f64, epsilon: f64) -> Result<DriveSchedule> {
        self.schedule_with(tau1, epsilon, self.sampling.scheme)
    }

    pub fn schedule_with(&self, tau1: f64, epsilon: f64, scheme: SamplingScheme) -> Result<DriveSchedule> {
        let horizon = self.horizon(tau1);
        let d = &self.drive;
        let s = match d.mode {
            DriveMode::SingleGroup => drive::build_schedule(tau1, d.phi, epsilon, horizon)?,
            DriveMode::Z2z2 => drive::build_z2z2_schedule(tau1, d.phi, epsilon, horizon, d.compensation)?,
        };
        Ok(s.with_sampling(scheme, self.sampling.edge))
    }

    pub fn peak_targets(&self) -> Result<Vec<PeakTarget>> {
        Ok(self.analysis.peak_indices()?.into_iter().map(PeakTarget::from).collect())
    }
}

fn parse_error(path: &Path, e: toml::de::Error) -> Error {
    Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Recursive table merge; scalars and arrays in `over` replace those in `base`.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
