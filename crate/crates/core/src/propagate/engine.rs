//! Interchangeable segment propagators.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::krylov::{expm_multiply, KrylovOptions};
use super::{collect_series, rotation, run_with, target_mask, walk_schedule, Observable, StateVector, Step, TimeSeries};
use crate::drive::DriveSchedule;
use crate::ensemble::SpinEnsemble;
use crate::hamiltonian::{self, HamiltonianSpec, StaticHamiltonian, Variant};
use crate::{Error, Result};

/// Largest system the dense oracle diagonalizes.
pub const MAX_DENSE_SPINS: usize = 10;

/// Evolves a state by `exp(−iH·dt)` for a fixed static Hamiltonian.
pub trait Propagator: Send + Sync {
    fn evolve(&self, psi: &mut StateVector, dt: f64) -> Result<()>;
    fn name(&self) -> &'static str;

    /// Runs a whole schedule from `|+x⟩`. Engines with a cheaper native
    /// representation override this; results agree with [`run_with`].
    fn run(&self, ens: &SpinEnsemble, schedule: &DriveSchedule, observables: &[Observable]) -> Result<Vec<TimeSeries>> {
        run_with(self, ens, schedule, observables, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// x-basis for Hamiltonians diagonal in S^x, dense spectral for N ≤ 10, Krylov otherwise.
    #[default]
    Auto,
    Krylov,
    Dense,
    XBasis,
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Krylov => "krylov",
            Engine::Dense => "dense",
            Engine::XBasis => "x_basis",
        }
    }
}

pub struct KrylovPropagator {
    pub hamiltonian: Arc<StaticHamiltonian>,
    pub options: KrylovOptions,
}

impl Propagator for KrylovPropagator {
    fn evolve(&self, psi: &mut StateVector, dt: f64) -> Result<()> {
        expm_multiply(&self.hamiltonian, &mut psi.amps, dt, &self.options).map(|_| ())
    }

    fn name(&self) -> &'static str {
        "krylov"
    }
}

/// Full eigendecomposition `H = Q Λ Qᵀ`, reused for every segment.
pub struct SpectralPropagator {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl SpectralPropagator {
    pub fn new(h: &StaticHamiltonian) -> Result<Self> {
        if h.n_spins() > MAX_DENSE_SPINS {
            return Err(Error::DimensionLimit {
                n_spins: h.n_spins(),
                max: MAX_DENSE_SPINS,
                what: "dense diagonalization",
            });
        }
        let eig = SymmetricEigen::new(h.to_dense());
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }
}

impl Propagator for SpectralPropagator {
    fn evolve(&self, psi: &mut StateVector, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let d = psi.amps.len();
        let re = DVector::from_iterator(d, psi.amps.iter().map(|z| z.re));
        let im = DVector::from_iterator(d, psi.amps.iter().map(|z| z.im));
        let mut cre = DVector::zeros(d);
        let mut cim = DVector::zeros(d);
        cre.gemv_tr(1.0, &self.vectors, &re, 0.0);
        cim.gemv_tr(1.0, &self.vectors, &im, 0.0);
        for k in 0..d {
            let z = C64::new(cre[k], cim[k]) * C64::from_polar(1.0, -self.values[k] * dt);
            cre[k] = z.re;
            cim[k] = z.im;
        }
        let mut ore = DVector::zeros(d);
        let mut oim = DVector::zeros(d);
        ore.gemv(1.0, &self.vectors, &cre, 0.0);
        oim.gemv(1.0, &self.vectors, &cim, 0.0);
        for (k, a) in psi.amps.iter_mut().enumerate() {
            *a = C64::new(ore[k], oim[k]);
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        "dense"
    }
}

/// Exact propagation for Hamiltonians diagonal in the S^x product basis:
/// Hadamard on every spin, diagonal phases, Hadamard back.
pub struct XBasisPropagator {
    energies: Vec<f64>,
}

impl XBasisPropagator {
    pub fn new(energies: Vec<f64>) -> Self {
        Self { energies }
    }
}

/// Normalized Walsh–Hadamard transform; maps S^z amplitudes to S^x amplitudes
/// and back.
pub fn hadamard_all(amps: &mut [C64]) {
    let d = amps.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = 1;
    while m < d {
        for base in (0..d).step_by(2 * m) {
            for k in base..base + m {
                let a = amps[k];
                let b = amps[k + m];
                amps[k] = (a + b) * s;
                amps[k + m] = (a - b) * s;
            }
        }
        m <<= 1;
    }
}

impl Propagator for XBasisPropagator {
    fn evolve(&self, psi: &mut StateVector, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        hadamard_all(&mut psi.amps);
        for (a, e) in psi.amps.iter_mut().zip(&self.energies) {
            *a *= C64::from_polar(1.0, -e * dt);
        }
        hadamard_all(&mut psi.amps);
        Ok(())
    }

    fn name(&self) -> &'static str {
        "x_basis"
    }

    /// Keeps the state in the S^x basis for the whole run: free evolution is a
    /// phase per basis state, pulses are conjugated single-spin rotations, and
    /// every S^x observable is diagonal.
    fn run(&self, ens: &SpinEnsemble, schedule: &DriveSchedule, observables: &[Observable]) -> Result<Vec<TimeSeries>> {
        let n = ens.n_spins();
        let d = 1usize << n;
        if self.energies.len() != d {
            return Err(Error::DimensionLimit {
                n_spins: n,
                max: self.energies.len().trailing_zeros() as usize,
                what: "x-basis energies for this ensemble",
            });
        }
        let mut psi = StateVector::from_amplitudes(n, vec![C64::new(0.0, 0.0); d]);
        psi.amps[0] = C64::new(1.0, 0.0);
        let weights: Vec<Vec<f64>> = observables.iter().map(|o| x_basis_weights(*o, ens)).collect();
        let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(schedule.sample_times.len()); observables.len()];
        let mut phases = PhaseCache::new(&self.energies);
        walk_schedule(schedule, |step| {
            match step {
                Step::Evolve { t_start, t_end } => phases.apply(&mut psi.amps, t_end - t_start),
                Step::Pulse(p) => {
                    psi.apply_uniform(target_mask(p, ens), to_x_basis(rotation(p.axis, p.angle)));
                }
                Step::Record(count) => {
                    for (w, out) in weights.iter().zip(values.iter_mut()) {
                        let v: f64 = psi.amps.iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum();
                        out.extend(std::iter::repeat_n(v, count));
                    }
                }
            }
            Ok(())
        })?;
        Ok(collect_series(values, observables, ens, schedule, self.name()))
    }
}

/// `H u H` with `H` the single-spin Hadamard: the rotation seen in the S^x basis.
fn to_x_basis(u: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let p = (u[0][0] + u[0][1] + u[1][0] + u[1][1]) * 0.5;
    let q = (u[0][0] - u[0][1] + u[1][0] - u[1][1]) * 0.5;
    let r = (u[0][0] + u[0][1] - u[1][0] - u[1][1]) * 0.5;
    let s = (u[0][0] - u[0][1] - u[1][0] + u[1][1]) * 0.5;
    [[p, q], [r, s]]
}

/// Diagonal of an S^x observable in the S^x product basis (bit cleared = +1/2).
fn x_basis_weights(obs: Observable, ens: &SpinEnsemble) -> Vec<f64> {
    let n = ens.n_spins();
    let mask = match obs {
        Observable::CenterSx => 1usize << ens.center_index,
        Observable::TotalSx => (1usize << n) - 1,
        Observable::GroupSx(g) => ens.group_mask(g),
    };
    let half = 0.5 * mask.count_ones() as f64;
    (0..1usize << n)
        .map(|k| half - (k & mask).count_ones() as f64)
        .collect()
}

/// Phase vectors `exp(−iE·dt)` for the few distinct segment lengths of a
/// schedule. A cached length is reused for a nearby `dt` with a third-order
/// correction `exp(−iEδ)`, accurate to `(E·δ)⁴/24` ≤ 10⁻¹⁷.
struct PhaseCache<'a> {
    energies: &'a [f64],
    max_dt_shift: f64,
    entries: Vec<(f64, Vec<C64>)>,
}

impl<'a> PhaseCache<'a> {
    const CAPACITY: usize = 32;

    fn new(energies: &'a [f64]) -> Self {
        let e_max = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Self {
            energies,
            max_dt_shift: if e_max > 0.0 { 1e-4 / e_max } else { f64::INFINITY },
            entries: Vec::new(),
        }
    }

    fn apply(&mut self, amps: &mut [C64], dt: f64) {
        let hit = self.entries.iter().position(|(t, _)| (dt - t).abs() <= self.max_dt_shift);
        let k = match hit {
            Some(k) => k,
            None if self.entries.len() < Self::CAPACITY => {
                let ph = self.energies.iter().map(|e| C64::from_polar(1.0, -e * dt)).collect();
                self.entries.push((dt, ph));
                self.entries.len() - 1
            }
            None => {
                for (a, e) in amps.iter_mut().zip(self.energies) {
                    *a *= C64::from_polar(1.0, -e * dt);
                }
                return;
            }
        };
        let (t0, ph) = &self.entries[k];
        let delta = dt - t0;
        if delta == 0.0 {
            for (a, p) in amps.iter_mut().zip(ph) {
                *a *= p;
            }
        } else {
            for ((a, p), e) in amps.iter_mut().zip(ph).zip(self.energies) {
                let x = e * delta;
                let x2 = x * x;
                let corr = C64::new(1.0 - x2 * 0.5, -x + x2 * x / 6.0);
                *a *= p * corr;
            }
        }
    }
}

fn x_diagonal(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> bool {
    match spec.variant {
        Variant::IsingApprox => true,
        Variant::TwoGroup => !spec.interactions_on || !ens.is_two_group(),
        Variant::FullDipolar => false,
    }
}

/// Picks and builds a propagator for (ensemble, spec). The sparse operator is
/// only assembled when the chosen engine needs it.
pub fn make_propagator(
    ens: &SpinEnsemble,
    spec: &HamiltonianSpec,
    engine: Engine,
    krylov: KrylovOptions,
) -> Result<Box<dyn Propagator>> {
    Ok(match resolve_engine(ens, spec, engine) {
        Engine::XBasis => Box::new(XBasisPropagator::new(hamiltonian::x_basis_energies(ens, spec)?)),
        Engine::Dense => Box::new(SpectralPropagator::new(&hamiltonian::build(ens, spec)?)?),
        Engine::Krylov | Engine::Auto => Box::new(KrylovPropagator {
            hamiltonian: Arc::new(hamiltonian::build(ens, spec)?),
            options: krylov,
        }),
    })
}

/// Engine `Auto` would resolve to for this system.
pub fn resolve_engine(ens: &SpinEnsemble, spec: &HamiltonianSpec, engine: Engine) -> Engine {
    match engine {
        Engine::Auto if x_diagonal(ens, spec) => Engine::XBasis,
        Engine::Auto if ens.n_spins() <= MAX_DENSE_SPINS => Engine::Dense,
        Engine::Auto => Engine::Krylov,
        e => e,
    }
}
