//! Oracle checks run by the `validate` command: Krylov against a dense Padé
//! exponential, conservation laws, exact single-spin dynamics, engine
//! agreement, and NUDFT recovery of known tones.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{nudft_samples, FrequencyGrid, Window};
use crate::drive::{build_schedule, SampleEdge, SamplingScheme};
use crate::ensemble::{build_ensemble, CouplingMatrix, EnsembleConfig, SpinEnsemble};
use crate::hamiltonian::{build, HamiltonianSpec, Variant};
use crate::propagate::{
    evolve_segment, make_propagator, run_with, Engine, KrylovOptions, KrylovPropagator, Observable,
    Segment, StateVector,
};
use crate::units::GOLDEN_RATIO_TRUNCATED;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed error (or failure count, for counting checks).
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, metric: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: metric < tolerance,
            metric,
            tolerance,
            detail,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {:.3e} (tol {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.metric,
            self.tolerance,
            self.detail
        )
    }
}

/// Normalised complex Gaussian state.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let mut amps: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, amps)
}

/// exp(−iHt)ψ via a dense scaling-and-squaring Padé exponential.
pub fn expm_reference(h: &DMatrix<f64>, psi: &StateVector, t: f64) -> StateVector {
    let a: DMatrix<C64> = h.map(|x| C64::new(0.0, -x * t));
    let u = a.exp();
    let v = nalgebra::DVector::from_column_slice(&psi.amps);
    StateVector::from_amplitudes(psi.n_spins(), (u * v).iter().copied().collect())
}

/// Random ensemble and Hamiltonian variant with `2..=max_spins` spins.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_spins: usize) -> Result<(SpinEnsemble, HamiltonianSpec)> {
    let n = rng.random_range(2..=max_spins);
    let variant = [Variant::FullDipolar, Variant::IsingApprox, Variant::TwoGroup][rng.random_range(0..3)];
    let cfg = EnsembleConfig {
        n_spins: n,
        n_groups: if variant == Variant::TwoGroup { 2 } else { 1 },
        seed: rng.random(),
        ..Default::default()
    };
    let mut ens = build_ensemble(&cfg, 0)?;
    if variant == Variant::TwoGroup && !ens.is_two_group() {
        let mut groups = ens.groups.clone();
        groups[0] = crate::ensemble::Group::B;
        groups[n - 1] = crate::ensemble::Group::A;
        ens = ens.with_groups(groups);
    }
    Ok((ens, HamiltonianSpec::new(variant)))
}

/// Krylov segment vs dense exponential on random instances; metric is the
/// largest vector-norm error.
pub fn krylov_vs_expm(instances: usize, max_spins: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for _ in 0..instances {
        let (ens, spec) = random_instance(&mut rng, max_spins)?;
        let h = build(&ens, &spec)?;
        let psi = random_state(ens.n_spins(), &mut rng);
        let dt = rng.random_range(0.01..=2.0);
        let got = evolve_segment(&psi, &h, dt, KrylovOptions::default().tol)?;
        let want = expm_reference(&h.to_dense(), &psi, dt);
        worst = worst.max(got.distance(&want));
        sizes.push(ens.n_spins());
    }
    Ok(Check::below(
        "krylov_vs_dense_expm",
        worst,
        1e-8,
        format!(
            "{instances} instances, N from {} to {}",
            sizes.iter().min().unwrap_or(&0),
            sizes.iter().max().unwrap_or(&0)
        ),
    ))
}

/// Norm and per-segment ⟨H⟩ drift over a full driven run with Krylov.
pub fn conservation(n: usize, tau1: f64, periods: f64, seed: u64) -> Result<Vec<Check>> {
    let cfg = EnsembleConfig {
        n_spins: n,
        seed,
        ..Default::default()
    };
    let ens = build_ensemble(&cfg, 0)?;
    let spec = HamiltonianSpec::new(Variant::FullDipolar);
    let h = std::sync::Arc::new(build(&ens, &spec)?);
    let prop = KrylovPropagator {
        hamiltonian: h.clone(),
        options: KrylovOptions::default(),
    };
    let sched = build_schedule(tau1, GOLDEN_RATIO_TRUNCATED, 0.05, periods * tau1)?;
    let mut energy_drift = 0.0f64;
    let mut segments = 0usize;
    let mut last_norm = 1.0f64;
    let mut monitor = |s: &Segment<'_>| {
        let e0 = h.expectation(&s.before.amps);
        let e1 = h.expectation(&s.after.amps);
        energy_drift = energy_drift.max((e1 - e0).abs());
        last_norm = s.after.norm();
        segments += 1;
    };
    run_with(&prop, &ens, &sched, &[Observable::CenterSx], Some(&mut monitor))?;
    let norm_drift = (last_norm - 1.0).abs();
    Ok(vec![
        Check::below(
            "norm_drift",
            norm_drift,
            1e-10,
            format!("N={n}, {periods} periods of tau1={tau1} us"),
        ),
        Check::below(
            "segment_energy_drift",
            energy_drift,
            1e-8,
            format!("{segments} free-evolution segments"),
        ),
    ])
}

fn lone_spin() -> SpinEnsemble {
    SpinEnsemble::from_couplings(CouplingMatrix::zeros(1), vec![0.0])
}

/// J = h = 0: perfect pulses keep |⟨S^x⟩| = 1/2; with Ω = 0 an imperfect
/// train gives ⟨S^x⟩ = cos(k(1−ε)π)/2 after the k-th pulse.
pub fn single_spin(tau1: f64, periods: f64, epsilon: f64) -> Result<Vec<Check>> {
    let ens = lone_spin();
    let spec = HamiltonianSpec::new(Variant::FullDipolar);
    let prop = make_propagator(&ens, &spec, Engine::Krylov, KrylovOptions::default())?;
    let sched = build_schedule(tau1, GOLDEN_RATIO_TRUNCATED, 0.0, periods * tau1)?;
    let s = &prop.run(&ens, &sched, &[Observable::CenterSx])?[0];
    let perfect = s.values.iter().map(|v| (v.abs() - 0.5).abs()).fold(0.0, f64::max);

    let spec0 = spec.with_rabi(0.0);
    let prop0 = make_propagator(&ens, &spec0, Engine::Krylov, KrylovOptions::default())?;
    let sched = build_schedule(tau1, GOLDEN_RATIO_TRUNCATED, epsilon, periods * tau1)?
        .with_sampling(SamplingScheme::Quasiperiodic, SampleEdge::After);
    let s = &prop0.run(&ens, &sched, &[Observable::CenterSx])?[0];
    let mut worst = 0.0f64;
    for (t, v) in s.times.iter().zip(&s.values) {
        let k = sched
            .pulses
            .iter()
            .filter(|p| p.time <= t + crate::drive::COINCIDENCE_TOL)
            .count();
        let want = 0.5 * (k as f64 * (1.0 - epsilon) * std::f64::consts::PI).cos();
        worst = worst.max((v - want).abs());
    }
    Ok(vec![
        Check::below(
            "single_spin_perfect_pulses",
            perfect,
            1e-10,
            format!("{} samples", s.len()),
        ),
        Check::below(
            "single_spin_rotation_product",
            worst,
            1e-10,
            format!("epsilon = {epsilon}, {} samples", s.len()),
        ),
    ])
}

/// Full-run agreement between the x-basis engine and Krylov on the Ising model.
pub fn engine_agreement(n: usize, seed: u64) -> Result<Check> {
    let cfg = EnsembleConfig {
        n_spins: n,
        seed,
        ..Default::default()
    };
    let ens = build_ensemble(&cfg, 0)?;
    let spec = HamiltonianSpec::new(Variant::IsingApprox);
    let sched = build_schedule(1.0, GOLDEN_RATIO_TRUNCATED, 0.04, 40.0)?;
    let fast = make_propagator(&ens, &spec, Engine::XBasis, KrylovOptions::default())?;
    let slow = make_propagator(&ens, &spec, Engine::Krylov, KrylovOptions::default())?;
    let a = &fast.run(&ens, &sched, &[Observable::CenterSx])?[0];
    let b = &slow.run(&ens, &sched, &[Observable::CenterSx])?[0];
    let worst = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Check::below(
        "x_basis_vs_krylov",
        worst,
        1e-8,
        format!("N={n}, {} samples", a.len()),
    ))
}

/// Tones at random frequencies in (0, 1.2ω₁) on random uneven sample times;
/// metric is the number of tones whose spectral maximum is more than one
/// grid step from the truth.
pub fn nudft_recovery(trials: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau1 = 1.0;
    let omega1 = 2.0 * std::f64::consts::PI / tau1;
    let horizon = 200.0 * tau1;
    let grid = FrequencyGrid::for_record(horizon, omega1, 4.0, 1.5)?;
    let mut misses = 0usize;
    let mut worst_steps = 0.0f64;
    for _ in 0..trials {
        let mut times: Vec<f64> = (0..400).map(|_| rng.random_range(0.0..horizon)).collect();
        times.sort_by(f64::total_cmp);
        let nu = rng.random_range(0.0..1.2) * omega1;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let values: Vec<f64> = times.iter().map(|t| (nu * t + phase).cos()).collect();
        let spec = nudft_samples(&times, &values, &grid, Window::Rectangular)?;
        let k = (0..spec.magnitudes.len())
            .max_by(|a, b| spec.magnitudes[*a].total_cmp(&spec.magnitudes[*b]))
            .unwrap_or(0);
        let steps = (grid.at(k) - nu).abs() / grid.step;
        worst_steps = worst_steps.max(steps);
        if steps > 1.0 {
            misses += 1;
        }
    }
    Ok(Check {
        name: "nudft_tone_recovery".into(),
        passed: misses == 0,
        metric: misses as f64,
        tolerance: 1.0,
        detail: format!("{trials} tones, worst offset {worst_steps:.2} grid steps"),
    })
}

/// Linearity and conjugate symmetry of the transform on random real data.
pub fn nudft_invariants(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 300;
    let mut times: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..150.0)).collect();
    times.sort_by(f64::total_cmp);
    let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let step = 0.01;
    let half = 400;
    let grid = FrequencyGrid::new(-(half as f64) * step, step, 2 * half + 1)?;
    let sx = nudft_samples(&times, &x, &grid, Window::Rectangular)?;
    let sy = nudft_samples(&times, &y, &grid, Window::Rectangular)?;
    let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    let sm = nudft_samples(&times, &mix, &grid, Window::Rectangular)?;
    let lin = (0..grid.len)
        .map(|k| (sm.amplitudes[k] - (sx.amplitudes[k] * a + sy.amplitudes[k] * b)).norm())
        .fold(0.0, f64::max);
    let conj = (0..=half)
        .map(|k| (sx.amplitudes[half + k] - sx.amplitudes[half - k].conj()).norm())
        .fold(0.0, f64::max);
    Ok(vec![
        Check::below("nudft_linearity", lin, 1e-13, format!("{m} samples")),
        Check::below("nudft_conjugate_symmetry", conj, 1e-13, format!("{m} samples")),
    ])
}

/// The suite run by the `validate` command; a few seconds on one core.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![krylov_vs_expm(20, 8, seed)?];
    out.extend(conservation(10, 0.25, 200.0, seed)?);
    out.extend(single_spin(1.0, 50.0, 0.07)?);
    out.push(engine_agreement(8, seed)?);
    out.push(nudft_recovery(100, seed)?);
    out.extend(nudft_invariants(seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_reference_matches_two_level_rotation() {
        // H = ω S^x on one spin: ⟨S^z⟩ of |↑⟩ goes as cos(ωt)/2
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]) * 3.0;
        let psi = StateVector::from_amplitudes(1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let out = expm_reference(&h, &psi, 0.4);
        assert!((out.expect_sz(0) - 0.5 * (3.0f64 * 0.4).cos()).abs() < 1e-14);
    }

    #[test]
    fn quick_checks_pass() {
        assert!(krylov_vs_expm(4, 5, 1).unwrap().passed);
        for c in single_spin(1.0, 10.0, 0.1).unwrap() {
            assert!(c.passed, "{c}");
        }
        for c in nudft_invariants(3).unwrap() {
            assert!(c.passed, "{c}");
        }
        assert!(nudft_recovery(10, 4).unwrap().passed);
        assert!(engine_agreement(5, 2).unwrap().passed);
    }

    #[test]
    fn random_instances_cover_all_variants() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = Vec::new();
        for _ in 0..30 {
            let (ens, spec) = random_instance(&mut rng, 6).unwrap();
            assert!(build(&ens, &spec).is_ok());
            if !seen.contains(&spec.variant) {
                seen.push(spec.variant);
            }
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn display_marks_failures() {
        let c = Check::below("x", 2.0, 1.0, String::new());
        assert!(!c.passed);
        assert!(c.to_string().starts_with("[FAIL] x"));
    }
}
