use super::*;
use crate::drive::{build_schedule, build_z2z2_schedule, PulseSource, SamplingScheme, Targets};
use crate::ensemble::{build_ensemble, CouplingMatrix, EnsembleConfig};
use crate::hamiltonian::{build, Variant};
use crate::units::{mhz, GOLDEN_RATIO_TRUNCATED as PHI};
use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use std::f64::consts::PI;

fn ensemble(n: usize, seed: u64) -> SpinEnsemble {
    let cfg = EnsembleConfig {
        n_spins: n,
        seed,
        ..Default::default()
    };
    build_ensemble(&cfg, 0).unwrap()
}

fn two_group(n: usize, seed: u64) -> SpinEnsemble {
    let cfg = EnsembleConfig {
        n_spins: n,
        seed,
        n_groups: 2,
        ..Default::default()
    };
    build_ensemble(&cfg, 0).unwrap()
}

fn random_state(n: usize, seed: u64) -> StateVector {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..1usize << n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut s = StateVector::from_amplitudes(n, amps);
    let nrm = s.norm();
    s.amps.iter_mut().for_each(|a| *a /= nrm);
    s
}

/// exp(−iHt)ψ through a dense eigendecomposition computed here, independent of
/// `SpectralPropagator`.
fn oracle_evolve(h: &DMatrix<f64>, psi: &StateVector, t: f64) -> StateVector {
    let eig = SymmetricEigen::new(h.clone());
    let d = psi.amps.len();
    let q = &eig.eigenvectors;
    let mut out = vec![C64::new(0.0, 0.0); d];
    for k in 0..d {
        let c: C64 = (0..d).map(|r| psi.amps[r] * q[(r, k)]).sum();
        let c = c * C64::from_polar(1.0, -eig.eigenvalues[k] * t);
        for r in 0..d {
            out[r] += c * q[(r, k)];
        }
    }
    StateVector::from_amplitudes(psi.n_spins(), out)
}

#[test]
fn plus_x_state() {
    let s = initial_plus_x(5);
    assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-14);
    for i in 0..5 {
        assert_relative_eq!(s.expect_sx(i), 0.5, epsilon = 1e-14);
        assert_relative_eq!(s.expect_sy(i), 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.expect_sz(i), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn zero_step_is_identity() {
    let ens = ensemble(6, 1);
    let h = build(&ens, &HamiltonianSpec::new(Variant::FullDipolar)).unwrap();
    let psi = random_state(6, 2);
    assert_eq!(evolve_segment(&psi, &h, 0.0, 1e-10).unwrap(), psi);
    assert_eq!(evolve_segment_dense(&psi, &h, 0.0).unwrap(), psi);
}

#[test]
fn eigenstate_picks_up_phase() {
    let ens = ensemble(5, 3);
    let h = build(&ens, &HamiltonianSpec::new(Variant::FullDipolar)).unwrap();
    let eig = SymmetricEigen::new(h.to_dense());
    let k = 7;
    let amps = eig.eigenvectors.column(k).iter().map(|x| C64::new(*x, 0.0)).collect();
    let psi = StateVector::from_amplitudes(5, amps);
    let t = 0.37;
    let out = evolve_segment(&psi, &h, t, 1e-12).unwrap();
    let phase = C64::from_polar(1.0, -eig.eigenvalues[k] * t);
    for (a, b) in out.amps.iter().zip(&psi.amps) {
        assert!((a - b * phase).norm() < 1e-10);
    }
}

#[test]
fn krylov_matches_dense_oracle() {
    for (n, seed, variant) in [
        (6, 4, Variant::FullDipolar),
        (8, 5, Variant::FullDipolar),
        (8, 6, Variant::IsingApprox),
    ] {
        let ens = ensemble(n, seed);
        let h = build(&ens, &HamiltonianSpec::new(variant)).unwrap();
        let psi = random_state(n, seed + 100);
        for t in [0.01, 0.5, 3.0] {
            let want = oracle_evolve(&h.to_dense(), &psi, t);
            let got = evolve_segment(&psi, &h, t, 1e-10).unwrap();
            assert!(got.distance(&want) < 1e-9, "n={n} t={t}: {}", got.distance(&want));
            let dense = evolve_segment_dense(&psi, &h, t).unwrap();
            assert!(dense.distance(&want) < 1e-10);
        }
    }
}

#[test]
fn two_group_krylov_matches_oracle() {
    let ens = two_group(6, 7);
    let h = build(&ens, &HamiltonianSpec::new(Variant::TwoGroup)).unwrap();
    let psi = random_state(6, 8);
    let want = oracle_evolve(&h.to_dense(), &psi, 1.3);
    assert!(evolve_segment(&psi, &h, 1.3, 1e-10).unwrap().distance(&want) < 1e-9);
}

#[test]
fn semigroup_property() {
    let ens = ensemble(7, 9);
    let h = build(&ens, &HamiltonianSpec::new(Variant::FullDipolar)).unwrap();
    let psi = random_state(7, 10);
    let whole = evolve_segment(&psi, &h, 1.7, 1e-11).unwrap();
    let half = evolve_segment(&psi, &h, 0.6, 1e-11).unwrap();
    let split = evolve_segment(&half, &h, 1.1, 1e-11).unwrap();
    assert!(whole.distance(&split) < 1e-9);
}

#[test]
fn krylov_conserves_norm_and_energy() {
    let ens = ensemble(10, 11);
    let h = build(&ens, &HamiltonianSpec::new(Variant::FullDipolar)).unwrap();
    let psi = random_state(10, 12);
    let e0 = h.expectation(&psi.amps);
    let out = evolve_segment(&psi, &h, 5.0, 1e-10).unwrap();
    assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-10);
    assert!((h.expectation(&out.amps) - e0).abs() < 1e-8 * e0.abs().max(1.0));
}

#[test]
fn engines_agree_on_x_diagonal_models() {
    let ens = ensemble(8, 13);
    let spec = HamiltonianSpec::new(Variant::IsingApprox);
    let h = build(&ens, &spec).unwrap();
    let xb = make_propagator(&ens, &spec, Engine::XBasis, KrylovOptions::default()).unwrap();
    let psi = random_state(8, 14);
    let mut got = psi.clone();
    xb.evolve(&mut got, 2.2).unwrap();
    assert!(got.distance(&oracle_evolve(&h.to_dense(), &psi, 2.2)) < 1e-10);

    let tg = two_group(8, 15);
    let off = HamiltonianSpec::new(Variant::TwoGroup).with_interactions(false);
    let h = build(&tg, &off).unwrap();
    let xb = make_propagator(&tg, &off, Engine::Auto, KrylovOptions::default()).unwrap();
    assert_eq!(xb.name(), "x_basis");
    let mut got = psi.clone();
    xb.evolve(&mut got, 0.9).unwrap();
    assert!(got.distance(&oracle_evolve(&h.to_dense(), &psi, 0.9)) < 1e-10);
}

#[test]
fn auto_engine_resolution() {
    let small = ensemble(6, 1);
    let big = ensemble(12, 1);
    let full = HamiltonianSpec::new(Variant::FullDipolar);
    let ising = HamiltonianSpec::new(Variant::IsingApprox);
    assert_eq!(resolve_engine(&small, &full, Engine::Auto), Engine::Dense);
    assert_eq!(resolve_engine(&big, &full, Engine::Auto), Engine::Krylov);
    assert_eq!(resolve_engine(&big, &ising, Engine::Auto), Engine::XBasis);
    assert_eq!(resolve_engine(&small, &full, Engine::Krylov), Engine::Krylov);
    assert!(make_propagator(&big, &full, Engine::Dense, KrylovOptions::default()).is_err());
}

#[test]
fn hadamard_is_involution() {
    let psi = random_state(6, 16);
    let mut a = psi.amps.clone();
    engine::hadamard_all(&mut a);
    engine::hadamard_all(&mut a);
    for (x, y) in a.iter().zip(&psi.amps) {
        assert!((x - y).norm() < 1e-14);
    }
}

#[test]
fn imperfect_y_pulse_on_plus_x() {
    let ens = SpinEnsemble::from_couplings(CouplingMatrix::zeros(1), vec![0.0]);
    for eps in [0.0, 0.05, 0.1, 0.3] {
        let ev = PulseEvent {
            time: 1.0,
            axis: Axis::Y,
            angle: (1.0 - eps) * PI,
            targets: Targets::All,
            source: PulseSource::Train1,
        };
        let out = apply_pulse(&initial_plus_x(1), &ev, &ens);
        assert_relative_eq!(out.expect_sx(0), -0.5 * (eps * PI).cos(), epsilon = 1e-14);
        assert_relative_eq!(out.expect_sz(0), -0.5 * (eps * PI).sin(), epsilon = 1e-14);
        assert_relative_eq!(out.expect_sy(0), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn x_pulses_rotate_about_x() {
    // +x̂ by π/2 takes +z to −y; −x̂ takes +z to +y.
    let ens = SpinEnsemble::from_couplings(CouplingMatrix::zeros(1), vec![0.0]);
    let up = StateVector::from_amplitudes(1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    for (axis, sy) in [(Axis::PlusX, -0.5), (Axis::MinusX, 0.5)] {
        let ev = PulseEvent {
            time: 0.0,
            axis,
            angle: PI / 2.0,
            targets: Targets::All,
            source: PulseSource::Compensation,
        };
        let out = apply_pulse(&up, &ev, &ens);
        assert_relative_eq!(out.expect_sy(0), sy, epsilon = 1e-14);
        assert_relative_eq!(out.expect_sz(0), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn pulse_factorizes_over_targets() {
    let ens = two_group(4, 17);
    let psi = random_state(4, 18);
    let ev = |targets| PulseEvent {
        time: 0.0,
        axis: Axis::Y,
        angle: 0.83 * PI,
        targets,
        source: PulseSource::Train2,
    };
    let both = apply_pulse(&psi, &ev(Targets::All), &ens);
    let seq = apply_pulse(&apply_pulse(&psi, &ev(Targets::A), &ens), &ev(Targets::B), &ens);
    assert!(both.distance(&seq) < 1e-14);

    // group-A pulse leaves group-B marginals untouched
    let a_only = apply_pulse(&psi, &ev(Targets::A), &ens);
    for i in 0..4 {
        if ens.groups[i] == Group::B {
            assert_relative_eq!(a_only.expect_sx(i), psi.expect_sx(i), epsilon = 1e-14);
            assert_relative_eq!(a_only.expect_sz(i), psi.expect_sz(i), epsilon = 1e-14);
        }
    }
}

#[test]
fn compensation_pair_is_identity() {
    let ens = two_group(4, 19);
    let psi = random_state(4, 20);
    let sched = build_z2z2_schedule(1.0, PHI, 0.1, 2.0, true).unwrap();
    let comp: Vec<_> = sched
        .pulses
        .iter()
        .filter(|p| p.source == PulseSource::Compensation)
        .take(2)
        .collect();
    assert_eq!(comp.len(), 2);
    let out = comp.iter().fold(psi.clone(), |s, p| apply_pulse(&s, p, &ens));
    assert!(out.distance(&psi) < 1e-14);
}

#[test]
fn total_sx_conserved_between_pulses_under_ising() {
    let ens = ensemble(8, 21);
    let spec = HamiltonianSpec::new(Variant::IsingApprox);
    let prop = make_propagator(&ens, &spec, Engine::Krylov, KrylovOptions::default()).unwrap();
    let mut psi = random_state(8, 22);
    let before = Observable::TotalSx.evaluate(&psi, &ens);
    prop.evolve(&mut psi, 4.0).unwrap();
    assert_relative_eq!(Observable::TotalSx.evaluate(&psi, &ens), before, epsilon = 1e-9);
}

#[test]
fn free_spins_follow_pulse_algebra() {
    // No couplings and Ω = 0: the state only changes at pulses, and each
    // pulse maps ⟨S^x⟩ → −cos(επ)⟨S^x⟩ − sin(επ)... starting from +x the
    // single-spin Bloch vector stays in the x–z plane.
    let ens = SpinEnsemble::from_couplings(CouplingMatrix::zeros(2), vec![0.0, 0.0]);
    let spec = HamiltonianSpec::new(Variant::IsingApprox).with_rabi(0.0);
    let prop = make_propagator(&ens, &spec, Engine::Auto, KrylovOptions::default()).unwrap();
    let eps = 0.07;
    let sched = build_schedule(1.0, PHI, eps, 6.0).unwrap();
    let series = run_with(prop.as_ref(), &ens, &sched, &[Observable::CenterSx], None).unwrap();
    let s = &series[0];
    assert_eq!(s.times, sched.sample_times);
    assert_relative_eq!(s.values[0], 0.5, epsilon = 1e-14);
    // Each y rotation by (1−ε)π advances the Bloch angle in the x–z plane.
    let mut angle: f64 = 0.0;
    let mut k = 1;
    let mut pi = 0;
    while pi < sched.pulses.len() {
        let t = sched.pulses[pi].time;
        while pi < sched.pulses.len() && (sched.pulses[pi].time - t).abs() < 1e-9 {
            angle += sched.pulses[pi].angle;
            pi += 1;
        }
        assert_relative_eq!(s.values[k], 0.5 * angle.cos(), epsilon = 1e-12);
        k += 1;
    }
}

#[test]
fn sample_edge_before_sees_pre_pulse_state() {
    let ens = SpinEnsemble::from_couplings(CouplingMatrix::zeros(1), vec![0.0]);
    let spec = HamiltonianSpec::new(Variant::IsingApprox).with_rabi(0.0);
    let prop = make_propagator(&ens, &spec, Engine::Auto, KrylovOptions::default()).unwrap();
    let sched = build_schedule(1.0, PHI, 0.0, 1.5)
        .unwrap()
        .with_sampling(SamplingScheme::Quasiperiodic, SampleEdge::Before);
    let s = &run_with(prop.as_ref(), &ens, &sched, &[Observable::TotalSx], None).unwrap()[0];
    assert_eq!(s.values.len(), 2);
    assert_relative_eq!(s.values[1], 0.5, epsilon = 1e-14);
    let after = sched.clone().with_sampling(SamplingScheme::Quasiperiodic, SampleEdge::After);
    let s = &run_with(prop.as_ref(), &ens, &after, &[Observable::TotalSx], None).unwrap()[0];
    assert_relative_eq!(s.values[1], -0.5, epsilon = 1e-14);
}

#[test]
fn dense_sampling_between_pulses() {
    let ens = ensemble(6, 23);
    let spec = HamiltonianSpec::new(Variant::FullDipolar);
    let h = build(&ens, &spec).unwrap();
    let sched = build_schedule(0.5, PHI, 0.1, 2.0)
        .unwrap()
        .with_sampling(SamplingScheme::Dense, SampleEdge::After);
    let kry = run_experiment(&ens, &h, &sched, Observable::CenterSx, 1e-10).unwrap();
    let dense = make_propagator(&ens, &spec, Engine::Dense, KrylovOptions::default()).unwrap();
    let d = &run_with(dense.as_ref(), &ens, &sched, &[Observable::CenterSx], None).unwrap()[0];
    assert_eq!(kry.len(), 41);
    for (a, b) in kry.values.iter().zip(&d.values) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(kry.meta.hamiltonian, Some(spec));
}

#[test]
fn monitor_sees_unitary_segments() {
    let ens = ensemble(9, 24);
    let spec = HamiltonianSpec::new(Variant::FullDipolar);
    let h = build(&ens, &spec).unwrap();
    let prop = make_propagator(&ens, &spec, Engine::Krylov, KrylovOptions::default()).unwrap();
    let sched = build_schedule(0.8, PHI, 0.05, 8.0).unwrap();
    let mut worst_norm: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    let mut segments = 0;
    let mut mon = |seg: &Segment<'_>| {
        segments += 1;
        assert!(seg.t_end > seg.t_start);
        worst_norm = worst_norm.max((seg.after.norm() - seg.before.norm()).abs());
        worst_energy = worst_energy.max((h.expectation(&seg.after.amps) - h.expectation(&seg.before.amps)).abs());
    };
    run_with(prop.as_ref(), &ens, &sched, &[Observable::CenterSx], Some(&mut mon)).unwrap();
    assert!(segments > 5);
    assert!(worst_norm < 1e-10);
    assert!(worst_energy < 1e-8 * mhz(8.3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotations_are_unitary(angle in -7.0f64..7.0, which in 0usize..3) {
        let axis = [Axis::Y, Axis::PlusX, Axis::MinusX][which];
        let u = rotation(axis, angle);
        for r in 0..2 {
            for c in 0..2 {
                let dot: C64 = (0..2).map(|k| u[k][r].conj() * u[k][c]).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                prop_assert!((dot - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_angles_compose(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let ens = SpinEnsemble::from_couplings(CouplingMatrix::zeros(2), vec![0.0, 0.0]);
        let psi = random_state(2, 99);
        let ev = |angle| PulseEvent { time: 0.0, axis: Axis::Y, angle, targets: Targets::All, source: PulseSource::Train1 };
        let two = apply_pulse(&apply_pulse(&psi, &ev(a), &ens), &ev(b), &ens);
        let one = apply_pulse(&psi, &ev(a + b), &ens);
        prop_assert!(two.distance(&one) < 1e-13);
    }

    #[test]
    fn evolution_preserves_norm(seed in 0u64..1000, t in 0.0f64..4.0) {
        let ens = ensemble(6, seed);
        let h = build(&ens, &HamiltonianSpec::new(Variant::FullDipolar)).unwrap();
        let psi = random_state(6, seed);
        let out = evolve_segment(&psi, &h, t, 1e-10).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn x_basis_run_matches_generic_walk() {
    let ens = two_group(8, 41);
    let spec = HamiltonianSpec::new(Variant::IsingApprox);
    let prop = make_propagator(&ens, &spec, Engine::XBasis, KrylovOptions::default()).unwrap();
    let obs = [
        Observable::CenterSx,
        Observable::TotalSx,
        Observable::GroupSx(crate::ensemble::Group::A),
        Observable::GroupSx(crate::ensemble::Group::B),
    ];
    let scheds = [
        build_schedule(0.7, PHI, 0.07, 30.0).unwrap(),
        build_schedule(0.5, PHI, -0.1, 10.0)
            .unwrap()
            .with_sampling(SamplingScheme::Dense, SampleEdge::Before),
        build_z2z2_schedule(1.0, PHI, 0.05, 20.0, true).unwrap(),
        build_z2z2_schedule(1.0, PHI, -0.05, 20.0, false)
            .unwrap()
            .with_sampling(SamplingScheme::Quasiperiodic, SampleEdge::Before),
    ];
    for sched in &scheds {
        let fast = prop.run(&ens, sched, &obs).unwrap();
        let slow = run_with(prop.as_ref(), &ens, sched, &obs, None).unwrap();
        for (f, s) in fast.iter().zip(&slow) {
            assert_eq!(f.times, s.times);
            assert_eq!(f.meta.engine, s.meta.engine);
            for (a, b) in f.values.iter().zip(&s.values) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn real_rotation_kernel_matches_complex() {
    let psi = random_state(5, 3);
    let u = rotation(Axis::Y, 0.83);
    let mut a = psi.clone();
    a.apply_single(2, u);
    let mut b = psi.clone();
    let nudge = C64::new(0.0, 1e-300);
    b.apply_single(2, [[u[0][0] + nudge, u[0][1]], [u[1][0], u[1][1]]]);
    assert!(a.distance(&b) < 1e-15);
}

#[test]
fn blocked_uniform_rotation_matches_spin_by_spin() {
    for n in [3, 12, 13] {
        let psi = random_state(n, 77);
        let u = rotation(Axis::MinusX, 2.9);
        let mask = 0b1011_0110_1101 & ((1 << n) - 1);
        let mut a = psi.clone();
        a.apply_uniform(mask, u);
        let mut b = psi.clone();
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            b.apply_single(i, u);
        }
        assert!(a.distance(&b) < 1e-14);
    }
}
