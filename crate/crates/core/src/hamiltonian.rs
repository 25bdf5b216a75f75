//! Sparse static Hamiltonians on the 2^N spin-1/2 product space.
//!
//! Basis: S^z product states, spin `i` is bit `i` of the basis index (spin 0 is
//! the least significant bit). A cleared bit is S^z = +1/2, a set bit is
//! S^z = −1/2. Every supported term (S^x, S^z, S^x S^x, S^z S^z and the
//! flip-flop S^x S^x + S^y S^y) is real in this basis, so the operator is
//! stored as a real symmetric CSR matrix.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Group, SpinEnsemble};
use crate::units;
use crate::{Error, Result};

/// Largest ensemble the sparse builder accepts.
pub const MAX_SPINS: usize = 24;

#[cfg(feature = "parallel")]
const PARALLEL_MATVEC_MIN_DIM: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// −Σ J (S^z S^z − S^x S^x − S^y S^y) + Σ h S^z + Ω Σ S^x
    FullDipolar,
    /// Σ J S^x S^x + Ω Σ S^x
    IsingApprox,
    /// Intra-group J S^x S^x, inter-group J′ S^z S^z, Rabi Ω on A and Ω_B on B.
    TwoGroup,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::FullDipolar => "full_dipolar",
            Variant::IsingApprox => "ising_approx",
            Variant::TwoGroup => "two_group",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub variant: Variant,
    /// Ω, rad/µs.
    pub rabi: f64,
    /// Ω on group B in the two-group model, rad/µs.
    pub rabi_b: f64,
    pub interactions_on: bool,
}

impl HamiltonianSpec {
    /// Spec with Ω = 2π × 8.3 MHz on both groups and interactions on.
    pub fn new(variant: Variant) -> Self {
        let rabi = units::mhz(8.3);
        Self {
            variant,
            rabi,
            rabi_b: rabi,
            interactions_on: true,
        }
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.rabi = rabi;
        self.rabi_b = rabi;
        self
    }

    pub fn with_interactions(mut self, on: bool) -> Self {
        self.interactions_on = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0 && self.rabi_b >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rabi frequencies must be >= 0, got {} and {}",
                self.rabi, self.rabi_b
            )));
        }
        Ok(())
    }
}

/// √(Ω² + h²): precession rate about the tilted axis set by an on-site field.
pub fn effective_rabi(rabi: f64, field_sigma: f64) -> f64 {
    rabi.hypot(field_sigma)
}

/// Operator content in terms of one- and two-spin couplings.
#[derive(Debug, Clone, Default)]
struct Terms {
    z_field: Vec<f64>,
    x_field: Vec<f64>,
    zz: Vec<(usize, usize, f64)>,
    xx: Vec<(usize, usize, f64)>,
    /// c (S^x S^x + S^y S^y)
    flip_flop: Vec<(usize, usize, f64)>,
}

impl Terms {
    fn new(n: usize) -> Self {
        Self {
            z_field: vec![0.0; n],
            x_field: vec![0.0; n],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct StaticHamiltonian {
    n_spins: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    pub spec: HamiltonianSpec,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SPINS {
        return Err(Error::DimensionLimit {
            n_spins: n,
            max: MAX_SPINS,
            what: "sparse hamiltonian construction",
        });
    }
    if n == 0 {
        return Err(Error::Empty("ensemble has no spins"));
    }
    Ok(())
}

fn coupling(ens: &SpinEnsemble, spec: &HamiltonianSpec, i: usize, j: usize) -> f64 {
    if spec.interactions_on {
        ens.couplings.get(i, j)
    } else {
        0.0
    }
}

/// Full secular dipolar Hamiltonian with on-site fields and a Rabi drive along x̂.
pub fn build_static_hamiltonian(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> Result<StaticHamiltonian> {
    if spec.variant != Variant::FullDipolar {
        return Err(Error::VariantMismatch {
            variant: spec.variant.name(),
            requirement: "build_static_hamiltonian (use the matching builder)",
        });
    }
    if ens.is_two_group() {
        return Err(Error::VariantMismatch {
            variant: "full_dipolar",
            requirement: "a single-group ensemble",
        });
    }
    spec.validate()?;
    let n = ens.n_spins();
    check_size(n)?;
    let mut t = Terms::new(n);
    t.z_field.copy_from_slice(&ens.fields);
    t.x_field.iter_mut().for_each(|x| *x = spec.rabi);
    for (i, j, _) in ens.couplings.pairs() {
        let c = coupling(ens, spec, i, j);
        if c != 0.0 {
            t.zz.push((i, j, -c));
            t.flip_flop.push((i, j, c));
        }
    }
    Ok(StaticHamiltonian::from_terms(n, &t, *spec))
}

/// Spin-locked Ising approximation: diagonal in the S^x product basis.
pub fn build_ising_approx(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> Result<StaticHamiltonian> {
    if spec.variant != Variant::IsingApprox {
        return Err(Error::VariantMismatch {
            variant: spec.variant.name(),
            requirement: "build_ising_approx (use the matching builder)",
        });
    }
    spec.validate()?;
    let n = ens.n_spins();
    check_size(n)?;
    let mut t = Terms::new(n);
    t.x_field.iter_mut().for_each(|x| *x = spec.rabi);
    for (i, j, _) in ens.couplings.pairs() {
        let c = coupling(ens, spec, i, j);
        if c != 0.0 {
            t.xx.push((i, j, c));
        }
    }
    Ok(StaticHamiltonian::from_terms(n, &t, *spec))
}

/// Two-group model: Ising S^x S^x inside each group, S^z S^z between groups,
/// with independent Rabi strengths on A and B.
pub fn build_two_group(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> Result<StaticHamiltonian> {
    if spec.variant != Variant::TwoGroup {
        return Err(Error::VariantMismatch {
            variant: spec.variant.name(),
            requirement: "build_two_group (use the matching builder)",
        });
    }
    spec.validate()?;
    let n = ens.n_spins();
    check_size(n)?;
    let mut t = Terms::new(n);
    for (i, g) in ens.groups.iter().enumerate() {
        t.x_field[i] = match g {
            Group::A => spec.rabi,
            Group::B => spec.rabi_b,
        };
    }
    for (i, j, _) in ens.couplings.pairs() {
        let c = coupling(ens, spec, i, j);
        if c == 0.0 {
            continue;
        }
        if ens.groups[i] == ens.groups[j] {
            t.xx.push((i, j, c));
        } else {
            t.zz.push((i, j, c));
        }
    }
    Ok(StaticHamiltonian::from_terms(n, &t, *spec))
}

/// Dispatches on `spec.variant`. `two_group` additionally requires a
/// two-group ensemble here; [`build_two_group`] itself also accepts an
/// all-A ensemble, where it reduces to the Ising approximation.
pub fn build(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> Result<StaticHamiltonian> {
    match spec.variant {
        Variant::FullDipolar => build_static_hamiltonian(ens, spec),
        Variant::IsingApprox => build_ising_approx(ens, spec),
        Variant::TwoGroup => {
            if !ens.is_two_group() {
                return Err(Error::VariantMismatch {
                    variant: "two_group",
                    requirement: "an ensemble with n_groups = 2",
                });
            }
            build_two_group(ens, spec)
        }
    }
}

/// Diagonal energies in the S^x product basis for Hamiltonians built only from
/// S^x and S^x S^x terms (ising_approx, or two_group with everything in one
/// group). Bit `i` cleared means S^x_i = +1/2.
pub fn x_basis_energies(ens: &SpinEnsemble, spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    let n = ens.n_spins();
    check_size(n)?;
    let (rabi_a, rabi_b) = match spec.variant {
        Variant::IsingApprox => (spec.rabi, spec.rabi),
        Variant::TwoGroup if spec.interactions_on && ens.is_two_group() && ens.group_count(Group::A) > 0 => {
            return Err(Error::VariantMismatch {
                variant: "two_group",
                requirement: "no inter-group S^z S^z terms for an x-basis diagonal form",
            })
        }
        Variant::TwoGroup => (spec.rabi, spec.rabi_b),
        Variant::FullDipolar => {
            return Err(Error::VariantMismatch {
                variant: "full_dipolar",
                requirement: "terms diagonal in the S^x basis",
            })
        }
    };
    let fields: Vec<f64> = ens
        .groups
        .iter()
        .map(|g| if *g == Group::A { rabi_a } else { rabi_b })
        .collect();
    let pairs: Vec<(usize, usize, f64)> = ens
        .couplings
        .pairs()
        .map(|(i, j, _)| (i, j, coupling(ens, spec, i, j)))
        .filter(|(_, _, c)| *c != 0.0)
        .collect();
    Ok((0..1usize << n)
        .map(|s| {
            let x = |i: usize| if s >> i & 1 == 0 { 0.5 } else { -0.5 };
            let single: f64 = fields.iter().enumerate().map(|(i, w)| w * x(i)).sum();
            let pair: f64 = pairs.iter().map(|&(i, j, c)| c * x(i) * x(j)).sum();
            single + pair
        })
        .collect())
}

#[inline]
fn sz(state: usize, i: usize) -> f64 {
    if state >> i & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

impl StaticHamiltonian {
    fn from_terms(n: usize, t: &Terms, spec: HamiltonianSpec) -> Self {
        let dim = 1usize << n;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * n + n * n);
        row_ptr.push(0);
        for s in 0..dim {
            row.clear();
            let mut diag = 0.0;
            for (i, h) in t.z_field.iter().enumerate() {
                diag += h * sz(s, i);
            }
            for &(i, j, c) in &t.zz {
                diag += c * sz(s, i) * sz(s, j);
            }
            row.push((s, diag));
            for (i, w) in t.x_field.iter().enumerate() {
                if *w != 0.0 {
                    row.push((s ^ (1 << i), 0.5 * w));
                }
            }
            for &(i, j, c) in &t.xx {
                row.push((s ^ (1 << i) ^ (1 << j), 0.25 * c));
            }
            for &(i, j, c) in &t.flip_flop {
                if (s >> i & 1) != (s >> j & 1) {
                    row.push((s ^ (1 << i) ^ (1 << j), 0.5 * c));
                }
            }
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(c, v) in &row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c as u32);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_spins: n,
            row_ptr,
            col_idx,
            values,
            spec,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dimension(&self) -> usize {
        1 << self.n_spins
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored (row, col, value) entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dimension()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k] as usize, self.values[k]))
        })
    }

    /// Exact structural symmetry check: every stored (r, c, v) has a stored (c, r, v).
    pub fn is_hermitian(&self) -> bool {
        self.entries().all(|(r, c, v)| {
            let lo = self.row_ptr[c];
            let hi = self.row_ptr[c + 1];
            match self.col_idx[lo..hi].binary_search(&(r as u32)) {
                Ok(k) => self.values[lo + k] == v,
                Err(_) => v == 0.0,
            }
        })
    }

    #[inline]
    fn row_times(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += x[self.col_idx[k] as usize] * self.values[k];
        }
        acc
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dimension());
        debug_assert_eq!(y.len(), self.dimension());
        #[cfg(feature = "parallel")]
        if self.dimension() >= PARALLEL_MATVEC_MIN_DIM {
            use rayon::prelude::*;
            y.par_chunks_mut(1024).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * 1024;
                for (k, yk) in ys.iter_mut().enumerate() {
                    *yk = self.row_times(base + k, x);
                }
            });
            return;
        }
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row_times(r, x);
        }
    }

    /// Re⟨x|H|x⟩.
    pub fn expectation(&self, x: &[C64]) -> f64 {
        (0..self.dimension())
            .map(|r| (x[r].conj() * self.row_times(r, x)).re)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Coordinate text export, one `row col re im` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} x {} hermitian, S^z product basis, spin 0 = LSB", self.dimension(), self.dimension())?;
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {v:e} 0")?;
        }
        Ok(())
    }
}
