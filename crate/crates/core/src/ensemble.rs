//! Disorder realizations: random spin positions in an open cubic box,
//! secular dipolar couplings, Gaussian on-site fields and group labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::units::{self, DIAMOND_CARBON_DENSITY_PER_CM3, DIPOLAR_COEFFICIENT_MHZ_NM3};
use crate::{Error, Result};

/// Rejection attempts allowed per spin before the config is declared over-constrained.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

pub type Position = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_spins: usize,
    /// Spins per nm³.
    pub density: f64,
    /// nm
    pub min_distance: f64,
    /// Standard deviation of the on-site field, ordinary MHz.
    pub field_sigma: f64,
    pub n_groups: u8,
    /// Fraction of spins assigned to group A when `n_groups == 2`.
    pub group_fraction: f64,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_spins: 16,
            density: units::ppm_to_density(1.125),
            min_distance: 2.0,
            field_sigma: 1.7,
            n_groups: 1,
            group_fraction: 0.5,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_spins < 1 {
            return bad("n_spins must be at least 1".into());
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return bad(format!("density must be positive, got {}", self.density));
        }
        if !(self.min_distance >= 0.0) {
            return bad(format!("min_distance must be >= 0, got {}", self.min_distance));
        }
        if !(self.field_sigma >= 0.0) {
            return bad(format!("field_sigma must be >= 0, got {}", self.field_sigma));
        }
        if !matches!(self.n_groups, 1 | 2) {
            return bad(format!("n_groups must be 1 or 2, got {}", self.n_groups));
        }
        if self.n_groups == 2 && !(0.0..=1.0).contains(&self.group_fraction) {
            return bad(format!(
                "group_fraction must lie in [0, 1], got {}",
                self.group_fraction
            ));
        }
        Ok(())
    }

    /// Side of the cubic box holding `n_spins` at `density`, in nm.
    pub fn box_side(&self) -> f64 {
        (self.n_spins as f64 / self.density).cbrt()
    }

    /// Random stream for realization `seed_offset`: stream `seed_offset` of the
    /// ChaCha8 generator keyed by the master seed.
    pub fn rng(&self, seed_offset: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(seed_offset);
        rng
    }
}

/// Symmetric N×N coupling matrix in rad/µs, row-major, zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets J_ij and J_ji together. Diagonal writes are rejected.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "coupling matrix diagonal is fixed at zero");
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    /// Iterates over (i, j, J_ij) with i < j.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsemble {
    /// nm
    pub positions: Vec<Position>,
    pub groups: Vec<Group>,
    pub couplings: CouplingMatrix,
    /// On-site fields h_i, rad/µs.
    pub fields: Vec<f64>,
    pub center_index: usize,
    pub box_side: f64,
    pub seed: u64,
    pub seed_offset: u64,
}

impl SpinEnsemble {
    pub fn n_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn is_two_group(&self) -> bool {
        self.groups.contains(&Group::B)
    }

    pub fn group_count(&self, group: Group) -> usize {
        self.groups.iter().filter(|g| **g == group).count()
    }

    /// Bit mask over spin indices belonging to `group`.
    pub fn group_mask(&self, group: Group) -> usize {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == group)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Ensemble with explicit couplings and fields, all spins in group A,
    /// positions on a line 1 nm apart. Intended for hand-built test systems.
    pub fn from_couplings(couplings: CouplingMatrix, fields: Vec<f64>) -> Self {
        let n = fields.len();
        assert_eq!(couplings.len(), n);
        Self {
            positions: (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            groups: vec![Group::A; n],
            couplings,
            fields,
            center_index: 0,
            box_side: n as f64,
            seed: 0,
            seed_offset: 0,
        }
    }

    pub fn with_groups(mut self, groups: Vec<Group>) -> Self {
        assert_eq!(groups.len(), self.n_spins());
        self.groups = groups;
        self
    }

    /// JSON document with the realization and the constants it was drawn with.
    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleDocument {
            ensemble: self,
            constants: EnsembleConstants::current(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

#[derive(Serialize)]
struct EnsembleDocument<'a> {
    ensemble: &'a SpinEnsemble,
    constants: EnsembleConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConstants {
    pub dipolar_coefficient_mhz_nm3: f64,
    pub dipolar_angular_form: String,
    pub quantization_axis: String,
    pub diamond_carbon_density_per_cm3: f64,
    pub boundary: String,
}

impl EnsembleConstants {
    pub fn current() -> Self {
        Self {
            dipolar_coefficient_mhz_nm3: DIPOLAR_COEFFICIENT_MHZ_NM3,
            dipolar_angular_form: "(1 - 3 cos^2 theta) / 2".into(),
            quantization_axis: "z".into(),
            diamond_carbon_density_per_cm3: DIAMOND_CARBON_DENSITY_PER_CM3,
            boundary: "open".into(),
        }
    }
}

/// Uniform positions in the box `[0, L]³` with pairwise rejection below `min_distance`.
pub fn sample_positions<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> Result<Vec<Position>> {
    cfg.validate()?;
    let side = cfg.box_side();
    let min_sq = cfg.min_distance * cfg.min_distance;
    let mut positions: Vec<Position> = Vec::with_capacity(cfg.n_spins);
    for _ in 0..cfg.n_spins {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = [
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
            ];
            if positions.iter().all(|q| distance_sq(&p, q) >= min_sq) {
                positions.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::OverConstrained {
                placed: positions.len(),
                requested: cfg.n_spins,
                min_distance: cfg.min_distance,
                box_side: side,
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(positions)
}

fn distance_sq(a: &Position, b: &Position) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Secular dipolar coupling between two spins quantized along ẑ, in rad/µs:
/// `2π·52 MHz·nm³ · (1 − 3cos²θ)/2 / r³`.
pub fn dipolar_coupling(r_i: &Position, r_j: &Position) -> f64 {
    let d = [r_j[0] - r_i[0], r_j[1] - r_i[1], r_j[2] - r_i[2]];
    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    debug_assert!(r2 > 0.0, "coincident spins");
    let r = r2.sqrt();
    let cos2 = d[2] * d[2] / r2;
    units::mhz(DIPOLAR_COEFFICIENT_MHZ_NM3) * 0.5 * (1.0 - 3.0 * cos2) / (r2 * r)
}

pub fn couplings_from_positions(positions: &[Position]) -> CouplingMatrix {
    let n = positions.len();
    let mut j = CouplingMatrix::zeros(n);
    for a in 0..n {
        for b in (a + 1)..n {
            j.set(a, b, dipolar_coupling(&positions[a], &positions[b]));
        }
    }
    j
}

/// Zero-mean Gaussian fields with standard deviation `2π·field_sigma` rad/µs.
pub fn sample_onsite_fields<R: Rng + ?Sized>(cfg: &EnsembleConfig, rng: &mut R) -> Vec<f64> {
    let sigma = units::mhz(cfg.field_sigma);
    if sigma == 0.0 {
        return vec![0.0; cfg.n_spins];
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..cfg.n_spins).map(|_| normal.sample(rng)).collect()
}

/// Index of the position closest to the centre of the box `[0, side]³`.
pub fn center_index(positions: &[Position], side: f64) -> usize {
    let c = [side / 2.0; 3];
    positions
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| distance_sq(a, &c).total_cmp(&distance_sq(b, &c)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn build_ensemble(cfg: &EnsembleConfig, seed_offset: u64) -> Result<SpinEnsemble> {
    cfg.validate()?;
    let mut rng = cfg.rng(seed_offset);
    let positions = sample_positions(cfg, &mut rng)?;
    let fields = sample_onsite_fields(cfg, &mut rng);
    let couplings = couplings_from_positions(&positions);

    let n = cfg.n_spins;
    let n_a = if cfg.n_groups == 2 {
        ((cfg.group_fraction * n as f64).ceil() as usize).min(n)
    } else {
        n
    };
    let groups = (0..n)
        .map(|i| if i < n_a { Group::A } else { Group::B })
        .collect();

    let box_side = cfg.box_side();
    Ok(SpinEnsemble {
        center_index: center_index(&positions, box_side),
        positions,
        groups,
        couplings,
        fields,
        box_side,
        seed: cfg.seed,
        seed_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    #[test]
    fn default_density_box_side() {
        let cfg = EnsembleConfig {
            density: 1.98e-4,
            ..Default::default()
        };
        // (16 / 1.98e-4)^(1/3)
        assert_relative_eq!(cfg.box_side(), 43.2, epsilon = 0.05);
    }

    #[test]
    fn single_spin() {
        let cfg = EnsembleConfig {
            n_spins: 1,
            min_distance: 1e6,
            ..Default::default()
        };
        let ens = build_ensemble(&cfg, 0).unwrap();
        assert_eq!(ens.positions.len(), 1);
        assert_eq!(ens.center_index, 0);
        assert_eq!(ens.couplings.get(0, 0), 0.0);
    }

    #[test]
    fn min_distance_respected_over_seeds() {
        for seed in 0..100 {
            let cfg = EnsembleConfig {
                n_spins: 2,
                min_distance: 5.0,
                seed,
                ..Default::default()
            };
            let p = sample_positions(&cfg, &mut cfg.rng(0)).unwrap();
            assert!(distance_sq(&p[0], &p[1]).sqrt() >= 5.0);
        }
    }

    #[test]
    fn over_constrained_config_fails() {
        let cfg = EnsembleConfig {
            n_spins: 16,
            density: 1.0,
            min_distance: 2.0,
            ..Default::default()
        };
        let err = sample_positions(&cfg, &mut cfg.rng(0)).unwrap_err();
        assert!(matches!(err, Error::OverConstrained { .. }), "{err}");
    }

    #[test]
    fn magic_angle_and_perpendicular() {
        let o = [0.0; 3];
        // cos²θ = 1/3
        let r = 10.0;
        let z = r / 3f64.sqrt();
        let rho = (r * r - z * z).sqrt();
        assert!(dipolar_coupling(&o, &[rho, 0.0, z]).abs() < 1e-15);
        // θ = π/2: 52/10³ × 1/2 = 0.026 MHz
        let j = dipolar_coupling(&o, &[r * FRAC_PI_2.sin(), 0.0, 0.0]);
        assert_relative_eq!(j, TAU * 0.026, max_relative = 1e-12);
        // along the axis the sign flips and the magnitude doubles
        assert_relative_eq!(dipolar_coupling(&o, &[0.0, 0.0, r]), -TAU * 0.052, max_relative = 1e-12);
    }

    #[test]
    fn nearest_neighbour_coupling_scale() {
        // Mean |J| to the nearest neighbour at 1.125 ppm is of order 2π×0.05 MHz.
        let mut total = 0.0;
        let mut count = 0;
        for seed in 0..50 {
            let cfg = EnsembleConfig {
                seed,
                ..Default::default()
            };
            let ens = build_ensemble(&cfg, 0).unwrap();
            for i in 0..ens.n_spins() {
                let nearest = (0..ens.n_spins())
                    .filter(|&j| j != i)
                    .min_by(|&a, &b| {
                        distance_sq(&ens.positions[i], &ens.positions[a])
                            .total_cmp(&distance_sq(&ens.positions[i], &ens.positions[b]))
                    })
                    .unwrap();
                total += ens.couplings.get(i, nearest).abs();
                count += 1;
            }
        }
        let mean_mhz = units::to_mhz(total / count as f64);
        assert!(mean_mhz > 0.005 && mean_mhz < 0.5, "{mean_mhz}");
    }

    #[test]
    fn zero_sigma_fields() {
        let cfg = EnsembleConfig {
            field_sigma: 0.0,
            ..Default::default()
        };
        assert!(sample_onsite_fields(&cfg, &mut cfg.rng(3)).iter().all(|h| *h == 0.0));
    }

    #[test]
    fn field_statistics() {
        let cfg = EnsembleConfig {
            n_spins: 10_000,
            ..Default::default()
        };
        let h = sample_onsite_fields(&cfg, &mut cfg.rng(0));
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        let var = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (h.len() - 1) as f64;
        let expected = TAU * 1.7;
        assert!((var.sqrt() - expected).abs() / expected < 0.05);
    }

    #[test]
    fn deterministic_fields_and_ensembles() {
        let cfg = EnsembleConfig {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(
            sample_onsite_fields(&cfg, &mut cfg.rng(1)),
            sample_onsite_fields(&cfg, &mut cfg.rng(1))
        );
        let a = build_ensemble(&cfg, 7).unwrap();
        let b = build_ensemble(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_ensemble(&cfg, 8).unwrap());
    }

    #[test]
    fn two_group_labels() {
        let cfg = EnsembleConfig {
            n_groups: 2,
            group_fraction: 0.5,
            ..Default::default()
        };
        let ens = build_ensemble(&cfg, 0).unwrap();
        assert_eq!(ens.group_count(Group::A), 8);
        assert_eq!(ens.group_count(Group::B), 8);
        assert!(ens.is_two_group());
    }

    #[test]
    fn default_couplings_structure() {
        let ens = build_ensemble(&EnsembleConfig::default(), 0).unwrap();
        let n = ens.n_spins();
        let mut nonzero = 0;
        for i in 0..n {
            assert_eq!(ens.couplings.get(i, i), 0.0);
            for j in 0..n {
                assert_eq!(ens.couplings.get(i, j), ens.couplings.get(j, i));
                if i < j && ens.couplings.get(i, j) != 0.0 {
                    nonzero += 1;
                }
            }
        }
        assert_eq!(nonzero, 16 * 15 / 2);
    }

    #[test]
    fn center_is_closest_to_middle() {
        let ens = build_ensemble(&EnsembleConfig::default(), 5).unwrap();
        let c = [ens.box_side / 2.0; 3];
        let dc = distance_sq(&ens.positions[ens.center_index], &c);
        assert!(ens.positions.iter().all(|p| distance_sq(p, &c) >= dc));
    }

    #[test]
    fn json_has_constants() {
        let ens = build_ensemble(&EnsembleConfig::default(), 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&ens.to_json().unwrap()).unwrap();
        assert_eq!(v["constants"]["dipolar_coefficient_mhz_nm3"], 52.0);
        assert_eq!(v["ensemble"]["fields"].as_array().unwrap().len(), 16);
    }

    fn arb_positions() -> impl Strategy<Value = Vec<Position>> {
        prop::collection::vec(prop::array::uniform3(-20.0..20.0f64), 2..7).prop_filter(
            "distinct points",
            |ps| {
                ps.iter()
                    .enumerate()
                    .all(|(i, a)| ps[i + 1..].iter().all(|b| distance_sq(a, b) > 0.25))
            },
        )
    }

    proptest! {
        #[test]
        fn doubling_distances_divides_by_eight(ps in arb_positions()) {
            let j1 = couplings_from_positions(&ps);
            let doubled: Vec<Position> = ps.iter().map(|p| [2.0 * p[0], 2.0 * p[1], 2.0 * p[2]]).collect();
            let j2 = couplings_from_positions(&doubled);
            for (i, k, v) in j1.pairs() {
                prop_assert!((j2.get(i, k) * 8.0 - v).abs() <= 1e-12 * v.abs().max(1e-12));
            }
        }

        #[test]
        fn rotation_about_z_preserves_couplings(ps in arb_positions(), angle in 0.0..TAU) {
            let (s, c) = angle.sin_cos();
            let rotated: Vec<Position> = ps.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]).collect();
            let j1 = couplings_from_positions(&ps);
            let j2 = couplings_from_positions(&rotated);
            for (i, k, v) in j1.pairs() {
                prop_assert!((j2.get(i, k) - v).abs() <= 1e-9 * v.abs().max(1e-9));
            }
        }
    }
}
