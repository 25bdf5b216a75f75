//! Physical constants and unit conversions.

use std::f64::consts::TAU;

/// Dipolar coupling scale J0 in MHz·nm³, so that |J| ~ 2π·J0 / r³.
pub const DIPOLAR_COEFFICIENT_MHZ_NM3: f64 = 52.0;

/// Carbon number density of diamond in cm⁻³, used to convert ppm to a number density.
pub const DIAMOND_CARBON_DENSITY_PER_CM3: f64 = 1.76e23;

const NM3_PER_CM3: f64 = 1e21;

/// Golden ratio (√5 + 1) / 2.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Golden ratio truncated to three decimals, as realizable on a 0.5 ns AWG.
pub const GOLDEN_RATIO_TRUNCATED: f64 = 1.618;

/// Ordinary frequency in MHz to angular frequency in rad/µs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/µs to ordinary MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Spin concentration in ppm (per carbon site) to spins per nm³.
pub fn ppm_to_density(ppm: f64) -> f64 {
    ppm * 1e-6 * DIAMOND_CARBON_DENSITY_PER_CM3 / NM3_PER_CM3
}

/// Spins per nm³ to ppm (per carbon site).
pub fn density_to_ppm(density: f64) -> f64 {
    density * NM3_PER_CM3 / DIAMOND_CARBON_DENSITY_PER_CM3 * 1e6
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_density_conversion() {
        // 1.125 ppm × 1.76e23 cm⁻³ = 1.98e17 cm⁻³ = 1.98e-4 nm⁻³
        assert_relative_eq!(ppm_to_density(1.125), 1.98e-4, max_relative = 1e-12);
        assert_relative_eq!(density_to_ppm(1.98e-4), 1.125, max_relative = 1e-12);
    }

    #[test]
    fn golden_ratio_identity() {
        let p = GOLDEN_RATIO;
        assert!((p * p - p - 1.0).abs() < 1e-15);
        let t = GOLDEN_RATIO_TRUNCATED;
        // 1.618² − 1.618 − 1 = −7.6e-5
        let dev = (t * t - t - 1.0).abs();
        assert!(dev > 7e-5 && dev < 8e-5, "{dev}");
    }

    #[test]
    fn mhz_roundtrip() {
        assert_relative_eq!(to_mhz(mhz(8.3)), 8.3);
        assert_relative_eq!(mhz(1.0), TAU);
    }
}
