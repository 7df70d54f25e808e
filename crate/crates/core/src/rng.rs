//! Deterministic randomness helpers.
//!
//! Bootstrap multipliers come from a counter-based generator keyed by
//! (seed, replicate, cluster) so that any parallel schedule reproduces the
//! same draws. Simulation streams are derived by hashing a (seed, stream)
//! pair into an independent sub-seed.

use crate::penalty::inv_norm_cdf;

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for a named stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream)
}

/// Uniform in (0, 1), strictly open on both ends.
#[inline]
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) / 9_007_199_254_740_992.0
}

/// Standard normal multiplier for bootstrap replicate `b`, cluster `g`.
///
/// Counter-based: the value depends only on the key, never on call order,
/// so serial and parallel replicate loops agree bit for bit.
pub fn gaussian_multiplier(seed: u64, b: u64, g: u64) -> f64 {
    let z = mix64(mix64(mix64(seed) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ g);
    inv_norm_cdf(unit_open(z)).expect("unit_open output is strictly inside (0,1)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_is_a_pure_function_of_key() {
        let a = gaussian_multiplier(7, 3, 11);
        let b = gaussian_multiplier(7, 3, 11);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(
            gaussian_multiplier(7, 3, 12).to_bits(),
            a.to_bits(),
            "different cluster must give a different draw"
        );
    }

    #[test]
    fn multipliers_have_standard_normal_moments() {
        let n = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for g in 0..n {
            let x = gaussian_multiplier(42, 0, g);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
