//! Stable seed derivation. Results must not depend on std's randomized
//! hashers, so seeds are mixed with SplitMix64.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pure function of `base` and `parts`, order-sensitive.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| {
            splitmix64(acc.wrapping_mul(0x0000_0100_0000_01B3) ^ splitmix64(p))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_and_order_sensitive() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
        assert_ne!(derive_seed(0, &[]), derive_seed(0, &[0]));
    }
}
