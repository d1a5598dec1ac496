//! Stable hashing and seed-derivation helpers.
//!
//! These are pinned algorithms (FNV-1a, splitmix64) rather than `std`'s
//! hasher so that seeded results stay identical across platforms, Rust
//! versions, and processes.

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// splitmix64 finalizer; avalanches a 64-bit state.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_mul(0x9e3779b97f4a7c15))
}

/// Maps a hash to a uniform float in [0, 1) using the top 53 bits.
pub fn unit_from_u64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_distinguishes_inputs() {
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
        assert_eq!(fnv1a64(b"abc"), fnv1a64(b"abc"));
    }

    #[test]
    fn unit_range() {
        for h in [0u64, 1, u64::MAX, 0xdeadbeef] {
            let u = unit_from_u64(splitmix64(h));
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn derived_seeds_differ_by_index() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
