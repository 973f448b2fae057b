//! Counter-based randomness.
//!
//! Every site color is a pure function of `(seed, site index)`, so a site can be
//! evaluated lazily, in any order, on any thread. Per-sample seeds are derived
//! the same way from `(base_seed, size, sample_index)`.

/// Identifier written into manifests and configuration metadata.
pub const RNG_ALGORITHM_ID: &str = "splitmix64-keyed-site-v1";

/// Documented seed derivation, also written into manifests.
pub const SEED_DERIVATION: &str =
    "sample_seed = mix64(mix64(mix64(base_seed ^ C0) ^ size*C1) ^ sample_index*C2)";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const C0: u64 = 0xD1B5_4A32_D192_ED03;
const C1: u64 = 0xA24B_AED4_963E_E407;
const C2: u64 = 0x9FB2_1C65_1E98_DF25;

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-configuration key; computed once per sample.
#[inline]
pub fn site_key(seed: u64) -> u64 {
    mix64(seed ^ C0).wrapping_add(GOLDEN)
}

/// Uniform 64-bit word attached to a site index under a given key.
#[inline]
pub fn site_word(key: u64, index: u64) -> u64 {
    mix64(key ^ mix64(index.wrapping_mul(GOLDEN).wrapping_add(C1)))
}

/// `hash64(base_seed, size, sample_index)`.
#[inline]
pub fn derive_seed(base_seed: u64, size: u64, sample_index: u64) -> u64 {
    let s = mix64(base_seed ^ C0);
    let s = mix64(s ^ size.wrapping_mul(C1));
    mix64(s ^ sample_index.wrapping_mul(C2))
}

/// Bernoulli(p) decision rule on a uniform word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenRule {
    Never,
    Always,
    /// Open iff the word is strictly below the threshold.
    Below(u64),
}

impl OpenRule {
    pub fn new(p: f64) -> Self {
        if !(p > 0.0) {
            OpenRule::Never
        } else if p >= 1.0 {
            OpenRule::Always
        } else {
            // 2^64 * p, exact for dyadic p such as 1/2.
            OpenRule::Below((p * 18_446_744_073_709_551_616.0) as u64)
        }
    }

    #[inline]
    pub fn is_open(self, word: u64) -> bool {
        match self {
            OpenRule::Never => false,
            OpenRule::Always => true,
            OpenRule::Below(t) => word < t,
        }
    }
}
