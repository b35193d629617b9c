//! Token → embedding-row mapping via FNV-1a over the lowercased token.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const DEFAULT_BUCKETS: usize = 32_768;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Row index of `token` in a table with `buckets` rows.
pub fn bucket(token: &str, buckets: usize) -> usize {
    (fnv1a64(token.to_lowercase().as_bytes()) % buckets as u64) as usize
}

pub fn buckets_for(tokens: &[String], buckets: usize) -> Vec<usize> {
    tokens.iter().map(|t| bucket(t, buckets)).collect()
}
