use sha2::{Digest, Sha256};

/// Seed for one randomness consumer, derived from the global seed, a
/// purpose tag and an index. Streams for different tags or indices are
/// independent, so adding a consumer never shifts another.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
