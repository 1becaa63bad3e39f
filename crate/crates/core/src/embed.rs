//! Embedding clients and vector math.
//!
//! The engine treats the embedder as a pluggable client. The shipped
//! [`HashEmbedder`] is fully deterministic: it tokenizes on
//! non-alphanumeric boundaries, folds each token through FNV-1a, and
//! scatters signed unit weights into a fixed-dimension vector before
//! L2-normalizing. Identical text always produces the identical vector,
//! which is what makes the retrieval fixtures and snapshots reproducible.

use crate::error::{CoreError, Result};

/// Embedding client interface. Implementations must be deterministic per
/// instance for snapshot-stable behavior; live adapters relax that.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Embed non-empty text into a vector of `dimension()` values.
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
}

/// FNV-1a 64-bit. The std hasher is not guaranteed stable across releases,
/// and embeddings must survive in snapshots.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Deterministic token-hash embedder.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder { dimension }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(1536)
    }
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        if text.trim().is_empty() {
            return Err(CoreError::validation("cannot embed empty text"));
        }
        let mut values = vec![0f32; self.dimension];
        let mut tokens = 0usize;
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            accumulate(&mut values, &token.to_lowercase());
            tokens += 1;
        }
        if tokens == 0 {
            // All-punctuation input: hash the raw text so the norm stays positive.
            accumulate(&mut values, text);
        }
        let norm = values.iter().map(|v| v * v).sum::<f32>().sqrt();
        debug_assert!(norm > 0.0);
        for v in &mut values {
            *v /= norm;
        }
        Ok(values)
    }
}

fn accumulate(values: &mut [f32], token: &str) {
    let h = fnv1a(token.as_bytes());
    let coord = (h % values.len() as u64) as usize;
    let weight = if h >> 63 == 0 { 1.0 } else { -1.0 };
    values[coord] += weight;
}

/// Cosine similarity; zero vectors compare as 0 rather than NaN.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0f32;
    let mut na = 0f32;
    let mut nb = 0f32;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}
