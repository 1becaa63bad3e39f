//! Engine configuration. Every knob carries the deployment default; tests
//! shrink dimensions and caps to keep fixtures hand-checkable.

use serde::{Deserialize, Serialize};

/// Hybrid retrieval windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    /// Semantic nearest-neighbor hits pulled per query.
    pub semantic_k: usize,
    /// Chain neighbors attached to each semantic hit on each side.
    pub neighbor_radius: usize,
    /// Most recent messages always considered.
    pub recent_n: usize,
    /// Hard upper bound on the assembled context.
    pub cap: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            semantic_k: 20,
            neighbor_radius: 1,
            recent_n: 20,
            cap: 80,
        }
    }
}

/// Vector index tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Embedding dimension enforced on insert and query.
    pub dimension: usize,
    /// Sub-indexes at or below this entry count are scanned exactly.
    pub exact_threshold: usize,
    /// Proximity-graph degree.
    pub hnsw_m: usize,
    /// Construction beam width.
    pub hnsw_ef_construction: usize,
    /// Query beam width.
    pub hnsw_ef_search: usize,
    /// Seed for level sampling, making construction reproducible.
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            dimension: 1536,
            exact_threshold: 512,
            hnsw_m: 16,
            hnsw_ef_construction: 200,
            hnsw_ef_search: 100,
            seed: 0,
        }
    }
}

/// Full engine configuration, echoed into snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub retrieval: RetrievalConfig,
    pub index: IndexConfig,
    /// Maximum case-insensitive edit distance for fuzzy name resolution.
    pub name_distance_threshold: usize,
    /// Frame votes required per identity resolution round.
    pub vote_frames: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            retrieval: RetrievalConfig::default(),
            index: IndexConfig::default(),
            name_distance_threshold: 2,
            vote_frames: 15,
        }
    }
}

impl EngineConfig {
    /// Compact configuration for tests: small vectors, exact-mode search.
    pub fn small(dimension: usize) -> Self {
        let mut cfg = EngineConfig::default();
        cfg.index.dimension = dimension;
        cfg
    }
}
