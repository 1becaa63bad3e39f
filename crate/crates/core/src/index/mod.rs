//! Embedding storage and cosine top-k search over message nodes.
//!
//! One sub-index per face id: retrieval always targets a single person's
//! history, and per-face structures keep recall independent of how much
//! other people have talked. Small sub-indexes (at or below
//! `exact_threshold` entries) are scanned exactly; larger ones are served
//! by a seeded proximity graph. Merges never move vectors — an alias table
//! consulted at query time folds absorbed faces into the survivor.

mod hnsw;

use std::collections::{HashMap, HashSet};

use crate::config::IndexConfig;
use crate::embed::{cosine_similarity, fnv1a};
use crate::error::{CoreError, Result};
use crate::types::{FaceId, MessageId};

use hnsw::Hnsw;

/// One indexed message.
#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub message_id: MessageId,
    pub face_id: FaceId,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone)]
struct FaceIndex {
    ids: Vec<MessageId>,
    vectors: Vec<Vec<f32>>,
    graph: Option<Hnsw>,
}

impl FaceIndex {
    fn new() -> Self {
        FaceIndex {
            ids: Vec::new(),
            vectors: Vec::new(),
            graph: None,
        }
    }
}

/// Cosine nearest-neighbor index with per-face partitions.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    config: IndexConfig,
    faces: HashMap<FaceId, FaceIndex>,
    /// merged face -> surviving face; chains are followed at query time.
    aliases: HashMap<FaceId, FaceId>,
    /// canonical face -> all member faces whose sub-indexes serve it.
    groups: HashMap<FaceId, Vec<FaceId>>,
    seen: HashSet<MessageId>,
}

impl VectorIndex {
    pub fn new(config: IndexConfig) -> Self {
        VectorIndex {
            config,
            faces: HashMap::new(),
            aliases: HashMap::new(),
            groups: HashMap::new(),
            seen: HashSet::new(),
        }
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    fn canonical(&self, face: &FaceId) -> FaceId {
        let mut cur = face;
        while let Some(next) = self.aliases.get(cur) {
            cur = next;
        }
        cur.clone()
    }

    fn group_members(&self, canonical: &FaceId) -> Vec<FaceId> {
        self.groups
            .get(canonical)
            .cloned()
            .unwrap_or_else(|| vec![canonical.clone()])
    }

    /// Record that `merged`'s history now belongs to `survivor`.
    pub fn alias_face(&mut self, merged: &FaceId, survivor: &FaceId) {
        let merged_root = self.canonical(merged);
        let survivor_root = self.canonical(survivor);
        if merged_root == survivor_root {
            return;
        }
        let members = self
            .groups
            .remove(&merged_root)
            .unwrap_or_else(|| vec![merged_root.clone()]);
        self.aliases.insert(merged_root.clone(), survivor_root.clone());
        self.groups
            .entry(survivor_root.clone())
            .or_insert_with(|| vec![survivor_root.clone()])
            .extend(members);
    }

    pub fn insert(&mut self, entry: IndexEntry) -> Result<()> {
        if entry.vector.len() != self.config.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.config.dimension,
                got: entry.vector.len(),
            });
        }
        if !self.seen.insert(entry.message_id) {
            return Err(CoreError::DuplicateMessageId(entry.message_id));
        }
        let face = self.canonical(&entry.face_id);
        let sub = self.faces.entry(face.clone()).or_insert_with(FaceIndex::new);
        sub.ids.push(entry.message_id);
        sub.vectors.push(entry.vector);

        if sub.vectors.len() > self.config.exact_threshold {
            if sub.graph.is_none() {
                let seed = self.config.seed ^ fnv1a(face.as_str().as_bytes());
                let mut graph = Hnsw::new(self.config.hnsw_m, self.config.hnsw_ef_construction, seed);
                for i in 0..sub.vectors.len() {
                    graph.insert(i, &sub.vectors);
                }
                sub.graph = Some(graph);
            } else if let Some(graph) = sub.graph.as_mut() {
                graph.insert(sub.vectors.len() - 1, &sub.vectors);
            }
        }
        Ok(())
    }

    /// Up to `k` entries for `face_filter`, descending similarity, ties by
    /// ascending message id. Exact below the threshold, approximate above.
    pub fn search(&self, query: &[f32], k: usize, face_filter: &FaceId) -> Result<Vec<(MessageId, f32)>> {
        self.search_inner(query, k, face_filter, false)
    }

    /// Brute-force oracle with identical shape and tie-breaking.
    pub fn exact_search(
        &self,
        query: &[f32],
        k: usize,
        face_filter: &FaceId,
    ) -> Result<Vec<(MessageId, f32)>> {
        self.search_inner(query, k, face_filter, true)
    }

    fn search_inner(
        &self,
        query: &[f32],
        k: usize,
        face_filter: &FaceId,
        force_exact: bool,
    ) -> Result<Vec<(MessageId, f32)>> {
        if query.len() != self.config.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.config.dimension,
                got: query.len(),
            });
        }
        if k == 0 {
            return Err(CoreError::validation("k must be at least 1"));
        }
        let canonical = self.canonical(face_filter);
        let mut results: Vec<(MessageId, f32)> = Vec::new();
        for member in self.group_members(&canonical) {
            let Some(sub) = self.faces.get(&member) else { continue };
            let approximate = !force_exact && sub.vectors.len() > self.config.exact_threshold;
            if approximate {
                let graph = sub.graph.as_ref().expect("graph exists above threshold");
                let ef = self.config.hnsw_ef_search.max(k);
                for (node, sim) in graph.search(query, k, ef, &sub.vectors) {
                    results.push((sub.ids[node], sim));
                }
            } else {
                for (i, v) in sub.vectors.iter().enumerate() {
                    results.push((sub.ids[i], cosine_similarity(query, v)));
                }
            }
        }
        results.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("similarity is never NaN")
                .then_with(|| a.0.cmp(&b.0))
        });
        results.truncate(k);
        Ok(results)
    }

    /// Entry count currently credited to `face` (aliases included).
    pub fn face_len(&self, face: &FaceId) -> usize {
        let canonical = self.canonical(face);
        self.group_members(&canonical)
            .iter()
            .filter_map(|f| self.faces.get(f))
            .map(|sub| sub.ids.len())
            .sum()
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.seen.contains(&id)
    }
}
