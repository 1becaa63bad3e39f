//! Layered proximity graph for approximate cosine nearest-neighbor search.
//!
//! Nodes are indices into an external vector arena owned by the caller, so
//! the graph itself stores only adjacency. Level sampling is driven by a
//! seeded RNG, making construction (and therefore search results)
//! reproducible for a fixed insertion order.

use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::cosine_similarity;

/// Candidate ordered by similarity, ties by ascending node index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Scored {
    sim: f32,
    node: usize,
}

impl Eq for Scored {}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sim
            .partial_cmp(&other.sim)
            .expect("similarity is never NaN")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// Adjacency per level, index 0 = ground layer.
    neighbors: Vec<Vec<usize>>,
}

impl Node {
    fn level(&self) -> usize {
        self.neighbors.len() - 1
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Hnsw {
    m: usize,
    m0: usize,
    ef_construction: usize,
    level_scale: f64,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    entry_point: Option<usize>,
    max_level: usize,
}

impl Hnsw {
    pub fn new(m: usize, ef_construction: usize, seed: u64) -> Self {
        Hnsw {
            m,
            m0: m * 2,
            ef_construction,
            level_scale: 1.0 / (m as f64).ln(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes: Vec::new(),
            entry_point: None,
            max_level: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    fn sample_level(&mut self) -> usize {
        let u: f64 = self.rng.random_range(f64::EPSILON..1.0);
        (-u.ln() * self.level_scale).floor() as usize
    }

    /// Insert the node `idx`; `vectors[..=idx]` must be populated.
    pub fn insert(&mut self, idx: usize, vectors: &[Vec<f32>]) {
        debug_assert_eq!(idx, self.nodes.len(), "insertion order must be dense");
        let level = self.sample_level();
        self.nodes.push(Node {
            neighbors: vec![Vec::new(); level + 1],
        });

        let Some(mut ep) = self.entry_point else {
            self.entry_point = Some(idx);
            self.max_level = level;
            return;
        };

        let query = &vectors[idx];

        // Greedy descent through layers above the new node's level.
        for lvl in ((level + 1)..=self.max_level).rev() {
            ep = self.greedy_closest(query, ep, lvl, vectors);
        }

        // Connect on every shared layer.
        for lvl in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(query, &[ep], self.ef_construction, lvl, vectors);
            let max_links = if lvl == 0 { self.m0 } else { self.m };
            let selected = self.select_neighbors(&found, self.m, vectors);
            for &Scored { node, .. } in &selected {
                self.nodes[idx].neighbors[lvl].push(node);
                self.nodes[node].neighbors[lvl].push(idx);
                if self.nodes[node].neighbors[lvl].len() > max_links {
                    self.shrink_neighbors(node, lvl, max_links, vectors);
                }
            }
            if let Some(best) = found.first() {
                ep = best.node;
            }
        }

        if level > self.max_level {
            self.max_level = level;
            self.entry_point = Some(idx);
        }
    }

    /// Approximate top-k by similarity; ties by ascending node index.
    pub fn search(&self, query: &[f32], k: usize, ef: usize, vectors: &[Vec<f32>]) -> Vec<(usize, f32)> {
        let Some(mut ep) = self.entry_point else {
            return Vec::new();
        };
        for lvl in (1..=self.max_level).rev() {
            ep = self.greedy_closest(query, ep, lvl, vectors);
        }
        let mut found = self.search_layer(query, &[ep], ef.max(k), 0, vectors);
        found.truncate(k);
        found.into_iter().map(|s| (s.node, s.sim)).collect()
    }

    fn greedy_closest(&self, query: &[f32], start: usize, lvl: usize, vectors: &[Vec<f32>]) -> usize {
        let mut best = start;
        let mut best_sim = cosine_similarity(query, &vectors[best]);
        loop {
            let mut improved = false;
            for &n in &self.nodes[best].neighbors[lvl] {
                let sim = cosine_similarity(query, &vectors[n]);
                if sim > best_sim {
                    best = n;
                    best_sim = sim;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` nodes, best first.
    fn search_layer(
        &self,
        query: &[f32],
        entry_points: &[usize],
        ef: usize,
        lvl: usize,
        vectors: &[Vec<f32>],
    ) -> Vec<Scored> {
        let mut visited = vec![false; self.nodes.len()];
        let mut candidates = BinaryHeap::new(); // max-heap: best candidate first
        let mut results: BinaryHeap<std::cmp::Reverse<Scored>> = BinaryHeap::new(); // min-heap: worst result first

        for &ep in entry_points {
            if visited[ep] {
                continue;
            }
            visited[ep] = true;
            let s = Scored {
                sim: cosine_similarity(query, &vectors[ep]),
                node: ep,
            };
            candidates.push(s);
            results.push(std::cmp::Reverse(s));
        }

        while let Some(current) = candidates.pop() {
            let worst = results.peek().expect("results never empty here").0;
            if results.len() >= ef && current.sim < worst.sim {
                break;
            }
            for &n in &self.nodes[current.node].neighbors[lvl] {
                if visited[n] {
                    continue;
                }
                visited[n] = true;
                let s = Scored {
                    sim: cosine_similarity(query, &vectors[n]),
                    node: n,
                };
                let worst = results.peek().expect("non-empty").0;
                if results.len() < ef || s.sim > worst.sim {
                    candidates.push(s);
                    results.push(std::cmp::Reverse(s));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }

        let mut out: Vec<Scored> = results.into_iter().map(|r| r.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// Diversified neighbor selection: a candidate is kept when it is closer
    /// to the base (its `sim` score) than to every neighbor already kept;
    /// skipped candidates backfill if the list comes up short.
    fn select_neighbors(&self, candidates: &[Scored], m: usize, vectors: &[Vec<f32>]) -> Vec<Scored> {
        let mut kept: Vec<Scored> = Vec::with_capacity(m);
        let mut skipped: Vec<Scored> = Vec::new();
        for &c in candidates {
            if kept.len() >= m {
                break;
            }
            let diverse = kept
                .iter()
                .all(|r| c.sim >= cosine_similarity(&vectors[c.node], &vectors[r.node]));
            if diverse {
                kept.push(c);
            } else {
                skipped.push(c);
            }
        }
        for c in skipped {
            if kept.len() >= m {
                break;
            }
            kept.push(c);
        }
        kept
    }

    fn shrink_neighbors(&mut self, node: usize, lvl: usize, max_links: usize, vectors: &[Vec<f32>]) {
        let base = &vectors[node];
        let mut scored: Vec<Scored> = self.nodes[node].neighbors[lvl]
            .iter()
            .map(|&n| Scored {
                sim: cosine_similarity(base, &vectors[n]),
                node: n,
            })
            .collect();
        scored.sort_by(|a, b| b.cmp(a));
        scored.dedup_by_key(|s| s.node);
        let selected = self.select_neighbors(&scored, max_links, vectors);
        self.nodes[node].neighbors[lvl] = selected.into_iter().map(|s| s.node).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v: Vec<f32> = (0..dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                for x in &mut v {
                    *x /= norm;
                }
                v
            })
            .collect()
    }

    fn exact_top_k(vectors: &[Vec<f32>], query: &[f32], k: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f32)> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, cosine_similarity(query, v)))
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.into_iter().take(k).map(|(i, _)| i).collect()
    }

    #[test]
    fn finds_exact_match() {
        let vectors = random_unit_vectors(200, 16, 7);
        let mut g = Hnsw::new(16, 200, 0);
        for i in 0..vectors.len() {
            g.insert(i, &vectors);
        }
        let hits = g.search(&vectors[42], 1, 100, &vectors);
        assert_eq!(hits[0].0, 42);
        assert!((hits[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn recall_on_random_corpus() {
        let vectors = random_unit_vectors(2000, 32, 11);
        let queries = random_unit_vectors(20, 32, 13);
        let mut g = Hnsw::new(16, 200, 0);
        for i in 0..vectors.len() {
            g.insert(i, &vectors);
        }
        let k = 10;
        let mut overlap = 0usize;
        for q in &queries {
            let approx: Vec<usize> = g.search(q, k, 100, &vectors).into_iter().map(|(i, _)| i).collect();
            let exact = exact_top_k(&vectors, q, k);
            overlap += exact.iter().filter(|i| approx.contains(i)).count();
        }
        let recall = overlap as f64 / (queries.len() * k) as f64;
        assert!(recall >= 0.9, "recall {recall} below target");
    }

    #[test]
    fn construction_is_seed_deterministic() {
        let vectors = random_unit_vectors(500, 16, 3);
        let query = &random_unit_vectors(1, 16, 5)[0];
        let build = || {
            let mut g = Hnsw::new(8, 100, 42);
            for i in 0..vectors.len() {
                g.insert(i, &vectors);
            }
            g.search(query, 10, 50, &vectors)
        };
        assert_eq!(build(), build());
    }
}
