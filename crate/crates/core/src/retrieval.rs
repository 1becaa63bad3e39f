//! Hybrid context assembly: semantic top-k hits expanded with their chain
//! neighbors, unioned with the most recent messages, deduplicated, ordered
//! chronologically, and capped.
//!
//! When the union exceeds the cap, recency messages are kept
//! unconditionally, then semantic hits in descending similarity, then
//! neighbors in their anchors' order — so neighbor-only entries of the
//! weakest hits are the first to go.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::RetrievalConfig;
use crate::embed::Embedder;
use crate::error::{CoreError, Result};
use crate::graph::WorldStore;
use crate::index::VectorIndex;
use crate::types::{Exchange, MessageId, PersonId};

/// Why a message made it into the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SemanticHit,
    Neighbor,
    Recent,
}

/// One message inside an assembled context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMessage {
    pub message_id: MessageId,
    pub user_text: String,
    pub reply_text: String,
    pub timestamp: u64,
    pub provenance: Provenance,
}

/// The bounded window handed to the language-model client.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedContext {
    pub messages: Vec<ContextMessage>,
    pub current_input: String,
    pub person_summary: String,
    /// True when the embedder failed and only the recency window was used.
    pub recency_fallback: bool,
}

impl RetrievedContext {
    pub fn message_ids(&self) -> Vec<MessageId> {
        self.messages.iter().map(|m| m.message_id).collect()
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.messages
            .iter()
            .map(|m| Exchange::new(m.user_text.clone(), m.reply_text.clone()))
            .collect()
    }
}

/// Text a message is embedded under: both sides of the exchange, so queries
/// can match either.
pub fn embedding_text(user_text: &str, reply_text: &str) -> String {
    format!("USER: {user_text}\nROBOT: {reply_text}")
}

/// Assemble the hybrid context for `person` given the incoming `input`.
pub fn assemble_context(
    store: &WorldStore,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    cfg: &RetrievalConfig,
    person: PersonId,
    input: &str,
) -> Result<RetrievedContext> {
    if input.trim().is_empty() {
        return Err(CoreError::validation("input text must be non-empty"));
    }
    let live = store.resolve(person);
    let person_summary = store.person_summary(live);
    let face = store.person(live).face_id.clone();

    let recency = store.last_n(live, cfg.recent_n);

    let (hits, recency_fallback) = match embedder.embed(input) {
        Ok(query) => (index.search(&query, cfg.semantic_k, &face)?, false),
        Err(_) => (Vec::new(), true),
    };

    // Neighbor expansion, anchor order preserved, prev before next.
    let mut neighbor_order: Vec<MessageId> = Vec::new();
    for (hit, _) in &hits {
        let mut prev = *hit;
        for _ in 0..cfg.neighbor_radius {
            match store.message(prev).and_then(|m| m.prev) {
                Some(p) => {
                    neighbor_order.push(p);
                    prev = p;
                }
                None => break,
            }
        }
        let mut next = *hit;
        for _ in 0..cfg.neighbor_radius {
            match store.message(next).and_then(|m| m.next) {
                Some(n) => {
                    neighbor_order.push(n);
                    next = n;
                }
                None => break,
            }
        }
    }

    // Admission under the cap. Tag precedence: semantic hit > recent > neighbor.
    let mut provenance: HashMap<MessageId, Provenance> = HashMap::new();
    let mut admitted: Vec<MessageId> = Vec::new();
    let mut admit = |id: MessageId, tag: Provenance, provenance: &mut HashMap<MessageId, Provenance>, admitted: &mut Vec<MessageId>| {
        match provenance.get(&id) {
            None => {
                provenance.insert(id, tag);
                admitted.push(id);
            }
            Some(Provenance::Recent) if tag == Provenance::SemanticHit => {
                provenance.insert(id, tag);
            }
            Some(_) => {}
        }
    };

    // Recency first, newest first so an undersized cap keeps continuity.
    for id in recency.iter().rev() {
        if admitted.len() >= cfg.cap {
            break;
        }
        admit(*id, Provenance::Recent, &mut provenance, &mut admitted);
    }
    for (id, _) in &hits {
        if admitted.len() >= cfg.cap {
            // Re-tagging an already-admitted recent as a hit is free.
            if provenance.get(id) == Some(&Provenance::Recent) {
                provenance.insert(*id, Provenance::SemanticHit);
            }
            continue;
        }
        admit(*id, Provenance::SemanticHit, &mut provenance, &mut admitted);
    }
    for id in &neighbor_order {
        if admitted.len() >= cfg.cap {
            break;
        }
        admit(*id, Provenance::Neighbor, &mut provenance, &mut admitted);
    }

    admitted.sort_by_key(|id| store.message(*id).map(|m| m.timestamp).unwrap_or(u64::MAX));
    let messages = admitted
        .into_iter()
        .map(|id| {
            let m = store.message(id).expect("admitted message exists");
            ContextMessage {
                message_id: id,
                user_text: m.user_text.clone(),
                reply_text: m.reply_text.clone(),
                timestamp: m.timestamp,
                provenance: provenance[&id],
            }
        })
        .collect();

    Ok(RetrievedContext {
        messages,
        current_input: input.to_string(),
        person_summary,
        recency_fallback,
    })
}

/// Language-model client: summary + ordered exchanges + current input in,
/// reply text out.
pub trait LanguageModel: Send + Sync {
    fn complete(&self, summary: &str, history: &[Exchange], input: &str) -> Result<String>;

    /// Deterministic per-call cost for simulated clients. `None` means the
    /// caller should measure wall-clock time instead.
    fn simulated_ms(&self, _context_messages: usize) -> Option<f64> {
        None
    }
}

/// Replies with the input verbatim.
#[derive(Debug, Default, Clone)]
pub struct EchoModel;

impl LanguageModel for EchoModel {
    fn complete(&self, _summary: &str, _history: &[Exchange], input: &str) -> Result<String> {
        Ok(input.to_string())
    }
}

/// Pops pre-recorded replies in order; errors when the script runs dry.
#[derive(Debug, Default)]
pub struct ScriptedModel {
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedModel {
    pub fn new(replies: impl IntoIterator<Item = String>) -> Self {
        ScriptedModel {
            replies: Mutex::new(replies.into_iter().collect()),
        }
    }

    /// Load a script: a JSON array of reply strings.
    pub fn from_json(json: &str) -> Result<Self> {
        let replies: Vec<String> = serde_json::from_str(json)?;
        Ok(ScriptedModel::new(replies))
    }
}

impl LanguageModel for ScriptedModel {
    fn complete(&self, _summary: &str, _history: &[Exchange], _input: &str) -> Result<String> {
        self.replies
            .lock()
            .expect("script lock poisoned")
            .pop_front()
            .ok_or_else(|| CoreError::Model("scripted replies exhausted".into()))
    }
}

/// Cost-model client: reply cost scales linearly with context size. The
/// reply itself is deterministic so output-similarity analysis stays
/// reproducible.
#[derive(Debug, Clone)]
pub struct LatencyModel {
    pub per_message_ms: f64,
}

impl LatencyModel {
    pub fn new(per_message_ms: f64) -> Self {
        LatencyModel { per_message_ms }
    }
}

impl LanguageModel for LatencyModel {
    fn complete(&self, _summary: &str, history: &[Exchange], input: &str) -> Result<String> {
        Ok(format!("(over {} messages) {input}", history.len()))
    }

    fn simulated_ms(&self, context_messages: usize) -> Option<f64> {
        Some(self.per_message_ms * context_messages as f64)
    }
}
