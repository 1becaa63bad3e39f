//! socmem-core: an embeddable social-memory engine for conversational
//! agents.
//!
//! The engine keeps a graph-shaped world model of the people an agent has
//! met — names, attributes, and the relationships between them — alongside
//! a per-person chain of every exchange. Replies are grounded through a
//! hybrid retrieval pipeline: the semantically closest messages (with their
//! chain neighbors) plus the most recent ones, deduplicated, ordered
//! chronologically, and capped to a fixed context budget regardless of how
//! long the history grows.
//!
//! All model-facing pieces (embedder, language model, vision captioner,
//! relationship extractor, frame classifier, capability planner) are
//! pluggable traits with deterministic in-process defaults, so everything
//! here runs and tests without network access.

pub mod chain;
pub mod config;
pub mod embed;
pub mod engine;
pub mod error;
pub mod extraction;
pub mod fuzzy;
pub mod graph;
pub mod identity;
pub mod index;
pub mod orchestrator;
pub mod retrieval;
pub mod snapshot;
pub mod types;
pub mod wire;

pub use config::{EngineConfig, IndexConfig, RetrievalConfig};
pub use embed::{cosine_similarity, Embedder, HashEmbedder};
pub use engine::{Engine, ReplyOutcome};
pub use error::{CoreError, Result};
pub use extraction::{AttributeTarget, ExtractionResult, Extractor, MutationRecord, RuleExtractor, SubjectRole};
pub use graph::{MessageRecord, PersonRecord, RelationshipEdge, WorldStore};
pub use identity::{FrameClassifier, FrameVote, MockFrameClassifier, VoteCandidate};
pub use index::{IndexEntry, VectorIndex};
pub use orchestrator::{ActionPlan, Api, CapabilityRegistry, IntentPlanner, MockVision, Planner, ResponseEnvelope, ResponseKind, VisionClient};
pub use retrieval::{ContextMessage, EchoModel, LanguageModel, LatencyModel, Provenance, RetrievedContext, ScriptedModel};
pub use types::{Exchange, FaceId, MessageId, PersonId};
pub use wire::{WireRequest, WireResponse};
