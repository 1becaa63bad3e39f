//! Grounded relationship and attribute extraction.
//!
//! An extractor turns an utterance into a structured [`ExtractionResult`];
//! [`apply`] then routes that result into the world graph through a closed
//! mutation vocabulary (create node, create edge, add attribute). Live
//! model-backed extractors must emit the same structured results — never
//! raw query text — so everything that can touch the graph is enumerable
//! and auditable.
//!
//! The shipped [`RuleExtractor`] is deterministic: an ordered pattern table
//! (see `data/extractor_rules.json`) where the first matching rule wins.
//! Names are recognized as capitalized tokens.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::WorldStore;
use crate::types::{MessageId, PersonId};

/// Who a relationship statement is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectRole {
    Speaker,
    ThirdParty,
}

/// Where an extracted attribute should land.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeTarget {
    Speaker,
    Named(String),
}

/// One extracted attribute assertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeAssertion {
    pub target: AttributeTarget,
    pub category: String,
    pub value: String,
}

/// Structured decision record produced by an extractor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub is_relationship: bool,
    pub subject_role: Option<SubjectRole>,
    pub subject_name: Option<String>,
    pub object_name: Option<String>,
    /// Uppercase-normalized relation label.
    pub relation_label: Option<String>,
    pub attributes: Vec<AttributeAssertion>,
}

impl ExtractionResult {
    pub fn no_match() -> Self {
        ExtractionResult::default()
    }

    pub fn is_empty(&self) -> bool {
        !self.is_relationship && self.attributes.is_empty()
    }
}

/// Extractor plug-in interface. Pure: same utterance, same result.
pub trait Extractor: Send + Sync {
    fn extract(&self, utterance: &str, speaker_name: Option<&str>) -> Result<ExtractionResult>;
}

// ---------------------------------------------------------------------------
// Rule-table extractor

#[derive(Debug, Deserialize)]
struct RuleFile {
    relation_words: String,
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Deserialize)]
struct RuleSpec {
    name: String,
    pattern: String,
    #[serde(default)]
    relationship: Option<RelationshipSpec>,
    #[serde(default)]
    attributes: Vec<AttributeSpec>,
}

#[derive(Debug, Deserialize)]
struct RelationshipSpec {
    subject: String,
    object: String,
    label: String,
}

#[derive(Debug, Deserialize)]
struct AttributeSpec {
    target: String,
    category: String,
    value: String,
}

struct CompiledRule {
    regex: Regex,
    relationship: Option<RelationshipSpec>,
    attributes: Vec<AttributeSpec>,
}

const NAME_PATTERN: &str = "[A-Z][a-zA-Z]*";

/// Deterministic pattern-table extractor.
pub struct RuleExtractor {
    rules: Vec<CompiledRule>,
}

impl fmt::Debug for RuleExtractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RuleExtractor")
            .field("rules", &self.rules.len())
            .finish()
    }
}

impl Default for RuleExtractor {
    fn default() -> Self {
        RuleExtractor::from_json(include_str!("../data/extractor_rules.json"))
            .expect("bundled rule table is valid")
    }
}

impl RuleExtractor {
    pub fn from_json(json: &str) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(json)?;
        let mut rules = Vec::with_capacity(file.rules.len());
        for spec in file.rules {
            let pattern = spec
                .pattern
                .replace("@REL@", &file.relation_words)
                .replace("@NAME@", NAME_PATTERN);
            let regex = Regex::new(&pattern)
                .map_err(|e| CoreError::Extractor(format!("rule {}: {e}", spec.name)))?;
            rules.push(CompiledRule {
                name: spec.name,
                regex,
                relationship: spec.relationship,
                attributes: spec.attributes,
            });
        }
        Ok(RuleExtractor { rules })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        RuleExtractor::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Resolve `$group` templates against captures; `speaker` stays symbolic.
fn fill(template: &str, captures: &regex::Captures<'_>) -> Option<String> {
    if let Some(group) = template.strip_prefix('$') {
        captures.name(group).map(|m| m.as_str().to_string())
    } else {
        Some(template.to_string())
    }
}

impl Extractor for RuleExtractor {
    fn extract(&self, utterance: &str, speaker_name: Option<&str>) -> Result<ExtractionResult> {
        let text = utterance.trim();
        if text.is_empty() {
            return Err(CoreError::validation("utterance must be non-empty"));
        }
        for rule in &self.rules {
            let Some(caps) = rule.regex.captures(text) else { continue };
            let mut result = ExtractionResult::no_match();
            if let Some(rel) = &rule.relationship {
                let object = fill(&rel.object, &caps);
                let label = fill(&rel.label, &caps).map(|l| l.to_uppercase());
                if let (Some(object), Some(label)) = (object, label) {
                    result.is_relationship = true;
                    result.object_name = Some(object);
                    result.relation_label = Some(label);
                    if rel.subject == "speaker" {
                        result.subject_role = Some(SubjectRole::Speaker);
                        result.subject_name = speaker_name.map(str::to_string);
                    } else {
                        result.subject_role = Some(SubjectRole::ThirdParty);
                        result.subject_name = fill(&rel.subject, &caps);
                    }
                }
            }
            for attr in &rule.attributes {
                let target = if attr.target == "speaker" {
                    Some(AttributeTarget::Speaker)
                } else {
                    fill(&attr.target, &caps).map(AttributeTarget::Named)
                };
                let category = fill(&attr.category, &caps);
                let value = fill(&attr.value, &caps);
                if let (Some(target), Some(category), Some(value)) = (target, category, value) {
                    result.attributes.push(AttributeAssertion {
                        target,
                        category,
                        value,
                    });
                }
            }
            if !result.is_empty() {
                let _ = &rule.name;
                return Ok(result);
            }
        }
        Ok(ExtractionResult::no_match())
    }
}

impl<T: Extractor + ?Sized> Extractor for Arc<T> {
    fn extract(&self, utterance: &str, speaker_name: Option<&str>) -> Result<ExtractionResult> {
        (**self).extract(utterance, speaker_name)
    }
}

// ---------------------------------------------------------------------------
// Applying results to the graph

/// One entry in the auditable mutation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MutationRecord {
    NodeCreated {
        person: PersonId,
        name: String,
    },
    EdgeCreated {
        from: PersonId,
        to: PersonId,
        label: String,
    },
    AttributeAdded {
        person: PersonId,
        category: String,
        value: String,
    },
    Rejected {
        what: String,
        reason: String,
    },
}

impl MutationRecord {
    pub fn is_applied(&self) -> bool {
        !matches!(self, MutationRecord::Rejected { .. })
    }
}

/// Route an extraction result into the graph. Only effective changes are
/// logged (idempotent re-assertions are silent); failures become
/// `Rejected` entries and the rest of the result still applies.
pub fn apply(
    store: &mut WorldStore,
    result: &ExtractionResult,
    speaker: PersonId,
    source: Option<MessageId>,
) -> Vec<MutationRecord> {
    let mut log = Vec::new();
    let mut resolve_named = |store: &mut WorldStore, name: &str, log: &mut Vec<MutationRecord>| {
        match store.resolve_or_create_named(name) {
            Ok((id, created)) => {
                if created {
                    log.push(MutationRecord::NodeCreated {
                        person: id,
                        name: name.to_string(),
                    });
                }
                Some(id)
            }
            Err(e) => {
                log.push(MutationRecord::Rejected {
                    what: format!("resolve {name}"),
                    reason: e.to_string(),
                });
                None
            }
        }
    };

    if result.is_relationship {
        let subject = match result.subject_role {
            Some(SubjectRole::Speaker) | None => Some(store.resolve(speaker)),
            Some(SubjectRole::ThirdParty) => match &result.subject_name {
                Some(name) => resolve_named(store, name, &mut log),
                None => {
                    log.push(MutationRecord::Rejected {
                        what: "relationship".into(),
                        reason: "third-party subject without a name".into(),
                    });
                    None
                }
            },
        };
        let object = result
            .object_name
            .as_deref()
            .and_then(|name| resolve_named(store, name, &mut log));
        match (subject, object, &result.relation_label) {
            (Some(subject), Some(object), Some(label)) => {
                match store.add_relationship_between(subject, object, label, source) {
                    Ok((edge, true)) => log.push(MutationRecord::EdgeCreated {
                        from: edge.from,
                        to: edge.to,
                        label: edge.label,
                    }),
                    Ok((_, false)) => {}
                    Err(e) => log.push(MutationRecord::Rejected {
                        what: format!("edge {label}"),
                        reason: e.to_string(),
                    }),
                }
            }
            _ if result.relation_label.is_none() => log.push(MutationRecord::Rejected {
                what: "relationship".into(),
                reason: "missing relation label".into(),
            }),
            _ => {}
        }
    }

    for assertion in &result.attributes {
        let target = match &assertion.target {
            AttributeTarget::Speaker => Some(store.resolve(speaker)),
            AttributeTarget::Named(name) => resolve_named(store, name, &mut log),
        };
        let Some(target) = target else { continue };
        match store.add_attribute(target, &assertion.category, &assertion.value) {
            Ok(true) => log.push(MutationRecord::AttributeAdded {
                person: target,
                category: assertion.category.to_lowercase(),
                value: assertion.value.trim().to_string(),
            }),
            Ok(false) => {}
            Err(e) => log.push(MutationRecord::Rejected {
                what: format!("attribute {}", assertion.category),
                reason: e.to_string(),
            }),
        }
    }

    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FaceId;

    fn extractor() -> RuleExtractor {
        RuleExtractor::default()
    }

    #[test]
    fn friend_is_bob() {
        let r = extractor().extract("My friend is Bob", Some("Alice")).unwrap();
        assert!(r.is_relationship);
        assert_eq!(r.subject_role, Some(SubjectRole::Speaker));
        assert_eq!(r.subject_name.as_deref(), Some("Alice"));
        assert_eq!(r.object_name.as_deref(), Some("Bob"));
        assert_eq!(r.relation_label.as_deref(), Some("FRIEND"));
        assert!(r.attributes.is_empty());
    }

    #[test]
    fn i_like_chess() {
        let r = extractor().extract("I like chess", None).unwrap();
        assert!(!r.is_relationship);
        assert_eq!(
            r.attributes,
            vec![AttributeAssertion {
                target: AttributeTarget::Speaker,
                category: "likes".into(),
                value: "chess".into(),
            }]
        );
    }

    #[test]
    fn no_match_is_empty() {
        let r = extractor().extract("The weather is nice", None).unwrap();
        assert!(r.is_empty());
        assert!(!r.is_relationship);
        assert!(r.attributes.is_empty());
    }

    #[test]
    fn relation_with_liking_extracts_both() {
        let r = extractor()
            .extract("My friend Bob likes chess.", Some("Alice"))
            .unwrap();
        assert!(r.is_relationship);
        assert_eq!(r.object_name.as_deref(), Some("Bob"));
        assert_eq!(r.relation_label.as_deref(), Some("FRIEND"));
        assert_eq!(
            r.attributes,
            vec![AttributeAssertion {
                target: AttributeTarget::Named("Bob".into()),
                category: "likes".into(),
                value: "chess".into(),
            }]
        );
    }

    #[test]
    fn name_is_my_relation() {
        let r = extractor().extract("Dana is my sister", Some("Rae")).unwrap();
        assert!(r.is_relationship);
        assert_eq!(r.object_name.as_deref(), Some("Dana"));
        assert_eq!(r.relation_label.as_deref(), Some("SISTER"));
        assert_eq!(r.subject_role, Some(SubjectRole::Speaker));
    }

    #[test]
    fn third_party_relationship() {
        let r = extractor().extract("Ken is Mia's brother", None).unwrap();
        assert!(r.is_relationship);
        assert_eq!(r.subject_role, Some(SubjectRole::ThirdParty));
        assert_eq!(r.subject_name.as_deref(), Some("Mia"));
        assert_eq!(r.object_name.as_deref(), Some("Ken"));
        assert_eq!(r.relation_label.as_deref(), Some("BROTHER"));
    }

    #[test]
    fn occupation_strips_article() {
        let r = extractor().extract("I work as a nurse", None).unwrap();
        assert_eq!(
            r.attributes,
            vec![AttributeAssertion {
                target: AttributeTarget::Speaker,
                category: "occupation".into(),
                value: "nurse".into(),
            }]
        );
    }

    #[test]
    fn extract_is_pure() {
        let e = extractor();
        let a = e.extract("My friend Bob likes chess", Some("Alice")).unwrap();
        let b = e.extract("My friend Bob likes chess", Some("Alice")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_utterance_rejected() {
        assert!(extractor().extract("  ", None).is_err());
    }

    // -- apply --

    fn speaker_store() -> (WorldStore, PersonId) {
        let mut s = WorldStore::default();
        let p = s.upsert_person(&FaceId::from("vis-1"));
        s.set_name(p, "Alice").unwrap();
        (s, p)
    }

    #[test]
    fn apply_creates_node_and_edge() {
        let (mut s, alice) = speaker_store();
        let r = extractor().extract("My friend is Bob", Some("Alice")).unwrap();
        let log = apply(&mut s, &r, alice, None);
        assert_eq!(log.len(), 2);
        assert!(matches!(log[0], MutationRecord::NodeCreated { .. }));
        assert!(matches!(log[1], MutationRecord::EdgeCreated { .. }));
        assert_eq!(s.edges().len(), 1);
        assert_eq!(s.persons().len(), 2);
    }

    #[test]
    fn apply_no_match_is_silent() {
        let (mut s, alice) = speaker_store();
        let r = ExtractionResult::no_match();
        assert!(apply(&mut s, &r, alice, None).is_empty());
        assert_eq!(s.persons().len(), 1);
    }

    #[test]
    fn apply_fuzzy_attribute_lands_on_existing() {
        let (mut s, alice) = speaker_store();
        let bob = s.upsert_person(&FaceId::from("vis-2"));
        s.set_name(bob, "Bob").unwrap();
        let r = extractor().extract("Bobb likes chess", Some("Alice")).unwrap();
        let log = apply(&mut s, &r, alice, None);
        assert_eq!(log.len(), 1);
        assert!(matches!(
            &log[0],
            MutationRecord::AttributeAdded { person, .. } if *person == bob
        ));
        assert_eq!(s.persons().len(), 2);
        assert_eq!(s.person(bob).attributes["likes"], vec!["chess"]);
    }

    #[test]
    fn apply_is_idempotent() {
        let (mut s, alice) = speaker_store();
        let r = extractor()
            .extract("My friend Bob likes chess", Some("Alice"))
            .unwrap();
        let first = apply(&mut s, &r, alice, None);
        assert_eq!(first.iter().filter(|m| m.is_applied()).count(), 3);
        let second = apply(&mut s, &r, alice, None);
        assert!(second.is_empty());
        assert_eq!(s.edges().len(), 1);
        assert_eq!(s.persons().len(), 2);
    }

    #[test]
    fn apply_rejects_self_edge() {
        let (mut s, alice) = speaker_store();
        let r = extractor().extract("My friend is Alice", Some("Alice")).unwrap();
        let log = apply(&mut s, &r, alice, None);
        assert!(log.iter().any(|m| matches!(m, MutationRecord::Rejected { .. })));
        assert!(s.edges().is_empty());
    }

    #[test]
    fn third_party_pair_creates_both_nodes() {
        let (mut s, alice) = speaker_store();
        let r = extractor().extract("Ken is Mia's brother", Some("Alice")).unwrap();
        let log = apply(&mut s, &r, alice, None);
        let created = log
            .iter()
            .filter(|m| matches!(m, MutationRecord::NodeCreated { .. }))
            .count();
        assert_eq!(created, 2);
        assert_eq!(s.edges().len(), 1);
        assert_eq!(s.persons().len(), 3);
    }

    #[test]
    fn custom_rule_table_loads() {
        let json = r#"{
            "relation_words": "rival",
            "rules": [{
                "name": "rivalry",
                "pattern": "^(?P<object>@NAME@) is my (?P<relation>@REL@)$",
                "relationship": {"subject": "speaker", "object": "$object", "label": "$relation"}
            }]
        }"#;
        let e = RuleExtractor::from_json(json).unwrap();
        let r = e.extract("Kasparov is my rival", Some("Deep")).unwrap();
        assert_eq!(r.relation_label.as_deref(), Some("RIVAL"));
        // The bundled "I like" rule is absent from this custom table.
        let r = e.extract("I like chess", None).unwrap();
        assert!(r.is_empty());
    }
}
