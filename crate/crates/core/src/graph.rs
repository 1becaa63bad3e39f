//! The social world model: person nodes, relationship edges, attributes,
//! fuzzy name resolution, and node merging.
//!
//! All mutation goes through a single `WorldStore` value; the engine wraps
//! it in the single-writer lock described in the concurrency contract.
//! Merged nodes are never removed: they become tombstones that forward to
//! the surviving node, so stale `PersonId`s observed before a merge keep
//! working afterwards.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fuzzy::name_distance;
use crate::types::{FaceId, MessageId, PersonId};

/// One human known to the system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PersonRecord {
    pub id: PersonId,
    /// Identity key the node was created under.
    pub face_id: FaceId,
    /// Additional face ids absorbed through merges.
    pub face_aliases: Vec<FaceId>,
    pub name: Option<String>,
    /// Category (lowercased) to values in insertion order.
    pub attributes: BTreeMap<String, Vec<String>>,
    /// Most recent message in this person's chain.
    pub chain_head: Option<MessageId>,
    pub chain_len: usize,
    /// Creation sequence number; doubles as tie-breaker for name matches.
    pub created_at: u64,
    /// Set once this node has been merged into another.
    pub merged_into: Option<PersonId>,
}

impl PersonRecord {
    pub fn is_live(&self) -> bool {
        self.merged_into.is_none()
    }

    /// Primary face id plus aliases.
    pub fn all_face_ids(&self) -> impl Iterator<Item = &FaceId> {
        std::iter::once(&self.face_id).chain(self.face_aliases.iter())
    }

    /// True when any of the node's identities came from the vision stage.
    pub fn has_vision_identity(&self) -> bool {
        self.all_face_ids().any(|f| f.is_vision_derived())
    }
}

/// Directed, labeled social link between two live persons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipEdge {
    pub from: PersonId,
    pub to: PersonId,
    /// Uppercase-normalized free-form relation label.
    pub label: String,
    /// Exchange that produced the edge, when known.
    pub source_utterance_id: Option<MessageId>,
}

/// One conversational exchange in a person's chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageRecord {
    pub message_id: MessageId,
    /// Owner's primary face id at append time. After a merge this may be an
    /// alias of the surviving node.
    pub face_id: FaceId,
    pub user_text: String,
    pub reply_text: String,
    /// Logical sequence number, strictly monotone store-wide.
    pub timestamp: u64,
    /// Wall-clock milliseconds, metadata only.
    pub wall_ms: u64,
    pub prev: Option<MessageId>,
    pub next: Option<MessageId>,
}

/// In-process property graph behind the engine.
#[derive(Debug, Clone)]
pub struct WorldStore {
    pub(crate) persons: Vec<PersonRecord>,
    pub(crate) face_index: HashMap<FaceId, PersonId>,
    pub(crate) edges: Vec<RelationshipEdge>,
    edge_keys: HashSet<(PersonId, PersonId, String)>,
    pub(crate) messages: Vec<MessageRecord>,
    pub(crate) next_timestamp: u64,
    pub(crate) next_speech_serial: u64,
    pub(crate) next_vision_serial: u64,
    pub(crate) name_distance_threshold: usize,
}

impl Default for WorldStore {
    fn default() -> Self {
        WorldStore::new(2)
    }
}

impl WorldStore {
    pub fn new(name_distance_threshold: usize) -> Self {
        WorldStore {
            persons: Vec::new(),
            face_index: HashMap::new(),
            edges: Vec::new(),
            edge_keys: HashSet::new(),
            messages: Vec::new(),
            next_timestamp: 1,
            next_speech_serial: 1,
            next_vision_serial: 1,
            name_distance_threshold,
        }
    }

    /// Follow merge forwarding to the live node.
    pub fn resolve(&self, id: PersonId) -> PersonId {
        let mut cur = id;
        while let Some(next) = self.persons[cur.index()].merged_into {
            cur = next;
        }
        cur
    }

    pub fn person(&self, id: PersonId) -> &PersonRecord {
        &self.persons[self.resolve(id).index()]
    }

    fn person_mut(&mut self, id: PersonId) -> &mut PersonRecord {
        let live = self.resolve(id);
        &mut self.persons[live.index()]
    }

    pub fn persons(&self) -> &[PersonRecord] {
        &self.persons
    }

    pub fn live_persons(&self) -> impl Iterator<Item = &PersonRecord> {
        self.persons.iter().filter(|p| p.is_live())
    }

    pub fn edges(&self) -> &[RelationshipEdge] {
        &self.edges
    }

    /// Tombstoned nodes with the live node they forward to.
    pub fn tombstones(&self) -> impl Iterator<Item = (&PersonRecord, PersonId)> {
        self.persons
            .iter()
            .filter_map(|p| p.merged_into.map(|_| (p, self.resolve(p.id))))
    }

    /// Face ids that now belong to a node other than the one they created.
    pub fn alias_table(&self) -> Vec<(FaceId, PersonId)> {
        let mut out = Vec::new();
        for p in self.live_persons() {
            for alias in &p.face_aliases {
                out.push((alias.clone(), p.id));
            }
        }
        out.sort();
        out
    }

    /// Return the live node owning `face_id`, creating an empty node when
    /// none exists yet.
    pub fn upsert_person(&mut self, face_id: &FaceId) -> PersonId {
        assert!(!face_id.as_str().is_empty(), "face_id must be non-empty");
        if let Some(&id) = self.face_index.get(face_id) {
            return self.resolve(id);
        }
        let id = PersonId(self.persons.len() as u64);
        self.persons.push(PersonRecord {
            id,
            face_id: face_id.clone(),
            face_aliases: Vec::new(),
            name: None,
            attributes: BTreeMap::new(),
            chain_head: None,
            chain_len: 0,
            created_at: id.0,
            merged_into: None,
        });
        self.face_index.insert(face_id.clone(), id);
        id
    }

    /// Look up a person without creating one.
    pub fn person_by_face(&self, face_id: &FaceId) -> Option<PersonId> {
        self.face_index.get(face_id).map(|&id| self.resolve(id))
    }

    /// Mint a person for a name that only exists in speech so far.
    pub fn create_speech_person(&mut self, name: &str) -> Result<PersonId> {
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(CoreError::validation("person name must be non-empty"));
        }
        let face = FaceId::new(format!("{}{}", FaceId::SPEECH_PREFIX, self.next_speech_serial));
        self.next_speech_serial += 1;
        let id = self.upsert_person(&face);
        self.set_name(id, trimmed)?;
        Ok(id)
    }

    /// Mint a fresh vision-namespace face id (identity resolution fallback).
    pub fn mint_vision_face(&mut self) -> FaceId {
        let face = FaceId::new(format!("vis-{}", self.next_vision_serial));
        self.next_vision_serial += 1;
        face
    }

    /// Store a (trimmed) name verbatim; overwriting is allowed.
    pub fn set_name(&mut self, person: PersonId, name: &str) -> Result<()> {
        let trimmed = name.trim();
        if trimmed.is_empty() {
            return Err(CoreError::validation("name must be non-empty"));
        }
        self.person_mut(person).name = Some(trimmed.to_string());
        Ok(())
    }

    /// Append `value` under the lowercased `category`, skipping exact
    /// (case-sensitive) duplicates.
    pub fn add_attribute(&mut self, person: PersonId, category: &str, value: &str) -> Result<bool> {
        let category = category.trim().to_lowercase();
        let value = value.trim();
        if category.is_empty() || value.is_empty() {
            return Err(CoreError::validation("attribute category and value must be non-empty"));
        }
        let values = self.person_mut(person).attributes.entry(category).or_default();
        if values.iter().any(|v| v == value) {
            return Ok(false);
        }
        values.push(value.to_string());
        Ok(true)
    }

    /// Live named node minimizing case-insensitive edit distance, if any
    /// lands within the threshold. Ties go to the earliest-created node.
    pub fn find_closest_name(&self, name: &str) -> Option<(PersonId, usize)> {
        let query = name.trim();
        if query.is_empty() {
            return None;
        }
        let mut best: Option<(PersonId, usize)> = None;
        for p in self.live_persons() {
            let Some(existing) = &p.name else { continue };
            let d = name_distance(query, existing);
            match best {
                Some((_, bd)) if bd <= d => {}
                _ => best = Some((p.id, d)),
            }
        }
        best.filter(|&(_, d)| d <= self.name_distance_threshold)
    }

    /// Resolve a spoken name to an existing node or create a speech-derived
    /// one carrying that name. Returns `(person, created)`.
    pub fn resolve_or_create_named(&mut self, name: &str) -> Result<(PersonId, bool)> {
        if let Some((id, _)) = self.find_closest_name(name) {
            return Ok((id, false));
        }
        Ok((self.create_speech_person(name)?, true))
    }

    /// Idempotently store a directed edge between two live persons.
    /// Returns `(edge, inserted)`.
    pub fn add_relationship_between(
        &mut self,
        from: PersonId,
        to: PersonId,
        label: &str,
        source: Option<MessageId>,
    ) -> Result<(RelationshipEdge, bool)> {
        let label = label.trim().to_uppercase();
        if label.is_empty() {
            return Err(CoreError::validation("relation label must be non-empty"));
        }
        let from = self.resolve(from);
        let to = self.resolve(to);
        if from == to {
            return Err(CoreError::SelfEdge);
        }
        let key = (from, to, label.clone());
        if self.edge_keys.contains(&key) {
            let edge = self
                .edges
                .iter()
                .find(|e| e.from == from && e.to == to && e.label == label)
                .expect("edge key tracked without edge")
                .clone();
            return Ok((edge, false));
        }
        let edge = RelationshipEdge {
            from,
            to,
            label,
            source_utterance_id: source,
        };
        self.edge_keys.insert(key);
        self.edges.push(edge.clone());
        Ok((edge, true))
    }

    /// Name-addressed edge assertion: both names are fuzzily resolved,
    /// unknown names get fresh speech-derived nodes.
    pub fn add_relationship(
        &mut self,
        subject_name: &str,
        object_name: &str,
        label: &str,
        _speaker: PersonId,
        source: Option<MessageId>,
    ) -> Result<RelationshipEdge> {
        let (subject, _) = self.resolve_or_create_named(subject_name)?;
        let (object, _) = self.resolve_or_create_named(object_name)?;
        let (edge, _) = self.add_relationship_between(subject, object, label, source)?;
        Ok(edge)
    }

    /// Consolidate `duplicate` into `survivor`: attribute union, edge
    /// rewiring with dedup, chain interleave by timestamp, alias transfer,
    /// tombstone with forwarding.
    pub fn merge_persons(&mut self, survivor: PersonId, duplicate: PersonId) -> Result<PersonId> {
        if !self.persons[survivor.index()].is_live() {
            return Err(CoreError::Tombstone(survivor));
        }
        if !self.persons[duplicate.index()].is_live() {
            return Err(CoreError::Tombstone(duplicate));
        }
        if survivor == duplicate {
            return Err(CoreError::validation("cannot merge a person into itself"));
        }

        // Attribute union, survivor's values first.
        let dup_attrs = std::mem::take(&mut self.persons[duplicate.index()].attributes);
        for (category, values) in dup_attrs {
            let target = self.persons[survivor.index()]
                .attributes
                .entry(category)
                .or_default();
            for v in values {
                if !target.iter().any(|existing| *existing == v) {
                    target.push(v);
                }
            }
        }
        if self.persons[survivor.index()].name.is_none() {
            let dup_name = self.persons[duplicate.index()].name.take();
            self.persons[survivor.index()].name = dup_name;
        }

        // Rewire edges; merge-induced self-edges and duplicates drop out.
        let mut kept = Vec::with_capacity(self.edges.len());
        let mut keys = HashSet::new();
        for mut edge in std::mem::take(&mut self.edges) {
            if edge.from == duplicate {
                edge.from = survivor;
            }
            if edge.to == duplicate {
                edge.to = survivor;
            }
            if edge.from == edge.to {
                continue;
            }
            if keys.insert((edge.from, edge.to, edge.label.clone())) {
                kept.push(edge);
            }
        }
        self.edges = kept;
        self.edge_keys = keys;

        // Interleave both chains by timestamp (globally unique, so stable).
        let merged_chain = {
            let a = self.chain_ids(survivor);
            let b = self.chain_ids(duplicate);
            let mut all: Vec<MessageId> = a.into_iter().chain(b).collect();
            all.sort_by_key(|id| self.messages[id.index()].timestamp);
            all
        };
        for pair in merged_chain.windows(2) {
            self.messages[pair[0].index()].next = Some(pair[1]);
            self.messages[pair[1].index()].prev = Some(pair[0]);
        }
        if let Some(&first) = merged_chain.first() {
            self.messages[first.index()].prev = None;
        }
        if let Some(&last) = merged_chain.last() {
            self.messages[last.index()].next = None;
        }

        let dup_faces: Vec<FaceId> = {
            let dup = &mut self.persons[duplicate.index()];
            dup.merged_into = Some(survivor);
            dup.chain_head = None;
            dup.chain_len = 0;
            std::iter::once(dup.face_id.clone())
                .chain(std::mem::take(&mut dup.face_aliases))
                .collect()
        };
        {
            let sv = &mut self.persons[survivor.index()];
            sv.chain_head = merged_chain.last().copied();
            sv.chain_len = merged_chain.len();
            sv.face_aliases.extend(dup_faces.iter().cloned());
        }
        for face in dup_faces {
            self.face_index.insert(face, survivor);
        }
        Ok(survivor)
    }

    /// Merge-direction rule: a vision-identified node survives a
    /// speech-only one; otherwise the older node survives.
    pub fn merge_preference(&self, a: PersonId, b: PersonId) -> (PersonId, PersonId) {
        let pa = &self.persons[self.resolve(a).index()];
        let pb = &self.persons[self.resolve(b).index()];
        match (pa.has_vision_identity(), pb.has_vision_identity()) {
            (true, false) => (pa.id, pb.id),
            (false, true) => (pb.id, pa.id),
            _ => {
                if pa.created_at <= pb.created_at {
                    (pa.id, pb.id)
                } else {
                    (pb.id, pa.id)
                }
            }
        }
    }

    /// Deterministic prompt-side rendering of a person: name line, then
    /// categories in sorted order with values in insertion order.
    pub fn person_summary(&self, person: PersonId) -> String {
        let p = self.person(person);
        let mut out = String::new();
        if let Some(name) = &p.name {
            let _ = write!(out, "Name: {name}");
        }
        for (category, values) in &p.attributes {
            if values.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = write!(out, "{category}: {}", values.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> WorldStore {
        WorldStore::default()
    }

    #[test]
    fn upsert_creates_empty_node() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        assert!(s.person(p).name.is_none());
        assert!(s.person(p).attributes.is_empty());
    }

    #[test]
    fn upsert_is_idempotent() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        let b = s.upsert_person(&FaceId::from("f1"));
        assert_eq!(a, b);
        assert_eq!(s.persons().len(), 1);
    }

    #[test]
    fn upsert_follows_merge_forwarding() {
        let mut s = store();
        let f1 = s.upsert_person(&FaceId::from("f1"));
        let f2 = s.upsert_person(&FaceId::from("f2"));
        s.merge_persons(f2, f1).unwrap();
        assert_eq!(s.upsert_person(&FaceId::from("f1")), f2);
    }

    #[test]
    fn set_name_trims_and_overwrites() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        s.set_name(p, "Alice").unwrap();
        assert_eq!(s.person(p).name.as_deref(), Some("Alice"));
        s.set_name(p, "  Bob ").unwrap();
        assert_eq!(s.person(p).name.as_deref(), Some("Bob"));
    }

    #[test]
    fn set_name_rejects_empty() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        assert!(matches!(s.set_name(p, "  "), Err(CoreError::Validation(_))));
    }

    #[test]
    fn attributes_dedup_and_categorize() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        assert!(s.add_attribute(p, "likes", "chess").unwrap());
        assert!(!s.add_attribute(p, "likes", "chess").unwrap());
        s.add_attribute(p, "Occupation", "nurse").unwrap();
        let person = s.person(p);
        assert_eq!(person.attributes["likes"], vec!["chess"]);
        assert_eq!(person.attributes["occupation"], vec!["nurse"]);
        assert_eq!(person.attributes.len(), 2);
    }

    #[test]
    fn attribute_rejects_empty_parts() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        assert!(s.add_attribute(p, "", "x").is_err());
        assert!(s.add_attribute(p, "likes", " ").is_err());
    }

    #[test]
    fn closest_name_within_threshold() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        s.set_name(p, "John").unwrap();
        let (hit, d) = s.find_closest_name("Jon").unwrap();
        assert_eq!(hit, p);
        assert_eq!(d, 1);
        assert_eq!(s.find_closest_name("John").unwrap().1, 0);
        assert!(s.find_closest_name("Xanthippe").is_none());
    }

    #[test]
    fn closest_name_ties_break_by_creation() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        s.set_name(a, "Mia").unwrap();
        let b = s.upsert_person(&FaceId::from("f2"));
        s.set_name(b, "Mio").unwrap();
        // "Mii" is distance 1 from both.
        assert_eq!(s.find_closest_name("Mii").unwrap().0, a);
    }

    #[test]
    fn relationship_creates_unknown_parties() {
        let mut s = store();
        let alice = s.upsert_person(&FaceId::from("f1"));
        s.set_name(alice, "Alice").unwrap();
        let edge = s
            .add_relationship("Alice", "Bob", "friend", alice, None)
            .unwrap();
        assert_eq!(edge.from, alice);
        assert_eq!(edge.label, "FRIEND");
        assert_eq!(s.persons().len(), 2);
        let bob = s.person(edge.to);
        assert_eq!(bob.name.as_deref(), Some("Bob"));
        assert!(bob.face_id.as_str().starts_with(FaceId::SPEECH_PREFIX));
    }

    #[test]
    fn relationship_is_idempotent() {
        let mut s = store();
        let alice = s.upsert_person(&FaceId::from("f1"));
        s.set_name(alice, "Alice").unwrap();
        s.add_relationship("Alice", "Bob", "FRIEND", alice, None).unwrap();
        s.add_relationship("Alice", "Bob", "FRIEND", alice, None).unwrap();
        assert_eq!(s.edges().len(), 1);
        assert_eq!(s.persons().len(), 2);
    }

    #[test]
    fn relationship_fuzzy_resolves_existing() {
        let mut s = store();
        let alice = s.upsert_person(&FaceId::from("f1"));
        s.set_name(alice, "Alice").unwrap();
        let bob = s.upsert_person(&FaceId::from("f2"));
        s.set_name(bob, "Bob").unwrap();
        let edge = s
            .add_relationship("Alice", "Bobb", "FRIEND", alice, None)
            .unwrap();
        assert_eq!(edge.to, bob);
        assert_eq!(s.persons().len(), 2);
    }

    #[test]
    fn self_edge_rejected() {
        let mut s = store();
        let alice = s.upsert_person(&FaceId::from("f1"));
        s.set_name(alice, "Alice").unwrap();
        let err = s.add_relationship("Alice", "Alice", "FRIEND", alice, None);
        assert!(matches!(err, Err(CoreError::SelfEdge)));
    }

    #[test]
    fn merge_unions_attributes_and_aliases() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        let b = s.upsert_person(&FaceId::from("f2"));
        s.add_attribute(a, "likes", "chess").unwrap();
        s.add_attribute(b, "likes", "chess").unwrap();
        s.add_attribute(b, "likes", "tea").unwrap();
        s.merge_persons(a, b).unwrap();
        let p = s.person(a);
        assert_eq!(p.attributes["likes"], vec!["chess", "tea"]);
        assert_eq!(p.face_aliases, vec![FaceId::from("f2")]);
        assert_eq!(s.resolve(b), a);
    }

    #[test]
    fn merge_dedups_rewired_edges() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        let b = s.upsert_person(&FaceId::from("f2"));
        let other = s.upsert_person(&FaceId::from("f3"));
        s.add_relationship_between(a, other, "FRIEND", None).unwrap();
        s.add_relationship_between(b, other, "FRIEND", None).unwrap();
        s.merge_persons(a, b).unwrap();
        assert_eq!(s.edges().len(), 1);
        assert_eq!(s.edges()[0].from, a);
    }

    #[test]
    fn merge_rejects_tombstones() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        let b = s.upsert_person(&FaceId::from("f2"));
        let c = s.upsert_person(&FaceId::from("f3"));
        s.merge_persons(a, b).unwrap();
        assert!(matches!(s.merge_persons(b, c), Err(CoreError::Tombstone(_))));
        assert!(matches!(s.merge_persons(c, b), Err(CoreError::Tombstone(_))));
    }

    #[test]
    fn merge_preference_vision_over_speech() {
        let mut s = store();
        let speech = s.create_speech_person("Bob").unwrap();
        let vision = s.upsert_person(&FaceId::from("vis-7"));
        let (sv, dup) = s.merge_preference(speech, vision);
        assert_eq!(sv, vision);
        assert_eq!(dup, speech);
    }

    #[test]
    fn merge_preference_older_wins_same_origin() {
        let mut s = store();
        let a = s.upsert_person(&FaceId::from("f1"));
        let b = s.upsert_person(&FaceId::from("f2"));
        assert_eq!(s.merge_preference(b, a), (a, b));
    }

    #[test]
    fn summary_rendering() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        s.set_name(p, "Alice").unwrap();
        assert_eq!(s.person_summary(p), "Name: Alice");
        s.add_attribute(p, "likes", "chess").unwrap();
        s.add_attribute(p, "interests", "robots").unwrap();
        let rendered = s.person_summary(p);
        assert_eq!(rendered, "Name: Alice\ninterests: robots\nlikes: chess");
        assert_eq!(rendered, s.person_summary(p));
    }

    #[test]
    fn summary_of_empty_person() {
        let mut s = store();
        let p = s.upsert_person(&FaceId::from("f1"));
        assert_eq!(s.person_summary(p), "");
    }
}
