//! Append-only per-person message chains.
//!
//! Each person owns a doubly linked chain of exchanges ordered by a
//! store-wide logical timestamp. The newest node is the person's
//! `chain_head`. Raw chain surgery lives here; the engine layer pairs
//! appends with vector-index inserts.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CoreError, Result};
use crate::graph::{MessageRecord, WorldStore};
use crate::types::{MessageId, PersonId};

impl WorldStore {
    /// Link a new exchange at the head of the person's chain.
    pub fn append_exchange(
        &mut self,
        person: PersonId,
        user_text: &str,
        reply_text: &str,
    ) -> Result<MessageId> {
        if user_text.trim().is_empty() || reply_text.trim().is_empty() {
            return Err(CoreError::validation("message texts must be non-empty"));
        }
        let live = self.resolve(person);
        let id = MessageId(self.messages.len() as u64);
        let timestamp = self.next_timestamp;
        self.next_timestamp += 1;
        let prev = self.persons[live.index()].chain_head;
        let wall_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        self.messages.push(MessageRecord {
            message_id: id,
            face_id: self.persons[live.index()].face_id.clone(),
            user_text: user_text.to_string(),
            reply_text: reply_text.to_string(),
            timestamp,
            wall_ms,
            prev,
            next: None,
        });
        if let Some(prev_id) = prev {
            self.messages[prev_id.index()].next = Some(id);
        }
        let p = &mut self.persons[live.index()];
        p.chain_head = Some(id);
        p.chain_len += 1;
        Ok(id)
    }

    pub fn message(&self, id: MessageId) -> Option<&MessageRecord> {
        self.messages.get(id.index())
    }

    pub fn messages(&self) -> &[MessageRecord] {
        &self.messages
    }

    /// The `n` most recent messages, oldest first.
    pub fn last_n(&self, person: PersonId, n: usize) -> Vec<MessageId> {
        let mut out = Vec::new();
        let mut cur = self.person(person).chain_head;
        while let Some(id) = cur {
            if out.len() == n {
                break;
            }
            out.push(id);
            cur = self.messages[id.index()].prev;
        }
        out.reverse();
        out
    }

    /// Adjacent chain nodes; absent at either end.
    pub fn neighbors(&self, id: MessageId) -> Result<(Option<MessageId>, Option<MessageId>)> {
        let record = self
            .messages
            .get(id.index())
            .ok_or(CoreError::UnknownMessageId(id))?;
        Ok((record.prev, record.next))
    }

    pub fn history_length(&self, person: PersonId) -> usize {
        self.person(person).chain_len
    }

    /// Full chain oldest-first.
    pub fn chain_ids(&self, person: PersonId) -> Vec<MessageId> {
        self.last_n(person, usize::MAX)
    }
}
