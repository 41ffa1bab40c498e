//! In-process simulated network: per-channel FIFO queues with exactly-once
//! delivery and a complete ordered transcript of every message.

use crate::protocol::wire::{ActorId, Message, MessageTag};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// One recorded message. The timestamp is the sequence number itself:
/// delivery is deterministic, so logical time is all the audit needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub from: ActorId,
    pub to: ActorId,
    pub tag: MessageTag,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    seq: u64,
    from: String,
    to: String,
    r#type: &'a str,
    payload_hex: String,
}

impl Transcript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The message-type sequence, used for determinism checks.
    pub fn tag_sequence(&self) -> Vec<MessageTag> {
        self.entries.iter().map(|e| e.tag).collect()
    }

    /// Line-delimited export: one JSON record per message.
    pub fn export_lines(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let record = ExportRecord {
                seq: entry.seq,
                from: entry.from.to_string(),
                to: entry.to.to_string(),
                r#type: entry.tag.name(),
                payload_hex: hex::encode(&entry.payload),
            };
            out.push_str(&serde_json::to_string(&record).expect("export record serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Default)]
pub struct SimNetwork {
    transcript: Transcript,
    queues: BTreeMap<(ActorId, ActorId), VecDeque<(u64, Message)>>,
    delivered: BTreeSet<u64>,
    next_seq: u64,
}

impl SimNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record and enqueue a message. Returns its sequence number.
    pub fn send(&mut self, from: ActorId, to: ActorId, msg: &Message) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.transcript.entries.push(TranscriptEntry {
            seq,
            from,
            to,
            tag: msg.tag(),
            payload: msg.to_bytes(),
        });
        self.queues
            .entry((from, to))
            .or_default()
            .push_back((seq, msg.clone()));
        seq
    }

    /// Deliver the oldest undelivered message on a channel, exactly once and
    /// in FIFO order.
    pub fn recv(&mut self, from: ActorId, to: ActorId) -> Message {
        let queue = self
            .queues
            .get_mut(&(from, to))
            .unwrap_or_else(|| panic!("no messages queued from {from} to {to}"));
        let (seq, msg) = queue.pop_front().expect("channel queue empty");
        assert!(self.delivered.insert(seq), "message {seq} delivered twice");
        msg
    }

    /// Number of sent but undelivered messages.
    pub fn undelivered(&self) -> usize {
        self.queues.values().map(|q| q.len()).sum()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.next_seq.checked_sub(1)
    }
}
