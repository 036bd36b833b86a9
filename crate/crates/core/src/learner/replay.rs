use serde::{Deserialize, Serialize};

/// One raw environment transition. Automaton states are not stored; they are
/// recomputed against whatever automaton the transition is replayed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub s: usize,
    pub action: usize,
    pub s_next: usize,
    pub episode: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplayBuffer {
    pub env_hash: String,
    pub records: Vec<TransitionRecord>,
}

impl ReplayBuffer {
    pub fn new(env_hash: impl Into<String>) -> Self {
        ReplayBuffer {
            env_hash: env_hash.into(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, r: TransitionRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenation of buffers recorded on the same environment; `None` if
    /// the environment hashes disagree.
    pub fn merged<'a>(buffers: impl IntoIterator<Item = &'a ReplayBuffer>) -> Option<ReplayBuffer> {
        let mut out: Option<ReplayBuffer> = None;
        for b in buffers {
            match out.as_mut() {
                None => out = Some(b.clone()),
                Some(acc) if acc.env_hash == b.env_hash => acc.records.extend_from_slice(&b.records),
                Some(_) => return None,
            }
        }
        out
    }
}
