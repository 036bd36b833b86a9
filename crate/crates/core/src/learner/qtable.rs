use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::Policy;

use super::LearnError;

pub const LAYOUT: &str = "index = (state * automaton_states + automaton_state) * actions + action";

/// Provenance carried with every table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QMeta {
    /// Formula text the automaton was compiled from.
    pub formula: String,
    /// For composed tables: the two factor formulas, in product order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<(String, String)>,
    pub fsa_fingerprint: String,
    pub env_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QTableRepr {
    states: usize,
    automaton_states: usize,
    actions: usize,
    layout: String,
    meta: QMeta,
    values: Vec<f64>,
}

/// Dense Q(s, q, a).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QTableRepr", try_from = "QTableRepr")]
pub struct QTable {
    states: usize,
    automaton_states: usize,
    actions: usize,
    values: Vec<f64>,
    pub meta: QMeta,
}

impl From<QTable> for QTableRepr {
    fn from(t: QTable) -> Self {
        QTableRepr {
            states: t.states,
            automaton_states: t.automaton_states,
            actions: t.actions,
            layout: LAYOUT.to_string(),
            meta: t.meta,
            values: t.values,
        }
    }
}

impl TryFrom<QTableRepr> for QTable {
    type Error = LearnError;

    fn try_from(r: QTableRepr) -> Result<Self, LearnError> {
        if r.layout != LAYOUT {
            return Err(LearnError::Malformed(format!("unknown layout `{}`", r.layout)));
        }
        if r.values.len() != r.states * r.automaton_states * r.actions {
            return Err(LearnError::Malformed("value count does not match dimensions".into()));
        }
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::Malformed("non-finite entry".into()));
        }
        Ok(QTable {
            states: r.states,
            automaton_states: r.automaton_states,
            actions: r.actions,
            values: r.values,
            meta: r.meta,
        })
    }
}

impl QTable {
    pub fn zeros(states: usize, automaton_states: usize, actions: usize, meta: QMeta) -> Self {
        QTable {
            states,
            automaton_states,
            actions,
            values: vec![0.0; states * automaton_states * actions],
            meta,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn automaton_states(&self) -> usize {
        self.automaton_states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    fn offset(&self, s: usize, q: usize) -> usize {
        debug_assert!(s < self.states && q < self.automaton_states);
        (s * self.automaton_states + q) * self.actions
    }

    pub fn get(&self, s: usize, q: usize, a: usize) -> f64 {
        self.values[self.offset(s, q) + a]
    }

    pub fn set(&mut self, s: usize, q: usize, a: usize, v: f64) {
        let i = self.offset(s, q) + a;
        self.values[i] = v;
    }

    pub fn row(&self, s: usize, q: usize) -> &[f64] {
        let i = self.offset(s, q);
        &self.values[i..i + self.actions]
    }

    pub fn row_mut(&mut self, s: usize, q: usize) -> &mut [f64] {
        let i = self.offset(s, q);
        &mut self.values[i..i + self.actions]
    }

    pub fn max_value(&self, s: usize, q: usize) -> f64 {
        self.row(s, q).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// argmax over actions, lowest index on ties.
    pub fn greedy_action(&self, s: usize, q: usize) -> usize {
        let row = self.row(s, q);
        let mut best = 0;
        for (a, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    /// Greedy action for every MDP state with the automaton frozen at `q`.
    pub fn extract_subpolicy(&self, q: usize) -> Vec<usize> {
        (0..self.states).map(|s| self.greedy_action(s, q)).collect()
    }

    pub fn global_max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy divided by its global maximum.
    pub fn normalized(&self) -> Result<QTable, LearnError> {
        let max = self.global_max();
        // Also rejects NaN.
        if max.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(LearnError::NonPositiveMax(max));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= max);
        Ok(out)
    }

    /// Largest |difference| over the `(s, q)` rows selected by `include`.
    pub fn sup_distance(&self, other: &QTable, include: impl Fn(usize, usize) -> bool) -> f64 {
        assert_eq!(
            (self.states, self.automaton_states, self.actions),
            (other.states, other.automaton_states, other.actions),
            "table dimensions differ"
        );
        let mut worst: f64 = 0.0;
        for s in 0..self.states {
            for q in 0..self.automaton_states {
                if include(s, q) {
                    for (a, b) in self.row(s, q).iter().zip(other.row(s, q)) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        serde_json::from_str(text).map_err(|e| LearnError::Malformed(e.to_string()))
    }
}

/// Greedy policy.
impl Policy for QTable {
    fn action(&self, s: usize, q: usize, _rng: &mut dyn RngCore) -> usize {
        self.greedy_action(s, q)
    }
}
