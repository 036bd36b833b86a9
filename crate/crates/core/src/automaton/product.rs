use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::logic::Predicate;

use super::fsa::{Edge, Fsa, MAX_ALPHABET};
use super::guard::Guard;

/// Product automaton for the conjunction of two tasks.
///
/// Every product state remembers its component pair. Pairs in which either
/// component is trapped collapse into a single trap state; `pairs` records
/// the first such pair reached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductFsa {
    fsa: Fsa,
    pairs: Vec<(usize, usize)>,
    #[serde(skip)]
    left: Fsa,
    #[serde(skip)]
    right: Fsa,
}

impl ProductFsa {
    pub fn fsa(&self) -> &Fsa {
        &self.fsa
    }

    pub fn left(&self) -> &Fsa {
        &self.left
    }

    pub fn right(&self) -> &Fsa {
        &self.right
    }

    pub fn pair(&self, q: usize) -> (usize, usize) {
        self.pairs[q]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn index_of(&self, q1: usize, q2: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (q1, q2))
    }

    pub fn num_states(&self) -> usize {
        self.fsa.num_states()
    }
}

/// Reachable product of two automata with pairwise-conjoined guards.
pub fn product(left: &Fsa, right: &Fsa) -> ProductFsa {
    let mut alphabet: Vec<Predicate> = left.alphabet().to_vec();
    let right_map: Vec<usize> = right
        .alphabet()
        .iter()
        .map(|p| match alphabet.iter().position(|a| a == p) {
            Some(i) => i,
            None => {
                alphabet.push(p.clone());
                alphabet.len() - 1
            }
        })
        .collect();
    let width = alphabet.len();

    let dead = |(a, b): (usize, usize)| left.is_trap(a) || right.is_trap(b);
    let start = (left.initial(), right.initial());
    let mut pairs = Vec::new();
    let mut number: HashMap<(usize, usize), usize> = HashMap::new();
    let mut trap: Option<usize> = None;
    let mut slot = |pair: (usize, usize), pairs: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
        if dead(pair) {
            if let Some(t) = trap {
                return t;
            }
        } else if let Some(&k) = number.get(&pair) {
            return k;
        }
        let k = pairs.len();
        pairs.push(pair);
        if dead(pair) {
            trap = Some(k);
        } else {
            number.insert(pair, k);
        }
        queue.push_back(k);
        k
    };
    let mut queue = VecDeque::new();
    slot(start, &mut pairs, &mut queue);

    let mut edges: Vec<Edge> = Vec::new();
    while let Some(k) = queue.pop_front() {
        let (q1, q2) = pairs[k];
        if dead((q1, q2)) {
            edges.push(Edge {
                from: k,
                to: k,
                guard: Guard::always(),
            });
            continue;
        }
        let mut grouped: Vec<(usize, Guard)> = Vec::new();
        for e1 in left.out_edges(q1) {
            for e2 in right.out_edges(q2) {
                let g = e1.guard.and(&e2.guard.remap(&right_map));
                if g.is_never() {
                    continue;
                }
                let to = slot((e1.to, e2.to), &mut pairs, &mut queue);
                match grouped.iter_mut().find(|(t, _)| *t == to) {
                    Some((_, acc)) => *acc = acc.or(&g),
                    None => grouped.push((to, g)),
                }
            }
        }
        for (to, guard) in grouped {
            let guard = if width <= MAX_ALPHABET { guard.simplified(width) } else { guard };
            edges.push(Edge { from: k, to, guard });
        }
    }
    edges.sort_by_key(|e| e.from);

    let labels = pairs
        .iter()
        .map(|&(a, b)| {
            if dead((a, b)) {
                "false".to_string()
            } else {
                format!("({}) & ({})", left.label(a), right.label(b))
            }
        })
        .collect();
    let accepting = pairs
        .iter()
        .map(|&(a, b)| left.is_accepting(a) && right.is_accepting(b))
        .collect();
    let fsa = Fsa::from_parts(alphabet, labels, 0, accepting, trap, edges);
    ProductFsa {
        fsa,
        pairs,
        left: left.clone(),
        right: right.clone(),
    }
}
