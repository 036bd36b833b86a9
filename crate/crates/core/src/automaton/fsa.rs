use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::logic::{Formula, LogicError, Predicate, StateSample, Trace};

use super::guard::{Assignment, Guard};
use super::progression::{Progressor, Residual};
use super::AutomatonError;

/// Largest predicate alphabet `translate` will enumerate assignments over.
pub const MAX_ALPHABET: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FsaRepr {
    alphabet: Vec<Predicate>,
    labels: Vec<String>,
    initial: usize,
    accepting: Vec<usize>,
    trap: Option<usize>,
    edges: Vec<Edge>,
}

/// Deterministic, complete automaton with predicate-guarded edges.
///
/// States are numbered breadth-first from the initial state. Accepting
/// states and the trap state only carry self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FsaRepr", try_from = "FsaRepr")]
pub struct Fsa {
    alphabet: Vec<Predicate>,
    labels: Vec<String>,
    initial: usize,
    accepting: Vec<bool>,
    trap: Option<usize>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl From<Fsa> for FsaRepr {
    fn from(f: Fsa) -> Self {
        FsaRepr {
            accepting: f.accepting_states().collect(),
            alphabet: f.alphabet,
            labels: f.labels,
            initial: f.initial,
            trap: f.trap,
            edges: f.edges,
        }
    }
}

impl TryFrom<FsaRepr> for Fsa {
    type Error = AutomatonError;

    fn try_from(r: FsaRepr) -> Result<Self, Self::Error> {
        let n = r.labels.len();
        let bad = |what: &str| AutomatonError::Malformed(what.to_string());
        if r.initial >= n || r.trap.is_some_and(|t| t >= n) {
            return Err(bad("state index out of range"));
        }
        if r.edges.iter().any(|e| e.from >= n || e.to >= n) || r.accepting.iter().any(|&q| q >= n) {
            return Err(bad("edge or accepting index out of range"));
        }
        let mut accepting = vec![false; n];
        r.accepting.iter().for_each(|&q| accepting[q] = true);
        Ok(Fsa::from_parts(r.alphabet, r.labels, r.initial, accepting, r.trap, r.edges))
    }
}

impl Fsa {
    pub(crate) fn from_parts(
        alphabet: Vec<Predicate>,
        labels: Vec<String>,
        initial: usize,
        accepting: Vec<bool>,
        trap: Option<usize>,
        edges: Vec<Edge>,
    ) -> Self {
        let mut out = vec![Vec::new(); labels.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
        }
        Fsa {
            alphabet,
            labels,
            initial,
            accepting,
            trap,
            edges,
            out,
        }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn alphabet(&self) -> &[Predicate] {
        &self.alphabet
    }

    pub fn label(&self, q: usize) -> &str {
        &self.labels[q]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, q: usize) -> impl Iterator<Item = &Edge> {
        self.out[q].iter().map(move |&i| &self.edges[i])
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.accepting.iter().enumerate().filter(|(_, a)| **a).map(|(q, _)| q)
    }

    pub fn trap(&self) -> Option<usize> {
        self.trap
    }

    pub fn is_trap(&self, q: usize) -> bool {
        self.trap == Some(q)
    }

    /// Accepting or trap: no further progress is possible.
    pub fn is_terminal(&self, q: usize) -> bool {
        self.is_accepting(q) || self.is_trap(q)
    }

    /// Strict truth values of the alphabet at `sample`.
    pub fn assignment(&self, sample: &StateSample) -> Result<Assignment, LogicError> {
        self.alphabet.iter().enumerate().try_fold(0, |bits, (i, p)| {
            Ok(if p.holds(sample)? { bits | 1 << i } else { bits })
        })
    }

    /// Successor under a truth assignment.
    ///
    /// # Panics
    /// If no outgoing guard matches, which would violate completeness.
    pub fn step_assignment(&self, q: usize, bits: Assignment) -> usize {
        self.out_edges(q)
            .find(|e| e.guard.matches(bits))
            .map(|e| e.to)
            .unwrap_or_else(|| panic!("automaton incomplete at state {q} for assignment {bits:#b}"))
    }

    pub fn step(&self, q: usize, sample: &StateSample) -> Result<usize, LogicError> {
        Ok(self.step_assignment(q, self.assignment(sample)?))
    }

    /// D^q: disjunction of guards on edges leaving `q` towards states other
    /// than `q` itself and the trap.
    pub fn outgoing_disjunction(&self, q: usize) -> Guard {
        self.out_edges(q)
            .filter(|e| e.to != q && !self.is_trap(e.to))
            .fold(Guard::never(), |acc, e| acc.or(&e.guard))
    }

    /// Runs the trace from the initial state and reports acceptance.
    pub fn accepts(&self, trace: &Trace) -> Result<bool, LogicError> {
        let mut q = self.initial;
        for s in trace.samples() {
            q = self.step(q, s)?;
        }
        Ok(self.is_accepting(q))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("automaton serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Checks that every state's outgoing guards partition the assignment space.
    pub fn check_deterministic_complete(&self) -> Result<(), AutomatonError> {
        let width = self.alphabet.len();
        if width > 20 {
            return Err(AutomatonError::AlphabetOverflow(width));
        }
        for q in 0..self.num_states() {
            for bits in 0..1u64 << width {
                let hits = self.out_edges(q).filter(|e| e.guard.matches(bits)).count();
                if hits != 1 {
                    return Err(AutomatonError::NotDeterministic { state: q, assignment: bits, hits });
                }
            }
        }
        Ok(())
    }
}

/// Compiles a formula into a deterministic automaton by progression.
pub fn translate(formula: &Formula) -> Result<Fsa, AutomatonError> {
    formula.validate()?;
    let alphabet = formula.predicates();
    let width = alphabet.len();
    if width > MAX_ALPHABET {
        return Err(AutomatonError::AlphabetOverflow(width));
    }
    let prog = Progressor::new(&alphabet);

    // Explore residuals; successors of each state in order of first assignment.
    // Only the atoms a residual mentions are enumerated; `succ` minterms are
    // over those atoms, listed in `support[q]`.
    let mut residuals: Vec<Residual> = vec![prog.residual(formula)];
    let mut index: HashMap<Residual, usize> = HashMap::from([(residuals[0].clone(), 0)]);
    let mut succ: Vec<Vec<(usize, Vec<Assignment>)>> = Vec::new();
    let mut support: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < residuals.len() {
        let mask = prog.support(&residuals[i]);
        let atoms: Vec<usize> = (0..width).filter(|b| mask >> b & 1 == 1).collect();
        let mut row: Vec<(usize, Vec<Assignment>)> = Vec::new();
        for local in 0..1u64 << atoms.len() {
            let bits = atoms
                .iter()
                .enumerate()
                .filter(|(j, _)| local >> j & 1 == 1)
                .fold(0, |acc, (_, &a)| acc | 1 << a);
            let next = prog.progress(&residuals[i], bits);
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    residuals.push(next.clone());
                    index.insert(next, residuals.len() - 1);
                    residuals.len() - 1
                }
            };
            match row.iter_mut().find(|(t, _)| *t == j) {
                Some((_, ms)) => ms.push(local),
                None => row.push((j, vec![local])),
            }
        }
        succ.push(row);
        support.push(atoms);
        i += 1;
    }

    // States that cannot reach acceptance collapse into one trap.
    let n = residuals.len();
    let mut live = vec![false; n];
    for (q, r) in residuals.iter().enumerate() {
        live[q] = r.is_top();
    }
    loop {
        let mut changed = false;
        for q in 0..n {
            if !live[q] && succ[q].iter().any(|(t, _)| live[*t]) {
                live[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    const TRAP: usize = usize::MAX;
    let class = |q: usize| if live[q] { q } else { TRAP };

    // Breadth-first renumbering over the collapsed graph.
    let mut order: Vec<usize> = Vec::new();
    let mut number: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([class(0)]);
    number.insert(class(0), 0);
    order.push(class(0));
    while let Some(c) = queue.pop_front() {
        if c == TRAP {
            continue;
        }
        for (t, _) in &succ[c] {
            let d = class(*t);
            if let std::collections::btree_map::Entry::Vacant(slot) = number.entry(d) {
                slot.insert(order.len());
                order.push(d);
                queue.push_back(d);
            }
        }
    }

    let mut labels = Vec::with_capacity(order.len());
    let mut accepting = Vec::with_capacity(order.len());
    let mut edges = Vec::new();
    let mut trap = None;
    for (k, &c) in order.iter().enumerate() {
        if c == TRAP {
            labels.push("false".to_string());
            accepting.push(false);
            trap = Some(k);
            edges.push(Edge {
                from: k,
                to: k,
                guard: Guard::always(),
            });
            continue;
        }
        labels.push(prog.render(&residuals[c]));
        accepting.push(residuals[c].is_top());
        let mut grouped: Vec<(usize, Vec<Assignment>)> = Vec::new();
        for (t, ms) in &succ[c] {
            let target = number[&class(*t)];
            match grouped.iter_mut().find(|(g, _)| *g == target) {
                Some((_, acc)) => acc.extend(ms),
                None => grouped.push((target, ms.clone())),
            }
        }
        for (target, ms) in grouped {
            edges.push(Edge {
                from: k,
                to: target,
                guard: Guard::from_minterms(support[c].len(), &ms).remap(&support[c]),
            });
        }
    }
    Ok(Fsa::from_parts(alphabet, labels, 0, accepting, trap, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula_with, Macros};
    use std::collections::BTreeSet;

    fn xy() -> BTreeSet<String> {
        ["x", "y"].iter().map(|s| s.to_string()).collect()
    }

    fn grid(text: &str) -> Formula {
        let m = Macros::parse(
            [
                ("a", "x > 1 & x < 3 & y > 1 & y < 3"),
                ("b", "x > 4 & x < 6 & y > 4 & y < 6"),
                ("c", "x > 1 & x < 3 & y > 6 & y < 8"),
            ],
            &xy(),
        )
        .unwrap();
        parse_formula_with(text, &xy(), &m).unwrap()
    }

    fn pt(x: f64, y: f64) -> StateSample {
        StateSample::new().with("x", x).with("y", y)
    }

    #[test]
    fn eventually_a_has_two_states_three_edges() {
        let fsa = translate(&grid("F a")).unwrap();
        assert_eq!(fsa.num_states(), 2);
        assert_eq!(fsa.edges().len(), 3);
        assert_eq!(fsa.trap(), None);
        assert!(!fsa.is_accepting(0));
        assert!(fsa.is_accepting(1));
        assert_eq!(fsa.label(1), "true");
        fsa.check_deterministic_complete().unwrap();
    }

    #[test]
    fn step_examples() {
        let fsa = translate(&grid("F a")).unwrap();
        assert_eq!(fsa.step(0, &pt(2.0, 2.0)).unwrap(), 1);
        assert_eq!(fsa.step(0, &pt(0.0, 0.0)).unwrap(), 0);
        assert_eq!(fsa.step(1, &pt(7.0, 3.0)).unwrap(), 1);
    }

    #[test]
    fn true_is_single_accepting_state() {
        let fsa = translate(&Formula::True).unwrap();
        assert_eq!(fsa.num_states(), 1);
        assert!(fsa.is_accepting(0));
        assert_eq!(fsa.edges().len(), 1);
        assert!(fsa.outgoing_disjunction(0).is_never());
    }

    #[test]
    fn two_goals_four_states_no_trap() {
        let fsa = translate(&grid("F a & F b")).unwrap();
        assert_eq!(fsa.num_states(), 4);
        assert_eq!(fsa.accepting_states().count(), 1);
        assert_eq!(fsa.trap(), None);
        fsa.check_deterministic_complete().unwrap();
    }

    #[test]
    fn outgoing_disjunction_examples() {
        let fa = translate(&grid("F a")).unwrap();
        let d = fa.outgoing_disjunction(0);
        assert!(d.robustness(&pt(2.0, 2.0), fa.alphabet()).unwrap() > 0.0);
        assert!(fa.outgoing_disjunction(1).is_never());

        let fab = translate(&grid("F a & F b")).unwrap();
        let d = fab.outgoing_disjunction(0);
        let bits = |x, y| fab.assignment(&pt(x, y)).unwrap();
        assert!(d.matches(bits(2.0, 2.0)));
        assert!(d.matches(bits(5.0, 5.0)));
        assert!(!d.matches(bits(0.0, 0.0)));
    }

    #[test]
    fn unsatisfiable_formula_is_a_lone_trap() {
        let fsa = translate(&grid("X (x < 1) & X !(x < 1)")).unwrap();
        assert_eq!(fsa.num_states(), 1);
        assert_eq!(fsa.trap(), Some(0));
        assert_eq!(fsa.label(0), "false");
        assert_eq!(fsa.accepting_states().count(), 0);
        fsa.check_deterministic_complete().unwrap();
    }

    #[test]
    fn next_creates_trap_state() {
        let fsa = translate(&grid("X a")).unwrap();
        assert!(fsa.trap().is_some());
        assert!(fsa.is_trap(fsa.trap().unwrap()));
        // Trap edges are not progress.
        let q1 = fsa.step(0, &pt(0.0, 0.0)).unwrap();
        let d = fsa.outgoing_disjunction(q1);
        assert!(!d.matches(fsa.assignment(&pt(0.0, 0.0)).unwrap()));
    }

    #[test]
    fn alphabet_overflow() {
        let preds: Vec<Formula> = (0..17).map(|i| Formula::pred(Predicate::less("x", i as f64))).collect();
        let f = Formula::eventually(Formula::and(preds));
        assert!(matches!(translate(&f), Err(AutomatonError::AlphabetOverflow(17))));
    }

    #[test]
    fn json_round_trip_preserves_automaton() {
        let fsa = translate(&grid("F a & F b")).unwrap();
        let back: Fsa = serde_json::from_str(&fsa.to_json()).unwrap();
        assert_eq!(back, fsa);
        assert_eq!(back.fingerprint(), fsa.fingerprint());
    }
}
