use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::LogicError;

/// Finite sentinel standing in for +infinity robustness.
pub const RHO_MAX: f64 = 1.0e6;

/// Named real-valued features of one MDP state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateSample {
    values: BTreeMap<String, f64>,
}

impl StateSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// A non-empty sequence of samples sharing one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<StateSample>,
}

impl Trace {
    pub fn new(samples: Vec<StateSample>) -> Result<Self, LogicError> {
        let first = samples.first().ok_or(LogicError::EmptyTrace)?;
        let names: Vec<&str> = first.features().collect();
        for (t, sample) in samples.iter().enumerate().skip(1) {
            if !sample.features().eq(names.iter().copied()) {
                return Err(LogicError::InconsistentTrace(t));
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[StateSample] {
        &self.samples
    }

    pub fn get(&self, t: usize) -> Option<&StateSample> {
        self.samples.get(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Less,
    Greater,
}

/// Affine predicate `sum_i w_i * feature_i (< | >) threshold`.
///
/// Terms are kept sorted by feature name with zero weights removed, so two
/// predicates that denote the same affine function compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Predicate {
    terms: Vec<(String, f64)>,
    threshold: f64,
    comparison: Comparison,
}

impl Predicate {
    pub fn new(
        terms: impl IntoIterator<Item = (String, f64)>,
        comparison: Comparison,
        threshold: f64,
    ) -> Result<Self, LogicError> {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (name, w) in terms {
            *merged.entry(name).or_insert(0.0) += w;
        }
        let terms: Vec<(String, f64)> = merged.into_iter().filter(|(_, w)| *w != 0.0).collect();
        if terms.is_empty() {
            return Err(LogicError::DegeneratePredicate);
        }
        if !threshold.is_finite() || terms.iter().any(|(_, w)| !w.is_finite()) {
            return Err(LogicError::NonFiniteConstant);
        }
        Ok(Self {
            terms,
            threshold: threshold + 0.0,
            comparison,
        })
    }

    /// `feature < threshold`
    pub fn less(feature: &str, threshold: f64) -> Self {
        Self::new([(feature.to_string(), 1.0)], Comparison::Less, threshold)
            .expect("unit coefficient is nonzero")
    }

    /// `feature > threshold`
    pub fn greater(feature: &str, threshold: f64) -> Self {
        Self::new([(feature.to_string(), 1.0)], Comparison::Greater, threshold)
            .expect("unit coefficient is nonzero")
    }

    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn comparison(&self) -> Comparison {
        self.comparison
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(n, _)| n.as_str())
    }

    /// Value of the affine function f(s).
    pub fn affine_value(&self, sample: &StateSample) -> Result<f64, LogicError> {
        self.terms.iter().try_fold(0.0, |acc, (name, w)| {
            sample
                .get(name)
                .map(|v| acc + w * v)
                .ok_or_else(|| LogicError::MissingFeature(name.clone()))
        })
    }

    /// `c - f(s)` for `<`, `f(s) - c` for `>`.
    pub fn robustness(&self, sample: &StateSample) -> Result<f64, LogicError> {
        let f = self.affine_value(sample)?;
        Ok(match self.comparison {
            Comparison::Less => self.threshold - f,
            Comparison::Greater => f - self.threshold,
        })
    }

    /// Strict satisfaction: a zero margin counts as unsatisfied.
    pub fn holds(&self, sample: &StateSample) -> Result<bool, LogicError> {
        Ok(self.robustness(sample)? > 0.0)
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        let terms = self.terms.len().cmp(&other.terms.len()).then_with(|| {
            self.terms
                .iter()
                .zip(&other.terms)
                .map(|((na, wa), (nb, wb))| na.cmp(nb).then(wa.total_cmp(wb)))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        terms
            .then(self.comparison.cmp(&other.comparison))
            .then(self.threshold.total_cmp(&other.threshold))
    }
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other).is_eq()
    }
}

impl Eq for Predicate {}

impl PartialOrd for Predicate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Predicate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

impl Hash for Predicate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for (name, w) in &self.terms {
            name.hash(state);
            w.to_bits().hash(state);
        }
        self.comparison.hash(state);
        self.threshold.to_bits().hash(state);
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, w)) in self.terms.iter().enumerate() {
            let (sign, mag) = if *w < 0.0 { ("-", -w) } else { ("+", *w) };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                (_, s) => write!(f, " {s} ")?,
            }
            if mag == 1.0 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
        }
        let op = match self.comparison {
            Comparison::Less => "<",
            Comparison::Greater => ">",
        };
        write!(f, " {op} {}", self.threshold)
    }
}

/// scTLTL abstract syntax in negation normal form.
///
/// `Not` wraps predicates only and there is no "always" operator; `And`/`Or`
/// carry at least two children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    True,
    Pred(Predicate),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Eventually(Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Then(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn pred(p: Predicate) -> Self {
        Formula::Pred(p)
    }

    pub fn not_pred(p: Predicate) -> Self {
        Formula::Not(Box::new(Formula::Pred(p)))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Self {
        Formula::Until(Box::new(l), Box::new(r))
    }

    pub fn then(l: Formula, r: Formula) -> Self {
        Formula::Then(Box::new(l), Box::new(r))
    }

    /// Conjunction that flattens nested `And`s; a single operand is returned as is.
    pub fn and(children: impl IntoIterator<Item = Formula>) -> Self {
        Self::nary(children, true)
    }

    pub fn or(children: impl IntoIterator<Item = Formula>) -> Self {
        Self::nary(children, false)
    }

    fn nary(children: impl IntoIterator<Item = Formula>, conj: bool) -> Self {
        let mut flat = Vec::new();
        for c in children {
            match (c, conj) {
                (Formula::And(cs), true) | (Formula::Or(cs), false) => flat.extend(cs),
                (c, _) => flat.push(c),
            }
        }
        match flat.len() {
            0 if conj => Formula::True,
            1 => flat.pop().unwrap(),
            _ if conj => Formula::And(flat),
            _ => Formula::Or(flat),
        }
    }

    /// `φ T ψ` read as `F (φ & X F ψ)`. All consumers expand `Then` through here.
    pub fn then_equivalent(left: &Formula, right: &Formula) -> Formula {
        Formula::eventually(Formula::and([
            left.clone(),
            Formula::next(Formula::eventually(right.clone())),
        ]))
    }

    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            Formula::Eventually(_) | Formula::Next(_) | Formula::Until(..) | Formula::Then(..)
        )
    }

    /// Checks the NNF / arity invariants.
    pub fn validate(&self) -> Result<(), LogicError> {
        match self {
            Formula::True | Formula::Pred(_) => Ok(()),
            Formula::Not(inner) => match **inner {
                Formula::Pred(_) => Ok(()),
                _ => Err(LogicError::NegationNotAtPredicate),
            },
            Formula::And(cs) | Formula::Or(cs) => {
                if cs.len() < 2 {
                    return Err(LogicError::BadArity);
                }
                cs.iter().try_for_each(Formula::validate)
            }
            Formula::Eventually(c) | Formula::Next(c) => c.validate(),
            Formula::Until(l, r) | Formula::Then(l, r) => {
                l.validate()?;
                r.validate()
            }
        }
    }

    /// Distinct atomic predicates in order of first occurrence.
    pub fn predicates(&self) -> Vec<Predicate> {
        let mut out: Vec<Predicate> = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates(&self, out: &mut Vec<Predicate>) {
        match self {
            Formula::True => {}
            Formula::Pred(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            Formula::Not(c) | Formula::Eventually(c) | Formula::Next(c) => c.collect_predicates(out),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_predicates(out)),
            Formula::Until(l, r) | Formula::Then(l, r) => {
                l.collect_predicates(out);
                r.collect_predicates(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Pred(_) => 0,
            Formula::Not(c) => c.depth(),
            Formula::Eventually(c) | Formula::Next(c) => 1 + c.depth(),
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Until(l, r) | Formula::Then(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Formula::True | Formula::Pred(_) | Formula::Not(_))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, c: &Formula) -> fmt::Result {
            if c.is_atomic() {
                write!(f, "{c}")
            } else {
                write!(f, "({c})")
            }
        }
        fn unary(f: &mut fmt::Formatter<'_>, op: &str, c: &Formula) -> fmt::Result {
            write!(f, "{op}")?;
            match c {
                Formula::Eventually(_) | Formula::Next(_) => write!(f, " {c}"),
                _ => child(f, c),
            }
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::Pred(p) => write!(f, "({p})"),
            Formula::Not(c) => write!(f, "!{c}"),
            Formula::And(cs) | Formula::Or(cs) => {
                let sep = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    child(f, c)?;
                }
                Ok(())
            }
            Formula::Eventually(c) => unary(f, "F ", c),
            Formula::Next(c) => unary(f, "X ", c),
            Formula::Until(l, r) | Formula::Then(l, r) => {
                let op = if matches!(self, Formula::Until(..)) { " U " } else { " T " };
                child(f, l)?;
                write!(f, "{op}")?;
                child(f, r)
            }
        }
    }
}
