//! Formula progression over truth assignments.
//!
//! A residual obligation is kept as a positive DNF over [`Term`]s with
//! subsumed clauses removed, which makes syntactically different but
//! propositionally equal residuals coincide.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::logic::{Formula, Predicate};

use super::guard::Assignment;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Term {
    /// Some sample remains: `F true`.
    NonEmpty,
    Lit(usize, bool),
    Eventually(Formula),
    Next(Formula),
    Until(Formula, Formula),
}

type Clause = BTreeSet<Term>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Residual {
    clauses: BTreeSet<Clause>,
}

impl Residual {
    pub fn top() -> Self {
        Residual {
            clauses: BTreeSet::from([Clause::new()]),
        }
    }

    pub fn bottom() -> Self {
        Residual {
            clauses: BTreeSet::new(),
        }
    }

    fn term(t: Term) -> Self {
        Residual {
            clauses: BTreeSet::from([BTreeSet::from([t])]),
        }
    }

    pub fn is_top(&self) -> bool {
        self.clauses.len() == 1 && self.clauses.iter().next().is_some_and(BTreeSet::is_empty)
    }

    pub fn is_bottom(&self) -> bool {
        self.clauses.is_empty()
    }

    fn or(mut self, other: Residual) -> Residual {
        self.clauses.extend(other.clauses);
        self.minimized()
    }

    fn and(self, other: Residual) -> Residual {
        let mut clauses = BTreeSet::new();
        for a in &self.clauses {
            for b in &other.clauses {
                let c: Clause = a.union(b).cloned().collect();
                if !contradictory(&c) {
                    clauses.insert(c);
                }
            }
        }
        Residual { clauses }.minimized()
    }

    /// Drops every clause that strictly contains another one.
    fn minimized(self) -> Residual {
        let clauses: Vec<Clause> = self.clauses.into_iter().collect();
        let keep = clauses
            .iter()
            .filter(|c| !clauses.iter().any(|d| d.len() < c.len() && d.is_subset(c)))
            .cloned()
            .collect();
        Residual { clauses: keep }
    }
}

fn contradictory(c: &Clause) -> bool {
    c.iter().any(|t| matches!(t, Term::Lit(i, true) if c.contains(&Term::Lit(*i, false))))
}

/// Progression context over a fixed predicate alphabet.
///
/// Term progressions are memoized on the truth values of the atoms the term
/// mentions, which is all they depend on.
pub(crate) struct Progressor<'a> {
    alphabet: &'a [Predicate],
    index: HashMap<&'a Predicate, usize>,
    masks: RefCell<HashMap<Term, Assignment>>,
    memo: RefCell<HashMap<(Term, Assignment), Residual>>,
}

impl<'a> Progressor<'a> {
    pub fn new(alphabet: &'a [Predicate]) -> Self {
        let index = alphabet.iter().enumerate().map(|(i, p)| (p, i)).collect();
        Progressor {
            alphabet,
            index,
            masks: RefCell::default(),
            memo: RefCell::default(),
        }
    }

    fn atom(&self, p: &Predicate) -> usize {
        self.index[p]
    }

    fn formula_mask(&self, f: &Formula) -> Assignment {
        f.predicates().iter().fold(0, |m, p| m | 1 << self.atom(p))
    }

    fn term_mask(&self, t: &Term) -> Assignment {
        if let Some(&m) = self.masks.borrow().get(t) {
            return m;
        }
        let m = match t {
            Term::NonEmpty => 0,
            Term::Lit(i, _) => 1 << i,
            Term::Eventually(f) | Term::Next(f) => self.formula_mask(f),
            Term::Until(l, r) => self.formula_mask(l) | self.formula_mask(r),
        };
        self.masks.borrow_mut().insert(t.clone(), m);
        m
    }

    /// Atoms whose truth values can affect the next progression step.
    pub fn support(&self, res: &Residual) -> Assignment {
        res.clauses.iter().flatten().fold(0, |m, t| m | self.term_mask(t))
    }

    /// Residual equal to `f` itself (before reading any sample).
    pub fn residual(&self, f: &Formula) -> Residual {
        match f {
            Formula::True => Residual::top(),
            Formula::Pred(p) => Residual::term(Term::Lit(self.atom(p), true)),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Pred(p) => Residual::term(Term::Lit(self.atom(p), false)),
                other => unreachable!("negation above predicate level: {other}"),
            },
            Formula::And(cs) => cs
                .iter()
                .fold(Residual::top(), |acc, c| acc.and(self.residual(c))),
            Formula::Or(cs) => cs
                .iter()
                .fold(Residual::bottom(), |acc, c| acc.or(self.residual(c))),
            Formula::Eventually(c) => match self.residual(c) {
                r if r.is_top() => Residual::term(Term::NonEmpty),
                r if r.is_bottom() => r,
                _ => Residual::term(Term::Eventually((**c).clone())),
            },
            Formula::Next(c) => match self.residual(c) {
                r if r.is_bottom() => r,
                _ => Residual::term(Term::Next((**c).clone())),
            },
            Formula::Until(l, r) => {
                let goal = self.residual(r);
                if goal.is_top() {
                    Residual::term(Term::NonEmpty)
                } else if goal.is_bottom() || self.residual(l).is_bottom() {
                    goal
                } else {
                    Residual::term(Term::Until((**l).clone(), (**r).clone()))
                }
            }
            Formula::Then(l, r) => self.residual(&Formula::then_equivalent(l, r)),
        }
    }

    /// Obligation on the remaining suffix after observing one sample with truth values `bits`.
    pub fn progress(&self, res: &Residual, bits: Assignment) -> Residual {
        res.clauses.iter().fold(Residual::bottom(), |acc, clause| {
            let conj = clause
                .iter()
                .fold(Residual::top(), |c, t| if c.is_bottom() { c } else { c.and(self.progress_term(t, bits)) });
            acc.or(conj)
        })
    }

    fn progress_term(&self, t: &Term, bits: Assignment) -> Residual {
        if matches!(t, Term::NonEmpty | Term::Lit(..)) {
            return self.progress_uncached(t, bits);
        }
        let key = (t.clone(), bits & self.term_mask(t));
        if let Some(r) = self.memo.borrow().get(&key) {
            return r.clone();
        }
        let r = self.progress_uncached(t, bits);
        self.memo.borrow_mut().insert(key, r.clone());
        r
    }

    fn progress_uncached(&self, t: &Term, bits: Assignment) -> Residual {
        match t {
            Term::NonEmpty => Residual::top(),
            Term::Lit(i, positive) => {
                if (bits >> i & 1 == 1) == *positive {
                    Residual::top()
                } else {
                    Residual::bottom()
                }
            }
            Term::Eventually(c) => {
                let now = self.progress(&self.residual(c), bits);
                now.or(Residual::term(t.clone()))
            }
            Term::Next(c) => {
                let r = self.residual(c);
                if r.is_top() {
                    Residual::term(Term::NonEmpty)
                } else {
                    r
                }
            }
            Term::Until(l, r) => {
                let goal = self.progress(&self.residual(r), bits);
                let hold = self.progress(&self.residual(l), bits);
                goal.or(hold.and(Residual::term(t.clone())))
            }
        }
    }

    pub fn render(&self, res: &Residual) -> String {
        ResidualDisplay { res, alphabet: self.alphabet }.to_string()
    }
}

struct ResidualDisplay<'a> {
    res: &'a Residual,
    alphabet: &'a [Predicate],
}

impl fmt::Display for ResidualDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.res.is_bottom() {
            return write!(f, "false");
        }
        if self.res.is_top() {
            return write!(f, "true");
        }
        let multi = self.res.clauses.len() > 1;
        for (i, clause) in self.res.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            let paren = multi && clause.len() > 1;
            if paren {
                write!(f, "(")?;
            }
            for (j, t) in clause.iter().enumerate() {
                if j > 0 {
                    write!(f, " & ")?;
                }
                match t {
                    Term::NonEmpty => write!(f, "X true")?,
                    Term::Lit(k, true) => write!(f, "({})", self.alphabet[*k])?,
                    Term::Lit(k, false) => write!(f, "!({})", self.alphabet[*k])?,
                    Term::Eventually(c) => write!(f, "({})", Formula::eventually(c.clone()))?,
                    Term::Next(c) => write!(f, "({})", Formula::next(c.clone()))?,
                    Term::Until(l, r) => write!(f, "({})", Formula::until(l.clone(), r.clone()))?,
                }
            }
            if paren {
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}
