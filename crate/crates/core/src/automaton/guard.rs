use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::logic::{LogicError, Predicate, StateSample, RHO_MAX};

/// Truth assignment over an alphabet, bit `i` set iff predicate `i` holds.
pub type Assignment = u64;

/// One literal of a guard cube as it appears in serialized automata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub atom: usize,
    pub positive: bool,
}

/// Conjunction of literals: assignments `a` with `a & care == value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Literal>", from = "Vec<Literal>")]
pub struct Cube {
    care: Assignment,
    value: Assignment,
}

impl From<Cube> for Vec<Literal> {
    fn from(c: Cube) -> Self {
        c.literals().collect()
    }
}

impl From<Vec<Literal>> for Cube {
    fn from(lits: Vec<Literal>) -> Self {
        lits.into_iter().fold(Cube::TOP, |c, l| {
            let bit = 1 << l.atom;
            Cube {
                care: c.care | bit,
                value: if l.positive { c.value | bit } else { c.value & !bit },
            }
        })
    }
}

impl Cube {
    pub const TOP: Cube = Cube { care: 0, value: 0 };

    pub fn minterm(bits: Assignment, width: usize) -> Self {
        let care = full_mask(width);
        Cube { care, value: bits & care }
    }

    pub fn literal(atom: usize, positive: bool) -> Self {
        Cube::from(vec![Literal { atom, positive }])
    }

    pub fn matches(&self, bits: Assignment) -> bool {
        bits & self.care == self.value
    }

    pub fn and(&self, other: &Cube) -> Option<Cube> {
        if (self.care & other.care) & (self.value ^ other.value) != 0 {
            return None;
        }
        Some(Cube {
            care: self.care | other.care,
            value: self.value | other.value,
        })
    }

    /// Moves atom `i` to position `map[i]`.
    pub fn remap(&self, map: &[usize]) -> Cube {
        self.literals()
            .map(|l| Literal {
                atom: map[l.atom],
                positive: l.positive,
            })
            .collect::<Vec<_>>()
            .into()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        (0..64)
            .filter(move |i| self.care >> i & 1 == 1)
            .map(move |i| Literal {
                atom: i,
                positive: self.value >> i & 1 == 1,
            })
    }

    fn minterms(&self, width: usize) -> impl Iterator<Item = Assignment> + '_ {
        let free = full_mask(width) & !self.care;
        let free_bits: Vec<Assignment> = (0..width).map(|i| 1 << i).filter(|b| free & b != 0).collect();
        (0..1u64 << free_bits.len()).map(move |k| {
            free_bits
                .iter()
                .enumerate()
                .filter(|(j, _)| k >> j & 1 == 1)
                .fold(self.value, |acc, (_, b)| acc | b)
        })
    }
}

fn full_mask(width: usize) -> Assignment {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Disjunction of cubes over an automaton's predicate alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Guard {
    cubes: Vec<Cube>,
}

impl Guard {
    pub fn never() -> Self {
        Guard { cubes: Vec::new() }
    }

    pub fn always() -> Self {
        Guard { cubes: vec![Cube::TOP] }
    }

    pub fn from_cubes(cubes: Vec<Cube>) -> Self {
        let mut cubes = cubes;
        cubes.sort();
        cubes.dedup();
        Guard { cubes }
    }

    /// Irredundant sum of products for the given satisfying assignments.
    pub fn from_minterms(width: usize, minterms: &[Assignment]) -> Self {
        if minterms.is_empty() {
            return Guard::never();
        }
        let mut table = vec![false; 1usize << width];
        for &m in minterms {
            table[m as usize] = true;
        }
        if table.iter().all(|&b| b) {
            return Guard::always();
        }
        let (cubes, _) = isop(&table, &table, width);
        Guard::from_cubes(cubes)
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn is_never(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn matches(&self, bits: Assignment) -> bool {
        self.cubes.iter().any(|c| c.matches(bits))
    }

    pub fn or(&self, other: &Guard) -> Guard {
        Guard::from_cubes(self.cubes.iter().chain(&other.cubes).copied().collect())
    }

    pub fn and(&self, other: &Guard) -> Guard {
        let cubes = self
            .cubes
            .iter()
            .flat_map(|a| other.cubes.iter().filter_map(move |b| a.and(b)))
            .collect();
        Guard::from_cubes(cubes)
    }

    pub fn remap(&self, map: &[usize]) -> Guard {
        Guard::from_cubes(self.cubes.iter().map(|c| c.remap(map)).collect())
    }

    /// Every satisfying assignment over `width` atoms.
    pub fn minterms(&self, width: usize) -> Vec<Assignment> {
        let set: BTreeSet<Assignment> = self.cubes.iter().flat_map(|c| c.minterms(width)).collect();
        set.into_iter().collect()
    }

    pub fn simplified(&self, width: usize) -> Guard {
        Guard::from_minterms(width, &self.minterms(width))
    }

    /// Max over cubes of the min literal robustness.
    pub fn robustness(&self, sample: &StateSample, alphabet: &[Predicate]) -> Result<f64, LogicError> {
        let mut best = -RHO_MAX;
        for cube in &self.cubes {
            let mut worst = RHO_MAX;
            for lit in cube.literals() {
                let rho = alphabet[lit.atom].robustness(sample)?;
                worst = worst.min(if lit.positive { rho } else { -rho });
            }
            best = best.max(worst);
        }
        Ok(best)
    }

    pub fn render(&self, alphabet: &[Predicate]) -> String {
        if self.cubes.is_empty() {
            return "false".into();
        }
        let mut out = String::new();
        let multi = self.cubes.len() > 1;
        for (i, cube) in self.cubes.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            let lits: Vec<Literal> = cube.literals().collect();
            if lits.is_empty() {
                out.push_str("true");
                continue;
            }
            let paren = multi && lits.len() > 1;
            if paren {
                out.push('(');
            }
            for (j, l) in lits.iter().enumerate() {
                if j > 0 {
                    out.push_str(" & ");
                }
                let bang = if l.positive { "" } else { "!" };
                let _ = write!(out, "{bang}({})", alphabet[l.atom]);
            }
            if paren {
                out.push(')');
            }
        }
        out
    }
}

/// Minato–Morreale cover: cubes whose union `r` satisfies `lower ⊆ r ⊆ upper`,
/// splitting on the highest variable so cofactors are table halves.
fn isop(lower: &[bool], upper: &[bool], vars: usize) -> (Vec<Cube>, Vec<bool>) {
    if lower.iter().all(|&b| !b) {
        return (Vec::new(), vec![false; lower.len()]);
    }
    if upper.iter().all(|&b| b) {
        return (vec![Cube::TOP], vec![true; lower.len()]);
    }
    let x = vars - 1;
    let half = lower.len() / 2;
    let (l0, l1) = lower.split_at(half);
    let (u0, u1) = upper.split_at(half);
    let only0: Vec<bool> = l0.iter().zip(u1).map(|(&l, &u)| l && !u).collect();
    let only1: Vec<bool> = l1.iter().zip(u0).map(|(&l, &u)| l && !u).collect();
    let (c0, r0) = isop(&only0, u0, x);
    let (c1, r1) = isop(&only1, u1, x);
    let rest: Vec<bool> = (0..half).map(|i| (l0[i] && !r0[i]) || (l1[i] && !r1[i])).collect();
    let both: Vec<bool> = u0.iter().zip(u1).map(|(&a, &b)| a && b).collect();
    let (cs, rs) = isop(&rest, &both, x);

    let bit = 1u64 << x;
    let mut cubes = Vec::with_capacity(c0.len() + c1.len() + cs.len());
    cubes.extend(c0.into_iter().map(|c| Cube { care: c.care | bit, value: c.value }));
    cubes.extend(c1.into_iter().map(|c| Cube { care: c.care | bit, value: c.value | bit }));
    cubes.extend(cs);
    let mut cover = Vec::with_capacity(lower.len());
    cover.extend((0..half).map(|i| r0[i] || rs[i]));
    cover.extend((0..half).map(|i| r1[i] || rs[i]));
    (cubes, cover)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qm_merges_adjacent_minterms() {
        // a & !b | a & b == a
        let g = Guard::from_minterms(2, &[0b01, 0b11]);
        assert_eq!(g.cubes(), &[Cube::literal(0, true)]);
    }

    #[test]
    fn negated_conjunction_yields_one_cube_per_literal() {
        let width = 4;
        let ms: Vec<u64> = (0..16).filter(|&m| m != 0b1111).collect();
        let g = Guard::from_minterms(width, &ms);
        assert_eq!(g.cubes().len(), 4);
        for m in 0..16 {
            assert_eq!(g.matches(m), m != 0b1111);
        }
    }

    #[test]
    fn cover_is_exact_on_every_three_variable_function() {
        for f in 0u32..256 {
            let ms: Vec<u64> = (0..8).filter(|m| f >> m & 1 == 1).collect();
            let g = Guard::from_minterms(3, &ms);
            assert_eq!(g.minterms(3), ms, "function {f:#010b}");
        }
    }

    #[test]
    fn always_and_never() {
        assert_eq!(Guard::from_minterms(2, &[0, 1, 2, 3]), Guard::always());
        assert!(Guard::from_minterms(2, &[]).is_never());
        assert_eq!(Guard::never().render(&[]), "false");
        assert_eq!(Guard::always().render(&[]), "true");
    }

    #[test]
    fn conjunction_drops_conflicts() {
        let a = Guard::from_cubes(vec![Cube::literal(0, true)]);
        let na = Guard::from_cubes(vec![Cube::literal(0, false)]);
        assert!(a.and(&na).is_never());
        assert_eq!(a.and(&Guard::always()), a);
    }

    #[test]
    fn cube_serializes_as_literals() {
        let c = Cube::literal(0, true).and(&Cube::literal(2, false)).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"[{"atom":0,"positive":true},{"atom":2,"positive":false}]"#);
        let back: Cube = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn robustness_matches_min_max() {
        let alphabet = vec![Predicate::greater("x", 1.0), Predicate::less("x", 3.0)];
        let g = Guard::from_cubes(vec![Cube::literal(0, true).and(&Cube::literal(1, true)).unwrap()]);
        let s = StateSample::new().with("x", 2.5);
        assert_eq!(g.robustness(&s, &alphabet).unwrap(), 0.5);
        assert_eq!(Guard::never().robustness(&s, &alphabet).unwrap(), -RHO_MAX);
    }
}
