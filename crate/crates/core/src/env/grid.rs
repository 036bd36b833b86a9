use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::hashing::json_hash;
use crate::logic::StateSample;

use super::config::StartSpec;
use super::DiscreteMdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl GridAction {
    pub const ALL: [GridAction; 5] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
        GridAction::Stay,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Arrow glyph; `·` for stay.
    pub fn glyph(self) -> char {
        match self {
            GridAction::Up => '↑',
            GridAction::Down => '↓',
            GridAction::Left => '←',
            GridAction::Right => '→',
            GridAction::Stay => '·',
        }
    }

    fn delta(self) -> (i64, i64) {
        match self {
            GridAction::Up => (0, 1),
            GridAction::Down => (0, -1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
            GridAction::Stay => (0, 0),
        }
    }
}

/// Slippery grid: the commanded action executes with probability
/// `1 - slip`, otherwise a uniformly random action (possibly the commanded
/// one) executes. Moves off the grid are clamped.
///
/// State index is `y * width + x`; `up` increases `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    width: usize,
    height: usize,
    slip: f64,
    start: StartSpec,
}

impl GridWorld {
    pub fn new(width: usize, height: usize, slip: f64, start: StartSpec) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!((0.0..=1.0).contains(&slip), "slip probability out of range");
        if let StartSpec::Fixed { x, y } = start {
            assert!(x < width && y < height, "fixed start outside the grid");
        }
        GridWorld {
            width,
            height,
            slip,
            start,
        }
    }

    /// 10 wide, 8 high, slip 0.2, uniform starts.
    pub fn standard() -> Self {
        GridWorld::new(10, 8, 0.2, StartSpec::Uniform)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.width, s / self.width)
    }

    /// Deterministic effect of executing `action` at `(x, y)`.
    pub fn apply(&self, (x, y): (usize, usize), action: GridAction) -> (usize, usize) {
        let (dx, dy) = action.delta();
        let nx = (x as i64 + dx).clamp(0, self.width as i64 - 1) as usize;
        let ny = (y as i64 + dy).clamp(0, self.height as i64 - 1) as usize;
        (nx, ny)
    }

    /// One stochastic move from `(x, y)`.
    pub fn grid_step(&self, pos: (usize, usize), action: GridAction, rng: &mut dyn RngCore) -> (usize, usize) {
        let executed = if rng.gen::<f64>() < self.slip {
            GridAction::ALL[rng.gen_range(0..GridAction::ALL.len())]
        } else {
            action
        };
        self.apply(pos, executed)
    }
}

impl DiscreteMdp for GridWorld {
    fn num_states(&self) -> usize {
        self.width * self.height
    }

    fn num_actions(&self) -> usize {
        GridAction::ALL.len()
    }

    fn feature_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn sample(&self, s: usize) -> StateSample {
        let (x, y) = self.coords(s);
        StateSample::new().with("x", x as f64).with("y", y as f64)
    }

    fn reset(&self, rng: &mut dyn RngCore) -> usize {
        match self.start {
            StartSpec::Uniform => rng.gen_range(0..self.num_states()),
            StartSpec::Fixed { x, y } => self.index(x, y),
        }
    }

    fn step(&self, s: usize, action: usize, rng: &mut dyn RngCore) -> usize {
        let a = GridAction::from_index(action).expect("action index in range");
        let (x, y) = self.grid_step(self.coords(s), a, rng);
        self.index(x, y)
    }

    fn transition_probs(&self, s: usize, action: usize) -> Option<Vec<(usize, f64)>> {
        let commanded = GridAction::from_index(action)?;
        let uniform = self.slip / GridAction::ALL.len() as f64;
        let mut out: Vec<(usize, f64)> = Vec::new();
        for executed in GridAction::ALL {
            let p = uniform + if executed == commanded { 1.0 - self.slip } else { 0.0 };
            let (x, y) = self.apply(self.coords(s), executed);
            let next = self.index(x, y);
            match out.iter_mut().find(|(t, _)| *t == next) {
                Some((_, acc)) => *acc += p,
                None => out.push((next, p)),
            }
        }
        out.retain(|(_, p)| *p > 0.0);
        Some(out)
    }

    fn config_hash(&self) -> String {
        json_hash(&("grid", self))
    }
}

/// Deterministic corridor `x = 0..len` with a single `right` action,
/// starting at `x = 0`; the last cell is absorbing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainWorld {
    len: usize,
}

impl ChainWorld {
    pub fn new(len: usize) -> Self {
        assert!(len > 0);
        ChainWorld { len }
    }
}

impl DiscreteMdp for ChainWorld {
    fn num_states(&self) -> usize {
        self.len
    }

    fn num_actions(&self) -> usize {
        1
    }

    fn feature_names(&self) -> Vec<String> {
        vec!["x".into()]
    }

    fn sample(&self, s: usize) -> StateSample {
        StateSample::new().with("x", s as f64)
    }

    fn reset(&self, _rng: &mut dyn RngCore) -> usize {
        0
    }

    fn step(&self, s: usize, _action: usize, _rng: &mut dyn RngCore) -> usize {
        (s + 1).min(self.len - 1)
    }

    fn transition_probs(&self, s: usize, _action: usize) -> Option<Vec<(usize, f64)>> {
        Some(vec![((s + 1).min(self.len - 1), 1.0)])
    }

    fn config_hash(&self) -> String {
        json_hash(&("chain", self))
    }
}
