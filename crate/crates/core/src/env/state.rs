use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::geometry::Cell;
use super::world::WorldState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Pause,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Pause];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Grid displacement; `Up` increases `y`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Pause => (0, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Pause => "pause",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown action `{s}`")))
    }
}

/// Agent-visible state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub uav: Cell,
    /// Traffic in the UAV's cell.
    pub s_t: bool,
    /// Scanned cells, row-major (`y * cols + x`).
    pub visited: Vec<bool>,
    /// True crack ids confirmed so far.
    pub detected: BTreeSet<usize>,
    /// Cells where the detector fired, row-major.
    pub flagged: Vec<bool>,
    pub false_positives: u32,
    pub t_pause: u32,
    pub step: u32,
    pub done: bool,
    pub cols: usize,
    pub rows: usize,
}

impl EnvState {
    /// UAV parked on the base cell, which counts as surveyed.
    pub fn initial(world: &WorldState) -> Self {
        let n = world.cols * world.rows;
        let mut s = EnvState {
            uav: world.base_cell(),
            s_t: false,
            visited: vec![false; n],
            detected: BTreeSet::new(),
            flagged: vec![false; n],
            false_positives: 0,
            t_pause: 0,
            step: 0,
            done: false,
            cols: world.cols,
            rows: world.rows,
        };
        let base = s.index(world.base_cell());
        s.visited[base] = true;
        s.s_t = world.traffic_at(s.uav);
        s
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y * self.cols + c.x
    }

    pub fn is_visited(&self, c: Cell) -> bool {
        self.visited[self.index(c)]
    }

    pub fn is_flagged(&self, c: Cell) -> bool {
        self.flagged[self.index(c)]
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&v| v).count()
    }

    pub fn fully_covered(&self) -> bool {
        self.visited.iter().all(|&v| v)
    }

    /// Pause is masked once the pause budget is spent.
    pub fn pause_allowed(&self, pause_limit: u32) -> bool {
        self.t_pause < pause_limit
    }

    /// Legal-action mask indexed by [`Action::index`].
    pub fn action_mask(&self, pause_limit: u32) -> [bool; Action::COUNT] {
        let mut m = [true; Action::COUNT];
        m[Action::Pause.index()] = self.pause_allowed(pause_limit);
        m
    }
}
