//! Episodic grid dynamics: eight-way moves, no revisits, a step budget, and
//! the state encoding fed to the Q-network.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::field::RewardField;
use crate::scenario::{Cell, Scenario};

/// One of the eight king moves, identified by its index in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(pub usize);

const DELTAS: [(i64, i64); 8] =
    [(0, 1), (0, -1), (-1, 0), (1, 0), (1, 1), (-1, 1), (1, -1), (-1, -1)];
const NAMES: [&str; 8] =
    ["up", "down", "left", "right", "up-right", "up-left", "down-right", "down-left"];

impl Action {
    pub const COUNT: usize = 8;

    pub fn all() -> impl Iterator<Item = Action> {
        (0..Self::COUNT).map(Action)
    }

    pub fn delta(self) -> (i64, i64) {
        DELTAS[self.0]
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0]
    }

    /// Cell reached from `from`, or `None` when the move leaves the grid.
    pub fn apply(self, from: Cell, scenario: &Scenario) -> Option<Cell> {
        let (dx, dy) = self.delta();
        let x = from.x as i64 + dx;
        let y = from.y as i64 + dy;
        if x < 0 || y < 0 || x >= scenario.width as i64 || y >= scenario.height as i64 {
            None
        } else {
            Some(Cell::new(x as usize, y as usize))
        }
    }

    /// The action moving between two adjacent cells.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        let d = (to.x as i64 - from.x as i64, to.y as i64 - from.y as i64);
        DELTAS.iter().position(|&x| x == d).map(Action)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Running,
    Win,
    FailStepBudget,
    FailDeadEnd,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Win => "win",
            Outcome::FailStepBudget => "fail_step_budget",
            Outcome::FailDeadEnd => "fail_dead_end",
        }
    }

    pub fn parse(s: &str) -> Option<Outcome> {
        [Outcome::Running, Outcome::Win, Outcome::FailStepBudget, Outcome::FailDeadEnd]
            .into_iter()
            .find(|o| o.as_str() == s)
    }

    pub fn is_terminal(self) -> bool {
        self != Outcome::Running
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub agent: Cell,
    /// Row-major visited flags; the agent's cell is always set.
    visited: Vec<bool>,
    /// Cells in visiting order, starting with the entrance.
    pub path: Vec<Cell>,
    pub steps_taken: usize,
    pub outcome: Outcome,
}

impl EpisodeState {
    pub fn is_visited(&self, cell: Cell, width: usize) -> bool {
        self.visited[cell.y * width + cell.x]
    }

    pub fn visited_count(&self) -> usize {
        self.path.len()
    }
}

/// One stored transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state_vec: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state_vec: Vec<f64>,
    pub terminal: bool,
    /// Bit `a` is set when action `a` stays inside the grid from the next state.
    pub next_wall_mask: u8,
}

/// Result of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: EpisodeState,
    pub reward: f64,
    pub terminal: bool,
}

/// A scenario with its reward field tabulated once.
#[derive(Debug, Clone)]
pub struct GridEnv {
    scenario: Scenario,
    field: RewardField,
}

impl GridEnv {
    pub fn new(scenario: Scenario) -> Self {
        let field = RewardField::new(&scenario);
        Self { scenario, field }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn field(&self) -> &RewardField {
        &self.field
    }

    pub fn reward_at(&self, cell: Cell) -> f64 {
        self.field.reward(cell)
    }

    pub fn reset(&self) -> EpisodeState {
        let s = &self.scenario;
        let mut visited = vec![false; s.num_cells()];
        visited[s.index(s.start)] = true;
        EpisodeState {
            agent: s.start,
            visited,
            path: vec![s.start],
            steps_taken: 0,
            outcome: Outcome::Running,
        }
    }

    /// Moves that stay inside the grid and enter an unvisited cell, in
    /// canonical order.
    pub fn valid_actions(&self, state: &EpisodeState) -> Vec<Action> {
        Action::all()
            .filter(|a| {
                a.apply(state.agent, &self.scenario)
                    .is_some_and(|c| !state.visited[self.scenario.index(c)])
            })
            .collect()
    }

    /// Moves that merely stay inside the grid from `cell`, as a bitmask.
    pub fn wall_mask(&self, cell: Cell) -> u8 {
        Action::all()
            .filter(|a| a.apply(cell, &self.scenario).is_some())
            .fold(0u8, |m, a| m | (1 << a.0))
    }

    /// Applies `action` in place and returns `(reward, terminal)`.
    ///
    /// # Panics
    /// When the episode is over or the action hits a wall or a visited cell;
    /// callers choose from [`GridEnv::valid_actions`].
    pub fn apply(&self, state: &mut EpisodeState, action: Action) -> (f64, bool) {
        assert_eq!(state.outcome, Outcome::Running, "step on a finished episode");
        let s = &self.scenario;
        let next = action
            .apply(state.agent, s)
            .unwrap_or_else(|| panic!("{action} from {} leaves the grid", state.agent));
        let idx = s.index(next);
        assert!(!state.visited[idx], "{action} from {} revisits {next}", state.agent);

        state.agent = next;
        state.visited[idx] = true;
        state.path.push(next);
        state.steps_taken += 1;
        state.outcome = if next == s.exit {
            Outcome::Win
        } else if state.steps_taken >= s.max_steps {
            Outcome::FailStepBudget
        } else if self.valid_actions(state).is_empty() {
            Outcome::FailDeadEnd
        } else {
            Outcome::Running
        };
        (self.field.reward(next), state.outcome.is_terminal())
    }

    pub fn step(&self, state: &EpisodeState, action: Action) -> Transition {
        let mut next = state.clone();
        let (reward, terminal) = self.apply(&mut next, action);
        Transition { state: next, reward, terminal }
    }

    /// Agent one-hot plane followed by one plane per source holding its
    /// strength at the source cell; planes are row-major.
    pub fn encode_state(&self, agent: Cell) -> Vec<f64> {
        let s = &self.scenario;
        let t = s.num_cells();
        let mut v = vec![0.0; s.state_dim()];
        v[s.index(agent)] = 1.0;
        for (i, src) in s.sources.iter().enumerate() {
            v[(i + 1) * t + s.index(src.position)] = src.strength;
        }
        v
    }
}
