//! Inverse-square exposure and the radiation-aware per-cell reward
//! `r = n / R_e - sum_i(gamma * S_i / R_i^2)`.
//!
//! Both distances are clamped below at one cell so the field stays finite on
//! a source cell and on the exit cell.

use crate::scenario::{Cell, Scenario};

/// Smallest distance used in either term of the reward, in cell units.
pub const MIN_DISTANCE: f64 = 1.0;

/// Summed inverse-square intensity of all sources at `cell`.
///
/// Terms are added in ascending order so the result does not depend on the
/// order sources are listed in.
pub fn exposure_at(cell: Cell, scenario: &Scenario) -> f64 {
    let min2 = MIN_DISTANCE * MIN_DISTANCE;
    let mut terms: Vec<f64> = scenario
        .sources
        .iter()
        .map(|s| scenario.gamma_const * s.strength / cell.dist2(&s.position).max(min2))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Exit-proximity incentive `n / max(R_e, 1)`.
pub fn urgency_at(cell: Cell, scenario: &Scenario) -> f64 {
    scenario.urgency / cell.dist(&scenario.exit).max(MIN_DISTANCE)
}

pub fn reward_at(cell: Cell, scenario: &Scenario) -> f64 {
    urgency_at(cell, scenario) - exposure_at(cell, scenario)
}

/// Dense tabulation of exposure and reward over the whole grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardField {
    pub width: usize,
    pub height: usize,
    pub exposure: Vec<f64>,
    pub reward: Vec<f64>,
}

impl RewardField {
    pub fn new(scenario: &Scenario) -> Self {
        let exposure: Vec<f64> = scenario.cells().map(|c| exposure_at(c, scenario)).collect();
        let reward = scenario
            .cells()
            .zip(&exposure)
            .map(|(c, e)| urgency_at(c, scenario) - e)
            .collect();
        Self { width: scenario.width, height: scenario.height, exposure, reward }
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn exposure(&self, cell: Cell) -> f64 {
        self.exposure[self.idx(cell)]
    }

    pub fn reward(&self, cell: Cell) -> f64 {
        self.reward[self.idx(cell)]
    }

    /// CSV with header `x,y,exposure,reward`, one row per cell in row-major
    /// order, values to 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,exposure,reward\n");
        for i in 0..self.exposure.len() {
            let (x, y) = (i % self.width, i / self.width);
            out.push_str(&format!(
                "{x},{y},{},{}\n",
                sig_digits(self.exposure[i], 9),
                sig_digits(self.reward[i], 9)
            ));
        }
        out
    }
}

/// Shortest decimal rendering of `v` rounded to `digits` significant digits.
pub fn sig_digits(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v).parse().unwrap();
    format!("{rounded}")
}

pub fn reward_field(scenario: &Scenario) -> RewardField {
    RewardField::new(scenario)
}
