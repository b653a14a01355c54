//! Post-training summaries: where the agent went, how returns evolved, and
//! which kind of decision produced each move.

use crate::env::Action;
use crate::error::PathError;
use crate::explore::ActionKind;
use crate::field::RewardField;
use crate::scenario::{Cell, Scenario};
use crate::trainer::{EpisodeRecord, TrainingRun};

/// Default rolling window for convergence statistics, in episodes.
pub const DEFAULT_WINDOW: usize = 50;

/// Per-cell visit totals over all training episodes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitDensity {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
}

impl VisitDensity {
    pub fn count(&self, cell: Cell) -> u64 {
        self.counts[cell.y * self.width + cell.x]
    }
}

pub fn visit_density(episodes: &[EpisodeRecord], scenario: &Scenario) -> VisitDensity {
    let mut counts = vec![0u64; scenario.num_cells()];
    for e in episodes {
        for &c in &e.path {
            counts[scenario.index(c)] += 1;
        }
    }
    VisitDensity { width: scenario.width, height: scenario.height, counts }
}

pub fn run_density(run: &TrainingRun) -> VisitDensity {
    visit_density(&run.episodes, &run.scenario)
}

/// Follows the most visited unvisited neighbour from the entrance. Ties go
/// to the higher-reward cell, then to the lower move index. Fails if the walk
/// reaches a cell with no unvisited neighbour before the exit.
pub fn density_path(density: &VisitDensity, scenario: &Scenario) -> Result<Vec<Cell>, PathError> {
    let field = RewardField::new(scenario);
    let mut chosen = vec![false; scenario.num_cells()];
    let mut here = scenario.start;
    chosen[scenario.index(here)] = true;
    let mut cells = vec![here];
    while here != scenario.exit {
        let mut best: Option<(Cell, u64, f64)> = None;
        for a in Action::all() {
            let Some(next) = a.apply(here, scenario) else { continue };
            if chosen[scenario.index(next)] {
                continue;
            }
            let (count, reward) = (density.count(next), field.reward(next));
            let improves = match best {
                None => true,
                Some((_, bc, br)) => count > bc || (count == bc && reward > br),
            };
            if improves {
                best = Some((next, count, reward));
            }
        }
        let Some((next, _, _)) = best else {
            return Err(PathError::DeadEnd(here.to_string()));
        };
        chosen[scenario.index(next)] = true;
        cells.push(next);
        here = next;
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub episode: usize,
    /// Mean discounted return over the trailing window.
    pub moving_avg: f64,
    /// Population variance of discounted return over the trailing window.
    pub moving_variance: f64,
    /// Win ratio over all episodes so far.
    pub win_ratio: f64,
    /// Episode length when the episode was won.
    pub steps_if_win: Option<usize>,
}

/// Rolling statistics over the episode stream; the first `window - 1`
/// points use the shorter available history.
pub fn convergence_series(episodes: &[EpisodeRecord], window: usize) -> Vec<ConvergencePoint> {
    assert!(window >= 1, "window must be at least one episode");
    let mut wins = 0usize;
    episodes
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let won = e.outcome == crate::env::Outcome::Win;
            wins += won as usize;
            let tail = &episodes[(i + 1).saturating_sub(window)..=i];
            let n = tail.len() as f64;
            let mean = tail.iter().map(|t| t.discounted_return).sum::<f64>() / n;
            let var = tail.iter().map(|t| (t.discounted_return - mean).powi(2)).sum::<f64>() / n;
            ConvergencePoint {
                episode: e.index,
                moving_avg: mean,
                moving_variance: var,
                win_ratio: wins as f64 / (i + 1) as f64,
                steps_if_win: won.then_some(e.steps),
            }
        })
        .collect()
}

/// Mean of the moving variance over the last `last` points of the series.
pub fn late_moving_variance(series: &[ConvergencePoint], last: usize) -> f64 {
    let tail = &series[series.len().saturating_sub(last)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().map(|p| p.moving_variance).sum::<f64>() / tail.len() as f64
}

/// Per-cell counts of executed actions by kind, indexed by
/// [`ActionKind::index`]. Each move is attributed to the cell it left.
pub fn action_kind_histogram(episodes: &[EpisodeRecord], scenario: &Scenario) -> Vec<[u64; 3]> {
    let mut hist = vec![[0u64; 3]; scenario.num_cells()];
    for m in episodes.iter().flat_map(|e| &e.moves) {
        hist[scenario.index(m.from)][m.kind.index()] += 1;
    }
    hist
}

/// Total executed actions of one kind over a run.
pub fn total_kind(episodes: &[EpisodeRecord], kind: ActionKind) -> usize {
    episodes.iter().map(|e| e.kind_count(kind)).sum()
}
