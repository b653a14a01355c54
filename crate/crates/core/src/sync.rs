//! Target-network synchronization schedule.
//!
//! The adaptive schedule shortens the sync interval as the overall win ratio
//! grows, syncs early ("fast") while wins are scarce or while the agent is
//! improving, and otherwise waits `uf` times longer ("slow").

use crate::env::Outcome;
use crate::scenario::{SyncMode, TrainConfig};

/// Snapshot of training progress consulted once per environment step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SyncStats {
    pub episodes_played: usize,
    pub n_win: usize,
    /// Win ratio over all finished episodes.
    pub r_win_current: f64,
    /// Win ratio over all finished episodes but the last.
    pub r_win_previous: f64,
    /// Environment steps since the last sync.
    pub steps_since_update: usize,
    /// Mean episode length over all finished episodes except the last `m`.
    pub n_steps_win: f64,
    /// Mean episode length over the last `k` winning episodes.
    pub n_steps_last_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    Fast,
    Slow,
    None,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncDecision {
    pub update: bool,
    pub mode: UpdateMode,
}

impl SyncDecision {
    const NONE: SyncDecision = SyncDecision { update: false, mode: UpdateMode::None };

    fn update(mode: UpdateMode) -> Self {
        Self { update: true, mode }
    }
}

/// `base * (1 - r_win_current)`, always computed from the configured base.
pub fn effective_frequency(base: f64, stats: &SyncStats) -> f64 {
    base * (1.0 - stats.r_win_current)
}

/// Decides whether the target network should be refreshed now. On any
/// update the caller resets `steps_since_update` to zero.
pub fn decide(stats: &SyncStats, config: &TrainConfig) -> SyncDecision {
    let base = config.base_update_frequency as f64;
    let steps = stats.steps_since_update as f64;
    if config.sync_mode == SyncMode::Fixed || stats.episodes_played <= config.n_ep_min {
        return if steps > base { SyncDecision::update(UpdateMode::Periodic) } else { SyncDecision::NONE };
    }

    let s_eff = effective_frequency(base, stats);
    if steps > s_eff {
        if stats.n_win < config.n_win_min {
            return SyncDecision::update(UpdateMode::Fast);
        }
        if stats.n_win > config.n_win_min
            && stats.r_win_current > stats.r_win_previous
            && stats.n_steps_win > stats.n_steps_last_k
        {
            return SyncDecision::update(UpdateMode::Fast);
        }
    }
    if steps > config.uf * s_eff {
        return SyncDecision::update(UpdateMode::Slow);
    }
    SyncDecision::NONE
}

/// Per-episode outcomes and lengths, from which both the scheduler and the
/// partial exploration gate read their statistics.
#[derive(Debug, Clone, Default)]
pub struct EpisodeHistory {
    /// `step_prefix[i]` is the total length of the first `i` episodes.
    step_prefix: Vec<usize>,
    wins: Vec<bool>,
    n_win: usize,
    winning_steps: Vec<usize>,
}

impl EpisodeHistory {
    pub fn record(&mut self, outcome: Outcome, steps: usize) {
        let win = outcome == Outcome::Win;
        if self.step_prefix.is_empty() {
            self.step_prefix.push(0);
        }
        self.step_prefix.push(self.step_prefix.last().unwrap() + steps);
        self.wins.push(win);
        if win {
            self.n_win += 1;
            self.winning_steps.push(steps);
        }
    }

    pub fn episodes(&self) -> usize {
        self.wins.len()
    }

    pub fn n_win(&self) -> usize {
        self.n_win
    }

    fn ratio(wins: usize, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            wins as f64 / n as f64
        }
    }

    pub fn r_win_current(&self) -> f64 {
        Self::ratio(self.n_win, self.episodes())
    }

    pub fn r_win_previous(&self) -> f64 {
        match self.wins.last() {
            None => 0.0,
            Some(&last) => Self::ratio(self.n_win - last as usize, self.episodes() - 1),
        }
    }

    /// Win fraction among the last `k` episodes (fewer when fewer were played).
    pub fn recent_win_ratio(&self, k: usize) -> f64 {
        let tail = &self.wins[self.wins.len().saturating_sub(k)..];
        Self::ratio(tail.iter().filter(|w| **w).count(), tail.len())
    }

    fn mean(v: &[usize]) -> f64 {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    }

    pub fn mean_steps_excluding_last(&self, m: usize) -> f64 {
        let n = self.episodes().saturating_sub(m);
        if n == 0 {
            0.0
        } else {
            self.step_prefix[n] as f64 / n as f64
        }
    }

    pub fn mean_steps_last_wins(&self, k: usize) -> f64 {
        Self::mean(&self.winning_steps[self.winning_steps.len().saturating_sub(k)..])
    }

    pub fn sync_stats(&self, steps_since_update: usize, config: &TrainConfig) -> SyncStats {
        SyncStats {
            episodes_played: self.episodes(),
            n_win: self.n_win,
            r_win_current: self.r_win_current(),
            r_win_previous: self.r_win_previous(),
            steps_since_update,
            n_steps_win: self.mean_steps_excluding_last(config.m),
            n_steps_last_k: self.mean_steps_last_wins(config.k),
        }
    }
}
