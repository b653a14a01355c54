//! CSV and JSON artifacts written by training and evaluation, and the
//! readers needed to rebuild analyses from a stored run.
//!
//! Floating point values are written in shortest round-trip form, so reading
//! a file back reproduces the in-memory values exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{ConvergencePoint, VisitDensity};
use crate::env::{Action, Outcome};
use crate::explore::ActionKind;
use crate::oracle::GridPath;
use crate::scenario::{Cell, Scenario};
use crate::trainer::{EpisodeRecord, StepLog};

pub const EPISODES_HEADER: &str = "index,outcome,steps,cumulative_reward,discounted_return,epsilon,random_actions,greedy_actions,converted_actions,sync_events";
pub const TRAJECTORIES_HEADER: &str = "episode,step,from_x,from_y,action,kind,to_x,to_y,reward";

#[derive(Debug, thiserror::Error)]
#[error("{file} line {line}: {message}")]
pub struct ReadError {
    pub file: &'static str,
    pub line: usize,
    pub message: String,
}

pub fn episodes_csv(episodes: &[EpisodeRecord]) -> String {
    let mut out = format!("{EPISODES_HEADER}\n");
    for e in episodes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            e.index,
            e.outcome,
            e.steps,
            e.cumulative_reward,
            e.discounted_return,
            e.epsilon,
            e.kind_count(ActionKind::Random),
            e.kind_count(ActionKind::Greedy),
            e.kind_count(ActionKind::Converted),
            e.sync_events
        );
    }
    out
}

pub fn trajectories_csv(episodes: &[EpisodeRecord]) -> String {
    let mut out = format!("{TRAJECTORIES_HEADER}\n");
    for e in episodes {
        for (step, (m, to)) in e.moves.iter().zip(&e.path[1..]).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                e.index, step, m.from.x, m.from.y, m.action.0, m.kind, to.x, to.y, m.reward
            );
        }
    }
    out
}

fn rows<'a>(
    text: &'a str,
    file: &'static str,
    header: &str,
    width: usize,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>, ReadError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(ReadError { file, line: 1, message: "unexpected header".into() }),
    }
    let parsed: Vec<_> = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').collect::<Vec<_>>()))
        .collect();
    if let Some((line, f)) = parsed.iter().find(|(_, f)| f.len() != width) {
        return Err(ReadError {
            file,
            line: *line,
            message: format!("expected {width} fields, found {}", f.len()),
        });
    }
    Ok(parsed.into_iter())
}

fn field<T: std::str::FromStr>(file: &'static str, line: usize, raw: &str) -> Result<T, ReadError> {
    raw.trim()
        .parse()
        .map_err(|_| ReadError { file, line, message: format!("cannot parse '{raw}'") })
}

/// Rebuilds episode records from `episodes.csv` and `trajectories.csv`.
pub fn read_episodes(
    episodes_text: &str,
    trajectories_text: &str,
    scenario: &Scenario,
) -> Result<Vec<EpisodeRecord>, ReadError> {
    const EP: &str = "episodes.csv";
    const TR: &str = "trajectories.csv";
    let mut episodes = Vec::new();
    for (line, f) in rows(episodes_text, EP, EPISODES_HEADER, 10)? {
        let outcome = Outcome::parse(f[1])
            .ok_or_else(|| ReadError { file: EP, line, message: format!("unknown outcome '{}'", f[1]) })?;
        let index: usize = field(EP, line, f[0])?;
        if index != episodes.len() {
            return Err(ReadError { file: EP, line, message: "episodes out of order".into() });
        }
        episodes.push(EpisodeRecord {
            index,
            outcome,
            steps: field(EP, line, f[2])?,
            cumulative_reward: field(EP, line, f[3])?,
            discounted_return: field(EP, line, f[4])?,
            epsilon: field(EP, line, f[5])?,
            kind_counts: [field(EP, line, f[6])?, field(EP, line, f[7])?, field(EP, line, f[8])?],
            sync_events: field(EP, line, f[9])?,
            path: vec![scenario.start],
            moves: Vec::new(),
        });
    }
    for (line, f) in rows(trajectories_text, TR, TRAJECTORIES_HEADER, 9)? {
        let ep: usize = field(TR, line, f[0])?;
        let e = episodes
            .get_mut(ep)
            .ok_or_else(|| ReadError { file: TR, line, message: format!("unknown episode {ep}") })?;
        let step: usize = field(TR, line, f[1])?;
        if step != e.moves.len() {
            return Err(ReadError { file: TR, line, message: "steps out of order".into() });
        }
        let action: usize = field(TR, line, f[4])?;
        if action >= Action::COUNT {
            return Err(ReadError { file: TR, line, message: format!("bad action {action}") });
        }
        let kind = ActionKind::parse(f[5])
            .ok_or_else(|| ReadError { file: TR, line, message: format!("unknown kind '{}'", f[5]) })?;
        e.moves.push(StepLog {
            from: Cell::new(field(TR, line, f[2])?, field(TR, line, f[3])?),
            action: Action(action),
            kind,
            reward: field(TR, line, f[8])?,
        });
        e.path.push(Cell::new(field(TR, line, f[6])?, field(TR, line, f[7])?));
    }
    if let Some(e) = episodes.iter().find(|e| e.moves.len() != e.steps) {
        return Err(ReadError {
            file: TR,
            line: 0,
            message: format!("episode {} has {} moves, expected {}", e.index, e.moves.len(), e.steps),
        });
    }
    Ok(episodes)
}

pub fn density_csv(density: &VisitDensity) -> String {
    let mut out = String::from("x,y,count\n");
    for (i, c) in density.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i % density.width, i / density.width, c);
    }
    out
}

pub fn convergence_csv(series: &[ConvergencePoint]) -> String {
    let mut out = String::from("episode,moving_avg_return,moving_variance,win_ratio,steps_if_win\n");
    for p in series {
        let steps = p.steps_if_win.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.episode, p.moving_avg, p.moving_variance, p.win_ratio, steps
        );
    }
    out
}

pub fn action_kinds_csv(hist: &[[u64; 3]], width: usize) -> String {
    let mut out = String::from("x,y,random,greedy,converted\n");
    for (i, h) in hist.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", i % width, i / width, h[0], h[1], h[2]);
    }
    out
}

/// JSON document describing one route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub cells: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_exposure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_reward_per_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discounted_return: Option<f64>,
}

impl PathDocument {
    pub fn from_path(path: &GridPath, outcome: Option<Outcome>) -> Self {
        Self {
            cells: path.cells.iter().map(|c| [c.x, c.y]).collect(),
            outcome: outcome.map(|o| o.to_string()),
            step_count: Some(path.step_count),
            edge_weight: Some(path.edge_weight),
            total_exposure: Some(path.total_exposure),
            cumulative_reward: Some(path.cumulative_reward),
            avg_reward_per_step: Some(path.avg_reward_per_step),
            discounted_return: Some(path.discounted_return),
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.cells.iter().map(|&[x, y]| Cell::new(x, y)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path document serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
