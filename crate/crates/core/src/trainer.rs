//! Episode loop tying together action selection, the environment, replay,
//! learning and target synchronization.

use rand::Rng as _;

use crate::env::{Action, Experience, GridEnv, Outcome};
use crate::explore::{choose_action, epsilon_at, ActionKind, ExploreStats};
use crate::nn::{argmax_over, Adam, QNetwork};
use crate::replay::ReplayBuffer;
use crate::scenario::{Cell, Scenario, TrainConfig};
use crate::seeded_rng;
use crate::sync::{decide, EpisodeHistory};

/// One executed move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub from: Cell,
    pub action: Action,
    pub kind: ActionKind,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub index: usize,
    pub outcome: Outcome,
    pub steps: usize,
    /// Undiscounted reward sum.
    pub cumulative_reward: f64,
    /// `sum_t discount^t * r_t`, `t` counted from zero.
    pub discounted_return: f64,
    pub epsilon: f64,
    /// Executed actions per kind, indexed by [`ActionKind::index`].
    pub kind_counts: [usize; 3],
    pub sync_events: usize,
    /// Cells visited, starting with the entrance.
    pub path: Vec<Cell>,
    pub moves: Vec<StepLog>,
}

impl EpisodeRecord {
    pub fn kind_count(&self, kind: ActionKind) -> usize {
        self.kind_counts[kind.index()]
    }
}

/// Everything produced by one training run.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub scenario: Scenario,
    pub config: TrainConfig,
    pub seed: u64,
    pub episodes: Vec<EpisodeRecord>,
    pub net: QNetwork,
    /// Target network as of the last synchronization.
    pub target: QNetwork,
    /// `action_counts[cell][action][kind]`, cells row-major.
    pub action_counts: Vec<[[u64; 3]; 8]>,
}

/// Discounted sum of a reward sequence.
pub fn discounted_return(rewards: &[f64], discount: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 1.0;
    for r in rewards {
        total += weight * r;
        weight *= discount;
    }
    total
}

impl TrainingRun {
    pub fn total_sync_events(&self) -> usize {
        self.episodes.iter().map(|e| e.sync_events).sum()
    }

    /// Mean discounted return over the final `fraction` of episodes (at least one).
    pub fn late_average_return(&self, fraction: f64) -> f64 {
        late_average(&self.episodes, fraction)
    }
}

/// Mean discounted return over the final `fraction` of `episodes`.
pub fn late_average(episodes: &[EpisodeRecord], fraction: f64) -> f64 {
    if episodes.is_empty() {
        return 0.0;
    }
    let n = ((episodes.len() as f64 * fraction).round() as usize).clamp(1, episodes.len());
    let tail = &episodes[episodes.len() - n..];
    tail.iter().map(|e| e.discounted_return).sum::<f64>() / n as f64
}

pub fn train(scenario: &Scenario, config: &TrainConfig) -> TrainingRun {
    train_with(scenario, config, |_| {})
}

/// Runs training and calls `on_episode` after every finished episode.
pub fn train_with(
    scenario: &Scenario,
    config: &TrainConfig,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> TrainingRun {
    let env = GridEnv::new(scenario.clone());
    let mut rng = seeded_rng(config.seed);
    let mut net = QNetwork::new(scenario.state_dim(), rng.random());
    let mut target = net.clone_into_target();
    let mut opt = Adam::new(&net, config.learning_rate);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut history = EpisodeHistory::default();
    let mut action_counts = vec![[[0u64; 3]; 8]; scenario.num_cells()];
    let mut episodes = Vec::with_capacity(config.episodes);
    let mut steps_since_update = 0usize;

    for index in 0..config.episodes {
        let epsilon = epsilon_at(index, config);
        let stats = ExploreStats {
            episode_index: index,
            r_win_average: history.recent_win_ratio(config.k),
            epsilon,
        };
        let mut state = env.reset();
        let mut prev_reward = env.reward_at(state.agent);
        let mut state_vec = env.encode_state(state.agent);
        let mut rewards = Vec::new();
        let mut moves = Vec::new();
        let mut kind_counts = [0usize; 3];
        let mut sync_events = 0;

        while state.outcome == Outcome::Running {
            let Some(choice) = choose_action(
                &net,
                &env,
                &state,
                config.strategy,
                &stats,
                config,
                &mut rng,
                prev_reward,
            ) else {
                break;
            };
            let from = state.agent;
            let (reward, terminal) = env.apply(&mut state, choice.action);
            let next_vec = env.encode_state(state.agent);
            buffer.push(Experience {
                state_vec: std::mem::replace(&mut state_vec, next_vec.clone()),
                action: choice.action.0,
                reward,
                next_state_vec: next_vec,
                terminal,
                next_wall_mask: env.wall_mask(state.agent),
            });

            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng).expect("buffer warmed up");
                net.train_step(&mut opt, &batch, &target, config.discount)
                    .expect("replayed states match network input");
            }

            steps_since_update += 1;
            if decide(&history.sync_stats(steps_since_update, config), config).update {
                target = net.clone_into_target();
                steps_since_update = 0;
                sync_events += 1;
            }

            action_counts[scenario.index(from)][choice.action.0][choice.kind.index()] += 1;
            kind_counts[choice.kind.index()] += 1;
            moves.push(StepLog { from, action: choice.action, kind: choice.kind, reward });
            rewards.push(reward);
            prev_reward = reward;
        }

        history.record(state.outcome, state.steps_taken);
        let record = EpisodeRecord {
            index,
            outcome: state.outcome,
            steps: state.steps_taken,
            cumulative_reward: rewards.iter().sum(),
            discounted_return: discounted_return(&rewards, config.discount),
            epsilon,
            kind_counts,
            sync_events,
            path: state.path,
            moves,
        };
        on_episode(&record);
        episodes.push(record);
    }

    TrainingRun {
        scenario: scenario.clone(),
        config: config.clone(),
        seed: config.seed,
        episodes,
        net,
        target,
        action_counts,
    }
}

/// Result of following the network greedily from the entrance.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub cells: Vec<Cell>,
    pub rewards: Vec<f64>,
    pub outcome: Outcome,
}

/// Pure exploitation rollout: always the best-valued valid move, lowest
/// index on ties.
pub fn greedy_rollout(net: &QNetwork, scenario: &Scenario) -> Rollout {
    let env = GridEnv::new(scenario.clone());
    let mut state = env.reset();
    let mut rewards = Vec::new();
    while state.outcome == Outcome::Running {
        let valid = env.valid_actions(&state);
        let q = net.forward(&env.encode_state(state.agent)).expect("network matches scenario");
        let Some(action) = argmax_over(&q, &valid) else { break };
        let (reward, _) = env.apply(&mut state, action);
        rewards.push(reward);
    }
    Rollout { cells: state.path, rewards, outcome: state.outcome }
}
