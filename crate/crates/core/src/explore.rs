//! Epsilon-greedy action selection and its two restricted variants, which
//! turn a proposed random move into the greedy one when the greedy move's
//! destination pays more than the current cell.

use std::fmt;

use rand::Rng as _;

use crate::env::{Action, EpisodeState, GridEnv};
use crate::nn::{argmax_over, QNetwork};
use crate::scenario::{Strategy, TrainConfig};
use crate::Rng;

/// Where an executed action came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    /// Uniform random move ("r").
    Random,
    /// Greedy move because the draw exceeded epsilon ("nr").
    Greedy,
    /// Greedy move substituted for a random one ("f/p").
    Converted,
}

impl ActionKind {
    pub const ALL: [ActionKind; 3] = [ActionKind::Random, ActionKind::Greedy, ActionKind::Converted];

    pub fn label(self) -> &'static str {
        match self {
            ActionKind::Random => "random",
            ActionKind::Greedy => "greedy",
            ActionKind::Converted => "converted",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<ActionKind> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionChoice {
    pub action: Action,
    pub kind: ActionKind,
}

/// Training progress visible to the action selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploreStats {
    /// 0-based index of the current episode.
    pub episode_index: usize,
    /// Fraction of wins among the last `k` finished episodes.
    pub r_win_average: f64,
    pub epsilon: f64,
}

/// `max(epsilon_min, epsilon_start * epsilon_decay^episode)`.
pub fn epsilon_at(episode: usize, config: &TrainConfig) -> f64 {
    let decayed = config.epsilon_start * config.epsilon_decay.powf(episode as f64);
    decayed.max(config.epsilon_min)
}

/// Whether a proposed random move is replaced by the greedy one: the greedy
/// move must lead to a cell rewarding more than the current cell.
#[inline]
pub fn prefers_greedy(greedy_target_reward: f64, prev_reward: f64) -> bool {
    greedy_target_reward > prev_reward
}

/// Picks the next action. Returns `None` when no valid move exists.
///
/// `prev_reward` is the reward of the agent's current cell.
#[allow(clippy::too_many_arguments)]
pub fn choose_action(
    net: &QNetwork,
    env: &GridEnv,
    state: &EpisodeState,
    strategy: Strategy,
    stats: &ExploreStats,
    config: &TrainConfig,
    rng: &mut Rng,
    prev_reward: f64,
) -> Option<ActionChoice> {
    let valid = env.valid_actions(state);
    if valid.is_empty() {
        return None;
    }
    let greedy = || {
        let q = net.forward(&env.encode_state(state.agent)).expect("state matches network input");
        argmax_over(&q, &valid).expect("non-empty action list")
    };
    let u: f64 = rng.random();
    if u >= stats.epsilon {
        return Some(ActionChoice { action: greedy(), kind: ActionKind::Greedy });
    }

    let gate_open = match strategy {
        Strategy::Vanilla => false,
        Strategy::Restricted => true,
        Strategy::Partial => {
            stats.episode_index > config.n_ep_min && stats.r_win_average > config.r_win_min
        }
    };
    if gate_open {
        let best = greedy();
        let target = best.apply(state.agent, env.scenario()).expect("valid action stays on grid");
        if prefers_greedy(env.reward_at(target), prev_reward) {
            return Some(ActionChoice { action: best, kind: ActionKind::Converted });
        }
    }
    let action = valid[rng.random_range(0..valid.len())];
    Some(ActionChoice { action, kind: ActionKind::Random })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Cell, Scenario};
    use crate::seeded_rng;

    #[test]
    fn epsilon_schedule() {
        let c = TrainConfig::default();
        assert_eq!(epsilon_at(0, &c), 1.0);
        assert_eq!(epsilon_at(1_000_000, &c), 0.05);
        // 0.999^693 = exp(693 ln 0.999) = 0.49998...
        let e = epsilon_at(693, &c);
        assert!((e - 0.5).abs() < 1e-3, "{e}");
        assert!(epsilon_at(10, &c) > epsilon_at(11, &c));
    }

    /// 1x3 strip: start in the middle, rewards differ left and right.
    fn strip() -> GridEnv {
        GridEnv::new(Scenario {
            width: 3,
            height: 1,
            start: Cell::new(1, 0),
            exit: Cell::new(2, 0),
            ..Scenario::default()
        })
    }

    /// Net whose output is fixed by the biases alone.
    fn biased_net(dim: usize, favour: usize) -> QNetwork {
        let mut net = QNetwork::with_sizes(&[dim, 2, 2, 8], 0);
        net.layers.iter_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w = 0.0));
        net.layers[2].bias[favour] = 1.0;
        net
    }

    fn stats(epsilon: f64, episode_index: usize) -> ExploreStats {
        ExploreStats { episode_index, r_win_average: 1.0, epsilon }
    }

    #[test]
    fn above_epsilon_is_greedy_for_all_strategies() {
        let env = strip();
        let net = biased_net(3, 2);
        for strategy in [Strategy::Vanilla, Strategy::Restricted, Strategy::Partial] {
            let choice = choose_action(
                &net,
                &env,
                &env.reset(),
                strategy,
                &stats(0.0, 500),
                &TrainConfig::default(),
                &mut seeded_rng(0),
                0.0,
            )
            .unwrap();
            assert_eq!(choice, ActionChoice { action: Action(2), kind: ActionKind::Greedy });
        }
    }

    #[test]
    fn restricted_converts_when_greedy_target_pays_more() {
        let env = strip();
        // Greedy action is "right" (3), entering the exit with reward 1.0.
        let net = biased_net(3, 3);
        let prev = 0.2;
        let choice = choose_action(
            &net,
            &env,
            &env.reset(),
            Strategy::Restricted,
            &stats(1.0, 0),
            &TrainConfig::default(),
            &mut seeded_rng(0),
            prev,
        )
        .unwrap();
        assert_eq!(choice, ActionChoice { action: Action(3), kind: ActionKind::Converted });
    }

    #[test]
    fn restricted_stays_random_when_greedy_target_pays_less() {
        let env = strip();
        let net = biased_net(3, 3);
        for seed in 0..20 {
            let choice = choose_action(
                &net,
                &env,
                &env.reset(),
                Strategy::Restricted,
                &stats(1.0, 0),
                &TrainConfig::default(),
                &mut seeded_rng(seed),
                5.0,
            )
            .unwrap();
            assert_eq!(choice.kind, ActionKind::Random);
        }
    }

    #[test]
    fn partial_gate_closed_early() {
        let env = strip();
        let net = biased_net(3, 3);
        let config = TrainConfig { n_ep_min: 100, ..TrainConfig::default() };
        for seed in 0..20 {
            let choice = choose_action(
                &net,
                &env,
                &env.reset(),
                Strategy::Partial,
                &stats(1.0, 5),
                &config,
                &mut seeded_rng(seed),
                -10.0,
            )
            .unwrap();
            assert_eq!(choice.kind, ActionKind::Random);
        }
        // Open once both the episode count and recent win ratio clear the bar.
        let choice = choose_action(
            &net,
            &env,
            &env.reset(),
            Strategy::Partial,
            &stats(1.0, 101),
            &config,
            &mut seeded_rng(0),
            -10.0,
        )
        .unwrap();
        assert_eq!(choice.kind, ActionKind::Converted);
        let low_wins = ExploreStats { r_win_average: 0.3, ..stats(1.0, 101) };
        let choice = choose_action(
            &net,
            &env,
            &env.reset(),
            Strategy::Partial,
            &low_wins,
            &config,
            &mut seeded_rng(0),
            -10.0,
        )
        .unwrap();
        assert_eq!(choice.kind, ActionKind::Random);
    }

    #[test]
    fn vanilla_never_converts() {
        let env = strip();
        let net = biased_net(3, 3);
        for seed in 0..50 {
            let choice = choose_action(
                &net,
                &env,
                &env.reset(),
                Strategy::Vanilla,
                &stats(1.0, 1000),
                &TrainConfig::default(),
                &mut seeded_rng(seed),
                -10.0,
            )
            .unwrap();
            assert_eq!(choice.kind, ActionKind::Random);
        }
    }

    #[test]
    fn no_valid_actions() {
        let env = strip();
        let mut st = env.reset();
        env.apply(&mut st, Action(2));
        let net = biased_net(3, 3);
        assert!(choose_action(
            &net,
            &env,
            &st,
            Strategy::Vanilla,
            &stats(0.5, 0),
            &TrainConfig::default(),
            &mut seeded_rng(0),
            0.0
        )
        .is_none());
    }
}
