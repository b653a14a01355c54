use proptest::prelude::*;
use radpath::env::Experience;
use radpath::nn::{max_relative_error, numeric_gradient, randomize, Adam, QNetwork};
use radpath::seeded_rng;
use rand::Rng as _;

struct Batch {
    states: Vec<Vec<f64>>,
    actions: Vec<usize>,
    targets: Vec<f64>,
}

fn random_batch(input: usize, n: usize, seed: u64) -> Batch {
    let mut rng = seeded_rng(seed);
    Batch {
        states: (0..n).map(|_| (0..input).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        actions: (0..n).map(|_| rng.random_range(0..8)).collect(),
        targets: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

impl Batch {
    fn refs(&self) -> Vec<&[f64]> {
        self.states.iter().map(|s| s.as_slice()).collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn backprop_matches_finite_differences(input in 4usize..=12, h1 in 2usize..10, h2 in 2usize..10,
                                           n in 1usize..5, seed in any::<u64>()) {
        let mut net = QNetwork::with_sizes(&[input, h1, h2, 8], seed);
        randomize(&mut net, 0.8, seed ^ 1);
        let b = random_batch(input, n, seed ^ 2);
        let (_, analytic) = net.td_loss_and_grad(&b.refs(), &b.actions, &b.targets).unwrap();
        let numeric = numeric_gradient(&net, &b.refs(), &b.actions, &b.targets, 1e-5).unwrap();
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        prop_assert!(err < 1e-4, "max relative error {}", err);
    }

    #[test]
    fn weights_round_trip(input in 1usize..20, seed in any::<u64>()) {
        let mut net = QNetwork::with_sizes(&[input, 7, 5, 8], seed);
        randomize(&mut net, 3.0, seed);
        let back = QNetwork::load_weights(&net.save_weights()).unwrap();
        prop_assert_eq!(back, net);
    }
}

fn experience(input: usize, rng: &mut radpath::Rng) -> Experience {
    let mut s = vec![0.0; input];
    s[rng.random_range(0..input)] = 1.0;
    let mut next = vec![0.0; input];
    next[rng.random_range(0..input)] = 1.0;
    Experience {
        state_vec: s,
        action: rng.random_range(0..8),
        reward: rng.random_range(-1.0..1.0),
        next_state_vec: next,
        terminal: rng.random_bool(0.2),
        next_wall_mask: rng.random_range(1..=255),
    }
}

#[test]
fn one_step_lowers_the_loss_on_most_batches() {
    let trials = 200;
    let mut lowered = 0;
    for t in 0..trials {
        let mut rng = seeded_rng(t);
        let input = rng.random_range(10..60);
        let mut net = QNetwork::new(input, t);
        let target = net.clone_into_target();
        let mut opt = Adam::new(&net, 1e-3);
        let batch: Vec<Experience> = (0..30).map(|_| experience(input, &mut rng)).collect();
        let refs: Vec<&Experience> = batch.iter().collect();
        let before = net.train_step(&mut opt, &refs, &target, 0.9).unwrap();
        let targets = QNetwork::bellman_targets(&target, &refs, 0.9).unwrap();
        let states: Vec<&[f64]> = batch.iter().map(|e| e.state_vec.as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|e| e.action).collect();
        let (after, _) = net.td_loss_and_grad(&states, &actions, &targets).unwrap();
        lowered += (after < before) as usize;
    }
    assert!(lowered as f64 >= 0.95 * trials as f64, "{lowered}/{trials}");
}

#[test]
fn repeated_steps_fit_a_fixed_batch() {
    let mut rng = seeded_rng(5);
    let mut net = QNetwork::new(25, 5);
    let target = net.clone_into_target();
    let mut opt = Adam::new(&net, 1e-3);
    // Distinct states, so a perfect fit exists.
    let batch: Vec<Experience> = (0..20)
        .map(|i| {
            let mut e = experience(25, &mut rng);
            e.state_vec = (0..25).map(|j| (j == i) as u8 as f64).collect();
            e
        })
        .collect();
    let refs: Vec<&Experience> = batch.iter().collect();
    let first = net.train_step(&mut opt, &refs, &target, 0.9).unwrap();
    let mut last = first;
    for _ in 0..300 {
        last = net.train_step(&mut opt, &refs, &target, 0.9).unwrap();
    }
    assert!(last < 0.01 * first, "{first} -> {last}");
}

#[test]
fn adam_first_step_moves_each_parameter_by_learning_rate() {
    let mut net = QNetwork::with_sizes(&[3, 4, 4, 8], 9);
    randomize(&mut net, 0.5, 9);
    let before = net.clone();
    let b = random_batch(3, 4, 11);
    let (_, grads) = net.td_loss_and_grad(&b.refs(), &b.actions, &b.targets).unwrap();
    let mut opt = Adam::new(&net, 0.01);
    opt.step(&mut net, &grads);
    for ((l0, l1), g) in before.layers.iter().zip(&net.layers).zip(&grads.layers) {
        let params = l0.weights.iter().chain(&l0.bias).zip(l1.weights.iter().chain(&l1.bias));
        for ((p0, p1), g) in params.zip(g.weights.iter().chain(&g.bias)) {
            // Bias-corrected first step is lr * g / (|g| + eps).
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((p1 - p0 - expected).abs() < 1e-12);
        }
    }
}
