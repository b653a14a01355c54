use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use rand::Rng as _;
use radpath::analysis::{action_kind_histogram, convergence_series, density_path, visit_density, DEFAULT_WINDOW};
use radpath::env::Outcome;
use radpath::field::reward_field;
use radpath::frechet::discrete_frechet;
use radpath::nn::QNetwork;
use radpath::oracle::{ground_truth, GridPath};
use radpath::report::{
    action_kinds_csv, convergence_csv, density_csv, episodes_csv, read_episodes, trajectories_csv,
    PathDocument,
};
use radpath::scenario::{builtin, builtin_names, parse_scenario, to_toml, MAX_SEED};
use radpath::trainer::{greedy_rollout, late_average, train_with, EpisodeRecord};
use radpath::Experiment;
use serde::Serialize;

use crate::manifest::{sha256_hex, write_artifact, Artifact, RunManifest};
use crate::{ScenarioArgs, TrainArgs};

const DEFAULT_SCENARIO: &str = "case_i";
const LATE_FRACTION: f64 = 0.1;

fn load_experiment(args: &ScenarioArgs) -> Result<Experiment> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()));
    }
    let name = args.scenario.as_deref().unwrap_or(DEFAULT_SCENARIO);
    builtin(name).ok_or_else(|| {
        anyhow!(
            "unknown scenario '{name}', expected one of: {}",
            builtin_names().collect::<Vec<_>>().join(", ")
        )
    })
}

/// Summary printed by `train` and `eval`.
#[derive(Debug, Serialize)]
struct Summary {
    episodes: usize,
    wins: usize,
    win_ratio: f64,
    late_average_return: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy_outcome: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy_frechet_to_oracle: Option<f64>,
}

/// Writes the artifacts derived from episode records (and, when given, the
/// trained network). Shared by `train` and `eval` so both produce the same bytes.
fn write_analysis(
    dir: &Path,
    exp: &Experiment,
    episodes: &[EpisodeRecord],
    net: Option<&QNetwork>,
) -> Result<(Vec<Artifact>, Summary)> {
    let sc = &exp.scenario;
    let discount = exp.training.discount;
    let mut artifacts = Vec::new();

    let density = visit_density(episodes, sc);
    artifacts.push(write_artifact(dir, "density.csv", &density_csv(&density))?);
    let series = convergence_series(episodes, DEFAULT_WINDOW);
    artifacts.push(write_artifact(dir, "convergence.csv", &convergence_csv(&series))?);
    let hist = action_kind_histogram(episodes, sc);
    artifacts.push(write_artifact(dir, "action_kinds.csv", &action_kinds_csv(&hist, sc.width))?);

    let oracle = ground_truth(sc, discount);
    let oracle_doc = PathDocument::from_path(&oracle, Some(Outcome::Win));
    artifacts.push(write_artifact(dir, "oracle_path.json", &oracle_doc.to_json())?);

    let density_file = dir.join("density_path.json");
    if density_file.exists() {
        fs::remove_file(&density_file)?;
    }
    match density_path(&density, sc) {
        Ok(cells) => {
            let path = GridPath::new(cells, sc, discount)?;
            let doc = PathDocument::from_path(&path, Some(Outcome::Win));
            artifacts.push(write_artifact(dir, "density_path.json", &doc.to_json())?);
        }
        Err(e) => eprintln!("warning: density path extraction failed: {e}"),
    }

    let mut greedy_outcome = None;
    let mut greedy_frechet = None;
    if let Some(net) = net {
        let rollout = greedy_rollout(net, sc);
        let path = GridPath::new(rollout.cells.clone(), sc, discount)?;
        let doc = PathDocument::from_path(&path, Some(rollout.outcome));
        artifacts.push(write_artifact(dir, "greedy_path.json", &doc.to_json())?);
        greedy_outcome = Some(rollout.outcome.to_string());
        greedy_frechet = Some(discrete_frechet(&rollout.cells, &oracle.cells)?);
    }

    let wins = episodes.iter().filter(|e| e.outcome == Outcome::Win).count();
    let summary = Summary {
        episodes: episodes.len(),
        wins,
        win_ratio: if episodes.is_empty() { 0.0 } else { wins as f64 / episodes.len() as f64 },
        late_average_return: late_average(episodes, LATE_FRACTION),
        greedy_outcome,
        greedy_frechet_to_oracle: greedy_frechet,
    };
    Ok((artifacts, summary))
}

pub fn train(args: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let mut exp = load_experiment(&args.source)?;
    let (seed, seed_source) = match args.seed {
        Some(s) => (s, "flag"),
        None if exp.seed_specified => (exp.training.seed, "config"),
        None => (rand::rng().random_range(0..=MAX_SEED), "random"),
    };
    exp.training.seed = seed;
    exp.seed_specified = true;
    if let Some(s) = args.strategy {
        exp.training.strategy = s;
    }
    if let Some(s) = args.sync {
        exp.training.sync_mode = s;
    }
    if let Some(n) = args.episodes {
        exp.training.episodes = n;
    }
    exp.training.validate().context("invalid training settings")?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let config_text = to_toml(&exp);
    let mut artifacts = vec![write_artifact(dir, "config.toml", &config_text)?];

    let total = exp.training.episodes;
    let run = train_with(&exp.scenario, &exp.training, |e| {
        if (e.index + 1) % 500 == 0 {
            eprintln!("episode {}/{total}", e.index + 1);
        }
    });

    artifacts.push(write_artifact(dir, "episodes.csv", &episodes_csv(&run.episodes))?);
    artifacts.push(write_artifact(dir, "trajectories.csv", &trajectories_csv(&run.episodes))?);
    artifacts.push(write_artifact(dir, "weights.json", &run.net.save_weights())?);
    let (more, summary) = write_analysis(dir, &exp, &run.episodes, Some(&run.net))?;
    artifacts.extend(more);

    let manifest = RunManifest {
        command_line: std::env::args().collect(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed,
        seed_source,
        artifacts,
        duration_seconds: started.elapsed().as_secs_f64(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    manifest.write_atomic(dir)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

pub fn oracle(args: &ScenarioArgs) -> Result<()> {
    let exp = load_experiment(args)?;
    let path = ground_truth(&exp.scenario, exp.training.discount);
    print!("{}", PathDocument::from_path(&path, Some(Outcome::Win)).to_json());
    Ok(())
}

pub fn field(args: &ScenarioArgs) -> Result<()> {
    let exp = load_experiment(args)?;
    print!("{}", reward_field(&exp.scenario).to_csv());
    Ok(())
}

fn read_path(path: &Path) -> Result<PathDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PathDocument::from_json(&text).with_context(|| format!("invalid path document {}", path.display()))
}

pub fn compare(a: &Path, b: &Path) -> Result<()> {
    let (p, q) = (read_path(a)?.cells(), read_path(b)?.cells());
    let d = discrete_frechet(&p, &q).with_context(|| format!("comparing {} and {}", a.display(), b.display()))?;
    println!("{d:?}");
    Ok(())
}

pub fn eval(run_dir: &Path, out_dir: Option<&Path>) -> Result<()> {
    let read = |name: &str| {
        let path = run_dir.join(name);
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    };
    let exp = parse_scenario(&read("config.toml")?).context("invalid config.toml")?;
    let episodes = read_episodes(&read("episodes.csv")?, &read("trajectories.csv")?, &exp.scenario)?;
    let net = match read("weights.json") {
        Ok(text) => {
            let net = QNetwork::load_weights(&text).context("invalid weights.json")?;
            if net.input_dim() != exp.scenario.state_dim() {
                bail!(
                    "weights.json expects {} inputs but the scenario encodes {}",
                    net.input_dim(),
                    exp.scenario.state_dim()
                );
            }
            Some(net)
        }
        Err(_) => None,
    };
    let dir = out_dir.unwrap_or(run_dir);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (_, summary) = write_analysis(dir, &exp, &episodes, net.as_ref())?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}
