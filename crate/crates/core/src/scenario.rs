//! Problem description: grid geometry, radiation sources, reward constants
//! and training hyperparameters, plus the TOML document format they are
//! read from.
//!
//! Coordinates are `(x, y)` with `y` growing upward, so the default entrance
//! `(0, 9)` sits in the top-left corner and the exit `(9, 0)` in the
//! bottom-right.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// A grid cell, `x` is the column and `y` the row (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Squared Euclidean distance in cell units.
    pub fn dist2(&self, other: &Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Cell) -> f64 {
        self.dist2(other).sqrt()
    }

    /// True when the cells differ and touch, including diagonally.
    pub fn is_adjacent(&self, other: &Cell) -> bool {
        self != other && self.x.abs_diff(other.x) <= 1 && self.y.abs_diff(other.y) <= 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A point radiation source with strength `S` in arbitrary activity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub position: Cell,
    pub strength: f64,
}

/// Immutable description of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub exit: Cell,
    pub sources: Vec<Source>,
    /// Specific gamma-ray constant.
    pub gamma_const: f64,
    /// Weight of the exit-proximity term of the reward.
    pub urgency: f64,
    pub max_steps: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            start: Cell::new(0, 9),
            exit: Cell::new(9, 0),
            sources: Vec::new(),
            gamma_const: 1.0,
            urgency: 1.0,
            max_steps: 30,
        }
    }
}

impl Scenario {
    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Row-major index, `y * width + x`.
    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Length of the encoded state vector: one agent plane plus one plane per source.
    pub fn state_dim(&self) -> usize {
        (self.sources.len() + 1) * self.num_cells()
    }

    /// Iterates all cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.num_cells()).map(|i| self.cell_at(i))
    }

    pub fn with_sources(mut self, sources: Vec<Source>) -> Self {
        self.sources = sources;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width == 0 {
            return Err(ConfigError::invalid("grid.width", "must be positive"));
        }
        if self.height == 0 {
            return Err(ConfigError::invalid("grid.height", "must be positive"));
        }
        if !self.contains(self.start) {
            return Err(ConfigError::invalid(
                "start",
                format!("{} lies outside the {}x{} grid", self.start, self.width, self.height),
            ));
        }
        if !self.contains(self.exit) {
            return Err(ConfigError::invalid(
                "exit",
                format!("{} lies outside the {}x{} grid", self.exit, self.width, self.height),
            ));
        }
        if self.start == self.exit {
            return Err(ConfigError::invalid("exit", "start and exit must differ"));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !self.contains(s.position) {
                return Err(ConfigError::invalid(
                    format!("sources[{i}].position"),
                    format!("{} lies outside the {}x{} grid", s.position, self.width, self.height),
                ));
            }
            if !(s.strength > 0.0 && s.strength.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("sources[{i}].strength"),
                    format!("must be a positive finite number, got {}", s.strength),
                ));
            }
        }
        if !(self.gamma_const > 0.0 && self.gamma_const.is_finite()) {
            return Err(ConfigError::invalid("constants.gamma", "must be positive"));
        }
        if !(self.urgency > 0.0 && self.urgency.is_finite()) {
            return Err(ConfigError::invalid("constants.urgency", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(ConfigError::invalid("constants.max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// How random actions proposed by epsilon-greedy are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Plain epsilon-greedy.
    Vanilla,
    /// Random action becomes greedy when the greedy target cell pays more than the current one.
    Restricted,
    /// As `Restricted`, gated on episode count and recent win ratio.
    Partial,
}

/// Target-network synchronization policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    Fixed,
    Adaptive,
}

macro_rules! keyword_enum {
    ($ty:ty, $($variant:ident => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown value '{other}', expected one of: {}",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(Strategy, Vanilla => "vanilla", Restricted => "restricted", Partial => "partial");
keyword_enum!(SyncMode, Fixed => "fixed", Adaptive => "adaptive");

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    /// Base number of environment steps between target-network syncs.
    pub base_update_frequency: usize,
    pub strategy: Strategy,
    pub sync_mode: SyncMode,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    /// Episodes to wait before adaptive exploration or syncing kick in.
    pub n_ep_min: usize,
    /// Wins required before the improvement-based fast sync is considered.
    pub n_win_min: usize,
    /// Slow-update multiplier, greater than one.
    pub uf: f64,
    /// Most recent episodes excluded from the long-run step average.
    pub m: usize,
    /// Window for recent win ratio and recent winning step average.
    pub k: usize,
    /// Recent win ratio required by the partial strategy.
    pub r_win_min: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            discount: 0.9,
            batch_size: 30,
            buffer_capacity: 2000,
            episodes: 5000,
            base_update_frequency: 600,
            strategy: Strategy::Restricted,
            sync_mode: SyncMode::Adaptive,
            epsilon_start: 1.0,
            epsilon_min: 0.05,
            epsilon_decay: 0.999,
            n_ep_min: 100,
            n_win_min: 20,
            uf: 2.0,
            m: 2,
            k: 10,
            r_win_min: 0.3,
            seed: 0,
        }
    }
}

/// Largest seed a config document can hold (TOML integers are signed).
pub const MAX_SEED: u64 = i64::MAX as u64;

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.learning_rate) {
            return Err(ConfigError::invalid("training.learning_rate", "must be positive"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(ConfigError::invalid("training.discount", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::invalid("training.batch_size", "must be at least 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(ConfigError::invalid(
                "training.buffer_capacity",
                "must be at least batch_size",
            ));
        }
        if self.base_update_frequency == 0 {
            return Err(ConfigError::invalid(
                "training.base_update_frequency",
                "must be at least 1",
            ));
        }
        for (name, v) in [
            ("training.epsilon_start", self.epsilon_start),
            ("training.epsilon_min", self.epsilon_min),
            ("training.r_win_min", self.r_win_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(name, "must lie in [0, 1]"));
            }
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(ConfigError::invalid("training.epsilon_decay", "must lie in (0, 1]"));
        }
        if !(self.uf > 1.0 && self.uf.is_finite()) {
            return Err(ConfigError::invalid("training.uf", "must be greater than 1"));
        }
        if self.k == 0 {
            return Err(ConfigError::invalid("training.k", "must be at least 1"));
        }
        if self.seed > MAX_SEED {
            return Err(ConfigError::invalid("training.seed", format!("must be at most {MAX_SEED}")));
        }
        Ok(())
    }
}

/// A scenario together with the training setup it ships with.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: Scenario,
    pub training: TrainConfig,
    /// Whether the document pinned `training.seed` explicitly.
    pub seed_specified: bool,
}

// Raw document layout. Every field is optional so that defaults can be
// applied after parsing.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<CellDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exit: Option<CellDoc>,
    #[serde(default)]
    sources: Vec<SourceDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<ConstantsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    training: Option<toml::Table>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    width: Option<i64>,
    height: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    x: i64,
    y: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceDoc {
    x: i64,
    y: i64,
    strength: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsDoc {
    gamma: Option<f64>,
    urgency: Option<f64>,
    max_steps: Option<i64>,
}

fn non_negative(path: &str, v: i64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| ConfigError::invalid(path, format!("must be non-negative, got {v}")))
}

fn cell_from_doc(path: &str, doc: &CellDoc) -> Result<Cell, ConfigError> {
    Ok(Cell::new(
        non_negative(&format!("{path}.x"), doc.x)?,
        non_negative(&format!("{path}.y"), doc.y)?,
    ))
}

/// Parses and validates a TOML experiment document, filling omitted fields
/// with their defaults.
pub fn parse_scenario(text: &str) -> Result<Experiment, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut scenario = Scenario::default();

    if let Some(grid) = &doc.grid {
        if let Some(w) = grid.width {
            scenario.width = non_negative("grid.width", w)?;
        }
        if let Some(h) = grid.height {
            scenario.height = non_negative("grid.height", h)?;
        }
    }
    if let Some(c) = &doc.start {
        scenario.start = cell_from_doc("start", c)?;
    }
    if let Some(c) = &doc.exit {
        scenario.exit = cell_from_doc("exit", c)?;
    }
    for (i, s) in doc.sources.iter().enumerate() {
        let path = format!("sources[{i}].position");
        let position = Cell::new(non_negative(&path, s.x)?, non_negative(&path, s.y)?);
        scenario.sources.push(Source { position, strength: s.strength });
    }
    if let Some(c) = &doc.constants {
        if let Some(g) = c.gamma {
            scenario.gamma_const = g;
        }
        if let Some(n) = c.urgency {
            scenario.urgency = n;
        }
        if let Some(m) = c.max_steps {
            scenario.max_steps = non_negative("constants.max_steps", m)?;
        }
    }
    scenario.validate()?;

    let seed_specified = doc.training.as_ref().is_some_and(|t| t.contains_key("seed"));
    let training: TrainConfig = match doc.training {
        Some(table) => table.try_into().map_err(|e: toml::de::Error| {
            ConfigError::invalid("training", e.to_string().trim().to_string())
        })?,
        None => TrainConfig::default(),
    };
    training.validate()?;

    Ok(Experiment { scenario, training, seed_specified })
}

/// Serializes an experiment back into the document format accepted by
/// [`parse_scenario`]. All fields are written explicitly.
pub fn to_toml(exp: &Experiment) -> String {
    let s = &exp.scenario;
    let doc = Document {
        grid: Some(GridDoc { width: Some(s.width as i64), height: Some(s.height as i64) }),
        start: Some(CellDoc { x: s.start.x as i64, y: s.start.y as i64 }),
        exit: Some(CellDoc { x: s.exit.x as i64, y: s.exit.y as i64 }),
        sources: s
            .sources
            .iter()
            .map(|src| SourceDoc {
                x: src.position.x as i64,
                y: src.position.y as i64,
                strength: src.strength,
            })
            .collect(),
        constants: Some(ConstantsDoc {
            gamma: Some(s.gamma_const),
            urgency: Some(s.urgency),
            max_steps: Some(s.max_steps as i64),
        }),
        training: Some(toml::Table::try_from(&exp.training).expect("training config is a table")),
    };
    toml::to_string(&doc).expect("experiment document always serializes")
}

const BUILTINS: &[(&str, &str)] = &[
    ("case_i", include_str!("../scenarios/case_i.toml")),
    ("case_ii", include_str!("../scenarios/case_ii.toml")),
    ("case_iii", include_str!("../scenarios/case_iii.toml")),
    ("case_iv", include_str!("../scenarios/case_iv.toml")),
    ("case_v", include_str!("../scenarios/case_v.toml")),
    ("case_v1", include_str!("../scenarios/case_v1.toml")),
    ("case_v2", include_str!("../scenarios/case_v2.toml")),
    ("case_v3", include_str!("../scenarios/case_v3.toml")),
];

/// Names of the bundled scenarios.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

/// Raw TOML text of a bundled scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses one bundled scenario by name.
pub fn builtin(name: &str) -> Option<Experiment> {
    builtin_source(name).map(|text| {
        parse_scenario(text).unwrap_or_else(|e| panic!("builtin scenario {name} is invalid: {e}"))
    })
}

/// All bundled scenarios, keyed by name.
pub fn builtin_scenarios() -> BTreeMap<&'static str, Experiment> {
    builtin_names().map(|name| (name, builtin(name).unwrap())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE_I: &str = r#"
[[sources]]
x = 2
y = 2
strength = 1.0

[[sources]]
x = 7
y = 7
strength = 1.0
"#;

    #[test]
    fn case_i_document_applies_defaults() {
        let exp = parse_scenario(CASE_I).unwrap();
        let s = &exp.scenario;
        assert_eq!((s.width, s.height), (10, 10));
        assert_eq!(s.start, Cell::new(0, 9));
        assert_eq!(s.exit, Cell::new(9, 0));
        assert_eq!(s.gamma_const, 1.0);
        assert_eq!(s.urgency, 1.0);
        assert_eq!(s.max_steps, 30);
        assert_eq!(s.sources.len(), 2);
        assert_eq!(s.sources[0].position, Cell::new(2, 2));
        assert_eq!(s.sources[1].position, Cell::new(7, 7));
        assert_eq!(exp.training, TrainConfig::default());
        assert!(!exp.seed_specified);
    }

    #[test]
    fn training_defaults() {
        let t = TrainConfig::default();
        assert_eq!(t.learning_rate, 0.001);
        assert_eq!(t.discount, 0.9);
        assert_eq!(t.batch_size, 30);
        assert_eq!(t.buffer_capacity, 2000);
        assert_eq!(t.episodes, 5000);
        assert_eq!(t.base_update_frequency, 600);
        assert_eq!(t.k, 10);
    }

    #[test]
    fn out_of_grid_source_names_field() {
        let err = parse_scenario("[[sources]]\nx = 12\ny = 3\nstrength = 1.0\n").unwrap_err();
        match err {
            ConfigError::Invalid { path, .. } => assert_eq!(path, "sources[0].position"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn start_equal_exit_rejected() {
        let err = parse_scenario("[start]\nx = 9\ny = 0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "exit"));
    }

    #[test]
    fn non_positive_strength_rejected() {
        let text = "[[sources]]\nx = 1\ny = 1\nstrength = 1.0\n[[sources]]\nx = 1\ny = 2\nstrength = 0.0\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "sources[1].strength"));
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(parse_scenario("[grid\nwidth = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_scenario("[grid]\ndepth = 3\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn unknown_training_key_rejected() {
        let err = parse_scenario("[training]\nlearnin_rate = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "training"));
    }

    #[test]
    fn training_overrides_and_seed() {
        let exp = parse_scenario("[training]\nstrategy = \"partial\"\nsync_mode = \"fixed\"\nseed = 7\nm = 1\n").unwrap();
        assert_eq!(exp.training.strategy, Strategy::Partial);
        assert_eq!(exp.training.sync_mode, SyncMode::Fixed);
        assert_eq!(exp.training.seed, 7);
        assert_eq!(exp.training.m, 1);
        assert!(exp.seed_specified);
    }

    #[test]
    fn builtins_cover_named_cases() {
        let all = builtin_scenarios();
        for name in ["case_i", "case_ii", "case_v1", "case_v2", "case_v3"] {
            assert!(all.contains_key(name), "{name} missing");
        }
        let c1 = &all["case_i"].scenario;
        assert_eq!(c1.sources.len(), 2);
        assert_eq!(c1.sources[0].position, Cell::new(2, 2));
        assert_eq!(c1.sources[1].position, Cell::new(7, 7));
        assert!(c1.sources.iter().all(|s| s.strength == 1.0));

        let c2 = &all["case_ii"].scenario;
        assert_eq!(c2.sources[0].position, Cell::new(2, 2));
        assert_eq!(c2.sources[1].position, Cell::new(4, 4));

        let v1 = &all["case_v1"].scenario;
        let v2 = &all["case_v2"].scenario;
        let v3 = &all["case_v3"].scenario;
        assert_eq!(v1.sources.len(), 3);
        assert!(v1.sources.iter().all(|s| s.strength == v1.sources[0].strength));
        assert_eq!(v2.sources[0].strength, 20.0 * v2.sources[2].strength);
        assert_eq!(v2.sources[1].strength, v2.sources[2].strength);
        assert_eq!(v3.sources[0].strength, 20.0 * v3.sources[2].strength);
        assert_eq!(v3.sources[1].strength, 20.0 * v3.sources[2].strength);
        for (a, b) in v1.sources.iter().zip(&v2.sources).zip(&v3.sources).map(|((a, b), _)| (a, b)) {
            assert_eq!(a.position, b.position);
        }
        assert_eq!(all["case_v"].training.m, 1);
    }

    #[test]
    fn builtins_round_trip() {
        for (name, exp) in builtin_scenarios() {
            let again = parse_scenario(&to_toml(&exp)).unwrap();
            assert_eq!(again.scenario, exp.scenario, "{name}");
            assert_eq!(again.training, exp.training, "{name}");
        }
    }

    #[test]
    fn keyword_parsing() {
        assert_eq!("restricted".parse::<Strategy>().unwrap(), Strategy::Restricted);
        assert_eq!("adaptive".parse::<SyncMode>().unwrap(), SyncMode::Adaptive);
        assert!("greedy".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Partial.to_string(), "partial");
    }
}
