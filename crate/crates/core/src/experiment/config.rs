//! INI-style experiment configuration.
//!
//! ```text
//! [model]
//! kind = one_way
//! n = 100
//! [patterns]
//! edge_pp = V=2; opinions=++; edges=0-1
//! [run]
//! times = 1, 2
//! replications = 2000
//! [thresholds]
//! se_multiplier = 3
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Missing keys
//! take their defaults; unknown keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{OneWayParams, TwoWayParams};
use crate::patterns::{VoterPattern, MAX_PATTERN_VERTICES};

/// Invalid configuration, with the offending line when known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{field}: {message}", line.map_or(String::new(), |l| format!("line {l}, ")))]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: field.into(),
            message: message.into(),
        }
    }

    fn at(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            ..Self::new(field, message)
        }
    }
}

/// Model family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    OneWay(OneWayParams),
    TwoWay(TwoWayParams),
}

impl ModelConfig {
    pub fn n(&self) -> usize {
        match self {
            Self::OneWay(p) => p.n,
            Self::TwoWay(p) => p.n,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Self::OneWay(p) => p.horizon,
            Self::TwoWay(p) => p.horizon,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::OneWay(_) => "one_way",
            Self::TwoWay(_) => "two_way",
        }
    }
}

/// Replication, seeding and per-suite settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Checkpoint times, sorted, within the model horizon.
    pub times: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    /// Falls back to `VOTERDYN_WORKERS`, then 1.
    pub workers: Option<usize>,
    pub output: PathBuf,
    /// Replications of each small-system covariance target.
    pub c_replications: usize,
    pub tightness_n: usize,
    pub tightness_replications: usize,
    pub tightness_triples: usize,
    /// Triples are drawn from `[0, tightness_max_time]`.
    pub tightness_max_time: f64,
    /// One weight per (pattern, time) coordinate, pattern-major; all ones
    /// when absent.
    pub wick_weights: Option<Vec<f64>>,
    pub wick_max_order: u32,
    pub bootstrap_resamples: usize,
    /// Graph sizes of the two-way table.
    pub table_sizes: Vec<usize>,
    pub graphon_time: f64,
    pub graphon_grid: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            times: vec![1.0, 2.0],
            replications: 2000,
            seed: 1,
            workers: None,
            output: PathBuf::from("out"),
            c_replications: 20_000,
            tightness_n: 50,
            tightness_replications: 5000,
            tightness_triples: 10,
            tightness_max_time: 2.0,
            wick_weights: None,
            wick_max_order: 4,
            bootstrap_resamples: 200,
            table_sizes: vec![100, 200],
            graphon_time: 1.0,
            graphon_grid: 10,
        }
    }
}

/// Acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Agreement means a gap of at most this many (combined) standard errors.
    pub se_multiplier: f64,
    /// Minimum QQ correlation per coordinate.
    pub qq_min: f64,
    /// Graphon cells with fewer samples are skipped.
    pub min_cell_count: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            qq_min: 0.99,
            min_cell_count: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Named patterns in file order.
    pub patterns: Vec<(String, VoterPattern)>,
    pub run: RunConfig,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        use crate::patterns::Opinion::{Minus, Plus};
        Self {
            model: ModelConfig::OneWay(OneWayParams::default()),
            patterns: vec![
                ("edge_pp".into(), VoterPattern::edge(Plus, Plus)),
                ("edge_pm".into(), VoterPattern::edge(Plus, Minus)),
            ],
            run: RunConfig::default(),
            thresholds: Thresholds::default(),
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub replications: Option<usize>,
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn parse_value<T: FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| {
        ConfigError::at(
            e.line,
            format!("{}.{}", e.section, e.key),
            format!("cannot parse {:?}", e.value),
        )
    })
}

fn parse_list<T: FromStr>(e: &Entry) -> Result<Vec<T>, ConfigError> {
    e.value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|_| {
                ConfigError::at(
                    e.line,
                    format!("{}.{}", e.section, e.key),
                    format!("cannot parse list item {:?}", item.trim()),
                )
            })
        })
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = None::<String>;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "section", "missing closing bracket"))?
                .trim();
            if !["model", "patterns", "run", "thresholds"].contains(&name) {
                return Err(ConfigError::at(line, name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "entry", "expected `key = value`"))?;
        let section = section
            .clone()
            .ok_or_else(|| ConfigError::at(line, key.trim(), "entry outside any section"))?;
        let key = key.trim().to_string();
        if out.iter().any(|e: &Entry| e.section == section && e.key == key) {
            return Err(ConfigError::at(line, format!("{section}.{key}"), "duplicate key"));
        }
        out.push(Entry {
            line,
            section,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = entries(text)?;
        let kind = entries
            .iter()
            .find(|e| e.section == "model" && e.key == "kind")
            .map_or("one_way", |e| e.value.as_str());
        let mut model = match kind {
            "one_way" => ModelConfig::OneWay(OneWayParams::default()),
            "two_way" => ModelConfig::TwoWay(TwoWayParams::default()),
            other => {
                let line = entries.iter().find(|e| e.key == "kind").map_or(0, |e| e.line);
                return Err(ConfigError::at(line, "model.kind", format!("unknown model {other:?}")));
            }
        };
        let mut patterns = Vec::new();
        let mut run = RunConfig::default();
        let mut thresholds = Thresholds::default();
        for e in &entries {
            let field = format!("{}.{}", e.section, e.key);
            let kind = model.kind();
            let unknown = || ConfigError::at(e.line, field.clone(), format!("unknown key for {kind} model"));
            match (e.section.as_str(), e.key.as_str()) {
                ("model", "kind") => {}
                ("model", key) => match &mut model {
                    ModelConfig::OneWay(p) => match key {
                        "n" => p.n = parse_value(e)?,
                        "p0" => p.p0 = parse_value(e)?,
                        "gamma_mp" => p.gamma_mp = parse_value(e)?,
                        "gamma_pm" => p.gamma_pm = parse_value(e)?,
                        "pi_plus" => p.pi_plus = parse_value(e)?,
                        "pi_minus" => p.pi_minus = parse_value(e)?,
                        "q0" => p.q0 = parse_value(e)?,
                        "horizon" => p.horizon = parse_value(e)?,
                        _ => return Err(unknown()),
                    },
                    ModelConfig::TwoWay(p) => match key {
                        "n" => p.n = parse_value(e)?,
                        "p0" => p.p0 = parse_value(e)?,
                        "beta" => p.beta = parse_value(e)?,
                        "pi_plus" => p.pi_plus = parse_value(e)?,
                        "pi_minus" => p.pi_minus = parse_value(e)?,
                        "q0" => p.q0 = parse_value(e)?,
                        "horizon" => p.horizon = parse_value(e)?,
                        _ => return Err(unknown()),
                    },
                },
                ("patterns", name) => {
                    let h = e
                        .value
                        .parse::<VoterPattern>()
                        .map_err(|err| ConfigError::at(e.line, field.clone(), err.to_string()))?;
                    if h.vertex_count() > MAX_PATTERN_VERTICES {
                        return Err(ConfigError::at(
                            e.line,
                            field,
                            format!(
                                "pattern has {} vertices, at most {MAX_PATTERN_VERTICES} allowed",
                                h.vertex_count()
                            ),
                        ));
                    }
                    patterns.push((name.to_string(), h));
                }
                ("run", key) => match key {
                    "times" => run.times = parse_list(e)?,
                    "replications" => run.replications = parse_value(e)?,
                    "seed" => run.seed = parse_value(e)?,
                    "workers" => run.workers = Some(parse_value(e)?),
                    "output" => run.output = PathBuf::from(&e.value),
                    "c_replications" => run.c_replications = parse_value(e)?,
                    "tightness_n" => run.tightness_n = parse_value(e)?,
                    "tightness_replications" => run.tightness_replications = parse_value(e)?,
                    "tightness_triples" => run.tightness_triples = parse_value(e)?,
                    "tightness_max_time" => run.tightness_max_time = parse_value(e)?,
                    "wick_weights" => run.wick_weights = Some(parse_list(e)?),
                    "wick_max_order" => run.wick_max_order = parse_value(e)?,
                    "bootstrap_resamples" => run.bootstrap_resamples = parse_value(e)?,
                    "table_sizes" => run.table_sizes = parse_list(e)?,
                    "graphon_time" => run.graphon_time = parse_value(e)?,
                    "graphon_grid" => run.graphon_grid = parse_value(e)?,
                    _ => return Err(ConfigError::at(e.line, field, "unknown key")),
                },
                ("thresholds", key) => match key {
                    "se_multiplier" => thresholds.se_multiplier = parse_value(e)?,
                    "qq_min" => thresholds.qq_min = parse_value(e)?,
                    "min_cell_count" => thresholds.min_cell_count = parse_value(e)?,
                    _ => return Err(ConfigError::at(e.line, field, "unknown key")),
                },
                _ => unreachable!("sections are checked while reading"),
            }
        }
        if patterns.is_empty() {
            patterns = Self::default().patterns;
        }
        let config = Self {
            model,
            patterns,
            run,
            thresholds,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let model_check = match &self.model {
            ModelConfig::OneWay(p) => p.validate(),
            ModelConfig::TwoWay(p) => p.validate(),
        };
        model_check.map_err(|e| ConfigError::new("model", e.to_string()))?;
        let horizon = self.model.horizon();
        let times = &self.run.times;
        if times.is_empty() {
            return Err(ConfigError::new(
                "run.times",
                "at least one checkpoint time is required",
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("run.times", "times must be strictly increasing"));
        }
        if times[0] < 0.0 || times[times.len() - 1] > horizon {
            return Err(ConfigError::new(
                "run.times",
                format!("times must lie within [0, {horizon}]"),
            ));
        }
        if self.run.replications == 0 {
            return Err(ConfigError::new("run.replications", "must be positive"));
        }
        if self.run.workers == Some(0) {
            return Err(ConfigError::new("run.workers", "must be positive"));
        }
        if self.run.tightness_max_time <= 0.0 || self.run.tightness_max_time > horizon {
            return Err(ConfigError::new(
                "run.tightness_max_time",
                format!("must lie within (0, {horizon}]"),
            ));
        }
        if self.run.graphon_time <= 0.0 || self.run.graphon_time > horizon {
            return Err(ConfigError::new(
                "run.graphon_time",
                format!("must lie within (0, {horizon}]"),
            ));
        }
        if self.run.graphon_grid == 0 {
            return Err(ConfigError::new("run.graphon_grid", "must be positive"));
        }
        if let Some(w) = &self.run.wick_weights {
            let dim = self.patterns.len() * times.len();
            if w.len() != dim {
                return Err(ConfigError::new(
                    "run.wick_weights",
                    format!("expected {dim} weights (patterns x times), got {}", w.len()),
                ));
            }
        }
        if !(self.thresholds.se_multiplier > 0.0) {
            return Err(ConfigError::new("thresholds.se_multiplier", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.thresholds.qq_min) {
            return Err(ConfigError::new("thresholds.qq_min", "must lie within [0, 1]"));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(w) = o.workers {
            self.run.workers = Some(w);
        }
        if let Some(out) = &o.output {
            self.run.output = out.clone();
        }
        if let Some(r) = o.replications {
            self.run.replications = r;
        }
        self.validate()
    }

    /// Serializes every field; parsing the result gives back `self`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        writeln!(w, "[model]").unwrap();
        writeln!(w, "kind = {}", self.model.kind()).unwrap();
        match &self.model {
            ModelConfig::OneWay(p) => {
                writeln!(
                    w,
                    "n = {}\np0 = {}\ngamma_mp = {}\ngamma_pm = {}",
                    p.n, p.p0, p.gamma_mp, p.gamma_pm
                )
                .unwrap();
                writeln!(
                    w,
                    "pi_plus = {}\npi_minus = {}\nq0 = {}\nhorizon = {}",
                    p.pi_plus, p.pi_minus, p.q0, p.horizon
                )
                .unwrap();
            }
            ModelConfig::TwoWay(p) => {
                writeln!(w, "n = {}\np0 = {}\nbeta = {}", p.n, p.p0, p.beta).unwrap();
                writeln!(
                    w,
                    "pi_plus = {}\npi_minus = {}\nq0 = {}\nhorizon = {}",
                    p.pi_plus, p.pi_minus, p.q0, p.horizon
                )
                .unwrap();
            }
        }
        writeln!(w, "\n[patterns]").unwrap();
        for (name, h) in &self.patterns {
            writeln!(w, "{name} = {h}").unwrap();
        }
        let r = &self.run;
        writeln!(w, "\n[run]").unwrap();
        writeln!(w, "times = {}", join(&r.times)).unwrap();
        writeln!(w, "replications = {}\nseed = {}", r.replications, r.seed).unwrap();
        if let Some(k) = r.workers {
            writeln!(w, "workers = {k}").unwrap();
        }
        writeln!(w, "output = {}", r.output.display()).unwrap();
        writeln!(w, "c_replications = {}", r.c_replications).unwrap();
        writeln!(w, "tightness_n = {}", r.tightness_n).unwrap();
        writeln!(w, "tightness_replications = {}", r.tightness_replications).unwrap();
        writeln!(w, "tightness_triples = {}", r.tightness_triples).unwrap();
        writeln!(w, "tightness_max_time = {}", r.tightness_max_time).unwrap();
        if let Some(weights) = &r.wick_weights {
            writeln!(w, "wick_weights = {}", join(weights)).unwrap();
        }
        writeln!(w, "wick_max_order = {}", r.wick_max_order).unwrap();
        writeln!(w, "bootstrap_resamples = {}", r.bootstrap_resamples).unwrap();
        writeln!(w, "table_sizes = {}", join(&r.table_sizes)).unwrap();
        writeln!(
            w,
            "graphon_time = {}\ngraphon_grid = {}",
            r.graphon_time, r.graphon_grid
        )
        .unwrap();
        let t = &self.thresholds;
        writeln!(w, "\n[thresholds]").unwrap();
        writeln!(
            w,
            "se_multiplier = {}\nqq_min = {}\nmin_cell_count = {}",
            t.se_multiplier, t.qq_min, t.min_cell_count
        )
        .unwrap();
        s
    }

    /// Worker count after the environment fallback.
    pub fn workers(&self) -> usize {
        crate::parallel::resolve_workers(self.run.workers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_ini()).unwrap(), c);
    }

    #[test]
    fn two_way_round_trips_with_options() {
        let text = "[model]\nkind = two_way\nn = 100\nbeta = 0.66\n[patterns]\ne = V=2; opinions=++; edges=0-1\n\
                    [run]\ntimes = 1, 2, 4\nreplications = 10\nworkers = 3\nwick_weights = 1, 2, 3\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert!(matches!(c.model, ModelConfig::TwoWay(p) if p.beta == 0.66));
        assert_eq!(c.run.workers, Some(3));
        assert_eq!(ExperimentConfig::parse(&c.to_ini()).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let err = ExperimentConfig::parse("[model]\nn = 10\n\n[run]\ntimes = 1, x\n").unwrap_err();
        assert_eq!(err.line, Some(5));
        assert_eq!(err.field, "run.times");
        let err = ExperimentConfig::parse("[model]\nkind = two_way\ngamma_mp = 1\n").unwrap_err();
        assert_eq!((err.line, err.field.as_str()), (Some(3), "model.gamma_mp"));
        let err = ExperimentConfig::parse("[run]\ntimes = 2, 1\n").unwrap_err();
        assert_eq!(err.field, "run.times");
        let err = ExperimentConfig::parse("[run]\ntimes = 1, 9\n").unwrap_err();
        assert!(err.message.contains("within"));
        let err = ExperimentConfig::parse("[patterns]\nbad = V=2; opinions=+; edges=\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(ExperimentConfig::parse("[nope]\n").is_err());
        assert!(ExperimentConfig::parse("n = 3\n").is_err());
        assert!(ExperimentConfig::parse("[run]\nseed = 1\nseed = 2\n").is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            seed: Some(9),
            replications: Some(7),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((c.run.seed, c.run.replications), (9, 7));
        assert!(c
            .apply(&Overrides {
                replications: Some(0),
                ..Default::default()
            })
            .is_err());
    }
}
