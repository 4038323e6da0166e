//! Run configuration: a plain-text `key = value` file, overridden by flags.
//!
//! ```text
//! # comments and blank lines are ignored
//! eventsPath = data/listening-events.tsv
//! groupSize = 1000
//! splitFraction = 0.01
//! algorithms = bll,top,pop,time,cf
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::DEFAULT_K_MAX;
use crate::ingest::{ColumnSchema, ErrorPolicy};
use crate::recommend::{Algorithm, BllParams, CfParams, DEFAULT_DECAY, DEFAULT_NEIGHBORS};
use crate::split::DEFAULT_FRACTION;

pub const DEFAULT_GROUP_SIZE: usize = 1000;
pub const DEFAULT_MIN_EVENTS: usize = 2;

/// Only environment variable consulted: overrides `outputDir`.
pub const OUTPUT_DIR_ENV: &str = "ARTISTPREF_OUTPUT_DIR";

pub const KEYS: &[&str] = &[
    "eventsPath",
    "schema",
    "onError",
    "groupSize",
    "minEvents",
    "splitFraction",
    "kMax",
    "bllDecay",
    "cfNeighbors",
    "algorithms",
    "outputDir",
    "seed",
    "threads",
    "plotData",
];

/// Unvalidated key/value pairs, later entries overriding earlier ones.
pub type RawConfig = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events_path: Option<PathBuf>,
    pub schema: ColumnSchema,
    pub on_error: ErrorPolicy,
    pub group_size: usize,
    pub min_events: usize,
    pub split_fraction: f64,
    pub k_max: usize,
    pub bll_decay: f64,
    pub cf_neighbors: usize,
    pub algorithms: Vec<Algorithm>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// `None` uses all available cores.
    pub threads: Option<usize>,
    pub plot_data: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            events_path: None,
            schema: ColumnSchema::default(),
            on_error: ErrorPolicy::FailFast,
            group_size: DEFAULT_GROUP_SIZE,
            min_events: DEFAULT_MIN_EVENTS,
            split_fraction: DEFAULT_FRACTION,
            k_max: DEFAULT_K_MAX,
            bll_decay: DEFAULT_DECAY,
            cf_neighbors: DEFAULT_NEIGHBORS,
            algorithms: Algorithm::ALL.to_vec(),
            output_dir: PathBuf::from("out"),
            seed: 42,
            threads: None,
            plot_data: false,
        }
    }
}

impl RunConfig {
    pub fn bll_params(&self) -> BllParams {
        BllParams::with_decay(self.bll_decay)
    }

    pub fn cf_params(&self) -> CfParams {
        CfParams {
            neighborhood_size: self.cf_neighbors,
        }
    }

    /// Normalized `key = value` lines, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let events = self
            .events_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let algorithms: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let threads = self
            .threads
            .map(|t| t.to_string())
            .unwrap_or_else(|| "auto".into());
        let on_error = match self.on_error {
            ErrorPolicy::FailFast => "fail",
            ErrorPolicy::SkipAndCount => "skip",
        };
        let _ = writeln!(out, "eventsPath = {events}");
        let _ = writeln!(out, "schema = {}", self.schema);
        let _ = writeln!(out, "onError = {on_error}");
        let _ = writeln!(out, "groupSize = {}", self.group_size);
        let _ = writeln!(out, "minEvents = {}", self.min_events);
        let _ = writeln!(out, "splitFraction = {}", self.split_fraction);
        let _ = writeln!(out, "kMax = {}", self.k_max);
        let _ = writeln!(out, "bllDecay = {}", self.bll_decay);
        let _ = writeln!(out, "cfNeighbors = {}", self.cf_neighbors);
        let _ = writeln!(out, "algorithms = {}", algorithms.join(","));
        let _ = writeln!(out, "outputDir = {}", self.output_dir.display());
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "threads = {threads}");
        let _ = writeln!(out, "plotData = {}", self.plot_data);
        out
    }
}

/// Parses config-file text into raw pairs. Unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                "config",
                format!("line {} is not key = value: {line:?}", i + 1),
            )
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::config(
                key,
                format!("is not a known key (expected one of {})", KEYS.join(", ")),
            ));
        }
        raw.insert(key.to_string(), value.trim().to_string());
    }
    Ok(raw)
}

fn parse<T: FromStr>(raw: &RawConfig, key: &str, legal: &str) -> Result<Option<T>> {
    raw.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::config(key, format!("must be {legal}; got {v:?}")))
        })
        .transpose()
}

/// Fills defaults and checks every range.
pub fn validate_config(raw: &RawConfig) -> Result<RunConfig> {
    if let Some(key) = raw.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::config(key.clone(), "is not a known key"));
    }
    let mut cfg = RunConfig::default();
    if let Some(p) = raw.get("eventsPath").filter(|p| !p.is_empty()) {
        cfg.events_path = Some(PathBuf::from(p));
    }
    if let Some(s) = raw.get("schema") {
        cfg.schema = s.parse()?;
    }
    if let Some(s) = raw.get("onError") {
        cfg.on_error = s.parse()?;
    }
    if let Some(g) = parse::<usize>(raw, "groupSize", "an integer >= 1")? {
        cfg.group_size = g;
    }
    if cfg.group_size == 0 {
        return Err(Error::config("groupSize", "must be an integer >= 1; got 0"));
    }
    if let Some(m) = parse::<usize>(raw, "minEvents", "an integer >= 2")? {
        cfg.min_events = m;
    }
    if cfg.min_events < 2 {
        return Err(Error::config(
            "minEvents",
            format!("must be an integer >= 2; got {}", cfg.min_events),
        ));
    }
    if let Some(f) = parse::<f64>(raw, "splitFraction", "in (0,1)")? {
        cfg.split_fraction = f;
    }
    if !(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0) {
        return Err(Error::config("splitFraction", "must be in (0,1)"));
    }
    if let Some(k) = parse::<usize>(raw, "kMax", "an integer >= 1")? {
        cfg.k_max = k;
    }
    if cfg.k_max == 0 {
        return Err(Error::config("kMax", "must be an integer >= 1; got 0"));
    }
    if let Some(d) = parse::<f64>(raw, "bllDecay", "a number > 0")? {
        cfg.bll_decay = d;
    }
    if !(cfg.bll_decay > 0.0 && cfg.bll_decay.is_finite()) {
        return Err(Error::config("bllDecay", "must be a number > 0"));
    }
    if let Some(n) = parse::<usize>(raw, "cfNeighbors", "an integer >= 1")? {
        cfg.cf_neighbors = n;
    }
    if cfg.cf_neighbors == 0 {
        return Err(Error::config(
            "cfNeighbors",
            "must be an integer >= 1; got 0",
        ));
    }
    if let Some(list) = raw.get("algorithms") {
        let mut algorithms = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Algorithm>>>()?;
        algorithms.sort_unstable();
        algorithms.dedup();
        if algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "must name at least one of bll, top, pop, time, cf",
            ));
        }
        cfg.algorithms = algorithms;
    }
    if let Some(dir) = raw.get("outputDir") {
        cfg.output_dir = PathBuf::from(dir);
    }
    if let Some(seed) = parse::<u64>(raw, "seed", "a non-negative integer")? {
        cfg.seed = seed;
    }
    match raw.get("threads").map(String::as_str) {
        None | Some("auto") => {}
        Some(_) => {
            let t = parse::<usize>(raw, "threads", "an integer >= 1 or auto")?.unwrap_or(0);
            if t == 0 {
                return Err(Error::config("threads", "must be an integer >= 1 or auto"));
            }
            cfg.threads = Some(t);
        }
    }
    if let Some(p) = parse::<bool>(raw, "plotData", "true or false")? {
        cfg.plot_data = p;
    }
    Ok(cfg)
}
