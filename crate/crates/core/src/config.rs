//! Flat `key = value` run configuration. Command-line flags mirror the keys
//! (with dashes) and override values from the file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::ensemble::{EnsembleConfig, ProtocolPair};
use crate::error::{Error, Result};
use crate::model::{PhysicalParams, RampProtocol, RampShape};
use crate::sde::{InitialCondition, IntegratorConfig};

pub const QUICK_N_TRAJ: usize = 2000;

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "hbar",
    "omega",
    "g",
    "gamma",
    "nbar",
    "eta",
    "shape",
    "sigma",
    "t0",
    "tau",
    "dt",
    "record_stride",
    "n_traj",
    "seed",
    "burn_in",
    "initial",
    "workers",
    "record_traj",
    "output_dir",
    "emit",
    "quick",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emit {
    Trajectories,
    Samples,
    Histograms,
    Crooks,
    Report,
    Figures,
}

impl Emit {
    pub const ALL: [Emit; 6] = [
        Emit::Trajectories,
        Emit::Samples,
        Emit::Histograms,
        Emit::Crooks,
        Emit::Report,
        Emit::Figures,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s.trim())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Emit::Trajectories => "trajectories",
            Emit::Samples => "samples",
            Emit::Histograms => "histograms",
            Emit::Crooks => "crooks",
            Emit::Report => "report",
            Emit::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    /// Forward protocol; the backward one is its reversal.
    pub protocol: RampProtocol,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    /// Trajectories per direction written to `trajectories.csv`.
    pub record_traj: usize,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Emit>,
    pub quick: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysicalParams::default(),
            protocol: RampProtocol::default(),
            integrator: IntegratorConfig::default(),
            ensemble: EnsembleConfig::default(),
            record_traj: 10,
            output_dir: PathBuf::from("out"),
            emit: [Emit::Samples, Emit::Histograms, Emit::Crooks, Emit::Report]
                .into_iter()
                .collect(),
            quick: false,
        }
    }
}

impl RunConfig {
    pub fn protocols(&self) -> ProtocolPair {
        ProtocolPair::from_forward(self.protocol)
    }

    pub fn emits(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.protocol.validate()?;
        self.integrator.validate()?;
        self.ensemble.validate()
    }
}

/// Raw key/value pairs with the line each came from (0 for flags).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    key: content.to_string(),
                    line: line_no,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if raw.entries.contains_key(key) {
                return Err(Error::Config {
                    key: key.to_string(),
                    line: line_no,
                    message: "duplicate key".into(),
                });
            }
            raw.insert(key, value.trim(), line_no)?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overrides (or adds) a value, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.insert(key, &value.into(), 0)
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config {
                key,
                line,
                message: "unknown key".into(),
            });
        }
        self.entries.insert(key, (value.to_string(), line));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn value<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => parse(v).map(Some).ok_or_else(|| Error::Config {
                key: key.to_string(),
                line: *line,
                message: format!("cannot parse `{v}` as {what}"),
            }),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.value(key, |v| v.parse::<f64>().ok(), "a number")
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        self.value(key, |v| v.parse::<u64>().ok(), "a non-negative integer")
    }

    /// Builds and validates the run configuration.
    pub fn build(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let p = &mut cfg.params;
        for (key, slot) in [
            ("hbar", &mut p.hbar),
            ("omega", &mut p.omega),
            ("g", &mut p.g),
            ("gamma", &mut p.gamma),
            ("nbar", &mut p.nbar),
            ("eta", &mut p.eta),
        ] {
            if let Some(v) = self.float(key)? {
                *slot = v;
            }
        }

        let proto = &mut cfg.protocol;
        if let Some(shape) = self.value("shape", RampShape::parse, "sigmoid, step or constant")? {
            proto.shape = shape;
        }
        if let Some(v) = self.float("sigma")? {
            proto.sigma = v;
        }
        if let Some(v) = self.float("tau")? {
            proto.tau = v;
        }
        proto.t0 = self.float("t0")?.unwrap_or(0.5 * proto.tau);

        if let Some(v) = self.float("dt")? {
            cfg.integrator.dt = v;
        }
        if let Some(v) = self.uint("record_stride")? {
            cfg.integrator.record_stride = v as usize;
        }

        cfg.quick = self
            .value("quick", parse_bool, "true or false")?
            .unwrap_or(false);
        let ens = &mut cfg.ensemble;
        match self.uint("n_traj")? {
            Some(n) => ens.n_traj = n as usize,
            None if cfg.quick => ens.n_traj = QUICK_N_TRAJ,
            None => {}
        }
        if let Some(v) = self.uint("seed")? {
            ens.master_seed = v;
        }
        if let Some(v) = self.float("burn_in")? {
            ens.burn_in = v;
        }
        if let Some(v) = self.value("initial", InitialCondition::parse, "stationary or point")? {
            ens.initial = v;
        }
        if let Some(v) = self.uint("workers")? {
            ens.workers = v as usize;
        }
        if let Some(v) = self.uint("record_traj")? {
            cfg.record_traj = v as usize;
        }
        if let Some(v) = self.get("output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = self.value("emit", parse_emit, "a comma-separated list of outputs")? {
            cfg.emit = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_emit(s: &str) -> Option<BTreeSet<Emit>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(Emit::parse)
        .collect()
}

/// Parses an optional config file, then applies flag overrides in order.
pub fn parse_config(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut raw = match file {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    for (k, v) in overrides {
        raw.set(k, v.clone())?;
    }
    raw.build()
}

/// Renders a configuration back into the file format.
pub fn to_config_string(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let proto = &cfg.protocol;
    let e = &cfg.ensemble;
    let emit: Vec<&str> = cfg.emit.iter().map(|e| e.as_str()).collect();
    let lines = [
        format!("hbar = {}", p.hbar),
        format!("omega = {}", p.omega),
        format!("g = {}", p.g),
        format!("gamma = {}", p.gamma),
        format!("nbar = {}", p.nbar),
        format!("eta = {}", p.eta),
        format!("shape = {}", proto.shape.as_str()),
        format!("sigma = {}", proto.sigma),
        format!("t0 = {}", proto.t0),
        format!("tau = {}", proto.tau),
        format!("dt = {}", cfg.integrator.dt),
        format!("record_stride = {}", cfg.integrator.record_stride),
        format!("n_traj = {}", e.n_traj),
        format!("seed = {}", e.master_seed),
        format!("burn_in = {}", e.burn_in),
        format!("initial = {}", e.initial.as_str()),
        format!("workers = {}", e.workers),
        format!("record_traj = {}", cfg.record_traj),
        format!("output_dir = {}", cfg.output_dir.display()),
        format!("emit = {}", emit.join(",")),
        format!("quick = {}", cfg.quick),
    ];
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
