//! Experiment configuration files (TOML).
//!
//! Every key is optional. `scenario` picks a preset first; section keys then
//! override it.
//!
//! ```toml
//! scenario = 2
//! protocols = ["modified-aco", "classic-aco"]
//! seeds = "1..5"
//! out = "results"
//!
//! [aco]
//! rho = 0.75
//!
//! [sweep]
//! ttl = [5, 10, 15, 20]
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::aco::EnergyHeuristic;
use crate::protocols::ProtocolKind;
use crate::sim::{default_ttl, SenderQuota, SimConfig};
use crate::topology::{DeploymentMode, NetworkConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{key}: {message}")]
    Key { key: &'static str, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Parameter varied across runs.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Sweep {
    #[default]
    None,
    Ttl(Vec<u32>),
    Rho(Vec<f64>),
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::Ttl(_) => "ttl",
            Sweep::Rho(_) => "rho",
        }
    }

    /// Sweep points as numbers, or a single `None` when not sweeping.
    pub fn points(&self) -> Vec<Option<f64>> {
        match self {
            Sweep::None => vec![None],
            Sweep::Ttl(v) => v.iter().map(|&t| Some(f64::from(t))).collect(),
            Sweep::Rho(v) => v.iter().map(|&r| Some(r)).collect(),
        }
    }

    /// `base` with the sweep point applied.
    pub fn apply(&self, base: &SimConfig, point: Option<f64>) -> SimConfig {
        let mut cfg = base.clone();
        match (self, point) {
            (Sweep::Ttl(_), Some(v)) => cfg.ttl = v as u32,
            (Sweep::Rho(_), Some(v)) => cfg.aco.rho = v,
            _ => {}
        }
        cfg
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "none" || s.is_empty() {
            return Ok(Sweep::None);
        }
        let (axis, values) = s
            .split_once(['=', ':'])
            .ok_or_else(|| format!("expected `ttl:v1,v2,..` or `rho:v1,..`, got `{s}`"))?;
        match axis.trim() {
            "ttl" => {
                let v = parse_list::<u32>(values)?;
                if v.contains(&0) {
                    return Err("ttl values must be at least 1".into());
                }
                Ok(Sweep::Ttl(v))
            }
            "rho" => {
                let v = parse_list::<f64>(values)?;
                if let Some(bad) = v.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return Err(format!("rho must lie in [0, 1], got {bad}"));
                }
                Ok(Sweep::Rho(v))
            }
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        match self {
            Sweep::None => f.write_str("none"),
            Sweep::Ttl(v) => write!(f, "ttl:{}", join(v.iter().map(|x| x.to_string()).collect())),
            Sweep::Rho(v) => write!(f, "rho:{}", join(v.iter().map(|x| x.to_string()).collect())),
        }
    }
}

/// Fully resolved batch of runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// `scenario1`..`scenario3`, or `custom` once `net.*` keys change the preset geometry.
    pub scenario_name: String,
    /// Everything except protocol, seed and the swept parameter.
    pub base: SimConfig,
    pub protocols: Vec<ProtocolKind>,
    pub seeds: Vec<u64>,
    pub sweep: Sweep,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::for_preset(1).expect("preset 1 exists")
    }
}

impl ExperimentSpec {
    pub fn for_preset(index: u8) -> Option<Self> {
        let scenario = NetworkConfig::preset(index)?;
        Some(Self {
            scenario_name: format!("scenario{index}"),
            base: SimConfig::for_scenario(scenario),
            protocols: vec![ProtocolKind::ModifiedAco],
            seeds: (1..=5).collect(),
            sweep: Sweep::None,
            out_dir: PathBuf::from("results"),
        })
    }

    /// Number of simulations the spec expands to.
    pub fn run_count(&self) -> usize {
        self.protocols.len() * self.seeds.len() * self.sweep.points().len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.protocols.is_empty() {
            return Err(ConfigError::Invalid(
                "at least one protocol is required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("at least one seed is required".into()));
        }
        match &self.sweep {
            Sweep::Ttl(v) if v.is_empty() => {
                return Err(ConfigError::Invalid("ttl sweep has no values".into()))
            }
            Sweep::Rho(v) if v.is_empty() => {
                return Err(ConfigError::Invalid("rho sweep has no values".into()))
            }
            _ => {}
        }
        self.base
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentSpec, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<ScenarioRef>,
    protocols: Option<OneOrMany>,
    seeds: Option<Seeds>,
    out: Option<PathBuf>,
    #[serde(default)]
    net: NetSection,
    #[serde(default)]
    energy: EnergySection,
    #[serde(default)]
    aco: AcoSection,
    #[serde(default)]
    sim: SimSection,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScenarioRef {
    Index(i64),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seeds {
    One(u64),
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Quota {
    Count(i64),
    Fraction(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetSection {
    area_side: Option<f64>,
    node_count: Option<usize>,
    comm_range: Option<f64>,
    sink_x: Option<f64>,
    sink_y: Option<f64>,
    deployment: Option<String>,
    super_sensors: Option<bool>,
    super_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergySection {
    e_elec: Option<f64>,
    eps_fs: Option<f64>,
    eps_mp: Option<f64>,
    d0: Option<f64>,
    initial: Option<f64>,
    packet_bits: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcoSection {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    rho: Option<f64>,
    q: Option<f64>,
    tau0: Option<f64>,
    energy_heuristic: Option<String>,
    deposit: Option<bool>,
    energy_term: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    rounds: Option<u32>,
    senders: Option<Quota>,
    ttl: Option<u32>,
    trace: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    ttl: Option<Vec<u32>>,
    rho: Option<Vec<f64>>,
}

fn key_err(key: &'static str) -> impl Fn(String) -> ConfigError {
    move |message| ConfigError::Key { key, message }
}

fn set<T>(
    slot: &mut T,
    value: Option<T>,
    key: &'static str,
    check: impl Fn(&T) -> Result<(), String>,
) -> Result<(), ConfigError> {
    if let Some(v) = value {
        check(&v).map_err(key_err(key))?;
        *slot = v;
    }
    Ok(())
}

fn positive(v: &f64) -> Result<(), String> {
    if *v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn non_negative(v: &f64) -> Result<(), String> {
    if *v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("must be non-negative, got {v}"))
    }
}

fn at_least_one<T: PartialOrd + From<u8> + fmt::Display>(v: &T) -> Result<(), String> {
    if *v >= T::from(1) {
        Ok(())
    } else {
        Err(format!("must be at least 1, got {v}"))
    }
}

fn any<T>(_: &T) -> Result<(), String> {
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let file: FileConfig = toml::from_str(text)?;

    let mut spec = match &file.scenario {
        None => ExperimentSpec::default(),
        Some(r) => {
            let index = match r {
                ScenarioRef::Index(i) => u8::try_from(*i).ok(),
                ScenarioRef::Name(n) => n.strip_prefix("scenario").unwrap_or(n).parse().ok(),
            };
            index
                .and_then(ExperimentSpec::for_preset)
                .ok_or_else(|| ConfigError::Key {
                    key: "scenario",
                    message: format!("unknown scenario {r:?}, expected 1, 2 or 3"),
                })?
        }
    };
    let preset = spec.base.scenario.clone();
    let cfg = &mut spec.base;

    let n = file.net;
    let s = &mut cfg.scenario;
    set(&mut s.area_side, n.area_side, "net.area_side", positive)?;
    set(&mut s.node_count, n.node_count, "net.node_count", |v| {
        at_least_one(&(*v as u64))
    })?;
    set(&mut s.comm_range, n.comm_range, "net.comm_range", positive)?;
    set(&mut s.sink_position.x, n.sink_x, "net.sink_x", non_negative)?;
    set(&mut s.sink_position.y, n.sink_y, "net.sink_y", non_negative)?;
    if let Some(d) = n.deployment {
        s.deployment = d
            .parse::<DeploymentMode>()
            .map_err(key_err("net.deployment"))?;
    }
    set(
        &mut s.super_sensors,
        n.super_sensors,
        "net.super_sensors",
        any,
    )?;
    if let Some(r) = n.super_radius {
        positive(&r).map_err(key_err("net.super_radius"))?;
        s.super_radius = Some(r);
    }

    let e = file.energy;
    let p = &mut cfg.energy;
    set(&mut p.e_elec, e.e_elec, "energy.e_elec", positive)?;
    set(&mut p.eps_fs, e.eps_fs, "energy.eps_fs", positive)?;
    set(&mut p.eps_mp, e.eps_mp, "energy.eps_mp", positive)?;
    set(&mut p.d0, e.d0, "energy.d0", positive)?;
    set(&mut p.initial_energy, e.initial, "energy.initial", positive)?;
    set(
        &mut p.packet_bits,
        e.packet_bits,
        "energy.packet_bits",
        at_least_one,
    )?;

    let a = file.aco;
    let p = &mut cfg.aco;
    set(&mut p.alpha, a.alpha, "aco.alpha", non_negative)?;
    set(&mut p.beta, a.beta, "aco.beta", non_negative)?;
    set(&mut p.gamma, a.gamma, "aco.gamma", non_negative)?;
    set(&mut p.rho, a.rho, "aco.rho", |r| {
        if (0.0..=1.0).contains(r) {
            Ok(())
        } else {
            Err(format!("rho must lie in [0, 1], got {r}"))
        }
    })?;
    set(&mut p.q, a.q, "aco.q", positive)?;
    set(&mut p.tau0, a.tau0, "aco.tau0", positive)?;
    if let Some(h) = a.energy_heuristic {
        p.energy_heuristic = h
            .parse::<EnergyHeuristic>()
            .map_err(key_err("aco.energy_heuristic"))?;
    }
    set(&mut p.deposit_enabled, a.deposit, "aco.deposit", any)?;
    set(
        &mut p.energy_term_enabled,
        a.energy_term,
        "aco.energy_term",
        any,
    )?;

    let m = file.sim;
    set(&mut cfg.rounds, m.rounds, "sim.rounds", at_least_one)?;
    set(&mut cfg.ttl, m.ttl, "sim.ttl", at_least_one)?;
    set(&mut cfg.trace, m.trace, "sim.trace", any)?;
    if let Some(q) = m.senders {
        let text = match q {
            Quota::Count(c) => c.to_string(),
            Quota::Fraction(f) => format!("{f:?}"),
            Quota::Text(t) => t,
        };
        cfg.senders = sender_quota(&text).map_err(key_err("sim.senders"))?;
    }

    let s = &cfg.scenario;
    if s.area_side != preset.area_side
        || s.node_count != preset.node_count
        || s.comm_range != preset.comm_range
        || s.sink_position != preset.sink_position
        || s.deployment != preset.deployment
    {
        spec.scenario_name = "custom".into();
    }
    if m.ttl.is_none() {
        spec.base.ttl = default_ttl(&spec.base.scenario);
    }

    if let Some(list) = file.protocols {
        let names = match list {
            OneOrMany::One(s) => s.split(',').map(|p| p.trim().to_string()).collect(),
            OneOrMany::Many(v) => v,
        };
        spec.protocols = names
            .iter()
            .map(|n| n.parse::<ProtocolKind>())
            .collect::<Result<_, _>>()
            .map_err(key_err("protocols"))?;
    }
    if let Some(seeds) = file.seeds {
        spec.seeds = match seeds {
            Seeds::One(s) => vec![s],
            Seeds::List(v) => v,
            Seeds::Text(t) => seed_list(&t).map_err(key_err("seeds"))?,
        };
    }
    if let Some(out) = file.out {
        spec.out_dir = out;
    }
    if let Some(sw) = file.sweep {
        spec.sweep = match (sw.ttl, sw.rho) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Key {
                    key: "sweep",
                    message: "sweep either ttl or rho, not both".into(),
                })
            }
            (Some(t), None) => {
                let text = t.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
                format!("ttl:{text}")
                    .parse()
                    .map_err(key_err("sweep.ttl"))?
            }
            (None, Some(r)) => {
                let text = r
                    .iter()
                    .map(|x| format!("{x:?}"))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("rho:{text}")
                    .parse()
                    .map_err(key_err("sweep.rho"))?
            }
            (None, None) => Sweep::None,
        };
    }

    spec.validate()?;
    Ok(spec)
}

fn parse<T: FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` as {}", std::any::type_name::<T>()))
}

/// `10%`, `0.1` (fraction) or `8` (absolute count).
pub fn sender_quota(value: &str) -> Result<SenderQuota, String> {
    let quota = if let Some(pct) = value.strip_suffix('%') {
        SenderQuota::Fraction(parse::<f64>(pct.trim())? / 100.0)
    } else if value.contains('.') {
        SenderQuota::Fraction(parse::<f64>(value)?)
    } else {
        SenderQuota::Count(parse::<usize>(value)?)
    };
    match quota {
        SenderQuota::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
            Err(format!("sender fraction must lie in (0, 1], got {f}"))
        }
        SenderQuota::Count(0) => Err("sender count must be at least 1".into()),
        q => Ok(q),
    }
}

/// `1,2,3` or an inclusive range `1..5`.
pub fn seed_list(value: &str) -> Result<Vec<u64>, String> {
    let seeds = if let Some((a, b)) = value.split_once("..") {
        let (a, b) = (parse::<u64>(a.trim())?, parse::<u64>(b.trim())?);
        if a > b {
            return Err(format!("empty seed range {a}..{b}"));
        }
        (a..=b).collect()
    } else {
        parse_list::<u64>(value)?
    };
    if seeds.is_empty() {
        return Err("at least one seed is required".into());
    }
    Ok(seeds)
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse::<T>)
        .collect()
}
