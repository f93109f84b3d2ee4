//! Browser demo bindings.
//!
//! Each exported function takes a JSON options object and returns a JSON
//! string. Failures come back as `{"error": "..."}` so the page has a single
//! code path. The plain Rust functions underneath are what the tests call.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use wsn_aco::aco::transition_probabilities;
use wsn_aco::protocols::{allowed_set, classic_aco_probabilities};
use wsn_aco::sim::{run_round, run_with_state, SimState};
use wsn_aco::*;

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct DeployOptions {
    pub scenario: u8,
    pub seed: u64,
    pub super_sensors: bool,
}

impl Default for DeployOptions {
    fn default() -> Self {
        Self {
            scenario: 1,
            seed: 1,
            super_sensors: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeView {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub energy: f64,
    pub is_super: bool,
    pub is_sink: bool,
    pub alive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NetworkView {
    pub side: f64,
    pub range: f64,
    pub initial_energy: f64,
    pub sink: usize,
    pub nodes: Vec<NodeView>,
    /// Undirected links, smaller id first.
    pub edges: Vec<(usize, usize)>,
}

fn network_view(net: &Network) -> NetworkView {
    let nodes = net
        .nodes
        .iter()
        .map(|n| NodeView {
            id: n.id.0,
            x: n.position.x,
            y: n.position.y,
            energy: n.residual_energy,
            is_super: n.is_super,
            is_sink: n.is_sink,
            alive: n.alive,
        })
        .collect();
    let edges = net
        .nodes
        .iter()
        .flat_map(|n| {
            n.neighbors
                .iter()
                .filter(move |e| e.id > n.id)
                .map(move |e| (n.id.0, e.id.0))
        })
        .collect();
    NetworkView {
        side: net.config.area_side,
        range: net.config.comm_range,
        initial_energy: net.initial_energy,
        sink: net.sink.0,
        nodes,
        edges,
    }
}

fn sim_config(scenario: u8, seed: u64, super_sensors: bool) -> Result<SimConfig, String> {
    let mut net = NetworkConfig::preset(scenario)
        .ok_or_else(|| format!("scenario must be 1, 2 or 3, got {scenario}"))?;
    net.super_sensors = super_sensors;
    let mut cfg = SimConfig::for_scenario(net);
    cfg.seed = seed;
    Ok(cfg)
}

pub fn deploy_network(opts: &DeployOptions) -> Result<NetworkView, String> {
    let cfg = sim_config(opts.scenario, opts.seed, opts.super_sensors)?;
    let state = SimState::new(&cfg).map_err(|e| e.to_string())?;
    Ok(network_view(&state.network))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct HopOptions {
    pub scenario: u8,
    pub seed: u64,
    pub node: usize,
    pub protocol: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub energy_heuristic: String,
    /// Rounds of modified-ACO traffic run first so pheromone and energy differ.
    pub warmup_rounds: u32,
}

impl Default for HopOptions {
    fn default() -> Self {
        let p = AcoParams::default();
        Self {
            scenario: 1,
            seed: 1,
            node: 0,
            protocol: ProtocolKind::ModifiedAco.name().into(),
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            energy_heuristic: p.energy_heuristic.to_string(),
            warmup_rounds: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub id: usize,
    pub probability: f64,
    pub distance: f64,
    pub energy: f64,
    pub pheromone: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HopView {
    pub node: usize,
    pub sink_in_range: bool,
    pub candidates: Vec<Candidate>,
}

pub fn next_hop_distribution(opts: &HopOptions) -> Result<HopView, String> {
    let mut cfg = sim_config(opts.scenario, opts.seed, false)?;
    cfg.aco.alpha = opts.alpha;
    cfg.aco.beta = opts.beta;
    cfg.aco.gamma = opts.gamma;
    cfg.aco.energy_heuristic = opts.energy_heuristic.parse()?;
    cfg.aco.validate()?;
    let kind: ProtocolKind = opts.protocol.parse()?;

    let mut state = SimState::new(&cfg).map_err(|e| e.to_string())?;
    for _ in 0..opts.warmup_rounds {
        run_round(&mut state, &cfg).map_err(|e| e.to_string())?;
    }
    let net = &state.network;
    if opts.node >= cfg.scenario.node_count {
        return Err(format!(
            "node must be a sensor id below {}",
            cfg.scenario.node_count
        ));
    }
    let current = NodeId(opts.node);
    let allowed = allowed_set(net, &Packet::new(current, cfg.ttl, cfg.energy.packet_bits));
    let sink_in_range = allowed.contains(&net.sink);
    if allowed.is_empty() {
        return Ok(HopView {
            node: opts.node,
            sink_in_range,
            candidates: Vec::new(),
        });
    }

    let probs: Vec<f64> = if sink_in_range {
        allowed
            .iter()
            .map(|&id| f64::from(u8::from(id == net.sink)))
            .collect()
    } else {
        match kind {
            ProtocolKind::ModifiedAco | ProtocolKind::ClassicAco => {
                let dist = if kind == ProtocolKind::ModifiedAco {
                    transition_probabilities(current, &allowed, net, &state.pheromone, &cfg.aco)
                } else {
                    classic_aco_probabilities(current, &allowed, net, &state.pheromone, &cfg.aco)
                }
                .map_err(|e| e.to_string())?;
                allowed.iter().map(|&id| dist.probability(id)).collect()
            }
            ProtocolKind::RandomWalk => vec![1.0 / allowed.len() as f64; allowed.len()],
            ProtocolKind::EnergyGreedy => {
                // highest last-known energy, lowest id on ties
                let energy = |c: NodeId| {
                    net.node(current)
                        .neighbor(c)
                        .map_or(0.0, |e| e.last_known_energy)
                };
                let best = allowed
                    .iter()
                    .copied()
                    .max_by(|a, b| energy(*a).total_cmp(&energy(*b)).then(b.cmp(a)))
                    .expect("allowed is non-empty");
                allowed
                    .iter()
                    .map(|&id| f64::from(u8::from(id == best)))
                    .collect()
            }
        }
    };

    let node = net.node(current);
    let mut candidates = Vec::with_capacity(allowed.len());
    for (&id, &probability) in allowed.iter().zip(&probs) {
        let entry = node.neighbor(id).expect("allowed ids are neighbors");
        candidates.push(Candidate {
            id: id.0,
            probability,
            distance: entry.distance,
            energy: entry.last_known_energy,
            pheromone: state.pheromone.get(current, id),
        });
    }
    Ok(HopView {
        node: opts.node,
        sink_in_range,
        candidates,
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub scenario: u8,
    pub seed: u64,
    pub protocol: String,
    pub rounds: u32,
    pub ttl: Option<u32>,
    pub rho: f64,
    pub super_sensors: bool,
    pub initial_energy: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scenario: 1,
            seed: 1,
            protocol: ProtocolKind::ModifiedAco.name().into(),
            rounds: 300,
            ttl: None,
            rho: AcoParams::default().rho,
            super_sensors: false,
            initial_energy: EnergyParams::default().initial_energy,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunView {
    pub success_ratio: f64,
    pub total_energy: f64,
    pub fnd: Option<u32>,
    pub hnd: Option<u32>,
    pub lnd: Option<u32>,
    pub success_per_round: Vec<f64>,
    pub cumulative_energy: Vec<f64>,
    pub alive: Vec<u32>,
    pub network: NetworkView,
}

pub fn run_protocol(opts: &RunOptions) -> Result<RunView, String> {
    let mut cfg = sim_config(opts.scenario, opts.seed, opts.super_sensors)?;
    cfg.protocol = opts.protocol.parse()?;
    cfg.rounds = opts.rounds;
    cfg.aco.rho = opts.rho;
    cfg.energy.initial_energy = opts.initial_energy;
    if let Some(ttl) = opts.ttl {
        cfg.ttl = ttl;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let mut state = SimState::new(&cfg).map_err(|e| e.to_string())?;
    let r = run_with_state(&mut state, &cfg).map_err(|e| e.to_string())?;
    let mut energy = 0.0;
    Ok(RunView {
        success_ratio: r.success_ratio,
        total_energy: r.total_energy,
        fnd: r.fnd_round,
        hnd: r.hnd_round,
        lnd: r.lnd_round,
        success_per_round: r
            .rounds
            .iter()
            .map(|m| {
                if m.sent == 0 {
                    0.0
                } else {
                    f64::from(m.delivered) / f64::from(m.sent)
                }
            })
            .collect(),
        cumulative_energy: r
            .rounds
            .iter()
            .map(|m| {
                energy += m.energy_consumed;
                energy
            })
            .collect(),
        alive: r.rounds.iter().map(|m| m.alive_nodes).collect(),
        network: network_view(&state.network),
    })
}

fn respond<O, T>(json: &str, f: impl FnOnce(&O) -> Result<T, String>) -> String
where
    O: for<'de> Deserialize<'de> + Default,
    T: Serialize,
{
    let opts: Result<O, String> = if json.trim().is_empty() {
        Ok(O::default())
    } else {
        serde_json::from_str(json).map_err(|e| format!("bad options: {e}"))
    };
    match opts.and_then(|o| f(&o)) {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

#[wasm_bindgen]
pub fn deploy(options: &str) -> String {
    respond(options, deploy_network)
}

#[wasm_bindgen]
pub fn next_hop(options: &str) -> String {
    respond(options, next_hop_distribution)
}

#[wasm_bindgen]
pub fn simulate(options: &str) -> String {
    respond(options, run_protocol)
}
