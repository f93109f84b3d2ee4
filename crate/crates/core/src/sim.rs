//! Round-based, event-driven simulation.
//!
//! Each round a random subset of live sensors reports one packet each. The
//! packets are routed in ascending source order, then pheromone evaporates
//! once on every edge, delivered routes deposit, and the neighbor tables
//! pick up the new energy levels.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aco::{AcoError, AcoParams, PheromoneTable};
use crate::energy::{EnergyLedger, EnergyParams};
use crate::protocols::{Packet, ProtocolKind, RouteOutcome, Router};
use crate::rng::{stream_rng, Stream};
use crate::topology::{
    deploy, discover_neighbors, refresh_energy_views, Network, NetworkConfig, NodeId, TopologyError,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("routing failed: {0}")]
    Routing(#[from] AcoError),
}

/// How many sensors report in a round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SenderQuota {
    /// Fraction of the live reporting sensors, floored, at least one.
    Fraction(f64),
    Count(usize),
}

impl Default for SenderQuota {
    fn default() -> Self {
        Self::Fraction(0.1)
    }
}

impl SenderQuota {
    pub fn resolve(self, pool: usize) -> usize {
        if pool == 0 {
            return 0;
        }
        let wanted = match self {
            Self::Fraction(f) => ((f * pool as f64).floor() as usize).max(1),
            Self::Count(c) => c.max(1),
        };
        wanted.min(pool)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub scenario: NetworkConfig,
    pub energy: EnergyParams,
    pub aco: AcoParams,
    pub protocol: ProtocolKind,
    pub rounds: u32,
    pub senders: SenderQuota,
    pub ttl: u32,
    /// Seeds deployment, sender selection and routing (independent streams).
    pub seed: u64,
    /// Collect one trace row per packet.
    pub trace: bool,
}

impl SimConfig {
    /// Defaults for a scenario: 1000 rounds, 10% senders and the default hop budget.
    pub fn for_scenario(scenario: NetworkConfig) -> Self {
        let ttl = default_ttl(&scenario);
        let seed = scenario.seed;
        Self {
            scenario,
            energy: EnergyParams::default(),
            aco: AcoParams::default(),
            protocol: ProtocolKind::ModifiedAco,
            rounds: 1000,
            senders: SenderQuota::default(),
            ttl,
            seed,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.scenario.validate()?;
        self.energy.validate().map_err(SimError::InvalidConfig)?;
        self.aco.validate().map_err(SimError::InvalidConfig)?;
        if self.rounds == 0 {
            return Err(SimError::InvalidConfig("rounds must be at least 1".into()));
        }
        if self.ttl == 0 {
            return Err(SimError::InvalidConfig("ttl must be at least 1".into()));
        }
        match self.senders {
            SenderQuota::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(SimError::InvalidConfig(format!(
                    "sender fraction must lie in (0, 1], got {f}"
                )))
            }
            SenderQuota::Count(0) => {
                return Err(SimError::InvalidConfig(
                    "sender count must be at least 1".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

/// `ceil(area_side / comm_range) * 2` hops.
pub fn default_ttl(scenario: &NetworkConfig) -> u32 {
    ((scenario.area_side / scenario.comm_range).ceil() as u32).max(1) * 2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: u32,
    pub sent: u32,
    pub delivered: u32,
    pub dropped: u32,
    #[serde(rename = "energy_j")]
    pub energy_consumed: f64,
    #[serde(rename = "alive")]
    pub alive_nodes: u32,
    /// Zero when nothing was delivered.
    #[serde(rename = "mean_hops")]
    pub mean_hops_delivered: f64,
    /// Zero when nothing was delivered.
    #[serde(rename = "mean_path_m")]
    pub mean_path_length_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: u32,
    pub source: NodeId,
    pub status: &'static str,
    pub hops: usize,
    pub path_length_m: f64,
    pub energy_j: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub rounds: Vec<RoundMetrics>,
    /// First round at which a regular sensor was dead.
    pub fnd_round: Option<u32>,
    /// First round at which at least half the regular sensors were dead.
    pub hnd_round: Option<u32>,
    /// First round at which every regular sensor was dead.
    pub lnd_round: Option<u32>,
    pub total_delivered: u64,
    pub total_sent: u64,
    pub success_ratio: f64,
    pub total_energy: f64,
    pub trace: Vec<TraceRow>,
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct SimState {
    pub network: Network,
    pub pheromone: PheromoneTable,
    pub ledger: EnergyLedger,
    pub router: Router,
    pub round: u32,
    sender_rng: ChaCha8Rng,
    routing_rng: ChaCha8Rng,
}

impl SimState {
    /// Deploys and discovers the network for `config`.
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut scenario = config.scenario.clone();
        scenario.seed = config.seed;
        let mut network = deploy(&scenario, config.energy.initial_energy)?;
        discover_neighbors(&mut network);
        Ok(Self::from_network(network, config))
    }

    /// Starts a run on an already deployed network.
    pub fn from_network(network: Network, config: &SimConfig) -> Self {
        let pheromone = PheromoneTable::for_network(&network, config.aco.tau0);
        let ledger = EnergyLedger::new(network.nodes.len());
        Self {
            network,
            pheromone,
            ledger,
            router: Router::new(config.protocol, config.aco.clone(), config.energy.clone()),
            round: 0,
            sender_rng: stream_rng(config.seed, Stream::Senders),
            routing_rng: stream_rng(config.seed, Stream::Routing),
        }
    }

    /// Live sensors that can originate traffic: not the sink, not super sensors.
    pub fn reporting_pool(&self) -> Vec<NodeId> {
        self.network
            .sensors()
            .filter(|n| n.alive && !n.is_super)
            .map(|n| n.id)
            .collect()
    }

    fn dead_regular_count(&self) -> (usize, usize) {
        let regular: Vec<_> = self.network.sensors().filter(|n| !n.is_super).collect();
        let dead = regular.iter().filter(|n| !n.alive).count();
        (dead, regular.len())
    }
}

/// One round. Returns the metrics and the per-packet outcomes.
pub fn run_round(
    state: &mut SimState,
    config: &SimConfig,
) -> Result<(RoundMetrics, Vec<(NodeId, RouteOutcome)>), SimError> {
    state.round += 1;
    let pool = state.reporting_pool();
    let quota = config.senders.resolve(pool.len());
    let mut senders: Vec<NodeId> = sample(&mut state.sender_rng, pool.len(), quota)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    senders.sort_unstable();

    let energy_before = state.ledger.total();
    let mut outcomes = Vec::with_capacity(senders.len());
    for source in senders {
        let packet = Packet::new(source, config.ttl, config.energy.packet_bits);
        let outcome = state.router.route(
            &mut state.network,
            packet,
            &state.pheromone,
            &mut state.ledger,
            &mut state.routing_rng,
        )?;
        outcomes.push((source, outcome));
    }

    state.pheromone.evaporate(config.aco.rho);
    if config.aco.deposit_enabled {
        for (_, o) in outcomes.iter().filter(|(_, o)| o.delivered()) {
            state
                .pheromone
                .deposit(&o.path, o.path_length, config.aco.q);
        }
    }
    refresh_energy_views(&mut state.network);

    let sent = outcomes.len() as u32;
    let delivered: Vec<&RouteOutcome> = outcomes
        .iter()
        .map(|(_, o)| o)
        .filter(|o| o.delivered())
        .collect();
    let n_del = delivered.len();
    let mean = |f: fn(&RouteOutcome) -> f64| {
        if n_del == 0 {
            0.0
        } else {
            delivered.iter().map(|o| f(o)).sum::<f64>() / n_del as f64
        }
    };
    let metrics = RoundMetrics {
        round: state.round,
        sent,
        delivered: n_del as u32,
        dropped: sent - n_del as u32,
        energy_consumed: state.ledger.total() - energy_before,
        alive_nodes: state.network.alive_sensor_count() as u32,
        mean_hops_delivered: mean(|o| o.hops() as f64),
        mean_path_length_m: mean(|o| o.path_length),
    };
    Ok((metrics, outcomes))
}

pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    let mut state = SimState::new(config)?;
    run_with_state(&mut state, config)
}

/// Runs up to `config.rounds` rounds on `state`, stopping early once no
/// sensor is left to report.
pub fn run_with_state(state: &mut SimState, config: &SimConfig) -> Result<SimResult, SimError> {
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    let (mut fnd, mut hnd, mut lnd) = (None, None, None);
    let mut total_energy = 0.0;
    let (mut sent, mut delivered) = (0u64, 0u64);

    while state.round < config.rounds {
        if state.reporting_pool().is_empty() {
            break;
        }
        let (m, outcomes) = run_round(state, config)?;
        if config.trace {
            trace.extend(outcomes.iter().map(|(src, o)| TraceRow {
                round: m.round,
                source: *src,
                status: o.status.name(),
                hops: o.hops(),
                path_length_m: o.path_length,
                energy_j: o.energy_spent,
            }));
        }
        let (dead, regular) = state.dead_regular_count();
        if regular > 0 {
            if dead >= 1 && fnd.is_none() {
                fnd = Some(m.round);
            }
            if 2 * dead >= regular && hnd.is_none() {
                hnd = Some(m.round);
            }
            if dead == regular && lnd.is_none() {
                lnd = Some(m.round);
            }
        }
        total_energy += m.energy_consumed;
        sent += u64::from(m.sent);
        delivered += u64::from(m.delivered);
        rounds.push(m);
    }

    Ok(SimResult {
        rounds,
        fnd_round: fnd,
        hnd_round: hnd,
        lnd_round: lnd,
        total_delivered: delivered,
        total_sent: sent,
        success_ratio: if sent == 0 {
            0.0
        } else {
            delivered as f64 / sent as f64
        },
        total_energy,
        trace,
    })
}

/// One independent run per hop budget; everything else, seed included, is shared.
pub fn ttl_sweep(base: &SimConfig, ttl_values: &[u32]) -> Result<Vec<(u32, SimResult)>, SimError> {
    if ttl_values.is_empty() {
        return Err(SimError::InvalidConfig(
            "ttl sweep needs at least one value".into(),
        ));
    }
    ttl_values
        .iter()
        .map(|&ttl| {
            let cfg = SimConfig {
                ttl,
                ..base.clone()
            };
            run_simulation(&cfg).map(|r| (ttl, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Position;

    fn small(rounds: u32) -> SimConfig {
        SimConfig {
            rounds,
            ..SimConfig::for_scenario(NetworkConfig::scenario1())
        }
    }

    #[test]
    fn default_ttl_per_scenario() {
        assert_eq!(default_ttl(&NetworkConfig::scenario1()), 10);
        assert_eq!(default_ttl(&NetworkConfig::scenario2()), 16);
        assert_eq!(default_ttl(&NetworkConfig::scenario3()), 18);
    }

    #[test]
    fn quota_resolution() {
        assert_eq!(SenderQuota::Fraction(0.1).resolve(80), 8);
        assert_eq!(SenderQuota::Fraction(0.1).resolve(79), 7);
        assert_eq!(SenderQuota::Fraction(0.1).resolve(5), 1);
        assert_eq!(SenderQuota::Fraction(0.1).resolve(0), 0);
        assert_eq!(SenderQuota::Count(12).resolve(5), 5);
    }

    #[test]
    fn ten_percent_of_eighty() {
        let cfg = small(1);
        let mut state = SimState::new(&cfg).unwrap();
        let (m, outcomes) = run_round(&mut state, &cfg).unwrap();
        assert_eq!(m.sent, 8);
        assert_eq!(outcomes.len(), 8);
        assert!(outcomes.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(m.delivered + m.dropped, m.sent);
    }

    #[test]
    fn single_round_single_sender() {
        let cfg = SimConfig {
            senders: SenderQuota::Count(1),
            ..small(1)
        };
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.total_sent, 1);
    }

    #[test]
    fn identities_leave_pheromone_unchanged() {
        let mut cfg = small(1);
        cfg.aco.rho = 0.0;
        cfg.aco.deposit_enabled = false;
        let mut state = SimState::new(&cfg).unwrap();
        let before = state.pheromone.clone();
        run_round(&mut state, &cfg).unwrap();
        assert_eq!(state.pheromone, before);
    }

    #[test]
    fn only_super_sensors_left_terminates() {
        let mut cfg = small(50);
        cfg.scenario.super_sensors = true;
        let mut state = SimState::new(&cfg).unwrap();
        for n in state
            .network
            .nodes
            .iter_mut()
            .filter(|n| !n.is_sink && !n.is_super)
        {
            n.residual_energy = 0.0;
            n.alive = false;
        }
        assert!(state.network.sensors().any(|n| n.alive));
        let (m, _) = run_round(&mut state.clone(), &cfg).unwrap();
        assert_eq!(m.sent, 0);
        let r = run_with_state(&mut state, &cfg).unwrap();
        assert!(r.rounds.is_empty());
    }

    #[test]
    fn lifetime_milestones_ordered() {
        let mut cfg = small(5000);
        cfg.energy.initial_energy = 0.002;
        cfg.senders = SenderQuota::Fraction(0.5);
        let r = run_simulation(&cfg).unwrap();
        let (f, h) = (r.fnd_round.unwrap(), r.hnd_round.unwrap());
        assert!(f <= h);
        if let Some(l) = r.lnd_round {
            assert!(h <= l);
        }
        assert!(r
            .rounds
            .windows(2)
            .all(|w| w[1].alive_nodes <= w[0].alive_nodes));
    }

    #[test]
    fn no_rounds_after_last_death() {
        // dense field: every sensor reaches others, so every sensor eventually dies
        let mut scenario = NetworkConfig::square(30.0, 12, 25.0);
        scenario.sink_position = Position::new(0.0, 0.0);
        let mut cfg = SimConfig::for_scenario(scenario);
        cfg.rounds = 100_000;
        cfg.energy.initial_energy = 0.001;
        cfg.senders = SenderQuota::Fraction(1.0);
        let r = run_simulation(&cfg).unwrap();
        let l = r.lnd_round.expect("all sensors die");
        assert_eq!(r.rounds.last().unwrap().round, l);
        assert_eq!(r.rounds.last().unwrap().alive_nodes, 0);
        assert!(r.fnd_round.unwrap() <= r.hnd_round.unwrap());
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = SimConfig { ttl: 0, ..small(1) };
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
        let cfg = SimConfig {
            rounds: 0,
            ..small(1)
        };
        assert!(run_simulation(&cfg).is_err());
        let mut cfg = small(1);
        cfg.scenario.sink_position = Position::new(-1.0, 0.0);
        assert!(matches!(run_simulation(&cfg), Err(SimError::Topology(_))));
    }

    #[test]
    fn single_value_sweep_equals_plain_run() {
        let cfg = small(50);
        let sweep = ttl_sweep(&cfg, &[cfg.ttl]).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].1, run_simulation(&cfg).unwrap());
        assert!(ttl_sweep(&cfg, &[]).is_err());
    }
}
