//! Next-hop strategies and the hop-by-hop packet walk.
//!
//! A packet keeps the list of nodes it has visited and never returns to one
//! of them. When the sink is among the allowed next hops every strategy
//! hands the packet straight to it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::aco::{self, AcoError, AcoParams, PheromoneTable, TransitionDistribution};
use crate::energy::{charge, rx_energy, tx_energy, EnergyLedger, EnergyParams};
use crate::topology::{Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Pheromone, inverse distance and energy.
    ModifiedAco,
    /// Pheromone and energy only.
    ClassicAco,
    /// Neighbor with the most remaining energy, lowest id on ties.
    EnergyGreedy,
    /// Uniform over the allowed set.
    RandomWalk,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        Self::ModifiedAco,
        Self::ClassicAco,
        Self::EnergyGreedy,
        Self::RandomWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ModifiedAco => "modified-aco",
            Self::ClassicAco => "classic-aco",
            Self::EnergyGreedy => "energy-greedy",
            Self::RandomWalk => "random-walk",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown protocol `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub source: NodeId,
    pub current: NodeId,
    /// Source first, then every node the packet has reached, in order.
    pub visited: Vec<NodeId>,
    pub hops: u32,
    pub ttl: u32,
    pub bits: u64,
}

impl Packet {
    pub fn new(source: NodeId, ttl: u32, bits: u64) -> Self {
        Self {
            source,
            current: source,
            visited: vec![source],
            hops: 0,
            ttl,
            bits,
        }
    }

    pub fn has_visited(&self, id: NodeId) -> bool {
        self.visited.contains(&id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteStatus {
    Delivered,
    DroppedTtl,
    DroppedDeadend,
    DroppedSourceDead,
}

impl RouteStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delivered => "delivered",
            Self::DroppedTtl => "dropped-ttl",
            Self::DroppedDeadend => "dropped-deadend",
            Self::DroppedSourceDead => "dropped-source-dead",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteOutcome {
    pub status: RouteStatus,
    pub path: Vec<NodeId>,
    pub path_length: f64,
    pub energy_spent: f64,
}

impl RouteOutcome {
    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }

    pub fn delivered(&self) -> bool {
        self.status == RouteStatus::Delivered
    }
}

/// Live, unvisited neighbors of the packet's current node. The sink is
/// always eligible when in range.
pub fn allowed_set(net: &Network, packet: &Packet) -> Vec<NodeId> {
    net.node(packet.current)
        .neighbors
        .iter()
        .map(|n| n.id)
        .filter(|&id| id == net.sink || (net.node(id).alive && !packet.has_visited(id)))
        .collect()
}

/// Classic ACO baseline: pheromone and energy, no distance term.
pub fn classic_aco_probabilities(
    current: NodeId,
    allowed: &[NodeId],
    net: &Network,
    tau: &PheromoneTable,
    p: &AcoParams,
) -> Result<TransitionDistribution, AcoError> {
    aco::weighted_distribution(current, allowed, net, tau, p, false)
}

/// Per-run routing policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Router {
    pub kind: ProtocolKind,
    pub aco: AcoParams,
    pub energy: EnergyParams,
}

impl Router {
    pub fn new(kind: ProtocolKind, aco: AcoParams, energy: EnergyParams) -> Self {
        Self { kind, aco, energy }
    }

    /// Picks the next hop from a non-empty allowed set.
    pub fn choose<R: Rng + ?Sized>(
        &self,
        net: &Network,
        current: NodeId,
        allowed: &[NodeId],
        tau: &PheromoneTable,
        rng: &mut R,
    ) -> Result<NodeId, AcoError> {
        if allowed.is_empty() {
            return Err(AcoError::EmptyAllowedSet);
        }
        if allowed.contains(&net.sink) {
            return Ok(net.sink);
        }
        match self.kind {
            ProtocolKind::ModifiedAco => {
                let dist = aco::transition_probabilities(current, allowed, net, tau, &self.aco)?;
                Ok(aco::select_next_hop(&dist, rng))
            }
            ProtocolKind::ClassicAco => {
                let dist = classic_aco_probabilities(current, allowed, net, tau, &self.aco)?;
                Ok(aco::select_next_hop(&dist, rng))
            }
            ProtocolKind::EnergyGreedy => {
                let node = net.node(current);
                let mut best: Option<(NodeId, f64)> = None;
                for &id in allowed {
                    let e = node
                        .neighbor(id)
                        .ok_or(AcoError::NotNeighbor {
                            current,
                            candidate: id,
                        })?
                        .last_known_energy;
                    best = match best {
                        Some((bid, be)) if be > e || (be == e && bid < id) => Some((bid, be)),
                        _ => Some((id, e)),
                    };
                }
                Ok(best.map(|(id, _)| id).expect("allowed is non-empty"))
            }
            ProtocolKind::RandomWalk => Ok(allowed[rng.random_range(0..allowed.len())]),
        }
    }

    /// Walks `packet` towards the sink, charging transmit energy to each
    /// sender and receive energy to each receiving sensor.
    pub fn route<R: Rng + ?Sized>(
        &self,
        net: &mut Network,
        mut packet: Packet,
        tau: &PheromoneTable,
        ledger: &mut EnergyLedger,
        rng: &mut R,
    ) -> Result<RouteOutcome, AcoError> {
        if !net.node(packet.source).alive {
            return Ok(RouteOutcome {
                status: RouteStatus::DroppedSourceDead,
                path: vec![packet.source],
                path_length: 0.0,
                energy_spent: 0.0,
            });
        }

        let mut path_length = 0.0;
        let mut energy_spent = 0.0;
        let status = loop {
            if packet.hops >= packet.ttl {
                break RouteStatus::DroppedTtl;
            }
            if !net.node(packet.current).alive {
                break RouteStatus::DroppedDeadend;
            }
            let allowed = allowed_set(net, &packet);
            if allowed.is_empty() {
                break RouteStatus::DroppedDeadend;
            }
            let current = packet.current;
            let next = self.choose(net, current, &allowed, tau, rng)?;
            let d = net
                .node(current)
                .neighbor(next)
                .map(|n| n.distance)
                .expect("next hop is a neighbor");

            let tx = tx_energy(packet.bits, d, &self.energy);
            let rx = rx_energy(packet.bits, &self.energy);
            energy_spent += charge(net.node_mut(current), tx, ledger);
            energy_spent += charge(net.node_mut(next), rx, ledger);

            path_length += d;
            packet.hops += 1;
            packet.current = next;
            packet.visited.push(next);
            if next == net.sink {
                break RouteStatus::Delivered;
            }
        };

        Ok(RouteOutcome {
            status,
            path: packet.visited,
            path_length,
            energy_spent,
        })
    }
}
