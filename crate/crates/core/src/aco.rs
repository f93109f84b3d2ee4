//! Pheromone-guided next-hop selection.
//!
//! A candidate `j` seen from node `i` gets the weight
//! `tau_ij^alpha * (1/d_ij)^beta * delta_j^gamma`, normalized over the
//! allowed set. Pheromone evaporates once per round on every edge and
//! successful routes deposit `q / route_length` on each of their edges.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::topology::{Network, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum AcoError {
    #[error("distance between distinct nodes is zero")]
    ZeroDistance,
    #[error("no allowed candidates")]
    EmptyAllowedSet,
    #[error("node {candidate} is not a neighbor of {current}")]
    NotNeighbor { current: NodeId, candidate: NodeId },
}

/// How the per-candidate energy term is derived from the neighbor's energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyHeuristic {
    /// `delta_j` is the neighbor's residual energy; fuller batteries attract traffic.
    #[default]
    Residual,
    /// `delta_j = initial - residual`, the energy the neighbor has already spent.
    AsWrittenDifference,
}

impl FromStr for EnergyHeuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "residual" => Ok(Self::Residual),
            "as-written-difference" | "difference" => Ok(Self::AsWrittenDifference),
            other => Err(format!("unknown energy heuristic `{other}`")),
        }
    }
}

impl fmt::Display for EnergyHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Residual => "residual",
            Self::AsWrittenDifference => "as-written-difference",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcoParams {
    /// Pheromone exponent.
    pub alpha: f64,
    /// Inverse-distance exponent.
    pub beta: f64,
    /// Energy exponent.
    pub gamma: f64,
    /// Evaporation rate in `[0, 1]`.
    pub rho: f64,
    /// Deposit constant.
    pub q: f64,
    /// Initial pheromone on every edge.
    pub tau0: f64,
    pub energy_heuristic: EnergyHeuristic,
    /// Ablation switch: when false, delivered routes deposit nothing.
    pub deposit_enabled: bool,
    /// Ablation switch: when false, the energy factor is dropped from the weight.
    pub energy_term_enabled: bool,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 3.0,
            gamma: 1.0,
            rho: 0.5,
            q: 1.0,
            tau0: 1.0,
            energy_heuristic: EnergyHeuristic::Residual,
            deposit_enabled: true,
            energy_term_enabled: true,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(format!("q must be positive, got {}", self.q));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!(
                    "{name} must be a non-negative finite exponent, got {v}"
                ));
            }
        }
        Ok(())
    }
}

/// Inverse distance.
pub fn heuristic_eta(d: f64) -> Result<f64, AcoError> {
    if d > 0.0 {
        Ok(1.0 / d)
    } else {
        Err(AcoError::ZeroDistance)
    }
}

pub fn heuristic_delta(neighbor_energy: f64, initial_energy: f64, mode: EnergyHeuristic) -> f64 {
    match mode {
        EnergyHeuristic::Residual => neighbor_energy,
        EnergyHeuristic::AsWrittenDifference => initial_energy - neighbor_energy,
    }
}

/// Pheromone level per directed edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PheromoneTable {
    tau0: f64,
    levels: HashMap<(NodeId, NodeId), f64>,
}

impl PheromoneTable {
    pub fn new(tau0: f64) -> Self {
        Self {
            tau0,
            levels: HashMap::new(),
        }
    }

    /// Seeds every directed neighbor edge of `net` with `tau0` so that
    /// evaporation reaches edges that have never been used.
    pub fn for_network(net: &Network, tau0: f64) -> Self {
        let mut table = Self::new(tau0);
        for node in &net.nodes {
            for n in &node.neighbors {
                table.levels.insert((node.id, n.id), tau0);
            }
        }
        table
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Edges never stored read as `tau0`.
    pub fn get(&self, from: NodeId, to: NodeId) -> f64 {
        self.levels.get(&(from, to)).copied().unwrap_or(self.tau0)
    }

    pub fn set(&mut self, from: NodeId, to: NodeId, tau: f64) {
        debug_assert!(tau >= 0.0);
        self.levels.insert((from, to), tau);
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &f64)> {
        self.levels.iter()
    }

    /// Multiplies every stored level by `1 - rho`.
    pub fn evaporate(&mut self, rho: f64) {
        debug_assert!((0.0..=1.0).contains(&rho));
        let keep = 1.0 - rho;
        for tau in self.levels.values_mut() {
            *tau *= keep;
        }
    }

    /// Adds `q / path_length` to every directed edge along `path`.
    pub fn deposit(&mut self, path: &[NodeId], path_length: f64, q: f64) {
        if q == 0.0 || path.len() < 2 {
            return;
        }
        debug_assert!(path_length > 0.0);
        let amount = q / path_length;
        for hop in path.windows(2) {
            let tau0 = self.tau0;
            *self.levels.entry((hop[0], hop[1])).or_insert(tau0) += amount;
        }
    }
}

/// Next-hop probabilities over an allowed set, in allowed-set order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionDistribution {
    pub entries: Vec<(NodeId, f64)>,
}

impl TransitionDistribution {
    /// Zero for any node outside the allowed set.
    pub fn probability(&self, id: NodeId) -> f64 {
        self.entries
            .iter()
            .find(|(c, _)| *c == id)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Normalizes raw weights; all-zero (or non-finite) totals fall back to uniform.
    pub fn from_weights(weights: Vec<(NodeId, f64)>) -> Result<Self, AcoError> {
        if weights.is_empty() {
            return Err(AcoError::EmptyAllowedSet);
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let entries = if total > 0.0 && total.is_finite() {
            weights.into_iter().map(|(c, w)| (c, w / total)).collect()
        } else {
            Self::uniform(weights.into_iter().map(|(c, _)| c))
        };
        Ok(Self { entries })
    }

    /// Normalizes natural-log weights. Tiny pheromone levels that would
    /// underflow as plain products keep their relative order here. When every
    /// weight is zero (`-inf`) the result is uniform.
    pub fn from_log_weights(log_weights: Vec<(NodeId, f64)>) -> Result<Self, AcoError> {
        if log_weights.is_empty() {
            return Err(AcoError::EmptyAllowedSet);
        }
        let max = log_weights
            .iter()
            .map(|(_, lw)| *lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Ok(Self {
                entries: Self::uniform(log_weights.into_iter().map(|(c, _)| c)),
            });
        }
        let scaled: Vec<(NodeId, f64)> = log_weights
            .into_iter()
            .map(|(c, lw)| (c, (lw - max).exp()))
            .collect();
        Self::from_weights(scaled)
    }

    fn uniform(candidates: impl ExactSizeIterator<Item = NodeId>) -> Vec<(NodeId, f64)> {
        let p = 1.0 / candidates.len() as f64;
        candidates.map(|c| (c, p)).collect()
    }
}

/// Modified-ACO next-hop distribution: pheromone, inverse distance and energy.
pub fn transition_probabilities(
    current: NodeId,
    allowed: &[NodeId],
    net: &Network,
    tau: &PheromoneTable,
    p: &AcoParams,
) -> Result<TransitionDistribution, AcoError> {
    weighted_distribution(current, allowed, net, tau, p, true)
}

pub(crate) fn weighted_distribution(
    current: NodeId,
    allowed: &[NodeId],
    net: &Network,
    tau: &PheromoneTable,
    p: &AcoParams,
    use_distance: bool,
) -> Result<TransitionDistribution, AcoError> {
    if allowed.is_empty() {
        return Err(AcoError::EmptyAllowedSet);
    }
    let node = net.node(current);
    let mut log_weights = Vec::with_capacity(allowed.len());
    for &candidate in allowed {
        let entry = node
            .neighbor(candidate)
            .ok_or(AcoError::NotNeighbor { current, candidate })?;
        let mut lw = power_log(tau.get(current, candidate), p.alpha);
        if use_distance {
            lw += power_log(heuristic_eta(entry.distance)?, p.beta);
        }
        if p.energy_term_enabled {
            let delta = heuristic_delta(
                entry.last_known_energy,
                net.initial_energy,
                p.energy_heuristic,
            );
            lw += power_log(delta.max(0.0), p.gamma);
        }
        log_weights.push((candidate, lw));
    }
    TransitionDistribution::from_log_weights(log_weights)
}

/// `ln(base^exponent)`, with `0^0 = 1`.
fn power_log(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * base.ln()
    }
}

/// Roulette-wheel draw.
pub fn select_next_hop<R: Rng + ?Sized>(dist: &TransitionDistribution, rng: &mut R) -> NodeId {
    debug_assert!(!dist.entries.is_empty());
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(candidate, prob) in &dist.entries {
        acc += prob;
        if u < acc {
            return candidate;
        }
    }
    // Rounding left the cumulative sum a hair below 1; take the last
    // candidate with non-zero mass.
    dist.entries
        .iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .or(dist.entries.last())
        .map(|(c, _)| *c)
        .expect("distribution is non-empty")
}
