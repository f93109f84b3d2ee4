//! Sensor deployment, geometry and hello-phase neighbor discovery.
//!
//! Sensors occupy ids `0..node_count`; the sink is always the last node and
//! has id `node_count`. The sink never spends energy and is always alive.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng::{stream_rng, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("area side must be positive, got {0}")]
    InvalidArea(f64),
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("communication range must be positive, got {0}")]
    InvalidRange(f64),
    #[error("sink position ({x}, {y}) lies outside the {side}x{side} area")]
    SinkOutside { x: f64, y: f64, side: f64 },
    #[error("super sensor radius must be positive, got {0}")]
    InvalidSuperRadius(f64),
    #[error("malformed network text at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentMode {
    #[default]
    UniformRandom,
    /// Preferential attachment: each new sensor lands inside the radio range
    /// of an existing sensor picked with probability proportional to its
    /// degree plus one.
    ScaleFree,
}

impl FromStr for DeploymentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" | "uniform-random" => Ok(Self::UniformRandom),
            "scale-free" => Ok(Self::ScaleFree),
            other => Err(format!("unknown deployment mode `{other}`")),
        }
    }
}

impl fmt::Display for DeploymentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UniformRandom => "uniform-random",
            Self::ScaleFree => "scale-free",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkConfig {
    pub area_side: f64,
    pub node_count: usize,
    pub comm_range: f64,
    pub sink_position: Position,
    pub deployment: DeploymentMode,
    pub seed: u64,
    /// Flag sensors near the sink as energy-exempt super sensors.
    pub super_sensors: bool,
    /// Radius around the sink for super sensors; `None` means `comm_range`.
    pub super_radius: Option<f64>,
}

impl NetworkConfig {
    /// 80 sensors on 100x100 m, range 20 m, sink at the center.
    pub fn scenario1() -> Self {
        Self::square(100.0, 80, 20.0)
    }

    /// 160 sensors on 200x200 m, range 28 m, sink at the center.
    pub fn scenario2() -> Self {
        Self::square(200.0, 160, 28.0)
    }

    /// 240 sensors on 300x300 m, range 35 m, sink at the center.
    pub fn scenario3() -> Self {
        Self::square(300.0, 240, 35.0)
    }

    pub fn preset(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::scenario1()),
            2 => Some(Self::scenario2()),
            3 => Some(Self::scenario3()),
            _ => None,
        }
    }

    /// Square area with the sink at its center.
    pub fn square(area_side: f64, node_count: usize, comm_range: f64) -> Self {
        Self {
            area_side,
            node_count,
            comm_range,
            sink_position: Position::new(area_side / 2.0, area_side / 2.0),
            deployment: DeploymentMode::UniformRandom,
            seed: 1,
            super_sensors: false,
            super_radius: None,
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(TopologyError::InvalidArea(self.area_side));
        }
        if self.node_count == 0 {
            return Err(TopologyError::NoNodes);
        }
        if !(self.comm_range > 0.0 && self.comm_range.is_finite()) {
            return Err(TopologyError::InvalidRange(self.comm_range));
        }
        let Position { x, y } = self.sink_position;
        if !(0.0..=self.area_side).contains(&x) || !(0.0..=self.area_side).contains(&y) {
            return Err(TopologyError::SinkOutside {
                x,
                y,
                side: self.area_side,
            });
        }
        if let Some(r) = self.super_radius {
            if r.is_nan() || r <= 0.0 {
                return Err(TopologyError::InvalidSuperRadius(r));
            }
        }
        Ok(())
    }

    pub fn effective_super_radius(&self) -> f64 {
        self.super_radius.unwrap_or(self.comm_range)
    }

    pub fn sink_id(&self) -> NodeId {
        NodeId(self.node_count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeighborEntry {
    pub id: NodeId,
    pub distance: f64,
    pub last_known_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensorNode {
    pub id: NodeId,
    pub position: Position,
    pub residual_energy: f64,
    pub is_super: bool,
    pub is_sink: bool,
    pub alive: bool,
    pub neighbors: Vec<NeighborEntry>,
}

impl SensorNode {
    fn new(id: NodeId, position: Position, energy: f64) -> Self {
        Self {
            id,
            position,
            residual_energy: energy,
            is_super: false,
            is_sink: false,
            alive: true,
            neighbors: Vec::new(),
        }
    }

    pub fn neighbor(&self, id: NodeId) -> Option<&NeighborEntry> {
        self.neighbors.iter().find(|n| n.id == id)
    }

    /// Sink and super sensors never lose energy.
    pub fn is_exempt(&self) -> bool {
        self.is_sink || self.is_super
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub nodes: Vec<SensorNode>,
    pub sink: NodeId,
    pub config: NetworkConfig,
    pub initial_energy: f64,
}

impl Network {
    #[inline]
    pub fn node(&self, id: NodeId) -> &SensorNode {
        &self.nodes[id.0]
    }

    #[inline]
    pub fn node_mut(&mut self, id: NodeId) -> &mut SensorNode {
        &mut self.nodes[id.0]
    }

    /// All sensors, excluding the sink.
    pub fn sensors(&self) -> impl Iterator<Item = &SensorNode> {
        self.nodes.iter().filter(|n| !n.is_sink)
    }

    pub fn alive_sensor_count(&self) -> usize {
        self.sensors().filter(|n| n.alive).count()
    }

    /// Distance between two nodes from their stored positions.
    pub fn distance_between(&self, a: NodeId, b: NodeId) -> f64 {
        distance(self.node(a).position, self.node(b).position)
    }

    /// Line-oriented text form: a `#` header with the configuration followed
    /// by one `id x y energy is_super` line per node, sink last.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "# area_side={} node_count={} comm_range={} sink_x={} sink_y={} deployment={} seed={} super_sensors={} super_radius={} initial_energy={} sink_id={}\n",
            c.area_side,
            c.node_count,
            c.comm_range,
            c.sink_position.x,
            c.sink_position.y,
            c.deployment,
            c.seed,
            c.super_sensors,
            c.super_radius.map_or_else(|| "-".to_string(), |r| r.to_string()),
            self.initial_energy,
            self.sink,
        );
        for n in &self.nodes {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                n.id,
                n.position.x,
                n.position.y,
                n.residual_energy,
                u8::from(n.is_super)
            ));
        }
        out
    }

    /// Parses [`Network::to_text`] output and rebuilds neighbor tables.
    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let err = |line: usize, reason: String| TopologyError::Parse { line, reason };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| err(1, "missing `#` header".into()))?;

        let mut fields = std::collections::HashMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(1, format!("bad header field `{kv}`")))?;
            fields.insert(k, v);
        }
        fn get<T: FromStr>(
            fields: &std::collections::HashMap<&str, &str>,
            key: &str,
        ) -> Result<T, TopologyError> {
            fields
                .get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| TopologyError::Parse {
                    line: 1,
                    reason: format!("missing or invalid `{key}`"),
                })
        }
        let deployment: String = get(&fields, "deployment")?;
        let config = NetworkConfig {
            area_side: get(&fields, "area_side")?,
            node_count: get(&fields, "node_count")?,
            comm_range: get(&fields, "comm_range")?,
            sink_position: Position::new(get(&fields, "sink_x")?, get(&fields, "sink_y")?),
            deployment: deployment.parse().map_err(|e| err(1, e))?,
            seed: get(&fields, "seed")?,
            super_sensors: get(&fields, "super_sensors")?,
            super_radius: match fields.get("super_radius") {
                Some(&"-") => None,
                _ => Some(get(&fields, "super_radius")?),
            },
        };
        config.validate()?;
        let initial_energy: f64 = get(&fields, "initial_energy")?;
        let sink = NodeId(get(&fields, "sink_id")?);
        if sink != config.sink_id() {
            return Err(err(1, "sink_id does not match node_count".into()));
        }

        let mut nodes = Vec::with_capacity(config.node_count + 1);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(err(
                    lineno,
                    format!("expected 5 fields, got {}", parts.len()),
                ));
            }
            let num = |s: &str| -> Result<f64, TopologyError> {
                s.parse()
                    .map_err(|_| err(lineno, format!("bad number `{s}`")))
            };
            let id: usize = parts[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad id `{}`", parts[0])))?;
            if id != nodes.len() {
                return Err(err(
                    lineno,
                    format!("ids must be dense, expected {}", nodes.len()),
                ));
            }
            let mut node = SensorNode::new(
                NodeId(id),
                Position::new(num(parts[1])?, num(parts[2])?),
                num(parts[3])?,
            );
            node.is_super = parts[4] == "1";
            node.is_sink = NodeId(id) == sink;
            node.alive = node.is_exempt() || node.residual_energy > 0.0;
            nodes.push(node);
        }
        if nodes.len() != config.node_count + 1 {
            return Err(err(
                text.lines().count(),
                format!(
                    "expected {} nodes, got {}",
                    config.node_count + 1,
                    nodes.len()
                ),
            ));
        }
        let mut net = Network {
            nodes,
            sink,
            config,
            initial_energy,
        };
        discover_neighbors(&mut net);
        Ok(net)
    }
}

/// Places the sensors and the sink. Neighbor tables are left empty; run
/// [`discover_neighbors`] afterwards.
pub fn deploy(config: &NetworkConfig, initial_energy: f64) -> Result<Network, TopologyError> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, Stream::Deployment);
    let positions = match config.deployment {
        DeploymentMode::UniformRandom => uniform_positions(config, &mut rng),
        DeploymentMode::ScaleFree => scale_free_positions(config, &mut rng),
    };

    let mut nodes: Vec<SensorNode> = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| SensorNode::new(NodeId(i), p, initial_energy))
        .collect();

    let sink_id = config.sink_id();
    let mut sink = SensorNode::new(sink_id, config.sink_position, initial_energy);
    sink.is_sink = true;
    nodes.push(sink);

    if config.super_sensors {
        let radius = config.effective_super_radius();
        for node in nodes.iter_mut().filter(|n| !n.is_sink) {
            node.is_super = distance(node.position, config.sink_position) <= radius;
        }
    }

    Ok(Network {
        nodes,
        sink: sink_id,
        config: config.clone(),
        initial_energy,
    })
}

fn uniform_positions(config: &NetworkConfig, rng: &mut ChaCha8Rng) -> Vec<Position> {
    let side = config.area_side;
    (0..config.node_count)
        .map(|_| Position::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side)))
        .collect()
}

fn scale_free_positions(config: &NetworkConfig, rng: &mut ChaCha8Rng) -> Vec<Position> {
    let side = config.area_side;
    let range = config.comm_range;
    let mut positions: Vec<Position> = Vec::with_capacity(config.node_count);
    let mut degree: Vec<usize> = Vec::with_capacity(config.node_count);
    positions.push(Position::new(
        rng.random_range(0.0..=side),
        rng.random_range(0.0..=side),
    ));
    degree.push(0);

    while positions.len() < config.node_count {
        let total: usize = degree.iter().map(|d| d + 1).sum();
        let mut pick = rng.random_range(0..total);
        let anchor = degree
            .iter()
            .position(|d| {
                if pick <= *d {
                    true
                } else {
                    pick -= d + 1;
                    false
                }
            })
            .unwrap_or(degree.len() - 1);

        // Rejection sample a point in the anchor's disc that stays in the area.
        let center = positions[anchor];
        let candidate = loop {
            let r = range * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let p = Position::new(center.x + r * theta.cos(), center.y + r * theta.sin());
            if (0.0..=side).contains(&p.x) && (0.0..=side).contains(&p.y) {
                break p;
            }
        };

        let mut new_degree = 0;
        for (i, p) in positions.iter().enumerate() {
            if distance(*p, candidate) <= range {
                degree[i] += 1;
                new_degree += 1;
            }
        }
        positions.push(candidate);
        degree.push(new_degree);
    }
    positions
}

/// Hello phase: each node learns every other node within `comm_range`
/// (closed ball), with exact distance and current energy.
pub fn discover_neighbors(net: &mut Network) {
    let range = net.config.comm_range;
    let snapshot: Vec<(Position, f64)> = net
        .nodes
        .iter()
        .map(|n| (n.position, visible_energy(n)))
        .collect();
    for (i, node) in net.nodes.iter_mut().enumerate() {
        node.neighbors = snapshot
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(j, &(pos, energy))| {
                let d = distance(node.position, pos);
                (d <= range).then_some(NeighborEntry {
                    id: NodeId(j),
                    distance: d,
                    last_known_energy: energy,
                })
            })
            .collect();
    }
}

/// Copies every node's current residual energy into all neighbor tables.
pub fn refresh_energy_views(net: &mut Network) {
    let energies: Vec<f64> = net.nodes.iter().map(visible_energy).collect();
    for node in &mut net.nodes {
        for entry in &mut node.neighbors {
            entry.last_known_energy = energies[entry.id.0];
        }
    }
}

fn visible_energy(node: &SensorNode) -> f64 {
    if node.alive {
        node.residual_energy
    } else {
        0.0
    }
}
