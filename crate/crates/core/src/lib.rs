//! Wireless sensor network routing simulator.
//!
//! Sensors are scattered over a square field and report to a central sink
//! over multiple hops. Next hops are picked by an ant colony rule that
//! weighs pheromone, inverse distance and neighbor energy, or by one of the
//! baseline strategies. Radio energy follows the first-order model with a
//! free-space and a multipath branch.
//!
//! ```
//! use wsn_aco::{run_simulation, NetworkConfig, SimConfig};
//!
//! let cfg = SimConfig { rounds: 20, ..SimConfig::for_scenario(NetworkConfig::scenario1()) };
//! let result = run_simulation(&cfg).unwrap();
//! assert_eq!(result.rounds.len(), 20);
//! ```

pub mod aco;
pub mod config;
pub mod energy;
pub mod protocols;
pub mod report;
mod rng;
pub mod sim;
pub mod topology;

pub use aco::{AcoParams, EnergyHeuristic, PheromoneTable, TransitionDistribution};

pub use energy::{EnergyLedger, EnergyParams};
pub use protocols::{Packet, ProtocolKind, RouteOutcome, RouteStatus, Router};

pub use config::{load_config, parse_config, ExperimentSpec, Sweep};
pub use report::{run_experiments, ComparisonReport};
pub use sim::{run_simulation, ttl_sweep, RoundMetrics, SenderQuota, SimConfig, SimResult};
pub use topology::{Network, NetworkConfig, NodeId, Position};
