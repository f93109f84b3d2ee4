//! First-order radio model and per-node energy bookkeeping.

use serde::Serialize;

use crate::topology::{NodeId, SensorNode};

/// Radio and battery constants. All values are SI (joules, meters, bits).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyParams {
    /// Electronics energy per bit, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier energy, J/bit/m^2.
    pub eps_fs: f64,
    /// Multipath amplifier energy, J/bit/m^4.
    pub eps_mp: f64,
    /// Distance at which the multipath branch takes over, m.
    pub d0: f64,
    pub initial_energy: f64,
    pub packet_bits: u64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            e_elec: 50e-9,
            eps_fs: 10e-12,
            eps_mp: 0.0013e-12,
            d0: 50.0,
            initial_energy: 5.0,
            packet_bits: 1024,
        }
    }
}

impl EnergyParams {
    /// The distance where both amplifier terms are equal, `sqrt(eps_fs / eps_mp)`.
    /// About 87.7 m with the default constants.
    pub fn crossover_distance(&self) -> f64 {
        (self.eps_fs / self.eps_mp).sqrt()
    }

    pub fn validate(&self) -> Result<(), String> {
        let checks = [
            ("e_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("d0", self.d0),
            ("initial_energy", self.initial_energy),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.packet_bits == 0 {
            return Err("packet_bits must be positive".into());
        }
        Ok(())
    }
}

/// Energy to transmit `bits` over `d` meters. Free-space branch below `d0`,
/// multipath branch at and above it.
pub fn tx_energy(bits: u64, d: f64, p: &EnergyParams) -> f64 {
    let l = bits as f64;
    if d < p.d0 {
        l * p.e_elec + l * p.eps_fs * d * d
    } else {
        l * p.e_elec + l * p.eps_mp * d * d * d * d
    }
}

/// Energy to receive `bits`.
pub fn rx_energy(bits: u64, p: &EnergyParams) -> f64 {
    bits as f64 * p.e_elec
}

/// Cumulative energy drawn per node and for the whole network.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EnergyLedger {
    per_node: Vec<f64>,
    total: f64,
}

impl EnergyLedger {
    pub fn new(node_count: usize) -> Self {
        Self {
            per_node: vec![0.0; node_count],
            total: 0.0,
        }
    }

    pub fn consumed(&self, id: NodeId) -> f64 {
        self.per_node[id.0]
    }

    pub fn per_node(&self) -> &[f64] {
        &self.per_node
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn record(&mut self, id: NodeId, amount: f64) {
        self.per_node[id.0] += amount;
        self.total += amount;
    }
}

/// Draws `amount` joules from `node` and returns what the ledger recorded.
///
/// A regular sensor loses at most its remaining energy and dies at zero; the
/// ledger records only the energy actually drained, so
/// `initial - residual == consumed` holds for every regular sensor. Super
/// sensors keep their battery but the full amount is still recorded. The
/// sink is never charged.
pub fn charge(node: &mut SensorNode, amount: f64, ledger: &mut EnergyLedger) -> f64 {
    debug_assert!(amount >= 0.0);
    if node.is_sink {
        return 0.0;
    }
    if node.is_super {
        ledger.record(node.id, amount);
        return amount;
    }
    let drained = amount.min(node.residual_energy);
    node.residual_energy -= drained;
    if node.residual_energy <= 0.0 {
        node.residual_energy = 0.0;
        node.alive = false;
    }
    ledger.record(node.id, drained);
    drained
}
