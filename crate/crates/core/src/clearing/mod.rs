//! Market clearing in decoupled, balanced and overprocurement modes.
//!
//! Co-allocated clearings are a single linear program: welfare is maximised
//! over acceptance fractions and, for every activation vertex, a recourse
//! activation of the accepted reserve supply. A vertex realises either the
//! full accepted positive or the full accepted negative reserve demand of
//! each zone (never both in one zone). At every vertex the recourse must
//! restore the system balance and keep every line within its limit once
//! the energy schedule and the activation flows are superposed.
//!
//! Flow convention for activation: realised positive demand is a withdrawal
//! at its zone and activated positive supply an injection; negative reserve
//! is mirrored.

mod coallocated;
mod decoupled;
mod recourse;
mod vertices;

use std::fmt;
use std::str::FromStr;

pub use coallocated::{clear_coallocated, ClearingProgram, CoallocatedClearing};
pub use decoupled::clear_decoupled;
pub use recourse::{
    deliverability_check, realization_feasible, worst_case_report, Deliverability,
    DeliverabilityReport, Direction, Dispatch, LineLoad, VertexVerdict, WorstCaseEntry,
    WorstCaseReport, LOAD_TOL,
};
pub use vertices::{enumerate_vertices, Activation, ActivationVertex, DEFAULT_VERTEX_CAP};

use crate::bids::{BidBook, Product, Side};
use crate::network::Topology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClearingMode {
    Decoupled,
    Balanced,
    Overprocure,
}

impl ClearingMode {
    pub const ALL: [ClearingMode; 3] = [
        ClearingMode::Decoupled,
        ClearingMode::Balanced,
        ClearingMode::Overprocure,
    ];
}

impl fmt::Display for ClearingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClearingMode::Decoupled => "decoupled",
            ClearingMode::Balanced => "balanced",
            ClearingMode::Overprocure => "overprocure",
        })
    }
}

impl FromStr for ClearingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "decoupled" => Ok(ClearingMode::Decoupled),
            "balanced" => Ok(ClearingMode::Balanced),
            "overprocure" => Ok(ClearingMode::Overprocure),
            other => Err(format!(
                "unknown mode `{other}` (expected decoupled, balanced or overprocure)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClearingConfig {
    pub vertex_cap: usize,
}

impl Default for ClearingConfig {
    fn default() -> Self {
        Self {
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

/// Accepted demand and supply (both as nonnegative MWh) per zone and product.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalVolumes {
    demand: Vec<[f64; 3]>,
    supply: Vec<[f64; 3]>,
}

impl ZonalVolumes {
    pub fn from_acceptances(
        book: &BidBook,
        topology: &Topology,
        acceptances: &[f64],
    ) -> Result<Self> {
        if acceptances.len() != book.len() {
            return Err(Error::AcceptanceLength {
                expected: book.len(),
                got: acceptances.len(),
            });
        }
        let n = topology.zones().len();
        let mut demand = vec![[0.0; 3]; n];
        let mut supply = vec![[0.0; 3]; n];
        for (bid, &x) in book.bids().iter().zip(acceptances) {
            let z = topology.zone_index(&bid.zone).ok_or_else(|| {
                Error::InvalidTopology(format!("bid `{}` has unknown zone", bid.id))
            })?;
            let volume = x * bid.quantity.abs();
            match bid.side() {
                Side::Demand => demand[z][bid.product.index()] += volume,
                Side::Supply => supply[z][bid.product.index()] += volume,
            }
        }
        Ok(Self { demand, supply })
    }

    pub fn num_zones(&self) -> usize {
        self.demand.len()
    }

    pub fn demand(&self, zone: usize, product: Product) -> f64 {
        self.demand[zone][product.index()]
    }

    pub fn supply(&self, zone: usize, product: Product) -> f64 {
        self.supply[zone][product.index()]
    }

    /// Net position `sum x_i q_i` (demand positive).
    pub fn position(&self, zone: usize, product: Product) -> f64 {
        self.demand(zone, product) - self.supply(zone, product)
    }

    /// `(D+, D-)` per zone.
    pub fn reserve_demands(&self) -> Vec<(f64, f64)> {
        (0..self.num_zones())
            .map(|z| {
                (
                    self.demand(z, Product::ReservePos),
                    self.demand(z, Product::ReserveNeg),
                )
            })
            .collect()
    }

    /// Zonal injections of the energy schedule (supply minus demand).
    pub fn energy_injections(&self) -> Vec<f64> {
        (0..self.num_zones())
            .map(|z| -self.position(z, Product::Energy))
            .collect()
    }

    pub fn system_position(&self, product: Product) -> f64 {
        (0..self.num_zones())
            .map(|z| self.position(z, product))
            .sum()
    }
}

/// Activation of accepted reserve supply per zone for one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoursePlan {
    /// Activated positive reserve supply per zone.
    pub up: Vec<f64>,
    /// Activated negative reserve supply per zone.
    pub down: Vec<f64>,
}

impl RecoursePlan {
    pub fn zero(num_zones: usize) -> Self {
        Self {
            up: vec![0.0; num_zones],
            down: vec![0.0; num_zones],
        }
    }

    pub fn total_activation(&self) -> f64 {
        self.up.iter().chain(&self.down).sum()
    }

    /// Net activated supply, `sum(a+) - sum(a-)`.
    pub fn net_activation(&self) -> f64 {
        self.up.iter().sum::<f64>() - self.down.iter().sum::<f64>()
    }
}

/// Zonal injections caused by a realisation `(up, down)` and its recourse.
pub fn reserve_injections(up: &[f64], down: &[f64], plan: &RecoursePlan) -> Vec<f64> {
    (0..up.len())
        .map(|z| plan.up[z] - plan.down[z] - up[z] + down[z])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommittedRecourse {
    pub vertex: ActivationVertex,
    pub plan: RecoursePlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingOutcome {
    pub mode: ClearingMode,
    /// Acceptance fraction per bid, in book order.
    pub acceptances: Vec<f64>,
    pub volumes: ZonalVolumes,
    /// Line flows of the energy schedule alone.
    pub base_flows: Vec<f64>,
    /// Total social welfare `sum x_i q_i p_i`.
    pub tsw: f64,
    /// Recourse committed by the clearing at every activation vertex
    /// (empty for decoupled clearings).
    pub recourse: Vec<CommittedRecourse>,
}

impl ClearingOutcome {
    pub fn position(&self, zone: usize, product: Product) -> f64 {
        self.volumes.position(zone, product)
    }
}

/// Clears `book` in any mode.
pub fn clear(
    book: &BidBook,
    topology: &Topology,
    mode: ClearingMode,
    config: &ClearingConfig,
) -> Result<ClearingOutcome> {
    match mode {
        ClearingMode::Decoupled => clear_decoupled(book, topology),
        _ => clear_coallocated(book, topology, mode, config).map(|c| c.outcome),
    }
}

pub(crate) fn ensure_valid(book: &BidBook, topology: &Topology) -> Result<()> {
    let report = crate::bids::validate(book, topology);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidBook(report))
    }
}
