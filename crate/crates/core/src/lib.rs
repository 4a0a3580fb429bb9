//! Clearing engine for cross-zonal co-allocation of energy and reserve
//! products under flow-based transmission constraints.
//!
//! The crate covers the whole pipeline of a single-period zonal auction:
//!
//! * [`network`]: zonal topology, PTDF matrix and DC line flows.
//! * [`bids`]: the divisible bid book for energy, positive and negative reserve.
//! * [`lp`]: a dense simplex solver with dual values and dual ranges.
//! * [`clearing`]: decoupled, balanced and overprocurement clearings, where
//!   reserve deliverability is enforced at every activation vertex with
//!   per-vertex recourse.
//! * [`pricing`]: zonal price intervals and acceptance/price consistency.
//! * [`settlement`]: bid surpluses, zonal cash flows and congestion rents.
//! * [`oracle`]: brute-force verification on small instances.

pub mod bids;
pub mod clearing;
mod error;
pub mod fixture;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod pricing;
pub mod settlement;

pub use bids::{Bid, BidBook, Product, Side};
pub use clearing::{ActivationVertex, ClearingConfig, ClearingMode, ClearingOutcome, RecoursePlan};
pub use error::{Error, Result};
pub use network::{Line, PtdfMatrix, Topology, Zone};
pub use pricing::{PriceInterval, PriceSheet, PriceSource, ZonalPrice};
pub use settlement::SettlementReport;

/// Tolerance used when deciding whether an acceptance fraction is at a bound.
pub const ACCEPTANCE_TOL: f64 = 1e-9;
