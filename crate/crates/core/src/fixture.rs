//! The four-zone worked example used throughout the tests and benchmarks.
//!
//! Lines 1: A->B, 2: A->C, 3: B->D, 4: C->D with equal susceptance and
//! capacities (10, 10, 10, 2); zone A is the slack. Line 4 is the only
//! limit that binds in any of the clearings.

use crate::bids::{Bid, BidBook, Product};
use crate::network::{LineSpec, Topology};

pub const ZONES: [&str; 4] = ["A", "B", "C", "D"];
pub const CAPACITIES: [f64; 4] = [10.0, 10.0, 10.0, 2.0];

pub fn topology_with_capacities(capacities: [f64; 4]) -> Topology {
    let lines = [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]
        .iter()
        .zip(capacities)
        .enumerate()
        .map(|(i, (&(from, to), cap))| LineSpec::new(i as u32 + 1, from, to, 1.0, cap))
        .collect::<Vec<_>>();
    Topology::new(&ZONES, &lines, "A").expect("fixture topology is valid")
}

pub fn topology() -> Topology {
    topology_with_capacities(CAPACITIES)
}

/// The nine-bid book. Ids read product.zone.price.
pub fn bid_book() -> BidBook {
    use Product::*;
    BidBook::new(vec![
        Bid::new("E.A.12", Energy, "A", -4.0, 12.0),
        Bid::new("E.A.14", Energy, "A", -4.0, 14.0),
        Bid::new("E.B.20", Energy, "B", 8.0, 20.0),
        Bid::new("E.B.18", Energy, "B", -8.0, 18.0),
        Bid::new("R+.A.1", ReservePos, "A", -4.0, 1.0),
        Bid::new("R+.B.8", ReservePos, "B", 4.0, 8.0),
        Bid::new("R+.B.6", ReservePos, "B", -4.0, 6.0),
        Bid::new("R-.B.6", ReserveNeg, "B", 4.0, 6.0),
        Bid::new("R-.C.4", ReserveNeg, "C", -4.0, 4.0),
    ])
}

pub fn reference_case() -> (Topology, BidBook) {
    (topology(), bid_book())
}
