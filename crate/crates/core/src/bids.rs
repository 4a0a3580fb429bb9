//! Bid book for energy, positive reserve and negative reserve.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::network::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Product {
    Energy,
    ReservePos,
    ReserveNeg,
}

impl Product {
    pub const ALL: [Product; 3] = [Product::Energy, Product::ReservePos, Product::ReserveNeg];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_reserve(self) -> bool {
        !matches!(self, Product::Energy)
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Product::Energy => "E",
            Product::ReservePos => "R+",
            Product::ReserveNeg => "R-",
        })
    }
}

impl FromStr for Product {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E" | "energy" => Ok(Product::Energy),
            "R+" | "reserve_pos" => Ok(Product::ReservePos),
            "R-" | "reserve_neg" => Ok(Product::ReserveNeg),
            other => Err(format!("unknown product `{other}` (expected E, R+ or R-)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Demand,
    Supply,
}

/// A divisible bid. Demand quantities are positive, supply quantities negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Bid {
    pub id: String,
    pub product: Product,
    pub zone: String,
    pub quantity: f64,
    pub price: f64,
}

impl Bid {
    pub fn new(
        id: impl Into<String>,
        product: Product,
        zone: &str,
        quantity: f64,
        price: f64,
    ) -> Self {
        Self {
            id: id.into(),
            product,
            zone: zone.to_owned(),
            quantity,
            price,
        }
    }

    pub fn side(&self) -> Side {
        if self.quantity > 0.0 {
            Side::Demand
        } else {
            Side::Supply
        }
    }

    /// Welfare contribution at full acceptance, `q * p`.
    pub fn full_value(&self) -> f64 {
        self.quantity * self.price
    }
}

/// Ordered collection of bids. Order is significant for tie-breaking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BidBook {
    bids: Vec<Bid>,
}

impl BidBook {
    pub fn new(bids: Vec<Bid>) -> Self {
        Self { bids }
    }

    pub fn bids(&self) -> &[Bid] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Bids of one product (the B_E / B_R+ / B_R- partition), with their
    /// positions in the book.
    pub fn partition(&self, product: Product) -> impl Iterator<Item = (usize, &Bid)> {
        self.bids
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.product == product)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.bids.iter().position(|b| b.id == id)
    }

    /// Total welfare `sum x_i q_i p_i` of an acceptance vector.
    pub fn welfare(&self, acceptances: &[f64]) -> f64 {
        self.bids
            .iter()
            .zip(acceptances)
            .map(|(b, x)| x * b.full_value())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    UnknownZone(String),
    ZeroQuantity,
    NonFiniteQuantity,
    NonFinitePrice,
    DuplicateId,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::UnknownZone(z) => write!(f, "unknown zone `{z}`"),
            ViolationKind::ZeroQuantity => f.write_str("zero quantity"),
            ViolationKind::NonFiniteQuantity => f.write_str("non-finite quantity"),
            ViolationKind::NonFinitePrice => f.write_str("non-finite price"),
            ViolationKind::DuplicateId => f.write_str("duplicate bid id"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidViolation {
    pub bid_id: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<BidViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self
            .violations
            .iter()
            .map(|v| format!("bid `{}`: {}", v.bid_id, v.kind))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate(book: &BidBook, topology: &Topology) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for bid in &book.bids {
        let mut push = |kind| {
            violations.push(BidViolation {
                bid_id: bid.id.clone(),
                kind,
            })
        };
        if !seen.insert(bid.id.as_str()) {
            push(ViolationKind::DuplicateId);
        }
        if topology.zone_index(&bid.zone).is_none() {
            push(ViolationKind::UnknownZone(bid.zone.clone()));
        }
        if !bid.quantity.is_finite() {
            push(ViolationKind::NonFiniteQuantity);
        } else if bid.quantity == 0.0 {
            push(ViolationKind::ZeroQuantity);
        }
        if !bid.price.is_finite() {
            push(ViolationKind::NonFinitePrice);
        }
    }
    ValidationReport { violations }
}

/// Per-zone sum of |q| over the bids of one product and side.
pub fn zonal_capacity(book: &BidBook, product: Product, side: Side) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (_, bid) in book.partition(product) {
        if bid.side() == side {
            *out.entry(bid.zone.clone()).or_insert(0.0) += bid.quantity.abs();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn reference_book_is_valid() {
        let (topo, book) = fixture::reference_case();
        assert!(validate(&book, &topo).is_valid());
        assert!(validate(&BidBook::default(), &topo).is_valid());
    }

    #[test]
    fn zero_quantity_named() {
        let (topo, _) = fixture::reference_case();
        let book = BidBook::new(vec![Bid::new("z", Product::Energy, "A", 0.0, 1.0)]);
        let report = validate(&book, &topo);
        assert_eq!(
            report.violations,
            vec![BidViolation {
                bid_id: "z".into(),
                kind: ViolationKind::ZeroQuantity
            }]
        );
    }

    #[test]
    fn all_violations_listed() {
        let (topo, _) = fixture::reference_case();
        let book = BidBook::new(vec![
            Bid::new("a", Product::Energy, "Q", 1.0, f64::NAN),
            Bid::new("a", Product::Energy, "A", 1.0, 1.0),
        ]);
        let report = validate(&book, &topo);
        assert_eq!(report.violations.len(), 3);
    }

    #[test]
    fn capacities_of_reference_book() {
        let (_, book) = fixture::reference_case();
        let supply = zonal_capacity(&book, Product::Energy, Side::Supply);
        assert_eq!(
            supply,
            BTreeMap::from([("A".into(), 8.0), ("B".into(), 8.0)])
        );
        let neg = zonal_capacity(&book, Product::ReserveNeg, Side::Supply);
        assert_eq!(neg, BTreeMap::from([("C".into(), 4.0)]));
        assert!(zonal_capacity(&BidBook::default(), Product::Energy, Side::Demand).is_empty());
    }

    #[test]
    fn capacities_cover_book() {
        let (_, book) = fixture::reference_case();
        let total: f64 = Product::ALL
            .iter()
            .flat_map(|&p| [Side::Demand, Side::Supply].map(|s| zonal_capacity(&book, p, s)))
            .flat_map(|m| m.into_values())
            .sum();
        let direct: f64 = book.bids().iter().map(|b| b.quantity.abs()).sum();
        assert_eq!(total, direct);
        let covered: usize = Product::ALL
            .iter()
            .map(|&p| book.partition(p).count())
            .sum();
        assert_eq!(covered, book.len());
    }

    #[test]
    fn product_round_trips_through_text() {
        for p in Product::ALL {
            assert_eq!(p.to_string().parse::<Product>().unwrap(), p);
        }
        assert!("X".parse::<Product>().is_err());
    }
}
