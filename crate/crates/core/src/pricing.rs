//! Zonal market-clearing prices and acceptance/price consistency.

use std::collections::BTreeMap;
use std::fmt;

use crate::bids::{BidBook, Product, Side};
use crate::clearing::{ClearingOutcome, ClearingProgram};
use crate::lp;
use crate::network::Topology;
use crate::{Error, Result, ACCEPTANCE_TOL};

/// Tolerance for comparing a bid price with a clearing price.
pub const PRICE_TOL: f64 = 1e-9;

/// Closed interval of clearing prices; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PriceInterval {
    pub const UNBOUNDED: PriceInterval = PriceInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Average of the two bounds, when both are finite.
    pub fn midpoint(&self) -> Option<f64> {
        self.is_bounded().then_some(0.5 * (self.lo + self.hi))
    }

    pub fn contains(&self, price: f64, tol: f64) -> bool {
        price >= self.lo - tol && price <= self.hi + tol
    }
}

impl fmt::Display for PriceInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo.is_finite() { '[' } else { '(' };
        let close = if self.hi.is_finite() { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceSource {
    /// Intersection of the zonal merit-order curves.
    MeritOrder,
    /// Dual values of the clearing program.
    Dual,
    /// Supplied by the caller.
    External,
}

impl fmt::Display for PriceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceSource::MeritOrder => "merit-order",
            PriceSource::Dual => "dual",
            PriceSource::External => "external",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalPrice {
    pub interval: PriceInterval,
    pub settled: Option<f64>,
    pub source: PriceSource,
}

impl ZonalPrice {
    /// Price settled at the interval midpoint when both ends are finite.
    pub fn from_interval(interval: PriceInterval, source: PriceSource) -> Self {
        Self {
            interval,
            settled: interval.midpoint(),
            source,
        }
    }

    pub fn external(value: f64) -> Self {
        Self {
            interval: PriceInterval::point(value),
            settled: Some(value),
            source: PriceSource::External,
        }
    }
}

/// Prices per zone and product. Zone-products absent from the sheet have an
/// unbounded interval and no settled price.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceSheet {
    entries: BTreeMap<(String, Product), ZonalPrice>,
}

impl PriceSheet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, zone: impl Into<String>, product: Product, price: ZonalPrice) {
        self.entries.insert((zone.into(), product), price);
    }

    pub fn set_external(&mut self, zone: impl Into<String>, product: Product, value: f64) {
        self.insert(zone, product, ZonalPrice::external(value));
    }

    pub fn get(&self, zone: &str, product: Product) -> Option<&ZonalPrice> {
        self.entries.get(&(zone.to_string(), product))
    }

    pub fn interval(&self, zone: &str, product: Product) -> PriceInterval {
        self.get(zone, product)
            .map_or(PriceInterval::UNBOUNDED, |p| p.interval)
    }

    pub fn settled(&self, zone: &str, product: Product) -> Option<f64> {
        self.get(zone, product).and_then(|p| p.settled)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Product, &ZonalPrice)> {
        self.entries.iter().map(|((z, p), v)| (z.as_str(), *p, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn zone_products(book: &BidBook) -> BTreeMap<(String, Product), Vec<usize>> {
    let mut groups: BTreeMap<(String, Product), Vec<usize>> = BTreeMap::new();
    for (i, bid) in book.bids().iter().enumerate() {
        groups
            .entry((bid.zone.clone(), bid.product))
            .or_default()
            .push(i);
    }
    groups
}

/// Interval of prices supporting the acceptances of an isolated zonal market.
///
/// A price must be at least every accepted supply price and every price of
/// unfilled demand, and at most every accepted demand price and every price
/// of unfilled supply.
pub fn merit_order_interval(
    book: &BidBook,
    acceptances: &[f64],
    members: &[usize],
) -> PriceInterval {
    let mut interval = PriceInterval::UNBOUNDED;
    for &i in members {
        let bid = &book.bids()[i];
        let x = acceptances[i];
        let (raises_lo, lowers_hi) = match bid.side() {
            Side::Supply => (x > ACCEPTANCE_TOL, x < 1.0 - ACCEPTANCE_TOL),
            Side::Demand => (x < 1.0 - ACCEPTANCE_TOL, x > ACCEPTANCE_TOL),
        };
        if raises_lo {
            interval.lo = interval.lo.max(bid.price);
        }
        if lowers_hi {
            interval.hi = interval.hi.min(bid.price);
        }
    }
    interval
}

/// Price intervals of a decoupled clearing, one per zone and product with bids.
pub fn decoupled_price_intervals(book: &BidBook, outcome: &ClearingOutcome) -> Result<PriceSheet> {
    if outcome.acceptances.len() != book.len() {
        return Err(Error::AcceptanceLength {
            expected: book.len(),
            got: outcome.acceptances.len(),
        });
    }
    let mut sheet = PriceSheet::new();
    for ((zone, product), members) in zone_products(book) {
        let interval = merit_order_interval(book, &outcome.acceptances, &members);
        sheet.insert(
            zone,
            product,
            ZonalPrice::from_interval(interval, PriceSource::MeritOrder),
        );
    }
    Ok(sheet)
}

/// Price intervals of a co-allocated clearing: the range of the dual value of
/// each zone's position-defining constraint over all optimal dual solutions.
pub fn dual_price_intervals(program: &ClearingProgram, topology: &Topology) -> Result<PriceSheet> {
    let mut sheet = PriceSheet::new();
    for (z, product, tag) in program.price_tags() {
        let (lo, hi) = lp::dual_range(&program.lp, &program.solution, tag)?;
        let interval = PriceInterval::new(lo, hi);
        sheet.insert(
            topology.zone_id(z),
            product,
            ZonalPrice::from_interval(interval, PriceSource::Dual),
        );
    }
    Ok(sheet)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyRule {
    /// Demand priced strictly above the clearing price must be fully accepted.
    DemandAboveMustClear,
    /// Demand priced strictly below the clearing price must be rejected.
    DemandBelowMustReject,
    /// Supply priced strictly below the clearing price must be fully accepted.
    SupplyBelowMustClear,
    /// Supply priced strictly above the clearing price must be rejected.
    SupplyAboveMustReject,
}

impl fmt::Display for ConsistencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsistencyRule::DemandAboveMustClear => "demand above price not fully accepted",
            ConsistencyRule::DemandBelowMustReject => "demand below price accepted",
            ConsistencyRule::SupplyBelowMustClear => "supply below price not fully accepted",
            ConsistencyRule::SupplyAboveMustReject => "supply above price accepted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyViolation {
    pub bid_id: String,
    pub zone: String,
    pub product: Product,
    pub rule: ConsistencyRule,
    pub bid_price: f64,
    pub acceptance: f64,
    /// Settled price, or the interval bound breached for untraded markets.
    pub price: f64,
}

fn breach(side: Side, bid_price: f64, x: f64, lo: f64, hi: f64) -> Option<(ConsistencyRule, f64)> {
    let full = x >= 1.0 - ACCEPTANCE_TOL;
    let rejected = x <= ACCEPTANCE_TOL;
    match side {
        Side::Demand if bid_price > hi + PRICE_TOL && !full => {
            Some((ConsistencyRule::DemandAboveMustClear, hi))
        }
        Side::Demand if bid_price < lo - PRICE_TOL && !rejected => {
            Some((ConsistencyRule::DemandBelowMustReject, lo))
        }
        Side::Supply if bid_price < lo - PRICE_TOL && !full => {
            Some((ConsistencyRule::SupplyBelowMustClear, lo))
        }
        Side::Supply if bid_price > hi + PRICE_TOL && !rejected => {
            Some((ConsistencyRule::SupplyAboveMustReject, hi))
        }
        _ => None,
    }
}

/// Checks every bid against its zone's clearing price.
///
/// Traded zone-products are judged at their settled price and must have one.
/// Untraded zone-products without a settled price are judged against every
/// price in their interval: a violation is reported only if no price in the
/// interval supports the acceptances.
pub fn verify_consistency(
    book: &BidBook,
    acceptances: &[f64],
    prices: &PriceSheet,
) -> Result<Vec<ConsistencyViolation>> {
    if acceptances.len() != book.len() {
        return Err(Error::AcceptanceLength {
            expected: book.len(),
            got: acceptances.len(),
        });
    }
    let groups = zone_products(book);
    let mut missing = Vec::new();
    let mut violations = Vec::new();
    for ((zone, product), members) in &groups {
        let traded = members.iter().any(|&i| acceptances[i] > ACCEPTANCE_TOL);
        let (lo, hi) = match prices.settled(zone, *product) {
            Some(p) => (p, p),
            None if traded => {
                missing.push((zone.clone(), *product));
                continue;
            }
            None => {
                let interval = prices.interval(zone, *product);
                (interval.lo, interval.hi)
            }
        };
        for &i in members {
            let bid = &book.bids()[i];
            let x = acceptances[i];
            if let Some((rule, price)) = breach(bid.side(), bid.price, x, lo, hi) {
                violations.push(ConsistencyViolation {
                    bid_id: bid.id.clone(),
                    zone: zone.clone(),
                    product: *product,
                    rule,
                    bid_price: bid.price,
                    acceptance: x,
                    price,
                });
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingPrices(missing));
    }
    // report in book order
    violations.sort_by_key(|v| book.position(&v.bid_id));
    Ok(violations)
}
