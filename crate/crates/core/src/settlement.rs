//! Bid surpluses, zonal cash flows and congestion rents.
//!
//! For any price sheet, welfare splits exactly into bid surplus and rent:
//! `sum x q p = sum x q (p - mcp) + sum_z mcp_z * position_z`.

use std::collections::BTreeMap;

use crate::bids::{BidBook, Product};
use crate::pricing::{PriceSheet, PriceSource};
use crate::{Error, Result};

/// Tolerance for comparing reported and computed surpluses.
pub const SURPLUS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BidSettlement {
    pub bid_id: String,
    pub zone: String,
    pub product: Product,
    pub acceptance: f64,
    /// `x q (p - mcp)`; nonnegative for bids cleared consistently.
    pub surplus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZonalCashFlow {
    pub zone: String,
    pub product: Product,
    /// Net accepted quantity, demand positive.
    pub position: f64,
    pub price: Option<f64>,
    pub source: Option<PriceSource>,
    /// Net payment by the zone's participants to the market.
    pub cash_flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlementReport {
    pub bids: Vec<BidSettlement>,
    /// One row per zone and product with bids, ordered by product then zone.
    pub cash_flows: Vec<ZonalCashFlow>,
    /// Congestion rent per product, indexed by [`Product::index`].
    pub rents: [f64; 3],
    pub tsw: f64,
    pub total_surplus: f64,
    pub total_rent: f64,
}

impl SettlementReport {
    pub fn rent(&self, product: Product) -> f64 {
        self.rents[product.index()]
    }

    pub fn cash_flow(&self, zone: &str, product: Product) -> Option<f64> {
        self.cash_flows
            .iter()
            .find(|c| c.zone == zone && c.product == product)
            .map(|c| c.cash_flow)
    }

    pub fn surplus(&self, bid_id: &str) -> Option<f64> {
        self.bids
            .iter()
            .find(|b| b.bid_id == bid_id)
            .map(|b| b.surplus)
    }

    /// Product surplus totals, indexed by [`Product::index`].
    pub fn product_surplus(&self) -> [f64; 3] {
        let mut totals = [0.0; 3];
        for b in &self.bids {
            totals[b.product.index()] += b.surplus;
        }
        totals
    }
}

/// Settles accepted bids at the given zonal prices.
///
/// Every zone-product with an accepted bid needs a settled price. Prices are
/// used as given and never recomputed.
pub fn settle(
    book: &BidBook,
    acceptances: &[f64],
    prices: &PriceSheet,
) -> Result<SettlementReport> {
    if acceptances.len() != book.len() {
        return Err(Error::AcceptanceLength {
            expected: book.len(),
            got: acceptances.len(),
        });
    }

    let mut groups: BTreeMap<(Product, String), Vec<usize>> = BTreeMap::new();
    for (i, bid) in book.bids().iter().enumerate() {
        groups
            .entry((bid.product, bid.zone.clone()))
            .or_default()
            .push(i);
    }

    let mut surpluses = vec![0.0; book.len()];
    let mut cash_flows = Vec::with_capacity(groups.len());
    let mut rents = [0.0; 3];
    let mut missing = Vec::new();
    for ((product, zone), members) in groups {
        let traded = members.iter().any(|&i| acceptances[i] != 0.0);
        let entry = prices.get(&zone, product);
        let price = entry.and_then(|p| p.settled);
        let position: f64 = members
            .iter()
            .map(|&i| acceptances[i] * book.bids()[i].quantity)
            .sum();
        let cash_flow = match (traded, price) {
            (false, _) => 0.0,
            (true, None) => {
                missing.push((zone.clone(), product));
                continue;
            }
            (true, Some(mcp)) => {
                for &i in &members {
                    let bid = &book.bids()[i];
                    surpluses[i] = acceptances[i] * bid.quantity * (bid.price - mcp);
                }
                position * mcp
            }
        };
        rents[product.index()] += cash_flow;
        cash_flows.push(ZonalCashFlow {
            zone,
            product,
            position,
            price,
            source: entry.map(|p| p.source),
            cash_flow,
        });
    }
    if !missing.is_empty() {
        missing.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.index().cmp(&b.1.index())));
        return Err(Error::MissingPrices(missing));
    }

    let bids: Vec<BidSettlement> = book
        .bids()
        .iter()
        .zip(acceptances)
        .zip(&surpluses)
        .map(|((bid, &x), &surplus)| BidSettlement {
            bid_id: bid.id.clone(),
            zone: bid.zone.clone(),
            product: bid.product,
            acceptance: x,
            surplus,
        })
        .collect();
    Ok(SettlementReport {
        total_surplus: surpluses.iter().sum(),
        total_rent: rents.iter().sum(),
        tsw: book.welfare(acceptances),
        bids,
        cash_flows,
        rents,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurplusDiscrepancy {
    pub bid_id: String,
    pub reported: f64,
    pub computed: f64,
}

/// Compares externally reported bid surpluses with a settlement.
/// Bids unknown to the report are listed with a computed surplus of NaN.
pub fn surplus_discrepancies(
    report: &SettlementReport,
    reported: &[(String, f64)],
) -> Vec<SurplusDiscrepancy> {
    reported
        .iter()
        .filter_map(|(id, value)| {
            let computed = report.surplus(id).unwrap_or(f64::NAN);
            let agrees = (computed - value).abs() <= SURPLUS_TOL * value.abs().max(1.0);
            (!agrees).then(|| SurplusDiscrepancy {
                bid_id: id.clone(),
                reported: *value,
                computed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    fn prices(entries: &[(&str, Product, f64)]) -> PriceSheet {
        let mut s = PriceSheet::new();
        for &(z, p, v) in entries {
            s.set_external(z, p, v);
        }
        s
    }

    #[test]
    fn balanced_cash_flows() {
        let book = fixture::bid_book();
        let x = [1.0, 0.0, 1.0, 0.5, 1.0, 1.0, 0.0, 1.0, 1.0];
        let sheet = prices(&[
            ("A", Product::Energy, 12.0),
            ("B", Product::Energy, 18.0),
            ("A", Product::ReservePos, 1.0),
            ("B", Product::ReservePos, 8.0),
            ("B", Product::ReserveNeg, 6.0),
            ("C", Product::ReserveNeg, 4.0),
        ]);
        let r = settle(&book, &x, &sheet).unwrap();
        assert_eq!(r.cash_flow("A", Product::Energy), Some(-48.0));
        assert_eq!(r.cash_flow("B", Product::Energy), Some(72.0));
        assert_eq!(r.rent(Product::Energy), 24.0);
        assert_eq!(r.cash_flow("A", Product::ReservePos), Some(-4.0));
        assert_eq!(r.cash_flow("B", Product::ReservePos), Some(32.0));
        assert_eq!(r.rent(Product::ReservePos), 28.0);
        assert_eq!(r.cash_flow("B", Product::ReserveNeg), Some(24.0));
        assert_eq!(r.cash_flow("C", Product::ReserveNeg), Some(-16.0));
        assert_eq!(r.rent(Product::ReserveNeg), 8.0);
        assert_eq!(r.total_rent, 60.0);
        assert_eq!(r.total_surplus, 16.0);
        assert_eq!(r.tsw, 76.0);
    }

    #[test]
    fn zero_trade_settles_to_zero() {
        let book = fixture::bid_book();
        let r = settle(&book, &[0.0; 9], &PriceSheet::new()).unwrap();
        assert_eq!(r.total_rent, 0.0);
        assert_eq!(r.total_surplus, 0.0);
        assert_eq!(r.tsw, 0.0);
        assert!(r.cash_flows.iter().all(|c| c.cash_flow == 0.0));
    }

    #[test]
    fn missing_price_is_reported() {
        let book = fixture::bid_book();
        let x = [1.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let sheet = prices(&[("A", Product::Energy, 12.0)]);
        match settle(&book, &x, &sheet) {
            Err(Error::MissingPrices(m)) => assert_eq!(m, vec![("B".to_string(), Product::Energy)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn discrepancies_are_listed() {
        let book = fixture::bid_book();
        let x = [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5, 1.0, 1.0];
        let sheet = prices(&[
            ("A", Product::Energy, 14.0),
            ("B", Product::Energy, 18.0),
            ("A", Product::ReservePos, 1.0),
            ("B", Product::ReservePos, 6.0),
            ("B", Product::ReserveNeg, 6.0),
            ("C", Product::ReserveNeg, 4.0),
        ]);
        let r = settle(&book, &x, &sheet).unwrap();
        let reported = vec![
            ("R+.A.1".to_string(), 8.0),
            ("R+.B.8".to_string(), 0.0),
            ("E.B.20".to_string(), 16.0),
        ];
        let d = surplus_discrepancies(&r, &reported);
        assert_eq!(d.len(), 2);
        assert_eq!((d[0].reported, d[0].computed), (8.0, 0.0));
        assert_eq!((d[1].reported, d[1].computed), (0.0, 8.0));
    }
}
