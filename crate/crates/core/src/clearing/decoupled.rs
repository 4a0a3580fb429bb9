use std::collections::BTreeMap;

use super::{ensure_valid, ClearingMode, ClearingOutcome, ZonalVolumes};
use crate::bids::{BidBook, Product, Side};
use crate::network::Topology;
use crate::Result;

/// Clears every zone and product in isolation by merit order.
///
/// Demand is taken in descending price order and supply in ascending order
/// (ties by book order); units trade while the demand price is at least the
/// supply price.
pub fn clear_decoupled(book: &BidBook, topology: &Topology) -> Result<ClearingOutcome> {
    ensure_valid(book, topology)?;

    let mut markets: BTreeMap<(usize, Product), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, bid) in book.bids().iter().enumerate() {
        let z = topology.zone_index(&bid.zone).expect("validated");
        let entry = markets.entry((z, bid.product)).or_default();
        match bid.side() {
            Side::Demand => entry.0.push(i),
            Side::Supply => entry.1.push(i),
        }
    }

    let bids = book.bids();
    let mut acceptances = vec![0.0; book.len()];
    for (mut demand, mut supply) in markets.into_values() {
        // stable sorts keep book order among equal prices
        demand.sort_by(|&a, &b| bids[b].price.total_cmp(&bids[a].price));
        supply.sort_by(|&a, &b| bids[a].price.total_cmp(&bids[b].price));

        let mut d_left: Vec<f64> = demand.iter().map(|&i| bids[i].quantity.abs()).collect();
        let mut s_left: Vec<f64> = supply.iter().map(|&i| bids[i].quantity.abs()).collect();
        let (mut di, mut si) = (0, 0);
        while di < demand.len() && si < supply.len() {
            let (d, s) = (demand[di], supply[si]);
            if bids[d].price < bids[s].price {
                break;
            }
            let traded = d_left[di].min(s_left[si]);
            d_left[di] -= traded;
            s_left[si] -= traded;
            acceptances[d] += traded / bids[d].quantity.abs();
            acceptances[s] += traded / bids[s].quantity.abs();
            if d_left[di] <= 0.0 {
                acceptances[d] = 1.0;
                di += 1;
            }
            if s_left[si] <= 0.0 {
                acceptances[s] = 1.0;
                si += 1;
            }
        }
    }

    let volumes = ZonalVolumes::from_acceptances(book, topology, &acceptances)?;
    Ok(ClearingOutcome {
        mode: ClearingMode::Decoupled,
        tsw: book.welfare(&acceptances),
        base_flows: vec![0.0; topology.lines().len()],
        acceptances,
        volumes,
        recourse: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bids::Bid;
    use crate::fixture;

    #[test]
    fn reference_book_trades_only_in_zone_b() {
        let (topo, book) = fixture::reference_case();
        let out = clear_decoupled(&book, &topo).unwrap();
        assert_eq!(
            out.acceptances,
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(out.tsw, 24.0);
        for z in 0..4 {
            for p in Product::ALL {
                assert_eq!(out.position(z, p), 0.0);
            }
        }
    }

    #[test]
    fn lone_demand_does_not_trade() {
        let (topo, _) = fixture::reference_case();
        let book = BidBook::new(vec![Bid::new("d", Product::Energy, "A", 5.0, 30.0)]);
        let out = clear_decoupled(&book, &topo).unwrap();
        assert_eq!(out.acceptances, vec![0.0]);
        assert_eq!(out.tsw, 0.0);
    }

    #[test]
    fn zone_b_energy_pair() {
        let (topo, _) = fixture::reference_case();
        let book = BidBook::new(vec![
            Bid::new("d", Product::Energy, "B", 8.0, 20.0),
            Bid::new("s", Product::Energy, "B", -8.0, 18.0),
        ]);
        let out = clear_decoupled(&book, &topo).unwrap();
        assert_eq!(out.acceptances, vec![1.0, 1.0]);
        assert_eq!(out.tsw, 16.0);
    }

    #[test]
    fn partial_acceptance_of_marginal_supply() {
        let (topo, _) = fixture::reference_case();
        let book = BidBook::new(vec![
            Bid::new("s1", Product::Energy, "C", -2.0, 5.0),
            Bid::new("d", Product::Energy, "C", 3.0, 9.0),
            Bid::new("s2", Product::Energy, "C", -4.0, 7.0),
        ]);
        let out = clear_decoupled(&book, &topo).unwrap();
        assert_eq!(out.acceptances, vec![1.0, 1.0, 0.25]);
        assert!((out.tsw - (27.0 - 10.0 - 7.0)).abs() < 1e-12);
    }
}
