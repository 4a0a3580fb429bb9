//! Brute-force reference clearings for small instances.
//!
//! Acceptances are enumerated on a quantity grid. Per product, only
//! combinations that can be part of a feasible dispatch are kept; the
//! surviving lists are merged in descending welfare order and the first
//! combination whose every activation vertex admits a recourse wins.

use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bids::{BidBook, Product, Side};
use crate::clearing::{
    ensure_valid, ActivationVertex, ClearingConfig, ClearingMode, ClearingOutcome, Dispatch,
    ZonalVolumes, LOAD_TOL,
};
use crate::network::{build_ptdf, PtdfMatrix, Topology};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Acceptance granularity in MWh; must divide every bid quantity.
    pub step: f64,
    /// Number of random realisations drawn by [`sample_realizations`].
    pub samples: usize,
    pub seed: u64,
    /// Largest number of candidate acceptance vectors the oracle may face.
    pub cap: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 1.0,
            samples: 100,
            seed: 0,
            cap: 10_000_000,
        }
    }
}

impl GridSpec {
    /// Number of grid steps in each bid quantity.
    fn levels(&self, book: &BidBook) -> Result<Vec<u32>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        book.bids()
            .iter()
            .map(|bid| {
                let n = bid.quantity.abs() / self.step;
                let rounded = n.round();
                if (n - rounded).abs() > 1e-9 * n.max(1.0) || rounded > u32::MAX as f64 {
                    Err(Error::InvalidGrid(format!(
                        "step {} does not divide the quantity of bid `{}`",
                        self.step, bid.id
                    )))
                } else {
                    Ok(rounded as u32)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub tsw: f64,
    pub acceptances: Vec<f64>,
    /// Size of the full grid.
    pub enumeration_size: u128,
    /// Combinations whose deliverability had to be checked.
    pub candidates_checked: u64,
}

/// Grid points of one product that satisfy its stand-alone constraints.
struct ProductList {
    bids: Vec<usize>,
    // (welfare, levels per bid), sorted by descending welfare
    entries: Vec<(f64, Vec<u32>)>,
}

struct Enumeration<'a> {
    book: &'a BidBook,
    topology: &'a Topology,
    ptdf: &'a PtdfMatrix,
    mode: ClearingMode,
    step: f64,
    levels: Vec<u32>,
}

impl Enumeration<'_> {
    fn acceptance(&self, bid: usize, level: u32) -> f64 {
        if self.levels[bid] == 0 {
            0.0
        } else {
            level as f64 / self.levels[bid] as f64
        }
    }

    fn product_list(&self, product: Product) -> Result<ProductList> {
        let bids: Vec<usize> = self.book.partition(product).map(|(i, _)| i).collect();
        let n_zones = self.topology.zones().len();
        let zone_of: Vec<usize> = bids
            .iter()
            .map(|&i| {
                self.topology
                    .zone_index(&self.book.bids()[i].zone)
                    .expect("validated")
            })
            .collect();

        let mut entries = Vec::new();
        let mut odometer = vec![0u32; bids.len()];
        loop {
            // per-zone demand and supply volumes at this grid point
            let mut demand = vec![0.0; n_zones];
            let mut supply = vec![0.0; n_zones];
            let mut welfare = 0.0;
            for (k, &i) in bids.iter().enumerate() {
                let bid = &self.book.bids()[i];
                let volume = odometer[k] as f64 * self.step;
                welfare += volume * bid.quantity.signum() * bid.price;
                match bid.side() {
                    Side::Demand => demand[zone_of[k]] += volume,
                    Side::Supply => supply[zone_of[k]] += volume,
                }
            }
            if self.admissible(product, &demand, &supply) {
                entries.push((welfare, odometer.clone()));
            }

            let mut k = bids.len();
            loop {
                if k == 0 {
                    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
                    return Ok(ProductList { bids, entries });
                }
                k -= 1;
                odometer[k] += 1;
                if odometer[k] <= self.levels[bids[k]] {
                    break;
                }
                odometer[k] = 0;
            }
        }
    }

    fn admissible(&self, product: Product, demand: &[f64], supply: &[f64]) -> bool {
        let tol = 1e-9;
        let total_d: f64 = demand.iter().sum();
        let total_s: f64 = supply.iter().sum();
        match (self.mode, product) {
            (ClearingMode::Decoupled, _) => demand
                .iter()
                .zip(supply)
                .all(|(d, s)| (d - s).abs() <= tol * d.max(*s).max(1.0)),
            (_, Product::Energy) => {
                if (total_d - total_s).abs() > tol * total_d.max(1.0) {
                    return false;
                }
                let injections: Vec<f64> = supply.iter().zip(demand).map(|(s, d)| s - d).collect();
                let flows = self.ptdf.flows_unchecked(&injections);
                self.topology
                    .lines()
                    .iter()
                    .zip(flows)
                    .all(|(line, f)| f.abs() <= line.capacity + LOAD_TOL)
            }
            (ClearingMode::Balanced, _) => (total_d - total_s).abs() <= tol * total_d.max(1.0),
            // every accepted unit of demand may be activated at once
            (ClearingMode::Overprocure, _) => total_s >= total_d - tol * total_d.max(1.0),
        }
    }

    fn deliverable(&self, acceptances: &[f64]) -> Result<bool> {
        if self.mode == ClearingMode::Decoupled {
            return Ok(true);
        }
        let volumes = ZonalVolumes::from_acceptances(self.book, self.topology, acceptances)?;
        let dispatch = Dispatch::with_ptdf(self.topology, self.ptdf.clone(), volumes);
        for vertex in dispatch.vertices(&ClearingConfig::default())? {
            if !dispatch.realization_feasible(&vertex.up, &vertex.down)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Best grid clearing in the given mode.
///
/// Co-allocated modes check deliverability with a fresh recourse per vertex.
pub fn brute_force_clear(
    book: &BidBook,
    topology: &Topology,
    mode: ClearingMode,
    grid: &GridSpec,
) -> Result<OracleResult> {
    ensure_valid(book, topology)?;
    let levels = grid.levels(book)?;
    let enumeration_size = levels
        .iter()
        .try_fold(1u128, |acc, &l| acc.checked_mul(l as u128 + 1))
        .unwrap_or(u128::MAX);
    if enumeration_size > grid.cap as u128 {
        return Err(Error::EnumerationCap {
            count: enumeration_size,
            cap: grid.cap,
        });
    }

    let ptdf = build_ptdf(topology)?;
    let enumeration = Enumeration {
        book,
        topology,
        ptdf: &ptdf,
        mode,
        step: grid.step,
        levels,
    };
    let lists = Product::ALL
        .iter()
        .map(|&p| enumeration.product_list(p))
        .collect::<Result<Vec<_>>>()?;
    if lists.iter().any(|l| l.entries.is_empty()) {
        // the all-zero point is always admissible
        return Err(Error::Internal("empty product enumeration".into()));
    }

    // best-first merge over the three sorted lists
    let welfare = |idx: &[usize; 3]| -> f64 { (0..3).map(|p| lists[p].entries[idx[p]].0).sum() };
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = [0usize; 3];
    heap.push(Candidate {
        welfare: welfare(&start),
        index: start,
    });
    seen.insert(start);
    let mut checked = 0u64;
    while let Some(Candidate { welfare: w, index }) = heap.pop() {
        let mut acceptances = vec![0.0; book.len()];
        for (p, list) in lists.iter().enumerate() {
            for (k, &i) in list.bids.iter().enumerate() {
                acceptances[i] = enumeration.acceptance(i, list.entries[index[p]].1[k]);
            }
        }
        checked += 1;
        if enumeration.deliverable(&acceptances)? {
            return Ok(OracleResult {
                tsw: w,
                acceptances,
                enumeration_size,
                candidates_checked: checked,
            });
        }
        for p in 0..3 {
            let mut next = index;
            next[p] += 1;
            if next[p] < lists[p].entries.len() && seen.insert(next) {
                heap.push(Candidate {
                    welfare: welfare(&next),
                    index: next,
                });
            }
        }
    }
    Err(Error::Internal(
        "no deliverable grid point (the zero dispatch should be)".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    welfare: f64,
    index: [usize; 3],
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap on welfare, then prefer lexicographically smaller indices
        self.welfare
            .total_cmp(&other.welfare)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingReport {
    pub samples: usize,
    pub violations: usize,
    /// The first realisation without a feasible recourse.
    pub first_violation: Option<ActivationVertex>,
}

/// Draws random realisations inside the accepted reserve demand and checks
/// that each admits a recourse. Each zone with reserve demand picks one
/// direction uniformly among those it holds and a uniform magnitude.
pub fn sample_realizations(
    outcome: &ClearingOutcome,
    topology: &Topology,
    grid: &GridSpec,
) -> Result<SamplingReport> {
    let dispatch = Dispatch::new(topology, outcome.volumes.clone())?;
    let demands = outcome.volumes.reserve_demands();
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut violations = 0;
    let mut first_violation = None;
    for _ in 0..grid.samples {
        let vertex = draw(&mut rng, &demands);
        if !dispatch.realization_feasible(&vertex.up, &vertex.down)? {
            violations += 1;
            first_violation.get_or_insert(vertex);
        }
    }
    Ok(SamplingReport {
        samples: grid.samples,
        violations,
        first_violation,
    })
}

fn draw(rng: &mut ChaCha8Rng, demands: &[(f64, f64)]) -> ActivationVertex {
    use crate::clearing::Activation;
    let n = demands.len();
    let mut vertex = ActivationVertex {
        pattern: vec![Activation::Idle; n],
        up: vec![0.0; n],
        down: vec![0.0; n],
    };
    for (z, &(d_up, d_down)) in demands.iter().enumerate() {
        let go_up = match (d_up > 0.0, d_down > 0.0) {
            (false, false) => continue,
            (true, false) => true,
            (false, true) => false,
            (true, true) => rng.gen_bool(0.5),
        };
        let share: f64 = rng.gen();
        if go_up {
            vertex.pattern[z] = Activation::Up;
            vertex.up[z] = share * d_up;
        } else {
            vertex.pattern[z] = Activation::Down;
            vertex.down[z] = share * d_down;
        }
    }
    vertex
}
