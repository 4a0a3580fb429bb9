//! Seeded random 3-zone instances shared by the property suites.

#![allow(dead_code)]

use coalloc_core::network::LineSpec;
use coalloc_core::{Bid, BidBook, Product, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ZONES: [&str; 3] = ["X", "Y", "Z"];
pub const SEEDS: std::ops::Range<u64> = 0..24;

pub struct Instance {
    pub seed: u64,
    pub topology: Topology,
    pub book: BidBook,
}

/// Bounds on the random bid book.
#[derive(Clone, Copy)]
pub struct Shape {
    pub max_bids: u32,
    pub max_quantity: u32,
}

pub const DEFAULT_SHAPE: Shape = Shape {
    max_bids: 2,
    max_quantity: 3,
};

/// Small enough for exhaustive grid enumeration.
pub const SMALL_SHAPE: Shape = Shape {
    max_bids: 1,
    max_quantity: 2,
};

pub fn instance(seed: u64) -> Instance {
    instance_with(seed, DEFAULT_SHAPE)
}

/// Triangle network with random susceptances and integer capacities, and a
/// book of integer-sized bids per zone, product and side (each side present
/// with probability one half).
pub fn instance_with(seed: u64, shape: Shape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line = |id: u32, from: &str, to: &str, rng: &mut ChaCha8Rng| {
        LineSpec::new(
            id,
            from,
            to,
            rng.gen_range(0.5..2.0),
            rng.gen_range(0..=4) as f64,
        )
    };
    let lines = vec![
        line(1, "X", "Y", &mut rng),
        line(2, "Y", "Z", &mut rng),
        line(3, "X", "Z", &mut rng),
    ];
    let topology = Topology::new(&ZONES, &lines, "X").unwrap();

    let mut bids = Vec::new();
    for zone in ZONES {
        for product in Product::ALL {
            for sign in [1.0, -1.0] {
                if !rng.gen_bool(0.5) {
                    continue;
                }
                for _ in 0..rng.gen_range(1..=shape.max_bids) {
                    let quantity = sign * rng.gen_range(1..=shape.max_quantity) as f64;
                    let price = rng.gen_range(1..=30) as f64;
                    let side = if sign > 0.0 { "d" } else { "s" };
                    let id = format!("{product}.{zone}.{side}{}", bids.len());
                    bids.push(Bid::new(id, product, zone, quantity, price));
                }
            }
        }
    }
    Instance {
        seed,
        topology,
        book: BidBook::new(bids),
    }
}

pub fn instances() -> impl Iterator<Item = Instance> {
    SEEDS.map(instance)
}

/// Random balanced injection vector over the three zones.
pub fn balanced_injections(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a: f64 = rng.gen_range(-10.0..10.0);
    let b: f64 = rng.gen_range(-10.0..10.0);
    vec![a, b, -a - b]
}
