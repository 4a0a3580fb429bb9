use std::fmt::Write;

use crate::network::Topology;
use crate::{Error, Result};

pub const DEFAULT_VERTEX_CAP: usize = 10_000;

/// Realised reserve demand in one zone at an activation vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Idle,
    Up,
    Down,
}

/// Extreme realisation of zonal reserve demand: each zone is idle, fully
/// activates its positive demand, or fully activates its negative demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationVertex {
    pub pattern: Vec<Activation>,
    /// Realised positive reserve demand per zone.
    pub up: Vec<f64>,
    /// Realised negative reserve demand per zone.
    pub down: Vec<f64>,
}

impl ActivationVertex {
    /// Net system reserve demand, `sum(r+) - sum(r-)`.
    pub fn net_demand(&self) -> f64 {
        self.up.iter().sum::<f64>() - self.down.iter().sum::<f64>()
    }

    pub fn is_idle(&self) -> bool {
        self.pattern.iter().all(|a| *a == Activation::Idle)
    }

    /// Compact label such as `B+` or `B+ C-`; `idle` when nothing activates.
    pub fn label(&self, topology: &Topology) -> String {
        let mut out = String::new();
        for (z, a) in self.pattern.iter().enumerate() {
            let sign = match a {
                Activation::Idle => continue,
                Activation::Up => '+',
                Activation::Down => '-',
            };
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "{}{sign}", topology.zone_id(z));
        }
        if out.is_empty() {
            out.push_str("idle");
        }
        out
    }
}

/// All activation vertices for the given accepted reserve demands `(D+, D-)`
/// per zone. Zones vary in index order with the last zone fastest; per zone
/// the options are idle, up (if `D+ > 0`), down (if `D- > 0`).
pub fn enumerate_vertices(demands: &[(f64, f64)], cap: usize) -> Result<Vec<ActivationVertex>> {
    let mut options: Vec<Vec<Activation>> = Vec::with_capacity(demands.len());
    for &(up, down) in demands {
        if !(up >= 0.0 && down >= 0.0) {
            return Err(Error::Internal(format!(
                "reserve demand must be nonnegative, got ({up}, {down})"
            )));
        }
        let mut opts = vec![Activation::Idle];
        if up > 0.0 {
            opts.push(Activation::Up);
        }
        if down > 0.0 {
            opts.push(Activation::Down);
        }
        options.push(opts);
    }

    let count = options
        .iter()
        .try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128))
        .unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::VertexCap { count, cap });
    }

    let n = demands.len();
    let mut vertices = Vec::with_capacity(count as usize);
    let mut odometer = vec![0usize; n];
    loop {
        let pattern: Vec<Activation> = odometer.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        let up = pattern
            .iter()
            .zip(demands)
            .map(|(a, d)| if *a == Activation::Up { d.0 } else { 0.0 })
            .collect();
        let down = pattern
            .iter()
            .zip(demands)
            .map(|(a, d)| if *a == Activation::Down { d.1 } else { 0.0 })
            .collect();
        vertices.push(ActivationVertex { pattern, up, down });

        // advance, last zone fastest
        let mut z = n;
        loop {
            if z == 0 {
                return Ok(vertices);
            }
            z -= 1;
            odometer[z] += 1;
            if odometer[z] < options[z].len() {
                break;
            }
            odometer[z] = 0;
        }
    }
}
