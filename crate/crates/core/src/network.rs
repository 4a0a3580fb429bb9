//! Zonal network model: topology, PTDF matrix and lossless DC line flows.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Tolerance on the sum of zonal injections.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub index: usize,
}

/// A transmission line between two zones. Positive flow runs `from -> to`;
/// `capacity` bounds the absolute flow in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: u32,
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    pub capacity: f64,
}

/// Caller-facing description of a line, with zones referenced by id.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub id: u32,
    pub from: String,
    pub to: String,
    pub susceptance: f64,
    pub capacity: f64,
}

impl LineSpec {
    pub fn new(id: u32, from: &str, to: &str, susceptance: f64, capacity: f64) -> Self {
        Self {
            id,
            from: from.to_owned(),
            to: to.to_owned(),
            susceptance,
            capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    zones: Vec<Zone>,
    lines: Vec<Line>,
    slack: usize,
    by_id: HashMap<String, usize>,
}

impl Topology {
    /// Builds a topology, checking ids, endpoints and line parameters.
    /// Connectivity is checked when the PTDF is built.
    pub fn new<S: AsRef<str>>(zone_ids: &[S], lines: &[LineSpec], slack: &str) -> Result<Self> {
        let mut zones = Vec::with_capacity(zone_ids.len());
        let mut by_id = HashMap::new();
        for (index, id) in zone_ids.iter().enumerate() {
            let id = id.as_ref();
            if id.is_empty() {
                return Err(Error::InvalidTopology("empty zone id".into()));
            }
            if by_id.insert(id.to_owned(), index).is_some() {
                return Err(Error::InvalidTopology(format!("duplicate zone id `{id}`")));
            }
            zones.push(Zone {
                id: id.to_owned(),
                index,
            });
        }
        let slack = *by_id
            .get(slack)
            .ok_or_else(|| Error::InvalidTopology(format!("slack zone `{slack}` is not a zone")))?;

        let mut resolved = Vec::with_capacity(lines.len());
        let mut line_ids = HashMap::new();
        for spec in lines {
            let endpoint = |id: &str| {
                by_id.get(id).copied().ok_or_else(|| {
                    Error::InvalidTopology(format!(
                        "line {} references unknown zone `{id}`",
                        spec.id
                    ))
                })
            };
            let from = endpoint(&spec.from)?;
            let to = endpoint(&spec.to)?;
            if from == to {
                return Err(Error::InvalidTopology(format!(
                    "line {} connects zone `{}` to itself",
                    spec.id, spec.from
                )));
            }
            if !(spec.susceptance.is_finite() && spec.susceptance > 0.0) {
                return Err(Error::InvalidTopology(format!(
                    "line {} has non-positive susceptance {}",
                    spec.id, spec.susceptance
                )));
            }
            if !(spec.capacity.is_finite() && spec.capacity >= 0.0) {
                return Err(Error::InvalidTopology(format!(
                    "line {} has invalid capacity {}",
                    spec.id, spec.capacity
                )));
            }
            if line_ids.insert(spec.id, ()).is_some() {
                return Err(Error::InvalidTopology(format!(
                    "duplicate line id {}",
                    spec.id
                )));
            }
            resolved.push(Line {
                id: spec.id,
                from,
                to,
                susceptance: spec.susceptance,
                capacity: spec.capacity,
            });
        }

        Ok(Self {
            zones,
            lines: resolved,
            slack,
            by_id,
        })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn zone_id(&self, index: usize) -> &str {
        &self.zones[index].id
    }

    /// Same network with every line capacity replaced.
    pub fn with_capacities(&self, capacities: &[f64]) -> Result<Self> {
        if capacities.len() != self.lines.len() {
            return Err(Error::InvalidTopology(format!(
                "expected {} capacities, got {}",
                self.lines.len(),
                capacities.len()
            )));
        }
        let mut out = self.clone();
        for (line, &cap) in out.lines.iter_mut().zip(capacities) {
            if !(cap.is_finite() && cap >= 0.0) {
                return Err(Error::InvalidTopology(format!(
                    "line {} has invalid capacity {cap}",
                    line.id
                )));
            }
            line.capacity = cap;
        }
        Ok(out)
    }

    /// Same network with a different reference zone.
    pub fn with_slack(&self, slack: &str) -> Result<Self> {
        let slack = self
            .zone_index(slack)
            .ok_or_else(|| Error::InvalidTopology(format!("slack zone `{slack}` is not a zone")))?;
        Ok(Self {
            slack,
            ..self.clone()
        })
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.zones.len();
        let mut adjacency = vec![Vec::new(); n];
        for line in &self.lines {
            adjacency[line.from].push(line.to);
            adjacency[line.to].push(line.from);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(z) = queue.pop_front() {
            for &next in &adjacency[z] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(z) => Err(Error::Disconnected(self.zones[z].id.clone())),
            None => Ok(()),
        }
    }
}

/// Linear map from zonal transfers to line flows.
///
/// Entry `(i, j)` is the flow on line `j` when one unit is injected at the
/// slack zone and withdrawn at zone `i`. The slack row is identically zero
/// and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfMatrix {
    slack: usize,
    num_zones: usize,
    num_lines: usize,
    // indexed by zone; `None` for the slack
    rows: Vec<Option<Vec<f64>>>,
}

impl PtdfMatrix {
    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn num_zones(&self) -> usize {
        self.num_zones
    }

    pub fn num_lines(&self) -> usize {
        self.num_lines
    }

    /// PTDF factor of `zone` on `line`; zero for the slack zone.
    pub fn factor(&self, zone: usize, line: usize) -> f64 {
        self.rows[zone].as_ref().map_or(0.0, |row| row[line])
    }

    /// Stored rows, in zone order, skipping the slack.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(z, row)| row.as_deref().map(|r| (z, r)))
    }

    /// Coefficient of a zonal injection in the flow of `line`.
    pub fn injection_coefficient(&self, zone: usize, line: usize) -> f64 {
        -self.factor(zone, line)
    }

    /// Line flows without the balance check; callers guarantee balance.
    pub(crate) fn flows_unchecked(&self, injections: &[f64]) -> Vec<f64> {
        (0..self.num_lines)
            .map(|j| {
                injections
                    .iter()
                    .enumerate()
                    .map(|(z, &inj)| -inj * self.factor(z, j))
                    .sum()
            })
            .collect()
    }
}

/// PTDF by lossless DC power flow over the reduced susceptance Laplacian.
pub fn build_ptdf(topology: &Topology) -> Result<PtdfMatrix> {
    topology.check_connected()?;
    let n = topology.zones.len();
    let slack = topology.slack;
    let num_lines = topology.lines.len();

    // reduced index of each non-slack zone
    let reduced: Vec<Option<usize>> = {
        let mut next = 0;
        (0..n)
            .map(|z| {
                (z != slack).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };

    let m = n - 1;
    let mut laplacian = DMatrix::<f64>::zeros(m, m);
    for line in &topology.lines {
        let b = line.susceptance;
        if let Some(f) = reduced[line.from] {
            laplacian[(f, f)] += b;
        }
        if let Some(t) = reduced[line.to] {
            laplacian[(t, t)] += b;
        }
        if let (Some(f), Some(t)) = (reduced[line.from], reduced[line.to]) {
            laplacian[(f, t)] -= b;
            laplacian[(t, f)] -= b;
        }
    }

    let mut rows = vec![None; n];
    if m > 0 {
        let lu = laplacian.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularLaplacian);
        }
        for z in 0..n {
            let Some(r) = reduced[z] else { continue };
            // withdraw one unit at z; the slack absorbs the balance
            let mut rhs = DVector::<f64>::zeros(m);
            rhs[r] = -1.0;
            let theta_red = lu.solve(&rhs).ok_or(Error::SingularLaplacian)?;
            let theta = |zone: usize| reduced[zone].map_or(0.0, |i| theta_red[i]);
            let row = topology
                .lines
                .iter()
                .map(|line| line.susceptance * (theta(line.from) - theta(line.to)))
                .collect();
            rows[z] = Some(row);
        }
    }

    Ok(PtdfMatrix {
        slack,
        num_zones: n,
        num_lines,
        rows,
    })
}

/// Line flows (signed by reference direction) for a balanced vector of
/// zonal injections indexed by zone.
pub fn flows_from_injections(ptdf: &PtdfMatrix, injections: &[f64]) -> Result<Vec<f64>> {
    if injections.len() != ptdf.num_zones {
        return Err(Error::InvalidTopology(format!(
            "expected {} zonal injections, got {}",
            ptdf.num_zones,
            injections.len()
        )));
    }
    let net: f64 = injections.iter().sum();
    let scale = injections.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if net.abs() > BALANCE_TOL * scale {
        return Err(Error::Unbalanced(net));
    }
    Ok(ptdf.flows_unchecked(injections))
}
