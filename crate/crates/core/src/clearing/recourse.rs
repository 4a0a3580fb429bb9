//! Recourse programs for a fixed dispatch: deliverability witnesses and
//! worst-case line loads.

use std::fmt;

use super::vertices::{enumerate_vertices, ActivationVertex};
use super::{reserve_injections, ClearingConfig, ClearingOutcome, RecoursePlan, ZonalVolumes};
use crate::bids::{BidBook, Product};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Var};
use crate::network::{build_ptdf, PtdfMatrix, Topology};
use crate::{Error, Result};

/// Slack allowed on line limits when judging a recourse plan.
pub const LOAD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Positive => "+",
            Direction::Negative => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineLoad {
    pub line_id: u32,
    /// Signed flow in the line's reference direction.
    pub load: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Deliverability {
    Witness(RecoursePlan),
    /// No recourse keeps every line within limits. `plan` is the least
    /// overloading activation found, `None` when accepted supply cannot even
    /// restore the balance.
    Violated {
        plan: Option<RecoursePlan>,
        lines: Vec<LineLoad>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexVerdict {
    pub vertex: ActivationVertex,
    pub verdict: Deliverability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliverabilityReport {
    pub feasible: bool,
    /// Lines overloaded by the energy schedule alone.
    pub base_violations: Vec<LineLoad>,
    pub vertices: Vec<VertexVerdict>,
}

impl DeliverabilityReport {
    pub fn violations(&self) -> impl Iterator<Item = (&ActivationVertex, &LineLoad)> {
        self.vertices.iter().flat_map(|v| match &v.verdict {
            Deliverability::Violated { lines, .. } => {
                lines.iter().map(move |l| (&v.vertex, l)).collect()
            }
            Deliverability::Witness(_) => Vec::new(),
        })
    }
}

type Expr = Vec<(Var, f64)>;

struct RecourseLp {
    lp: LinearProgram,
    up: Vec<Option<Var>>,
    down: Vec<Option<Var>>,
    activation: Expr,
    // flow_j = constant_j + terms_j . a
    constant: Vec<f64>,
    terms: Vec<Expr>,
}

impl RecourseLp {
    fn plan(&self, solution: &lp::LpSolution) -> RecoursePlan {
        let read = |slots: &[Option<Var>]| {
            slots
                .iter()
                .map(|s| s.map_or(0.0, |v| solution.value(v).max(0.0)))
                .collect()
        };
        RecoursePlan {
            up: read(&self.up),
            down: read(&self.down),
        }
    }
}

/// A fixed energy schedule and reserve allocation on a network.
#[derive(Debug, Clone)]
pub struct Dispatch<'a> {
    topology: &'a Topology,
    ptdf: PtdfMatrix,
    volumes: ZonalVolumes,
    energy: Vec<f64>,
    base_flows: Vec<f64>,
}

impl<'a> Dispatch<'a> {
    pub fn new(topology: &'a Topology, volumes: ZonalVolumes) -> Result<Self> {
        let ptdf = build_ptdf(topology)?;
        Ok(Self::with_ptdf(topology, ptdf, volumes))
    }

    pub fn with_ptdf(topology: &'a Topology, ptdf: PtdfMatrix, volumes: ZonalVolumes) -> Self {
        let energy = volumes.energy_injections();
        let base_flows = ptdf.flows_unchecked(&energy);
        Self {
            topology,
            ptdf,
            volumes,
            energy,
            base_flows,
        }
    }

    pub fn volumes(&self) -> &ZonalVolumes {
        &self.volumes
    }

    pub fn base_flows(&self) -> &[f64] {
        &self.base_flows
    }

    /// Line flows of the energy schedule plus a realisation and its recourse.
    pub fn flows(&self, up: &[f64], down: &[f64], plan: &RecoursePlan) -> Vec<f64> {
        let reserve = reserve_injections(up, down, plan);
        let total: Vec<f64> = self
            .energy
            .iter()
            .zip(&reserve)
            .map(|(e, r)| e + r)
            .collect();
        self.ptdf.flows_unchecked(&total)
    }

    fn overloads(&self, flows: &[f64]) -> Vec<LineLoad> {
        self.topology
            .lines()
            .iter()
            .zip(flows)
            .filter(|(line, f)| f.abs() > line.capacity + LOAD_TOL)
            .map(|(line, &f)| LineLoad {
                line_id: line.id,
                load: f,
                capacity: line.capacity,
            })
            .collect()
    }

    fn recourse_lp(&self, up: &[f64], down: &[f64]) -> Result<RecourseLp> {
        let n = self.volumes.num_zones();
        let mut lp = LinearProgram::new();
        let mut up_vars = vec![None; n];
        let mut down_vars = vec![None; n];
        let mut balance = Vec::new();
        let mut activation = Vec::new();
        for z in 0..n {
            let s_up = self.volumes.supply(z, Product::ReservePos);
            if s_up > 0.0 {
                let v = lp.add_variable(0.0, s_up, 0.0);
                up_vars[z] = Some(v);
                balance.push((v, 1.0));
                activation.push((v, 1.0));
            }
            let s_down = self.volumes.supply(z, Product::ReserveNeg);
            if s_down > 0.0 {
                let v = lp.add_variable(0.0, s_down, 0.0);
                down_vars[z] = Some(v);
                balance.push((v, -1.0));
                activation.push((v, 1.0));
            }
        }
        let net: f64 = up.iter().sum::<f64>() - down.iter().sum::<f64>();
        lp.add_constraint("activation", balance, Relation::Eq, net)?;

        let lines = self.topology.lines().len();
        let mut constant = self.base_flows.clone();
        let mut terms = vec![Vec::new(); lines];
        for j in 0..lines {
            for z in 0..n {
                let coef = self.ptdf.injection_coefficient(z, j);
                if coef == 0.0 {
                    continue;
                }
                constant[j] += coef * (down[z] - up[z]);
                if let Some(v) = up_vars[z] {
                    terms[j].push((v, coef));
                }
                if let Some(v) = down_vars[z] {
                    terms[j].push((v, -coef));
                }
            }
        }
        Ok(RecourseLp {
            lp,
            up: up_vars,
            down: down_vars,
            activation,
            constant,
            terms,
        })
    }

    /// Whether some recourse keeps every line within its limit for the
    /// realisation `(up, down)`.
    pub fn realization_feasible(&self, up: &[f64], down: &[f64]) -> Result<bool> {
        let mut model = self.recourse_lp(up, down)?;
        for (j, line) in self.topology.lines().iter().enumerate() {
            let slack = line.capacity + LOAD_TOL;
            let terms = std::mem::take(&mut model.terms[j]);
            let c = model.constant[j];
            model.lp.add_constraint(
                format!("line:{}:max", line.id),
                terms.clone(),
                Relation::Le,
                slack - c,
            )?;
            model.lp.add_constraint(
                format!("line:{}:min", line.id),
                terms,
                Relation::Ge,
                -slack - c,
            )?;
        }
        let solution = lp::solve(&model.lp)?;
        status_to_bool(solution.status)
    }

    /// Recourse minimising the largest relative line loading, then total
    /// activation. `None` when no balancing activation exists.
    pub fn minimax_recourse(
        &self,
        up: &[f64],
        down: &[f64],
    ) -> Result<Option<(RecoursePlan, f64)>> {
        let mut model = self.recourse_lp(up, down)?;
        let t = model.lp.add_variable(0.0, f64::INFINITY, -1.0);
        for (j, line) in self.topology.lines().iter().enumerate() {
            let c = model.constant[j];
            let mut upper = model.terms[j].clone();
            upper.push((t, -line.capacity));
            let mut lower: Expr = model.terms[j].iter().map(|&(v, a)| (v, -a)).collect();
            lower.push((t, -line.capacity));
            model
                .lp
                .add_constraint(format!("line:{}:max", line.id), upper, Relation::Le, -c)?;
            model
                .lp
                .add_constraint(format!("line:{}:min", line.id), lower, Relation::Le, c)?;
        }
        let first = lp::solve(&model.lp)?;
        if !status_to_bool(first.status)? {
            return Ok(None);
        }
        let t_star = first.value(t);
        let mut face = lp::optimal_face(&model.lp, &first)?;
        face.clear_objective();
        for &(v, _) in &model.activation {
            face.set_objective(v, -1.0);
        }
        let second = lp::solve(&face)?;
        if !second.is_optimal() {
            return Err(Error::SolverFailure(format!(
                "minimum-activation stage ended {:?}",
                second.status
            )));
        }
        Ok(Some((model.plan(&second), t_star)))
    }

    /// Recourse covering the realisation with the least total activation.
    pub fn min_activation_recourse(
        &self,
        up: &[f64],
        down: &[f64],
    ) -> Result<Option<(RecoursePlan, f64)>> {
        let mut model = self.recourse_lp(up, down)?;
        for &(v, _) in &model.activation {
            model.lp.set_objective(v, -1.0);
        }
        let solution = lp::solve(&model.lp)?;
        if !status_to_bool(solution.status)? {
            return Ok(None);
        }
        Ok(Some((model.plan(&solution), -solution.objective)))
    }

    /// Largest directional load on line `j` over all least-activation
    /// recourse plans.
    fn adversarial_load(
        &self,
        up: &[f64],
        down: &[f64],
        least: f64,
        j: usize,
        direction: Direction,
    ) -> Result<(RecoursePlan, f64)> {
        let mut model = self.recourse_lp(up, down)?;
        let activation = model.activation.clone();
        model.lp.add_constraint(
            "least-activation",
            activation,
            Relation::Le,
            least + 1e-9 * least.max(1.0),
        )?;
        let sign = direction.sign();
        for &(v, a) in &model.terms[j] {
            model.lp.set_objective(v, sign * a);
        }
        let solution = lp::solve(&model.lp)?;
        if !solution.is_optimal() {
            return Err(Error::SolverFailure(format!(
                "worst-case load program ended {:?}",
                solution.status
            )));
        }
        let plan = model.plan(&solution);
        let load = sign * self.flows(up, down, &plan)[j];
        Ok((plan, load))
    }

    fn verdict(&self, vertex: &ActivationVertex) -> Result<Deliverability> {
        if let Some((plan, _)) = self.minimax_recourse(&vertex.up, &vertex.down)? {
            let lines = self.overloads(&self.flows(&vertex.up, &vertex.down, &plan));
            return Ok(if lines.is_empty() {
                Deliverability::Witness(plan)
            } else {
                Deliverability::Violated {
                    plan: Some(plan),
                    lines,
                }
            });
        }
        Ok(
            match self.min_activation_recourse(&vertex.up, &vertex.down)? {
                Some((plan, _)) => Deliverability::Violated {
                    lines: self.overloads(&self.flows(&vertex.up, &vertex.down, &plan)),
                    plan: Some(plan),
                },
                None => Deliverability::Violated {
                    plan: None,
                    lines: Vec::new(),
                },
            },
        )
    }

    pub fn vertices(&self, config: &ClearingConfig) -> Result<Vec<ActivationVertex>> {
        enumerate_vertices(&self.volumes.reserve_demands(), config.vertex_cap)
    }

    pub fn check(&self, config: &ClearingConfig) -> Result<DeliverabilityReport> {
        let base_violations = self.overloads(&self.base_flows);
        let mut feasible = base_violations.is_empty();
        let mut vertices = Vec::new();
        for vertex in self.vertices(config)? {
            let verdict = self.verdict(&vertex)?;
            feasible &= matches!(verdict, Deliverability::Witness(_));
            vertices.push(VertexVerdict { vertex, verdict });
        }
        Ok(DeliverabilityReport {
            feasible,
            base_violations,
            vertices,
        })
    }
}

fn status_to_bool(status: LpStatus) -> Result<bool> {
    match status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        other => Err(Error::SolverFailure(format!(
            "recourse program ended {other:?}"
        ))),
    }
}

/// Whether a realisation of reserve demand can be delivered under the
/// accepted volumes.
pub fn realization_feasible(
    topology: &Topology,
    volumes: &ZonalVolumes,
    up: &[f64],
    down: &[f64],
) -> Result<bool> {
    Dispatch::new(topology, volumes.clone())?.realization_feasible(up, down)
}

/// Checks, for fixed acceptances, that every activation vertex admits a
/// recourse keeping all lines within limits.
pub fn deliverability_check(
    acceptances: &[f64],
    book: &BidBook,
    topology: &Topology,
    config: &ClearingConfig,
) -> Result<DeliverabilityReport> {
    let volumes = ZonalVolumes::from_acceptances(book, topology, acceptances)?;
    Dispatch::new(topology, volumes)?.check(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseEntry {
    pub line_id: u32,
    pub direction: Direction,
    pub capacity: f64,
    /// Largest load in `direction` over all deliverable vertices.
    pub load: f64,
    /// Index into [`WorstCaseReport::vertices`] of the achieving vertex.
    pub vertex: Option<usize>,
    pub plan: Option<RecoursePlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseReport {
    pub with_recourse: bool,
    pub vertices: Vec<ActivationVertex>,
    pub entries: Vec<WorstCaseEntry>,
    /// Vertices at which accepted supply cannot restore the balance.
    pub unbalanced: Vec<usize>,
}

impl WorstCaseReport {
    pub fn entry(&self, line_id: u32, direction: Direction) -> Option<&WorstCaseEntry> {
        self.entries
            .iter()
            .find(|e| e.line_id == line_id && e.direction == direction)
    }
}

/// Worst-case directional load of every line over the activation vertices.
///
/// Without recourse, each vertex is covered by least total activation and
/// the load is the worst such covering for the line in question. With
/// recourse, each vertex uses the plan minimising the largest relative line
/// loading (ties broken by least total activation); relative loading of a
/// zero-capacity line is unbounded unless its flow is zero.
pub fn worst_case_report(
    outcome: &ClearingOutcome,
    topology: &Topology,
    with_recourse: bool,
    config: &ClearingConfig,
) -> Result<WorstCaseReport> {
    let dispatch = Dispatch::new(topology, outcome.volumes.clone())?;
    let vertices = dispatch.vertices(config)?;
    let lines = topology.lines();
    let directions = [Direction::Positive, Direction::Negative];

    let mut entries: Vec<WorstCaseEntry> = lines
        .iter()
        .flat_map(|line| {
            directions.map(|direction| WorstCaseEntry {
                line_id: line.id,
                direction,
                capacity: line.capacity,
                load: f64::NEG_INFINITY,
                vertex: None,
                plan: None,
            })
        })
        .collect();
    let mut unbalanced = Vec::new();

    let offer = |entry: &mut WorstCaseEntry, k: usize, load: f64, plan: &RecoursePlan| {
        if entry.vertex.is_none() || load > entry.load + 1e-12 {
            entry.load = load;
            entry.vertex = Some(k);
            entry.plan = Some(plan.clone());
        }
    };

    for (k, vertex) in vertices.iter().enumerate() {
        let (up, down) = (&vertex.up, &vertex.down);
        if with_recourse {
            let plan = match dispatch.minimax_recourse(up, down)? {
                Some((plan, _)) => plan,
                None => match dispatch.min_activation_recourse(up, down)? {
                    Some((plan, _)) => plan,
                    None => {
                        unbalanced.push(k);
                        continue;
                    }
                },
            };
            let flows = dispatch.flows(up, down, &plan);
            for (entry, flow) in entries.chunks_mut(2).zip(flows) {
                offer(&mut entry[0], k, flow, &plan);
                offer(&mut entry[1], k, -flow, &plan);
            }
        } else {
            let Some((_, least)) = dispatch.min_activation_recourse(up, down)? else {
                unbalanced.push(k);
                continue;
            };
            for (j, pair) in entries.chunks_mut(2).enumerate() {
                for entry in pair {
                    let (plan, load) =
                        dispatch.adversarial_load(up, down, least, j, entry.direction)?;
                    offer(entry, k, load, &plan);
                }
            }
        }
    }

    for entry in &mut entries {
        if entry.vertex.is_none() {
            entry.load = f64::NAN;
        }
    }

    Ok(WorstCaseReport {
        with_recourse,
        vertices,
        entries,
        unbalanced,
    })
}
