use std::collections::BTreeMap;

use super::vertices::{enumerate_vertices, Activation};
use super::{
    ensure_valid, reserve_injections, ClearingConfig, ClearingMode, ClearingOutcome,
    CommittedRecourse, RecoursePlan, ZonalVolumes,
};
use crate::bids::{BidBook, Product, Side};
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Relation, Var};
use crate::network::{build_ptdf, flows_from_injections, PtdfMatrix, Topology};
use crate::{Error, Result};

const VERIFY_TOL: f64 = 1e-7;

/// The welfare program of a co-allocated clearing together with its optimal
/// solution. Every zone and product with bids has a position-defining
/// equality `sum_i q_i x_i - position = 0`; its dual is the zonal price.
#[derive(Debug, Clone)]
pub struct ClearingProgram {
    pub lp: LinearProgram,
    pub solution: LpSolution,
    price_tags: BTreeMap<(usize, Product), String>,
}

impl ClearingProgram {
    pub fn price_tag(&self, zone: usize, product: Product) -> Option<&str> {
        self.price_tags.get(&(zone, product)).map(String::as_str)
    }

    pub fn price_tags(&self) -> impl Iterator<Item = (usize, Product, &str)> {
        self.price_tags
            .iter()
            .map(|(&(z, p), t)| (z, p, t.as_str()))
    }
}

#[derive(Debug, Clone)]
pub struct CoallocatedClearing {
    pub outcome: ClearingOutcome,
    pub program: ClearingProgram,
}

type Expr = Vec<(Var, f64)>;

fn scaled(expr: &[(Var, f64)], factor: f64) -> impl Iterator<Item = (Var, f64)> + '_ {
    expr.iter().map(move |&(v, a)| (v, a * factor))
}

#[derive(Default, Clone)]
struct ZoneProduct {
    demand_bids: Vec<usize>,
    supply_bids: Vec<usize>,
    position: Option<Var>,
    // accepted demand and supply as expressions in the program variables
    demand: Expr,
    supply: Expr,
}

struct RecourseVars {
    up: Vec<Option<Var>>,
    down: Vec<Option<Var>>,
}

/// Co-allocates energy and reserves in `Balanced` or `Overprocure` mode.
///
/// Welfare-equal optima are resolved by a second solve over the optimal face
/// that maximises `sum_i (n - i) / n * x_i`, favouring earlier bids.
pub fn clear_coallocated(
    book: &BidBook,
    topology: &Topology,
    mode: ClearingMode,
    config: &ClearingConfig,
) -> Result<CoallocatedClearing> {
    if mode == ClearingMode::Decoupled {
        return Err(Error::Internal(
            "co-allocated clearing requires balanced or overprocure mode".into(),
        ));
    }
    ensure_valid(book, topology)?;
    let ptdf = build_ptdf(topology)?;
    let n_zones = topology.zones().len();
    let bids = book.bids();

    let mut lp = LinearProgram::new();
    let x: Vec<Var> = bids
        .iter()
        .map(|b| lp.add_variable(0.0, 1.0, b.full_value()))
        .collect();

    let mut cells = vec![
        [
            ZoneProduct::default(),
            ZoneProduct::default(),
            ZoneProduct::default()
        ];
        n_zones
    ];
    for (i, bid) in bids.iter().enumerate() {
        let z = topology.zone_index(&bid.zone).expect("validated");
        let cell = &mut cells[z][bid.product.index()];
        match bid.side() {
            Side::Demand => cell.demand_bids.push(i),
            Side::Supply => cell.supply_bids.push(i),
        }
    }

    let mut price_tags = BTreeMap::new();
    for (z, zone_cells) in cells.iter_mut().enumerate() {
        for product in Product::ALL {
            let cell = &mut zone_cells[product.index()];
            if cell.demand_bids.is_empty() && cell.supply_bids.is_empty() {
                continue;
            }
            let zone = topology.zone_id(z);
            let pos = lp.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0);
            let mut terms: Expr = cell
                .demand_bids
                .iter()
                .chain(&cell.supply_bids)
                .map(|&i| (x[i], bids[i].quantity))
                .collect();
            terms.push((pos, -1.0));
            let tag = format!("price:{zone}:{product}");
            lp.add_constraint(tag.clone(), terms, Relation::Eq, 0.0)?;
            price_tags.insert((z, product), tag);
            cell.position = Some(pos);

            match (cell.demand_bids.is_empty(), cell.supply_bids.is_empty()) {
                (false, true) => cell.demand = vec![(pos, 1.0)],
                (true, false) => cell.supply = vec![(pos, -1.0)],
                _ => {
                    // both sides: demand = position + supply
                    let supply = lp.add_variable(0.0, f64::INFINITY, 0.0);
                    let mut terms: Expr = cell
                        .supply_bids
                        .iter()
                        .map(|&i| (x[i], bids[i].quantity.abs()))
                        .collect();
                    terms.push((supply, -1.0));
                    lp.add_constraint(
                        format!("supply:{zone}:{product}"),
                        terms,
                        Relation::Eq,
                        0.0,
                    )?;
                    cell.supply = vec![(supply, 1.0)];
                    cell.demand = vec![(pos, 1.0), (supply, 1.0)];
                }
            }
        }
    }

    let balanced_products: &[Product] = match mode {
        ClearingMode::Balanced => &Product::ALL,
        _ => &[Product::Energy],
    };
    for &product in balanced_products {
        let terms: Expr = cells
            .iter()
            .filter_map(|c| c[product.index()].position)
            .map(|v| (v, 1.0))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(format!("balance:{product}"), terms, Relation::Eq, 0.0)?;
        }
    }

    // energy injection at z is -position, so flow_j = sum_z ptdf(z, j) * position_z
    let energy_injection: Vec<Expr> = cells
        .iter()
        .map(|c| {
            c[Product::Energy.index()]
                .position
                .map(|v| vec![(v, -1.0)])
                .unwrap_or_default()
        })
        .collect();
    for (j, line) in topology.lines().iter().enumerate() {
        let flow = flow_expr(&ptdf, j, &energy_injection);
        add_line_limits(&mut lp, &format!("base:{}", line.id), flow, line.capacity)?;
    }

    let pattern: Vec<(f64, f64)> = cells
        .iter()
        .map(|c| {
            let has = |p: Product| {
                if c[p.index()].demand_bids.is_empty() {
                    0.0
                } else {
                    1.0
                }
            };
            (has(Product::ReservePos), has(Product::ReserveNeg))
        })
        .collect();
    let vertices = enumerate_vertices(&pattern, config.vertex_cap)?;

    let mut recourse_vars = Vec::with_capacity(vertices.len());
    for (k, vertex) in vertices.iter().enumerate() {
        let mut vars = RecourseVars {
            up: vec![None; n_zones],
            down: vec![None; n_zones],
        };
        let mut balance: Expr = Vec::new();
        let mut injection = energy_injection.clone();
        for z in 0..n_zones {
            let zone = topology.zone_id(z);
            for (product, slot, sign) in [
                (Product::ReservePos, &mut vars.up[z], 1.0),
                (Product::ReserveNeg, &mut vars.down[z], -1.0),
            ] {
                let cell = &cells[z][product.index()];
                if cell.supply_bids.is_empty() {
                    continue;
                }
                let a = lp.add_variable(0.0, f64::INFINITY, 0.0);
                let mut terms = vec![(a, 1.0)];
                terms.extend(scaled(&cell.supply, -1.0));
                lp.add_constraint(
                    format!("recourse:{k}:{zone}:{product}"),
                    terms,
                    Relation::Le,
                    0.0,
                )?;
                *slot = Some(a);
                balance.push((a, sign));
                injection[z].push((a, sign));
            }
            match vertex.pattern[z] {
                Activation::Idle => {}
                Activation::Up => {
                    let demand = &cells[z][Product::ReservePos.index()].demand;
                    balance.extend(scaled(demand, -1.0));
                    injection[z].extend(scaled(demand, -1.0));
                }
                Activation::Down => {
                    let demand = &cells[z][Product::ReserveNeg.index()].demand;
                    balance.extend(scaled(demand, 1.0));
                    injection[z].extend(scaled(demand, 1.0));
                }
            }
        }
        lp.add_constraint(format!("activation:{k}"), balance, Relation::Eq, 0.0)?;
        for (j, line) in topology.lines().iter().enumerate() {
            let flow = flow_expr(&ptdf, j, &injection);
            add_line_limits(
                &mut lp,
                &format!("line:{k}:{}", line.id),
                flow,
                line.capacity,
            )?;
        }
        recourse_vars.push(vars);
    }

    let solution = lp::solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::SolverFailure => {
            return Err(Error::SolverFailure(
                "clearing program failed to solve".into(),
            ))
        }
        other => {
            return Err(Error::Internal(format!("clearing program ended {other:?}")));
        }
    }

    // tie-break among welfare-optimal solutions
    let mut tie_break = lp::optimal_face(&lp, &solution)?;
    tie_break.clear_objective();
    let n_bids = bids.len() as f64;
    for (i, &v) in x.iter().enumerate() {
        tie_break.set_objective(v, (n_bids - i as f64) / n_bids);
    }
    let second = lp::solve(&tie_break)?;
    let optimum = solution.objective;
    let chosen = if second.is_optimal()
        && lp.objective_value(&second.primal) >= optimum - 1e-9 * optimum.abs().max(1.0)
    {
        second
    } else {
        solution.clone()
    };

    let acceptances: Vec<f64> = x.iter().map(|&v| chosen.value(v).clamp(0.0, 1.0)).collect();
    let volumes = ZonalVolumes::from_acceptances(book, topology, &acceptances)?;
    let energy = volumes.energy_injections();
    let base_flows = flows_from_injections(&ptdf, &energy)?;

    let realized = enumerate_vertices(&pattern, config.vertex_cap)?
        .into_iter()
        .map(|mut v| {
            for z in 0..n_zones {
                v.up[z] = if v.pattern[z] == Activation::Up {
                    volumes.demand(z, Product::ReservePos)
                } else {
                    0.0
                };
                v.down[z] = if v.pattern[z] == Activation::Down {
                    volumes.demand(z, Product::ReserveNeg)
                } else {
                    0.0
                };
            }
            v
        });
    let mut recourse = Vec::with_capacity(vertices.len());
    for (vertex, vars) in realized.zip(&recourse_vars) {
        let read = |slot: &[Option<Var>]| -> Vec<f64> {
            slot.iter()
                .map(|v| v.map_or(0.0, |v| chosen.value(v).max(0.0)))
                .collect()
        };
        let plan = RecoursePlan {
            up: read(&vars.up),
            down: read(&vars.down),
        };
        verify_committed(
            topology,
            &ptdf,
            &volumes,
            &energy,
            &vertex.up,
            &vertex.down,
            &plan,
        )?;
        recourse.push(CommittedRecourse { vertex, plan });
    }

    let outcome = ClearingOutcome {
        mode,
        tsw: book.welfare(&acceptances),
        acceptances,
        volumes,
        base_flows,
        recourse,
    };
    Ok(CoallocatedClearing {
        outcome,
        program: ClearingProgram {
            lp,
            solution,
            price_tags,
        },
    })
}

fn flow_expr(ptdf: &PtdfMatrix, line: usize, injection: &[Expr]) -> Expr {
    let mut flow = Vec::new();
    for (z, terms) in injection.iter().enumerate() {
        let coef = ptdf.injection_coefficient(z, line);
        if coef != 0.0 {
            flow.extend(scaled(terms, coef));
        }
    }
    flow
}

fn add_line_limits(lp: &mut LinearProgram, tag: &str, flow: Expr, capacity: f64) -> Result<()> {
    lp.add_constraint(format!("{tag}:max"), flow.clone(), Relation::Le, capacity)?;
    lp.add_constraint(format!("{tag}:min"), flow, Relation::Ge, -capacity)?;
    Ok(())
}

fn verify_committed(
    topology: &Topology,
    ptdf: &PtdfMatrix,
    volumes: &ZonalVolumes,
    energy: &[f64],
    up: &[f64],
    down: &[f64],
    plan: &RecoursePlan,
) -> Result<()> {
    let fail = |what: String| Err(Error::SolverFailure(format!("committed recourse {what}")));
    let imbalance = plan.net_activation() - (up.iter().sum::<f64>() - down.iter().sum::<f64>());
    if imbalance.abs() > VERIFY_TOL {
        return fail(format!("is unbalanced by {imbalance}"));
    }
    for z in 0..energy.len() {
        if plan.up[z] > volumes.supply(z, Product::ReservePos) + VERIFY_TOL
            || plan.down[z] > volumes.supply(z, Product::ReserveNeg) + VERIFY_TOL
        {
            return fail(format!(
                "exceeds accepted supply in zone {}",
                topology.zone_id(z)
            ));
        }
    }
    let reserve = reserve_injections(up, down, plan);
    let total: Vec<f64> = energy.iter().zip(&reserve).map(|(e, r)| e + r).collect();
    let flows = flows_from_injections(ptdf, &total)?;
    for (line, flow) in topology.lines().iter().zip(flows) {
        if flow.abs() > line.capacity + VERIFY_TOL {
            return fail(format!(
                "overloads line {} ({flow} > {})",
                line.id, line.capacity
            ));
        }
    }
    Ok(())
}
