//! Dense two-phase primal simplex for small maximisation programs.
//!
//! Variables carry lower and upper bounds (either may be infinite) and every
//! constraint carries a unique tag. Pivoting follows Bland's least-index rule,
//! so results are deterministic and the method cannot cycle. Dual values are
//! read off the final tableau and are the sensitivities of the optimal value
//! to each constraint's right-hand side.

use std::collections::HashMap;

use crate::{Error, Result};

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Optimality and duality tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
// Slack on the optimal objective when describing the optimal dual face.
const DUAL_FACE_TOL: f64 = 1e-9;
// Relative distance under which a row or bound counts as attained.
const CS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: String,
    pub terms: Vec<(Var, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }
}

/// `maximize c·x` subject to tagged linear constraints and variable bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    tags: HashMap<String, usize>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, lower: f64, upper: f64, objective: f64) -> Var {
        self.variables.push(Variable {
            lower,
            upper,
            objective,
        });
        Var(self.variables.len() - 1)
    }

    pub fn set_objective(&mut self, var: Var, coefficient: f64) {
        self.variables[var.0].objective = coefficient;
    }

    pub fn clear_objective(&mut self) {
        for v in &mut self.variables {
            v.objective = 0.0;
        }
    }

    pub fn add_constraint(
        &mut self,
        tag: impl Into<String>,
        terms: Vec<(Var, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize> {
        let tag = tag.into();
        if self.tags.contains_key(&tag) {
            return Err(Error::InvalidProgram(format!(
                "duplicate constraint tag `{tag}`"
            )));
        }
        let index = self.constraints.len();
        self.tags.insert(tag.clone(), index);
        self.constraints.push(Constraint {
            tag,
            terms,
            relation,
            rhs,
        });
        Ok(index)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint_index(&self, tag: &str) -> Option<usize> {
        self.tags.get(tag).copied()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, xi)| v.objective * xi)
            .sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| {
            let lhs = c.activity(x);
            match c.relation {
                Relation::Le => (lhs - c.rhs).max(0.0),
                Relation::Ge => (c.rhs - lhs).max(0.0),
                Relation::Eq => (lhs - c.rhs).abs(),
            }
        });
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidProgram(format!(
                    "variable {j} has bounds [{}, {}]",
                    v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::InvalidProgram(format!(
                    "variable {j} has an empty domain"
                )));
            }
            if !v.objective.is_finite() {
                return Err(Error::InvalidProgram(format!(
                    "variable {j} has non-finite objective coefficient"
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidProgram(format!(
                    "constraint `{}` has non-finite rhs",
                    c.tag
                )));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(Error::InvalidProgram(format!(
                        "constraint `{}` references unknown variable {}",
                        c.tag, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidProgram(format!(
                        "constraint `{}` has a non-finite coefficient",
                        c.tag
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One dual value per constraint, in constraint order.
    pub duals: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without_values(status: LpStatus, lp: &LinearProgram) -> Self {
        Self {
            status,
            primal: vec![0.0; lp.variables.len()],
            duals: vec![0.0; lp.constraints.len()],
            objective: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: Var) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, lp: &LinearProgram, tag: &str) -> Result<f64> {
        let k = lp
            .constraint_index(tag)
            .ok_or_else(|| Error::UnknownTag(tag.to_owned()))?;
        Ok(self.duals[k])
    }
}

/// Reduced costs `c_j - A_j^T y` of every variable.
pub fn reduced_costs(lp: &LinearProgram, duals: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = lp.variables.iter().map(|v| v.objective).collect();
    for (c, &y) in lp.constraints.iter().zip(duals) {
        for &(v, a) in &c.terms {
            d[v.0] -= a * y;
        }
    }
    d
}

/// Copy of `lp` restricted to its optimal face: every feasible point of the
/// result is optimal for `lp`. Built by complementary slackness with the
/// duals of `solution`: variables with nonzero reduced cost are fixed at the
/// bound they sit on and inequalities with nonzero duals become equalities.
pub fn optimal_face(lp: &LinearProgram, solution: &LpSolution) -> Result<LinearProgram> {
    if !solution.is_optimal() {
        return Err(Error::NotOptimal(solution.status));
    }
    let mut face = lp.clone();
    for (v, d) in face
        .variables
        .iter_mut()
        .zip(reduced_costs(lp, &solution.duals))
    {
        let tol = CS_TOL * v.objective.abs().max(1.0);
        if d > tol && v.upper.is_finite() {
            v.lower = v.upper;
        } else if d < -tol && v.lower.is_finite() {
            v.upper = v.lower;
        }
    }
    for (c, &y) in face.constraints.iter_mut().zip(&solution.duals) {
        if y.abs() > CS_TOL {
            c.relation = Relation::Eq;
        }
    }
    Ok(face)
}

/// Objective of the dual program implied by `duals`, with bound multipliers
/// taken from the reduced costs.
pub fn dual_objective(lp: &LinearProgram, duals: &[f64]) -> f64 {
    let rows: f64 = lp
        .constraints
        .iter()
        .zip(duals)
        .map(|(c, y)| c.rhs * y)
        .sum();
    let bounds: f64 = lp
        .variables
        .iter()
        .zip(reduced_costs(lp, duals))
        .map(|(v, d)| {
            if d > 0.0 && v.upper.is_finite() {
                v.upper * d
            } else if d < 0.0 && v.lower.is_finite() {
                v.lower * d
            } else {
                0.0
            }
        })
        .sum();
    rows + bounds
}

// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    // x = offset + s
    Shifted { col: usize, offset: f64 },
    // x = offset - s
    Mirrored { col: usize, offset: f64 },
    // x = s+ - s-
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    // row-major, `cols + 1` entries per row, last is the rhs
    cells: Vec<f64>,
    // reduced costs d_j = z_j - c_j, last entry is the objective value
    objective: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.at(r, c);
        let row_start = r * width;
        for k in 0..width {
            self.cells[row_start + k] /= p;
        }
        let pivot_row: Vec<f64> = self.cells[row_start..row_start + width].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.cells[i * width + c];
            if f != 0.0 {
                let start = i * width;
                for (k, pv) in pivot_row.iter().enumerate() {
                    self.cells[start + k] -= f * pv;
                }
                self.cells[start + c] = 0.0;
            }
        }
        let f = self.objective[c];
        if f != 0.0 {
            for (k, pv) in pivot_row.iter().enumerate() {
                self.objective[k] -= f * pv;
            }
            self.objective[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let width = self.cols + 1;
        self.objective = vec![0.0; width];
        for (o, c) in self.objective.iter_mut().zip(&costs[..self.cols]) {
            *o = -c;
        }
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for k in 0..width {
                    self.objective[k] += cb * self.cells[i * width + k];
                }
            }
        }
    }

    /// Bland's rule iterations. Returns `Ok(true)` at optimality,
    /// `Ok(false)` when the objective is unbounded.
    fn optimize(&mut self, eligible: &dyn Fn(usize) -> bool, pivots: &mut usize) -> Result<bool> {
        loop {
            let entering =
                (0..self.cols).find(|&j| eligible(j) && self.objective[j] < -REDUCED_COST_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((best, best_ratio)) => {
                            let tie =
                                (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                            if ratio < best_ratio && !tie || tie && self.basis[i] < self.basis[best]
                            {
                                Some((i, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::SolverFailure("pivot limit exceeded".into()));
            }
        }
    }
}

/// Solves `lp`. Malformed programs are reported as errors; infeasible,
/// unbounded and numerically failed solves are reported through the status.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    match solve_validated(lp) {
        Ok(sol) => Ok(sol),
        Err(Error::SolverFailure(_)) => Ok(LpSolution::without_values(LpStatus::SolverFailure, lp)),
        Err(e) => Err(e),
    }
}

fn solve_validated(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.variables.len();

    // structural columns
    let mut maps = Vec::with_capacity(n);
    let mut n_struct = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for v in &lp.variables {
        let map = if v.lower.is_finite() {
            let col = n_struct;
            n_struct += 1;
            if v.upper.is_finite() {
                bound_rows.push((col, v.upper - v.lower));
            }
            ColumnMap::Shifted {
                col,
                offset: v.lower,
            }
        } else if v.upper.is_finite() {
            n_struct += 1;
            ColumnMap::Mirrored {
                col: n_struct - 1,
                offset: v.upper,
            }
        } else {
            n_struct += 2;
            ColumnMap::Split {
                pos: n_struct - 2,
                neg: n_struct - 1,
            }
        };
        maps.push(map);
    }

    // standard-form rows: (dense coefficients, relation, rhs)
    let mut rows: Vec<(Vec<f64>, Relation, f64)> =
        Vec::with_capacity(lp.constraints.len() + bound_rows.len());
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; n_struct];
        let mut rhs = c.rhs;
        for &(v, a) in &c.terms {
            match maps[v.0] {
                ColumnMap::Shifted { col, offset } => {
                    coeffs[col] += a;
                    rhs -= a * offset;
                }
                ColumnMap::Mirrored { col, offset } => {
                    coeffs[col] -= a;
                    rhs -= a * offset;
                }
                ColumnMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; n_struct];
        coeffs[col] = 1.0;
        rows.push((coeffs, Relation::Le, width));
    }

    let m = rows.len();
    let mut flip = vec![1.0; m];
    for (i, (coeffs, rel, rhs)) in rows.iter_mut().enumerate() {
        if *rhs < 0.0 {
            flip[i] = -1.0;
            *rhs = -*rhs;
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // auxiliary columns
    let mut cols = n_struct;
    let mut aux: Vec<(usize, Option<usize>)> = Vec::with_capacity(m); // (initial basic col, surplus col)
    let mut artificial = Vec::new();
    for (_, rel, _) in &rows {
        match rel {
            Relation::Le => {
                aux.push((cols, None));
                cols += 1;
            }
            Relation::Ge => {
                aux.push((cols + 1, Some(cols)));
                artificial.push(cols + 1);
                cols += 2;
            }
            Relation::Eq => {
                aux.push((cols, None));
                artificial.push(cols);
                cols += 1;
            }
        }
    }
    let mut is_artificial = vec![false; cols];
    for &a in &artificial {
        is_artificial[a] = true;
    }

    let width = cols + 1;
    let mut cells = vec![0.0; m * width];
    let mut basis = Vec::with_capacity(m);
    for (i, (coeffs, _, rhs)) in rows.iter().enumerate() {
        let row = &mut cells[i * width..(i + 1) * width];
        row[..n_struct].copy_from_slice(coeffs);
        let (basic, surplus) = aux[i];
        row[basic] = 1.0;
        if let Some(s) = surplus {
            row[s] = -1.0;
        }
        row[cols] = *rhs;
        basis.push(basic);
    }

    let mut tableau = Tableau {
        rows: m,
        cols,
        cells,
        objective: Vec::new(),
        basis,
    };
    let mut pivots = 0;

    // phase 1
    if !artificial.is_empty() {
        let costs: Vec<f64> = (0..cols)
            .map(|j| if is_artificial[j] { -1.0 } else { 0.0 })
            .collect();
        tableau.set_costs(&costs);
        tableau.optimize(&|_| true, &mut pivots)?;
        let scale = rows.iter().fold(1.0_f64, |acc, r| acc.max(r.2.abs()));
        let infeasibility = -tableau.objective[cols];
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_values(LpStatus::Infeasible, lp));
        }
        // drive remaining artificials out of the basis
        for r in 0..m {
            if !is_artificial[tableau.basis[r]] {
                continue;
            }
            if let Some(c) =
                (0..cols).find(|&j| !is_artificial[j] && tableau.at(r, j).abs() > PIVOT_TOL)
            {
                tableau.pivot(r, c);
            }
        }
    }

    // phase 2
    let mut costs = vec![0.0; cols];
    for (v, map) in lp.variables.iter().zip(&maps) {
        match *map {
            ColumnMap::Shifted { col, .. } => costs[col] = v.objective,
            ColumnMap::Mirrored { col, .. } => costs[col] = -v.objective,
            ColumnMap::Split { pos, neg } => {
                costs[pos] = v.objective;
                costs[neg] = -v.objective;
            }
        }
    }
    tableau.set_costs(&costs);
    let bounded = tableau.optimize(&|j| !is_artificial[j], &mut pivots)?;
    if !bounded {
        return Ok(LpSolution::without_values(LpStatus::Unbounded, lp));
    }

    let mut s = vec![0.0; cols];
    for (r, &b) in tableau.basis.iter().enumerate() {
        s[b] = tableau.rhs(r);
    }
    let mut primal: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            ColumnMap::Shifted { col, offset } => offset + s[col],
            ColumnMap::Mirrored { col, offset } => offset - s[col],
            ColumnMap::Split { pos, neg } => s[pos] - s[neg],
        })
        .collect();
    for (x, v) in primal.iter_mut().zip(&lp.variables) {
        if (*x - v.lower).abs() < 1e-11 {
            *x = v.lower;
        } else if (*x - v.upper).abs() < 1e-11 {
            *x = v.upper;
        } else if x.abs() < 1e-12 {
            *x = 0.0;
        }
    }

    let duals: Vec<f64> = (0..lp.constraints.len())
        .map(|k| {
            let y = flip[k] * tableau.objective[aux[k].0];
            if y.abs() < 1e-12 {
                0.0
            } else {
                y
            }
        })
        .collect();

    let scale = lp
        .constraints
        .iter()
        .map(|c| c.rhs.abs())
        .chain(
            lp.variables
                .iter()
                .flat_map(|v| [v.lower, v.upper])
                .filter(|b| b.is_finite())
                .map(f64::abs),
        )
        .fold(1.0_f64, f64::max);
    let residual = lp.primal_residual(&primal);
    if residual > 1e-7 * scale {
        return Err(Error::SolverFailure(format!(
            "primal residual {residual:e} after solve"
        )));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&primal),
        primal,
        duals,
    })
}

/// Range `[lo, hi]` of the dual value of the constraint `tag` over all
/// optimal dual solutions. Infinite ends mean the dual set is unbounded in
/// that direction.
///
/// The optimal dual set is described by complementary slackness with the
/// optimal primal point: rows slack at the optimum and bounds not attained
/// get a zero multiplier. Should rounding misclassify a row, the range is
/// recomputed over dual solutions within a small slack of the optimum.
pub fn dual_range(lp: &LinearProgram, solution: &LpSolution, tag: &str) -> Result<(f64, f64)> {
    let target = lp
        .constraint_index(tag)
        .ok_or_else(|| Error::UnknownTag(tag.to_owned()))?;
    if !solution.is_optimal() {
        return Err(Error::NotOptimal(solution.status));
    }
    match dual_extremes(lp, solution, target, DualFace::Complementary)? {
        Some(range) => Ok(range),
        None => dual_extremes(lp, solution, target, DualFace::Objective)?.ok_or_else(|| {
            Error::SolverFailure(format!("dual range program for `{tag}` is infeasible"))
        }),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum DualFace {
    Complementary,
    Objective,
}

fn dual_extremes(
    lp: &LinearProgram,
    solution: &LpSolution,
    target: usize,
    face: DualFace,
) -> Result<Option<(f64, f64)>> {
    let x = &solution.primal;
    let complementary = face == DualFace::Complementary;
    let tight = |value: f64, bound: f64, magnitude: f64| {
        (value - bound).abs() <= CS_TOL * magnitude.max(bound.abs()).max(1.0)
    };

    let mut dual = LinearProgram::new();
    let ys: Vec<Var> = lp
        .constraints
        .iter()
        .map(|c| {
            let activity = c.activity(x);
            let magnitude: f64 = c.terms.iter().map(|&(v, a)| (a * x[v.0]).abs()).sum();
            let zero =
                complementary && c.relation != Relation::Eq && !tight(activity, c.rhs, magnitude);
            match c.relation {
                _ if zero => dual.add_variable(0.0, 0.0, 0.0),
                Relation::Le => dual.add_variable(0.0, f64::INFINITY, 0.0),
                Relation::Ge => dual.add_variable(f64::NEG_INFINITY, 0.0, 0.0),
                Relation::Eq => dual.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0),
            }
        })
        .collect();

    let mut columns: Vec<Vec<(Var, f64)>> = vec![Vec::new(); lp.variables.len()];
    for (k, c) in lp.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            columns[v.0].push((ys[k], a));
        }
    }

    let mut objective_terms: Vec<(Var, f64)> = lp
        .constraints
        .iter()
        .zip(&ys)
        .filter(|(c, _)| c.rhs != 0.0)
        .map(|(c, &y)| (y, c.rhs))
        .collect();
    for (j, (v, mut column)) in lp.variables.iter().zip(columns).enumerate() {
        if v.upper.is_finite() && !(complementary && !tight(x[j], v.upper, 0.0)) {
            let w = dual.add_variable(0.0, f64::INFINITY, 0.0);
            column.push((w, 1.0));
            if v.upper != 0.0 {
                objective_terms.push((w, v.upper));
            }
        }
        if v.lower.is_finite() && !(complementary && !tight(x[j], v.lower, 0.0)) {
            let u = dual.add_variable(0.0, f64::INFINITY, 0.0);
            column.push((u, -1.0));
            if v.lower != 0.0 {
                objective_terms.push((u, -v.lower));
            }
        }
        dual.add_constraint(
            format!("stationarity:{j}"),
            column,
            Relation::Eq,
            v.objective,
        )?;
    }
    if !complementary {
        let optimum = solution.objective;
        dual.add_constraint(
            "optimal-face",
            objective_terms,
            Relation::Le,
            optimum + DUAL_FACE_TOL * optimum.abs().max(1.0),
        )?;
    }

    let mut extreme = |sign: f64| -> Result<Option<f64>> {
        dual.clear_objective();
        dual.set_objective(ys[target], sign);
        let sol = solve(&dual)?;
        match sol.status {
            LpStatus::Optimal => Ok(Some(sign * sol.objective)),
            LpStatus::Unbounded => Ok(Some(sign * f64::INFINITY)),
            LpStatus::Infeasible => Ok(None),
            LpStatus::SolverFailure => {
                Err(Error::SolverFailure("dual range program failed".into()))
            }
        }
    };
    let (Some(hi), Some(lo)) = (extreme(1.0)?, extreme(-1.0)?) else {
        return Ok(None);
    };
    // the dual program may round the tied ends apart by a few ulps
    Ok(Some((clean(lo), clean(hi))))
}

fn clean(value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-9, "{a} != {b}");
    }

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, 10.0, 1.0);
        lp.add_constraint("cap", vec![(x, 1.0)], Relation::Le, 2.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.value(x), 2.0);
        assert_close(sol.objective, 2.0);
        assert_close(sol.dual(&lp, "cap").unwrap(), 1.0);
        let (lo, hi) = dual_range(&lp, &sol, "cap").unwrap();
        assert_close(lo, 1.0);
        assert_close(hi, 1.0);
    }

    #[test]
    fn degenerate_primal() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, 1.0, 1.0);
        let y = lp.add_variable(0.0, 1.0, 1.0);
        lp.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_close(sol.objective, 1.0);
        assert_close(sol.value(x) + sol.value(y), 1.0);
        assert_close(sol.dual(&lp, "sum").unwrap(), 1.0);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, f64::INFINITY, 1.0);
        lp.add_constraint("neg", vec![(x, 1.0)], Relation::Le, -1.0)
            .unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_program() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, f64::INFINITY, 1.0);
        lp.add_constraint("floor", vec![(x, 1.0)], Relation::Ge, 1.0)
            .unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn isolated_zone_balance_dual_range() {
        // demand 8 @ 20 against supply 8 @ 18 in one zone
        let mut lp = LinearProgram::new();
        let d = lp.add_variable(0.0, 1.0, 8.0 * 20.0);
        let s = lp.add_variable(0.0, 1.0, -8.0 * 18.0);
        lp.add_constraint("balance", vec![(d, 8.0), (s, -8.0)], Relation::Eq, 0.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_close(sol.objective, 16.0);
        let (lo, hi) = dual_range(&lp, &sol, "balance").unwrap();
        assert_close(lo, 18.0);
        assert_close(hi, 20.0);
    }

    #[test]
    fn slack_constraint_has_zero_dual_range() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, 1.0, 1.0);
        lp.add_constraint("loose", vec![(x, 1.0)], Relation::Le, 5.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(dual_range(&lp, &sol, "loose").unwrap(), (0.0, 0.0));
    }

    #[test]
    fn free_and_mirrored_variables() {
        // max -|x - 3| style: max t, t <= x - 3, t <= 3 - x, x free, t <= 0 bound above only
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let t = lp.add_variable(f64::NEG_INFINITY, 0.0, 1.0);
        lp.add_constraint("a", vec![(t, 1.0), (x, -1.0)], Relation::Le, -3.0)
            .unwrap();
        lp.add_constraint("b", vec![(t, 1.0), (x, 1.0)], Relation::Le, 3.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert_close(sol.objective, 0.0);
        assert_close(sol.value(x), 3.0);
    }

    #[test]
    fn unknown_tag_and_non_optimal_errors() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable(0.0, 1.0, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, -1.0)
            .unwrap();
        let sol = solve(&lp).unwrap();
        assert!(matches!(
            dual_range(&lp, &sol, "nope"),
            Err(Error::UnknownTag(_))
        ));
        assert!(matches!(
            dual_range(&lp, &sol, "c"),
            Err(Error::NotOptimal(LpStatus::Infeasible))
        ));
        assert!(lp.add_constraint("c", vec![], Relation::Le, 0.0).is_err());
    }

    #[test]
    fn malformed_program_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_variable(2.0, 1.0, 0.0);
        assert!(matches!(solve(&lp), Err(Error::InvalidProgram(_))));
    }
}
