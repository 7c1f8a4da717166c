//! Dense two-phase simplex for the small linear programs of the dual method.
//!
//! The solver works on a full tableau and uses Bland's rule for both the
//! entering and the leaving variable, so it terminates on degenerate
//! problems (the cutting-plane LPs have all-zero right-hand sides on their
//! cut rows). Dual prices are reported as the sensitivity of the optimal
//! objective to each row's right-hand side.

use crate::error::{Error, Result};

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }
}

/// Lower bound of a structural variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    /// A program with all variables nonnegative and no rows yet.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { sense, objective, rows: Vec::new(), bounds: vec![VarBound::NonNegative; n] }
    }

    pub fn free(mut self, var: usize) -> Self {
        self.bounds[var] = VarBound::Free;
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(Constraint { coeffs, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::MalformedLp("no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::MalformedLp(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp("non-finite objective coefficient".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::MalformedLp(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::MalformedLp(format!("row {i} has non-finite entries")));
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
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One price per row: derivative of the optimal objective with respect to the row's right-hand side.
    pub dual: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without_solution(status: LpStatus, n: usize, m: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::INFINITY,
            _ => f64::NAN,
        };
        Self { status, primal: vec![0.0; n], dual: vec![0.0; m], objective }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows followed by one objective row; each has `cols + 1` entries (rhs last).
    data: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn objective_row(&self) -> &[f64] {
        let w = self.cols + 1;
        &self.data[self.rows * w..(self.rows + 1) * w]
    }

    /// Loads maximization costs into the objective row as reduced costs `c_B B^-1 A - c`.
    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.cols + 1;
        let mut obj = vec![0.0; w];
        for (j, c) in costs.iter().enumerate() {
            obj[j] = -c;
        }
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * w..(r + 1) * w];
                for (o, a) in obj.iter_mut().zip(row) {
                    *o += cb * a;
                }
            }
        }
        self.data[self.rows * w..].copy_from_slice(&obj);
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
            if r < self.rows && row[w - 1] < 0.0 && row[w - 1] > -FEASIBILITY_TOL {
                row[w - 1] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland-rule primal simplex on the current objective row.
    fn optimize(&mut self, allow: impl Fn(ColumnKind) -> bool) -> Result<bool> {
        let mut last_objective = self.objective_row()[self.cols];
        for _ in 0..MAX_PIVOTS {
            let obj = self.objective_row();
            let entering = (0..self.cols).find(|&j| allow(self.kinds[j]) && obj[j] < -OPTIMALITY_TOL);
            let Some(pc) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Ok(false);
            };
            self.pivot(pr, pc);
            let value = self.objective_row()[self.cols];
            debug_assert!(
                value >= last_objective - 1e-7 * (1.0 + last_objective.abs()),
                "simplex objective decreased: {last_objective} -> {value}"
            );
            last_objective = value;
        }
        Err(Error::Internal("simplex pivot limit reached".into()))
    }
}

/// Solves `lp` with a dense two-phase simplex method.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.rows.len();

    // Structural columns; free variables are split into x+ and x-.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for b in &lp.bounds {
        match b {
            VarBound::NonNegative => {
                var_cols.push((ncols, None));
                ncols += 1;
            }
            VarBound::Free => {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let n_struct = ncols;

    // Row normalization: nonnegative rhs; zero-rhs ">=" rows become "<=" rows
    // so that their slack starts in the basis.
    let mut signs = Vec::with_capacity(m);
    let mut relations = Vec::with_capacity(m);
    for row in &lp.rows {
        let flip = row.rhs < 0.0 || (row.rhs == 0.0 && row.relation == Relation::Ge);
        signs.push(if flip { -1.0 } else { 1.0 });
        relations.push(if flip { row.relation.flipped() } else { row.relation });
    }
    let mut kinds = vec![ColumnKind::Structural; n_struct];
    let mut identity_col = vec![0; m];
    let mut surplus_col = vec![None; m];
    for (i, rel) in relations.iter().enumerate() {
        match rel {
            Relation::Le => {
                identity_col[i] = kinds.len();
                kinds.push(ColumnKind::Slack);
            }
            Relation::Ge => {
                surplus_col[i] = Some(kinds.len());
                kinds.push(ColumnKind::Slack);
                identity_col[i] = kinds.len();
                kinds.push(ColumnKind::Artificial);
            }
            Relation::Eq => {
                identity_col[i] = kinds.len();
                kinds.push(ColumnKind::Artificial);
            }
        }
    }
    let cols = kinds.len();
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    for (i, row) in lp.rows.iter().enumerate() {
        let s = signs[i];
        let base = i * w;
        for (v, &(pos, neg)) in var_cols.iter().enumerate() {
            data[base + pos] = s * row.coeffs[v];
            if let Some(neg) = neg {
                data[base + neg] = -s * row.coeffs[v];
            }
        }
        data[base + identity_col[i]] = 1.0;
        if let Some(sc) = surplus_col[i] {
            data[base + sc] = -1.0;
        }
        data[base + cols] = s * row.rhs;
    }
    let mut tab = Tableau { rows: m, cols, data, basis: identity_col.clone(), kinds };

    // Phase 1: maximize -(sum of artificials).
    if tab.kinds.contains(&ColumnKind::Artificial) {
        let costs: Vec<f64> = tab
            .kinds
            .iter()
            .map(|k| if *k == ColumnKind::Artificial { -1.0 } else { 0.0 })
            .collect();
        tab.set_costs(&costs);
        tab.optimize(|_| true)?;
        let infeasibility = -tab.objective_row()[cols];
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible, n, m));
        }
        // Drive remaining (zero-level) artificials out of the basis where possible.
        for r in 0..m {
            if tab.kinds[tab.basis[r]] == ColumnKind::Artificial {
                let replacement = (0..cols)
                    .filter(|&j| tab.kinds[j] != ColumnKind::Artificial)
                    .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()))
                    .filter(|&j| tab.at(r, j).abs() > 1e-9);
                if let Some(j) = replacement {
                    tab.pivot(r, j);
                }
            }
        }
    }

    // Phase 2 on the internal maximization objective.
    let sigma = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut costs = vec![0.0; cols];
    for (v, &(pos, neg)) in var_cols.iter().enumerate() {
        costs[pos] = sigma * lp.objective[v];
        if let Some(neg) = neg {
            costs[neg] = -sigma * lp.objective[v];
        }
    }
    tab.set_costs(&costs);
    if !tab.optimize(|k| k != ColumnKind::Artificial)? {
        return Ok(LpSolution::without_solution(LpStatus::Unbounded, n, m));
    }

    let mut values = vec![0.0; cols];
    for r in 0..m {
        values[tab.basis[r]] = tab.rhs(r);
    }
    let primal: Vec<f64> = var_cols
        .iter()
        .map(|&(pos, neg)| values[pos] - neg.map_or(0.0, |c| values[c]))
        .collect();
    let obj_row = tab.objective_row();
    let dual: Vec<f64> = (0..m).map(|i| sigma * signs[i] * obj_row[identity_col[i]]).collect();
    let objective = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    Ok(LpSolution { status: LpStatus::Optimal, primal, dual, objective })
}
