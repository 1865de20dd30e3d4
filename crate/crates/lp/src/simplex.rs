//! Bounded-variable revised simplex.
//!
//! Every row `a_i x (sense) b_i` becomes `a_i x - r_i = 0` with a logical
//! variable `r_i` carrying the row interval, so the whole problem is
//! `M v = 0, l <= v <= u` with `M = [A | -I]`. The primal method uses a
//! composite phase 1 (minimize the sum of bound violations of the basics);
//! the dual method reoptimizes after rows are appended or bounds move.

use std::time::Instant;

use crate::factor::{Factor, NONE};
use crate::problem::{validate_row, LpProblem, Row, Sense};
use crate::LpError;

pub const FEAS_TOL: f64 = 1e-7;
pub const OPT_TOL: f64 = 1e-7;
pub const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Sensitivity of the objective to each row's right-hand side.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// A feasible point and a direction along which the objective improves
    /// without bound. The ray is scaled to max-norm 1.
    Unbounded { point: Vec<f64>, ray: Vec<f64> },
    /// Row multipliers `y` with `sup_x (A^T y)·x < inf_r y·r` over the
    /// variable box and the row intervals. Scaled to max-norm 1.
    Infeasible { farkas: Vec<f64> },
}

impl LpOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal(s) => Some(s.objective),
            _ => None,
        }
    }
}

/// Snapshot of a basis: which variable sits in each basis position and,
/// for nonbasic variables, whether they rest at their upper bound.
#[derive(Clone, Debug)]
pub struct Basis {
    head: Vec<usize>,
    at_upper: Vec<bool>,
    n: usize,
}

enum PrimalEnd {
    Optimal,
    Infeasible(Vec<f64>),
    Unbounded(Vec<f64>),
}

enum DualEnd {
    Feasible,
    Infeasible(Vec<f64>),
    GaveUp,
}

pub struct Simplex {
    n: usize,
    m: usize,
    sense: Sense,
    cols: Vec<Vec<(usize, f64)>>,
    /// The same matrix by row.
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    factor: Factor,
    needs_factor: bool,
    needs_basics: bool,
    refactors: usize,
    deadline: Option<Instant>,
    iterations: usize,
}

/// Solve `p` from a slack basis.
pub fn lp_solve(p: &LpProblem) -> Result<LpOutcome, LpError> {
    Simplex::new(p)?.solve()
}

impl Simplex {
    pub fn new(p: &LpProblem) -> Result<Self, LpError> {
        p.validate()?;
        let n = p.num_vars();
        let sign = p.sense.internal_sign();
        let mut s = Simplex {
            n,
            m: 0,
            sense: p.sense,
            cols: vec![Vec::new(); n],
            rows: Vec::new(),
            cost: p.objective.iter().map(|c| sign * c).collect(),
            lo: p.lower.clone(),
            up: p.upper.clone(),
            x: vec![0.0; n],
            head: Vec::new(),
            pos: vec![NONE; n],
            factor: Factor::empty(),
            needs_factor: true,
            needs_basics: false,
            refactors: 0,
            deadline: None,
            iterations: 0,
        };
        for j in 0..n {
            s.x[j] = resting_value(s.lo[j], s.up[j]);
        }
        s.append_rows(&p.rows);
        Ok(s)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.up[j])
    }

    /// Change the bounds of structural variable `j`. Takes effect at the
    /// next `solve`/`resolve`.
    pub fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        assert!(j < self.n);
        self.lo[j] = lo;
        self.up[j] = up;
        if self.pos[j] == NONE && self.x[j] != lo && self.x[j] != up {
            self.x[j] = resting_value(lo, up);
        }
        self.needs_basics = true;
    }

    fn append_rows(&mut self, rows: &[Row]) {
        for row in rows {
            let i = self.m;
            let mut merged: Vec<(usize, f64)> = row.coefs.clone();
            merged.sort_by_key(|&(j, _)| j);
            let mut act = 0.0;
            let mut last: Option<usize> = None;
            let mut by_row: Vec<(usize, f64)> = Vec::with_capacity(merged.len());
            for (j, a) in merged {
                if last == Some(j) {
                    self.cols[j].last_mut().unwrap().1 += a;
                    by_row.last_mut().unwrap().1 += a;
                } else {
                    self.cols[j].push((i, a));
                    by_row.push((j, a));
                    last = Some(j);
                }
                act += a * self.x[j];
            }
            self.rows.push(by_row);
            let (lo, up) = row.range();
            self.lo.push(lo);
            self.up.push(up);
            self.cost.push(0.0);
            self.x.push(act);
            self.pos.push(self.head.len());
            self.head.push(self.n + i);
            self.m += 1;
        }
        self.needs_factor = true;
    }

    /// Append rows (their logicals enter the basis) and reoptimize.
    pub fn resolve_with_added_rows(&mut self, rows: &[Row]) -> Result<LpOutcome, LpError> {
        self.add_rows(rows)?;
        self.resolve()
    }

    pub fn add_rows(&mut self, rows: &[Row]) -> Result<(), LpError> {
        for (k, row) in rows.iter().enumerate() {
            validate_row(row, self.n).map_err(|msg| LpError::InvalidProblem(format!("added row {k}: {msg}")))?;
        }
        self.append_rows(rows);
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        Basis {
            head: self.head.clone(),
            at_upper: (0..self.n + self.m)
                .map(|j| self.pos[j] == NONE && self.x[j] == self.up[j] && self.x[j] != self.lo[j])
                .collect(),
            n: self.n,
        }
    }

    /// Install a basis saved earlier. Rows added since are covered by
    /// their logicals.
    pub fn set_basis(&mut self, b: &Basis) {
        assert_eq!(b.n, self.n);
        let saved_m = b.head.len();
        assert!(saved_m <= self.m);
        let same = self.head.len() == self.m
            && self.head[..saved_m] == b.head[..]
            && (saved_m..self.m).all(|i| self.head[i] == self.n + i);
        self.head = b.head.clone();
        for i in saved_m..self.m {
            self.head.push(self.n + i);
        }
        self.pos = vec![NONE; self.n + self.m];
        for (p, &j) in self.head.iter().enumerate() {
            self.pos[j] = p;
        }
        for j in 0..self.n + self.m {
            if self.pos[j] == NONE {
                let upper = b.at_upper.get(j).copied().unwrap_or(false);
                self.x[j] = if upper && self.up[j].is_finite() {
                    self.up[j]
                } else {
                    resting_value(self.lo[j], self.up[j])
                };
            }
        }
        if same {
            self.needs_basics = true;
        } else {
            self.needs_factor = true;
        }
    }

    pub fn solve(&mut self) -> Result<LpOutcome, LpError> {
        self.ensure_factor()?;
        let end = self.primal()?;
        self.finish(end)
    }

    /// Reoptimize from the current basis, preferring the dual method.
    pub fn resolve(&mut self) -> Result<LpOutcome, LpError> {
        self.ensure_factor()?;
        let y = self.duals_internal();
        let mut moved = false;
        let mut dual_feasible = true;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.cost[j] - self.dot_col(&y, j);
            let (lo, up) = (self.lo[j], self.up[j]);
            if lo.is_finite() && up.is_finite() {
                let at_bound = self.x[j] == lo || self.x[j] == up;
                let want = if d.abs() <= OPT_TOL && at_bound {
                    self.x[j]
                } else if d >= 0.0 {
                    lo
                } else {
                    up
                };
                if self.x[j] != want {
                    self.x[j] = want;
                    moved = true;
                }
            } else if lo.is_finite() {
                dual_feasible &= d >= -OPT_TOL;
            } else if up.is_finite() {
                dual_feasible &= d <= OPT_TOL;
            } else {
                dual_feasible &= d.abs() <= OPT_TOL;
            }
        }
        if moved {
            self.recompute_basics();
        }
        if dual_feasible {
            match self.dual()? {
                DualEnd::Infeasible(y) => {
                    if let Some(f) = self.accept_farkas(y) {
                        return Ok(LpOutcome::Infeasible { farkas: f });
                    }
                }
                DualEnd::Feasible | DualEnd::GaveUp => {}
            }
        }
        let end = self.primal()?;
        self.finish(end)
    }

    fn finish(&mut self, end: PrimalEnd) -> Result<LpOutcome, LpError> {
        match end {
            PrimalEnd::Optimal => {
                let sign = self.sense.internal_sign();
                let pi = self.duals_internal();
                let x: Vec<f64> = self.x[..self.n].to_vec();
                let reduced_costs = (0..self.n)
                    .map(|j| sign * (self.cost[j] - self.dot_col(&pi, j)))
                    .collect();
                let objective = sign * (0..self.n).map(|j| self.cost[j] * x[j]).sum::<f64>();
                Ok(LpOutcome::Optimal(LpSolution {
                    x,
                    duals: pi.iter().map(|v| sign * v).collect(),
                    reduced_costs,
                    objective,
                }))
            }
            PrimalEnd::Unbounded(ray) => Ok(LpOutcome::Unbounded {
                point: self.x[..self.n].to_vec(),
                ray,
            }),
            PrimalEnd::Infeasible(y) => match self.accept_farkas(y) {
                Some(f) => Ok(LpOutcome::Infeasible { farkas: f }),
                None => Err(LpError::NumericalBreakdown(
                    "phase 1 stalled with positive infeasibility but no valid certificate".into(),
                )),
            },
        }
    }

    /// Normalize a candidate certificate and keep it only if it verifies.
    fn accept_farkas(&self, y: Vec<f64>) -> Option<Vec<f64>> {
        let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        let y: Vec<f64> = y.iter().map(|v| if v.abs() / scale < 1e-12 { 0.0 } else { v / scale }).collect();
        let margin = self.farkas_margin(&y);
        if margin > 1e-9 {
            Some(y)
        } else {
            None
        }
    }

    fn farkas_margin(&self, y: &[f64]) -> f64 {
        let mut sup = 0.0;
        for j in 0..self.n {
            let g: f64 = self.cols[j].iter().map(|&(i, a)| a * y[i]).sum();
            if g.abs() < 1e-12 {
                continue;
            }
            let b = if g > 0.0 { self.up[j] } else { self.lo[j] };
            if !b.is_finite() {
                return f64::NEG_INFINITY;
            }
            sup += g * b;
        }
        let mut inf = 0.0;
        for i in 0..self.m {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            let b = if yi > 0.0 { self.lo[self.n + i] } else { self.up[self.n + i] };
            if !b.is_finite() {
                return f64::NEG_INFINITY;
            }
            inf += yi * b;
        }
        inf - sup
    }

    // ---------------------------------------------------------------------

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                f(i, a);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            -y[j - self.n]
        }
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        self.for_col(j, |i, a| v[i] += a);
        v
    }

    fn ensure_factor(&mut self) -> Result<(), LpError> {
        if self.needs_factor || self.factor.eta_count() >= REFACTOR_EVERY {
            self.refactor()?;
            self.recompute_basics();
            self.needs_factor = false;
            self.needs_basics = false;
        } else if self.needs_basics {
            self.recompute_basics();
            self.needs_basics = false;
        }
        Ok(())
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..=self.m {
            match Factor::factorize(&self.head, &self.cols) {
                Ok(f) => {
                    self.factor = f;
                    self.refactors += 1;
                    return Ok(());
                }
                Err(sing) => {
                    // Swap dependent structurals for logicals of uncovered rows.
                    for (&p, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let logical = self.n + row;
                        self.pos[out] = NONE;
                        self.x[out] = resting_value(self.lo[out], self.up[out]);
                        self.head[p] = logical;
                        self.pos[logical] = p;
                    }
                }
            }
        }
        Err(LpError::NumericalBreakdown("basis repair did not converge".into()))
    }

    fn recompute_basics(&mut self) {
        let mut r = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] == NONE && self.x[j] != 0.0 {
                let v = self.x[j];
                self.for_col(j, |i, a| r[i] -= a * v);
            }
        }
        let xb = self.factor.ftran(&r, &self.cols);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn duals_internal(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&cb, &self.cols)
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations % 32 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(LpError::TimeLimit);
                }
            }
        }
        Ok(())
    }

    fn iteration_cap(&self) -> usize {
        50_000 + 50 * (self.n + self.m)
    }

    fn pivot(&mut self, p: usize, q: usize, alpha: &[f64]) {
        let out = self.head[p];
        self.pos[out] = NONE;
        self.head[p] = q;
        self.pos[q] = p;
        self.factor.push_eta(p, alpha);
    }

    fn primal(&mut self) -> Result<PrimalEnd, LpError> {
        let nm = self.n + self.m;
        let bland_after = 2 * nm;
        let mut degenerate = 0usize;
        let start = self.iterations;
        loop {
            self.tick()?;
            if self.iterations - start > self.iteration_cap() {
                return Err(LpError::IterationLimit);
            }
            self.ensure_factor()?;
            let bland = degenerate > bland_after;

            let mut cb = vec![0.0; self.m];
            let mut phase1 = false;
            for (p, &j) in self.head.iter().enumerate() {
                let v = self.x[j];
                if v < self.lo[j] - FEAS_TOL {
                    cb[p] = -1.0;
                    phase1 = true;
                } else if v > self.up[j] + FEAS_TOL {
                    cb[p] = 1.0;
                    phase1 = true;
                }
            }
            if !phase1 {
                for (p, &j) in self.head.iter().enumerate() {
                    cb[p] = self.cost[j];
                }
            }
            let y = self.factor.btran(&cb, &self.cols);

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..nm {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = cj - self.dot_col(&y, j);
                let can_up = self.x[j] < self.up[j];
                let can_down = self.x[j] > self.lo[j];
                let dir = if d < -OPT_TOL && can_up {
                    1.0
                } else if d > OPT_TOL && can_down {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.map_or(true, |(_, _, s)| d.abs() > s) {
                    entering = Some((j, dir, d.abs()));
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(if phase1 { PrimalEnd::Infeasible(y) } else { PrimalEnd::Optimal });
            };

            let alpha = self.factor.ftran(&self.dense_col(q), &self.cols);
            let mut best_t = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_mag = 0.0;
            for p in 0..self.m {
                let delta = -dir * alpha[p];
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[p];
                let v = self.x[j];
                let (lo, up) = (self.lo[j], self.up[j]);
                let (limit, target) = if delta > 0.0 {
                    if v < lo - FEAS_TOL {
                        ((lo - v) / delta, lo)
                    } else if v > up + FEAS_TOL || !up.is_finite() {
                        continue;
                    } else {
                        ((up - v).max(0.0) / delta, up)
                    }
                } else if v > up + FEAS_TOL {
                    ((v - up) / -delta, up)
                } else if v < lo - FEAS_TOL || !lo.is_finite() {
                    continue;
                } else {
                    ((v - lo).max(0.0) / -delta, lo)
                };
                let better = if limit < best_t - 1e-12 {
                    true
                } else if limit <= best_t + 1e-12 {
                    match leave {
                        None => true,
                        Some((lp, _)) if bland => j < self.head[lp],
                        Some(_) => delta.abs() > leave_mag,
                    }
                } else {
                    false
                };
                if better {
                    best_t = limit;
                    leave = Some((p, target));
                    leave_mag = delta.abs();
                }
            }

            if best_t == f64::INFINITY {
                if phase1 {
                    return Err(LpError::NumericalBreakdown(
                        "phase 1 found an unbounded improving direction".into(),
                    ));
                }
                let mut ray = vec![0.0; self.n];
                if q < self.n {
                    ray[q] = dir;
                }
                for p in 0..self.m {
                    let j = self.head[p];
                    if j < self.n {
                        ray[j] = -dir * alpha[p];
                    }
                }
                let scale = ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for r in &mut ray {
                    *r /= scale;
                    if r.abs() < 1e-12 {
                        *r = 0.0;
                    }
                }
                return Ok(PrimalEnd::Unbounded(ray));
            }

            let t = best_t;
            if t <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for p in 0..self.m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= dir * alpha[p] * t;
                }
            }
            match leave {
                Some((p, target)) => {
                    let out = self.head[p];
                    self.x[q] += dir * t;
                    self.x[out] = target;
                    self.pivot(p, q, &alpha);
                }
                None => {
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                }
            }
        }
    }

    fn reduced_costs(&self) -> Vec<f64> {
        let y = self.duals_internal();
        (0..self.n + self.m)
            .map(|j| if self.pos[j] == NONE { self.cost[j] - self.dot_col(&y, j) } else { 0.0 })
            .collect()
    }

    fn dual(&mut self) -> Result<DualEnd, LpError> {
        let nm = self.n + self.m;
        let start = self.iterations;
        let cap = 20 * nm + 1000;
        let mut d = Vec::new();
        let mut d_epoch = usize::MAX;
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut acc = vec![0.0; self.n];
        let mut mark = vec![false; self.n];
        let mut touched: Vec<usize> = Vec::new();
        let mut acc_logical: Vec<(usize, f64)> = Vec::new();
        loop {
            self.tick()?;
            if self.iterations - start > cap {
                return Ok(DualEnd::GaveUp);
            }
            self.ensure_factor()?;
            if d_epoch != self.refactors {
                d = self.reduced_costs();
                d_epoch = self.refactors;
            }

            let mut leave: Option<(usize, f64)> = None;
            for (p, &j) in self.head.iter().enumerate() {
                let v = self.x[j];
                let infeas = if v < self.lo[j] - FEAS_TOL {
                    self.lo[j] - v
                } else if v > self.up[j] + FEAS_TOL {
                    v - self.up[j]
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, s)| infeas > s) {
                    leave = Some((p, infeas));
                }
            }
            let Some((p, _)) = leave else {
                return Ok(DualEnd::Feasible);
            };
            let jp = self.head[p];
            let below = self.x[jp] < self.lo[jp];

            let mut unit = vec![0.0; self.m];
            unit[p] = 1.0;
            let rho = self.factor.btran(&unit, &self.cols);

            row.clear();
            let mut entering: Option<(usize, f64, f64, f64)> = None;
            for (i, &r) in rho.iter().enumerate() {
                if r != 0.0 {
                    for &(j, a) in &self.rows[i] {
                        if !mark[j] {
                            mark[j] = true;
                            touched.push(j);
                        }
                        acc[j] += r * a;
                    }
                    let j = self.n + i;
                    if self.pos[j] == NONE {
                        acc_logical.push((j, -r));
                    }
                }
            }
            touched.sort_unstable();
            let candidates = touched
                .drain(..)
                .map(|j| {
                    let a = acc[j];
                    acc[j] = 0.0;
                    mark[j] = false;
                    (j, a)
                })
                .collect::<Vec<_>>();
            for (j, a) in candidates.into_iter().chain(acc_logical.drain(..)) {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] || a == 0.0 {
                    continue;
                }
                row.push((j, a));
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let can_up = self.x[j] < self.up[j];
                let can_down = self.x[j] > self.lo[j];
                // x_p = -sum a_j x_j: to raise x_p move x_j against sign(a_j).
                let eligible = if below {
                    (a < 0.0 && can_up) || (a > 0.0 && can_down)
                } else {
                    (a > 0.0 && can_up) || (a < 0.0 && can_down)
                };
                if !eligible {
                    continue;
                }
                let ratio = d[j].abs() / a.abs();
                let take = match entering {
                    None => true,
                    Some((_, r, mag, _)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && a.abs() > mag),
                };
                if take {
                    entering = Some((j, ratio, a.abs(), a));
                }
            }
            let Some((q, _, _, a_q)) = entering else {
                let y: Vec<f64> = rho.iter().map(|v| if below { -v } else { *v }).collect();
                return Ok(DualEnd::Infeasible(y));
            };

            let alpha = self.factor.ftran(&self.dense_col(q), &self.cols);
            if alpha[p].abs() <= PIVOT_TOL || (alpha[p] - a_q).abs() > 1e-7 * (1.0 + a_q.abs()) {
                // Row and column disagree; rebuild and retry.
                self.needs_factor = true;
                continue;
            }
            let target = if below { self.lo[jp] } else { self.up[jp] };
            let step = (self.x[jp] - target) / alpha[p];
            for i in 0..self.m {
                if alpha[i] != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= alpha[i] * step;
                }
            }
            self.x[q] += step;
            self.x[jp] = target;

            let theta = d[q] / a_q;
            for &(j, a) in &row {
                d[j] -= theta * a;
            }
            d[q] = 0.0;
            d[jp] = -theta;
            self.pivot(p, q, &alpha);
        }
    }
}

fn resting_value(lo: f64, up: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if up.is_finite() {
        up
    } else {
        0.0
    }
}
