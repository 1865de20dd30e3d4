//! Independent checks for simplex outcomes. They only read the original
//! problem, never solver internals.

use crate::problem::{LpProblem, RowSense};
use crate::simplex::LpSolution;

/// `inf_r y·r - sup_x (A^T y)·x` over the row intervals and variable box.
/// Positive means `y` proves infeasibility; `-inf` when a bound needed by
/// `y` is infinite.
pub fn farkas_margin(p: &LpProblem, y: &[f64]) -> f64 {
    let n = p.num_vars();
    let mut g = vec![0.0; n];
    let mut inf_r = 0.0;
    for (row, &yi) in p.rows.iter().zip(y) {
        if yi == 0.0 {
            continue;
        }
        for &(j, a) in &row.coefs {
            g[j] += a * yi;
        }
        let (lo, hi) = match row.sense {
            RowSense::Le => (f64::NEG_INFINITY, row.rhs),
            RowSense::Ge => (row.rhs, f64::INFINITY),
            RowSense::Eq => (row.rhs, row.rhs),
        };
        let b = if yi > 0.0 { lo } else { hi };
        if !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        inf_r += yi * b;
    }
    let mut sup_x = 0.0;
    for j in 0..n {
        if g[j].abs() < 1e-12 {
            continue;
        }
        let b = if g[j] > 0.0 { p.upper[j] } else { p.lower[j] };
        if !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        sup_x += g[j] * b;
    }
    inf_r - sup_x
}

/// True when `ray` is a recession direction of the feasible set (up to
/// `tol`) that strictly improves the objective.
pub fn is_improving_ray(p: &LpProblem, ray: &[f64], tol: f64) -> bool {
    for j in 0..p.num_vars() {
        if p.lower[j].is_finite() && ray[j] < -tol {
            return false;
        }
        if p.upper[j].is_finite() && ray[j] > tol {
            return false;
        }
    }
    for row in &p.rows {
        let d = row.activity(ray);
        let ok = match row.sense {
            RowSense::Le => d <= tol,
            RowSense::Ge => d >= -tol,
            RowSense::Eq => d.abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    let slope = p.objective_value(ray);
    p.sense.better(slope, 0.0, tol)
}

/// Objective of the dual built from row duals and reduced costs: each
/// reduced cost is charged at the bound it rests against. Equals the
/// primal objective at an optimal pair.
pub fn dual_objective(p: &LpProblem, sol: &LpSolution) -> f64 {
    let mut v: f64 = p.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
    for j in 0..p.num_vars() {
        let d = sol.reduced_costs[j];
        if d == 0.0 {
            continue;
        }
        let (lo, hi) = (p.lower[j], p.upper[j]);
        let b = if lo.is_finite() && hi.is_finite() {
            if (sol.x[j] - lo).abs() <= (sol.x[j] - hi).abs() {
                lo
            } else {
                hi
            }
        } else if lo.is_finite() {
            lo
        } else {
            hi
        };
        if b.is_finite() {
            v += d * b;
        }
    }
    v
}
