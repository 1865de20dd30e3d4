//! Greedy starting designs built from the witness paths.

use crate::model::{DesignSolution, Instance};
use crate::preprocess::{FeasiblePath, Preprocessed};

/// Surviving pairs by decreasing `demand / witness cost`, ties by index.
pub fn ratio_order(inst: &Instance, pre: &Preprocessed) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = pre
        .survivors()
        .iter()
        .map(|&w| {
            let cost = pre.path(w).expect("survivor has a witness path").cost;
            let ratio = if cost > 0.0 { inst.pairs[w].demand / cost } else { f64::INFINITY };
            (w, ratio)
        })
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

fn build_path(sol: &mut DesignSolution, path: &FeasiblePath) {
    for &i in &path.nodes {
        sol.y[i] = true;
    }
    for &e in &path.edges {
        sol.x[e] = true;
    }
}

/// Take pairs in ratio order and build each witness path whose not yet
/// built part still fits in the budget.
pub fn initial_solution_mc(inst: &Instance, pre: &Preprocessed) -> DesignSolution {
    let budget = inst.budget_or_zero();
    let mut sol = DesignSolution::empty(inst);
    let mut spent = 0.0;
    for (w, _) in ratio_order(inst, pre) {
        let path = pre.path(w).unwrap();
        let extra: f64 = path.nodes.iter().filter(|&&i| !sol.y[i]).map(|&i| inst.nodes[i].cost).sum::<f64>()
            + path.edges.iter().filter(|&&e| !sol.x[e]).map(|&e| inst.edges[e].cost).sum::<f64>();
        if spent + extra <= budget + 1e-9 * budget.max(1.0) {
            build_path(&mut sol, path);
            sol.z[w] = true;
            spent += extra;
        }
    }
    sol
}

/// Start with every surviving pair covered, drop pairs in ratio order while
/// the coverage floor still holds, then build the retained witness paths.
pub fn initial_solution_pc(inst: &Instance, pre: &Preprocessed) -> DesignSolution {
    let need = inst.beta.unwrap_or(1.0) * inst.total_demand();
    let mut sol = DesignSolution::empty(inst);
    let mut covered = 0.0;
    for &w in pre.survivors() {
        sol.z[w] = true;
        covered += inst.pairs[w].demand;
    }
    for (w, _) in ratio_order(inst, pre) {
        let g = inst.pairs[w].demand;
        if covered - g >= need - 1e-9 * need.max(1.0) {
            sol.z[w] = false;
            covered -= g;
        }
    }
    for w in 0..inst.pairs.len() {
        if sol.z[w] {
            build_path(&mut sol, pre.path(w).unwrap());
        }
    }
    sol
}
