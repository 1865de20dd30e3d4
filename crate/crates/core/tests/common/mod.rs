//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use covnet_core::benders::{Family, Formulation, Method, SolveOptions};
use covnet_core::gen::{generate_instance, GenParams};
use covnet_core::model::{Instance, ProblemKind};

/// One edge subset with its endpoints built.
pub struct Design {
    pub x: Vec<bool>,
    pub cost: f64,
    /// Pairs whose shortest built path is within the utility.
    pub covered: Vec<bool>,
}

/// All-pairs distances over the built edges (Floyd-Warshall).
fn distances(inst: &Instance, x: &[bool]) -> Vec<Vec<f64>> {
    let n = inst.nodes.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (e, edge) in inst.edges.iter().enumerate() {
        if x[e] {
            let l = edge.length.min(d[edge.u][edge.v]);
            d[edge.u][edge.v] = l;
            d[edge.v][edge.u] = l;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn covered_pairs(inst: &Instance, x: &[bool]) -> Vec<bool> {
    let d = distances(inst, x);
    inst.pairs.iter().map(|p| d[p.s][p.t] <= p.utility + 1e-9).collect()
}

/// Every edge subset of the instance. Feasible for the enumeration only
/// when the instance has at most 20 edges.
pub fn enumerate_designs(inst: &Instance) -> Vec<Design> {
    let m = inst.edges.len();
    assert!(m <= 20, "too many edges to enumerate");
    (0u32..1 << m)
        .map(|mask| {
            let x: Vec<bool> = (0..m).map(|e| mask >> e & 1 == 1).collect();
            let mut y = vec![false; inst.nodes.len()];
            let mut cost = 0.0;
            for (e, edge) in inst.edges.iter().enumerate() {
                if x[e] {
                    cost += edge.cost;
                    y[edge.u] = true;
                    y[edge.v] = true;
                }
            }
            cost += (0..y.len()).filter(|&i| y[i]).map(|i| inst.nodes[i].cost).sum::<f64>();
            let covered = covered_pairs(inst, &x);
            Design { x, cost, covered }
        })
        .collect()
}

pub fn demand_of(inst: &Instance, covered: &[bool]) -> f64 {
    inst.pairs.iter().zip(covered).filter(|p| *p.1).map(|p| p.0.demand).sum()
}

/// Optimum over the enumerated designs, `None` when no design qualifies.
pub fn brute_force_optimum(inst: &Instance, designs: &[Design], kind: ProblemKind) -> Option<f64> {
    match kind {
        ProblemKind::Mc => {
            let budget = inst.budget.unwrap();
            designs
                .iter()
                .filter(|d| d.cost <= budget + 1e-9)
                .map(|d| demand_of(inst, &d.covered))
                .reduce(f64::max)
        }
        ProblemKind::Pc => {
            let need = inst.beta.unwrap() * inst.total_demand();
            designs
                .iter()
                .filter(|d| demand_of(inst, &d.covered) >= need - 1e-9)
                .map(|d| d.cost)
                .reduce(f64::min)
        }
    }
}

/// Ten seeds for each of 6, 8 and 10 nodes.
pub fn small_instances() -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for n in [6, 8, 10] {
        for seed in 0..10 {
            let inst = generate_instance(&GenParams::new(n, seed)).unwrap();
            out.push((format!("n{n}_s{seed}"), inst));
        }
    }
    out
}

/// Both direct models, then every cut family with and without the cut-set
/// rows and the starting design.
pub fn method_grid() -> Vec<SolveOptions> {
    let mut out = vec![
        SolveOptions::new(Method::Direct(Formulation::Strong)),
        SolveOptions::new(Method::Direct(Formulation::Weak)),
    ];
    for family in Family::ALL {
        for cs in [false, true] {
            for is in [false, true] {
                out.push(SolveOptions {
                    cutset_init: cs,
                    initial_solution: is,
                    record_cuts: true,
                    ..SolveOptions::new(Method::Benders(family))
                });
            }
        }
    }
    out
}

/// Rank of a dense matrix by Gaussian elimination with partial pivoting.
pub fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[p][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                if f != 0.0 {
                    for k in c..cols {
                        rows[i][k] -= f * rows[r][k];
                    }
                }
            }
        }
        r += 1;
    }
    r
}
