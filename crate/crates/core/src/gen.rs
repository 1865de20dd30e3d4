//! Random planar instances: one point per grid cell, a planar edge set with
//! random deletions, random costs, pairs, demands and utilities.

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64;

use crate::graph::{dijkstra, is_connected};
use crate::model::{Edge, Instance, Node, OdPair};
use crate::Error;

const MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// Each cell joined to its right and lower neighbours.
    Grid,
    /// Delaunay triangulation of the points.
    Delaunay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub nodes: usize,
    pub seed: u64,
    pub edge_drop_prob: f64,
    pub budget_fraction: f64,
    pub utility_multiplier: f64,
    pub demand_range: (f64, f64),
    pub node_cost_range: (f64, f64),
    pub pair_prob: f64,
    pub cell_side: f64,
    pub beta: f64,
    pub topology: Topology,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            nodes: 10,
            seed: 0,
            edge_drop_prob: 0.3,
            budget_fraction: 0.5,
            utility_multiplier: 2.0,
            demand_range: (10.0, 300.0),
            node_cost_range: (7.0, 13.0),
            pair_prob: 0.5,
            cell_side: 10.0,
            beta: 0.5,
            topology: Topology::Grid,
        }
    }
}

impl GenParams {
    pub fn new(nodes: usize, seed: u64) -> Self {
        GenParams {
            nodes,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.nodes < 2 {
            return bad("at least 2 nodes are needed");
        }
        if !prob(self.edge_drop_prob) || !prob(self.pair_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.budget_fraction >= 0.0) {
            return bad("budget fraction must be non-negative");
        }
        if !(self.utility_multiplier > 0.0) {
            return bad("utility multiplier must be positive");
        }
        if !(self.demand_range.0 <= self.demand_range.1 && self.demand_range.0 > 0.0) {
            return bad("demand range must be a non-empty positive interval");
        }
        if !(self.node_cost_range.0 <= self.node_cost_range.1 && self.node_cost_range.0 >= 0.0) {
            return bad("node cost range must be a non-empty non-negative interval");
        }
        if !(self.cell_side > 0.0) {
            return bad("cell side must be positive");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must lie in (0, 1]");
        }
        Ok(())
    }
}

struct Uniform(Pcg64);

impl Uniform {
    /// Uniform on [0, 1) from the top 53 bits.
    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

pub fn grid_columns(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

fn candidate_edges(points: &[(f64, f64)], topology: Topology) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut edges = Vec::new();
    match topology {
        Topology::Grid => {
            let cols = grid_columns(n);
            for k in 0..n {
                if (k % cols) + 1 < cols && k + 1 < n {
                    edges.push((k, k + 1));
                }
                if k + cols < n {
                    edges.push((k, k + cols));
                }
            }
        }
        Topology::Delaunay => {
            let pts: Vec<delaunator::Point> = points.iter().map(|&(x, y)| delaunator::Point { x, y }).collect();
            let tri = delaunator::triangulate(&pts);
            for t in tri.triangles.chunks(3) {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            if n == 2 {
                edges.push((0, 1));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Generate an instance. The random stream is consumed identically for any
/// budget fraction, utility multiplier or beta, so those parameters can be
/// varied on a fixed network.
pub fn generate_instance(p: &GenParams) -> Result<Instance, Error> {
    p.validate()?;
    let mut rng = Uniform(Pcg64::seed_from_u64(p.seed));
    let n = p.nodes;
    let cols = grid_columns(n);
    for _ in 0..MAX_ATTEMPTS {
        let points: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let (r, c) = ((k / cols) as f64, (k % cols) as f64);
                let half = p.cell_side / 4.0;
                let cx = (c + 0.5) * p.cell_side;
                let cy = (r + 0.5) * p.cell_side;
                (rng.range(cx - half, cx + half), rng.range(cy - half, cy + half))
            })
            .collect();
        let mut kept = Vec::new();
        for (a, b) in candidate_edges(&points, p.topology) {
            if rng.next() >= p.edge_drop_prob {
                kept.push((a, b));
            }
        }
        let nodes: Vec<Node> = (0..n)
            .map(|k| Node {
                id: k as u64 + 1,
                cost: rng.range(p.node_cost_range.0, p.node_cost_range.1).round(),
                x: points[k].0,
                y: points[k].1,
            })
            .collect();
        let edges: Vec<Edge> = kept
            .iter()
            .map(|&(a, b)| {
                let length = (points[a].0 - points[b].0).hypot(points[a].1 - points[b].1);
                Edge {
                    u: a,
                    v: b,
                    cost: length.round(),
                    length,
                }
            })
            .collect();
        let mut pairs = Vec::new();
        for s in 0..n {
            for t in 0..n {
                if s != t && rng.next() < p.pair_prob {
                    let demand = rng.range(p.demand_range.0, p.demand_range.1).round();
                    pairs.push(OdPair {
                        s,
                        t,
                        demand,
                        utility: 1.0,
                    });
                }
            }
        }
        let mut inst = Instance::new(nodes, edges, Vec::new(), None, None)?;
        if !is_connected(&inst) || pairs.is_empty() {
            continue;
        }
        let total = inst.total_build_cost();
        let budget = p.budget_fraction * total;
        let max_single = inst
            .nodes
            .iter()
            .map(|x| x.cost)
            .chain(inst.edges.iter().map(|e| e.cost))
            .fold(0.0, f64::max);
        if n >= 10 && max_single > budget {
            continue;
        }
        for pair in &mut pairs {
            let sp = dijkstra(&inst, pair.s, &|_| true).dist[pair.t];
            pair.utility = p.utility_multiplier * sp;
        }
        inst = Instance::new(inst.nodes, inst.edges, pairs, Some(budget), Some(p.beta))?;
        return Ok(inst);
    }
    Err(Error::Generation(format!(
        "no connected instance after {MAX_ATTEMPTS} attempts (n = {n}, seed = {})",
        p.seed
    )))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkIndicators {
    pub cycle_availability: f64,
    pub connectivity: f64,
    pub density: f64,
}

pub fn compute_indicators(inst: &Instance) -> Result<NetworkIndicators, Error> {
    let n = inst.nodes.len() as f64;
    let m = inst.edges.len() as f64;
    if inst.nodes.len() < 3 {
        return Err(Error::Invalid("indicators need at least 3 nodes".into()));
    }
    Ok(NetworkIndicators {
        cycle_availability: (m - n + 1.0) / (2.0 * n - 5.0),
        connectivity: m / n,
        density: m / (3.0 * (n - 2.0)),
    })
}
