//! Per-pair network reduction, elimination of pairs that cannot be covered,
//! witness paths, and the interior points used by the facet-defining cuts.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{self, dijkstra};
use crate::model::{DesignSolution, Instance, ProblemKind, LENGTH_TOL};
use crate::Error;

const COST_TOL: f64 = 1e-9;

/// Directed copy of an edge inside a pair's subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

/// The part of the network that can lie on a short enough path for one pair.
#[derive(Clone, Debug)]
pub struct OdSubgraph {
    pub pair: usize,
    pub in_nodes: Vec<bool>,
    pub in_edges: Vec<bool>,
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    /// Both orientations of every subgraph edge, minus arcs entering the
    /// origin or leaving the destination.
    pub arcs: Vec<Arc>,
}

impl OdSubgraph {
    /// False when even the unrestricted shortest path exceeds the utility.
    pub fn coverable_by_distance(&self) -> bool {
        !self.nodes.is_empty()
    }

    /// Subgraph edges incident to `i`.
    pub fn delta(&self, inst: &Instance, i: usize) -> Vec<usize> {
        inst.incident(i).iter().copied().filter(|&e| self.in_edges[e]).collect()
    }

    pub fn shortest_path(&self, inst: &Instance, edge_ok: &dyn Fn(usize) -> bool) -> graph::ShortestPaths {
        let s = inst.pairs[self.pair].s;
        dijkstra(inst, s, &|e| self.in_edges[e] && edge_ok(e))
    }
}

pub fn build_od_subgraph(inst: &Instance, w: usize) -> OdSubgraph {
    let p = &inst.pairs[w];
    let all = |_: usize| true;
    let from_s = dijkstra(inst, p.s, &all).dist;
    let to_t = dijkstra(inst, p.t, &all).dist;
    let n = inst.nodes.len();
    let mut in_nodes: Vec<bool> = (0..n).map(|i| from_s[i] + to_t[i] <= p.utility + LENGTH_TOL).collect();
    if !in_nodes[p.s] || !in_nodes[p.t] {
        in_nodes = vec![false; n];
    }
    let in_edges: Vec<bool> = inst.edges.iter().map(|e| in_nodes[e.u] && in_nodes[e.v]).collect();
    let mut arcs = Vec::new();
    for (k, e) in inst.edges.iter().enumerate() {
        if !in_edges[k] {
            continue;
        }
        for (from, to) in [(e.u, e.v), (e.v, e.u)] {
            if to != p.s && from != p.t {
                arcs.push(Arc {
                    edge: k,
                    from,
                    to,
                    length: e.length,
                });
            }
        }
    }
    OdSubgraph {
        pair: w,
        nodes: (0..n).filter(|&i| in_nodes[i]).collect(),
        edges: (0..inst.edges.len()).filter(|&k| in_edges[k]).collect(),
        in_nodes,
        in_edges,
        arcs,
    }
}

/// A simple path certifying that a pair can be covered.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasiblePath {
    pub pair: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub length: f64,
    /// Build cost of every node and edge on the path.
    pub cost: f64,
}

#[derive(Clone, Debug)]
struct Label {
    cost: f64,
    length: f64,
    seq: Vec<usize>,
    edges: Vec<usize>,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.length.total_cmp(&other.length))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Cheapest path of length at most the utility (and cost at most
/// `cost_cap`), ties broken by length then node sequence. Labels over
/// (cost, length) are settled in that order; a label is dominated when a
/// settled label at the same node is no longer.
pub fn cheapest_feasible_path(inst: &Instance, sub: &OdSubgraph, cost_cap: Option<f64>) -> Option<FeasiblePath> {
    if !sub.coverable_by_distance() {
        return None;
    }
    let p = &inst.pairs[sub.pair];
    let to_t = dijkstra(inst, p.t, &|e| sub.in_edges[e]).dist;
    let cap = cost_cap.map_or(f64::INFINITY, |c| c + COST_TOL * c.max(1.0));
    let mut best_len = vec![f64::INFINITY; inst.nodes.len()];
    let mut heap = BinaryHeap::new();
    let start = Label {
        cost: inst.nodes[p.s].cost,
        length: 0.0,
        seq: vec![p.s],
        edges: Vec::new(),
    };
    if start.cost > cap {
        return None;
    }
    heap.push(Reverse(start));
    while let Some(Reverse(label)) = heap.pop() {
        let v = *label.seq.last().unwrap();
        if best_len[v] <= label.length {
            continue;
        }
        best_len[v] = label.length;
        if v == p.t {
            return Some(FeasiblePath {
                pair: sub.pair,
                nodes: label.seq,
                edges: label.edges,
                length: label.length,
                cost: label.cost,
            });
        }
        for &e in inst.incident(v) {
            if !sub.in_edges[e] {
                continue;
            }
            let j = inst.edges[e].other(v);
            if j == p.s || label.seq.contains(&j) {
                continue;
            }
            let length = label.length + inst.edges[e].length;
            let cost = label.cost + inst.edges[e].cost + inst.nodes[j].cost;
            if length + to_t[j] > p.utility + LENGTH_TOL || cost > cap || best_len[j] <= length {
                continue;
            }
            let mut seq = label.seq.clone();
            seq.push(j);
            let mut edges = label.edges.clone();
            edges.push(e);
            heap.push(Reverse(Label {
                cost,
                length,
                seq,
                edges,
            }));
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct Elimination {
    /// Witness path per pair; `None` for removed pairs.
    pub paths: Vec<Option<FeasiblePath>>,
    pub survivors: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Drop pairs that no affordable path of admissible length can cover.
/// For PC the budget is ignored, and the coverage floor is checked against
/// the surviving demand.
pub fn eliminate_uncoverable_pairs(
    inst: &Instance,
    kind: ProblemKind,
    subgraphs: &[OdSubgraph],
) -> Result<Elimination, Error> {
    let cap = match kind {
        ProblemKind::Mc => Some(inst.budget_or_zero()),
        ProblemKind::Pc => None,
    };
    let paths: Vec<Option<FeasiblePath>> = subgraphs.iter().map(|s| cheapest_feasible_path(inst, s, cap)).collect();
    let survivors: Vec<usize> = (0..paths.len()).filter(|&w| paths[w].is_some()).collect();
    let removed: Vec<usize> = (0..paths.len()).filter(|&w| paths[w].is_none()).collect();
    if kind == ProblemKind::Pc {
        let need = inst.beta.unwrap_or(1.0) * inst.total_demand();
        let have: f64 = survivors.iter().map(|&w| inst.pairs[w].demand).sum();
        if have < need - 1e-9 * need.max(1.0) {
            return Err(Error::Infeasible(format!(
                "coverable demand {have} is below the required {need}"
            )));
        }
    }
    Ok(Elimination {
        paths,
        survivors,
        removed,
    })
}

/// Everything the solvers need from preprocessing.
#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub kind: ProblemKind,
    pub subgraphs: Vec<OdSubgraph>,
    pub elimination: Elimination,
}

impl Preprocessed {
    pub fn new(inst: &Instance, kind: ProblemKind) -> Result<Self, Error> {
        inst.require(kind)?;
        let subgraphs: Vec<OdSubgraph> = (0..inst.pairs.len()).map(|w| build_od_subgraph(inst, w)).collect();
        let elimination = eliminate_uncoverable_pairs(inst, kind, &subgraphs)?;
        Ok(Preprocessed {
            kind,
            subgraphs,
            elimination,
        })
    }

    pub fn survivors(&self) -> &[usize] {
        &self.elimination.survivors
    }

    pub fn path(&self, w: usize) -> Option<&FeasiblePath> {
        self.elimination.paths[w].as_ref()
    }
}

/// An integral unit flow along one path of a pair's subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitPath {
    pub nodes: Vec<usize>,
    /// Indices into the subgraph's arc list.
    pub arcs: Vec<usize>,
    pub length: f64,
}

/// Decompose a fractional flow of value `z` (one entry per subgraph arc)
/// into paths and cycles, drop the cycles, and return the shortest path.
/// It is within the utility whenever the flow's total length is.
pub fn extract_path_flow(inst: &Instance, sub: &OdSubgraph, flow: &[f64], z: f64) -> Result<UnitPath, Error> {
    const EPS: f64 = 1e-9;
    if flow.len() != sub.arcs.len() {
        return Err(Error::Flow("flow vector does not match the arc list".into()));
    }
    if !(z > EPS) {
        return Err(Error::Flow(format!("flow value {z} is not positive")));
    }
    let p = &inst.pairs[sub.pair];
    let n = inst.nodes.len();
    let mut net = vec![0.0; n];
    for (a, arc) in sub.arcs.iter().enumerate() {
        if flow[a] < -1e-7 {
            return Err(Error::Flow(format!("negative flow on arc {a}")));
        }
        net[arc.from] += flow[a];
        net[arc.to] -= flow[a];
    }
    for i in 0..n {
        let want = if i == p.s {
            z
        } else if i == p.t {
            -z
        } else {
            0.0
        };
        if (net[i] - want).abs() > 1e-6 {
            return Err(Error::Flow(format!("flow is not conserved at node {}", inst.nodes[i].id)));
        }
    }

    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, arc) in sub.arcs.iter().enumerate() {
        out[arc.from].push(a);
    }
    let mut rest: Vec<f64> = flow.iter().map(|f| f.max(0.0)).collect();
    let mut best: Option<UnitPath> = None;
    let mut guard = 0;
    loop {
        let leaving: f64 = out[p.s].iter().map(|&a| rest[a]).sum();
        if leaving <= EPS || guard > 4 * (sub.arcs.len() + 1) * (sub.arcs.len() + 1) {
            break;
        }
        guard += 1;
        // Walk forward on positive arcs; a repeated node closes a cycle.
        let mut nodes = vec![p.s];
        let mut arcs: Vec<usize> = Vec::new();
        let mut cur = p.s;
        let mut stuck = false;
        while cur != p.t {
            let Some(&a) = out[cur].iter().find(|&&a| rest[a] > EPS) else {
                stuck = true;
                break;
            };
            let next = sub.arcs[a].to;
            if let Some(pos) = nodes.iter().position(|&v| v == next) {
                let cycle = &arcs[pos..];
                let amount = cycle.iter().chain([&a]).map(|&c| rest[c]).fold(f64::INFINITY, f64::min);
                for &c in cycle.iter().chain([&a]) {
                    rest[c] -= amount;
                }
                nodes.truncate(pos + 1);
                arcs.truncate(pos);
                cur = next;
                continue;
            }
            nodes.push(next);
            arcs.push(a);
            cur = next;
        }
        if stuck {
            // Residual flow out of a dead end; only reachable through
            // numerical noise, so clear the offending arcs.
            for &a in &arcs {
                rest[a] = 0.0;
            }
            continue;
        }
        let amount = arcs.iter().map(|&a| rest[a]).fold(f64::INFINITY, f64::min);
        for &a in &arcs {
            rest[a] -= amount;
        }
        let length: f64 = arcs.iter().map(|&a| sub.arcs[a].length).sum();
        if best.as_ref().map_or(true, |b| length < b.length) {
            best = Some(UnitPath { nodes, arcs, length });
        }
    }
    match best {
        Some(path) if path.length <= p.utility + LENGTH_TOL => Ok(path),
        Some(path) => Err(Error::Flow(format!(
            "shortest path in the decomposition has length {} > utility {}",
            path.length, p.utility
        ))),
        None => Err(Error::Flow("flow carries no origin-destination path".into())),
    }
}

/// Fractional point over all design variables; `z` has one entry per pair
/// of the instance (zero for removed pairs).
#[derive(Clone, Debug, PartialEq)]
pub struct CorePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl CorePoint {
    pub fn average(inst: &Instance, points: &[DesignSolution]) -> Self {
        let k = points.len() as f64;
        let avg = |f: &dyn Fn(&DesignSolution) -> &Vec<bool>, len: usize| -> Vec<f64> {
            (0..len)
                .map(|i| points.iter().filter(|p| f(p)[i]).count() as f64 / k)
                .collect()
        };
        CorePoint {
            x: avg(&|p| &p.x, inst.edges.len()),
            y: avg(&|p| &p.y, inst.nodes.len()),
            z: avg(&|p| &p.z, inst.pairs.len()),
        }
    }
}

/// The affinely independent MC designs: the empty design, one node alone,
/// one edge with its endpoints, and one witness path with its pair covered.
pub fn mc_core_points(inst: &Instance, pre: &Preprocessed) -> Vec<DesignSolution> {
    let mut points = vec![DesignSolution::empty(inst)];
    for i in 0..inst.nodes.len() {
        let mut p = DesignSolution::empty(inst);
        p.y[i] = true;
        points.push(p);
    }
    for e in 0..inst.edges.len() {
        let mut p = DesignSolution::empty(inst);
        p.build_edge(inst, e);
        points.push(p);
    }
    for &w in pre.survivors() {
        let path = pre.path(w).expect("survivor has a witness path");
        let mut p = DesignSolution::empty(inst);
        for &i in &path.nodes {
            p.y[i] = true;
        }
        for &e in &path.edges {
            p.x[e] = true;
        }
        p.z[w] = true;
        points.push(p);
    }
    points
}

pub fn mc_core_point(inst: &Instance, pre: &Preprocessed) -> CorePoint {
    CorePoint::average(inst, &mc_core_points(inst, pre))
}

#[derive(Clone, Debug)]
pub struct DimensionReport {
    pub forced_nodes: Vec<usize>,
    pub forced_edges: Vec<usize>,
    pub forced_pairs: Vec<usize>,
    pub points: Vec<DesignSolution>,
    pub dim: usize,
    /// `edge_essential[w][e]`: pair `w` cannot be covered without edge `e`.
    pub edge_essential: Vec<Vec<bool>>,
    /// `node_essential[w][i]`: pair `w` cannot be covered without node `i`.
    pub node_essential: Vec<Vec<bool>>,
    pub interior: CorePoint,
}

/// Whether pair `w` can still be covered inside its subgraph when the
/// edges rejected by `edge_ok` are missing.
fn coverable_without(inst: &Instance, sub: &OdSubgraph, edge_ok: &dyn Fn(usize) -> bool) -> bool {
    let p = &inst.pairs[sub.pair];
    sub.coverable_by_distance() && sub.shortest_path(inst, edge_ok).dist[p.t] <= p.utility + LENGTH_TOL
}

/// Forced variables, essential elements, a list of feasible PC designs and
/// their average, following the all-ones-then-drop-one construction. Only
/// surviving pairs take part; the demand floor uses the full demand.
pub fn pc_dimension(inst: &Instance, pre: &Preprocessed) -> DimensionReport {
    let n_nodes = inst.nodes.len();
    let n_edges = inst.edges.len();
    let survivors = pre.survivors();
    let need = inst.beta.unwrap_or(1.0) * inst.total_demand();
    let surviving_demand: f64 = survivors.iter().map(|&w| inst.pairs[w].demand).sum();

    let mut edge_essential = vec![vec![false; n_edges]; inst.pairs.len()];
    let mut node_essential = vec![vec![false; n_nodes]; inst.pairs.len()];
    for &w in survivors {
        let sub = &pre.subgraphs[w];
        let p = &inst.pairs[w];
        for &e in &sub.edges {
            edge_essential[w][e] = !coverable_without(inst, sub, &|k| k != e);
        }
        for &i in &sub.nodes {
            node_essential[w][i] =
                i == p.s || i == p.t || !coverable_without(inst, sub, &|k| !inst.edges[k].touches(i));
        }
    }

    let all_ones = || {
        let mut d = DesignSolution::full(inst);
        for (w, z) in d.z.iter_mut().enumerate() {
            *z = pre.elimination.paths[w].is_some();
        }
        d
    };
    let mut points = vec![all_ones()];
    let mut forced_pairs = Vec::new();
    let mut forced_edge = vec![false; n_edges];
    let mut forced_node = vec![false; n_nodes];
    for &w in survivors {
        if surviving_demand - inst.pairs[w].demand >= need - 1e-9 * need.max(1.0) {
            let mut d = all_ones();
            d.z[w] = false;
            points.push(d);
        } else {
            forced_pairs.push(w);
            for e in 0..n_edges {
                if edge_essential[w][e] {
                    forced_edge[e] = true;
                    forced_node[inst.edges[e].u] = true;
                    forced_node[inst.edges[e].v] = true;
                }
            }
        }
    }
    for e in 0..n_edges {
        if forced_edge[e] {
            continue;
        }
        let mut d = all_ones();
        d.x[e] = false;
        for &w in survivors {
            d.z[w] = !edge_essential[w][e];
        }
        points.push(d);
    }
    for i in 0..n_nodes {
        if forced_node[i] {
            continue;
        }
        let mut d = all_ones();
        d.y[i] = false;
        for &e in inst.incident(i) {
            d.x[e] = false;
        }
        for &w in survivors {
            d.z[w] = !node_essential[w][i];
        }
        points.push(d);
    }

    let forced_nodes: Vec<usize> = (0..n_nodes).filter(|&i| forced_node[i]).collect();
    let forced_edges: Vec<usize> = (0..n_edges).filter(|&e| forced_edge[e]).collect();
    let dim = n_nodes + n_edges + survivors.len() - (forced_nodes.len() + forced_edges.len() + forced_pairs.len());
    let interior = CorePoint::average(inst, &points);
    DimensionReport {
        forced_nodes,
        forced_edges,
        forced_pairs,
        points,
        dim,
        edge_essential,
        node_essential,
        interior,
    }
}
