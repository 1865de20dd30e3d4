//! Instances, designs and the combinatorial evaluator.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph;
use crate::Error;

/// Slack on `path length <= utility` that absorbs float summation noise.
pub const LENGTH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: u64,
    pub cost: f64,
    pub x: f64,
    pub y: f64,
}

/// Undirected edge between dense node indices `u` and `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
    pub length: f64,
}

impl Edge {
    pub fn other(&self, i: usize) -> usize {
        if self.u == i {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, i: usize) -> bool {
        self.u == i || self.v == i
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdPair {
    pub s: usize,
    pub t: usize,
    pub demand: f64,
    pub utility: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    /// Maximize covered demand within the budget.
    Mc,
    /// Minimize build cost subject to covering a fraction of the demand.
    Pc,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Mc => "mc",
            ProblemKind::Pc => "pc",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub pairs: Vec<OdPair>,
    pub budget: Option<f64>,
    pub beta: Option<f64>,
    /// Edge indices incident to each node.
    incident: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: u64,
    cost: f64,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    u: u64,
    v: u64,
    cost: f64,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    s: u64,
    t: u64,
    demand: f64,
    utility: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    od_pairs: Vec<PairRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

pub fn load_instance(path: &Path) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Instance::from_json(&text)
}

impl Instance {
    /// Build and validate an instance over dense node indices.
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        pairs: Vec<OdPair>,
        budget: Option<f64>,
        beta: Option<f64>,
    ) -> Result<Self, Error> {
        let mut incident = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.u < nodes.len() && e.v < nodes.len() {
                incident[e.u].push(k);
                incident[e.v].push(k);
            }
        }
        let inst = Instance {
            nodes,
            edges,
            pairs,
            budget,
            beta,
            incident,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let rec: InstanceRecord = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut index = HashMap::new();
        for (k, n) in rec.nodes.iter().enumerate() {
            if index.insert(n.id, k).is_some() {
                return Err(Error::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let lookup = |id: u64, what: &str| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("{what} references unknown node {id}")))
        };
        let nodes = rec
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                cost: n.cost,
                x: n.x,
                y: n.y,
            })
            .collect();
        let mut edges = Vec::new();
        for e in &rec.edges {
            edges.push(Edge {
                u: lookup(e.u, "edge")?,
                v: lookup(e.v, "edge")?,
                cost: e.cost,
                length: e.length,
            });
        }
        let mut pairs = Vec::new();
        for p in &rec.od_pairs {
            pairs.push(OdPair {
                s: lookup(p.s, "O/D pair")?,
                t: lookup(p.t, "O/D pair")?,
                demand: p.demand,
                utility: p.utility,
            });
        }
        Instance::new(nodes, edges, pairs, rec.budget, rec.beta)
    }

    pub fn to_json(&self) -> String {
        let rec = InstanceRecord {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    cost: n.cost,
                    x: n.x,
                    y: n.y,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.nodes[e.u].id,
                    v: self.nodes[e.v].id,
                    cost: e.cost,
                    length: e.length,
                })
                .collect(),
            od_pairs: self
                .pairs
                .iter()
                .map(|p| PairRecord {
                    s: self.nodes[p.s].id,
                    t: self.nodes[p.t].id,
                    demand: p.demand,
                    utility: p.utility,
                })
                .collect(),
            budget: self.budget,
            beta: self.beta,
        };
        serde_json::to_string_pretty(&rec).expect("instance serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        let n = self.nodes.len();
        let bad = |msg: String| Err(Error::Invalid(msg));
        for node in &self.nodes {
            if !(node.cost >= 0.0 && node.cost.is_finite()) {
                return bad(format!("node {} has cost {}", node.id, node.cost));
            }
        }
        let mut seen = HashSet::new();
        for (k, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return bad(format!("edge {k} has an endpoint out of range"));
            }
            let (a, b) = (self.nodes[e.u].id, self.nodes[e.v].id);
            if e.u == e.v {
                return bad(format!("edge {{{a},{b}}} is a loop"));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return bad(format!("duplicate edge {{{a},{b}}}"));
            }
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return bad(format!("edge {{{a},{b}}} has cost {}", e.cost));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return bad(format!("edge {{{a},{b}}} has length {}", e.length));
            }
        }
        for (k, p) in self.pairs.iter().enumerate() {
            if p.s >= n || p.t >= n {
                return bad(format!("O/D pair {k} has an endpoint out of range"));
            }
            if p.s == p.t {
                return bad(format!("O/D pair {k} has identical endpoints"));
            }
            if !(p.demand > 0.0 && p.demand.is_finite()) {
                return bad(format!("O/D pair {k} has demand {}", p.demand));
            }
            if !(p.utility > 0.0 && p.utility.is_finite()) {
                return bad(format!("O/D pair {k} has utility {}", p.utility));
            }
        }
        if !self.pairs.is_empty() && self.total_demand() <= 0.0 {
            return bad("total demand is not positive".into());
        }
        if let Some(b) = self.budget {
            if !(b >= 0.0 && b.is_finite()) {
                return bad(format!("budget {b} is not a non-negative number"));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return bad(format!("beta {beta} is outside (0, 1]"));
            }
        }
        Ok(())
    }

    /// Check that the parameters needed by `kind` are present.
    pub fn require(&self, kind: ProblemKind) -> Result<(), Error> {
        match kind {
            ProblemKind::Mc if self.budget.is_none() => Err(Error::Invalid("MC needs a budget".into())),
            ProblemKind::Pc if self.beta.is_none() => Err(Error::Invalid("PC needs beta".into())),
            _ => Ok(()),
        }
    }

    pub fn incident(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    pub fn total_demand(&self) -> f64 {
        self.pairs.iter().map(|p| p.demand).sum()
    }

    /// Cost of building every node and edge.
    pub fn total_build_cost(&self) -> f64 {
        self.nodes.iter().map(|n| n.cost).sum::<f64>() + self.edges.iter().map(|e| e.cost).sum::<f64>()
    }

    pub fn budget_or_zero(&self) -> f64 {
        self.budget.unwrap_or(0.0)
    }

    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn edge_between(&self, i: usize, j: usize) -> Option<usize> {
        self.incident[i].iter().copied().find(|&k| self.edges[k].other(i) == j)
    }

    pub fn with_budget(&self, budget: f64) -> Instance {
        Instance {
            budget: Some(budget),
            ..self.clone()
        }
    }

    pub fn with_beta(&self, beta: f64) -> Instance {
        Instance {
            beta: Some(beta),
            ..self.clone()
        }
    }
}

/// A binary design. `paths[w]`, when present, is the node sequence routing
/// pair `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSolution {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub z: Vec<bool>,
    pub paths: Option<Vec<Option<Vec<usize>>>>,
}

#[derive(Serialize, Deserialize)]
struct SolutionRecord {
    x: Vec<usize>,
    y: Vec<u64>,
    z: Vec<usize>,
    objective: f64,
}

impl DesignSolution {
    pub fn empty(inst: &Instance) -> Self {
        DesignSolution {
            x: vec![false; inst.edges.len()],
            y: vec![false; inst.nodes.len()],
            z: vec![false; inst.pairs.len()],
            paths: None,
        }
    }

    pub fn full(inst: &Instance) -> Self {
        DesignSolution {
            x: vec![true; inst.edges.len()],
            y: vec![true; inst.nodes.len()],
            z: vec![true; inst.pairs.len()],
            paths: None,
        }
    }

    /// Build edge `e` and both its endpoints.
    pub fn build_edge(&mut self, inst: &Instance, e: usize) {
        self.x[e] = true;
        self.y[inst.edges[e].u] = true;
        self.y[inst.edges[e].v] = true;
    }

    pub fn to_json(&self, inst: &Instance, objective: f64) -> String {
        let rec = SolutionRecord {
            x: (0..self.x.len()).filter(|&e| self.x[e]).collect(),
            y: (0..self.y.len()).filter(|&i| self.y[i]).map(|i| inst.nodes[i].id).collect(),
            z: (0..self.z.len()).filter(|&w| self.z[w]).collect(),
            objective,
        };
        serde_json::to_string_pretty(&rec).expect("solution serializes")
    }

    pub fn from_json(inst: &Instance, text: &str) -> Result<Self, Error> {
        let rec: SolutionRecord = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut sol = DesignSolution::empty(inst);
        for e in rec.x {
            *sol.x.get_mut(e).ok_or_else(|| Error::Invalid(format!("edge index {e} out of range")))? = true;
        }
        for id in rec.y {
            let i = inst.node_index(id).ok_or_else(|| Error::Invalid(format!("unknown node id {id}")))?;
            sol.y[i] = true;
        }
        for w in rec.z {
            *sol.z.get_mut(w).ok_or_else(|| Error::Invalid(format!("pair index {w} out of range")))? = true;
        }
        Ok(sol)
    }
}

pub fn total_cost(inst: &Instance, sol: &DesignSolution) -> f64 {
    let nodes: f64 = (0..inst.nodes.len()).filter(|&i| sol.y[i]).map(|i| inst.nodes[i].cost).sum();
    let edges: f64 = (0..inst.edges.len()).filter(|&e| sol.x[e]).map(|e| inst.edges[e].cost).sum();
    nodes + edges
}

pub fn covered_demand(inst: &Instance, sol: &DesignSolution) -> f64 {
    (0..inst.pairs.len()).filter(|&w| sol.z[w]).map(|w| inst.pairs[w].demand).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective: f64,
    pub violations: Vec<String>,
}

/// Check a design combinatorially: linking, budget or coverage floor, and
/// a short enough built path for every covered pair.
pub fn evaluate_solution(inst: &Instance, kind: ProblemKind, sol: &DesignSolution) -> Evaluation {
    let mut violations = Vec::new();
    if sol.x.len() != inst.edges.len() || sol.y.len() != inst.nodes.len() || sol.z.len() != inst.pairs.len() {
        return Evaluation {
            feasible: false,
            objective: 0.0,
            violations: vec!["solution dimensions do not match the instance".into()],
        };
    }
    for (k, e) in inst.edges.iter().enumerate() {
        if sol.x[k] && !(sol.y[e.u] && sol.y[e.v]) {
            violations.push(format!(
                "edge {{{},{}}} built without both endpoints",
                inst.nodes[e.u].id, inst.nodes[e.v].id
            ));
        }
    }
    let cost = total_cost(inst, sol);
    let covered = covered_demand(inst, sol);
    match kind {
        ProblemKind::Mc => {
            let budget = inst.budget_or_zero();
            if cost > budget + 1e-9 * budget.max(1.0) {
                violations.push(format!("build cost {cost} exceeds budget {budget}"));
            }
        }
        ProblemKind::Pc => {
            let need = inst.beta.unwrap_or(1.0) * inst.total_demand();
            if covered < need - 1e-9 * need.max(1.0) {
                violations.push(format!("covered demand {covered} is below {need}"));
            }
        }
    }
    let built = |k: usize| sol.x[k];
    for (w, p) in inst.pairs.iter().enumerate() {
        if !sol.z[w] {
            continue;
        }
        let dist = graph::dijkstra(inst, p.s, &built).dist[p.t];
        if dist > p.utility + LENGTH_TOL {
            violations.push(format!(
                "pair {w} ({} -> {}) has built distance {dist} > utility {}",
                inst.nodes[p.s].id, inst.nodes[p.t].id, p.utility
            ));
        }
        if let Some(Some(path)) = sol.paths.as_ref().map(|ps| ps.get(w).cloned().flatten()) {
            if let Some(msg) = check_path(inst, sol, w, &path) {
                violations.push(msg);
            }
        }
    }
    let objective = match kind {
        ProblemKind::Mc => covered,
        ProblemKind::Pc => cost,
    };
    Evaluation {
        feasible: violations.is_empty(),
        objective,
        violations,
    }
}

/// Verify that `path` is a unit flow for pair `w` on built edges within the
/// utility: conservation residuals must vanish exactly.
fn check_path(inst: &Instance, sol: &DesignSolution, w: usize, path: &[usize]) -> Option<String> {
    let p = &inst.pairs[w];
    let mut balance: BTreeMap<usize, i64> = BTreeMap::new();
    let mut length = 0.0;
    let mut used = HashSet::new();
    for step in path.windows(2) {
        let Some(e) = inst.edge_between(step[0], step[1]) else {
            return Some(format!("pair {w} path uses a non-existent edge"));
        };
        if !sol.x[e] {
            return Some(format!("pair {w} path uses an unbuilt edge"));
        }
        if !used.insert(e) {
            return Some(format!("pair {w} path uses edge {e} twice"));
        }
        length += inst.edges[e].length;
        *balance.entry(step[0]).or_default() += 1;
        *balance.entry(step[1]).or_default() -= 1;
    }
    for (&i, &b) in &balance {
        let want = if i == p.s {
            1
        } else if i == p.t {
            -1
        } else {
            0
        };
        if b != want {
            return Some(format!("pair {w} flow is not conserved at node {}", inst.nodes[i].id));
        }
    }
    if path.first() != Some(&p.s) || path.last() != Some(&p.t) {
        return Some(format!("pair {w} path does not join its endpoints"));
    }
    if length > p.utility + LENGTH_TOL {
        return Some(format!("pair {w} path length {length} exceeds utility {}", p.utility));
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap_pct: Option<f64>,
    pub lp_relaxation_value: Option<f64>,
    pub lp_gap_pct: Option<f64>,
    pub cuts_by_family: BTreeMap<String, usize>,
    pub node_count: usize,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn total_cuts(&self) -> usize {
        self.cuts_by_family.values().sum()
    }
}

/// `100 |bound - objective| / max(|objective|, 1e-9)`.
pub fn gap_pct(objective: f64, bound: f64) -> f64 {
    100.0 * (bound - objective).abs() / objective.abs().max(1e-9)
}

/// `100 |lp - ip| / |ip|`, undefined when the integer optimum is zero.
pub fn lp_gap_pct(lp: f64, ip: f64) -> Option<f64> {
    if ip == 0.0 {
        None
    } else {
        Some(100.0 * (lp - ip).abs() / ip.abs())
    }
}
