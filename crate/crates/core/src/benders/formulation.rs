use covnet_lp::{LpProblem, MipProblem, Row, Sense};

use crate::model::{Instance, ProblemKind};
use crate::preprocess::{DimensionReport, Preprocessed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    /// Per-edge capacity `f_a + f_rev <= x_e` and length `sum d f <= u z`.
    Strong,
    /// Per-arc `f_a + z - x_e <= 1` and big-M length row.
    Weak,
}

/// Column layout shared by the direct model and the master: edges, then
/// nodes, then one `z` per surviving pair.
#[derive(Clone, Debug)]
pub struct VarMap {
    pub n_edges: usize,
    pub n_nodes: usize,
    z_col: Vec<Option<usize>>,
}

impl VarMap {
    pub fn new(inst: &Instance, pre: &Preprocessed) -> Self {
        let base = inst.edges.len() + inst.nodes.len();
        let mut z_col = vec![None; inst.pairs.len()];
        for (k, &w) in pre.survivors().iter().enumerate() {
            z_col[w] = Some(base + k);
        }
        VarMap {
            n_edges: inst.edges.len(),
            n_nodes: inst.nodes.len(),
            z_col,
        }
    }

    pub fn x(&self, e: usize) -> usize {
        e
    }

    pub fn y(&self, i: usize) -> usize {
        self.n_edges + i
    }

    /// Column of `z_w`, `None` for pairs removed in preprocessing.
    pub fn z(&self, w: usize) -> Option<usize> {
        self.z_col[w]
    }

    /// Edge values of a column vector.
    pub fn x_values<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[..self.n_edges]
    }

    /// `z` value of every pair (0 for removed pairs).
    pub fn z_values(&self, v: &[f64]) -> Vec<f64> {
        self.z_col.iter().map(|c| c.map_or(0.0, |k| v[k])).collect()
    }
}

/// Design columns, objective, and the budget or coverage row plus linking.
fn design_core(inst: &Instance, kind: ProblemKind, pre: &Preprocessed) -> (MipProblem, VarMap) {
    let vars = VarMap::new(inst, pre);
    let sense = match kind {
        ProblemKind::Mc => Sense::Maximize,
        ProblemKind::Pc => Sense::Minimize,
    };
    let mut mip = MipProblem::new(LpProblem::new(sense));
    let pc = kind == ProblemKind::Pc;
    for e in &inst.edges {
        mip.add_binary(if pc { e.cost } else { 0.0 });
    }
    for node in &inst.nodes {
        mip.add_binary(if pc { node.cost } else { 0.0 });
    }
    for &w in pre.survivors() {
        mip.add_binary(if pc { 0.0 } else { inst.pairs[w].demand });
    }
    match kind {
        ProblemKind::Mc => {
            let mut coefs: Vec<(usize, f64)> = (0..inst.edges.len()).map(|e| (vars.x(e), inst.edges[e].cost)).collect();
            coefs.extend((0..inst.nodes.len()).map(|i| (vars.y(i), inst.nodes[i].cost)));
            coefs.retain(|c| c.1 != 0.0);
            mip.lp.add_row(Row::le(coefs, inst.budget_or_zero()));
        }
        ProblemKind::Pc => {
            let coefs = pre
                .survivors()
                .iter()
                .map(|&w| (vars.z(w).unwrap(), inst.pairs[w].demand))
                .collect();
            mip.lp.add_row(Row::ge(coefs, inst.beta.unwrap_or(1.0) * inst.total_demand()));
        }
    }
    for (k, e) in inst.edges.iter().enumerate() {
        mip.lp.add_row(Row::le(vec![(vars.x(k), 1.0), (vars.y(e.u), -1.0)], 0.0));
        mip.lp.add_row(Row::le(vec![(vars.x(k), 1.0), (vars.y(e.v), -1.0)], 0.0));
    }
    (mip, vars)
}

pub struct DirectModel {
    pub mip: MipProblem,
    pub vars: VarMap,
    /// Flow column of every subgraph arc, per pair (empty for removed pairs).
    pub flow_cols: Vec<Vec<usize>>,
}

/// The full flow model over the preprocessed subgraphs, with continuous
/// flows in `[0, 1]`.
pub fn build_direct_model(inst: &Instance, kind: ProblemKind, pre: &Preprocessed, variant: Formulation) -> DirectModel {
    let (mut mip, vars) = design_core(inst, kind, pre);
    let mut flow_cols = vec![Vec::new(); inst.pairs.len()];
    for &w in pre.survivors() {
        let sub = &pre.subgraphs[w];
        let p = &inst.pairs[w];
        let z = vars.z(w).unwrap();
        let cols: Vec<usize> = sub.arcs.iter().map(|_| mip.add_continuous(0.0, 1.0, 0.0)).collect();

        for &i in &sub.nodes {
            let mut coefs: Vec<(usize, f64)> = Vec::new();
            for (a, arc) in sub.arcs.iter().enumerate() {
                if arc.from == i {
                    coefs.push((cols[a], 1.0));
                } else if arc.to == i {
                    coefs.push((cols[a], -1.0));
                }
            }
            if i == p.s {
                coefs.push((z, -1.0));
            } else if i == p.t {
                coefs.push((z, 1.0));
            }
            mip.lp.add_row(Row::eq(coefs, 0.0));
        }

        let length: Vec<(usize, f64)> = sub.arcs.iter().enumerate().map(|(a, arc)| (cols[a], arc.length)).collect();
        match variant {
            Formulation::Strong => {
                for &e in &sub.edges {
                    let mut coefs: Vec<(usize, f64)> = (0..sub.arcs.len())
                        .filter(|&a| sub.arcs[a].edge == e)
                        .map(|a| (cols[a], 1.0))
                        .collect();
                    coefs.push((vars.x(e), -1.0));
                    mip.lp.add_row(Row::le(coefs, 0.0));
                }
                let mut coefs = length;
                coefs.push((z, -p.utility));
                mip.lp.add_row(Row::le(coefs, 0.0));
            }
            Formulation::Weak => {
                for (a, arc) in sub.arcs.iter().enumerate() {
                    mip.lp.add_row(Row::le(vec![(cols[a], 1.0), (z, 1.0), (vars.x(arc.edge), -1.0)], 1.0));
                }
                let big_m: f64 = sub.arcs.iter().map(|a| a.length).sum();
                let mut coefs = length;
                coefs.push((z, big_m - p.utility));
                mip.lp.add_row(Row::le(coefs, big_m));
            }
        }
        flow_cols[w] = cols;
    }
    DirectModel { mip, vars, flow_cols }
}

/// The design-only master, branching on edges only. With `cutset_init`, every surviving pair gets
/// `z_w <= sum x_e` over subgraph edges at its origin and at its
/// destination. `forced` fixes the variables every PC solution must use.
pub fn build_master(
    inst: &Instance,
    kind: ProblemKind,
    pre: &Preprocessed,
    cutset_init: bool,
    forced: Option<&DimensionReport>,
) -> (MipProblem, VarMap) {
    let (mut mip, vars) = design_core(inst, kind, pre);
    // Only edges need to be integral: once x is binary the best y is the
    // endpoint indicator and the best z the coverage indicator.
    for b in mip.binary.iter_mut().skip(vars.n_edges) {
        *b = false;
    }
    mip.integral_optimum = mip.lp.objective.iter().all(|c| c.fract() == 0.0);
    if cutset_init {
        for &w in pre.survivors() {
            let sub = &pre.subgraphs[w];
            let z = vars.z(w).unwrap();
            for end in [inst.pairs[w].s, inst.pairs[w].t] {
                let mut coefs: Vec<(usize, f64)> = sub.delta(inst, end).iter().map(|&e| (vars.x(e), -1.0)).collect();
                coefs.push((z, 1.0));
                mip.lp.add_row(Row::le(coefs, 0.0));
            }
        }
    }
    if let Some(rep) = forced {
        let fixed = rep
            .forced_edges
            .iter()
            .map(|&e| vars.x(e))
            .chain(rep.forced_nodes.iter().map(|&i| vars.y(i)))
            .chain(rep.forced_pairs.iter().filter_map(|&w| vars.z(w)));
        for col in fixed {
            mip.lp.lower[col] = 1.0;
        }
    }
    (mip, vars)
}
