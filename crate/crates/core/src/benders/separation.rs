use covnet_lp::{lp_solve, LpError, LpOutcome, LpProblem, Row, Sense};

use crate::graph::component;
use crate::model::Instance;
use crate::preprocess::{CorePoint, OdSubgraph};

/// Minimum violation for a cut to be emitted.
pub const SEPARATION_TOL: f64 = 1e-6;

/// Subproblem family used to separate a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Homogeneous dual subproblem; cuts from extreme rays.
    Trd,
    /// Dual of the unit-flow shortest path; rays or optimal vertices.
    Norm1,
    /// Shortest-path dual with the origin potential pinned above the utility.
    Norm2,
    /// Homogeneous dual with edge multipliers capped at one.
    Norm3,
    /// Homogeneous dual normalised against a core point.
    Cw,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Trd => "trd",
            Family::Norm1 => "norm1",
            Family::Norm2 => "norm2",
            Family::Norm3 => "norm3",
            Family::Cw => "cw",
        }
    }

    pub const ALL: [Family; 5] = [Family::Trd, Family::Norm1, Family::Norm2, Family::Norm3, Family::Cw];
}

/// Where a cut came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutFamily {
    Trd,
    Norm1Ray,
    Norm1Opt,
    Norm2,
    Norm3,
    Cw,
    CutSet,
    /// `z_w <= sum of unbuilt subgraph edges`, used for an integer point
    /// when the subproblem yields nothing violated.
    NoGood,
}

impl CutFamily {
    pub fn name(self) -> &'static str {
        match self {
            CutFamily::Trd => "trd",
            CutFamily::Norm1Ray => "norm1_ray",
            CutFamily::Norm1Opt => "norm1_opt",
            CutFamily::Norm2 => "norm2",
            CutFamily::Norm3 => "norm3",
            CutFamily::Cw => "cw",
            CutFamily::CutSet => "cutset",
            CutFamily::NoGood => "nogood",
        }
    }
}

/// `z_coef * z_w + sum x_coef * x_e <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BendersCut {
    pub pair: usize,
    pub z_coef: f64,
    pub x_coefs: Vec<(usize, f64)>,
    pub family: CutFamily,
}

impl BendersCut {
    pub fn lhs(&self, x: &[f64], z: f64) -> f64 {
        self.z_coef * z + self.x_coefs.iter().map(|&(e, c)| c * x[e]).sum::<f64>()
    }

    pub fn violation(&self, x: &[f64], z: f64) -> f64 {
        self.lhs(x, z)
    }

    /// Scale so the largest coefficient magnitude is one.
    fn normalized(mut self) -> Self {
        let scale = self.x_coefs.iter().map(|c| c.1.abs()).fold(self.z_coef.abs(), f64::max);
        if scale > 0.0 {
            self.z_coef /= scale;
            for c in &mut self.x_coefs {
                c.1 /= scale;
            }
        }
        self
    }

    /// The cut as a master row, with `x_col` and `z_col` mapping edges and
    /// the pair to columns.
    pub fn to_row(&self, x_col: impl Fn(usize) -> usize, z_col: usize) -> Row {
        let mut coefs: Vec<(usize, f64)> = self.x_coefs.iter().map(|&(e, c)| (x_col(e), c)).collect();
        coefs.push((z_col, self.z_coef));
        Row::le(coefs, 0.0)
    }
}

/// Column layout of a dual subproblem: one potential per subgraph node
/// other than the destination, one multiplier per subgraph edge, and the
/// length multiplier when present.
struct DualLayout {
    sigma: Vec<Option<usize>>,
    upsilon: Option<usize>,
    origin: usize,
}

enum DualKind {
    /// Arc rows `alpha_i - alpha_j - sigma_e - d_a upsilon <= 0`.
    Homogeneous { sigma_cap: f64 },
    /// Arc rows `alpha_i - alpha_j - sigma_e <= d_a`.
    ShortestPath,
}

fn dual_subproblem(inst: &Instance, sub: &OdSubgraph, kind: &DualKind, x: &[f64], z: f64) -> (LpProblem, DualLayout) {
    let p = &inst.pairs[sub.pair];
    let mut lp = LpProblem::new(Sense::Maximize);
    let mut alpha = vec![None; inst.nodes.len()];
    for &i in &sub.nodes {
        if i != p.t {
            alpha[i] = Some(lp.add_var(f64::NEG_INFINITY, f64::INFINITY, if i == p.s { z } else { 0.0 }));
        }
    }
    let cap = match kind {
        DualKind::Homogeneous { sigma_cap } => *sigma_cap,
        DualKind::ShortestPath => f64::INFINITY,
    };
    let mut sigma = vec![None; inst.edges.len()];
    for &e in &sub.edges {
        sigma[e] = Some(lp.add_var(0.0, cap, -x[e]));
    }
    let upsilon = match kind {
        DualKind::Homogeneous { .. } => Some(lp.add_var(0.0, f64::INFINITY, -p.utility * z)),
        DualKind::ShortestPath => None,
    };
    for arc in &sub.arcs {
        let mut coefs = Vec::with_capacity(4);
        if let Some(c) = alpha[arc.from] {
            coefs.push((c, 1.0));
        }
        if let Some(c) = alpha[arc.to] {
            coefs.push((c, -1.0));
        }
        coefs.push((sigma[arc.edge].unwrap(), -1.0));
        let rhs = match upsilon {
            Some(u) => {
                coefs.push((u, -arc.length));
                0.0
            }
            None => arc.length,
        };
        lp.add_row(Row::le(coefs, rhs));
    }
    let origin = alpha[p.s].expect("origin belongs to its subgraph");
    (lp, DualLayout { sigma, upsilon, origin })
}

/// Read `(alpha_s - u * upsilon) z - sum sigma_e x_e <= 0` off a dual vector,
/// with `shift` subtracted from the origin potential.
fn cut_from_dual(inst: &Instance, sub: &OdSubgraph, lay: &DualLayout, v: &[f64], shift: f64, family: CutFamily) -> BendersCut {
    let u = inst.pairs[sub.pair].utility;
    let ups = lay.upsilon.map_or(0.0, |c| v[c]);
    let x_coefs = sub
        .edges
        .iter()
        .filter_map(|&e| {
            let s = v[lay.sigma[e].unwrap()];
            (s != 0.0).then_some((e, -s))
        })
        .collect();
    BendersCut {
        pair: sub.pair,
        z_coef: v[lay.origin] - shift - u * ups,
        x_coefs,
        family,
    }
}

fn keep_if_violated(cut: BendersCut, x: &[f64], z: f64) -> Option<BendersCut> {
    (cut.violation(x, z) > SEPARATION_TOL).then_some(cut)
}

/// Homogeneous dual subproblem; a cut comes from an unbounded ray.
pub fn separate_trd(inst: &Instance, sub: &OdSubgraph, x: &[f64], z: f64) -> Result<Option<BendersCut>, LpError> {
    let kind = DualKind::Homogeneous { sigma_cap: f64::INFINITY };
    let (lp, lay) = dual_subproblem(inst, sub, &kind, x, z);
    match lp_solve(&lp)? {
        LpOutcome::Unbounded { ray, .. } => {
            let cut = cut_from_dual(inst, sub, &lay, &ray, 0.0, CutFamily::Trd).normalized();
            Ok(keep_if_violated(cut, x, z))
        }
        LpOutcome::Optimal(_) => Ok(None),
        LpOutcome::Infeasible { .. } => Err(LpError::NumericalBreakdown("homogeneous subproblem reported infeasible".into())),
    }
}

/// Shortest-path dual: a ray when the built subgraph disconnects the pair,
/// an optimal vertex when the shortest path is longer than the utility.
pub fn separate_norm1(inst: &Instance, sub: &OdSubgraph, x: &[f64], z: f64) -> Result<Option<BendersCut>, LpError> {
    let (lp, lay) = dual_subproblem(inst, sub, &DualKind::ShortestPath, x, z);
    let u = inst.pairs[sub.pair].utility;
    match lp_solve(&lp)? {
        LpOutcome::Unbounded { ray, .. } => {
            let cut = cut_from_dual(inst, sub, &lay, &ray, 0.0, CutFamily::Norm1Ray).normalized();
            Ok(keep_if_violated(cut, x, z))
        }
        LpOutcome::Optimal(sol) => {
            if sol.objective > u * z + SEPARATION_TOL {
                let cut = cut_from_dual(inst, sub, &lay, &sol.x, u, CutFamily::Norm1Opt);
                Ok(keep_if_violated(cut, x, z))
            } else {
                Ok(None)
            }
        }
        LpOutcome::Infeasible { .. } => Err(LpError::NumericalBreakdown("shortest-path dual reported infeasible".into())),
    }
}

/// Shortest-path dual with the origin potential fixed at `u + 1`; the cut
/// is `z - sum sigma_e x_e <= 0`.
pub fn separate_norm2(inst: &Instance, sub: &OdSubgraph, x: &[f64], z: f64) -> Result<Option<BendersCut>, LpError> {
    let (mut lp, lay) = dual_subproblem(inst, sub, &DualKind::ShortestPath, x, z);
    let u = inst.pairs[sub.pair].utility;
    lp.lower[lay.origin] = u + 1.0;
    lp.upper[lay.origin] = u + 1.0;
    match lp_solve(&lp)? {
        LpOutcome::Optimal(sol) => {
            if sol.objective - u * z > SEPARATION_TOL {
                let cut = cut_from_dual(inst, sub, &lay, &sol.x, u, CutFamily::Norm2);
                Ok(keep_if_violated(cut, x, z))
            } else {
                Ok(None)
            }
        }
        _ => Err(LpError::NumericalBreakdown("pinned shortest-path dual has no optimum".into())),
    }
}

/// Homogeneous dual with `sigma <= 1`; a positive optimum gives the cut.
pub fn separate_norm3(inst: &Instance, sub: &OdSubgraph, x: &[f64], z: f64) -> Result<Option<BendersCut>, LpError> {
    let kind = DualKind::Homogeneous { sigma_cap: 1.0 };
    let (lp, lay) = dual_subproblem(inst, sub, &kind, x, z);
    match lp_solve(&lp)? {
        LpOutcome::Optimal(sol) => {
            if sol.objective > SEPARATION_TOL {
                let cut = cut_from_dual(inst, sub, &lay, &sol.x, 0.0, CutFamily::Norm3);
                Ok(keep_if_violated(cut, x, z))
            } else {
                Ok(None)
            }
        }
        // No utility-feasible path at all: the ray still gives a valid cut.
        LpOutcome::Unbounded { ray, .. } => {
            let cut = cut_from_dual(inst, sub, &lay, &ray, 0.0, CutFamily::Norm3).normalized();
            Ok(keep_if_violated(cut, x, z))
        }
        LpOutcome::Infeasible { .. } => Err(LpError::NumericalBreakdown("capped subproblem reported infeasible".into())),
    }
}

/// Homogeneous dual evaluated at the exterior point `(x, z)` with the
/// normalisation row `(out - core) . multipliers <= 1`.
pub fn separate_cw(
    inst: &Instance,
    sub: &OdSubgraph,
    core: &CorePoint,
    x: &[f64],
    z: f64,
) -> Result<Option<BendersCut>, LpError> {
    let w = sub.pair;
    let u = inst.pairs[w].utility;
    let kind = DualKind::Homogeneous { sigma_cap: f64::INFINITY };
    let (mut lp, lay) = dual_subproblem(inst, sub, &kind, x, z);
    let dz = z - core.z[w];
    let mut coefs = vec![(lay.origin, dz)];
    for &e in &sub.edges {
        coefs.push((lay.sigma[e].unwrap(), -(x[e] - core.x[e])));
    }
    coefs.push((lay.upsilon.unwrap(), -u * dz));
    coefs.retain(|c| c.1 != 0.0);
    lp.add_row(Row::le(coefs, 1.0));
    match lp_solve(&lp)? {
        LpOutcome::Optimal(sol) => {
            if sol.objective > SEPARATION_TOL {
                let cut = cut_from_dual(inst, sub, &lay, &sol.x, 0.0, CutFamily::Cw);
                Ok(keep_if_violated(cut, x, z))
            } else {
                Ok(None)
            }
        }
        LpOutcome::Unbounded { .. } => Err(LpError::NumericalBreakdown(format!(
            "core-point subproblem of pair {w} is unbounded; the core point is not interior"
        ))),
        LpOutcome::Infeasible { .. } => Err(LpError::NumericalBreakdown("core-point subproblem reported infeasible".into())),
    }
}

/// Cut `z_w <= sum x_e` over the subgraph edges leaving the origin's
/// component of built edges, if that component misses the destination.
pub fn separate_cutset(inst: &Instance, sub: &OdSubgraph, x: &[f64], z: f64) -> Option<BendersCut> {
    let p = &inst.pairs[sub.pair];
    let reach = component(inst, p.s, &|e| sub.in_edges[e] && x[e] > 0.5);
    if reach[p.t] {
        return None;
    }
    let x_coefs = sub
        .edges
        .iter()
        .filter(|&&e| reach[inst.edges[e].u] != reach[inst.edges[e].v])
        .map(|&e| (e, -1.0))
        .collect();
    let cut = BendersCut {
        pair: sub.pair,
        z_coef: 1.0,
        x_coefs,
        family: CutFamily::CutSet,
    };
    keep_if_violated(cut, x, z)
}

pub fn separate_family(
    family: Family,
    inst: &Instance,
    sub: &OdSubgraph,
    core: Option<&CorePoint>,
    x: &[f64],
    z: f64,
) -> Result<Option<BendersCut>, LpError> {
    match family {
        Family::Trd => separate_trd(inst, sub, x, z),
        Family::Norm1 => separate_norm1(inst, sub, x, z),
        Family::Norm2 => separate_norm2(inst, sub, x, z),
        Family::Norm3 => separate_norm3(inst, sub, x, z),
        Family::Cw => {
            let core = core.ok_or_else(|| LpError::InvalidProblem("core-point separation needs a core point".into()))?;
            separate_cw(inst, sub, core, x, z)
        }
    }
}

/// Cut-set check on the built edges, then the subproblem family.
pub fn separate_cutset_first(
    family: Family,
    inst: &Instance,
    sub: &OdSubgraph,
    core: Option<&CorePoint>,
    x: &[f64],
    z: f64,
) -> Result<Option<BendersCut>, LpError> {
    match separate_cutset(inst, sub, x, z) {
        Some(cut) => Ok(Some(cut)),
        None => separate_family(family, inst, sub, core, x, z),
    }
}

/// `z_w <= sum x_e` over the subgraph edges not built in an integer point.
pub(crate) fn no_good_cut(sub: &OdSubgraph, x: &[f64]) -> BendersCut {
    BendersCut {
        pair: sub.pair,
        z_coef: 1.0,
        x_coefs: sub.edges.iter().filter(|&&e| x[e] < 0.5).map(|&e| (e, -1.0)).collect(),
        family: CutFamily::NoGood,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, Node, OdPair, ProblemKind};
    use crate::preprocess::{build_od_subgraph, mc_core_point, Preprocessed};
    use crate::testdata::ex1;

    /// Path 1-2-3 with unit edges and one pair (1, 3) of utility 2.
    fn path3() -> Instance {
        let nodes = (0..3).map(|k| Node { id: k + 1, cost: 1.0, x: k as f64, y: 0.0 }).collect();
        let edges = vec![
            Edge { u: 0, v: 1, cost: 1.0, length: 1.0 },
            Edge { u: 1, v: 2, cost: 1.0, length: 1.0 },
        ];
        let pairs = vec![OdPair { s: 0, t: 2, demand: 1.0, utility: 2.0 }];
        Instance::new(nodes, edges, pairs, Some(10.0), Some(0.5)).unwrap()
    }

    #[test]
    fn norm1_ray_on_a_broken_path() {
        let inst = path3();
        let sub = build_od_subgraph(&inst, 0);
        let x = [1.0, 0.0];
        let cut = separate_norm1(&inst, &sub, &x, 1.0).unwrap().unwrap();
        assert_eq!(cut.family, CutFamily::Norm1Ray);
        assert!((cut.violation(&x, 1.0) - 1.0).abs() < 1e-9);
        // z <= x_23 after normalisation.
        assert!((cut.z_coef - 1.0).abs() < 1e-9);
        let coef = |e: usize| cut.x_coefs.iter().find(|c| c.0 == e).map_or(0.0, |c| c.1);
        assert_eq!(coef(0), 0.0);
        assert!((coef(1) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn every_family_separates_the_broken_path_and_accepts_the_full_one() {
        let inst = path3();
        let pre = Preprocessed::new(&inst, ProblemKind::Mc).unwrap();
        let core = mc_core_point(&inst, &pre);
        let sub = &pre.subgraphs[0];
        for fam in Family::ALL {
            let cut = separate_family(fam, &inst, sub, Some(&core), &[1.0, 0.0], 1.0).unwrap();
            assert!(cut.is_some(), "{fam:?}");
            let none = separate_family(fam, &inst, sub, Some(&core), &[1.0, 1.0], 1.0).unwrap();
            assert!(none.is_none(), "{fam:?}");
        }
    }

    #[test]
    fn fractional_point_needs_full_capacity() {
        let inst = path3();
        let sub = build_od_subgraph(&inst, 0);
        let cut = separate_norm1(&inst, &sub, &[1.0, 0.5], 1.0).unwrap().unwrap();
        assert!(cut.violation(&[1.0, 0.5], 1.0) > 0.4);
        assert!(separate_norm1(&inst, &sub, &[0.5, 0.5], 0.5).unwrap().is_none());
    }

    #[test]
    fn cutset_on_ex1() {
        let inst = ex1().with_budget(45.0);
        let sub = build_od_subgraph(&inst, 0);
        let e12 = inst.edge_between(0, 1).unwrap();
        let e24 = inst.edge_between(1, 3).unwrap();
        let mut x = vec![0.0; 4];
        x[e12] = 1.0;
        let cut = separate_cutset(&inst, &sub, &x, 1.0).unwrap();
        assert_eq!(cut.z_coef, 1.0);
        assert_eq!(cut.x_coefs, vec![(e24, -1.0)]);
        x[e24] = 1.0;
        assert!(separate_cutset(&inst, &sub, &x, 1.0).is_none());
    }

    #[test]
    fn cw_at_the_core_point_is_silent() {
        let inst = ex1().with_budget(45.0);
        let pre = Preprocessed::new(&inst, ProblemKind::Mc).unwrap();
        let core = mc_core_point(&inst, &pre);
        for &w in pre.survivors() {
            let cut = separate_cw(&inst, &pre.subgraphs[w], &core, &core.x, core.z[w]).unwrap();
            assert!(cut.is_none());
        }
    }

    #[test]
    fn no_good_lists_unbuilt_edges() {
        let inst = ex1().with_budget(45.0);
        let sub = build_od_subgraph(&inst, 0);
        let mut x = vec![0.0; 4];
        x[inst.edge_between(0, 1).unwrap()] = 1.0;
        let cut = no_good_cut(&sub, &x);
        assert_eq!(cut.x_coefs.len(), sub.edges.len() - 1);
    }
}
