use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use covnet_lp::{mip_solve, set_incumbent_start, Callbacks, LpError, MipOptions, MipResult, MipStatus, Row, Verdict};

use super::formulation::{build_direct_model, build_master, Formulation, VarMap};
use super::separation::{no_good_cut, separate_cutset, separate_family, BendersCut, CutFamily, Family, SEPARATION_TOL};
use crate::heuristics::{initial_solution_mc, initial_solution_pc};
use crate::model::{
    evaluate_solution, gap_pct, lp_gap_pct, DesignSolution, Instance, ProblemKind, SolveReport, SolveStatus,
    LENGTH_TOL,
};
use crate::preprocess::{extract_path_flow, mc_core_point, pc_dimension, CorePoint, Preprocessed};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct(Formulation),
    Benders(Family),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Direct(Formulation::Strong) => "direct_strong",
            Method::Direct(Formulation::Weak) => "direct_weak",
            Method::Benders(f) => f.name(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub method: Method,
    /// Seed the master with origin and destination cut-set rows.
    pub cutset_init: bool,
    /// Start from the greedy design.
    pub initial_solution: bool,
    /// Separate fractional root points with the subproblem family.
    pub root_node_cuts: bool,
    /// Try a cut-set cut before the subproblem on integer points.
    pub cutset_first: bool,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Keep every emitted cut in the output.
    pub record_cuts: bool,
}

impl SolveOptions {
    pub fn new(method: Method) -> Self {
        SolveOptions {
            method,
            cutset_init: false,
            initial_solution: false,
            root_node_cuts: false,
            cutset_first: false,
            time_limit: None,
            node_limit: None,
            record_cuts: false,
        }
    }

    /// Every enhancement switched on.
    pub fn enhanced(method: Method) -> Self {
        SolveOptions {
            cutset_init: true,
            initial_solution: true,
            root_node_cuts: true,
            cutset_first: true,
            ..SolveOptions::new(method)
        }
    }

    /// Short tag of the enabled enhancements, e.g. `cs+is`. The direct
    /// model only uses the starting design, so the other flags are left out.
    pub fn features(&self) -> String {
        let cuts = matches!(self.method, Method::Benders(_));
        let tags: Vec<&str> = [
            (cuts && self.cutset_init, "cs"),
            (self.initial_solution, "is"),
            (cuts && self.root_node_cuts, "rnc"),
            (cuts && self.cutset_first, "csf"),
        ]
        .iter()
        .filter(|t| t.0)
        .map(|t| t.1)
        .collect();
        if tags.is_empty() {
            "none".into()
        } else {
            tags.join("+")
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub solution: Option<DesignSolution>,
    pub report: SolveReport,
    pub cuts: Vec<BendersCut>,
}

pub fn solve(inst: &Instance, kind: ProblemKind, opts: &SolveOptions) -> Result<SolveOutput, Error> {
    match opts.method {
        Method::Direct(f) => solve_direct(inst, kind, f, opts),
        Method::Benders(_) => solve_branch_and_benders(inst, kind, opts),
    }
}

fn infeasible_output(start: Instant) -> SolveOutput {
    SolveOutput {
        solution: None,
        report: SolveReport {
            status: SolveStatus::Infeasible,
            objective: None,
            best_bound: None,
            gap_pct: None,
            lp_relaxation_value: None,
            lp_gap_pct: None,
            cuts_by_family: BTreeMap::new(),
            node_count: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        cuts: Vec::new(),
    }
}

/// Preprocess, mapping a provably uncoverable demand floor to `None`.
fn preprocess(inst: &Instance, kind: ProblemKind) -> Result<Option<Preprocessed>, Error> {
    inst.require(kind)?;
    match Preprocessed::new(inst, kind) {
        Ok(pre) => Ok(Some(pre)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn mip_options(opts: &SolveOptions, start: Instant) -> MipOptions {
    MipOptions {
        time_limit: opts.time_limit.map(|t| t.saturating_sub(start.elapsed())),
        node_limit: opts.node_limit,
    }
}

fn start_vector(inst: &Instance, kind: ProblemKind, pre: &Preprocessed, vars: &VarMap, n_cols: usize) -> Vec<f64> {
    let sol = match kind {
        ProblemKind::Mc => initial_solution_mc(inst, pre),
        ProblemKind::Pc => initial_solution_pc(inst, pre),
    };
    let mut v = vec![0.0; n_cols];
    for e in 0..inst.edges.len() {
        v[vars.x(e)] = f64::from(u8::from(sol.x[e]));
    }
    for i in 0..inst.nodes.len() {
        v[vars.y(i)] = f64::from(u8::from(sol.y[i]));
    }
    for w in 0..inst.pairs.len() {
        if let Some(c) = vars.z(w) {
            v[c] = f64::from(u8::from(sol.z[w]));
        }
    }
    v
}

fn design_of(inst: &Instance, vars: &VarMap, v: &[f64]) -> DesignSolution {
    let z = vars.z_values(v);
    DesignSolution {
        x: (0..inst.edges.len()).map(|e| v[vars.x(e)] > 0.5).collect(),
        y: (0..inst.nodes.len()).map(|i| v[vars.y(i)] > 0.5).collect(),
        z: z.iter().map(|&z| z > 0.5).collect(),
        paths: None,
    }
}

/// Read a master solution through its edges: nodes are the endpoints of
/// built edges (plus any fixed at one), pairs are those the built edges
/// cover. Never costlier nor covering less than the master's own values.
fn design_from_edges(inst: &Instance, pre: &Preprocessed, vars: &VarMap, v: &[f64]) -> DesignSolution {
    let mut sol = DesignSolution::empty(inst);
    for i in 0..inst.nodes.len() {
        sol.y[i] = v[vars.y(i)] > 1.0 - 1e-6;
    }
    for e in 0..inst.edges.len() {
        if v[vars.x(e)] > 0.5 {
            sol.build_edge(inst, e);
        }
    }
    for &w in pre.survivors() {
        let p = &inst.pairs[w];
        sol.z[w] = pre.subgraphs[w].shortest_path(inst, &|e| sol.x[e]).dist[p.t] <= p.utility + LENGTH_TOL;
    }
    sol
}

/// Attach a path to every covered pair, by flow decomposition when flows
/// are given and otherwise by a shortest path over built subgraph edges.
fn attach_paths(
    inst: &Instance,
    pre: &Preprocessed,
    sol: &mut DesignSolution,
    flows: Option<&dyn Fn(usize) -> Vec<f64>>,
) -> Result<(), Error> {
    let mut paths = vec![None; inst.pairs.len()];
    for w in 0..inst.pairs.len() {
        if !sol.z[w] {
            continue;
        }
        let sub = &pre.subgraphs[w];
        let flow = match flows {
            Some(f) => f(w),
            None => {
                let sp = sub.shortest_path(inst, &|e| sol.x[e]);
                let t = inst.pairs[w].t;
                let nodes = sp
                    .path_to(inst, t)
                    .ok_or_else(|| Error::Flow(format!("covered pair {w} has no built path")))?;
                let mut flow = vec![0.0; sub.arcs.len()];
                for step in nodes.windows(2) {
                    let a = sub
                        .arcs
                        .iter()
                        .position(|a| a.from == step[0] && a.to == step[1])
                        .ok_or_else(|| Error::Flow(format!("path of pair {w} leaves its subgraph")))?;
                    flow[a] = 1.0;
                }
                flow
            }
        };
        let path = extract_path_flow(inst, sub, &flow, 1.0)?;
        paths[w] = Some(path.nodes);
    }
    sol.paths = Some(paths);
    Ok(())
}

fn report_from(
    res: &MipResult,
    cuts_by_family: BTreeMap<String, usize>,
    start: Instant,
) -> SolveReport {
    let status = match res.status {
        MipStatus::Optimal => SolveStatus::Optimal,
        MipStatus::TimeLimit => SolveStatus::TimeLimit,
        MipStatus::Infeasible => SolveStatus::Infeasible,
    };
    let best_bound = match res.status {
        MipStatus::Infeasible => None,
        _ => Some(res.best_bound),
    };
    let lp_gap = match (res.status, res.root_lp_value, res.objective) {
        (MipStatus::Optimal, Some(lp), Some(ip)) => lp_gap_pct(lp, ip),
        _ => None,
    };
    SolveReport {
        status,
        objective: res.objective,
        best_bound,
        gap_pct: res.objective.zip(best_bound).map(|(o, b)| gap_pct(o, b)),
        lp_relaxation_value: res.root_lp_value,
        lp_gap_pct: lp_gap,
        cuts_by_family,
        node_count: res.node_count,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// The design's objective, or an error when it fails evaluation.
fn check_incumbent(inst: &Instance, kind: ProblemKind, sol: &DesignSolution) -> Result<f64, Error> {
    let ev = evaluate_solution(inst, kind, sol);
    if ev.feasible {
        Ok(ev.objective)
    } else {
        Err(Error::Lp(LpError::NumericalBreakdown(format!(
            "incumbent fails evaluation: {}",
            ev.violations.join("; ")
        ))))
    }
}

/// Solve the compact flow model.
pub fn solve_direct(
    inst: &Instance,
    kind: ProblemKind,
    variant: Formulation,
    opts: &SolveOptions,
) -> Result<SolveOutput, Error> {
    let start = Instant::now();
    let Some(pre) = preprocess(inst, kind)? else {
        return Ok(infeasible_output(start));
    };
    let mut model = build_direct_model(inst, kind, &pre, variant);
    if opts.initial_solution {
        // Greedy pairs route their flow along the witness paths.
        let mut v = start_vector(inst, kind, &pre, &model.vars, model.mip.lp.num_vars());
        for &w in pre.survivors() {
            if v[model.vars.z(w).unwrap()] > 0.5 {
                let path = pre.path(w).unwrap();
                let sub = &pre.subgraphs[w];
                for step in path.nodes.windows(2) {
                    if let Some(a) = sub.arcs.iter().position(|a| a.from == step[0] && a.to == step[1]) {
                        v[model.flow_cols[w][a]] = 1.0;
                    }
                }
            }
        }
        set_incumbent_start(&mut model.mip, v);
    }
    let res = mip_solve(&model.mip, &mut covnet_lp::NoCallbacks, &mip_options(opts, start))?;
    let solution = match &res.incumbent {
        Some(v) => {
            let mut sol = design_of(inst, &model.vars, v);
            let flows = |w: usize| model.flow_cols[w].iter().map(|&c| v[c]).collect::<Vec<f64>>();
            attach_paths(inst, &pre, &mut sol, Some(&flows))?;
            check_incumbent(inst, kind, &sol)?;
            Some(sol)
        }
        None => None,
    };
    Ok(SolveOutput {
        solution,
        report: report_from(&res, BTreeMap::new(), start),
        cuts: Vec::new(),
    })
}

struct BendersCallbacks<'a> {
    inst: &'a Instance,
    pre: &'a Preprocessed,
    vars: &'a VarMap,
    family: Family,
    core: Option<CorePoint>,
    cutset_first: bool,
    root_cuts: bool,
    record: bool,
    cuts: Vec<BendersCut>,
    counts: BTreeMap<CutFamily, usize>,
}

impl BendersCallbacks<'_> {
    fn emit(&mut self, cut: BendersCut, rows: &mut Vec<Row>) {
        let z_col = self.vars.z(cut.pair).expect("cuts are only separated for surviving pairs");
        rows.push(cut.to_row(|e| self.vars.x(e), z_col));
        *self.counts.entry(cut.family).or_default() += 1;
        if self.record {
            self.cuts.push(cut);
        }
    }
}

impl Callbacks for BendersCallbacks<'_> {
    fn on_integer(&mut self, v: &[f64]) -> Result<Verdict, LpError> {
        let x = self.vars.x_values(v).to_vec();
        let z = self.vars.z_values(v);
        let mut rows = Vec::new();
        for &w in self.pre.survivors() {
            if z[w] <= SEPARATION_TOL {
                continue;
            }
            let sub = &self.pre.subgraphs[w];
            let p = &self.inst.pairs[w];
            let dist = sub.shortest_path(self.inst, &|e| x[e] > 0.5).dist[p.t];
            if dist <= p.utility + LENGTH_TOL {
                continue;
            }
            let mut cut = if self.cutset_first { separate_cutset(self.inst, sub, &x, z[w]) } else { None };
            if cut.is_none() {
                cut = separate_family(self.family, self.inst, sub, self.core.as_ref(), &x, z[w])?;
            }
            let cut = cut.unwrap_or_else(|| no_good_cut(sub, &x));
            self.emit(cut, &mut rows);
        }
        Ok(if rows.is_empty() { Verdict::Accept } else { Verdict::Reject(rows) })
    }

    fn on_fractional(&mut self, v: &[f64]) -> Result<Vec<Row>, LpError> {
        let x = self.vars.x_values(v).to_vec();
        let z = self.vars.z_values(v);
        let mut rows = Vec::new();
        for &w in self.pre.survivors() {
            if z[w] <= SEPARATION_TOL {
                continue;
            }
            let sub = &self.pre.subgraphs[w];
            if let Some(cut) = separate_family(self.family, self.inst, sub, self.core.as_ref(), &x, z[w])? {
                self.emit(cut, &mut rows);
            }
        }
        Ok(rows)
    }

    fn wants_fractional(&self) -> bool {
        self.root_cuts
    }
}

/// Branch-and-Benders-cut over the design master.
pub fn solve_branch_and_benders(inst: &Instance, kind: ProblemKind, opts: &SolveOptions) -> Result<SolveOutput, Error> {
    let start = Instant::now();
    let Method::Benders(family) = opts.method else {
        return Err(Error::Invalid("branch-and-Benders-cut needs a cut family".into()));
    };
    let Some(pre) = preprocess(inst, kind)? else {
        return Ok(infeasible_output(start));
    };
    let dimension = (kind == ProblemKind::Pc).then(|| pc_dimension(inst, &pre));
    let (mut master, vars) = build_master(inst, kind, &pre, opts.cutset_init, dimension.as_ref());
    if opts.initial_solution {
        let v = start_vector(inst, kind, &pre, &vars, master.lp.num_vars());
        set_incumbent_start(&mut master, v);
    }
    let core = match (family, &dimension) {
        (Family::Cw, Some(d)) => Some(d.interior.clone()),
        (Family::Cw, None) => Some(mc_core_point(inst, &pre)),
        _ => None,
    };
    let mut cb = BendersCallbacks {
        inst,
        pre: &pre,
        vars: &vars,
        family,
        core,
        cutset_first: opts.cutset_first,
        root_cuts: opts.root_node_cuts,
        record: opts.record_cuts,
        cuts: Vec::new(),
        counts: BTreeMap::new(),
    };
    let res = mip_solve(&master, &mut cb, &mip_options(opts, start))?;
    let solution = match &res.incumbent {
        Some(v) => {
            let mut sol = design_from_edges(inst, &pre, &vars, v);
            attach_paths(inst, &pre, &mut sol, None)?;
            let value = check_incumbent(inst, kind, &sol)?;
            Some((sol, value))
        }
        None => None,
    };
    let counts = cb.counts.iter().map(|(f, &n)| (f.name().to_string(), n)).collect();
    let mut report = report_from(&res, counts, start);
    if let Some((_, value)) = &solution {
        // Before optimality the design can cover more than the master's z says.
        report.objective = Some(*value);
        report.gap_pct = report.best_bound.map(|b| gap_pct(*value, b));
    }
    Ok(SolveOutput {
        solution: solution.map(|s| s.0),
        report,
        cuts: cb.cuts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::ex1;

    fn all_methods() -> Vec<Method> {
        let mut m = vec![Method::Direct(Formulation::Strong), Method::Direct(Formulation::Weak)];
        m.extend(Family::ALL.iter().map(|&f| Method::Benders(f)));
        m
    }

    #[test]
    fn ex1_mc_optimum() {
        let inst = ex1().with_budget(45.0);
        for m in all_methods() {
            for opts in [SolveOptions::new(m), SolveOptions::enhanced(m)] {
                let out = solve(&inst, ProblemKind::Mc, &opts).unwrap();
                assert_eq!(out.report.status, SolveStatus::Optimal, "{m:?}");
                assert!((out.report.objective.unwrap() - 250.0).abs() < 1e-6, "{m:?} {}", opts.features());
                assert!(evaluate_solution(&inst, ProblemKind::Mc, out.solution.as_ref().unwrap()).feasible);
            }
        }
    }

    #[test]
    fn ex1_pc_optimum() {
        let inst = ex1().with_beta(0.5);
        for m in all_methods() {
            for opts in [SolveOptions::new(m), SolveOptions::enhanced(m)] {
                let out = solve(&inst, ProblemKind::Pc, &opts).unwrap();
                assert_eq!(out.report.status, SolveStatus::Optimal);
                assert!((out.report.objective.unwrap() - 45.0).abs() < 1e-6, "{m:?} {}", opts.features());
            }
        }
    }

    #[test]
    fn ex1_small_budget_covers_nothing() {
        let inst = ex1().with_budget(20.0);
        for m in all_methods() {
            let out = solve(&inst, ProblemKind::Mc, &SolveOptions::enhanced(m)).unwrap();
            assert_eq!(out.report.objective, Some(0.0));
            assert!(out.solution.unwrap().z.iter().all(|&z| !z));
        }
    }

    #[test]
    fn recorded_cuts_match_the_counts() {
        let inst = ex1().with_budget(45.0);
        let opts = SolveOptions {
            record_cuts: true,
            ..SolveOptions::new(Method::Benders(Family::Norm1))
        };
        let out = solve(&inst, ProblemKind::Mc, &opts).unwrap();
        assert_eq!(out.cuts.len(), out.report.total_cuts());
        assert!(!out.cuts.is_empty());
    }

    #[test]
    fn feature_tags() {
        assert_eq!(SolveOptions::new(Method::Benders(Family::Trd)).features(), "none");
        assert_eq!(SolveOptions::enhanced(Method::Benders(Family::Trd)).features(), "cs+is+rnc+csf");
    }
}
