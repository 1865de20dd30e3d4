//! Best-bound branch-and-bound over binary variables with lazy constraints.
//!
//! Every integer candidate is offered to [`Callbacks::on_integer`]; rejected
//! candidates come back with cuts that are appended to the shared LP (all
//! cuts are treated as globally valid) and the node is re-solved.

use std::time::{Duration, Instant};

use crate::problem::{LpProblem, Row, Sense};
use crate::simplex::{Basis, LpOutcome, Simplex};
use crate::LpError;

const INT_TOL: f64 = 1e-6;
const PRUNE_TOL: f64 = 1e-6;
const MAX_ROOT_CUT_ROUNDS: usize = 100;
const MAX_LAZY_ROUNDS_PER_NODE: usize = 10_000;

#[derive(Clone, Debug)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub binary: Vec<bool>,
    pub start: Option<Vec<f64>>,
    /// Set by callers who know the best solution under any binary bounds
    /// has an integral objective even though continuous variables carry
    /// objective weight. Enables the same bound rounding as an all-integer
    /// objective.
    pub integral_optimum: bool,
}

impl MipProblem {
    pub fn new(lp: LpProblem) -> Self {
        let n = lp.num_vars();
        MipProblem {
            lp,
            binary: vec![false; n],
            start: None,
            integral_optimum: false,
        }
    }

    /// Add a `[0, 1]` variable flagged binary.
    pub fn add_binary(&mut self, obj: f64) -> usize {
        let j = self.lp.add_var(0.0, 1.0, obj);
        self.binary.push(true);
        j
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64, obj: f64) -> usize {
        let j = self.lp.add_var(lower, upper, obj);
        self.binary.push(false);
        j
    }

    pub fn validate(&self) -> Result<(), LpError> {
        self.lp.validate()?;
        if self.binary.len() != self.lp.num_vars() {
            return Err(LpError::InvalidProblem("binary flags do not match variable count".into()));
        }
        for (j, &b) in self.binary.iter().enumerate() {
            if b && (self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0) {
                return Err(LpError::InvalidProblem(format!("binary var {j} has bounds outside [0, 1]")));
            }
        }
        if let Some(s) = &self.start {
            if s.len() != self.lp.num_vars() {
                return Err(LpError::InvalidProblem("start assignment has wrong length".into()));
            }
        }
        Ok(())
    }
}

/// Install a starting assignment. It is checked against the rows and the
/// callbacks when the search begins.
pub fn set_incumbent_start(p: &mut MipProblem, assignment: Vec<f64>) {
    p.start = Some(assignment);
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accept,
    Reject(Vec<Row>),
}

pub trait Callbacks {
    /// Called with every integer candidate (binaries rounded to exact 0/1).
    fn on_integer(&mut self, x: &[f64]) -> Result<Verdict, LpError>;

    /// Called with fractional root solutions when [`Callbacks::wants_fractional`]
    /// is true, until it returns no cuts.
    fn on_fractional(&mut self, _x: &[f64]) -> Result<Vec<Row>, LpError> {
        Ok(Vec::new())
    }

    fn wants_fractional(&self) -> bool {
        false
    }
}

/// Accepts every candidate.
pub struct NoCallbacks;

impl Callbacks for NoCallbacks {
    fn on_integer(&mut self, _x: &[f64]) -> Result<Verdict, LpError> {
        Ok(Verdict::Accept)
    }
}

#[derive(Clone, Debug, Default)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    /// Stopped by the time or node limit.
    TimeLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartStatus {
    NotProvided,
    Accepted,
    /// Violates bounds, integrality or rows of the problem.
    Infeasible,
    /// Rejected by `on_integer`; its cuts were kept.
    RejectedByCallback,
}

#[derive(Clone, Debug)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub node_count: usize,
    pub root_lp_value: Option<f64>,
    pub start: StartStatus,
    /// Global bound after each processed node.
    pub bound_trace: Vec<f64>,
    pub cuts_added: usize,
    pub lp_iterations: usize,
}

impl MipResult {
    /// `100 |bound - objective| / max(|objective|, 1e-9)`, if an incumbent exists.
    pub fn gap_pct(&self) -> Option<f64> {
        self.objective
            .map(|obj| 100.0 * (self.best_bound - obj).abs() / obj.abs().max(1e-9))
    }
}

struct Node {
    id: usize,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

struct Search<'a, C: Callbacks> {
    p: &'a MipProblem,
    cb: &'a mut C,
    lp: Simplex,
    sense: Sense,
    integral_objective: bool,
    incumbent: Option<(Vec<f64>, f64)>,
    cuts_added: usize,
}

impl<C: Callbacks> Search<'_, C> {
    fn worst(&self) -> f64 {
        match self.sense {
            Sense::Maximize => f64::NEG_INFINITY,
            Sense::Minimize => f64::INFINITY,
        }
    }

    /// Tighten a relaxation bound when every integer solution has an
    /// integral objective value.
    fn round_bound(&self, bound: f64) -> f64 {
        if !self.integral_objective || !bound.is_finite() {
            return bound;
        }
        match self.sense {
            Sense::Maximize => (bound + PRUNE_TOL).floor(),
            Sense::Minimize => (bound - PRUNE_TOL).ceil(),
        }
    }

    /// Whether a node with relaxation value `bound` can still beat the incumbent.
    fn promising(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => true,
            Some((_, inc)) => {
                let tol = PRUNE_TOL.max(1e-9 * inc.abs());
                self.sense.better(self.round_bound(bound), *inc, tol)
            }
        }
    }

    fn add_cuts(&mut self, cuts: Vec<Row>) -> Result<(), LpError> {
        self.cuts_added += cuts.len();
        self.lp.add_rows(&cuts)
    }

    fn offer(&mut self, x: Vec<f64>) -> Result<Option<Vec<Row>>, LpError> {
        match self.cb.on_integer(&x)? {
            Verdict::Accept => {
                let obj = self.p.lp.objective_value(&x);
                let better = match &self.incumbent {
                    None => true,
                    Some((_, inc)) => self.sense.better(obj, *inc, 0.0),
                };
                if better {
                    self.incumbent = Some((x, obj));
                }
                Ok(None)
            }
            Verdict::Reject(cuts) => Ok(Some(cuts)),
        }
    }

    fn check_start(&mut self) -> Result<StartStatus, LpError> {
        let Some(start) = self.p.start.clone() else {
            return Ok(StartStatus::NotProvided);
        };
        let mut x = start;
        for (j, v) in x.iter_mut().enumerate() {
            if self.p.binary[j] {
                let r = v.round();
                if (*v - r).abs() > INT_TOL {
                    return Ok(StartStatus::Infeasible);
                }
                *v = r;
            }
        }
        if self.p.lp.max_violation(&x) > 1e-6 {
            return Ok(StartStatus::Infeasible);
        }
        match self.offer(x)? {
            None => Ok(StartStatus::Accepted),
            Some(cuts) => {
                self.add_cuts(cuts)?;
                Ok(StartStatus::RejectedByCallback)
            }
        }
    }
}

enum NodeEnd {
    Pruned,
    Branch { bound: f64, var: usize, basis: Basis },
}

pub fn mip_solve(p: &MipProblem, cb: &mut impl Callbacks, opts: &MipOptions) -> Result<MipResult, LpError> {
    p.validate()?;
    let started = Instant::now();
    let deadline = opts.time_limit.map(|d| started + d);
    let mut lp = Simplex::new(&p.lp)?;
    lp.set_deadline(deadline);

    let integral_objective = p.integral_optimum
        || (0..p.lp.num_vars()).all(|j| {
            let c = p.lp.objective[j];
            if p.binary[j] {
                c == c.round()
            } else {
                c == 0.0
            }
        });

    let mut s = Search {
        p,
        cb,
        lp,
        sense: p.lp.sense,
        integral_objective,
        incumbent: None,
        cuts_added: 0,
    };
    let start_status = s.check_start()?;

    let orig: Vec<(f64, f64)> = (0..p.lp.num_vars()).map(|j| (p.lp.lower[j], p.lp.upper[j])).collect();
    let mut open: Vec<Node> = vec![Node {
        id: 0,
        bound: match p.lp.sense {
            Sense::Maximize => f64::INFINITY,
            Sense::Minimize => f64::NEG_INFINITY,
        },
        fixings: Vec::new(),
        basis: None,
    }];
    let mut next_id = 1;
    let mut node_count = 0;
    let mut root_lp_value = None;
    let mut bound_trace = Vec::new();
    let mut stopped = false;

    while !open.is_empty() {
        let limit_hit = deadline.is_some_and(|d| Instant::now() >= d)
            || opts.node_limit.is_some_and(|l| node_count >= l);
        if limit_hit {
            stopped = true;
            break;
        }
        let k = select(&open, p.lp.sense);
        let node = open.swap_remove(k);
        if !s.promising(node.bound) {
            continue;
        }
        node_count += 1;

        for j in 0..p.lp.num_vars() {
            if p.binary[j] {
                let (lo, up) = orig[j];
                if s.lp.bounds(j) != (lo, up) {
                    s.lp.set_bounds(j, lo, up);
                }
            }
        }
        for &(j, v) in &node.fixings {
            s.lp.set_bounds(j, v, v);
        }
        if let Some(b) = &node.basis {
            s.lp.set_basis(b);
        }

        let is_root = node.id == 0;
        let end = match process_node(&mut s, is_root, &mut root_lp_value) {
            Ok(end) => end,
            Err(LpError::TimeLimit) => {
                open.push(node);
                stopped = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if let NodeEnd::Branch { bound, var, basis } = end {
            for v in [1.0, 0.0] {
                let mut fixings = node.fixings.clone();
                fixings.push((var, v));
                open.push(Node {
                    id: next_id,
                    bound,
                    fixings,
                    basis: Some(basis.clone()),
                });
                next_id += 1;
            }
        }
        bound_trace.push(global_bound(&s, &open));
    }

    let best_bound = global_bound(&s, &open);
    let status = if stopped {
        MipStatus::TimeLimit
    } else if s.incumbent.is_some() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    let lp_iterations = s.lp.iterations();
    let (incumbent, objective) = match s.incumbent {
        Some((x, v)) => (Some(x), Some(v)),
        None => (None, None),
    };
    Ok(MipResult {
        status,
        incumbent,
        objective,
        best_bound,
        node_count,
        root_lp_value,
        start: start_status,
        bound_trace,
        cuts_added: s.cuts_added,
        lp_iterations,
    })
}

fn select(open: &[Node], sense: Sense) -> usize {
    let mut best = 0;
    for (k, node) in open.iter().enumerate().skip(1) {
        let cur = &open[best];
        if sense.better(node.bound, cur.bound, 0.0) || (node.bound == cur.bound && node.id < cur.id) {
            best = k;
        }
    }
    best
}

fn global_bound<C: Callbacks>(s: &Search<'_, C>, open: &[Node]) -> f64 {
    let mut b = s.incumbent.as_ref().map_or(s.worst(), |(_, v)| *v);
    for node in open {
        if s.promising(node.bound) {
            let nb = s.round_bound(node.bound);
            if s.sense.better(nb, b, 0.0) {
                b = nb;
            }
        }
    }
    b
}

fn process_node<C: Callbacks>(
    s: &mut Search<'_, C>,
    is_root: bool,
    root_lp_value: &mut Option<f64>,
) -> Result<NodeEnd, LpError> {
    let mut first = true;
    let mut root_rounds = 0;
    let mut lazy_rounds = 0;
    loop {
        let outcome = if first && is_root { s.lp.solve()? } else { s.lp.resolve()? };
        first = false;
        let sol = match outcome {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible { .. } => return Ok(NodeEnd::Pruned),
            LpOutcome::Unbounded { .. } => {
                return Err(LpError::InvalidProblem("LP relaxation is unbounded".into()))
            }
        };
        if is_root {
            *root_lp_value = Some(sol.objective);
        }
        if !s.promising(sol.objective) {
            return Ok(NodeEnd::Pruned);
        }

        let mut branch_var = None;
        let mut best_frac = INT_TOL;
        for (j, &v) in sol.x.iter().enumerate() {
            if s.p.binary[j] {
                let f = (v - v.floor()).min(v.ceil() - v);
                if f > best_frac {
                    best_frac = f;
                    branch_var = Some(j);
                }
            }
        }

        if let Some(var) = branch_var {
            if is_root && root_rounds < MAX_ROOT_CUT_ROUNDS && s.cb.wants_fractional() {
                let cuts = s.cb.on_fractional(&sol.x)?;
                if !cuts.is_empty() {
                    root_rounds += 1;
                    s.add_cuts(cuts)?;
                    continue;
                }
            }
            return Ok(NodeEnd::Branch {
                bound: sol.objective,
                var,
                basis: s.lp.basis(),
            });
        }

        let mut x = sol.x;
        for (j, v) in x.iter_mut().enumerate() {
            if s.p.binary[j] {
                *v = v.round();
            }
        }
        match s.offer(x)? {
            None => return Ok(NodeEnd::Pruned),
            Some(cuts) => {
                if cuts.is_empty() {
                    return Err(LpError::NumericalBreakdown(
                        "integer candidate rejected without cuts".into(),
                    ));
                }
                lazy_rounds += 1;
                if lazy_rounds > MAX_LAZY_ROUNDS_PER_NODE {
                    return Err(LpError::NumericalBreakdown(
                        "lazy constraint loop did not terminate".into(),
                    ));
                }
                s.add_cuts(cuts)?;
            }
        }
    }
}
