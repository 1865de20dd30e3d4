//! Cartesian benchmark sweeps over instances, methods and feature sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Args;
use covnet_core::benders::{self, Method};
use covnet_core::model::{load_instance, ProblemKind, SolveStatus};

use crate::{method_of, options_from, FeatureFlags, FormulationArg, MethodArg, Problem};

#[derive(Args)]
pub struct BenchArgs {
    /// Instance files or directories of `.json` instances.
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mc")]
    pub problem: Vec<Problem>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "direct,trd,norm1,norm2,norm3,cw")]
    pub methods: Vec<MethodArg>,
    /// Flow models run for `direct`.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "strong")]
    pub formulation: Vec<FormulationArg>,
    /// Feature sets, e.g. `none,cs,cs+is+rnc+csf`. Tags: cs, is, rnc, csf.
    #[arg(long, value_delimiter = ',', default_value = "none", value_parser = parse_features)]
    pub features: Vec<FeatureSet>,
    /// Seconds per run.
    #[arg(long, default_value_t = 60.0, value_parser = crate::positive)]
    pub time_limit: f64,
    /// Runs solved in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSet {
    cs: bool,
    is: bool,
    rnc: bool,
    csf: bool,
}

fn parse_features(s: &str) -> Result<FeatureSet, String> {
    let mut f = FeatureSet {
        cs: false,
        is: false,
        rnc: false,
        csf: false,
    };
    if s == "none" {
        return Ok(f);
    }
    for tag in s.split('+') {
        match tag {
            "cs" => f.cs = true,
            "is" => f.is = true,
            "rnc" => f.rnc = true,
            "csf" | "cutset-first" => f.csf = true,
            "all" => {
                f = FeatureSet {
                    cs: true,
                    is: true,
                    rnc: true,
                    csf: true,
                }
            }
            other => return Err(format!("unknown feature `{other}`")),
        }
    }
    Ok(f)
}

impl FeatureSet {
    fn flags(self) -> FeatureFlags {
        FeatureFlags {
            cutset_init: self.cs,
            initial_solution: self.is,
            root_node_cuts: self.rnc,
            cutset_first: self.csf,
        }
    }
}

pub const HEADER: &str =
    "instance,problem,method,features,time_s,objective,best_bound,gap_pct,lp_gap_pct,n_cuts,n_nodes,status";

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub instance: String,
    pub problem: ProblemKind,
    pub method: String,
    pub features: String,
    pub time_s: f64,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap_pct: Option<f64>,
    pub lp_gap_pct: Option<f64>,
    pub n_cuts: usize,
    pub n_nodes: usize,
    /// `optimal`, `time_limit`, `infeasible` or `error`.
    pub status: String,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.3},{},{},{},{},{},{},{}",
            self.instance,
            self.problem.name(),
            self.method,
            self.features,
            self.time_s,
            cell(self.objective),
            cell(self.best_bound),
            cell(self.gap_pct),
            cell(self.lp_gap_pct),
            self.n_cuts,
            self.n_nodes,
            self.status
        )
    }

    fn solved(&self) -> bool {
        self.status == SolveStatus::Optimal.name()
    }
}

struct Job {
    instance: usize,
    problem: ProblemKind,
    method: Method,
    features: FeatureSet,
}

fn instance_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, String> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| format!("{}: {e}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json") && f.file_name().is_some_and(|n| n != "manifest.json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err("no instance files found".into());
    }
    Ok(files)
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run(job: &Job, id: &str, path: &Path, time_limit: f64) -> BenchRow {
    let opts = options_from(job.method, &job.features.flags(), Some(time_limit));
    let mut row = BenchRow {
        instance: id.to_string(),
        problem: job.problem,
        method: job.method.name().to_string(),
        features: opts.features(),
        time_s: 0.0,
        objective: None,
        best_bound: None,
        gap_pct: None,
        lp_gap_pct: None,
        n_cuts: 0,
        n_nodes: 0,
        status: "error".into(),
    };
    let outcome = load_instance(path).and_then(|inst| benders::solve(&inst, job.problem, &opts));
    match outcome {
        Ok(out) => {
            let r = out.report;
            row.time_s = r.wall_time_s;
            row.objective = r.objective;
            row.best_bound = r.best_bound;
            row.gap_pct = r.gap_pct;
            row.lp_gap_pct = r.lp_gap_pct;
            row.n_cuts = r.total_cuts();
            row.n_nodes = r.node_count;
            row.status = r.status.name().to_string();
        }
        Err(e) => eprintln!("{id} {} {} {}: {e}", job.problem.name(), row.method, row.features),
    }
    row
}

/// Averages per (problem, method, features) over the instances every run
/// of that problem solved to optimality.
pub fn aggregate(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let mut problems: Vec<ProblemKind> = rows.iter().map(|r| r.problem).collect();
    problems.sort();
    problems.dedup();
    for problem in problems {
        let rows: Vec<&BenchRow> = rows.iter().filter(|r| r.problem == problem).collect();
        let mut by_instance: BTreeMap<&str, bool> = BTreeMap::new();
        for r in &rows {
            *by_instance.entry(&r.instance).or_insert(true) &= r.solved();
        }
        let kept: Vec<&str> = by_instance.iter().filter(|e| *e.1).map(|e| *e.0).collect();
        let _ = writeln!(
            out,
            "# aggregate {}: {} of {} instances solved to optimality by every run",
            problem.name(),
            kept.len(),
            by_instance.len()
        );
        let _ = writeln!(out, "problem,method,features,instances,time_s,gap_pct,lp_gap_pct,n_cuts,n_nodes");
        let mut groups: Vec<(&str, &str)> = Vec::new();
        for r in &rows {
            if !groups.contains(&(&r.method, &r.features)) {
                groups.push((&r.method, &r.features));
            }
        }
        for (method, features) in groups {
            let sel: Vec<&&BenchRow> = rows
                .iter()
                .filter(|r| r.method == method && r.features == features && kept.contains(&r.instance.as_str()))
                .collect();
            let mean = |f: &dyn Fn(&BenchRow) -> Option<f64>| -> String {
                let vals: Vec<f64> = sel.iter().filter_map(|r| f(r)).collect();
                if vals.is_empty() {
                    String::new()
                } else {
                    format!("{:.3}", vals.iter().sum::<f64>() / vals.len() as f64)
                }
            };
            let _ = writeln!(
                out,
                "{},{method},{features},{},{},{},{},{},{}",
                problem.name(),
                sel.len(),
                mean(&|r| Some(r.time_s)),
                mean(&|r| r.gap_pct),
                mean(&|r| r.lp_gap_pct),
                mean(&|r| Some(r.n_cuts as f64)),
                mean(&|r| Some(r.n_nodes as f64)),
            );
        }
    }
    out
}

pub fn cmd_bench(a: &BenchArgs) -> Result<ExitCode, String> {
    let files = instance_files(&a.instances)?;
    let ids: Vec<String> = files.iter().map(|f| instance_id(f)).collect();
    let mut methods = Vec::new();
    for &m in &a.methods {
        if m == MethodArg::Direct {
            methods.extend(a.formulation.iter().map(|&f| method_of(m, f)));
        } else {
            methods.push(method_of(m, FormulationArg::Strong));
        }
    }
    let mut order: Vec<usize> = (0..files.len()).collect();
    order.sort_by(|&i, &j| ids[i].cmp(&ids[j]));
    let mut jobs = Vec::new();
    for &instance in &order {
        for &p in &a.problem {
            for &method in &methods {
                // Feature sets that differ only in flags the method ignores run once.
                let mut seen = Vec::new();
                for &features in &a.features {
                    let tag = options_from(method, &features.flags(), None).features();
                    if seen.contains(&tag) {
                        continue;
                    }
                    seen.push(tag);
                    jobs.push(Job {
                        instance,
                        problem: p.into(),
                        method,
                        features,
                    });
                }
            }
        }
    }

    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<BenchRow>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..a.jobs.max(1) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(k) else { break };
                let row = run(job, &ids[job.instance], &files[job.instance], a.time_limit);
                *results[k].lock().unwrap() = Some(row);
            });
        }
    });
    let rows: Vec<BenchRow> = results.into_iter().map(|m| m.into_inner().unwrap().expect("every job ran")).collect();

    let mut text = String::new();
    let _ = writeln!(text, "{HEADER}");
    for r in &rows {
        let _ = writeln!(text, "{}", r.to_csv());
    }
    text.push('\n');
    text.push_str(&aggregate(&rows));
    match &a.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}
