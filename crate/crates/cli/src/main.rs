//! `covnet`: generate instances, inspect preprocessing, solve, and run
//! benchmark sweeps.

mod bench;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covnet_core::benders::{self, Family, Formulation, Method, SolveOptions};
use covnet_core::gen::{generate_instance, GenParams, Topology};
use covnet_core::model::{load_instance, Instance, ProblemKind, SolveStatus};
use covnet_core::preprocess::{mc_core_point, pc_dimension, Preprocessed};
use covnet_core::Error;

#[derive(Parser)]
#[command(name = "covnet", version, about = "Covering network design: maximal (mc) and partial (pc) coverage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random planar instances.
    Generate(GenerateArgs),
    /// Show the pair reductions and forced variables of an instance.
    Preprocess(PreprocessArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Solve every instance of a directory with several methods and print a CSV table.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Mc,
    Pc,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Mc => ProblemKind::Mc,
            Problem::Pc => ProblemKind::Pc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Trd,
    Norm1,
    Norm2,
    Norm3,
    Cw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Strong,
    Weak,
}

pub fn method_of(m: MethodArg, f: FormulationArg) -> Method {
    let formulation = match f {
        FormulationArg::Strong => Formulation::Strong,
        FormulationArg::Weak => Formulation::Weak,
    };
    match m {
        MethodArg::Direct => Method::Direct(formulation),
        MethodArg::Trd => Method::Benders(Family::Trd),
        MethodArg::Norm1 => Method::Benders(Family::Norm1),
        MethodArg::Norm2 => Method::Benders(Family::Norm2),
        MethodArg::Norm3 => Method::Benders(Family::Norm3),
        MethodArg::Cw => Method::Benders(Family::Cw),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Grid,
    Delaunay,
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not in [0, 1]"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is negative"))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    /// Seed of the first instance; further instances use the following seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0.3, value_parser = probability)]
    drop_prob: f64,
    #[arg(long, default_value_t = 0.5, value_parser = non_negative)]
    budget_fraction: f64,
    #[arg(long, default_value_t = 2.0, value_parser = positive)]
    utility_multiplier: f64,
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    pair_prob: f64,
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    beta: f64,
    #[arg(long, value_enum, default_value = "grid")]
    topology: TopologyArg,
    /// Output directory, or a `.json` file when a single instance is generated.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    problem: Problem,
    /// Per-pair reductions, forced sets and the interior point.
    #[arg(long)]
    report: bool,
}

#[derive(Args)]
pub struct FeatureFlags {
    #[arg(long)]
    pub cutset_init: bool,
    #[arg(long)]
    pub initial_solution: bool,
    #[arg(long)]
    pub root_node_cuts: bool,
    #[arg(long)]
    pub cutset_first: bool,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    problem: Problem,
    #[arg(long, value_enum, default_value = "norm1")]
    method: MethodArg,
    /// Flow model used by `--method direct`.
    #[arg(long, value_enum, default_value = "strong")]
    formulation: FormulationArg,
    #[command(flatten)]
    features: FeatureFlags,
    /// Seconds.
    #[arg(long, value_parser = positive)]
    time_limit: Option<f64>,
    /// Where to write the solution.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cli_error(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn read_instance(path: &Path) -> Result<Instance, String> {
    load_instance(path).map_err(cli_error)
}

fn cmd_generate(a: &GenerateArgs) -> Result<ExitCode, String> {
    let topology = match a.topology {
        TopologyArg::Grid => Topology::Grid,
        TopologyArg::Delaunay => Topology::Delaunay,
    };
    let single_file = a.count == 1 && a.out.extension().is_some_and(|e| e == "json");
    if !single_file {
        fs::create_dir_all(&a.out).map_err(cli_error)?;
    }
    let mut manifest = Vec::new();
    for seed in a.seed..a.seed + a.count {
        let params = GenParams {
            edge_drop_prob: a.drop_prob,
            budget_fraction: a.budget_fraction,
            utility_multiplier: a.utility_multiplier,
            pair_prob: a.pair_prob,
            beta: a.beta,
            topology,
            ..GenParams::new(a.nodes, seed)
        };
        let inst = generate_instance(&params).map_err(cli_error)?;
        let path = if single_file {
            a.out.clone()
        } else {
            a.out.join(format!("n{}_s{seed}.json", a.nodes))
        };
        fs::write(&path, inst.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("{}", path.display());
        manifest.push(serde_json::json!({
            "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "nodes": a.nodes,
            "seed": seed,
        }));
    }
    if !single_file {
        let path = a.out.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(cli_error)?;
        fs::write(&path, text).map_err(cli_error)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn node_ids(inst: &Instance, nodes: &[usize]) -> String {
    let ids: Vec<String> = nodes.iter().map(|&i| inst.nodes[i].id.to_string()).collect();
    format!("[{}]", ids.join(", "))
}

fn edge_names(inst: &Instance, edges: &[usize]) -> String {
    let names: Vec<String> = edges
        .iter()
        .map(|&e| format!("{{{},{}}}", inst.nodes[inst.edges[e].u].id, inst.nodes[inst.edges[e].v].id))
        .collect();
    format!("[{}]", names.join(", "))
}

fn pair_name(inst: &Instance, w: usize) -> String {
    let p = &inst.pairs[w];
    format!("({},{})", inst.nodes[p.s].id, inst.nodes[p.t].id)
}

fn coords(values: &[f64]) -> String {
    let v: Vec<String> = values.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", v.join(", "))
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<ExitCode, String> {
    let inst = read_instance(&a.instance)?;
    let kind = ProblemKind::from(a.problem);
    let pre = match Preprocessed::new(&inst, kind) {
        Ok(p) => p,
        Err(Error::Infeasible(msg)) => {
            println!("status: infeasible ({msg})");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut out = String::new();
    let _ = writeln!(out, "problem: {}", kind.name());
    let _ = writeln!(out, "nodes: {}  edges: {}  pairs: {}", inst.nodes.len(), inst.edges.len(), inst.pairs.len());
    let _ = writeln!(out, "surviving pairs: {}  removed: {}", pre.survivors().len(), pre.elimination.removed.len());
    if a.report {
        let _ = writeln!(out, "pair,s,t,subgraph_nodes,subgraph_edges,removed");
        for (w, sub) in pre.subgraphs.iter().enumerate() {
            let p = &inst.pairs[w];
            let _ = writeln!(
                out,
                "{w},{},{},{},{},{}",
                inst.nodes[p.s].id,
                inst.nodes[p.t].id,
                sub.nodes.len(),
                sub.edges.len(),
                pre.path(w).is_none()
            );
        }
        match kind {
            ProblemKind::Pc => {
                let rep = pc_dimension(&inst, &pre);
                let forced: Vec<String> = rep.forced_pairs.iter().map(|&w| pair_name(&inst, w)).collect();
                let _ = writeln!(out, "forced pairs: [{}]", forced.join(", "));
                let _ = writeln!(out, "forced edges: {}", edge_names(&inst, &rep.forced_edges));
                let _ = writeln!(out, "forced nodes: {}", node_ids(&inst, &rep.forced_nodes));
                let _ = writeln!(out, "dim: {}", rep.dim);
                let _ = writeln!(out, "interior x: {}", coords(&rep.interior.x));
                let _ = writeln!(out, "interior y: {}", coords(&rep.interior.y));
                let _ = writeln!(out, "interior z: {}", coords(&rep.interior.z));
            }
            ProblemKind::Mc => {
                let core = mc_core_point(&inst, &pre);
                let dim = inst.nodes.len() + inst.edges.len() + pre.survivors().len();
                let _ = writeln!(out, "forced pairs: []\nforced edges: []\nforced nodes: []");
                let _ = writeln!(out, "dim: {dim}");
                let _ = writeln!(out, "interior x: {}", coords(&core.x));
                let _ = writeln!(out, "interior y: {}", coords(&core.y));
                let _ = writeln!(out, "interior z: {}", coords(&core.z));
            }
        }
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

pub fn options_from(method: Method, f: &FeatureFlags, time_limit: Option<f64>) -> SolveOptions {
    SolveOptions {
        cutset_init: f.cutset_init,
        initial_solution: f.initial_solution,
        root_node_cuts: f.root_node_cuts,
        cutset_first: f.cutset_first,
        time_limit: time_limit.map(Duration::from_secs_f64),
        ..SolveOptions::new(method)
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x}"))
}

fn cmd_solve(a: &SolveArgs) -> Result<ExitCode, String> {
    let inst = read_instance(&a.instance)?;
    let kind = ProblemKind::from(a.problem);
    let opts = options_from(method_of(a.method, a.formulation), &a.features, a.time_limit);
    let out = benders::solve(&inst, kind, &opts).map_err(cli_error)?;
    let r = &out.report;
    println!("problem: {}", kind.name());
    println!("method: {}", opts.method.name());
    println!("features: {}", opts.features());
    println!("status: {}", r.status.name());
    println!("objective: {}", show(r.objective));
    println!("best_bound: {}", show(r.best_bound));
    println!("gap_pct: {}", show(r.gap_pct));
    println!("lp_relaxation: {}", show(r.lp_relaxation_value));
    println!("lp_gap_pct: {}", show(r.lp_gap_pct));
    let cuts: Vec<String> = r.cuts_by_family.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("cuts: {} [{}]", r.total_cuts(), cuts.join(", "));
    println!("nodes: {}", r.node_count);
    println!("time_s: {:.3}", r.wall_time_s);
    if let (Some(path), Some(sol)) = (&a.out, &out.solution) {
        let text = sol.to_json(&inst, r.objective.unwrap_or(0.0));
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        println!("solution: {}", path.display());
    }
    Ok(if r.status == SolveStatus::Infeasible {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => bench::cmd_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
