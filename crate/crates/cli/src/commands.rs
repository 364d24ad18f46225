//! Subcommand implementations.

use clap::{Args, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use triad_core::dynamics::{
    integrate_kuramoto, integrate_sl, integrate_sl_feedback, FeedbackConfig, RhoTarget, SimConfig,
    Trajectory,
};
use triad_core::graphs::{
    build_complete, triad_frequencies, NetworkSpec, TriadEmbedding, WeightDistribution,
};
use triad_core::harness::{
    run_plan, write_aggregate_csv, write_rows_csv, Axes, ExperimentPlan, PlanKind,
    PLAN_FORMAT_VERSION,
};
use triad_core::io::{GraphFile, TriadSidecar};
use triad_core::metrics::{
    coherence_complete, coherence_triad, embedded_energy, unembedded_energy, winding_number,
    xy_energy,
};
use triad_core::optimizer::{basin_hopping, brute_force_oracle, BasinHoppingConfig};
use triad_core::{seed, Error};

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or flag combinations (exit 2).
    Usage(String),
    /// Bad input files or file contents (exit 3).
    Validation(String),
    /// A simulation diverged (exit 4).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Validation(msg) | CliError::Runtime(msg) => {
                write!(f, "{msg}")
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

fn usage<T>(e: Error) -> Result<T, CliError> {
    Err(CliError::Usage(e.to_string()))
}

// --- graph ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    /// Uniform weights on [lo, hi).
    Uniform,
    /// Constant ferromagnetic weight j.
    Fm,
    /// Normal weights with the given mean and std.
    Normal,
}

#[derive(Args)]
pub struct GraphArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: usize,
    /// Weight distribution.
    #[arg(long, value_enum)]
    pub dist: DistKind,
    /// Lower bound for --dist uniform.
    #[arg(long, default_value_t = -1.0)]
    pub lo: f64,
    /// Upper bound for --dist uniform.
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    /// Weight for --dist fm.
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Mean for --dist normal.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// Standard deviation for --dist normal.
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output graph file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_graph(args: GraphArgs) -> CliResult {
    let dist = match args.dist {
        DistKind::Uniform => WeightDistribution::UniformInterval(args.lo, args.hi),
        DistKind::Fm => WeightDistribution::ConstantFM(args.j),
        DistKind::Normal => WeightDistribution::NormalMeanStd(args.mean, args.std),
    };
    let net = match build_complete(args.n, dist, args.seed) {
        Ok(net) => net,
        Err(e) => return usage(e),
    };
    let gf = GraphFile::from_network(&net);
    gf.save(&args.out)?;
    println!(
        "wrote {}: vertices={} edges={}",
        args.out.display(),
        gf.n,
        gf.edges.len()
    );
    Ok(())
}

// --- embed ------------------------------------------------------------------

#[derive(Args)]
pub struct EmbedArgs {
    /// Input complete-graph file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Intra-chain coupling strength.
    #[arg(long)]
    pub jc: f64,
    /// Loop each chain with an extra edge.
    #[arg(long, default_value_t = false)]
    pub looped: bool,
    /// Output triad graph file; the sidecar lands at `<out>.sidecar.json`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sidecar_path(graph_path: &Path) -> PathBuf {
    let mut name = graph_path.as_os_str().to_os_string();
    name.push(".sidecar.json");
    PathBuf::from(name)
}

pub fn run_embed(args: EmbedArgs) -> CliResult {
    if !(args.jc > 0.0) {
        return Err(CliError::Usage(format!(
            "--jc must be positive, got {}",
            args.jc
        )));
    }
    let gf = GraphFile::load(&args.input)?;
    let missing = gf.missing_pairs();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!(
            "input graph is not complete; missing pairs: {missing:?}"
        )));
    }
    let net = gf.to_network()?;
    let emb = triad_core::graphs::embed_triad(&net, args.jc, args.looped)?;
    let triad_net = emb
        .to_network(ndarray::Array1::zeros(emb.n_triad_vertices()))
        .expect("triad matrix is square");
    let out_gf = GraphFile::from_network(&triad_net);
    out_gf.save(&args.out)?;
    let sc = TriadSidecar::from_embedding(&emb);
    let sc_path = sidecar_path(&args.out);
    sc.save(&sc_path)?;
    println!(
        "wrote {}: vertices={} edges={} (inter={}, intra={}); sidecar {}",
        args.out.display(),
        out_gf.n,
        out_gf.edges.len(),
        emb.inter_edge_of().len(),
        emb.intra_edges().len(),
        sc_path.display()
    );
    Ok(())
}

// --- simulate ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Sl,
    SlFeedback,
    Kuramoto,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Input graph file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Triad sidecar; defaults to `<in>.sidecar.json` when that file exists.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Sl)]
    pub model: ModelKind,
    /// Draw frequencies from Normal(0, sigma) instead of the file's OMEGA.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Feedback pump rate (sl-feedback only).
    #[arg(long, default_value_t = 0.04)]
    pub epsilon: f64,
    /// Feedback target amplitude: `running-max` or a positive number.
    #[arg(long, default_value = "running-max")]
    pub rho_target: String,
    /// Integration horizon; default 50 / min(1, smallest nonzero |weight|).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional trajectory CSV dump.
    #[arg(long)]
    pub traj_out: Option<PathBuf>,
    /// Metrics JSON destination; stdout when omitted.
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Pretty-print the metrics JSON.
    #[arg(long, default_value_t = false)]
    pub pretty: bool,
}

#[derive(Serialize)]
struct MetricsOut {
    format_version: u32,
    model: String,
    n_oscillators: usize,
    reached_steady: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    steady_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_complete: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_inter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_intra: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_xy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_unemb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_emb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<i64>,
}

fn default_t_end(net: &NetworkSpec) -> f64 {
    let min_w = net
        .edges()
        .iter()
        .map(|&(_, _, w)| w.abs())
        .fold(f64::INFINITY, f64::min);
    if min_w.is_finite() && min_w > 0.0 {
        50.0 / min_w.min(1.0)
    } else {
        50.0
    }
}

pub fn run_simulate(args: SimulateArgs) -> CliResult {
    let gf = GraphFile::load(&args.input)?;
    let mut net = gf.to_network()?;

    if let Some(sigma) = args.sigma {
        if sigma < 0.0 {
            return Err(CliError::Usage(format!(
                "--sigma must be non-negative, got {sigma}"
            )));
        }
        let omega = triad_frequencies(
            net.n_vertices(),
            sigma,
            seed::derive(args.seed, &[seed::STREAM_FREQUENCIES]),
        )?;
        net = net.with_frequencies(omega)?;
    }

    let sidecar = match &args.sidecar {
        Some(path) => Some(TriadSidecar::load(path)?),
        None => {
            let fallback = sidecar_path(&args.input);
            if fallback.exists() {
                Some(TriadSidecar::load(&fallback)?)
            } else {
                None
            }
        }
    };
    let embedding: Option<TriadEmbedding> = match sidecar {
        Some(sc) => Some(sc.into_embedding(net.couplings().clone())?),
        None => None,
    };

    let cfg = SimConfig {
        t_end: args.t_end.unwrap_or_else(|| default_t_end(&net)),
        record_stride: 10,
        ..SimConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let ic_seed = seed::derive(args.seed, &[seed::STREAM_INIT]);
    let traj: Trajectory = match args.model {
        ModelKind::Sl => integrate_sl(&net, &cfg, ic_seed)?,
        ModelKind::SlFeedback => {
            let rho_target = if args.rho_target == "running-max" {
                RhoTarget::RunningMax
            } else {
                match args.rho_target.parse::<f64>() {
                    Ok(v) if v > 0.0 => RhoTarget::Fixed(v),
                    _ => {
                        return Err(CliError::Usage(format!(
                            "--rho-target must be `running-max` or a positive number, got `{}`",
                            args.rho_target
                        )))
                    }
                }
            };
            let fb = FeedbackConfig {
                epsilon: args.epsilon,
                rho_target,
            };
            fb.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            integrate_sl_feedback(&net, &cfg, &fb, ic_seed)?
        }
        ModelKind::Kuramoto => integrate_kuramoto(&net, &cfg, ic_seed)?,
    };

    if let Some(path) = &args.traj_out {
        let mut w = BufWriter::new(File::create(path).map_err(Error::Io)?);
        traj.write_csv(&mut w).map_err(Error::Io)?;
    }

    let phases = traj.final_phases();
    let mut out = MetricsOut {
        format_version: 1,
        model: format!("{:?}", args.model).to_lowercase(),
        n_oscillators: net.n_vertices(),
        reached_steady: traj.reached_steady,
        steady_time: traj.steady_index.map(|k| traj.times[k]),
        r_complete: None,
        r_inter: None,
        r_intra: None,
        h_xy: None,
        h_unemb: None,
        h_emb: None,
        ell: None,
    };
    match &embedding {
        Some(emb) => {
            let rep = coherence_triad(emb, &phases)?;
            let source = emb.recover_source();
            out.r_inter = Some(rep.r_inter);
            out.r_intra = Some(rep.r_intra);
            out.h_unemb = Some(unembedded_energy(emb, &source, &phases));
            out.h_emb = Some(embedded_energy(emb, &source, &phases));
        }
        None => {
            out.r_complete = Some(coherence_complete(&phases)?);
            out.h_xy = Some(xy_energy(&net, &phases));
            if net.is_cycle_ordered() {
                out.ell = Some(winding_number(&phases)?.ell);
            }
        }
    }

    write_json(&out, args.metrics_out.as_deref(), args.pretty)
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>, pretty: bool) -> CliResult {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("metrics serialization cannot fail");
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(Error::Io)?);
            writeln!(w, "{text}").map_err(Error::Io)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

// --- optimize ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptMethod {
    Bh,
    Brute,
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Input graph file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = OptMethod::Bh)]
    pub method: OptMethod,
    /// Basin-hopping iterations.
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Grid points per angle for the brute-force scan.
    #[arg(long, default_value_t = 48)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = false)]
    pub pretty: bool,
}

#[derive(Serialize)]
struct OptimizeOut {
    format_version: u32,
    method: String,
    energy: f64,
    phases: Vec<f64>,
    iterations_used: usize,
    local_minima_found: usize,
}

pub fn run_optimize(args: OptimizeArgs) -> CliResult {
    let gf = GraphFile::load(&args.input)?;
    let net = gf.to_network()?;
    let result = match args.method {
        OptMethod::Bh => {
            let cfg = BasinHoppingConfig {
                iterations: args.iters,
                seed: args.seed,
                ..Default::default()
            };
            basin_hopping(&net, &cfg)?
        }
        OptMethod::Brute => brute_force_oracle(&net, args.grid)?,
    };
    let out = OptimizeOut {
        format_version: 1,
        method: format!("{:?}", args.method).to_lowercase(),
        energy: result.energy,
        phases: result.phases,
        iterations_used: result.iterations_used,
        local_minima_found: result.local_minima_found,
    };
    write_json(&out, args.out.as_deref(), args.pretty)
}

// --- sweep --------------------------------------------------------------------

#[derive(Args)]
pub struct SweepArgs {
    /// Plan JSON file.
    #[arg(long)]
    pub plan: PathBuf,
}

pub fn run_sweep(args: SweepArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.plan).map_err(Error::Io)?;
    let plan = ExperimentPlan::from_json(&text)?;
    let output_path = plan.output_path.clone().ok_or_else(|| {
        CliError::Validation("plan must set output_path when run from the CLI".into())
    })?;
    let result = run_plan(&plan)?;

    let rows_path = format!("{output_path}.csv");
    let agg_path = format!("{output_path}.agg.csv");
    if let Some(parent) = Path::new(&rows_path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(Error::Io)?;
        }
    }
    let mut rows_w = BufWriter::new(File::create(&rows_path).map_err(Error::Io)?);
    write_rows_csv(&plan, &result.rows, &mut rows_w).map_err(Error::Io)?;
    let mut agg_w = BufWriter::new(File::create(&agg_path).map_err(Error::Io)?);
    write_aggregate_csv(&plan, &result.aggregate, &mut agg_w).map_err(Error::Io)?;

    let failed: usize = result.rows.iter().filter(|r| r.failed).count();
    println!(
        "wrote {} rows to {rows_path} ({failed} failed), aggregate to {agg_path}",
        result.rows.len()
    );
    Ok(())
}

// --- twisted ------------------------------------------------------------------

#[derive(Args)]
pub struct TwistedArgs {
    /// Ring size.
    #[arg(long)]
    pub n: usize,
    /// Nearest neighbors coupled on each side.
    #[arg(long, default_value_t = 1)]
    pub neighbors: usize,
    /// Number of random realizations.
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram CSV destination.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_twisted(args: TwistedArgs) -> CliResult {
    let spec = triad_core::graphs::RingSpec {
        n_vertices: args.n,
        neighbor_count: args.neighbors,
        coupling: 1.0,
    };
    if let Err(e) = spec.validate() {
        return usage(e);
    }
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let plan = ExperimentPlan {
        format_version: PLAN_FORMAT_VERSION,
        kind: PlanKind::TwistedCensus,
        axes: Axes {
            n: Some(vec![args.n]),
            neighbor_count: Some(vec![args.neighbors]),
            ..Default::default()
        },
        realizations: args.runs,
        master_seed: args.seed,
        sim: SimConfig {
            t_end: 200.0,
            record_stride: 100,
            ..SimConfig::default()
        },
        output_path: None,
    };
    let result = run_plan(&plan)?;
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    for row in result.rows.iter().filter(|r| !r.failed) {
        *histogram.entry(row.metrics["ell"] as i64).or_insert(0) += 1;
    }
    let mut w = BufWriter::new(File::create(&args.out).map_err(Error::Io)?);
    writeln!(w, "ell,count").map_err(Error::Io)?;
    for (ell, count) in &histogram {
        writeln!(w, "{ell},{count}").map_err(Error::Io)?;
    }
    println!(
        "wrote {} winding classes over {} runs to {}",
        histogram.len(),
        args.runs,
        args.out.display()
    );
    Ok(())
}
