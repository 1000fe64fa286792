use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fracmesh::adaptive::{
    run_with, DofAbscissa, KappaMode, RunConfig, RunOutput, StopReason, Strategy, DEFAULT_WINDOW,
};
use fracmesh::fem::{FeFunction, RhsField};
use fracmesh::mesh::{Domain, MeshFile};
use fracmesh::rational::bp_coefficients;
use fracmesh::reference::{faber_krahn_lambda0, DEFAULT_MODES};

mod log_csv;

use log_csv::{LogRow, HEADER};

#[derive(Parser)]
#[command(
    name = "fracmesh",
    version,
    about = "Adaptive multimesh solver for the fractional Laplacian"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and write a run directory.
    Run(RunArgs),
    /// Print decay rates of the estimates in a log.csv.
    Rates {
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Dof count to regress against.
        #[arg(long, value_enum, default_value_t = Dofs::Union)]
        dofs: Dofs,
    },
    /// Re-export the union mesh stored for checkpoint `m` of a run.
    ExportMesh {
        dir: PathBuf,
        #[arg(long)]
        m: usize,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dofs {
    /// `union_dofs` column.
    Union,
    /// `total_dofs` column.
    Total,
}

impl From<Dofs> for DofAbscissa {
    fn from(d: Dofs) -> Self {
        match d {
            Dofs::Union => DofAbscissa::Union,
            Dofs::Total => DofAbscissa::Total,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, required_unless_present = "seed_check")]
    s: Option<f64>,
    #[arg(long, default_value = "square")]
    domain: Domain,
    /// Right-hand side: `one` or `testII`.
    #[arg(long, default_value = "one")]
    f: String,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Quadrature step, or `auto`.
    #[arg(long, default_value = "0.26")]
    kappa: KappaMode,
    #[arg(long, default_value = "multimesh")]
    mode: Strategy,
    #[arg(long, default_value_t = 60)]
    max_iter: usize,
    #[arg(long, required_unless_present = "seed_check")]
    out: Option<PathBuf>,
    /// Print the number of parametric problems for s = 0.1, ..., 0.9 and exit.
    #[arg(long)]
    seed_check: bool,
    /// Cells of the initial mesh (default depends on the domain).
    #[arg(long)]
    initial_cells: Option<usize>,
    /// Modes of the reference series on rectangles; 0 disables it.
    #[arg(long, default_value_t = DEFAULT_MODES)]
    reference_modes: usize,
    /// Stop once the union space reaches this many dofs.
    #[arg(long)]
    max_union_dofs: Option<usize>,
}

fn parse_rhs(name: &str) -> anyhow::Result<RhsField> {
    match name {
        "one" => Ok(RhsField::Constant(1.0)),
        "testII" | "testii" | "test2" => Ok(RhsField::TestII),
        _ => bail!("unknown right-hand side '{name}' (expected one or testII)"),
    }
}

fn seed_check(args: &RunArgs) -> anyhow::Result<()> {
    let kappa = match args.kappa {
        KappaMode::Fixed(k) => k,
        KappaMode::Auto => bail!("--seed-check needs a fixed --kappa"),
    };
    let lambda0 = faber_krahn_lambda0(args.domain);
    let mut out = io::stdout().lock();
    writeln!(out, "kappa = {kappa}")?;
    for i in 1..=9 {
        let s = i as f64 / 10.0;
        let scheme = bp_coefficients(s, kappa, lambda0)?;
        writeln!(out, "N({s:.1}) = {}", scheme.n())?;
    }
    Ok(())
}

fn config_from(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let s = args.s.context("--s is required")?;
    let mut cfg = RunConfig::new(s, args.domain, parse_rhs(&args.f)?);
    cfg.theta = args.theta;
    cfg.tol = args.tol;
    cfg.k = args.k;
    cfg.kappa = args.kappa;
    cfg.max_iterations = args.max_iter;
    cfg.strategy = args.mode;
    if let Some(c) = args.initial_cells {
        cfg.initial_cells = c;
    }
    cfg.max_union_dofs = args.max_union_dofs;
    cfg.reference_modes =
        (args.reference_modes > 0 && args.domain.rectangle().is_some()).then_some(args.reference_modes);
    cfg.validate()?;
    Ok(cfg)
}

fn mesh_path(dir: &Path, m: usize) -> PathBuf {
    dir.join(format!("mesh_m{m:04}.txt"))
}

fn write_echo(
    path: &Path,
    cfg: &RunConfig,
    kappa: f64,
    out: &RunOutput,
    threads: usize,
) -> anyhow::Result<()> {
    let scheme = &out.scheme;
    let mut w = BufWriter::new(File::create(path)?);
    let opt = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
    writeln!(w, "s = {}", cfg.s)?;
    writeln!(w, "domain = {}", cfg.domain)?;
    writeln!(w, "f = {}", cfg.f)?;
    writeln!(w, "theta = {}", cfg.theta)?;
    writeln!(w, "tol = {:e}", cfg.tol)?;
    writeln!(w, "k = {}", cfg.k)?;
    writeln!(w, "kappa_mode = {}", cfg.kappa)?;
    writeln!(w, "kappa = {kappa}")?;
    writeln!(w, "mode = {}", cfg.strategy)?;
    writeln!(w, "max_iter = {}", cfg.max_iterations)?;
    writeln!(w, "initial_cells = {}", cfg.initial_cells)?;
    writeln!(w, "rel_tol = {:e}", cfg.rel_tol)?;
    writeln!(w, "max_union_dofs = {}", opt(cfg.max_union_dofs))?;
    writeln!(w, "reference_modes = {}", opt(cfg.reference_modes))?;
    writeln!(w, "threads = {threads}")?;
    writeln!(w, "lambda0 = {}", scheme.lambda0())?;
    writeln!(w, "N = {}", scheme.n())?;
    writeln!(w, "m_minus = {}", scheme.m_minus())?;
    writeln!(w, "m_plus = {}", scheme.m_plus())?;
    writeln!(w, "epsilon = {:e}", scheme.epsilon())?;
    w.flush()?;
    Ok(())
}

fn write_solution(path: &Path, u: &FeFunction) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "nodes {}", u.values().len())?;
    for (p, v) in u.mesh().vertices().iter().zip(u.values()) {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p[0], p[1], v)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_run(args: &RunArgs, threads: usize) -> anyhow::Result<ExitCode> {
    if args.seed_check {
        seed_check(args)?;
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = config_from(args)?;
    let dir = args.out.as_ref().context("--out is required")?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let kappa = cfg.resolve_kappa()?;
    log::info!("s = {}, kappa = {kappa}, mode = {}", cfg.s, cfg.strategy);

    let mut mesh_error: Option<anyhow::Error> = None;
    let out = run_with(&cfg, |cp| {
        if mesh_error.is_some() {
            return;
        }
        let res = File::create(mesh_path(dir, cp.m))
            .map_err(anyhow::Error::from)
            .and_then(|f| Ok(MeshFile::from(cp.union.as_ref()).write(BufWriter::new(f))?));
        if let Err(e) = res {
            mesh_error = Some(e);
        }
    })?;
    if let Some(e) = mesh_error {
        return Err(e.context("writing checkpoint mesh"));
    }

    write_echo(&dir.join("config.echo"), &cfg, kappa, &out, threads)?;
    let mut w = BufWriter::new(File::create(dir.join("log.csv"))?);
    writeln!(w, "{HEADER}")?;
    for r in &out.records {
        writeln!(w, "{}", LogRow::from(r))?;
    }
    w.flush()?;
    write_solution(&dir.join("solution.txt"), &out.final_solution)?;

    println!("N = {}", out.scheme.n());
    println!("iterations = {}", out.records.len());
    if let Some(r) = out.last_estimate() {
        println!("m = {}", r.m);
        println!("eta_union = {:.6e}", r.eta_union.unwrap_or(f64::NAN));
        println!("union_dofs = {}", r.union_dofs.unwrap_or(0));
    }
    println!("never_refined = {:.3}", out.never_refined_fraction());
    println!("stop = {}", out.stop);
    Ok(match out.stop {
        StopReason::Tolerance => ExitCode::SUCCESS,
        _ => ExitCode::from(2),
    })
}

fn cmd_rates(path: &Path, window: usize, dofs: Dofs) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = log_csv::parse(&text)?;
    let (tri, uni) = log_csv::rates(&rows, window, dofs.into())?;
    println!("rate eta_triangle = {tri:.4}");
    println!("rate eta_union = {uni:.4}");
    Ok(())
}

fn cmd_export(dir: &Path, m: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let path = mesh_path(dir, m);
    let file =
        File::open(&path).with_context(|| format!("no mesh stored for m = {m} ({})", path.display()))?;
    let mesh = MeshFile::read(BufReader::new(file))?;
    match out {
        Some(p) => mesh.write(BufWriter::new(File::create(p)?))?,
        None => mesh.write(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let threads = rayon::current_num_threads();
    let res = match &cli.command {
        Command::Run(args) => cmd_run(args, threads),
        Command::Rates { log, window, dofs } => cmd_rates(log, *window, *dofs).map(|_| ExitCode::SUCCESS),
        Command::ExportMesh { dir, m, out } => cmd_export(dir, *m, out.as_deref()).map(|_| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
