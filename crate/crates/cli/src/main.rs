use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ifem::eigsolve::EigenOptions;
use ifem::oracle::CircularProblem;
use ifem::study::{
    export_field, oracle_table, run_convergence_with, solve_level, source_convergence, StudyConfig,
};

#[derive(Parser)]
#[command(name = "ifem", version, about = "Immersed Crouzeix–Raviart FEM for interface eigenproblems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Study configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Penalty factor κ in σ = κβ.
    #[arg(long)]
    kappa: Option<f64>,
    /// Refinement levels (2^L cells per side or rings).
    #[arg(long, num_args = 1..)]
    levels: Option<Vec<u32>>,
    /// Number of eigenvalues.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; more than one also solves levels concurrently.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the eigenproblem on the finest configured level.
    Solve(Common),
    /// Run a convergence study and write a CSV report.
    Converge(Common),
    /// Print exact eigenvalues of the concentric circular problem.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Highest angular order scanned.
        #[arg(long, default_value_t = 12)]
        m_max: u32,
        /// Upper end of the eigenvalue scan.
        #[arg(long)]
        lambda_max: Option<f64>,
    },
    /// Export an eigenfunction as a VTK (or CSV) field.
    Export {
        #[command(flatten)]
        common: Common,
        /// Eigenfunction index, starting at 1.
        #[arg(long, default_value_t = 1)]
        index: usize,
        /// Write CSV instead of VTK.
        #[arg(long)]
        csv: bool,
    },
    /// Source problem with a manufactured radial solution on the disk.
    Source(Common),
}

fn load_config(c: &Common) -> Result<StudyConfig> {
    let mut cfg = match &c.config {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::default(),
    };
    if let Some(kappa) = c.kappa {
        cfg.kappa = kappa;
    }
    if let Some(levels) = &c.levels {
        cfg.levels = levels.clone();
    }
    if let Some(k) = c.k {
        cfg.k = k;
    }
    if let Some(out) = &c.out {
        cfg.out = Some(out.clone());
    }
    cfg.parallel_levels = c.parallel.is_some_and(|n| n > 1);
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &StudyConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<()> {
    let threads = match &cli.command {
        Command::Solve(c) | Command::Converge(c) | Command::Source(c) => c.parallel,
        Command::Oracle { common, .. } | Command::Export { common, .. } => common.parallel,
    };
    if let Some(n) = threads {
        if n == 0 {
            bail!("--parallel needs at least one worker");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let opts = EigenOptions::default();

    match cli.command {
        Command::Solve(c) => {
            let cfg = load_config(&c)?;
            let level = *cfg.levels.last().expect("validated");
            let start = Instant::now();
            let s = solve_level(&cfg, level, cfg.k, &opts)?;
            let sum = s.summary();
            println!(
                "level {}  h = {:.4e}  dof = {}  interface elements = {}  ({:.2?})",
                sum.level,
                sum.h,
                sum.n_dofs,
                sum.n_interface_elements,
                start.elapsed()
            );
            for (i, (l, r)) in s.solution.eigenvalues.iter().zip(&s.solution.residuals).enumerate() {
                println!("{:>4} {:>20.10} {:>12.3e}", i + 1, l, r);
            }
        }
        Command::Converge(c) => {
            let cfg = load_config(&c)?;
            let report = run_convergence_with(&cfg, &opts)?;
            print!("{}", report.to_table());
            for i in 0..report.reference.len() {
                println!("slope {:>3}: {:.3}", i + 1, report.slope(i));
            }
            let path = out_dir(&cfg)?.join("report.csv");
            std::fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            println!("report written to {}", path.display());
        }
        Command::Oracle { common, m_max, lambda_max } => {
            let cfg = load_config(&common)?;
            let mut prob = cfg.circular_problem()?;
            prob.m_max = m_max;
            prob.lambda_max = lambda_max;
            print!("{}", oracle_table(&prob, cfg.k)?);
        }
        Command::Export { common, index, csv } => {
            let cfg = load_config(&common)?;
            if index == 0 || index > cfg.k {
                bail!("--index must lie in 1..={}", cfg.k);
            }
            let level = *cfg.levels.last().expect("validated");
            let s = solve_level(&cfg, level, cfg.k, &opts)?;
            let u = s.eigenfunction(index - 1);
            let name = format!("mode_{index}_level_{level}.{}", if csv { "csv" } else { "vtk" });
            let path = out_dir(&cfg)?.join(name);
            let n = export_field(&s.space, &u, &path)?;
            println!(
                "λ_{index} = {:.10}; wrote {n} vertices to {}",
                s.solution.eigenvalues[index - 1],
                path.display()
            );
        }
        Command::Source(c) => {
            let cfg = load_config(&c)?;
            let prob: CircularProblem = cfg.circular_problem()?;
            let rows = source_convergence(&prob, &cfg.levels, cfg.kappa)?;
            println!("{:>5} {:>12} {:>9} {:>12} {:>12} {:>12} {:>12}", "level", "h", "dof", "L2", "1J", "I_h L2", "I_h H1");
            for r in &rows {
                println!(
                    "{:>5} {:>12.4e} {:>9} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                    r.level,
                    r.h,
                    r.n_dofs,
                    r.solution.l2,
                    r.solution.one_j(),
                    r.interpolant.l2,
                    r.interpolant.broken_h1()
                );
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
