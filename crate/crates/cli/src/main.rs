use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use slrbf::experiment::{run_convergence, run_experiment, RawConfig};
use slrbf::geometry::{
    fibonacci_nodes, icosahedral_frequency_for, icosahedral_frequency_nodes, icosahedral_nodes,
    load_nodes, write_nodes,
};

#[derive(Parser)]
#[command(name = "slrbf", version, about = "Semi-Lagrangian RBF transport on the sphere")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run a convergence sweep over node counts.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated node counts.
        #[arg(long, value_delimiter = ',', conflicts_with = "levels")]
        sizes: Vec<usize>,
        /// Comma-separated icosahedral levels.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u32>,
    },
    /// Generate or inspect node sets.
    Nodes(NodesArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    testcase: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Time step, e.g. pi/10 or 5/80.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    tfinal: Option<String>,
    #[arg(long)]
    revolutions: Option<u32>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    nodes_file: Option<PathBuf>,
    #[arg(long)]
    patch_centers_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NodesArgs {
    #[arg(long, conflicts_with_all = ["big_n", "inspect"])]
    level: Option<u32>,
    #[arg(long = "N", conflicts_with = "inspect")]
    big_n: Option<usize>,
    /// Print statistics for an existing node file.
    #[arg(long)]
    inspect: Option<PathBuf>,
    /// Write the generated nodes here.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::new(),
        };
        let mut flags = RawConfig::new();
        let mut put = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                flags.set(k, v)?;
            }
            Ok(())
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("testcase", self.testcase.clone())?;
        put("method", self.method.clone())?;
        put("N", self.big_n.map(|v| v.to_string()))?;
        put("level", self.level.map(|v| v.to_string()))?;
        put("n", self.n.map(|v| v.to_string()))?;
        put("a", self.a.map(|v| v.to_string()))?;
        put("dt", self.dt.clone())?;
        put("tfinal", self.tfinal.clone())?;
        put("revolutions", self.revolutions.map(|v| v.to_string()))?;
        put("alpha", self.alpha.clone())?;
        put("epsilon", self.epsilon.map(|v| v.to_string()))?;
        put("checkpoint_every", self.checkpoint_every.map(|v| v.to_string()))?;
        put("nodes_file", path(&self.nodes_file))?;
        put("patch_centers_file", path(&self.patch_centers_file))?;
        put("out", path(&self.out))?;
        raw.merge(&flags);
        Ok(raw)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run(args) => {
            let cfg = args.raw()?.validate()?;
            let out = run_experiment(&cfg)?;
            let r = out.final_record();
            println!(
                "N={} steps={} rel_l2={:.6e} rel_linf={:.6e} mass_error={:.3e}",
                out.summary.nodes.count, out.summary.steps, r.rel_l2, r.rel_linf, r.mass_error
            );
            if out.summary.warnings.uncovered_departure_points > 0 {
                eprintln!(
                    "warning: {} departure points fell outside every patch",
                    out.summary.warnings.uncovered_departure_points
                );
            }
        }
        Command::Sweep { run, sizes, levels } => {
            let base = run.raw()?;
            let mut cfgs = Vec::new();
            let variants: Vec<(&str, String)> = if !sizes.is_empty() {
                sizes.iter().map(|n| ("N", n.to_string())).collect()
            } else if !levels.is_empty() {
                levels.iter().map(|l| ("level", l.to_string())).collect()
            } else {
                bail!("sweep needs --sizes or --levels");
            };
            for (key, val) in variants {
                let mut raw = base.clone();
                raw.set(key, val)?;
                let mut cfg = raw.validate()?;
                cfg.out = None;
                cfgs.push(cfg);
            }
            let summary = run_convergence(&cfgs, run.out.as_deref())?;
            println!("{:>8} {:>14} {:>14}", "N", "rel_l2", "rel_linf");
            for r in &summary.rows {
                println!("{:>8} {:>14.6e} {:>14.6e}", r.n_nodes, r.rel_l2, r.rel_linf);
            }
            match (summary.rate_l2, summary.rate_linf) {
                (Some(a), Some(b)) => println!("fitted rates: l2 {a:.3}, linf {b:.3}"),
                _ => println!("{}", summary.notice.unwrap_or_default()),
            }
        }
        Command::Nodes(args) => {
            let set = if let Some(p) = &args.inspect {
                load_nodes(p)?
            } else if let Some(l) = args.level {
                icosahedral_nodes(l)?
            } else if let Some(n) = args.big_n {
                match icosahedral_frequency_for(n) {
                    Some(k) => icosahedral_frequency_nodes(k)?,
                    None => fibonacci_nodes(n)?,
                }
            } else {
                bail!("nodes needs --level, --N or --inspect");
            };
            println!(
                "N={} mean_spacing={:.6e} duplicates={}",
                set.len(),
                set.spacing_h(),
                set.has_duplicates()
            );
            if let Some(out) = &args.out {
                write_nodes(out, &set)?;
            }
        }
    }
    Ok(())
}
