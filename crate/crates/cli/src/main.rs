//! `flexatc` command line: runs experiment grids from a TOML config, checks
//! the convergence certificates along the runs, and validates setups.

mod config;
mod error;
mod experiment;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexatc::analysis::CHECK_CONTRACTION;
use flexatc::TraceOptions;

use config::ExperimentConfig;
use error::CliError;
use experiment::{averaged_slack, build, slack_summaries, Experiment, Outcome};

#[derive(Parser)]
#[command(name = "flexatc", version, about = "Decentralized ATC simulator with communication skipping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (variant, p, seed) grid and write the trace CSV and SVG plot.
    Run(CommonArgs),
    /// Run the grid with certificate checks and report the smallest slacks.
    Check(CommonArgs),
    /// Build the network, problem and combiners without running anything.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Directory for relative output paths.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "FLEXATC_THREADS", default_value_t = 0)]
    threads: usize,
    /// Replace the configured seed list with this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

struct Context {
    cfg: ExperimentConfig,
    exp: Experiment,
    out_dir: PathBuf,
    pool: rayon::ThreadPool,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let cfg = ExperimentConfig::load(&args.config)?;
        let exp = build(&cfg, args.seed_override)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?;
        std::fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Output {
            path: args.out_dir.display().to_string(),
            source,
        })?;
        Ok(Context {
            cfg,
            exp,
            out_dir: args.out_dir.clone(),
            pool,
        })
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.out_dir.join(p)
    }

    fn write_edges(&self) -> Result<(), CliError> {
        if let Some(edges) = &self.cfg.output.edges {
            output::write_text(&self.path(edges), &self.exp.topology.to_edge_list())?;
        }
        Ok(())
    }

    fn execute(&self, certificates: bool) -> Result<Vec<Outcome>, CliError> {
        let trace = TraceOptions {
            metrics: self.cfg.output.metrics,
            certificates,
            stop_at: None,
        };
        self.pool.install(|| self.exp.execute(trace))
    }
}

fn first_violation(outcomes: &[Outcome]) -> Option<CliError> {
    outcomes.iter().find_map(|o| {
        let run = experiment::run_label(&o.spec, &o.variant);
        if let Some(v) = o.trace.violation {
            return Some(CliError::Falsified {
                run,
                check: v.check,
                k: v.k,
                slack: v.slack,
                tolerance: v.tolerance,
            });
        }
        let (lhs, bound) = o.averaged?;
        let (slack, ok) = averaged_slack(lhs, bound);
        (!ok).then(|| CliError::Falsified {
            run,
            check: flexatc::analysis::CHECK_AVERAGED,
            k: o.trace.iterations(),
            slack,
            tolerance: flexatc::analysis::SLACK_TOL * (1.0 + bound),
        })
    })
}

fn cmd_run(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    ctx.write_edges()?;
    let outcomes = ctx.execute(ctx.cfg.output.checks)?;
    output::write_trace_csv(&ctx.path(&ctx.cfg.output.csv), &outcomes)?;
    let svg = output::render_svg(&output::curves(&outcomes));
    output::write_text(&ctx.path(&ctx.cfg.output.svg), &svg)?;
    for o in &outcomes {
        println!("{}", output::summary_line(o, ctx.exp.target));
    }
    match first_violation(&outcomes) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_check(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    if ctx.exp.instance.strong_convexity() <= 0.0 {
        println!("notice: {CHECK_CONTRACTION} check skipped, the problem is not strongly convex (mu = 0)");
    }
    let outcomes = ctx.execute(true)?;
    let mut overall: Vec<(&'static str, f64, String)> = Vec::new();
    for o in &outcomes {
        let label = experiment::run_label(&o.spec, &o.variant);
        for s in slack_summaries(&o.trace) {
            println!("run {label}: {} min slack {:+.3e} at k = {}", s.check, s.min_slack, s.k);
            match overall.iter_mut().find(|(c, _, _)| *c == s.check) {
                Some(entry) if entry.1 <= s.min_slack => {}
                Some(entry) => *entry = (s.check, s.min_slack, label.clone()),
                None => overall.push((s.check, s.min_slack, label.clone())),
            }
        }
        if let Some((lhs, bound)) = o.averaged {
            let (slack, _) = averaged_slack(lhs, bound);
            println!(
                "run {label}: {} slack {slack:+.3e} (lhs {lhs:.3e}, bound {bound:.3e})",
                flexatc::analysis::CHECK_AVERAGED
            );
        }
    }
    for (check, min, label) in &overall {
        println!("overall {check}: min slack {min:+.3e} in run {label}");
    }
    output::write_checks_csv(&ctx.path(&ctx.cfg.output.checks_csv), &outcomes)?;
    match first_violation(&outcomes) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let ctx = Context::new(args)?;
    ctx.write_edges()?;
    let (text, ok) = ctx.exp.describe()?;
    print!("{text}");
    let runs = ctx.exp.grid().len();
    println!("grid: {runs} runs of {} iterations", ctx.exp.iterations);
    if !ok {
        // surfaces the first failing condition with its margin
        ctx.exp.pairs()?;
    }
    println!("config ok");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
