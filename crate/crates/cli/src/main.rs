use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use prandtl_cli::bound::blowup_bound;
use prandtl_cli::validate::{run_suite, ValidateOptions};
use prandtl_cli::{load_config, output, run};
use prandtl_core::scenarios::{by_name, NAMES};

const DEFAULT_OUT: &str = "prandtl-out";

#[derive(Parser)]
#[command(name = "prandtl", version, about = "Unsteady Prandtl boundary-layer back-flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name; overrides the config file.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` setting, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write diagnostics, snapshots and checks.
    Run(ConfigArgs),
    /// Evaluate the comparison-ODE threshold and the condition value.
    BlowupBound(ConfigArgs),
    /// Run the closed-form validation suite.
    Validate {
        /// Scale the measured wall shear by 1.1 (the suite must then fail).
        #[arg(long, hide = true)]
        inject_wall_shear_error: bool,
    },
    /// List the built-in scenarios.
    Scenarios,
}

fn out_dir(args: &ConfigArgs, configured: Option<&Path>) -> PathBuf {
    args.out.clone().or_else(|| configured.map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("PRANDTL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("PRANDTL_THREADS must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn cmd_run(args: &ConfigArgs) -> anyhow::Result<bool> {
    let config = load_config(args.config.as_deref(), args.scenario.as_deref(), &args.overrides)?;
    let dir = out_dir(args, config.out.as_deref());
    let report = run::execute(&config)?;
    output::write_run(&dir, &report).with_context(|| format!("writing {}", dir.display()))?;
    println!("scenario {} (dt = {:.6e}), output in {}", report.scenario.name, report.dt, dir.display());
    for e in report.events() {
        println!(
            "{} back-flow at t* = {:.6e}, x* = {:.6e}, wall d2u/dy2 = {:.6e}",
            e.source.as_str(),
            e.t_star,
            e.x_star,
            e.wall_curvature
        );
    }
    for c in &report.checks {
        let who = c.source.map_or("both", |s| s.as_str());
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {} ({who}): {:.6e} vs {:.6e}; {}", c.name, c.value, c.threshold, c.detail);
    }
    Ok(report.passed())
}

fn cmd_bound(args: &ConfigArgs) -> anyhow::Result<bool> {
    let config = load_config(args.config.as_deref(), args.scenario.as_deref(), &args.overrides)?;
    let report = blowup_bound(&config)?;
    let dir = out_dir(args, config.out.as_deref());
    std::fs::create_dir_all(&dir)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(dir.join("bound.json"), text)?;
    println!("{report}");
    Ok(true)
}

fn cmd_validate(inject: bool) -> bool {
    let opts = ValidateOptions { wall_shear_gain: if inject { 1.1 } else { 1.0 } };
    let results = run_suite(opts);
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {:.3e} (limit {:.1e}); {}", r.name, r.value, r.threshold, r.detail);
    }
    results.iter().all(|r| r.passed)
}

fn cmd_scenarios() -> anyhow::Result<bool> {
    for name in NAMES {
        let s = by_name(name)?;
        let d = s.defaults;
        println!(
            "{name:12} {:18} L = {}, T = {:.4e}, physical {}x{}, crocco {}x{}, dt = {:.3e}, t_end = {:.3e}",
            s.expected.as_str(),
            s.model.length(),
            s.model.horizon(),
            d.n_x,
            d.n_y,
            d.n_xi,
            d.n_eta,
            d.dt,
            d.t_end
        );
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::BlowupBound(a) => cmd_bound(a),
        Command::Validate { inject_wall_shear_error } => Ok(cmd_validate(*inject_wall_shear_error)),
        Command::Scenarios => cmd_scenarios(),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
