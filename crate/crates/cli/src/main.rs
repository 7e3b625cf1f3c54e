//! `explore` — run seeded exploration benchmarks and write result tables.
//!
//! One invocation runs `--runs` missions of one policy in one scenario
//! (builtin name or TOML file) and writes `summary.csv`,
//! `series_<run>.csv`, `timings.csv` and `report.json` into `--out`.
//! `--dump-scenario <name>` prints a builtin scenario as TOML and exits,
//! which doubles as a template for custom scenario files.

use anyhow::{bail, Context, Result};
use clap::Parser;
use explore_core::config::MissionConfig;
use explore_core::mission::run_benchmark;
use explore_core::output::{emit_outputs, write_mission_digest};
use explore_core::policy::PolicyKind;
use explore_core::world::Scenario;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "explore",
    version,
    about = "Energy-aware frontier exploration benchmark runner"
)]
struct Args {
    /// Scenario: builtin name (`simple`, `pillars`) or path to a TOML file
    #[arg(long)]
    scenario: Option<String>,

    /// Target selection policy
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,

    /// Number of seeded runs (seeds are `seed`, `seed+1`, ...)
    #[arg(long)]
    runs: Option<usize>,

    /// Base seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for result tables
    #[arg(long)]
    out: Option<PathBuf>,

    /// Optional TOML file overriding parts of the default configuration
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print a builtin scenario as TOML and exit
    #[arg(long, value_name = "NAME")]
    dump_scenario: Option<String>,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse()
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    if let Some(name) = &args.dump_scenario {
        let sc = Scenario::builtin(name)
            .with_context(|| format!("no builtin scenario named '{name}'"))?;
        print!("{}", sc.to_toml());
        return Ok(());
    }

    let (Some(scenario), Some(policy), Some(runs), Some(seed), Some(out)) =
        (&args.scenario, args.policy, args.runs, args.seed, &args.out)
    else {
        bail!(
            "--scenario, --policy, --runs, --seed and --out are required \
             (or use --dump-scenario <name>)"
        );
    };
    if runs == 0 {
        bail!("--runs must be at least 1");
    }

    let scenario = Scenario::resolve(scenario)
        .with_context(|| format!("failed to load scenario '{scenario}'"))?;
    let cfg = match &args.config {
        Some(path) => MissionConfig::from_toml_file(path)
            .with_context(|| format!("failed to load config {}", path.display()))?,
        None => MissionConfig::default(),
    };
    cfg.validate().context("invalid configuration")?;

    log::info!(
        "running {runs} x {policy} in '{}' from seed {seed}",
        scenario.name
    );
    let report = run_benchmark(&[scenario], &cfg, &[policy], runs, seed);

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for (run, mission) in report.missions.iter().enumerate() {
        write_mission_digest(&mut w, run, mission)?;
    }
    for st in &report.stats {
        writeln!(
            w,
            "{}/{}: median energy {:.3} J, median completion {:.3} s, median explored {:.4}",
            st.scenario,
            st.policy.as_str(),
            st.energy_j.median,
            st.completion_s.median,
            st.explored_fraction.median
        )?;
    }

    let written = emit_outputs(out, &report).context("failed to write outputs")?;
    writeln!(w, "wrote {} files to {}", written.len(), out.display())?;
    Ok(())
}
