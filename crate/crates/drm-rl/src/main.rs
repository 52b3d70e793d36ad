//! `drmrl`: plan, run, and inspect risk-sensitive tabular RL experiments.

use clap::{Parser, Subcommand};
use drm_rl::harness::{
    parse_inline_instance, parse_risk_spec, run_all_suites, run_experiment, write_csv,
    ExperimentConfig, HarnessError, InstanceSpec,
};
use drm_rl::mdp::validate_mdp;
use drm_rl::planning::{compute_gaps, drm_value_iteration};
use drm_rl::TabularMdp;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "drmrl",
    version,
    about = "Risk-sensitive episodic tabular RL: exact planning, optimistic learners, regret experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print optimal values, action values, and suboptimality gaps.
    Plan {
        /// Snapshot file path, or a generator spec such as
        /// `experiment:actions=5,horizon=5` (anything containing `:`).
        instance: String,
        /// Stage risk schedule, e.g. `mean`, `cvar, alpha = 0.05`, or
        /// `cvar, alpha = [0.09, 0.08, 0.07, 0.05]`.
        #[arg(long)]
        risk: String,
    },
    /// Execute an experiment config and write the regret CSV.
    Run {
        /// Path to an INI-style experiment config.
        config: PathBuf,
        /// Override the seed list, comma separated (e.g. `0,1,2`).
        #[arg(long)]
        seeds: Option<String>,
        /// Override the output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the confidence parameter.
        #[arg(long)]
        delta: Option<f64>,
        /// Force optimistic value clipping on.
        #[arg(long, conflicts_with = "no_clip")]
        clip: bool,
        /// Force optimistic value clipping off.
        #[arg(long)]
        no_clip: bool,
    },
    /// Generate a benchmark instance and write its snapshot.
    GenInstance {
        /// Generator spec, e.g. `tree:actions=2,depth=3,horizon=9,p_good=0.6,eps=0.1`
        /// or `gap:core_states=2,actions=3,horizon=9,gaps=[0,0.25,0.5]`.
        spec: String,
        /// Output path; defaults to `<kind>.mdp`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in self-check suites.
    Verify,
}

/// Die quietly like other line-oriented tools when the output pipe closes
/// early, instead of panicking on the next print.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Plan { instance, risk } => cmd_plan(&instance, &risk),
        Command::Run {
            config,
            seeds,
            out,
            delta,
            clip,
            no_clip,
        } => cmd_run(&config, seeds.as_deref(), out, delta, clip, no_clip),
        Command::GenInstance { spec, out } => cmd_gen_instance(&spec, out),
        Command::Verify => Ok(cmd_verify()),
    }
}

fn load_instance(spec: &str) -> Result<TabularMdp, HarnessError> {
    let instance = if spec.contains(':') {
        parse_inline_instance(spec)?
    } else {
        InstanceSpec::File {
            path: PathBuf::from(spec),
        }
    };
    instance.build()
}

fn cmd_plan(instance: &str, risk: &str) -> Result<ExitCode, HarnessError> {
    let mdp = load_instance(instance)?;
    let risks = parse_risk_spec(risk, mdp.horizon() - 1)?;
    let tables = drm_value_iteration(&mdp, &risks)?;
    let gaps = compute_gaps(&tables)?;

    println!(
        "instance: {} states, {} actions, horizon {}",
        mdp.num_states(),
        mdp.num_actions(),
        mdp.horizon()
    );
    let schedule: Vec<String> = risks.stages().iter().map(|m| m.to_string()).collect();
    println!("risk schedule: [{}]", schedule.join(", "));
    for h in 0..mdp.horizon() {
        println!("stage {}", h + 1);
        println!(
            "  V* = [{}]",
            join_row((0..mdp.num_states()).map(|s| tables.v[[h, s]]))
        );
        println!(
            "  greedy action = [{}]",
            (0..mdp.num_states())
                .map(|s| (tables.greedy.action(h, s) + 1).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
        for s in 0..mdp.num_states() {
            println!(
                "  state {}: Q* = [{}]",
                s + 1,
                join_row((0..mdp.num_actions()).map(|a| tables.q[[h, s, a]]))
            );
        }
    }
    match gaps.min_positive {
        Some(gap) => println!("minimum positive suboptimality gap: {gap}"),
        None => println!("minimum positive suboptimality gap: none (every action is optimal)"),
    }
    Ok(ExitCode::SUCCESS)
}

fn join_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn cmd_run(
    config_path: &PathBuf,
    seeds: Option<&str>,
    out: Option<PathBuf>,
    delta: Option<f64>,
    clip: bool,
    no_clip: bool,
) -> Result<ExitCode, HarnessError> {
    let text = std::fs::read_to_string(config_path)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(list) = seeds {
        cfg.seeds = parse_seed_list(list)?;
    }
    if let Some(path) = out {
        cfg.out = Some(path);
    }
    if let Some(d) = delta {
        cfg.delta = d;
    }
    if clip {
        cfg.clip_values = true;
    }
    if no_clip {
        cfg.clip_values = false;
    }
    cfg.validate()?;

    let outcome = run_experiment(&cfg)?;
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("regret.csv"));
    let mut file = std::fs::File::create(&path)?;
    write_csv(&mut file, &outcome.curves)?;
    for summary in &outcome.summaries {
        println!("{summary}");
    }
    println!(
        "wrote {} curves to {}",
        outcome.curves.len(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_seed_list(list: &str) -> Result<Vec<u64>, HarnessError> {
    let trimmed = list.trim();
    let inner = trimmed
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(trimmed);
    inner
        .split(',')
        .map(|t| {
            t.trim().parse::<u64>().map_err(|_| HarnessError::Config {
                reason: format!("seed `{}` is not a nonnegative integer", t.trim()),
            })
        })
        .collect()
}

fn cmd_gen_instance(spec: &str, out: Option<PathBuf>) -> Result<ExitCode, HarnessError> {
    let instance = parse_inline_instance(spec)?;
    let mdp = instance.build()?;
    let violations = validate_mdp(&mdp);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invariant violation: {v}");
        }
        return Err(HarnessError::Config {
            reason: format!(
                "generated instance failed validation ({} issues)",
                violations.len()
            ),
        });
    }
    let kind = spec.split(':').next().unwrap_or("instance").trim();
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{kind}.mdp")));
    std::fs::write(&path, mdp.to_text())?;
    println!(
        "wrote {} states, {} actions, horizon {} to {}",
        mdp.num_states(),
        mdp.num_actions(),
        mdp.horizon(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify() -> ExitCode {
    let mut failed = false;
    for report in run_all_suites() {
        match &report.result {
            Ok(()) => println!("{}: PASS", report.name),
            Err(reason) => {
                failed = true;
                println!("{}: FAIL ({reason})", report.name);
            }
        }
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
