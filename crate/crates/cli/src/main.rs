use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use gain_threshold::chain::is_ergodic_mdp;
use gain_threshold::checks::run_checks;
use gain_threshold::io::{parse_mdp, policy_labels, serialize_mdp, CheckEntry, PolicyRow, ReportFile};
use gain_threshold::optimality::{evaluate_all, profile_from_table};
use gain_threshold::thresholds::{
    delta_g_algorithm1, ergodic_bound, theorem1_bound, true_threshold_oracle, worst_diameter_algorithm2,
    OracleOptions,
};
use gain_threshold::{fixtures, generate, Error, MdpInstance, Settings};

const EXIT_DOMAIN: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Worker-thread bound for the parallel policy sweeps.
const THREADS_VAR: &str = "GAIN_THRESHOLD_THREADS";

/// Discount thresholds for gain optimality in finite MDPs.
#[derive(Debug, Parser)]
#[command(name = "gain-threshold", version)]
struct Cli {
    /// Relative tie tolerance for optimal-set membership.
    #[arg(long = "tie-tol", global = true, default_value_t = 1e-9)]
    tie_tol: f64,

    /// Maximum number of deterministic policies to enumerate.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: u128,

    /// Write output here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Include the per-policy evaluation table in the report.
    #[arg(long, global = true)]
    policies: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gain and bias of every policy, plus the optimal sets.
    Analyze { file: PathBuf },
    /// Upper bound(s) on the gain-optimality discount threshold.
    Bound {
        file: PathBuf,
        /// 1: exhaustive bound; 2: ergodic bound. Default: both when defined.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        theorem: Option<u8>,
    },
    /// Brute-force estimate of the threshold.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Gain gap through restricted copies of the MDP.
    Deltag { file: PathBuf },
    /// Worst diameter through absorbing copies of the MDP.
    Diameter { file: PathBuf },
    /// Run the full invariant suite; exit 2 on any failure.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Generate a seeded random instance.
    Gen {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        mixing: f64,
    },
    /// Write a built-in instance.
    Fixture {
        name: FixtureName,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        eg: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        eh: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureName {
    Figure1,
    TwoState,
}

enum Outcome {
    Success,
    Domain,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Domain) => ExitCode::from(EXIT_DOMAIN),
        Ok(Outcome::CheckFailed) => ExitCode::from(EXIT_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DOMAIN)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .with_context(|| format!("{THREADS_VAR} must be an integer >= 1, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring worker threads")
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> anyhow::Result<MdpInstance> {
    let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_mdp(&text).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let settings = Settings {
        tie_tolerance: cli.tie_tol,
        policy_cap: cli.cap,
    };
    let file = match &cli.command {
        Command::Gen {
            states,
            actions,
            seed,
            mixing,
        } => {
            let mdp = generate::generate_random_mdp(*states, *actions, *seed, *mixing)?;
            emit(cli, &serialize_mdp(&mdp))?;
            return Ok(Outcome::Success);
        }
        Command::Fixture { name, eg, eh } => {
            let mdp = match name {
                FixtureName::Figure1 => fixtures::figure1(*eg, *eh)?,
                FixtureName::TwoState => fixtures::two_state_ergodic(),
            };
            emit(cli, &serialize_mdp(&mdp))?;
            return Ok(Outcome::Success);
        }
        Command::Analyze { file }
        | Command::Bound { file, .. }
        | Command::Oracle { file, .. }
        | Command::Deltag { file }
        | Command::Diameter { file }
        | Command::Check { file, .. } => file,
    };

    let mdp = load(file)?;
    let started = Instant::now();
    let mut report = ReportFile::new(&mdp, &settings);
    let outcome = match fill_report(cli, &mdp, &settings, &mut report) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            report.error = Some(e.to_string());
            Outcome::Domain
        }
    };
    report.timing_ms = started.elapsed().as_secs_f64() * 1e3;
    emit(cli, &report.to_json())?;
    Ok(outcome)
}

fn fill_report(cli: &Cli, mdp: &MdpInstance, settings: &Settings, report: &mut ReportFile) -> Result<Outcome, Error> {
    let mut want_table = cli.policies;
    let mut outcome = Outcome::Success;
    match &cli.command {
        Command::Analyze { .. } => {
            want_table = true;
            report.ergodic = Some(is_ergodic_mdp(mdp, settings.policy_cap)?.ergodic);
        }
        Command::Bound { theorem, .. } => {
            let ergodic = is_ergodic_mdp(mdp, settings.policy_cap)?.ergodic;
            report.ergodic = Some(ergodic);
            if theorem.is_none() || *theorem == Some(1) {
                report.set_exhaustive_bound(mdp, &theorem1_bound(mdp, settings)?);
            }
            if *theorem == Some(2) || (theorem.is_none() && ergodic) {
                report.set_ergodic_bound(&ergodic_bound(mdp, settings)?);
            }
        }
        Command::Oracle { grid, tol, .. } => {
            let options = OracleOptions {
                grid_points: *grid,
                refine_tol: *tol,
            };
            report.set_exhaustive_bound(mdp, &theorem1_bound(mdp, settings)?);
            report.set_oracle(mdp, options, &true_threshold_oracle(mdp, settings, options)?);
        }
        Command::Deltag { .. } => {
            report.ergodic = Some(true);
            report.delta_g = Some(delta_g_algorithm1(mdp, settings)?);
        }
        Command::Diameter { .. } => {
            report.ergodic = Some(true);
            report.worst_diameter = Some(worst_diameter_algorithm2(mdp, settings)?);
            report.reward_span = Some(mdp.reward_span());
        }
        Command::Check { grid, tol, .. } => {
            let options = OracleOptions {
                grid_points: *grid,
                refine_tol: *tol,
            };
            let checks = run_checks(mdp, settings, options)?;
            report.ergodic = Some(checks.ergodic);
            if !checks.passed() {
                outcome = Outcome::CheckFailed;
                for failed in checks.outcomes.iter().filter(|o| !o.passed) {
                    eprintln!("check failed: {}: {}", failed.name, failed.detail);
                }
            }
            report.checks = Some(
                checks
                    .outcomes
                    .into_iter()
                    .map(|o| CheckEntry {
                        name: o.name.to_string(),
                        passed: o.passed,
                        detail: o.detail,
                    })
                    .collect(),
            );
        }
        Command::Gen { .. } | Command::Fixture { .. } => unreachable!("handled before loading"),
    }

    if want_table {
        let table = evaluate_all(mdp, settings.policy_cap)?;
        let profile = profile_from_table(&table, settings.tie_tolerance)?;
        report.g_star = Some(profile.g_star.iter().copied().collect());
        report.h_star = Some(profile.h_star.iter().copied().collect());
        report.policies = Some(
            table
                .iter()
                .map(|e| PolicyRow {
                    policy: policy_labels(mdp, &e.policy),
                    gain: e.eval.gain.iter().copied().collect(),
                    bias: e.eval.bias.iter().copied().collect(),
                    span_bias: e.eval.span_bias,
                    gain_optimal: profile.is_gain_optimal(&e.policy),
                    bias_optimal: profile.bias_optimal.contains(&e.policy),
                })
                .collect(),
        );
    }
    Ok(outcome)
}
