//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when a numbered assumption is violated,
//! 1 for usage, I/O, and parse failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lapi::bounds::{gd_error_bound, ls_error_bound};
use lapi::features::{delta2_estimate, Delta2, Delta2Mode, FeatureProjector};
use lapi::gen::{generate_chain, generate_garnet};
use lapi::mdp::optimal_value;
use lapi_cli::error::{CliError, Result};
use lapi_cli::experiment::run_experiment;
use lapi_cli::format::{fmt_real, load_mdp, mdp_to_string};
use lapi_cli::spec::{
    build_feature_source, parse_anchor_source, parse_feature_source, resolve_anchors,
    ExperimentSpec,
};

#[derive(Parser)]
#[command(
    name = "lapi",
    version,
    about = "Approximate policy iteration with lookahead and linear value-function approximation",
    disable_help_subcommand = true
)]
struct Cli {
    /// Seed override (gen, delta2, run).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override (run).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Experiment config file (run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an MDP file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Compute the optimal value and policy of an MDP exactly.
    Solve {
        /// MDP file.
        #[arg(long)]
        mdp: PathBuf,
        /// Sup-norm tolerance on the optimal value.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run an experiment from a config file.
    Run {
        /// Experiment config file (alternative to --config).
        config: Option<PathBuf>,
        /// Parallel repetitions.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate the closed-form error bounds.
    Bound {
        /// Projection-error constant; alternatively derive it via --mdp.
        #[arg(long)]
        delta2: Option<f64>,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Discount factor (defaults to the MDP file's).
        #[arg(long)]
        alpha: Option<f64>,
        /// Lookahead depth H >= 2.
        #[arg(long)]
        lookahead: usize,
    },
    /// Report the projection-error constant for an MDP and feature choice.
    Delta2 {
        #[command(flatten)]
        instance: InstanceArgs,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Random sparse MDP.
    Garnet {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        branching: usize,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        /// Half-width of the symmetric cost noise.
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Write here instead of stdout.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Deterministic chain with closed-form values.
    Chain {
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

/// An (MDP file, feature choice, anchor choice, delta2 mode) bundle shared by
/// `bound` and `delta2`.
#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// `identity`, `groups:G`, or `file:PATH`.
    #[arg(long, default_value = "identity")]
    features: String,
    /// `all`, `per-group`, or `list:i,j,...`.
    #[arg(long, default_value = "all")]
    anchors: String,
    /// `enumerate` or `sample:N`.
    #[arg(long, default_value = "enumerate")]
    mode: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit with its own code; the documented mapping says
            // usage errors are exit 1
            let _ = err.print();
            std::process::exit(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { kind } => {
            let seed = cli.seed.unwrap_or(0);
            let (mdp, file) = match kind {
                GenKind::Garnet {
                    states,
                    actions,
                    branching,
                    alpha,
                    rho,
                    file,
                } => (
                    generate_garnet(states, actions, branching, seed, alpha, rho)?,
                    file,
                ),
                GenKind::Chain {
                    states,
                    alpha,
                    file,
                } => (generate_chain(states, alpha)?, file),
            };
            let text = mdp_to_string(&mdp);
            match file {
                Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(path, e))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Cmd::Solve { mdp, tol, file } => {
            let model = load_mdp(&mdp)?;
            let (values, policy) = optimal_value(&model, tol)?;
            let mut csv = String::from("state,optimal_value,action\n");
            for i in 0..model.num_states() {
                csv.push_str(&format!(
                    "{i},{},{}\n",
                    fmt_real(values[i]),
                    policy.action(i)
                ));
            }
            match file {
                Some(path) => std::fs::write(&path, csv).map_err(|e| CliError::io(path, e))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Cmd::Run { config, jobs } => {
            let path = config.or(cli.config).ok_or_else(|| {
                CliError::Usage(
                    "run needs a config file: `lapi run <CONFIG>` or `--config <CONFIG>`".into(),
                )
            })?;
            let mut spec = ExperimentSpec::from_file(&path)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            if let Some(out) = cli.out {
                spec.out = out;
            }
            let outcome = run_experiment(&spec, jobs)?;
            println!(
                "delta2 = {} ({})",
                fmt_real(outcome.delta2.value),
                if outcome.delta2.exact {
                    "exact"
                } else {
                    "lower bound"
                }
            );
            for (seed, report) in &outcome.reports {
                match report {
                    Some(r) => println!(
                        "seed {seed}: tail_error = {} ls_bound = {} gd_bound = {} satisfied = {}/{}",
                        fmt_real(r.empirical_tail_error),
                        fmt_real(r.ls_bound),
                        fmt_real(r.gd_bound),
                        r.ls_satisfied,
                        r.gd_satisfied
                    ),
                    None => println!("seed {seed}: bounds undefined at lookahead_h = 1"),
                }
            }
            println!("wrote {}", outcome.out_dir.join("summary.csv").display());
            Ok(())
        }
        Cmd::Bound {
            delta2,
            instance,
            alpha,
            lookahead,
        } => {
            let (d2, alpha) = match (delta2, &instance.mdp) {
                (Some(value), None) => {
                    // the negated form also rejects NaN
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(value >= 0.0) {
                        return Err(CliError::Usage(format!(
                            "delta2 must be nonnegative, got {value}"
                        )));
                    }
                    let alpha = alpha.ok_or_else(|| {
                        CliError::Usage("--alpha is required with --delta2".into())
                    })?;
                    (Delta2 { value, exact: true }, alpha)
                }
                (None, Some(_)) => {
                    let (d2, model_alpha) = instance_delta2(&instance, cli.seed.unwrap_or(0))?;
                    (d2, alpha.unwrap_or(model_alpha))
                }
                _ => {
                    return Err(CliError::Usage(
                        "bound needs exactly one of --delta2 or --mdp".into(),
                    ))
                }
            };
            println!(
                "delta2 = {} ({})",
                fmt_real(d2.value),
                if d2.exact { "exact" } else { "lower bound" }
            );
            println!(
                "ls_bound = {}",
                fmt_real(ls_error_bound(d2.value, alpha, lookahead)?)
            );
            println!(
                "gd_bound = {}",
                fmt_real(gd_error_bound(d2.value, alpha, lookahead)?)
            );
            Ok(())
        }
        Cmd::Delta2 { instance } => {
            if instance.mdp.is_none() {
                return Err(CliError::Usage("delta2 needs --mdp".into()));
            }
            let (d2, alpha) = instance_delta2(&instance, cli.seed.unwrap_or(0))?;
            println!("delta2 = {}", fmt_real(d2.value));
            println!("exact = {}", d2.exact);
            println!("alpha = {}", fmt_real(alpha));
            Ok(())
        }
    }
}

/// Builds the projector described by `instance` and estimates delta2.
fn instance_delta2(instance: &InstanceArgs, seed: u64) -> Result<(Delta2, f64)> {
    let path = instance
        .mdp
        .as_ref()
        .ok_or_else(|| CliError::Usage("an MDP file is required".into()))?;
    let mdp = load_mdp(path)?;
    let features = parse_feature_source(&instance.features).map_err(CliError::Usage)?;
    let anchors = parse_anchor_source(&instance.anchors).map_err(CliError::Usage)?;
    let phi = build_feature_source(&features, mdp.num_states())?;
    let anchors = resolve_anchors(&anchors, &features, mdp.num_states())?;
    let fp = FeatureProjector::new(phi, anchors)?;
    let mode = parse_delta2_mode(&instance.mode, seed)?;
    let d2 = delta2_estimate(&mdp, &fp, mode)?;
    Ok((d2, mdp.discount()))
}

fn parse_delta2_mode(mode: &str, seed: u64) -> Result<Delta2Mode<'static>> {
    match mode {
        "enumerate" => Ok(Delta2Mode::Enumerate),
        other => match other.split_once(':') {
            Some(("sample", n)) => {
                let count: usize = n
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad sample count `{n}`")))?;
                Ok(Delta2Mode::Sample { count, seed })
            }
            _ => Err(CliError::Usage(format!(
                "expected mode `enumerate` or `sample:N`, got `{other}`"
            ))),
        },
    }
}
