//! Experiment execution: repetitions, trace files, and the summary report.
//!
//! Each repetition runs with seed `base + rep` and writes its own
//! `run_<seed>.csv` (one row per iteration) plus `policies_<seed>.csv` (the
//! full action list every 100 iterations). After all repetitions finish, the
//! projection error `delta2` is computed (exactly when the policy space fits
//! under the enumeration cap, otherwise as an observed lower bound over the
//! policies the runs visited) and `summary.csv` compares every run's tail
//! error against the closed-form bounds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use lapi::bounds::{check_run, BoundReport};
use lapi::driver::{run, RunRecord};
use lapi::features::{delta2_estimate, Delta2, Delta2Mode, ENUMERATION_CAP};
use lapi::mdp::optimal_value;
use lapi::{FeatureProjector, Mdp, Policy};

use crate::error::{CliError, Result};
use crate::format::{fmt_real, policy_hash};
use crate::spec::ExperimentSpec;

/// Iterations between full policy snapshots in `policies_<seed>.csv`.
const POLICY_SNAPSHOT_EVERY: usize = 100;

/// Tolerance for the optimal-value oracle backing `sup_error`.
const ORACLE_TOL: f64 = 1e-10;

pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub delta2: Delta2,
    pub reports: Vec<(u64, Option<BoundReport>)>,
}

/// Runs every repetition of `spec`, writes the trace and summary files, and
/// returns the per-run bound reports (absent when the lookahead depth is 1,
/// where the bound arithmetic is undefined).
pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentOutcome> {
    let mdp = spec.build_mdp()?;
    let fp = spec.build_projector(&mdp)?;
    let (oracle, _) = optimal_value(&mdp, ORACLE_TOL).map_err(CliError::Core)?;

    std::fs::create_dir_all(&spec.out).map_err(|e| CliError::io(&spec.out, e))?;

    let run_one = |rep: usize| -> Result<(u64, RunRecord)> {
        let cfg = spec.build_run_config(&mdp, &fp, rep)?;
        let seed = cfg.seed;
        let record = run(&mdp, &fp, &cfg, Some(&oracle)).map_err(CliError::Core)?;
        write_run_csv(&record, seed, &spec.out)?;
        write_policies_csv(&record, seed, &spec.out)?;
        Ok((seed, record))
    };

    let reps: Vec<usize> = (0..spec.repetitions).collect();
    let results: Vec<Result<(u64, RunRecord)>> = match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| reps.par_iter().map(|&rep| run_one(rep)).collect())
        }
        None => reps.par_iter().map(|&rep| run_one(rep)).collect(),
    };
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }

    let delta2 = compute_delta2(&mdp, &fp, &records)?;

    let mut reports = Vec::with_capacity(records.len());
    for (seed, record) in &records {
        let report = if spec.lookahead_h >= 2 {
            Some(
                check_run(record, &delta2, mdp.discount(), spec.lookahead_h)
                    .map_err(CliError::Core)?,
            )
        } else {
            None
        };
        reports.push((*seed, report));
    }

    write_summary_csv(&records, &reports, &delta2, &spec.out)?;

    Ok(ExperimentOutcome {
        out_dir: spec.out.clone(),
        delta2,
        reports,
    })
}

/// Exact enumeration under the cap, otherwise the observed lower bound.
fn compute_delta2(
    mdp: &Mdp,
    fp: &FeatureProjector,
    records: &[(u64, RunRecord)],
) -> Result<Delta2> {
    let policy_count = (mdp.num_actions() as u128).checked_pow(mdp.num_states() as u32);
    let under_cap = matches!(policy_count, Some(c) if c <= ENUMERATION_CAP);
    if under_cap {
        return delta2_estimate(mdp, fp, Delta2Mode::Enumerate).map_err(CliError::Core);
    }
    let mut seen = std::collections::HashSet::new();
    let mut policies: Vec<Policy> = Vec::new();
    for (_, record) in records {
        for policy in record.visited_policies() {
            if seen.insert(policy.clone()) {
                policies.push(policy);
            }
        }
    }
    delta2_estimate(mdp, fp, Delta2Mode::Observed(&policies)).map_err(CliError::Core)
}

fn write_run_csv(record: &RunRecord, seed: u64, out_dir: &Path) -> Result<()> {
    let mut text = String::from("k,gamma_k,sup_error,bellman_residual,noise_sup,policy_hash\n");
    for rec in &record.iterations {
        writeln!(
            text,
            "{},{},{},{},{},{:016x}",
            rec.k,
            fmt_real(rec.gamma),
            fmt_real(rec.sup_error.unwrap_or(f64::NAN)),
            fmt_real(rec.bellman_residual),
            fmt_real(rec.noise_sup.unwrap_or(f64::NAN)),
            policy_hash(&rec.policy)
        )
        .unwrap();
    }
    let path = out_dir.join(format!("run_{seed}.csv"));
    std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

fn write_policies_csv(record: &RunRecord, seed: u64, out_dir: &Path) -> Result<()> {
    let mut text = String::from("k,actions\n");
    for rec in &record.iterations {
        if rec.k % POLICY_SNAPSHOT_EVERY == 0 {
            let actions: Vec<String> = rec.policy.actions().iter().map(|a| a.to_string()).collect();
            writeln!(text, "{},{}", rec.k, actions.join(";")).unwrap();
        }
    }
    let path = out_dir.join(format!("policies_{seed}.csv"));
    std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

fn write_summary_csv(
    records: &[(u64, RunRecord)],
    reports: &[(u64, Option<BoundReport>)],
    delta2: &Delta2,
    out_dir: &Path,
) -> Result<()> {
    let mut text = String::from(
        "seed,tail_max_sup_error,tail_stderr,delta2,delta2_exact,ls_bound,gd_bound,ls_satisfied,gd_satisfied\n",
    );
    for ((seed, record), (_, report)) in records.iter().zip(reports) {
        let tail = record
            .summary
            .tail_max_sup_error
            .map(fmt_real)
            .unwrap_or_else(|| "na".into());
        let stderr = record
            .summary
            .tail_sup_error_stderr
            .map(fmt_real)
            .unwrap_or_else(|| "na".into());
        match report {
            Some(r) => writeln!(
                text,
                "{seed},{tail},{stderr},{},{},{},{},{},{}",
                fmt_real(r.delta2),
                r.delta2_exact,
                fmt_real(r.ls_bound),
                fmt_real(r.gd_bound),
                r.ls_satisfied,
                r.gd_satisfied
            )
            .unwrap(),
            None => writeln!(
                text,
                "{seed},{tail},{stderr},{},{},na,na,na,na",
                fmt_real(delta2.value),
                delta2.exact
            )
            .unwrap(),
        }
    }
    let path = out_dir.join("summary.csv");
    std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ExperimentSpec;
    use std::path::PathBuf;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("lapi-exp-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn spec_text(out: &Path, extra: &str) -> String {
        format!(
            "mdp = garnet:5,2,2,3,0.5\nfeatures = groups:2\nanchors = per-group\n\
             algorithm = least_squares\niterations = 60\nlookahead_h = 2\nseed = 9\n\
             repetitions = 2\nout = {}\n{extra}",
            out.display()
        )
    }

    #[test]
    fn experiment_writes_expected_files() {
        let dir = temp_dir("files");
        let spec = ExperimentSpec::parse(&spec_text(&dir, ""), &PathBuf::from("<t>")).unwrap();
        let outcome = run_experiment(&spec, Some(2)).unwrap();
        assert!(outcome.delta2.exact);
        assert_eq!(outcome.reports.len(), 2);
        for seed in [9u64, 10] {
            assert!(dir.join(format!("run_{seed}.csv")).exists());
            assert!(dir.join(format!("policies_{seed}.csv")).exists());
        }
        let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3);
        assert!(summary.lines().nth(1).unwrap().starts_with("9,"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn run_csv_parses_back_to_recorded_values() {
        let dir = temp_dir("parse");
        let spec = ExperimentSpec::parse(&spec_text(&dir, ""), &PathBuf::from("<t>")).unwrap();
        let mdp = spec.build_mdp().unwrap();
        let fp = spec.build_projector(&mdp).unwrap();
        let cfg = spec.build_run_config(&mdp, &fp, 0).unwrap();
        let (oracle, _) = optimal_value(&mdp, 1e-10).unwrap();
        let record = run(&mdp, &fp, &cfg, Some(&oracle)).unwrap();
        write_run_csv(&record, cfg.seed, &dir).unwrap();

        let text = std::fs::read_to_string(dir.join(format!("run_{}.csv", cfg.seed))).unwrap();
        for (line, rec) in text.lines().skip(1).zip(&record.iterations) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0].parse::<usize>().unwrap(), rec.k);
            assert_eq!(
                fields[1].parse::<f64>().unwrap().to_bits(),
                rec.gamma.to_bits()
            );
            assert_eq!(
                fields[2].parse::<f64>().unwrap().to_bits(),
                rec.sup_error.unwrap().to_bits()
            );
            assert_eq!(
                fields[3].parse::<f64>().unwrap().to_bits(),
                rec.bellman_residual.to_bits()
            );
            assert_eq!(fields[5], format!("{:016x}", policy_hash(&rec.policy)));
        }
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn identical_seeds_identical_bytes() {
        let dir_a = temp_dir("det-a");
        let dir_b = temp_dir("det-b");
        let spec_a = ExperimentSpec::parse(&spec_text(&dir_a, ""), &PathBuf::from("<t>")).unwrap();
        let spec_b = ExperimentSpec::parse(&spec_text(&dir_b, ""), &PathBuf::from("<t>")).unwrap();
        run_experiment(&spec_a, Some(2)).unwrap();
        run_experiment(&spec_b, Some(1)).unwrap();
        for name in ["run_9.csv", "run_10.csv", "policies_9.csv", "summary.csv"] {
            let a = std::fs::read(dir_a.join(name)).unwrap();
            let b = std::fs::read(dir_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical experiments");
        }
        let _ = std::fs::remove_dir_all(&dir_a);
        let _ = std::fs::remove_dir_all(&dir_b);
    }

    #[test]
    fn lookahead_one_summary_has_no_bounds() {
        let dir = temp_dir("h1");
        let text = spec_text(&dir, "").replace("lookahead_h = 2", "lookahead_h = 1");
        let spec = ExperimentSpec::parse(&text, &PathBuf::from("<t>")).unwrap();
        let outcome = run_experiment(&spec, Some(2)).unwrap();
        assert!(outcome.reports.iter().all(|(_, r)| r.is_none()));
        let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert!(summary.lines().nth(1).unwrap().ends_with("na,na,na,na"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn zero_cost_chain_has_zero_errors() {
        let dir = temp_dir("zero");
        // single-state chain: the only cost is the self-loop at 0
        let text = format!(
            "mdp = chain:1,0.5\nalgorithm = least_squares\niterations = 20\nseed = 4\nout = {}\n",
            dir.display()
        );
        let spec = ExperimentSpec::parse(&text, &PathBuf::from("<t>")).unwrap();
        run_experiment(&spec, None).unwrap();
        let csv = std::fs::read_to_string(dir.join("run_4.csv")).unwrap();
        for line in csv.lines().skip(1) {
            let sup: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert_eq!(sup, 0.0);
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
}
