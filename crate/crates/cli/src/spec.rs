//! Experiment configuration: the flat `key = value` config format and its
//! resolution into concrete model, feature, and run objects.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lapi::features::{
    aggregation_features, aggregation_representatives, identity_features, FeatureProjector,
};
use lapi::gen::{generate_chain, generate_garnet};
use lapi::linalg::Mat;
use lapi::rollout::default_truncation;
use lapi::{Algorithm, EtaSchedule, GdConfig, Mdp, RolloutConfig, RunConfig, Schedule};

use crate::error::{CliError, Result};
use crate::format::{load_features, load_mdp};

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MdpSource {
    File(PathBuf),
    Garnet {
        states: usize,
        actions: usize,
        branching: usize,
        seed: u64,
        alpha: f64,
        rho: f64,
    },
    Chain {
        states: usize,
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    Identity,
    Groups(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnchorSource {
    All,
    PerGroup,
    List(Vec<usize>),
}

/// One experiment: everything `run` needs, straight from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mdp: MdpSource,
    pub features: FeatureSource,
    pub anchors: AnchorSource,
    pub algorithm: Algorithm,
    pub lookahead_h: usize,
    pub iterations: usize,
    pub gamma: Schedule,
    pub eta: EtaSchedule,
    pub beta: Option<f64>,
    pub trajectories: usize,
    pub rollout_len: Option<usize>,
    pub tail_tol: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses the flat `key = value` format. Lines starting with `#` and
    /// blank lines are skipped; unknown and duplicate keys are errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| CliError::parse(path, line, msg);

        let mut mdp = None;
        let mut features = FeatureSource::Identity;
        let mut anchors = AnchorSource::All;
        let mut algorithm = None;
        let mut lookahead_h = 1usize;
        let mut iterations = None;
        let mut gamma = Schedule::harmonic(1.0, 1.0).map_err(CliError::Core)?;
        let mut eta = EtaSchedule::linear(1, 1).map_err(CliError::Core)?;
        let mut beta = None;
        let mut trajectories = 1usize;
        let mut rollout_len = None;
        let mut tail_tol = 1e-9;
        let mut seed = None;
        let mut repetitions = 1usize;
        let mut out = PathBuf::from("out");

        let mut seen = BTreeSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(perr(line_no, format!("duplicate key `{key}`")));
            }
            let bad = |msg: String| perr(line_no, msg);
            match key {
                "mdp" => mdp = Some(parse_mdp_source(value).map_err(&bad)?),
                "features" => features = parse_feature_source(value).map_err(&bad)?,
                "anchors" => anchors = parse_anchor_source(value).map_err(&bad)?,
                "algorithm" => {
                    algorithm = Some(match value {
                        "least_squares" => Algorithm::LeastSquares,
                        "gradient_descent" => Algorithm::GradientDescent,
                        other => return Err(bad(format!("unknown algorithm `{other}`"))),
                    })
                }
                "lookahead_h" => lookahead_h = parse_num(value).map_err(&bad)?,
                "iterations" => iterations = Some(parse_num(value).map_err(&bad)?),
                "gamma" => gamma = parse_gamma(value).map_err(&bad)?,
                "eta" => eta = parse_eta(value).map_err(&bad)?,
                "beta" => beta = Some(parse_num(value).map_err(&bad)?),
                "trajectories" => trajectories = parse_num(value).map_err(&bad)?,
                "rollout_len" => {
                    rollout_len = match value {
                        "auto" => None,
                        other => Some(parse_num(other).map_err(&bad)?),
                    }
                }
                "tail_tol" => tail_tol = parse_num(value).map_err(&bad)?,
                "seed" => seed = Some(parse_num(value).map_err(&bad)?),
                "repetitions" => repetitions = parse_num(value).map_err(&bad)?,
                "out" => out = PathBuf::from(value),
                other => return Err(perr(line_no, format!("unknown key `{other}`"))),
            }
        }

        let mdp = mdp.ok_or_else(|| perr(0, "missing required key `mdp`".into()))?;
        let algorithm =
            algorithm.ok_or_else(|| perr(0, "missing required key `algorithm`".into()))?;
        let iterations =
            iterations.ok_or_else(|| perr(0, "missing required key `iterations`".into()))?;
        let seed = seed.ok_or_else(|| perr(0, "missing required key `seed`".into()))?;
        if repetitions == 0 {
            return Err(perr(0, "repetitions must be at least 1".into()));
        }

        Ok(ExperimentSpec {
            mdp,
            features,
            anchors,
            algorithm,
            lookahead_h,
            iterations,
            gamma,
            eta,
            beta,
            trajectories,
            rollout_len,
            tail_tol,
            seed,
            repetitions,
            out,
        })
    }

    /// Materializes the model.
    pub fn build_mdp(&self) -> Result<Mdp> {
        build_mdp_source(&self.mdp)
    }

    /// Materializes the feature matrix and anchor set for `mdp`.
    pub fn build_projector(&self, mdp: &Mdp) -> Result<FeatureProjector> {
        let phi = build_feature_source(&self.features, mdp.num_states())?;
        let anchors = resolve_anchors(&self.anchors, &self.features, mdp.num_states())?;
        FeatureProjector::new(phi, anchors).map_err(CliError::Core)
    }

    /// The run configuration for repetition `rep`.
    pub fn build_run_config(
        &self,
        mdp: &Mdp,
        fp: &FeatureProjector,
        rep: usize,
    ) -> Result<RunConfig> {
        let truncation = match self.rollout_len {
            Some(len) => len,
            None => default_truncation(mdp.discount(), self.tail_tol).map_err(CliError::Core)?,
        };
        let rollout = RolloutConfig::new(truncation, self.trajectories).map_err(CliError::Core)?;
        let gd = match self.algorithm {
            Algorithm::LeastSquares => None,
            Algorithm::GradientDescent => {
                let beta = match self.beta {
                    Some(b) => b,
                    None => 0.5 / fp.normal_spectral_radius(),
                };
                Some(GdConfig::new(beta, self.eta).map_err(CliError::Core)?)
            }
        };
        Ok(RunConfig {
            algorithm: self.algorithm,
            lookahead_h: self.lookahead_h,
            iterations: self.iterations,
            gamma: self.gamma,
            gd,
            rollout,
            v0: None,
            seed: self.seed.wrapping_add(rep as u64),
            diagnostics: true,
        })
    }
}

pub fn parse_mdp_source(value: &str) -> std::result::Result<MdpSource, String> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| format!("expected `file:`, `garnet:` or `chain:` spec, got `{value}`"))?;
    match kind {
        "file" => Ok(MdpSource::File(PathBuf::from(rest))),
        "garnet" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if !(parts.len() == 5 || parts.len() == 6) {
                return Err(format!(
                    "garnet spec needs `garnet:S,A,B,SEED,ALPHA[,RHO]`, got `{value}`"
                ));
            }
            Ok(MdpSource::Garnet {
                states: parse_num(parts[0])?,
                actions: parse_num(parts[1])?,
                branching: parse_num(parts[2])?,
                seed: parse_num(parts[3])?,
                alpha: parse_num(parts[4])?,
                rho: if parts.len() == 6 {
                    parse_num(parts[5])?
                } else {
                    0.0
                },
            })
        }
        "chain" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(format!("chain spec needs `chain:N,ALPHA`, got `{value}`"));
            }
            Ok(MdpSource::Chain {
                states: parse_num(parts[0])?,
                alpha: parse_num(parts[1])?,
            })
        }
        other => Err(format!("unknown mdp source `{other}`")),
    }
}

pub fn parse_feature_source(value: &str) -> std::result::Result<FeatureSource, String> {
    if value == "identity" {
        return Ok(FeatureSource::Identity);
    }
    match value.split_once(':') {
        Some(("groups", g)) => Ok(FeatureSource::Groups(parse_num(g)?)),
        Some(("file", path)) => Ok(FeatureSource::File(PathBuf::from(path))),
        _ => Err(format!(
            "expected `identity`, `groups:G`, or `file:PATH`, got `{value}`"
        )),
    }
}

pub fn parse_anchor_source(value: &str) -> std::result::Result<AnchorSource, String> {
    match value {
        "all" => Ok(AnchorSource::All),
        "per-group" => Ok(AnchorSource::PerGroup),
        other => match other.split_once(':') {
            Some(("list", items)) => {
                let anchors = items
                    .split(',')
                    .map(parse_num)
                    .collect::<std::result::Result<Vec<usize>, String>>()?;
                Ok(AnchorSource::List(anchors))
            }
            _ => Err(format!(
                "expected `all`, `per-group`, or `list:i,j,...`, got `{value}`"
            )),
        },
    }
}

fn parse_gamma(value: &str) -> std::result::Result<Schedule, String> {
    match value.split_once(':') {
        Some(("harmonic", rest)) => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(format!(
                    "harmonic schedule needs `harmonic:C,K0`, got `{value}`"
                ));
            }
            Schedule::harmonic(parse_num(parts[0])?, parse_num(parts[1])?)
                .map_err(|e| e.to_string())
        }
        Some(("constant", g)) => Schedule::constant(parse_num(g)?).map_err(|e| e.to_string()),
        _ => Err(format!(
            "expected `harmonic:C,K0` or `constant:G`, got `{value}`"
        )),
    }
}

fn parse_eta(value: &str) -> std::result::Result<EtaSchedule, String> {
    match value.split_once(':') {
        Some(("linear", rest)) => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(format!("linear eta needs `linear:A,B`, got `{value}`"));
            }
            EtaSchedule::linear(parse_num(parts[0])?, parse_num(parts[1])?)
                .map_err(|e| e.to_string())
        }
        Some(("log", a)) => EtaSchedule::log(parse_num(a)?).map_err(|e| e.to_string()),
        Some(("constant", c)) => EtaSchedule::constant(parse_num(c)?).map_err(|e| e.to_string()),
        _ => Err(format!(
            "expected `linear:A,B`, `log:A`, or `constant:C`, got `{value}`"
        )),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("bad number `{s}`"))
}

pub fn build_mdp_source(source: &MdpSource) -> Result<Mdp> {
    match source {
        MdpSource::File(path) => load_mdp(path),
        MdpSource::Garnet {
            states,
            actions,
            branching,
            seed,
            alpha,
            rho,
        } => generate_garnet(*states, *actions, *branching, *seed, *alpha, *rho)
            .map_err(CliError::Core),
        MdpSource::Chain { states, alpha } => {
            generate_chain(*states, *alpha).map_err(CliError::Core)
        }
    }
}

pub fn build_feature_source(source: &FeatureSource, num_states: usize) -> Result<Mat> {
    match source {
        FeatureSource::Identity => Ok(identity_features(num_states)),
        FeatureSource::Groups(g) => aggregation_features(num_states, *g).map_err(CliError::Core),
        FeatureSource::File(path) => {
            let phi = load_features(path)?;
            if phi.rows() != num_states {
                return Err(CliError::Usage(format!(
                    "feature file covers {} states, model has {num_states}",
                    phi.rows()
                )));
            }
            Ok(phi)
        }
    }
}

pub fn resolve_anchors(
    anchors: &AnchorSource,
    features: &FeatureSource,
    num_states: usize,
) -> Result<Vec<usize>> {
    match anchors {
        AnchorSource::All => Ok((0..num_states).collect()),
        AnchorSource::PerGroup => match features {
            FeatureSource::Groups(g) => Ok(aggregation_representatives(num_states, *g)),
            _ => Err(CliError::Usage(
                "per-group anchors need `features = groups:G`".into(),
            )),
        },
        AnchorSource::List(list) => Ok(list.clone()),
    }
}
