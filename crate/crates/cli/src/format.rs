//! Plain-text file formats.
//!
//! All formats are line-oriented, write reals with 17 significant digits so
//! values round-trip bit-exactly, and use a canonical field order so saving
//! the same object twice produces identical bytes.
//!
//! MDP format:
//! ```text
//! mdp <|S|> <|A|> <alpha> <rho>
//! t <i> <u> <j> <prob>     one line per nonzero transition, (i, u, j) ascending
//! c <i> <u> <cost>         one line per (state, action), (i, u) ascending
//! ```
//!
//! Feature format:
//! ```text
//! features <|S|> <d>
//! f <i> <v_1> ... <v_d>    one line per state, ascending
//! ```

use std::fmt::Write as _;
use std::path::Path;

use lapi::linalg::Mat;
use lapi::{Mdp, Policy};

use crate::error::{CliError, Result};

/// Formats a real with enough digits to round-trip exactly.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Row-sum tolerance accepted by the MDP parser. Stricter validation happens
/// at model construction after the rows are renormalized.
pub const PARSE_SUM_TOL: f64 = 1e-9;

/// FNV-1a over the action list; the trace files store this instead of full
/// policies on most iterations.
pub fn policy_hash(policy: &Policy) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &action in policy.actions() {
        for byte in (action as u64).to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Serializes a model in the canonical text format.
pub fn mdp_to_string(mdp: &Mdp) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "mdp {} {} {} {}",
        mdp.num_states(),
        mdp.num_actions(),
        fmt_real(mdp.discount()),
        fmt_real(mdp.cost_noise_halfwidth())
    )
    .unwrap();
    for i in 0..mdp.num_states() {
        for u in 0..mdp.num_actions() {
            for (j, &p) in mdp.transition_row(i, u).iter().enumerate() {
                if p != 0.0 {
                    writeln!(out, "t {i} {u} {j} {}", fmt_real(p)).unwrap();
                }
            }
        }
    }
    for i in 0..mdp.num_states() {
        for u in 0..mdp.num_actions() {
            writeln!(out, "c {i} {u} {}", fmt_real(mdp.cost(i, u))).unwrap();
        }
    }
    out
}

pub fn save_mdp(mdp: &Mdp, path: &Path) -> Result<()> {
    std::fs::write(path, mdp_to_string(mdp)).map_err(|e| CliError::io(path, e))
}

pub fn load_mdp(path: &Path) -> Result<Mdp> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_mdp(&text, path)
}

pub fn parse_mdp(text: &str, path: &Path) -> Result<Mdp> {
    let perr = |line: usize, msg: String| CliError::parse(path, line, msg);
    let mut lines = text.lines().enumerate();

    let (header_no, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "mdp" {
        return Err(perr(
            header_no + 1,
            "expected header `mdp <|S|> <|A|> <alpha> <rho>`".into(),
        ));
    }
    let num_states: usize = parse_field(fields[1], header_no, path, "state count")?;
    let num_actions: usize = parse_field(fields[2], header_no, path, "action count")?;
    let alpha: f64 = parse_field(fields[3], header_no, path, "discount")?;
    let rho: f64 = parse_field(fields[4], header_no, path, "noise half-width")?;
    if num_states == 0 || num_actions == 0 {
        return Err(perr(
            header_no + 1,
            "state and action counts must be positive".into(),
        ));
    }

    let mut transitions = vec![0.0; num_states * num_actions * num_states];
    let mut transition_seen = vec![false; num_states * num_actions * num_states];
    let mut costs = vec![f64::NAN; num_states * num_actions];

    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "t" => {
                if fields.len() != 5 {
                    return Err(perr(line_no, "expected `t <i> <u> <j> <prob>`".into()));
                }
                let i: usize = parse_field(fields[1], no, path, "state")?;
                let u: usize = parse_field(fields[2], no, path, "action")?;
                let j: usize = parse_field(fields[3], no, path, "next state")?;
                let p: f64 = parse_field(fields[4], no, path, "probability")?;
                if i >= num_states || j >= num_states || u >= num_actions {
                    return Err(perr(line_no, format!("index out of range in `{trimmed}`")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(perr(line_no, format!("probability {p} outside [0, 1]")));
                }
                let idx = (i * num_actions + u) * num_states + j;
                if transition_seen[idx] {
                    return Err(perr(line_no, format!("duplicate transition ({i},{u},{j})")));
                }
                transition_seen[idx] = true;
                transitions[idx] = p;
            }
            "c" => {
                if fields.len() != 4 {
                    return Err(perr(line_no, "expected `c <i> <u> <cost>`".into()));
                }
                let i: usize = parse_field(fields[1], no, path, "state")?;
                let u: usize = parse_field(fields[2], no, path, "action")?;
                let g: f64 = parse_field(fields[3], no, path, "cost")?;
                if i >= num_states || u >= num_actions {
                    return Err(perr(line_no, format!("index out of range in `{trimmed}`")));
                }
                if !(g >= rho && g <= 1.0 - rho) {
                    return Err(perr(
                        line_no,
                        format!("cost {g} outside [{rho}, {}]", 1.0 - rho),
                    ));
                }
                if !costs[i * num_actions + u].is_nan() {
                    return Err(perr(line_no, format!("duplicate cost for ({i},{u})")));
                }
                costs[i * num_actions + u] = g;
            }
            other => {
                return Err(perr(line_no, format!("unknown record `{other}`")));
            }
        }
    }

    for i in 0..num_states {
        for u in 0..num_actions {
            let base = (i * num_actions + u) * num_states;
            let row = &mut transitions[base..base + num_states];
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                return Err(perr(0, format!("no transitions for state {i}, action {u}")));
            }
            if (sum - 1.0).abs() > PARSE_SUM_TOL {
                return Err(perr(
                    0,
                    format!("transitions for state {i}, action {u} sum to {sum}, expected 1"),
                ));
            }
            // hand-written rows within the parse tolerance get renormalized;
            // rows that already meet the model invariant pass through untouched
            if (sum - 1.0).abs() > lapi::mdp::KERNEL_SUM_TOL {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
            if costs[i * num_actions + u].is_nan() {
                return Err(perr(0, format!("missing cost for state {i}, action {u}")));
            }
        }
    }

    Mdp::with_cost_noise(num_states, num_actions, transitions, costs, alpha, rho)
        .map_err(CliError::Core)
}

pub fn features_to_string(phi: &Mat) -> String {
    let mut out = String::new();
    writeln!(out, "features {} {}", phi.rows(), phi.cols()).unwrap();
    for i in 0..phi.rows() {
        write!(out, "f {i}").unwrap();
        for j in 0..phi.cols() {
            write!(out, " {}", fmt_real(phi.get(i, j))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_features(phi: &Mat, path: &Path) -> Result<()> {
    std::fs::write(path, features_to_string(phi)).map_err(|e| CliError::io(path, e))
}

pub fn load_features(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_features(&text, path)
}

pub fn parse_features(text: &str, path: &Path) -> Result<Mat> {
    let perr = |line: usize, msg: String| CliError::parse(path, line, msg);
    let mut lines = text.lines().enumerate();
    let (header_no, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "features" {
        return Err(perr(
            header_no + 1,
            "expected header `features <|S|> <d>`".into(),
        ));
    }
    let num_states: usize = parse_field(fields[1], header_no, path, "state count")?;
    let dim: usize = parse_field(fields[2], header_no, path, "feature dimension")?;
    if num_states == 0 || dim == 0 {
        return Err(perr(header_no + 1, "dimensions must be positive".into()));
    }

    let mut rows: Vec<Option<Vec<f64>>> = vec![None; num_states];
    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "f" || fields.len() != dim + 2 {
            return Err(perr(
                line_no,
                format!("expected `f <i>` followed by {dim} values"),
            ));
        }
        let i: usize = parse_field(fields[1], no, path, "state")?;
        if i >= num_states {
            return Err(perr(line_no, format!("state {i} out of range")));
        }
        if rows[i].is_some() {
            return Err(perr(
                line_no,
                format!("duplicate feature row for state {i}"),
            ));
        }
        let mut row = Vec::with_capacity(dim);
        for f in &fields[2..] {
            row.push(parse_field::<f64>(f, no, path, "feature value")?);
        }
        rows[i] = Some(row);
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| perr(0, format!("missing feature row for state {i}"))))
        .collect::<Result<_>>()?;
    Mat::from_rows(&rows).map_err(CliError::Core)
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    line_idx: usize,
    path: &Path,
    what: &str,
) -> Result<T> {
    field
        .parse()
        .map_err(|_| CliError::parse(path, line_idx + 1, format!("bad {what} `{field}`")))
}
