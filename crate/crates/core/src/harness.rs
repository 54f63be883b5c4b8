//! Seeded experiment runner behind the `liestab` binary.
//!
//! Every command reads a JSON config, runs one library operation and
//! renders a report. JSON reports are objects
//! `{"tool", "command", "seed", "config", "result"}`; the CSV sweep starts
//! with `#`-prefixed header lines carrying the same metadata.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fingroup::{FiniteGroup, DEFAULT_CAP};
use crate::liespace::{ad_bound, AmbientSpace};
use crate::matcore::Mat;
use crate::morphism::{
    defect, perturb, repair, standard_representation, AlmostMorphism, MorphismError, RepairOptions,
};
use crate::proximity::{hausdorff, relative_jordan, SamplerConfig, TubeSpec};
use crate::streams::{stream_rng, stream_seed};

pub const TOOL_VERSION: &str = concat!("liestab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Defect,
    Repair,
    Project,
    Jordan,
    RelJordan,
    Hausdorff,
    Adbound,
    SweepDelta,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Defect => "defect",
            Command::Repair => "repair",
            Command::Project => "project",
            Command::Jordan => "jordan",
            Command::RelJordan => "rel-jordan",
            Command::Hausdorff => "hausdorff",
            Command::Adbound => "adbound",
            Command::SweepDelta => "sweep-delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Numerical(e.to_string())
}

fn parse<T: for<'de> Deserialize<'de>>(config: &Value) -> Result<T, HarnessError> {
    serde_json::from_value(config.clone()).map_err(config_err)
}

/// Either an explicit map or a catalog representation, optionally moved
/// into another space and perturbed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapConfig {
    morphism: Option<AlmostMorphism>,
    representation: Option<String>,
    space: Option<AmbientSpace>,
    eps: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    threshold: Option<f64>,
    contraction_min: Option<f64>,
}

impl MapConfig {
    fn build(&self, seed: u64) -> Result<AlmostMorphism, HarnessError> {
        let base = match (&self.morphism, &self.representation) {
            (Some(m), None) => m.clone(),
            (None, Some(spec)) => standard_representation(spec).map_err(|e| config_err(format!("representation: {e}")))?,
            _ => return Err(config_err("exactly one of `morphism` and `representation` is required")),
        };
        let base = match &self.space {
            Some(space) => base.with_space(space.clone()).map_err(|e| config_err(format!("space: {e}")))?,
            None => base,
        };
        match self.eps {
            None => Ok(base),
            Some(eps) if eps >= 0.0 => perturb(&base, eps, &mut stream_rng(seed, "perturb", &[])).map_err(numerical),
            Some(_) => Err(config_err("eps: must be nonnegative")),
        }
    }

    fn options(&self) -> RepairOptions {
        let d = RepairOptions::default();
        RepairOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            threshold: self.threshold.unwrap_or(d.threshold),
            contraction_min: self.contraction_min.unwrap_or(d.contraction_min),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectConfig {
    tube: TubeSpec,
    matrices: Vec<Mat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JordanConfig {
    group: FiniteGroup,
    cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelJordanConfig {
    tube: TubeSpec,
    sampler: SamplerConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HausdorffConfig {
    space: AmbientSpace,
    a: Vec<Mat>,
    b: Vec<Mat>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdboundConfig {
    matrices: Vec<Mat>,
}

/// Groups used by `sweep-delta` when the config names none.
pub fn default_catalog() -> Vec<String> {
    let mut groups: Vec<String> = (2..=12).map(|n| format!("cyclic:{n}")).collect();
    groups.extend((3..=8).map(|n| format!("dihedral:{n}")));
    groups.push("quaternion8".into());
    groups.push("symmetric:3".into());
    groups.push("symmetric:4".into());
    groups
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_catalog")]
    pub groups: Vec<String>,
    #[serde(default = "default_sweep_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub repair: RepairOptions,
}

fn default_sweep_eps() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}

fn default_trials() -> usize {
    20
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { groups: default_catalog(), eps: default_sweep_eps(), trials: default_trials(), repair: RepairOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub group: String,
    pub n: usize,
    pub eps: f64,
    pub defect_in: f64,
    pub iterations: Option<usize>,
    pub defect_out: Option<f64>,
    pub moved: Option<f64>,
    pub seed: u64,
    pub status: String,
    /// Defect after every iteration, starting with the input defect.
    #[serde(skip)]
    pub history: Vec<f64>,
    /// Whether the repaired map has the same kernel as the reference.
    #[serde(skip)]
    pub kernel_preserved: Option<bool>,
}

fn status_name(e: &MorphismError) -> &'static str {
    match e {
        MorphismError::Stalled { .. } => "stalled",
        MorphismError::BranchCut(_) => "branch_cut",
        MorphismError::AboveRepairThreshold { .. } => "above_threshold",
        _ => "error",
    }
}

fn sweep_row(
    group: &str,
    rho: &AlmostMorphism,
    reference_kernel: &crate::fingroup::Subgroup,
    eps: f64,
    trial: usize,
    master: u64,
    opts: &RepairOptions,
) -> SweepRow {
    let seed = stream_seed(master, &format!("sweep-delta:{group}"), &[eps.to_bits(), trial as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = SweepRow {
        group: group.to_string(),
        n: rho.space().dim(),
        eps,
        defect_in: f64::NAN,
        iterations: None,
        defect_out: None,
        moved: None,
        seed,
        status: String::new(),
        history: Vec::new(),
        kernel_preserved: None,
    };
    let psi = match perturb(rho, eps, &mut rng) {
        Ok(p) => p,
        Err(e) => {
            row.status = status_name(&e).into();
            return row;
        }
    };
    row.defect_in = defect(&psi);
    match repair(&psi, opts) {
        Ok(report) => {
            row.iterations = Some(report.iterations);
            row.defect_out = Some(report.defect_out());
            row.moved = Some(report.moved);
            row.kernel_preserved = crate::morphism::kernel(&report.final_map, None)
                .ok()
                .map(|k| k.members == reference_kernel.members);
            row.history = report.defect_history;
            row.status = "converged".into();
        }
        Err(e) => {
            if let MorphismError::Stalled { defect_history, .. } = &e {
                row.history = defect_history.clone();
            }
            row.status = status_name(&e).into();
        }
    }
    row
}

/// Runs the sweep; rows come back ordered by (group, eps, trial) in
/// config order regardless of scheduling.
pub fn sweep_delta(cfg: &SweepConfig, master: u64) -> Result<Vec<SweepRow>, HarnessError> {
    if cfg.eps.is_empty() {
        return Err(config_err("eps: list must be nonempty"));
    }
    if cfg.trials == 0 {
        return Err(config_err("trials: must be at least 1"));
    }
    if let Some(i) = cfg.eps.iter().position(|e| !(*e >= 0.0)) {
        return Err(config_err(format!("eps[{i}]: must be nonnegative")));
    }
    let mut reps = Vec::with_capacity(cfg.groups.len());
    for (i, g) in cfg.groups.iter().enumerate() {
        let rho = standard_representation(g).map_err(|e| config_err(format!("groups[{i}]: {e}")))?;
        let ker = crate::morphism::kernel(&rho, None).map_err(numerical)?;
        reps.push((g.as_str(), rho, ker));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..reps.len())
        .flat_map(|g| (0..cfg.eps.len()).flat_map(move |e| (0..cfg.trials).map(move |t| (g, e, t))))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(g, e, t)| {
            let (name, rho, ker) = &reps[g];
            sweep_row(name, rho, ker, cfg.eps[e], t, master, &cfg.repair)
        })
        .collect())
}

fn opt<T: std::fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn float(x: f64) -> String {
    format!("{x:e}")
}

pub fn sweep_csv(rows: &[SweepRow], config_echo: &Value, seed: u64) -> String {
    let mut out = String::new();
    writeln!(out, "# tool: {TOOL_VERSION}").unwrap();
    writeln!(out, "# command: sweep-delta").unwrap();
    writeln!(out, "# config: {config_echo}").unwrap();
    writeln!(out, "# seed: {seed}").unwrap();
    writeln!(out, "group,n,eps,defect_in,iterations,defect_out,moved,seed,status").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.group,
            r.n,
            float(r.eps),
            float(r.defect_in),
            opt(&r.iterations),
            r.defect_out.map(float).unwrap_or_default(),
            r.moved.map(float).unwrap_or_default(),
            r.seed,
            r.status
        )
        .unwrap();
    }
    out
}

fn envelope(command: Command, seed: u64, config: &Value, result: Value) -> String {
    let report = json!({
        "tool": TOOL_VERSION,
        "command": command.name(),
        "seed": seed,
        "config": config,
        "result": result,
    });
    serde_json::to_string_pretty(&report).expect("serializable report") + "\n"
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable result")
}

/// Runs `command` on a parsed config and renders the report.
pub fn run(command: Command, config: &Value, seed: u64, format: Option<Format>) -> Result<String, HarnessError> {
    let format = format.unwrap_or(if command == Command::SweepDelta { Format::Csv } else { Format::Json });
    if format == Format::Csv && command != Command::SweepDelta {
        return Err(config_err(format!("--format csv is only available for sweep-delta, not {}", command.name())));
    }
    let result = match command {
        Command::Defect => {
            let cfg: MapConfig = parse(config)?;
            let f = cfg.build(seed)?;
            json!({
                "defect": defect(&f),
                "order": f.domain().order(),
                "dim": f.space().dim(),
                "ad_bound": ad_bound(f.values()).map_err(numerical)?,
            })
        }
        Command::Repair => {
            let cfg: MapConfig = parse(config)?;
            let f = cfg.build(seed)?;
            let report = repair(&f, &cfg.options()).map_err(numerical)?;
            to_value(&report)
        }
        Command::Project => {
            let cfg: ProjectConfig = parse(config)?;
            let tube = cfg.tube.build().map_err(|e| config_err(format!("tube: {e}")))?;
            let mut results = Vec::new();
            for (i, u) in cfg.matrices.iter().enumerate() {
                let p = tube.project(u).map_err(|e| numerical(format!("matrices[{i}]: {e}")))?;
                results.push(json!({
                    "g": to_value(&p.g),
                    "w": to_value(&p.w),
                    "dist": p.w.opnorm(),
                    "iterations": p.iterations,
                }));
            }
            json!({ "tube": tube.describe(), "projections": results })
        }
        Command::Jordan => {
            let cfg: JordanConfig = parse(config)?;
            let cap = cfg.cap.unwrap_or(DEFAULT_CAP);
            let (witness, value) = cfg.group.jordan_witness(cap).map_err(numerical)?;
            json!({
                "group": cfg.group.label(),
                "order": cfg.group.order(),
                "jordan_constant": value,
                "witness": { "order": witness.order(), "members": witness.members },
            })
        }
        Command::RelJordan => {
            let cfg: RelJordanConfig = parse(config)?;
            let tube = cfg.tube.build().map_err(|e| config_err(format!("tube: {e}")))?;
            let report = relative_jordan(tube.as_ref(), &cfg.sampler, seed).map_err(numerical)?;
            to_value(&report)
        }
        Command::Hausdorff => {
            let cfg: HausdorffConfig = parse(config)?;
            json!({ "distance": hausdorff(&cfg.space, &cfg.a, &cfg.b).map_err(numerical)? })
        }
        Command::Adbound => {
            let cfg: AdboundConfig = parse(config)?;
            json!({ "ad_bound": ad_bound(&cfg.matrices).map_err(numerical)? })
        }
        Command::SweepDelta => {
            let cfg: SweepConfig = if config.is_null() { SweepConfig::default() } else { parse(config)? };
            let rows = sweep_delta(&cfg, seed)?;
            return Ok(match format {
                Format::Csv => sweep_csv(&rows, config, seed),
                Format::Json => envelope(command, seed, config, json!({ "rows": rows })),
            });
        }
    };
    Ok(envelope(command, seed, config, result))
}
