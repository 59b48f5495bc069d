//! Multi-seed simulations with per-round alpha-regret and event rates.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{clairvoyant_reward, UcbGreedy, UpperBoundKind};
use crate::environment::{stream, BlockState, Event, Nature, Purpose, RoundOutcome};
use crate::error::{CbbError, Result};
use crate::fi_cbb::FiCbb;
use crate::instance::{Instance, NamedInstance};
use crate::lp::{solve_lp, LpObjective};
use crate::ucb_cbb::{CounterDiagnostic, LagChecks, UcbCbb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    FiCbb,
    UcbCbb,
    UcbGreedy,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::FiCbb => "fi_cbb",
            PolicyKind::UcbCbb => "ucb_cbb",
            PolicyKind::UcbGreedy => "ucb_greedy",
        }
    }

    fn coin_stream(self) -> Purpose {
        Purpose::PolicyCoins(match self {
            PolicyKind::FiCbb => 0,
            PolicyKind::UcbCbb => 1,
            PolicyKind::UcbGreedy => 2,
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named instance (`"integral(0.8)"`) or an inline instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Named(NamedInstance),
    Inline(Instance),
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        match self {
            InstanceSpec::Named(n) => n.build(),
            InstanceSpec::Inline(i) => Ok(i.clone()),
        }
    }

    /// File-name friendly label.
    pub fn slug(&self) -> String {
        match self {
            InstanceSpec::Named(n) => n
                .to_string()
                .chars()
                .filter_map(|c| match c {
                    '(' | ',' => Some('_'),
                    ')' | ' ' => None,
                    c => Some(c),
                })
                .collect(),
            InstanceSpec::Inline(_) => "instance".into(),
        }
    }
}

fn default_policies() -> Vec<PolicyKind> {
    vec![PolicyKind::UcbCbb, PolicyKind::UcbGreedy]
}

fn default_alpha_mode() -> UpperBoundKind {
    UpperBoundKind::LpTimesT
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub seeds: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_alpha_mode")]
    pub alpha_mode: UpperBoundKind,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also write the per-round trace of the first seed of every policy.
    #[serde(default)]
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec, policies: Vec<PolicyKind>, horizon: u64, seeds: u32) -> Self {
        ExperimentConfig {
            instance,
            policies,
            horizon,
            seeds,
            base_seed: 0,
            alpha_mode: UpperBoundKind::LpTimesT,
            output_dir: default_output_dir(),
            trace: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(CbbError::Config("horizon must be at least 1".into()));
        }
        if self.seeds == 0 {
            return Err(CbbError::Config("seeds must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(CbbError::Config("no policies listed".into()));
        }
        for (n, p) in self.policies.iter().enumerate() {
            if self.policies[..n].contains(p) {
                return Err(CbbError::Config(format!("policy {p} listed twice")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Seed of run `index`.
    pub fn seed(&self, index: u32) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// One policy run on one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSeries {
    pub seed: u64,
    /// Cumulative alpha-regret after each round.
    pub regret: Vec<f64>,
    /// Cumulative counts of play, lp-skip, skip, block after each round.
    pub events: Vec<[u32; 4]>,
    pub total_reward: f64,
    pub diagnostic: Option<CounterDiagnostic>,
    pub lag_checks: Option<LagChecks>,
}

impl SeedSeries {
    pub fn rate(&self, event: Event, t: u64) -> f64 {
        self.events[t as usize - 1][event.index()] as f64 / t as f64
    }
}

/// Per-policy series over all seeds, with the seed aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub policy: PolicyKind,
    pub seeds: Vec<SeedSeries>,
    pub regret_mean: Vec<f64>,
    pub regret_q25: Vec<f64>,
    pub regret_q75: Vec<f64>,
    pub play_rate: Vec<f64>,
    pub lp_skip_rate: Vec<f64>,
    pub skip_rate: Vec<f64>,
    pub block_rate: Vec<f64>,
}

impl MetricSeries {
    fn aggregate(policy: PolicyKind, seeds: Vec<SeedSeries>) -> Self {
        let horizon = seeds[0].regret.len();
        let n = seeds.len() as f64;
        let mut out = MetricSeries {
            policy,
            regret_mean: Vec::with_capacity(horizon),
            regret_q25: Vec::with_capacity(horizon),
            regret_q75: Vec::with_capacity(horizon),
            play_rate: Vec::with_capacity(horizon),
            lp_skip_rate: Vec::with_capacity(horizon),
            skip_rate: Vec::with_capacity(horizon),
            block_rate: Vec::with_capacity(horizon),
            seeds: Vec::new(),
        };
        let mut column = Vec::with_capacity(seeds.len());
        for t in 0..horizon {
            column.clear();
            column.extend(seeds.iter().map(|s| s.regret[t]));
            out.regret_mean.push(column.iter().sum::<f64>() / n);
            column.sort_by(f64::total_cmp);
            out.regret_q25.push(nearest_rank(&column, 0.25));
            out.regret_q75.push(nearest_rank(&column, 0.75));
            let rate = |e: Event| seeds.iter().map(|s| s.rate(e, t as u64 + 1)).sum::<f64>() / n;
            out.play_rate.push(rate(Event::Play));
            out.lp_skip_rate.push(rate(Event::LpSkip));
            out.skip_rate.push(rate(Event::Skip));
            out.block_rate.push(rate(Event::Block));
        }
        out.seeds = seeds;
        out
    }

    pub fn horizon(&self) -> u64 {
        self.regret_mean.len() as u64
    }

    /// Mean over seeds of the final cumulative reward.
    pub fn mean_total_reward(&self) -> f64 {
        self.seeds.iter().map(|s| s.total_reward).sum::<f64>() / self.seeds.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "regret_mean", "regret_q25", "regret_q75", "lp_skip_rate", "skip_rate", "block_rate"])?;
        for t in 0..self.regret_mean.len() {
            w.write_record([
                (t + 1).to_string(),
                self.regret_mean[t].to_string(),
                self.regret_q25[t].to_string(),
                self.regret_q75[t].to_string(),
                self.lp_skip_rate[t].to_string(),
                self.skip_rate[t].to_string(),
                self.block_rate[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Nearest-rank quantile of sorted values.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// A policy ready to run.
#[derive(Debug, Clone)]
pub enum Runner {
    Fi(FiCbb),
    Ucb(Box<UcbCbb>),
    Greedy(UcbGreedy),
}

impl Runner {
    pub fn new(kind: PolicyKind, inst: &Instance) -> Self {
        match kind {
            PolicyKind::FiCbb => Runner::Fi(FiCbb::new(inst)),
            PolicyKind::UcbCbb => Runner::Ucb(Box::new(UcbCbb::new(inst))),
            PolicyKind::UcbGreedy => Runner::Greedy(UcbGreedy::new(inst)),
        }
    }
}

/// One row of a per-round trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub m_t: u64,
    pub context: usize,
    pub sampled_arm: Option<usize>,
    pub event: Event,
    pub reward: f64,
    pub lp_value_used: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "M_t", "context", "sampled_arm", "event", "reward", "lp_value_used"])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.m_t.to_string(),
                r.context.to_string(),
                r.sampled_arm.map_or(String::new(), |a| a.to_string()),
                r.event.as_str().to_string(),
                r.reward.to_string(),
                r.lp_value_used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `kind` on `seed` for `horizon` rounds and calls `visit` after each round.
pub fn simulate(
    inst: &Instance,
    kind: PolicyKind,
    seed: u64,
    horizon: u64,
    mut visit: impl FnMut(&RoundOutcome, &Runner),
) -> Result<Runner> {
    let mut runner = Runner::new(kind, inst);
    let mut nature = Nature::new(seed);
    let mut block = BlockState::new(inst.num_arms());
    let mut coins = stream(seed, kind.coin_stream());
    for _ in 0..horizon {
        let draw = nature.draw(inst);
        let out = match &mut runner {
            Runner::Fi(p) => p.step(inst, &draw, &mut block, &mut coins)?,
            Runner::Ucb(p) => p.step(inst, &draw, &mut block, &mut coins)?,
            Runner::Greedy(p) => p.step(inst, &draw, &mut block)?,
        };
        visit(&out, &runner);
    }
    Ok(runner)
}

pub fn run_trace(inst: &Instance, kind: PolicyKind, seed: u64, horizon: u64) -> Result<RunTrace> {
    let mut rows = Vec::with_capacity(horizon as usize);
    simulate(inst, kind, seed, horizon, |o, r| {
        let (m_t, lp_value_used) = match r {
            Runner::Fi(p) => (0, p.vertex().value()),
            Runner::Ucb(p) => (p.last_m(), p.last_lp_value()),
            Runner::Greedy(_) => (0, 0.0),
        };
        rows.push(TraceRow {
            t: o.t,
            m_t,
            context: o.context,
            sampled_arm: o.sampled_arm,
            event: o.event,
            reward: o.reward,
            lp_value_used,
        });
    })?;
    Ok(RunTrace { rows })
}

/// Upper bound on the optimal reward of each prefix `1..=T`.
fn upper_bounds(inst: &Instance, horizon: u64, kind: UpperBoundKind) -> Result<Vec<f64>> {
    match kind {
        UpperBoundKind::LpTimesT => {
            let lp = solve_lp(inst, &LpObjective::means(inst)).value();
            Ok((1..=horizon).map(|t| t as f64 * lp).collect())
        }
        UpperBoundKind::ExactOracle => {
            (1..=horizon).map(|t| clairvoyant_reward(inst, t).map(|r| r.expected_reward)).collect()
        }
    }
}

pub fn run_seed(inst: &Instance, kind: PolicyKind, seed: u64, bounds: &[f64]) -> Result<SeedSeries> {
    let alpha = inst.alpha();
    let horizon = bounds.len() as u64;
    let mut regret = Vec::with_capacity(bounds.len());
    let mut events = Vec::with_capacity(bounds.len());
    let mut counts = [0u32; 4];
    let mut reward = 0.0;
    let runner = simulate(inst, kind, seed, horizon, |o, _| {
        reward += o.reward;
        counts[o.event.index()] += 1;
        regret.push(alpha * bounds[o.t as usize - 1] - reward);
        events.push(counts);
    })?;
    let (diagnostic, lag_checks) = match &runner {
        Runner::Ucb(p) => (Some(p.diagnostic()), Some(p.lag_checks())),
        _ => (None, None),
    };
    Ok(SeedSeries { seed, regret, events, total_reward: reward, diagnostic, lag_checks })
}

/// Runs every policy on every seed; nature is shared across policies of a seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricSeries>> {
    cfg.validate()?;
    let inst = cfg.instance.build()?;
    let bounds = upper_bounds(&inst, cfg.horizon, cfg.alpha_mode)?;
    let mut out = Vec::with_capacity(cfg.policies.len());
    for &kind in &cfg.policies {
        let seeds: Vec<SeedSeries> = (0..cfg.seeds)
            .into_par_iter()
            .map(|s| run_seed(&inst, kind, cfg.seed(s), &bounds))
            .collect::<Result<_>>()?;
        out.push(MetricSeries::aggregate(kind, seeds));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub git_describe: String,
    pub wall_time_s: f64,
    pub instance: String,
    pub lp_value: f64,
    pub alpha: f64,
    pub files: Vec<String>,
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Runs the experiment and writes one CSV per policy plus `metadata.json`
/// into `cfg.output_dir`. Returns the written CSV paths.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let series = run_experiment(cfg)?;
    let inst = cfg.instance.build()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let slug = cfg.instance.slug();
    let mut files = Vec::new();
    for s in &series {
        let path = cfg.output_dir.join(format!("{slug}__{}.csv", s.policy));
        s.write_csv(fs::File::create(&path)?)?;
        files.push(path);
        if cfg.trace {
            let tpath = cfg.output_dir.join(format!("{slug}__{}__trace.csv", s.policy));
            run_trace(&inst, s.policy, cfg.seed(0), cfg.horizon)?.write_csv(fs::File::create(&tpath)?)?;
        }
    }
    let meta = Metadata {
        config_hash: cfg.hash(),
        git_describe: git_describe(),
        wall_time_s: start.elapsed().as_secs_f64(),
        instance: slug,
        lp_value: solve_lp(&inst, &LpObjective::means(&inst)).value(),
        alpha: inst.alpha(),
        files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
    };
    fs::write(cfg.output_dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(files)
}

/// Parses `name=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| CbbError::Config(format!("sweep `{spec}` is not of the form name=v1,v2")))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CbbError::Config(format!("bad sweep value `{v}`"))))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CbbError::Config("empty sweep".into()));
    }
    Ok((name.trim().to_string(), values))
}

/// Runs `cfg` once per value of a named-instance parameter, each into its
/// own subdirectory `name=value` of the output directory.
pub fn sweep(cfg: &ExperimentConfig, name: &str, values: &[f64]) -> Result<Vec<PathBuf>> {
    let InstanceSpec::Named(base) = &cfg.instance else {
        return Err(CbbError::Config("sweeps need a named instance".into()));
    };
    let mut files = Vec::new();
    for &v in values {
        let mut sub = cfg.clone();
        sub.instance = InstanceSpec::Named(base.with_param(name, v)?);
        sub.output_dir = cfg.output_dir.join(format!("{name}={v}"));
        files.extend(run_and_write(&sub)?);
    }
    Ok(files)
}
