//! Experiment orchestration: building maps, training runs over seeds,
//! transfer plans, paired comparisons, greedy evaluation and curve export.
//!
//! Every command is a plain function returning a serialisable summary; the
//! CLI only parses flags into an [`ExperimentConfig`] and prints the result.

pub mod artifacts;
pub mod compare;
pub mod curves;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{greedy_rollout, run_training, Agent, Algo, EpisodeRecord, Hyperparams, TrainOptions};
use crate::cityworld::{BuiltEnv, ConstraintReport, EnvConfig, EnvId, Environment, Profile};
use crate::neural::{load_weights, Mlp, Q_NETWORK_DIMS};
use crate::par::{map_jobs, Execution};
use crate::radiomap::{build_radio_map_with, save_radio_map};
use crate::transfer::{run_ctl, CtlPaths, Stage, StageResult, TransferPlan};
use crate::{Error, Result};

use artifacts::{code_version, write_run};
pub use artifacts::{RunFiles, RunManifest};
pub use compare::{ComparisonReport, SeedPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Map,
    Train,
    Transfer,
    Compare,
    Eval,
    Curves,
}

/// One invocation of the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub profile: Profile,
    /// Environment TOML (map, train, eval) or plan TOML (transfer, compare).
    pub config: Option<PathBuf>,
    /// Built-in environment used when no config file is given.
    pub preset: EnvId,
    /// Weights to evaluate.
    pub checkpoint: Option<PathBuf>,
    /// Run directories to smooth; empty means every run under `out_dir`.
    pub runs: Vec<PathBuf>,
    pub algo: Algo,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub smoothing_window: usize,
    /// Number of random evaluation starts.
    pub eval_starts: usize,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            profile: Profile::Desk,
            config: None,
            preset: EnvId::Env1,
            checkpoint: None,
            runs: Vec::new(),
            algo: Algo::Ddqn,
            seeds: vec![0],
            out_dir: out_dir.into(),
            smoothing_window: 50,
            eval_starts: 100,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let must_exist = |p: &Path| if p.exists() { Ok(()) } else { Err(Error::Config(format!("{} does not exist", p.display()))) };
        if let Some(c) = &self.config {
            must_exist(c)?;
        }
        if let Some(c) = &self.checkpoint {
            must_exist(c)?;
        }
        for r in &self.runs {
            must_exist(r)?;
        }
        if self.kind == ExperimentKind::Eval && self.checkpoint.is_none() {
            return Err(Error::Config("eval needs a checkpoint".into()));
        }
        Ok(())
    }

    fn env_config(&self) -> Result<EnvConfig> {
        match &self.config {
            Some(p) => EnvConfig::load(p),
            None => Ok(EnvConfig::preset(self.preset, self.profile)),
        }
    }

    fn plan(&self, default_chain: &[EnvId]) -> Result<(TransferPlan, PathBuf)> {
        match &self.config {
            Some(p) => {
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((TransferPlan::load(p)?, base))
            }
            None => Ok((
                TransferPlan {
                    algo: self.algo,
                    profile: self.profile,
                    source_checkpoint: None,
                    stages: default_chain.iter().map(|&e| Stage::preset(e)).collect(),
                },
                PathBuf::new(),
            )),
        }
    }
}

/// Scratch or fine-tuning hyperparameters sized for `profile`.
pub fn profile_hyperparams(profile: Profile, transfer: bool) -> Hyperparams {
    let base = if transfer { Hyperparams::transfer() } else { Hyperparams::scratch() };
    base.with_profile(profile)
}

/// Runs `cfg` and returns a JSON summary of what it produced.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Map => Ok(json(&cmd_map(&cfg.env_config()?, Some(&cfg.out_dir), cfg.execution)?)),
        ExperimentKind::Train => {
            let spec = TrainSpec::new(cfg.algo, profile_hyperparams(cfg.profile, false));
            let runs = cmd_train(&cfg.env_config()?, &spec, &cfg.seeds, Some(&cfg.out_dir), cfg.execution)?;
            Ok(json(&runs.iter().map(RunSummary::from).collect::<Vec<_>>()))
        }
        ExperimentKind::Transfer => {
            let (plan, base) = cfg.plan(&[EnvId::Env1, EnvId::Env2, EnvId::Env3])?;
            let out = cmd_transfer(&plan, &cfg.seeds, &base, &cfg.out_dir, cfg.execution)?;
            Ok(json(&out))
        }
        ExperimentKind::Compare => {
            let (plan, base) = cfg.plan(&[EnvId::Env1, EnvId::Env2])?;
            Ok(json(&cmd_compare(&plan, &cfg.seeds, &base, &cfg.out_dir, cfg.smoothing_window, cfg.execution)?))
        }
        ExperimentKind::Eval => {
            let net = load_weights(cfg.checkpoint.as_ref().expect("validated"), Some(&Q_NETWORK_DIMS))?;
            let built = cfg.env_config()?.build()?;
            let starts = evaluation_starts(&built.env, cfg.eval_starts, cfg.seeds[0]);
            Ok(json(&cmd_eval(&net, &built, &starts, Some(&cfg.out_dir))?))
        }
        ExperimentKind::Curves => {
            let runs = if cfg.runs.is_empty() { find_runs(&cfg.out_dir)? } else { cfg.runs.iter().map(|p| (run_label(p), p.clone())).collect() };
            let files = curves::export_curves(&runs, cfg.smoothing_window, &cfg.out_dir.join("curves"))?;
            Ok(json(&files))
        }
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("summaries serialise")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub dims: (usize, usize),
    pub cell_size: f64,
    pub outage_fraction: f64,
    pub sinr_p10_db: f64,
    pub sinr_p50_db: f64,
    pub sinr_p90_db: f64,
    pub env_hash: String,
    pub file: Option<PathBuf>,
}

pub const MAP_FILE: &str = "radio_map.txt";

/// Builds the city and radio map of `cfg`, optionally writing the map into `out`.
pub fn cmd_map(cfg: &EnvConfig, out: Option<&Path>, exec: Execution) -> Result<MapSummary> {
    let city = cfg.city()?;
    let map = build_radio_map_with(&city, &cfg.propagation, cfg.mission.altitude, cfg.cell_size, exec)?;
    let file = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(MAP_FILE);
            save_radio_map(&map, &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(MapSummary {
        dims: map.dims,
        cell_size: map.cell_size,
        outage_fraction: map.outage_fraction(),
        sinr_p10_db: map.sinr_percentile(10.0),
        sinr_p50_db: map.sinr_percentile(50.0),
        sinr_p90_db: map.sinr_percentile(90.0),
        env_hash: cfg.hash(),
        file,
    })
}

/// How to train one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub algo: Algo,
    pub hp: Hyperparams,
    /// Episodes to keep training after the success criterion first holds.
    pub extra_after_convergence: usize,
}

impl TrainSpec {
    pub fn new(algo: Algo, hp: Hyperparams) -> Self {
        Self { algo, hp, extra_after_convergence: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub converged_at: Option<usize>,
    pub net: Mlp,
    pub files: Option<RunFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub episodes: usize,
    pub converged_at: Option<usize>,
    pub weights_checksum: String,
    pub dir: Option<PathBuf>,
}

impl From<&RunResult> for RunSummary {
    fn from(r: &RunResult) -> Self {
        Self {
            seed: r.seed,
            episodes: r.records.len(),
            converged_at: r.converged_at,
            weights_checksum: r.net.checksum(),
            dir: r.files.as_ref().map(|f| f.dir.clone()),
        }
    }
}

/// One training run on an already built environment. `init` starts from
/// given weights (fresh optimizer and replay) instead of a seeded network.
pub fn train_one(built: &BuiltEnv, env_hash: &str, spec: &TrainSpec, seed: u64, init: Option<&Mlp>, out: Option<&Path>) -> Result<RunResult> {
    let mut agent = match init {
        Some(net) => Agent::from_network(spec.algo, spec.hp.clone(), net.clone())?,
        None => Agent::new(spec.algo, spec.hp.clone(), seed)?,
    };
    let opts = TrainOptions { extra_after_convergence: spec.extra_after_convergence, ..TrainOptions::from_hyperparams(&spec.hp) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = run_training(&mut agent, &built.env, &opts, &mut rng)?;
    let files = match out {
        Some(dir) => {
            let manifest = RunManifest {
                code_version: code_version().to_string(),
                kind: if init.is_some() { "transfer".into() } else { "scratch".into() },
                algo: spec.algo,
                seed,
                hyperparams: spec.hp.clone(),
                env_hash: env_hash.to_string(),
                source_weights: init.map(Mlp::checksum),
                episodes: outcome.records.len(),
                converged_at: outcome.converged_at,
                weights_checksum: agent.online.checksum(),
            };
            Some(write_run(dir, &outcome.records, &agent.online, &manifest)?)
        }
        None => None,
    };
    Ok(RunResult { seed, records: outcome.records, converged_at: outcome.converged_at, net: agent.online, files })
}

/// One run per seed on a shared environment; run `s` goes to `<out>/seed<s>`.
pub fn cmd_train(cfg: &EnvConfig, spec: &TrainSpec, seeds: &[u64], out: Option<&Path>, exec: Execution) -> Result<Vec<RunResult>> {
    let built = cfg.build()?;
    let hash = cfg.hash();
    map_jobs(seeds, exec, |&s| train_one(&built, &hash, spec, s, None, out.map(|o| o.join(format!("seed{s}"))).as_deref())).into_iter().collect()
}

/// Runs the plan once per seed under `<out>/seed<s>`.
pub fn cmd_transfer(plan: &TransferPlan, seeds: &[u64], base_dir: &Path, out: &Path, exec: Execution) -> Result<Vec<Vec<StageResult>>> {
    map_jobs(seeds, exec, |&s| run_ctl(plan, s, &CtlPaths { base_dir: base_dir.to_path_buf(), out_dir: Some(out.join(format!("seed{s}"))) }))
        .into_iter()
        .collect()
}

pub const REPORT_FILE: &str = "report.json";

/// Paired comparison: for each seed, scratch training on the plan's last
/// environment (baseline) against the full plan (treatment).
pub fn cmd_compare(plan: &TransferPlan, seeds: &[u64], base_dir: &Path, out: &Path, window: usize, exec: Execution) -> Result<ComparisonReport> {
    plan.validate()?;
    let last = plan.stages.len() - 1;
    let final_env = plan.stages[last].env_config(last, plan.profile, base_dir)?;
    let treat_hp = plan.stage_hyperparams(last);
    let base_hp = Hyperparams {
        success_window: treat_hp.success_window,
        success_threshold: treat_hp.success_threshold,
        max_episodes: treat_hp.max_episodes,
        target_sync_period: treat_hp.target_sync_period,
        ..Hyperparams::scratch()
    };
    let built = final_env.build()?;
    let hash = final_env.hash();
    let spec = TrainSpec::new(plan.algo, base_hp);
    let jobs: Vec<(u64, bool)> = seeds.iter().flat_map(|&s| [(s, false), (s, true)]).collect();
    let outcomes = map_jobs(&jobs, exec, |&(s, treated)| -> Result<(Option<usize>, PathBuf)> {
        if treated {
            let dir = out.join("treatment").join(format!("seed{s}"));
            let stages = run_ctl(plan, s, &CtlPaths { base_dir: base_dir.to_path_buf(), out_dir: Some(dir) })?;
            let r = stages.last().expect("non-empty plan");
            Ok((r.episodes_to_convergence, r.checkpoint.as_ref().and_then(|c| c.parent()).expect("written").to_path_buf()))
        } else {
            let dir = out.join("baseline").join(format!("seed{s}"));
            let r = train_one(&built, &hash, &spec, s, None, Some(&dir))?;
            Ok((r.converged_at, dir))
        }
    });
    let mut pairs = Vec::new();
    let mut base_runs = Vec::new();
    let mut treat_runs = Vec::new();
    for (chunk, &s) in outcomes.chunks(2).zip(seeds) {
        let (b, bdir) = chunk[0].as_ref().map_err(|e| Error::Invalid(format!("baseline seed {s}: {e}")))?.clone();
        let (t, tdir) = chunk[1].as_ref().map_err(|e| Error::Invalid(format!("treatment seed {s}: {e}")))?.clone();
        pairs.push(SeedPair { seed: s, baseline: b, treatment: t });
        base_runs.push((format!("seed{s}"), bdir));
        treat_runs.push((format!("seed{s}"), tdir));
    }
    let report = ComparisonReport::from_pairs(pairs);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(REPORT_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&report).expect("report serialises") + "\n").map_err(|e| Error::io(&path, e))?;
    curves::export_curves(&base_runs, window, &out.join("curves").join("baseline"))?;
    curves::export_curves(&treat_runs, window, &out.join("curves").join("treatment"))?;
    Ok(report)
}

/// Distinct random start cells drawn from the mission's start region.
pub fn evaluation_starts(env: &Environment, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| env.reset(&mut rng).position).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub start: [f64; 2],
    pub total_reward: f64,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub outage_budget: usize,
    pub max_steps: usize,
    pub entries: Vec<EvalEntry>,
    pub arrived_fraction: f64,
    /// Fraction of rollouts with `Γ < Γ̂`.
    pub within_outage_budget_fraction: f64,
}

pub const EVAL_SUMMARY_FILE: &str = "eval_summary.json";

/// Greedy rollouts from each start. With `out`, writes `trajectory_<i>.csv`
/// (step,x,y,sinr_db,outage) per start plus a JSON summary.
pub fn cmd_eval(net: &Mlp, built: &BuiltEnv, starts: &[[f64; 2]], out: Option<&Path>) -> Result<EvalReport> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tallest = built.city.max_building_height();
    let mut entries = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let rollout = greedy_rollout(net, &built.env, start, tallest)?;
        if let Some(dir) = out {
            let path = dir.join(format!("trajectory_{i}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            w.write_record(["step", "x", "y", "sinr_db", "outage"])?;
            for (k, wp) in rollout.trajectory.waypoints.iter().enumerate() {
                w.write_record([
                    k.to_string(),
                    format!("{:?}", wp.position[0]),
                    format!("{:?}", wp.position[1]),
                    format!("{:?}", wp.sinr_db),
                    wp.outage.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        entries.push(EvalEntry { start, total_reward: rollout.total_reward, report: rollout.report });
    }
    let n = entries.len().max(1) as f64;
    let report = EvalReport {
        outage_budget: built.env.mission.outage_budget,
        max_steps: built.env.mission.max_steps,
        arrived_fraction: entries.iter().filter(|e| e.report.arrived).count() as f64 / n,
        within_outage_budget_fraction: entries.iter().filter(|e| e.report.within_outage_budget).count() as f64 / n,
        entries,
    };
    if let Some(dir) = out {
        let path = dir.join(EVAL_SUMMARY_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&report).expect("report serialises") + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

fn run_label(dir: &Path) -> String {
    dir.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).filter(|c| c != "." && c != "/").collect::<Vec<_>>().join("_")
}

/// Every directory below `root` holding a metrics file, in sorted order.
pub fn find_runs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
        if dir.join(artifacts::METRICS_FILE).is_file() {
            let rel = dir.strip_prefix(root).unwrap_or(dir);
            let label = run_label(rel);
            out.push((if label.is_empty() { "run".into() } else { label }, dir.to_path_buf()));
        }
        let mut children: Vec<PathBuf> =
            std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        children.sort();
        for c in children {
            walk(&c, root, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    if out.is_empty() {
        return Err(Error::Invalid(format!("no runs found under {}", root.display())));
    }
    Ok(out)
}
