//! Continuous transfer learning: train on one environment, then carry the
//! weights through an ordered list of further environments, fine-tuning
//! each time with re-tuned learning parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{run_training, Agent, Algo, EpisodeRecord, Hyperparams, TrainOptions};
use crate::cityworld::{EnvConfig, EnvId, Profile, RewardConstants};
use crate::harness::artifacts::{write_run, RunManifest};
use crate::neural::{load_weights, Mlp, Q_NETWORK_DIMS};
use crate::{Error, Result};

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("plan has no stages")]
    EmptyPlan,
    #[error("stage {stage} needs either `preset` or `config`, not {found}")]
    StageEnv { stage: usize, found: &'static str },
    #[error("stage {stage} failed after {completed} completed stage(s): {source}")]
    StageFailed {
        stage: usize,
        completed: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Optional replacements for individual hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperparamOverrides {
    pub learning_rate: Option<f64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_decay: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub gamma: Option<f64>,
    pub batch_size: Option<usize>,
    pub replay_capacity: Option<usize>,
    pub target_sync_period: Option<u64>,
    pub min_replay: Option<usize>,
    pub success_window: Option<usize>,
    pub success_threshold: Option<f64>,
    pub max_episodes: Option<usize>,
    pub grad_clip: Option<f64>,
}

impl HyperparamOverrides {
    pub fn apply(&self, base: &Hyperparams) -> Hyperparams {
        let mut hp = base.clone();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { hp.$f = v; })* };
        }
        take!(
            learning_rate,
            epsilon_start,
            epsilon_decay,
            epsilon_min,
            gamma,
            batch_size,
            replay_capacity,
            target_sync_period,
            min_replay,
            success_window,
            success_threshold,
            max_episodes,
            grad_clip
        );
        hp
    }
}

/// One environment in a transfer sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage {
    pub name: Option<String>,
    /// Built-in environment, sized by the plan's profile.
    pub preset: Option<EnvId>,
    /// Environment TOML file, relative to the plan file.
    pub config: Option<PathBuf>,
    /// Inline environment, used when plans are built in code.
    #[serde(skip)]
    pub inline: Option<EnvConfig>,
    /// Station to switch off before the map is built.
    pub emergency_bs: Option<usize>,
    /// New destination for this stage.
    pub target: Option<[f64; 2]>,
    pub hyperparams: HyperparamOverrides,
    /// Reward constants by key (`k1`, `k2`, `R_n`, `R_arrive`).
    pub reward: BTreeMap<String, f64>,
}

impl Stage {
    pub fn preset(env: EnvId) -> Self {
        Self { preset: Some(env), ..Self::default() }
    }

    pub fn inline(cfg: EnvConfig) -> Self {
        Self { inline: Some(cfg), ..Self::default() }
    }

    pub fn label(&self) -> String {
        match (&self.name, self.preset) {
            (Some(n), _) => n.clone(),
            (None, Some(env)) => env.to_string(),
            (None, None) => "custom".into(),
        }
    }

    /// Resolves the environment for this stage, with emergency, target and
    /// reward overrides applied.
    pub fn env_config(&self, index: usize, profile: Profile, base_dir: &Path) -> Result<EnvConfig> {
        let mut cfg = match (&self.inline, self.preset, &self.config) {
            (Some(c), None, None) => c.clone(),
            (None, Some(env), None) => EnvConfig::preset(env, profile),
            (None, None, Some(path)) => EnvConfig::load(base_dir.join(path))?,
            (None, None, None) => return Err(TransferError::StageEnv { stage: index, found: "neither" }.into()),
            _ => return Err(TransferError::StageEnv { stage: index, found: "several" }.into()),
        };
        if let Some(bs) = self.emergency_bs {
            cfg.emergency_bs = Some(bs);
        }
        if let Some(t) = self.target {
            cfg.mission.target = t;
        }
        cfg.reward = apply_reward_override(&cfg.reward, &self.reward)?;
        Ok(cfg)
    }
}

/// Ordered stages plus where the first one starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferPlan {
    #[serde(default = "default_algo")]
    pub algo: Algo,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    /// Weights for stage 0; absent means stage 0 trains from scratch.
    #[serde(default)]
    pub source_checkpoint: Option<PathBuf>,
    pub stages: Vec<Stage>,
}

fn default_algo() -> Algo {
    Algo::Ddqn
}

fn default_profile() -> Profile {
    Profile::Paper
}

impl TransferPlan {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let plan: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(TransferError::EmptyPlan.into());
        }
        Ok(())
    }

    /// Effective hyperparameters of stage `index`: scratch values for a
    /// from-scratch first stage, fine-tuning values otherwise, then the
    /// profile's termination settings, then the stage's overrides.
    pub fn stage_hyperparams(&self, index: usize) -> Hyperparams {
        let base = if index == 0 && self.source_checkpoint.is_none() { Hyperparams::scratch() } else { Hyperparams::transfer() };
        self.stages[index].hyperparams.apply(&base.with_profile(self.profile))
    }
}

/// Stage-specific reward constants; absent keys keep `base`.
pub fn apply_reward_override(base: &RewardConstants, overrides: &BTreeMap<String, f64>) -> Result<RewardConstants> {
    Ok(base.with_overrides(overrides)?)
}

/// Agent starting from the weights at `checkpoint`, with both networks set
/// to them, fresh optimizer moments and an empty replay buffer.
pub fn transfer_init(checkpoint: impl AsRef<Path>, algo: Algo, hp: Hyperparams) -> Result<Agent> {
    let net = load_weights(checkpoint, Some(&Q_NETWORK_DIMS))?;
    transfer_from_network(net, algo, hp)
}

/// As [`transfer_init`] for weights already in memory.
pub fn transfer_from_network(net: Mlp, algo: Algo, hp: Hyperparams) -> Result<Agent> {
    if net.dims() != Q_NETWORK_DIMS {
        return Err(crate::neural::NeuralError::Architecture { expected: Q_NETWORK_DIMS.to_vec(), found: net.dims().to_vec() }.into());
    }
    Ok(Agent::from_network(algo, hp, net)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: usize,
    pub name: String,
    /// Episodes played when the success criterion first held.
    pub episodes_to_convergence: Option<usize>,
    /// Success rate over the last window of episodes.
    pub final_success_rate: f64,
    pub checkpoint: Option<PathBuf>,
    pub hyperparams: Hyperparams,
    pub env_hash: String,
    pub weights_checksum: String,
    #[serde(skip)]
    pub records: Vec<EpisodeRecord>,
}

impl StageResult {
    pub fn converged(&self) -> bool {
        self.episodes_to_convergence.is_some()
    }
}

/// Seed for stage `index` of a plan run with `seed`; stage 0 uses `seed` itself
/// so that a one-stage plan reproduces a plain training run.
pub fn stage_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Trains `agent` on `env_cfg` until the success criterion or the episode
/// budget, then writes the run into `out_dir` when given.
pub fn run_stage(
    agent: &mut Agent,
    env_cfg: &EnvConfig,
    stage: usize,
    name: &str,
    seed: u64,
    source_weights: Option<String>,
    out_dir: Option<&Path>,
) -> Result<StageResult> {
    let built = env_cfg.build()?;
    let opts = TrainOptions::from_hyperparams(&agent.hp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = run_training(agent, &built.env, &opts, &mut rng)?;
    let window = opts.window.min(outcome.records.len()).max(1);
    let tail = &outcome.records[outcome.records.len().saturating_sub(window)..];
    let final_success_rate = tail.iter().filter(|r| r.success).count() as f64 / window as f64;
    let env_hash = env_cfg.hash();
    let weights_checksum = agent.online.checksum();
    let checkpoint = match out_dir {
        Some(dir) => {
            let manifest = RunManifest {
                code_version: crate::harness::artifacts::code_version().to_string(),
                kind: if source_weights.is_some() { "transfer".into() } else { "scratch".into() },
                algo: agent.algo,
                seed,
                hyperparams: agent.hp.clone(),
                env_hash: env_hash.clone(),
                source_weights,
                episodes: outcome.records.len(),
                converged_at: outcome.converged_at,
                weights_checksum: weights_checksum.clone(),
            };
            Some(write_run(dir, &outcome.records, &agent.online, &manifest)?.weights)
        }
        None => None,
    };
    Ok(StageResult {
        stage,
        name: name.to_string(),
        episodes_to_convergence: outcome.converged_at,
        final_success_rate,
        checkpoint,
        hyperparams: agent.hp.clone(),
        env_hash,
        weights_checksum,
        records: outcome.records,
    })
}

/// Where [`run_ctl`] finds stage files and writes its outputs.
#[derive(Debug, Clone, Default)]
pub struct CtlPaths {
    /// Directory that relative stage `config` paths are resolved against.
    pub base_dir: PathBuf,
    /// Output root; stage `k` goes to `<out>/stage<k>-<name>`.
    pub out_dir: Option<PathBuf>,
}

pub const CTL_SUMMARY_FILE: &str = "ctl_summary.json";

/// Runs every stage in order, seeding each from the previous stage's
/// checkpoint. The summary is rewritten after each stage, so a failure
/// leaves the completed stages on disk.
pub fn run_ctl(plan: &TransferPlan, seed: u64, paths: &CtlPaths) -> Result<Vec<StageResult>> {
    plan.validate()?;
    let mut results: Vec<StageResult> = Vec::new();
    let mut carried: Option<Mlp> = match &plan.source_checkpoint {
        Some(p) => Some(load_weights(paths.base_dir.join(p), Some(&Q_NETWORK_DIMS))?),
        None => None,
    };
    for (k, stage) in plan.stages.iter().enumerate() {
        let outcome = (|| -> Result<StageResult> {
            let env_cfg = stage.env_config(k, plan.profile, &paths.base_dir)?;
            let hp = plan.stage_hyperparams(k);
            let s = stage_seed(seed, k);
            let name = stage.label();
            let (mut agent, source) = match carried.take() {
                Some(net) => {
                    let sum = net.checksum();
                    (transfer_from_network(net, plan.algo, hp)?, Some(sum))
                }
                None => (Agent::new(plan.algo, hp, s)?, None),
            };
            let dir = paths.out_dir.as_ref().map(|o| o.join(format!("stage{k}-{name}")));
            let result = run_stage(&mut agent, &env_cfg, k, &name, s, source, dir.as_deref())?;
            carried = Some(match &result.checkpoint {
                Some(ckpt) => load_weights(ckpt, Some(&Q_NETWORK_DIMS))?,
                None => agent.online,
            });
            Ok(result)
        })();
        match outcome {
            Ok(r) => {
                results.push(r);
                persist_summary(&results, paths)?;
            }
            Err(e) => {
                persist_summary(&results, paths)?;
                return Err(TransferError::StageFailed { stage: k, completed: results.len(), source: Box::new(e) }.into());
            }
        }
    }
    Ok(results)
}

fn persist_summary(results: &[StageResult], paths: &CtlPaths) -> Result<()> {
    let Some(out) = &paths.out_dir else { return Ok(()) };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(CTL_SUMMARY_FILE);
    let json = serde_json::to_string_pretty(results).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Transition;
    use crate::neural::{init_network, save_weights};

    fn probe_grid() -> Vec<[f64; 4]> {
        let mut out = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                out.push([i as f64 / 19.0, j as f64 / 19.0, ((i + j) as f64 / 19.0) - 1.0, ((i * j) % 2) as f64]);
            }
        }
        out
    }

    #[test]
    fn init_carries_policy_and_resets_learning_state() {
        let dir = tempfile::tempdir().unwrap();
        let mut source = Agent::new(Algo::Ddqn, Hyperparams::scratch(), 11).unwrap();
        for i in 0..5 {
            source.replay.push(Transition { state: [0.1 * i as f64; 4], action: i % 4, reward: -1.0, next_state: [0.2; 4], done: false, outage: false });
        }
        let ckpt = dir.path().join("w.json");
        save_weights(&source.online, &ckpt).unwrap();

        let agent = transfer_init(&ckpt, Algo::Ddqn, Hyperparams::transfer()).unwrap();
        assert_eq!(agent.online.params(), source.online.params());
        assert_eq!(agent.target.params(), source.online.params());
        assert_eq!(agent.replay.len(), 0);
        assert_eq!(agent.optimizer.step, 0);
        assert_eq!(agent.epsilon, 0.5);
        assert_eq!(agent.optimizer.learning_rate, 0.0002);
        for s in probe_grid() {
            assert_eq!(agent.greedy_action(&s), source.greedy_action(&s));
            assert_eq!(agent.q_values(&s), source.q_values(&s));
        }
    }

    #[test]
    fn init_rejects_other_architectures() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("w.json");
        save_weights(&init_network(&[4, 8, 4], 0).unwrap(), &ckpt).unwrap();
        assert!(transfer_init(&ckpt, Algo::Ddqn, Hyperparams::transfer()).is_err());
        assert!(transfer_init(dir.path().join("missing.json"), Algo::Ddqn, Hyperparams::transfer()).is_err());
    }

    #[test]
    fn reward_overrides() {
        let base = RewardConstants::default();
        assert_eq!(apply_reward_override(&base, &BTreeMap::new()).unwrap(), base);
        let k2 = BTreeMap::from([("k2".to_string(), 2.0)]);
        let changed = apply_reward_override(&base, &k2).unwrap();
        let drop = base.reward(500.0, true, false) - changed.reward(500.0, true, false);
        assert!((drop - 1.0).abs() < 1e-12);
        assert_eq!(changed.reward(500.0, false, false), base.reward(500.0, false, false));
        assert!(apply_reward_override(&base, &BTreeMap::from([("k9".to_string(), 1.0)])).is_err());
    }

    #[test]
    fn plan_parsing_and_hyperparams() {
        let plan = TransferPlan::from_toml_str(
            r#"
            algo = "ddqn"
            profile = "desk"
            [[stages]]
            preset = "env1"
            [[stages]]
            preset = "env2"
            emergency_bs = 1
            target = [700.0, 500.0]
            reward = { k2 = 2.0 }
            hyperparams = { learning_rate = 0.0005 }
            "#,
        )
        .unwrap();
        assert_eq!(plan.stages.len(), 2);
        let h0 = plan.stage_hyperparams(0);
        assert_eq!((h0.learning_rate, h0.epsilon_start, h0.success_window), (0.001, 1.0, 50));
        let h1 = plan.stage_hyperparams(1);
        assert_eq!((h1.learning_rate, h1.epsilon_start, h1.epsilon_decay), (0.0005, 0.5, 0.995));
        let cfg = plan.stages[1].env_config(1, plan.profile, Path::new(".")).unwrap();
        assert_eq!((cfg.emergency_bs, cfg.mission.target, cfg.reward.k2), (Some(1), [700.0, 500.0], 2.0));
        assert!(TransferPlan::from_toml_str("stages = []").is_err());
        assert!(TransferPlan::from_toml_str("[[stages]]\npreset = \"env1\"\nbogus = 1").is_err());
    }

    #[test]
    fn stage_needs_exactly_one_environment() {
        let s = Stage::default();
        assert!(s.env_config(0, Profile::Desk, Path::new(".")).is_err());
        let both = Stage { preset: Some(EnvId::Env1), config: Some("x.toml".into()), ..Stage::default() };
        assert!(both.env_config(0, Profile::Desk, Path::new(".")).is_err());
    }
}
