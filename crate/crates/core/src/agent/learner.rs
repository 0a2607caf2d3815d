use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{compute_targets, policy::argmax, select_action, Algo, EpisodeRecord, Hyperparams, ReplayBuffer, Result, Transition};
use crate::cityworld::{check_constraints, Action, ConstraintReport, Environment, MdpState, Trajectory, Waypoint};
use crate::neural::{clip_global_norm, copy_into_target, init_network, Batch, Mlp, OptimizerState, Q_NETWORK_DIMS};

/// Online and target Q-networks with their optimizer, replay and exploration state.
#[derive(Debug, Clone)]
pub struct Agent {
    pub algo: Algo,
    pub hp: Hyperparams,
    pub online: Mlp,
    pub target: Mlp,
    pub optimizer: OptimizerState,
    pub replay: ReplayBuffer,
    pub epsilon: f64,
    /// Gradient updates applied so far.
    pub train_steps: u64,
    /// Episodes played so far.
    pub episodes: usize,
}

impl Agent {
    /// Fresh agent with seeded weights.
    pub fn new(algo: Algo, hp: Hyperparams, seed: u64) -> Result<Self> {
        let online = init_network(&Q_NETWORK_DIMS, seed)?;
        Self::from_network(algo, hp, online)
    }

    /// Agent whose online and target networks both start at `net`, with
    /// fresh optimizer moments and an empty replay buffer.
    pub fn from_network(algo: Algo, hp: Hyperparams, net: Mlp) -> Result<Self> {
        hp.validate()?;
        let optimizer = OptimizerState::new(hp.optimizer, net.params().len(), hp.learning_rate);
        Ok(Self {
            algo,
            replay: ReplayBuffer::new(hp.replay_capacity),
            epsilon: hp.epsilon_start,
            target: net.clone(),
            online: net,
            optimizer,
            train_steps: 0,
            episodes: 0,
            hp,
        })
    }

    pub fn q_values(&self, observation: &[f64; 4]) -> Vec<f64> {
        self.online.forward_batch(observation, 1)
    }

    pub fn greedy_action(&self, observation: &[f64; 4]) -> usize {
        argmax(&self.q_values(observation))
    }

    /// One gradient update on `batch`; returns the pre-update loss.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<f64> {
        let targets = compute_targets(self.algo, batch, &self.online, &self.target, self.hp.gamma);
        let mut b = Batch::with_capacity(batch.len(), 4);
        for (t, y) in batch.iter().zip(targets) {
            b.push(&t.state, t.action, y);
        }
        let (loss, mut grads) = self.online.loss_and_gradients(&b)?;
        if self.hp.grad_clip > 0.0 {
            clip_global_norm(&mut grads, self.hp.grad_clip);
        }
        self.optimizer.step_network(&mut self.online, &grads)?;
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.hp.target_sync_period) {
            copy_into_target(&self.online, &mut self.target);
        }
        Ok(loss)
    }

    fn decay_epsilon(&mut self) {
        self.epsilon = (self.epsilon * self.hp.epsilon_decay).max(self.hp.epsilon_min);
    }
}

const SINR_FLOOR_DB: f64 = -50.0;

/// Plays one ε-greedy episode, learning after every step once the replay
/// buffer holds `min_replay` transitions. ε decays once at the end.
pub fn run_episode<R: Rng + ?Sized>(agent: &mut Agent, env: &Environment, rng: &mut R) -> Result<EpisodeRecord> {
    let mut state = env.reset(rng);
    let mut obs = env.observe(&state);
    let mut total_reward = 0.0;
    let mut steps = 0;
    let mut outages = 0;
    let mut arrived = env.has_arrived(state.position);
    let mut sinr_sum = 0.0;
    let warmup = agent.hp.min_replay.max(agent.hp.batch_size);

    while !arrived && steps < env.mission.max_steps {
        let action = select_action(&agent.q_values(&obs), agent.epsilon, rng);
        let out = env.step(&state, Action::from_index(action).expect("4 actions"), steps)?;
        let next_obs = env.observe(&out.next_state);
        agent.replay.push(Transition { state: obs, action, reward: out.reward, next_state: next_obs, done: out.arrived, outage: out.outage });
        if agent.replay.len() >= warmup {
            let batch = agent.replay.sample(agent.hp.batch_size, rng)?;
            agent.train_step(&batch)?;
        }
        total_reward += out.reward;
        steps += 1;
        outages += out.outage as usize;
        sinr_sum += out.next_state.sinr_db.max(SINR_FLOOR_DB);
        arrived = out.arrived;
        state = out.next_state;
        obs = next_obs;
        if out.done {
            break;
        }
    }

    agent.decay_epsilon();
    let record = EpisodeRecord {
        episode: agent.episodes,
        total_reward,
        steps,
        success: arrived,
        outage_count: outages,
        epsilon: agent.epsilon,
        mean_sinr_db: if steps > 0 { sinr_sum / steps as f64 } else { state.sinr_db.max(SINR_FLOOR_DB) },
    };
    agent.episodes += 1;
    Ok(record)
}

/// True once the last `window` episodes succeed at rate `>= threshold`.
pub fn training_complete(successes: &[bool], window: usize, threshold: f64) -> bool {
    if window == 0 || successes.len() < window {
        return false;
    }
    let hits = successes[successes.len() - window..].iter().filter(|&&s| s).count();
    hits as f64 / window as f64 >= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_episodes: usize,
    pub window: usize,
    pub threshold: f64,
    /// Keep playing this many episodes after convergence (0 = stop at convergence).
    pub extra_after_convergence: usize,
}

impl TrainOptions {
    pub fn from_hyperparams(hp: &Hyperparams) -> Self {
        Self { max_episodes: hp.max_episodes, window: hp.success_window, threshold: hp.success_threshold, extra_after_convergence: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub records: Vec<EpisodeRecord>,
    /// Number of episodes played when the success criterion first held.
    pub converged_at: Option<usize>,
}

/// Trains until the success criterion holds (plus any extra episodes) or
/// the episode budget runs out.
pub fn run_training<R: Rng + ?Sized>(agent: &mut Agent, env: &Environment, opts: &TrainOptions, rng: &mut R) -> Result<TrainOutcome> {
    let mut records = Vec::new();
    let mut successes = Vec::new();
    let mut converged_at = None;
    while records.len() < opts.max_episodes {
        let rec = run_episode(agent, env, rng)?;
        successes.push(rec.success);
        records.push(rec);
        if converged_at.is_none() && training_complete(&successes, opts.window, opts.threshold) {
            converged_at = Some(records.len());
        }
        if let Some(c) = converged_at {
            if records.len() >= c + opts.extra_after_convergence {
                break;
            }
        }
    }
    Ok(TrainOutcome { records, converged_at })
}

/// Greedy flight from a fixed start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub trajectory: Trajectory,
    pub report: ConstraintReport,
    pub total_reward: f64,
}

/// ε = 0 rollout of `net` from `start`.
pub fn greedy_rollout(net: &Mlp, env: &Environment, start: [f64; 2], tallest_building: f64) -> Result<Rollout> {
    let mut state: MdpState = env.state_at(start)?;
    let mut trajectory = Trajectory { waypoints: vec![Waypoint { position: start, sinr_db: state.sinr_db, outage: env.is_outage(&state) }] };
    let mut total_reward = 0.0;
    let mut step = 0;
    while !env.has_arrived(state.position) && step < env.mission.max_steps {
        let a = argmax(&net.forward_batch(&env.observe(&state), 1));
        let out = env.step(&state, Action::from_index(a).expect("4 actions"), step)?;
        total_reward += out.reward;
        trajectory.waypoints.push(Waypoint { position: out.next_state.position, sinr_db: out.next_state.sinr_db, outage: out.outage });
        state = out.next_state;
        step += 1;
        if out.done {
            break;
        }
    }
    let report = check_constraints(&trajectory, &env.mission, tallest_building);
    Ok(Rollout { trajectory, report, total_reward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cityworld::{episode_outage_count, MissionSpec, Normalization, Rect, RewardConstants};
    use crate::radiomap::RadioMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn tiny_env() -> Environment {
        let n = 20;
        let sinr = (0..n * n).map(|i| if i % n == 5 { -3.0 } else { 8.0 }).collect();
        let map = RadioMap::from_sinr([0.0, 0.0], 20.0, (n, n), 90.0, 0.0, sinr).unwrap();
        let mission = MissionSpec {
            start_region: Rect { min: [0.0, 0.0], max: [60.0, 60.0] },
            target: [210.0, 210.0],
            max_steps: 40,
            step_length: 20.0,
            ..Default::default()
        };
        Environment::new(Arc::new(map), mission, RewardConstants::default(), Normalization::default()).unwrap()
    }

    fn small_hp() -> Hyperparams {
        Hyperparams { min_replay: 64, batch_size: 16, target_sync_period: 50, ..Hyperparams::scratch() }
    }

    #[test]
    fn completion_rule() {
        assert!(training_complete(&[true; 100], 100, 0.99));
        assert!(!training_complete(&[true; 99], 100, 0.99));
        let mut h = vec![true; 100];
        h[3] = false;
        h[50] = false;
        assert!(!training_complete(&h, 100, 0.99));
        h[3] = true;
        assert!(training_complete(&h, 100, 0.99));
    }

    #[test]
    fn epsilon_schedule_and_floor() {
        let env = tiny_env();
        let mut agent = Agent::new(Algo::Ddqn, Hyperparams { epsilon_min: 0.01, ..small_hp() }, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = run_episode(&mut agent, &env, &mut rng).unwrap();
        assert_eq!(first.epsilon, 0.998);
        assert_eq!(agent.epsilon, 0.998);
        let mut agent = Agent::new(Algo::Ddqn, Hyperparams { epsilon_decay: 0.5, ..small_hp() }, 0).unwrap();
        let mut expected = 1.0f64;
        for _ in 0..12 {
            let r = run_episode(&mut agent, &env, &mut rng).unwrap();
            expected = (expected * 0.5).max(0.01);
            assert_eq!(r.epsilon, expected);
            assert!(r.epsilon >= 0.01);
            assert!(r.steps <= 40 && r.outage_count <= r.steps);
        }
    }

    #[test]
    fn target_sync_after_period() {
        let env = tiny_env();
        let mut agent = Agent::new(Algo::Dqn, small_hp(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        while agent.replay.len() < 64 {
            run_episode(&mut agent, &env, &mut rng).unwrap();
        }
        let batch = agent.replay.sample(16, &mut rng).unwrap();
        let start = agent.train_steps;
        let to_sync = 50 - (start % 50);
        for _ in 0..to_sync - 1 {
            agent.train_step(&batch).unwrap();
        }
        assert_ne!(agent.online, agent.target);
        agent.train_step(&batch).unwrap();
        assert_eq!(agent.online, agent.target);
    }

    #[test]
    fn matched_targets_give_zero_loss() {
        // terminal transitions whose reward equals the current prediction
        let mut agent = Agent::new(Algo::Ddqn, small_hp(), 2).unwrap();
        let s = [0.2, 0.3, 0.1, 0.0];
        let q = agent.q_values(&s);
        let t = Transition { state: s, action: 2, reward: q[2], next_state: s, done: true, outage: false };
        let before = agent.online.clone();
        let loss = agent.train_step(&[t; 4]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(agent.online, before);
    }

    #[test]
    fn fits_a_fixed_transition() {
        let mut agent = Agent::new(Algo::Ddqn, small_hp(), 3).unwrap();
        let t = Transition { state: [0.1, 0.9, -0.4, 1.0], action: 3, reward: 25.0, next_state: [0.1, 0.9, -0.4, 1.0], done: true, outage: true };
        for _ in 0..2000 {
            agent.train_step(&[t]).unwrap();
        }
        assert!((agent.q_values(&t.state)[3] - 25.0).abs() < 1e-2);
    }

    #[test]
    fn rollout_is_deterministic_and_bounded() {
        let env = tiny_env();
        let agent = Agent::new(Algo::Ddqn, small_hp(), 4).unwrap();
        let a = greedy_rollout(&agent.online, &env, [10.0, 10.0], 0.0).unwrap();
        let b = greedy_rollout(&agent.online, &env, [10.0, 10.0], 0.0).unwrap();
        assert_eq!(a, b);
        assert!(a.report.steps <= 40);
        assert_eq!(a.report.outage_count, episode_outage_count(&a.trajectory));
        let at_target = greedy_rollout(&agent.online, &env, [210.0, 190.0], 0.0).unwrap();
        assert_eq!(at_target.report.steps, 0);
        assert!(at_target.report.arrived);
    }

    #[test]
    fn training_is_reproducible() {
        let env = tiny_env();
        let opts = TrainOptions { max_episodes: 30, window: 10, threshold: 0.9, extra_after_convergence: 0 };
        let run = || {
            let mut agent = Agent::new(Algo::Ddqn, small_hp(), 7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            run_training(&mut agent, &env, &opts, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn vacuous_threshold_converges_at_window() {
        let env = tiny_env();
        let mut agent = Agent::new(Algo::Ddqn, small_hp(), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let opts = TrainOptions { max_episodes: 50, window: 5, threshold: 0.0, extra_after_convergence: 0 };
        let out = run_training(&mut agent, &env, &opts, &mut rng).unwrap();
        assert_eq!(out.converged_at, Some(5));
        assert_eq!(out.records.len(), 5);
    }
}
