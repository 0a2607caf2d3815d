use super::{policy::argmax, Algo, Transition};
use crate::neural::Mlp;

/// `r + γ · max_a' Q_target(s', a')`, or `r` on terminal transitions.
pub fn dqn_target(t: &Transition, target_net: &Mlp, gamma: f64) -> f64 {
    if t.done {
        return t.reward;
    }
    let q = target_net.forward_batch(&t.next_state, 1);
    t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `r + γ · Q_target(s', argmax_a' Q_online(s', a'))`, or `r` on terminal transitions.
pub fn ddqn_target(t: &Transition, online: &Mlp, target_net: &Mlp, gamma: f64) -> f64 {
    if t.done {
        return t.reward;
    }
    let a = argmax(&online.forward_batch(&t.next_state, 1));
    t.reward + gamma * target_net.forward_batch(&t.next_state, 1)[a]
}

/// Bellman targets for a whole minibatch, evaluated with batched forwards.
pub fn compute_targets(algo: Algo, batch: &[Transition], online: &Mlp, target_net: &Mlp, gamma: f64) -> Vec<f64> {
    let rows = batch.len();
    let out = target_net.output_dim();
    let next: Vec<f64> = batch.iter().flat_map(|t| t.next_state).collect();
    let q_target = target_net.forward_batch(&next, rows);
    let q_online = match algo {
        Algo::Ddqn => Some(online.forward_batch(&next, rows)),
        Algo::Dqn => None,
    };
    batch
        .iter()
        .enumerate()
        .map(|(r, t)| {
            if t.done {
                return t.reward;
            }
            let qt = &q_target[r * out..(r + 1) * out];
            let bootstrap = match &q_online {
                Some(qo) => qt[argmax(&qo[r * out..(r + 1) * out])],
                None => qt.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            t.reward + gamma * bootstrap
        })
        .collect()
}
