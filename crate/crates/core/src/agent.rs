//! Single-thread advantage actor-critic training over the placement
//! environment, with optional heuristic shaping of the pre-softmax scores.
//!
//! One update per episode: Monte-Carlo returns, advantage weighting of the
//! log-probabilities of the executed policy, squared-error critic regression,
//! gradients clipped at a global norm and applied with plain SGD. When
//! shaping is on, the shaped scores feed both the sampling distribution and
//! the loss, so the gradient is that of the policy actually executed.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Env, EpisodeRecord};
use crate::heuristic::heu_select;
use crate::load::{generate_events, EventKind, LoadError};
use crate::neural::{
    actor_backward, actor_forward, critic_backward, critic_forward, log_softmax,
    normalized_adjacency, sample_categorical, save_checkpoint, softmax_policy, ActorGrads,
    ActorParams, CheckpointError, CriticGrads, CriticParams, NetDims, Tape,
};
use crate::scenario::Scenario;
use crate::slice::{make_nspr, Nspr, PlacementRecord};
use crate::topology::{build_reference_psn, Psn};

/// Learning and shaping knobs. Defaults are the tuned values for the
/// reference substrate; reduced scenarios ship their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub xi: f64,
    pub beta: f64,
    pub eta: f64,
    pub entropy_coef: f64,
    pub grad_clip: f64,
    /// Heuristic shaping on/off. Only the `hadrl` agent reads it; with
    /// shaping disabled, `hadrl` follows the exact `drl` trajectory.
    pub shaping: bool,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            actor_lr: 5e-5,
            critic_lr: 1.25e-3,
            gamma: 0.99,
            xi: 1.0,
            beta: 1.0,
            eta: 0.0,
            entropy_coef: 0.0,
            grad_clip: 1.0,
            shaping: true,
        }
    }
}

pub const EVALUATED_BETAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

impl Hyper {
    /// Hard errors only; a beta outside the evaluated grid is a warning.
    pub fn validate(&self) -> Result<Vec<String>, Vec<String>> {
        let mut errs = Vec::new();
        let mut warnings = Vec::new();
        if !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) {
            errs.push("hyper: learning rates must be > 0".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            errs.push("hyper: gamma must be in (0, 1]".into());
        }
        if self.eta < 0.0 {
            errs.push("hyper: eta must be >= 0 (fractional beta on a negative base is undefined)".into());
        }
        if !(self.grad_clip > 0.0) {
            errs.push("hyper: grad_clip must be > 0".into());
        }
        if self.entropy_coef < 0.0 {
            errs.push("hyper: entropy_coef must be >= 0".into());
        }
        if !EVALUATED_BETAS.iter().any(|&b| b == self.beta) {
            warnings.push(format!(
                "hyper: beta {} is outside the evaluated grid {:?}",
                self.beta, EVALUATED_BETAS
            ));
        }
        if errs.is_empty() {
            Ok(warnings)
        } else {
            Err(errs)
        }
    }
}

/// Normalization denominators: the largest per-node maxima of each resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    pub cpu: f64,
    pub ram: f64,
    pub bw: f64,
}

impl FeatureScale {
    pub fn from_psn(psn: &Psn) -> Self {
        fn largest(it: impl Iterator<Item = u64>) -> f64 {
            match it.max() {
                Some(m) if m > 0 => m as f64,
                _ => 1.0,
            }
        }
        FeatureScale {
            cpu: largest(psn.nodes().iter().map(|n| n.max_cpu)),
            ram: largest(psn.nodes().iter().map(|n| n.max_ram)),
            bw: largest(psn.nodes().iter().map(|n| n.max_bw)),
        }
    }
}

/// Feature bundle in [0, 1]: resource channels divided by the largest
/// per-node maximum, the placement tracker and the outstanding count by the
/// request's VNF count.
pub fn encode(state: &crate::env::State, scale: &FeatureScale) -> (Array2<f64>, Array1<f64>) {
    let n = state.cap_cpu.len();
    let vnfs = state.vnf_count as f64;
    let mut node_features = Array2::zeros((n, 4));
    for i in 0..n {
        node_features[[i, 0]] = state.cap_cpu[i] as f64 / scale.cpu;
        node_features[[i, 1]] = state.cap_ram[i] as f64 / scale.ram;
        node_features[[i, 2]] = state.cap_bw[i] as f64 / scale.bw;
        node_features[[i, 3]] = state.chi[i] as f64 / vnfs;
    }
    let nspr_features = Array1::from(vec![
        state.req_cpu as f64 / scale.cpu,
        state.req_ram as f64 / scale.ram,
        state.req_bw as f64 / scale.bw,
        state.remaining as f64 / vnfs,
    ]);
    (node_features, nspr_features)
}

/// Index of the largest score, smallest index on ties.
pub fn argmax(scores: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Boosts the preferred action's score toward (and past, for positive `eta`)
/// the current maximum: only index `a_star` changes, by `xi *
/// (max(scores) - scores[a_star] + eta)^beta`.
pub fn shape(scores: &Array1<f64>, a_star: usize, xi: f64, beta: f64, eta: f64) -> Array1<f64> {
    let a_bar = argmax(scores);
    let mut shaped = scores.clone();
    let h = if a_bar == a_star {
        eta
    } else {
        scores[a_bar] - scores[a_star] + eta
    };
    shaped[a_star] += xi * h.powf(beta);
    shaped
}

/// Samples from the softmax of the (optionally shaped) scores. Returns the
/// action, its log-probability under the executed policy, and the policy.
pub fn select_action<R: Rng>(
    scores: &Array1<f64>,
    a_star: Option<usize>,
    hyper: &Hyper,
    rng: &mut R,
) -> (usize, f64, Array1<f64>) {
    let effective = match a_star {
        Some(star) => shape(scores, star, hyper.xi, hyper.beta, hyper.eta),
        None => scores.clone(),
    };
    let probs = softmax_policy(&effective);
    let action = sample_categorical(&probs, rng);
    let logp = log_softmax(&effective)[action];
    (action, logp, probs)
}

/// One decision of a finished episode, as consumed by the update.
///
/// The shaping boost is recorded as the additive bias it was at sampling
/// time. The loss reads the executed (shaped) policy, but the boost value is
/// data, not a function of the parameters: differentiating through it would
/// credit successful heuristic actions to raising the un-executed argmax and
/// collapse the boost under failure bursts.
#[derive(Debug, Clone)]
pub struct ActorStepSample {
    pub node_features: Array2<f64>,
    pub nspr_features: Array1<f64>,
    pub action: usize,
    pub advantage: f64,
    /// `(index, additive boost)` applied to the scores at sampling time;
    /// `None` trains the plain policy.
    pub boost: Option<(usize, f64)>,
}

fn actor_step_loss_grad(
    actor: &ActorParams,
    a_hat: &Array2<f64>,
    step: &ActorStepSample,
    entropy_coef: f64,
) -> (f64, Option<(Tape, Array1<f64>)>) {
    let (scores, tape) = actor_forward(actor, a_hat, &step.node_features, &step.nspr_features);
    let effective = match step.boost {
        Some((index, value)) => {
            let mut shifted = scores;
            shifted[index] += value;
            shifted
        }
        None => scores,
    };
    let probs = softmax_policy(&effective);
    let logp = log_softmax(&effective);
    let entropy = -probs
        .iter()
        .zip(logp.iter())
        .map(|(&p, &lp)| if p > 0.0 { p * lp } else { 0.0 })
        .sum::<f64>();
    let loss = -logp[step.action] * step.advantage - entropy_coef * entropy;

    // additive bias: d effective / d scores is the identity
    let mut d_scores = probs.mapv(|p| p * step.advantage);
    d_scores[step.action] -= step.advantage;
    if entropy_coef != 0.0 {
        for i in 0..d_scores.len() {
            d_scores[i] += entropy_coef * probs[i] * (logp[i] + entropy);
        }
    }
    (loss, Some((tape, d_scores)))
}

/// Episode actor loss: advantage-weighted negative log-likelihood of the
/// executed policy minus the entropy bonus, summed over steps.
pub fn actor_episode_loss(
    actor: &ActorParams,
    a_hat: &Array2<f64>,
    steps: &[ActorStepSample],
    entropy_coef: f64,
) -> f64 {
    steps
        .iter()
        .map(|s| actor_step_loss_grad(actor, a_hat, s, entropy_coef).0)
        .sum()
}

pub fn actor_episode_grads(
    actor: &ActorParams,
    a_hat: &Array2<f64>,
    steps: &[ActorStepSample],
    entropy_coef: f64,
) -> (f64, ActorGrads) {
    let mut grads = ActorGrads::zeros_like(actor);
    let mut loss = 0.0;
    for step in steps {
        let (l, back) = actor_step_loss_grad(actor, a_hat, step, entropy_coef);
        loss += l;
        if let Some((tape, d_scores)) = back {
            actor_backward(actor, a_hat, &tape, &d_scores, &mut grads);
        }
    }
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct CriticStepSample {
    pub node_features: Array2<f64>,
    pub nspr_features: Array1<f64>,
    /// Monte-Carlo return from this step.
    pub target: f64,
}

/// Episode critic loss: squared regression error against the returns.
pub fn critic_episode_loss(
    critic: &CriticParams,
    a_hat: &Array2<f64>,
    steps: &[CriticStepSample],
) -> f64 {
    steps
        .iter()
        .map(|s| {
            let (v, _) = critic_forward(critic, a_hat, &s.node_features, &s.nspr_features);
            (s.target - v) * (s.target - v)
        })
        .sum()
}

pub fn critic_episode_grads(
    critic: &CriticParams,
    a_hat: &Array2<f64>,
    steps: &[CriticStepSample],
) -> (f64, CriticGrads) {
    let mut grads = CriticGrads::zeros_like(critic);
    let mut loss = 0.0;
    for s in steps {
        let (v, tape) = critic_forward(critic, a_hat, &s.node_features, &s.nspr_features);
        loss += (s.target - v) * (s.target - v);
        critic_backward(critic, a_hat, &tape, -2.0 * (s.target - v), &mut grads);
    }
    (loss, grads)
}

/// Discounted returns from a reward sequence.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut returns = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    returns
}

pub struct EpisodeResult {
    pub accepted: bool,
    pub reward_raw: f64,
    pub reward: f64,
    pub record: Option<PlacementRecord>,
    pub log: EpisodeRecord,
}

/// Rolls out one request with the learned policy and applies one gradient
/// step to each network.
#[allow(clippy::too_many_arguments)]
pub fn train_episode<R: Rng>(
    env: &mut Env,
    nspr: Nspr,
    class_name: &str,
    actor: &mut ActorParams,
    critic: &mut CriticParams,
    a_hat: &Array2<f64>,
    scale: &FeatureScale,
    hyper: &Hyper,
    rng: &mut R,
) -> EpisodeResult {
    let nspr_id = nspr.id;
    let mut state = env.reset(nspr);
    let mut features: Vec<(Array2<f64>, Array1<f64>)> = Vec::new();
    let mut actions: Vec<usize> = Vec::new();
    let mut boosts: Vec<Option<(usize, f64)>> = Vec::new();
    let mut rewards: Vec<f64> = Vec::new();
    let mut deltas: Vec<(f64, f64, f64)> = Vec::new();
    let (mut reward_raw, mut accepted) = (0.0, false);
    loop {
        let (node_features, nspr_features) = encode(&state, scale);
        let (scores, _) = actor_forward(actor, a_hat, &node_features, &nspr_features);
        let boost = if hyper.shaping {
            let star = heu_select(&state, env.psn());
            let shaped = shape(&scores, star, hyper.xi, hyper.beta, hyper.eta);
            Some((star, shaped[star] - scores[star]))
        } else {
            None
        };
        let (action, _logp, _probs) =
            select_action(&scores, boost.map(|(star, _)| star), hyper, rng);
        let outcome = env.step(action);
        features.push((node_features, nspr_features));
        actions.push(action);
        boosts.push(boost);
        rewards.push(outcome.reward);
        deltas.push((
            outcome.delta.acceptance,
            outcome.delta.load_balance,
            outcome.delta.consumption,
        ));
        if outcome.done {
            reward_raw = outcome.reward_raw;
            accepted = outcome.accepted;
            break;
        }
        state = outcome.state.expect("running episode has a state");
    }
    let returns = discounted_returns(&rewards, hyper.gamma);

    let critic_steps: Vec<CriticStepSample> = features
        .iter()
        .zip(&returns)
        .map(|((x, nf), &target)| CriticStepSample {
            node_features: x.clone(),
            nspr_features: nf.clone(),
            target,
        })
        .collect();
    let values: Vec<f64> = critic_steps
        .iter()
        .map(|s| critic_forward(critic, a_hat, &s.node_features, &s.nspr_features).0)
        .collect();

    let actor_steps: Vec<ActorStepSample> = features
        .into_iter()
        .zip(&actions)
        .zip(&boosts)
        .zip(returns.iter().zip(&values))
        .map(|((((x, nf), &action), &boost), (&ret, &v))| ActorStepSample {
            node_features: x,
            nspr_features: nf,
            action,
            advantage: ret - v,
            boost,
        })
        .collect();

    let (_, mut actor_grads) = actor_episode_grads(actor, a_hat, &actor_steps, hyper.entropy_coef);
    actor_grads.clip_global_norm(hyper.grad_clip);
    crate::neural::apply_actor_grads(actor, &actor_grads, hyper.actor_lr);

    let (_, mut critic_grads) = critic_episode_grads(critic, a_hat, &critic_steps);
    critic_grads.clip_global_norm(hyper.grad_clip);
    crate::neural::apply_critic_grads(critic, &critic_grads, hyper.critic_lr);

    let reward = *rewards.last().expect("episode has at least one step");
    EpisodeResult {
        accepted,
        reward_raw,
        reward,
        record: env.finish(),
        log: EpisodeRecord {
            nspr_id,
            class: class_name.to_string(),
            actions,
            deltas,
            reward_raw,
            reward,
            accepted,
        },
    }
}

/// Rolls out one request with the deterministic heuristic, no learning.
pub fn heu_episode(env: &mut Env, nspr: Nspr, class_name: &str) -> EpisodeResult {
    let nspr_id = nspr.id;
    let mut state = env.reset(nspr);
    let mut actions = Vec::new();
    let mut deltas = Vec::new();
    let (reward_raw, reward, accepted) = loop {
        let action = heu_select(&state, env.psn());
        let outcome = env.step(action);
        actions.push(action);
        deltas.push((
            outcome.delta.acceptance,
            outcome.delta.load_balance,
            outcome.delta.consumption,
        ));
        if outcome.done {
            break (outcome.reward_raw, outcome.reward, outcome.accepted);
        }
        state = outcome.state.expect("running episode has a state");
    };
    EpisodeResult {
        accepted,
        reward_raw,
        reward,
        record: env.finish(),
        log: EpisodeRecord {
            nspr_id,
            class: class_name.to_string(),
            actions,
            deltas,
            reward_raw,
            reward,
            accepted,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentKind {
    Heu,
    Drl,
    Hadrl,
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Heu => "heu",
            AgentKind::Drl => "drl",
            AgentKind::Hadrl => "hadrl",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heu" => Ok(AgentKind::Heu),
            "drl" => Ok(AgentKind::Drl),
            "hadrl" => Ok(AgentKind::Hadrl),
            other => Err(format!("unknown agent kind '{other}' (heu|drl|hadrl)")),
        }
    }
}

/// Per-phase acceptance statistics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStat {
    pub phase: u64,
    pub accepted: u32,
    pub episodes: u32,
    pub load_target: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("load model: {0}")]
    Load(#[from] LoadError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("ledger integrity: {0}")]
    Ledger(#[from] crate::topology::LedgerError),
}

/// Optional outputs of a run: periodic checkpoints and a per-episode sink.
#[derive(Default)]
pub struct RunHooks<'a> {
    pub checkpoint_dir: Option<std::path::PathBuf>,
    pub on_episode: Option<&'a mut dyn FnMut(&EpisodeRecord)>,
}

pub struct RunResult {
    pub phases: Vec<PhaseStat>,
    pub episodes: u64,
    pub accepted: u64,
    pub actor: Option<ActorParams>,
    pub critic: Option<CriticParams>,
}

/// Seeds for the independent random streams of one run.
fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng, ChaCha8Rng) {
    let mut events = ChaCha8Rng::seed_from_u64(seed);
    events.set_stream(1);
    let mut init = ChaCha8Rng::seed_from_u64(seed);
    init.set_stream(2);
    let mut policy = ChaCha8Rng::seed_from_u64(seed);
    policy.set_stream(3);
    (events, init, policy)
}

/// Processes `budget` arrivals against the scenario's substrate,
/// interleaving departures, recording per-phase acceptance and (for the
/// learning agents) updating the networks once per episode. Rejected
/// requests never abort the run. Checkpoints are written every phase when a
/// directory is given.
pub fn run_training(
    scenario: &Scenario,
    kind: AgentKind,
    budget: u64,
    seed: u64,
    hooks: &mut RunHooks,
) -> Result<RunResult, RunError> {
    let psn = build_reference_psn(&scenario.topology);
    let scale = FeatureScale::from_psn(&psn);
    let cpu_capacity = psn.total_server_cpu();
    let mut hyper = scenario.hyper;
    hyper.shaping = kind == AgentKind::Hadrl && scenario.hyper.shaping;

    let (mut events_rng, mut init_rng, mut policy_rng) = run_rngs(seed);
    let events = generate_events(
        &scenario.schedule,
        &scenario.classes,
        cpu_capacity,
        budget,
        &mut events_rng,
    )?;

    let learner = kind != AgentKind::Heu;
    let a_hat = if learner {
        normalized_adjacency(&psn)
    } else {
        Array2::zeros((0, 0))
    };
    let dims = NetDims::standard(psn.node_count());
    let (mut actor, mut critic) = if learner {
        let mut actor = ActorParams::init(dims, &mut init_rng);
        actor.xi = hyper.xi;
        actor.beta = hyper.beta;
        actor.eta = hyper.eta;
        let critic = CriticParams::init(dims, &mut init_rng);
        (Some(actor), Some(critic))
    } else {
        (None, None)
    };

    let mut env = Env::new(psn);
    let mut active: HashMap<u64, PlacementRecord> = HashMap::new();
    let mut phases = Vec::new();
    let mut episodes = 0u64;
    let mut accepted_total = 0u64;
    let mut phase_accepted = 0u32;
    let mut phase_episodes = 0u32;

    for event in &events {
        match event.kind {
            EventKind::Departure => {
                if let Some(rec) = active.remove(&event.nspr_id) {
                    env.on_departure(&rec)?;
                }
            }
            EventKind::Arrival => {
                let class = &scenario.classes[event.class_index];
                let nspr = make_nspr(
                    class,
                    event.class_index,
                    event.nspr_id,
                    event.time,
                    event.lifespan,
                );
                let result = if learner {
                    train_episode(
                        &mut env,
                        nspr,
                        &class.name,
                        actor.as_mut().unwrap(),
                        critic.as_mut().unwrap(),
                        &a_hat,
                        &scale,
                        &hyper,
                        &mut policy_rng,
                    )
                } else {
                    heu_episode(&mut env, nspr, &class.name)
                };
                if let Some(rec) = result.record {
                    active.insert(event.nspr_id, rec);
                }
                if let Some(sink) = hooks.on_episode.as_mut() {
                    sink(&result.log);
                }
                if result.accepted {
                    phase_accepted += 1;
                    accepted_total += 1;
                }
                phase_episodes += 1;
                episodes += 1;
                if u64::from(phase_episodes) == crate::load::PHASE_SIZE {
                    let phase = phases.len() as u64;
                    let start_episode = phase * crate::load::PHASE_SIZE;
                    phases.push(PhaseStat {
                        phase,
                        accepted: phase_accepted,
                        episodes: phase_episodes,
                        load_target: scenario
                            .schedule
                            .target_at(start_episode)
                            .to_f64()
                            .unwrap_or(0.0),
                    });
                    phase_accepted = 0;
                    phase_episodes = 0;
                    if let (Some(dir), Some(a), Some(c)) =
                        (hooks.checkpoint_dir.as_ref(), actor.as_ref(), critic.as_ref())
                    {
                        save_checkpoint(&dir.join("latest.bin"), a, c, phase, episodes)?;
                    }
                }
            }
        }
    }
    if let (Some(dir), Some(a), Some(c)) =
        (hooks.checkpoint_dir.as_ref(), actor.as_ref(), critic.as_ref())
    {
        save_checkpoint(
            &dir.join("final.bin"),
            a,
            c,
            phases.len() as u64,
            episodes,
        )?;
    }
    Ok(RunResult {
        phases,
        episodes,
        accepted: accepted_total,
        actor,
        critic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::State;
    use crate::scenario::Scenario;
    use crate::topology::TopologyConfig;
    use rand::SeedableRng;

    #[test]
    fn encode_normalizes_against_largest_maxima() {
        let psn = build_reference_psn(&TopologyConfig::default());
        let scale = FeatureScale::from_psn(&psn);
        assert_eq!(scale.cpu, 50.0);
        assert_eq!(scale.ram, 300.0);
        let mut env = Env::new(psn);
        let state = env.reset(make_nspr(&crate::slice::NsprClass::volatile(), 0, 1, 0.0, 1.0));
        let (x, nf) = encode(&state, &scale);
        let first_server = env.psn().servers()[0];
        assert_eq!(x[[first_server, 0]], 1.0); // full fresh server
        assert_eq!(x[[first_server, 3]], 0.0); // nothing placed yet
        assert_eq!(nf[0], 0.5); // 25 / 50
        assert_eq!(nf[3], 1.0); // all five VNFs outstanding
        assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    fn dummy_state(n: usize) -> State {
        State {
            cap_cpu: vec![50; n],
            cap_ram: vec![300; n],
            cap_bw: vec![10_000; n],
            chi: vec![0; n],
            vnf_index: 1,
            remaining: 5,
            vnf_count: 5,
            req_cpu: 25,
            req_ram: 150,
            req_bw: 2_000,
            prev_vl_bw: 0,
            prev_host: None,
        }
    }

    #[test]
    fn shaping_hand_values() {
        let z = Array1::from(vec![1.0, 0.2, -0.3]);
        let shaped = shape(&z, 1, 1.0, 1.0, 0.0);
        assert_eq!(shaped, Array1::from(vec![1.0, 1.0, -0.3]));
        let shaped = shape(&z, 1, 1.0, 2.0, 0.0);
        assert!((shaped[1] - 0.84).abs() < 1e-12);
        // the argmax itself shifts only by eta^beta
        let shaped = shape(&z, 0, 1.0, 1.0, 0.0);
        assert_eq!(shaped, z);
    }

    #[test]
    fn shaping_ties_argmax_and_changes_one_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..1000 {
            let z = Array1::from_shape_fn(9, |_| rng.random_range(-5.0..5.0));
            let star = rng.random_range(0..9);
            let shaped = shape(&z, star, 1.0, 1.0, 0.0);
            let max = shaped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (shaped[star] - max).abs() < 1e-12,
                "preferred action must tie the argmax"
            );
            for i in 0..9 {
                if i != star {
                    assert_eq!(shaped[i], z[i]);
                }
            }
        }
    }

    #[test]
    fn positive_eta_makes_preferred_action_strict_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..1000 {
            let z = Array1::from_shape_fn(7, |_| rng.random_range(-5.0..5.0));
            let star = rng.random_range(0..7);
            let shaped = shape(&z, star, 1.0, 1.0, 0.25);
            let probs = softmax_policy(&shaped);
            for i in 0..7 {
                if i != star {
                    assert!(probs[star] > probs[i]);
                }
            }
        }
    }

    #[test]
    fn select_action_without_shaping_is_plain_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let hyper = Hyper::default();
        let z = Array1::from(vec![0.1, 1.4, -0.2, 0.0]);
        let (_, _, probs) = select_action(&z, None, &hyper, &mut rng);
        let direct = softmax_policy(&z);
        for (a, b) in probs.iter().zip(direct.iter()) {
            assert_eq!(a, b);
        }
        // degenerate distribution always picks its atom
        let z = Array1::from(vec![1000.0, 0.0, 0.0]);
        for _ in 0..20 {
            let (a, _, _) = select_action(&z, None, &hyper, &mut rng);
            assert_eq!(a, 0);
        }
    }

    #[test]
    fn returns_discount_correctly() {
        let r = discounted_returns(&[0.0, 0.0, 8.0], 0.5);
        assert_eq!(r, vec![2.0, 4.0, 8.0]);
        let r = discounted_returns(&[-10.0], 0.99);
        assert_eq!(r, vec![-10.0]);
    }

    #[test]
    fn zero_advantage_episode_leaves_actor_untouched() {
        let dims = NetDims::standard(4);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let actor = ActorParams::init(dims, &mut rng);
        let a_hat = crate::neural::normalized_adjacency_from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let steps = vec![ActorStepSample {
            node_features: Array2::from_elem((4, 4), 0.5),
            nspr_features: Array1::from_elem(4, 0.5),
            action: 2,
            advantage: 0.0,
            boost: None,
        }];
        let (_, grads) = actor_episode_grads(&actor, &a_hat, &steps, 0.0);
        assert_eq!(grads.global_norm(), 0.0);
    }

    #[test]
    fn runs_are_deterministic_and_unshaped_hadrl_degenerates_to_drl() {
        let mut scenario = Scenario::reduced();
        scenario.hyper.beta = 2.0;
        let run = |scenario: &Scenario, kind: AgentKind, seed: u64| {
            let mut hooks = RunHooks::default();
            run_training(scenario, kind, 600, seed, &mut hooks).unwrap()
        };
        let a = run(&scenario, AgentKind::Drl, 9);
        let b = run(&scenario, AgentKind::Drl, 9);
        assert_eq!(a.phases, b.phases);
        assert_eq!(a.actor.as_ref().unwrap(), b.actor.as_ref().unwrap());
        assert_eq!(a.critic.as_ref().unwrap(), b.critic.as_ref().unwrap());

        // with the shaping switch off, hadrl is trajectory-identical to drl
        let mut unshaped = scenario.clone();
        unshaped.hyper.shaping = false;
        let c = run(&unshaped, AgentKind::Hadrl, 9);
        assert_eq!(a.phases, c.phases);
        assert_eq!(a.actor.as_ref().unwrap(), c.actor.as_ref().unwrap());
        assert_eq!(a.critic.as_ref().unwrap(), c.critic.as_ref().unwrap());

        // with shaping on it must not be (the boost changes sampling)
        let d = run(&scenario, AgentKind::Hadrl, 9);
        assert_ne!(a.actor.as_ref().unwrap(), d.actor.as_ref().unwrap());
    }

    #[test]
    fn heu_with_ample_capacity_accepts_everything() {
        let scenario = Scenario {
            topology: TopologyConfig {
                edc_count: 0,
                cdc_count: 2,
                ccp_count: 1,
                servers_per_cdc: 10,
                servers_per_ccp: 16,
                ..TopologyConfig::default()
            },
            ..Scenario::default()
        };
        // load 0.05: far below capacity, every request must fit
        let mut s = scenario;
        s.schedule.segments[0].load = 0.05;
        let mut hooks = RunHooks::default();
        let result = run_training(&s, AgentKind::Heu, 1000, 3, &mut hooks).unwrap();
        assert_eq!(result.episodes, 1000);
        assert_eq!(result.accepted, 1000);
        assert_eq!(result.phases.len(), 2); // 1000 episodes = 2 full phases
        assert!(result.phases.iter().all(|p| p.accepted == 500));
    }

    #[test]
    fn critic_loss_decreases_on_fixed_policy_bandit() {
        // three servers, deterministic rewards per action
        let cfg = TopologyConfig {
            edc_count: 0,
            cdc_count: 0,
            ccp_count: 1,
            servers_per_ccp: 3,
            ..TopologyConfig::default()
        };
        let psn = build_reference_psn(&cfg);
        let scale = FeatureScale::from_psn(&psn);
        let a_hat = normalized_adjacency(&psn);
        let dims = NetDims::standard(psn.node_count());
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let mut critic = CriticParams::init(dims, &mut rng);
        let class = crate::slice::NsprClass {
            name: "b".into(),
            vnf_count: 1,
            ..crate::slice::NsprClass::default()
        };
        let mut env = Env::new(psn);
        let hyper = Hyper {
            critic_lr: 2e-2,
            ..Hyper::default()
        };
        let mut first_loss = None;
        let mut last_loss = 0.0;
        for ep in 0..200 {
            let state = env.reset(make_nspr(&class, 0, ep, 0.0, 1.0));
            let (x, nf) = encode(&state, &scale);
            let action = env.psn().servers()[(ep % 3) as usize];
            let out = env.step(action);
            if let Some(rec) = env.finish() {
                env.on_departure(&rec).unwrap(); // keep the substrate fresh
            }
            let steps = vec![CriticStepSample {
                node_features: x,
                nspr_features: nf,
                target: out.reward,
            }];
            let (loss, mut grads) = critic_episode_grads(&critic, &a_hat, &steps);
            grads.clip_global_norm(hyper.grad_clip);
            crate::neural::apply_critic_grads(&mut critic, &grads, hyper.critic_lr);
            if first_loss.is_none() {
                first_loss = Some(loss);
            }
            last_loss = loss;
        }
        assert!(
            last_loss < first_loss.unwrap() * 0.5,
            "critic loss did not decrease: {first_loss:?} -> {last_loss}"
        );
    }
}
