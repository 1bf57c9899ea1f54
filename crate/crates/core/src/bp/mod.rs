//! Loopy belief propagation on Ising models.
//!
//! One iteration is one pass: a synchronous sweep over every directed edge,
//! or `2|E|` single-message updates for the asynchronous schedulers. A run
//! has converged once the undamped lookahead change
//! `max_m ||BP(μ)_m − μ_m||_∞` falls below the tolerance, so the verdict
//! does not depend on the scheduler.

mod bethe;
mod messages;
mod schedule;

pub use bethe::{pseudomarginals, pseudomarginals_reparam, Pseudomarginals};
pub use messages::{
    cavity_field, init_messages, reparam_map, reparam_pair, reparam_update, update_message, InitMode,
    MessageSet, ReparamMessages,
};
pub use schedule::{
    NoiseInjection, RandomOrder, Residual, RoundRobin, ScheduleKind, Scheduler, WeightDecay,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::IsingModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BPConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
    pub schedule: ScheduleKind,
    pub seed: u64,
    pub noise_sigma: f64,
    pub noise_window: usize,
}

impl Default for BPConfig {
    fn default() -> Self {
        BPConfig {
            max_iterations: 1000,
            tolerance: 1e-8,
            damping: 0.0,
            schedule: ScheduleKind::RoundRobin,
            seed: 0,
            noise_sigma: 0.1,
            noise_window: 10,
        }
    }
}

impl BPConfig {
    pub fn with_schedule(mut self, schedule: ScheduleKind) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(invalid(format!("damping {} outside [0, 1)", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        Ok(())
    }

    fn scheduler(&self, directed: usize) -> Option<Box<dyn Scheduler>> {
        match self.schedule {
            ScheduleKind::Synchronous => None,
            ScheduleKind::RoundRobin => Some(Box::new(RoundRobin::new())),
            ScheduleKind::Random => Some(Box::new(RandomOrder::new(self.seed))),
            ScheduleKind::Rbp => Some(Box::new(Residual)),
            ScheduleKind::Wdbp => Some(Box::new(WeightDecay::new(directed))),
            ScheduleKind::Nibp => Some(Box::new(NoiseInjection::new(
                directed,
                self.noise_sigma,
                self.noise_window,
                self.seed,
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BPOutcome {
    pub messages: MessageSet,
    pub converged: bool,
    pub iterations: usize,
    /// Largest lookahead residual at the start of each pass.
    pub residual_history: Vec<f64>,
    pub pseudomarginals: Pseudomarginals,
}

/// `max_m ||BP(μ)_m − μ_m||_∞` for the undamped map.
pub fn bp_residual(model: &IsingModel, messages: &MessageSet) -> f64 {
    (0..messages.len())
        .map(|m| (update_message(model, messages, m)[0] - messages.plus(m)).abs())
        .fold(0.0, f64::max)
}

fn damp(fresh: [f64; 2], old: [f64; 2], eps: f64) -> [f64; 2] {
    if eps == 0.0 {
        fresh
    } else {
        [(1.0 - eps) * fresh[0] + eps * old[0], (1.0 - eps) * fresh[1] + eps * old[1]]
    }
}

pub fn run_bp(model: &IsingModel, config: &BPConfig, initial: &MessageSet) -> Result<BPOutcome> {
    config.validate()?;
    let directed = model.graph().directed_count();
    if initial.len() != directed {
        return Err(invalid(format!(
            "{} messages for {directed} directed edges",
            initial.len()
        )));
    }
    let (messages, converged, iterations, residual_history) = match config.scheduler(directed) {
        None => run_synchronous(model, config, initial.clone()),
        Some(s) => run_asynchronous(model, config, initial.clone(), s),
    };
    let pseudomarginals = pseudomarginals(model, &messages);
    Ok(BPOutcome { messages, converged, iterations, residual_history, pseudomarginals })
}

type RunState = (MessageSet, bool, usize, Vec<f64>);

fn run_synchronous(model: &IsingModel, config: &BPConfig, mut msgs: MessageSet) -> RunState {
    let mut history = Vec::new();
    for iter in 0..=config.max_iterations {
        let fresh: Vec<[f64; 2]> = (0..msgs.len()).map(|m| update_message(model, &msgs, m)).collect();
        let residual = fresh
            .iter()
            .zip(msgs.values())
            .map(|(f, o)| (f[0] - o[0]).abs())
            .fold(0.0, f64::max);
        history.push(residual);
        if residual < config.tolerance {
            return (msgs, true, iter, history);
        }
        if iter == config.max_iterations {
            break;
        }
        for (m, f) in fresh.into_iter().enumerate() {
            let old = msgs.get(m);
            msgs.set(m, damp(f, old, config.damping));
        }
    }
    (msgs, false, config.max_iterations, history)
}

fn run_asynchronous(
    model: &IsingModel,
    config: &BPConfig,
    mut msgs: MessageSet,
    mut scheduler: Box<dyn Scheduler>,
) -> RunState {
    let graph = model.graph();
    let n = msgs.len();
    let mut lookahead: Vec<[f64; 2]> = (0..n).map(|m| update_message(model, &msgs, m)).collect();
    let mut residual: Vec<f64> =
        lookahead.iter().zip(msgs.values()).map(|(f, o)| (f[0] - o[0]).abs()).collect();
    let mut history = Vec::new();
    for iter in 0..=config.max_iterations {
        let max = residual.iter().copied().fold(0.0, f64::max);
        history.push(max);
        if max < config.tolerance {
            return (msgs, true, iter, history);
        }
        if iter == config.max_iterations {
            break;
        }
        for _ in 0..n {
            let m = scheduler.next(&residual);
            let mut pair = damp(lookahead[m], msgs.get(m), config.damping);
            let adjusted = scheduler.adjust(m, pair[0]);
            if adjusted != pair[0] {
                pair = [adjusted, 1.0 - adjusted];
            }
            msgs.set(m, pair);
            residual[m] = (lookahead[m][0] - pair[0]).abs();
            let (i, j) = graph.endpoints(m);
            for nb in graph.neighbors(j) {
                if nb.node == i {
                    continue;
                }
                let d = graph.directed_index(nb.edge, j);
                lookahead[d] = update_message(model, &msgs, d);
                residual[d] = (lookahead[d][0] - msgs.plus(d)).abs();
            }
        }
    }
    (msgs, false, config.max_iterations, history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force;
    use crate::model::{build_complete, build_random_tree, make_ising, ParamSpec};

    const ALL: [ScheduleKind; 6] = [
        ScheduleKind::Synchronous,
        ScheduleKind::RoundRobin,
        ScheduleKind::Random,
        ScheduleKind::Rbp,
        ScheduleKind::Wdbp,
        ScheduleKind::Nibp,
    ];

    #[test]
    fn trees_are_exact_under_every_scheduler() {
        let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
        let m = make_ising(build_random_tree(10, 3).unwrap(), &spec, &spec, 3).unwrap();
        let exact = brute_force(&m).unwrap();
        for kind in ALL {
            let cfg = BPConfig { tolerance: 1e-13, ..BPConfig::default() }.with_schedule(kind);
            let out = run_bp(&m, &cfg, &MessageSet::random(m.graph().directed_count(), 1)).unwrap();
            assert!(out.converged, "{kind:?}");
            for (p, q) in out.pseudomarginals.singleton.iter().zip(&exact.singleton) {
                assert!((p - q).abs() < 1e-10, "{kind:?}");
            }
            assert!((out.pseudomarginals.log_partition - exact.log_partition).abs() < 1e-9);
        }
    }

    #[test]
    fn ferromagnetic_complete_graph_breaks_symmetry() {
        let m = make_ising(build_complete(4).unwrap(), &ParamSpec::Uniform(1.5), &ParamSpec::Uniform(0.0), 0)
            .unwrap();
        let out = run_bp(&m, &BPConfig::default(), &MessageSet::random(12, 5)).unwrap();
        assert!(out.converged);
        assert!(out.pseudomarginals.singleton.iter().all(|p| (p - 0.5).abs() > 0.1));
        assert!(out.pseudomarginals.consistency_gap(&m) < 1e-8);
    }

    #[test]
    fn antiferromagnetic_complete_graph_fails() {
        let m = make_ising(build_complete(4).unwrap(), &ParamSpec::Uniform(-1.5), &ParamSpec::Uniform(0.0), 0)
            .unwrap();
        let cfg = BPConfig::default().with_schedule(ScheduleKind::Synchronous);
        let out = run_bp(&m, &cfg, &MessageSet::random(12, 5)).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1000);
    }

    #[test]
    fn fixed_point_start_converges_immediately() {
        let m = make_ising(build_complete(4).unwrap(), &ParamSpec::Uniform(1.0), &ParamSpec::Uniform(0.0), 0)
            .unwrap();
        let out = run_bp(&m, &BPConfig::default(), &MessageSet::uniform(12)).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn config_validation() {
        let m = make_ising(build_complete(3).unwrap(), &ParamSpec::Uniform(1.0), &ParamSpec::Uniform(0.0), 0)
            .unwrap();
        let bad = BPConfig::default().with_damping(1.0);
        assert!(run_bp(&m, &bad, &MessageSet::uniform(6)).is_err());
        assert!(run_bp(&m, &BPConfig::default(), &MessageSet::uniform(4)).is_err());
    }
}
