use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{clipped_atanh, log_sum_exp};
use crate::model::{rng_from_seed, Graph, IsingModel};

/// Normalized messages `(μ(+1), μ(−1))`, one pair per directed edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageSet {
    values: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Uniform,
    Random(u64),
}

impl MessageSet {
    pub fn uniform(directed: usize) -> Self {
        MessageSet { values: vec![[0.5, 0.5]; directed] }
    }

    /// `μ(+1) ~ U(0.01, 0.99)` per directed edge.
    pub fn random(directed: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let values = (0..directed)
            .map(|_| {
                let p = rng.random_range(0.01..0.99);
                [p, 1.0 - p]
            })
            .collect();
        MessageSet { values }
    }

    /// Builds from `μ(+1)` values.
    pub fn from_plus(plus: &[f64]) -> Self {
        MessageSet { values: plus.iter().map(|&p| [p, 1.0 - p]).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, directed: usize) -> [f64; 2] {
        self.values[directed]
    }

    pub fn set(&mut self, directed: usize, pair: [f64; 2]) {
        self.values[directed] = pair;
    }

    pub fn plus(&self, directed: usize) -> f64 {
        self.values[directed][0]
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Largest `|μ(+1) − μ'(+1)|` across directed edges.
    pub fn max_diff(&self, other: &MessageSet) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_reparam(&self) -> ReparamMessages {
        ReparamMessages(self.values.iter().map(|p| clipped_atanh(p[0] - p[1])).collect())
    }

    pub fn from_reparam(nu: &ReparamMessages) -> Self {
        MessageSet { values: nu.0.iter().map(|&v| reparam_pair(v)).collect() }
    }
}

pub fn init_messages(graph: &Graph, mode: InitMode) -> MessageSet {
    match mode {
        InitMode::Uniform => MessageSet::uniform(graph.directed_count()),
        InitMode::Random(seed) => MessageSet::random(graph.directed_count(), seed),
    }
}

/// `(μ(+1), μ(−1))` with `μ(+1) − μ(−1) = tanh ν`.
pub fn reparam_pair(nu: f64) -> [f64; 2] {
    let t = nu.tanh();
    [(1.0 + t) / 2.0, (1.0 - t) / 2.0]
}

/// One real `ν = arctanh(μ(+1) − μ(−1))` per directed edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReparamMessages(pub Vec<f64>);

impl ReparamMessages {
    pub fn zeros(directed: usize) -> Self {
        ReparamMessages(vec![0.0; directed])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_diff(&self, other: &ReparamMessages) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Log-domain cavity product at the source of `directed`:
/// `θ_i x + Σ_{k∈∂i\j} ln μ_{k→i}(x)` for `x = +1, −1`.
fn cavity_log(model: &IsingModel, messages: &MessageSet, directed: usize) -> [f64; 2] {
    let graph = model.graph();
    let (i, j) = graph.endpoints(directed);
    let theta = model.field(i);
    let mut acc = [theta, -theta];
    for nb in graph.neighbors(i) {
        if nb.node == j {
            continue;
        }
        let m = graph.directed_index(nb.edge, nb.node);
        let [p, q] = messages.get(m);
        acc[0] += p.ln();
        acc[1] += q.ln();
    }
    acc
}

/// Sum-product update of `i → j`, normalized.
pub fn update_message(model: &IsingModel, messages: &MessageSet, directed: usize) -> [f64; 2] {
    let [a, b] = cavity_log(model, messages, directed);
    let j = model.coupling(directed / 2);
    let plus = log_sum_exp(&[j + a, -j + b]);
    let minus = log_sum_exp(&[-j + a, j + b]);
    let d = plus - minus;
    [crate::math::logistic(d), crate::math::logistic(-d)]
}

/// `h_{i\j} = θ_i + Σ_{k∈∂i\j} ν_{k→i}`.
pub fn cavity_field(model: &IsingModel, nu: &ReparamMessages, directed: usize) -> f64 {
    let graph = model.graph();
    let (i, j) = graph.endpoints(directed);
    model.field(i)
        + graph
            .neighbors(i)
            .iter()
            .filter(|nb| nb.node != j)
            .map(|nb| nu.0[graph.directed_index(nb.edge, nb.node)])
            .sum::<f64>()
}

/// `ν' = arctanh(tanh J · tanh h_{i\j})`.
pub fn reparam_update(model: &IsingModel, nu: &ReparamMessages, directed: usize) -> f64 {
    let h = cavity_field(model, nu, directed);
    clipped_atanh(model.coupling(directed / 2).tanh() * h.tanh())
}

/// Full reparameterized BP map.
pub fn reparam_map(model: &IsingModel, nu: &ReparamMessages) -> ReparamMessages {
    ReparamMessages((0..nu.len()).map(|m| reparam_update(model, nu, m)).collect())
}
