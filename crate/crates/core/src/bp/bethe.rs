use serde::{Deserialize, Serialize};

use crate::math::log_sum_exp;
use crate::model::IsingModel;

use super::messages::{MessageSet, ReparamMessages};

/// BP beliefs with the Bethe energy terms they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pseudomarginals {
    /// `P̃_i(+1)` per node.
    pub singleton: Vec<f64>,
    /// `P̃_ij(x_i, x_j)` per edge, index 0 for `+1`.
    pub pairwise: Vec<[[f64; 2]; 2]>,
    pub energy: f64,
    pub entropy: f64,
    pub free_energy: f64,
    pub log_partition: f64,
}

impl Pseudomarginals {
    /// `m_i = 2 P̃_i(+1) − 1`.
    pub fn means(&self) -> Vec<f64> {
        self.singleton.iter().map(|p| 2.0 * p - 1.0).collect()
    }

    /// `E[x_i x_j]` under each pairwise belief.
    pub fn correlations(&self) -> Vec<f64> {
        self.pairwise.iter().map(|t| t[0][0] + t[1][1] - t[0][1] - t[1][0]).collect()
    }

    /// Largest violation of `Σ_{x_j} P̃_ij(x_i, x_j) = P̃_i(x_i)`.
    pub fn consistency_gap(&self, model: &IsingModel) -> f64 {
        model
            .graph()
            .edges()
            .iter()
            .zip(&self.pairwise)
            .map(|(&(u, v), t)| {
                let gu = (t[0][0] + t[0][1] - self.singleton[u]).abs();
                let gv = (t[0][0] + t[1][0] - self.singleton[v]).abs();
                gu.max(gv)
            })
            .fold(0.0, f64::max)
    }
}

const SPINS: [f64; 2] = [1.0, -1.0];

pub fn pseudomarginals(model: &IsingModel, messages: &MessageSet) -> Pseudomarginals {
    let logs: Vec<[f64; 2]> = messages.values().iter().map(|p| [p[0].ln(), p[1].ln()]).collect();
    from_log_messages(model, &logs)
}

/// Same as [`pseudomarginals`], without the round trip through `μ`.
pub fn pseudomarginals_reparam(model: &IsingModel, nu: &ReparamMessages) -> Pseudomarginals {
    let logs: Vec<[f64; 2]> = nu
        .0
        .iter()
        .map(|&v| {
            let z = log_sum_exp(&[v, -v]);
            [v - z, -v - z]
        })
        .collect();
    from_log_messages(model, &logs)
}

fn normalize_log<const K: usize>(mut v: [f64; K]) -> [f64; K] {
    let z = log_sum_exp(&v);
    v.iter_mut().for_each(|x| *x -= z);
    v
}

fn entropy_term(log_p: f64) -> f64 {
    let p = log_p.exp();
    if p > 0.0 {
        p * log_p
    } else {
        0.0
    }
}

fn from_log_messages(model: &IsingModel, logs: &[[f64; 2]]) -> Pseudomarginals {
    let graph = model.graph();
    let n = graph.node_count();
    // θ_i x + Σ_{k∈∂i} ln μ_{k→i}(x)
    let full: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = model.field(i);
            let mut acc = [t, -t];
            for m in graph.incoming(i) {
                acc[0] += logs[m][0];
                acc[1] += logs[m][1];
            }
            acc
        })
        .collect();

    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut singleton = Vec::with_capacity(n);
    for i in 0..n {
        let lb = normalize_log(full[i]);
        singleton.push(lb[0].exp());
        let t = model.field(i);
        energy -= t * (lb[0].exp() - lb[1].exp());
        let h: f64 = lb.iter().map(|&l| entropy_term(l)).sum();
        entropy += (graph.degree(i) as f64 - 1.0) * h;
    }

    let mut pairwise = Vec::with_capacity(graph.edge_count());
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let j = model.coupling(e);
        // strip the message each endpoint receives over this edge
        let into_u = graph.directed_index(e, v);
        let into_v = graph.directed_index(e, u);
        let mut lt = [0.0; 4];
        for (a, &xa) in SPINS.iter().enumerate() {
            for (b, &xb) in SPINS.iter().enumerate() {
                lt[2 * a + b] =
                    j * xa * xb + full[u][a] - logs[into_u][a] + full[v][b] - logs[into_v][b];
            }
        }
        let lt = normalize_log(lt);
        let table = [[lt[0].exp(), lt[1].exp()], [lt[2].exp(), lt[3].exp()]];
        energy -= j * (table[0][0] + table[1][1] - table[0][1] - table[1][0]);
        entropy -= lt.iter().map(|&l| entropy_term(l)).sum::<f64>();
        pairwise.push(table);
    }

    let free_energy = energy - entropy;
    Pseudomarginals { singleton, pairwise, energy, entropy, free_energy, log_partition: -free_energy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::logistic;
    use crate::model::{build_grid, make_ising, ParamSpec};

    #[test]
    fn factorized_model_beliefs() {
        let g = build_grid(3, 3, false).unwrap();
        let m = make_ising(
            g.clone(),
            &ParamSpec::Uniform(0.0),
            &ParamSpec::UniformRandom { lo: -1.0, hi: 1.0 },
            2,
        )
        .unwrap();
        let b = pseudomarginals(&m, &MessageSet::uniform(g.directed_count()));
        for (p, t) in b.singleton.iter().zip(m.fields()) {
            assert!((p - logistic(2.0 * t)).abs() < 1e-15);
        }
        // Bethe is exact for a factorized model
        let log_z: f64 = m.fields().iter().map(|t| (2.0 * t.cosh()).ln()).sum();
        assert!((b.log_partition - log_z).abs() < 1e-12);
    }

    #[test]
    fn symmetric_beliefs_have_maximal_entropy() {
        let g = build_grid(3, 3, false).unwrap();
        let m = make_ising(g.clone(), &ParamSpec::Uniform(0.0), &ParamSpec::Uniform(0.0), 0).unwrap();
        let b = pseudomarginals(&m, &MessageSet::uniform(g.directed_count()));
        assert!(b.singleton.iter().all(|&p| (p - 0.5).abs() < 1e-15));
        assert!(b.pairwise.iter().flatten().flatten().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((b.entropy - 9.0 * 2f64.ln()).abs() < 1e-12);
        assert!((b.free_energy - (b.energy - b.entropy)).abs() < 1e-15);
    }

    #[test]
    fn reparam_and_message_forms_agree() {
        let g = build_grid(3, 4, false).unwrap();
        let spec = ParamSpec::UniformRandom { lo: -1.5, hi: 1.5 };
        let m = make_ising(g.clone(), &spec, &spec, 9).unwrap();
        let msgs = MessageSet::random(g.directed_count(), 1);
        let a = pseudomarginals(&m, &msgs);
        let b = pseudomarginals_reparam(&m, &msgs.to_reparam());
        assert!((a.free_energy - b.free_energy).abs() < 1e-10);
        for (x, y) in a.singleton.iter().zip(&b.singleton) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
