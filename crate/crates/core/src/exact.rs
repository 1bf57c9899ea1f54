//! Exact inference oracles and a Gibbs sampler.
//!
//! Pairwise tables are indexed `[a][b]` with index 0 for `+1` and 1 for
//! `-1`, where `a` belongs to the first endpoint of the edge as stored in
//! the graph.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math::logistic;
use crate::model::{grid_edges, rng_from_seed, IsingModel};

/// Largest model accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 22;
/// Largest column height accepted by [`transfer_matrix_grid`].
pub const TRANSFER_ROW_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    /// `P(x_i = +1)` per node.
    pub singleton: Vec<f64>,
    pub pairwise: Vec<[[f64; 2]; 2]>,
    pub log_partition: f64,
}

impl ExactSummary {
    fn from_moments(p_plus: Vec<f64>, p_both_plus: &[f64], model: &IsingModel, log_z: f64) -> Self {
        let pairwise = model
            .graph()
            .edges()
            .iter()
            .zip(p_both_plus)
            .map(|(&(u, v), &pp)| pair_table(p_plus[u], p_plus[v], pp))
            .collect();
        ExactSummary { singleton: p_plus, pairwise, log_partition: log_z }
    }
}

fn pair_table(pu: f64, pv: f64, pp: f64) -> [[f64; 2]; 2] {
    [[pp, pu - pp], [pv - pp, 1.0 - pu - pv + pp]]
}

/// Sums over all `2^N` configurations, visiting them in Gray-code order.
pub fn brute_force(model: &IsingModel) -> Result<ExactSummary> {
    let n = model.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit { nodes: n, limit: BRUTE_FORCE_LIMIT });
    }
    let graph = model.graph();
    let edges = graph.edges();
    let mut spins = vec![1.0; n];
    let mut log_w = model.neg_energy(&spins);
    // Accumulators are stored relative to exp(shift).
    let mut shift = log_w;
    let mut total = 0.0;
    let mut plus = vec![0.0; n];
    let mut both = vec![0.0; edges.len()];
    let states: u64 = 1 << n;
    for step in 0..states {
        if step > 0 {
            let k = step.trailing_zeros() as usize;
            let local: f64 = model.field(k)
                + graph
                    .neighbors(k)
                    .iter()
                    .map(|nb| model.coupling(nb.edge) * spins[nb.node])
                    .sum::<f64>();
            log_w -= 2.0 * spins[k] * local;
            spins[k] = -spins[k];
        }
        if log_w > shift {
            let r = (shift - log_w).exp();
            total *= r;
            plus.iter_mut().chain(both.iter_mut()).for_each(|a| *a *= r);
            shift = log_w;
        }
        let w = (log_w - shift).exp();
        total += w;
        for (acc, &s) in plus.iter_mut().zip(&spins) {
            if s > 0.0 {
                *acc += w;
            }
        }
        for (acc, &(u, v)) in both.iter_mut().zip(edges) {
            if spins[u] > 0.0 && spins[v] > 0.0 {
                *acc += w;
            }
        }
    }
    let p_plus: Vec<f64> = plus.iter().map(|a| a / total).collect();
    let p_both: Vec<f64> = both.iter().map(|a| a / total).collect();
    Ok(ExactSummary::from_moments(p_plus, &p_both, model, shift + total.ln()))
}

/// Spin of row `r` in column state `s`: bit clear is `+1`.
fn spin(s: usize, r: usize) -> f64 {
    if s >> r & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Column-by-column elimination on a non-periodic `rows × cols` grid with
/// node `(r, c)` at index `r * cols + c`. Columns hold `2^rows` states.
pub fn transfer_matrix_grid(model: &IsingModel, rows: usize, cols: usize) -> Result<ExactSummary> {
    if rows == 0 || cols == 0 || rows * cols != model.node_count() {
        return Err(invalid(format!("model is not a {rows}x{cols} grid")));
    }
    if rows > TRANSFER_ROW_LIMIT {
        return Err(Error::SizeLimit { nodes: rows, limit: TRANSFER_ROW_LIMIT });
    }
    let expected: HashSet<(usize, usize)> = grid_edges(rows, cols, false)
        .into_iter()
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    let actual: HashSet<(usize, usize)> =
        model.graph().edges().iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    if expected != actual {
        return Err(invalid(format!("model graph is not a non-periodic {rows}x{cols} grid")));
    }
    Ok(TransferMatrix::new(model, rows, cols).solve())
}

struct TransferMatrix<'a> {
    model: &'a IsingModel,
    rows: usize,
    cols: usize,
    states: usize,
}

impl<'a> TransferMatrix<'a> {
    fn new(model: &'a IsingModel, rows: usize, cols: usize) -> Self {
        TransferMatrix { model, rows, cols, states: 1 << rows }
    }

    fn node(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    fn coupling(&self, u: usize, v: usize) -> f64 {
        let g = self.model.graph();
        self.model.coupling(g.edge_between(u, v).expect("grid edge"))
    }

    /// Column potential (fields and vertical couplings), max-shifted.
    /// Returns the weights and the shift.
    fn column_weights(&self, c: usize) -> (Vec<f64>, f64) {
        let fields: Vec<f64> = (0..self.rows).map(|r| self.model.field(self.node(r, c))).collect();
        let vertical: Vec<f64> = (0..self.rows.saturating_sub(1))
            .map(|r| self.coupling(self.node(r, c), self.node(r + 1, c)))
            .collect();
        let logs: Vec<f64> = (0..self.states)
            .map(|s| {
                let f: f64 = (0..self.rows).map(|r| fields[r] * spin(s, r)).sum();
                let v: f64 = vertical
                    .iter()
                    .enumerate()
                    .map(|(r, j)| j * spin(s, r) * spin(s, r + 1))
                    .sum();
                f + v
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (logs.iter().map(|l| (l - max).exp()).collect(), max)
    }

    /// Horizontal coupling of row `r` between columns `c` and `c + 1`.
    fn horizontal(&self, r: usize, c: usize) -> f64 {
        self.coupling(self.node(r, c), self.node(r, c + 1))
    }

    /// Applies the 2×2 kernel `exp(J x x')` on bit `r`, divided by `e^{|J|}`.
    fn butterfly(&self, v: &mut [f64], r: usize, j: f64) {
        let same = if j >= 0.0 { 1.0 } else { (2.0 * j).exp() };
        let diff = if j >= 0.0 { (-2.0 * j).exp() } else { 1.0 };
        let bit = 1 << r;
        for s in 0..self.states {
            if s & bit == 0 {
                let (a, b) = (v[s], v[s | bit]);
                v[s] = same * a + diff * b;
                v[s | bit] = diff * a + same * b;
            }
        }
    }

    /// Full horizontal transfer between columns `c` and `c + 1`, skipping
    /// row `skip` if given. Returns the log factor removed.
    fn transfer(&self, v: &mut [f64], c: usize, skip: Option<usize>) -> f64 {
        let mut log_scale = 0.0;
        for r in 0..self.rows {
            if Some(r) == skip {
                continue;
            }
            let j = self.horizontal(r, c);
            self.butterfly(v, r, j);
            log_scale += j.abs();
        }
        log_scale
    }

    fn normalize(v: &mut [f64]) -> f64 {
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= sum);
        sum.ln()
    }

    fn solve(&self) -> ExactSummary {
        let (rows, cols, states) = (self.rows, self.cols, self.states);
        let weights: Vec<(Vec<f64>, f64)> = (0..cols).map(|c| self.column_weights(c)).collect();

        // forward[c] includes column c's own weight
        let mut forward: Vec<Vec<f64>> = Vec::with_capacity(cols);
        let mut log_z = 0.0;
        let mut alpha = weights[0].0.clone();
        log_z += weights[0].1 + Self::normalize(&mut alpha);
        forward.push(alpha.clone());
        for c in 1..cols {
            log_z += self.transfer(&mut alpha, c - 1, None);
            alpha.iter_mut().zip(&weights[c].0).for_each(|(a, w)| *a *= w);
            log_z += weights[c].1 + Self::normalize(&mut alpha);
            forward.push(alpha.clone());
        }

        // backward[c] excludes column c's own weight
        let mut backward = vec![vec![1.0; states]; cols];
        for c in (0..cols - 1).rev() {
            let mut beta: Vec<f64> =
                backward[c + 1].iter().zip(&weights[c + 1].0).map(|(b, w)| b * w).collect();
            self.transfer(&mut beta, c, None);
            Self::normalize(&mut beta);
            backward[c] = beta;
        }

        let n = rows * cols;
        let mut p_plus = vec![0.0; n];
        let mut p_both = vec![0.0; self.model.graph().edge_count()];
        let edge_of = |u: usize, v: usize| self.model.graph().edge_between(u, v).expect("grid edge");

        for c in 0..cols {
            let mut col: Vec<f64> = forward[c].iter().zip(&backward[c]).map(|(a, b)| a * b).collect();
            Self::normalize(&mut col);
            for r in 0..rows {
                p_plus[self.node(r, c)] =
                    col.iter().enumerate().filter(|(s, _)| spin(*s, r) > 0.0).map(|(_, p)| p).sum();
            }
            for r in 0..rows.saturating_sub(1) {
                let pp: f64 = col
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| spin(*s, r) > 0.0 && spin(*s, r + 1) > 0.0)
                    .map(|(_, p)| p)
                    .sum();
                p_both[edge_of(self.node(r, c), self.node(r + 1, c))] = pp;
            }
            if c + 1 < cols {
                let right: Vec<f64> =
                    backward[c + 1].iter().zip(&weights[c + 1].0).map(|(b, w)| b * w).collect();
                for r in 0..rows {
                    p_both[edge_of(self.node(r, c), self.node(r, c + 1))] =
                        self.horizontal_pair(&forward[c], &right, r, c);
                }
            }
        }
        ExactSummary::from_moments(p_plus, &p_both, self.model, log_z)
    }

    /// `P(x_{r,c} = +1, x_{r,c+1} = +1)` from the left and right messages.
    fn horizontal_pair(&self, left: &[f64], right: &[f64], r: usize, c: usize) -> f64 {
        let bit = 1 << r;
        let j = self.horizontal(r, c);
        let mut table = [[0.0; 2]; 2];
        for (ai, a) in [1.0, -1.0].into_iter().enumerate() {
            let mut v: Vec<f64> = left
                .iter()
                .enumerate()
                .map(|(s, &x)| if spin(s, r) == a { x } else { 0.0 })
                .collect();
            self.transfer(&mut v, c, Some(r));
            for (bi, b) in [1.0, -1.0].into_iter().enumerate() {
                let k = (j * a * b - j.abs()).exp();
                let sum: f64 = (0..self.states)
                    .filter(|s| spin(*s, r) == a)
                    .map(|s| {
                        let target = if b > 0.0 { s & !bit } else { s | bit };
                        v[s] * right[target]
                    })
                    .sum();
                table[ai][bi] = k * sum;
            }
        }
        let total: f64 = table.iter().flatten().sum();
        table[0][0] / total
    }
}

/// Heat-bath Gibbs sampling in fixed node order. Returns the empirical
/// `P(x_i = +1)` over the `sweeps - burn_in` retained sweeps.
pub fn gibbs_sample(model: &IsingModel, sweeps: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    if sweeps <= burn_in {
        return Err(invalid(format!("sweeps ({sweeps}) must exceed burn-in ({burn_in})")));
    }
    let mut rng = rng_from_seed(seed);
    let n = model.node_count();
    let graph = model.graph();
    let mut spins: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut counts = vec![0u64; n];
    for sweep in 0..sweeps {
        for i in 0..n {
            let h = model.field(i)
                + graph
                    .neighbors(i)
                    .iter()
                    .map(|nb| model.coupling(nb.edge) * spins[nb.node])
                    .sum::<f64>();
            spins[i] = if rng.random::<f64>() < logistic(2.0 * h) { 1.0 } else { -1.0 };
        }
        if sweep >= burn_in {
            for (c, &s) in counts.iter_mut().zip(&spins) {
                if s > 0.0 {
                    *c += 1;
                }
            }
        }
    }
    let kept = (sweeps - burn_in) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / kept).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, build_random, make_ising, Graph, ParamSpec};

    fn single_node(theta: f64) -> IsingModel {
        IsingModel::new(Graph::new(1, vec![]).unwrap(), vec![], vec![theta]).unwrap()
    }

    fn random_grid(rows: usize, cols: usize, k: f64, seed: u64) -> IsingModel {
        let spec = ParamSpec::UniformRandom { lo: -k, hi: k };
        make_ising(build_grid(rows, cols, false).unwrap(), &spec, &spec, seed).unwrap()
    }

    #[test]
    fn single_node_is_logistic() {
        let s = brute_force(&single_node(0.5)).unwrap();
        assert!((s.singleton[0] - 0.7310585786300049).abs() < 1e-15);
        assert!((s.log_partition - (2.0 * 0.5f64.cosh()).ln()).abs() < 1e-15);
    }

    #[test]
    fn two_node_chain_pairwise() {
        let m = IsingModel::new(Graph::new(2, vec![(0, 1)]).unwrap(), vec![1.0], vec![0.0, 0.0]).unwrap();
        let s = brute_force(&m).unwrap();
        let e = std::f64::consts::E;
        let expect = e / (2.0 * e + 2.0 / e);
        assert!((s.pairwise[0][0][0] - expect).abs() < 1e-15);
        assert!((s.pairwise[0][0][0] - 0.4404).abs() < 1e-4);
        assert!((s.singleton[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_fields_give_half() {
        let m = make_ising(
            build_random(8, 3.0, 2).unwrap(),
            &ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 },
            &ParamSpec::Uniform(0.0),
            4,
        )
        .unwrap();
        let s = brute_force(&m).unwrap();
        assert!(s.singleton.iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn brute_force_matches_direct_sum() {
        let m = random_grid(3, 3, 2.0, 9);
        let s = brute_force(&m).unwrap();
        let n = m.node_count();
        let mut logs = Vec::new();
        for state in 0..1usize << n {
            let spins: Vec<f64> = (0..n).map(|i| spin(state, i)).collect();
            logs.push(m.neg_energy(&spins));
        }
        assert!((s.log_partition - crate::math::log_sum_exp(&logs)).abs() < 1e-10);
    }

    #[test]
    fn pairwise_tables_marginalize() {
        let m = random_grid(3, 4, 1.5, 1);
        let s = brute_force(&m).unwrap();
        for (t, &(u, v)) in s.pairwise.iter().zip(m.graph().edges()) {
            assert!((t.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((t[0][0] + t[0][1] - s.singleton[u]).abs() < 1e-12);
            assert!((t[0][0] + t[1][0] - s.singleton[v]).abs() < 1e-12);
            assert!(t.iter().flatten().all(|&p| p >= -1e-15));
        }
    }

    #[test]
    fn size_limit() {
        let m = random_grid(5, 5, 1.0, 0);
        assert!(matches!(brute_force(&m), Err(Error::SizeLimit { nodes: 25, .. })));
    }

    #[test]
    fn transfer_matches_brute_force() {
        for (rows, cols, seed) in [(3, 3, 0), (2, 5, 1), (4, 4, 2), (5, 3, 3), (4, 5, 4)] {
            let m = random_grid(rows, cols, 2.0, seed);
            let a = brute_force(&m).unwrap();
            let b = transfer_matrix_grid(&m, rows, cols).unwrap();
            assert!((a.log_partition - b.log_partition).abs() < 1e-9, "{rows}x{cols}");
            for (x, y) in a.singleton.iter().zip(&b.singleton) {
                assert!((x - y).abs() < 1e-10);
            }
            for (x, y) in a.pairwise.iter().zip(&b.pairwise) {
                for (p, q) in x.iter().flatten().zip(y.iter().flatten()) {
                    assert!((p - q).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn transfer_handles_chains() {
        let edges = grid_edges(1, 6, false);
        let graph = Graph::new(6, edges).unwrap();
        let spec = ParamSpec::UniformRandom { lo: -1.0, hi: 1.0 };
        let m = make_ising(graph, &spec, &spec, 5).unwrap();
        let a = brute_force(&m).unwrap();
        let b = transfer_matrix_grid(&m, 1, 6).unwrap();
        assert!((a.log_partition - b.log_partition).abs() < 1e-12);
        for (x, y) in a.singleton.iter().zip(&b.singleton) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_survives_strong_couplings() {
        let m = make_ising(
            build_grid(10, 10, false).unwrap(),
            &ParamSpec::Uniform(5.0),
            &ParamSpec::Uniform(0.3),
            0,
        )
        .unwrap();
        let s = transfer_matrix_grid(&m, 10, 10).unwrap();
        assert!(s.log_partition.is_finite());
        assert!(s.singleton.iter().all(|p| *p > 0.99));
    }

    #[test]
    fn transfer_rejects_non_grids() {
        let m = random_grid(3, 3, 1.0, 0);
        assert!(transfer_matrix_grid(&m, 3, 4).is_err());
        let torus = make_ising(
            build_grid(3, 3, true).unwrap(),
            &ParamSpec::Uniform(1.0),
            &ParamSpec::Uniform(0.0),
            0,
        )
        .unwrap();
        assert!(transfer_matrix_grid(&torus, 3, 3).is_err());
    }

    #[test]
    fn gibbs_factorized() {
        let m = make_ising(
            build_grid(2, 3, false).unwrap(),
            &ParamSpec::Uniform(0.0),
            &ParamSpec::UniformRandom { lo: -1.0, hi: 1.0 },
            3,
        )
        .unwrap();
        let est = gibbs_sample(&m, 100_000, 100, 7).unwrap();
        for (p, t) in est.iter().zip(m.fields()) {
            assert!((p - logistic(2.0 * t)).abs() < 0.01);
        }
    }

    #[test]
    fn gibbs_matches_brute_force_on_small_grid() {
        let m = random_grid(3, 3, 1.0, 21);
        let exact = brute_force(&m).unwrap();
        let est = gibbs_sample(&m, 100_000, 1000, 3).unwrap();
        let mse: f64 = 2.0 / 9.0
            * est.iter().zip(&exact.singleton).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        assert!(mse < 1e-3, "mse {mse}");
        assert_eq!(est, gibbs_sample(&m, 100_000, 1000, 3).unwrap());
        assert!(gibbs_sample(&m, 10, 10, 0).is_err());
    }
}
