//! Graphs and binary pairwise (Ising) models.
//!
//! States are `x_i ∈ {+1, -1}` and the energy is
//! `E(x) = -Σ J_ij x_i x_j - Σ θ_i x_i`. Potentials are kept as `(J, θ)`
//! and only exponentiated where they are used.
//!
//! Directed edge `m` for undirected edge `e = (u, v)` is `2e` for `u → v`
//! and `2e + 1` for `v → u`; the Jacobian rows and columns follow this order.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Deterministic RNG used everywhere a seed is accepted.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub edge: usize,
}

/// Simple connected undirected graph with dense node and edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, parallel
    /// edges, out-of-range endpoints and disconnected inputs.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); node_count];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(invalid(format!("edge ({u},{v}) out of range for {node_count} nodes")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(invalid(format!("duplicate edge ({u},{v})")));
            }
            adjacency[u].push(Neighbor { node: v, edge: e });
            adjacency[v].push(Neighbor { node: u, edge: e });
        }
        let graph = Graph { node_count, edges, adjacency };
        if !graph.is_connected() {
            return Err(invalid("graph is not connected"));
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn directed_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[Neighbor] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `(from, to)` of a directed edge.
    pub fn endpoints(&self, directed: usize) -> (usize, usize) {
        let (u, v) = self.edges[directed / 2];
        if directed % 2 == 0 {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Directed index of `from → to` over undirected edge `edge`.
    pub fn directed_index(&self, edge: usize, from: usize) -> usize {
        if self.edges[edge].0 == from {
            2 * edge
        } else {
            2 * edge + 1
        }
    }

    /// Directed index of `from → to`, if the edge exists.
    pub fn directed_between(&self, from: usize, to: usize) -> Option<usize> {
        self.adjacency[from]
            .iter()
            .find(|n| n.node == to)
            .map(|n| self.directed_index(n.edge, from))
    }

    /// Undirected edge id joining `u` and `v`.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u].iter().find(|n| n.node == v).map(|n| n.edge)
    }

    /// Directed edges `k → node` for every neighbour `k`.
    pub fn incoming(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[node].iter().map(move |n| self.directed_index(n.edge, n.node))
    }

    fn is_connected(&self) -> bool {
        self.bfs_order(0).len() == self.node_count
    }

    fn bfs_order(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.node_count];
        let mut order = Vec::with_capacity(self.node_count);
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for n in &self.adjacency[u] {
                if !seen[n.node] {
                    seen[n.node] = true;
                    queue.push_back(n.node);
                }
            }
        }
        order
    }

    /// True iff the graph is 2-colourable.
    pub fn is_bipartite(&self) -> bool {
        let mut color: Vec<Option<bool>> = vec![None; self.node_count];
        for start in 0..self.node_count {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for n in &self.adjacency[u] {
                    match color[n.node] {
                        None => {
                            color[n.node] = Some(!cu);
                            queue.push_back(n.node);
                        }
                        Some(c) if c == cu => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    }

    /// True when the graph has no cycles.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.node_count
    }
}

/// Free function form used by the CLI and tests.
pub fn is_bipartite(graph: &Graph) -> bool {
    graph.is_bipartite()
}

pub(crate) fn grid_edges(rows: usize, cols: usize, periodic: bool) -> Vec<(usize, usize)> {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            } else if periodic {
                edges.push((id(r, 0), id(r, c)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            } else if periodic {
                edges.push((id(0, c), id(r, c)));
            }
        }
    }
    edges
}

/// `rows × cols` lattice; node `(r, c)` has index `r * cols + c`.
///
/// Periodic grids need both dimensions ≥ 3, otherwise the wrap-around edge
/// would duplicate an existing one.
pub fn build_grid(rows: usize, cols: usize, periodic: bool) -> Result<Graph> {
    if rows < 2 || cols < 2 {
        return Err(invalid(format!("grid dimensions must be >= 2, got {rows}x{cols}")));
    }
    if periodic && (rows < 3 || cols < 3) {
        return Err(invalid(format!("periodic grid needs dimensions >= 3, got {rows}x{cols}")));
    }
    Graph::new(rows * cols, grid_edges(rows, cols, periodic))
}

pub fn build_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(invalid(format!("complete graph needs N >= 2, got {n}")));
    }
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Graph::new(n, edges)
}

/// Connected random graph with `round(avg_degree * n / 2)` edges: a random
/// spanning tree first, then uniformly chosen extra edges.
pub fn build_random(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 || !avg_degree.is_finite() {
        return Err(invalid("random graph needs N >= 2 and a finite degree"));
    }
    let target = (avg_degree * n as f64 / 2.0).round();
    let max_edges = n * (n - 1) / 2;
    if target < (n - 1) as f64 || target > max_edges as f64 {
        return Err(invalid(format!(
            "{target} edges cannot form a connected simple graph on {n} nodes"
        )));
    }
    let target = target as usize;
    let mut rng = rng_from_seed(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(target);
    let mut present = HashSet::new();
    for k in 1..n {
        let parent = perm[rng.random_range(0..k)];
        let (u, v) = (parent.min(perm[k]), parent.max(perm[k]));
        edges.push((u, v));
        present.insert((u, v));
    }
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|e| !present.contains(e))
        .collect();
    let extra = target - edges.len();
    let (chosen, _) = candidates.partial_shuffle(&mut rng, extra);
    edges.extend_from_slice(chosen);
    Graph::new(n, edges)
}

/// Uniform random spanning tree-like graph: `n - 1` edges, each new node
/// attached to a uniformly chosen earlier one.
pub fn build_random_tree(n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("tree needs at least one node"));
    }
    let mut rng = rng_from_seed(seed);
    let edges = (1..n).map(|k| (rng.random_range(0..k), k)).collect();
    Graph::new(n, edges)
}

/// How couplings or fields are populated by [`make_ising`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSpec {
    Uniform(f64),
    Explicit(Vec<f64>),
    UniformRandom { lo: f64, hi: f64 },
}

impl ParamSpec {
    fn realize(&self, len: usize, what: &str, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            ParamSpec::Uniform(v) => Ok(vec![*v; len]),
            ParamSpec::Explicit(values) => {
                if values.len() != len {
                    return Err(invalid(format!(
                        "expected {len} {what} values, got {}",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
            ParamSpec::UniformRandom { lo, hi } => {
                if !(lo < hi) {
                    return Err(invalid(format!("empty {what} range [{lo}, {hi})")));
                }
                Ok((0..len).map(|_| rng.random_range(*lo..*hi)).collect())
            }
        }
    }
}

/// Binary pairwise model: one coupling per edge, one field per node.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    graph: Graph,
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl IsingModel {
    pub fn new(graph: Graph, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if couplings.len() != graph.edge_count() {
            return Err(invalid(format!(
                "{} couplings for {} edges",
                couplings.len(),
                graph.edge_count()
            )));
        }
        if fields.len() != graph.node_count() {
            return Err(invalid(format!(
                "{} fields for {} nodes",
                fields.len(),
                graph.node_count()
            )));
        }
        if couplings.iter().chain(&fields).any(|v| !v.is_finite()) {
            return Err(invalid("potentials must be finite"));
        }
        Ok(IsingModel { graph, couplings, fields })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn coupling(&self, edge: usize) -> f64 {
        self.couplings[edge]
    }

    pub fn field(&self, node: usize) -> f64 {
        self.fields[node]
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// All couplings strictly positive.
    pub fn is_attractive(&self) -> bool {
        self.couplings.iter().all(|&j| j > 0.0)
    }

    /// `-E(x)` for a configuration of ±1 spins.
    pub fn neg_energy(&self, spins: &[f64]) -> f64 {
        let pair: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.couplings)
            .map(|(&(u, v), j)| j * spins[u] * spins[v])
            .sum();
        let local: f64 = self.fields.iter().zip(spins).map(|(t, x)| t * x).sum();
        pair + local
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            nodes: self.graph.node_count(),
            edges: self.graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            couplings: self.couplings.clone(),
            theta: self.fields.clone(),
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let graph = Graph::new(json.nodes, json.edges.iter().map(|e| (e[0], e[1])).collect())?;
        IsingModel::new(graph, json.couplings.clone(), json.theta.clone())
    }
}

/// On-disk model format, `J` listed in the same order as `edges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(rename = "J")]
    pub couplings: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Couplings are drawn before fields from a single seeded stream.
pub fn make_ising(
    graph: Graph,
    couplings: &ParamSpec,
    fields: &ParamSpec,
    seed: u64,
) -> Result<IsingModel> {
    let mut rng = rng_from_seed(seed);
    let j = couplings.realize(graph.edge_count(), "coupling", &mut rng)?;
    let t = fields.realize(graph.node_count(), "field", &mut rng)?;
    IsingModel::new(graph, j, t)
}

/// Couplings multiplied by `zeta ∈ [0, 1]`; fields untouched.
pub fn scale_couplings(model: &IsingModel, zeta: f64) -> Result<IsingModel> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(invalid(format!("scaling factor {zeta} outside [0, 1]")));
    }
    Ok(IsingModel {
        graph: model.graph.clone(),
        couplings: model.couplings.iter().map(|j| zeta * j).collect(),
        fields: model.fields.clone(),
    })
}

/// Partition of the nodes into connected patches, each with a field sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchLayout {
    pub assignment: Vec<usize>,
    pub signs: Vec<i8>,
}

impl PatchLayout {
    /// Left half of the columns gets `+1`, right half `-1`.
    pub fn halves(rows: usize, cols: usize) -> Self {
        let split = cols / 2;
        let assignment = (0..rows * cols).map(|i| usize::from(i % cols >= split)).collect();
        PatchLayout { assignment, signs: vec![1, -1] }
    }

    pub fn single(nodes: usize, sign: i8) -> Self {
        PatchLayout { assignment: vec![0; nodes], signs: vec![sign] }
    }

    pub fn patch_count(&self) -> usize {
        self.signs.len()
    }

    pub fn sign_of(&self, node: usize) -> f64 {
        f64::from(self.signs[self.assignment[node]])
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        if self.assignment.len() != graph.node_count() {
            return Err(invalid("patch assignment does not cover every node"));
        }
        if self.signs.iter().any(|s| s.abs() != 1) {
            return Err(invalid("patch signs must be +1 or -1"));
        }
        for p in 0..self.signs.len() {
            let members: Vec<usize> =
                (0..graph.node_count()).filter(|&i| self.assignment[i] == p).collect();
            let Some(&start) = members.first() else {
                return Err(invalid(format!("patch {p} is empty")));
            };
            let mut seen = vec![false; graph.node_count()];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut reached = 0;
            while let Some(u) = queue.pop_front() {
                reached += 1;
                for n in graph.neighbors(u) {
                    if !seen[n.node] && self.assignment[n.node] == p {
                        seen[n.node] = true;
                        queue.push_back(n.node);
                    }
                }
            }
            if reached != members.len() {
                return Err(invalid(format!("patch {p} is not connected")));
            }
        }
        if self.assignment.iter().any(|&p| p >= self.signs.len()) {
            return Err(invalid("patch id without a sign"));
        }
        Ok(())
    }

    /// Edges whose endpoints lie in different patches.
    pub fn boundary_edges(&self, graph: &Graph) -> Vec<usize> {
        graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| self.assignment[u] != self.assignment[v])
            .map(|(e, _)| e)
            .collect()
    }
}

/// Grid model with uniform coupling `j` and fields `±theta` per patch sign.
pub fn make_patch_model(
    rows: usize,
    cols: usize,
    layout: &PatchLayout,
    j: f64,
    theta: f64,
) -> Result<IsingModel> {
    if !(j > 0.0) || !(theta > 0.0) {
        return Err(invalid("patch models need J > 0 and theta > 0"));
    }
    let graph = build_grid(rows, cols, false)?;
    layout.validate(&graph)?;
    let fields = (0..graph.node_count()).map(|i| layout.sign_of(i) * theta).collect();
    let couplings = vec![j; graph.edge_count()];
    IsingModel::new(graph, couplings, fields)
}
