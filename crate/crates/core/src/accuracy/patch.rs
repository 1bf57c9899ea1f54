//! Patch potential models: effective fields on patch boundaries, fixed
//! point classes, region boundaries and the global-minimum bound.

use serde::{Deserialize, Serialize};

use crate::bp::{run_bp, BPConfig, MessageSet, Pseudomarginals, ReparamMessages};
use crate::error::{invalid, Error, Result};
use crate::fixedpoints::{enumerate_by_bp, enumerate_fixed_points, polish, FixedPoint, BIASED_START};
use crate::math::clipped_atanh;
use crate::model::{Graph, IsingModel, PatchLayout};

/// `θ̃_i = θ_i + Σ_{j ∈ ∂i outside the patch of i} arctanh(2 μ_{j→i}(+1) − 1)`.
pub fn effective_field(model: &IsingModel, messages: &MessageSet, node: usize, layout: &PatchLayout) -> f64 {
    let graph = model.graph();
    let own = layout.assignment[node];
    model.field(node)
        + graph
            .neighbors(node)
            .iter()
            .filter(|nb| layout.assignment[nb.node] != own)
            .map(|nb| {
                let m = graph.directed_index(nb.edge, nb.node);
                clipped_atanh(2.0 * messages.plus(m) - 1.0)
            })
            .sum::<f64>()
}

/// The model restricted to one patch, with effective fields in place of
/// the outside messages. Also returns the original index of each node.
pub fn patch_submodel(
    model: &IsingModel,
    messages: &MessageSet,
    layout: &PatchLayout,
    patch: usize,
) -> Result<(IsingModel, Vec<usize>)> {
    if patch >= layout.patch_count() {
        return Err(invalid(format!("patch {patch} does not exist")));
    }
    let graph = model.graph();
    let nodes: Vec<usize> = (0..graph.node_count()).filter(|&i| layout.assignment[i] == patch).collect();
    let mut local = vec![usize::MAX; graph.node_count()];
    for (k, &i) in nodes.iter().enumerate() {
        local[i] = k;
    }
    let mut edges = Vec::new();
    let mut couplings = Vec::new();
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        if layout.assignment[u] == patch && layout.assignment[v] == patch {
            edges.push((local[u], local[v]));
            couplings.push(model.coupling(e));
        }
    }
    let fields = nodes.iter().map(|&i| effective_field(model, messages, i, layout)).collect();
    let sub = IsingModel::new(Graph::new(nodes.len(), edges)?, couplings, fields)?;
    Ok((sub, nodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchClass {
    /// Every belief is aligned with its local field.
    StatePreserving,
    BiasedPlus,
    BiasedMinus,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchReport {
    pub flipped: Vec<bool>,
    pub flipped_count: usize,
    pub aligned_count: usize,
    pub class: PatchClass,
    /// Edges joining two patches.
    pub boundary_edges: Vec<usize>,
    /// Boundary edges whose endpoint beliefs favor different states.
    pub conflicting_edges: Vec<usize>,
    /// Bethe entropy of these beliefs.
    pub entropy: f64,
    /// `S_B(reference) − S_B(self)`.
    pub entropy_gap: Option<f64>,
    /// `Q_i = P̃_i(+1) − P̃_i^ref(+1)`.
    pub mismatch: Option<Vec<f64>>,
}

/// A variable is flipped when `(P̃_i(+1)/P̃_i(−1) − 1) θ_i < 0`.
pub fn classify_patch_fixed_point(
    model: &IsingModel,
    beliefs: &Pseudomarginals,
    layout: &PatchLayout,
    reference: Option<&Pseudomarginals>,
) -> Result<PatchReport> {
    let n = model.node_count();
    if beliefs.singleton.len() != n || layout.assignment.len() != n {
        return Err(invalid("beliefs, layout and model disagree on the node count"));
    }
    if reference.is_some_and(|r| r.singleton.len() != n) {
        return Err(invalid("reference beliefs have the wrong node count"));
    }
    let p = &beliefs.singleton;
    let flipped: Vec<bool> = (0..n)
        .map(|i| (p[i] / (1.0 - p[i]) - 1.0) * model.field(i) < 0.0)
        .collect();
    let flipped_count = flipped.iter().filter(|f| **f).count();
    let class = if flipped_count == 0 {
        PatchClass::StatePreserving
    } else if p.iter().all(|&x| x > 0.5) {
        PatchClass::BiasedPlus
    } else if p.iter().all(|&x| x < 0.5) {
        PatchClass::BiasedMinus
    } else {
        PatchClass::Mixed
    };
    let graph = model.graph();
    let boundary_edges = layout.boundary_edges(graph);
    let conflicting_edges = boundary_edges
        .iter()
        .copied()
        .filter(|&e| {
            let (u, v) = graph.edges()[e];
            (p[u] > 0.5) != (p[v] > 0.5)
        })
        .collect();
    Ok(PatchReport {
        flipped,
        flipped_count,
        aligned_count: n - flipped_count,
        class,
        boundary_edges,
        conflicting_edges,
        entropy: beliefs.entropy,
        entropy_gap: reference.map(|r| r.entropy - beliefs.entropy),
        mismatch: reference.map(|r| p.iter().zip(&r.singleton).map(|(a, b)| a - b).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `2 √N J ≤ N θ`.
    pub simplified_holds: bool,
}

/// Checks `2J(|E_P| − |E_C|) ≤ θ(N − N_c + N_f) + ΔS_B` for the
/// state-preserving point `p` against another fixed point `m`.
pub fn global_min_bound_check(p: &PatchReport, m: &PatchReport, j: f64, theta: f64) -> BoundCheck {
    let n = m.flipped.len();
    let lhs = 2.0 * j * (m.boundary_edges.len() as f64 - m.conflicting_edges.len() as f64);
    let rhs = theta * (n as f64 - m.aligned_count as f64 + m.flipped_count as f64) + (p.entropy - m.entropy);
    BoundCheck { lhs, rhs, holds: lhs <= rhs, simplified_holds: simplified_bound_holds(n, j, theta) }
}

pub fn simplified_bound_holds(n: usize, j: f64, theta: f64) -> bool {
    2.0 * (n as f64).sqrt() * j <= n as f64 * theta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    /// Multi-start Newton, which also finds unstable points.
    Newton,
    /// BP from random starts with a random schedule.
    Bp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryConfig {
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
    pub restarts: usize,
    pub method: ProbeMethod,
    pub seed: u64,
    pub bp: BPConfig,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            lo: 0.05,
            hi: 3.0,
            resolution: 0.01,
            restarts: 200,
            method: ProbeMethod::Bp,
            seed: 0,
            bp: BPConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundaries {
    /// `None` when a unique fixed point persists over the whole range.
    pub j_a: Option<f64>,
    /// `None` when no disordered fixed point appears in the range.
    pub j_c: Option<f64>,
}

fn probe_points(model: &IsingModel, cfg: &BoundaryConfig) -> Result<Vec<FixedPoint>> {
    match cfg.method {
        ProbeMethod::Newton => enumerate_fixed_points(model, cfg.restarts, cfg.seed),
        ProbeMethod::Bp => Ok(enumerate_by_bp(model, cfg.restarts, &cfg.bp, cfg.seed)?.points),
    }
}

/// Midpoint of the final bracket around the smallest `J` where `pred`
/// holds; `None` if it never holds up to `hi`.
fn bisect(mut pred: impl FnMut(f64) -> Result<bool>, lo: f64, hi: f64, resolution: f64) -> Result<Option<f64>> {
    if !(lo < hi) || !(resolution > 0.0) {
        return Err(invalid("bisection needs lo < hi and a positive resolution"));
    }
    if pred(lo)? {
        return Err(Error::Estimation(format!("condition already holds at the lower end J = {lo}")));
    }
    if !pred(hi)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > resolution {
        let mid = 0.5 * (a + b);
        if pred(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Smallest coupling at which more than one fixed point is found.
pub fn estimate_multistability_onset<F>(family: F, cfg: &BoundaryConfig) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<IsingModel>,
{
    bisect(|j| Ok(probe_points(&family(j)?, cfg)?.len() > 1), cfg.lo, cfg.hi, cfg.resolution)
}

/// Starts with every patch aligned except for a set of flipped nodes.
fn flip_start(model: &IsingModel, layout: &PatchLayout, flipped: &[bool]) -> MessageSet {
    let graph = model.graph();
    let nu = (0..graph.directed_count())
        .map(|m| {
            let (i, _) = graph.endpoints(m);
            let s = layout.sign_of(i) * BIASED_START;
            if flipped[i] {
                -s
            } else {
                s
            }
        })
        .collect();
    MessageSet::from_reparam(&ReparamMessages(nu))
}

/// For every patch: the whole patch flipped, and only its boundary layer
/// flipped.
fn flip_probes(model: &IsingModel, layout: &PatchLayout) -> Vec<MessageSet> {
    let graph = model.graph();
    let n = graph.node_count();
    let mut probes = Vec::new();
    for p in 0..layout.patch_count() {
        let whole: Vec<bool> = (0..n).map(|i| layout.assignment[i] == p).collect();
        let rim: Vec<bool> = (0..n)
            .map(|i| whole[i] && graph.neighbors(i).iter().any(|nb| layout.assignment[nb.node] != p))
            .collect();
        probes.push(flip_start(model, layout, &whole));
        probes.push(flip_start(model, layout, &rim));
    }
    probes
}

fn has_disordered_point(model: &IsingModel, layout: &PatchLayout, cfg: &BoundaryConfig) -> Result<bool> {
    let mut points = probe_points(model, cfg)?;
    for start in flip_probes(model, layout) {
        let out = run_bp(model, &cfg.bp, &start)?;
        if out.converged {
            if let Some(fp) = polish(model, &out.messages.to_reparam()) {
                points.push(fp);
            }
        }
    }
    for fp in &points {
        if classify_patch_fixed_point(model, &fp.pseudomarginals, layout, None)?.class == PatchClass::Mixed {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `J_A`: onset of multiple fixed points. `J_C`: onset of disordered
/// (mixed) fixed points, probed by BP runs that start with a patch or its
/// boundary layer flipped, plus the random starts used for `J_A`.
pub fn estimate_region_boundaries<F>(family: F, layout: &PatchLayout, cfg: &BoundaryConfig) -> Result<RegionBoundaries>
where
    F: Fn(f64) -> Result<IsingModel>,
{
    let Some(j_a) = estimate_multistability_onset(&family, cfg)? else {
        return Ok(RegionBoundaries { j_a: None, j_c: None });
    };
    let j_c = bisect(|j| has_disordered_point(&family(j)?, layout, cfg), j_a, cfg.hi, cfg.resolution)?;
    Ok(RegionBoundaries { j_a: Some(j_a), j_c })
}
