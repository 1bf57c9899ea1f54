//! BP fixed points as roots of `ν − BP(ν) = 0`.
//!
//! Newton uses a central-difference Jacobian. Perturbing `ν_{k→i}` only
//! moves the outputs `i → j` with `j ≠ k`, so each column is differenced
//! on those rows alone.

mod homotopy;
mod mixed_volume;

pub use homotopy::{
    random_gamma, track_path, ComplexPoint, HomotopyConfig, PathEnd, Polynomial, PolynomialSystem,
};
pub use mixed_volume::{convex_hull, mixed_volume_2d, SupportSet};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{
    pseudomarginals_reparam, reparam_update, run_bp, BPConfig, MessageSet, Pseudomarginals,
    ReparamMessages, ScheduleKind,
};
use crate::error::{invalid, Error, Result};
use crate::model::{rng_from_seed, IsingModel};
use crate::stability::{analyze, StabilityRecord};

/// Newton acceptance threshold on `||ν − BP(ν)||_∞`.
pub const REFINE_TOL: f64 = 1e-10;
/// Two fixed points closer than this in `ν` are the same point.
pub const DEDUP_TOL: f64 = 1e-6;
/// Magnitude of the deterministic biased starts.
pub const BIASED_START: f64 = 3.0;
const FD_STEP: f64 = 1e-6;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub nu: ReparamMessages,
    pub messages: MessageSet,
    pub pseudomarginals: Pseudomarginals,
    pub residual: f64,
    pub stability: Option<StabilityRecord>,
}

impl FixedPoint {
    fn at(model: &IsingModel, nu: ReparamMessages, residual: f64) -> Self {
        FixedPoint {
            messages: MessageSet::from_reparam(&nu),
            pseudomarginals: pseudomarginals_reparam(model, &nu),
            nu,
            residual,
            stability: None,
        }
    }

    pub fn free_energy(&self) -> f64 {
        self.pseudomarginals.free_energy
    }

    pub fn log_partition(&self) -> f64 {
        self.pseudomarginals.log_partition
    }

    /// Attaches the Jacobian spectrum and its class.
    pub fn with_stability(mut self, model: &IsingModel) -> Result<Self> {
        self.stability = Some(analyze(model, &self.nu)?);
        Ok(self)
    }
}

/// `ν_{i→j} − arctanh(tanh J_ij · tanh h_{i\j})` per directed edge.
pub fn residual_system(model: &IsingModel, nu: &ReparamMessages) -> Vec<f64> {
    (0..nu.len()).map(|m| nu.0[m] - reparam_update(model, nu, m)).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// `||ν − BP(ν)||_∞`.
pub fn residual_norm(model: &IsingModel, nu: &ReparamMessages) -> f64 {
    inf_norm(&residual_system(model, nu))
}

/// Rows whose update reads `ν_n`: for `n = k → i`, every `i → j` with `j ≠ k`.
fn dependents(model: &IsingModel, n: usize) -> Vec<usize> {
    let g = model.graph();
    let (k, i) = g.endpoints(n);
    g.neighbors(i)
        .iter()
        .filter(|nb| nb.node != k)
        .map(|nb| g.directed_index(nb.edge, i))
        .collect()
}

fn numeric_jacobian(model: &IsingModel, nu: &ReparamMessages) -> DMatrix<f64> {
    let size = nu.len();
    let mut jac = DMatrix::identity(size, size);
    let mut probe = nu.clone();
    for n in 0..size {
        let rows = dependents(model, n);
        let base = probe.0[n];
        probe.0[n] = base + FD_STEP;
        let up: Vec<f64> = rows.iter().map(|&m| reparam_update(model, &probe, m)).collect();
        probe.0[n] = base - FD_STEP;
        let down: Vec<f64> = rows.iter().map(|&m| reparam_update(model, &probe, m)).collect();
        probe.0[n] = base;
        for ((&m, u), d) in rows.iter().zip(up).zip(down) {
            jac[(m, n)] -= (u - d) / (2.0 * FD_STEP);
        }
    }
    jac
}

/// Damped Newton on [`residual_system`]. Fails (without panicking) on a
/// singular step, a stalled line search or an exhausted step budget.
pub fn newton_refine(
    model: &IsingModel,
    guess: &ReparamMessages,
    tol: f64,
    max_steps: usize,
) -> Result<FixedPoint> {
    if guess.len() != model.graph().directed_count() {
        return Err(invalid("guess length does not match directed edge count"));
    }
    if guess.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure("non-finite starting point".into()));
    }
    let mut nu = guess.clone();
    let mut r = residual_system(model, &nu);
    let mut norm = inf_norm(&r);
    for _ in 0..max_steps {
        if norm < tol {
            return Ok(FixedPoint::at(model, nu, norm));
        }
        let jac = numeric_jacobian(model, &nu);
        let rhs = DVector::from_vec(r.iter().map(|x| -x).collect());
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::NumericFailure("singular Newton system".into()))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = ReparamMessages(nu.0.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect());
            let tr = residual_system(model, &trial);
            let tn = inf_norm(&tr);
            if tn < norm {
                nu = trial;
                r = tr;
                norm = tn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NumericFailure(format!("line search stalled at residual {norm:e}")));
        }
    }
    if norm < tol {
        Ok(FixedPoint::at(model, nu, norm))
    } else {
        Err(Error::NumericFailure(format!("residual {norm:e} after {max_steps} steps")))
    }
}

/// Sorts by `F_B` and drops points within [`DEDUP_TOL`] of an earlier one.
fn dedup(mut found: Vec<FixedPoint>) -> Vec<FixedPoint> {
    found.sort_by(|a, b| a.free_energy().total_cmp(&b.free_energy()));
    let mut out: Vec<FixedPoint> = Vec::new();
    for fp in found {
        if out.iter().all(|o| o.nu.max_diff(&fp.nu) >= DEDUP_TOL) {
            out.push(fp);
        }
    }
    out
}

/// Starting points for multi-start Newton: zero, `±3` on all edges, then
/// `restarts − 3` draws from `U(−3, 3)`.
pub fn newton_starts(directed: usize, restarts: usize, seed: u64) -> Vec<ReparamMessages> {
    let mut starts = vec![
        ReparamMessages::zeros(directed),
        ReparamMessages(vec![BIASED_START; directed]),
        ReparamMessages(vec![-BIASED_START; directed]),
    ];
    starts.truncate(restarts);
    let mut rng = rng_from_seed(seed);
    for _ in 3..restarts.max(3) {
        starts.push(ReparamMessages(
            (0..directed).map(|_| rng.random_range(-BIASED_START..BIASED_START)).collect(),
        ));
    }
    starts
}

/// Multi-start Newton enumeration. Results are sorted by `F_B` and carry
/// their stability record.
pub fn enumerate_fixed_points(model: &IsingModel, restarts: usize, seed: u64) -> Result<Vec<FixedPoint>> {
    if restarts == 0 {
        return Err(invalid("restarts must be >= 1"));
    }
    let starts = newton_starts(model.graph().directed_count(), restarts, seed);
    let found: Vec<FixedPoint> = starts
        .par_iter()
        .filter_map(|s| newton_refine(model, s, REFINE_TOL, 50).ok())
        .collect();
    dedup(found).into_iter().map(|fp| fp.with_stability(model)).collect()
}

/// Fixed points reached by BP itself, with how often each was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpEnumeration {
    pub points: Vec<FixedPoint>,
    pub hits: Vec<usize>,
    pub runs: usize,
    pub converged_runs: usize,
}

/// Runs BP from `runs` random initializations with a random update order,
/// polishes each converged run with Newton and groups the results.
/// Only attracting fixed points can be found this way.
pub fn enumerate_by_bp(model: &IsingModel, runs: usize, config: &BPConfig, seed: u64) -> Result<BpEnumeration> {
    if runs == 0 {
        return Err(invalid("runs must be >= 1"));
    }
    config.validate()?;
    let directed = model.graph().directed_count();
    let found: Vec<Option<FixedPoint>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let run_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r);
            let cfg = BPConfig { schedule: ScheduleKind::Random, seed: run_seed, ..config.clone() };
            let out = run_bp(model, &cfg, &MessageSet::random(directed, run_seed)).ok()?;
            if !out.converged {
                return None;
            }
            polish(model, &out.messages.to_reparam())
        })
        .collect();
    let converged_runs = found.iter().filter(|f| f.is_some()).count();
    let mut points: Vec<FixedPoint> = Vec::new();
    let mut hits: Vec<usize> = Vec::new();
    for fp in found.into_iter().flatten() {
        match points.iter().position(|p| p.nu.max_diff(&fp.nu) < DEDUP_TOL) {
            Some(k) => hits[k] += 1,
            None => {
                points.push(fp);
                hits.push(1);
            }
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].free_energy().total_cmp(&points[b].free_energy()));
    let points = order
        .iter()
        .map(|&k| points[k].clone().with_stability(model))
        .collect::<Result<Vec<_>>>()?;
    let hits = order.iter().map(|&k| hits[k]).collect();
    Ok(BpEnumeration { points, hits, runs, converged_runs })
}

/// Newton polish of a BP result; rejected if it wanders away from it.
pub fn polish(model: &IsingModel, nu: &ReparamMessages) -> Option<FixedPoint> {
    let fp = newton_refine(model, nu, REFINE_TOL, 20).ok()?;
    (fp.nu.max_diff(nu) < 1e-4).then_some(fp)
}

/// The number of BP fixed points is odd.
pub fn fixed_point_count_parity(points: &[FixedPoint]) -> bool {
    points.len() % 2 == 1
}
