//! Accuracy of BP fixed points against exact inference, and combinations
//! of several fixed points.

mod patch;

pub use patch::{
    classify_patch_fixed_point, effective_field, estimate_multistability_onset,
    estimate_region_boundaries, global_min_bound_check, patch_submodel, simplified_bound_holds,
    BoundCheck, BoundaryConfig, PatchClass, PatchReport, ProbeMethod, RegionBoundaries,
};

use serde::{Deserialize, Serialize};

use crate::bp::Pseudomarginals;
use crate::error::{invalid, Error, Result};
use crate::exact::ExactSummary;
use crate::fixedpoints::FixedPoint;
use crate::math::softmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub marginal_mse: f64,
    pub partition_error: f64,
    pub expected_mean: f64,
}

/// `(2/N) Σ_i (a_i − b_i)²` over `P(+1)` values.
pub fn mse_between(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "marginal vectors differ in length");
    if a.is_empty() {
        return 0.0;
    }
    2.0 * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

pub fn marginal_mse(approx: &Pseudomarginals, exact: &ExactSummary) -> f64 {
    mse_between(&approx.singleton, &exact.singleton)
}

/// `|log Z_B − log Z| / log Z`.
pub fn partition_error(log_z_bethe: f64, log_z: f64) -> Result<f64> {
    if log_z == 0.0 {
        return Err(Error::UndefinedMetric("relative error with log Z = 0".into()));
    }
    Ok((log_z_bethe - log_z).abs() / log_z)
}

/// `(1/N) Σ_i (2 P̃_i(+1) − 1)`.
pub fn expected_mean(singleton: &[f64]) -> f64 {
    if singleton.is_empty() {
        return 0.0;
    }
    singleton.iter().map(|p| 2.0 * p - 1.0).sum::<f64>() / singleton.len() as f64
}

pub fn score(approx: &Pseudomarginals, exact: &ExactSummary) -> Result<AccuracyReport> {
    Ok(AccuracyReport {
        marginal_mse: marginal_mse(approx, exact),
        partition_error: partition_error(approx.log_partition, exact.log_partition)?,
        expected_mean: expected_mean(&approx.singleton),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsbSubset {
    All,
    /// Fixed points whose stability class is stable, with or without damping.
    Minima,
}

/// Fixed points combined with weights `Z_B^m / Σ Z_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsbCombination {
    /// Indices of the combined fixed points in the input.
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
    pub singleton: Vec<f64>,
    pub pairwise: Vec<[[f64; 2]; 2]>,
}

pub fn rsb_combine(points: &[FixedPoint], subset: RsbSubset) -> Result<RsbCombination> {
    let mut members = Vec::new();
    for (k, fp) in points.iter().enumerate() {
        let keep = match subset {
            RsbSubset::All => true,
            RsbSubset::Minima => match &fp.stability {
                Some(rec) => rec.class.is_stable(),
                None => return Err(invalid("fixed point without a stability record")),
            },
        };
        if keep {
            members.push(k);
        }
    }
    if members.is_empty() {
        return Err(invalid("no fixed points to combine"));
    }
    let log_z: Vec<f64> = members.iter().map(|&k| points[k].log_partition()).collect();
    let weights = softmax(&log_z);
    let first = &points[members[0]].pseudomarginals;
    let mut singleton = vec![0.0; first.singleton.len()];
    let mut pairwise = vec![[[0.0; 2]; 2]; first.pairwise.len()];
    for (&k, w) in members.iter().zip(&weights) {
        let pm = &points[k].pseudomarginals;
        if pm.singleton.len() != singleton.len() || pm.pairwise.len() != pairwise.len() {
            return Err(invalid("fixed points belong to different models"));
        }
        for (s, p) in singleton.iter_mut().zip(&pm.singleton) {
            *s += w * p;
        }
        for (t, q) in pairwise.iter_mut().zip(&pm.pairwise) {
            for a in 0..2 {
                for b in 0..2 {
                    t[a][b] += w * q[a][b];
                }
            }
        }
    }
    Ok(RsbCombination { members, weights, singleton, pairwise })
}

/// Index of the fixed point with the largest `log Z_B`; ties go to the
/// lowest index.
pub fn select_max_partition(points: &[FixedPoint]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (k, fp) in points.iter().enumerate() {
        if best.is_none_or(|b| fp.log_partition() > points[b].log_partition()) {
            best = Some(k);
        }
    }
    best.ok_or_else(|| invalid("no fixed points to select from"))
}

/// `(2/N) Σ_i (Σ_{m≠k} w_m (P̃_i^m − P̃_i^k))²` with `w = softmax(log Z_B)`.
/// Equals the MSE of fixed point `k` against the combination of all points.
pub fn rsb_mse_identity(points: &[FixedPoint], k: usize) -> Result<f64> {
    if k >= points.len() {
        return Err(invalid(format!("fixed point {k} out of range")));
    }
    let log_z: Vec<f64> = points.iter().map(FixedPoint::log_partition).collect();
    let weights = softmax(&log_z);
    let pk = &points[k].pseudomarginals.singleton;
    let n = pk.len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let s: f64 = points
                .iter()
                .zip(&weights)
                .enumerate()
                .filter(|(m, _)| *m != k)
                .map(|(_, (fp, w))| w * (fp.pseudomarginals.singleton[i] - pk[i]))
                .sum();
            s * s
        })
        .sum();
    Ok(2.0 * sum / n as f64)
}

/// `log(Z_B^a / Z_B^b) − log(P^a / P^b)` where `P` is the fraction of BP
/// runs that reached each point.
pub fn run_fraction_mismatch(log_z: [f64; 2], hits: [usize; 2]) -> Result<f64> {
    if hits.contains(&0) {
        return Err(Error::UndefinedMetric("fixed point never reached".into()));
    }
    Ok((log_z[0] - log_z[1]) - (hits[0] as f64 / hits[1] as f64).ln())
}
