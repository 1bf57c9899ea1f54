//! Self-guided belief propagation.
//!
//! Couplings are scaled by `ζ` from 0 to 1. At `ζ = 0` the variables are
//! independent and uniform messages are the exact fixed point; each later
//! step starts BP from messages extrapolated along the path so far. When BP
//! stops converging the last fixed point on the path is returned.

use serde::{Deserialize, Serialize};

use crate::bp::{run_bp, BPConfig, MessageSet, Pseudomarginals, ReparamMessages};
use crate::error::{invalid, Result};
use crate::fixedpoints::{polish, residual_norm, FixedPoint};
use crate::math::TANH_CLIP;
use crate::model::{scale_couplings, IsingModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SBPConfig {
    pub initial_step: f64,
    pub adaptive: bool,
    pub threshold: f64,
    /// Number of trailing path points used for extrapolation (1 to 4).
    pub extrapolation_points: usize,
    pub retry_on_failure: bool,
    pub bp: BPConfig,
}

impl Default for SBPConfig {
    fn default() -> Self {
        SBPConfig {
            initial_step: 0.1,
            adaptive: true,
            threshold: 1e-3,
            extrapolation_points: 4,
            retry_on_failure: true,
            bp: BPConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub zeta: f64,
    pub fixed_point: FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SBPOutcome {
    pub path: Vec<PathEntry>,
    pub final_zeta: f64,
    pub completed: bool,
    pub pseudomarginals: Pseudomarginals,
    /// BP passes spent over the whole run.
    pub bp_iterations: usize,
}

/// Largest `|ν|` produced by extrapolation.
pub const NU_LIMIT: f64 = 14.0;

fn nu_limit() -> f64 {
    NU_LIMIT.min(TANH_CLIP.atanh())
}

/// Mean squared difference of `μ(+1)` between two message sets.
fn message_mse(a: &ReparamMessages, b: &ReparamMessages) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sq: f64 = a
        .0
        .iter()
        .zip(&b.0)
        .map(|(x, y)| ((x.tanh() - y.tanh()) / 2.0).powi(2))
        .sum();
    sq / a.len() as f64
}

/// Step-size controller: the step grows by `step_init · l` for every
/// earlier path point `k − l` whose messages are still within `threshold`
/// (mean squared change) of the latest ones.
pub fn adaptive_step(history: &[ReparamMessages], step_init: f64, threshold: f64) -> f64 {
    let mut step = step_init;
    let Some(latest) = history.last() else {
        return step;
    };
    let k = history.len() - 1;
    let mut l = 1;
    while l <= k && message_mse(latest, &history[k - l]) < threshold {
        l += 1;
        step += step_init * l as f64;
    }
    step
}

/// Per-coordinate Lagrange extrapolation through the last `points` entries
/// of `history`, clipped to `|ν| ≤ 14`.
pub fn extrapolate_messages(history: &[(f64, ReparamMessages)], zeta_next: f64, points: usize) -> ReparamMessages {
    let tail = &history[history.len().saturating_sub(points.clamp(1, 4))..];
    let Some((_, last)) = tail.last() else {
        return ReparamMessages(Vec::new());
    };
    if tail.len() == 1 {
        return last.clone();
    }
    let zetas: Vec<f64> = tail.iter().map(|(z, _)| *z).collect();
    let weights: Vec<f64> = (0..zetas.len())
        .map(|a| {
            (0..zetas.len())
                .filter(|&b| b != a)
                .map(|b| (zeta_next - zetas[b]) / (zetas[a] - zetas[b]))
                .product()
        })
        .collect();
    let limit = nu_limit();
    ReparamMessages(
        (0..last.len())
            .map(|m| {
                let v: f64 = tail.iter().zip(&weights).map(|((_, nu), w)| w * nu.0[m]).sum();
                v.clamp(-limit, limit)
            })
            .collect(),
    )
}

fn fixed_point_from_bp(model: &IsingModel, messages: &MessageSet) -> FixedPoint {
    let nu = messages.to_reparam();
    polish(model, &nu).unwrap_or_else(|| {
        let residual = residual_norm(model, &nu);
        FixedPoint {
            messages: messages.clone(),
            pseudomarginals: crate::bp::pseudomarginals_reparam(model, &nu),
            nu,
            residual,
            stability: None,
        }
    })
}

pub fn run_sbp(model: &IsingModel, config: &SBPConfig) -> Result<SBPOutcome> {
    if !(config.initial_step > 0.0 && config.initial_step <= 1.0) {
        return Err(invalid(format!("initial step {} outside (0, 1]", config.initial_step)));
    }
    config.bp.validate()?;
    let directed = model.graph().directed_count();

    // ζ = 0: independent variables, uniform messages are exact
    let start = scale_couplings(model, 0.0)?;
    let nu0 = ReparamMessages::zeros(directed);
    let origin = FixedPoint {
        messages: MessageSet::uniform(directed),
        pseudomarginals: crate::bp::pseudomarginals_reparam(&start, &nu0),
        nu: nu0.clone(),
        residual: 0.0,
        stability: None,
    };
    let mut path = vec![PathEntry { zeta: 0.0, fixed_point: origin }];
    let mut tracked: Vec<(f64, ReparamMessages)> = vec![(0.0, nu0)];
    let mut bp_iterations = 0;
    let mut retried = false;
    let mut zeta = 0.0;
    let mut step_override: Option<f64> = None;

    while zeta < 1.0 {
        let step = match step_override.take() {
            Some(s) => s,
            None if config.adaptive => {
                let nus: Vec<ReparamMessages> = tracked.iter().map(|(_, n)| n.clone()).collect();
                adaptive_step(&nus, config.initial_step, config.threshold)
            }
            None => config.initial_step,
        };
        let next = (zeta + step).min(1.0);
        let scaled = scale_couplings(model, next)?;
        let init = extrapolate_messages(&tracked, next, config.extrapolation_points);
        let out = run_bp(&scaled, &config.bp, &MessageSet::from_reparam(&init))?;
        bp_iterations += out.iterations;
        if !out.converged {
            if config.retry_on_failure && !retried {
                retried = true;
                step_override = Some(step / 2.0);
                continue;
            }
            break;
        }
        let fp = fixed_point_from_bp(&scaled, &out.messages);
        tracked.push((next, fp.nu.clone()));
        path.push(PathEntry { zeta: next, fixed_point: fp });
        zeta = next;
    }

    let last = path.last().expect("path starts at zeta = 0");
    Ok(SBPOutcome {
        final_zeta: last.zeta,
        completed: last.zeta >= 1.0,
        pseudomarginals: last.fixed_point.pseudomarginals.clone(),
        path,
        bp_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force;
    use crate::math::logistic;
    use crate::model::{build_grid, make_ising, ParamSpec};

    #[test]
    fn path_starts_exactly() {
        let spec = ParamSpec::UniformRandom { lo: -2.0, hi: 2.0 };
        let m = make_ising(build_grid(3, 3, false).unwrap(), &spec, &spec, 1).unwrap();
        let out = run_sbp(&m, &SBPConfig::default()).unwrap();
        let first = &out.path[0].fixed_point.pseudomarginals;
        for (p, t) in first.singleton.iter().zip(m.fields()) {
            assert!((p - logistic(2.0 * t)).abs() < 1e-12);
        }
        assert!(out.path.windows(2).all(|w| w[0].zeta < w[1].zeta));
    }

    #[test]
    fn zero_field_attractive_model_is_exact() {
        let m = make_ising(
            build_grid(3, 3, false).unwrap(),
            &ParamSpec::UniformRandom { lo: 0.5, hi: 2.0 },
            &ParamSpec::Uniform(0.0),
            3,
        )
        .unwrap();
        let out = run_sbp(&m, &SBPConfig::default()).unwrap();
        assert!(out.completed);
        assert!(out.pseudomarginals.singleton.iter().all(|p| (p - 0.5).abs() < 1e-12));
        let exact = brute_force(&m).unwrap();
        assert!(exact.singleton.iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn adaptive_step_rules() {
        let a = ReparamMessages(vec![0.1, 0.2]);
        assert_eq!(adaptive_step(&[a.clone()], 0.1, 1e-3), 0.1);
        let grown = adaptive_step(&[a.clone(), a.clone(), a.clone()], 0.1, 1e-3);
        assert!((grown - (0.1 + 0.2 + 0.3)).abs() < 1e-15);
        let far = ReparamMessages(vec![2.0, -2.0]);
        assert_eq!(adaptive_step(&[a, far], 0.1, 1e-3), 0.1);
    }

    #[test]
    fn extrapolation_rules() {
        let p = |z: f64, v: f64| (z, ReparamMessages(vec![v]));
        let one = extrapolate_messages(&[p(0.0, 0.3)], 0.5, 4);
        assert_eq!(one.0, vec![0.3]);
        let lin = extrapolate_messages(&[p(0.0, 0.0), p(0.1, 0.2)], 0.3, 4);
        assert!((lin.0[0] - 0.6).abs() < 1e-12);
        // cubic through z^3 is reproduced exactly
        let cubic: Vec<_> = [0.0, 0.1, 0.2, 0.4].iter().map(|&z| p(z, z * z * z)).collect();
        let e = extrapolate_messages(&cubic, 0.5, 4);
        assert!((e.0[0] - 0.125).abs() < 1e-12);
        let wild = extrapolate_messages(&[p(0.0, 0.0), p(0.01, 10.0)], 1.0, 4);
        assert_eq!(wild.0[0], NU_LIMIT);
    }

    #[test]
    fn entries_are_fixed_points_of_their_scaled_models() {
        let m = make_ising(
            build_grid(3, 3, false).unwrap(),
            &ParamSpec::UniformRandom { lo: 0.0, hi: 2.0 },
            &ParamSpec::UniformRandom { lo: 0.05, hi: 0.5 },
            4,
        )
        .unwrap();
        let out = run_sbp(&m, &SBPConfig::default()).unwrap();
        assert!(out.completed);
        for e in &out.path {
            let scaled = scale_couplings(&m, e.zeta).unwrap();
            let r = crate::fixedpoints::residual_system(&scaled, &e.fixed_point.nu);
            assert!(r.iter().all(|x| x.abs() < 1e-8));
        }
        assert!(out.bp_iterations <= out.path.len() * 1000);
    }

    #[test]
    fn rejects_bad_step() {
        let m = make_ising(build_grid(2, 2, false).unwrap(), &ParamSpec::Uniform(1.0), &ParamSpec::Uniform(0.1), 0).unwrap();
        let cfg = SBPConfig { initial_step: 0.0, ..SBPConfig::default() };
        assert!(run_sbp(&m, &cfg).is_err());
    }
}
