//! Predictor-corrector tracking of `H(x, t) = (1 − t) Q(x) + γ t F(x)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::rng_from_seed;

pub type ComplexPoint = Vec<Complex64>;

/// Sparse polynomial: `Σ c_k x^{a_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(Complex64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(Complex64, Vec<u32>)>) -> Self {
        Polynomial { terms }
    }

    /// Univariate polynomial from coefficients of `x^0, x^1, ...`.
    pub fn univariate(coeffs: &[Complex64]) -> Self {
        Polynomial {
            terms: coeffs.iter().enumerate().map(|(k, &c)| (c, vec![k as u32])).collect(),
        }
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, a)| a.iter().zip(x).fold(*c, |acc, (&e, xi)| acc * xi.powu(e)))
            .sum()
    }

    pub fn derivative(&self, x: &[Complex64], var: usize) -> Complex64 {
        self.terms
            .iter()
            .filter(|(_, a)| a[var] > 0)
            .map(|(c, a)| {
                let mut v = *c * f64::from(a[var]);
                for (k, (&e, xi)) in a.iter().zip(x).enumerate() {
                    let e = if k == var { e - 1 } else { e };
                    v *= xi.powu(e);
                }
                v
            })
            .sum()
    }
}

/// Square system of polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    pub equations: Vec<Polynomial>,
}

impl PolynomialSystem {
    pub fn new(equations: Vec<Polynomial>) -> Self {
        PolynomialSystem { equations }
    }

    pub fn dim(&self) -> usize {
        self.equations.len()
    }

    pub fn eval(&self, x: &[Complex64]) -> DVector<Complex64> {
        DVector::from_iterator(self.dim(), self.equations.iter().map(|p| p.eval(x)))
    }

    pub fn jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.equations[i].derivative(x, j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomotopyConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_iterations: usize,
    pub corrector_tol: f64,
    pub divergence: f64,
    pub end_tol: f64,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            initial_step: 0.01,
            min_step: 1e-6,
            max_step: 0.1,
            corrector_iterations: 4,
            corrector_tol: 1e-10,
            divergence: 1e8,
            end_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathEnd {
    Finished(ComplexPoint),
    Lost,
}

impl PathEnd {
    pub fn point(&self) -> Option<&ComplexPoint> {
        match self {
            PathEnd::Finished(p) => Some(p),
            PathEnd::Lost => None,
        }
    }
}

/// `γ = e^{iφ}` with `φ ~ U(0, 2π)`.
pub fn random_gamma(seed: u64) -> Complex64 {
    let phi = rng_from_seed(seed).random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(1.0, phi)
}

struct Homotopy<'a> {
    start: &'a PolynomialSystem,
    target: &'a PolynomialSystem,
    gamma: Complex64,
}

impl Homotopy<'_> {
    fn value(&self, x: &[Complex64], t: f64) -> DVector<Complex64> {
        self.start.eval(x) * Complex64::from(1.0 - t) + self.target.eval(x) * (self.gamma * t)
    }

    fn dx(&self, x: &[Complex64], t: f64) -> DMatrix<Complex64> {
        self.start.jacobian(x) * Complex64::from(1.0 - t) + self.target.jacobian(x) * (self.gamma * t)
    }

    fn dt(&self, x: &[Complex64]) -> DVector<Complex64> {
        self.target.eval(x) * self.gamma - self.start.eval(x)
    }

    /// Euler step along `dx/dt = −H_x⁻¹ H_t`.
    fn predict(&self, x: &[Complex64], t: f64, h: f64) -> Option<ComplexPoint> {
        let v = self.dx(x, t).lu().solve(&-self.dt(x))?;
        Some(x.iter().zip(v.iter()).map(|(a, b)| a + b * h).collect())
    }

    /// Newton at fixed `t`; `None` unless the update shrinks below `tol`.
    fn correct(&self, mut x: ComplexPoint, t: f64, iterations: usize, tol: f64) -> Option<ComplexPoint> {
        for _ in 0..iterations {
            let delta = self.dx(&x, t).lu().solve(&-self.value(&x, t))?;
            let scale = 1.0 + x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            x.iter_mut().zip(delta.iter()).for_each(|(a, d)| *a += d);
            if x.iter().any(|z| !z.is_finite()) {
                return None;
            }
            if delta.iter().map(|z| z.norm()).fold(0.0, f64::max) < tol * scale {
                return Some(x);
            }
        }
        None
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Tracks every start value from `t = 0` to `t = 1`. Paths that blow up or
/// whose step size collapses are reported as [`PathEnd::Lost`]; losing
/// more than half of them is an error.
pub fn track_path(
    start_values: &[ComplexPoint],
    start_system: &PolynomialSystem,
    target_system: &PolynomialSystem,
    gamma: Complex64,
    config: &HomotopyConfig,
) -> Result<Vec<PathEnd>> {
    let n = start_system.dim();
    if target_system.dim() != n {
        return Err(invalid("start and target systems differ in size"));
    }
    for s in start_values {
        if s.len() != n {
            return Err(invalid("start value has the wrong dimension"));
        }
        if norm(start_system.eval(s).as_slice()) > 1e-10 {
            return Err(invalid("start value does not solve the start system"));
        }
    }
    let h = Homotopy { start: start_system, target: target_system, gamma };
    let ends: Vec<PathEnd> = start_values.iter().map(|s| track_one(&h, s.clone(), config)).collect();
    let lost = ends.iter().filter(|e| matches!(e, PathEnd::Lost)).count();
    if 2 * lost > ends.len() {
        return Err(Error::TrackingFailure { lost, total: ends.len() });
    }
    Ok(ends)
}

fn track_one(h: &Homotopy<'_>, mut x: ComplexPoint, cfg: &HomotopyConfig) -> PathEnd {
    let mut t = 0.0;
    let mut step = cfg.initial_step.clamp(cfg.min_step, cfg.max_step);
    let mut streak = 0;
    while t < 1.0 {
        let dt = step.min(1.0 - t);
        let next = (t + dt).min(1.0);
        let corrected = h
            .predict(&x, t, dt)
            .and_then(|p| h.correct(p, next, cfg.corrector_iterations, cfg.corrector_tol));
        match corrected {
            Some(c) => {
                x = c;
                t = next;
                streak += 1;
                if streak >= 3 {
                    step = (step * 1.5).min(cfg.max_step);
                    streak = 0;
                }
                if norm(&x) > cfg.divergence {
                    return PathEnd::Lost;
                }
            }
            None => {
                step *= 0.5;
                streak = 0;
                if step < cfg.min_step {
                    return PathEnd::Lost;
                }
            }
        }
    }
    // polish on the target itself
    match h.correct(x.clone(), 1.0, 20, cfg.end_tol) {
        Some(p) => PathEnd::Finished(p),
        None => PathEnd::Finished(x),
    }
}
