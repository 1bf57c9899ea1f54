//! Local stability of BP fixed points.
//!
//! The Jacobian is taken of the reparameterized map `ν ↦ BP(ν)`; rows and
//! columns follow the directed-edge order of the graph.

mod eigen;
mod phase;

pub use eigen::eigenvalues_of;
pub use phase::{arccoth, classify_phase, phase_function, PhaseRegion};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bp::{cavity_field, ReparamMessages};
use crate::error::Result;
use crate::model::IsingModel;

/// Width of the band around modulus 1 treated as undecided.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub max_real_part: f64,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<Complex64>) -> Self {
        let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let max_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Spectrum { eigenvalues, spectral_radius, max_real_part }
    }
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<(f64, f64)>::deserialize(d)?;
        Ok(pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    StableBP,
    StableWithDamping,
    Unstable,
    Marginal,
}

impl StabilityClass {
    /// Stable with or without damping.
    pub fn is_stable(self) -> bool {
        matches!(self, StabilityClass::StableBP | StabilityClass::StableWithDamping)
    }
}

/// `∂ν'_{i→j} / ∂ν_{k→i}` for `k ∈ ∂i \ j`.
pub fn bp_jacobian(model: &IsingModel, nu: &ReparamMessages) -> DMatrix<f64> {
    let graph = model.graph();
    let size = graph.directed_count();
    let mut jac = DMatrix::zeros(size, size);
    for m in 0..size {
        let (i, j) = graph.endpoints(m);
        let tj = model.coupling(m / 2).tanh();
        let th = cavity_field(model, nu, m).tanh();
        let entry = tj * (1.0 - th * th) / (1.0 - tj * tj * th * th);
        for nb in graph.neighbors(i) {
            if nb.node != j {
                jac[(m, graph.directed_index(nb.edge, nb.node))] = entry;
            }
        }
    }
    jac
}

pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    eigenvalues_of(matrix).map(Spectrum::new)
}

pub fn classify_stability(spectrum: &Spectrum) -> StabilityClass {
    let re = spectrum.max_real_part;
    let rho = spectrum.spectral_radius;
    if (re - 1.0).abs() < MARGINAL_BAND {
        StabilityClass::Marginal
    } else if re > 1.0 {
        StabilityClass::Unstable
    } else if (rho - 1.0).abs() < MARGINAL_BAND {
        StabilityClass::Marginal
    } else if rho < 1.0 {
        StabilityClass::StableBP
    } else {
        StabilityClass::StableWithDamping
    }
}

/// Spectrum of the damped map: `λ ↦ (1 − ε) λ + ε`.
pub fn damped_spectrum(spectrum: &Spectrum, damping: f64) -> Spectrum {
    Spectrum::new(
        spectrum
            .eigenvalues
            .iter()
            .map(|z| z * (1.0 - damping) + damping)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub spectrum: Spectrum,
    pub class: StabilityClass,
}

/// Jacobian, spectrum and class in one call.
pub fn analyze(model: &IsingModel, nu: &ReparamMessages) -> Result<StabilityRecord> {
    let spectrum = eigenvalues(&bp_jacobian(model, nu))?;
    let class = classify_stability(&spectrum);
    Ok(StabilityRecord { spectrum, class })
}
