use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseRegion {
    F,
    AF,
    P,
}

/// `arccoth(d) = arctanh(1/d)`.
pub fn arccoth(d: f64) -> f64 {
    (1.0 / d).atanh()
}

/// Critical field `p(J, d)` bounding the ordered phases of a
/// `d`-regular lattice.
pub fn phase_function(j: f64, d: u32) -> f64 {
    let d = f64::from(d);
    let critical = arccoth(d);
    if j.abs() <= critical {
        return 0.0;
    }
    let w = j.abs().tanh();
    let inner = (d * w - 1.0) / (d / w - 1.0);
    let outer = (d - 1.0 / w) / (d - w);
    if !(inner >= 0.0 && outer >= 0.0) {
        return 0.0;
    }
    let first = d * inner.sqrt().atanh();
    let second = outer.sqrt().atanh();
    if j > critical {
        first - second
    } else {
        first + second
    }
}

pub fn classify_phase(j: f64, theta: f64, d: u32) -> PhaseRegion {
    let critical = arccoth(f64::from(d));
    let p = phase_function(j, d);
    if j > critical && theta.abs() <= p {
        PhaseRegion::F
    } else if j < -critical && theta.abs() < p {
        PhaseRegion::AF
    } else {
        PhaseRegion::P
    }
}
