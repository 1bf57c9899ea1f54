//! Sum-product decoding of the (7,4) Hamming code over a binary symmetric
//! channel.
//!
//! Factor tables are indexed by the bits of the argument values: bit `k`
//! of the table index is the value of the factor's `k`-th variable.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parity checks of the (7,4) Hamming code, zero-indexed.
pub const HAMMING74_CHECKS: [[usize; 4]; 3] = [[0, 1, 2, 4], [1, 2, 3, 5], [0, 2, 3, 6]];

/// Largest variable count accepted by [`exact_posterior`].
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub table: Vec<f64>,
}

impl Factor {
    pub fn new(vars: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(invalid("factor without variables"));
        }
        if table.len() != 1 << vars.len() {
            return Err(invalid(format!("factor over {} variables needs {} entries", vars.len(), 1 << vars.len())));
        }
        if table.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("factor entries must be finite and non-negative"));
        }
        Ok(Factor { vars, table })
    }

    /// `1` if the arguments sum to an even number, `0` otherwise.
    pub fn parity(vars: Vec<usize>) -> Result<Self> {
        let table = (0..1usize << vars.len()).map(|s| f64::from(s.count_ones() % 2 == 0)).collect();
        Factor::new(vars, table)
    }

    pub fn unary(var: usize, values: [f64; 2]) -> Result<Self> {
        Factor::new(vec![var], values.to_vec())
    }

    pub fn is_parity(&self) -> bool {
        self.table.iter().enumerate().all(|(s, &v)| v == f64::from(s.count_ones() % 2 == 0))
    }
}

/// Bipartite graph of binary variables and factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorGraph {
    variables: usize,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new(variables: usize, factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            if f.vars.iter().any(|&v| v >= variables) {
                return Err(invalid("factor refers to a missing variable"));
            }
            let mut seen = f.vars.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != f.vars.len() {
                return Err(invalid("factor lists a variable twice"));
            }
        }
        Ok(FactorGraph { variables, factors })
    }

    pub fn variable_count(&self) -> usize {
        self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Factors that contain `var`.
    pub fn factors_of(&self, var: usize) -> Vec<usize> {
        (0..self.factors.len()).filter(|&a| self.factors[a].vars.contains(&var)).collect()
    }

    /// Product of all factors at a full assignment (bit `i` of `word` is `Y_i`).
    pub fn weight(&self, word: u64) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let idx = f.vars.iter().enumerate().fold(0usize, |s, (k, &v)| s | (((word >> v) & 1) as usize) << k);
                f.table[idx]
            })
            .product()
    }
}

/// Code structure only: seven variables and three parity factors.
pub fn build_hamming74() -> FactorGraph {
    let factors = HAMMING74_CHECKS
        .iter()
        .map(|c| Factor::parity(c.to_vec()).expect("fixed parity check"))
        .collect();
    FactorGraph::new(7, factors).expect("fixed code structure")
}

/// Binary symmetric channel with flip probability `epsilon` and the
/// received word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub epsilon: f64,
    pub received: Vec<u8>,
}

impl Channel {
    pub fn new(epsilon: f64, received: Vec<u8>) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(invalid(format!("channel error probability {epsilon} outside (0, 0.5)")));
        }
        if received.iter().any(|&b| b > 1) {
            return Err(invalid("received word must be binary"));
        }
        Ok(Channel { epsilon, received })
    }
}

/// Adds `f_i(Y_i)` with `1 − ε` on the received bit and `ε` on its complement.
pub fn attach_channel(fg: &FactorGraph, channel: &Channel) -> Result<FactorGraph> {
    let eps = channel.epsilon;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!("channel error probability {eps} outside (0, 0.5)")));
    }
    if channel.received.len() != fg.variable_count() {
        return Err(invalid(format!(
            "received word has {} bits, code has {}",
            channel.received.len(),
            fg.variable_count()
        )));
    }
    let mut factors = fg.factors.clone();
    for (i, &y) in channel.received.iter().enumerate() {
        let values = if y == 0 { [1.0 - eps, eps] } else { [eps, 1.0 - eps] };
        factors.push(Factor::unary(i, values)?);
    }
    FactorGraph::new(fg.variable_count(), factors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorBPConfig {
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl Default for FactorBPConfig {
    fn default() -> Self {
        FactorBPConfig { max_sweeps: 200, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBPOutcome {
    /// `P̃(Y_i = 0), P̃(Y_i = 1)` per variable.
    pub beliefs: Vec<[f64; 2]>,
    /// Final `q_{i→A}` per factor, in the factor's variable order.
    pub variable_to_factor: Vec<Vec<[f64; 2]>>,
    pub converged: bool,
    pub sweeps: usize,
}

fn normalized(p: [f64; 2]) -> [f64; 2] {
    let z = p[0] + p[1];
    if z > 0.0 {
        [p[0] / z, p[1] / z]
    } else {
        [0.5, 0.5]
    }
}

/// `r_{A→i}(y_i) = Σ f_A(y) Π_{k ≠ i} q_{k→A}(y_k)`.
fn factor_to_variable(factor: &Factor, q: &[[f64; 2]], slot: usize) -> [f64; 2] {
    let mut r = [0.0; 2];
    for (s, &f) in factor.table.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let prod: f64 = (0..factor.vars.len())
            .filter(|&k| k != slot)
            .map(|k| q[k][(s >> k) & 1])
            .product();
        r[(s >> slot) & 1] += f * prod;
    }
    r
}

/// Flooding schedule: all factor-to-variable messages, then all
/// variable-to-factor messages, each normalized.
pub fn run_factor_bp(fg: &FactorGraph, config: &FactorBPConfig) -> Result<FactorBPOutcome> {
    if !(config.tolerance > 0.0) || config.max_sweeps == 0 {
        return Err(invalid("factor BP needs a positive tolerance and at least one sweep"));
    }
    let factors = fg.factors();
    let incident: Vec<Vec<(usize, usize)>> = (0..fg.variable_count())
        .map(|v| {
            factors
                .iter()
                .enumerate()
                .filter_map(|(a, f)| f.vars.iter().position(|&x| x == v).map(|slot| (a, slot)))
                .collect()
        })
        .collect();
    // q[a][slot] and r[a][slot]
    let mut q: Vec<Vec<[f64; 2]>> = factors.iter().map(|f| vec![[0.5, 0.5]; f.vars.len()]).collect();
    let mut r: Vec<Vec<[f64; 2]>> = q.clone();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for (a, f) in factors.iter().enumerate() {
            for slot in 0..f.vars.len() {
                let new = normalized(factor_to_variable(f, &q[a], slot));
                change = change.max((new[0] - r[a][slot][0]).abs());
                r[a][slot] = new;
            }
        }
        for list in &incident {
            for &(a, slot) in list {
                let mut prod = [1.0, 1.0];
                for &(b, t) in list {
                    if b != a {
                        prod[0] *= r[b][t][0];
                        prod[1] *= r[b][t][1];
                    }
                }
                let new = normalized(prod);
                change = change.max((new[0] - q[a][slot][0]).abs());
                q[a][slot] = new;
            }
        }
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    let beliefs = incident
        .iter()
        .map(|list| {
            let mut prod = [1.0, 1.0];
            for &(a, slot) in list {
                prod[0] *= r[a][slot][0];
                prod[1] *= r[a][slot][1];
            }
            normalized(prod)
        })
        .collect();
    Ok(FactorBPOutcome { beliefs, variable_to_factor: q, converged, sweeps })
}

/// Marginals of the normalized factor product, by enumeration.
pub fn exact_posterior(fg: &FactorGraph) -> Result<Vec<[f64; 2]>> {
    let n = fg.variable_count();
    if n > EXACT_LIMIT {
        return Err(Error::SizeLimit { nodes: n, limit: EXACT_LIMIT });
    }
    let mut ones = vec![0.0; n];
    let mut total = 0.0;
    for word in 0..1u64 << n {
        let w = fg.weight(word);
        total += w;
        for (i, o) in ones.iter_mut().enumerate() {
            if (word >> i) & 1 == 1 {
                *o += w;
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::NumericFailure("factor product vanishes everywhere".into()));
    }
    Ok(ones.iter().map(|o| [1.0 - o / total, o / total]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Bp,
    Exact,
}

/// All-zero codeword sent, bit `flip_position` (1-indexed) received flipped;
/// returns the decoder's `P(Y_flip = 0)`.
pub fn belief_at_flip(flip_position: usize, epsilon: f64, decoder: Decoder) -> Result<f64> {
    if !(1..=7).contains(&flip_position) {
        return Err(invalid(format!("flip position {flip_position} outside 1..=7")));
    }
    let mut received = vec![0u8; 7];
    received[flip_position - 1] = 1;
    let fg = attach_channel(&build_hamming74(), &Channel::new(epsilon, received)?)?;
    let beliefs = match decoder {
        Decoder::Bp => run_factor_bp(&fg, &FactorBPConfig::default())?.beliefs,
        Decoder::Exact => exact_posterior(&fg)?,
    };
    Ok(beliefs[flip_position - 1][0])
}

const THRESHOLD_RESOLUTION: f64 = 1e-3;

/// Largest `ε` (to within `1e−3`) for which a single flip at
/// `flip_position` is corrected; `0` if it is not corrected even for
/// `ε = 1e−3`.
pub fn correction_threshold(flip_position: usize, decoder: Decoder) -> Result<f64> {
    let corrected = |eps: f64| belief_at_flip(flip_position, eps, decoder).map(|p| p > 0.5);
    let (mut lo, mut hi) = (THRESHOLD_RESOLUTION, 0.5 - 1e-9);
    if !corrected(lo)? {
        return Ok(0.0);
    }
    if corrected(hi)? {
        return Ok(hi);
    }
    while hi - lo > THRESHOLD_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if corrected(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
