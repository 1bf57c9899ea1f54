use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bethe_core::exact::{brute_force, transfer_matrix_grid};
use bethe_core::model::{build_complete, build_grid, build_random, build_random_tree, make_ising};
use bethe_core::{ExactSummary, Graph, IsingModel, ModelJson, ParamSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TreeExactness,
    FixedPointSweep,
    HammingThreshold,
    SbpVsBp,
    SchedulerConvergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TreeExactness => "tree-exactness",
            ExperimentKind::FixedPointSweep => "fixed-point-sweep",
            ExperimentKind::HammingThreshold => "hamming-threshold",
            ExperimentKind::SbpVsBp => "sbp-vs-bp",
            ExperimentKind::SchedulerConvergence => "scheduler-convergence",
        }
    }
}

/// Graph family; parameters come from the experiment grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDesc {
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default)]
        periodic: bool,
    },
    Complete {
        n: usize,
    },
    Tree {
        n: usize,
    },
    Random {
        n: usize,
        avg_degree: f64,
    },
    /// A model JSON file; only its graph is used by experiments.
    File {
        path: PathBuf,
    },
}

impl ModelDesc {
    /// `seed` only matters for random graph families.
    pub fn graph(&self, seed: u64) -> Result<Graph> {
        Ok(match self {
            ModelDesc::Grid { rows, cols, periodic } => build_grid(*rows, *cols, *periodic)?,
            ModelDesc::Complete { n } => build_complete(*n)?,
            ModelDesc::Tree { n } => build_random_tree(*n, seed)?,
            ModelDesc::Random { n, avg_degree } => build_random(*n, *avg_degree, seed)?,
            ModelDesc::File { path } => load_model(path)?.graph().clone(),
        })
    }

    pub fn build(&self, couplings: &ParamSpec, fields: &ParamSpec, seed: u64) -> Result<IsingModel> {
        Ok(make_ising(self.graph(seed)?, couplings, fields, seed)?)
    }

    /// Transfer matrix on open grids, enumeration elsewhere.
    pub fn exact(&self, model: &IsingModel) -> Result<ExactSummary> {
        Ok(match self {
            ModelDesc::Grid { rows, cols, periodic: false } => transfer_matrix_grid(model, *rows, *cols)?,
            _ => brute_force(model)?,
        })
    }
}

/// `grid:RxC`, `torus:RxC`, `complete:N`, `tree:N` or `random:N:AVG`.
impl FromStr for ModelDesc {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|e| format!("'{t}': {e}"));
        let dims = |t: &str| -> std::result::Result<(usize, usize), String> {
            let (r, c) = t.split_once('x').ok_or_else(|| format!("expected RxC, got '{t}'"))?;
            Ok((num(r)?, num(c)?))
        };
        match parts.as_slice() {
            ["grid", d] => dims(d).map(|(rows, cols)| ModelDesc::Grid { rows, cols, periodic: false }),
            ["torus", d] => dims(d).map(|(rows, cols)| ModelDesc::Grid { rows, cols, periodic: true }),
            ["complete", n] => Ok(ModelDesc::Complete { n: num(n)? }),
            ["tree", n] => Ok(ModelDesc::Tree { n: num(n)? }),
            ["random", n, avg] => Ok(ModelDesc::Random {
                n: num(n)?,
                avg_degree: avg.parse().map_err(|e| format!("'{avg}': {e}"))?,
            }),
            _ => Err(format!("unrecognized graph '{s}'")),
        }
    }
}

pub fn load_model(path: &Path) -> Result<IsingModel> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let json: ModelJson = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(format!("{}:{}", path.display(), e.path()), e.inner().to_string()))?;
    Ok(IsingModel::from_json(&json)?)
}

/// Either an explicit list or `steps` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, steps } => match steps {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    experiment: ExperimentKind,
    model: Option<ModelDesc>,
    j: Option<Grid>,
    theta: Option<Grid>,
    seeds: Option<Vec<u64>>,
    restarts: Option<usize>,
    output: Option<PathBuf>,
}

/// A validated experiment with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    /// Absent only for experiments that fix their own model.
    pub model: Option<ModelDesc>,
    pub j: Vec<f64>,
    pub theta: Vec<f64>,
    pub seeds: Vec<u64>,
    pub restarts: usize,
    pub output: Option<PathBuf>,
}

struct Defaults {
    model: Option<ModelDesc>,
    j: Grid,
    theta: Grid,
    seeds: Vec<u64>,
    restarts: usize,
}

fn defaults(kind: ExperimentKind) -> Defaults {
    match kind {
        ExperimentKind::TreeExactness => Defaults {
            model: Some(ModelDesc::Tree { n: 10 }),
            j: Grid::List(vec![2.0]),
            theta: Grid::List(vec![2.0]),
            seeds: (0..20).collect(),
            restarts: 1,
        },
        ExperimentKind::FixedPointSweep => Defaults {
            model: Some(ModelDesc::Complete { n: 4 }),
            j: Grid::Range { start: -2.0, stop: 2.0, steps: 41 },
            theta: Grid::List(vec![0.0, 0.1, 0.5]),
            seeds: vec![0],
            restarts: 200,
        },
        ExperimentKind::HammingThreshold => Defaults {
            model: None,
            j: Grid::List(vec![0.0]),
            theta: Grid::List(vec![0.0]),
            seeds: vec![0],
            restarts: 1,
        },
        ExperimentKind::SbpVsBp => Defaults {
            model: Some(ModelDesc::Grid { rows: 5, cols: 5, periodic: false }),
            j: Grid::List(vec![1.0]),
            theta: Grid::List(vec![0.0]),
            seeds: (0..10).collect(),
            restarts: 1,
        },
        ExperimentKind::SchedulerConvergence => Defaults {
            model: Some(ModelDesc::Grid { rows: 9, cols: 9, periodic: false }),
            j: Grid::List(vec![6.5]),
            theta: Grid::List(vec![6.5]),
            seeds: (0..30).collect(),
            restarts: 1,
        },
    }
}

fn nonempty(field: &str, grid: Grid) -> Result<Vec<f64>> {
    if let Grid::Range { start, stop, steps } = &grid {
        if !start.is_finite() || !stop.is_finite() {
            return Err(CliError::config(field, "range bounds must be finite"));
        }
        if *steps == 0 {
            return Err(CliError::config(field, "range needs at least one step"));
        }
    }
    let values = grid.values();
    if values.is_empty() {
        return Err(CliError::config(field, "grid is empty"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::config(field, format!("non-finite value {bad}")));
    }
    Ok(values)
}

impl ExperimentSpec {
    fn from_raw(raw: RawSpec) -> Result<Self> {
        let d = defaults(raw.experiment);
        let model = match (raw.experiment, raw.model) {
            (ExperimentKind::HammingThreshold, Some(_)) => {
                return Err(CliError::config("model", "hamming-threshold uses the fixed (7,4) code"))
            }
            (_, m) => m.or(d.model),
        };
        let seeds = raw.seeds.unwrap_or(d.seeds);
        if seeds.is_empty() {
            return Err(CliError::config("seeds", "at least one seed is required"));
        }
        let restarts = raw.restarts.unwrap_or(d.restarts);
        if restarts == 0 {
            return Err(CliError::config("restarts", "must be positive"));
        }
        Ok(ExperimentSpec {
            experiment: raw.experiment,
            model,
            j: nonempty("j", raw.j.unwrap_or(d.j))?,
            theta: nonempty("theta", raw.theta.unwrap_or(d.theta))?,
            seeds,
            restarts,
            output: raw.output,
        })
    }

    pub fn minimal(experiment: ExperimentKind) -> Self {
        ExperimentSpec::from_raw(RawSpec {
            experiment,
            model: None,
            j: None,
            theta: None,
            seeds: None,
            restarts: None,
            output: None,
        })
        .expect("defaults are valid")
    }

    pub fn model(&self) -> Result<&ModelDesc> {
        self.model.as_ref().ok_or_else(|| CliError::config("model", "experiment needs a model"))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })?;
    ExperimentSpec::from_raw(raw)
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let spec = parse_config(r#"{"experiment": "tree-exactness"}"#).unwrap();
        assert_eq!(spec, ExperimentSpec::minimal(ExperimentKind::TreeExactness));
        assert_eq!(spec.seeds.len(), 20);
        assert_eq!(spec.model, Some(ModelDesc::Tree { n: 10 }));
    }

    #[test]
    fn missing_experiment_is_config_error() {
        let err = parse_config(r#"{"seeds": [1]}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }));
        assert!(err.to_string().contains("experiment"));
    }

    #[test]
    fn empty_j_grid_is_config_error() {
        match parse_config(r#"{"experiment": "fixed-point-sweep", "j": []}"#).unwrap_err() {
            CliError::Config { path, .. } => assert_eq!(path, "j"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn errors_carry_the_field_path() {
        let text = r#"{"experiment": "sbp-vs-bp", "model": {"kind": "grid", "rows": "five", "cols": 5}}"#;
        match parse_config(text).unwrap_err() {
            CliError::Config { path, .. } => assert!(path.starts_with("model"), "{path}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_experiment_and_fields_rejected() {
        assert!(parse_config(r#"{"experiment": "nope"}"#).is_err());
        assert!(parse_config(r#"{"experiment": "tree-exactness", "sede": [1]}"#).is_err());
        assert!(parse_config(r#"{"experiment": "tree-exactness", "seeds": []}"#).is_err());
    }

    #[test]
    fn ranges_expand_inclusively() {
        let spec = parse_config(r#"{"experiment": "fixed-point-sweep", "j": {"start": 0, "stop": 1, "steps": 5}}"#)
            .unwrap();
        assert_eq!(spec.j, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn graph_strings() {
        assert_eq!("grid:3x4".parse(), Ok(ModelDesc::Grid { rows: 3, cols: 4, periodic: false }));
        assert_eq!("torus:3x3".parse(), Ok(ModelDesc::Grid { rows: 3, cols: 3, periodic: true }));
        assert_eq!("complete:4".parse(), Ok(ModelDesc::Complete { n: 4 }));
        assert_eq!("random:10:3".parse(), Ok(ModelDesc::Random { n: 10, avg_degree: 3.0 }));
        assert!("grid:3".parse::<ModelDesc>().is_err());
        assert!("hex:3".parse::<ModelDesc>().is_err());
    }
}
