use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use bethe_core::accuracy::{expected_mean, marginal_mse};
use bethe_core::bp::{run_bp, BPConfig, MessageSet, ScheduleKind};
use bethe_core::coding::{correction_threshold, Decoder};
use bethe_core::fixedpoints::{enumerate_fixed_points, FixedPoint};
use bethe_core::sbp::{run_sbp, SBPConfig};
use bethe_core::stability::StabilityClass;
use bethe_core::{IsingModel, ParamSpec};
use rayon::prelude::*;

use crate::config::{ExperimentKind, ExperimentSpec, ModelDesc};
use crate::error::Result;
use crate::output::{csv_row, write_results, write_rows};

/// Total single-message updates allowed per scheduler run.
pub const SCHEDULER_UPDATE_BUDGET: usize = 250_000;
pub const SCHEDULER_TOLERANCE: f64 = 1e-3;

pub const SCHEDULES: [ScheduleKind; 6] = [
    ScheduleKind::Synchronous,
    ScheduleKind::RoundRobin,
    ScheduleKind::Random,
    ScheduleKind::Rbp,
    ScheduleKind::Wdbp,
    ScheduleKind::Nibp,
];

csv_row!(TreeRow {
    seed: u64,
    nodes: usize,
    j_scale: f64,
    theta_scale: f64,
    converged: bool,
    iterations: usize,
    max_marginal_error: f64,
    free_energy_error: f64,
});

csv_row!(SweepRow {
    j: f64,
    theta: f64,
    seed: u64,
    count: usize,
    fixed_point: usize,
    free_energy: f64,
    log_partition: f64,
    mean_magnetization: f64,
    stability: StabilityClass,
    spectral_radius: f64,
    max_real_part: f64,
});

csv_row!(ThresholdRow {
    flip_position: usize,
    decoder: Decoder,
    threshold: f64,
});

csv_row!(SbpRow {
    seed: u64,
    j: f64,
    theta: f64,
    bp_converged: bool,
    bp_mse: f64,
    bp_free_energy: f64,
    sbp_completed: bool,
    sbp_mse: f64,
    sbp_free_energy: f64,
    exact_log_partition: f64,
});

csv_row!(SchedulerRow {
    seed: u64,
    j_scale: f64,
    theta_scale: f64,
    schedule: ScheduleKind,
    converged: bool,
    iterations: usize,
});

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentRows {
    Tree(Vec<TreeRow>),
    Sweep(Vec<SweepRow>),
    Threshold(Vec<ThresholdRow>),
    Sbp(Vec<SbpRow>),
    Scheduler(Vec<SchedulerRow>),
}

impl ExperimentRows {
    pub fn len(&self) -> usize {
        match self {
            ExperimentRows::Tree(r) => r.len(),
            ExperimentRows::Sweep(r) => r.len(),
            ExperimentRows::Threshold(r) => r.len(),
            ExperimentRows::Sbp(r) => r.len(),
            ExperimentRows::Scheduler(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        match self {
            ExperimentRows::Tree(r) => write_rows(r, out),
            ExperimentRows::Sweep(r) => write_rows(r, out),
            ExperimentRows::Threshold(r) => write_rows(r, out),
            ExperimentRows::Sbp(r) => write_rows(r, out),
            ExperimentRows::Scheduler(r) => write_rows(r, out),
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        match self {
            ExperimentRows::Tree(r) => write_results(r, path),
            ExperimentRows::Sweep(r) => write_results(r, path),
            ExperimentRows::Threshold(r) => write_results(r, path),
            ExperimentRows::Sbp(r) => write_results(r, path),
            ExperimentRows::Scheduler(r) => write_results(r, path),
        }
    }
}

/// `U(−|x|, |x|)`, or exactly zero when `x = 0`.
pub fn spread(x: f64) -> ParamSpec {
    if x == 0.0 {
        ParamSpec::Uniform(0.0)
    } else {
        ParamSpec::UniformRandom { lo: -x.abs(), hi: x.abs() }
    }
}

/// Couplings `±j` with random signs, fields `U(−|θ|, |θ|)`.
pub fn signed_couplings(desc: &ModelDesc, j: f64, theta: f64, seed: u64) -> Result<IsingModel> {
    let draw = desc.build(&ParamSpec::UniformRandom { lo: -1.0, hi: 1.0 }, &spread(theta), seed)?;
    let couplings = draw.couplings().iter().map(|u| j * u.signum()).collect();
    Ok(IsingModel::new(draw.graph().clone(), couplings, draw.fields().to_vec())?)
}

/// Whole passes that fit the update budget on a model with `directed` messages.
pub fn scheduler_passes(directed: usize) -> usize {
    (SCHEDULER_UPDATE_BUDGET / directed.max(1)).max(1)
}

/// Ascending `F_B`, ties by mean magnetization.
pub fn fixed_point_order(a: &FixedPoint, b: &FixedPoint) -> Ordering {
    a.free_energy()
        .total_cmp(&b.free_energy())
        .then(expected_mean(&a.pseudomarginals.singleton).total_cmp(&expected_mean(&b.pseudomarginals.singleton)))
}

pub fn sort_fixed_points(points: &mut [FixedPoint]) {
    points.sort_by(fixed_point_order);
}

fn cells(spec: &ExperimentSpec) -> Vec<(f64, f64, u64)> {
    let mut out = Vec::new();
    for &j in &spec.j {
        for &theta in &spec.theta {
            for &seed in &spec.seeds {
                out.push((j, theta, seed));
            }
        }
    }
    out
}

fn flat<T>(nested: Result<Vec<Vec<T>>>) -> Result<Vec<T>> {
    nested.map(|v| v.into_iter().flatten().collect())
}

fn tree_exactness(spec: &ExperimentSpec) -> Result<Vec<TreeRow>> {
    let desc = spec.model()?;
    cells(spec)
        .into_par_iter()
        .map(|(j, theta, seed)| {
            let model = desc.build(&spread(j), &spread(theta), seed)?;
            let exact = desc.exact(&model)?;
            let cfg = BPConfig { tolerance: 1e-13, ..BPConfig::default() };
            let out = run_bp(&model, &cfg, &MessageSet::uniform(model.graph().directed_count()))?;
            let max_marginal_error = out
                .pseudomarginals
                .singleton
                .iter()
                .zip(&exact.singleton)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(TreeRow {
                seed,
                nodes: model.node_count(),
                j_scale: j,
                theta_scale: theta,
                converged: out.converged,
                iterations: out.iterations,
                max_marginal_error,
                free_energy_error: (-out.pseudomarginals.free_energy - exact.log_partition).abs(),
            })
        })
        .collect()
}

fn fixed_point_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    let desc = spec.model()?;
    let nested = cells(spec)
        .into_par_iter()
        .map(|(j, theta, seed)| {
            let model = desc.build(&ParamSpec::Uniform(j), &ParamSpec::Uniform(theta), seed)?;
            let mut points = enumerate_fixed_points(&model, spec.restarts, seed)?;
            sort_fixed_points(&mut points);
            let count = points.len();
            Ok(points
                .iter()
                .enumerate()
                .map(|(k, fp)| {
                    let rec = fp.stability.as_ref().expect("enumerated points carry stability");
                    SweepRow {
                        j,
                        theta,
                        seed,
                        count,
                        fixed_point: k,
                        free_energy: fp.free_energy(),
                        log_partition: fp.log_partition(),
                        mean_magnetization: expected_mean(&fp.pseudomarginals.singleton),
                        stability: rec.class,
                        spectral_radius: rec.spectrum.spectral_radius,
                        max_real_part: rec.spectrum.max_real_part,
                    }
                })
                .collect())
        })
        .collect();
    flat(nested)
}

fn hamming_threshold() -> Result<Vec<ThresholdRow>> {
    let jobs: Vec<(usize, Decoder)> =
        (1..=7).flat_map(|flip| [Decoder::Bp, Decoder::Exact].map(|d| (flip, d))).collect();
    jobs.into_par_iter()
        .map(|(flip_position, decoder)| {
            Ok(ThresholdRow { flip_position, decoder, threshold: correction_threshold(flip_position, decoder)? })
        })
        .collect()
}

fn sbp_vs_bp(spec: &ExperimentSpec) -> Result<Vec<SbpRow>> {
    let desc = spec.model()?;
    cells(spec)
        .into_par_iter()
        .map(|(j, theta, seed)| {
            let model = signed_couplings(desc, j, theta, seed)?;
            let exact = desc.exact(&model)?;
            let bp = run_bp(&model, &BPConfig::default(), &MessageSet::uniform(model.graph().directed_count()))?;
            let sbp = run_sbp(&model, &SBPConfig::default())?;
            Ok(SbpRow {
                seed,
                j,
                theta,
                bp_converged: bp.converged,
                bp_mse: marginal_mse(&bp.pseudomarginals, &exact),
                bp_free_energy: bp.pseudomarginals.free_energy,
                sbp_completed: sbp.completed,
                sbp_mse: marginal_mse(&sbp.pseudomarginals, &exact),
                sbp_free_energy: sbp.pseudomarginals.free_energy,
                exact_log_partition: exact.log_partition,
            })
        })
        .collect()
}

/// One run of `schedule` on `model` under the scheduler budget.
pub fn scheduler_run(model: &IsingModel, schedule: ScheduleKind, seed: u64) -> Result<(bool, usize)> {
    let directed = model.graph().directed_count();
    let cfg = BPConfig {
        max_iterations: scheduler_passes(directed),
        tolerance: SCHEDULER_TOLERANCE,
        seed,
        ..BPConfig::default()
    }
    .with_schedule(schedule);
    let out = run_bp(model, &cfg, &MessageSet::uniform(directed))?;
    Ok((out.converged, out.iterations))
}

fn scheduler_convergence(spec: &ExperimentSpec) -> Result<Vec<SchedulerRow>> {
    let desc = spec.model()?;
    let nested = cells(spec)
        .into_par_iter()
        .map(|(j, theta, seed)| {
            let model = desc.build(&spread(j), &spread(theta), seed)?;
            SCHEDULES
                .iter()
                .map(|&schedule| {
                    let (converged, iterations) = scheduler_run(&model, schedule, seed)?;
                    Ok(SchedulerRow { seed, j_scale: j, theta_scale: theta, schedule, converged, iterations })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect();
    flat(nested)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRows> {
    Ok(match spec.experiment {
        ExperimentKind::TreeExactness => ExperimentRows::Tree(tree_exactness(spec)?),
        ExperimentKind::FixedPointSweep => ExperimentRows::Sweep(fixed_point_sweep(spec)?),
        ExperimentKind::HammingThreshold => ExperimentRows::Threshold(hamming_threshold()?),
        ExperimentKind::SbpVsBp => ExperimentRows::Sbp(sbp_vs_bp(spec)?),
        ExperimentKind::SchedulerConvergence => ExperimentRows::Scheduler(scheduler_convergence(spec)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::{to_csv_string, Row};

    fn header_of<R: Row>(rows: &[R]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&rows[0]).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().to_string()
    }

    #[test]
    fn headers_match_serialized_fields() {
        let spec = ExperimentSpec { seeds: vec![0], ..ExperimentSpec::minimal(ExperimentKind::TreeExactness) };
        let ExperimentRows::Tree(rows) = run_experiment(&spec).unwrap() else { panic!() };
        assert_eq!(header_of(&rows), TreeRow::HEADER.join(","));
        let row = SchedulerRow {
            seed: 1,
            j_scale: 2.0,
            theta_scale: 3.0,
            schedule: ScheduleKind::RoundRobin,
            converged: true,
            iterations: 4,
        };
        assert_eq!(to_csv_string(&[row]).unwrap(), format!("{}\n1,2.0,3.0,round_robin,true,4\n", SchedulerRow::HEADER.join(",")));
    }

    #[test]
    fn tree_rows_are_exact() {
        let ExperimentRows::Tree(rows) = run_experiment(&ExperimentSpec::minimal(ExperimentKind::TreeExactness)).unwrap()
        else {
            panic!()
        };
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.converged && r.max_marginal_error < 1e-8 && r.free_energy_error < 1e-8));
    }

    #[test]
    fn sweep_counts_on_complete_graph() {
        let spec = ExperimentSpec {
            j: vec![0.2, 1.5],
            theta: vec![0.0],
            ..ExperimentSpec::minimal(ExperimentKind::FixedPointSweep)
        };
        let ExperimentRows::Sweep(rows) = run_experiment(&spec).unwrap() else { panic!() };
        let count = |j: f64| rows.iter().find(|r| r.j == j).unwrap().count;
        assert_eq!(count(0.2), 1);
        assert_eq!(count(1.5), 3);
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn signed_couplings_have_unit_magnitude() {
        let desc = ModelDesc::Grid { rows: 3, cols: 3, periodic: false };
        let m = signed_couplings(&desc, 1.0, 0.0, 4).unwrap();
        assert!(m.couplings().iter().all(|j| j.abs() == 1.0));
        assert!(m.fields().iter().all(|t| *t == 0.0));
    }

    #[test]
    fn budget_passes() {
        assert_eq!(scheduler_passes(288), 868);
        assert_eq!(scheduler_passes(250_000), 1);
    }
}
