use bethe_core::accuracy::{classify_patch_fixed_point, expected_mean, marginal_mse, PatchClass};
use bethe_core::bp::{run_bp, BPConfig, BPOutcome, MessageSet, ScheduleKind};
use bethe_core::coding::{belief_at_flip, Decoder};
use bethe_core::exact::{gibbs_sample, transfer_matrix_grid, TRANSFER_ROW_LIMIT};
use bethe_core::fixedpoints::{enumerate_by_bp, enumerate_fixed_points, FixedPoint};
use bethe_core::model::make_patch_model;
use bethe_core::sbp::{run_sbp, SBPConfig};
use bethe_core::stability::{analyze, StabilityClass};
use bethe_core::{IsingModel, PatchLayout};

use crate::error::Result;
use crate::experiment::{fixed_point_order, sort_fixed_points};
use crate::output::csv_row;

csv_row!(MarginalRow {
    node: usize,
    p_plus: f64,
    mean: f64,
});

csv_row!(FixedPointRow {
    fixed_point: usize,
    free_energy: f64,
    log_partition: f64,
    mean_magnetization: f64,
    residual: f64,
    stability: StabilityClass,
    spectral_radius: f64,
    max_real_part: f64,
});

csv_row!(StabilityRow {
    converged: bool,
    iterations: usize,
    free_energy: f64,
    stability: StabilityClass,
    spectral_radius: f64,
    max_real_part: f64,
});

csv_row!(PathRow {
    step: usize,
    zeta: f64,
    free_energy: f64,
    log_partition: f64,
    mean_magnetization: f64,
});

csv_row!(PatchRow {
    j: f64,
    theta: f64,
    fixed_point: usize,
    hits: usize,
    class: PatchClass,
    flipped: usize,
    boundary_edges: usize,
    conflicting_edges: usize,
    free_energy: f64,
    log_partition: f64,
    stability: StabilityClass,
    marginal_mse: Option<f64>,
});

csv_row!(DecodeRow {
    flip_position: usize,
    epsilon: f64,
    decoder: Decoder,
    belief_at_flip: f64,
    corrected: bool,
});

pub fn marginal_rows(singleton: &[f64]) -> Vec<MarginalRow> {
    singleton
        .iter()
        .enumerate()
        .map(|(node, &p)| MarginalRow { node, p_plus: p, mean: 2.0 * p - 1.0 })
        .collect()
}

/// `init_seed = None` starts from uniform messages.
pub fn bp_run(model: &IsingModel, config: &BPConfig, init_seed: Option<u64>) -> Result<BPOutcome> {
    let directed = model.graph().directed_count();
    let init = match init_seed {
        Some(seed) => MessageSet::random(directed, seed),
        None => MessageSet::uniform(directed),
    };
    Ok(run_bp(model, config, &init)?)
}

fn fixed_point_row(k: usize, fp: &FixedPoint) -> FixedPointRow {
    let rec = fp.stability.as_ref().expect("enumerated points carry stability");
    FixedPointRow {
        fixed_point: k,
        free_energy: fp.free_energy(),
        log_partition: fp.log_partition(),
        mean_magnetization: expected_mean(&fp.pseudomarginals.singleton),
        residual: fp.residual,
        stability: rec.class,
        spectral_radius: rec.spectrum.spectral_radius,
        max_real_part: rec.spectrum.max_real_part,
    }
}

pub fn enumerate(model: &IsingModel, restarts: usize, seed: u64) -> Result<Vec<FixedPointRow>> {
    let mut points = enumerate_fixed_points(model, restarts, seed)?;
    sort_fixed_points(&mut points);
    Ok(points.iter().enumerate().map(|(k, fp)| fixed_point_row(k, fp)).collect())
}

/// Runs BP, then classifies the point it stopped at.
pub fn stability(model: &IsingModel, config: &BPConfig, init_seed: Option<u64>) -> Result<StabilityRow> {
    let out = bp_run(model, config, init_seed)?;
    let rec = analyze(model, &out.messages.to_reparam())?;
    Ok(StabilityRow {
        converged: out.converged,
        iterations: out.iterations,
        free_energy: out.pseudomarginals.free_energy,
        stability: rec.class,
        spectral_radius: rec.spectrum.spectral_radius,
        max_real_part: rec.spectrum.max_real_part,
    })
}

pub fn sbp_path(model: &IsingModel, config: &SBPConfig) -> Result<Vec<PathRow>> {
    let out = run_sbp(model, config)?;
    Ok(out
        .path
        .iter()
        .enumerate()
        .map(|(step, e)| PathRow {
            step,
            zeta: e.zeta,
            free_energy: e.fixed_point.free_energy(),
            log_partition: e.fixed_point.log_partition(),
            mean_magnetization: expected_mean(&e.fixed_point.pseudomarginals.singleton),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchArgs {
    pub rows: usize,
    pub cols: usize,
    pub j: f64,
    pub theta: f64,
    pub runs: usize,
    pub seed: u64,
}

/// Fixed points of the two-half patch model reached by randomly started BP.
pub fn patch(args: &PatchArgs) -> Result<Vec<PatchRow>> {
    let layout = PatchLayout::halves(args.rows, args.cols);
    let model = make_patch_model(args.rows, args.cols, &layout, args.j, args.theta)?;
    let cfg = BPConfig::default().with_schedule(ScheduleKind::Random);
    let found = enumerate_by_bp(&model, args.runs, &cfg, args.seed)?;
    let exact = if args.rows <= TRANSFER_ROW_LIMIT {
        Some(transfer_matrix_grid(&model, args.rows, args.cols)?)
    } else {
        None
    };
    let mut order: Vec<usize> = (0..found.points.len()).collect();
    order.sort_by(|&a, &b| fixed_point_order(&found.points[a], &found.points[b]));
    order
        .iter()
        .enumerate()
        .map(|(rank, &k)| {
            let fp = &found.points[k];
            let report = classify_patch_fixed_point(&model, &fp.pseudomarginals, &layout, None)?;
            Ok(PatchRow {
                j: args.j,
                theta: args.theta,
                fixed_point: rank,
                hits: found.hits[k],
                class: report.class,
                flipped: report.flipped_count,
                boundary_edges: report.boundary_edges.len(),
                conflicting_edges: report.conflicting_edges.len(),
                free_energy: fp.free_energy(),
                log_partition: fp.log_partition(),
                stability: fp.stability.as_ref().map_or(StabilityClass::Marginal, |r| r.class),
                marginal_mse: exact.as_ref().map(|e| marginal_mse(&fp.pseudomarginals, e)),
            })
        })
        .collect()
}

pub fn decode(flip_position: usize, epsilons: &[f64], decoder: Decoder) -> Result<Vec<DecodeRow>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let p = belief_at_flip(flip_position, epsilon, decoder)?;
            Ok(DecodeRow { flip_position, epsilon, decoder, belief_at_flip: p, corrected: p > 0.5 })
        })
        .collect()
}

pub fn gibbs(model: &IsingModel, sweeps: usize, burn_in: usize, seed: u64) -> Result<Vec<MarginalRow>> {
    Ok(marginal_rows(&gibbs_sample(model, sweeps, burn_in, seed)?))
}
