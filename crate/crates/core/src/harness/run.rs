//! Plan execution: one task per (instance, realization), run in parallel.

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

use super::{
    mean_std, AggregateRow, AxesPoint, ExperimentPlan, Grid, PlanKind, SweepResult, SweepRow,
    ETA_WINDOW,
};
use crate::dynamics::{
    integrate_kuramoto, integrate_sl, integrate_sl_feedback, FeedbackConfig, RhoTarget, SimConfig,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::graphs::{
    build_complete, build_ring, embed_triad, triad_frequencies, RingSpec, WeightDistribution,
};
use crate::metrics::{
    coherence_complete, coherence_triad, embedded_energy, energy_difference_half, error_ratio,
    rmse_eta, unembedded_energy, winding_number, xy_energy,
};
use crate::optimizer::{basin_hopping, BasinHoppingConfig};
use crate::seed;

/// Integration horizon rule: at least `50 / min(1, coupling_scale)`, so slow
/// weak-coupling dynamics get proportionally more time; a larger explicit
/// `t_end` in the plan wins.
fn effective_sim(sim: &SimConfig, coupling_scale: f64) -> SimConfig {
    let scale = coupling_scale.min(1.0).max(1e-9);
    SimConfig {
        t_end: sim.t_end.max(50.0 / scale),
        ..*sim
    }
}

struct InstanceSeeds {
    row: u64,
    weights: u64,
    frequencies: u64,
    init: u64,
    optimizer: u64,
}

impl InstanceSeeds {
    fn new(plan: &ExperimentPlan, seed_index: usize, realization: usize) -> Self {
        let row = seed::derive(
            plan.master_seed,
            &[plan.kind.tag(), seed_index as u64, realization as u64],
        );
        Self {
            row,
            weights: seed::derive(row, &[seed::STREAM_WEIGHTS]),
            frequencies: seed::derive(row, &[seed::STREAM_FREQUENCIES]),
            init: seed::derive(row, &[seed::STREAM_INIT]),
            optimizer: seed::derive(row, &[seed::STREAM_OPTIMIZER]),
        }
    }
}

fn ok_row(
    point: &AxesPoint,
    realization: usize,
    seeds: &InstanceSeeds,
    metrics: Vec<(&'static str, f64)>,
) -> SweepRow {
    SweepRow {
        point: *point,
        realization,
        seed: seeds.row,
        failed: false,
        metrics: metrics.into_iter().collect(),
    }
}

fn failed_row(point: &AxesPoint, realization: usize, seeds: &InstanceSeeds) -> SweepRow {
    SweepRow {
        point: *point,
        realization,
        seed: seeds.row,
        failed: true,
        metrics: BTreeMap::new(),
    }
}

// Divergence (and a stalled optimizer) are per-row data; anything else is a
// plan-level failure and aborts the sweep.
fn is_row_failure(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. } | Error::NonConvergence { .. })
}

/// Run every (axes point, realization) task of a validated plan.
///
/// Rows come back sorted by (grid index, realization); aggregates hold the
/// per-point mean and sample standard deviation of each metric over the
/// non-failed realizations.
pub fn run_plan(plan: &ExperimentPlan) -> Result<SweepResult> {
    plan.validate()?;
    let grid = Grid::resolve(plan);
    let points = grid.points();
    let n_seed = grid.n_seed_points();
    let mut by_seed: Vec<Vec<AxesPoint>> = vec![Vec::new(); n_seed];
    for p in &points {
        by_seed[p.seed_index].push(*p);
    }

    let tasks: Vec<(usize, usize)> = (0..n_seed)
        .flat_map(|s| (0..plan.realizations).map(move |r| (s, r)))
        .collect();

    let nested: Result<Vec<Vec<SweepRow>>> = tasks
        .par_iter()
        .map(|&(s, r)| run_instance(plan, &by_seed[s], s, r))
        .collect();
    let mut rows: Vec<SweepRow> = nested?.into_iter().flatten().collect();
    rows.sort_by_key(|row| (row.point.flat_index, row.realization));

    let aggregate = aggregate_rows(plan, &points, &rows);
    Ok(SweepResult { rows, aggregate })
}

fn aggregate_rows(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    rows: &[SweepRow],
) -> Vec<AggregateRow> {
    let columns = plan.metric_columns();
    points
        .iter()
        .map(|point| {
            let mine: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.point.flat_index == point.flat_index)
                .collect();
            let failed = mine.iter().filter(|r| r.failed).count();
            let mut stats = BTreeMap::new();
            for &col in &columns {
                let values: Vec<f64> = mine
                    .iter()
                    .filter(|r| !r.failed)
                    .filter_map(|r| r.metrics.get(col).copied())
                    .collect();
                stats.insert(col, mean_std(&values));
            }
            AggregateRow {
                point: *point,
                realizations: mine.len(),
                failed,
                stats,
            }
        })
        .collect()
}

fn run_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    seed_index: usize,
    realization: usize,
) -> Result<Vec<SweepRow>> {
    let seeds = InstanceSeeds::new(plan, seed_index, realization);
    match plan.kind {
        PlanKind::CoherenceSweep => coherence_instance(plan, points, realization, &seeds),
        PlanKind::EtaSweep => eta_instance(plan, points, realization, &seeds),
        PlanKind::XyErrorSweep => xy_error_instance(plan, points, realization, &seeds),
        PlanKind::TwistedCensus => twisted_instance(plan, points, realization, &seeds),
        PlanKind::FeedbackSweep => feedback_instance(plan, points, realization, &seeds),
        PlanKind::KuramotoComparison => kuramoto_instance(plan, points, realization, &seeds),
    }
}

fn coherence_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let triad_mode = plan.axes.j_c.is_some();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let started = Instant::now();
        let src = build_complete(p.n, WeightDistribution::ConstantFM(p.j), 0)?;
        let outcome = if triad_mode {
            let emb = embed_triad(&src, p.j_c, p.looped)?;
            let omega = triad_frequencies(emb.n_triad_vertices(), p.sigma, seeds.frequencies)?;
            let net = emb.to_network(omega)?;
            let sim = effective_sim(&plan.sim, p.j.min(p.j_c));
            integrate_sl(&net, &sim, seeds.init).and_then(|traj| {
                let rep = coherence_triad(&emb, &traj.final_phases())?;
                Ok(vec![("r_inter", rep.r_inter), ("r_intra", rep.r_intra)])
            })
        } else {
            let omega = triad_frequencies(p.n, p.sigma, seeds.frequencies)?;
            let net = src.with_frequencies(omega)?;
            let sim = effective_sim(&plan.sim, p.j);
            integrate_sl(&net, &sim, seeds.init).and_then(|traj| {
                Ok(vec![(
                    "r_complete",
                    coherence_complete(&traj.final_phases())?,
                )])
            })
        };
        match outcome {
            Ok(mut metrics) => {
                metrics.push(("runtime_s", started.elapsed().as_secs_f64()));
                rows.push(ok_row(p, realization, seeds, metrics));
            }
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn eta_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(points.len());
    // The complete-graph run is shared across the j_c/looped scan; cache it
    // per (j, t_end) so paired runs sit on identical grids.
    let mut complete_cache: Vec<((u64, u64), Result<Trajectory>)> = Vec::new();
    for p in points {
        let started = Instant::now();
        let sim = effective_sim(&plan.sim, p.j.min(p.j_c));
        let key = (p.j.to_bits(), sim.t_end.to_bits());

        let src = build_complete(p.n, WeightDistribution::ConstantFM(p.j), 0)?;
        let emb = embed_triad(&src, p.j_c, p.looped)?;
        let m = emb.n_triad_vertices();
        let omega_triad = triad_frequencies(m, p.sigma, seeds.frequencies)?;
        // The complete graph consumes the leading n draws of the same stream.
        let omega_complete = triad_frequencies(p.n, p.sigma, seeds.frequencies)?;

        if !complete_cache.iter().any(|(k, _)| *k == key) {
            let net_c = src.clone().with_frequencies(omega_complete)?;
            complete_cache.push((key, integrate_sl(&net_c, &sim, seeds.init)));
        }
        let complete = &complete_cache
            .iter()
            .find(|(k, _)| *k == key)
            .expect("just inserted")
            .1;

        let outcome = match complete {
            Ok(complete_traj) => {
                let net_t = emb.to_network(omega_triad)?;
                integrate_sl(&net_t, &sim, seeds.init).and_then(|triad_traj| {
                    rmse_eta(complete_traj, &triad_traj, &emb, ETA_WINDOW)
                })
            }
            Err(Error::Divergence { t }) => Err(Error::Divergence { t: *t }),
            Err(e) => {
                return Err(Error::InvalidArgument(format!(
                    "complete-graph run failed: {e}"
                )))
            }
        };
        match outcome {
            Ok(eta) => rows.push(ok_row(
                p,
                realization,
                seeds,
                vec![("eta", eta), ("runtime_s", started.elapsed().as_secs_f64())],
            )),
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn xy_error_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let n = points[0].n;
    let sigma = points[0].sigma;
    let src = build_complete(
        n,
        WeightDistribution::UniformInterval(-1.0, 1.0),
        seeds.weights,
    )?;
    let reference = basin_hopping(
        &src,
        &BasinHoppingConfig {
            seed: seeds.optimizer,
            ..Default::default()
        },
    );
    let e_bh = match reference {
        Ok(r) => r.energy,
        Err(e) if is_row_failure(&e) => {
            return Ok(points
                .iter()
                .map(|p| failed_row(p, realization, seeds))
                .collect())
        }
        Err(e) => return Err(e),
    };

    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let started = Instant::now();
        let emb = embed_triad(&src, p.j_c, p.looped)?;
        let omega = triad_frequencies(emb.n_triad_vertices(), sigma, seeds.frequencies)?;
        let net = emb.to_network(omega)?;
        let sim = effective_sim(&plan.sim, p.j_c.min(1.0));
        match integrate_sl(&net, &sim, seeds.init) {
            Ok(traj) => {
                let phases = traj.final_phases();
                let e_unemb = unembedded_energy(&emb, &src, &phases);
                let e_emb = embedded_energy(&emb, &src, &phases);
                rows.push(ok_row(
                    p,
                    realization,
                    seeds,
                    vec![
                        ("e_bh", e_bh),
                        ("e_emb", e_emb),
                        ("e_unemb", e_unemb),
                        ("err_emb", error_ratio(e_bh, e_emb)?),
                        ("err_unemb", error_ratio(e_bh, e_unemb)?),
                        ("runtime_s", started.elapsed().as_secs_f64()),
                    ],
                ));
            }
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn twisted_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let started = Instant::now();
        let ring = build_ring(&RingSpec {
            n_vertices: p.n,
            neighbor_count: p.neighbor_count,
            coupling: p.j,
        })?;
        let sim = effective_sim(&plan.sim, p.j);
        match integrate_sl(&ring, &sim, seeds.init) {
            Ok(traj) => {
                let rep = winding_number(&traj.final_phases())?;
                rows.push(ok_row(
                    p,
                    realization,
                    seeds,
                    vec![
                        ("abs_ell", rep.ell.unsigned_abs() as f64),
                        ("ell", rep.ell as f64),
                        ("runtime_s", started.elapsed().as_secs_f64()),
                    ],
                ));
            }
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn feedback_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let n = points[0].n;
    let sigma = points[0].sigma;
    let src = build_complete(
        n,
        WeightDistribution::UniformInterval(-1.0, 1.0),
        seeds.weights,
    )?;
    let reference = basin_hopping(
        &src,
        &BasinHoppingConfig {
            seed: seeds.optimizer,
            ..Default::default()
        },
    );
    let e_bh = match reference {
        Ok(r) => r.energy,
        Err(e) if is_row_failure(&e) => {
            return Ok(points
                .iter()
                .map(|p| failed_row(p, realization, seeds))
                .collect())
        }
        Err(e) => return Err(e),
    };

    let spread = |traj: &Trajectory| {
        let rho = traj.final_amplitudes();
        let max = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    };

    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let started = Instant::now();
        let fb = FeedbackConfig {
            epsilon: p.epsilon,
            rho_target: RhoTarget::RunningMax,
        };
        let emb = embed_triad(&src, p.j_c, false)?;
        let omega_triad = triad_frequencies(emb.n_triad_vertices(), sigma, seeds.frequencies)?;
        let omega_complete = triad_frequencies(n, sigma, seeds.frequencies)?;
        let sim = effective_sim(&plan.sim, p.j_c.min(1.0));

        let outcome = (|| -> Result<Vec<(&'static str, f64)>> {
            let net_t = emb.to_network(omega_triad.clone())?;
            let triad_traj = integrate_sl_feedback(&net_t, &sim, &fb, seeds.init)?;
            let phases = triad_traj.final_phases();
            let e_unemb = unembedded_energy(&emb, &src, &phases);

            let net_c = src.clone().with_frequencies(omega_complete.clone())?;
            let complete_traj = integrate_sl_feedback(&net_c, &sim, &fb, seeds.init)?;

            Ok(vec![
                ("e_bh", e_bh),
                ("e_unemb", e_unemb),
                ("err_unemb", error_ratio(e_bh, e_unemb)?),
                ("rho_spread_complete", spread(&complete_traj)),
                ("rho_spread_triad", spread(&triad_traj)),
                ("runtime_s", started.elapsed().as_secs_f64()),
            ])
        })();
        match outcome {
            Ok(metrics) => rows.push(ok_row(p, realization, seeds, metrics)),
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn kuramoto_instance(
    plan: &ExperimentPlan,
    points: &[AxesPoint],
    realization: usize,
    seeds: &InstanceSeeds,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let started = Instant::now();
        let src = build_complete(
            p.n,
            WeightDistribution::UniformInterval(-1.0, 1.0),
            seeds.weights,
        )?;
        let sim = effective_sim(&plan.sim, 1.0);
        let outcome = (|| -> Result<Vec<(&'static str, f64)>> {
            let sl = integrate_sl(&src, &sim, seeds.init)?;
            let km = integrate_kuramoto(&src, &sim, seeds.init)?;
            let e_sl = xy_energy(&src, &sl.final_phases());
            let e_km = xy_energy(&src, &km.final_phases());
            Ok(vec![
                ("e_km", e_km),
                ("e_sl", e_sl),
                ("ediff_half", energy_difference_half(e_km, e_sl)?),
                ("runtime_s", started.elapsed().as_secs_f64()),
            ])
        })();
        match outcome {
            Ok(metrics) => rows.push(ok_row(p, realization, seeds, metrics)),
            Err(e) if is_row_failure(&e) => rows.push(failed_row(p, realization, seeds)),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}
