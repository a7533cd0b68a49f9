//! Task implementations: each command reads validated config blocks, runs the
//! core toolkit and writes plot-ready CSV/JSON into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use qst_core::{
    build_hamiltonian, decompose, gap_ladder, localization_profile, order_report, run_pivot,
    run_pivot_seeded, run_schedule, suboptimal_snapshots, ChainSpec, HypercubeSchedule, Model,
    Observable, OptCount, OptimizerRun, Parameterization, SpectralDecomposition,
    Termination,
};

use crate::config::{default_box, ExperimentConfig, OptimizerBlock, ScaledTime, SweepBlock, Task};
use crate::CliError;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

fn decompose_chain(spec: &ChainSpec) -> Result<SpectralDecomposition, CliError> {
    Ok(decompose(&build_hamiltonian(spec)?)?)
}

#[derive(Serialize)]
struct RunSummary {
    task: &'static str,
    model: &'static str,
    n: usize,
    opt_count: OptCount,
    fill_value: f64,
    arrival_time: f64,
    seed: u64,
    best_cost: f64,
    evaluations: u64,
    termination: Termination,
}

impl RunSummary {
    fn new(
        task: Task,
        ctx: &Parameterization,
        arrival_time: f64,
        seed: u64,
        run: &OptimizerRun,
    ) -> Self {
        RunSummary {
            task: task.as_str(),
            model: ctx.model().as_str(),
            n: ctx.n(),
            opt_count: ctx.opt_count(),
            fill_value: ctx.fill_value(),
            arrival_time,
            seed,
            best_cost: run.best_cost,
            evaluations: run.evaluations,
            termination: run.termination,
        }
    }
}

fn trace_csv(run: &OptimizerRun) -> String {
    let mut text = String::from("iteration,best_cost,evaluations\n");
    for point in &run.trace {
        text += &format!("{},{:.16e},{}\n", point.iteration, point.best_cost, point.evaluations);
    }
    text
}

fn schedule_trace_csv(done: &HypercubeSchedule) -> String {
    let mut text = String::from("run,iteration,best_cost,evaluations\n");
    for record in &done.records {
        for point in &record.result.trace {
            text += &format!(
                "{},{},{:.16e},{}\n",
                record.run, point.iteration, point.best_cost, point.evaluations
            );
        }
    }
    text
}

pub fn cmd_build(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = config.chain.as_ref().expect("validated");
    let h = build_hamiltonian(spec)?;
    write_json(&out.join("chain.json"), spec)?;

    let n = h.n();
    let mut csv = String::new();
    for row in 0..n {
        let cells: Vec<String> =
            (0..n).map(|col| format!("{:.16e}", h.matrix()[(row, col)])).collect();
        csv += &cells.join(",");
        csv.push('\n');
    }
    write_text(&out.join("hamiltonian.csv"), &csv)?;
    log::info!("built {}x{n} one-excitation Hamiltonian", n);
    Ok(())
}

pub fn cmd_evolve(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = config.chain.as_ref().expect("validated");
    let grid_block = config.grid.as_ref().expect("validated");
    let n = spec.n();

    let arrival = match &config.arrival_time {
        Some(expr) => Some(expr.resolve(n, None)?),
        None => None,
    };
    let t_max = grid_block.t_max.resolve(n, arrival)?;
    if grid_block.points < 2 {
        return Err(CliError::config("grid needs at least 2 points"));
    }
    let grid: Vec<f64> = (0..grid_block.points)
        .map(|k| k as f64 * t_max / (grid_block.points - 1) as f64)
        .collect();

    let observables: Vec<Observable> = grid_block
        .observables
        .iter()
        .map(|name| name.parse::<Observable>().map_err(CliError::from))
        .collect::<Result<_, _>>()?;

    let sd = decompose_chain(spec)?;
    let mut series = qst_core::sample_series(&sd, &grid, &observables)?;
    if let Some(scaled) = grid_block.scaled_time {
        let denom = match scaled {
            ScaledTime::OverArrival => arrival.ok_or_else(|| {
                CliError::config("scaled_time t_over_T requires an arrival_time")
            })?,
            ScaledTime::OverLength => n as f64,
        };
        let column: Vec<f64> = grid.iter().map(|t| t / denom).collect();
        series.push_column(scaled.column_name(), column)?;
    }

    let mut buf = Vec::new();
    series.write_csv(&mut buf).map_err(|e| CliError::config(format!("csv: {e}")))?;
    write_text(&out.join("series.csv"), &String::from_utf8(buf).expect("utf8"))?;
    Ok(())
}

pub fn cmd_spectrum(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let spec = config.chain.as_ref().expect("validated");
    let n = spec.n();
    let arrival = config.arrival_time.as_ref().expect("validated").resolve(n, None)?;
    let block = config.spectrum.clone().unwrap_or_default();
    let gap_tol = block.gap_tol.unwrap_or(0.05);
    let weight_floor = block.weight_floor.unwrap_or(2.0 / n as f64);

    let sd = decompose_chain(spec)?;
    let ladder = gap_ladder(&sd, arrival)?;
    let profile = localization_profile(&sd);
    let report = order_report(&ladder, &profile, gap_tol, weight_floor)?;

    let mut buf = Vec::new();
    ladder.write_csv(&mut buf).map_err(|e| CliError::config(format!("csv: {e}")))?;
    write_text(&out.join("ladder.csv"), &String::from_utf8(buf).expect("utf8"))?;

    let mut buf = Vec::new();
    profile.write_csv(&mut buf).map_err(|e| CliError::config(format!("csv: {e}")))?;
    write_text(&out.join("localization.csv"), &String::from_utf8(buf).expect("utf8"))?;

    write_json(&out.join("order_report.json"), &report)?;
    log::info!(
        "spectrum: {} of {} gaps ordered, weight {:.4}",
        report.ordered_count,
        ladder.len(),
        report.ordered_weight
    );
    Ok(())
}

fn optimizer_context(config: &ExperimentConfig) -> Result<(Parameterization, f64), CliError> {
    let ctx = config.parameterization.clone().expect("validated");
    let arrival = config.arrival_time.as_ref().expect("validated").resolve(ctx.n(), None)?;
    Ok((ctx, arrival))
}

pub fn cmd_optimize(config: &ExperimentConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let (ctx, arrival) = optimizer_context(config)?;
    let block = config.optimizer.as_ref().expect("validated");
    let cfg = block.to_pivot_config(ctx.model(), ctx.n(), seed);

    let run = run_pivot(&ctx, arrival, &cfg)?;
    write_json(&out.join("best_chain.json"), &run.best_spec)?;
    write_text(&out.join("trace.csv"), &trace_csv(&run))?;
    write_json(&out.join("run.json"), &RunSummary::new(Task::Optimize, &ctx, arrival, seed, &run))?;
    log::info!("optimize: best P = {:.6} ({:?})", run.best_cost, run.termination);
    Ok(())
}

#[derive(Serialize)]
struct ScheduleRunRecord {
    run: usize,
    side: f64,
    best_cost: f64,
    evaluations: u64,
    termination: Termination,
}

#[derive(Serialize)]
struct ScheduleReport {
    initial_side: f64,
    delta: f64,
    runs: Vec<ScheduleRunRecord>,
}

pub fn cmd_schedule(config: &ExperimentConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let (ctx, arrival) = optimizer_context(config)?;
    let block = config.optimizer.as_ref().expect("validated");
    let schedule_cfg = config.schedule.clone().expect("validated");
    let cfg = block.to_pivot_config(ctx.model(), ctx.n(), seed);

    let done = run_schedule(&ctx, arrival, &cfg, &schedule_cfg)?;
    let best = done.best();
    write_json(&out.join("best_chain.json"), &best.best_spec)?;
    write_text(&out.join("trace.csv"), &schedule_trace_csv(&done))?;
    let report = ScheduleReport {
        initial_side: done.initial_side,
        delta: done.delta,
        runs: done
            .records
            .iter()
            .map(|r| ScheduleRunRecord {
                run: r.run,
                side: r.side,
                best_cost: r.result.best_cost,
                evaluations: r.result.evaluations,
                termination: r.result.termination,
            })
            .collect(),
    };
    write_json(&out.join("schedule.json"), &report)?;
    write_json(&out.join("run.json"), &RunSummary::new(Task::Schedule, &ctx, arrival, seed, best))?;
    log::info!("schedule: best P = {:.6} after {} runs", best.best_cost, done.records.len());
    Ok(())
}

pub fn cmd_snapshots(config: &ExperimentConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let (ctx, arrival) = optimizer_context(config)?;
    let block = config.optimizer.as_ref().expect("validated");
    let thresholds = &config.snapshots.as_ref().expect("validated").thresholds;
    let cfg = block.to_pivot_config(ctx.model(), ctx.n(), seed);

    let (run, snaps) = suboptimal_snapshots(&ctx, arrival, &cfg, thresholds)?;
    write_json(&out.join("snapshots.json"), &snaps)?;
    write_json(&out.join("best_chain.json"), &run.best_spec)?;
    write_text(&out.join("trace.csv"), &trace_csv(&run))?;
    write_json(&out.join("run.json"), &RunSummary::new(Task::Snapshots, &ctx, arrival, seed, &run))?;
    Ok(())
}

struct SweepRow {
    model: Model,
    n: usize,
    m_label: String,
    arrival: f64,
    seed: u64,
    best: Option<(f64, ChainSpec)>,
}

fn sweep_cell_box(sweep: &SweepBlock, block: &OptimizerBlock, model: Model, n: usize) -> (f64, f64) {
    let over = match model {
        Model::ShortRange => sweep.short_range_box,
        Model::LongRange => sweep.long_range_box,
    };
    if let Some([lo, hi]) = over {
        return (lo, hi);
    }
    let (lo, hi) = default_box(model, n);
    (block.box_low.unwrap_or(lo), block.box_high.unwrap_or(hi))
}

/// One (model, N) group of the sweep: cells in ascending opt-count order,
/// each seeded with the previous cell's best (padded with the fill value) in
/// addition to a fresh independent run; the better of the two wins. Seeding
/// makes best P non-decreasing in the number of optimized parameters.
fn sweep_group(
    sweep: &SweepBlock,
    block: &OptimizerBlock,
    model: Model,
    n: usize,
    group_index: usize,
    base_seed: u64,
) -> Vec<SweepRow> {
    let fill = 1.0;
    let arrival = sweep.arrival_factor * n as f64;
    let (lo, hi) = sweep_cell_box(sweep, block, model, n);
    let mut carried: Option<Vec<f64>> = None;
    let mut rows = Vec::with_capacity(sweep.opt_counts.len());

    for (m_index, &oc) in sweep.opt_counts.iter().enumerate() {
        let cell = (group_index * sweep.opt_counts.len() + m_index) as u64;
        let fresh_seed = base_seed.wrapping_add(2 * cell);
        let m_label = match oc {
            OptCount::All => "all".to_string(),
            OptCount::Count(m) => m.to_string(),
        };

        let outcome = (|| -> Result<(f64, Vec<f64>, ChainSpec), CliError> {
            let ctx = Parameterization::new(model, n, oc, fill)?;
            let m = ctx.free_count();
            let mut cfg = block.to_pivot_config(model, n, fresh_seed);
            cfg.box_low = lo;
            cfg.box_high = hi;

            let fresh = run_pivot(&ctx, arrival, &cfg)?;
            let mut best = fresh;
            if let Some(prev) = &carried {
                if prev.len() <= m {
                    let mut seed_probe = prev.clone();
                    seed_probe.resize(m, fill);
                    let mut seeded_cfg = cfg.clone();
                    seeded_cfg.rng_seed = fresh_seed.wrapping_add(1);
                    let seeded = run_pivot_seeded(&ctx, arrival, &seeded_cfg, &[seed_probe])?;
                    if seeded.best_cost > best.best_cost {
                        best = seeded;
                    }
                }
            }
            Ok((best.best_cost, best.best_free, best.best_spec))
        })();

        match outcome {
            Ok((p, free, spec)) => {
                carried = Some(free);
                rows.push(SweepRow {
                    model,
                    n,
                    m_label,
                    arrival,
                    seed: fresh_seed,
                    best: Some((p, spec)),
                });
            }
            Err(e) => {
                log::warn!("sweep cell {model:?} n={n} m={m_label} failed: {e}");
                rows.push(SweepRow { model, n, m_label, arrival, seed: fresh_seed, best: None });
            }
        }
    }
    rows
}

pub fn cmd_sweep(
    config: &ExperimentConfig,
    out: &Path,
    seed: u64,
    threads: usize,
) -> Result<(), CliError> {
    let sweep = config.sweep.as_ref().expect("validated");
    let block = config.optimizer.clone().unwrap_or_default();

    let groups: Vec<(usize, Model, usize)> = sweep
        .models
        .iter()
        .flat_map(|&model| sweep.lengths.iter().map(move |&n| (model, n)))
        .enumerate()
        .map(|(i, (model, n))| (i, model, n))
        .collect();

    let run_group =
        |&(index, model, n): &(usize, Model, usize)| sweep_group(sweep, &block, model, n, index, seed);

    let results: Vec<Vec<SweepRow>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::config(format!("cannot build thread pool: {e}")))?;
        pool.install(|| groups.par_iter().map(run_group).collect())
    } else {
        groups.iter().map(run_group).collect()
    };

    let mut csv = String::from("model,N,m,T,best_P,seed\n");
    for row in results.iter().flatten() {
        let p = match &row.best {
            Some((p, _)) => format!("{p:.16e}"),
            None => "nan".to_string(),
        };
        csv += &format!(
            "{},{},{},{:.16e},{},{}\n",
            row.model.as_str(),
            row.n,
            row.m_label,
            row.arrival,
            p,
            row.seed
        );
    }
    write_text(&out.join("sweep.csv"), &csv)?;

    if sweep.persist_chains {
        for row in results.iter().flatten() {
            if let Some((_, spec)) = &row.best {
                let name: PathBuf = out
                    .join("chains")
                    .join(format!("chain_{}_n{}_m{}.json", row.model.as_str(), row.n, row.m_label));
                write_json(&name, spec)?;
            }
        }
    }
    Ok(())
}
