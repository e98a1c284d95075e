//! The experiment commands behind the CLI subcommands.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::harness::config::{ExperimentConfig, SolverKind};
use crate::harness::io;
use crate::harness::run::{
    active_hyperparams, assemble, reconstruct, score, solve_instance, ssim_params, Problem,
    RunRecord, SolveOutput, RUN_RECORD_HEADER,
};
use crate::harness::HarnessError;
use crate::image::DynamicImage;

/// Generate the ground-truth stack and per-frame previews.
pub fn cmd_phantom(config: &ExperimentConfig, force: bool) -> Result<Vec<PathBuf>, HarnessError> {
    let spec = config.problem.phantom.to_spec();
    let img = crate::models::make_phantom(&spec).map_err(|e| HarnessError::Config(e.to_string()))?;
    let hash = config.hash();
    let dir = &config.outputs.dir;
    let mut written = Vec::new();

    let truth_path = dir.join("truth.f64");
    io::write_real_array(
        &truth_path,
        &img.data,
        vec![img.n_frames, img.height, img.width],
        &hash,
        force,
    )?;
    written.push(truth_path);

    for t in 0..img.n_frames {
        let path = dir.join(format!("frame_{t:03}.pgm"));
        io::write_pgm(&path, img.frame(t), img.width, img.height, &hash, force)?;
        written.push(path);
    }
    Ok(written)
}

fn write_solution(
    dir: &Path,
    output: &SolveOutput,
    hash: &str,
    force: bool,
) -> Result<(), HarnessError> {
    let shape = vec![
        output.stack.n_frames,
        output.stack.height,
        output.stack.width,
    ];
    match &output.complex_stack {
        Some(c) => io::write_complex_array(&dir.join("recon.f64"), &c.data, shape, hash, force)?,
        None => io::write_real_array(&dir.join("recon.f64"), &output.stack.data, shape, hash, force)?,
    }
    if let Some(theta) = &output.theta_image {
        io::write_real_array(
            &dir.join("theta_image.f64"),
            &theta.data,
            vec![theta.n_frames, theta.height, theta.width],
            hash,
            force,
        )?;
    }
    io::write_csv(
        &dir.join("trace.csv"),
        &output.trace_header,
        &output.trace_rows,
        hash,
        force,
    )?;
    Ok(())
}

fn record_for(
    config: &ExperimentConfig,
    run_id: String,
    output: &SolveOutput,
    problem: &Problem,
    wall_ms: f64,
) -> Result<RunRecord, HarnessError> {
    let (ssim, err) = match problem.truth() {
        Some(truth) => {
            let params = ssim_params(config, problem.mask());
            score(&output.stack, truth, &params)?
        }
        None => (f64::NAN, f64::NAN),
    };
    let (a, b, rho, inner_cap) = active_hyperparams(&config.solver);
    Ok(RunRecord {
        run_id,
        solver: config.solver.kind,
        eta_or_mu_s: a,
        theta_or_mu_t: b,
        rho,
        inner_cap,
        outer_iters: output.outer_iters,
        total_inner_iters: output.total_inner_iters,
        ssim_t_avg: ssim,
        nrmse: err,
        wall_ms,
    })
}

/// Reconstruct with the configured solver; write the stack, the solver
/// trace, and a single-row metrics table.
pub fn cmd_reconstruct(
    config: &ExperimentConfig,
    force: bool,
) -> Result<RunRecord, HarnessError> {
    let hash = config.hash();
    let problem = assemble(config)?;
    let started = std::time::Instant::now();
    let output = reconstruct(&problem, config)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let dir = &config.outputs.dir;
    write_solution(dir, &output, &hash, force)?;
    let record = record_for(config, format!("{hash}-000"), &output, &problem, wall_ms)?;
    io::write_csv(
        &dir.join("metrics.csv"),
        &RUN_RECORD_HEADER,
        &[record.to_csv_row()],
        &hash,
        force,
    )?;
    Ok(record)
}

/// One sweep cell: the solver config with the grid point substituted.
fn cell_config(config: &ExperimentConfig, a: f64, b: f64) -> ExperimentConfig {
    let mut c = config.clone();
    match c.solver.kind {
        SolverKind::Ias => {
            c.solver.ias.eta = 10f64.powf(a);
            c.solver.ias.theta_scale = 10f64.powf(b);
        }
        SolverKind::Admm => {
            c.solver.admm.mu_s = 10f64.powf(a);
            c.solver.admm.mu_t = 10f64.powf(b);
        }
        SolverKind::Lsq => {}
    }
    c
}

/// Run every grid point, writing a metrics table and an SSIM heatmap.
/// Cell failures are recorded and the sweep continues.
pub fn cmd_sweep(
    config: &ExperimentConfig,
    jobs: usize,
    force: bool,
) -> Result<Vec<RunRecord>, HarnessError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Config("sweep table missing".into()))?;
    let (axis_a, axis_b) = match config.solver.kind {
        SolverKind::Ias => (&sweep.eta_log10, &sweep.theta_log10),
        SolverKind::Admm => (&sweep.mu_s_log10, &sweep.mu_t_log10),
        SolverKind::Lsq => {
            return Err(HarnessError::Config("sweep needs ias or admm".into()));
        }
    };
    let hash = config.hash();
    let problem = assemble(config)?;

    let n_cols = axis_b.len();
    let cells: Vec<(usize, f64, f64)> = axis_a
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| {
            axis_b
                .iter()
                .enumerate()
                .map(move |(j, &b)| (i * n_cols + j, a, b))
        })
        .collect();

    let run_cell = |&(idx, a, b): &(usize, f64, f64)| -> (usize, Result<RunRecord, HarnessError>) {
        let cell = cell_config(config, a, b);
        let started = std::time::Instant::now();
        let result = reconstruct(&problem, &cell).and_then(|output| {
            record_for(
                &cell,
                format!("{hash}-{idx:03}"),
                &output,
                &problem,
                started.elapsed().as_secs_f64() * 1e3,
            )
        });
        (idx, result)
    };

    let mut outcomes: Vec<(usize, Result<RunRecord, HarnessError>)> = if jobs == 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Solver(e.to_string()))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    };
    outcomes.sort_by_key(|(idx, _)| *idx);

    let (_, _, _, inner_cap) = active_hyperparams(&config.solver);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((idx, outcome), &(_, a, b)) in outcomes.into_iter().zip(&cells) {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failures.push(format!("cell {idx} (10^{a}, 10^{b}): {e}"));
                records.push(RunRecord {
                    run_id: format!("{hash}-{idx:03}"),
                    solver: config.solver.kind,
                    eta_or_mu_s: 10f64.powf(a),
                    theta_or_mu_t: 10f64.powf(b),
                    rho: if config.solver.kind == SolverKind::Admm {
                        config.solver.admm.rho
                    } else {
                        0.0
                    },
                    inner_cap,
                    outer_iters: 0,
                    total_inner_iters: 0,
                    ssim_t_avg: f64::NAN,
                    nrmse: f64::NAN,
                    wall_ms: f64::NAN,
                });
            }
        }
    }

    let dir = &config.outputs.dir;
    let rows: Vec<Vec<String>> = records.iter().map(|r| r.to_csv_row()).collect();
    io::write_csv(&dir.join("sweep.csv"), &RUN_RECORD_HEADER, &rows, &hash, force)?;
    if !failures.is_empty() {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep_failures.txt"), failures.join("\n"))?;
    }

    // Rasterize the SSIM surface, one block per grid cell.
    let block = 16;
    let (rows_n, cols_n) = (axis_a.len(), axis_b.len());
    let mut raster = vec![0.0; rows_n * cols_n * block * block];
    for (cell_idx, rec) in records.iter().enumerate() {
        let (ci, cj) = (cell_idx / cols_n, cell_idx % cols_n);
        let v = if rec.ssim_t_avg.is_nan() { 0.0 } else { rec.ssim_t_avg };
        for r in 0..block {
            for c in 0..block {
                raster[(ci * block + r) * cols_n * block + cj * block + c] = v;
            }
        }
    }
    io::write_pgm(
        &dir.join("heatmap.pgm"),
        &raster,
        cols_n * block,
        rows_n * block,
        &hash,
        force,
    )?;
    Ok(records)
}

/// Per-iteration SSIM curves for each inner-iteration cap.
pub fn cmd_iterstudy(config: &ExperimentConfig, force: bool) -> Result<usize, HarnessError> {
    if config.solver.kind == SolverKind::Lsq {
        return Err(HarnessError::Config(
            "iterstudy needs an iterative solver (ias or admm)".into(),
        ));
    }
    let hash = config.hash();
    let problem = assemble(config)?;
    let truth = problem
        .truth()
        .ok_or_else(|| HarnessError::Config("iterstudy requires a ground truth".into()))?
        .clone();
    let params = ssim_params(config, problem.mask());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for &cap in &config.iterstudy.inner_caps {
        let mut cell = config.clone();
        match cell.solver.kind {
            SolverKind::Ias => {
                cell.solver.ias.inner_max_iters = cap;
                cell.solver.ias.max_outer_iters = config.iterstudy.max_outer_iters;
                // Run every outer iteration of the study.
                cell.solver.ias.outer_tol = f64::MIN_POSITIVE;
            }
            SolverKind::Admm => {
                cell.solver.admm.inner_max_iters = cap;
                cell.solver.admm.max_outer_iters = config.iterstudy.max_outer_iters;
                cell.solver.admm.eps_abs = 0.0;
                cell.solver.admm.eps_rel = 0.0;
            }
            SolverKind::Lsq => unreachable!(),
        }
        let solver_name = cell.solver.kind.to_string();
        let mut study_rows: Vec<Vec<String>> = Vec::new();
        {
            let mut on_iter = |iter: usize, stack: DynamicImage<f64>, cum_ms: f64| {
                let s = crate::metrics::ssim_time_avg(&stack, &truth, &params)
                    .unwrap_or(f64::NAN);
                study_rows.push(vec![
                    solver_name.clone(),
                    cap.to_string(),
                    iter.to_string(),
                    io::fmt_f64(s),
                    io::fmt_f64(cum_ms),
                ]);
            };
            match &problem {
                Problem::Real(p) => {
                    let mut cb = |iter: usize, x: &[f64], ms: f64| {
                        let stack =
                            DynamicImage::from_data(p.width, p.height, p.n_frames, x.to_vec());
                        on_iter(iter, stack, ms);
                    };
                    solve_instance(p, &cell.solver, Some(&mut cb))?;
                }
                Problem::Complex(p) => {
                    let mut cb = |iter: usize, x: &[num_complex::Complex64], ms: f64| {
                        let stack =
                            DynamicImage::from_data(p.width, p.height, p.n_frames, x.to_vec())
                                .magnitude();
                        on_iter(iter, stack, ms);
                    };
                    solve_instance(p, &cell.solver, Some(&mut cb))?;
                }
            }
        }
        rows.extend(study_rows);
    }

    io::write_csv(
        &config.outputs.dir.join("iterstudy.csv"),
        &["solver", "inner_cap", "outer_iter", "ssim", "cum_wall_ms"],
        &rows,
        &hash,
        force,
    )?;
    Ok(rows.len())
}

/// Score one serialized reconstruction against a reference stack.
pub fn cmd_metrics(
    recon_path: &Path,
    reference_path: &Path,
    config: &ExperimentConfig,
    out: Option<&Path>,
    force: bool,
) -> Result<(f64, f64), HarnessError> {
    let (recon_vals, recon_sc) = io::read_any_array(recon_path)?;
    let (ref_vals, ref_sc) = io::read_real_array(reference_path)?;
    if recon_sc.shape != ref_sc.shape {
        return Err(HarnessError::Config(format!(
            "shape mismatch: {:?} vs {:?}",
            recon_sc.shape, ref_sc.shape
        )));
    }
    if ref_sc.shape.len() != 3 {
        return Err(HarnessError::Config(
            "arrays must have shape [n_frames, height, width]".into(),
        ));
    }
    let (nt, h, w) = (ref_sc.shape[0], ref_sc.shape[1], ref_sc.shape[2]);
    // Real stacks keep their signs; only complex ones are scored by modulus.
    let recon_real: Vec<f64> = match recon_sc.field {
        crate::num::ScalarField::Real => recon_vals.iter().map(|v| v.re).collect(),
        crate::num::ScalarField::Complex => recon_vals.iter().map(|v| v.norm()).collect(),
    };
    let recon = DynamicImage::from_data(w, h, nt, recon_real);
    let reference = DynamicImage::from_data(w, h, nt, ref_vals);

    let mask = if config.metrics.use_phantom_mask {
        Some(config.problem.phantom.to_spec().mask())
    } else {
        None
    };
    // Same protocol as the reconstruct command: masked SSIM and masked
    // nRMSE against the reference.
    let params = ssim_params(config, mask.as_ref());
    let (ssim, err) = score(&recon, &reference, &params)?;

    if let Some(dir) = out {
        io::write_csv(
            &dir.join("metrics.csv"),
            &["ssim_t_avg", "nrmse"],
            &[vec![io::fmt_f64(ssim), io::fmt_f64(err)]],
            &config.hash(),
            force,
        )?;
    }
    Ok((ssim, err))
}
