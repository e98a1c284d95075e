//! Problem assembly from configuration and single-run reconstruction
//! dispatch (IAS / ADMM / damped least squares).

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::admm::{admm_run_monitored, AdmmConfig, AdmmIterRecord, AdmmState};
use crate::harness::config::{
    ExperimentConfig, ForwardKind, FourierPattern, ProblemKind, SolverConfig, SolverKind,
};
use crate::harness::io;
use crate::harness::HarnessError;
use crate::ias::{ias_run_monitored, IasConfig, IasIterRecord, IasState};
use crate::image::DynamicImage;
use crate::linops::{DynOp, IdentityMap, KroneckerMap, LinOp};
use crate::metrics::{nrmse, ssim_time_avg, SsimParams};
use crate::models::{add_noise, dynamic_radon_op, fourier_sample_op, FourierMask, TomoGeometry};
use crate::num::Scalar;
use crate::solvers::{lsmr_solve, LsmrOptions};
use crate::transforms::{
    haar_synthesis, CumsumMap, DiffMap, HaarAnalysisMap, HaarSpec, HaarSynthesisMap, TemporalSpec,
};

/// A fully assembled inverse problem over one scalar field.
pub struct ProblemInstance<T: Scalar> {
    pub forward: DynOp<T>,
    pub data: Vec<T>,
    /// Spatiotemporal dictionary W = E ⊗ S.
    pub dictionary: DynOp<T>,
    /// Frame-wise wavelet analysis (the spatial CS transform).
    pub h_spatial: DynOp<T>,
    /// Per-pixel temporal finite differences (the temporal CS transform).
    pub h_temporal: DynOp<T>,
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub haar_spec: HaarSpec,
    pub truth: Option<DynamicImage<f64>>,
    pub mask: Option<Vec<bool>>,
}

pub enum Problem {
    Real(ProblemInstance<f64>),
    Complex(ProblemInstance<Complex64>),
}

impl Problem {
    pub fn truth(&self) -> Option<&DynamicImage<f64>> {
        match self {
            Problem::Real(p) => p.truth.as_ref(),
            Problem::Complex(p) => p.truth.as_ref(),
        }
    }

    pub fn mask(&self) -> Option<&Vec<bool>> {
        match self {
            Problem::Real(p) => p.mask.as_ref(),
            Problem::Complex(p) => p.mask.as_ref(),
        }
    }
}

fn build_dictionary<T: Scalar>(
    haar: HaarSpec,
    n_frames: usize,
) -> Result<DynOp<T>, HarnessError> {
    let temporal = TemporalSpec::new(n_frames).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(Arc::new(KroneckerMap::new(
        Arc::new(CumsumMap { spec: temporal }) as DynOp<T>,
        Arc::new(HaarSynthesisMap { spec: haar }) as DynOp<T>,
    )))
}

fn build_h_spatial<T: Scalar>(haar: HaarSpec, n_frames: usize) -> DynOp<T> {
    Arc::new(KroneckerMap::new(
        Arc::new(IdentityMap { n: n_frames }) as DynOp<T>,
        Arc::new(HaarAnalysisMap { spec: haar }) as DynOp<T>,
    ))
}

fn build_h_temporal<T: Scalar>(n_pixels: usize, n_frames: usize) -> Result<DynOp<T>, HarnessError> {
    let temporal = TemporalSpec::new(n_frames).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(Arc::new(KroneckerMap::new(
        Arc::new(DiffMap { spec: temporal }) as DynOp<T>,
        Arc::new(IdentityMap { n: n_pixels }) as DynOp<T>,
    )))
}

/// Build the forward model, data, dictionary, and transforms described by
/// the configuration.
pub fn assemble(config: &ExperimentConfig) -> Result<Problem, HarnessError> {
    let (truth, width, height, n_frames) = match config.problem.kind {
        ProblemKind::Phantom => {
            let spec = config.problem.phantom.to_spec();
            let img =
                crate::models::make_phantom(&spec).map_err(|e| HarnessError::Config(e.to_string()))?;
            (Some(img), spec.image_size, spec.image_size, spec.n_frames)
        }
        ProblemKind::Data => {
            if config.problem.data_path.is_none() {
                return Err(HarnessError::Config("data mode requires data_path".into()));
            }
            // The reference (if any) fixes the geometry; the data array
            // itself is measurement-space and is consumed below.
            let reference = match &config.problem.reference_path {
                Some(p) => {
                    let (vals, sc) = io::read_real_array(p)?;
                    if sc.shape.len() != 3 {
                        return Err(HarnessError::Config(format!(
                            "{}: reference must have shape [n_frames, height, width]",
                            p.display()
                        )));
                    }
                    Some(DynamicImage::from_data(sc.shape[2], sc.shape[1], sc.shape[0], vals))
                }
                None => None,
            };
            let (w, h, t) = match &reference {
                Some(img) => (img.width, img.height, img.n_frames),
                None => {
                    let ph = &config.problem.phantom;
                    (ph.image_size, ph.image_size, ph.n_frames)
                }
            };
            (reference, w, h, t)
        }
    };

    let haar_spec = HaarSpec::new(width, height, config.dictionary.haar_levels)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mask = if config.metrics.use_phantom_mask && config.problem.kind == ProblemKind::Phantom {
        Some(config.problem.phantom.to_spec().mask())
    } else {
        None
    };

    match config.forward.kind {
        ForwardKind::Tomo => {
            let n_det = if config.forward.tomo.n_detectors == 0 {
                width
            } else {
                config.forward.tomo.n_detectors
            };
            let geom = TomoGeometry::alternating(
                width,
                n_det,
                n_frames,
                config.forward.tomo.angles_per_frame,
            )
            .map_err(|e| HarnessError::Config(e.to_string()))?;
            let forward = dynamic_radon_op(&geom);
            let data = match (config.problem.kind, &truth) {
                (ProblemKind::Phantom, Some(img)) => {
                    let clean = forward.apply(&img.data);
                    apply_noise(&clean, config)
                }
                _ => {
                    let path = config.problem.data_path.as_ref().unwrap();
                    let (vals, _) = io::read_real_array(path)?;
                    if vals.len() != forward.rows() {
                        return Err(HarnessError::Config(format!(
                            "data has {} entries, geometry expects {}",
                            vals.len(),
                            forward.rows()
                        )));
                    }
                    vals
                }
            };
            Ok(Problem::Real(ProblemInstance {
                forward,
                data,
                dictionary: build_dictionary(haar_spec, n_frames)?,
                h_spatial: build_h_spatial(haar_spec, n_frames),
                h_temporal: build_h_temporal(width * height, n_frames)?,
                width,
                height,
                n_frames,
                haar_spec,
                truth,
                mask,
            }))
        }
        ForwardKind::Fourier => {
            let fc = &config.forward.fourier;
            let fmask = match fc.pattern {
                FourierPattern::Full => FourierMask::full(width, n_frames),
                FourierPattern::Rows => FourierMask::rows(width, n_frames, fc.step)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
                FourierPattern::Random => {
                    FourierMask::random(width, n_frames, fc.fraction, fc.pattern_seed)
                        .map_err(|e| HarnessError::Config(e.to_string()))?
                }
            };
            let forward = fourier_sample_op(&fmask);
            let data = match (config.problem.kind, &truth) {
                (ProblemKind::Phantom, Some(img)) => {
                    let clean = forward.apply(&img.to_complex().data);
                    apply_noise(&clean, config)
                }
                _ => {
                    let path = config.problem.data_path.as_ref().unwrap();
                    let (vals, _) = io::read_any_array(path)?;
                    if vals.len() != forward.rows() {
                        return Err(HarnessError::Config(format!(
                            "data has {} entries, geometry expects {}",
                            vals.len(),
                            forward.rows()
                        )));
                    }
                    vals
                }
            };
            Ok(Problem::Complex(ProblemInstance {
                forward,
                data,
                dictionary: build_dictionary(haar_spec, n_frames)?,
                h_spatial: build_h_spatial(haar_spec, n_frames),
                h_temporal: build_h_temporal(width * height, n_frames)?,
                width,
                height,
                n_frames,
                haar_spec,
                truth,
                mask,
            }))
        }
    }
}

fn apply_noise<T: Scalar>(clean: &[T], config: &ExperimentConfig) -> Vec<T> {
    let noise = &config.noise;
    let sigma = if noise.relative_to_peak {
        let peak = clean.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        noise.sigma * peak
    } else {
        noise.sigma
    };
    add_noise(clean, sigma, noise.seed)
}

/// One completed reconstruction, metrics row included.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: String,
    pub solver: SolverKind,
    pub eta_or_mu_s: f64,
    pub theta_or_mu_t: f64,
    pub rho: f64,
    pub inner_cap: usize,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    pub ssim_t_avg: f64,
    pub nrmse: f64,
    pub wall_ms: f64,
}

pub const RUN_RECORD_HEADER: [&str; 10] = [
    "run_id",
    "solver",
    "eta_or_mu_s",
    "theta_or_mu_t",
    "rho",
    "inner_cap",
    "outer_iters",
    "ssim_t_avg",
    "nrmse",
    "wall_ms",
];

impl RunRecord {
    pub fn to_csv_row(&self) -> Vec<String> {
        vec![
            self.run_id.clone(),
            self.solver.to_string(),
            io::fmt_f64(self.eta_or_mu_s),
            io::fmt_f64(self.theta_or_mu_t),
            io::fmt_f64(self.rho),
            self.inner_cap.to_string(),
            self.outer_iters.to_string(),
            io::fmt_f64(self.ssim_t_avg),
            io::fmt_f64(self.nrmse),
            io::fmt_f64(self.wall_ms),
        ]
    }

    /// Row with the volatile wall-clock column cleared, for determinism
    /// comparisons.
    pub fn to_csv_row_stable(&self) -> Vec<String> {
        let mut row = self.to_csv_row();
        row[9] = String::new();
        row
    }
}

/// Reconstruction stack plus solver byproducts.
pub struct SolveOutput {
    /// Real view of the reconstruction (modulus over the complex field).
    pub stack: DynamicImage<f64>,
    /// Raw complex stack when the problem is complex.
    pub complex_stack: Option<DynamicImage<Complex64>>,
    /// Variances mapped to image space (IAS only): per frame, the wavelet
    /// synthesis of that frame's θ block.
    pub theta_image: Option<DynamicImage<f64>>,
    pub trace_header: Vec<&'static str>,
    pub trace_rows: Vec<Vec<String>>,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
}

fn ias_options(solver: &SolverConfig) -> IasConfig {
    let s = &solver.ias;
    IasConfig {
        eta: s.eta,
        theta_scale: s.theta_scale,
        outer_tol: s.outer_tol,
        max_outer_iters: s.max_outer_iters,
        inner: LsmrOptions {
            atol: s.inner_atol,
            btol: s.inner_btol,
            max_iters: s.inner_max_iters,
            damp: 1.0,
        },
    }
}

fn admm_options(solver: &SolverConfig) -> AdmmConfig {
    let s = &solver.admm;
    AdmmConfig {
        mu1: s.mu_s,
        mu2: s.mu_t,
        rho: s.rho,
        eps_abs: s.eps_abs,
        eps_rel: s.eps_rel,
        max_outer_iters: s.max_outer_iters,
        inner: LsmrOptions {
            atol: s.inner_atol,
            btol: s.inner_btol,
            max_iters: s.inner_max_iters,
            damp: 0.0,
        },
        dual_update: s.dual_update,
    }
}

/// Map θ (dictionary-coefficient space) to image space: wavelet synthesis of
/// each temporal block.
pub fn theta_to_image(
    theta: &[f64],
    haar: &HaarSpec,
    n_frames: usize,
) -> Result<DynamicImage<f64>, HarnessError> {
    let np = haar.len();
    assert_eq!(theta.len(), np * n_frames);
    let mut img = DynamicImage::<f64>::zeros(haar.width, haar.height, n_frames);
    for t in 0..n_frames {
        let block = &theta[t * np..(t + 1) * np];
        let frame = haar_synthesis(haar, block).map_err(|e| HarnessError::Solver(e.to_string()))?;
        img.frame_mut(t).copy_from_slice(&frame);
    }
    Ok(img)
}

fn stack_from_real(p: &ProblemInstance<f64>, x: Vec<f64>) -> DynamicImage<f64> {
    DynamicImage::from_data(p.width, p.height, p.n_frames, x)
}

/// Solve one instance with the configured solver. `on_iter` receives the
/// current reconstruction stack after every outer iteration.
#[allow(clippy::type_complexity)]
pub type SolveResult<T> = Result<(Vec<T>, Option<Vec<f64>>, SolveTraces), HarnessError>;

/// Observer invoked with (outer iteration, stack data, cumulative ms).
pub type IterCallback<'a, T> = &'a mut dyn FnMut(usize, &[T], f64);

pub fn solve_instance<T: Scalar>(
    p: &ProblemInstance<T>,
    solver: &SolverConfig,
    mut on_iter: Option<IterCallback<'_, T>>,
) -> SolveResult<T> {
    match solver.kind {
        SolverKind::Ias => {
            let config = ias_options(solver);
            let w = p.dictionary.clone();
            let mut cum_ms = 0.0;
            let mut snapshots: Vec<(usize, Vec<T>, f64)> = Vec::new();
            let (state, trace): (IasState<T>, _) = ias_run_monitored(
                p.forward.clone(),
                w.clone(),
                &p.data,
                &config,
                |st, rec: &IasIterRecord| {
                    cum_ms += rec.wall_ms;
                    if on_iter.is_some() {
                        snapshots.push((st.iteration, w.apply(&st.z), cum_ms));
                    }
                },
            )
            .map_err(|e| HarnessError::Solver(e.to_string()))?;
            if let Some(cb) = on_iter.as_mut() {
                for (iter, x, ms) in &snapshots {
                    cb(*iter, x, *ms);
                }
            }
            let x = w.apply(&state.z);
            Ok((
                x,
                Some(state.theta),
                SolveTraces::Ias(trace),
            ))
        }
        SolverKind::Admm => {
            let config = admm_options(solver);
            let mut cum_ms = 0.0;
            let mut snapshots: Vec<(usize, Vec<T>, f64)> = Vec::new();
            let (state, trace): (AdmmState<T>, _) = admm_run_monitored(
                p.forward.clone(),
                p.h_spatial.clone(),
                p.h_temporal.clone(),
                &p.data,
                &config,
                |st, rec: &AdmmIterRecord| {
                    cum_ms += rec.wall_ms;
                    if on_iter.is_some() {
                        snapshots.push((st.iteration, st.x.clone(), cum_ms));
                    }
                },
            )
            .map_err(|e| HarnessError::Solver(e.to_string()))?;
            if let Some(cb) = on_iter.as_mut() {
                for (iter, x, ms) in &snapshots {
                    cb(*iter, x, *ms);
                }
            }
            Ok((state.x, None, SolveTraces::Admm(trace)))
        }
        SolverKind::Lsq => {
            let s = &solver.lsq;
            let opts = LsmrOptions {
                atol: s.atol,
                btol: s.btol,
                max_iters: s.max_iters,
                damp: s.lambda.sqrt(),
            };
            let started = Instant::now();
            let (x, report) = lsmr_solve(&p.forward, &p.data, &opts)
                .map_err(|e| HarnessError::Solver(e.to_string()))?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            if let Some(cb) = on_iter.as_mut() {
                cb(1, &x, ms);
            }
            Ok((x, None, SolveTraces::Lsq { report_iters: report.iterations, wall_ms: ms }))
        }
    }
}

pub enum SolveTraces {
    Ias(crate::ias::IasTrace),
    Admm(crate::admm::AdmmTrace),
    Lsq { report_iters: usize, wall_ms: f64 },
}

impl SolveTraces {
    pub fn csv(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        match self {
            SolveTraces::Ias(t) => (
                vec!["iter", "gibbs_energy", "theta_rel_change", "inner_iters", "wall_ms"],
                t.records
                    .iter()
                    .map(|r| {
                        vec![
                            r.iter.to_string(),
                            io::fmt_f64(r.gibbs_energy),
                            io::fmt_f64(r.theta_rel_change),
                            r.inner_iters.to_string(),
                            io::fmt_f64(r.wall_ms),
                        ]
                    })
                    .collect(),
            ),
            SolveTraces::Admm(t) => (
                vec!["iter", "primal_res", "dual_res", "inner_iters", "wall_ms"],
                t.records
                    .iter()
                    .map(|r| {
                        vec![
                            r.iter.to_string(),
                            io::fmt_f64(r.primal_res),
                            io::fmt_f64(r.dual_res),
                            r.inner_iters.to_string(),
                            io::fmt_f64(r.wall_ms),
                        ]
                    })
                    .collect(),
            ),
            SolveTraces::Lsq { report_iters, wall_ms } => (
                vec!["iter", "inner_iters", "wall_ms"],
                vec![vec!["1".into(), report_iters.to_string(), io::fmt_f64(*wall_ms)]],
            ),
        }
    }

    pub fn outer_iters(&self) -> usize {
        match self {
            SolveTraces::Ias(t) => t.records.len(),
            SolveTraces::Admm(t) => t.records.len(),
            SolveTraces::Lsq { .. } => 1,
        }
    }

    pub fn total_inner_iters(&self) -> usize {
        match self {
            SolveTraces::Ias(t) => t.total_inner_iters(),
            SolveTraces::Admm(t) => t.total_inner_iters(),
            SolveTraces::Lsq { report_iters, .. } => *report_iters,
        }
    }
}

/// Run the configured solver on an assembled problem.
pub fn reconstruct(problem: &Problem, config: &ExperimentConfig) -> Result<SolveOutput, HarnessError> {
    match problem {
        Problem::Real(p) => {
            let (x, theta, traces) = solve_instance(p, &config.solver, None)?;
            let stack = stack_from_real(p, x);
            let theta_image = match theta {
                Some(th) => Some(theta_to_image(&th, &p.haar_spec, p.n_frames)?),
                None => None,
            };
            let (trace_header, trace_rows) = traces.csv();
            Ok(SolveOutput {
                stack,
                complex_stack: None,
                theta_image,
                trace_header,
                trace_rows,
                outer_iters: traces.outer_iters(),
                total_inner_iters: traces.total_inner_iters(),
            })
        }
        Problem::Complex(p) => {
            let (x, theta, traces) = solve_instance(p, &config.solver, None)?;
            let complex_stack =
                DynamicImage::from_data(p.width, p.height, p.n_frames, x);
            let stack = complex_stack.magnitude();
            let theta_image = match theta {
                Some(th) => Some(theta_to_image(&th, &p.haar_spec, p.n_frames)?),
                None => None,
            };
            let (trace_header, trace_rows) = traces.csv();
            Ok(SolveOutput {
                stack,
                complex_stack: Some(complex_stack),
                theta_image,
                trace_header,
                trace_rows,
                outer_iters: traces.outer_iters(),
                total_inner_iters: traces.total_inner_iters(),
            })
        }
    }
}

/// SSIM parameters resolved from the config plus the problem mask.
pub fn ssim_params(config: &ExperimentConfig, mask: Option<&Vec<bool>>) -> SsimParams {
    SsimParams {
        k1: config.metrics.k1,
        k2: config.metrics.k2,
        gaussian_sigma: config.metrics.gaussian_sigma,
        window_size: config.metrics.window_size,
        data_range: config.metrics.data_range,
        mask: mask.cloned(),
    }
}

/// Time-averaged SSIM and nRMSE of a reconstruction against the reference.
/// nRMSE is evaluated over masked pixels when a mask is configured.
pub fn score(
    stack: &DynamicImage<f64>,
    truth: &DynamicImage<f64>,
    params: &SsimParams,
) -> Result<(f64, f64), HarnessError> {
    let ssim = ssim_time_avg(stack, truth, params)
        .map_err(|e| HarnessError::Solver(e.to_string()))?;
    let err = match &params.mask {
        Some(mask) => {
            let np = stack.n_pixels();
            let mut xs = Vec::new();
            let mut rs = Vec::new();
            for t in 0..stack.n_frames {
                for (i, (&x, &r)) in stack.frame(t).iter().zip(truth.frame(t)).enumerate() {
                    if mask[i % np] {
                        xs.push(x);
                        rs.push(r);
                    }
                }
            }
            nrmse(&xs, &rs).map_err(|e| HarnessError::Solver(e.to_string()))?
        }
        None => nrmse(&stack.data, &truth.data).map_err(|e| HarnessError::Solver(e.to_string()))?,
    };
    Ok((ssim, err))
}

/// The active hyper-parameter pair reported in metrics rows.
pub fn active_hyperparams(solver: &SolverConfig) -> (f64, f64, f64, usize) {
    match solver.kind {
        SolverKind::Ias => (
            solver.ias.eta,
            solver.ias.theta_scale,
            0.0,
            solver.ias.inner_max_iters,
        ),
        SolverKind::Admm => (
            solver.admm.mu_s,
            solver.admm.mu_t,
            solver.admm.rho,
            solver.admm.inner_max_iters,
        ),
        SolverKind::Lsq => (solver.lsq.lambda, 0.0, 0.0, solver.lsq.max_iters),
    }
}
