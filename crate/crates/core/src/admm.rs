//! Compressed-sensing baseline: two ℓ₁-penalized sparsifying transforms
//! solved by scaled-dual ADMM with an inner LSMR x-update.
//!
//! The stacked penalty operator is H = [μ₁H₁; μ₂H₂]; the weights live inside
//! H, so the q-update threshold is 1/ρ for every block. The dual step is
//! u ← u + ρ(Hx − q) as printed in the source algorithm; the textbook scaled
//! form u ← u + (Hx − q) is available behind [`DualUpdate::Standard`]. The
//! penalty ρ is fixed, with no residual-balancing adaptation.

use std::sync::Arc;
use std::time::Instant;

use crate::linops::{DynOp, LinOp, LinopError, ScaledMap, StackMap};
use crate::num::{norm2, Scalar};
use crate::solvers::{lsmr_solve, LsmrOptions, SolveError};

/// Which dual ascent step to take after the q-update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualUpdate {
    /// u ← u + ρ(Hx − q), as printed.
    #[default]
    Verbatim,
    /// u ← u + (Hx − q), the textbook scaled form.
    Standard,
}

#[derive(Debug, Clone)]
pub struct AdmmConfig {
    /// Spatial penalty weight μ₁.
    pub mu1: f64,
    /// Temporal penalty weight μ₂.
    pub mu2: f64,
    /// Penalty parameter ρ > 0.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_outer_iters: usize,
    pub inner: LsmrOptions,
    pub dual_update: DualUpdate,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            mu1: 1e-2,
            mu2: 1e-2,
            rho: 1.0,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_outer_iters: 10,
            inner: LsmrOptions {
                max_iters: 50,
                ..Default::default()
            },
            dual_update: DualUpdate::Verbatim,
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.rho > 0.0) {
            return Err(SolveError::NonFinite("rho must be positive"));
        }
        if self.mu1 < 0.0 || self.mu2 < 0.0 || (self.mu1 == 0.0 && self.mu2 == 0.0) {
            return Err(SolveError::NonFinite(
                "mu1, mu2 must be nonnegative and not both zero",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState<T> {
    /// Primal iterate (the image stack).
    pub x: Vec<T>,
    /// Split variable q ≈ Hx.
    pub q: Vec<T>,
    /// Scaled dual variable.
    pub u: Vec<T>,
    pub primal_residual_norm: f64,
    pub dual_residual_norm: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct AdmmIterRecord {
    pub iter: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub inner_iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AdmmTrace {
    pub records: Vec<AdmmIterRecord>,
}

impl AdmmTrace {
    pub fn total_inner_iters(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }
}

/// Vertical stack H = [μ₁H₁; μ₂H₂]; the adjoint is
/// Hᴴy = μ₁H₁ᴴy₁ + μ₂H₂ᴴy₂.
pub fn stack_penalty<T: Scalar>(
    mu1: f64,
    mu2: f64,
    h1: DynOp<T>,
    h2: DynOp<T>,
) -> Result<DynOp<T>, LinopError> {
    if h1.cols() != h2.cols() {
        return Err(LinopError::Shape {
            expected: h1.cols(),
            got: h2.cols(),
        });
    }
    Ok(Arc::new(StackMap::new(vec![
        Arc::new(ScaledMap {
            factor: mu1,
            inner: h1,
        }) as DynOp<T>,
        Arc::new(ScaledMap {
            factor: mu2,
            inner: h2,
        }) as DynOp<T>,
    ])))
}

/// Soft thresholding S_κ: magnitude shrinkage by κ, zeroing anything
/// smaller. Over the reals this is sign(v)·max(|v| − κ, 0); over the complex
/// field the phase is preserved.
pub fn soft_threshold<T: Scalar>(v: &[T], kappa: f64) -> Vec<T> {
    assert!(kappa > 0.0, "threshold must be positive");
    v.iter()
        .map(|&vi| {
            let mag = vi.abs();
            if mag <= kappa {
                T::zero()
            } else {
                vi.scale((mag - kappa) / mag)
            }
        })
        .collect()
}

/// x-update: minimize ‖Fx − b‖² + ρ‖Hx − (q − u)‖² by LSMR on the stacked
/// operator [F; √ρ·H] with data [b; √ρ·(q − u)].
pub fn x_update<T: Scalar>(
    f: DynOp<T>,
    h: DynOp<T>,
    b: &[T],
    q: &[T],
    u: &[T],
    rho: f64,
    inner: &LsmrOptions,
) -> Result<(Vec<T>, usize), SolveError> {
    let sqrt_rho = rho.sqrt();
    let stacked: DynOp<T> = Arc::new(StackMap::new(vec![
        f,
        Arc::new(ScaledMap {
            factor: sqrt_rho,
            inner: h,
        }) as DynOp<T>,
    ]));
    let mut rhs = Vec::with_capacity(b.len() + q.len());
    rhs.extend_from_slice(b);
    rhs.extend(q.iter().zip(u).map(|(&qi, &ui)| (qi - ui).scale(sqrt_rho)));
    let opts = LsmrOptions {
        damp: 0.0,
        ..*inner
    };
    let (x, report) = lsmr_solve(stacked.as_ref(), &rhs, &opts)?;
    Ok((x, report.iterations))
}

/// Run ADMM from x = q = u = 0 until the combined primal/dual criteria or
/// the iteration cap.
pub fn admm_run<T: Scalar>(
    f: DynOp<T>,
    h1: DynOp<T>,
    h2: DynOp<T>,
    b: &[T],
    config: &AdmmConfig,
) -> Result<(AdmmState<T>, AdmmTrace), SolveError> {
    admm_run_monitored(f, h1, h2, b, config, |_, _| {})
}

/// As [`admm_run`], invoking `monitor` after every outer iteration.
pub fn admm_run_monitored<T: Scalar>(
    f: DynOp<T>,
    h1: DynOp<T>,
    h2: DynOp<T>,
    b: &[T],
    config: &AdmmConfig,
    mut monitor: impl FnMut(&AdmmState<T>, &AdmmIterRecord),
) -> Result<(AdmmState<T>, AdmmTrace), SolveError> {
    config.validate()?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite("data vector"));
    }
    let h = stack_penalty(config.mu1, config.mu2, h1, h2)?;
    let n = h.cols();
    let p = h.rows();
    let rho = config.rho;

    let mut state = AdmmState {
        x: vec![T::zero(); n],
        q: vec![T::zero(); p],
        u: vec![T::zero(); p],
        primal_residual_norm: f64::INFINITY,
        dual_residual_norm: f64::INFINITY,
        iteration: 0,
    };
    let mut trace = AdmmTrace::default();

    for k in 1..=config.max_outer_iters {
        let started = Instant::now();
        let (x, inner_iters) =
            x_update(f.clone(), h.clone(), b, &state.q, &state.u, rho, &config.inner)?;
        let hx = h.apply(&x);

        // q-update: proximal step at threshold 1/rho.
        let shift: Vec<T> = hx.iter().zip(&state.u).map(|(&a, &b)| a + b).collect();
        let q_new = soft_threshold(&shift, 1.0 / rho);

        // Dual residual s = rho * H^H (q_new - q_old).
        let dq: Vec<T> = q_new
            .iter()
            .zip(&state.q)
            .map(|(&a, &b)| (a - b).scale(rho))
            .collect();
        let dual_res = norm2(&h.adjoint_apply(&dq));

        // Primal residual r = Hx - q.
        let r: Vec<T> = hx.iter().zip(&q_new).map(|(&a, &b)| a - b).collect();
        let primal_res = norm2(&r);

        // Dual ascent.
        let step = match config.dual_update {
            DualUpdate::Verbatim => rho,
            DualUpdate::Standard => 1.0,
        };
        let u_new: Vec<T> = state
            .u
            .iter()
            .zip(&r)
            .map(|(&ui, &ri)| ui + ri.scale(step))
            .collect();

        if x.iter().any(|v| !v.is_finite()) || u_new.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFinite("ADMM iterates"));
        }

        state = AdmmState {
            x,
            q: q_new,
            u: u_new,
            primal_residual_norm: primal_res,
            dual_residual_norm: dual_res,
            iteration: k,
        };
        let record = AdmmIterRecord {
            iter: k,
            primal_res,
            dual_res,
            inner_iters,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        monitor(&state, &record);
        trace.records.push(record);

        // Combined stopping criteria with the unscaled dual y = rho * u.
        let hx_norm = norm2(&hx);
        let q_norm = norm2(&state.q);
        let y: Vec<T> = state.u.iter().map(|&ui| ui.scale(rho)).collect();
        let hty_norm = norm2(&h.adjoint_apply(&y));
        let eps_pri = (p as f64).sqrt() * config.eps_abs + config.eps_rel * hx_norm.max(q_norm);
        let eps_dual = (n as f64).sqrt() * config.eps_abs + config.eps_rel * hty_norm;
        if primal_res <= eps_pri && dual_res <= eps_dual {
            break;
        }
    }
    Ok((state, trace))
}
