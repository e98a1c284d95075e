//! Damped LSMR iterative least-squares solver on the matrix-free operator
//! interface (Fong & Saunders 2011).
//!
//! Solves min ‖Ax − b‖² + damp²‖x‖² touching A only through forward and
//! adjoint application. The initial iterate is always zero and no
//! reorthogonalization is performed. Stopping follows the Fong–Saunders
//! S1/S2 criteria with `atol`/`btol`, plus a hard iteration cap; the
//! condition-number test is disabled. The cap is a first-class experimental
//! knob: truncated inner solves are studied deliberately, not treated as
//! failures.

use crate::linops::{check_len, LinOp, LinopError};
use crate::num::{norm2, scale_in_place, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct LsmrOptions {
    pub atol: f64,
    pub btol: f64,
    pub max_iters: usize,
    pub damp: f64,
}

impl Default for LsmrOptions {
    fn default() -> Self {
        LsmrOptions {
            atol: 1e-8,
            btol: 1e-8,
            max_iters: 1000,
            damp: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The S1 (residual) or S2 (normal residual) criterion was met.
    ConvergedAtolBtol,
    /// The iteration cap was reached first.
    MaxIters,
    /// Aᴴb = 0, so x = 0 is the exact solution.
    ExactSolution,
}

#[derive(Debug, Clone)]
pub struct LsmrReport {
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Estimate of ‖[r; damp·x]‖ at termination.
    pub residual_norm: f64,
    /// Estimate of ‖Āᴴ r̄‖ for the damped system at termination.
    pub normal_residual_norm: f64,
}

#[derive(Debug, Clone)]
pub enum SolveError {
    Shape(LinopError),
    NonFinite(&'static str),
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveError::Shape(e) => write!(f, "{e}"),
            SolveError::NonFinite(what) => write!(f, "non-finite values in {what}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<LinopError> for SolveError {
    fn from(e: LinopError) -> Self {
        SolveError::Shape(e)
    }
}

/// Per-iteration view offered to a monitor callback.
pub struct LsmrIterate<'a, T> {
    pub iteration: usize,
    pub x: &'a [T],
    pub residual_norm: f64,
    pub normal_residual_norm: f64,
}

/// Stable Givens rotation: returns (c, s, r) with r = hypot(a, b).
fn sym_ortho(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (if a >= 0.0 { 1.0 } else { -1.0 }, 0.0, a.abs())
    } else if a == 0.0 {
        (0.0, if b >= 0.0 { 1.0 } else { -1.0 }, b.abs())
    } else if b.abs() > a.abs() {
        let tau = a / b;
        let s = b.signum() / (1.0 + tau * tau).sqrt();
        let c = s * tau;
        (c, s, b / s)
    } else {
        let tau = b / a;
        let c = a.signum() / (1.0 + tau * tau).sqrt();
        let s = c * tau;
        (c, s, a / c)
    }
}

/// Minimize ‖Ax − b‖² + damp²‖x‖² from the zero start.
pub fn lsmr_solve<T: Scalar>(
    a: &dyn LinOp<T>,
    b: &[T],
    opts: &LsmrOptions,
) -> Result<(Vec<T>, LsmrReport), SolveError> {
    lsmr_solve_monitored(a, b, opts, |_| {})
}

/// As [`lsmr_solve`], invoking `monitor` after every iteration.
pub fn lsmr_solve_monitored<T: Scalar>(
    a: &dyn LinOp<T>,
    b: &[T],
    opts: &LsmrOptions,
    mut monitor: impl FnMut(&LsmrIterate<'_, T>),
) -> Result<(Vec<T>, LsmrReport), SolveError> {
    check_len(b, a.rows())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite("right-hand side"));
    }
    assert!(opts.max_iters >= 1, "max_iters must be >= 1");
    assert!(opts.atol >= 0.0 && opts.btol >= 0.0 && opts.damp >= 0.0);

    let n = a.cols();
    let damp = opts.damp;

    // Golub-Kahan bidiagonalization setup.
    let mut u = b.to_vec();
    let normb = norm2(&u);
    let mut x = vec![T::zero(); n];
    let mut beta = normb;
    let mut v;
    let mut alpha;
    if beta > 0.0 {
        scale_in_place(&mut u, 1.0 / beta);
        v = a.adjoint_apply(&u);
        alpha = norm2(&v);
    } else {
        v = vec![T::zero(); n];
        alpha = 0.0;
    }
    if alpha > 0.0 {
        scale_in_place(&mut v, 1.0 / alpha);
    }

    let mut zetabar = alpha * beta;
    if zetabar == 0.0 {
        // Aᴴb = 0: the zero vector is the exact solution.
        return Ok((
            x,
            LsmrReport {
                iterations: 0,
                stop_reason: StopReason::ExactSolution,
                residual_norm: beta,
                normal_residual_norm: 0.0,
            },
        ));
    }

    let mut alphabar = alpha;
    let mut rho = 1.0;
    let mut rhobar = 1.0;
    let mut cbar = 1.0;
    let mut sbar = 0.0;

    let mut h = v.clone();
    let mut hbar = vec![T::zero(); n];

    // State for the ‖r‖ estimate.
    let mut betadd = beta;
    let mut betad = 0.0;
    let mut rhodold = 1.0;
    let mut tautildeold = 0.0;
    let mut thetatilde = 0.0;
    let mut zeta = 0.0;
    let mut d = 0.0;

    let mut norm_a2 = alpha * alpha;
    let mut normr;
    let mut normar;

    let mut itn = 0usize;
    let stop_reason = loop {
        itn += 1;

        // Continue the bidiagonalization.
        let av = a.apply(&v);
        for (ui, &avi) in u.iter_mut().zip(&av) {
            *ui = avi - ui.scale(alpha);
        }
        beta = norm2(&u);
        if beta > 0.0 {
            scale_in_place(&mut u, 1.0 / beta);
            let ahu = a.adjoint_apply(&u);
            for (vi, &ahui) in v.iter_mut().zip(&ahu) {
                *vi = ahui - vi.scale(beta);
            }
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale_in_place(&mut v, 1.0 / alpha);
            }
        }

        // Rotation eliminating the damping term.
        let (chat, shat, alphahat) = sym_ortho(alphabar, damp);

        // Rotation turning the lower bidiagonal B to upper bidiagonal R.
        let rhoold = rho;
        let (c, s, rho_new) = sym_ortho(alphahat, beta);
        rho = rho_new;
        let thetanew = s * alpha;
        alphabar = c * alpha;

        // Rotation turning Rᵀ to R̄.
        let rhobarold = rhobar;
        let zetaold = zeta;
        let thetabar = sbar * rho;
        let (cbar_new, sbar_new, rhobar_new) = sym_ortho(cbar * rho, thetanew);
        cbar = cbar_new;
        sbar = sbar_new;
        rhobar = rhobar_new;
        zeta = cbar * zetabar;
        zetabar *= -sbar;

        // Update h̄, x, h.
        let hbar_coeff = thetabar * rho / (rhoold * rhobarold);
        for (hbari, &hi) in hbar.iter_mut().zip(&h) {
            *hbari = hi - hbari.scale(hbar_coeff);
        }
        let x_coeff = zeta / (rho * rhobar);
        for (xi, &hbari) in x.iter_mut().zip(&hbar) {
            *xi += hbari.scale(x_coeff);
        }
        let h_coeff = thetanew / rho;
        for (hi, &vi) in h.iter_mut().zip(&v) {
            *hi = vi - hi.scale(h_coeff);
        }

        // Estimate ‖r‖.
        let betaacute = chat * betadd;
        let betacheck = -shat * betadd;
        let betahat = c * betaacute;
        betadd = -s * betaacute;

        let thetatildeold = thetatilde;
        let (ctildeold, stildeold, rhotildeold) = sym_ortho(rhodold, thetabar);
        thetatilde = stildeold * rhobar;
        rhodold = ctildeold * rhobar;
        betad = -stildeold * betad + ctildeold * betahat;

        tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
        let taud = (zeta - thetatilde * tautildeold) / rhodold;
        d += betacheck * betacheck;
        normr = (d + (betad - taud).powi(2) + betadd * betadd).sqrt();

        // Estimate ‖A‖ and the normal residual.
        norm_a2 += beta * beta;
        let norm_a = norm_a2.sqrt();
        norm_a2 += alpha * alpha;
        normar = zetabar.abs();

        monitor(&LsmrIterate {
            iteration: itn,
            x: &x,
            residual_norm: normr,
            normal_residual_norm: normar,
        });

        // Convergence tests (Fong-Saunders S1/S2 with eps guards).
        let normx = norm2(&x);
        let test1 = normr / normb;
        let test2 = if norm_a * normr != 0.0 {
            normar / (norm_a * normr)
        } else {
            f64::INFINITY
        };
        let t1 = test1 / (1.0 + norm_a * normx / normb);
        let rtol = opts.btol + opts.atol * norm_a * normx / normb;

        if itn >= opts.max_iters {
            break StopReason::MaxIters;
        }
        if 1.0 + test2 <= 1.0 || test2 <= opts.atol {
            break StopReason::ConvergedAtolBtol;
        }
        if 1.0 + t1 <= 1.0 || test1 <= rtol {
            break StopReason::ConvergedAtolBtol;
        }
    };

    Ok((
        x,
        LsmrReport {
            iterations: itn,
            stop_reason,
            residual_norm: normr,
            normal_residual_norm: normar,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMap, DynOp, IdentityMap, OperatorShape};
    use crate::num::dot;
    use crate::rng::SplitMix64;
    use num_complex::Complex64;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn identity_undamped() {
        let a = IdentityMap { n: 2 };
        let (x, report) = lsmr_solve::<f64>(&a, &[3.0, -1.0], &LsmrOptions::default()).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12);
        assert!((x[1] + 1.0).abs() < 1e-12);
        assert_eq!(report.stop_reason, StopReason::ConvergedAtolBtol);
    }

    #[test]
    fn identity_damped_is_half() {
        // min |x-b|^2 + |x|^2 => x = b/2.
        let a = IdentityMap { n: 2 };
        let opts = LsmrOptions {
            damp: 1.0,
            atol: 1e-14,
            btol: 1e-14,
            max_iters: 100,
        };
        let (x, _) = lsmr_solve::<f64>(&a, &[2.0, 4.0], &opts).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-12);
        assert!((x[1] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_rhs_is_exact() {
        let a = IdentityMap { n: 3 };
        let (x, report) = lsmr_solve::<f64>(&a, &[0.0; 3], &LsmrOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(report.stop_reason, StopReason::ExactSolution);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn rejects_non_finite_rhs() {
        let a = IdentityMap { n: 2 };
        let err = lsmr_solve::<f64>(&a, &[1.0, f64::NAN], &LsmrOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::NonFinite(_)));
    }

    #[test]
    fn rejects_wrong_length() {
        let a = IdentityMap { n: 2 };
        assert!(lsmr_solve::<f64>(&a, &[1.0; 3], &LsmrOptions::default()).is_err());
    }

    #[test]
    fn consistent_square_system_converges() {
        let mut rng = SplitMix64::new(33);
        let a = DenseMap::<f64>::random(10, 10, &mut rng);
        let x_true: Vec<f64> = (0..10).map(|_| rng.next_gaussian()).collect();
        let b = a.apply(&x_true);
        let opts = LsmrOptions {
            atol: 1e-14,
            btol: 1e-14,
            max_iters: 5000,
            damp: 0.0,
        };
        let (x, _) = lsmr_solve(&a, &b, &opts).unwrap();
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err / norm2(&x_true) <= 1e-8, "err = {err}");
    }

    #[test]
    fn touches_operator_only_through_apply_and_adjoint() {
        struct Counting {
            inner: DynOp<f64>,
            forward: Arc<AtomicUsize>,
            adjoint: Arc<AtomicUsize>,
        }
        impl LinOp<f64> for Counting {
            fn shape(&self) -> OperatorShape {
                self.inner.shape()
            }
            fn apply(&self, x: &[f64]) -> Vec<f64> {
                self.forward.fetch_add(1, Ordering::Relaxed);
                self.inner.apply(x)
            }
            fn adjoint_apply(&self, y: &[f64]) -> Vec<f64> {
                self.adjoint.fetch_add(1, Ordering::Relaxed);
                self.inner.adjoint_apply(y)
            }
        }
        let mut rng = SplitMix64::new(8);
        let dense = DenseMap::<f64>::random(12, 6, &mut rng);
        let b: Vec<f64> = (0..12).map(|_| rng.next_gaussian()).collect();
        let forward = Arc::new(AtomicUsize::new(0));
        let adjoint = Arc::new(AtomicUsize::new(0));
        let counted = Counting {
            inner: Arc::new(dense),
            forward: forward.clone(),
            adjoint: adjoint.clone(),
        };
        let opts = LsmrOptions {
            max_iters: 20,
            ..Default::default()
        };
        let (_, report) = lsmr_solve(&counted, &b, &opts).unwrap();
        // One adjoint for setup, then one forward + one adjoint per iteration.
        assert_eq!(forward.load(Ordering::Relaxed), report.iterations);
        assert_eq!(adjoint.load(Ordering::Relaxed), report.iterations + 1);
    }

    #[test]
    fn normal_residual_monotone() {
        // Defining property of LSMR: ‖Aᴴr_k‖ is non-increasing. Checked with
        // explicitly recomputed residuals, not the internal estimates.
        let mut rng = SplitMix64::new(55);
        let a = DenseMap::<f64>::random(15, 9, &mut rng);
        let b: Vec<f64> = (0..15).map(|_| rng.next_gaussian()).collect();
        let mut history: Vec<f64> = Vec::new();
        let opts = LsmrOptions {
            atol: 0.0,
            btol: 0.0,
            max_iters: 30,
            damp: 0.0,
        };
        lsmr_solve_monitored(&a, &b, &opts, |it| {
            let ax = a.apply(it.x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
            history.push(norm2(&a.adjoint_apply(&r)));
        })
        .unwrap();
        for w in history.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-10),
                "normal residual increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn complex_least_squares_matches_projection() {
        // Overdetermined complex system: check the normal equations
        // Aᴴ(Ax - b) ≈ 0 at the solution.
        let mut rng = SplitMix64::new(77);
        let a = DenseMap::<Complex64>::random(20, 12, &mut rng);
        let b: Vec<Complex64> = (0..20)
            .map(|_| Complex64::standard_gaussian(&mut rng))
            .collect();
        let opts = LsmrOptions {
            atol: 1e-14,
            btol: 1e-14,
            max_iters: 500,
            damp: 0.0,
        };
        let (x, _) = lsmr_solve(&a, &b, &opts).unwrap();
        let ax = a.apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let g = a.adjoint_apply(&r);
        assert!(norm2(&g) / norm2(&b) <= 1e-8);
        // Sanity: the solution actually reduces the residual vs x = 0.
        assert!(norm2(&r) < norm2(&b));
        let _ = dot(&x, &x);
    }
}
