//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantity. Run with
//! `cargo test --test acceptance -- --test-threads=1 --nocapture`
//! to see the per-criterion report in order.

mod common;

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use dynrecon::admm::{admm_run, soft_threshold, AdmmConfig, DualUpdate};
use dynrecon::harness::config::ExperimentConfig;
use dynrecon::harness::{cmd_iterstudy, cmd_phantom, cmd_reconstruct, cmd_sweep};
use dynrecon::ias::{build_scaled_operator, ias_run, theta_update_scalar, IasConfig};
use dynrecon::linops::{
    dot_test, kron_adjoint_apply, kron_apply, DenseMap, DynOp, IdentityMap, KroneckerMap, LinOp,
    ScaledMap, StackMap,
};
use dynrecon::metrics::{ssim, SsimParams};
use dynrecon::models::{dynamic_radon_op, fourier_sample_op, FourierMask, TomoGeometry};
use dynrecon::num::Scalar;
use dynrecon::rng::SplitMix64;
use dynrecon::solvers::{lsmr_solve, LsmrOptions};
use dynrecon::transforms::{CumsumMap, DiffMap, HaarSpec, HaarSynthesisMap, TemporalSpec};

use common::{fnv1a, ista_lasso, normal_equations_solve, rel_err, ssim_reference};

const DOT_TRIALS: usize = 100;
const DOT_TOL: f64 = 1e-10;

fn gaussian_vec<T: Scalar>(n: usize, rng: &mut SplitMix64) -> Vec<T> {
    (0..n).map(|_| T::standard_gaussian(rng)).collect()
}

fn base_config(solver: &str, out: &str) -> ExperimentConfig {
    let text = format!(
        r#"
schema_version = 1

[problem]
kind = "phantom"

[noise]
sigma = 0.01
relative_to_peak = true
seed = 1

[solver]
kind = "{solver}"

[outputs]
dir = "{out}"
"#
    );
    let config: ExperimentConfig = toml::from_str(&text).expect("config parses");
    config.validate().expect("config valid");
    config
}

fn temp_out(tag: &str) -> String {
    let dir = std::env::temp_dir().join(format!("dynrecon-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir.to_string_lossy().into_owned()
}

#[test]
fn criterion_01_adjoint_suite() {
    let started = Instant::now();
    let haar = HaarSpec::new(16, 16, 3).unwrap();
    let temporal = TemporalSpec::new(8).unwrap();

    let mut worst: Vec<(&str, f64)> = Vec::new();

    let s_map = HaarSynthesisMap { spec: haar };
    worst.push(("haar synthesis/analysis", dot_test::<f64>(&s_map, DOT_TRIALS, 11)));
    worst.push(("cumsum", dot_test::<f64>(&CumsumMap { spec: temporal }, DOT_TRIALS, 12)));
    worst.push(("diff", dot_test::<f64>(&DiffMap { spec: temporal }, DOT_TRIALS, 13)));

    let w_op: DynOp<f64> = Arc::new(KroneckerMap::new(
        Arc::new(CumsumMap { spec: temporal }) as DynOp<f64>,
        Arc::new(HaarSynthesisMap { spec: haar }) as DynOp<f64>,
    ));
    worst.push(("kronecker W", dot_test(w_op.as_ref(), DOT_TRIALS, 14)));

    let geom = TomoGeometry::alternating(16, 16, 8, 5).unwrap();
    let radon = dynamic_radon_op(&geom);
    worst.push(("block-diagonal radon", dot_test(radon.as_ref(), DOT_TRIALS, 15)));

    let fmask = FourierMask::rows(16, 8, 3).unwrap();
    let fourier = fourier_sample_op(&fmask);
    worst.push(("masked fourier", dot_test(fourier.as_ref(), DOT_TRIALS, 16)));

    let mut rng = SplitMix64::new(17);
    let theta: Vec<f64> = (0..w_op.cols()).map(|_| rng.next_f64() + 0.05).collect();
    let a_theta = build_scaled_operator(radon.clone(), w_op.clone(), &theta).unwrap();
    worst.push(("scaled A_theta (real)", dot_test(a_theta.as_ref(), DOT_TRIALS, 18)));

    // Complex A_theta over the masked-Fourier forward model.
    let wz: DynOp<Complex64> = Arc::new(KroneckerMap::new(
        Arc::new(CumsumMap { spec: temporal }) as DynOp<Complex64>,
        Arc::new(HaarSynthesisMap { spec: haar }) as DynOp<Complex64>,
    ));
    let a_theta_z = build_scaled_operator(fourier, wz, &theta).unwrap();
    worst.push(("scaled A_theta (complex)", dot_test(a_theta_z.as_ref(), DOT_TRIALS, 20)));

    // The stacked operator exactly as the ADMM x-update builds it:
    // [F; sqrt(rho) * [mu1 H1; mu2 H2]].
    let h1: DynOp<f64> = Arc::new(KroneckerMap::new(
        Arc::new(IdentityMap { n: 8 }) as DynOp<f64>,
        Arc::new(dynrecon::transforms::HaarAnalysisMap { spec: haar }) as DynOp<f64>,
    ));
    let h2: DynOp<f64> = Arc::new(KroneckerMap::new(
        Arc::new(DiffMap { spec: temporal }) as DynOp<f64>,
        Arc::new(IdentityMap { n: 16 * 16 }) as DynOp<f64>,
    ));
    let h = dynrecon::admm::stack_penalty(0.3, 1.7, h1, h2).unwrap();
    let stacked: DynOp<f64> = Arc::new(StackMap::new(vec![
        radon,
        Arc::new(ScaledMap {
            factor: 2.5f64.sqrt(),
            inner: h,
        }) as DynOp<f64>,
    ]));
    worst.push(("stacked [F; sqrt(rho) H]", dot_test(stacked.as_ref(), DOT_TRIALS, 19)));

    for (name, defect) in &worst {
        assert!(
            *defect <= DOT_TOL,
            "{name}: dot-test defect {defect} > {DOT_TOL}"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "adjoint suite took {elapsed:.1} s");
    let max = worst.iter().map(|(_, d)| *d).fold(0.0f64, f64::max);
    println!("PASS criterion 1: adjoint suite, max defect {max:.2e} over {DOT_TRIALS} trials, {elapsed:.2} s");
}

#[test]
fn criterion_02_kronecker_routing() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(21);
    let mut worst = 0.0f64;
    for lr in 1..=8usize {
        for lc in 1..=8usize {
            for rr in 1..=8usize {
                for rc in 1..=8usize {
                    let e = DenseMap::<f64>::random(lr, lc, &mut rng);
                    let s = DenseMap::<f64>::random(rr, rc, &mut rng);
                    let dense = e.kron(&s);
                    let z = gaussian_vec::<f64>(lc * rc, &mut rng);
                    let k = KroneckerMap::new(
                        Arc::new(e) as DynOp<f64>,
                        Arc::new(s) as DynOp<f64>,
                    );
                    let got = kron_apply(&k, &z).unwrap();
                    let want = dense.apply(&z);
                    worst = worst.max(rel_err(&got, &want));
                    let y = gaussian_vec::<f64>(lr * rr, &mut rng);
                    let got_adj = kron_adjoint_apply(&k, &y).unwrap();
                    let want_adj = dense.adjoint_apply(&y);
                    worst = worst.max(rel_err(&got_adj, &want_adj));
                }
            }
        }
    }
    // Complex spot checks on a sparser size grid.
    for (lr, lc, rr, rc) in [(2, 3, 4, 2), (5, 5, 3, 3), (8, 7, 2, 8)] {
        let e = DenseMap::<Complex64>::random(lr, lc, &mut rng);
        let s = DenseMap::<Complex64>::random(rr, rc, &mut rng);
        let dense = e.kron(&s);
        let z = gaussian_vec::<Complex64>(lc * rc, &mut rng);
        let k = KroneckerMap::new(
            Arc::new(e) as DynOp<Complex64>,
            Arc::new(s) as DynOp<Complex64>,
        );
        let got = kron_apply(&k, &z).unwrap();
        let want = dense.apply(&z);
        worst = worst.max(rel_err(&got, &want));
    }
    assert!(worst <= 1e-12, "kronecker vs dense rel err {worst}");
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "kronecker routing took {elapsed:.2} s");
    println!("PASS criterion 2: kronecker routing vs dense, max rel err {worst:.2e}, {elapsed:.2} s");
}

#[test]
fn criterion_03_lsmr_oracles() {
    let tight = LsmrOptions {
        atol: 1e-14,
        btol: 1e-14,
        max_iters: 50_000,
        damp: 1.0,
    };

    // 60x40 real, damp = 1.
    let mut rng = SplitMix64::new(31);
    let a = DenseMap::<f64>::random(60, 40, &mut rng);
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| (0..40).map(|j| a.entry(i, j)).collect())
        .collect();
    let b = gaussian_vec::<f64>(60, &mut rng);
    let (x, _) = lsmr_solve(&a, &b, &tight).unwrap();
    let want = normal_equations_solve(&rows, &b, 1.0);
    let err_real = rel_err(&x, &want);
    assert!(err_real <= 1e-8, "real damped solve rel err {err_real}");

    // 20x12 complex, damp = 1.
    let az = DenseMap::<Complex64>::random(20, 12, &mut rng);
    let rows_z: Vec<Vec<Complex64>> = (0..20)
        .map(|i| (0..12).map(|j| az.entry(i, j)).collect())
        .collect();
    let bz = gaussian_vec::<Complex64>(20, &mut rng);
    let (xz, _) = lsmr_solve(&az, &bz, &tight).unwrap();
    let want_z = normal_equations_solve(&rows_z, &bz, 1.0);
    let err_complex = rel_err(&xz, &want_z);
    assert!(err_complex <= 1e-8, "complex damped solve rel err {err_complex}");

    // Identity with damp 1 returns b/2.
    let id = IdentityMap { n: 6 };
    let b_id = gaussian_vec::<f64>(6, &mut rng);
    let (x_id, _) = lsmr_solve(&id, &b_id, &tight).unwrap();
    let half: Vec<f64> = b_id.iter().map(|v| v / 2.0).collect();
    let err_half = rel_err(&x_id, &half);
    assert!(err_half <= 1e-12, "identity ridge rel err {err_half}");

    println!(
        "PASS criterion 3: LSMR vs dense normal equations, real {err_real:.2e}, complex {err_complex:.2e}, identity {err_half:.2e}"
    );
}

#[test]
fn criterion_04_theta_update() {
    let mut rng = SplitMix64::new(41);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        // Log-uniform spreads across many decades.
        let eta = 10f64.powf(rng.next_f64() * 11.0 - 10.0); // 1e-10 .. 1e1
        let vartheta = 10f64.powf(rng.next_f64() * 8.0 - 6.0); // 1e-6 .. 1e2
        let z = 10f64.powf(rng.next_f64() * 6.0 - 4.0); // 1e-4 .. 1e2
        let theta = theta_update_scalar(z * z, eta, vartheta);
        let residual = 1.0 / vartheta - eta / theta - z * z / (2.0 * theta * theta);
        let scale = 1.0 / vartheta + eta / theta + z * z / (2.0 * theta * theta);
        worst = worst.max((residual / scale).abs());
    }
    assert!(worst <= 1e-10, "first-order residual {worst}");

    for _ in 0..100 {
        let eta = 10f64.powf(rng.next_f64() * 11.0 - 10.0);
        let vartheta = 10f64.powf(rng.next_f64() * 8.0 - 6.0);
        assert_eq!(theta_update_scalar(0.0, eta, vartheta), vartheta * eta);
    }
    println!("PASS criterion 4: theta update first-order residual {worst:.2e} over 10^4 triples; z=0 exact");
}

#[test]
fn criterion_05_ias_descent() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(51);
    let f = Arc::new(DenseMap::<f64>::random(30, 50, &mut rng)) as DynOp<f64>;
    let w = Arc::new(IdentityMap { n: 50 }) as DynOp<f64>;
    let b = gaussian_vec::<f64>(30, &mut rng);
    let config = IasConfig {
        eta: 0.1,
        theta_scale: 1.0,
        outer_tol: 1e-300,
        max_outer_iters: 20,
        inner: LsmrOptions {
            atol: 1e-12,
            btol: 1e-12,
            max_iters: 100_000,
            damp: 1.0,
        },
    };
    let (_, trace) = ias_run(f, w, &b, &config).unwrap();
    assert_eq!(trace.records.len(), 20);
    let mut max_uptick = 0.0f64;
    for pair in trace.records.windows(2) {
        let (prev, next) = (pair[0].gibbs_energy, pair[1].gibbs_energy);
        let uptick = (next - prev) / prev.abs().max(1.0);
        max_uptick = max_uptick.max(uptick);
        assert!(
            uptick <= 1e-10,
            "Gibbs energy increased {prev} -> {next} (rel {uptick:.2e})"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "descent run took {elapsed:.1} s");
    println!(
        "PASS criterion 5: Gibbs energy non-increasing over 20 iterations (max rel uptick {max_uptick:.2e}), {elapsed:.2} s"
    );
}

#[test]
fn criterion_06_sparse_recovery() {
    let started = Instant::now();
    // Fixed instance: 40x128 Gaussian sensing matrix (entry std 10), W = I,
    // 4 unit spikes, noiseless. Support and error thresholds frozen from the
    // pilot run.
    let mut rng = SplitMix64::new(61);
    let mut f = DenseMap::<f64>::random(40, 128, &mut rng);
    f = {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| (0..128).map(|j| 10.0 * f.entry(i, j)).collect())
            .collect();
        DenseMap::from_rows(&rows)
    };
    let support = [7usize, 40, 73, 101];
    let signs = [1.0, -1.0, 1.0, 1.0];
    let mut z_true = vec![0.0; 128];
    for (&i, &s) in support.iter().zip(&signs) {
        z_true[i] = s;
    }
    let b = f.apply(&z_true);

    let config = IasConfig {
        eta: 1e-8,
        theta_scale: 1e-2,
        outer_tol: 1e-8,
        max_outer_iters: 100,
        inner: LsmrOptions {
            atol: 1e-12,
            btol: 1e-12,
            max_iters: 2000,
            damp: 1.0,
        },
    };
    let (state, _) = ias_run(
        Arc::new(f) as DynOp<f64>,
        Arc::new(IdentityMap { n: 128 }) as DynOp<f64>,
        &b,
        &config,
    )
    .unwrap();

    let recovered: Vec<usize> = state
        .z
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.abs() > 1e-2)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(recovered, support.to_vec(), "support mismatch");
    let err = rel_err(&state.z, &z_true);
    assert!(err <= 1e-2, "rel l2 error {err}");
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "sparse recovery took {elapsed:.1} s");
    println!("PASS criterion 6: exact support recovery, rel l2 error {err:.2e}, {elapsed:.2} s");
}

#[test]
fn criterion_07_phase_equivariance() {
    // Masked-Fourier instance over the complex field.
    let n = 8;
    let n_frames = 4;
    let fmask = FourierMask::rows(n, n_frames, 2).unwrap();
    let forward = fourier_sample_op(&fmask);
    let haar = HaarSpec::new(n, n, 2).unwrap();
    let temporal = TemporalSpec::new(n_frames).unwrap();
    let w: DynOp<Complex64> = Arc::new(KroneckerMap::new(
        Arc::new(CumsumMap { spec: temporal }) as DynOp<Complex64>,
        Arc::new(HaarSynthesisMap { spec: haar }) as DynOp<Complex64>,
    ));

    let mut rng = SplitMix64::new(71);
    let b = gaussian_vec::<Complex64>(forward.rows(), &mut rng);
    let phi = 0.83;
    let rot = Complex64::from_polar(1.0, phi);
    let b_rot: Vec<Complex64> = b.iter().map(|&v| v * rot).collect();

    let config = IasConfig {
        eta: 1e-6,
        theta_scale: 1e-1,
        outer_tol: 1e-10,
        max_outer_iters: 10,
        inner: LsmrOptions {
            atol: 1e-12,
            btol: 1e-12,
            max_iters: 500,
            damp: 1.0,
        },
    };
    let (state_a, _) = ias_run(forward.clone(), w.clone(), &b, &config).unwrap();
    let (state_b, _) = ias_run(forward, w, &b_rot, &config).unwrap();

    let theta_err = state_a
        .theta
        .iter()
        .zip(&state_b.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / state_a.theta.iter().cloned().fold(0.0f64, f64::max);
    assert!(theta_err <= 1e-10, "theta changed under phase: {theta_err}");

    let z_rot: Vec<Complex64> = state_a.z.iter().map(|&v| v * rot).collect();
    let z_err = rel_err(&state_b.z, &z_rot);
    assert!(z_err <= 1e-10, "z not phase-rotated: {z_err}");
    println!(
        "PASS criterion 7: phase equivariance, theta drift {theta_err:.2e}, z rotation error {z_err:.2e}"
    );
}

#[test]
fn criterion_08_admm_oracle() {
    // Fixed LASSO instance: 8x4 dense, H1 = I, mu2 = 0.
    let mut rng = SplitMix64::new(81);
    let f = DenseMap::<f64>::random(8, 4, &mut rng);
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|i| (0..4).map(|j| f.entry(i, j)).collect())
        .collect();
    let b = gaussian_vec::<f64>(8, &mut rng);
    let mu1 = 0.75;

    let oracle = ista_lasso(&rows, &b, mu1, 1e-10);

    for (dual_update, rho) in [(DualUpdate::Verbatim, 1.0), (DualUpdate::Verbatim, 0.5), (DualUpdate::Standard, 2.0)] {
        let config = AdmmConfig {
            mu1,
            mu2: 0.0,
            rho,
            eps_abs: 1e-12,
            eps_rel: 1e-12,
            max_outer_iters: 5000,
            inner: LsmrOptions {
                atol: 1e-14,
                btol: 1e-14,
                max_iters: 2000,
                damp: 0.0,
            },
            dual_update,
        };
        let f_op = Arc::new(DenseMap::from_rows(&rows)) as DynOp<f64>;
        let id = Arc::new(IdentityMap { n: 4 }) as DynOp<f64>;
        let (state, _) = admm_run(f_op, id.clone(), id, &b, &config).unwrap();
        let err = rel_err(&state.x, &oracle);
        assert!(
            err <= 1e-6,
            "{dual_update:?} rho={rho}: ADMM vs ISTA rel err {err}"
        );
    }

    // Soft-threshold subgradient optimality on 10^4 random points.
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let v = 4.0 * rng.next_gaussian();
        let kappa = rng.next_f64() + 1e-3;
        let q = soft_threshold(&[v], kappa)[0];
        if q != 0.0 {
            worst = worst.max((q - v + kappa * q.signum()).abs());
        } else {
            assert!(v.abs() <= kappa + 1e-12);
        }
        let vz = Complex64::standard_gaussian(&mut rng).scale(2.0);
        let qz = soft_threshold(&[vz], kappa)[0];
        if qz != Complex64::zero() {
            let grad = qz - vz + (qz / qz.norm()).scale(kappa);
            worst = worst.max(grad.norm());
        } else {
            assert!(vz.norm() <= kappa + 1e-12);
        }
    }
    assert!(worst <= 1e-12, "soft-threshold optimality residual {worst}");
    println!("PASS criterion 8: ADMM matches ISTA oracle under both dual updates; prox residual {worst:.2e}");
}

#[test]
fn criterion_09_ssim_oracle() {
    let mut rng = SplitMix64::new(91);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a: Vec<f64> = (0..32 * 32).map(|_| rng.next_gaussian()).collect();
        let b: Vec<f64> = (0..32 * 32).map(|_| rng.next_gaussian()).collect();
        let params = SsimParams {
            k1: 0.1,
            k2: 0.1,
            gaussian_sigma: 1.5,
            window_size: 11,
            data_range: Some(4.0),
            mask: None,
        };
        let got = ssim(&a, &b, 32, 32, &params).unwrap();
        let want = ssim_reference(&a, &b, 32, 32, 0.1, 0.1, 1.5, 11, 4.0);
        worst = worst.max((got - want).abs());
    }
    assert!(worst <= 1e-6, "ssim vs direct reference diff {worst}");

    let img: Vec<f64> = (0..32 * 32).map(|_| rng.next_gaussian()).collect();
    let params = SsimParams::default();
    let self_score = ssim(&img, &img, 32, 32, &params).unwrap();
    assert_eq!(self_score, 1.0, "self-similarity must be exactly 1.0");
    println!("PASS criterion 9: SSIM vs sliding-window reference diff {worst:.2e}; identical images score 1.0");
}

#[test]
fn criterion_10_synthetic_analogue() {
    let started = Instant::now();

    // IAS at defaults beats the damped least-squares baseline.
    let out_ias = temp_out("c10-ias");
    let ias_cfg = base_config("ias", &out_ias);
    let ias_record = cmd_reconstruct(&ias_cfg, true).unwrap();
    let out_lsq = temp_out("c10-lsq");
    let lsq_cfg = base_config("lsq", &out_lsq);
    let lsq_record = cmd_reconstruct(&lsq_cfg, true).unwrap();
    assert!(
        ias_record.ssim_t_avg > lsq_record.ssim_t_avg,
        "IAS ssim {} must exceed lsq ssim {}",
        ias_record.ssim_t_avg,
        lsq_record.ssim_t_avg
    );

    // Matched eight-decade grids: IAS max-min spread < ADMM spread.
    let out_si = temp_out("c10-sweep-ias");
    let mut sweep_ias = base_config("ias", &out_si);
    sweep_ias.sweep = Some(toml::from_str(
        "eta_log10 = [-9.0, -7.0, -5.0, -3.0, -1.0]\ntheta_log10 = [-5.0, -3.0, -1.0, 1.0, 3.0]",
    )
    .unwrap());
    let ias_records = cmd_sweep(&sweep_ias, 1, true).unwrap();

    let out_sa = temp_out("c10-sweep-admm");
    let mut sweep_admm = base_config("admm", &out_sa);
    sweep_admm.sweep = Some(toml::from_str(
        "mu_s_log10 = [-5.0, -3.0, -1.0, 1.0, 3.0]\nmu_t_log10 = [-5.0, -3.0, -1.0, 1.0, 3.0]",
    )
    .unwrap());
    let admm_records = cmd_sweep(&sweep_admm, 1, true).unwrap();

    let spread = |records: &[dynrecon::harness::RunRecord]| {
        let vals: Vec<f64> = records
            .iter()
            .map(|r| r.ssim_t_avg)
            .filter(|v| !v.is_nan())
            .collect();
        assert_eq!(vals.len(), 25, "all sweep cells must succeed");
        for v in &vals {
            assert!((-1.0..=1.0).contains(v), "ssim {v} outside [-1, 1]");
        }
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    };
    let ias_spread = spread(&ias_records);
    let admm_spread = spread(&admm_records);
    assert!(
        ias_spread < admm_spread,
        "IAS spread {ias_spread} must be below ADMM spread {admm_spread}"
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "synthetic analogue took {elapsed:.0} s");
    println!(
        "PASS criterion 10: IAS ssim {:.4} > lsq {:.4}; grid spreads IAS {ias_spread:.4} < ADMM {admm_spread:.4}; {elapsed:.0} s",
        ias_record.ssim_t_avg, lsq_record.ssim_t_avg
    );
}

#[test]
fn criterion_11_iteration_study() {
    let started = Instant::now();
    let out = temp_out("c11");
    let config = base_config("ias", &out);
    cmd_iterstudy(&config, true).unwrap();

    let text = std::fs::read_to_string(format!("{out}/iterstudy.csv")).unwrap();
    // rows: solver, inner_cap, outer_iter, ssim, cum_wall_ms
    let mut curves: std::collections::HashMap<usize, Vec<(usize, f64, f64)>> =
        std::collections::HashMap::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let cap: usize = cells[1].parse().unwrap();
        let iter: usize = cells[2].parse().unwrap();
        let ssim: f64 = cells[3].parse().unwrap();
        let ms: f64 = cells[4].parse().unwrap();
        curves.entry(cap).or_default().push((iter, ssim, ms));
    }
    let caps = [50usize, 150, 300];
    let n_iters = curves[&50].len();
    let mut worst = 0.0f64;
    for iter in 3..=n_iters {
        let vals: Vec<f64> = caps
            .iter()
            .map(|c| curves[c].iter().find(|(i, _, _)| *i == iter).unwrap().1)
            .collect();
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(spread);
        assert!(
            spread <= 0.02,
            "caps 50/150/300 disagree by {spread} at outer iteration {iter}"
        );
    }
    // Cumulative wall time is monotone within each curve.
    for curve in curves.values() {
        let mut c = curve.clone();
        c.sort_by_key(|(i, _, _)| *i);
        assert!(c.windows(2).all(|w| w[0].2 <= w[1].2), "wall time not monotone");
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "iteration study took {elapsed:.0} s");
    println!(
        "PASS criterion 11: caps 50/150/300 agree within {worst:.4} (<= 0.02) after outer iteration 3; {elapsed:.0} s"
    );
}

#[test]
fn criterion_12_determinism() {
    let out = temp_out("c12");
    let config = base_config("ias", &out);

    cmd_phantom(&config, true).unwrap();
    let record1 = cmd_reconstruct(&config, true).unwrap();
    let truth1 = std::fs::read(format!("{out}/truth.f64")).unwrap();
    let recon1 = std::fs::read(format!("{out}/recon.f64")).unwrap();
    let theta1 = std::fs::read(format!("{out}/theta_image.f64")).unwrap();
    let pgm1 = std::fs::read(format!("{out}/frame_007.pgm")).unwrap();

    cmd_phantom(&config, false).unwrap();
    let record2 = cmd_reconstruct(&config, false).unwrap();
    let truth2 = std::fs::read(format!("{out}/truth.f64")).unwrap();
    let recon2 = std::fs::read(format!("{out}/recon.f64")).unwrap();
    let theta2 = std::fs::read(format!("{out}/theta_image.f64")).unwrap();
    let pgm2 = std::fs::read(format!("{out}/frame_007.pgm")).unwrap();

    assert_eq!(truth1, truth2, "phantom stack must be bit-identical");
    assert_eq!(recon1, recon2, "reconstruction must be bit-identical");
    assert_eq!(theta1, theta2, "theta image must be bit-identical");
    assert_eq!(pgm1, pgm2, "previews must be bit-identical");
    // Metrics rows identical apart from the wall-clock column.
    assert_eq!(record1.to_csv_row_stable(), record2.to_csv_row_stable());

    // The default phantom fixture checksum, recorded at first generation.
    assert_eq!(fnv1a(&truth1), 0x4341_f855_d84b_6325, "phantom checksum drifted");

    println!("PASS criterion 12: bit-identical arrays and stable metrics rows across reruns");
}
