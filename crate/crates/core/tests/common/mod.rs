//! Shared oracles for the integration suites. Everything here is an
//! independent route: dense factorizations, brute-force references, and a
//! direct sliding-window SSIM, none of which share code with the library
//! paths they check.

// Each integration suite compiles its own copy; not every suite uses every
// oracle.
#![allow(dead_code)]

use dynrecon::num::{norm2, Scalar};

/// Dense LU solve with partial pivoting; the normal-equations oracle.
pub fn dense_solve<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<T>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = m[col][col];
        assert!(diag.abs() > 0.0, "singular oracle system");
        for row in col + 1..n {
            let factor = m[row][col] / diag;
            for k in col..n {
                let sub = factor * m[col][k];
                m[row][k] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[row] -= sub;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// Solve (AᴴA + damp²·I) x = Aᴴ b densely from the raw row-major matrix.
pub fn normal_equations_solve<T: Scalar>(
    rows: &[Vec<T>],
    b: &[T],
    damp: f64,
) -> Vec<T> {
    let m = rows.len();
    let n = rows[0].len();
    assert_eq!(b.len(), m);
    let mut gram = vec![vec![T::zero(); n]; n];
    for (i, gi) in gram.iter_mut().enumerate() {
        for j in 0..n {
            let mut acc = T::zero();
            for row in rows {
                acc += row[i].conj() * row[j];
            }
            if i == j {
                acc += T::from_real(damp * damp);
            }
            gi[j] = acc;
        }
    }
    let mut rhs = vec![T::zero(); n];
    for (j, r) in rhs.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (row, &bi) in rows.iter().zip(b) {
            acc += row[j].conj() * bi;
        }
        *r = acc;
    }
    dense_solve(&gram, &rhs)
}

pub fn rel_err<T: Scalar>(got: &[T], want: &[T]) -> f64 {
    assert_eq!(got.len(), want.len());
    let diff: f64 = got
        .iter()
        .zip(want)
        .map(|(&g, &w)| (g - w).abs_sq())
        .sum::<f64>()
        .sqrt();
    diff / norm2(want).max(f64::MIN_POSITIVE)
}

/// ISTA run to tight tolerance: the independent proximal-gradient oracle
/// for min ½‖Ax − b‖² + λ‖x‖₁.
pub fn ista_lasso(rows: &[Vec<f64>], b: &[f64], lambda: f64, tol: f64) -> Vec<f64> {
    let m = rows.len();
    let n = rows[0].len();
    // Lipschitz bound by power iteration on AᵀA.
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..200 {
        let mut av = vec![0.0; m];
        for (i, row) in rows.iter().enumerate() {
            av[i] = row.iter().zip(&v).map(|(a, x)| a * x).sum();
        }
        let mut atav = vec![0.0; n];
        for (row, &avi) in rows.iter().zip(&av) {
            for (j, &a) in row.iter().enumerate() {
                atav[j] += a * avi;
            }
        }
        lip = norm2(&atav);
        if lip == 0.0 {
            lip = 1.0;
            break;
        }
        for (vj, &aj) in v.iter_mut().zip(&atav) {
            *vj = aj / lip;
        }
    }
    let step = 1.0 / (lip * 1.01);

    let mut x = vec![0.0; n];
    for _ in 0..500_000 {
        let mut ax = vec![0.0; m];
        for (i, row) in rows.iter().enumerate() {
            ax[i] = row.iter().zip(&x).map(|(a, xi)| a * xi).sum();
        }
        let mut grad = vec![0.0; n];
        for (row, (&axi, &bi)) in rows.iter().zip(ax.iter().zip(b)) {
            for (j, &a) in row.iter().enumerate() {
                grad[j] += a * (axi - bi);
            }
        }
        let mut max_change = 0.0f64;
        for j in 0..n {
            let t = x[j] - step * grad[j];
            let new = t.signum() * (t.abs() - lambda * step).max(0.0);
            max_change = max_change.max((new - x[j]).abs());
            x[j] = new;
        }
        if max_change <= tol {
            break;
        }
    }
    x
}

/// Direct sliding-window SSIM: per-position double loop over the full
/// Gaussian window, no separable filtering.
pub fn ssim_reference(
    a: &[f64],
    b: &[f64],
    width: usize,
    height: usize,
    k1: f64,
    k2: f64,
    sigma: f64,
    win: usize,
    data_range: f64,
) -> f64 {
    let rad = win / 2;
    let mut weights = vec![0.0; win * win];
    let mut sum = 0.0;
    for r in 0..win {
        for c in 0..win {
            let dr = r as f64 - rad as f64;
            let dc = c as f64 - rad as f64;
            let w = (-0.5 * (dr * dr + dc * dc) / (sigma * sigma)).exp();
            weights[r * win + c] = w;
            sum += w;
        }
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    let c1 = (k1 * data_range).powi(2);
    let c2 = (k2 * data_range).powi(2);

    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..height - win + 1 {
        for c0 in 0..width - win + 1 {
            let (mut mx, mut my) = (0.0, 0.0);
            for r in 0..win {
                for c in 0..win {
                    let w = weights[r * win + c];
                    mx += w * a[(r0 + r) * width + c0 + c];
                    my += w * b[(r0 + r) * width + c0 + c];
                }
            }
            let (mut vx, mut vy, mut vxy) = (0.0, 0.0, 0.0);
            for r in 0..win {
                for c in 0..win {
                    let w = weights[r * win + c];
                    let da = a[(r0 + r) * width + c0 + c] - mx;
                    let db = b[(r0 + r) * width + c0 + c] - my;
                    vx += w * da * da;
                    vy += w * db * db;
                    vxy += w * da * db;
                }
            }
            let s = ((2.0 * mx * my + c1) * (2.0 * vxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    total / count as f64
}

/// FNV-1a 64 over raw bytes, for fixture checksums.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
