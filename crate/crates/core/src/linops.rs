//! Matrix-free linear operators: the forward/adjoint contract every solver
//! consumes, plus the combinators (composition, diagonal scaling, vertical
//! stack, block diagonal, Kronecker product) used to assemble the scaled
//! dictionary operators without ever forming a matrix.
//!
//! Vectorization convention: `vec` stacks the columns of a matrix from left
//! to right. All reshapes in the Kronecker routines follow this convention.

use std::sync::Arc;

use crate::num::{dot, norm2, Scalar, ScalarField};
use crate::rng::SplitMix64;

/// Dimensions and field of a linear operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorShape {
    /// Output dimension.
    pub rows: usize,
    /// Input dimension.
    pub cols: usize,
    pub field: ScalarField,
}

impl OperatorShape {
    pub fn of<T: Scalar>(rows: usize, cols: usize) -> Self {
        OperatorShape {
            rows,
            cols,
            field: T::FIELD,
        }
    }
}

/// Errors from the checked operator entry points.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LinopError {
    #[error("dimension mismatch: expected vector of length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("Kronecker factors require input length {left_cols} x {right_cols} = {expected}, got {got}")]
    KroneckerFactor {
        left_cols: usize,
        right_cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("nonpositive scaling entry at index {index}: {value}")]
    NonPositiveScale { index: usize, value: f64 },
}

/// A linear map with matrix-free forward and adjoint application.
///
/// Implementations must be pure (same input, same output) and immutable
/// after construction, so they can be applied concurrently.
pub trait LinOp<T: Scalar>: Send + Sync {
    fn shape(&self) -> OperatorShape;

    /// y = A x. Panics on dimension mismatch; use [`apply`] for a checked call.
    fn apply(&self, x: &[T]) -> Vec<T>;

    /// x = Aᴴ y (conjugate transpose over the complex field).
    fn adjoint_apply(&self, y: &[T]) -> Vec<T>;

    fn rows(&self) -> usize {
        self.shape().rows
    }
    fn cols(&self) -> usize {
        self.shape().cols
    }
}

/// Shared-ownership operator handle; combinators take and return these.
pub type DynOp<T> = Arc<dyn LinOp<T>>;

impl<T: Scalar> LinOp<T> for Arc<dyn LinOp<T>> {
    fn shape(&self) -> OperatorShape {
        (**self).shape()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (**self).apply(x)
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        (**self).adjoint_apply(y)
    }
}

pub(crate) fn check_len<T>(x: &[T], expected: usize) -> Result<(), LinopError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(LinopError::Shape {
            expected,
            got: x.len(),
        })
    }
}

/// Checked forward application.
pub fn apply<T: Scalar>(a: &dyn LinOp<T>, x: &[T]) -> Result<Vec<T>, LinopError> {
    check_len(x, a.cols())?;
    Ok(a.apply(x))
}

/// Checked adjoint application.
pub fn adjoint_apply<T: Scalar>(a: &dyn LinOp<T>, y: &[T]) -> Result<Vec<T>, LinopError> {
    check_len(y, a.rows())?;
    Ok(a.adjoint_apply(y))
}

// ---------------------------------------------------------------------------
// Primitive operators
// ---------------------------------------------------------------------------

/// Identity map.
pub struct IdentityMap {
    pub n: usize,
}

impl<T: Scalar> LinOp<T> for IdentityMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.n, self.n)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "identity: expected {}, got {}", self.n, x.len());
        x.to_vec()
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.n, "identity: expected {}, got {}", self.n, y.len());
        y.to_vec()
    }
}

/// The zero map of a given shape.
pub struct ZeroMap {
    pub rows: usize,
    pub cols: usize,
}

impl<T: Scalar> LinOp<T> for ZeroMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.rows, self.cols)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        vec![T::zero(); self.rows]
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        vec![T::zero(); self.cols]
    }
}

/// Dense matrix in column-major storage; the reference operator for small
/// instances and oracles.
pub struct DenseMap<T> {
    rows: usize,
    cols: usize,
    /// Column-major entries, `data[j * rows + i] = A[i][j]`.
    data: Vec<T>,
}

impl<T: Scalar> DenseMap<T> {
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        DenseMap { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = vec![T::zero(); r * c];
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, &v) in row.iter().enumerate() {
                data[j * r + i] = v;
            }
        }
        DenseMap {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn random(rows: usize, cols: usize, rng: &mut SplitMix64) -> Self {
        let data = (0..rows * cols)
            .map(|_| T::standard_gaussian(rng))
            .collect();
        DenseMap { rows, cols, data }
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    /// Explicit Kronecker product of two dense maps, `self ⊗ other`.
    pub fn kron(&self, other: &DenseMap<T>) -> DenseMap<T> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![T::zero(); rows * cols];
        for jl in 0..self.cols {
            for jr in 0..other.cols {
                let j = jl * other.cols + jr;
                for il in 0..self.rows {
                    for ir in 0..other.rows {
                        let i = il * other.rows + ir;
                        data[j * rows + i] = self.entry(il, jl) * other.entry(ir, jr);
                    }
                }
            }
        }
        DenseMap { rows, cols, data }
    }
}

impl<T: Scalar> LinOp<T> for DenseMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.rows, self.cols)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "dense: expected {}, got {}", self.cols, x.len());
        let mut y = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            let col = &self.data[j * self.rows..(j + 1) * self.rows];
            for (yi, &aij) in y.iter_mut().zip(col) {
                *yi += aij * xj;
            }
        }
        y
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows, "dense: expected {}, got {}", self.rows, y.len());
        (0..self.cols)
            .map(|j| {
                let col = &self.data[j * self.rows..(j + 1) * self.rows];
                dot(col, y)
            })
            .collect()
    }
}

/// Diagonal scaling by a stored vector of field elements.
pub struct DiagonalMap<T> {
    pub diag: Vec<T>,
}

impl<T: Scalar> LinOp<T> for DiagonalMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.diag.len(), self.diag.len())
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.diag.len());
        x.iter().zip(&self.diag).map(|(&v, &d)| d * v).collect()
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.diag.len());
        y.iter()
            .zip(&self.diag)
            .map(|(&v, &d)| d.conj() * v)
            .collect()
    }
}

/// Real scalar multiple of an operator.
pub struct ScaledMap<T: Scalar> {
    pub factor: f64,
    pub inner: DynOp<T>,
}

impl<T: Scalar> LinOp<T> for ScaledMap<T> {
    fn shape(&self) -> OperatorShape {
        self.inner.shape()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.inner.apply(x);
        for v in y.iter_mut() {
            *v = v.scale(self.factor);
        }
        y
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        let mut x = self.inner.adjoint_apply(y);
        for v in x.iter_mut() {
            *v = v.scale(self.factor);
        }
        x
    }
}

/// Composition A ∘ B (apply B first).
pub struct ComposeMap<T: Scalar> {
    outer: DynOp<T>,
    inner: DynOp<T>,
}

impl<T: Scalar> ComposeMap<T> {
    pub fn new(outer: DynOp<T>, inner: DynOp<T>) -> Self {
        assert_eq!(
            outer.cols(),
            inner.rows(),
            "compose: outer.cols {} != inner.rows {}",
            outer.cols(),
            inner.rows()
        );
        ComposeMap { outer, inner }
    }
}

impl<T: Scalar> LinOp<T> for ComposeMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.outer.rows(), self.inner.cols())
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.outer.apply(&self.inner.apply(x))
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        self.inner.adjoint_apply(&self.outer.adjoint_apply(y))
    }
}

/// Vertical stack [A₁; A₂; …]; all blocks share the input.
pub struct StackMap<T: Scalar> {
    blocks: Vec<DynOp<T>>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> StackMap<T> {
    pub fn new(blocks: Vec<DynOp<T>>) -> Self {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols();
        for b in &blocks {
            assert_eq!(b.cols(), cols, "stack: column mismatch");
        }
        let rows = blocks.iter().map(|b| b.rows()).sum();
        StackMap { blocks, rows, cols }
    }
}

impl<T: Scalar> LinOp<T> for StackMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.rows, self.cols)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = Vec::with_capacity(self.rows);
        for b in &self.blocks {
            y.extend(b.apply(x));
        }
        y
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![T::zero(); self.cols];
        let mut offset = 0;
        for b in &self.blocks {
            let part = b.adjoint_apply(&y[offset..offset + b.rows()]);
            for (xi, pi) in x.iter_mut().zip(part) {
                *xi += pi;
            }
            offset += b.rows();
        }
        x
    }
}

/// Block-diagonal operator, one block per time frame; frame t of the input
/// is touched only by block t.
pub struct BlockDiagonalMap<T: Scalar> {
    blocks: Vec<DynOp<T>>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> BlockDiagonalMap<T> {
    pub fn new(blocks: Vec<DynOp<T>>) -> Self {
        assert!(!blocks.is_empty());
        let rows = blocks.iter().map(|b| b.rows()).sum();
        let cols = blocks.iter().map(|b| b.cols()).sum();
        BlockDiagonalMap { blocks, rows, cols }
    }

    pub fn blocks(&self) -> &[DynOp<T>] {
        &self.blocks
    }
}

impl<T: Scalar> LinOp<T> for BlockDiagonalMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.rows, self.cols)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = Vec::with_capacity(self.rows);
        let mut offset = 0;
        for b in &self.blocks {
            y.extend(b.apply(&x[offset..offset + b.cols()]));
            offset += b.cols();
        }
        y
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut x = Vec::with_capacity(self.cols);
        let mut offset = 0;
        for b in &self.blocks {
            x.extend(b.adjoint_apply(&y[offset..offset + b.rows()]));
            offset += b.rows();
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Kronecker product
// ---------------------------------------------------------------------------

/// Kronecker product left ⊗ right, applied matrix-free.
///
/// With the temporal dictionary E on the left (N_T × N_E) and the spatial
/// dictionary S on the right (N_P × N_S), the forward map realizes
/// vec(S Z Eᵀ) for Z the N_S × N_E coefficient matrix: S is applied to each
/// column of Z, then E to each row of the result.
pub struct KroneckerMap<T: Scalar> {
    pub left: DynOp<T>,
    pub right: DynOp<T>,
}

impl<T: Scalar> KroneckerMap<T> {
    pub fn new(left: DynOp<T>, right: DynOp<T>) -> Self {
        KroneckerMap { left, right }
    }
}

impl<T: Scalar> LinOp<T> for KroneckerMap<T> {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(
            self.left.rows() * self.right.rows(),
            self.left.cols() * self.right.cols(),
        )
    }

    fn apply(&self, z: &[T]) -> Vec<T> {
        let (n_s, n_e) = (self.right.cols(), self.left.cols());
        let (n_p, n_t) = (self.right.rows(), self.left.rows());
        assert_eq!(
            z.len(),
            n_s * n_e,
            "kron: expected {} ({} x {}), got {}",
            n_s * n_e,
            n_s,
            n_e,
            z.len()
        );
        // S per column of Z (N_S x N_E, column-major) -> M (N_P x N_E).
        let mut m = vec![T::zero(); n_p * n_e];
        for e in 0..n_e {
            let col = self.right.apply(&z[e * n_s..(e + 1) * n_s]);
            m[e * n_p..(e + 1) * n_p].copy_from_slice(&col);
        }
        // E per row of M -> output (N_P x N_T, column-major).
        let mut out = vec![T::zero(); n_p * n_t];
        let mut row = vec![T::zero(); n_e];
        for p in 0..n_p {
            for e in 0..n_e {
                row[e] = m[e * n_p + p];
            }
            let r = self.left.apply(&row);
            for (t, &v) in r.iter().enumerate() {
                out[t * n_p + p] = v;
            }
        }
        out
    }

    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        let (n_s, n_e) = (self.right.cols(), self.left.cols());
        let (n_p, n_t) = (self.right.rows(), self.left.rows());
        assert_eq!(
            y.len(),
            n_p * n_t,
            "kron adjoint: expected {} ({} x {}), got {}",
            n_p * n_t,
            n_p,
            n_t,
            y.len()
        );
        // Sᴴ per column of Y (N_P x N_T) -> M (N_S x N_T).
        let mut m = vec![T::zero(); n_s * n_t];
        for t in 0..n_t {
            let col = self.right.adjoint_apply(&y[t * n_p..(t + 1) * n_p]);
            m[t * n_s..(t + 1) * n_s].copy_from_slice(&col);
        }
        // Eᴴ per row of M -> output (N_S x N_E, column-major).
        let mut out = vec![T::zero(); n_s * n_e];
        let mut row = vec![T::zero(); n_t];
        for s in 0..n_s {
            for t in 0..n_t {
                row[t] = m[t * n_s + s];
            }
            let r = self.left.adjoint_apply(&row);
            for (e, &v) in r.iter().enumerate() {
                out[e * n_s + s] = v;
            }
        }
        out
    }
}

/// Checked Kronecker forward application; rejects non-factorable lengths.
pub fn kron_apply<T: Scalar>(k: &KroneckerMap<T>, z: &[T]) -> Result<Vec<T>, LinopError> {
    let expected = k.left.cols() * k.right.cols();
    if z.len() != expected {
        return Err(LinopError::KroneckerFactor {
            left_cols: k.left.cols(),
            right_cols: k.right.cols(),
            expected,
            got: z.len(),
        });
    }
    Ok(k.apply(z))
}

/// Checked Kronecker adjoint application.
pub fn kron_adjoint_apply<T: Scalar>(k: &KroneckerMap<T>, y: &[T]) -> Result<Vec<T>, LinopError> {
    let expected = k.left.rows() * k.right.rows();
    if y.len() != expected {
        return Err(LinopError::KroneckerFactor {
            left_cols: k.left.rows(),
            right_cols: k.right.rows(),
            expected,
            got: y.len(),
        });
    }
    Ok(k.adjoint_apply(y))
}

// ---------------------------------------------------------------------------
// Adjoint validation
// ---------------------------------------------------------------------------

/// Randomized adjoint consistency check.
///
/// Returns the maximum over `trials` of
/// |⟨Ax, y⟩ − ⟨x, Aᴴy⟩| / (‖Ax‖·‖y‖ + ε) with standard-Gaussian x, y.
pub fn dot_test<T: Scalar>(a: &dyn LinOp<T>, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1);
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x: Vec<T> = (0..a.cols()).map(|_| T::standard_gaussian(&mut rng)).collect();
        let y: Vec<T> = (0..a.rows()).map(|_| T::standard_gaussian(&mut rng)).collect();
        let ax = a.apply(&x);
        let ahy = a.adjoint_apply(&y);
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &ahy);
        let defect = (lhs - rhs).abs() / (norm2(&ax) * norm2(&y) + f64::EPSILON);
        worst = worst.max(defect);
    }
    worst
}
