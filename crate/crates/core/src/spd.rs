//! Symmetric and positive-definite matrices with the affine-invariant
//! geometry of `P(n)`.
//!
//! Symmetric matrices are stored as a packed upper triangle in row-major
//! order, so symmetry holds structurally. For `n = 2` the packed order is
//! `[a11, a12, a22]`. Every matrix function (log, exp, square root, real
//! powers) goes through a symmetric eigendecomposition.
//!
//! The affine-invariant metric is `g_x(a, b) = tr(x⁻¹ a x⁻¹ b)` with distance
//! `‖log(x^{-1/2} y x^{-1/2})‖_F`. `P(n)` splits isometrically as
//! `ℝ × P₁(n)` through `(s, p) ↦ e^{s/√n} p`.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;

/// Positivity threshold, relative to the trace.
pub const SPD_EPS: f64 = 1e-12;

/// Dense real matrix used for congruences, Jacobians and factors.
pub type Matrix = DMatrix<f64>;

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * n - i + 1) / 2 + (j - i)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(GeomError::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

/// Real symmetric `n×n` matrix in packed upper-triangular storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            packed: vec![0.0; packed_len(n)],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds the matrix from its upper triangle; `f` is only queried for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let mut packed = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                packed.push(f(i, j));
            }
        }
        Ok(Self { n, packed })
    }

    pub fn from_packed(n: usize, packed: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if packed.len() != packed_len(n) {
            return Err(GeomError::BadPackedLength {
                expected: packed_len(n),
                got: packed.len(),
            });
        }
        if packed.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { n, packed })
    }

    /// Infers `n` from the packed length.
    pub fn from_packed_auto(packed: Vec<f64>) -> Result<Self> {
        let n = (1..=MAX_DIM)
            .find(|&n| packed_len(n) == packed.len())
            .ok_or(GeomError::BadPackedLength {
                expected: 0,
                got: packed.len(),
            })?;
        Self::from_packed(n, packed)
    }

    /// Symmetric part `(m + mᵀ)/2` of a square dense matrix.
    pub fn from_dense(m: &Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(GeomError::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.n, i, j)]
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            packed: self.packed.iter().map(|v| v * c).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_dim(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            packed: self
                .packed
                .iter()
                .zip(&other.packed)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// `A X Aᵀ` for a square `A` of matching size.
    pub fn congruence(&self, a: &Matrix) -> Result<Self> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(GeomError::DimensionMismatch {
                left: self.n,
                right: a.nrows(),
            });
        }
        Self::from_dense(&(a * self.to_dense() * a.transpose()))
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.packed
            .iter()
            .zip(&other.packed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { left: a, right: b })
    }
}

/// Eigendecomposition `x = Q diag(values) Qᵀ` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthogonal matrix whose columns are the eigenvectors.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `Q f(Λ) Qᵀ`, assembled directly into packed storage.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let q = &self.vectors;
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| fv[k] * q[(i, k)] * q[(j, k)]).sum())
            .expect("dimension already validated")
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|l| l)
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eig(x: &SymMatrix) -> SymEigen {
    let eig = x.to_dense().symmetric_eigen();
    let n = x.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    SymEigen { values, vectors }
}

/// Point of `P(n)`: a symmetric positive-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(SymMatrix);

impl SpdMatrix {
    /// Accepts `x` when its smallest eigenvalue exceeds `SPD_EPS · tr(x)`.
    pub fn new(x: SymMatrix) -> Result<Self> {
        let eig = sym_eig(&x);
        let trace = x.trace();
        let min = eig.values[0];
        if !(trace > 0.0) || !(min > SPD_EPS * trace) {
            return Err(GeomError::SingularInput(format!(
                "smallest eigenvalue {min:e} not above {SPD_EPS:e}·trace (trace {trace:e})"
            )));
        }
        Ok(Self(x))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self(SymMatrix::identity(n)?))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Result<Self> {
        Self::new(SymMatrix::identity(n)?.scale(c))
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diag(diag)?)
    }

    pub fn from_packed(n: usize, packed: Vec<f64>) -> Result<Self> {
        Self::new(SymMatrix::from_packed(n, packed)?)
    }

    pub fn from_dense(m: &Matrix) -> Result<Self> {
        Self::new(SymMatrix::from_dense(m)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn to_dense(&self) -> Matrix {
        self.0.to_dense()
    }

    pub fn eig(&self) -> SymEigen {
        sym_eig(&self.0)
    }

    /// Lower-triangular Cholesky factor `L` with `L Lᵀ = x`.
    pub fn cholesky(&self) -> Matrix {
        match self.to_dense().cholesky() {
            Some(c) => c.l(),
            // Rounding can defeat the factorization for extremely
            // ill-conditioned inputs; fall back to the symmetric square root
            // followed by a QR step to recover a triangular factor.
            None => {
                let root = self.sqrt().to_dense();
                let qr = root.transpose().qr();
                let mut l = qr.r().transpose();
                for j in 0..self.n() {
                    if l[(j, j)] < 0.0 {
                        for i in 0..self.n() {
                            l[(i, j)] = -l[(i, j)];
                        }
                    }
                }
                l
            }
        }
    }

    pub fn log_det(&self) -> f64 {
        self.eig().values.iter().map(|l| l.ln()).sum()
    }

    pub fn det(&self) -> f64 {
        self.eig().values.iter().product()
    }

    pub fn inverse(&self) -> SpdMatrix {
        match self.to_dense().cholesky() {
            Some(c) => SpdMatrix(SymMatrix::from_dense(&c.inverse()).expect("square")),
            None => SpdMatrix(self.eig().map(|l| 1.0 / l)),
        }
    }

    pub fn log(&self) -> SymMatrix {
        spd_log(self)
    }

    pub fn sqrt(&self) -> SpdMatrix {
        spd_sqrt(self)
    }

    pub fn powf(&self, t: f64) -> SpdMatrix {
        SpdMatrix(self.eig().map(|l| l.powf(t)))
    }

    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(GeomError::SingularInput(format!("scale factor {c}")));
        }
        Ok(SpdMatrix(self.0.scale(c)))
    }

    /// `A x Aᵀ`; `A` must be invertible.
    pub fn congruence(&self, a: &Matrix) -> Result<SpdMatrix> {
        let det = square_det(a, self.n())?;
        if det == 0.0 || !det.is_finite() {
            return Err(GeomError::SingularInput("congruence by singular matrix".into()));
        }
        SpdMatrix::new(self.0.congruence(a)?)
    }
}

/// Determinant of a square matrix whose size must be `n`.
pub(crate) fn square_det(a: &Matrix, n: usize) -> Result<f64> {
    if a.nrows() != n || a.ncols() != n {
        return Err(GeomError::DimensionMismatch {
            left: n,
            right: a.nrows().max(a.ncols()),
        });
    }
    Ok(a.determinant())
}

/// Point of `P₁(n)`: an SPD matrix renormalized to determinant one.
#[derive(Clone, Debug, PartialEq)]
pub struct UnimodularSpd(SpdMatrix);

impl UnimodularSpd {
    /// Rescales `x` by `det(x)^{-1/n}`.
    pub fn new(x: SpdMatrix) -> Self {
        let n = x.n() as f64;
        let c = (-x.log_det() / n).exp();
        UnimodularSpd(SpdMatrix(x.0.scale(c)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(UnimodularSpd(SpdMatrix::identity(n)?))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn as_spd(&self) -> &SpdMatrix {
        &self.0
    }

    pub fn into_spd(self) -> SpdMatrix {
        self.0
    }
}

/// Matrix logarithm of an SPD matrix.
pub fn spd_log(x: &SpdMatrix) -> SymMatrix {
    x.eig().map(f64::ln)
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_exp(a: &SymMatrix) -> SpdMatrix {
    SpdMatrix(sym_eig(a).map(f64::exp))
}

/// Principal square root of an SPD matrix.
pub fn spd_sqrt(x: &SpdMatrix) -> SpdMatrix {
    SpdMatrix(x.eig().map(f64::sqrt))
}

/// Logarithms of the eigenvalues of `x^{-1/2} y x^{-1/2}`.
///
/// With `x = L Lᵀ` and `y = M Mᵀ` these eigenvalues are the squared singular
/// values of `L⁻¹ M`. Working with singular values keeps them non-negative and
/// halves the dynamic range compared with forming `L⁻¹ y L⁻ᵀ`.
fn relative_log_eigenvalues(x: &SpdMatrix, y: &SpdMatrix) -> Result<Vec<f64>> {
    same_dim(x.n(), y.n())?;
    let l = x.cholesky();
    let m = y.cholesky();
    let b = l
        .solve_lower_triangular(&m)
        .ok_or_else(|| GeomError::SingularInput("Cholesky factor not invertible".into()))?;
    b.singular_values()
        .iter()
        .map(|&s| {
            if s > 0.0 && s.is_finite() {
                Ok(2.0 * s.ln())
            } else {
                Err(GeomError::SingularInput("relative eigenvalue not positive".into()))
            }
        })
        .collect()
}

/// Affine-invariant distance `‖log(x^{-1/2} y x^{-1/2})‖_F`.
pub fn dist_affine_invariant(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64> {
    let logs = relative_log_eigenvalues(x, y)?;
    Ok(logs.iter().map(|l| l * l).sum::<f64>().sqrt())
}

/// Affine-invariant geodesic `x^{1/2} (x^{-1/2} y x^{-1/2})^t x^{1/2}`.
pub fn geodesic_affine_invariant(x: &SpdMatrix, y: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    same_dim(x.n(), y.n())?;
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let eig = x.eig();
    let root = eig.map(f64::sqrt).to_dense();
    let inv_root = eig.map(|l| 1.0 / l.sqrt()).to_dense();
    let w = y.as_sym().congruence(&inv_root)?;
    let wt = sym_eig(&w).map(|l| l.max(f64::MIN_POSITIVE).powf(t));
    Ok(SpdMatrix(wt.congruence(&root)?))
}

/// Splits `x` into `(ln det x / √n, det(x)^{-1/n} x)`.
pub fn split(x: &SpdMatrix) -> (f64, UnimodularSpd) {
    let n = x.n() as f64;
    let s = x.log_det() / n.sqrt();
    (s, UnimodularSpd::new(x.clone()))
}

/// Inverse of [`split`]: `e^{s/√n} p`.
pub fn unsplit(s: f64, p: &UnimodularSpd) -> SpdMatrix {
    let n = p.n() as f64;
    SpdMatrix(p.as_spd().as_sym().scale((s / n.sqrt()).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, FRAC_1_SQRT_2, SQRT_2};

    fn rot45() -> Matrix {
        Matrix::from_row_slice(2, 2, &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2])
    }

    #[test]
    fn packed_layout_matches_row_major_upper_triangle() {
        let m = SymMatrix::from_packed(3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.get(2, 2), 6.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert_eq!(SymMatrix::zeros(0), Err(GeomError::UnsupportedDimension(0)));
        assert_eq!(SymMatrix::zeros(9), Err(GeomError::UnsupportedDimension(9)));
        assert!(matches!(
            SymMatrix::from_packed(2, vec![1.0, 2.0]),
            Err(GeomError::BadPackedLength { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn eig_of_two_by_two() {
        let x = SymMatrix::from_packed(2, vec![2.0, 1.0, 2.0]).unwrap();
        let e = sym_eig(&x);
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        assert!(e.reconstruct().max_abs_diff(&x) < 1e-14);

        let d = sym_eig(&SymMatrix::from_diag(&[4.0, 1.0]).unwrap());
        assert_eq!(d.values, vec![1.0, 4.0]);
        assert_abs_diff_eq!(d.vectors[(1, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.vectors[(0, 1)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn log_examples() {
        let i = SpdMatrix::identity(2).unwrap();
        assert!(spd_log(&i).frobenius_norm() < 1e-15);

        let d = SpdMatrix::from_diag(&[E, E * E]).unwrap();
        let l = spd_log(&d);
        assert!(l.max_abs_diff(&SymMatrix::from_diag(&[1.0, 2.0]).unwrap()) < 1e-14);

        let r = rot45();
        let x = SpdMatrix::from_diag(&[E, 1.0]).unwrap().congruence(&r).unwrap();
        let expected = SymMatrix::from_diag(&[1.0, 0.0]).unwrap().congruence(&r).unwrap();
        assert!(spd_log(&x).max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn singular_input_rejected() {
        assert!(matches!(
            SpdMatrix::from_diag(&[1.0, 0.0]),
            Err(GeomError::SingularInput(_))
        ));
        assert!(matches!(
            SpdMatrix::from_diag(&[1.0, 1e-13]),
            Err(GeomError::SingularInput(_))
        ));
        assert!(SpdMatrix::from_packed(2, vec![1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let i = SpdMatrix::identity(2).unwrap();
        assert_eq!(dist_affine_invariant(&i, &i).unwrap(), 0.0);
        let y = SpdMatrix::from_diag(&[E * E, 1.0 / (E * E)]).unwrap();
        assert_abs_diff_eq!(dist_affine_invariant(&i, &y).unwrap(), 2.0 * SQRT_2, epsilon = 1e-13);

        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let x = SpdMatrix::identity(2).unwrap();
        let y = SpdMatrix::from_diag(&[2.0, 1.0]).unwrap();
        let lhs = dist_affine_invariant(&x.congruence(&a).unwrap(), &y.congruence(&a).unwrap()).unwrap();
        let rhs = dist_affine_invariant(&x, &y).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        assert_abs_diff_eq!(rhs, 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = SpdMatrix::identity(2).unwrap();
        let b = SpdMatrix::identity(3).unwrap();
        assert_eq!(
            dist_affine_invariant(&a, &b),
            Err(GeomError::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn geodesic_examples() {
        let x = SpdMatrix::identity(2).unwrap();
        let y = SpdMatrix::from_diag(&[4.0, 9.0]).unwrap();
        assert_eq!(geodesic_affine_invariant(&x, &y, 0.0).unwrap(), x);
        assert_eq!(geodesic_affine_invariant(&x, &y, 1.0).unwrap(), y);
        let mid = geodesic_affine_invariant(&x, &y, 0.5).unwrap();
        assert!(mid.as_sym().max_abs_diff(&SymMatrix::from_diag(&[2.0, 3.0]).unwrap()) < 1e-13);
    }

    #[test]
    fn split_examples() {
        let (s, p) = split(&SpdMatrix::identity(2).unwrap());
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
        assert!(p.as_spd().as_sym().max_abs_diff(&SymMatrix::identity(2).unwrap()) < 1e-15);

        let x = SpdMatrix::scaled_identity(2, FRAC_1_SQRT_2.exp()).unwrap();
        let (s, _) = split(&x);
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);

        let (s, p) = split(&SpdMatrix::from_diag(&[4.0, 1.0]).unwrap());
        assert_abs_diff_eq!(s, 4f64.ln() / SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(s, 0.980258143468547, epsilon = 1e-12);
        assert!(p.as_spd().as_sym().max_abs_diff(&SymMatrix::from_diag(&[2.0, 0.5]).unwrap()) < 1e-14);
        let back = unsplit(s, &p);
        assert!(back.as_sym().max_abs_diff(&SymMatrix::from_diag(&[4.0, 1.0]).unwrap()) < 1e-13);
    }

    #[test]
    fn unimodular_renormalizes() {
        let p = UnimodularSpd::new(SpdMatrix::from_diag(&[3.0, 5.0, 7.0]).unwrap());
        assert_abs_diff_eq!(p.as_spd().det(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_inverts_log_and_sqrt_squares() {
        let x = SpdMatrix::from_packed(3, vec![4.0, 1.0, 0.5, 3.0, -0.2, 2.0]).unwrap();
        let back = spd_exp(&spd_log(&x));
        assert!(back.as_sym().max_abs_diff(x.as_sym()) < 1e-12);
        let r = spd_sqrt(&x).to_dense();
        let sq = SymMatrix::from_dense(&(&r * &r)).unwrap();
        assert!(sq.max_abs_diff(x.as_sym()) < 1e-12);
    }
}
