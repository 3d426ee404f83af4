//! Dense complex matrices and validated density matrices.
//!
//! Only small dense matrices appear in this crate (3×3 atomic states, 4×4
//! two-photon states, 9×9 and 16×16 superoperators), so everything is backed
//! by `nalgebra::DMatrix<Complex64>`.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on `max |M − M†|` for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `|tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[−EIG_CLAMP, 0)` are treated as zero.
pub const EIG_CLAMP: f64 = 1e-9;
/// Below this eigenvalue `hermitian_sqrt` refuses the input.
pub const SQRT_NEG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    /// Builds a `dim × dim` matrix from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(ComplexMatrix(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        ComplexMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len(), "outer product of unequal kets");
        ComplexMatrix::from_fn(a.len(), |i, j| a[i] * b[j].conj())
    }

    /// Wraps a matrix, rejecting non-square input.
    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(ComplexMatrix(m))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `max |M − M†|` over all entries.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() < tol
    }

    /// `(M + M†)/2`.
    pub fn hermitize(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is
    /// read. Eigenvalues are returned in ascending order, with the matching
    /// eigenvectors as the columns of the second element.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        let eig = self.hermitize().0.symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, ComplexMatrix(vectors))
    }

    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// `U · diag(f(λ)) · U†` for a Hermitian matrix.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let (values, u) = self.eigh();
        let n = self.dim();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(f(values[i]), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        ComplexMatrix(&u.0 * d * u.0.adjoint())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues down to `−1e−6` are clamped to zero; anything more negative
/// is rejected as `NotPsd`. Eigenvalues at rounding level (below `1e−14`
/// of the largest) are treated as exact zeros so that rank is preserved.
pub fn hermitian_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let residual = m.hermitian_residual();
    if residual > 1e-9 * m.norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let (values, _) = m.eigh();
    let min = values.first().copied().unwrap_or(0.0);
    if min < -SQRT_NEG_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let floor = 1e-14 * values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok(m.map_eigenvalues(|l| if l > floor { l.sqrt() } else { 0.0 }))
}

/// A Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `matrix` as a quantum state. The stored copy is exactly
    /// Hermitian (`(M + M†)/2`).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let residual = matrix.hermitian_residual();
        if residual >= HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() >= TRACE_TOL || trace.im.abs() >= TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: trace.re });
        }
        let h = matrix.hermitize();
        let min = h.eigenvalues_hermitian().first().copied().unwrap_or(0.0);
        if min < -EIG_CLAMP {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(DensityMatrix(h))
    }

    /// Pure state `|ψ⟩⟨ψ|` from a ket normalised here.
    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotUnitTrace { trace: 0.0 });
        }
        let k: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        DensityMatrix::new(ComplexMatrix::outer(&k, &k))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Projects a Hermitian matrix onto the nearest state: negative
    /// eigenvalues are clipped and the trace renormalised.
    pub fn project(matrix: &ComplexMatrix) -> Result<Self> {
        let h = matrix.hermitize();
        let clipped = h.map_eigenvalues(|l| l.max(0.0));
        let tr = clipped.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotPositive {
                min_eigenvalue: h.eigenvalues_hermitian()[0],
            });
        }
        DensityMatrix::new(clipped.scale_real(1.0 / tr).hermitize())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0.get(row, col)
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let diff = &self.0 - &other.0;
        Ok(0.5
            * diff
                .eigenvalues_hermitian()
                .iter()
                .map(|l| l.abs())
                .sum::<f64>())
    }

    /// Random mixed state from the Ginibre ensemble, `G G† / tr(G G†)`, with
    /// `G` of size `dim × rank`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Self {
        let g = DMatrix::from_fn(dim, rank, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let w = &g * g.adjoint();
        let tr = w.trace().re;
        let m = ComplexMatrix(w * Complex64::new(1.0 / tr, 0.0)).hermitize();
        DensityMatrix(m)
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        DensityMatrix::new(m)
    }
}

/// Validates a square matrix as a density matrix.
pub fn make_density(matrix: ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ground_state_is_valid() {
        let rho = make_density(ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0])).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = make_density(ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        assert!((rho.purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_trace() {
        let err = make_density(ComplexMatrix::from_real_diagonal(&[0.6, 0.5])).unwrap_err();
        match err {
            Error::NotUnitTrace { trace } => assert!((trace - 1.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian_and_negative() {
        let m =
            ComplexMatrix::from_row_major(2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)])
                .unwrap();
        assert!(matches!(make_density(m), Err(Error::NotHermitian { .. })));
        let m = ComplexMatrix::from_real_diagonal(&[1.2, -0.2]);
        match make_density(m) {
            Err(Error::NotPositive { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.2).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_square() {
        let m = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(
            ComplexMatrix::from_nalgebra(m),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i3 = ComplexMatrix::identity(3);
        assert!(hermitian_sqrt(&i3).unwrap().max_abs_diff(&i3) < 1e-14);
        let s = hermitian_sqrt(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn sqrt_rejects_negative() {
        let err = hermitian_sqrt(&ComplexMatrix::from_real_diagonal(&[1.0, -1e-3])).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
        // tiny negative noise is clamped
        let s = hermitian_sqrt(&ComplexMatrix::from_real_diagonal(&[1.0, -1e-10])).unwrap();
        assert!((s.get(1, 1)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_is_idempotent_on_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 3, 4] {
            for rank in 1..dim {
                // projector onto the span of `rank` eigenvectors of a random state
                let rho = DensityMatrix::random(&mut rng, dim, dim);
                let (_, u) = rho.matrix().eigh();
                let p = ComplexMatrix::from_fn(dim, |i, j| {
                    (0..rank).map(|k| u.get(i, k) * u.get(j, k).conj()).sum()
                });
                assert!((&p * &p).max_abs_diff(&p) < 1e-12);
                let s = hermitian_sqrt(&p).unwrap();
                assert!(s.max_abs_diff(&p) < 1e-9, "dim {dim} rank {rank}");
            }
        }
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = DensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!(a.trace_distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn projection_clips_negative_part() {
        let m = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
        let rho = DensityMatrix::project(&m).unwrap();
        assert!((rho.get(0, 0).re - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(seed in any::<u64>(), dim in 2usize..6, rank in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DensityMatrix::random(&mut rng, dim, rank.min(dim)).into_matrix().scale_real(3.0);
            let s = hermitian_sqrt(&a).unwrap();
            prop_assert!(s.is_hermitian(1e-12));
            prop_assert!((&s * &s).max_abs_diff(&a) < 1e-9);
            prop_assert!(s.eigenvalues_hermitian()[0] > -1e-12);
        }

        #[test]
        fn valid_states_have_purity_at_most_one(seed in any::<u64>(), dim in 1usize..6, rank in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random(&mut rng, dim, rank);
            let accepted = make_density(rho.matrix().clone()).unwrap();
            prop_assert!(accepted.purity() <= 1.0 + 1e-9);
        }
    }
}
