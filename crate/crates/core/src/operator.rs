//! Dense complex linear algebra: Hermitian operators with cached spectra,
//! pure states, density operators and unitary evolution.
//!
//! Every generator used in this crate is Hermitian, so evolution goes through
//! the spectral decomposition `U(t) = Σ_k e^{-iE_k t} |u_k⟩⟨u_k|`: one O(d³)
//! decomposition, then O(d²) per time point.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tolerance;

pub use nalgebra::Complex;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Dense complex matrix (column-major storage, row/column indexing).
pub type ComplexMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type ComplexVector = DVector<C64>;

const MAX_EIGEN_ITERATIONS: usize = 100_000;
/// Dense decompositions beyond 2^12 are refused.
pub const MAX_EIGEN_DIM: usize = 4096;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Smallest gap between consecutive eigenvalues (infinite for d = 1).
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_degenerate(&self) -> bool {
        self.min_gap() < tolerance::DEGENERATE_GAP
    }

    /// True when two distinct level pairs share a gap: |(E_n - E_m) - (E_p - E_q)| below
    /// the collision tolerance for {n,m} != {p,q}, n > m, p > q.
    pub fn has_gap_collision(&self) -> bool {
        let mut gaps = Vec::with_capacity(self.dim() * self.dim() / 2);
        for n in 0..self.dim() {
            for m in 0..n {
                gaps.push(self.values[n] - self.values[m]);
            }
        }
        gaps.sort_by(f64::total_cmp);
        gaps.windows(2)
            .any(|w| w[1] - w[0] < tolerance::GAP_COLLISION)
    }

    /// U diag(f(E)) U†.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &e) in self.values.iter().enumerate() {
            let w = f(e);
            scaled.column_mut(k).scale_mut_c(w);
        }
        matmul(&scaled, &self.vectors.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.function(|e| C64::new(e, 0.0))
    }

    /// Coefficients ⟨u_k|ψ⟩ of a state in the eigenbasis.
    pub fn coefficients(&self, psi: &PureState) -> Result<ComplexVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(self.vectors.ad_mul(psi.amplitudes()))
    }

    /// ⟨u_n|A|u_n⟩ for every eigenvector.
    pub fn diagonal_elements(&self, a: &ComplexMatrix) -> Result<Vec<f64>> {
        check_dim(self.dim(), a.nrows())?;
        let av = matmul(a, &self.vectors);
        Ok((0..self.dim())
            .map(|n| {
                self.vectors
                    .column(n)
                    .iter()
                    .zip(av.column(n).iter())
                    .map(|(u, x)| (u.conj() * x).re)
                    .sum()
            })
            .collect())
    }
}

trait ScaleComplex {
    fn scale_mut_c(&mut self, w: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_c(&mut self, w: C64) {
        for x in self.iter_mut() {
            *x *= w;
        }
    }
}

/// A dense Hermitian matrix with a lazily computed, cached spectrum.
///
/// Values are immutable after construction; the cache is filled at most once
/// and is safe to read from several threads.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    spectrum: OnceLock<Spectrum>,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`tolerance::HERMITIAN`] and stores the
    /// exactly symmetrized matrix `(M + M†)/2`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = hermitian_deviation(&matrix);
        if dev > tolerance::HERMITIAN {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        Ok(Self::from_hermitian_unchecked(symmetrize(matrix)))
    }

    /// Builds from a matrix that is Hermitian by construction.
    pub(crate) fn from_hermitian_unchecked(matrix: ComplexMatrix) -> Self {
        Self {
            matrix,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let d = values.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (k, &v) in values.iter().enumerate() {
            m[(k, k)] = C64::new(v, 0.0);
        }
        Ok(Self::from_hermitian_unchecked(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_hermitian_unchecked(ComplexMatrix::identity(dim, dim))
    }

    /// Rank-one projector |ψ⟩⟨ψ|.
    pub fn projector(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self::from_hermitian_unchecked(symmetrize(v * v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|j| (0..d).all(|i| i == j || self.matrix[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn cached_spectrum(&self) -> Option<&Spectrum> {
        self.spectrum.get()
    }

    /// Spectral decomposition, computed on first use and cached.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = decompose(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    /// Ascending eigenvalues. Diagonal operators are read off directly
    /// without a decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s.values.clone());
        }
        if self.is_diagonal() {
            let mut v: Vec<f64> = self.matrix.diagonal().iter().map(|z| z.re).collect();
            v.sort_by(f64::total_cmp);
            return Ok(v);
        }
        Ok(self.spectrum()?.values.clone())
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// A + c·I.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.matrix.clone();
        for k in 0..self.dim() {
            m[(k, k)] += C64::new(c, 0.0);
        }
        Self::from_hermitian_unchecked(m)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_hermitian_unchecked(self.matrix.map(|z| z * c))
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::from_hermitian_unchecked(&self.matrix + &other.matrix))
    }

    /// A + c·B.
    pub fn add_scaled(&self, other: &HermitianOperator, c: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::from_hermitian_unchecked(
            &self.matrix + other.matrix.map(|z| z * c),
        ))
    }

    /// A^k for k >= 1. Powers of a Hermitian operator are Hermitian.
    pub fn power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Ok(Self::identity(self.dim()));
        }
        let mut acc = self.matrix.clone();
        for _ in 1..k {
            acc = matmul(&acc, &self.matrix);
        }
        Ok(Self::from_hermitian_unchecked(symmetrize(acc)))
    }

    /// U A U† for a unitary U.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        check_dim(self.dim(), u.nrows())?;
        let m = matmul(&matmul(u, &self.matrix), &u.adjoint());
        Ok(Self::from_hermitian_unchecked(symmetrize(m)))
    }
}

/// Returns the operator with its spectrum cached.
pub fn eigendecompose(op: &HermitianOperator) -> Result<HermitianOperator> {
    let out = op.clone();
    out.spectrum()?;
    Ok(out)
}

fn decompose(matrix: &ComplexMatrix) -> Result<Spectrum> {
    let d = matrix.nrows();
    if d > MAX_EIGEN_DIM {
        return Err(Error::SizeGuard(format!(
            "eigendecomposition limited to d <= {MAX_EIGEN_DIM}, got {d}"
        )));
    }
    let (values, vectors) = if matrix.iter().all(|z| z.im == 0.0) {
        let real = matrix.map(|z| z.re);
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, MAX_EIGEN_ITERATIONS).ok_or(
            Error::NoConvergence {
                max_iterations: MAX_EIGEN_ITERATIONS,
            },
        )?;
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, MAX_EIGEN_ITERATIONS)
            .ok_or(Error::NoConvergence {
                max_iterations: MAX_EIGEN_ITERATIONS,
            })?;
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    };

    // stable ascending order, then a canonical phase per eigenvector
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut sorted = ComplexMatrix::zeros(d, d);
    let mut sorted_values = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        sorted_values.push(values[src]);
        let mut col = vectors.column(src).into_owned();
        if let Some(pivot) = col.iter().find(|z| z.norm() > tolerance::PHASE_PIVOT) {
            let phase = pivot.conj() / pivot.norm();
            col.scale_mut_c(phase);
        }
        sorted.set_column(dst, &col);
    }
    Ok(Spectrum {
        values: sorted_values,
        vectors: sorted,
    })
}

/// A unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
}

impl PureState {
    /// Accepts amplitudes whose squared norm is 1 within [`tolerance::STATE_NORM`].
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state dimension must be positive"));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > tolerance::STATE_NORM {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(ComplexVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub(crate) fn from_unit_unchecked(amplitudes: ComplexVector) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |⟨self|other⟩|².
    pub fn overlap_sq(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Phase-insensitive distance sqrt(1 - |⟨a|b⟩|²).
    pub fn distance(&self, other: &PureState) -> Result<f64> {
        Ok((1.0 - self.overlap_sq(other)?).max(0.0).sqrt())
    }

    /// Probabilities |ψ_k|² in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// A positive, unit-trace Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)
            .map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let tr = op.trace();
        if (tr - 1.0).abs() > tolerance::DENSITY {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = op.eigenvalues()?[0];
        if min < -tolerance::DENSITY {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self {
            matrix: op.into_matrix(),
        })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: HermitianOperator::projector(psi).into_matrix(),
        }
    }

    /// Equal-weight mixture of pure states.
    pub fn uniform_mixture(states: &[PureState]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::invalid("empty mixture"))?;
        let d = first.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for psi in states {
            check_dim(d, psi.dim())?;
            let v = psi.amplitudes();
            acc += v * v.adjoint();
        }
        acc /= C64::new(states.len() as f64, 0.0);
        Ok(Self {
            matrix: symmetrize(acc),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Tr(ρ A).
    pub fn expectation(&self, a: &HermitianOperator) -> Result<f64> {
        check_dim(self.dim(), a.dim())?;
        Ok(frobenius_inner(&self.matrix, a.matrix())?.re)
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// e^{-iHt} ψ₀ (ħ = 1).
pub fn evolve(h: &HermitianOperator, psi0: &PureState, t: f64) -> Result<PureState> {
    if !t.is_finite() {
        return Err(Error::InvalidTime(t));
    }
    check_dim(h.dim(), psi0.dim())?;
    Propagator::new(h.spectrum()?, psi0)?.state_at(t)
}

/// Evolution of one initial state under a fixed spectrum, reusable across times.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    spectrum: &'a Spectrum,
    coefficients: ComplexVector,
}

impl<'a> Propagator<'a> {
    pub fn new(spectrum: &'a Spectrum, psi0: &PureState) -> Result<Self> {
        Ok(Self {
            coefficients: spectrum.coefficients(psi0)?,
            spectrum,
        })
    }

    /// Eigenbasis coefficients e^{-iE_k t} ⟨u_k|ψ₀⟩.
    pub fn coefficients_at(&self, t: f64) -> ComplexVector {
        ComplexVector::from_iterator(
            self.coefficients.len(),
            self.spectrum
                .values
                .iter()
                .zip(self.coefficients.iter())
                .map(|(&e, &c)| c * C64::from_polar(1.0, -e * t)),
        )
    }

    pub fn state_at(&self, t: f64) -> Result<PureState> {
        if !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        let v = &self.spectrum.vectors * self.coefficients_at(t);
        Ok(PureState::from_unit_unchecked(v))
    }
}

/// ⟨ψ|A|ψ⟩, rejecting imaginary parts above [`tolerance::EXPECTATION_IMAGINARY`].
pub fn expectation(a: &HermitianOperator, psi: &PureState) -> Result<f64> {
    check_dim(a.dim(), psi.dim())?;
    let v = psi.amplitudes();
    let z = v.dotc(&(a.matrix() * v));
    if z.im.abs() > tolerance::EXPECTATION_IMAGINARY {
        return Err(Error::ComplexExpectation { imaginary: z.im });
    }
    Ok(z.re)
}

/// A·v.
pub fn matrix_apply(a: &ComplexMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    check_dim(a.ncols(), v.len())?;
    Ok(a * v)
}

pub fn trace(a: &ComplexMatrix) -> Result<C64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.diagonal().iter().sum())
}

/// Tr(A†B).
pub fn frobenius_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows() * a.ncols(),
            found: b.nrows() * b.ncols(),
        });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// [A, B] = AB - BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dim(a.nrows(), b.nrows())?;
    Ok(matmul(a, b) - matmul(b, a))
}

/// Complex product computed with real matrix kernels; imaginary parts that are
/// identically zero are skipped.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let (m, n) = (a.nrows(), b.ncols());
    let mut re = &ar * &br;
    let mut im = DMatrix::<f64>::zeros(m, n);
    if let (Some(ai), Some(bi)) = (&ai, &bi) {
        re.gemm(-1.0, ai, bi, 1.0);
    }
    if let Some(bi) = &bi {
        im.gemm(1.0, &ar, bi, 1.0);
    }
    if let Some(ai) = &ai {
        im.gemm(1.0, ai, &br, 1.0);
    }
    DMatrix::from_fn(m, n, |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

fn split(a: &ComplexMatrix) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = a.map(|z| z.re);
    let im = if a.iter().all(|z| z.im == 0.0) {
        None
    } else {
        Some(a.map(|z| z.im))
    };
    (re, im)
}

/// max |A_ij - conj(A_ji)|.
pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    let d = a.nrows();
    let mut dev = 0.0f64;
    for j in 0..d {
        for i in 0..=j {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// max |U†U - I|.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    let g = matmul(&u.adjoint(), u);
    let d = g.nrows();
    let mut dev = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn symmetrize(mut m: ComplexMatrix) -> ComplexMatrix {
    let d = m.nrows();
    for j in 0..d {
        m[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian matrix (LCG; independent of the ensembles module).
    fn lcg_hermitian(d: usize, mut state: u64) -> HermitianOperator {
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = ComplexMatrix::zeros(d, d);
        for j in 0..d {
            m[(j, j)] = c(next(), 0.0);
            for i in 0..j {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let op = eigendecompose(&HermitianOperator::identity(4)).unwrap();
        let s = op.cached_spectrum().unwrap();
        assert_eq!(s.values, vec![1.0; 4]);
        assert!(unitarity_deviation(&s.vectors) < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_is_a_permutation() {
        let op = HermitianOperator::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = op.spectrum().unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
        // eigenvalue 1 lives on basis vector 1, etc.
        assert!((s.vectors[(1, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((s.vectors[(2, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((s.vectors[(0, 2)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let op = lcg_hermitian(8, 17);
        let s = op.spectrum().unwrap();
        assert!(max_abs_diff(&s.reconstruct(), op.matrix()) < tolerance::RECONSTRUCTION);
        assert!(unitarity_deviation(&s.vectors) < tolerance::UNITARY);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn decomposition_is_deterministic_and_phase_fixed() {
        let op = lcg_hermitian(12, 5);
        let a = decompose(op.matrix()).unwrap();
        let b = decompose(op.matrix()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
        for k in 0..12 {
            let pivot = a
                .vectors
                .column(k)
                .iter()
                .copied()
                .find(|z| z.norm() > tolerance::PHASE_PIVOT)
                .unwrap();
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(3, 3);
        m[(0, 1)] = c(0.5, 0.0);
        match HermitianOperator::new(m) {
            Err(Error::NotHermitian { max_deviation }) => assert!((max_deviation - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let h = lcg_hermitian(6, 3);
        let psi = PureState::from_real(&[1.0, 2.0, 0.0, -1.0, 0.5, 0.0]).unwrap();
        let out = evolve(&h, &psi, 0.0).unwrap();
        assert!(out.distance(&psi).unwrap() < 1e-7);
        assert!((out.inner(&psi).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_level_half_period() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let psi = PureState::from_real(&[1.0, 1.0]).unwrap();
        let out = evolve(&h, &psi, PI).unwrap();
        let target = PureState::from_real(&[1.0, -1.0]).unwrap();
        assert!(out.overlap_sq(&target).unwrap() > 1.0 - 1e-14);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let h = HermitianOperator::identity(2);
        let psi = PureState::basis(3, 0).unwrap();
        assert!(matches!(
            evolve(&h, &psi, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let psi = PureState::basis(2, 0).unwrap();
        assert!(matches!(evolve(&h, &psi, f64::NAN), Err(Error::InvalidTime(_))));
    }

    #[test]
    fn expectation_basics() {
        let psi = PureState::basis(2, 1).unwrap();
        let a = HermitianOperator::from_diagonal(&[0.0, 2.0]).unwrap();
        assert_eq!(expectation(&a, &psi).unwrap(), 2.0);
        assert_eq!(
            expectation(&HermitianOperator::identity(2), &psi).unwrap(),
            1.0
        );
    }

    #[test]
    fn expectation_rejects_corrupted_operator() {
        // bypass validation to emulate a corrupted anti-Hermitian part
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(-1.0, 0.0);
        let a = HermitianOperator::from_hermitian_unchecked(m);
        let psi = PureState::new(ComplexVector::from_vec(vec![
            c(1.0 / 2f64.sqrt(), 0.0),
            c(0.0, 1.0 / 2f64.sqrt()),
        ]))
        .unwrap();
        assert!(matches!(
            expectation(&a, &psi),
            Err(Error::ComplexExpectation { .. })
        ));
    }

    #[test]
    fn trace_identities() {
        assert_eq!(trace(&ComplexMatrix::identity(5, 5)).unwrap(), c(5.0, 0.0));
        let a = lcg_hermitian(7, 11);
        let b = lcg_hermitian(7, 12);
        let ab = trace(&matmul(a.matrix(), b.matrix())).unwrap();
        let ba = trace(&matmul(b.matrix(), a.matrix())).unwrap();
        assert!((ab - ba).norm() < 1e-12);
        assert!(frobenius_inner(a.matrix(), a.matrix()).unwrap().re >= 0.0);
        assert!(matches!(
            frobenius_inner(a.matrix(), &ComplexMatrix::identity(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matmul_matches_naive() {
        let a = lcg_hermitian(5, 1).into_matrix();
        let b = lcg_hermitian(5, 2).into_matrix();
        assert!(max_abs_diff(&matmul(&a, &b), &(&a * &b)) < 1e-13);
    }

    #[test]
    fn density_validation() {
        let psi = PureState::from_real(&[1.0, 1.0]).unwrap();
        let rho = DensityOperator::from_pure(&psi);
        assert!(DensityOperator::new(rho.matrix().clone()).is_ok());
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        let bad = ComplexMatrix::identity(2, 2);
        assert!(matches!(
            DensityOperator::new(bad),
            Err(Error::InvalidDensity(_))
        ));
        let neg = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityOperator::new(neg).is_err());
    }
}
