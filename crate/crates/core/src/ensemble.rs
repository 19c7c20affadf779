//! Seeded random sources: Haar states and unitaries, spin-coherent and Dicke
//! states, GOE and local-field perturbations, and the characteristic function
//! f(τ) = |g(τ)|² of the diagonal perturbation elements.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, ComplexVector, HermitianOperator, PureState, Spectrum, C64};
use crate::spin::{self, Axis, PauliFactor, Representation, SpinSystem};
use crate::stats::par_map_indexed;
use crate::tolerance;

/// Counter-based seed: the generator for a stream is derived by hashing the
/// master seed together with the stream path, so streams can be created in
/// any order and on any thread.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master: u64,
    pub path: Vec<u64>,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            path: Vec::new(),
        }
    }

    /// The sub-stream `index` of this stream.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            master: self.master,
            path,
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut hasher = Sha256::new();
        hasher.update(b"purity-seed/1");
        hasher.update(self.master.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for p in &self.path {
            hasher.update(p.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha20Rng::from_seed(seed)
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with E|z|² = 1.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(s * normal(rng), s * normal(rng))
}

fn check_dim_at_least_two(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// Haar-distributed unitary: Ginibre matrix, QR, then the phases of R's
/// diagonal moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<ComplexMatrix> {
    check_dim_at_least_two(d)?;
    let g = ComplexMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for x in q.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    Ok(q)
}

/// Haar-random pure state: a normalized complex Gaussian vector, which has the
/// same distribution as the first column of a Haar unitary.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<PureState> {
    check_dim_at_least_two(d)?;
    PureState::normalized(ComplexVector::from_fn(d, |_, _| complex_normal(rng)))
}

/// Haar-random unit vector orthogonal to `psi`.
pub fn orthogonal_companion<R: Rng + ?Sized>(rng: &mut R, psi: &PureState) -> Result<PureState> {
    let d = psi.dim();
    check_dim_at_least_two(d)?;
    let p = psi.amplitudes();
    loop {
        let mut v = ComplexVector::from_fn(d, |_, _| complex_normal(rng));
        // two Gram-Schmidt passes keep the residual overlap at rounding level
        for _ in 0..2 {
            let overlap = p.dotc(&v);
            v -= p * overlap;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            v /= C64::new(norm, 0.0);
            let overlap = p.dotc(&v).norm();
            if overlap > tolerance::ORTHOGONALITY {
                return Err(Error::NotOrthogonal { overlap });
            }
            return PureState::new(v);
        }
    }
}

fn require_symmetric(system: &SpinSystem, what: &str) -> Result<()> {
    if system.representation() != Representation::Symmetric {
        return Err(Error::invalid(format!("{what} requires the symmetric subspace")));
    }
    Ok(())
}

/// Uniformly random rotation of |↑_x⟩^{⊗N}.
///
/// A Haar-random SU(2) element u = w - i(x σ_x + y σ_y + z σ_z) comes from a
/// uniform unit quaternion; exp(-iθ n̂·S) acts as u^{⊗N}, so the rotated state
/// is the product state with single-spin amplitudes u|↑_x⟩.
pub fn spin_coherent_state<R: Rng + ?Sized>(rng: &mut R, system: &SpinSystem) -> Result<PureState> {
    require_symmetric(system, "spin-coherent sampling")?;
    let (up, down) = random_su2_on_up_x(rng);
    spin::product_state(system, up, down)
}

fn random_su2_on_up_x<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    let q: [f64; 4] = loop {
        let q = [normal(rng), normal(rng), normal(rng), normal(rng)];
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            break q.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let up = C64::new(w - y, -z - x) * s;
    let down = C64::new(w + y, z - x) * s;
    (up, down)
}

/// Uniformly chosen S_z eigenstate.
pub fn dicke_state<R: Rng + ?Sized>(rng: &mut R, system: &SpinSystem) -> Result<PureState> {
    require_symmetric(system, "Dicke sampling")?;
    let k = rng.random_range(0..system.dim());
    PureState::basis(system.dim(), k)
}

/// Initial-state ensembles. `Polarized` is the deterministic product state
/// along ±axis and ignores the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateEnsemble {
    Haar,
    SpinCoherent,
    Dicke,
    Polarized { axis: Axis, positive: bool },
}

impl StateEnsemble {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, system: &SpinSystem) -> Result<PureState> {
        match self {
            StateEnsemble::Haar => haar_state(rng, system.dim()),
            StateEnsemble::SpinCoherent => spin_coherent_state(rng, system),
            StateEnsemble::Dicke => dicke_state(rng, system),
            StateEnsemble::Polarized { axis, positive } => {
                spin::polarized_state(system, *axis, *positive)
            }
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, StateEnsemble::Polarized { .. })
    }
}

impl fmt::Display for StateEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateEnsemble::Haar => f.write_str("haar"),
            StateEnsemble::SpinCoherent => f.write_str("spin-coherent"),
            StateEnsemble::Dicke => f.write_str("dicke"),
            StateEnsemble::Polarized { axis, positive } => {
                let axis = match axis {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                    Axis::Z => 'z',
                };
                write!(f, "polarized:{}{axis}", if *positive { '+' } else { '-' })
            }
        }
    }
}

impl FromStr for StateEnsemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "haar" => Ok(StateEnsemble::Haar),
            "spin-coherent" => Ok(StateEnsemble::SpinCoherent),
            "dicke" => Ok(StateEnsemble::Dicke),
            other => {
                let bad = || Error::invalid(format!("unknown state ensemble '{other}'"));
                let rest = other.strip_prefix("polarized:").ok_or_else(bad)?;
                let mut chars = rest.chars();
                let positive = match chars.next() {
                    Some('+') => true,
                    Some('-') => false,
                    _ => return Err(bad()),
                };
                let axis = match chars.as_str() {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    _ => return Err(bad()),
                };
                Ok(StateEnsemble::Polarized { axis, positive })
            }
        }
    }
}

/// Distribution of the i.i.d. diagonal entries of a custom diagonal perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagonalDistribution {
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    /// Real symmetric, V_kk ~ N(0,1), V_{k<l} ~ N(0,½).
    Goe,
    /// V = ½ Σ_j v_j σ_x^{(j)}, v_j ~ N(0,1) (full space).
    LocalFields,
    /// V = diag(x_1..x_d) in the computational basis, x_i i.i.d.
    CustomDiagonal(DiagonalDistribution),
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationKind::Goe => f.write_str("goe"),
            PerturbationKind::LocalFields => f.write_str("local-fields"),
            PerturbationKind::CustomDiagonal(DiagonalDistribution::Gaussian { sigma }) => {
                write!(f, "diagonal-gaussian:{sigma}")
            }
            PerturbationKind::CustomDiagonal(DiagonalDistribution::Uniform { half_width }) => {
                write!(f, "diagonal-uniform:{half_width}")
            }
        }
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unknown perturbation kind '{s}'"));
        let width = |v: &str| -> Result<f64> {
            let x: f64 = v.parse().map_err(|_| bad())?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid("diagonal distribution width must be positive"));
            }
            Ok(x)
        };
        match s {
            "goe" => Ok(PerturbationKind::Goe),
            "local-fields" => Ok(PerturbationKind::LocalFields),
            _ => {
                if let Some(v) = s.strip_prefix("diagonal-gaussian:") {
                    Ok(PerturbationKind::CustomDiagonal(DiagonalDistribution::Gaussian {
                        sigma: width(v)?,
                    }))
                } else if let Some(v) = s.strip_prefix("diagonal-uniform:") {
                    Ok(PerturbationKind::CustomDiagonal(DiagonalDistribution::Uniform {
                        half_width: width(v)?,
                    }))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// A distribution over Hermitian V together with the strength λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub kind: PerturbationKind,
    pub lambda: f64,
}

impl PerturbationModel {
    pub fn new(kind: PerturbationKind, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("λ must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { kind, lambda })
    }

    /// Draws V (without the factor λ).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, system: &SpinSystem) -> Result<HermitianOperator> {
        match self.kind {
            PerturbationKind::Goe => Ok(sample_goe(rng, system.dim())),
            PerturbationKind::LocalFields => sample_local_fields(rng, system),
            PerturbationKind::CustomDiagonal(dist) => {
                let values: Vec<f64> = (0..system.dim())
                    .map(|_| match dist {
                        DiagonalDistribution::Gaussian { sigma } => sigma * normal(rng),
                        DiagonalDistribution::Uniform { half_width } => {
                            rng.random_range(-half_width..half_width)
                        }
                    })
                    .collect();
                HermitianOperator::from_diagonal(&values)
            }
        }
    }
}

pub fn sample_goe<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianOperator {
    sample_goe_with_variances(rng, d, 1.0, 0.5)
}

/// Real symmetric Gaussian matrix with the given diagonal and off-diagonal
/// variances; the upper triangle is drawn row by row and mirrored.
pub fn sample_goe_with_variances<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    diagonal_variance: f64,
    offdiagonal_variance: f64,
) -> HermitianOperator {
    let (sd, so) = (diagonal_variance.sqrt(), offdiagonal_variance.sqrt());
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = sd * normal(rng);
        for j in i + 1..d {
            let x = so * normal(rng);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    HermitianOperator::from_hermitian_unchecked(m.map(|x| C64::new(x, 0.0)))
}

fn require_full(system: &SpinSystem) -> Result<()> {
    if system.representation() != Representation::Full {
        return Err(Error::invalid("local-field perturbations require the full space"));
    }
    Ok(())
}

pub fn sample_local_fields<R: Rng + ?Sized>(
    rng: &mut R,
    system: &SpinSystem,
) -> Result<HermitianOperator> {
    require_full(system)?;
    let fields: Vec<f64> = (0..system.particles()).map(|_| normal(rng)).collect();
    local_field_operator(system, &fields)
}

/// ½ Σ_j v_j σ_x^{(j)}.
pub fn local_field_operator(system: &SpinSystem, fields: &[f64]) -> Result<HermitianOperator> {
    require_full(system)?;
    if fields.len() != system.particles() {
        return Err(Error::DimensionMismatch {
            expected: system.particles(),
            found: fields.len(),
        });
    }
    let n = system.particles();
    let d = system.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for b in 0..d {
        for (j, &v) in fields.iter().enumerate() {
            let flipped = b ^ (1 << (n - 1 - j));
            m[(flipped, b)] += C64::new(0.5 * v, 0.0);
        }
    }
    Ok(HermitianOperator::from_hermitian_unchecked(m))
}

/// Analytic f(τ) = |g(τ)|² where available: GOE e^{-τ²}, Gaussian diagonal
/// e^{-σ²τ²}, uniform diagonal sinc²(aτ). Local fields have no closed form
/// (their diagonal elements depend on the eigenbasis); use [`local_field_f`].
pub fn characteristic_f(kind: &PerturbationKind, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("τ must be finite and >= 0, got {tau}")));
    }
    match kind {
        PerturbationKind::Goe => Ok((-tau * tau).exp()),
        PerturbationKind::CustomDiagonal(DiagonalDistribution::Gaussian { sigma }) => {
            Ok((-(sigma * tau).powi(2)).exp())
        }
        PerturbationKind::CustomDiagonal(DiagonalDistribution::Uniform { half_width }) => {
            let x = half_width * tau;
            Ok(if x == 0.0 { 1.0 } else { (x.sin() / x).powi(2) })
        }
        PerturbationKind::LocalFields => Err(Error::invalid(
            "local-field f(τ) depends on the Hamiltonian eigenbasis; estimate it empirically",
        )),
    }
}

/// Monte-Carlo estimate of f on a fixed τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalF {
    pub taus: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl EmpiricalF {
    /// Estimates clamped to [0, 1].
    pub fn clamped(&self) -> Vec<f64> {
        self.mean.iter().map(|f| f.clamp(0.0, 1.0)).collect()
    }
}

const F_CHUNK: usize = 1000;

/// Pair-averaged f(τ) from sampled diagonal vectors x: for each draw,
/// (|Σ_l e^{-i x_l τ}|² - d) / (d(d-1)) is an unbiased estimate of the mean
/// over l ≠ m of E[e^{-i(x_l - x_m)τ}]. Draws are generated in fixed chunks,
/// each with its own seed stream.
pub fn empirical_f<F>(seed: &SeedSpec, taus: &[f64], samples: usize, draw: F) -> Result<EmpiricalF>
where
    F: Fn(&mut ChaCha20Rng) -> Result<Vec<f64>> + Sync + Send,
{
    if samples < 2 {
        return Err(Error::invalid("empirical f needs at least 2 samples"));
    }
    let chunks = samples.div_ceil(F_CHUNK);
    let partial = par_map_indexed(chunks, |c| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = seed.child(c as u64).rng();
        let count = F_CHUNK.min(samples - c * F_CHUNK);
        let mut sum = vec![0.0; taus.len()];
        let mut sum_sq = vec![0.0; taus.len()];
        for _ in 0..count {
            let x = draw(&mut rng)?;
            let d = x.len() as f64;
            for (k, &tau) in taus.iter().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for &xl in &x {
                    let (s, c) = (xl * tau).sin_cos();
                    re += c;
                    im -= s;
                }
                let v = (re * re + im * im - d) / (d * (d - 1.0));
                sum[k] += v;
                sum_sq[k] += v * v;
            }
        }
        Ok((sum, sum_sq))
    });
    let mut sum = vec![0.0; taus.len()];
    let mut sum_sq = vec![0.0; taus.len()];
    for p in partial {
        let (s, s2) = p?;
        for k in 0..taus.len() {
            sum[k] += s[k];
            sum_sq[k] += s2[k];
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(EmpiricalF {
        taus: taus.to_vec(),
        mean,
        stderr,
        samples,
    })
}

/// c_nj = ½⟨u_n|σ_x^{(j)}|u_n⟩, so that the diagonal of a local-field draw in
/// the eigenbasis is V_nn = Σ_j v_j c_nj.
pub fn local_field_couplings(system: &SpinSystem, spectrum: &Spectrum) -> Result<DMatrix<f64>> {
    require_full(system)?;
    let n = system.particles();
    let mut c = DMatrix::<f64>::zeros(spectrum.dim(), n);
    for j in 1..=n {
        let sx = spin::pauli_string(n, &[PauliFactor { site: j, axis: Axis::X }])?;
        let diag = spectrum.diagonal_elements(sx.matrix())?;
        for (k, v) in diag.into_iter().enumerate() {
            c[(k, j - 1)] = 0.5 * v;
        }
    }
    Ok(c)
}

/// Empirical f(τ) for local-field perturbations in the eigenbasis of H.
pub fn local_field_f(
    system: &SpinSystem,
    spectrum: &Spectrum,
    taus: &[f64],
    samples: usize,
    seed: &SeedSpec,
) -> Result<EmpiricalF> {
    let c = local_field_couplings(system, spectrum)?;
    let n = system.particles();
    empirical_f(seed, taus, samples, |rng| {
        let v: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        Ok((0..c.nrows())
            .map(|k| (0..n).map(|j| c[(k, j)] * v[j]).sum())
            .collect())
    })
}

/// Empirical f(τ) for real Gaussian symmetric draws with the given variances,
/// with diagonal elements taken in the basis formed by the columns of `basis`.
pub fn goe_f_in_basis(
    basis: &ComplexMatrix,
    taus: &[f64],
    samples: usize,
    seed: &SeedSpec,
    diagonal_variance: f64,
    offdiagonal_variance: f64,
) -> Result<EmpiricalF> {
    let d = basis.nrows();
    let spectrum = Spectrum {
        values: vec![0.0; d],
        vectors: basis.clone(),
    };
    empirical_f(seed, taus, samples, |rng| {
        let v = sample_goe_with_variances(rng, d, diagonal_variance, offdiagonal_variance);
        spectrum.diagonal_elements(v.matrix())
    })
}
