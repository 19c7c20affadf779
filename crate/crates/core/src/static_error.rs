//! Static error model: the ideal state ψ is replaced by
//! ψ_sim = 𝒩(γ)(ψ + γψ⊥), 𝒩(γ)² = 1/(1+γ²), or by a mixed state, and the
//! error δ(A) = ⟨ψ|A|ψ⟩ - ⟨A⟩_sim is averaged over Haar-random states.

use crate::ensemble::{haar_unitary, SeedSpec};
use crate::error::{Error, Result};
use crate::metrics::{build_report, ObservableReport};
use crate::operator::{
    expectation, ComplexMatrix, ComplexVector, DensityOperator, HermitianOperator, PureState, C64,
};
use crate::stats::{par_map_indexed, Estimate};
use crate::tolerance;

/// Minimum sample count for the Haar Monte-Carlo estimators.
pub const MIN_SAMPLES: usize = 100;

/// ψ, an orthogonal companion ψ⊥ and the normalized superposition ψ_sim.
#[derive(Debug, Clone)]
pub struct PerturbedStatePair {
    ideal: PureState,
    companion: PureState,
    gamma: f64,
    simulated: PureState,
}

impl PerturbedStatePair {
    pub fn new(ideal: PureState, companion: PureState, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("γ must be finite and >= 0, got {gamma}")));
        }
        let overlap = ideal.inner(&companion)?.norm();
        if overlap > tolerance::ORTHOGONALITY {
            return Err(Error::NotOrthogonal { overlap });
        }
        let n = normalizer(gamma);
        let v: ComplexVector = (ideal.amplitudes() + companion.amplitudes() * C64::from(gamma)) * C64::from(n);
        let simulated = PureState::normalized(v)?;
        Ok(Self {
            ideal,
            companion,
            gamma,
            simulated,
        })
    }

    pub fn ideal(&self) -> &PureState {
        &self.ideal
    }

    pub fn companion(&self) -> &PureState {
        &self.companion
    }

    pub fn simulated(&self) -> &PureState {
        &self.simulated
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn normalizer(&self) -> f64 {
        normalizer(self.gamma)
    }
}

/// 𝒩(γ) = (1+γ²)^{-1/2}.
pub fn normalizer(gamma: f64) -> f64 {
    1.0 / (1.0 + gamma * gamma).sqrt()
}

/// δ(A) = ⟨ψ|A|ψ⟩ - ⟨ψ_sim|A|ψ_sim⟩.
pub fn delta(a: &HermitianOperator, pair: &PerturbedStatePair) -> Result<f64> {
    Ok(expectation(a, &pair.ideal)? - expectation(a, &pair.simulated)?)
}

/// The same error written out in the pair's components:
/// 𝒩²[γ²(⟨A⟩ - ⟨A⟩⊥) - 2γ Re⟨ψ⊥|A|ψ⟩].
pub fn delta_expanded(a: &HermitianOperator, pair: &PerturbedStatePair) -> Result<f64> {
    let g = pair.gamma;
    let n2 = 1.0 / (1.0 + g * g);
    let a_psi = expectation(a, &pair.ideal)?;
    let a_perp = expectation(a, &pair.companion)?;
    let cross = pair
        .companion
        .amplitudes()
        .dotc(&(a.matrix() * pair.ideal.amplitudes()))
        .re;
    Ok(n2 * (g * g * (a_psi - a_perp) - 2.0 * g * cross))
}

/// Haar average of δ(A)²: 2γ²𝒩²/(d²-1) · (Tr A² - (Tr A)²/d).
pub fn analytic_delta_sq(a: &HermitianOperator, gamma: f64) -> f64 {
    let d = a.dim() as f64;
    let (tr, tr2) = traces(a);
    2.0 * gamma * gamma / (1.0 + gamma * gamma) / (d * d - 1.0) * (tr2 - tr * tr / d)
}

/// Relative error sqrt(2d²/(d²-1) · γ²/(1+γ²) · (η - 1/d)).
pub fn relative_delta(report: &ObservableReport, gamma: f64) -> f64 {
    let d = report.dim() as f64;
    (2.0 * d * d / (d * d - 1.0) * gamma * gamma / (1.0 + gamma * gamma) * excess_purity(report))
        .sqrt()
}

fn excess_purity(report: &ObservableReport) -> f64 {
    (report.purity - 1.0 / report.dim() as f64).max(0.0)
}

/// (Tr A, Tr A²).
fn traces(a: &HermitianOperator) -> (f64, f64) {
    let m = a.matrix();
    (a.trace(), m.iter().map(|z| z.norm_sqr()).sum())
}

fn check_samples(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {n}")));
    }
    Ok(())
}

/// Runs `f` on `n` Haar-random orthonormal pairs (ψ, ψ⊥) = (U|0⟩, U|1⟩),
/// sample i drawing U from stream `seed/i`. Results are in sample order.
pub fn haar_pair_samples<F>(seed: &SeedSpec, d: usize, n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&PureState, &PureState) -> Result<f64> + Sync + Send,
{
    par_map_indexed(n, |i| {
        let u = haar_unitary(&mut seed.child(i as u64).rng(), d)?;
        let psi = PureState::from_unit_unchecked(u.column(0).into_owned());
        let perp = PureState::from_unit_unchecked(u.column(1).into_owned());
        f(&psi, &perp)
    })
    .into_iter()
    .collect()
}

/// Monte-Carlo δ(A) and δ(A)² over Haar pairs next to the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticEstimate {
    pub delta: Estimate,
    pub delta_sq: Estimate,
    pub analytic_delta_sq: f64,
}

pub fn haar_average_delta_sq(
    a: &HermitianOperator,
    gamma: f64,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<StaticEstimate> {
    check_samples(n_samples, MIN_SAMPLES)?;
    let deltas = haar_pair_samples(seed, a.dim(), n_samples, |psi, perp| {
        delta(a, &PerturbedStatePair::new(psi.clone(), perp.clone(), gamma)?)
    })?;
    let squares: Vec<f64> = deltas.iter().map(|x| x * x).collect();
    Ok(StaticEstimate {
        delta: Estimate::from_samples(&deltas),
        delta_sq: Estimate::from_samples(&squares),
        analytic_delta_sq: analytic_delta_sq(a, gamma),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedNoiseKind {
    /// ρ_sim = (1-γ)|ψ⟩⟨ψ| + γ I/d.
    Depolarizing,
    /// ρ_sim = (1-γ)|ψ⟩⟨ψ| + γ|ψ⊥⟩⟨ψ⊥|.
    OrthogonalMixture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedNoiseSpec {
    kind: MixedNoiseKind,
    gamma: f64,
}

impl MixedNoiseSpec {
    pub fn new(kind: MixedNoiseKind, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("mixed-noise γ must lie in [0,1], got {gamma}")));
        }
        Ok(Self { kind, gamma })
    }

    pub fn kind(&self) -> MixedNoiseKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn density(&self, psi: &PureState, companion: Option<&PureState>) -> Result<DensityOperator> {
        let d = psi.dim();
        let g = self.gamma;
        let pure = DensityOperator::from_pure(psi).matrix() * C64::new(1.0 - g, 0.0);
        let noise = match self.kind {
            MixedNoiseKind::Depolarizing => {
                ComplexMatrix::identity(d, d) * C64::new(g / d as f64, 0.0)
            }
            MixedNoiseKind::OrthogonalMixture => {
                let perp = companion.ok_or_else(|| {
                    Error::invalid("orthogonal-mixture noise needs a companion state")
                })?;
                let overlap = psi.inner(perp)?.norm();
                if overlap > tolerance::ORTHOGONALITY {
                    return Err(Error::NotOrthogonal { overlap });
                }
                DensityOperator::from_pure(perp).matrix() * C64::new(g, 0.0)
            }
        };
        DensityOperator::new(pure + noise)
    }
}

/// ⟨ψ|A|ψ⟩ - Tr(ρ_sim A), evaluated from the constructed ρ_sim.
pub fn mixed_delta(
    a: &HermitianOperator,
    psi: &PureState,
    companion: Option<&PureState>,
    spec: &MixedNoiseSpec,
) -> Result<f64> {
    let rho = spec.density(psi, companion)?;
    Ok(expectation(a, psi)? - rho.expectation(a)?)
}

/// Closed-form Haar relative error of the mixed models:
/// depolarizing sqrt(d/(d+1) γ² (η - 1/d)),
/// orthogonal mixture sqrt(2d²/(d²-1) γ² (η - 1/d)).
pub fn mixed_relative_error(report: &ObservableReport, spec: &MixedNoiseSpec) -> f64 {
    let d = report.dim() as f64;
    let g2 = spec.gamma * spec.gamma;
    let factor = match spec.kind {
        MixedNoiseKind::Depolarizing => d / (d + 1.0),
        MixedNoiseKind::OrthogonalMixture => 2.0 * d * d / (d * d - 1.0),
    };
    (factor * g2 * excess_purity(report)).sqrt()
}

/// A relative error estimated as sqrt(mean δ²)/(Tr A_s/d), with its standard
/// error propagated from the mean of δ² to first order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub analytic: f64,
}

impl RelativeEstimate {
    fn from_delta_sq(mean_sq: &Estimate, norm: f64, analytic: f64) -> Self {
        let root = mean_sq.mean.max(0.0).sqrt();
        let stderr = if root > 0.0 {
            mean_sq.stderr / (2.0 * root) / norm
        } else {
            0.0
        };
        Self {
            value: root / norm,
            stderr,
            analytic,
        }
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.value - self.analytic).abs() <= k * self.stderr
    }
}

/// Monte-Carlo relative error of a mixed model over Haar pairs.
pub fn haar_mixed_relative(
    a: &HermitianOperator,
    spec: &MixedNoiseSpec,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<RelativeEstimate> {
    check_samples(n_samples, MIN_SAMPLES)?;
    let report = build_report("", a, None)?;
    let squares = haar_pair_samples(seed, a.dim(), n_samples, |psi, perp| {
        Ok(mixed_delta(a, psi, Some(perp), spec)?.powi(2))
    })?;
    Ok(RelativeEstimate::from_delta_sq(
        &Estimate::from_samples(&squares),
        report.haar_mean(),
        mixed_relative_error(&report, spec),
    ))
}

/// Monte-Carlo relative error of the pure-state model, next to the closed form.
pub fn haar_relative_delta(
    a: &HermitianOperator,
    gamma: f64,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<RelativeEstimate> {
    let report = build_report("", a, None)?;
    let est = haar_average_delta_sq(a, gamma, n_samples, seed)?;
    Ok(RelativeEstimate::from_delta_sq(
        &est.delta_sq,
        report.haar_mean(),
        relative_delta(&report, gamma),
    ))
}

/// Distribution of δ_rel(A)² = δ(A)² / (Tr A_s/d)² over Haar pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceStudy {
    pub mean: f64,
    pub std_dev: f64,
    pub analytic_mean: f64,
    pub samples: usize,
}

pub fn variance_study(
    a: &HermitianOperator,
    gamma: f64,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<VarianceStudy> {
    check_samples(n_samples, 1000)?;
    let report = build_report("", a, None)?;
    let norm = report.haar_mean();
    let rel_sq = haar_pair_samples(seed, a.dim(), n_samples, |psi, perp| {
        let dl = delta(a, &PerturbedStatePair::new(psi.clone(), perp.clone(), gamma)?)?;
        Ok((dl / norm).powi(2))
    })?;
    let est = Estimate::from_samples(&rel_sq);
    Ok(VarianceStudy {
        mean: est.mean,
        std_dev: est.variance().sqrt(),
        analytic_mean: relative_delta(&report, gamma).powi(2),
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(gamma: f64) -> PerturbedStatePair {
        PerturbedStatePair::new(
            PureState::basis(2, 0).unwrap(),
            PureState::basis(2, 1).unwrap(),
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn hand_evaluated_two_level_error() {
        let a = HermitianOperator::from_diagonal(&[0.0, 2.0]).unwrap();
        let p = pair(1.0);
        assert!((delta(&a, &p).unwrap() + 1.0).abs() < 1e-15);
        assert!((delta_expanded(&a, &p).unwrap() + 1.0).abs() < 1e-15);
        assert!((p.ideal().overlap_sq(p.simulated()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        let a = HermitianOperator::from_diagonal(&[0.3, 2.0]).unwrap();
        assert_eq!(delta(&a, &pair(0.0)).unwrap(), 0.0);
        let i = HermitianOperator::identity(2);
        assert!(delta(&i, &pair(0.7)).unwrap().abs() < 1e-15);
        assert_eq!(analytic_delta_sq(&i, 0.7), 0.0);
    }

    #[test]
    fn rejects_non_orthogonal_pair() {
        let psi = PureState::basis(2, 0).unwrap();
        let other = PureState::from_real(&[0.6, 0.8]).unwrap();
        assert!(matches!(
            PerturbedStatePair::new(psi, other, 0.2),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn mixed_spec_validation() {
        assert!(MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, 1.5).is_err());
        assert!(MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, -0.1).is_err());
        let spec = MixedNoiseSpec::new(MixedNoiseKind::OrthogonalMixture, 0.2).unwrap();
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let psi = PureState::basis(2, 0).unwrap();
        assert!(mixed_delta(&a, &psi, None, &spec).is_err());
    }

    #[test]
    fn depolarizing_formula_per_state() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0, 5.0]).unwrap();
        let psi = PureState::from_real(&[0.6, 0.0, 0.8]).unwrap();
        let spec = MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, 0.3).unwrap();
        let got = mixed_delta(&a, &psi, None, &spec).unwrap();
        let expected = 0.3 * (0.64 * 5.0 - 2.0);
        assert!((got - expected).abs() < 1e-12);
        let zero = MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, 0.0).unwrap();
        assert!(mixed_delta(&a, &psi, None, &zero).unwrap().abs() < 1e-14);
    }

    #[test]
    fn projector_depolarizing_relative_error() {
        let psi = PureState::basis(16, 3).unwrap();
        let p = HermitianOperator::projector(&psi);
        let report = build_report("p", &p, None).unwrap();
        let spec = MixedNoiseSpec::new(MixedNoiseKind::Depolarizing, 0.1).unwrap();
        let got = mixed_relative_error(&report, &spec);
        assert!((got - 0.1 * (15.0f64 / 17.0).sqrt()).abs() < 1e-12);
        assert!((got - 0.09393).abs() < 1e-5);
    }

    #[test]
    fn sample_count_guard() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!(haar_average_delta_sq(&a, 0.2, 10, &SeedSpec::new(0)).is_err());
    }
}
