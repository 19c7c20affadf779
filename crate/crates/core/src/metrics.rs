//! Observable purity η(A) = Tr(ρ_A²), ρ_A = A_s / Tr(A_s) with A_s the operator
//! shifted to a zero minimum eigenvalue; Hamiltonian-dependent diagonal purity;
//! diagonal ensembles and the total variation distance.

use crate::error::{Error, Result};
use crate::operator::{expectation, HermitianOperator, PureState, Spectrum};
use crate::tolerance;

/// Eigenvalues of A - E_min·I, with values within [`tolerance::SHIFT_CLAMP`]
/// of zero clamped to exactly zero.
pub fn shifted_eigenvalues(a: &HermitianOperator) -> Result<(f64, Vec<f64>)> {
    let values = a.eigenvalues()?;
    let e_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted = values
        .iter()
        .map(|&e| {
            let x = e - e_min;
            if x < tolerance::SHIFT_CLAMP {
                0.0
            } else {
                x
            }
        })
        .collect();
    Ok((e_min, shifted))
}

fn purity_of(values: &[f64]) -> Option<f64> {
    let tr: f64 = values.iter().sum();
    if tr <= 0.0 {
        return None;
    }
    Some(values.iter().map(|x| x * x).sum::<f64>() / (tr * tr))
}

/// η(A). For A ∝ I the shifted operator vanishes; the value returned is the
/// limit 1/d of ρ_A → I/d. [`build_report`] rejects that case instead.
pub fn purity(a: &HermitianOperator) -> Result<f64> {
    let (_, shifted) = shifted_eigenvalues(a)?;
    Ok(purity_of(&shifted).unwrap_or(1.0 / a.dim() as f64))
}

/// Σ A_nn² / (Σ A_nn)² with A_nn = ⟨u_n|A_s|u_n⟩ in the eigenbasis of H.
pub fn diagonal_purity(a_shifted: &HermitianOperator, h: &Spectrum) -> Result<f64> {
    let diag = h.diagonal_elements(a_shifted.matrix())?;
    purity_of(&diag).ok_or(Error::TrivialObservable)
}

/// Shifted observable with its purity and, optionally, its diagonal purity
/// relative to a Hamiltonian.
#[derive(Debug, Clone)]
pub struct ObservableReport {
    pub label: String,
    original: HermitianOperator,
    shifted: HermitianOperator,
    pub min_eigenvalue: f64,
    pub purity: f64,
    pub diag_purity: Option<f64>,
    /// Set when the supplied H has gaps below [`tolerance::DEGENERATE_GAP`]; the
    /// diagonal purity then depends on the basis chosen inside degenerate blocks.
    pub degenerate_hamiltonian: bool,
}

impl ObservableReport {
    pub fn original(&self) -> &HermitianOperator {
        &self.original
    }

    pub fn shifted(&self) -> &HermitianOperator {
        &self.shifted
    }

    pub fn dim(&self) -> usize {
        self.original.dim()
    }

    /// Tr(A_s).
    pub fn shifted_trace(&self) -> f64 {
        self.shifted.trace()
    }

    /// Haar mean of ⟨A_s⟩, Tr(A_s)/d: the normalization of every relative error.
    pub fn haar_mean(&self) -> f64 {
        self.shifted_trace() / self.dim() as f64
    }
}

pub fn build_report(
    label: impl Into<String>,
    a: &HermitianOperator,
    h: Option<&HermitianOperator>,
) -> Result<ObservableReport> {
    let (e_min, shifted_values) = shifted_eigenvalues(a)?;
    let purity = purity_of(&shifted_values).ok_or(Error::TrivialObservable)?;
    let shifted = a.shifted(-e_min);
    let (diag_purity, degenerate_hamiltonian) = match h {
        Some(h) => {
            if h.dim() != a.dim() {
                return Err(Error::DimensionMismatch {
                    expected: a.dim(),
                    found: h.dim(),
                });
            }
            let spectrum = h.spectrum()?;
            (
                Some(diagonal_purity(&shifted, spectrum)?),
                spectrum.is_degenerate(),
            )
        }
        None => (None, false),
    };
    Ok(ObservableReport {
        label: label.into(),
        original: a.clone(),
        shifted,
        min_eigenvalue: e_min,
        purity,
        diag_purity,
        degenerate_hamiltonian,
    })
}

/// Populations |b_n|² = |⟨u_n|ψ₀⟩|² and the inverse participation ratio S₀ = Σ|b_n|⁴.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEnsemble {
    pub populations: Vec<f64>,
    pub ipr: f64,
}

impl DiagonalEnsemble {
    pub fn from_spectrum(h: &Spectrum, psi0: &PureState) -> Result<Self> {
        let b = h.coefficients(psi0)?;
        let populations: Vec<f64> = b.iter().map(|z| z.norm_sqr()).collect();
        let ipr = populations.iter().map(|p| p * p).sum();
        Ok(Self { populations, ipr })
    }

    /// Tr(ρ_D A) = Σ |b_n|² A_nn.
    pub fn average(&self, h: &Spectrum, a: &HermitianOperator) -> Result<f64> {
        let diag = h.diagonal_elements(a.matrix())?;
        Ok(diag.iter().zip(&self.populations).map(|(a, p)| a * p).sum())
    }
}

pub fn diagonal_ensemble(h: &HermitianOperator, psi0: &PureState) -> Result<DiagonalEnsemble> {
    DiagonalEnsemble::from_spectrum(h.spectrum()?, psi0)
}

/// Infinite-time average of ⟨A(t)⟩, with a flag when H is degenerate (the
/// dephasing argument behind the value no longer holds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    pub value: f64,
    pub degenerate: bool,
}

pub fn infinite_time_average(
    a: &HermitianOperator,
    h: &HermitianOperator,
    psi0: &PureState,
) -> Result<TimeAverage> {
    let spectrum = h.spectrum()?;
    let degenerate = spectrum.is_degenerate();
    if degenerate {
        log::warn!(
            "Hamiltonian has a gap below {:e}; the diagonal-ensemble average is basis dependent",
            tolerance::DEGENERATE_GAP
        );
    }
    // validates A against ψ₀ before the eigenbasis contraction
    expectation(a, psi0)?;
    let value = DiagonalEnsemble::from_spectrum(spectrum, psi0)?.average(spectrum, a)?;
    Ok(TimeAverage { value, degenerate })
}

/// ½ Σ |p_n - q_n| after renormalizing both inputs.
pub fn variation_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let check = |v: &[f64]| -> Result<f64> {
        if v.iter().any(|x| !x.is_finite() || *x < -tolerance::PROBABILITY_SUM) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > tolerance::PROBABILITY_SUM {
            return Err(Error::Unnormalized { sum });
        }
        Ok(sum)
    };
    let (sp, sq) = (check(p)?, check(q)?);
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a / sp - b / sq).abs())
        .sum::<f64>()
        / 2.0;
    Ok(d.clamp(0.0, 1.0))
}
