//! Spin-½ ensembles: collective spin operators, the LMG and transverse Ising
//! Hamiltonians, and the observable families used in the error studies.
//!
//! Conventions:
//! - symmetric subspace (d = N+1) is ordered by descending S_z eigenvalue,
//!   index k ↔ m = N/2 - k (k = number of down spins);
//! - full space (d = 2^N) uses one bit per site, bit 0 = ↑ (σ_z = +1); site 1
//!   is the most significant bit, so index 0 is |↑…↑⟩;
//! - sites are numbered 1..=N.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operator::{matmul, ComplexMatrix, ComplexVector, HermitianOperator, PureState, C64};

/// Largest chain stored densely in the full 2^N space.
pub const MAX_FULL_PARTICLES: usize = 14;
/// Largest spin system in the symmetric subspace (d = 512).
pub const MAX_SYMMETRIC_PARTICLES: usize = 511;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Maximal-spin sector S = N/2, dimension N+1.
    Symmetric,
    /// Full tensor-product space, dimension 2^N.
    Full,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Symmetric => f.write_str("symmetric"),
            Representation::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Representation::Symmetric),
            "full" => Ok(Representation::Full),
            other => Err(Error::invalid(format!("unknown representation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn parse(c: char) -> Result<Self> {
        match c {
            'x' => Ok(Axis::X),
            'y' => Ok(Axis::Y),
            'z' => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown axis '{other}'"))),
        }
    }
}

/// N spin-½ particles in a chosen representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinSystem {
    particles: usize,
    representation: Representation,
}

impl SpinSystem {
    pub fn new(particles: usize, representation: Representation) -> Result<Self> {
        if particles == 0 {
            return Err(Error::invalid("particle count must be positive"));
        }
        match representation {
            Representation::Full if particles > MAX_FULL_PARTICLES => Err(Error::SizeGuard(
                format!("full space limited to N <= {MAX_FULL_PARTICLES}, got {particles}"),
            )),
            Representation::Symmetric if particles > MAX_SYMMETRIC_PARTICLES => {
                Err(Error::SizeGuard(format!(
                    "symmetric subspace limited to N <= {MAX_SYMMETRIC_PARTICLES}, got {particles}"
                )))
            }
            _ => Ok(Self {
                particles,
                representation,
            }),
        }
    }

    pub fn symmetric(particles: usize) -> Result<Self> {
        Self::new(particles, Representation::Symmetric)
    }

    pub fn full(particles: usize) -> Result<Self> {
        Self::new(particles, Representation::Full)
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn dim(&self) -> usize {
        match self.representation {
            Representation::Symmetric => self.particles + 1,
            Representation::Full => 1 << self.particles,
        }
    }

    /// Total spin S = N/2.
    pub fn spin(&self) -> f64 {
        self.particles as f64 / 2.0
    }
}

/// S_α = ½ Σ_i σ_α^{(i)}.
pub fn collective_spin(system: &SpinSystem, axis: Axis) -> Result<HermitianOperator> {
    match system.representation {
        Representation::Symmetric => Ok(symmetric_spin(system.particles, axis)),
        Representation::Full => {
            let factors: Vec<Vec<PauliFactor>> = (1..=system.particles)
                .map(|site| vec![PauliFactor { site, axis }])
                .collect();
            Ok(pauli_sum(system.particles, &factors, 0.5))
        }
    }
}

fn symmetric_spin(n: usize, axis: Axis) -> HermitianOperator {
    let d = n + 1;
    let s = n as f64 / 2.0;
    let mut m = ComplexMatrix::zeros(d, d);
    match axis {
        Axis::Z => {
            for k in 0..d {
                m[(k, k)] = C64::new(s - k as f64, 0.0);
            }
        }
        Axis::X | Axis::Y => {
            for k in 1..d {
                // ⟨k-1|S+|k⟩ with m = s - k
                let mz = s - k as f64;
                let ladder = (s * (s + 1.0) - mz * (mz + 1.0)).sqrt() / 2.0;
                let (upper, lower) = match axis {
                    Axis::X => (C64::new(ladder, 0.0), C64::new(ladder, 0.0)),
                    _ => (C64::new(0.0, -ladder), C64::new(0.0, ladder)),
                };
                m[(k - 1, k)] = upper;
                m[(k, k - 1)] = lower;
            }
        }
    }
    HermitianOperator::from_hermitian_unchecked(m)
}

/// Parameters of H = -B S_z - (Λ/N) S_x².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmgParams {
    pub field: f64,
    pub coupling: f64,
    pub particles: usize,
}

impl LmgParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::invalid("LMG requires N >= 2"));
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) || !self.field.is_finite() {
            return Err(Error::invalid("LMG requires finite B and Λ > 0"));
        }
        Ok(())
    }
}

pub fn lmg_hamiltonian(
    params: &LmgParams,
    representation: Representation,
) -> Result<HermitianOperator> {
    params.validate()?;
    let system = SpinSystem::new(params.particles, representation)?;
    let sz = collective_spin(&system, Axis::Z)?;
    let sx = collective_spin(&system, Axis::X)?;
    let sx2 = sx.power(2)?;
    sz.scaled(-params.field)
        .add_scaled(&sx2, -params.coupling / params.particles as f64)
}

/// Parameters of the open transverse Ising chain
/// H = -(h/2) Σ σ_x^{(i)} - (J/4) Σ_{i<N} σ_z^{(i)} σ_z^{(i+1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimParams {
    pub field: f64,
    pub coupling: f64,
    pub particles: usize,
}

pub fn tim_hamiltonian(params: &TimParams) -> Result<HermitianOperator> {
    if params.particles < 2 {
        return Err(Error::invalid("transverse Ising chain requires N >= 2"));
    }
    if !params.field.is_finite() || !params.coupling.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = params.particles;
    SpinSystem::full(n)?;
    let d = 1usize << n;
    let mut m = ComplexMatrix::zeros(d, d);
    for b in 0..d {
        let mut zz = 0.0;
        for site in 1..n {
            zz += z_sign(b, n, site) * z_sign(b, n, site + 1);
        }
        m[(b, b)] = C64::new(-params.coupling / 4.0 * zz, 0.0);
        for site in 1..=n {
            let flipped = b ^ site_mask(n, site);
            m[(flipped, b)] += C64::new(-params.field / 2.0, 0.0);
        }
    }
    Ok(HermitianOperator::from_hermitian_unchecked(m))
}

fn site_mask(n: usize, site: usize) -> usize {
    1 << (n - site)
}

fn z_sign(b: usize, n: usize, site: usize) -> f64 {
    if b & site_mask(n, site) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One Pauli factor σ_axis on a site (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliFactor {
    pub site: usize,
    pub axis: Axis,
}

/// Maps basis index `b` through a product of Pauli factors: returns the
/// output index and phase.
fn apply_factors(n: usize, factors: &[PauliFactor], b: usize) -> (usize, C64) {
    let mut out = b;
    let mut phase = C64::new(1.0, 0.0);
    for f in factors {
        let mask = site_mask(n, f.site);
        let up = out & mask == 0;
        match f.axis {
            Axis::X => out ^= mask,
            Axis::Y => {
                phase *= if up { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                out ^= mask;
            }
            Axis::Z => {
                if !up {
                    phase = -phase;
                }
            }
        }
    }
    (out, phase)
}

fn pauli_sum(n: usize, terms: &[Vec<PauliFactor>], weight: f64) -> HermitianOperator {
    let d = 1usize << n;
    let mut m = ComplexMatrix::zeros(d, d);
    for term in terms {
        for b in 0..d {
            let (out, phase) = apply_factors(n, term, b);
            m[(out, b)] += phase * weight;
        }
    }
    HermitianOperator::from_hermitian_unchecked(m)
}

/// Product of Pauli operators on distinct sites, identity elsewhere (full space).
pub fn pauli_string(particles: usize, factors: &[PauliFactor]) -> Result<HermitianOperator> {
    SpinSystem::full(particles)?;
    if factors.is_empty() {
        return Err(Error::invalid("Pauli string needs at least one factor"));
    }
    let mut seen = vec![false; particles + 1];
    for f in factors {
        if f.site == 0 || f.site > particles {
            return Err(Error::invalid(format!(
                "site {} out of range 1..={particles}",
                f.site
            )));
        }
        if std::mem::replace(&mut seen[f.site], true) {
            return Err(Error::invalid(format!("repeated site {}", f.site)));
        }
    }
    Ok(pauli_sum(particles, &[factors.to_vec()], 1.0))
}

/// Contiguous block of `weight` σ_axis factors centred on the chain: sites
/// N/2 - (w-1)/2 … (integer division), e.g. for N = 8 and σ_x this gives
/// {4}, {4,5}, {3,4,5}, {3,4,5,6}.
pub fn pauli_weight_sites(particles: usize, weight: usize) -> Result<Vec<usize>> {
    if weight == 0 || weight > particles {
        return Err(Error::invalid(format!(
            "Pauli weight {weight} outside 1..={particles}"
        )));
    }
    let start = (particles / 2).saturating_sub((weight - 1) / 2).max(1);
    let start = start.min(particles + 1 - weight);
    Ok((start..start + weight).collect())
}

/// Product state with single-spin amplitudes (up, down), in either representation.
pub fn product_state(system: &SpinSystem, up: C64, down: C64) -> Result<PureState> {
    let norm = (up.norm_sqr() + down.norm_sqr()).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("single-spin amplitudes must be nonzero"));
    }
    let (up, down) = (up / norm, down / norm);
    let n = system.particles;
    let amplitudes = match system.representation {
        Representation::Symmetric => ComplexVector::from_iterator(
            n + 1,
            (0..=n).map(|k| {
                let ln_binom = ln_binomial(n, k);
                power_term(up, n - k, ln_binom / 2.0) * power_term(down, k, 0.0)
            }),
        ),
        Representation::Full => ComplexVector::from_iterator(
            1 << n,
            (0..1usize << n).map(|b| {
                let downs = b.count_ones() as usize;
                power_term(up, n - downs, 0.0) * power_term(down, downs, 0.0)
            }),
        ),
    };
    PureState::normalized(amplitudes)
}

/// a^k · e^{ln_extra}, evaluated in log-magnitude form so large N neither
/// overflows nor underflows prematurely.
fn power_term(a: C64, k: usize, ln_extra: f64) -> C64 {
    if k == 0 {
        return C64::new(ln_extra.exp(), 0.0);
    }
    if a.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let ln_mag = k as f64 * a.norm().ln() + ln_extra;
    C64::from_polar(ln_mag.exp(), k as f64 * a.arg())
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    let ln_fact = |m: usize| (1..=m).map(|x| (x as f64).ln()).sum::<f64>();
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Fully polarized state along ±axis, e.g. |↓_x⟩^{⊗N} for (X, false).
pub fn polarized_state(system: &SpinSystem, axis: Axis, positive: bool) -> Result<PureState> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if positive { 1.0 } else { -1.0 };
    let (up, down) = match (axis, positive) {
        (Axis::Z, true) => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (Axis::Z, false) => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (Axis::X, _) => (C64::new(r, 0.0), C64::new(sign * r, 0.0)),
        (Axis::Y, _) => (C64::new(r, 0.0), C64::new(0.0, sign * r)),
    };
    product_state(system, up, down)
}

/// Observable families built for a given spin system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ObservableFamily {
    /// S_axis^power.
    SpinPower { axis: Axis, power: u32 },
    /// |m_x⟩⟨m_x| for the S_x eigenstate with eigenvalue m = twice_m / 2
    /// (symmetric subspace only).
    SxProjector { twice_m: i64 },
    /// |↑…↑⟩⟨↑…↑| on sites 1..=k, identity on the rest (full space).
    PartitionProjector { k: usize },
    /// Centred contiguous Pauli string of the given weight (full space).
    PauliWeight { weight: usize, axis: Axis },
    /// Explicit Pauli string (full space).
    PauliString(Vec<PauliFactor>),
}

impl ObservableFamily {
    pub fn build(&self, system: &SpinSystem) -> Result<HermitianOperator> {
        let full_only = |what: &str| -> Result<()> {
            if system.representation != Representation::Full {
                return Err(Error::invalid(format!("{what} requires the full space")));
            }
            Ok(())
        };
        match self {
            ObservableFamily::SpinPower { axis, power } => {
                if *power == 0 {
                    return Err(Error::invalid("power must be at least 1"));
                }
                collective_spin(system, *axis)?.power(*power)
            }
            ObservableFamily::SxProjector { twice_m } => {
                if system.representation != Representation::Symmetric {
                    return Err(Error::invalid("S_x projectors require the symmetric subspace"));
                }
                let n = system.particles as i64;
                if twice_m.abs() > n || (twice_m + n) % 2 != 0 {
                    return Err(Error::invalid(format!(
                        "m = {} not in {{-N/2, ..., N/2}} for N = {n}",
                        HalfInteger(*twice_m)
                    )));
                }
                let sx = collective_spin(system, Axis::X)?;
                let spectrum = sx.spectrum()?;
                // ascending eigenvalues -S..S
                let index = ((twice_m + n) / 2) as usize;
                let v = spectrum.vectors.column(index).into_owned();
                Ok(HermitianOperator::projector(&PureState::normalized(v)?))
            }
            ObservableFamily::PartitionProjector { k } => {
                full_only("partition projector")?;
                let n = system.particles;
                if *k > n {
                    return Err(Error::invalid(format!("k = {k} exceeds N = {n}")));
                }
                let mask = if *k == 0 { 0 } else { ((1usize << k) - 1) << (n - k) };
                let diag: Vec<f64> = (0..system.dim())
                    .map(|b| if b & mask == 0 { 1.0 } else { 0.0 })
                    .collect();
                HermitianOperator::from_diagonal(&diag)
            }
            ObservableFamily::PauliWeight { weight, axis } => {
                full_only("Pauli-weight observable")?;
                let factors: Vec<PauliFactor> = pauli_weight_sites(system.particles, *weight)?
                    .into_iter()
                    .map(|site| PauliFactor { site, axis: *axis })
                    .collect();
                pauli_string(system.particles, &factors)
            }
            ObservableFamily::PauliString(factors) => {
                full_only("Pauli string")?;
                pauli_string(system.particles, factors)
            }
        }
    }
}

struct HalfInteger(i64);

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Canonical descriptor: `sx`, `sz^6`, `proj-sx:1/2`, `partition:5`,
/// `pauli-weight:3` (σ_x) or `pauli-weight:3:z`, `pauli:y3*y4`.
impl fmt::Display for ObservableFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableFamily::SpinPower { axis, power: 1 } => write!(f, "s{}", axis.letter()),
            ObservableFamily::SpinPower { axis, power } => {
                write!(f, "s{}^{}", axis.letter(), power)
            }
            ObservableFamily::SxProjector { twice_m } => {
                write!(f, "proj-sx:{}", HalfInteger(*twice_m))
            }
            ObservableFamily::PartitionProjector { k } => write!(f, "partition:{k}"),
            ObservableFamily::PauliWeight {
                weight,
                axis: Axis::X,
            } => write!(f, "pauli-weight:{weight}"),
            ObservableFamily::PauliWeight { weight, axis } => {
                write!(f, "pauli-weight:{weight}:{}", axis.letter())
            }
            ObservableFamily::PauliString(factors) => {
                f.write_str("pauli:")?;
                for (i, p) in factors.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    write!(f, "{}{}", p.axis.letter(), p.site)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ObservableFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse observable descriptor '{s}'"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("proj-sx:") {
            let twice_m = match rest.split_once('/') {
                Some((num, "2")) => num.trim().parse::<i64>().map_err(|_| bad())?,
                Some(_) => return Err(bad()),
                None => 2 * rest.trim().parse::<i64>().map_err(|_| bad())?,
            };
            return Ok(ObservableFamily::SxProjector { twice_m });
        }
        if let Some(rest) = s.strip_prefix("partition:") {
            let k = rest.parse().map_err(|_| bad())?;
            return Ok(ObservableFamily::PartitionProjector { k });
        }
        if let Some(rest) = s.strip_prefix("pauli-weight:") {
            let (w, axis) = match rest.split_once(':') {
                Some((w, a)) => {
                    let mut chars = a.chars();
                    let axis = Axis::parse(chars.next().ok_or_else(bad)?)?;
                    if chars.next().is_some() {
                        return Err(bad());
                    }
                    (w, axis)
                }
                None => (rest, Axis::X),
            };
            let weight = w.parse().map_err(|_| bad())?;
            return Ok(ObservableFamily::PauliWeight { weight, axis });
        }
        if let Some(rest) = s.strip_prefix("pauli:") {
            let factors = rest
                .split('*')
                .map(|tok| {
                    let mut chars = tok.trim().chars();
                    let axis = Axis::parse(chars.next().ok_or_else(bad)?)?;
                    let site = chars.as_str().parse().map_err(|_| bad())?;
                    Ok(PauliFactor { site, axis })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(ObservableFamily::PauliString(factors));
        }
        if let Some(rest) = s.strip_prefix('s') {
            let mut chars = rest.chars();
            let axis = Axis::parse(chars.next().ok_or_else(bad)?)?;
            let tail = chars.as_str();
            let power = if tail.is_empty() {
                1
            } else {
                tail.strip_prefix('^')
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?
            };
            return Ok(ObservableFamily::SpinPower { axis, power });
        }
        Err(bad())
    }
}

/// Isometry mapping the symmetric subspace into the full space: column k is
/// the normalized uniform superposition of all basis states with k down spins.
pub fn symmetric_embedding(particles: usize) -> Result<ComplexMatrix> {
    SpinSystem::full(particles)?;
    let d_full = 1usize << particles;
    let mut p = ComplexMatrix::zeros(d_full, particles + 1);
    for b in 0..d_full {
        let k = b.count_ones() as usize;
        p[(b, k)] = C64::new((-0.5 * ln_binomial(particles, k)).exp(), 0.0);
    }
    Ok(p)
}

/// P† A P for the symmetric embedding P.
pub fn project_to_symmetric(op: &HermitianOperator, particles: usize) -> Result<HermitianOperator> {
    let p = symmetric_embedding(particles)?;
    if p.nrows() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            found: op.dim(),
        });
    }
    HermitianOperator::new(matmul(&p.adjoint(), &matmul(op.matrix(), &p)))
}
