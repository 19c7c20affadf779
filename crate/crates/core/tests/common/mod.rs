//! Dense reference constructions used as test oracles. Nothing here goes
//! through the library's own operator builders or eigensolver.
#![allow(dead_code)]

use nalgebra::DMatrix;
use purity_core::{C64, ComplexMatrix, ComplexVector};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli(axis: char) -> ComplexMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match axis {
        'x' => ComplexMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        'y' => ComplexMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        'z' => ComplexMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => ComplexMatrix::identity(2, 2),
    }
}

/// Tensor product of single-site operators; site 1 is the leftmost factor.
pub fn kron_chain(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// σ_axis on `site` (1-based) of an `n`-site chain.
pub fn site_op(n: usize, site: usize, axis: char) -> ComplexMatrix {
    let factors: Vec<ComplexMatrix> = (1..=n)
        .map(|s| if s == site { pauli(axis) } else { pauli('i') })
        .collect();
    kron_chain(&factors)
}

pub fn collective(n: usize, axis: char) -> ComplexMatrix {
    let d = 1 << n;
    (1..=n).fold(ComplexMatrix::zeros(d, d), |acc, s| acc + site_op(n, s, axis) * c(0.5, 0.0))
}

/// e^{-iHt} by scaling and squaring of a truncated Taylor series.
pub fn expm_minus_i(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let d = h.nrows();
    let a = h * c(0.0, -t);
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * d as f64;
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scaled = &a * c(0.5f64.powi(squarings), 0.0);
    let mut term = ComplexMatrix::identity(d, d);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Classical fourth-order Runge-Kutta for dψ/dt = -iHψ.
pub fn rk4(h: &ComplexMatrix, psi0: &ComplexVector, t: f64, steps: usize) -> ComplexVector {
    let dt = t / steps as f64;
    let mi = c(0.0, -1.0);
    let f = |v: &ComplexVector| (h * v) * mi;
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = f(&psi);
        let k2 = f(&(&psi + &k1 * c(dt / 2.0, 0.0)));
        let k3 = f(&(&psi + &k2 * c(dt / 2.0, 0.0)));
        let k4 = f(&(&psi + &k3 * c(dt, 0.0)));
        psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
    }
    psi
}

/// Real symmetric eigenvalues by cyclic Jacobi rotations; independent of the
/// library's complex Hermitian solver.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut a = m.clone();
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn overlap_sq(a: &ComplexVector, b: &ComplexVector) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Kolmogorov-Smirnov statistic of a sample against the uniform law on [lo, hi].
pub fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
