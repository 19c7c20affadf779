//! Sample statistics and deterministic parallel maps.

use rayon::prelude::*;

/// Sample mean with its standard error (sample std / √n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            samples: n,
        }
    }

    /// Sample variance (n - 1 denominator).
    pub fn variance(&self) -> f64 {
        self.stderr.powi(2) * self.samples as f64
    }

    /// |mean - target| in units of the standard error; infinite when the
    /// error is zero and the values differ.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }

    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        self.sigmas_from(target) <= k
    }
}

/// Maps `f` over `0..n` on the current rayon pool and returns results in index
/// order, so any later reduction is independent of the worker count.
pub fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Ranks with ties averaged (1-based).
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of the ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman: length mismatch");
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
        assert!(e.within_sigmas(2.0, 3.0));
        assert!(!e.within_sigmas(2.1, 3.0));
    }

    #[test]
    fn estimate_stderr() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let var: f64 = 5.0 / 3.0;
        assert!((e.stderr - (var / 4.0).sqrt()).abs() < 1e-15);
        assert!((e.variance() - var).abs() < 1e-14);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        // x = 1..4, y ranks 2,1,4,3 → ρ = 1 - 6·4/(4·15) = 0.6
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ordered_parallel_map() {
        let v = par_map_indexed(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }
}
