//! Benchmark problems, error metrics and table reproduction.

pub mod experiments;
pub mod problems;
pub mod published;

use crate::error::{Error, Result};

/// Per-step and aggregate errors of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    /// `max_i |e_i^j|` for `j = 1..=N_T`.
    pub step_norms: Vec<f64>,
    /// `sqrt(h * sum_j |e^j|^2)`.
    pub aggregate: f64,
    pub final_norm: f64,
}

/// Errors between two sequences of per-step fields.
pub fn error_metrics(numeric: &[Vec<f64>], reference: &[Vec<f64>], h: f64) -> Result<ErrorRecord> {
    if numeric.len() != reference.len() {
        return Err(Error::Shape {
            expected: reference.len(),
            got: numeric.len(),
        });
    }
    let mut norms = Vec::with_capacity(numeric.len());
    for (u, r) in numeric.iter().zip(reference) {
        if u.len() != r.len() {
            return Err(Error::Shape {
                expected: r.len(),
                got: u.len(),
            });
        }
        norms.push(u.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    error_from_norms(norms, h)
}

pub fn error_from_norms(step_norms: Vec<f64>, h: f64) -> Result<ErrorRecord> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let sum: f64 = step_norms.iter().map(|e| e * e).sum();
    Ok(ErrorRecord {
        aggregate: (h * sum).sqrt(),
        final_norm: step_norms.last().copied().unwrap_or(0.0),
        step_norms,
    })
}

/// `log2(coarse / fine)` for grids halved between the two errors.
pub fn observed_order(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0) {
        return Err(Error::Domain(format!(
            "orders need positive errors, got {coarse} and {fine}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// Best single-constant fit `y ~ c * model(x)` in the max-relative-deviation sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityFit {
    pub scale: f64,
    /// `max_i |y_i / (c * model(x_i)) - 1|`.
    pub max_rel_dev: f64,
}

/// Fits `points` to `c * model(x)`. The minimax constant is `2 r_max r_min / (r_max + r_min)`
/// for the ratios `r_i = y_i / model(x_i)`.
pub fn fit_complexity(points: &[(f64, f64)], model: impl Fn(f64) -> f64) -> Result<ComplexityFit> {
    if points.is_empty() {
        return Err(Error::Domain("no points to fit".into()));
    }
    let ratios: Vec<f64> = points.iter().map(|&(x, y)| y / model(x)).collect();
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Domain("fit needs positive finite ratios".into()));
    }
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    let scale = 2.0 * hi * lo / (hi + lo);
    let max_rel_dev = ratios.iter().map(|r| (r / scale - 1.0).abs()).fold(0.0, f64::max);
    Ok(ComplexityFit { scale, max_rel_dev })
}

/// `n log2 n`.
pub fn n_log_n(n: f64) -> f64 {
    n * n.log2()
}

/// Storage cap for a fast run over `steps` steps: `(K+1)(N+1) * 2(Ntau-1) log_Ntau((N_T+1)/2)`.
pub fn slots_cap(degree: usize, nodes: usize, ntau: usize, steps: usize) -> f64 {
    let (_, upper) = crate::history::length_bounds(steps, ntau);
    ((degree + 1) * nodes) as f64 * upper
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_fields_have_zero_error() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let r = error_metrics(&f, &f, 0.1).unwrap();
        assert_eq!(r.aggregate, 0.0);
        assert_eq!(r.step_norms, vec![0.0, 0.0]);
    }

    #[test]
    fn two_step_aggregate() {
        let r = error_from_norms(vec![0.3, 0.4], 0.5).unwrap();
        assert_relative_eq!(r.aggregate, 0.353_553_390_593_273_8, max_relative = 1e-15);
        assert_eq!(r.final_norm, 0.4);
    }

    #[test]
    fn single_step_aggregate() {
        let r = error_metrics(&[vec![0.0, 0.25]], &[vec![0.0, 0.0]], 0.04).unwrap();
        assert_relative_eq!(r.aggregate, 0.25 * 0.2, max_relative = 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        assert!(error_metrics(&[vec![0.0]], &[], 0.1).is_err());
        assert!(error_metrics(&[vec![0.0]], &[vec![0.0, 1.0]], 0.1).is_err());
    }

    #[test]
    fn complexity_fit() {
        let exact: Vec<(f64, f64)> = [1024.0, 2048.0, 4096.0].iter().map(|&n| (n, 3.0 * n * n)).collect();
        let f = fit_complexity(&exact, |n| n * n).unwrap();
        assert_relative_eq!(f.scale, 3.0, max_relative = 1e-14);
        assert!(f.max_rel_dev < 1e-14);
        // ratios 1 and 1.5 give scale 1.2 and deviation 0.25 on both ends
        let f = fit_complexity(&[(1.0, 1.0), (2.0, 3.0)], |n| n).unwrap();
        assert_relative_eq!(f.scale, 1.2, max_relative = 1e-14);
        assert_relative_eq!(f.max_rel_dev, 0.25, max_relative = 1e-12);
        assert!(fit_complexity(&[], |n| n).is_err());
        assert_eq!(n_log_n(8.0), 24.0);
    }

    #[test]
    fn orders() {
        assert_eq!(observed_order(0.4, 0.1).unwrap(), 2.0);
        assert!((observed_order(7.59e-2, 2.73e-2).unwrap() - 1.48).abs() < 0.005);
        assert!((observed_order(6.30e-2, 1.51e-2).unwrap() - 2.06).abs() < 0.005);
        assert!(observed_order(0.0, 0.1).is_err());
        assert!(observed_order(0.1, -1.0).is_err());
    }
}
