//! Polynomial approximation of the kernel shape `(1 - tau)^(-alpha)` on `[-1/3, 1/3]`.
//!
//! The weights are the binomial-series (Taylor at `tau = 0`) coefficients. The
//! sup-norm error is certified on a dense uniform grid and inflated by 1%.

use crate::error::{Error, Result};

/// Half-width of the argument domain of the shape function.
pub const SHAPE_RADIUS: f64 = 1.0 / 3.0;

/// Grid size used when a kernel is certified without an explicit sample count.
pub const DEFAULT_SAMPLES: usize = 4097;

/// Safety factor applied to the sampled sup error.
pub const EPS_INFLATION: f64 = 1.01;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// Taylor weights `w_0..w_K` of `(1 - tau)^(-alpha)`.
pub fn taylor_weights(alpha: f64, degree: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut w = Vec::with_capacity(degree + 1);
    w.push(1.0);
    for k in 1..=degree {
        let kf = k as f64;
        w.push(w[k - 1] * (alpha + kf - 1.0) / kf);
    }
    Ok(w)
}

/// Reference evaluation of `(1 - tau)^(-alpha)` for `|tau| <= 1/3`.
pub fn kernel_shape(alpha: f64, tau: f64) -> Result<f64> {
    if tau.abs() > SHAPE_RADIUS + f64::EPSILON {
        return Err(Error::Domain(format!("|tau| must be <= 1/3, got {tau}")));
    }
    Ok((1.0 - tau).powf(-alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelPolynomial {
    alpha: f64,
    weights: Vec<f64>,
    eps: f64,
}

impl KernelPolynomial {
    /// Builds the degree-`degree` Taylor polynomial and certifies it on the default grid.
    pub fn new(alpha: f64, degree: usize) -> Result<Self> {
        Self::with_samples(alpha, degree, DEFAULT_SAMPLES)
    }

    pub fn with_samples(alpha: f64, degree: usize, samples: usize) -> Result<Self> {
        let weights = taylor_weights(alpha, degree)?;
        let mut poly = KernelPolynomial {
            alpha,
            weights,
            eps: f64::INFINITY,
        };
        poly.eps = certify_eps(&poly, samples)?;
        Ok(poly)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn degree(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Certified sup-norm error on `[-1/3, 1/3]`.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.weights.iter().rev().fold(0.0, |acc, &w| acc * tau + w)
    }

    /// `(1 - tau)^(-alpha) - P(tau)` summed as the series tail, which is free of
    /// the cancellation a direct subtraction suffers once the error nears roundoff.
    fn remainder(&self, tau: f64) -> f64 {
        let degree = self.degree();
        let mut w = self.weights[degree];
        let mut p = tau.powi(degree as i32);
        let mut sum = 0.0;
        let mut k = degree;
        loop {
            k += 1;
            let kf = k as f64;
            w *= (self.alpha + kf - 1.0) / kf;
            p *= tau;
            let term = w * p;
            sum += term;
            if term.abs() <= sum.abs() * 1e-18 || term == 0.0 || k > degree + 400 {
                break;
            }
        }
        sum
    }
}

/// Sampled sup of `|(1 - tau)^(-alpha) - sum w_k tau^k|` over `samples` uniform points
/// in `[-1/3, 1/3]`, inflated by [`EPS_INFLATION`].
pub fn certify_eps(poly: &KernelPolynomial, samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {samples}")));
    }
    let step = 2.0 * SHAPE_RADIUS / (samples - 1) as f64;
    let sup = (0..samples)
        .map(|i| {
            let tau = if i == samples - 1 {
                SHAPE_RADIUS
            } else {
                -SHAPE_RADIUS + i as f64 * step
            };
            poly.remainder(tau).abs()
        })
        .fold(0.0_f64, f64::max);
    Ok(sup * EPS_INFLATION)
}
