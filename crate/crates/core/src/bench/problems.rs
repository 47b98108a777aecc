//! Model problems: two manufactured problems on `[0, pi]` and two reaction-diffusion
//! problems on truncated unbounded domains.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::caputo::gamma;
use crate::pde::{Boundary, FieldFn, ProblemKind, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    /// Linear, forced, exact solution `x^4 (pi-x)^4 (e^{-x} t^{3+alpha} + 1)`.
    Linear,
    /// Same exact solution with the logistic reaction `0.01 u (1-u)`.
    Logistic,
    Fisher,
    Huxley,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Linear => "linear",
            ProblemId::Logistic => "logistic",
            ProblemId::Fisher => "fisher",
            ProblemId::Huxley => "huxley",
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            ProblemId::Linear | ProblemId::Logistic => (0.0, PI),
            ProblemId::Fisher => (-6.0, 6.0),
            ProblemId::Huxley => (-8.0, 8.0),
        }
    }

    pub fn build(self, alpha: f64) -> ProblemSpec {
        match self {
            ProblemId::Linear => bump_linear(alpha),
            ProblemId::Logistic => bump_logistic(alpha),
            ProblemId::Fisher => fisher(alpha),
            ProblemId::Huxley => huxley(alpha),
        }
    }
}

fn bump(x: f64) -> f64 {
    (x * (PI - x)).powi(4)
}

/// Exact solution and forcing of the manufactured problems, with the
/// time-only factors hoisted out of the node loop.
#[derive(Debug, Clone, Copy)]
struct Manufactured {
    alpha: f64,
    gamma_ratio: f64,
}

impl Manufactured {
    fn new(alpha: f64) -> Self {
        Manufactured {
            alpha,
            gamma_ratio: gamma(4.0 + alpha) / 6.0,
        }
    }

    fn exact_at(&self, x: f64, tp: f64) -> f64 {
        bump(x) * ((-x).exp() * tp + 1.0)
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        self.exact_at(x, t.powf(3.0 + self.alpha))
    }

    /// `D^alpha u - u_xx`, transcribed term by term; `tp = t^{3+alpha}`.
    fn forcing_at(&self, x: f64, t3: f64, tp: f64) -> f64 {
        let q = PI - x;
        let e = (-x).exp();
        let bracket = x * x * (56.0 - 16.0 * x + x * x) - 2.0 * PI * x * (28.0 - 12.0 * x + x * x)
            + PI * PI * (12.0 - 8.0 * x + x * x);
        self.gamma_ratio * bump(x) * e * t3
            - (x * q).powi(2) * (tp * e * bracket + 4.0 * (3.0 * PI * PI - 14.0 * PI * x + 14.0 * x * x))
    }

    fn exact_field(self) -> FieldFn {
        Arc::new(move |t, xs, out| {
            let tp = t.powf(3.0 + self.alpha);
            for (o, &x) in out.iter_mut().zip(xs) {
                *o = self.exact_at(x, tp);
            }
        })
    }

    fn forcing_field(self, reaction: Option<fn(f64) -> f64>) -> FieldFn {
        Arc::new(move |t, xs, out| {
            let (t3, tp) = (t.powi(3), t.powf(3.0 + self.alpha));
            for (o, &x) in out.iter_mut().zip(xs) {
                let mut g = self.forcing_at(x, t3, tp);
                if let Some(r) = reaction {
                    g -= r(self.exact_at(x, tp));
                }
                *o = g;
            }
        })
    }
}

/// Pointwise exact solution of the manufactured problems.
pub fn manufactured_exact(alpha: f64, x: f64, t: f64) -> f64 {
    Manufactured::new(alpha).exact(x, t)
}

/// Pointwise `D^alpha u - u_xx` of the manufactured solution.
pub fn manufactured_forcing(alpha: f64, x: f64, t: f64) -> f64 {
    Manufactured::new(alpha).forcing_at(x, t.powi(3), t.powf(3.0 + alpha))
}

pub fn bump_linear(alpha: f64) -> ProblemSpec {
    let m = Manufactured::new(alpha);
    ProblemSpec {
        id: ProblemId::Linear.name().into(),
        kind: ProblemKind::LinearForced,
        alpha,
        domain: ProblemId::Linear.domain(),
        initial: Arc::new(bump),
        boundary: Boundary::Dirichlet(m.exact_field()),
        forcing: Some(m.forcing_field(None)),
        reaction: None,
        exact: Some(m.exact_field()),
    }
}

pub fn logistic(u: f64) -> f64 {
    0.01 * u * (1.0 - u)
}

/// Initial data is the exact solution at `t = 0`.
pub fn bump_logistic(alpha: f64) -> ProblemSpec {
    let m = Manufactured::new(alpha);
    ProblemSpec {
        id: ProblemId::Logistic.name().into(),
        kind: ProblemKind::NonlinearForced,
        alpha,
        domain: ProblemId::Logistic.domain(),
        initial: Arc::new(move |x| m.exact(x, 0.0)),
        boundary: Boundary::Dirichlet(m.exact_field()),
        forcing: Some(m.forcing_field(Some(logistic))),
        reaction: Some(Arc::new(logistic)),
        exact: Some(m.exact_field()),
    }
}

/// `u = (1+t)(1+x+x^2)` on `[0, 1]`: linear in time and quadratic in space, so
/// the L1 and L1-2 schemes with either spatial operator reproduce it exactly.
pub fn linear_in_time(alpha: f64) -> ProblemSpec {
    let exact = crate::pde::pointwise(|x, t| (1.0 + t) * (1.0 + x + x * x));
    let g = gamma(2.0 - alpha);
    ProblemSpec {
        id: "linear_in_time".into(),
        kind: ProblemKind::LinearForced,
        alpha,
        domain: (0.0, 1.0),
        initial: Arc::new(|x| 1.0 + x + x * x),
        boundary: Boundary::Dirichlet(exact.clone()),
        forcing: Some(crate::pde::pointwise(move |x, t| {
            t.powf(1.0 - alpha) / g * (1.0 + x + x * x) - 2.0 * (1.0 + t)
        })),
        reaction: None,
        exact: Some(exact),
    }
}

pub const ABC_S0: f64 = 3.0;

pub fn fisher(alpha: f64) -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Fisher.name().into(),
        kind: ProblemKind::FisherAbc,
        alpha,
        domain: ProblemId::Fisher.domain(),
        initial: Arc::new(|x| (10.0 / PI).sqrt() * (-10.0 * x * x).exp()),
        boundary: Boundary::Absorbing { s0: ABC_S0 },
        forcing: None,
        reaction: Some(Arc::new(|u| -u * (1.0 - u))),
        exact: None,
    }
}

pub fn huxley(alpha: f64) -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Huxley.name().into(),
        kind: ProblemKind::HuxleyAbc,
        alpha,
        domain: ProblemId::Huxley.domain(),
        initial: Arc::new(|x| (-10.0 * (x - 0.5).powi(2)).exp() + (-10.0 * (x + 0.5).powi(2)).exp()),
        boundary: Boundary::Absorbing { s0: ABC_S0 },
        forcing: None,
        reaction: Some(Arc::new(|u| -0.1 * u * (1.0 - u) * (u - 0.001))),
        exact: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn at(f: &FieldFn, x: f64, t: f64) -> f64 {
        let mut out = [0.0];
        f(t, &[x], &mut out);
        out[0]
    }

    #[test]
    fn exact_vanishes_at_left_end() {
        let p = bump_linear(0.5);
        let exact = p.exact.unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(at(&exact, 0.0, t), 0.0);
        }
    }

    #[test]
    fn exact_at_midpoint() {
        let exact = bump_linear(0.5).exact.unwrap();
        let half = PI / 2.0;
        assert_relative_eq!(
            at(&exact, half, 1.0),
            half.powi(8) * ((-half).exp() + 1.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn initial_data_matches_exact_trace() {
        let p = bump_logistic(0.25);
        let exact = p.exact.clone().unwrap();
        assert_eq!((p.initial)(1.2), at(&exact, 1.2, 0.0));
        assert_eq!(manufactured_exact(0.25, 1.2, 0.7), at(&exact, 1.2, 0.7));
        assert!((fisher(0.5).initial)(0.0) > 1.78);
    }
}
