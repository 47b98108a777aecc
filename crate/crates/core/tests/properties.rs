use fracfast_core::caputo::{build_payload, caputo_power_oracle, direct_l1, direct_l12, local_coefficients};
use fracfast_core::history::length_bounds;
use fracfast_core::kernel::{kernel_shape, SHAPE_RADIUS};
use fracfast_core::{CaputoStepper, HistoryLedger, Interp, KernelPolynomial, MomentPayload, SchemeConfig};
use proptest::prelude::*;

/// `int_a^b (Pi_1 u)' ((tau - mid) / half)^k dtau` over whole steps, one step at a time.
fn direct_moment(u: &[f64], a: u64, b: u64, k: i32) -> f64 {
    let (mid, half) = ((a + b) as f64 / 2.0, (b - a) as f64 / 2.0);
    (a + 1..=b)
        .map(|j| {
            let p = |x: f64| ((x - mid) / half).powi(k + 1);
            (u[j as usize] - u[j as usize - 1]) * half / (k + 1) as f64 * (p(j as f64) - p((j - 1) as f64))
        })
        .sum()
}

fn stepper_values(config: &SchemeConfig, h: f64, u: &[f64]) -> Vec<f64> {
    let mut st = CaputoStepper::new(config, h, 1).unwrap();
    st.push(&u[..1]).unwrap();
    let mut r = [0.0];
    (1..u.len())
        .map(|n| {
            st.explicit_part(n, &mut r).unwrap();
            let v = st.leading(n) * u[n] + r[0];
            st.push(&u[n..=n]).unwrap();
            v
        })
        .collect()
}

fn schemes(alpha: f64) -> Vec<SchemeConfig> {
    vec![
        SchemeConfig::l1(alpha),
        SchemeConfig::l12(alpha),
        SchemeConfig::cutoff(alpha, 7),
        SchemeConfig::faom(alpha, 2),
        SchemeConfig::faom_pk(alpha, Interp::Linear, 3, 4).unwrap(),
        SchemeConfig::faom_pk(alpha, Interp::Quadratic, 2, 9).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_polynomial_within_eps(alpha in 0.01f64..0.99, degree in 0usize..13, s in -1.0f64..1.0) {
        let p = KernelPolynomial::new(alpha, degree).unwrap();
        let tau = s * SHAPE_RADIUS;
        let gap = (kernel_shape(alpha, tau).unwrap() - p.eval(tau)).abs();
        prop_assert!(gap <= p.eps() + 4.0 * f64::EPSILON, "gap {gap:e} eps {:e}", p.eps());
        let w = p.weights();
        prop_assert_eq!(w[0], 1.0);
        prop_assert!(w.windows(2).all(|q| q[1] > 0.0 && q[1] < q[0]));
    }

    #[test]
    fn kernel_eps_decreases_with_degree(alpha in 0.01f64..0.99, degree in 0usize..12) {
        let lo = KernelPolynomial::new(alpha, degree).unwrap().eps();
        let hi = KernelPolynomial::new(alpha, degree + 1).unwrap().eps();
        prop_assert!(hi < lo);
    }

    #[test]
    fn ledger_structure_holds_every_step(ntau in 2usize..6, steps in 2usize..3000) {
        let mut ledger = HistoryLedger::new(0.01, ntau, 0, 1).unwrap();
        for n in 2..=steps {
            ledger.advance(MomentPayload::zeros(0, 1)).unwrap();
            prop_assert_eq!(ledger.step(), n);
            if let Err(v) = ledger.check_structure() {
                return Err(TestCaseError::fail(format!("step {n}: {v}")));
            }
            let (lo, hi) = length_bounds(n, ntau);
            let m = ledger.len() as f64;
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
            let b = ledger.boundary_steps();
            prop_assert_eq!(b[0], (n - 1) as u64);
            prop_assert_eq!(*b.last().unwrap(), 0);
        }
    }

    #[test]
    fn merged_moments_match_direct_integration(
        ntau in 2usize..5,
        degree in 0usize..8,
        coef in prop::array::uniform3(-2.0f64..2.0),
        steps in 2usize..200,
    ) {
        let h = 0.01;
        let u: Vec<f64> = (0..=steps)
            .map(|j| {
                let t = j as f64 * h;
                coef[0] * (3.0 * t).sin() + coef[1] * t * t + coef[2] * (-t).exp()
            })
            .collect();
        let scale = u.windows(2).map(|w| (w[1] - w[0]).abs()).fold(1e-3, f64::max);
        let mut ledger = HistoryLedger::new(h, ntau, degree, 1).unwrap();
        for n in 2..=steps {
            ledger.advance(build_payload(&u[n - 2..n], h, Interp::Linear, degree).unwrap()).unwrap();
        }
        for (hi, lo, p) in ledger.intervals() {
            for (k, v) in p.scalar_moments().iter().enumerate() {
                let d = direct_moment(&u, lo, hi, k as i32);
                prop_assert!((v - d).abs() <= 1e-12 * scale * (hi - lo) as f64, "k={k} {v} vs {d}");
            }
        }
    }

    #[test]
    fn evaluators_are_linear(alpha in 0.05f64..0.95, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (h, steps) = (0.02, 60);
        let f: Vec<f64> = (0..=steps).map(|j| (j as f64 * h * 5.0).cos()).collect();
        let g: Vec<f64> = (0..=steps).map(|j| (j as f64 * h).powf(1.5)).collect();
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        for c in schemes(alpha) {
            let (vf, vg, vm) = (stepper_values(&c, h, &f), stepper_values(&c, h, &g), stepper_values(&c, h, &mix));
            for n in 0..steps {
                let scale = vf[n].abs().max(vg[n].abs()).max(1.0) * (a.abs() + b.abs()).max(1.0);
                prop_assert!((vm[n] - a * vf[n] - b * vg[n]).abs() <= 1e-12 * scale, "{} n={n}", c.label());
            }
        }
    }

    #[test]
    fn l1_exact_on_linear_data(alpha in 0.05f64..0.95, c0 in -2.0f64..2.0, c1 in 0.1f64..3.0, steps in 1usize..120) {
        let h = 1.0 / 64.0;
        let u: Vec<f64> = (0..=steps).map(|j| c0 + c1 * j as f64 * h).collect();
        let exact = c1 * caputo_power_oracle(1.0, alpha, steps as f64 * h).unwrap();
        for v in [direct_l1(&u, alpha, h).unwrap(), direct_l12(&u, alpha, h).unwrap()] {
            prop_assert!((v - exact).abs() <= 1e-12 * exact.abs());
        }
        let faom = stepper_values(&SchemeConfig::faom(alpha, 2), h, &u);
        prop_assert!((faom[steps - 1] - exact).abs() <= 1e-12 * exact.abs());
    }
}

#[test]
fn local_part_of_l12_reproduces_quadratics() {
    // the local coefficients alone give the last-interval integral of a quadratic
    let (alpha, h) = (0.4, 0.1);
    let u = |t: f64| t * t;
    let c = local_coefficients(alpha, h, Interp::Quadratic, 5);
    let local = c.apply(u(0.5), u(0.4), u(0.3));
    // int_{0.4}^{0.5} 2 tau (0.5 - tau)^{-alpha} dtau / Gamma(1 - alpha), by Simpson on the substitution s = (0.5 - tau)^{1-alpha}
    let p = 1.0 - alpha;
    let top = h.powf(p);
    let n = 2000;
    let integrand = |s: f64| 2.0 * (0.5 - s.powf(1.0 / p)) / p;
    let ds = top / n as f64;
    let simpson: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * integrand(i as f64 * ds)
        })
        .sum::<f64>()
        * ds
        / 3.0;
    let expected = simpson / statrs::function::gamma::gamma(1.0 - alpha);
    assert!((local - expected).abs() < 1e-10 * expected.abs(), "{local} vs {expected}");
}
