use approx::assert_relative_eq;
use fracfast_core::caputo::{
    build_payload, caputo_power_oracle, cutoff_eval, direct_l1, direct_l12, faom_eval,
    faompk_eval, gamma, local_coefficients,
};
use fracfast_core::{CaputoStepper, HistoryLedger, Interp, KernelPolynomial, SchemeConfig};

fn field(t: f64, i: usize) -> f64 {
    let phase = i as f64 * 0.7;
    t.powf(1.5) * (1.0 + 0.1 * phase) + (3.0 * t + phase).sin()
}

/// Runs a stepper on prescribed data and returns the discrete derivative at every step.
fn stepper_values(config: &SchemeConfig, h: f64, steps: usize, width: usize) -> Vec<Vec<f64>> {
    stepper_on(config, h, steps, width, field)
}

fn stepper_on(
    config: &SchemeConfig,
    h: f64,
    steps: usize,
    width: usize,
    field: impl Fn(f64, usize) -> f64,
) -> Vec<Vec<f64>> {
    let mut st = CaputoStepper::new(config, h, width).unwrap();
    let u0: Vec<f64> = (0..width).map(|i| field(0.0, i)).collect();
    st.push(&u0).unwrap();
    let mut out = Vec::new();
    let mut r = vec![0.0; width];
    for n in 1..=steps {
        let un: Vec<f64> = (0..width).map(|i| field(n as f64 * h, i)).collect();
        st.explicit_part(n, &mut r).unwrap();
        let a = st.leading(n);
        out.push(un.iter().zip(&r).map(|(u, r)| a * u + r).collect());
        st.push(&un).unwrap();
    }
    out
}

fn scalar_samples(h: f64, n: usize, i: usize) -> Vec<f64> {
    (0..=n).map(|j| field(j as f64 * h, i)).collect()
}

#[test]
fn direct_stepper_matches_scalar_sums() {
    let (h, steps, width) = (0.01, 140, 3);
    let l1 = stepper_values(&SchemeConfig::l1(0.3), h, steps, width);
    let l12 = stepper_values(&SchemeConfig::l12(0.7), h, steps, width);
    let cut = stepper_values(&SchemeConfig::cutoff(0.5, 7), h, steps, width);
    for n in 1..=steps {
        for i in 0..width {
            let s = scalar_samples(h, n, i);
            let tol = 1e-11;
            assert_relative_eq!(l1[n - 1][i], direct_l1(&s, 0.3, h).unwrap(), max_relative = tol);
            assert_relative_eq!(l12[n - 1][i], direct_l12(&s, 0.7, h).unwrap(), max_relative = tol);
            assert_relative_eq!(
                cut[n - 1][i],
                cutoff_eval(&s, 0.5, h, 7).unwrap(),
                max_relative = tol
            );
        }
    }
}

fn scalar_fast(config: &SchemeConfig, h: f64, steps: usize, i: usize) -> Vec<f64> {
    let degree = config.degree();
    let mut ledger = HistoryLedger::new(h, config.ntau, degree, 1).unwrap();
    let s = scalar_samples(h, steps, i);
    let mut out = Vec::new();
    for n in 1..=steps {
        if n >= 2 {
            let lo = if config.interp == Interp::Quadratic && n >= 3 { n - 3 } else { n - 2 };
            let payload = build_payload(&s[lo..n], h, config.interp, degree).unwrap();
            ledger.advance(payload).unwrap();
        }
        let loc = local_coefficients(config.alpha, h, config.interp, n);
        let local = loc.apply(s[n], s[n - 1], if n >= 2 { s[n - 2] } else { 0.0 });
        let v = match &config.kernel {
            Some(k) => faompk_eval(&ledger, local, k).unwrap(),
            None => faom_eval(&ledger, local, config.alpha),
        };
        out.push(v);
    }
    out
}

#[test]
fn fast_stepper_matches_scalar_ledger() {
    let (h, steps, width) = (0.01, 90, 2);
    let configs = [
        SchemeConfig::faom(0.4, 2),
        SchemeConfig::faom(0.6, 3),
        SchemeConfig::faom_pk(0.5, Interp::Linear, 2, 4).unwrap(),
        SchemeConfig::faom_pk(0.2, Interp::Quadratic, 3, 9).unwrap(),
    ];
    for c in &configs {
        let vec = stepper_values(c, h, steps, width);
        for i in 0..width {
            let sc = scalar_fast(c, h, steps, i);
            for n in 0..steps {
                assert_relative_eq!(vec[n][i], sc[n], max_relative = 1e-11, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn fast_schemes_track_direct_ones() {
    let (h, steps) = (1.0 / 200.0, 200);
    let l1 = stepper_values(&SchemeConfig::l1(0.5), h, steps, 1);
    let l12 = stepper_values(&SchemeConfig::l12(0.5), h, steps, 1);
    let p4 = stepper_values(&SchemeConfig::faom_pk(0.5, Interp::Linear, 2, 4).unwrap(), h, steps, 1);
    let p9 =
        stepper_values(&SchemeConfig::faom_pk(0.5, Interp::Quadratic, 2, 9).unwrap(), h, steps, 1);
    let k4 = KernelPolynomial::new(0.5, 4).unwrap().eps();
    for n in 0..steps {
        // perturbation bounded by eps times the total variation scale
        assert!((p4[n][0] - l1[n][0]).abs() < 10.0 * k4, "n={n}");
        assert!((p9[n][0] - l12[n][0]).abs() < 1e-4, "n={n}");
    }
}

#[test]
fn l1_converges_on_power_function() {
    // t^2: L1 error O(h^{2-alpha}), L1-2 error O(h^{3-alpha})
    let alpha = 0.5;
    let exact = caputo_power_oracle(2.0, alpha, 1.0).unwrap();
    let err = |n: usize, quad: bool| {
        let h = 1.0 / n as f64;
        let s: Vec<f64> = (0..=n).map(|j| (j as f64 * h).powi(2)).collect();
        let v = if quad { direct_l12(&s, alpha, h) } else { direct_l1(&s, alpha, h) };
        (v.unwrap() - exact).abs()
    };
    let r1 = (err(64, false) / err(128, false)).log2();
    let r2 = (err(64, true) / err(128, true)).log2();
    assert!((r1 - 1.5).abs() < 0.05, "{r1}");
    assert!(r2 > 2.3, "{r2}");
}

#[test]
fn quadrature_oracle_for_faompk() {
    // FAOM-PK on exact linear data: history integrand is a constant slope, so the
    // stored moments are exact and only the kernel truncation remains.
    let alpha = 0.5;
    let h = 1.0 / 64.0;
    let n = 64;
    let s: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let config = SchemeConfig::faom_pk(alpha, Interp::Linear, 2, 9).unwrap();
    let v = stepper_on(&config, h, n, 1, |t, _| t);
    let exact = 1.0 / gamma(2.0 - alpha);
    assert!((v[n - 1][0] - exact).abs() < 1e-5);
    assert_relative_eq!(direct_l1(&s, alpha, h).unwrap(), exact, max_relative = 1e-12);
}
