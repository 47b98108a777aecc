//! Array-based transcription of the merge algorithm with real-valued interval
//! starts, used as an independent oracle for the stepper's fast schemes.

use fracfast_core::caputo::gamma;
use fracfast_core::{CaputoStepper, KernelPolynomial, SchemeConfig};

fn data(t: f64) -> f64 {
    (2.0 * t).sin() + t * t * t + 0.5
}

/// Interval starts `I_1..I_M` (newest first) with `I_0 = t_{n-1}` implied.
struct Literal {
    starts: Vec<f64>,
    ntau: usize,
}

impl Literal {
    fn advance(&mut self, t_nm2: f64, t_nm1: f64) {
        self.starts.insert(0, t_nm2);
        loop {
            let mut bounds = vec![t_nm1];
            bounds.extend(&self.starts);
            let lens: Vec<f64> = bounds.windows(2).map(|w| w[0] - w[1]).collect();
            let run = 2 * self.ntau - 1;
            let found = (0..lens.len().saturating_sub(run - 1)).find(|&i0| {
                lens[i0 + 1..i0 + run]
                    .iter()
                    .all(|l| (l - lens[i0]).abs() < 1e-9 * lens[i0])
            });
            let Some(i0) = found else { break };
            // drop starts I_{i0+N}..I_{i0+2N-2}
            let j = i0 + self.ntau;
            self.starts.drain(j - 1..j - 1 + self.ntau - 1);
        }
    }

    fn intervals(&self, t_nm1: f64) -> Vec<(f64, f64)> {
        let mut bounds = vec![t_nm1];
        bounds.extend(&self.starts);
        bounds.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// `int_a^b (Pi_1 u)' ((tau - mid) / half)^k dtau` from the step differences.
fn moment(u: &[f64], h: f64, a: f64, b: f64, k: i32) -> f64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let (ja, jb) = ((a / h).round() as usize, (b / h).round() as usize);
    (ja + 1..=jb)
        .map(|j| {
            let (lo, hi) = ((j - 1) as f64 * h, j as f64 * h);
            let p = |x: f64| ((x - mid) / half).powi(k + 1);
            (u[j] - u[j - 1]) / h * half / (k + 1) as f64 * (p(hi) - p(lo))
        })
        .sum()
}

fn literal_values(alpha: f64, ntau: usize, kernel: Option<&KernelPolynomial>, h: f64, steps: usize) -> Vec<f64> {
    let u: Vec<f64> = (0..=steps).map(|j| data(j as f64 * h)).collect();
    let mut ledger = Literal { starts: Vec::new(), ntau };
    let mut out = Vec::new();
    for n in 1..=steps {
        let tn = n as f64 * h;
        if n >= 2 {
            ledger.advance((n - 2) as f64 * h, (n - 1) as f64 * h);
        }
        let local = h.powf(-alpha) / gamma(2.0 - alpha) * (u[n] - u[n - 1]);
        let mut hist = 0.0;
        for (a, b) in ledger.intervals((n - 1) as f64 * h) {
            hist += match kernel {
                None => {
                    let kint = ((tn - a).powf(1.0 - alpha) - (tn - b).powf(1.0 - alpha)) / (1.0 - alpha);
                    moment(&u, h, a, b, 0) / (b - a) * kint / gamma(1.0 - alpha)
                }
                Some(k) => {
                    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
                    let d = tn - mid;
                    k.weights()
                        .iter()
                        .enumerate()
                        .map(|(i, w)| {
                            w * (half / d).powi(i as i32) * d.powf(-alpha) / gamma(1.0 - alpha)
                                * moment(&u, h, a, b, i as i32)
                        })
                        .sum::<f64>()
                }
            };
        }
        out.push(local + hist);
    }
    out
}

fn stepper_values(config: &SchemeConfig, h: f64, steps: usize) -> Vec<f64> {
    let mut st = CaputoStepper::new(config, h, 1).unwrap();
    st.push(&[data(0.0)]).unwrap();
    let mut r = [0.0];
    let mut out = Vec::new();
    for n in 1..=steps {
        let un = data(n as f64 * h);
        st.explicit_part(n, &mut r).unwrap();
        out.push(st.leading(n) * un + r[0]);
        st.push(&[un]).unwrap();
    }
    out
}

#[test]
fn literal_boundaries_at_step_ten() {
    let mut l = Literal { starts: Vec::new(), ntau: 2 };
    for n in 2..=10 {
        l.advance((n - 2) as f64 * 0.1, (n - 1) as f64 * 0.1);
    }
    let got: Vec<f64> = l.starts.iter().map(|s| (s * 10.0).round()).collect();
    assert_eq!(got, vec![8.0, 6.0, 4.0, 0.0]);
}

#[test]
fn faom_matches_literal_transcription() {
    for (alpha, ntau) in [(0.5, 2), (0.1, 2), (0.9, 3)] {
        let h = 1.0 / 160.0;
        let lit = literal_values(alpha, ntau, None, h, 160);
        let fast = stepper_values(&SchemeConfig::faom(alpha, ntau), h, 160);
        for (n, (a, b)) in lit.iter().zip(&fast).enumerate() {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "alpha={alpha} n={}: {a} vs {b}", n + 1);
        }
    }
}

#[test]
fn faom_pk_matches_literal_transcription() {
    for (alpha, ntau, k) in [(0.5, 2, 4), (0.25, 3, 6)] {
        let h = 1.0 / 200.0;
        let config = SchemeConfig::faom_pk(alpha, fracfast_core::Interp::Linear, ntau, k).unwrap();
        let kernel = KernelPolynomial::new(alpha, k).unwrap();
        let lit = literal_values(alpha, ntau, Some(&kernel), h, 200);
        let fast = stepper_values(&config, h, 200);
        for (n, (a, b)) in lit.iter().zip(&fast).enumerate() {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "alpha={alpha} n={}: {a} vs {b}", n + 1);
        }
    }
}
