//! Invariant suite run by `--experiment props`.

use fracfast_core::bench::experiments::{table_row, CheckOutcome, Method};
use fracfast_core::bench::problems::{linear_in_time, ProblemId};
use fracfast_core::caputo::{
    build_payload, caputo_power_oracle, direct_l1, faompk_gap_bound, interpolant_slope_max,
};
use fracfast_core::history::length_bounds;
use fracfast_core::kernel::KernelPolynomial;
use fracfast_core::pde::{run, GridSpec, RunOptions, SpatialKind};
use fracfast_core::{CaputoStepper, HistoryLedger, Interp, MomentPayload, SchemeConfig};

use crate::error::CliError;

const ALPHAS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Steps the ledger structure check is driven to.
pub const LEDGER_STEPS: usize = 1 << 17;

fn outcome(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Runs every property; `ntau` restricts the ledger checks to one merge arity.
pub fn run_suite(ntau: Option<usize>) -> Result<Vec<CheckOutcome>, CliError> {
    let ntaus = ntau.map_or(vec![2, 3], |n| vec![n]);
    let mut out = Vec::new();
    out.extend(kernel_invariants()?);
    for &nt in &ntaus {
        out.push(ledger_structure(nt, LEDGER_STEPS));
        out.push(recombination(nt)?);
    }
    out.push(boundary_example());
    out.extend(linear_exactness()?);
    out.extend(gap_bounds()?);
    out.extend(manufactured()?);
    out.push(linearity()?);
    out.push(determinism()?);
    Ok(out)
}

fn kernel_invariants() -> Result<Vec<CheckOutcome>, CliError> {
    let mut out = Vec::new();
    for alpha in ALPHAS {
        let mut problems = Vec::new();
        let mut prev = f64::INFINITY;
        for k in 0..=12 {
            let p = KernelPolynomial::new(alpha, k)?;
            let w = p.weights();
            if w[0] != 1.0 || w.windows(2).any(|p| !(p[1] > 0.0 && p[1] < p[0])) {
                problems.push(format!("weights K={k}"));
            }
            if p.eps() > prev {
                problems.push(format!("eps grows at K={k}"));
            }
            prev = p.eps();
        }
        out.push(outcome(
            format!("kernel alpha={alpha} weights and eps monotone"),
            problems.is_empty(),
            if problems.is_empty() { "K = 0..12".to_string() } else { problems.join("; ") },
        ));
    }
    for (k, decade) in [(4, -3), (9, -6)] {
        let eps = KernelPolynomial::new(0.5, k)?.eps();
        out.push(outcome(
            format!("kernel alpha=0.5 K={k} eps magnitude"),
            eps.log10().floor() as i32 == decade,
            format!("eps {eps:.3e}, expected in [1e{decade}, 1e{})", decade + 1),
        ));
    }
    Ok(out)
}

fn scalar_ledger(ntau: usize, degree: usize) -> HistoryLedger {
    HistoryLedger::new(0.1, ntau, degree, 1).expect("valid ledger parameters")
}

fn ledger_structure(ntau: usize, steps: usize) -> CheckOutcome {
    let mut ledger = scalar_ledger(ntau, 0);
    let mut max_len = 0;
    for n in 2..=steps {
        if let Err(e) = ledger.advance(MomentPayload::zeros(0, 1)) {
            return outcome(format!("ledger Ntau={ntau} structure"), false, e.to_string());
        }
        if let Err(v) = ledger.check_structure() {
            return outcome(format!("ledger Ntau={ntau} structure"), false, format!("step {n}: {v}"));
        }
        max_len = max_len.max(ledger.len());
    }
    let (_, upper) = length_bounds(steps, ntau);
    outcome(
        format!("ledger Ntau={ntau} structure"),
        true,
        format!("{steps} steps, max M_n {max_len} (cap {upper:.2} at the last step)"),
    )
}

/// Boundaries `{0, 0.4, 0.6, 0.8, 0.9}` at `n = 10`, `h = 0.1`, `Ntau = 2`.
fn boundary_example() -> CheckOutcome {
    let mut ledger = scalar_ledger(2, 0);
    for _ in 2..=10 {
        ledger.advance(MomentPayload::zeros(0, 1)).expect("scalar payload");
    }
    let steps = ledger.boundary_steps();
    outcome(
        "ledger boundaries at n=10",
        steps == [9, 8, 6, 4, 0],
        format!("boundaries {:?} x h", steps),
    )
}

fn data(t: f64) -> f64 {
    (3.0 * t).sin() + 0.5 * t * t
}

/// `int_a^b (Pi_1 u)' ((tau - mid) / half)^k dtau` over whole steps `[a, b]`.
fn direct_moment(u: &[f64], a: u64, b: u64, k: i32) -> f64 {
    let (mid, half) = ((a + b) as f64 / 2.0, (b - a) as f64 / 2.0);
    (a + 1..=b)
        .map(|j| {
            let p = |x: f64| ((x - mid) / half).powi(k + 1);
            (u[j as usize] - u[j as usize - 1]) * half / (k + 1) as f64
                * (p(j as f64) - p((j - 1) as f64))
        })
        .sum()
}

/// Stored moments match direct integration over the merged intervals.
fn recombination(ntau: usize) -> Result<CheckOutcome, CliError> {
    let (h, degree, steps) = (0.01, 6, 600);
    let u: Vec<f64> = (0..=steps).map(|j| data(j as f64 * h)).collect();
    let mut ledger = scalar_ledger(ntau, degree);
    let mut worst: f64 = 0.0;
    for n in 2..=steps {
        ledger.advance(build_payload(&u[n - 2..n], h, Interp::Linear, degree)?)?;
        for (hi, lo, p) in ledger.intervals() {
            let m = p.scalar_moments();
            for (k, v) in m.iter().enumerate() {
                let d = direct_moment(&u, lo, hi, k as i32);
                worst = worst.max((v - d).abs() / d.abs().max(1e-3));
            }
        }
    }
    Ok(outcome(
        format!("recombination Ntau={ntau} K={degree}"),
        worst <= 1e-12,
        format!("worst relative gap {worst:.2e} over {steps} steps"),
    ))
}

/// `explicit_part + leading * u^n` at every step of a scalar run.
fn stepper_values(config: &SchemeConfig, h: f64, u: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut st = CaputoStepper::new(config, h, 1)?;
    st.push(&u[..1])?;
    let mut r = [0.0];
    let mut out = Vec::with_capacity(u.len() - 1);
    for n in 1..u.len() {
        st.explicit_part(n, &mut r)?;
        out.push(st.leading(n) * u[n] + r[0]);
        st.push(&u[n..=n])?;
    }
    Ok(out)
}

fn linear_exactness() -> Result<Vec<CheckOutcome>, CliError> {
    let (h, steps) = (1.0 / 64.0, 64);
    let u: Vec<f64> = (0..=steps).map(|j| j as f64 * h).collect();
    let mut worst_l1: f64 = 0.0;
    let mut worst_faom: f64 = 0.0;
    for alpha in ALPHAS {
        let faom = stepper_values(&SchemeConfig::faom(alpha, 2), h, &u)?;
        for n in 1..=steps {
            let exact = caputo_power_oracle(1.0, alpha, n as f64 * h)?;
            worst_l1 = worst_l1.max((direct_l1(&u[..=n], alpha, h)? - exact).abs() / exact);
            worst_faom = worst_faom.max((faom[n - 1] - exact).abs() / exact);
        }
    }
    Ok(vec![
        outcome("L1 exact on linear data", worst_l1 <= 1e-12, format!("worst relative gap {worst_l1:.2e}")),
        outcome("FAOM exact on linear data", worst_faom <= 1e-12, format!("worst relative gap {worst_faom:.2e}")),
    ])
}

/// `|FAOM-PK - direct| <= eps_K bound` at every step for `u = t^{3+alpha} e^{-t}`.
fn gap_bounds() -> Result<Vec<CheckOutcome>, CliError> {
    let (h, steps) = (1.0 / 160.0, 160);
    let mut out = Vec::new();
    for (interp, degree) in [(Interp::Linear, 4), (Interp::Quadratic, 9)] {
        let mut failures = Vec::new();
        let mut tightest: f64 = 0.0;
        for alpha in ALPHAS {
            let u: Vec<f64> = (0..=steps)
                .map(|j| {
                    let t = j as f64 * h;
                    t.powf(3.0 + alpha) * (-t).exp()
                })
                .collect();
            let direct = match interp {
                Interp::Linear => SchemeConfig::l1(alpha),
                Interp::Quadratic => SchemeConfig::l12(alpha),
            };
            let fast = SchemeConfig::faom_pk(alpha, interp, 2, degree)?;
            let kernel = KernelPolynomial::new(alpha, degree)?;
            let d = stepper_values(&direct, h, &u)?;
            let mut st = CaputoStepper::new(&fast, h, 1)?;
            st.push(&u[..1])?;
            let mut r = [0.0];
            for n in 1..=steps {
                st.explicit_part(n, &mut r)?;
                let value = st.leading(n) * u[n] + r[0];
                let bound = match st.ledger() {
                    Some(l) if n >= 2 => {
                        faompk_gap_bound(l, &kernel, interpolant_slope_max(&u[..n], h, interp))
                    }
                    _ => 0.0,
                };
                let gap = (value - d[n - 1]).abs();
                if gap > bound + 1e-13 * d[n - 1].abs().max(1.0) {
                    failures.push(format!("alpha={alpha} n={n}: {gap:.3e} > {bound:.3e}"));
                } else if bound > 0.0 {
                    tightest = tightest.max(gap / bound);
                }
                st.push(&u[n..=n])?;
            }
        }
        out.push(outcome(
            format!("FAOM-P{degree} gap within eps_K bound"),
            failures.is_empty(),
            if failures.is_empty() {
                format!("largest gap/bound {tightest:.3}")
            } else {
                failures.join("; ")
            },
        ));
    }
    Ok(out)
}

/// `(1+t)(1+x+x^2)` is reproduced to rounding by the schemes with exact kernel integrals.
fn manufactured() -> Result<Vec<CheckOutcome>, CliError> {
    let grid = GridSpec::new(0.0, 1.0, 16, 0.05, 20)?;
    let mut out = Vec::new();
    for (method, spatial) in [
        (Method::L1, SpatialKind::Central2),
        (Method::Faom, SpatialKind::Central2),
        (Method::L12, SpatialKind::Compact4),
        (Method::L12, SpatialKind::Central2),
    ] {
        let alpha = 0.5;
        let rec = run(&linear_in_time(alpha), grid, &method.config(alpha, 2, None)?, spatial, RunOptions::default())?;
        let worst = rec.step_errors.iter().copied().fold(0.0, f64::max);
        out.push(outcome(
            format!("manufactured linear-in-time solution, {} {spatial:?}", method.name()),
            worst <= 1e-10,
            format!("max error {worst:.2e}"),
        ));
    }
    Ok(out)
}

/// Every evaluator is linear in its samples.
fn linearity() -> Result<CheckOutcome, CliError> {
    let (h, steps, alpha) = (0.02, 80, 0.4);
    let a: Vec<f64> = (0..=steps).map(|j| data(j as f64 * h)).collect();
    let b: Vec<f64> = (0..=steps).map(|j| (j as f64 * h).sqrt() - 0.3).collect();
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - 2.5 * y).collect();
    let mut worst: f64 = 0.0;
    for m in Method::ALL {
        let c = m.config(alpha, 2, None)?;
        let (va, vb, vs) = (stepper_values(&c, h, &a)?, stepper_values(&c, h, &b)?, stepper_values(&c, h, &sum)?);
        for n in 0..steps {
            let lin = va[n] - 2.5 * vb[n];
            worst = worst.max((vs[n] - lin).abs() / va[n].abs().max(vb[n].abs()).max(1.0));
        }
    }
    Ok(outcome("evaluators linear in the samples", worst <= 1e-12, format!("worst relative gap {worst:.2e}")))
}

fn determinism() -> Result<CheckOutcome, CliError> {
    let grids = [
        GridSpec::new(0.0, std::f64::consts::PI, 64, 0.1, 10)?,
        GridSpec::new(0.0, std::f64::consts::PI, 64, 0.05, 20)?,
    ];
    let scheme = Method::FaomP4.config(0.5, 2, None)?;
    let row = || table_row(ProblemId::Logistic, 0.5, &grids, &scheme, SpatialKind::Central2, None);
    let (x, y) = (row()?, row()?);
    let same = x.iter().zip(&y).all(|(p, q)| {
        p.aggregate.map(f64::to_bits) == q.aggregate.map(f64::to_bits)
            && p.final_err.to_bits() == q.final_err.to_bits()
            && p.counters.flops == q.counters.flops
    });
    Ok(outcome("repeated table rows bitwise identical", same, "logistic, FAOM-P4, two grids"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_ledger_and_example() {
        assert!(ledger_structure(2, 5000).pass);
        assert!(ledger_structure(3, 5000).pass);
        assert!(boundary_example().pass);
    }

    #[test]
    fn recombination_is_exact() {
        let c = recombination(2).unwrap();
        assert!(c.pass, "{}", c.detail);
    }

    #[test]
    fn direct_moment_of_linear_data() {
        // unit slope: zeroth moment is the length, odd moments vanish
        let u: Vec<f64> = (0..=6).map(|j| j as f64).collect();
        assert_eq!(direct_moment(&u, 2, 6, 0), 4.0);
        assert!(direct_moment(&u, 2, 6, 1).abs() < 1e-15);
    }
}
