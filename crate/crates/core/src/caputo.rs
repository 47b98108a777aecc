//! Discrete Caputo derivative of order `alpha in (0,1)` on a uniform grid `t_n = n h`.
//!
//! `D u(t_n) = 1/Gamma(1-alpha) * int_0^{t_n} (Pi u)'(tau) (t_n - tau)^(-alpha) dtau`, where
//! `Pi u` is the piecewise linear (J=1) or piecewise quadratic (J=2, linear on the
//! first interval) interpolant. The integral over `[t_{n-1}, t_n]` is the local part;
//! the rest is the history part, evaluated either directly, over a truncated window,
//! or through a compressed [`HistoryLedger`].
//!
//! All interval integrals are evaluated in closed form.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::history::{HistoryLedger, MergeEvent, MomentPayload};
use crate::kernel::KernelPolynomial;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Interpolation order of `Pi u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interp {
    Linear,
    Quadratic,
}

impl Interp {
    pub fn order(self) -> usize {
        match self {
            Interp::Linear => 1,
            Interp::Quadratic => 2,
        }
    }

    pub fn from_order(j: usize) -> Result<Self> {
        match j {
            1 => Ok(Interp::Linear),
            2 => Ok(Interp::Quadratic),
            _ => Err(Error::Config(format!("interpolation order must be 1 or 2, got {j}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    L1Direct,
    L12Direct,
    Cutoff,
    Faom,
    FaomPk,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::L1Direct => "L1",
            SchemeKind::L12Direct => "L1-2",
            SchemeKind::Cutoff => "cutoff",
            SchemeKind::Faom => "FAOM",
            SchemeKind::FaomPk => "FAOM-PK",
        }
    }

    pub fn is_fast(self) -> bool {
        matches!(self, SchemeKind::Faom | SchemeKind::FaomPk)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub alpha: f64,
    pub interp: Interp,
    pub kind: SchemeKind,
    pub ntau: usize,
    pub sbar: usize,
    pub kernel: Option<KernelPolynomial>,
}

impl SchemeConfig {
    fn base(alpha: f64, interp: Interp, kind: SchemeKind) -> Self {
        SchemeConfig {
            alpha,
            interp,
            kind,
            ntau: 2,
            sbar: 10,
            kernel: None,
        }
    }

    pub fn l1(alpha: f64) -> Self {
        Self::base(alpha, Interp::Linear, SchemeKind::L1Direct)
    }

    pub fn l12(alpha: f64) -> Self {
        Self::base(alpha, Interp::Quadratic, SchemeKind::L12Direct)
    }

    pub fn cutoff(alpha: f64, sbar: usize) -> Self {
        SchemeConfig {
            sbar,
            ..Self::base(alpha, Interp::Linear, SchemeKind::Cutoff)
        }
    }

    pub fn faom(alpha: f64, ntau: usize) -> Self {
        SchemeConfig {
            ntau,
            ..Self::base(alpha, Interp::Linear, SchemeKind::Faom)
        }
    }

    /// FAOM-PK with a freshly certified Taylor kernel of the given degree.
    pub fn faom_pk(alpha: f64, interp: Interp, ntau: usize, degree: usize) -> Result<Self> {
        Ok(SchemeConfig {
            ntau,
            kernel: Some(KernelPolynomial::new(alpha, degree)?),
            ..Self::base(alpha, interp, SchemeKind::FaomPk)
        })
    }

    /// The customary pairing: K = 4 for J = 1, K = 9 for J = 2.
    pub fn default_degree(interp: Interp) -> usize {
        match interp {
            Interp::Linear => 4,
            Interp::Quadratic => 9,
        }
    }

    /// Kernel degree stored per subinterval (0 for FAOM and the direct schemes).
    pub fn degree(&self) -> usize {
        self.kernel.as_ref().map_or(0, |k| k.degree())
    }

    /// Short label, e.g. `FAOM-P4`.
    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::FaomPk => format!("FAOM-P{}", self.degree()),
            k => k.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        match self.kind {
            SchemeKind::L1Direct | SchemeKind::Cutoff if self.interp != Interp::Linear => {
                return Err(Error::Config(format!("{} requires J = 1", self.kind.name())));
            }
            SchemeKind::L12Direct if self.interp != Interp::Quadratic => {
                return Err(Error::Config("L1-2 requires J = 2".into()));
            }
            SchemeKind::Cutoff if self.sbar < 1 => {
                return Err(Error::Config("cut-off window must be >= 1".into()));
            }
            SchemeKind::Faom | SchemeKind::FaomPk if self.ntau < 2 => {
                return Err(Error::Config(format!("ntau must be >= 2, got {}", self.ntau)));
            }
            SchemeKind::FaomPk => match &self.kernel {
                None => return Err(Error::Config("FAOM-PK requires a kernel polynomial".into())),
                Some(k) if (k.alpha() - self.alpha).abs() > 0.0 => {
                    return Err(Error::Config("kernel alpha does not match scheme alpha".into()));
                }
                _ => {}
            },
            _ => {}
        }
        Ok(())
    }
}

/// Coefficients of `u^n, u^{n-1}, u^{n-2}` in the local part, units of time^(-alpha).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub a_n: f64,
    pub a_n1: f64,
    pub a_n2: f64,
}

impl LocalCoefficients {
    pub fn apply(&self, u_n: f64, u_n1: f64, u_n2: f64) -> f64 {
        self.a_n * u_n + self.a_n1 * u_n1 + self.a_n2 * u_n2
    }
}

/// `beta_k = (k+1)^{1-alpha} - k^{1-alpha}` without cancellation.
fn beta(alpha: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    let p = 1.0 - alpha;
    kf.powf(p) * (p * (1.0 / kf).ln_1p()).exp_m1()
}

/// `gamma_k = int_k^{k+1} (k + 1/2 - s) s^{-alpha} ds`.
fn gamma_moment(alpha: f64, k: usize) -> f64 {
    let kf = k as f64;
    if k < 8 {
        let p = 1.0 - alpha;
        let q = 2.0 - alpha;
        (kf + 0.5) * beta(alpha, k) / p - ((kf + 1.0).powf(q) - kf.powf(q)) / q
    } else {
        // expand s^{-alpha} about the midpoint m; only odd powers survive
        let m = kf + 0.5;
        let inv_m2 = 1.0 / (m * m);
        let mut w = alpha; // (alpha)_p / p! at p = 1
        let mut mp = 1.0 / m;
        let mut half = 0.25; // 2^{-(p+1)}
        let mut sum = 0.0;
        let mut p = 1usize;
        loop {
            let term = w * mp * half / (p as f64 + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() || p > 60 {
                break;
            }
            let pf = p as f64;
            w *= (alpha + pf) * (alpha + pf + 1.0) / ((pf + 1.0) * (pf + 2.0));
            mp *= inv_m2;
            half *= 0.25;
            p += 2;
        }
        m.powf(-alpha) * sum
    }
}

/// `int_{A}^{B} s^{-alpha} ds * (1-alpha) = B^{1-alpha} - A^{1-alpha}` for `0 <= A < B`.
fn power_difference(p: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b.powf(p)
    } else {
        a.powf(p) * (p * ((b - a) / a).ln_1p()).exp_m1()
    }
}

/// Scaled per-interval weights for a uniform step `h`.
///
/// `b[k]` multiplies `u^j - u^{j-1}` and `c[k]` multiplies `u^j - 2u^{j-1} + u^{j-2}`
/// for the interval `[t_{j-1}, t_j]` at distance `k = n - j` from the evaluation point.
#[derive(Debug, Clone)]
pub struct StepWeights {
    alpha: f64,
    b_scale: f64,
    c_scale: f64,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl StepWeights {
    pub fn new(alpha: f64, h: f64) -> Self {
        let ha = h.powf(-alpha);
        StepWeights {
            alpha,
            b_scale: ha / gamma(2.0 - alpha),
            c_scale: ha / gamma(1.0 - alpha),
            b: Vec::new(),
            c: Vec::new(),
        }
    }

    pub fn ensure(&mut self, kmax: usize) {
        while self.b.len() <= kmax {
            let k = self.b.len();
            self.b.push(self.b_scale * beta(self.alpha, k));
            self.c.push(self.c_scale * gamma_moment(self.alpha, k));
        }
    }

    #[inline]
    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    #[inline]
    pub fn c(&self, k: usize) -> f64 {
        self.c[k]
    }
}

/// Local-part coefficients at step `n`.
pub fn local_coefficients(alpha: f64, h: f64, interp: Interp, n: usize) -> LocalCoefficients {
    let c1 = h.powf(-alpha) / gamma(2.0 - alpha);
    if interp == Interp::Quadratic && n >= 2 {
        let c2 = h.powf(-alpha) * alpha
            / (2.0 * (1.0 - alpha) * (2.0 - alpha) * gamma(1.0 - alpha));
        LocalCoefficients {
            a_n: c1 + c2,
            a_n1: -c1 - 2.0 * c2,
            a_n2: c2,
        }
    } else {
        LocalCoefficients {
            a_n: c1,
            a_n1: -c1,
            a_n2: 0.0,
        }
    }
}

fn check_samples(samples: &[f64], alpha: f64, h: f64) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::Domain("need samples u^0..u^n with n >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    Ok(samples.len() - 1)
}

/// L1 sum over the intervals `first..=n`.
fn l1_window(samples: &[f64], alpha: f64, h: f64, first: usize) -> f64 {
    let n = samples.len() - 1;
    let tn = n as f64 * h;
    let p = 1.0 - alpha;
    let sum: f64 = (first..=n)
        .map(|j| {
            let slope = (samples[j] - samples[j - 1]) / h;
            let upper = (tn - (j - 1) as f64 * h).powf(p);
            let lower = (tn - j as f64 * h).max(0.0).powf(p);
            slope * (upper - lower) / p
        })
        .sum();
    sum / gamma(1.0 - alpha)
}

/// Direct L1 approximation of the Caputo derivative at `t_n` from `u^0..u^n`.
pub fn direct_l1(samples: &[f64], alpha: f64, h: f64) -> Result<f64> {
    check_samples(samples, alpha, h)?;
    Ok(l1_window(samples, alpha, h, 1))
}

/// Direct L1-2 approximation; the first interval uses the linear interpolant.
pub fn direct_l12(samples: &[f64], alpha: f64, h: f64) -> Result<f64> {
    let n = check_samples(samples, alpha, h)?;
    let tn = n as f64 * h;
    let p = 1.0 - alpha;
    let q = 2.0 - alpha;
    let mut sum = 0.0;
    for j in 1..=n {
        let big = tn - (j - 1) as f64 * h;
        let small = (tn - j as f64 * h).max(0.0);
        let slope = (samples[j] - samples[j - 1]) / h;
        sum += slope * (big.powf(p) - small.powf(p)) / p;
        if j >= 2 {
            let curv = (samples[j] - 2.0 * samples[j - 1] + samples[j - 2]) / (h * h);
            let mid = small + 0.5 * h;
            let lin = mid * (big.powf(p) - small.powf(p)) / p - (big.powf(q) - small.powf(q)) / q;
            sum += curv * lin;
        }
    }
    Ok(sum / gamma(1.0 - alpha))
}

/// L1 sum restricted to the newest `sbar` intervals.
pub fn cutoff_eval(samples: &[f64], alpha: f64, h: f64, sbar: usize) -> Result<f64> {
    let n = check_samples(samples, alpha, h)?;
    if sbar < 1 {
        return Err(Error::Config("cut-off window must be >= 1".into()));
    }
    let j0 = n.saturating_sub(sbar);
    Ok(l1_window(samples, alpha, h, j0 + 1))
}

/// Moments of `(Pi u)'` on the newest completed interval `[t_{n-2}, t_{n-1}]`.
///
/// `samples` are chronological: `[u^{n-2}, u^{n-1}]`, or `[u^{n-3}, u^{n-2}, u^{n-1}]`
/// for the quadratic interpolant. Two samples with `Interp::Quadratic` denote the
/// first interval, where the interpolant is linear.
pub fn build_payload(samples: &[f64], h: f64, interp: Interp, degree: usize) -> Result<MomentPayload> {
    let _ = h;
    let (first, prev, newest) = match (interp, samples) {
        (_, [a, b]) => (None, *a, *b),
        (Interp::Quadratic, [z, a, b]) => (Some(*z), *a, *b),
        (Interp::Linear, [_, a, b]) => (None, *a, *b),
        _ => {
            return Err(Error::Domain(format!(
                "insufficient samples for J={}: got {}",
                interp.order(),
                samples.len()
            )))
        }
    };
    let mut payload = MomentPayload::zeros(degree, 1);
    fill_moments(
        &mut payload,
        &[newest],
        &[prev],
        first.as_ref().map(std::slice::from_ref),
    );
    Ok(payload)
}

/// Closed-form moments for vectors of nodal values; `oldest` is `u^{n-3}` when the
/// quadratic correction applies.
fn fill_moments(payload: &mut MomentPayload, newest: &[f64], prev: &[f64], oldest: Option<&[f64]>) {
    // int_{-1}^{1} x^k dx scaled: even k -> (u1 - u0)/(k+1); odd k -> second difference/(2(k+2))
    for k in 0..=payload.degree() {
        let m = payload.moment_mut(k);
        if k % 2 == 0 {
            let s = 1.0 / (k as f64 + 1.0);
            for ((dst, &a), &b) in m.iter_mut().zip(newest).zip(prev) {
                *dst = (a - b) * s;
            }
        } else if let Some(z) = oldest {
            let s = 1.0 / (2.0 * (k as f64 + 2.0));
            for (((dst, &a), &b), &c) in m.iter_mut().zip(newest).zip(prev).zip(z) {
                *dst = (a - 2.0 * b + c) * s;
            }
        } else {
            m.fill(0.0);
        }
    }
}

/// Adds the FAOM history term at step `ledger.step()` to `out`. Uses only `M_0`.
pub fn faom_history(ledger: &HistoryLedger, alpha: f64, out: &mut [f64]) -> u64 {
    let n = ledger.step() as f64;
    let h = ledger.h();
    let p = 1.0 - alpha;
    let scale = h.powf(-alpha) / gamma(2.0 - alpha);
    let mut flops = 0;
    for (hi, lo, payload) in ledger.intervals() {
        // average slope times exact kernel integral over [lo, hi]
        let len = (hi - lo) as f64;
        let w = scale * power_difference(p, n - hi as f64, n - lo as f64) / len;
        axpy(w, payload.moment(0), out);
        flops += out.len() as u64;
    }
    flops
}

/// Adds the FAOM-PK history term at step `ledger.step()` to `out`.
pub fn faompk_history(
    ledger: &HistoryLedger,
    kernel: &KernelPolynomial,
    out: &mut [f64],
) -> Result<u64> {
    if kernel.degree() != ledger.degree() {
        return Err(Error::Structure(format!(
            "kernel degree {} does not match payload degree {}",
            kernel.degree(),
            ledger.degree()
        )));
    }
    let alpha = kernel.alpha();
    let n = ledger.step() as f64;
    let inv_gamma = 1.0 / gamma(1.0 - alpha);
    let h = ledger.h();
    let mut flops = 0;
    let mut coef = vec![0.0; kernel.degree() + 1];
    for (hi, lo, payload) in ledger.intervals() {
        let mid = 0.5 * (hi + lo) as f64;
        let r = 0.5 * (hi - lo) as f64;
        let dist = (n - mid) * h;
        let ratio = r * h / dist;
        let mut wk = dist.powf(-alpha) * inv_gamma;
        for (c, &w) in coef.iter_mut().zip(kernel.weights()) {
            *c = w * wk;
            wk *= ratio;
        }
        combine(&coef, payload, out);
        flops += coef.len() as u64 * out.len() as u64;
    }
    Ok(flops)
}

/// Explicit bound on `|FAOM-PK - direct|` at step `ledger.step()`:
/// `eps_K / Gamma(1-alpha) * sum_i (I_{i-1} - I_i) (t_n - c_i)^{-alpha} * max_slope`,
/// with `c_i` the interval midpoints and `max_slope` a bound on `|(Pi u)'|`.
pub fn faompk_gap_bound(ledger: &HistoryLedger, kernel: &KernelPolynomial, max_slope: f64) -> f64 {
    let n = ledger.step() as f64;
    let h = ledger.h();
    let sum: f64 = ledger
        .intervals()
        .map(|(hi, lo, _)| {
            let mid = 0.5 * (hi + lo) as f64;
            (hi - lo) as f64 * h * ((n - mid) * h).powf(-kernel.alpha())
        })
        .sum();
    kernel.eps() / gamma(1.0 - kernel.alpha()) * sum * max_slope
}

/// `max |(Pi_J u)'|` over `[t_0, t_n]` for samples `u^0..u^n`. The slope is linear
/// on each step, so endpoint values suffice.
pub fn interpolant_slope_max(samples: &[f64], h: f64, interp: Interp) -> f64 {
    let mut m: f64 = 0.0;
    for j in 1..samples.len() {
        let d = samples[j] - samples[j - 1];
        if interp == Interp::Linear || j == 1 {
            m = m.max(d.abs() / h);
        } else {
            let half = 0.5 * (samples[j] - samples[j - 2]);
            let curv = samples[j] - 2.0 * samples[j - 1] + samples[j - 2];
            m = m.max(half.abs() / h).max((half + curv).abs() / h);
        }
    }
    m
}

/// `out += sum_k coef[k] * M_k`, two moments per sweep over `out`.
fn combine(coef: &[f64], payload: &MomentPayload, out: &mut [f64]) {
    let mut k = 0;
    while k + 1 < coef.len() {
        let (c0, c1) = (coef[k], coef[k + 1]);
        let (m0, m1) = (payload.moment(k), payload.moment(k + 1));
        for ((o, a), b) in out.iter_mut().zip(m0).zip(m1) {
            *o += c0 * a + c1 * b;
        }
        k += 2;
    }
    if k < coef.len() {
        axpy(coef[k], payload.moment(k), out);
    }
}

/// FAOM value at `t_n` from a scalar ledger and a precomputed local part.
pub fn faom_eval(ledger: &HistoryLedger, local: f64, alpha: f64) -> f64 {
    let mut out = [0.0];
    faom_history(ledger, alpha, &mut out);
    local + out[0]
}

/// FAOM-PK value at `t_n` from a scalar ledger and a precomputed local part.
pub fn faompk_eval(ledger: &HistoryLedger, local: f64, kernel: &KernelPolynomial) -> Result<f64> {
    let mut out = [0.0];
    faompk_history(ledger, kernel, &mut out)?;
    Ok(local + out[0])
}

/// Exact Caputo derivative of `t^p`: `Gamma(p+1)/Gamma(p+1-alpha) t^{p-alpha}`.
pub fn caputo_power_oracle(p: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got {p}")));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha))
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Work and storage counters of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerfCounters {
    /// Multiply-adds spent in history evaluation, merging and banded solves.
    pub flops: u64,
    /// Maximum number of stored history reals over the run.
    pub slots: usize,
    pub wall_ms: f64,
}

const BLOCK: usize = 64;

/// All past increments `u^j - u^{j-1}`, evaluated in time blocks: the contribution
/// of increments older than the block start is accumulated for the whole block at
/// once, the rest step by step.
#[derive(Debug)]
struct DirectStore {
    width: usize,
    diffs: Vec<f64>,
    block_start: usize,
    weights: Vec<f64>,
    far: Vec<f64>,
}

impl DirectStore {
    fn count(&self) -> usize {
        self.diffs.len() / self.width
    }

    fn diff(&self, j: usize) -> &[f64] {
        &self.diffs[(j - 1) * self.width..j * self.width]
    }
}

#[derive(Debug)]
enum Store {
    Direct(DirectStore),
    Cutoff { sbar: usize, diffs: VecDeque<Vec<f64>> },
    Ledger {
        ledger: HistoryLedger,
        kernel: Option<KernelPolynomial>,
    },
}

/// Time-stepping engine for a vector of nodal histories.
///
/// At step `n` the discrete derivative is `a_n u^n + R^n`, where `R^n` depends only on
/// `u^0..u^{n-1}`. Call [`explicit_part`](Self::explicit_part) for `R^n`, solve for
/// `u^n`, then [`push`](Self::push) it.
#[derive(Debug)]
pub struct CaputoStepper {
    alpha: f64,
    h: f64,
    interp: Interp,
    kind: SchemeKind,
    width: usize,
    weights: StepWeights,
    recent: VecDeque<Vec<f64>>,
    recorded: usize,
    store: Store,
    counters: PerfCounters,
    trace: Option<Vec<MergeEvent>>,
}

impl CaputoStepper {
    pub fn new(config: &SchemeConfig, h: f64, width: usize) -> Result<Self> {
        config.validate()?;
        if !(h > 0.0) || width == 0 {
            return Err(Error::Config("step size and width must be positive".into()));
        }
        let store = match config.kind {
            SchemeKind::L1Direct | SchemeKind::L12Direct => Store::Direct(DirectStore {
                width,
                diffs: Vec::new(),
                block_start: 0,
                weights: Vec::new(),
                far: Vec::new(),
            }),
            SchemeKind::Cutoff => Store::Cutoff {
                sbar: config.sbar,
                diffs: VecDeque::new(),
            },
            SchemeKind::Faom | SchemeKind::FaomPk => Store::Ledger {
                ledger: HistoryLedger::new(h, config.ntau, config.degree(), width)?,
                kernel: config.kernel.clone(),
            },
        };
        Ok(CaputoStepper {
            alpha: config.alpha,
            h,
            interp: config.interp,
            kind: config.kind,
            width,
            weights: StepWeights::new(config.alpha, h),
            recent: VecDeque::with_capacity(4),
            recorded: 0,
            store,
            counters: PerfCounters::default(),
            trace: None,
        })
    }

    /// Keep merge events for later inspection.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<MergeEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn counters(&self) -> &PerfCounters {
        &self.counters
    }

    /// Adds solve work to the flop counter.
    pub fn add_flops(&mut self, f: u64) {
        self.counters.flops += f;
    }

    pub fn ledger(&self) -> Option<&HistoryLedger> {
        match &self.store {
            Store::Ledger { ledger, .. } => Some(ledger),
            _ => None,
        }
    }

    /// Number of history subintervals currently stored.
    pub fn history_len(&self) -> usize {
        match &self.store {
            Store::Direct(d) => d.count(),
            Store::Cutoff { diffs, .. } => diffs.len(),
            Store::Ledger { ledger, .. } => ledger.len(),
        }
    }

    /// Stored history reals.
    pub fn slots(&self) -> usize {
        match &self.store {
            Store::Direct(d) => d.diffs.len(),
            Store::Cutoff { diffs, .. } => diffs.len() * self.width,
            Store::Ledger { ledger, .. } => ledger.slots(),
        }
    }

    /// Index of the next step to evaluate.
    pub fn next_step(&self) -> usize {
        self.recorded
    }

    pub fn local(&self, n: usize) -> LocalCoefficients {
        local_coefficients(self.alpha, self.h, self.interp, n)
    }

    /// Coefficient of `u^n` in the discrete derivative at step `n`.
    pub fn leading(&self, n: usize) -> f64 {
        self.local(n).a_n
    }

    /// Records `u^m` for the next index `m` (starting at 0).
    pub fn push(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.width {
            return Err(Error::Shape {
                expected: self.width,
                got: u.len(),
            });
        }
        let m = self.recorded;
        if m >= 1 {
            let prev = self.recent.back().expect("previous solution");
            match &mut self.store {
                Store::Direct(d) => {
                    d.diffs.extend(u.iter().zip(prev).map(|(a, b)| a - b));
                }
                Store::Cutoff { sbar, diffs } => {
                    diffs.push_back(u.iter().zip(prev).map(|(a, b)| a - b).collect());
                    while diffs.len() > sbar.saturating_sub(1) {
                        diffs.pop_front();
                    }
                }
                Store::Ledger { ledger, .. } => {
                    let mut payload = ledger.recycled_payload();
                    let oldest = if self.interp == Interp::Quadratic && m >= 2 {
                        Some(self.recent[self.recent.len() - 2].as_slice())
                    } else {
                        None
                    };
                    fill_moments(&mut payload, u, prev, oldest);
                    ledger.prepend(payload)?;
                    let mut events = Vec::new();
                    let f = ledger.merge_counted(&mut events);
                    self.counters.flops += f;
                    if let Some(t) = self.trace.as_mut() {
                        t.extend(events);
                    }
                }
            }
        }
        self.recent.push_back(u.to_vec());
        while self.recent.len() > 3 {
            self.recent.pop_front();
        }
        self.recorded += 1;
        let slots = self.slots();
        self.counters.slots = self.counters.slots.max(slots);
        Ok(())
    }

    /// Most recent recorded solution.
    pub fn last(&self) -> Option<&[f64]> {
        self.recent.back().map(|v| v.as_slice())
    }

    /// Writes `R^n` into `out`; `n` must equal [`next_step`](Self::next_step) and be at least 1.
    pub fn explicit_part(&mut self, n: usize, out: &mut [f64]) -> Result<()> {
        if n == 0 || n != self.recorded {
            return Err(Error::Structure(format!(
                "explicit part requested for step {n}, next step is {}",
                self.recorded
            )));
        }
        if out.len() != self.width {
            return Err(Error::Shape {
                expected: self.width,
                got: out.len(),
            });
        }
        out.fill(0.0);
        match self.kind {
            SchemeKind::L1Direct | SchemeKind::L12Direct => self.direct_part(n, out),
            _ => {
                let loc = self.local(n);
                let len = self.recent.len();
                let u1 = &self.recent[len - 1];
                axpy(loc.a_n1, u1, out);
                if loc.a_n2 != 0.0 {
                    axpy(loc.a_n2, &self.recent[len - 2], out);
                }
                match &self.store {
                    Store::Cutoff { diffs, .. } => {
                        self.weights.ensure(n);
                        let count = diffs.len();
                        // diffs hold d^{n-count}..d^{n-1}
                        for (idx, d) in diffs.iter().enumerate() {
                            let j = n - count + idx;
                            axpy(self.weights.b(n - j), d, out);
                        }
                        self.counters.flops += (count * self.width) as u64;
                    }
                    Store::Ledger { ledger, kernel } => {
                        let f = match kernel {
                            Some(k) => faompk_history(ledger, k, out)?,
                            None => faom_history(ledger, self.alpha, out),
                        };
                        self.counters.flops += f;
                    }
                    Store::Direct(_) => unreachable!(),
                }
            }
        }
        Ok(())
    }

    /// Weight of `d^j` in `R^n` for the direct schemes, `1 <= j <= n-1`.
    #[inline]
    fn direct_weight(weights: &StepWeights, quadratic: bool, n: usize, j: usize) -> f64 {
        let k = n - j;
        if quadratic {
            let own = if j >= 2 { weights.c(k) } else { 0.0 };
            weights.b(k) + own - weights.c(k - 1)
        } else {
            weights.b(k)
        }
    }

    fn direct_part(&mut self, n: usize, out: &mut [f64]) {
        let quadratic = self.interp == Interp::Quadratic;
        let a_n = self.local(n).a_n;
        let width = self.width;
        let u1 = self.recent.back().expect("previous solution");
        axpy(-a_n, u1, out);
        if n == 1 {
            return;
        }
        self.weights.ensure(n + BLOCK);
        let Store::Direct(store) = &mut self.store else {
            unreachable!()
        };
        if store.block_start == 0 || n >= store.block_start + BLOCK {
            // far field for steps n..n+BLOCK from increments d^1..d^{n-1}, as one product
            let n0 = n;
            let jn = n0 - 1;
            store.block_start = n0;
            store.weights.clear();
            store.weights.reserve(BLOCK * jn);
            for b in 0..BLOCK {
                store
                    .weights
                    .extend((1..n0).map(|j| Self::direct_weight(&self.weights, quadratic, n0 + b, j)));
            }
            store.far.resize(BLOCK * width, 0.0);
            // SAFETY: weights is BLOCK x jn, diffs holds at least jn rows of `width`,
            // far is BLOCK x width; all row-major with the strides given.
            unsafe {
                matrixmultiply::dgemm(
                    BLOCK,
                    jn,
                    width,
                    1.0,
                    store.weights.as_ptr(),
                    jn as isize,
                    1,
                    store.diffs.as_ptr(),
                    width as isize,
                    1,
                    0.0,
                    store.far.as_mut_ptr(),
                    width as isize,
                    1,
                );
            }
        }
        let n0 = store.block_start;
        let b = n - n0;
        for (o, f) in out.iter_mut().zip(&store.far[b * width..(b + 1) * width]) {
            *o += f;
        }
        for j in n0..n {
            let w = Self::direct_weight(&self.weights, quadratic, n, j);
            axpy(w, store.diff(j), out);
        }
        self.counters.flops += ((n - 1) * width) as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn samples(f: impl Fn(f64) -> f64, n: usize, h: f64) -> Vec<f64> {
        (0..=n).map(|j| f(j as f64 * h)).collect()
    }

    #[test]
    fn constant_has_zero_derivative() {
        let s = vec![3.5; 12];
        assert_eq!(direct_l1(&s, 0.4, 0.1).unwrap(), 0.0);
        assert_eq!(direct_l12(&s, 0.4, 0.1).unwrap(), 0.0);
        assert_eq!(cutoff_eval(&s, 0.4, 0.1, 3).unwrap(), 0.0);
    }

    #[test]
    fn l1_exact_on_linear() {
        let s = samples(|t| t, 10, 0.1);
        assert_relative_eq!(
            direct_l1(&s, 0.5, 0.1).unwrap(),
            1.0 / gamma(1.5),
            max_relative = 1e-13
        );
        assert_relative_eq!(1.0 / gamma(1.5), std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-14);
        for alpha in [0.1, 0.3, 0.9] {
            assert_relative_eq!(
                direct_l12(&s, alpha, 0.1).unwrap(),
                caputo_power_oracle(1.0, alpha, 1.0).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn rejects_single_sample() {
        assert!(direct_l1(&[1.0], 0.5, 0.1).is_err());
        assert!(direct_l12(&[1.0], 0.5, 0.1).is_err());
        assert!(cutoff_eval(&[1.0], 0.5, 0.1, 4).is_err());
        assert!(direct_l1(&[1.0, 2.0], 1.5, 0.1).is_err());
    }

    #[test]
    fn cutoff_matches_l1_inside_window() {
        let s = samples(|t| t * t + 0.3 * t, 6, 0.05);
        assert_eq!(
            cutoff_eval(&s, 0.6, 0.05, 6).unwrap(),
            direct_l1(&s, 0.6, 0.05).unwrap()
        );
    }

    #[test]
    fn cutoff_drops_tail() {
        // linear u, h = 0.1, window 5: the tail over [0, 0.5] is missing
        let s = samples(|t| t, 10, 0.1);
        let tail = (1.0 - 0.5_f64.powf(0.5)) / 0.5 / gamma(0.5);
        let full = 1.0 / gamma(1.5);
        assert_relative_eq!(
            cutoff_eval(&s, 0.5, 0.1, 5).unwrap(),
            full - tail,
            max_relative = 1e-13
        );
    }

    #[test]
    fn local_coefficient_values() {
        let l = local_coefficients(0.5, 1.0, Interp::Linear, 3);
        assert_relative_eq!(l.a_n, std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-14);
        assert_eq!(l.a_n + l.a_n1 + l.a_n2, 0.0);
        let q = local_coefficients(0.5, 1.0, Interp::Quadratic, 3);
        assert_relative_eq!(q.a_n2, 0.188_063_194_515_918_8, max_relative = 1e-12);
        assert!((q.a_n + q.a_n1 + q.a_n2).abs() < 1e-15);
        assert!(q.apply(2.0, 2.0, 2.0).abs() < 1e-15);
        // first step of J = 2 falls back to the linear stencil
        assert_eq!(local_coefficients(0.5, 1.0, Interp::Quadratic, 1).a_n2, 0.0);
    }

    #[test]
    fn payload_closed_forms() {
        let h = 0.1;
        let p = build_payload(&[0.0, h], h, Interp::Linear, 2).unwrap();
        let m = p.scalar_moments();
        assert_relative_eq!(m[0], h, max_relative = 1e-15);
        assert_eq!(m[1], 0.0);
        assert_relative_eq!(m[2], h / 3.0, max_relative = 1e-15);

        let z = build_payload(&[2.0, 2.0, 2.0], h, Interp::Quadratic, 5).unwrap();
        assert!(z.scalar_moments().iter().all(|&x| x == 0.0));

        // zero slope on the interval, unit second derivative
        let q = build_payload(&[h * h, 0.0, 0.0], h, Interp::Quadratic, 1).unwrap();
        let m = q.scalar_moments();
        assert_eq!(m[0], 0.0);
        assert_relative_eq!(m[1], h * h / 6.0, max_relative = 1e-14);

        assert!(build_payload(&[1.0], h, Interp::Linear, 1).is_err());
    }

    #[test]
    fn slope_of_interpolants() {
        let h = 0.25;
        let sq: Vec<f64> = (0..=4).map(|j| (j as f64 * h).powi(2)).collect();
        // quadratic interpolant reproduces t^2 from the second step on
        assert_relative_eq!(interpolant_slope_max(&sq, h, Interp::Quadratic), 2.0, max_relative = 1e-14);
        assert_relative_eq!(interpolant_slope_max(&sq, h, Interp::Linear), 1.75, max_relative = 1e-14);
        assert_eq!(interpolant_slope_max(&[3.0, 3.0], h, Interp::Linear), 0.0);
    }

    #[test]
    fn power_oracle() {
        assert_relative_eq!(
            caputo_power_oracle(2.0, 0.5, 1.0).unwrap(),
            1.504_505_556_127_350_3,
            max_relative = 1e-13
        );
        assert_eq!(caputo_power_oracle(3.0, 0.5, 0.0).unwrap(), 0.0);
        assert!(caputo_power_oracle(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn gamma_moment_series_matches_closed_form() {
        for alpha in [0.1, 0.5, 0.9] {
            for k in [8usize, 9, 20] {
                let p = 1.0 - alpha;
                let q = 2.0 - alpha;
                let kf = k as f64;
                let closed = (kf + 0.5) * ((kf + 1.0).powf(p) - kf.powf(p)) / p
                    - ((kf + 1.0).powf(q) - kf.powf(q)) / q;
                assert_relative_eq!(gamma_moment(alpha, k), closed, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn scheme_validation() {
        assert!(SchemeConfig::l1(0.5).validate().is_ok());
        assert!(SchemeConfig::cutoff(0.5, 0).validate().is_err());
        assert!(SchemeConfig::faom(0.5, 1).validate().is_err());
        let mut pk = SchemeConfig::faom_pk(0.5, Interp::Linear, 2, 4).unwrap();
        assert_eq!(pk.label(), "FAOM-P4");
        pk.kernel = Some(KernelPolynomial::new(0.4, 4).unwrap());
        assert!(pk.validate().is_err());
        pk.kernel = None;
        assert!(pk.validate().is_err());
        let mut l1 = SchemeConfig::l1(0.5);
        l1.interp = Interp::Quadratic;
        assert!(l1.validate().is_err());
        assert!(SchemeConfig::l1(1.0).validate().is_err());
    }
}
