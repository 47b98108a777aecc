//! Time-fractional diffusion `D^alpha u = u_xx + f(u) + g(x, t)` on an interval.
//!
//! Time is discretized by any [`CaputoStepper`] scheme; space by the central
//! second difference or the fourth-order compact scheme. The reaction term is
//! extrapolated from previous steps, so every step is one banded linear solve.
//! Boundaries are either Dirichlet data or absorbing rows that close the end nodes.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::caputo::{CaputoStepper, Interp, PerfCounters, SchemeConfig};
use crate::error::{Error, Result};
use crate::history::MergeEvent;

/// Field evaluated at every node of `xs` at time `t`, written into `out`.
pub type FieldFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Lifts a pointwise `f(x, t)` to a [`FieldFn`].
pub fn pointwise(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> FieldFn {
    Arc::new(move |t, xs, out| {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = f(x, t);
        }
    })
}
pub type Reaction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    /// Number of cells; nodes are `0..=cells`.
    pub cells: usize,
    pub h: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(a: f64, b: f64, cells: usize, h: f64, steps: usize) -> Result<Self> {
        let g = GridSpec { a, b, cells, h, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 4 {
            return Err(Error::Config(format!("need at least 4 cells, got {}", self.cells)));
        }
        if !(self.b > self.a) || !(self.h > 0.0) {
            return Err(Error::Config("grid needs b > a and h > 0".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn final_time(&self) -> f64 {
        self.t(self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LinearForced,
    NonlinearForced,
    FisherAbc,
    HuxleyAbc,
}

#[derive(Clone)]
pub enum Boundary {
    Dirichlet(FieldFn),
    Absorbing { s0: f64 },
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub id: String,
    pub kind: ProblemKind,
    pub alpha: f64,
    pub domain: (f64, f64),
    pub initial: SpaceFn,
    pub boundary: Boundary,
    pub forcing: Option<FieldFn>,
    pub reaction: Option<Reaction>,
    pub exact: Option<FieldFn>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpatialKind {
    Central2,
    Compact4,
}

/// Second-derivative discretization: `A (D u - F) = delta^2 u`, where `A` is the
/// identity (central) or the averaging `(1, 10, 1)/12` (compact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialOperator {
    pub kind: SpatialKind,
    pub dx: f64,
}

impl SpatialOperator {
    pub fn new(kind: SpatialKind, dx: f64) -> Self {
        SpatialOperator { kind, dx }
    }

    /// Averaging weights `(left, centre, right)`.
    pub fn averaging(&self) -> [f64; 3] {
        match self.kind {
            SpatialKind::Central2 => [0.0, 1.0, 0.0],
            SpatialKind::Compact4 => [1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0],
        }
    }

    /// Second-difference weights `(left, centre, right)`; they sum to zero.
    pub fn second_difference(&self) -> [f64; 3] {
        let s = 1.0 / (self.dx * self.dx);
        [s, -2.0 * s, s]
    }

    /// Applies the averaging operator at interior node `i`.
    pub fn average(&self, v: &[f64], i: usize) -> f64 {
        let [l, c, r] = self.averaging();
        match self.kind {
            SpatialKind::Central2 => v[i],
            SpatialKind::Compact4 => l * v[i - 1] + c * v[i] + r * v[i + 1],
        }
    }
}

/// Thomas algorithm for a tridiagonal system; `rhs` is overwritten with the solution.
/// Returns the multiply-add count.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<u64> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: rhs.len().min(sub.len()).min(sup.len()),
        });
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::Singular { row: 0 });
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Singular { row: i });
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(3 * n as u64)
}

/// Square banded matrix stored by rows: entry `(i, j)` at `data[i * (kl + ku + 1) + j + kl - i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + j + self.kl - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        match self.index(i, j) {
            Some(k) => {
                self.data[k] = v;
                Ok(())
            }
            None => Err(Error::Structure(format!(
                "entry ({i}, {j}) outside band ({}, {})",
                self.kl, self.ku
            ))),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU without pivoting followed by the two triangular solves.
    /// Returns the multiply-add count.
    pub fn solve(mut self, rhs: &mut [f64]) -> Result<u64> {
        if rhs.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: rhs.len(),
            });
        }
        let n = self.n;
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-14;
        let mut flops = 0u64;
        for k in 0..n {
            let pivot = self.get(k, k);
            if !(pivot.abs() > tiny) || !pivot.is_finite() {
                return Err(Error::Singular { row: k });
            }
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.ku).min(n - 1);
            for i in k + 1..=last_row {
                let f = self.get(i, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let v = self.get(i, j) - f * self.get(k, j);
                    let idx = self.index(i, j).expect("fill stays inside band");
                    self.data[idx] = v;
                }
                rhs[i] -= f * rhs[k];
                flops += (last_col - k + 1) as u64;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.ku).min(n - 1);
            let mut s = rhs[k];
            for j in k + 1..=last_col {
                s -= self.get(k, j) * rhs[j];
            }
            rhs[k] = s / self.get(k, k);
            flops += (last_col - k + 1) as u64;
        }
        Ok(flops)
    }
}

/// One absorbing-boundary equation: `coef . u[cols] = rhs` placed in matrix row `row`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub row: usize,
    pub cols: [usize; 3],
    pub coef: [f64; 3],
    pub rhs: f64,
}

/// Absorbing rows at `x_1` (closing `u_0`) and `x_{N-1}` (closing `u_N`).
///
/// `explicit` holds `R` with `D u = a_n u + R` at every node and `reaction` holds
/// `f(u~)` at every node.
pub fn abc_rows(
    alpha: f64,
    s0: f64,
    dx: f64,
    a_n: f64,
    explicit: &[f64],
    reaction: &[f64],
) -> Result<[BoundaryRow; 2]> {
    let n = explicit.len();
    if n < 5 || reaction.len() != n {
        return Err(Error::Structure(format!(
            "absorbing rows need at least 5 nodes and matching arrays, got {n} and {}",
            reaction.len()
        )));
    }
    let last = n - 1;
    let s_half = s0.powf(alpha / 2.0);
    let s_one = s0.powf(alpha);
    let s_three = s0.powf(1.5 * alpha);
    let inv2 = 1.0 / (2.0 * dx);
    let row_at = |i: usize, sign: f64, row: usize| {
        // (d + sign 3 s^{a/2}) (a_n u + R) + (3 s^a d + sign s^{3a/2}) u = (d + sign 3 s^{a/2}) f
        let outer = (a_n + 3.0 * s_one) * inv2;
        let centre = sign * (3.0 * s_half * a_n + s_three);
        let rhs = (reaction[i + 1] - reaction[i - 1]) * inv2
            + sign * 3.0 * s_half * reaction[i]
            - (explicit[i + 1] - explicit[i - 1]) * inv2
            - sign * 3.0 * s_half * explicit[i];
        BoundaryRow {
            row,
            cols: [i - 1, i, i + 1],
            coef: [-outer, centre, outer],
            rhs,
        }
    };
    Ok([row_at(1, -1.0, 0), row_at(last - 1, 1.0, last)])
}

/// Result of a full time integration.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub final_field: Vec<f64>,
    /// `||e^j||_inf` for `j = 1..=steps` when an exact solution is known.
    pub step_errors: Vec<f64>,
    pub counters: PerfCounters,
    /// `(n, M_n)`: history subintervals in use when evaluating step `n`.
    pub memory: Vec<(usize, usize)>,
    pub merges: Vec<MergeEvent>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record merge events.
    pub trace_merges: bool,
}

/// Time-stepping state of one solve.
pub struct Solver<'a> {
    spec: &'a ProblemSpec,
    grid: GridSpec,
    op: SpatialOperator,
    interp: Interp,
    stepper: CaputoStepper,
    recent: Vec<Vec<f64>>,
    n: usize,
    explicit: Vec<f64>,
    forcing: Vec<f64>,
    bands: (Vec<f64>, Vec<f64>, Vec<f64>),
    xs: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: GridSpec,
        scheme: &SchemeConfig,
        spatial: SpatialKind,
    ) -> Result<Self> {
        grid.validate()?;
        if (scheme.alpha - spec.alpha).abs() > 0.0 {
            return Err(Error::Config(format!(
                "scheme alpha {} differs from problem alpha {}",
                scheme.alpha, spec.alpha
            )));
        }
        if matches!(spec.boundary, Boundary::Absorbing { .. }) && spatial != SpatialKind::Central2 {
            return Err(Error::Config("absorbing rows are implemented for the central scheme".into()));
        }
        let width = grid.nodes();
        let mut stepper = CaputoStepper::new(scheme, grid.h, width)?;
        let xs: Vec<f64> = (0..width).map(|i| grid.x(i)).collect();
        let u0: Vec<f64> = xs.iter().map(|&x| (spec.initial)(x)).collect();
        stepper.push(&u0)?;
        Ok(Solver {
            spec,
            grid,
            op: SpatialOperator::new(spatial, grid.dx()),
            interp: scheme.interp,
            stepper,
            recent: vec![u0],
            n: 0,
            explicit: vec![0.0; width],
            forcing: vec![0.0; width],
            bands: (vec![0.0; width], vec![0.0; width], vec![0.0; width]),
            xs,
        })
    }

    pub fn stepper_mut(&mut self) -> &mut CaputoStepper {
        &mut self.stepper
    }

    pub fn stepper(&self) -> &CaputoStepper {
        &self.stepper
    }

    pub fn current(&self) -> &[f64] {
        self.recent.last().expect("initial field")
    }

    pub fn step_index(&self) -> usize {
        self.n
    }

    /// Extrapolated `u~^n` at node `i`.
    fn extrapolated(&self, i: usize) -> f64 {
        let k = self.recent.len();
        let u = |back: usize| self.recent[k - 1 - back][i];
        match (self.interp, k) {
            (_, 1) => u(0),
            (Interp::Linear, _) | (Interp::Quadratic, 2) => 2.0 * u(0) - u(1),
            (Interp::Quadratic, _) => 3.0 * u(0) - 3.0 * u(1) + u(2),
        }
    }

    /// Advances one step and returns `u^n`.
    pub fn step(&mut self) -> Result<&[f64]> {
        let n = self.n + 1;
        let t = self.grid.t(n);
        let width = self.grid.nodes();
        self.stepper.explicit_part(n, &mut self.explicit)?;
        let a_n = self.stepper.leading(n);
        match &self.spec.forcing {
            Some(g) => g(t, &self.xs, &mut self.forcing),
            None => self.forcing.fill(0.0),
        }
        if let Some(r) = &self.spec.reaction {
            for i in 0..width {
                self.forcing[i] += r(self.extrapolated(i));
            }
        }
        let mut rhs = vec![0.0; width];
        let [al, ac, ar] = self.op.averaging();
        let [dl, dc, dr] = self.op.second_difference();
        let flops = match &self.spec.boundary {
            Boundary::Dirichlet(phi) => {
                let (sub, diag, sup) = &mut self.bands;
                diag[0] = 1.0;
                sup[0] = 0.0;
                diag[width - 1] = 1.0;
                sub[width - 1] = 0.0;
                let mut ends = [0.0; 2];
                phi(t, &[self.xs[0], self.xs[width - 1]], &mut ends);
                rhs[0] = ends[0];
                rhs[width - 1] = ends[1];
                for i in 1..width - 1 {
                    sub[i] = a_n * al - dl;
                    diag[i] = a_n * ac - dc;
                    sup[i] = a_n * ar - dr;
                    let v = |j: usize| self.forcing[j] - self.explicit[j];
                    rhs[i] = al * v(i - 1) + ac * v(i) + ar * v(i + 1);
                }
                thomas(sub, diag, sup, &mut rhs)?
            }
            Boundary::Absorbing { s0 } => {
                let mut m = BandedMatrix::zeros(width, 2, 2);
                for i in 1..width - 1 {
                    m.set(i, i - 1, -dl)?;
                    m.set(i, i, a_n - dc)?;
                    m.set(i, i + 1, -dr)?;
                    rhs[i] = self.forcing[i] - self.explicit[i];
                }
                let rows = abc_rows(
                    self.spec.alpha,
                    *s0,
                    self.grid.dx(),
                    a_n,
                    &self.explicit,
                    &self.forcing,
                )?;
                for r in rows {
                    for (c, v) in r.cols.iter().zip(r.coef) {
                        m.set(r.row, *c, v)?;
                    }
                    rhs[r.row] = r.rhs;
                }
                m.solve(&mut rhs)?
            }
        };
        self.stepper.add_flops(flops);
        self.stepper.push(&rhs)?;
        self.recent.push(rhs);
        if self.recent.len() > 3 {
            self.recent.remove(0);
        }
        self.n = n;
        Ok(self.current())
    }
}

/// Runs the full time loop.
pub fn run(
    spec: &ProblemSpec,
    grid: GridSpec,
    scheme: &SchemeConfig,
    spatial: SpatialKind,
    options: RunOptions,
) -> Result<RunRecord> {
    if grid.steps == 0 {
        return Err(Error::Config("number of time steps must be positive".into()));
    }
    let start = Instant::now();
    let mut solver = Solver::new(spec, grid, scheme, spatial)?;
    if options.trace_merges {
        solver.stepper_mut().enable_trace();
    }
    let mut record = RunRecord::default();
    record.memory.reserve(grid.steps);
    let xs: Vec<f64> = (0..grid.nodes()).map(|i| grid.x(i)).collect();
    let mut exact_field = vec![0.0; xs.len()];
    for n in 1..=grid.steps {
        record.memory.push((n, solver.stepper().history_len()));
        let u = solver.step()?;
        if let Some(exact) = &spec.exact {
            exact(grid.t(n), &xs, &mut exact_field);
            let err = u
                .iter()
                .zip(&exact_field)
                .map(|(v, e)| (e - v).abs())
                .fold(0.0, f64::max);
            record.step_errors.push(err);
        }
    }
    record.final_field = solver.current().to_vec();
    record.merges = solver.stepper_mut().take_trace();
    record.counters = solver.stepper().counters().clone();
    record.counters.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

const CACHE_MAGIC: &[u8; 8] = b"FFREF\x00\x01\n";
pub const CACHE_VERSION: u32 = 1;

/// Identifying header of a persisted reference field.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheHeader {
    pub problem: String,
    pub alpha: f64,
    pub h: f64,
    pub dx: f64,
    pub scheme: String,
    pub version: u32,
}

impl CacheHeader {
    fn encode(&self) -> String {
        format!(
            "problem={};alpha={:e};h={:e};dx={:e};scheme={};version={}",
            self.problem, self.alpha, self.h, self.dx, self.scheme, self.version
        )
    }

    fn decode(s: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for part in s.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Cache(format!("malformed header field {part:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Cache(format!("header lacks {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Cache(format!("header field {k} is not a number")))
        };
        Ok(CacheHeader {
            problem: get("problem")?.to_string(),
            alpha: num("alpha")?,
            h: num("h")?,
            dx: num("dx")?,
            scheme: get("scheme")?.to_string(),
            version: get("version")?
                .parse()
                .map_err(|_| Error::Cache("header version is not an integer".into()))?,
        })
    }
}

fn checksum(bytes: &[u8]) -> [u8; 8] {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

/// Writes `magic | u32 header length | header | u64 count | f64 LE values | checksum`.
pub fn save_reference(path: &Path, header: &CacheHeader, field: &[f64]) -> Result<()> {
    let text = header.encode();
    let mut buf = Vec::with_capacity(32 + text.len() + 8 * field.len());
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(text.len() as u32).to_le_bytes());
    buf.extend_from_slice(text.as_bytes());
    buf.extend_from_slice(&(field.len() as u64).to_le_bytes());
    for v in field {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let sum = checksum(&buf);
    buf.extend_from_slice(&sum);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_reference(path: &Path) -> Result<(CacheHeader, Vec<f64>)> {
    let buf = fs::read(path)?;
    let bad = |m: &str| Error::Cache(format!("{}: {m}", path.display()));
    if buf.len() < CACHE_MAGIC.len() + 4 + 8 + 8 || &buf[..8] != CACHE_MAGIC {
        return Err(bad("not a reference file"));
    }
    let body = buf.len() - 8;
    if checksum(&buf[..body]) != buf[body..] {
        return Err(bad("checksum mismatch"));
    }
    let hlen = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes")) as usize;
    let hend = 12 + hlen;
    if hend + 8 > body {
        return Err(bad("truncated header"));
    }
    let text = std::str::from_utf8(&buf[12..hend]).map_err(|_| bad("header is not UTF-8"))?;
    let header = CacheHeader::decode(text)?;
    let count = u64::from_le_bytes(buf[hend..hend + 8].try_into().expect("8 bytes")) as usize;
    let data = &buf[hend + 8..body];
    if data.len() != 8 * count {
        return Err(bad("payload length mismatch"));
    }
    let field = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, field))
}
