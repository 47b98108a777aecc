//! Compressed history of the convolution integral.
//!
//! The interval `[0, t_{n-1}]` is covered by subintervals whose lengths are
//! `h * ntau^e` with exponents growing from the newest (right) end to the oldest.
//! Every subinterval carries the `K+1` scaled moments
//! `int (Pi u)'(tau) * ((tau - c) / r)^k dtau` where `c` is its midpoint and `r`
//! its half-width. Whenever `2*ntau - 1` consecutive subintervals share a length,
//! the oldest `ntau` of them are fused and their moments recombined exactly.
//!
//! Boundaries are kept as integer multiples of `h` so that length comparisons are exact.

use std::fmt;

use crate::error::{Error, Result};

/// Moments `M_0..M_K` of one subinterval; every moment is a vector of `width` entries
/// (one per spatial node, or a single entry for scalar histories).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPayload {
    degree: usize,
    width: usize,
    data: Vec<f64>,
}

impl MomentPayload {
    pub fn zeros(degree: usize, width: usize) -> Self {
        MomentPayload {
            degree,
            width,
            data: vec![0.0; (degree + 1) * width],
        }
    }

    /// Scalar payload from a list of `K+1` moments.
    pub fn scalar(moments: Vec<f64>) -> Self {
        assert!(!moments.is_empty(), "a payload needs at least one moment");
        MomentPayload {
            degree: moments.len() - 1,
            width: 1,
            data: moments,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of stored reals.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn moment(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn moment_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.width..(k + 1) * self.width]
    }

    /// Moments of a scalar payload.
    pub fn scalar_moments(&self) -> Vec<f64> {
        (0..=self.degree).map(|k| self.moment(k)[0]).collect()
    }
}

/// Coefficients `C(k,l) ntau^{-k} (ntau - 2j - 1)^{k-l}` mapping the moments of the
/// `j`-th (newest first) of `ntau` equal subintervals onto the fused subinterval.
#[derive(Debug, Clone)]
pub struct RecombinationTable {
    degree: usize,
    coef: Vec<f64>,
}

impl RecombinationTable {
    pub fn new(ntau: usize, degree: usize) -> Self {
        let k1 = degree + 1;
        let mut binom = vec![vec![0.0; k1]; k1];
        for k in 0..k1 {
            binom[k][0] = 1.0;
            for l in 1..=k {
                binom[k][l] = binom[k - 1][l - 1] + if l < k { binom[k - 1][l] } else { 0.0 };
            }
        }
        let nt = ntau as f64;
        let mut coef = vec![0.0; ntau * k1 * k1];
        for j in 0..ntau {
            let shift = nt - 2.0 * j as f64 - 1.0;
            for k in 0..k1 {
                let scale = nt.powi(-(k as i32));
                for l in 0..=k {
                    coef[(j * k1 + k) * k1 + l] =
                        binom[k][l] * scale * shift.powi((k - l) as i32);
                }
            }
        }
        RecombinationTable { degree, coef }
    }

    #[inline]
    fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        let k1 = self.degree + 1;
        self.coef[(j * k1 + k) * k1 + l]
    }

    /// Fuses `group` (newest first) into one payload. Returns the multiply-add count.
    fn apply(&self, group: &[MomentPayload]) -> (MomentPayload, u64) {
        let mut out = MomentPayload::zeros(self.degree, group[0].width);
        let flops = self.apply_into(group, &mut out);
        (out, flops)
    }

    /// As [`apply`](Self::apply), overwriting `out`.
    fn apply_into(&self, group: &[MomentPayload], out: &mut MomentPayload) -> u64 {
        let width = group[0].width;
        out.data.fill(0.0);
        let mut flops = 0u64;
        for k in 0..=self.degree {
            let dst = &mut out.data[k * width..(k + 1) * width];
            for (j, p) in group.iter().enumerate() {
                for l in 0..=k {
                    let c = self.get(j, k, l);
                    if c == 0.0 {
                        continue;
                    }
                    let src = &p.data[l * width..(l + 1) * width];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += c * s;
                    }
                    flops += width as u64;
                }
            }
        }
        flops
    }
}

/// Exact recombination of `ntau` payloads attached to adjacent equal-length
/// subintervals, listed newest first.
pub fn recombine_moments(
    group: &[MomentPayload],
    group_gaps: &[u64],
    ntau: usize,
    degree: usize,
) -> Result<MomentPayload> {
    if ntau < 2 || group.len() != ntau || group_gaps.len() != ntau {
        return Err(Error::Structure(format!(
            "expected a group of {ntau} payloads and gaps, got {} and {}",
            group.len(),
            group_gaps.len()
        )));
    }
    if group_gaps.iter().any(|&g| g != group_gaps[0]) {
        return Err(Error::Structure(format!(
            "recombination needs equal gaps, got {group_gaps:?}"
        )));
    }
    let width = group[0].width;
    if group.iter().any(|p| p.degree != degree || p.width != width) {
        return Err(Error::Structure("payload degree or width mismatch".into()));
    }
    Ok(RecombinationTable::new(ntau, degree).apply(group).0)
}

/// One fusion performed by [`HistoryLedger::merge_pass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub n: usize,
    /// Boundary index `i0` of the run of `2*ntau - 1` equal gaps.
    pub i0: usize,
    /// Length of the fused gap, in units of `h`.
    pub gap_len: u64,
    pub m_after: usize,
}

impl fmt::Display for MergeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}, {}", self.n, self.i0, self.gap_len, self.m_after)
    }
}

/// First structural predicate a ledger violates.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation {
    EmptyGap { index: usize },
    Coverage { covered: u64, expected: u64 },
    PayloadShape { index: usize },
    NotPowerOfNtau { index: usize, gap: u64 },
    ExponentDecrease { index: usize },
    ExponentJump { index: usize },
    LevelCount { exponent: u32, count: usize },
    ExponentBounds { index: usize, exponent: u32 },
    HalfRatio { index: usize },
    LengthBounds { m: usize, lower: f64, upper: f64 },
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyGap { index } => write!(f, "gap {index} has zero length"),
            Self::Coverage { covered, expected } => {
                write!(f, "subintervals cover {covered} steps, expected {expected}")
            }
            Self::PayloadShape { index } => write!(f, "payload {index} has the wrong shape"),
            Self::NotPowerOfNtau { index, gap } => {
                write!(f, "gap {index} = {gap}h is not a power of ntau")
            }
            Self::ExponentDecrease { index } => {
                write!(f, "exponent decreases at gap {index}")
            }
            Self::ExponentJump { index } => {
                write!(f, "exponent jumps by more than one at gap {index}")
            }
            Self::LevelCount { exponent, count } => {
                write!(f, "{count} gaps with exponent {exponent}")
            }
            Self::ExponentBounds { index, exponent } => {
                write!(f, "exponent {exponent} of gap {index} outside its index bounds")
            }
            Self::HalfRatio { index } => write!(f, "gap {index} exceeds half its distance to t_n"),
            Self::LengthBounds { m, lower, upper } => {
                write!(f, "ledger length {m} outside [{lower}, {upper}]")
            }
        }
    }
}

/// Slack on the real-valued length bounds to absorb rounding in the logarithms.
const BOUND_SLACK: f64 = 1e-9;

/// Lower and upper bounds on the ledger length at step `n`.
pub fn length_bounds(n: usize, ntau: usize) -> (f64, f64) {
    let nt = ntau as f64;
    let log = |x: f64| x.ln() / nt.ln();
    let lower = (nt - 1.0) * (log(n as f64) - 1.0);
    let upper = 2.0 * (nt - 1.0) * log((n as f64 + 1.0) / 2.0);
    (lower, upper)
}

#[derive(Debug, Clone)]
pub struct HistoryLedger {
    n: usize,
    h: f64,
    ntau: usize,
    degree: usize,
    width: usize,
    gaps: Vec<u64>,
    payloads: Vec<MomentPayload>,
    table: RecombinationTable,
    spare: Vec<MomentPayload>,
}

impl HistoryLedger {
    /// Empty ledger, valid at step `n = 1`.
    pub fn new(h: f64, ntau: usize, degree: usize, width: usize) -> Result<Self> {
        if ntau < 2 {
            return Err(Error::Config(format!("ntau must be >= 2, got {ntau}")));
        }
        if !(h > 0.0) || width == 0 {
            return Err(Error::Config("step size and width must be positive".into()));
        }
        Ok(HistoryLedger {
            n: 1,
            h,
            ntau,
            degree,
            width,
            gaps: Vec::new(),
            payloads: Vec::new(),
            table: RecombinationTable::new(ntau, degree),
            spare: Vec::new(),
        })
    }

    /// Ledger with the given gaps (newest first, units of `h`) and zero payloads.
    /// No merging is applied; useful for inspecting hand-built layouts.
    pub fn from_gaps(h: f64, ntau: usize, degree: usize, gaps: Vec<u64>) -> Result<Self> {
        let mut ledger = Self::new(h, ntau, degree, 1)?;
        ledger.n = 1 + gaps.iter().sum::<u64>() as usize;
        ledger.payloads = vec![MomentPayload::zeros(degree, 1); gaps.len()];
        ledger.gaps = gaps;
        Ok(ledger)
    }

    pub fn step(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn ntau(&self) -> usize {
        self.ntau
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of stored subintervals `M_n`.
    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    /// Gap lengths in units of `h`, newest first.
    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    pub fn payloads(&self) -> &[MomentPayload] {
        &self.payloads
    }

    /// Stored reals, `(K+1) * M_n * width`.
    pub fn slots(&self) -> usize {
        self.gaps.len() * (self.degree + 1) * self.width
    }

    /// Boundaries `I_0 > I_1 > ... > I_M` in units of `h`, `I_0 = n - 1`.
    pub fn boundary_steps(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.gaps.len() + 1);
        let mut b = (self.n - 1) as u64;
        out.push(b);
        for &g in &self.gaps {
            b = b.saturating_sub(g);
            out.push(b);
        }
        out
    }

    /// Boundaries in time units.
    pub fn boundaries(&self) -> Vec<f64> {
        self.boundary_steps()
            .into_iter()
            .map(|b| b as f64 * self.h)
            .collect()
    }

    /// Iterates `(upper, lower, payload)` with boundaries in units of `h`, newest first.
    pub fn intervals(&self) -> impl Iterator<Item = (u64, u64, &MomentPayload)> + '_ {
        let mut upper = (self.n - 1) as u64;
        self.gaps.iter().zip(&self.payloads).map(move |(&g, p)| {
            let hi = upper;
            upper -= g;
            (hi, upper, p)
        })
    }

    /// Attaches the payload of `[t_{n-2}, t_{n-1}]` and advances to step `n`.
    pub fn prepend(&mut self, payload: MomentPayload) -> Result<()> {
        if payload.degree != self.degree || payload.width != self.width {
            return Err(Error::Structure(format!(
                "payload has degree {} width {}, ledger expects degree {} width {}",
                payload.degree, payload.width, self.degree, self.width
            )));
        }
        self.n += 1;
        self.gaps.insert(0, 1);
        self.payloads.insert(0, payload);
        Ok(())
    }

    /// Smallest boundary index starting a run of `2*ntau - 1` equal gaps.
    fn find_run(&self) -> Option<usize> {
        let run = 2 * self.ntau - 1;
        if self.gaps.len() < run {
            return None;
        }
        (0..=self.gaps.len() - run).find(|&i0| {
            let g = self.gaps[i0];
            self.gaps[i0 + 1..i0 + run].iter().all(|&x| x == g)
        })
    }

    /// Fuses runs until none of length `2*ntau - 1` remains.
    pub fn merge_pass(&mut self) -> Vec<MergeEvent> {
        let mut events = Vec::new();
        self.merge_counted(&mut events);
        events
    }

    /// As [`merge_pass`](Self::merge_pass), appending events to `events`; returns multiply-adds spent.
    pub fn merge_counted(&mut self, events: &mut Vec<MergeEvent>) -> u64 {
        let mut flops = 0;
        while let Some(i0) = self.find_run() {
            let start = i0 + self.ntau - 1;
            let end = start + self.ntau;
            let mut merged = self
                .spare
                .pop()
                .unwrap_or_else(|| MomentPayload::zeros(self.degree, self.width));
            flops += self.table.apply_into(&self.payloads[start..end], &mut merged);
            let group: Vec<MomentPayload> = self.payloads.drain(start..end).collect();
            self.spare.extend(group);
            self.spare.truncate(2 * self.ntau);
            let gap = self.gaps[start] * self.ntau as u64;
            self.gaps.drain(start + 1..end);
            self.gaps[start] = gap;
            self.payloads.insert(start, merged);
            events.push(MergeEvent {
                n: self.n,
                i0,
                gap_len: gap,
                m_after: self.gaps.len(),
            });
        }
        flops
    }

    /// A payload of the ledger's shape for the next `prepend`, reusing storage
    /// released by merges. Its contents are unspecified.
    pub fn recycled_payload(&mut self) -> MomentPayload {
        self.spare
            .pop()
            .unwrap_or_else(|| MomentPayload::zeros(self.degree, self.width))
    }

    /// `prepend` followed by `merge_pass`.
    pub fn advance(&mut self, payload: MomentPayload) -> Result<Vec<MergeEvent>> {
        self.prepend(payload)?;
        Ok(self.merge_pass())
    }

    /// Verifies every structural property of a merged ledger, reporting the first failure.
    pub fn check_structure(&self) -> std::result::Result<(), StructureViolation> {
        let m = self.gaps.len();
        if self.n < 2 {
            return if m == 0 {
                Ok(())
            } else {
                Err(StructureViolation::Coverage {
                    covered: self.gaps.iter().sum(),
                    expected: 0,
                })
            };
        }
        if let Some(index) = self.gaps.iter().position(|&g| g == 0) {
            return Err(StructureViolation::EmptyGap { index: index + 1 });
        }
        let covered: u64 = self.gaps.iter().sum();
        let expected = (self.n - 1) as u64;
        if covered != expected {
            return Err(StructureViolation::Coverage { covered, expected });
        }
        if let Some(index) = self
            .payloads
            .iter()
            .position(|p| p.degree != self.degree || p.width != self.width)
        {
            return Err(StructureViolation::PayloadShape { index: index + 1 });
        }
        if self.payloads.len() != m {
            return Err(StructureViolation::PayloadShape { index: m + 1 });
        }

        let nt = self.ntau as u64;
        let mut exps = Vec::with_capacity(m);
        for (i, &g) in self.gaps.iter().enumerate() {
            let mut e = 0u32;
            let mut v = g;
            while v % nt == 0 {
                v /= nt;
                e += 1;
            }
            if v != 1 {
                return Err(StructureViolation::NotPowerOfNtau { index: i + 1, gap: g });
            }
            exps.push(e);
        }
        for i in 1..m {
            if exps[i] < exps[i - 1] {
                return Err(StructureViolation::ExponentDecrease { index: i + 1 });
            }
            if exps[i] > exps[i - 1] + 1 {
                return Err(StructureViolation::ExponentJump { index: i + 1 });
            }
        }
        let max_e = *exps.iter().max().unwrap();
        for e in 0..max_e {
            let count = exps.iter().filter(|&&x| x == e).count();
            if count < self.ntau - 1 || count > 2 * self.ntau - 2 {
                return Err(StructureViolation::LevelCount { exponent: e, count });
            }
        }
        let top = exps.iter().filter(|&&x| x == max_e).count();
        if top > 2 * self.ntau - 2 {
            return Err(StructureViolation::LevelCount {
                exponent: max_e,
                count: top,
            });
        }

        let ntf = self.ntau as f64;
        let mut dist = 1u64; // t_n - I_i in units of h
        for (idx, (&g, &e)) in self.gaps.iter().zip(&exps).enumerate() {
            let i = (idx + 1) as f64;
            let ef = e as f64;
            if ef < i / (2.0 * ntf - 2.0) - 1.0 || ef > (i - 1.0) / (ntf - 1.0) {
                return Err(StructureViolation::ExponentBounds {
                    index: idx + 1,
                    exponent: e,
                });
            }
            dist += g;
            if 2 * g > dist {
                return Err(StructureViolation::HalfRatio { index: idx + 1 });
            }
        }

        let (lower, upper) = length_bounds(self.n, self.ntau);
        let mf = m as f64;
        if mf < lower - BOUND_SLACK || mf > upper + BOUND_SLACK {
            return Err(StructureViolation::LengthBounds { m, lower, upper });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_ledger(ntau: usize) -> HistoryLedger {
        HistoryLedger::new(0.1, ntau, 0, 1).unwrap()
    }

    fn drive(ledger: &mut HistoryLedger, steps: usize) {
        for _ in 0..steps {
            ledger.advance(MomentPayload::scalar(vec![1.0])).unwrap();
        }
    }

    #[test]
    fn first_prepend_covers_one_step() {
        let mut l = scalar_ledger(2);
        l.advance(MomentPayload::scalar(vec![0.0])).unwrap();
        assert_eq!(l.step(), 2);
        assert_eq!(l.boundary_steps(), vec![1, 0]);
        assert_eq!(l.boundaries(), vec![0.1, 0.0]);
    }

    #[test]
    fn prepend_without_merge() {
        // n = 5 holds [h, 2h]; prepending at n = 6 gives [h, h, 2h]
        let mut l = scalar_ledger(2);
        drive(&mut l, 3);
        assert_eq!(l.step(), 4);
        assert_eq!(l.gaps(), &[1, 2]);
        l.prepend(MomentPayload::scalar(vec![1.0])).unwrap();
        assert_eq!(l.gaps(), &[1, 1, 2]);

        let mut l = HistoryLedger::from_gaps(0.1, 2, 0, vec![1, 1, 2, 4]).unwrap();
        assert_eq!(l.step(), 9);
        l.prepend(MomentPayload::scalar(vec![1.0])).unwrap();
        assert_eq!(l.gaps(), &[1, 1, 1, 2, 4]);
    }

    #[test]
    fn merge_keeps_newest() {
        let mut l = HistoryLedger::from_gaps(0.1, 2, 0, vec![1, 1, 1]).unwrap();
        let events = l.merge_pass();
        assert_eq!(l.gaps(), &[1, 2]);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].i0, 0);
        assert_eq!(events[0].gap_len, 2);
    }

    #[test]
    fn merge_cascades() {
        let mut l = HistoryLedger::from_gaps(0.1, 2, 0, vec![1, 1, 1, 2, 2]).unwrap();
        let events = l.merge_pass();
        assert_eq!(l.gaps(), &[1, 2, 4]);
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].m_after, 3);
    }

    #[test]
    fn layout_at_step_ten() {
        let mut l = scalar_ledger(2);
        drive(&mut l, 9);
        assert_eq!(l.step(), 10);
        let b: Vec<f64> = l.boundaries();
        let expected = [0.9, 0.8, 0.6, 0.4, 0.0];
        assert_eq!(b.len(), expected.len());
        for (x, y) in b.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(l.boundary_steps(), vec![9, 8, 6, 4, 0]);
        assert_eq!(l.len(), 4);
        assert!(l.check_structure().is_ok());
    }

    #[test]
    fn decreasing_gaps_fail() {
        let l = HistoryLedger::from_gaps(0.1, 2, 0, vec![2, 1]).unwrap();
        assert_eq!(
            l.check_structure(),
            Err(StructureViolation::ExponentDecrease { index: 2 })
        );
    }

    #[test]
    fn non_power_gap_fails() {
        let l = HistoryLedger::from_gaps(0.1, 2, 0, vec![1, 3]).unwrap();
        assert!(matches!(
            l.check_structure(),
            Err(StructureViolation::NotPowerOfNtau { index: 2, gap: 3 })
        ));
    }

    #[test]
    fn unmerged_run_fails_level_count() {
        let l = HistoryLedger::from_gaps(0.1, 2, 0, vec![1, 1, 1, 2]).unwrap();
        assert!(matches!(
            l.check_structure(),
            Err(StructureViolation::LevelCount { exponent: 0, count: 3 })
        ));
    }

    #[test]
    fn wrong_payload_rejected() {
        let mut l = HistoryLedger::new(0.1, 2, 3, 1).unwrap();
        assert!(l.prepend(MomentPayload::scalar(vec![1.0, 0.0])).is_err());
        assert!(l.prepend(MomentPayload::zeros(3, 2)).is_err());
        assert!(HistoryLedger::new(0.1, 1, 3, 1).is_err());
    }

    #[test]
    fn recombine_low_orders() {
        let a = MomentPayload::scalar(vec![1.0, 2.0]);
        let b = MomentPayload::scalar(vec![3.0, 5.0]);
        let m = recombine_moments(&[a, b], &[1, 1], 2, 1).unwrap();
        // M_0 = a0 + b0, M_1 = (a0 + a1 - b0 + b1) / 2
        assert_eq!(m.scalar_moments(), vec![4.0, (1.0 + 2.0 - 3.0 + 5.0) / 2.0]);
    }

    #[test]
    fn recombine_zero_and_errors() {
        let z = MomentPayload::zeros(4, 3);
        let m = recombine_moments(&[z.clone(), z.clone(), z.clone()], &[2, 2, 2], 3, 4).unwrap();
        assert!(m.moment(4).iter().all(|&x| x == 0.0));
        assert!(recombine_moments(&[z.clone(), z.clone()], &[2, 4], 2, 4).is_err());
        assert!(recombine_moments(std::slice::from_ref(&z), &[2], 2, 4).is_err());
    }

    #[test]
    fn length_bounds_at_ten() {
        let (lo, hi) = length_bounds(10, 2);
        assert!(lo <= 4.0 && 4.0 <= hi);
        assert!((lo - 2.321928).abs() < 1e-6);
        assert!((hi - 4.918863).abs() < 1e-6);
    }

    #[test]
    fn trace_line_format() {
        let e = MergeEvent {
            n: 10,
            i0: 0,
            gap_len: 2,
            m_after: 4,
        };
        assert_eq!(e.to_string(), "10, 0, 2, 4");
    }
}
