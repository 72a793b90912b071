//! Partial sums of `S(m, n; c) / c` over `c ≡ 0 (mod s)` with the twist
//! `e(2 sqrt(mn) alpha / c)`.
//!
//! Moduli are processed in fixed chunks of [`CHUNK`] terms, each chunk summed
//! pairwise and the chunk totals combined in index order, so results do not
//! depend on the worker count.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{reduce_signed, SpfTable};
use crate::error::{Error, Result};
use crate::kloosterman::kloosterman_factored;
use crate::reduce::{chunk_ranges, ordered_map, pairwise_sum, PairwiseSum};
use crate::transforms::BumpProfile;

/// Moduli per deterministic reduction chunk.
pub const CHUNK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// `c <= C`.
    SharpUpto,
    /// `C <= c < 2C`.
    Dyadic,
    /// Weight `f(4 pi sqrt(mn) / c)`.
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistQuery {
    pub m: i64,
    pub n: i64,
    pub s: u64,
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub cutoff_mode: CutoffMode,
}

impl TwistQuery {
    pub fn new(m: i64, n: i64, s: u64, alpha: f64, c: f64, cutoff_mode: CutoffMode) -> Result<Self> {
        if m == 0 || n == 0 || (m < 0) != (n < 0) {
            return Err(Error::domain(format!("need mn > 0, got m = {m}, n = {n}")));
        }
        if s == 0 {
            return Err(Error::domain("progression modulus s must be positive"));
        }
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::domain(format!("cutoff C = {c} must be at least 1")));
        }
        if !alpha.is_finite() {
            return Err(Error::domain("alpha must be finite"));
        }
        Ok(Self { m, n, s, alpha, c, cutoff_mode })
    }

    /// `mn` as an exact integer (positive by construction).
    pub fn mn(&self) -> u64 {
        (self.m as i128 * self.n as i128).unsigned_abs() as u64
    }

    pub fn sqrt_mn(&self) -> f64 {
        (self.mn() as f64).sqrt()
    }

    pub fn with_cutoff(mut self, c: f64, mode: CutoffMode) -> Self {
        self.c = c;
        self.cutoff_mode = mode;
        self
    }

    /// `e(2 sqrt(mn) alpha / c) = e^{i alpha 4 pi sqrt(mn) / c}`.
    fn twist(&self, c: u64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * TAU * self.sqrt_mn() * self.alpha / c as f64)
    }
}

/// Multiples of `s` inside `[lo, hi]` as an inclusive range of multipliers.
fn multiples(s: u64, lo: u64, hi: u64) -> Option<RangeInclusive<u64>> {
    let lo = lo.max(1).div_ceil(s);
    let hi = hi / s;
    (lo <= hi).then_some(lo..=hi)
}

fn check_limit(c: u64, table: &SpfTable) -> Result<()> {
    if c > table.limit() {
        return Err(Error::ModulusOutOfRange {
            c,
            limit: table.limit(),
        });
    }
    Ok(())
}

/// `sum_{lo <= c <= hi, s | c} S(m, n; c) / c * weight(c)`.
fn accumulate<W>(
    m: i64,
    n: i64,
    s: u64,
    lo: u64,
    hi: u64,
    weight: W,
    table: &SpfTable,
    workers: usize,
) -> Result<Complex64>
where
    W: Fn(u64) -> Complex64 + Sync,
{
    let zero = Complex64::new(0.0, 0.0);
    let Some(js) = multiples(s, lo, hi) else {
        return Ok(zero);
    };
    check_limit(js.end() * s, table)?;
    let chunks = chunk_ranges(*js.start()..js.end() + 1, CHUNK);
    let partials = ordered_map(chunks, workers, |r| -> Result<Complex64> {
        let mut acc = PairwiseSum::new(zero);
        for j in r.clone() {
            let c = j * s;
            let factored = table.factor(c)?;
            let k = kloosterman_factored(m, n, &factored, table)?;
            if k != 0.0 {
                acc.push(weight(c) * (k / c as f64));
            } else {
                acc.push(zero);
            }
        }
        Ok(acc.finish())
    });
    let partials: Result<Vec<Complex64>> = partials.into_iter().collect();
    Ok(pairwise_sum(zero, partials?))
}

/// `sum_{c <= C, s | c} S(m, n; c) / c * e(2 sqrt(mn) alpha / c)`.
pub fn twisted_partial_sum(q: &TwistQuery, table: &SpfTable, workers: usize) -> Result<Complex64> {
    let hi = q.c.floor() as u64;
    accumulate(q.m, q.n, q.s, 1, hi, |c| q.twist(c), table, workers)
}

/// The same sum restricted to `C <= c < 2C`.
pub fn dyadic_twisted_sum(q: &TwistQuery, table: &SpfTable, workers: usize) -> Result<Complex64> {
    let lo = q.c.ceil() as u64;
    let hi = (2.0 * q.c).ceil() as u64 - 1;
    if hi < lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    accumulate(q.m, q.n, q.s, lo, hi, |c| q.twist(c), table, workers)
}

/// `sum_{s | c} S(m, n; c) / c * f(4 pi sqrt(mn) / c)` with `f = e^{i alpha x} g(x)`.
pub fn smooth_twisted_sum(
    q: &TwistQuery,
    bump: &BumpProfile,
    table: &SpfTable,
    workers: usize,
) -> Result<Complex64> {
    if bump.mn != q.mn() || bump.c != q.c {
        return Err(Error::Validation(format!(
            "bump built for (mn, C) = ({}, {}), query has ({}, {})",
            bump.mn,
            bump.c,
            q.mn(),
            q.c
        )));
    }
    let scale = 4.0 * std::f64::consts::PI * q.sqrt_mn();
    let (lo_x, hi_x) = bump.support();
    // g(scale / c) != 0 only for scale / hi_x < c < scale / lo_x
    let lo = (scale / hi_x).floor().max(1.0) as u64;
    let hi = (scale / lo_x).ceil() as u64;
    accumulate(
        q.m,
        q.n,
        q.s,
        lo,
        hi,
        |c| {
            let x = scale / c as f64;
            Complex64::from_polar(bump.g(x), q.alpha * x)
        },
        table,
        workers,
    )
}

/// `sum_{c <= C} (1/c) sum_{a mod c, (a, c) = 1} e(Q(a) a^-1 / c)` for
/// `Q(T) = m T^2 + l T + n`, evaluated as `sum_{c <= C} e(l / c) S(m, n; c) / c`.
pub fn polynomial_sum(
    m: i64,
    l: i64,
    n: i64,
    c_max: f64,
    table: &SpfTable,
    workers: usize,
) -> Result<Complex64> {
    if m == 0 || n == 0 || (m < 0) != (n < 0) {
        return Err(Error::domain(format!("need mn > 0, got m = {m}, n = {n}")));
    }
    if !(c_max >= 1.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let hi = c_max.floor() as u64;
    accumulate(
        m,
        n,
        1,
        1,
        hi,
        |c| Complex64::from_polar(1.0, TAU * reduce_signed(l, c) as f64 / c as f64),
        table,
        workers,
    )
}

/// Running sharp sums at increasing cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSumSeries {
    pub query: TwistQuery,
    pub checkpoints: Vec<(f64, Complex64)>,
}

impl PartialSumSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("C,re_sum,im_sum,abs_sum\n");
        for (c, v) in &self.checkpoints {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt_float(*c),
                crate::fmt_float(v.re),
                crate::fmt_float(v.im),
                crate::fmt_float(v.norm())
            ));
        }
        out
    }
}

fn check_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("checkpoints must be finite"));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("checkpoints must be strictly increasing"));
    }
    Ok(())
}

/// One pass over `c`, recording the sharp sum at each checkpoint.
pub fn partial_sum_series(
    q: &TwistQuery,
    checkpoints: &[f64],
    table: &SpfTable,
    workers: usize,
) -> Result<PartialSumSeries> {
    check_checkpoints(checkpoints)?;
    if let Some(&last) = checkpoints.last() {
        check_limit(last.floor().max(0.0) as u64, table)?;
    }
    let mut running = Complex64::new(0.0, 0.0);
    let mut done = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        let hi = cp.floor().max(0.0) as u64;
        if hi > done {
            running += accumulate(q.m, q.n, q.s, done + 1, hi, |c| q.twist(c), table, workers)?;
            done = hi;
        }
        out.push((cp, running));
    }
    Ok(PartialSumSeries {
        query: *q,
        checkpoints: out,
    })
}

/// `S(m, n; c)` for every `c` in `1..=c_max`, for experiments that reuse one
/// row of sums across many twists and progressions.
#[derive(Clone, Debug)]
pub struct KloostermanRow {
    pub m: i64,
    pub n: i64,
    values: Vec<f64>,
}

impl KloostermanRow {
    pub fn compute(m: i64, n: i64, c_max: u64, table: &SpfTable, workers: usize) -> Result<Self> {
        check_limit(c_max, table)?;
        let chunks = chunk_ranges(1..c_max + 1, CHUNK);
        let parts = ordered_map(chunks, workers, |r| -> Result<Vec<f64>> {
            r.clone()
                .map(|c| kloosterman_factored(m, n, &table.factor(c)?, table))
                .collect()
        });
        let mut values = Vec::with_capacity(c_max as usize);
        for p in parts {
            values.extend(p?);
        }
        Ok(Self { m, n, values })
    }

    pub fn c_max(&self) -> u64 {
        self.values.len() as u64
    }

    /// `S(m, n; c)`, `1 <= c <= c_max`.
    pub fn get(&self, c: u64) -> f64 {
        self.values[(c - 1) as usize]
    }

    /// Running twisted sums over `s | c` at the given checkpoints, reduced in
    /// the same chunked order as [`partial_sum_series`].
    pub fn twisted_series(&self, s: u64, alpha: f64, checkpoints: &[f64]) -> Result<PartialSumSeries> {
        let q = TwistQuery::new(
            self.m,
            self.n,
            s,
            alpha,
            checkpoints.last().copied().unwrap_or(1.0).max(1.0),
            CutoffMode::SharpUpto,
        )?;
        check_checkpoints(checkpoints)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut running = zero;
        let mut done = 0u64;
        let mut out = Vec::with_capacity(checkpoints.len());
        for &cp in checkpoints {
            let hi = cp.floor().max(0.0) as u64;
            if hi > self.c_max() {
                return Err(Error::ModulusOutOfRange {
                    c: hi,
                    limit: self.c_max(),
                });
            }
            if hi > done {
                if let Some(js) = multiples(s, done + 1, hi) {
                    let chunks = chunk_ranges(*js.start()..js.end() + 1, CHUNK);
                    let parts = chunks.into_iter().map(|r| {
                        let mut acc = PairwiseSum::new(zero);
                        for j in r {
                            let c = j * s;
                            let k = self.get(c);
                            acc.push(if k != 0.0 { q.twist(c) * (k / c as f64) } else { zero });
                        }
                        acc.finish()
                    });
                    running += pairwise_sum(zero, parts);
                }
                done = hi;
            }
            out.push((cp, running));
        }
        Ok(PartialSumSeries {
            query: q,
            checkpoints: out,
        })
    }
}
