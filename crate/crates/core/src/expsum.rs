//! Direct evaluation of `Σ_{N < n <= N'} c_n e(f(n))`, its Farey-arc
//! decomposition, the character splitting identity, and bound-ratio sweeps.
//!
//! Summation is deterministic: a range is cut into fixed-size chunks, each
//! chunk is accumulated sequentially with compensation, and chunk results are
//! merged in index order. Chunks may run on any number of threads without
//! changing a single bit of the result.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{divisors, gcd};
use crate::characters::CharacterGroup;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::farey::{dissect, HMap};
use crate::hecke::Sym2Coeffs;
use crate::phase::{in_size_window, n_pow_neg_it, Phase, PhaseFunction};
use crate::sum::{e_dd, loglog_slope, ComplexAccumulator};

pub const DEFAULT_CHUNK: usize = 4096;

/// Coefficient sequence `c_n` of a sum.
#[derive(Debug, Clone, Copy)]
pub enum Coefficients<'a> {
    /// `c_n = 1`
    Unit,
    /// `c_n = a_n = λ(n^2)`
    Sym2(&'a Sym2Coeffs),
    /// `c_n = b_n = μ(n)^2 λ(n^2)`, restricted to `gcd(n, coprime_to) = 1`
    Squarefree {
        table: &'a Sym2Coeffs,
        coprime_to: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Unit,
    A,
    B,
}

impl Coefficients<'_> {
    pub fn kind(&self) -> CoefficientKind {
        match self {
            Coefficients::Unit => CoefficientKind::Unit,
            Coefficients::Sym2(_) => CoefficientKind::A,
            Coefficients::Squarefree { .. } => CoefficientKind::B,
        }
    }

    pub fn coprime_to(&self) -> Option<u64> {
        match self {
            Coefficients::Squarefree { coprime_to, .. } => Some(*coprime_to),
            _ => None,
        }
    }

    pub fn max_index(&self) -> Option<u64> {
        match self {
            Coefficients::Unit => None,
            Coefficients::Sym2(t) | Coefficients::Squarefree { table: t, .. } => Some(t.limit()),
        }
    }

    fn ensure_covers(&self, n: u64) -> Result<()> {
        match self.max_index() {
            Some(limit) if n > limit => Err(Error::Size {
                what: "coefficient index",
                requested: n,
                limit,
            }),
            _ => Ok(()),
        }
    }

    pub fn get(&self, n: u64) -> Result<f64> {
        self.ensure_covers(n)?;
        if n == 0 {
            return Err(Error::OutOfTable {
                n,
                limit: self.max_index().unwrap_or(u64::MAX),
            });
        }
        Ok(self.value(n))
    }

    /// Caller guarantees `1 <= n <= max_index`.
    #[inline]
    fn value(&self, n: u64) -> f64 {
        match self {
            Coefficients::Unit => 1.0,
            Coefficients::Sym2(t) => t.a(n).unwrap_or(0.0),
            Coefficients::Squarefree { table, coprime_to } => {
                if *coprime_to > 1 && gcd(n, *coprime_to) != 1 {
                    0.0
                } else {
                    table.b(n).unwrap_or(0.0)
                }
            }
        }
    }
}

/// Sum of `term(n)` over `first..=last`, chunked and merged in order.
pub fn chunked_sum<F>(first: u64, last: u64, chunk: usize, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if last < first {
        return Complex64::new(0.0, 0.0);
    }
    let chunk = chunk.max(1) as u64;
    let count = (last - first) / chunk + 1;
    let partials: Vec<Complex64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let lo = first + i * chunk;
            let hi = (lo + chunk - 1).min(last);
            ComplexAccumulator::sum_iter((lo..=hi).map(&term))
        })
        .collect();
    ComplexAccumulator::sum_iter(partials)
}

fn term_range(n: f64, nprime: f64) -> (u64, u64) {
    (n.floor() as u64 + 1, nprime.floor() as u64)
}

/// `Σ_{N < n <= N'} c_n e(f(n))` with the default chunk size.
pub fn direct_sum(
    coeffs: &Coefficients<'_>,
    f: &impl Phase,
    n: f64,
    nprime: f64,
) -> Result<Complex64> {
    direct_sum_chunked(coeffs, f, n, nprime, DEFAULT_CHUNK)
}

pub fn direct_sum_chunked(
    coeffs: &Coefficients<'_>,
    f: &impl Phase,
    n: f64,
    nprime: f64,
    chunk: usize,
) -> Result<Complex64> {
    if !(n >= 0.0 && nprime >= n && nprime <= 2.0 * n.max(0.5)) {
        return Err(Error::domain(format!(
            "sum range needs 0 <= N <= N' <= 2N (N={n}, N'={nprime})"
        )));
    }
    let (first, last) = term_range(n, nprime);
    if last >= first {
        coeffs.ensure_covers(last)?;
    }
    Ok(chunked_sum(first, last, chunk, |k| {
        weighted_unit(coeffs, f, k)
    }))
}

#[inline]
fn weighted_unit(coeffs: &Coefficients<'_>, f: &impl Phase, n: u64) -> Complex64 {
    let c = coeffs.value(n);
    if c == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        f.unit(n) * c
    }
}

/// `N^(19/22) f(N)^(1/11)`.
pub fn theorem_bound(n: f64, f_at_n: f64) -> f64 {
    n.powf(19.0 / 22.0) * f_at_n.powf(1.0 / 11.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumParams {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "Nprime")]
    pub nprime: f64,
    pub k: f64,
    pub m: u64,
    pub gamma: f64,
    pub coeffs: CoefficientKind,
    pub coprime_to: Option<u64>,
    #[serde(rename = "Q")]
    pub order: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcSum {
    pub q: u64,
    pub l: i64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x0: f64,
    pub terms: u64,
    pub value: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumReport {
    pub params: SumParams,
    pub value: ComplexValue,
    pub abs: f64,
    pub bound: f64,
    pub ratio: f64,
    /// `|S| / sqrt(N)`, the square-root cancellation reference.
    pub sqrt_ratio: f64,
    pub arcs: Vec<ArcSum>,
}

impl SumReport {
    fn new(params: SumParams, f_at_n: f64, value: Complex64, arcs: Vec<ArcSum>) -> Self {
        let abs = value.norm();
        let bound = theorem_bound(params.n, f_at_n);
        Self {
            sqrt_ratio: abs / params.n.sqrt(),
            params,
            value: value.into(),
            abs,
            bound,
            ratio: abs / bound,
            arcs,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value.re, self.value.im)
    }
}

fn params(
    coeffs: &Coefficients<'_>,
    f: &PhaseFunction,
    n: f64,
    nprime: f64,
    order: Option<u64>,
) -> SumParams {
    SumParams {
        n,
        nprime,
        k: f.k,
        m: f.m,
        gamma: f.gamma,
        coeffs: coeffs.kind(),
        coprime_to: coeffs.coprime_to(),
        order,
    }
}

/// Direct sum packaged with its bound ratio.
pub fn direct_report(
    coeffs: &Coefficients<'_>,
    f: &PhaseFunction,
    n: f64,
    nprime: f64,
) -> Result<SumReport> {
    let value = direct_sum(coeffs, f, n, nprime)?;
    Ok(SumReport::new(
        params(coeffs, f, n, nprime, None),
        f.value(n),
        value,
        Vec::new(),
    ))
}

/// Sum evaluated arc by arc over the Farey dissection of level `order`;
/// the report carries the per-arc breakdown.
pub fn arc_partition_sum(
    coeffs: &Coefficients<'_>,
    f: &PhaseFunction,
    n: f64,
    nprime: f64,
    order: u64,
) -> Result<SumReport> {
    let hmap = HMap::new(f);
    let arcs = dissect(&hmap, order, n, nprime)?;
    let (_, last) = term_range(n, nprime);
    coeffs.ensure_covers(last)?;
    let breakdown: Vec<ArcSum> = arcs
        .par_iter()
        .map(|arc| {
            let r = arc.terms();
            let value = chunked_sum(*r.start(), *r.end(), DEFAULT_CHUNK, |k| {
                weighted_unit(coeffs, f, k)
            });
            ArcSum {
                q: arc.q,
                l: arc.l,
                x_lo: arc.x_lo,
                x_hi: arc.x_hi,
                x0: arc.x0,
                terms: arc.term_count(),
                value: value.into(),
            }
        })
        .collect();
    let total = ComplexAccumulator::sum_iter(
        breakdown
            .iter()
            .map(|a| Complex64::new(a.value.re, a.value.im)),
    );
    Ok(SumReport::new(
        params(coeffs, f, n, nprime, Some(order)),
        f.value(n),
        total,
        breakdown,
    ))
}

/// Both sides of the splitting identity on `(a, u]`:
///
/// ```text
/// Σ c_n e(nl/q) n^{-iT}
///   = Σ_{d|q} d^{-iT} Σ_{χ mod q/d} φ(q/d)^{-1} χ(l) τ(χ̄) Σ_{a/d < n <= u/d} c_{dn} χ(n) n^{-iT}
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCheck {
    pub lhs: ComplexValue,
    pub rhs: ComplexValue,
    pub deviation: f64,
    pub terms: u64,
}

pub fn splitting_identity_check(
    coeffs: &Coefficients<'_>,
    q: u64,
    l: i64,
    t: f64,
    (a, u): (f64, f64),
) -> Result<SplitCheck> {
    if q == 0 || gcd(l.rem_euclid(q as i64) as u64, q) != 1 {
        return Err(Error::domain(format!(
            "l/q = {l}/{q} is not a reduced fraction"
        )));
    }
    if !(a >= 0.0 && u >= a) {
        return Err(Error::domain(format!("interval ({a}, {u}] is not valid")));
    }
    let (first, last) = term_range(a, u);
    if last >= first {
        coeffs.ensure_covers(last)?;
    }

    let lhs = ComplexAccumulator::sum_iter((first..=last).map(|n| {
        let r = (l as i128 * n as i128).rem_euclid(q as i128) as u64;
        let lin = e_dd(DoubleDouble::from_u64(r) / DoubleDouble::from_u64(q));
        lin * n_pow_neg_it(n, t) * coeffs.value(n)
    }));

    let mut rhs = ComplexAccumulator::default();
    for d in divisors(q) {
        let r = q / d;
        let group = CharacterGroup::new(r)?;
        let lo = (a / d as f64).floor() as u64 + 1;
        let hi = (u / d as f64).floor() as u64;
        let weights: Vec<(u64, Complex64)> = (lo..=hi)
            .map(|n| (n, n_pow_neg_it(n, t) * coeffs.value(d * n)))
            .collect();
        let mut inner = ComplexAccumulator::default();
        for (i, chi) in group.characters().iter().enumerate() {
            let s =
                ComplexAccumulator::sum_iter(weights.iter().map(|&(n, w)| w * chi.value(n as i64)));
            inner.add(chi.value(l) * group.gauss_sum_conj(i) * s);
        }
        rhs.add(n_pow_neg_it(d, t) * inner.value() / group.phi() as f64);
    }
    let (lhs, rhs) = (lhs, rhs.value());
    Ok(SplitCheck {
        lhs: lhs.into(),
        rhs: rhs.into(),
        deviation: (lhs - rhs).norm(),
        terms: (last + 1).saturating_sub(first),
    })
}

/// How the multiplier `k` is chosen at each grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KPolicy {
    Fixed(f64),
    /// `k` such that `f(N) = N^theta`.
    Target(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    #[serde(rename = "N")]
    pub n: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub reports: Vec<SumReport>,
    pub skipped: Vec<SkippedPoint>,
}

impl SweepOutcome {
    /// Least-squares slope of `ln(ratio)` against `ln N`.
    pub fn ratio_slope(&self) -> Option<f64> {
        if self.reports.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = self.reports.iter().map(|r| r.params.n).collect();
        let ys: Vec<f64> = self.reports.iter().map(|r| r.ratio).collect();
        Some(loglog_slope(&xs, &ys))
    }
}

/// Evaluates `Σ_{N < n <= 2N} c_n e(f(n))` for each N of the grid and
/// reports `|S| / (N^(19/22) f(N)^(1/11))`. Points whose phase violates the
/// size window `N^(1/2+η) <= f(N) <= N^(3/2-η)` are skipped.
pub fn bound_sweep(
    gamma: f64,
    m: u64,
    policy: KPolicy,
    grid: &[f64],
    coeffs: &Coefficients<'_>,
    eta: f64,
) -> Result<SweepOutcome> {
    let mut out = SweepOutcome::default();
    for &n in grid {
        let f = match policy {
            KPolicy::Fixed(k) => PhaseFunction::new(k, m, gamma)?,
            KPolicy::Target(theta) => PhaseFunction::with_target(m, gamma, n, theta)?,
        };
        if !in_size_window(&f, n, eta) {
            out.skipped.push(SkippedPoint {
                n,
                reason: format!(
                    "f(N) = {} outside [N^(1/2+eta), N^(3/2-eta)] with eta = {eta}",
                    f.value(n)
                ),
            });
            continue;
        }
        out.reports.push(direct_report(coeffs, &f, n, 2.0 * n)?);
    }
    Ok(out)
}
