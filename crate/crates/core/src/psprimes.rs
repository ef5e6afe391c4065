//! Piatetski-Shapiro primes `p = ⌊n^c⌋`, the sum of `λ(p)^2` over them and
//! sign changes of `λ(p)` along the sequence.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{iroot, is_prime};
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::hecke::{lambda_prime_power, HeckeTable};
use crate::sum::Neumaier;

pub const MAX_N: u64 = 100_000_000;

/// Upper end of the exponent range covered by the asymptotic.
pub const THEOREM_C_MAX: f64 = 25.0 / 24.0;

const CHUNK: u64 = 1 << 14;
// distance from an integer below which the dd value of n^c is re-examined
const NEAR_INTEGER: f64 = 1e-6;
// abs error bound on the dd logarithm comparison, with a wide safety factor
const LOG_MARGIN: f64 = 1e-25;

/// `n^c` as `c = a / 2^s` with `a` odd.
fn dyadic(c: f64) -> (u64, u32) {
    let bits = c.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1075;
    let mut a = (bits & ((1 << 52) - 1)) | (1 << 52);
    let mut e = exp;
    while a.is_multiple_of(2) {
        a /= 2;
        e += 1;
    }
    (a, (-e).max(0) as u32)
}

/// `Some(v)` when `n^c` is exactly the integer `v`.
fn exact_power(n: u64, c: f64) -> Option<u64> {
    if n <= 1 {
        return Some(n);
    }
    let (a, s) = dyadic(c);
    if s >= 32 {
        return None;
    }
    let k = 1u32 << s;
    let r = iroot(n, k);
    if (r as u128).checked_pow(k) != Some(n as u128) {
        return None;
    }
    let a = u32::try_from(a).ok()?;
    (r as u128)
        .checked_pow(a)
        .and_then(|v| u64::try_from(v).ok())
}

/// Exact `⌊n^c⌋` for `1 <= n <= 10^8`, `1 < c < 2`.
pub fn floor_pow(n: u64, c: f64) -> Result<u64> {
    if n <= 1 {
        return Ok(n);
    }
    let log = DoubleDouble::from_u64(n).ln() * DoubleDouble::from_f64(c);
    let y = log.exp();
    let p = y.floor().to_f64() as u64;
    let frac = (y - DoubleDouble::from_u64(p)).to_f64();
    if frac > NEAR_INTEGER && frac < 1.0 - NEAR_INTEGER {
        return Ok(p);
    }
    // n^c lies within 1e-6 of p or p + 1: decide with logarithms
    let lo = p.max(1);
    for cand in [lo, lo + 1] {
        let d = (log - DoubleDouble::from_u64(cand).ln()).to_f64();
        if d.abs() <= LOG_MARGIN {
            return match exact_power(n, c) {
                Some(v) if v == cand => Ok(cand),
                _ => Err(Error::Consistency(format!(
                    "cannot certify floor of {n}^{c}: within {d:e} of ln {cand}"
                ))),
            };
        }
    }
    let above_lo = (log - DoubleDouble::from_u64(lo).ln()).to_f64() > 0.0;
    let below_hi = (log - DoubleDouble::from_u64(lo + 1).ln()).to_f64() < 0.0;
    match (above_lo, below_hi) {
        (true, true) => Ok(lo),
        (true, false) => Ok(lo + 1),
        _ => Ok(lo - 1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsRun {
    pub c: f64,
    #[serde(rename = "N")]
    pub n: u64,
    /// `n` with `⌊n^c⌋` prime, increasing.
    pub hits: Vec<u64>,
    /// The primes `⌊n^c⌋`, aligned with `hits`.
    pub primes: Vec<u64>,
    pub count: u64,
    pub prediction: f64,
    pub in_theorem_range: bool,
}

fn check_c(c: f64) -> Result<()> {
    if c > 1.0 && c < 2.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("exponent c = {c} is outside (1, 2)")))
    }
}

/// `N / (c ln N)`.
pub fn prediction(c: f64, n: u64) -> f64 {
    n as f64 / (c * (n as f64).ln())
}

pub fn ps_enumerate(c: f64, n: u64) -> Result<PsRun> {
    check_c(c)?;
    if n > MAX_N {
        return Err(Error::Size {
            what: "N",
            requested: n,
            limit: MAX_N,
        });
    }
    if n < 2 {
        return Err(Error::domain("N must be at least 2"));
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<(u64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|i| -> Result<Vec<(u64, u64)>> {
            let lo = i * CHUNK + 1;
            let hi = ((i + 1) * CHUNK).min(n);
            let mut out = Vec::new();
            for k in lo..=hi {
                let p = floor_pow(k, c)?;
                if is_prime(p) {
                    out.push((k, p));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let (hits, primes): (Vec<u64>, Vec<u64>) = parts.into_iter().flatten().unzip();
    Ok(PsRun {
        c,
        n,
        count: hits.len() as u64,
        hits,
        primes,
        prediction: prediction(c, n),
        in_theorem_range: c < THEOREM_C_MAX,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignChanges {
    pub changes: u64,
    /// Primes with `λ(p) = 0`, left out of the comparison.
    pub zeros: Vec<u64>,
}

fn require_table(run: &PsRun, hecke: &HeckeTable) -> Result<()> {
    match run.primes.last() {
        Some(&p) if p > hecke.limit() => Err(Error::Size {
            what: "tau table needed for largest hit prime",
            requested: p,
            limit: hecke.limit(),
        }),
        _ => Ok(()),
    }
}

/// Consecutive hit pairs with `λ(p) λ(p') < 0`.
pub fn sign_change_count(run: &PsRun, hecke: &HeckeTable) -> Result<SignChanges> {
    require_table(run, hecke)?;
    let mut zeros = Vec::new();
    let mut changes = 0;
    let mut prev: Option<bool> = None;
    for &p in &run.primes {
        let t = hecke.tau(p)?;
        if t == 0 {
            zeros.push(p);
            continue;
        }
        let neg = t < 0;
        if prev.is_some_and(|s| s != neg) {
            changes += 1;
        }
        prev = Some(neg);
    }
    Ok(SignChanges { changes, zeros })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem3Report {
    pub c: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub count: u64,
    pub prediction: f64,
    pub ratio_count: f64,
    pub sum_lambda_sq: f64,
    pub ratio_sum: f64,
    /// `Σ λ(p^2)` over the hits, with `λ(p^2) = λ(p)^2 - 1`.
    pub sum_lambda_p2: f64,
    /// `|Σ λ(p)^2 - count - Σ λ(p^2)|`.
    pub identity_deviation: f64,
    /// Largest `|λ(p)^2 - 1 - λ(p^2)|` over hits with `p^2` in the table.
    pub square_relation_max: f64,
    pub sign_changes: u64,
    pub zero_lambda: Vec<u64>,
    pub in_theorem_range: bool,
}

/// Needs τ(p) for every hit prime; `λ(p^2)` comes from `λ(p)` so no table
/// of size `N^(2c)` is required.
pub fn theorem3_report(run: &PsRun, hecke: &HeckeTable) -> Result<Theorem3Report> {
    require_table(run, hecke)?;
    let mut sq = Neumaier::default();
    let mut p2 = Neumaier::default();
    let mut square_relation_max: f64 = 0.0;
    for &p in &run.primes {
        let l = hecke.lambda(p)?;
        sq.add(l * l);
        p2.add(lambda_prime_power(l, 2));
        if p <= hecke.limit() / p {
            square_relation_max = square_relation_max.max(hecke.square_relation_deviation(p)?);
        }
    }
    let signs = sign_change_count(run, hecke)?;
    let sum_lambda_sq = sq.value();
    let sum_lambda_p2 = p2.value();
    Ok(Theorem3Report {
        c: run.c,
        n: run.n,
        count: run.count,
        prediction: run.prediction,
        ratio_count: run.count as f64 / run.prediction,
        sum_lambda_sq,
        ratio_sum: sum_lambda_sq / run.prediction,
        sum_lambda_p2,
        identity_deviation: (sum_lambda_sq - run.count as f64 - sum_lambda_p2).abs(),
        square_relation_max,
        sign_changes: signs.changes,
        zero_lambda: signs.zeros,
        in_theorem_range: run.in_theorem_range,
    })
}

/// Largest prime `⌊n^c⌋` can reach for `n <= N`, i.e. the τ range a
/// report needs.
pub fn required_tau_limit(c: f64, n: u64) -> Result<u64> {
    check_c(c)?;
    floor_pow(n, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime_trial_division;
    use crate::hecke::build_tau_table;

    #[test]
    fn rejects_bad_exponent() {
        assert!(matches!(ps_enumerate(1.0, 100), Err(Error::Domain(_))));
        assert!(matches!(ps_enumerate(2.0, 100), Err(Error::Domain(_))));
        assert!(ps_enumerate(1.5, MAX_N + 1).is_err());
    }

    #[test]
    fn floor_pow_matches_f64_away_from_integers() {
        for n in 1..2000u64 {
            let y = (n as f64).powf(1.03);
            if (y - y.round()).abs() > 1e-6 {
                assert_eq!(floor_pow(n, 1.03).unwrap(), y.floor() as u64, "n={n}");
            }
        }
    }

    #[test]
    fn exact_integer_powers() {
        // 1.5 = 3/2: 4^1.5 = 8, 9^1.5 = 27
        assert_eq!(floor_pow(4, 1.5).unwrap(), 8);
        assert_eq!(floor_pow(9, 1.5).unwrap(), 27);
        assert_eq!(floor_pow(10_000, 1.5).unwrap(), 1_000_000);
        assert_eq!(floor_pow(8, 1.5).unwrap(), 22);
        // 1.25 = 5/4: 16^1.25 = 32
        assert_eq!(floor_pow(16, 1.25).unwrap(), 32);
        assert_eq!(floor_pow(15, 1.25).unwrap(), 29);
    }

    #[test]
    fn trial_division_oracle() {
        let run = ps_enumerate(1.03, 100).unwrap();
        let expected: Vec<u64> = (1..=100u64)
            .filter(|&n| is_prime_trial_division((n as f64).powf(1.03).floor() as u64))
            .collect();
        assert_eq!(run.hits, expected);
        assert_eq!(run.count, expected.len() as u64);
        assert!(run.primes.iter().all(|&p| is_prime_trial_division(p)));
    }

    #[test]
    fn hits_nest() {
        let a = ps_enumerate(1.02, 1000).unwrap();
        let b = ps_enumerate(1.02, 5000).unwrap();
        assert!(b.count >= a.count);
        assert_eq!(&b.hits[..a.hits.len()], &a.hits[..]);
    }

    #[test]
    fn sign_changes_small() {
        let t = build_tau_table(10).unwrap();
        let run = PsRun {
            c: 1.02,
            n: 3,
            hits: vec![2, 3],
            primes: vec![2, 3],
            count: 2,
            prediction: prediction(1.02, 3),
            in_theorem_range: true,
        };
        assert_eq!(sign_change_count(&run, &t).unwrap().changes, 1);
        let empty = PsRun {
            hits: vec![],
            primes: vec![],
            count: 0,
            ..run
        };
        assert_eq!(sign_change_count(&empty, &t).unwrap().changes, 0);
    }

    #[test]
    fn count_ratio_trend_over_doublings() {
        let c = 1.02;
        let t = build_tau_table(required_tau_limit(c, 8000).unwrap() as usize).unwrap();
        let dev: Vec<f64> = [1000, 2000, 4000, 8000]
            .iter()
            .map(|&n| {
                let r = theorem3_report(&ps_enumerate(c, n).unwrap(), &t).unwrap();
                assert!((0.7..=1.3).contains(&r.ratio_count));
                (r.ratio_count - 1.0).abs()
            })
            .collect();
        let improving = dev.windows(2).filter(|w| w[1] <= w[0]).count();
        assert!(improving >= 2, "{dev:?}");
    }

    #[test]
    fn report_identity_and_table_range() {
        let run = ps_enumerate(1.02, 1000).unwrap();
        let small = build_tau_table(100).unwrap();
        assert!(matches!(
            theorem3_report(&run, &small),
            Err(Error::Size { .. })
        ));
        let need = required_tau_limit(1.02, 1000).unwrap();
        let t = build_tau_table(need as usize).unwrap();
        let r = theorem3_report(&run, &t).unwrap();
        assert!(r.identity_deviation < 1e-9 * r.count as f64);
        assert!(r.square_relation_max < 1e-12);
        assert!(r.sign_changes < r.count);
        assert!(r.in_theorem_range);
    }
}
