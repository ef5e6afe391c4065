//! Ramanujan tau and normalized Hecke eigenvalues of the discriminant form.
//!
//! `Δ(z) = q ∏ (1 - q^n)^24 = Σ τ(n) q^n` is the weight-12 level-1 Hecke
//! eigenform, and `λ(n) = τ(n) / n^(11/2)`.
//!
//! The primary table is built from the pentagonal-number expansion of
//! `∏ (1 - q^n)`, raised to the 24th power with the power-series recurrence
//! `n A_n = Σ_j (25 j - n) b_j A_{n-j}`. The recurrence runs modulo three
//! 61-bit primes and the exact coefficients are recovered by CRT, with the
//! third prime as a consistency check.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::arith::{mobius_sieve, primes_up_to, spf_sieve};
use crate::error::{Error, Result};

/// Largest supported table size.
pub const MAX_LIMIT: usize = 1_000_000;

/// `(κ - 1) / 2` for κ = 12.
pub const NORMALIZING_EXPONENT: f64 = 5.5;

const CRT_PRIMES: [u64; 3] = [
    2_305_843_009_213_693_951,
    2_305_843_009_213_693_921,
    2_305_843_009_213_693_907,
];

const CACHE_MAGIC: &[u8; 4] = b"TAU1";

#[derive(Debug, Clone, PartialEq)]
pub struct HeckeTable {
    // index n holds τ(n); slot 0 is unused
    tau: Vec<i128>,
    lambda: Vec<f64>,
}

/// Nonzero exponents of `∏ (1 - q^n) = Σ_k (-1)^k q^{k(3k-1)/2}` below
/// `bound`, with a flag for negative sign.
fn pentagonal_terms(bound: usize) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    for k in 1.. {
        let a = k * (3 * k - 1) / 2;
        if a >= bound {
            break;
        }
        let neg = k % 2 == 1;
        out.push((a, neg));
        let b = k * (3 * k + 1) / 2;
        if b < bound {
            out.push((b, neg));
        }
    }
    out.sort_unstable();
    out
}

fn inverses_mod(n: usize, p: u64) -> Vec<u64> {
    let mut inv = vec![0u64; n.max(2)];
    inv[1] = 1;
    for i in 2..n {
        let q = p / i as u64;
        let r = (p % i as u64) as usize;
        inv[i] = (p - ((q as u128 * inv[r] as u128) % p as u128) as u64) % p;
    }
    inv
}

#[inline]
fn signed_mod(pos: u128, neg: u128, p: u64) -> u64 {
    let p = p as u128;
    ((pos % p + p - neg % p) % p) as u64
}

/// Coefficients `A_0..A_{len-1}` of `∏ (1 - q^n)^24` modulo `p`.
fn eta24_mod(len: usize, p: u64, pent: &[(usize, bool)]) -> Vec<u64> {
    let inv = inverses_mod(len, p);
    let mut a = vec![0u64; len];
    a[0] = 1;
    for n in 1..len {
        let (mut pos1, mut neg1, mut pos2, mut neg2) = (0u128, 0u128, 0u128, 0u128);
        for &(j, neg) in pent {
            if j > n {
                break;
            }
            let c = a[n - j] as u128;
            if neg {
                neg1 += c;
                neg2 += j as u128 * c;
            } else {
                pos1 += c;
                pos2 += j as u128 * c;
            }
        }
        let s1 = signed_mod(pos1, neg1, p);
        let s2 = signed_mod(pos2, neg2, p);
        let t = ((25u128 * inv[n] as u128 % p as u128) * s2 as u128 % p as u128) as u64;
        a[n] = (t + p - s1) % p;
    }
    a
}

/// Garner reconstruction of the symmetric residue from three moduli.
fn crt_signed(r: [u64; 3]) -> Option<i128> {
    let [m1, m2, m3] = CRT_PRIMES;
    let inv_m1 = crate::arith::mod_inverse((m1 % m2) as i128, m2 as i128)? as u64;
    let diff = (r[1] as u128 + m2 as u128 - (r[0] % m2) as u128) % m2 as u128;
    let t = diff * inv_m1 as u128 % m2 as u128;
    let x = r[0] as u128 + m1 as u128 * t;
    let modulus = m1 as u128 * m2 as u128;
    let v = if x > modulus / 2 {
        x as i128 - modulus as i128
    } else {
        x as i128
    };
    (v.rem_euclid(m3 as i128) as u64 == r[2]).then_some(v)
}

/// Exact τ(1..=limit) from the eta product. Returns a vector indexed by n
/// (slot 0 is zero).
pub fn tau_from_eta_product(limit: usize) -> Result<Vec<i128>> {
    check_limit(limit)?;
    let pent = pentagonal_terms(limit);
    let residues: Vec<Vec<u64>> = CRT_PRIMES
        .par_iter()
        .map(|&p| eta24_mod(limit, p, &pent))
        .collect();
    let mut tau = vec![0i128; limit + 1];
    for n in 1..=limit {
        let r = [residues[0][n - 1], residues[1][n - 1], residues[2][n - 1]];
        tau[n] = crt_signed(r)
            .ok_or_else(|| Error::Consistency(format!("CRT residues for tau({n}) disagree")))?;
    }
    Ok(tau)
}

/// Independent route to τ: τ(p) from `(∏(1 - q^n)^3)^8` using Jacobi's
/// sparse expansion of the cube in exact integer arithmetic, τ(p^k) from the
/// Hecke recursion and τ(n) by multiplicativity.
///
/// The cost is `O(limit^{3/2})` with i128 arithmetic; intended for limits up
/// to about 10^5.
pub fn tau_by_hecke_recursion(limit: usize) -> Result<Vec<i128>> {
    check_limit(limit)?;
    // (−1)^k (2k+1) at exponent k(k+1)/2
    let mut cube = Vec::new();
    for k in 0usize.. {
        let e = k * (k + 1) / 2;
        if e >= limit {
            break;
        }
        let c = (2 * k + 1) as i128;
        cube.push((e, if k % 2 == 1 { -c } else { c }));
    }
    let mut series = vec![0i128; limit];
    for &(e, c) in &cube {
        series[e] = c;
    }
    for _ in 1..8 {
        let mut next = vec![0i128; limit];
        for (i, &s) in series.iter().enumerate() {
            if s == 0 {
                continue;
            }
            for &(e, c) in &cube {
                if i + e >= limit {
                    break;
                }
                next[i + e] += s * c;
            }
        }
        series = next;
    }

    let spf = spf_sieve(limit);
    let mut tau = vec![0i128; limit + 1];
    tau[1] = 1;
    for n in 2..=limit {
        let p = spf[n] as usize;
        let mut m = n;
        let mut e = 0u32;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        if m > 1 {
            tau[n] = tau[m] * tau[n / m];
        } else if e == 1 {
            tau[n] = series[p - 1];
        } else {
            // τ(p^e) = τ(p) τ(p^{e-1}) - p^11 τ(p^{e-2})
            let p11 = (p as i128).pow(11);
            tau[n] = tau[p] * tau[n / p] - p11 * tau[n / (p * p)];
        }
    }
    Ok(tau)
}

fn check_limit(limit: usize) -> Result<()> {
    if limit == 0 || limit > MAX_LIMIT {
        return Err(Error::Size {
            what: "tau table limit",
            requested: limit as u64,
            limit: MAX_LIMIT as u64,
        });
    }
    Ok(())
}

/// λ(n) = τ(n) / n^(11/2) for a single entry.
fn normalize(tau: i128, n: u64) -> f64 {
    let nf = n as f64;
    tau as f64 / (nf.powi(5) * nf.sqrt())
}

/// Builds the τ/λ table for `1..=limit` from the eta product.
pub fn build_tau_table(limit: usize) -> Result<HeckeTable> {
    HeckeTable::from_tau(tau_from_eta_product(limit)?)
}

impl HeckeTable {
    /// Wraps an exact τ vector indexed by n (slot 0 ignored).
    pub fn from_tau(mut tau: Vec<i128>) -> Result<Self> {
        if tau.len() < 2 {
            return Err(Error::Size {
                what: "tau table limit",
                requested: 0,
                limit: MAX_LIMIT as u64,
            });
        }
        tau[0] = 0;
        if tau[1] != 1 {
            return Err(Error::Consistency(format!("tau(1) = {} != 1", tau[1])));
        }
        let lambda = tau
            .iter()
            .enumerate()
            .map(|(n, &t)| if n == 0 { 0.0 } else { normalize(t, n as u64) })
            .collect();
        Ok(Self { tau, lambda })
    }

    pub fn limit(&self) -> u64 {
        (self.tau.len() - 1) as u64
    }

    fn check(&self, n: u64) -> Result<usize> {
        if n == 0 || n > self.limit() {
            Err(Error::OutOfTable {
                n,
                limit: self.limit(),
            })
        } else {
            Ok(n as usize)
        }
    }

    pub fn tau(&self, n: u64) -> Result<i128> {
        Ok(self.tau[self.check(n)?])
    }

    pub fn lambda(&self, n: u64) -> Result<f64> {
        Ok(self.lambda[self.check(n)?])
    }

    /// τ(1..=limit) without the padding slot.
    pub fn tau_values(&self) -> &[i128] {
        &self.tau[1..]
    }

    /// `|λ(mn) - Σ_{d | gcd(m,n)} μ(d) λ(m/d) λ(n/d)|`.
    pub fn check_mult_identity(&self, m: u64, n: u64) -> Result<f64> {
        let lhs = self.lambda(m.checked_mul(n).ok_or(Error::OutOfTable {
            n: u64::MAX,
            limit: self.limit(),
        })?)?;
        let g = crate::arith::gcd(m, n);
        let mut rhs = 0.0;
        for d in crate::arith::divisors(g) {
            let mu = crate::arith::mobius(d);
            if mu != 0 {
                rhs += mu as f64 * self.lambda(m / d)? * self.lambda(n / d)?;
            }
        }
        Ok((lhs - rhs).abs())
    }

    /// `|λ(p)^2 - 1 - λ(p^2)|` read directly from the table.
    pub fn square_relation_deviation(&self, p: u64) -> Result<f64> {
        let lp = self.lambda(p)?;
        let lp2 = self.lambda(p * p)?;
        Ok((lp * lp - 1.0 - lp2).abs())
    }

    /// The prime `p <= limit` maximizing `|λ(p)|`, with that value.
    pub fn max_abs_lambda_prime(&self) -> Option<(u64, f64)> {
        primes_up_to(self.limit() as usize)
            .into_iter()
            .map(|p| (p, self.lambda[p as usize].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Writes the binary cache: magic `TAU1`, little-endian u64 limit, then
    /// τ(1..=limit) as little-endian i128.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&self.limit().to_le_bytes())?;
        for t in self.tau_values() {
            w.write_all(&t.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let limit = u64::from_le_bytes(len) as usize;
        check_limit(limit)?;
        let mut tau = vec![0i128; limit + 1];
        let mut buf = [0u8; 16];
        for t in tau.iter_mut().skip(1) {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Cache(format!("truncated file, expected {limit} entries")))?;
            *t = i128::from_le_bytes(buf);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Cache(format!("{} trailing bytes", rest.len())));
        }
        Self::from_tau(tau)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_cache(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_cache(std::io::BufReader::new(f))
    }
}

/// Symmetric-square coefficients `a_n = λ(n^2)` and their squarefree
/// restriction `b_n = μ(n)^2 a_n`.
///
/// `λ(n^2)` is multiplicative, so it is assembled from prime data alone:
/// `λ(p^{2e})` follows from `λ(p)` by `λ(p^{k+1}) = λ(p) λ(p^k) - λ(p^{k-1})`.
/// This needs the Hecke table only up to `limit`, not `limit^2`.
#[derive(Debug, Clone)]
pub struct Sym2Coeffs {
    a: Vec<f64>,
    b: Vec<f64>,
    mu: Vec<i8>,
}

impl Sym2Coeffs {
    pub fn build(table: &HeckeTable, limit: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::Size {
                what: "sym2 limit",
                requested: 0,
                limit: table.limit(),
            });
        }
        if limit > table.limit() {
            return Err(Error::Size {
                what: "sym2 limit (needs lambda(p) for p <= limit)",
                requested: limit,
                limit: table.limit(),
            });
        }
        let n_max = limit as usize;
        let spf = spf_sieve(n_max);
        let mu = mobius_sieve(n_max);
        let mut a = vec![0.0f64; n_max + 1];
        a[1] = 1.0;
        for n in 2..=n_max {
            let p = spf[n] as usize;
            let mut m = n;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            a[n] = a[m] * lambda_prime_power(table.lambda[p], 2 * e);
        }
        let b = a
            .iter()
            .zip(&mu)
            .map(|(&x, &m)| if m == 0 { 0.0 } else { x })
            .collect();
        Ok(Self { a, b, mu })
    }

    pub fn limit(&self) -> u64 {
        (self.a.len() - 1) as u64
    }

    fn check(&self, n: u64) -> Result<usize> {
        if n == 0 || n > self.limit() {
            Err(Error::OutOfTable {
                n,
                limit: self.limit(),
            })
        } else {
            Ok(n as usize)
        }
    }

    /// `λ(n^2)`; equals the Dirichlet coefficient of the symmetric-square
    /// L-function only for squarefree n (see [`Self::is_squarefree`]).
    pub fn a(&self, n: u64) -> Result<f64> {
        Ok(self.a[self.check(n)?])
    }

    pub fn b(&self, n: u64) -> Result<f64> {
        Ok(self.b[self.check(n)?])
    }

    pub fn mu(&self, n: u64) -> Result<i8> {
        Ok(self.mu[self.check(n)?])
    }

    pub fn is_squarefree(&self, n: u64) -> Result<bool> {
        Ok(self.mu(n)? != 0)
    }
}

/// `λ(p^k)` from `λ(p)` by the normalized Hecke recursion.
pub fn lambda_prime_power(lambda_p: f64, k: u32) -> f64 {
    let (mut prev, mut cur) = (1.0, lambda_p);
    if k == 0 {
        return 1.0;
    }
    for _ in 1..k {
        let next = lambda_p * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}
