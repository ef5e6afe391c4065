//! Dirichlet characters as explicit value tables, Gauss sums, and the
//! expansion of an additive character in multiplicative ones.
//!
//! `(Z/qZ)^*` is decomposed by CRT into cyclic factors: a primitive root for
//! each odd prime power, `-1` and `5` for `2^k` with `k >= 3`, and `-1` for
//! `4`. A character is an exponent tuple `(j_1, .., j_r)` and takes the value
//! `e(Σ j_i t_i / ord_i)` on the unit with discrete logs `t_i`. Angles are
//! exact rationals over `lcm(ord_i)` and are read from one table of roots of
//! unity, so equal angles give bit-identical values.

use num_complex::Complex64;

use crate::arith::{factorize, gcd, lcm, primitive_root_prime_power};
use crate::error::{Error, Result};
use crate::sum::{e, ComplexAccumulator};

pub const MAX_MODULUS: u64 = 100_000;

/// One cyclic factor of the unit group.
#[derive(Debug, Clone)]
struct Factor {
    order: u64,
    // discrete log of each residue mod q, u64::MAX on non-units
    dlog: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    modulus: u64,
    index: usize,
    exponents: Vec<u64>,
    values: Vec<Complex64>,
    is_principal: bool,
    is_primitive: bool,
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Position in the enumeration; 0 is the principal character.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// χ(n) for any integer n.
    pub fn value(&self, n: i64) -> Complex64 {
        self.values[n.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn is_principal(&self) -> bool {
        self.is_principal
    }

    pub fn is_primitive(&self) -> bool {
        self.is_primitive
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im.abs() < 1e-12)
    }
}

/// All characters modulo `q` together with their Gauss sums.
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    modulus: u64,
    phi: u64,
    characters: Vec<DirichletCharacter>,
    // τ(χ) and τ(χ̄) per character
    gauss: Vec<Complex64>,
    gauss_conj: Vec<Complex64>,
}

fn unit_factors(q: u64) -> Vec<Factor> {
    let qs = q as usize;
    let mut out = Vec::new();
    for (p, k) in factorize(q) {
        let pk = p.pow(k);
        // (generator, order) pairs for this prime power
        let gens: Vec<(u64, u64)> = if p == 2 {
            match k {
                1 => vec![],
                2 => vec![(3, 2)],
                _ => vec![(pk - 1, 2), (5, pk / 4)],
            }
        } else {
            vec![(primitive_root_prime_power(p, k), pk / p * (p - 1))]
        };
        if gens.is_empty() {
            continue;
        }
        // discrete logs modulo p^k for every generator of this prime power
        let mut local: Vec<Vec<u64>> = vec![vec![u64::MAX; pk as usize]; gens.len()];
        if gens.len() == 1 {
            let (g, ord) = gens[0];
            let mut x = 1u64;
            for t in 0..ord {
                local[0][x as usize] = t;
                x = x * g % pk;
            }
        } else {
            // a = (-1)^s 5^t mod 2^k
            let (g0, o0) = gens[0];
            let (g1, o1) = gens[1];
            let mut sign = 1u64;
            for s in 0..o0 {
                let mut x = sign;
                for t in 0..o1 {
                    local[0][x as usize] = s;
                    local[1][x as usize] = t;
                    x = x * g1 % pk;
                }
                sign = sign * g0 % pk;
            }
        }
        for (gi, &(_, ord)) in gens.iter().enumerate() {
            let dlog = (0..qs)
                .map(|a| {
                    if gcd(a as u64, q) != 1 {
                        u64::MAX
                    } else {
                        local[gi][a % pk as usize]
                    }
                })
                .collect();
            out.push(Factor { order: ord, dlog });
        }
    }
    out
}

impl CharacterGroup {
    pub fn new(q: u64) -> Result<Self> {
        if q == 0 || q > MAX_MODULUS {
            return Err(Error::Size {
                what: "character modulus",
                requested: q,
                limit: MAX_MODULUS,
            });
        }
        let qs = q as usize;
        let factors = unit_factors(q);
        let phi: u64 = factors.iter().map(|f| f.order).product();
        let big_l = factors.iter().fold(1, |acc, f| lcm(acc, f.order));
        let roots: Vec<Complex64> = (0..big_l).map(|k| e(k as f64 / big_l as f64)).collect();
        let additive: Vec<Complex64> = (0..q).map(|a| e(a as f64 / q as f64)).collect();
        let units: Vec<bool> = (0..q).map(|a| gcd(a, q) == 1).collect();

        // per prime p | q, the units congruent to 1 mod q/p
        let primitivity_sets: Vec<Vec<usize>> = factorize(q)
            .into_iter()
            .map(|(p, _)| {
                let r = q / p;
                (0..qs)
                    .filter(|&a| units[a] && (a as u64) % r == 1 % r)
                    .collect()
            })
            .collect();

        let mut characters = Vec::with_capacity(phi as usize);
        let mut gauss = Vec::with_capacity(phi as usize);
        let mut gauss_conj = Vec::with_capacity(phi as usize);
        for index in 0..phi as usize {
            // mixed-radix decode of the index into exponents
            let mut rest = index as u64;
            let exponents: Vec<u64> = factors
                .iter()
                .map(|f| {
                    let j = rest % f.order;
                    rest /= f.order;
                    j
                })
                .collect();
            let values: Vec<Complex64> = (0..qs)
                .map(|a| {
                    if !units[a] {
                        return Complex64::new(0.0, 0.0);
                    }
                    let mut num = 0u64;
                    for (f, &j) in factors.iter().zip(&exponents) {
                        num = (num + j * f.dlog[a] % f.order * (big_l / f.order)) % big_l;
                    }
                    roots[num as usize]
                })
                .collect();
            let is_principal = exponents.iter().all(|&j| j == 0);
            let is_primitive = primitivity_sets
                .iter()
                .all(|set| set.iter().any(|&a| (values[a] - 1.0).norm() > 1e-9));
            let g = ComplexAccumulator::sum_iter(values.iter().zip(&additive).map(|(v, w)| v * w));
            let gc = ComplexAccumulator::sum_iter(
                values.iter().zip(&additive).map(|(v, w)| v.conj() * w),
            );
            gauss.push(g);
            gauss_conj.push(gc);
            characters.push(DirichletCharacter {
                modulus: q,
                index,
                exponents,
                values,
                is_principal,
                is_primitive,
            });
        }
        Ok(Self {
            modulus: q,
            phi,
            characters,
            gauss,
            gauss_conj,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn characters(&self) -> &[DirichletCharacter] {
        &self.characters
    }

    /// τ(χ) for the character at `index`.
    pub fn gauss_sum(&self, index: usize) -> Complex64 {
        self.gauss[index]
    }

    /// τ(χ̄) for the character at `index`.
    pub fn gauss_sum_conj(&self, index: usize) -> Complex64 {
        self.gauss_conj[index]
    }

    /// `(1/φ(q)) Σ_χ χ(l) τ(χ̄) χ(n)`, which equals `e(nl/q)` for
    /// `gcd(l, q) = gcd(n, q) = 1`.
    ///
    /// Note the unconjugated `χ(l)`: with `χ̄(l)` the same sum evaluates to
    /// `e(n l^{-1} / q)` instead.
    pub fn additive_expansion(&self, l: i64, n: i64) -> Result<Complex64> {
        let q = self.modulus as i64;
        if gcd(l.rem_euclid(q) as u64, self.modulus) != 1
            || gcd(n.rem_euclid(q) as u64, self.modulus) != 1
        {
            return Err(Error::domain(format!(
                "additive expansion needs gcd(l, q) = gcd(n, q) = 1 (q={q}, l={l}, n={n})"
            )));
        }
        let mut acc = ComplexAccumulator::default();
        for (chi, g) in self.characters.iter().zip(&self.gauss_conj) {
            acc.add(chi.value(l) * g * chi.value(n));
        }
        Ok(acc.value() / self.phi as f64)
    }

    /// `max_{i,j} |Σ_a χ_i(a) conj(χ_j(a)) - φ(q) [i = j]|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, ci) in self.characters.iter().enumerate() {
            for cj in &self.characters[i..] {
                let s = ComplexAccumulator::sum_iter(
                    ci.values.iter().zip(&cj.values).map(|(a, b)| a * b.conj()),
                );
                let target = if ci.index == cj.index {
                    self.phi as f64
                } else {
                    0.0
                };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// All characters modulo `q`, principal first.
pub fn enumerate_characters(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(CharacterGroup::new(q)?.characters)
}

/// `τ(χ) = Σ_{a mod q} χ(a) e(a/q)`.
pub fn gauss_sum(chi: &DirichletCharacter) -> Complex64 {
    let q = chi.modulus as f64;
    ComplexAccumulator::sum_iter(
        chi.values
            .iter()
            .enumerate()
            .map(|(a, v)| v * e(a as f64 / q)),
    )
}

/// Free-standing form of [`CharacterGroup::additive_expansion`]; builds the
/// group on every call.
pub fn additive_expansion(q: u64, l: i64, n: i64) -> Result<Complex64> {
    CharacterGroup::new(q)?.additive_expansion(l, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_one() {
        let chars = enumerate_characters(1).unwrap();
        assert_eq!(chars.len(), 1);
        assert_eq!(chars[0].values(), &[Complex64::new(1.0, 0.0)]);
        assert!(chars[0].is_principal());
        assert!((gauss_sum(&chars[0]) - 1.0).norm() < 1e-15);
        assert!((additive_expansion(1, 0, 0).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn modulus_three() {
        let chars = enumerate_characters(3).unwrap();
        assert_eq!(chars.len(), 2);
        assert!(chars[0].is_principal());
        assert!((chars[1].value(2) + 1.0).norm() < 1e-15);
        // e(1/3) - e(2/3) = i sqrt(3)
        let g = gauss_sum(&chars[1]);
        assert!((g - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);
        let lhs = additive_expansion(3, 1, 2).unwrap();
        assert!((lhs - e(2.0 / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn modulus_four_and_five() {
        let chars = enumerate_characters(4).unwrap();
        let g = gauss_sum(&chars[1]);
        assert!((g - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        let z = additive_expansion(5, 2, 3).unwrap();
        assert!((z - e(1.0 / 5.0)).norm() < 1e-12);
    }

    #[test]
    fn modulus_eight_is_real() {
        let chars = enumerate_characters(8).unwrap();
        assert_eq!(chars.len(), 4);
        assert!(chars.iter().all(|c| c.is_real()));
        // pairwise distinct value tables
        for i in 0..4 {
            for j in i + 1..4 {
                let diff: f64 = chars[i]
                    .values()
                    .iter()
                    .zip(chars[j].values())
                    .map(|(a, b)| (a - b).norm())
                    .sum();
                assert!(diff > 1e-6);
            }
        }
    }

    #[test]
    fn non_coprime_is_domain_error() {
        assert!(matches!(additive_expansion(6, 2, 1), Err(Error::Domain(_))));
        assert!(matches!(additive_expansion(6, 1, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn size_limits() {
        assert!(CharacterGroup::new(0).is_err());
        assert!(CharacterGroup::new(MAX_MODULUS + 1).is_err());
    }

    #[test]
    fn group_gauss_sum_matches_direct() {
        let g = CharacterGroup::new(15).unwrap();
        for (i, chi) in g.characters().iter().enumerate() {
            assert!((g.gauss_sum(i) - gauss_sum(chi)).norm() < 1e-12);
        }
    }

    #[test]
    fn primitive_counts() {
        // multiplicative: p - 2 at primes, p^(k-2) (p-1)^2 at higher powers
        let expected = [1u64, 0, 1, 1, 3, 0, 5, 2, 4, 0, 9, 1];
        for (i, &want) in expected.iter().enumerate() {
            let q = i as u64 + 1;
            let got = enumerate_characters(q)
                .unwrap()
                .iter()
                .filter(|c| c.is_primitive())
                .count() as u64;
            assert_eq!(got, want, "q = {q}");
        }
    }
}
