//! Farey dissection of `[min(h(N), h(N')), max(h(N), h(N')))` and its
//! projection back to `(N, N']` under `h^{-1}`, where `h(x) = f'(x) + x f''(x)`.
//!
//! Arcs are the standard mediant-bounded Farey arcs of level Q intersected
//! with the dissected interval: the arc of `l/q` with Farey neighbours
//! `l-/q-` and `l+/q+` is `[(l- + l)/(q- + q), (l + l+)/(q + q+))`. The two
//! boundary arcs are clipped by the interval ends, and the lower one may
//! belong to a fraction just below the interval.

use serde::Serialize;

use crate::arith::mod_inverse;
use crate::error::{Error, Result};
use crate::phase::Phase;

/// Upper bound on `hi - lo` accepted by [`farey_fractions`].
pub const MAX_SPAN: f64 = 1e3;

const BISECTION_STEPS: usize = 60;
const NEWTON_STEPS: usize = 5;

/// A reduced fraction `l/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fraction {
    pub l: i64,
    pub q: u64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.l as f64 / self.q as f64
    }

    fn mediant(&self, other: &Fraction) -> Fraction {
        Fraction {
            l: self.l + other.l,
            q: self.q + other.q,
        }
    }

    /// `self < other`, exactly.
    fn lt(&self, other: &Fraction) -> bool {
        (self.l as i128) * (other.q as i128) < (other.l as i128) * (self.q as i128)
    }
}

/// Smallest fraction of level `order` that is `>= y`.
fn first_at_or_above(order: u64, y: f64) -> Fraction {
    let mut best: Option<Fraction> = None;
    for q in 1..=order {
        let qf = q as f64;
        let mut l = (y * qf).ceil() as i64;
        while (l - 1) as f64 / qf >= y {
            l -= 1;
        }
        while (l as f64 / qf) < y {
            l += 1;
        }
        let cand = Fraction { l, q };
        if best.is_none_or(|b| cand.lt(&b)) {
            best = Some(cand);
        }
    }
    best.expect("order >= 1")
}

/// Right Farey neighbour of `f` at level `order`.
fn successor(f: Fraction, order: u64) -> Fraction {
    // l' q - l q' = 1 with q' <= order maximal
    let b = f.q as i128;
    let d0 = if f.q == 1 {
        0
    } else {
        let inv = mod_inverse(f.l as i128, b).expect("reduced fraction");
        (b - inv) % b
    };
    let d = d0 + (order as i128 - d0) / b * b;
    let c = (1 + f.l as i128 * d) / b;
    Fraction {
        l: c as i64,
        q: d as u64,
    }
}

/// Left Farey neighbour of `f` at level `order`.
fn predecessor(f: Fraction, order: u64) -> Fraction {
    // l q' - l' q = 1 with q' <= order maximal
    let b = f.q as i128;
    let d0 = if f.q == 1 {
        0
    } else {
        mod_inverse(f.l as i128, b).expect("reduced fraction")
    };
    let d = d0 + (order as i128 - d0) / b * b;
    let c = (f.l as i128 * d - 1) / b;
    Fraction {
        l: c as i64,
        q: d as u64,
    }
}

/// The term after consecutive Farey fractions `a < b` of level `order`.
fn next_term(a: Fraction, b: Fraction, order: u64) -> Fraction {
    let k = (order + a.q) / b.q;
    Fraction {
        l: k as i64 * b.l - a.l,
        q: k * b.q - a.q,
    }
}

/// All reduced `l/q` with `q <= order` and `lo <= l/q < hi`, ascending.
pub fn farey_fractions(order: u64, lo: f64, hi: f64) -> Result<Vec<Fraction>> {
    if order == 0 {
        return Err(Error::domain("Farey order must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain("Farey interval must be finite"));
    }
    if hi - lo > MAX_SPAN {
        return Err(Error::Size {
            what: "Farey interval span",
            requested: (hi - lo).ceil() as u64,
            limit: MAX_SPAN as u64,
        });
    }
    if lo >= hi {
        return Ok(Vec::new());
    }
    let first = first_at_or_above(order, lo);
    if first.value() >= hi {
        return Ok(Vec::new());
    }
    let mut out = vec![first];
    let mut prev = first;
    let mut cur = successor(first, order);
    while cur.value() < hi {
        out.push(cur);
        let next = next_term(prev, cur, order);
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// The map `h = f' + x f''` of a phase and its inverse on a bracket.
#[derive(Debug, Clone, Copy)]
pub struct HMap<'a, P: Phase> {
    phase: &'a P,
}

impl<'a, P: Phase> HMap<'a, P> {
    pub fn new(phase: &'a P) -> Self {
        Self { phase }
    }

    pub fn phase(&self) -> &'a P {
        self.phase
    }

    pub fn h(&self, x: f64) -> f64 {
        self.phase.h(x)
    }

    pub fn h_prime(&self, x: f64) -> f64 {
        self.phase.h_prime(x)
    }

    /// Sign of `h'` if it is constant and nonzero on 65 sample points of
    /// `[lo, hi]`.
    pub fn monotone_sign(&self, lo: f64, hi: f64) -> Option<f64> {
        let s = self.h_prime(lo).signum();
        let ok = (0..=64).all(|i| {
            let x = lo + (hi - lo) * i as f64 / 64.0;
            let d = self.h_prime(x);
            d != 0.0 && d.signum() == s
        });
        ok.then_some(s)
    }

    /// `x` in the bracket with `h(x) = y`: 60 bisection steps, then up to
    /// five Newton steps with the exact `h'`.
    pub fn h_inverse(&self, y: f64, (a, b): (f64, f64)) -> Result<f64> {
        let (ha, hb) = (self.h(a), self.h(b));
        let (lo, hi) = (ha.min(hb), ha.max(hb));
        let slack = 1e-14 * y.abs();
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(Error::Bracket { y, lo, hi });
        }
        if y <= lo {
            return Ok(if ha <= hb { a } else { b });
        }
        if y >= hi {
            return Ok(if ha >= hb { a } else { b });
        }
        let increasing = hb > ha;
        let (mut xa, mut xb) = (a, b);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (xa + xb);
            if (self.h(mid) < y) == increasing {
                xa = mid;
            } else {
                xb = mid;
            }
        }
        let mut x = 0.5 * (xa + xb);
        let mut resid = (self.h(x) - y).abs();
        for _ in 0..NEWTON_STEPS {
            let step = (self.h(x) - y) / self.h_prime(x);
            let cand = x - step;
            if !(cand >= a.min(b) && cand <= a.max(b)) {
                break;
            }
            let r = (self.h(cand) - y).abs();
            if r >= resid {
                break;
            }
            x = cand;
            resid = r;
        }
        Ok(x)
    }
}

/// One arc of the dissection. The projected interval is `(x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FareyArc {
    pub q: u64,
    pub l: i64,
    pub arc_lo: f64,
    pub arc_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x0: f64,
}

impl FareyArc {
    pub fn fraction(&self) -> Fraction {
        Fraction {
            l: self.l,
            q: self.q,
        }
    }

    /// `x0 - x_lo`
    pub fn m1(&self) -> f64 {
        self.x0 - self.x_lo
    }

    /// `x_hi - x0`
    pub fn m2(&self) -> f64 {
        self.x_hi - self.x0
    }

    /// Integers in `(x_lo, x_hi]` as an inclusive range (possibly empty).
    pub fn terms(&self) -> std::ops::RangeInclusive<u64> {
        (self.x_lo.floor() as u64 + 1)..=(self.x_hi.floor() as u64)
    }

    pub fn term_count(&self) -> u64 {
        let r = self.terms();
        (r.end() + 1).saturating_sub(*r.start())
    }
}

/// The true solution of `h(x) = l/q` for an arc. Equals `arc.x0` unless the
/// fraction lies outside the h-image of the summation range (first or last
/// arc), in which case the bracket is widened until it contains `l/q`.
pub fn arc_center<P: Phase>(hmap: &HMap<'_, P>, arc: &FareyArc) -> Result<f64> {
    let y = arc.fraction().value();
    let (mut a, mut b) = (arc.x_lo.max(f64::MIN_POSITIVE), arc.x_hi);
    for _ in 0..64 {
        let (ha, hb) = (hmap.h(a), hmap.h(b));
        if y >= ha.min(hb) && y <= ha.max(hb) {
            return hmap.h_inverse(y, (a, b));
        }
        a *= 0.5;
        b *= 2.0;
    }
    Err(Error::Bracket {
        y,
        lo: hmap.h(a).min(hmap.h(b)),
        hi: hmap.h(a).max(hmap.h(b)),
    })
}

/// Farey dissection of level `order` of the h-image of `[n, nprime]`.
pub fn dissect<P: Phase>(
    hmap: &HMap<'_, P>,
    order: u64,
    n: f64,
    nprime: f64,
) -> Result<Vec<FareyArc>> {
    if !(n >= 1.0 && n < nprime && nprime <= 2.0 * n) {
        return Err(Error::domain(format!(
            "dissection needs 1 <= N < N' <= 2N (N={n}, N'={nprime})"
        )));
    }
    if order == 0 || order as f64 > n {
        return Err(Error::domain(format!(
            "level Q must satisfy 1 <= Q <= N (Q={order})"
        )));
    }
    let sign = hmap
        .monotone_sign(n, nprime)
        .ok_or(Error::NotMonotone { lo: n, hi: nprime })?;
    let decreasing = sign < 0.0;
    let (ya, yb) = (hmap.h(n), hmap.h(nprime));
    let (ylo, yhi) = (ya.min(yb), ya.max(yb));
    // x-coordinates of the interval ends
    let (x_at_ylo, x_at_yhi) = if decreasing { (nprime, n) } else { (n, nprime) };

    // the fraction whose Farey arc contains ylo
    let f1 = first_at_or_above(order, ylo);
    let f0 = predecessor(f1, order);
    let start = if ylo < f0.mediant(&f1).value() {
        f0
    } else {
        f1
    };

    let mut seams_y = vec![ylo];
    let mut fractions = Vec::new();
    let mut prev = predecessor(start, order);
    let mut cur = start;
    loop {
        let next = next_term(prev, cur, order);
        fractions.push(cur);
        let right = cur.mediant(&next).value();
        if right >= yhi {
            seams_y.push(yhi);
            break;
        }
        seams_y.push(right);
        prev = cur;
        cur = next;
    }

    let last = seams_y.len() - 1;
    let seams_x: Vec<f64> = seams_y
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if i == 0 {
                Ok(x_at_ylo)
            } else if i == last {
                Ok(x_at_yhi)
            } else {
                hmap.h_inverse(y, (n, nprime))
            }
        })
        .collect::<Result<_>>()?;

    fractions
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (xa, xb) = (seams_x[i], seams_x[i + 1]);
            let y0 = f.value();
            let x0 = if y0 < ylo {
                x_at_ylo
            } else if y0 > yhi {
                x_at_yhi
            } else {
                hmap.h_inverse(y0, (n, nprime))?
            };
            Ok(FareyArc {
                q: f.q,
                l: f.l,
                arc_lo: seams_y[i],
                arc_hi: seams_y[i + 1],
                x_lo: xa.min(xb),
                x_hi: xa.max(xb),
                x0,
            })
        })
        .collect()
}
