//! Unit exponentials and compensated accumulation.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::dd::DoubleDouble;

/// `e(x) = exp(2 pi i x)`, reducing `x` to `[-1/2, 1/2]` first.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `e(x)` for a double-double phase; only the fractional part is used.
#[inline]
pub fn e_dd(x: DoubleDouble) -> Complex64 {
    e(x.frac())
}

/// Neumaier summation of one real stream.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex accumulator (independent Neumaier streams for the
/// real and imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAccumulator {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexAccumulator {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn sum_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Complex64 {
        let mut acc = Self::default();
        for z in iter {
            acc.add(z);
        }
        acc.value()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_of_quarters() {
        assert!((e(0.25) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((e(1.5) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((e(-3.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut acc = Neumaier::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.0)).collect();
        assert!((loglog_slope(&xs, &ys) + 2.0).abs() < 1e-12);
    }
}
