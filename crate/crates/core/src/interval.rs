//! Compact real intervals and the arithmetic needed for natural interval
//! extension and remainder enclosures.
//!
//! Enclosures are validated to floating accuracy; no directed rounding is
//! performed. Division is intentionally absent from the public surface;
//! expression evaluation handles quotients itself and rejects denominators
//! that straddle zero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A closed real interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Builds `[lo, hi]`. Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval: [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// The degenerate interval `[x, x]`.
    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// The symmetric interval `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64) -> Self {
        assert!(half_width >= 0.0, "negative half width {half_width}");
        Self::new(-half_width, half_width)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `hi - lo`, always nonnegative.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `(lo + hi) / 2`; lies inside the interval.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Tight enclosure of `{x^n | x in self}`.
    ///
    /// For even `n` on an interval straddling zero the lower bound is 0,
    /// not the naive product-rule bound.
    pub fn pow_int(&self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                let (pl, ph) = (self.lo.powi(n as i32), self.hi.powi(n as i32));
                if n % 2 == 1 {
                    // odd powers are monotone
                    Interval::new(pl, ph)
                } else if self.lo >= 0.0 {
                    Interval::new(pl, ph)
                } else if self.hi <= 0.0 {
                    Interval::new(ph, pl)
                } else {
                    Interval::new(0.0, pl.max(ph))
                }
            }
        }
    }

    /// Splits into `n` contiguous equal-width intervals whose union is
    /// `self`; adjacent parts share one endpoint exactly.
    pub fn split_equal(&self, n: usize) -> Vec<Interval> {
        assert!(n >= 1, "split_equal requires n >= 1");
        let step = self.width() / n as f64;
        let mut cuts = Vec::with_capacity(n + 1);
        cuts.push(self.lo);
        for i in 1..n {
            cuts.push(self.lo + step * i as f64);
        }
        cuts.push(self.hi);
        cuts.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let candidates = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let mut lo = candidates[0];
        let mut hi = candidates[0];
        for &c in &candidates[1..] {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        Interval::new(lo, hi)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        if rhs >= 0.0 {
            Interval::new(self.lo * rhs, self.hi * rhs)
        } else {
            Interval::new(self.hi * rhs, self.lo * rhs)
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn add_is_endpoint_sum() {
        assert_eq!(
            Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0),
            Interval::new(4.0, 6.0)
        );
        assert_eq!(
            Interval::point(0.0) + Interval::new(-3.5, 7.0),
            Interval::new(-3.5, 7.0)
        );
        assert_eq!(
            Interval::new(-1.0, 1.0) + Interval::new(-1.0, 1.0),
            Interval::new(-2.0, 2.0)
        );
    }

    #[test]
    fn mul_takes_extreme_products() {
        assert_eq!(
            Interval::new(1.0, 2.0) * Interval::new(3.0, 4.0),
            Interval::new(3.0, 8.0)
        );
        // four products {3, -4, -6, 8}
        assert_eq!(
            Interval::new(-1.0, 2.0) * Interval::new(-3.0, 4.0),
            Interval::new(-6.0, 8.0)
        );
        assert_eq!(
            Interval::point(0.0) * Interval::new(-5.0, 9.0),
            Interval::point(0.0)
        );
    }

    #[test]
    fn pow_int_is_tight() {
        assert_eq!(Interval::new(-1.0, 2.0).pow_int(2), Interval::new(0.0, 4.0));
        let cube = Interval::new(-0.05, 0.05).pow_int(3);
        assert!((cube.lo() + 1.25e-4).abs() < 1e-18);
        assert!((cube.hi() - 1.25e-4).abs() < 1e-18);
        assert_eq!(Interval::new(-4.0, 9.0).pow_int(0), Interval::point(1.0));
        // strictly negative, even power
        assert_eq!(Interval::new(-3.0, -2.0).pow_int(2), Interval::new(4.0, 9.0));
    }

    #[test]
    fn hull_spans_both_operands() {
        let h = Interval::new(-2.0, 1.0).hull(&Interval::new(0.5, 3.0));
        assert_eq!(h, Interval::new(-2.0, 3.0));
        assert!(h.contains_interval(&Interval::new(-2.0, 1.0)));
    }

    #[test]
    fn width_and_midpoint() {
        let a = Interval::new(1.0, 3.0);
        assert_eq!(a.width(), 2.0);
        assert_eq!(a.midpoint(), 2.0);
        assert_eq!(Interval::point(4.25).midpoint(), 4.25);
    }

    #[test]
    fn split_equal_shares_endpoints() {
        let parts = Interval::new(0.0, 1.0).split_equal(2);
        assert_eq!(parts, vec![Interval::new(0.0, 0.5), Interval::new(0.5, 1.0)]);

        let parts = Interval::new(0.0, 3.0).split_equal(3);
        assert_eq!(
            parts,
            vec![
                Interval::new(0.0, 1.0),
                Interval::new(1.0, 2.0),
                Interval::new(2.0, 3.0)
            ]
        );

        let parts = Interval::new(-2.5, 4.5).split_equal(1);
        assert_eq!(parts, vec![Interval::new(-2.5, 4.5)]);
    }

    #[test]
    fn split_equal_reassembles() {
        let a = Interval::new(0.3, 5.9);
        for n in [1usize, 2, 7, 13] {
            let parts = a.split_equal(n);
            assert_eq!(parts.len(), n);
            assert_eq!(parts[0].lo(), a.lo());
            assert_eq!(parts[n - 1].hi(), a.hi());
            for w in parts.windows(2) {
                assert_eq!(w[0].hi(), w[1].lo(), "adjacent parts must share an endpoint");
            }
            let total: f64 = parts.iter().map(|p| p.width()).sum();
            assert!((total - a.width()).abs() < 1e-12);
        }
    }

    #[test]
    #[should_panic]
    fn split_equal_rejects_zero() {
        Interval::new(0.0, 1.0).split_equal(0);
    }

    /// Inclusion fuzz: random expressions over +, -, *, pow evaluated at
    /// sampled points always land inside the interval result.
    #[test]
    fn inclusion_fuzz() {
        let mut rng = SplitMix64::new(0x1717_0001);
        for _ in 0..200 {
            let a = random_interval(&mut rng);
            let b = random_interval(&mut rng);
            let n = (rng.next_u64() % 4) as u32;
            for _ in 0..64 {
                let x = sample(&mut rng, a);
                let y = sample(&mut rng, b);
                assert!((a + b).contains(x + y));
                assert!((a - b).contains(x - y));
                assert!((a * b).contains(x * y));
                // powers accumulate a few ulps of roundoff; allow a hair of slack
                let p = a.pow_int(n);
                let v = x.powi(n as i32);
                let slack = 1e-12 * (1.0 + v.abs());
                assert!(p.lo() - slack <= v && v <= p.hi() + slack);
                let composite = (a * b + a - b) * a;
                let value = (x * y + x - y) * x;
                let slack = 1e-10 * (1.0 + value.abs());
                assert!(composite.lo() - slack <= value && value <= composite.hi() + slack);
            }
        }
    }

    /// Monotonicity: op on subintervals stays inside op on the enclosing pair.
    #[test]
    fn inclusion_monotonicity() {
        let mut rng = SplitMix64::new(0x1717_0002);
        for _ in 0..500 {
            let a_outer = random_interval(&mut rng);
            let b_outer = random_interval(&mut rng);
            let a = random_subinterval(&mut rng, a_outer);
            let b = random_subinterval(&mut rng, b_outer);
            assert!((a_outer + b_outer).contains_interval(&(a + b)));
            assert!((a_outer - b_outer).contains_interval(&(a - b)));
            assert!((a_outer * b_outer).contains_interval(&(a * b)));
            for n in 0..4 {
                assert!(a_outer.pow_int(n).contains_interval(&a.pow_int(n)));
            }
        }
    }

    fn random_interval(rng: &mut SplitMix64) -> Interval {
        let a = rng.next_in(-5.0, 5.0);
        let b = rng.next_in(-5.0, 5.0);
        Interval::new(a.min(b), a.max(b))
    }

    fn random_subinterval(rng: &mut SplitMix64, outer: Interval) -> Interval {
        let a = sample(rng, outer);
        let b = sample(rng, outer);
        Interval::new(a.min(b), a.max(b))
    }

    fn sample(rng: &mut SplitMix64, iv: Interval) -> f64 {
        rng.next_in(iv.lo(), iv.hi())
    }
}
