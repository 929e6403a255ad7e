//! Bernstein-form range enclosure of polynomials.
//!
//! A polynomial on `[0, 1]` written in the Bernstein basis is bounded by the
//! minimum and maximum of its coefficients (convex hull property), and that
//! enclosure converges to the exact range quadratically in the interval
//! width, against linear decay for natural interval extension. This module
//! converts power-basis coefficients to Bernstein form, builds the constant
//! matrix mapping a vector of time derivatives at an interval midpoint to
//! Bernstein coefficients, and exposes the coefficient-hull enclosure.

use crate::interval::Interval;
use std::collections::HashMap;
use std::sync::Arc;

/// Pascal-triangle binomial table. The orders used here are tiny, so a
/// table avoids factorial overflow without any cleverness.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<f64>>,
}

impl Binomials {
    pub fn up_to(n: usize) -> Binomials {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut row = vec![1.0; i + 1];
            for j in 1..i {
                row[j] = rows[i - 1][j - 1] + rows[i - 1][j];
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    pub fn c(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k]
    }
}

/// Bernstein basis polynomial `B_j^r(tau) = C(r,j) tau^j (1-tau)^(r-j)`.
pub fn basis(j: usize, r: usize, tau: f64) -> f64 {
    assert!(j <= r, "basis index {j} out of range for degree {r}");
    let binom = Binomials::up_to(r);
    binom.c(r, j) * tau.powi(j as i32) * (1.0 - tau).powi((r - j) as i32)
}

/// A polynomial on `[0, 1]` in Bernstein form of degree `r` with `r + 1`
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinForm {
    coeffs: Vec<f64>,
}

impl BernsteinForm {
    pub fn new(coeffs: Vec<f64>) -> BernsteinForm {
        assert!(!coeffs.is_empty());
        BernsteinForm { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluates by de Casteljau recursion.
    pub fn eval(&self, tau: f64) -> f64 {
        let mut work = self.coeffs.clone();
        for level in (1..work.len()).rev() {
            for j in 0..level {
                work[j] = (1.0 - tau) * work[j] + tau * work[j + 1];
            }
        }
        work[0]
    }

    /// `[min_j b_j, max_j b_j]`; contains the polynomial's range on `[0, 1]`.
    pub fn enclosure(&self) -> Interval {
        let mut lo = self.coeffs[0];
        let mut hi = self.coeffs[0];
        for &c in &self.coeffs[1..] {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        Interval::new(lo, hi)
    }
}

/// Converts power-basis coefficients (`beta[s]` multiplies `tau^s`) to
/// Bernstein coefficients of degree `r >= n`:
/// `b_j = sum_s beta_s C(j,s) / C(r,s)`.
pub fn power_to_bernstein(beta: &[f64], r: usize) -> BernsteinForm {
    let n = beta.len().saturating_sub(1);
    assert!(
        r >= n,
        "Bernstein degree {r} below polynomial degree {n}"
    );
    let binom = Binomials::up_to(r.max(n));
    let coeffs = (0..=r)
        .map(|j| {
            (0..=n.min(j))
                .map(|s| beta[s] * binom.c(j, s) / binom.c(r, s))
                .sum()
        })
        .collect();
    BernsteinForm::new(coeffs)
}

/// Rewrites `p(t) = sum_i beta[i] t^i` as a polynomial in `tau` where
/// `t = lo + width * tau`, via a Taylor shift followed by scaling.
pub fn rebase_power_basis(beta: &[f64], lo: f64, width: f64) -> Vec<f64> {
    let n = beta.len();
    let mut a = beta.to_vec();
    // synthetic Horner shift: coefficients of p(s + lo)
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            a[j] += lo * a[j + 1];
        }
    }
    let mut scale = 1.0;
    for c in a.iter_mut() {
        *c *= scale;
        scale *= width;
    }
    a
}

/// The constant matrix mapping the derivative vector
/// `D = [h, dh/dt, ..., d^(q-1)h/dt^(q-1)]` at the midpoint of an interval
/// of width `delta` to the Bernstein coefficients of the Taylor polynomial
/// rescaled to `[0, 1]`. The `1/i!` Taylor factors live inside the matrix.
#[derive(Debug, Clone)]
pub struct TransformMatrix {
    entries: Vec<f64>, // row-major, (r + 1) x q
    q: usize,
    r: usize,
    delta: f64,
}

impl TransformMatrix {
    /// Entry `(j, i) = delta^i / i! * sum_l C(j,l)/C(r,l) C(i,l) (-1/2)^(i-l)`.
    pub fn build(q: usize, r: usize, delta: f64) -> TransformMatrix {
        assert!(q >= 1, "Taylor order must be at least 1");
        assert!(r + 1 >= q, "Bernstein degree {r} below polynomial degree {}", q - 1);
        assert!(delta > 0.0, "interval width must be positive");
        let binom = Binomials::up_to(r.max(q));
        let mut entries = Vec::with_capacity((r + 1) * q);
        for j in 0..=r {
            let mut factor = 1.0; // delta^i / i!
            for i in 0..q {
                if i > 0 {
                    factor *= delta / i as f64;
                }
                let mut sum = 0.0;
                for l in 0..=j.min(i) {
                    sum += binom.c(j, l) / binom.c(r, l)
                        * binom.c(i, l)
                        * (-0.5f64).powi((i - l) as i32);
                }
                entries.push(factor * sum);
            }
        }
        TransformMatrix { entries, q, r, delta }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn entry(&self, j: usize, i: usize) -> f64 {
        self.entries[j * self.q + i]
    }

    /// `b = M * D` as a Bernstein form.
    pub fn coeffs_from_derivatives(&self, d: &[f64]) -> BernsteinForm {
        assert_eq!(d.len(), self.q, "derivative vector length must equal q");
        let coeffs = (0..=self.r)
            .map(|j| {
                let row = &self.entries[j * self.q..(j + 1) * self.q];
                row.iter().zip(d).map(|(m, v)| m * v).sum()
            })
            .collect();
        BernsteinForm::new(coeffs)
    }

    /// Row `j` dotted into each column of a `q x n` Jacobian, producing the
    /// `(r + 1) x n` product `M * J` one output row at a time.
    pub fn apply_to_jacobian(&self, jac: &[Vec<f64>], out: &mut [Vec<f64>]) {
        assert_eq!(jac.len(), self.q);
        assert_eq!(out.len(), self.r + 1);
        let n = jac.first().map_or(0, |row| row.len());
        for (j, out_row) in out.iter_mut().enumerate() {
            assert_eq!(out_row.len(), n);
            let row = &self.entries[j * self.q..(j + 1) * self.q];
            for val in out_row.iter_mut() {
                *val = 0.0;
            }
            for (m, jac_row) in row.iter().zip(jac) {
                for (val, jv) in out_row.iter_mut().zip(jac_row) {
                    *val += m * jv;
                }
            }
        }
    }
}

/// Per-driver cache of transform matrices. Widths recur heavily because
/// subdivision produces runs of equal-width subintervals, and the matrix
/// only depends on `(q, r, width)`.
#[derive(Debug, Default)]
pub struct TransformCache {
    map: HashMap<(usize, usize, u64), Arc<TransformMatrix>>,
}

impl TransformCache {
    pub fn new() -> TransformCache {
        TransformCache { map: HashMap::new() }
    }

    pub fn get(&mut self, q: usize, r: usize, delta: f64) -> Arc<TransformMatrix> {
        self.map
            .entry((q, r, delta.to_bits()))
            .or_insert_with(|| Arc::new(TransformMatrix::build(q, r, delta)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
