//! Smooth conservative upper bounds for a path constraint on a time
//! subinterval.
//!
//! Given the vector `D` of time derivatives of the constraint at the
//! subinterval midpoint, the Taylor-Bernstein bound is the log-sum-exp of
//! the Bernstein coefficients of the Taylor polynomial plus a remainder
//! envelope: strictly above the true maximum, differentiable in the
//! controls, and with overestimation `ln(r+1)/rho + O(width^2) + O(width^q)`.
//! The Taylor-model baseline encloses the same polynomial with plain
//! interval arithmetic instead; it is kept for comparison runs.

use crate::bernstein::TransformMatrix;
use crate::interval::Interval;
use serde::{Deserialize, Serialize};

/// Which upper-bound construction a solve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMethod {
    /// Bernstein coefficient hull smoothed with log-sum-exp.
    TaylorBernstein,
    /// Natural interval extension of the Taylor polynomial (baseline).
    TaylorModel,
}

impl BoundMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMethod::TaylorBernstein => "taylor-bernstein",
            BoundMethod::TaylorModel => "taylor-model",
        }
    }

    /// Smoothing bias this method pays that does not vanish with the
    /// interval width: `ln(r+1)/rho` for the log-sum-exp bound, zero for
    /// the baseline.
    pub fn smoothing_bias(&self, params: &BoundParams) -> f64 {
        match self {
            BoundMethod::TaylorBernstein => params.lse_bias(),
            BoundMethod::TaylorModel => 0.0,
        }
    }
}

impl std::str::FromStr for BoundMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tb" | "taylor-bernstein" => Ok(BoundMethod::TaylorBernstein),
            "tm" | "taylor-model" => Ok(BoundMethod::TaylorModel),
            other => Err(format!("unknown bound method `{other}` (expected tb or tm)")),
        }
    }
}

/// Invalid bound configuration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundConfigError {
    #[error("Taylor order q must be at least 1, got {0}")]
    TaylorOrder(usize),
    #[error("Bernstein degree r = {r} is below the polynomial degree q - 1 = {}", q - 1)]
    DegreeTooLow { q: usize, r: usize },
    #[error("smoothing parameter rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("remainder constant must be nonnegative, got {0}")]
    NegativeRemainder(f64),
}

/// Parameters of the bound for one path constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Taylor expansion order; the remainder carries the q-th derivative.
    pub q: usize,
    /// Bernstein degree, at least `q - 1`.
    pub r: usize,
    /// Log-sum-exp sharpness; larger is tighter but stiffer.
    pub rho: f64,
    /// Remainder constant bounding the q-th time derivative over the whole
    /// horizon and control box.
    pub b_upper: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<(), BoundConfigError> {
        if self.q < 1 {
            return Err(BoundConfigError::TaylorOrder(self.q));
        }
        if self.r + 1 < self.q {
            return Err(BoundConfigError::DegreeTooLow { q: self.q, r: self.r });
        }
        if !(self.rho > 0.0) {
            return Err(BoundConfigError::NonPositiveRho(self.rho));
        }
        if !(self.b_upper >= 0.0) {
            return Err(BoundConfigError::NegativeRemainder(self.b_upper));
        }
        Ok(())
    }

    /// The constant log-sum-exp bias `ln(r+1)/rho`: the bound never sits
    /// closer to the true maximum than this, no matter how fine the
    /// partition.
    pub fn lse_bias(&self) -> f64 {
        ((self.r + 1) as f64).ln() / self.rho
    }
}

/// Remainder constant from global bounds on the q-th time derivative: for
/// odd `q` the symmetric interval picks up the larger magnitude; for even
/// `q` only the upper bound matters and a negative one contributes nothing.
pub fn remainder_constant_from_lambda(q: usize, lambda_lo: f64, lambda_hi: f64) -> f64 {
    assert!(lambda_lo <= lambda_hi, "empty derivative bound interval");
    if q % 2 == 1 {
        lambda_lo.abs().max(lambda_hi.abs())
    } else {
        lambda_hi.max(0.0)
    }
}

/// Remainder envelope upper bound `(1/q!) (width/2)^q B_U`.
pub fn remainder_bound(params: &BoundParams, width: f64) -> f64 {
    let mut fact = 1.0;
    for i in 2..=params.q {
        fact *= i as f64;
    }
    (0.5 * width).powi(params.q as i32) / fact * params.b_upper
}

/// Shift-stable log-sum-exp: `(1/rho) ln sum_j exp(rho v_j)`.
///
/// Computed as `max + ln1p(sum_{j != argmax} exp(rho (v_j - max))) / rho`,
/// so it never overflows and stays strictly above the maximum whenever any
/// shifted exponential is representable.
pub fn lse(values: &[f64], rho: f64) -> f64 {
    let max = max_of(values);
    max + lse_max_gap(values, rho)
}

/// The gap `lse(values) - max(values)`, computed directly in shifted form.
/// Strictly positive in exact arithmetic; bounded by `ln(n)/rho`.
pub fn lse_max_gap(values: &[f64], rho: f64) -> f64 {
    assert!(rho > 0.0 && !values.is_empty());
    let max = max_of(values);
    let mut skipped_max = false;
    let mut rest = 0.0;
    for &v in values {
        if !skipped_max && v == max {
            skipped_max = true;
            continue;
        }
        rest += (rho * (v - max)).exp();
    }
    rest.ln_1p() / rho
}

/// Softmax weights `w_j = exp(rho v_j) / sum_l exp(rho v_l)`, shifted by the
/// exact maximum. Nonnegative and summing to one.
pub fn lse_weights(values: &[f64], rho: f64) -> Vec<f64> {
    assert!(rho > 0.0 && !values.is_empty());
    let max = max_of(values);
    let shifted: Vec<f64> = values.iter().map(|&v| (rho * (v - max)).exp()).collect();
    let total: f64 = shifted.iter().sum();
    shifted.into_iter().map(|e| e / total).collect()
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// One evaluated Taylor-Bernstein bound: the value, the Bernstein
/// coefficients it was built from, their softmax weights, and the remainder
/// term. `value = lse(coeffs) + remainder`.
#[derive(Debug, Clone)]
pub struct BoundEval {
    pub value: f64,
    pub coeffs: Vec<f64>,
    pub weights: Vec<f64>,
    pub remainder: f64,
}

/// The smooth Taylor-Bernstein upper bound on an interval of width
/// `m.delta()`, from the raw derivative vector `d` at the midpoint.
pub fn h_tb(params: &BoundParams, m: &TransformMatrix, d: &[f64]) -> BoundEval {
    debug_assert_eq!(m.q(), params.q);
    debug_assert_eq!(m.r(), params.r);
    let coeffs = m.coeffs_from_derivatives(d).coeffs().to_vec();
    let weights = lse_weights(&coeffs, params.rho);
    let remainder = remainder_bound(params, m.delta());
    let value = lse(&coeffs, params.rho) + remainder;
    BoundEval { value, coeffs, weights, remainder }
}

/// Gradient of the Taylor-Bernstein bound with respect to the controls:
/// `W^T M grad_d` where `grad_d` is the `q x n_u` Jacobian of the
/// derivative vector. The remainder is constant in `u` and contributes
/// nothing.
pub fn grad_h_tb(eval: &BoundEval, m: &TransformMatrix, grad_d: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(grad_d.len(), m.q(), "Jacobian row count must equal q");
    let n_u = grad_d.first().map_or(0, |row| row.len());
    // W^T M first (a q-vector), then dot into the Jacobian rows.
    let mut wm = vec![0.0; m.q()];
    for (j, &w) in eval.weights.iter().enumerate() {
        for (i, acc) in wm.iter_mut().enumerate() {
            *acc += w * m.entry(j, i);
        }
    }
    let mut grad = vec![0.0; n_u];
    for (coeff, row) in wm.iter().zip(grad_d) {
        assert_eq!(row.len(), n_u);
        for (g, &j) in grad.iter_mut().zip(row) {
            *g += coeff * j;
        }
    }
    grad
}

/// Baseline bound: upper endpoint of the natural interval evaluation of the
/// Taylor polynomial `sum_i (d_i / i!) s^i` over the symmetric interval
/// `s in [-width/2, width/2]`, plus the same remainder envelope.
pub fn taylor_model_bound(params: &BoundParams, d: &[f64], width: f64) -> f64 {
    assert_eq!(d.len(), params.q);
    let s = Interval::symmetric(0.5 * width);
    let mut acc = Interval::point(0.0);
    let mut fact = 1.0;
    for (i, &di) in d.iter().enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        acc = acc + s.pow_int(i as u32) * (di / fact);
    }
    acc.hi() + remainder_bound(params, width)
}

/// Subgradient of [`taylor_model_bound`] with respect to the controls. The
/// upper endpoint is piecewise linear in each Taylor coefficient, with the
/// active endpoint of `s^i` selected by the coefficient's sign; at a sign
/// change the subgradient takes the zero element.
pub fn grad_taylor_model(
    params: &BoundParams,
    d: &[f64],
    width: f64,
    grad_d: &[Vec<f64>],
) -> Vec<f64> {
    assert_eq!(d.len(), params.q);
    assert_eq!(grad_d.len(), params.q);
    let s = Interval::symmetric(0.5 * width);
    let n_u = grad_d.first().map_or(0, |row| row.len());
    let mut grad = vec![0.0; n_u];
    let mut fact = 1.0;
    for (i, (&di, row)) in d.iter().zip(grad_d).enumerate() {
        if i > 0 {
            fact *= i as f64;
        }
        let powers = s.pow_int(i as u32);
        let side = if di > 0.0 {
            powers.hi()
        } else if di < 0.0 {
            powers.lo()
        } else {
            0.0
        };
        let coeff = side / fact;
        for (g, &j) in grad.iter_mut().zip(row) {
            *g += coeff * j;
        }
    }
    grad
}

/// Overestimation gap `E = bound - max(samples)` against dense samples of
/// the true constraint on the subinterval. Positive for any valid bound.
pub fn overestimation_gap(bound_value: f64, h_samples: impl IntoIterator<Item = f64>) -> f64 {
    let max = h_samples.into_iter().fold(f64::NEG_INFINITY, f64::max);
    bound_value - max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::TransformCache;
    use crate::rng::SplitMix64;

    const LN3: f64 = 1.0986122886681098;

    #[test]
    fn remainder_bound_values() {
        let p = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 260.0 };
        // (1/6)(0.05)^3 * 260
        let expected = 0.05f64.powi(3) * 260.0 / 6.0;
        assert!((remainder_bound(&p, 0.1) - expected).abs() < 1e-18);
        assert!((expected - 5.416_666_666_666_667e-3).abs() < 1e-15);

        let zero = BoundParams { b_upper: 0.0, ..p };
        assert_eq!(remainder_bound(&zero, 0.1), 0.0);

        // cubic scaling under halving
        let full = remainder_bound(&p, 0.1);
        let half = remainder_bound(&p, 0.05);
        assert!((full / half - 8.0).abs() < 1e-12);
    }

    #[test]
    fn remainder_constant_parity() {
        assert_eq!(remainder_constant_from_lambda(3, -260.0, 100.0), 260.0);
        assert_eq!(remainder_constant_from_lambda(2, -260.0, 100.0), 100.0);
        assert_eq!(remainder_constant_from_lambda(2, -260.0, -5.0), 0.0);
        assert_eq!(remainder_constant_from_lambda(1, -2.0, 7.0), 7.0);
    }

    #[test]
    fn params_validation() {
        let ok = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 260.0 };
        assert!(ok.validate().is_ok());
        assert!(BoundParams { q: 0, ..ok }.validate().is_err());
        assert!(BoundParams { q: 3, r: 1, ..ok }.validate().is_err());
        assert!(BoundParams { rho: 0.0, ..ok }.validate().is_err());
        assert!(BoundParams { b_upper: -1.0, ..ok }.validate().is_err());
        assert!((ok.lse_bias() - LN3 / 1500.0).abs() < 1e-18);
    }

    #[test]
    fn lse_special_cases() {
        // equal coefficients: exactly max + ln(n)/rho
        let v = lse(&[0.0, 0.0, 0.0], 1500.0);
        assert!((v - LN3 / 1500.0).abs() < 1e-18);

        // dominated by the maximum, overflow-free, exact in doubles
        assert_eq!(lse(&[1000.0, 0.0], 1500.0), 1000.0);

        // singleton
        assert_eq!(lse(&[-3.75], 11.0), -3.75);
    }

    #[test]
    fn lse_gap_bounds() {
        let mut rng = SplitMix64::new(0x15e_0001);
        for &rho in &[10.0, 100.0, 1500.0] {
            for _ in 0..2000 {
                // r >= 1, i.e. at least two coefficients: a singleton's gap
                // is exactly zero and strictness does not apply
                let n = 2 + (rng.next_u64() % 6) as usize;
                let v: Vec<f64> = (0..n).map(|_| rng.next_in(-0.2, 0.2)).collect();
                let gap = lse_max_gap(&v, rho);
                assert!(gap > 0.0, "gap must be strictly positive ({v:?}, rho {rho})");
                assert!(gap <= (n as f64).ln() / rho + 1e-18);
                let direct = lse(&v, rho) - max_of(&v);
                assert!((gap - direct).abs() <= 1e-12 / rho);
            }
        }
    }

    #[test]
    fn weights_form_a_simplex() {
        let mut rng = SplitMix64::new(0x15e_0002);
        for _ in 0..500 {
            let n = 1 + (rng.next_u64() % 7) as usize;
            let v: Vec<f64> = (0..n).map(|_| rng.next_in(-5.0, 5.0)).collect();
            let w = lse_weights(&v, 1500.0);
            assert!(w.iter().all(|&x| x >= 0.0));
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let w = lse_weights(&[0.3, 0.3, 0.3], 1500.0);
        for &x in &w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn h_tb_constant_and_linear_cases() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 0.0 };
        let mut cache = TransformCache::new();
        let m = cache.get(3, 2, 0.4);
        let ev = h_tb(&params, &m, &[-1.0, 0.0, 0.0]);
        assert!((ev.value - (-1.0 + LN3 / 1500.0)).abs() < 1e-15);
        assert_eq!(ev.remainder, 0.0);

        // h(t) = t - c on an interval of width 1: derivatives [0, 1]
        let params = BoundParams { q: 2, r: 1, rho: 1500.0, b_upper: 0.0 };
        let m = cache.get(2, 1, 1.0);
        let ev = h_tb(&params, &m, &[0.0, 1.0]);
        assert_eq!(ev.coeffs, vec![-0.5, 0.5]);
        assert!((ev.value - 0.5).abs() < 1e-15);
    }

    /// Strict upper bound against dense sampling, on sine constraints whose
    /// q-th derivative bound is known exactly.
    #[test]
    fn h_tb_dominates_dense_samples() {
        let mut rng = SplitMix64::new(0x15e_0003);
        let mut cache = TransformCache::new();
        for _ in 0..200 {
            let amp = rng.next_in(0.2, 3.0);
            let omega = rng.next_in(0.3, 4.0);
            let center = rng.next_in(-3.0, 3.0);
            let width = rng.next_in(0.02, 0.5);
            let q = 3;
            let params = BoundParams {
                q,
                r: 2,
                rho: 1500.0,
                b_upper: amp * omega.powi(q as i32), // sup |h^(q)| exactly
            };
            // h(t) = amp sin(omega t); derivatives at the midpoint
            let d = [
                amp * (omega * center).sin(),
                amp * omega * (omega * center).cos(),
                -amp * omega * omega * (omega * center).sin(),
            ];
            let m = cache.get(q, 2, width);
            let ev = h_tb(&params, &m, &d);
            let tm = taylor_model_bound(&params, &d, width);
            let mut max_h = f64::NEG_INFINITY;
            for k in 0..=1000 {
                let t = center - 0.5 * width + width * k as f64 / 1000.0;
                max_h = max_h.max(amp * (omega * t).sin());
            }
            assert!(
                ev.value > max_h,
                "bound {} not above sampled max {max_h}",
                ev.value
            );
            assert!(tm >= max_h, "baseline {tm} below sampled max {max_h}");
        }
    }

    #[test]
    fn grad_h_tb_limit_cases() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 1.0 };
        let mut cache = TransformCache::new();
        let m = cache.get(3, 2, 0.25);

        // equal coefficients: every weight is 1/(r+1)
        let ev = h_tb(&params, &m, &[2.0, 0.0, 0.0]);
        for &w in &ev.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }

        // zero Jacobian: zero gradient
        let grad = grad_h_tb(&ev, &m, &[vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]]);
        assert_eq!(grad, vec![0.0; 4]);
    }

    /// Gradient against central finite differences on an analytic
    /// derivative-vector map (no ODE in the loop).
    #[test]
    fn grad_h_tb_matches_finite_differences() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 2.0 };
        let mut cache = TransformCache::new();
        let width = 0.3;
        let m = cache.get(3, 2, width);

        // D(u) with dense cross-dependence on three controls
        let d_of = |u: &[f64]| {
            [
                (u[0] - 0.3 * u[1]).sin() + 0.5 * u[2],
                u[1] * u[1] - u[0] * u[2] + 0.2,
                (0.4 * u[0]).cos() + u[1] - 2.0 * u[2],
            ]
        };
        let jac_of = |u: &[f64]| {
            vec![
                vec![(u[0] - 0.3 * u[1]).cos(), -0.3 * (u[0] - 0.3 * u[1]).cos(), 0.5],
                vec![-u[2], 2.0 * u[1], -u[0]],
                vec![-0.4 * (0.4 * u[0]).sin(), 1.0, -2.0],
            ]
        };
        let value = |u: &[f64]| h_tb(&params, &m, &d_of(u)).value;

        let mut rng = SplitMix64::new(0x15e_0004);
        for _ in 0..50 {
            let u = [rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)];
            let ev = h_tb(&params, &m, &d_of(&u));
            let grad = grad_h_tb(&ev, &m, &jac_of(&u));
            for k in 0..3 {
                let h = 1e-6;
                let mut up = u;
                let mut um = u;
                up[k] += h;
                um[k] -= h;
                let fd = (value(&up) - value(&um)) / (2.0 * h);
                assert!(
                    (grad[k] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                    "analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn taylor_model_cases() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 6.0 };
        // constant polynomial: c + remainder
        let v = taylor_model_bound(&params, &[4.0, 0.0, 0.0], 0.2);
        assert!((v - (4.0 + remainder_bound(&params, 0.2))).abs() < 1e-15);

        // h(t) = t - c over width 1, no remainder
        let params = BoundParams { q: 2, r: 1, rho: 1500.0, b_upper: 0.0 };
        let v = taylor_model_bound(&params, &[0.0, 1.0], 1.0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grad_taylor_model_matches_finite_differences() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 1.0 };
        let width = 0.4;
        let d_of = |u: &[f64]| [u[0].sin() + 1.0, u[1] + 2.0 * u[0] + 0.5, u[0] * u[1] - 3.0];
        let jac_of = |u: &[f64]| {
            vec![
                vec![u[0].cos(), 0.0],
                vec![2.0, 1.0],
                vec![u[1], u[0]],
            ]
        };
        let mut rng = SplitMix64::new(0x15e_0005);
        for _ in 0..50 {
            let u = [rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)];
            let d = d_of(&u);
            // skip draws near a coefficient sign change, where only a
            // subgradient exists
            if d.iter().any(|&c| c.abs() < 1e-3) {
                continue;
            }
            let grad = grad_taylor_model(&params, &d, width, &jac_of(&u));
            for k in 0..2 {
                let h = 1e-7;
                let mut up = u;
                let mut um = u;
                up[k] += h;
                um[k] -= h;
                let fd = (taylor_model_bound(&params, &d_of(&up), width)
                    - taylor_model_bound(&params, &d_of(&um), width))
                    / (2.0 * h);
                assert!(
                    (grad[k] - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                    "analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    /// Tightness ordering between the two bounds is an empirical claim, not
    /// a pointwise one. At q = 3 the polynomial part is a quadratic: when
    /// its second derivative is nonnegative on a centered window both upper
    /// bounds are exact and coincide, and near a coefficient sign change the
    /// interval form can even undercut the coefficient hull. The hull wins
    /// strictly on the concave side, which is where constraint maxima sit.
    #[test]
    fn taylor_model_is_looser_in_the_median() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 0.0 };
        let mut cache = TransformCache::new();
        let width = 0.2;
        let m = cache.get(3, 2, width);
        let mut rng = SplitMix64::new(0x15e_0006);
        let mut diffs = Vec::new();
        let mut concave_diffs = Vec::new();
        let mut pointwise_ok = 0usize;
        let n = 1000;
        for _ in 0..n {
            let d = [rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)];
            let tb = h_tb(&params, &m, &d).value;
            let tm = taylor_model_bound(&params, &d, width);
            if tm >= tb - params.lse_bias() {
                pointwise_ok += 1;
            }
            diffs.push(tm - tb);
            if d[2] < 0.0 {
                concave_diffs.push(tm - tb);
            }
        }
        diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        concave_diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = diffs[n / 2];
        assert!(median >= -1e-12, "median(tm - tb) = {median} went negative");
        let concave_median = concave_diffs[concave_diffs.len() / 2];
        assert!(
            concave_median > 1e-4,
            "no strict improvement on concave draws: {concave_median}"
        );
        assert!(
            pointwise_ok as f64 >= 0.95 * n as f64,
            "ordering held only {pointwise_ok}/{n} times"
        );
    }

    #[test]
    fn gap_for_constant_constraint_is_exactly_the_bias() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 0.0 };
        let mut cache = TransformCache::new();
        let m = cache.get(3, 2, 0.5);
        let ev = h_tb(&params, &m, &[-2.0, 0.0, 0.0]);
        let samples = (0..=1000).map(|_| -2.0);
        let gap = overestimation_gap(ev.value, samples);
        assert!((gap - params.lse_bias()).abs() < 1e-15);
    }

    /// Width halving shrinks the width-dependent part of the gap by at
    /// least the quadratic factor (decay sits between the quadratic
    /// Bernstein term and the cubic remainder term).
    #[test]
    fn gap_minus_bias_decays_between_quadratic_and_cubic() {
        let params = BoundParams { q: 3, r: 2, rho: 1500.0, b_upper: 1.0 };
        let mut cache = TransformCache::new();
        // h(t) = sin(t) around its maximum at pi/2
        let center = std::f64::consts::FRAC_PI_2;
        let gap_at = |width: f64, cache: &mut TransformCache| {
            let d = [center.sin(), center.cos(), -center.sin()];
            let m = cache.get(3, 2, width);
            let ev = h_tb(&params, &m, &d);
            let samples =
                (0..=2000).map(|k| (center - 0.5 * width + width * k as f64 / 2000.0).sin());
            overestimation_gap(ev.value, samples)
        };
        let bias = params.lse_bias();
        let e1 = gap_at(0.2, &mut cache) - bias;
        let e2 = gap_at(0.1, &mut cache) - bias;
        assert!(e1 > 0.0 && e2 > 0.0, "width-dependent gap must be positive");
        let factor = e1 / e2;
        assert!(
            factor >= 3.0,
            "halving shrank the gap only {factor:.2}x (expected >= 3)"
        );
    }

    fn max_of(values: &[f64]) -> f64 {
        values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}
