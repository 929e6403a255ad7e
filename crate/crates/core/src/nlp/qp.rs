//! Dense convex QP solver (Goldfarb-Idnani dual active-set method).
//!
//! Minimizes `0.5 x^T G x + g0^T x` subject to `C^T x + c0 >= 0` with `G`
//! symmetric positive definite. Being a dual method it needs no feasible
//! starting point and detects an empty feasible region cleanly, which is
//! exactly what the SQP layer needs from its subproblem solver. The
//! factorization updates follow the classical formulation: a Cholesky
//! factor of `G` taken once, and a QR factorization of the active-set
//! normals maintained by Givens rotations.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("quadratic program is infeasible")]
    Infeasible,
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("active-set iteration limit reached")]
    IterationLimit,
    #[error("degenerate active set encountered")]
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// One multiplier per constraint column, zero when inactive.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// Solves `min 0.5 x^T G x + g0^T x  s.t.  C^T x + c0 >= 0`, where the
/// columns of `ci` (`n x m`) are the constraint normals.
pub fn solve_qp(
    g: &DMatrix<f64>,
    g0: &DVector<f64>,
    ci: &DMatrix<f64>,
    ci0: &DVector<f64>,
) -> Result<QpSolution, QpError> {
    let n = g.nrows();
    let m = ci.ncols();
    assert_eq!(g.ncols(), n);
    assert_eq!(g0.len(), n);
    assert_eq!(ci.nrows(), n);
    assert_eq!(ci0.len(), m);

    let chol = g.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    // J = L^{-T}; then J J^T = G^{-1}
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let mut j_mat = l_inv.transpose();

    // unconstrained minimum
    let mut x = -chol.solve(g0);
    let mut f_value = 0.5 * g0.dot(&x);

    let mut r_mat = DMatrix::<f64>::zeros(n, n);
    let mut r_norm = 1.0f64;
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n);

    let scale = 1.0 + ci0.amax().max(g0.amax());
    let eps = 1e-11 * scale;

    let mut d = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(n);
    let mut r = DVector::<f64>::zeros(n);

    let max_iters = 20 * (m + n + 1);
    let mut iterations = 0;

    'outer: loop {
        iterations += 1;
        if iterations > max_iters {
            return Err(QpError::IterationLimit);
        }

        // most violated inactive constraint
        let mut ip = usize::MAX;
        let mut s_ip = -eps;
        for col in 0..m {
            if active.contains(&col) {
                continue;
            }
            let s = ci.column(col).dot(&x) + ci0[col];
            if s < s_ip {
                s_ip = s;
                ip = col;
            }
        }
        if ip == usize::MAX {
            let mut multipliers = vec![0.0; m];
            for (idx, &a) in active.iter().enumerate() {
                multipliers[a] = u[idx];
            }
            return Ok(QpSolution { x, objective: f_value, multipliers, active, iterations });
        }

        let np = ci.column(ip).clone_owned();
        let mut u_cand = 0.0f64;

        loop {
            iterations += 1;
            if iterations > max_iters {
                return Err(QpError::IterationLimit);
            }
            let q = active.len();

            // d = J^T np; z from the null-space columns; r from R
            d.gemv_tr(1.0, &j_mat, &np, 0.0);
            z.fill(0.0);
            for col in q..n {
                let dc = d[col];
                if dc != 0.0 {
                    z.axpy(dc, &j_mat.column(col), 1.0);
                }
            }
            for i in (0..q).rev() {
                let mut acc = d[i];
                for k in i + 1..q {
                    acc -= r_mat[(i, k)] * r[k];
                }
                r[i] = acc / r_mat[(i, i)];
            }

            // dual blocking step over positive r components
            let mut t1 = f64::INFINITY;
            let mut l_drop = None;
            for k in 0..q {
                if r[k] > 0.0 {
                    let ratio = u[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        l_drop = Some(k);
                    }
                }
            }

            // primal step to make constraint ip feasible
            let znp = z.dot(&np);
            let t2 = if z.norm_squared() > eps * eps { -s_ip / znp } else { f64::INFINITY };

            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }

            if !t2.is_finite() {
                // step in dual space only
                for k in 0..q {
                    u[k] -= t * r[k];
                }
                u_cand += t;
                let k = l_drop.expect("dual step requires a blocking constraint");
                delete_constraint(&mut r_mat, &mut j_mat, &mut active, &mut u, k);
                continue;
            }

            x.axpy(t, &z, 1.0);
            f_value += t * znp * (0.5 * t + u_cand);
            for k in 0..q {
                u[k] -= t * r[k];
            }
            u_cand += t;

            if (t - t2).abs() <= eps {
                // full step: constraint ip joins the active set
                if !add_constraint(&mut r_mat, &mut j_mat, &mut d, q, &mut r_norm) {
                    return Err(QpError::Degenerate);
                }
                active.push(ip);
                u.push(u_cand);
                continue 'outer;
            }

            // partial step: drop the blocking constraint, stay on ip
            let k = l_drop.expect("partial step requires a blocking constraint");
            delete_constraint(&mut r_mat, &mut j_mat, &mut active, &mut u, k);
            s_ip = ci.column(ip).dot(&x) + ci0[ip];
        }
    }
}

/// Rotates `d[q+1..n]` into `d[q]`, carrying the rotations into `J`, and
/// stores the leading entries as the new last column of `R`. Returns false
/// when the new column is linearly dependent on the active set.
fn add_constraint(
    r_mat: &mut DMatrix<f64>,
    j_mat: &mut DMatrix<f64>,
    d: &mut DVector<f64>,
    q: usize,
    r_norm: &mut f64,
) -> bool {
    let n = d.len();
    for j in (q + 1..n).rev() {
        let cc = d[j - 1];
        let ss = d[j];
        let h = cc.hypot(ss);
        if h == 0.0 {
            continue;
        }
        d[j] = 0.0;
        let mut c = cc / h;
        let mut s = ss / h;
        if c < 0.0 {
            c = -c;
            s = -s;
            d[j - 1] = -h;
        } else {
            d[j - 1] = h;
        }
        let xny = s / (1.0 + c);
        for k in 0..n {
            let t1 = j_mat[(k, j - 1)];
            let t2 = j_mat[(k, j)];
            j_mat[(k, j - 1)] = t1 * c + t2 * s;
            j_mat[(k, j)] = xny * (t1 + j_mat[(k, j - 1)]) - t2;
        }
    }
    for i in 0..=q {
        r_mat[(i, q)] = d[i];
    }
    if d[q].abs() <= f64::EPSILON * r_norm.max(1.0) * 128.0 {
        return false;
    }
    *r_norm = r_norm.max(d[q].abs());
    true
}

/// Removes active constraint `k` and restores the triangularity of `R`.
fn delete_constraint(
    r_mat: &mut DMatrix<f64>,
    j_mat: &mut DMatrix<f64>,
    active: &mut Vec<usize>,
    u: &mut Vec<f64>,
    k: usize,
) {
    let n = j_mat.nrows();
    let q = active.len();
    active.remove(k);
    u.remove(k);
    for col in k..q - 1 {
        for row in 0..n {
            r_mat[(row, col)] = r_mat[(row, col + 1)];
        }
    }
    for row in 0..n {
        r_mat[(row, q - 1)] = 0.0;
    }
    let q = q - 1;

    for j in k..q {
        let cc = r_mat[(j, j)];
        let ss = r_mat[(j + 1, j)];
        let h = cc.hypot(ss);
        if h == 0.0 {
            continue;
        }
        let mut c = cc / h;
        let mut s = ss / h;
        r_mat[(j + 1, j)] = 0.0;
        if c < 0.0 {
            r_mat[(j, j)] = -h;
            c = -c;
            s = -s;
        } else {
            r_mat[(j, j)] = h;
        }
        let xny = s / (1.0 + c);
        for col in j + 1..q {
            let t1 = r_mat[(j, col)];
            let t2 = r_mat[(j + 1, col)];
            r_mat[(j, col)] = t1 * c + t2 * s;
            r_mat[(j + 1, col)] = xny * (t1 + r_mat[(j, col)]) - t2;
        }
        for row in 0..n {
            let t1 = j_mat[(row, j)];
            let t2 = j_mat[(row, j + 1)];
            j_mat[(row, j)] = t1 * c + t2 * s;
            j_mat[(row, j + 1)] = xny * (j_mat[(row, j)] + t1) - t2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn solve(
        g: Vec<Vec<f64>>,
        g0: Vec<f64>,
        ci_cols: Vec<Vec<f64>>,
        ci0: Vec<f64>,
    ) -> Result<QpSolution, QpError> {
        let n = g0.len();
        let g = DMatrix::from_fn(n, n, |i, j| g[i][j]);
        let g0 = DVector::from_vec(g0);
        let m = ci_cols.len();
        let ci = DMatrix::from_fn(n, m, |i, j| ci_cols[j][i]);
        let ci0 = DVector::from_vec(ci0);
        solve_qp(&g, &g0, &ci, &ci0)
    }

    #[test]
    fn unconstrained_minimum() {
        // min (x-3)^2 -> 0.5*2x^2 - 6x
        let sol = solve(vec![vec![2.0]], vec![-6.0], vec![], vec![]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!(sol.active.is_empty());
    }

    #[test]
    fn single_active_constraint() {
        // min x^2 s.t. x >= 1  (columns: 1*x - 1 >= 0)
        let sol = solve(vec![vec![2.0]], vec![0.0], vec![vec![1.0]], vec![-1.0]).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inactive_constraint_stays_inactive() {
        // min (x-3)^2 s.t. x >= 1
        let sol = solve(vec![vec![2.0]], vec![-6.0], vec![vec![1.0]], vec![-1.0]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert_eq!(sol.multipliers[0], 0.0);
    }

    #[test]
    fn two_dimensional_corner() {
        // min 0.5(x^2 + y^2) - x - y  s.t. x <= 0.25, y <= 0.25
        let sol = solve(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![-1.0, -1.0],
            vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![0.25, 0.25],
        )
        .unwrap();
        assert!((sol.x[0] - 0.25).abs() < 1e-12);
        assert!((sol.x[1] - 0.25).abs() < 1e-12);
        assert!((sol.multipliers[0] - 0.75).abs() < 1e-12);
        assert!((sol.multipliers[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_are_harmless() {
        // the same face twice: one copy joins the active set, the other
        // stays satisfied with zero multiplier
        let sol = solve(
            vec![vec![2.0]],
            vec![0.0],
            vec![vec![1.0], vec![1.0]],
            vec![-1.0, -1.0],
        )
        .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-10);
        let total: f64 = sol.multipliers.iter().sum();
        assert!((total - 2.0).abs() < 1e-9);
        assert!(sol.multipliers.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn detects_infeasible_pair() {
        // x >= 1 and x <= -1
        let err = solve(
            vec![vec![2.0]],
            vec![0.0],
            vec![vec![1.0], vec![-1.0]],
            vec![-1.0, -1.0],
        )
        .unwrap_err();
        assert_eq!(err, QpError::Infeasible);
    }

    #[test]
    fn rejects_indefinite_hessian() {
        let err = solve(vec![vec![-1.0]], vec![0.0], vec![], vec![]).unwrap_err();
        assert_eq!(err, QpError::NotPositiveDefinite);
    }

    /// Planted-KKT oracle: build random convex QPs whose optimum and
    /// multipliers are known by construction, then recover them.
    #[test]
    fn recovers_planted_kkt_points() {
        let mut rng = SplitMix64::new(0x4b_0001);
        for trial in 0..40 {
            let n = 2 + (rng.next_u64() % 5) as usize;
            let m = 1 + (rng.next_u64() % (2 * n as u64)) as usize;
            let n_active = (rng.next_u64() % (n as u64 + 1)).min(m as u64) as usize;

            // SPD Hessian: A A^T + n I
            let a = DMatrix::from_fn(n, n, |_, _| rng.next_in(-1.0, 1.0));
            let g = &a * a.transpose() + DMatrix::identity(n, n) * n as f64;

            let x_star = DVector::from_fn(n, |_, _| rng.next_in(-2.0, 2.0));

            // random normals; re-draw near-dependent active sets
            let ci = DMatrix::from_fn(n, m, |_, _| rng.next_in(-1.0, 1.0));
            if n_active > 0 {
                let act = ci.columns(0, n_active).clone_owned();
                let gram = act.transpose() * &act;
                if gram.determinant().abs() < 1e-3 {
                    continue;
                }
            }

            // active rows tight with positive multipliers, the rest slack
            let mut ci0 = DVector::zeros(m);
            let mut lambda_star = vec![0.0; m];
            for col in 0..m {
                let dot = ci.column(col).dot(&x_star);
                if col < n_active {
                    ci0[col] = -dot;
                    lambda_star[col] = rng.next_in(0.1, 3.0);
                } else {
                    ci0[col] = -dot + rng.next_in(0.1, 2.0);
                }
            }

            // stationarity G x + g0 - C lambda = 0 at x*:
            // g0 = C lambda - G x*
            let g0 = {
                let mut v = -(&g * &x_star);
                for col in 0..n_active {
                    v.axpy(lambda_star[col], &ci.column(col), 1.0);
                }
                v
            };

            let sol = solve_qp(&g, &g0, &ci, &ci0)
                .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            for i in 0..n {
                assert!(
                    (sol.x[i] - x_star[i]).abs() < 1e-6,
                    "trial {trial}: x[{i}] = {} vs {}",
                    sol.x[i],
                    x_star[i]
                );
            }
            for col in 0..m {
                assert!(
                    (sol.multipliers[col] - lambda_star[col]).abs() < 1e-4,
                    "trial {trial}: lambda[{col}] = {} vs {}",
                    sol.multipliers[col],
                    lambda_star[col]
                );
            }
        }
    }

    /// The solution must satisfy the KKT system to tight tolerance even on
    /// larger random feasible problems.
    #[test]
    fn kkt_residuals_are_tight() {
        let mut rng = SplitMix64::new(0x4b_0002);
        for _ in 0..30 {
            let n = 3 + (rng.next_u64() % 8) as usize;
            let m = 1 + (rng.next_u64() % 20) as usize;
            let a = DMatrix::from_fn(n, n, |_, _| rng.next_in(-1.0, 1.0));
            let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
            let g0 = DVector::from_fn(n, |_, _| rng.next_in(-2.0, 2.0));
            let ci = DMatrix::from_fn(n, m, |_, _| rng.next_in(-1.0, 1.0));
            // keep the origin feasible with margin so the problem is solvable
            let ci0 = DVector::from_fn(m, |_, _| rng.next_in(0.1, 1.0));

            let sol = solve_qp(&g, &g0, &ci, &ci0).unwrap();
            // stationarity: G x + g0 - C lambda = 0
            let lambda = DVector::from_vec(sol.multipliers.clone());
            let resid = &g * &sol.x + &g0 - &ci * &lambda;
            assert!(resid.amax() < 1e-8, "stationarity residual {}", resid.amax());
            for col in 0..m {
                let slack = ci.column(col).dot(&sol.x) + ci0[col];
                assert!(slack > -1e-8, "primal feasibility violated: {slack}");
                assert!(sol.multipliers[col] >= 0.0);
                assert!(
                    sol.multipliers[col] * slack < 1e-7,
                    "complementarity violated"
                );
            }
        }
    }
}
