use super::*;
use crate::expr::parse;

/// Single integrator pushed toward a ceiling: x' = u, cost (x(1) - 1)^2,
/// constraint x <= 1/2. The q-th derivative of the constraint vanishes
/// (piecewise-constant control), so the remainder constant is exactly zero
/// and the bound is sharp up to the Bernstein hull and smoothing bias.
fn ceiling_problem(segments: usize) -> ProblemSpec {
    ProblemSpec {
        name: "ceiling".into(),
        n_x: 1,
        dynamics: vec![parse("u1", 1, 1).unwrap()],
        x0: vec![0.0],
        grid: ControlGrid::uniform(0.0, 1.0, segments, 1),
        objective: parse("(x1 - 1)^2", 1, 1).unwrap(),
        constraints: vec![PathConstraint {
            expr: parse("x1 - 0.5", 1, 1).unwrap(),
            b_upper: 0.0,
        }],
        u_lower: vec![-2.0],
        u_upper: vec![2.0],
        bound: BoundConfig { q: 3, r: 2, rho: 1500.0 },
        tolerances: Tolerances { eps_stat: 1e-3, eps_act: 1e-3 },
        ode_tol: 1e-8,
    }
}

/// The linear benchmark with one constant control segment and a remainder
/// constant inflated far beyond the true derivative bound. On coarse
/// partitions the inflated envelope makes every bound positive regardless
/// of the control, forcing Case 2 bisections before the problem opens up.
fn inflated_problem() -> ProblemSpec {
    let base = ProblemSpec {
        name: "inflated".into(),
        n_x: 2,
        dynamics: vec![parse("x2", 2, 1).unwrap(), parse("-x2 + u1", 2, 1).unwrap()],
        x0: vec![0.0, -1.0],
        grid: ControlGrid::uniform(0.0, 1.0, 1, 1),
        objective: parse("0", 2, 1).unwrap(),
        constraints: vec![PathConstraint {
            expr: parse("x2 + 0.5 - 8*(t - 0.5)^2", 2, 1).unwrap(),
            b_upper: 3300.0, // 100x the vetted constant
        }],
        u_lower: vec![-20.0],
        u_upper: vec![20.0],
        bound: BoundConfig { q: 3, r: 2, rho: 1500.0 },
        tolerances: Tolerances { eps_stat: 1e-3, eps_act: 1e-3 },
        ode_tol: 1e-8,
    };
    base.with_integral_cost(parse("x1^2 + x2^2 + 0.005*u1^2", 2, 1).unwrap())
}

#[test]
fn initial_partition_counts() {
    let mut spec = ceiling_problem(30);
    assert_eq!(Partition::initial(&spec).len(), 30);

    spec.grid = ControlGrid::uniform(0.0, 1.0, 20, 1);
    assert_eq!(Partition::initial(&spec).len(), 20);

    spec.grid = ControlGrid::uniform(0.0, 1.0, 30, 1);
    spec.constraints.push(PathConstraint {
        expr: parse("-x1 - 10", 1, 1).unwrap(),
        b_upper: 1.0,
    });
    let partition = Partition::initial(&spec);
    assert_eq!(partition.len(), 60);
    assert_eq!(partition.counts_per_constraint(), vec![30, 30]);
}

#[test]
fn subdivision_count_matches_hand_values() {
    let bias = 3f64.ln() / 1500.0;
    // (2^3 3! (eps - bias) / 260)^(1/3) = 0.0367; 0.1 / 0.0367 = 2.73
    assert_eq!(subdivision_count(0.1, 3, 260.0, 1e-3, bias), 3);
    // tiny widths floor at 2
    assert_eq!(subdivision_count(1e-6, 3, 260.0, 1e-3, bias), 2);
    // zero remainder constant bisects for hull tightening
    assert_eq!(subdivision_count(0.5, 3, 0.0, 1e-3, bias), 2);
}

#[test]
#[should_panic]
fn subdivision_count_requires_budget() {
    subdivision_count(0.1, 3, 260.0, 1e-3, 2e-3);
}

#[test]
fn detect_active_band() {
    let (active, inactive) = detect_active(&[-1e-9, -0.5, 0.0, -1e-3], 1e-6);
    assert_eq!(active, vec![0, 2]);
    assert_eq!(inactive, vec![1, 3]);
}

#[test]
fn partition_updates_preserve_covering() {
    let spec = ceiling_problem(8);
    let horizon = Interval::new(0.0, 1.0);
    let mut partition = Partition::initial(&spec);
    assert!(partition.covers_exactly(horizon));

    partition = partition.split(&[1, 4], &[3, 5]);
    assert!(partition.covers_exactly(horizon));
    assert_eq!(partition.len(), 8 - 2 + 3 + 5);

    let before = partition.max_width();
    let bisected = partition.bisect_all();
    assert!(bisected.covers_exactly(horizon));
    assert_eq!(bisected.len(), 2 * partition.len());
    assert!((bisected.max_width() - 0.5 * before).abs() < 1e-15);
}

#[test]
fn validation_rejects_bad_configs() {
    let good = ceiling_problem(4);
    assert!(good.validate().is_ok());

    // smoothing bias above the activity tolerance
    let mut bad = good.clone();
    bad.bound.rho = 100.0; // ln(3)/100 = 0.011 > 1e-3
    match bad.validate() {
        Err(SpecError::SmoothingBiasTooLarge { delta, eps_act }) => {
            assert!(delta > eps_act);
        }
        other => panic!("expected smoothing-bias rejection, got {other:?}"),
    }

    let mut bad = good.clone();
    bad.x0 = vec![0.0, 1.0];
    assert!(matches!(bad.validate(), Err(SpecError::Dimension(_))));

    let mut bad = good.clone();
    bad.u_lower = vec![3.0];
    bad.u_upper = vec![-3.0];
    assert!(matches!(bad.validate(), Err(SpecError::ControlBounds(0))));

    let mut bad = good.clone();
    bad.objective = parse("x1 + u1", 1, 1).unwrap();
    assert!(matches!(bad.validate(), Err(SpecError::ObjectiveNotMayer)));

    let mut bad = good;
    bad.bound.r = 1; // below q - 1
    assert!(matches!(bad.validate(), Err(SpecError::Bound(_))));
}

#[test]
fn integral_cost_augmentation() {
    let spec = inflated_problem();
    assert_eq!(spec.n_x, 3);
    assert_eq!(spec.dynamics.len(), 3);
    assert_eq!(spec.x0, vec![0.0, -1.0, 0.0]);
    assert!(spec.validate().is_ok());
}

#[test]
fn ceiling_problem_converges_with_feasible_certificate() {
    for method in [BoundMethod::TaylorBernstein, BoundMethod::TaylorModel] {
        let spec = ceiling_problem(4);
        let report = run(&spec, method, None, &DriverOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Converged, "{method:?}");
        assert!(
            (report.cost - 0.25).abs() < 5e-3,
            "{method:?} cost {} far from 0.25",
            report.cost
        );
        for &m in &report.certificate_max_h {
            assert!(m <= 0.0, "{method:?} certificate violated: {m}");
        }
        // the inner approximation holds at every recorded iterate
        for rec in &report.iterations {
            for &m in &rec.max_h_dense {
                assert!(m <= 0.0, "iterate {} violated: {m}", rec.k);
            }
        }
        assert!(report.iterations.len() <= 20);
    }
}

#[test]
fn relaxed_constraint_terminates_immediately() {
    let mut spec = ceiling_problem(4);
    spec.constraints[0].expr = parse("x1 - 1000000", 1, 1).unwrap();
    let report = run(&spec, BoundMethod::TaylorBernstein, None, &DriverOptions::default())
        .unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert_eq!(report.iterations.len(), 1);
    assert_eq!(report.iterations[0].case, CaseTaken::Terminated);
    assert!(report.iterations[0].active.is_empty());
    assert!((report.cost - 0.0).abs() < 1e-6);
}

#[test]
fn inflated_remainder_triggers_case2_then_converges() {
    let spec = inflated_problem();
    let report = run(&spec, BoundMethod::TaylorBernstein, None, &DriverOptions::default())
        .unwrap();
    let case2 = report.iterations.iter().filter(|r| r.case == CaseTaken::Case2).count();
    assert!(case2 >= 1, "expected at least one bisection round, saw none");
    assert_eq!(report.status, SolveStatus::Converged);
    for &m in &report.certificate_max_h {
        assert!(m <= 0.0, "certificate violated: {m}");
    }
    // widths halve across each Case 2 round
    let mut seen_case2 = false;
    for rec in &report.iterations {
        if rec.case == CaseTaken::Case2 {
            seen_case2 = true;
        }
    }
    assert!(seen_case2);
}

#[test]
fn max_width_never_grows() {
    let spec = ceiling_problem(4);
    // replay the partition updates recorded by a solve
    let report = run(&spec, BoundMethod::TaylorBernstein, None, &DriverOptions::default())
        .unwrap();
    let mut partition = Partition::initial(&spec);
    let mut last_width = partition.max_width();
    for rec in &report.iterations {
        match rec.case {
            CaseTaken::Case2 => partition = partition.bisect_all(),
            CaseTaken::Case1 => {
                let counts: Vec<usize> = rec
                    .active
                    .iter()
                    .map(|&i| {
                        let item = partition.items()[i];
                        subdivision_count(
                            item.span.width(),
                            spec.bound.q,
                            spec.constraints[item.constraint].b_upper,
                            spec.tolerances.eps_act,
                            spec.lse_bias(),
                        )
                    })
                    .collect();
                partition = partition.split(&rec.active, &counts);
            }
            CaseTaken::Terminated => {}
        }
        let width = partition.max_width();
        assert!(width <= last_width + 1e-15);
        last_width = width;
    }
}

#[test]
fn unconstrained_problem_terminates_without_a_partition() {
    let mut spec = ceiling_problem(4);
    spec.constraints.clear();
    let report = run(&spec, BoundMethod::TaylorBernstein, None, &DriverOptions::default())
        .unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(report.final_constraint_counts.is_empty());
    assert!(report.certificate_max_h.is_empty());
    assert!((report.cost - 0.0).abs() < 1e-6);
}

#[test]
fn remainder_heuristic_is_in_a_sane_range() {
    let spec = inflated_problem();
    // third total derivative of the constraint along trajectories is
    // -x2 + u, so |.| stays below |x2| + 20 for box controls
    let est = estimate_remainder_constant(&spec, 0, 8, 42).unwrap();
    assert!(est > 1.0, "estimate {est} suspiciously small");
    assert!(est < 200.0, "estimate {est} suspiciously large");
}
