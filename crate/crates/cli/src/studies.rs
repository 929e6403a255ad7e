//! Sampling studies behind the `gap-study` and `rate-study` subcommands.

use crate::CliError;
use pathbound::bernstein::{power_to_bernstein, rebase_power_basis};
use pathbound::bound::{self, BoundMethod};
use pathbound::driver::{CompiledProblem, Partition, ProblemSpec};
use pathbound::interval::Interval;
use pathbound::rng::SplitMix64;

/// Overestimation gaps of both bound constructions on one subinterval at
/// one sampled control. Pooling subintervals matches how the dispersion of
/// the two constructions is compared: taking a per-sample maximum instead
/// would concentrate the looser bound's distribution and hide exactly the
/// spread the study is after.
#[derive(Debug, Clone)]
pub struct GapSample {
    pub sample: usize,
    /// Subinterval index within the initial partition; `None` marks a
    /// failed integration (the whole sample is excluded).
    pub subinterval: Option<usize>,
    pub gap_tb: f64,
    pub gap_tm: f64,
}

impl GapSample {
    pub fn failed(&self) -> bool {
        self.subinterval.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct GapSummary {
    pub samples_used: usize,
    pub median: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

impl GapSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone)]
pub struct GapStudy {
    pub rows: Vec<GapSample>,
    pub tb: GapSummary,
    pub tm: GapSummary,
}

/// Samples controls uniformly from the box; for each sample and each
/// subinterval of the initial partition, measures the overestimation gap
/// `bound(T_i) - max_{t in T_i} h` of both bound constructions.
pub fn gap_study(spec: &ProblemSpec, samples: usize, seed: u64) -> Result<GapStudy, CliError> {
    if samples == 0 {
        return Err(CliError::Config("gap study needs at least one sample".into()));
    }
    let compiled = CompiledProblem::new(spec.clone());
    let partition = Partition::initial(spec);
    let mut cache = pathbound::bernstein::TransformCache::new();
    let mut rng = SplitMix64::new(seed);
    let (lower, upper) = (spec.flat_lower(), spec.flat_upper());

    let mut rows = Vec::with_capacity(samples * partition.len());
    for sample in 0..samples {
        let u: Vec<f64> = lower
            .iter()
            .zip(&upper)
            .map(|(&lo, &hi)| rng.next_in(lo, hi))
            .collect();
        let traj = match compiled.integrate_values(&u) {
            Ok(t) => t,
            Err(_) => {
                rows.push(GapSample {
                    sample,
                    subinterval: None,
                    gap_tb: f64::NAN,
                    gap_tm: f64::NAN,
                });
                continue;
            }
        };
        let mut sample_rows = Vec::with_capacity(partition.len());
        let mut ok = true;
        for (i, item) in partition.items().iter().enumerate() {
            let point = (|| -> Option<(f64, f64)> {
                let max_h =
                    compiled.dense_max_on(&traj, item.constraint, item.span, 256).ok()?;
                let tb = compiled
                    .bound_value(&traj, item, BoundMethod::TaylorBernstein, &mut cache)
                    .ok()?;
                let tm = compiled
                    .bound_value(&traj, item, BoundMethod::TaylorModel, &mut cache)
                    .ok()?;
                Some((
                    bound::overestimation_gap(tb, [max_h]),
                    bound::overestimation_gap(tm, [max_h]),
                ))
            })();
            match point {
                Some((gap_tb, gap_tm)) => {
                    sample_rows.push(GapSample { sample, subinterval: Some(i), gap_tb, gap_tm });
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            rows.extend(sample_rows);
        } else {
            rows.push(GapSample { sample, subinterval: None, gap_tb: f64::NAN, gap_tm: f64::NAN });
        }
    }

    let tb = summarize(rows.iter().filter(|r| !r.failed()).map(|r| r.gap_tb))?;
    let tm = summarize(rows.iter().filter(|r| !r.failed()).map(|r| r.gap_tm))?;
    Ok(GapStudy { rows, tb, tm })
}

fn summarize(values: impl Iterator<Item = f64>) -> Result<GapSummary, CliError> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return Err(CliError::Runtime("every gap sample failed to integrate".into()));
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok(GapSummary {
        samples_used: v.len(),
        median: quantile(&v, 0.5),
        mean,
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
    })
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac
    }
}

pub fn gap_study_csv(study: &GapStudy) -> String {
    let mut out = String::from("sample,subinterval,status,gap_tb,gap_tm\n");
    for row in &study.rows {
        match row.subinterval {
            None => out.push_str(&format!("{},,failed,,\n", row.sample)),
            Some(i) => out.push_str(&format!(
                "{},{},ok,{},{}\n",
                row.sample, i, row.gap_tb, row.gap_tm
            )),
        }
    }
    for (name, s) in [("tb", &study.tb), ("tm", &study.tm)] {
        out.push_str(&format!(
            "# summary,{name},samples={},median={},mean={},q1={},q3={},iqr={}\n",
            s.samples_used,
            s.median,
            s.mean,
            s.q1,
            s.q3,
            s.iqr()
        ));
    }
    out
}

/// One built-in test polynomial for the convergence-rate study: power-basis
/// coefficients plus the interior critical point the windows are centered
/// on (windows away from critical points become monotone and both
/// enclosures turn exact, hiding the decay orders).
struct RatePolynomial {
    name: &'static str,
    beta: &'static [f64],
    center: f64,
}

const RATE_POLYNOMIALS: &[RatePolynomial] = &[
    RatePolynomial { name: "constant", beta: &[2.5], center: 0.4 },
    // p'(1/3) = 0, p''(1/3) = -2
    RatePolynomial { name: "cubic-a", beta: &[0.5, 1.0, -2.0, 1.0], center: 1.0 / 3.0 },
    // p' = 1.5 t^2 + 2 t - 1, root at (sqrt(10) - 2) / 3
    RatePolynomial {
        name: "cubic-b",
        beta: &[-0.4, -1.0, 1.0, 0.5],
        center: 0.38742588672279304,
    },
    // (t^2 - t)^2: critical point at 1/2 with curvature -1
    RatePolynomial { name: "quartic", beta: &[0.0, 0.0, 1.0, -2.0, 1.0], center: 0.5 },
];

#[derive(Debug, Clone)]
pub struct RateRow {
    pub polynomial: &'static str,
    pub delta: f64,
    pub bernstein_excess: f64,
    pub interval_excess: f64,
}

#[derive(Debug, Clone)]
pub struct RateSlope {
    pub polynomial: &'static str,
    pub bernstein_slope: f64,
    pub interval_slope: f64,
}

#[derive(Debug, Clone)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    pub slopes: Vec<RateSlope>,
}

/// Measures enclosure overestimation of the Bernstein hull and the natural
/// interval extension on shrinking windows, and fits log-log decay slopes.
/// The exact range comes from dense sampling at 1e5 points.
pub fn rate_study() -> RateStudy {
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for poly in RATE_POLYNOMIALS {
        let mut log_delta = Vec::new();
        let mut log_b = Vec::new();
        let mut log_i = Vec::new();
        for k in 1..=8 {
            let delta = 2f64.powi(-k);
            let lo = poly.center - 0.5 * delta;
            let eval = |t: f64| {
                poly.beta
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * t.powi(i as i32))
                    .sum::<f64>()
            };
            let mut true_lo = f64::INFINITY;
            let mut true_hi = f64::NEG_INFINITY;
            for s in 0..=100_000 {
                let v = eval(lo + delta * s as f64 / 100_000.0);
                true_lo = true_lo.min(v);
                true_hi = true_hi.max(v);
            }

            let alpha = rebase_power_basis(poly.beta, lo, delta);
            let degree = poly.beta.len().saturating_sub(1).max(1);
            let enc = power_to_bernstein(&alpha, degree).enclosure();
            let bernstein_excess = (enc.hi() - true_hi) + (true_lo - enc.lo());

            let t_iv = Interval::new(lo, lo + delta);
            let mut ienc = Interval::point(poly.beta[0]);
            for (i, &c) in poly.beta.iter().enumerate().skip(1) {
                ienc = ienc + t_iv.pow_int(i as u32) * c;
            }
            let interval_excess = (ienc.hi() - true_hi) + (true_lo - ienc.lo());

            rows.push(RateRow {
                polynomial: poly.name,
                delta,
                bernstein_excess,
                interval_excess,
            });
            if poly.beta.len() > 1 {
                log_delta.push(delta.ln());
                log_b.push(bernstein_excess.max(1e-300).ln());
                log_i.push(interval_excess.max(1e-300).ln());
            }
        }
        if poly.beta.len() > 1 {
            slopes.push(RateSlope {
                polynomial: poly.name,
                bernstein_slope: fit_slope(&log_delta, &log_b),
                interval_slope: fit_slope(&log_delta, &log_i),
            });
        }
    }
    RateStudy { rows, slopes }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn rate_study_csv(study: &RateStudy) -> String {
    let mut out = String::from("polynomial,delta,bernstein_excess,interval_excess\n");
    for row in &study.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.polynomial, row.delta, row.bernstein_excess, row.interval_excess
        ));
    }
    for s in &study.slopes {
        out.push_str(&format!(
            "# slope,{},bernstein={},interval={}\n",
            s.polynomial, s.bernstein_slope, s.interval_slope
        ));
    }
    out
}
