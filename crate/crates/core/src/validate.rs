//! Self-check suites behind the `validate` CLI command and the acceptance
//! tests: the Lambert W defining identity, the KKT/Kraft grid, a projected
//! brute-force oracle for small alphabets, and the renewal-reward identity.

use crate::lambertw::lambert_w0;
use crate::optimizer::{self, objective_at};
use crate::probability::SourcePmf;
use crate::simulator::{simulate, SimConfig};
use crate::timeliness::{PenaltyCase, PenaltyConfig, QuadraticForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        SuiteResult { name, passed: true, detail: detail.into() }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        SuiteResult { name, passed: false, detail: detail.into() }
    }
}

/// Defining identity of W0 over log-spaced positive arguments and the
/// negative branch segment.
pub fn lambertw_suite(positive_points: usize, negative_points: usize) -> SuiteResult {
    let name = "lambertw";
    let check = |y: f64| -> Option<String> {
        match lambert_w0(y) {
            Ok(w) => {
                let resid = (w * w.exp() - y).abs();
                let tol = 1e-12 * y.abs().max(1.0);
                if resid > tol {
                    Some(format!("y = {y}: residual {resid} > {tol}"))
                } else if w < -1.0 {
                    Some(format!("y = {y}: w = {w} below -1"))
                } else {
                    None
                }
            }
            Err(e) => Some(format!("y = {y}: {e}")),
        }
    };
    let bad = (0..positive_points)
        .into_par_iter()
        .find_map_any(|i| {
            let t = i as f64 / (positive_points - 1).max(1) as f64;
            check(10f64.powf(-12.0 + 24.0 * t))
        })
        .or_else(|| {
            let bp = -(-1.0f64).exp();
            (0..negative_points).into_par_iter().find_map_any(|i| {
                check(bp * (1.0 - i as f64 / negative_points as f64))
            })
        });
    match bad {
        Some(detail) => SuiteResult::fail(name, detail),
        None => SuiteResult::pass(
            name,
            format!("{positive_points} positive + {negative_points} negative points within 1e-12"),
        ),
    }
}

/// KKT stationarity, Kraft equality, nonnegativity, and probability
/// monotonicity across the standard parameter grid. `mu_perturbation`
/// shifts the multiplier before the residual check; nonzero values are a
/// negative control used by tests.
pub fn kkt_grid_suite(mu_perturbation: f64) -> SuiteResult {
    let name = "kkt-grid";
    let pmfs = [
        SourcePmf::zipf(100, 0.4).unwrap(),
        SourcePmf::uniform(100).unwrap(),
    ];
    let lambdas = [0.5, 1.0, 5.0, 10.0, 20.0];
    let ks = [1usize, 2, 5, 10, 18, 50, 100];
    let cases = [PenaltyCase::Edt, PenaltyCase::Ldt, PenaltyCase::Pdt];

    let mut points = Vec::new();
    for pmf in &pmfs {
        for &case in &cases {
            for &lambda in &lambdas {
                for &k in &ks {
                    points.push((pmf.clone(), case, lambda, k));
                }
            }
        }
    }
    let bad = points.par_iter().find_map_any(|(pmf, case, lambda, k)| {
        let tag = format!("{} case={case:?} lambda={lambda} k={k}", pmf.label());
        let cfg = match PenaltyConfig::new(*case, 0.5, 1, 1.0, 1.0, 1.0) {
            Ok(c) => c,
            Err(e) => return Some(format!("{tag}: {e}")),
        };
        let trunc = pmf.truncate(*k).unwrap();
        let qf = match cfg.quadratic_form(trunc.gamma(*lambda)) {
            Ok(q) => q,
            Err(e) => return Some(format!("{tag}: {e}")),
        };
        let sol = match optimizer::solve(&qf, trunc.cond_probs()) {
            Ok(s) => s,
            Err(e) => return Some(format!("{tag}: {e}")),
        };
        if (sol.kraft_sum - 1.0).abs() > 1e-9 {
            return Some(format!("{tag}: Kraft sum {}", sol.kraft_sum));
        }
        let residual = if mu_perturbation == 0.0 {
            sol.kkt_residual
        } else {
            let mu = sol.mu * (1.0 + mu_perturbation);
            let ln2 = std::f64::consts::LN_2;
            trunc
                .cond_probs()
                .iter()
                .zip(&sol.lengths)
                .map(|(&p, &l)| {
                    (2.0 * qf.a * p * l + 2.0 * qf.b * p * sol.el + qf.c * p
                        - mu * ln2 * (-l).exp2())
                    .abs()
                })
                .fold(0.0f64, f64::max)
        };
        if residual > 1e-8 {
            return Some(format!("{tag}: stationarity residual {residual}"));
        }
        if sol.lengths.iter().any(|&l| l < 0.0) {
            return Some(format!("{tag}: negative length"));
        }
        for (i, w) in sol.lengths.windows(2).enumerate() {
            let p = trunc.cond_probs();
            if p[i] > p[i + 1] && w[0] > w[1] + 1e-9 {
                return Some(format!("{tag}: lengths not monotone in probability at {i}"));
            }
        }
        None
    });
    match bad {
        Some(detail) => SuiteResult::fail(name, detail),
        None => SuiteResult::pass(name, format!("{} grid points", points.len())),
    }
}

/// Minimum of the objective over the Kraft-feasible surface for k in
/// {2, 3}: free coordinates on a [0, max_len] grid, last coordinate
/// projected onto the Kraft equality. Independent of the solver path.
pub fn grid_oracle_min(qf: &QuadraticForm, probs: &[f64], step: f64, max_len: f64) -> f64 {
    let steps = (max_len / step).round() as usize;
    match probs.len() {
        2 => (0..=steps)
            .into_par_iter()
            .map(|i| {
                let l1 = i as f64 * step;
                let rest = 1.0 - (-l1).exp2();
                if rest <= 0.0 {
                    return f64::INFINITY;
                }
                let l2 = -rest.log2();
                if !(0.0..=max_len).contains(&l2) {
                    return f64::INFINITY;
                }
                objective_at(qf, probs, &[l1, l2]).unwrap_or(f64::INFINITY)
            })
            .reduce(|| f64::INFINITY, f64::min),
        3 => (0..=steps)
            .into_par_iter()
            .map(|i| {
                let l1 = i as f64 * step;
                let mut best = f64::INFINITY;
                for j in 0..=steps {
                    let l2 = j as f64 * step;
                    let rest = 1.0 - (-l1).exp2() - (-l2).exp2();
                    if rest <= 0.0 {
                        continue;
                    }
                    let l3 = -rest.log2();
                    if !(0.0..=max_len).contains(&l3) {
                        continue;
                    }
                    if let Ok(v) = objective_at(qf, probs, &[l1, l2, l3]) {
                        best = best.min(v);
                    }
                }
                best
            })
            .reduce(|| f64::INFINITY, f64::min),
        _ => f64::INFINITY,
    }
}

/// Random small-alphabet problems checked against the projected grid.
pub fn brute_force_suite(num_pmfs: usize, seed: u64) -> SuiteResult {
    let name = "brute-force";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problems = Vec::new();
    for i in 0..num_pmfs {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let mut raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for r in &mut raw {
            *r /= sum;
        }
        raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let case = [PenaltyCase::Edt, PenaltyCase::Ldt, PenaltyCase::Pdt][i % 3];
        let rho = rng.random_range(0.2..1.0);
        let gamma = rng.random_range(0.3..3.0);
        problems.push((raw, case, rho, gamma));
    }
    let bad = problems.par_iter().enumerate().find_map_any(|(i, (probs, case, rho, gamma))| {
        let cfg = PenaltyConfig::new(*case, *rho, 1, 1.0, 1.0, 1.0).unwrap();
        let qf = match cfg.quadratic_form(*gamma) {
            Ok(q) => q,
            Err(e) => return Some(format!("problem {i}: {e}")),
        };
        let sol = match optimizer::solve(&qf, probs) {
            Ok(s) => s,
            Err(e) => return Some(format!("problem {i}: {e}")),
        };
        let oracle = grid_oracle_min(&qf, probs, 0.005, 20.0);
        if sol.j_soi > oracle + 1e-3 {
            return Some(format!(
                "problem {i} ({case:?}, k={}): solver {} > oracle {oracle} + 1e-3",
                probs.len(),
                sol.j_soi
            ));
        }
        None
    });
    match bad {
        Some(detail) => SuiteResult::fail(name, detail),
        None => SuiteResult::pass(name, format!("{num_pmfs} random problems vs projected grid")),
    }
}

/// Renewal-reward bookkeeping and PDT cycle-area exactness on short
/// simulated runs.
pub fn renewal_suite(seed: u64) -> SuiteResult {
    let name = "renewal-reward";
    let pmf = SourcePmf::zipf(100, 0.4).unwrap();
    let trunc = pmf.truncate(18).unwrap();
    for case in [PenaltyCase::Edt, PenaltyCase::Ldt, PenaltyCase::Pdt] {
        let cfg = PenaltyConfig::new(case, 0.5, 1, 1.0, 1.0, 1.0).unwrap();
        let qf = match cfg.quadratic_form(trunc.gamma(1.0)) {
            Ok(q) => q,
            Err(e) => return SuiteResult::fail(name, e.to_string()),
        };
        let sol = match optimizer::solve(&qf, trunc.cond_probs()) {
            Ok(s) => s,
            Err(e) => return SuiteResult::fail(name, e.to_string()),
        };
        let sim = SimConfig {
            lambda: 1.0,
            horizon: 50_000.0,
            seed,
            warmup_fraction: 0.01,
            use_integer_lengths: false,
        };
        let (stats, cycles) = match simulate(&trunc, &sol.lengths, &cfg, &sim) {
            Ok(r) => r,
            Err(e) => return SuiteResult::fail(name, e.to_string()),
        };
        let rel = (stats.time_avg_penalty - stats.sum_q_over_t).abs()
            / (1.0 + stats.time_avg_penalty.abs());
        if rel > 1e-6 {
            return SuiteResult::fail(name, format!("{case:?}: decompositions differ by {rel}"));
        }
        if case == PenaltyCase::Pdt {
            let n = cycles.len() as f64;
            let mean_q = cycles.iter().map(|c| c.q_exact).sum::<f64>() / n;
            let var = cycles.iter().map(|c| (c.q_exact - mean_q).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let analytic = cfg
                .expected_q(stats.mean_s, stats.mean_s2, stats.mean_w)
                .unwrap();
            if (mean_q - analytic).abs() > 3.0 * se {
                return SuiteResult::fail(
                    name,
                    format!("PDT mean Q {mean_q} vs analytic {analytic} beyond 3 SE ({se})"),
                );
            }
        }
    }
    SuiteResult::pass(name, "three cases, exact decomposition + PDT cycle areas")
}

/// Runs every suite, optionally filtered by name.
pub fn run_suites(filter: Option<&str>) -> Vec<SuiteResult> {
    let mut out = Vec::new();
    let wanted = |n: &str| filter.map_or(true, |f| f == n);
    if wanted("lambertw") {
        out.push(lambertw_suite(1_000_000, 1000));
    }
    if wanted("kkt-grid") {
        out.push(kkt_grid_suite(0.0));
    }
    if wanted("brute-force") {
        out.push(brute_force_suite(8, 0x5eed));
    }
    if wanted("renewal-reward") {
        out.push(renewal_suite(0x5eed));
    }
    out
}

pub fn suite_names() -> &'static [&'static str] {
    &["lambertw", "kkt-grid", "brute-force", "renewal-reward"]
}
