//! Discrete-event simulation of the bufferless status-update link.
//!
//! Arrivals are Poisson over the full source pmf; symbols outside the
//! admitted set are discarded, admitted arrivals finding the channel busy
//! are blocked, and an admitted arrival finding it idle is served for its
//! codeword length and delivered. Age resets at each delivery to the
//! packet's service time. The penalty process is integrated segment by
//! segment in closed form.

use crate::error::{Error, Result};
use crate::optimizer::CodewordSolution;
use crate::probability::TruncatedSource;
use crate::timeliness::{PenaltyCase, PenaltyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub horizon: f64,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub use_integer_lengths: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("{} must be finite and > 0", self.lambda)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon", format!("{} must be finite and > 0", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::invalid("warmup_fraction", format!("{} outside [0, 1)", self.warmup_fraction)));
        }
        Ok(())
    }
}

/// One inter-delivery cycle.
#[derive(Debug, Clone, Copy)]
pub struct CycleRecord {
    /// Delivery-to-delivery gap Y.
    pub y: f64,
    /// Service time S of the delivered packet.
    pub s: f64,
    /// Waiting time W = Y - S.
    pub w: f64,
    /// Exact penalty area over the cycle.
    pub q_exact: f64,
    /// Delivery instant, used for warm-up filtering.
    pub delivered_at: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimStats {
    pub generated: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub deliveries: u64,
    pub mean_y: f64,
    pub mean_y2: f64,
    pub mean_s: f64,
    pub mean_s2: f64,
    pub mean_w: f64,
    /// (N(T) - 1) / T.
    pub eta: f64,
    /// (1/T) integral of g(age) over [0, T], exact.
    pub time_avg_penalty: f64,
    /// (sum of cycle areas + tail area) / T, an independent bookkeeping
    /// of the same integral.
    pub sum_q_over_t: f64,
    /// Mean per-cycle penalty plus weighted mean coding cost.
    pub empirical_j: f64,
    /// Set when no delivery happened within the horizon.
    pub degenerate: bool,
}

/// Runs one seeded replication.
pub fn simulate(
    source: &TruncatedSource,
    lengths: &[f64],
    penalty: &PenaltyConfig,
    sim: &SimConfig,
) -> Result<(SimStats, Vec<CycleRecord>)> {
    sim.validate()?;
    penalty.validate()?;
    if lengths.len() != source.k() {
        return Err(Error::invalid(
            "lengths",
            format!("{} lengths for {} admitted symbols", lengths.len(), source.k()),
        ));
    }
    if lengths.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid("lengths", "service times must be finite and >= 0"));
    }
    if source.k() > 1 && lengths.iter().any(|&l| l == 0.0) {
        return Err(Error::invalid("lengths", "zero service time only valid for a singleton alphabet"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let cumulative: Vec<f64> = source
        .parent()
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let horizon = sim.horizon;
    let mut t_arr = 0.0f64;
    let mut server_free = 0.0f64;
    let mut generated = 0u64;
    let mut admitted = 0u64;
    let mut blocked = 0u64;

    // age state: value right after the most recent reset, and its instant
    let mut age_at_reset = 0.0f64;
    let mut reset_time = 0.0f64;
    let mut total_penalty = 0.0f64;
    let mut cycles: Vec<CycleRecord> = Vec::new();

    loop {
        let u: f64 = rng.random();
        t_arr += -(1.0 - u).ln() / sim.lambda;
        if t_arr > horizon {
            break;
        }
        generated += 1;
        let v: f64 = rng.random();
        let sym = cumulative.partition_point(|&c| c < v).min(cumulative.len() - 1);
        let Some(local) = source.local_index(sym) else {
            continue;
        };
        admitted += 1;
        if t_arr < server_free {
            blocked += 1;
            continue;
        }
        let service = lengths[local];
        let delivery = t_arr + service;
        server_free = delivery;
        if delivery > horizon {
            // still in service at the end of the window; never delivered
            continue;
        }
        let d = delivery - reset_time;
        let q = if d > 0.0 {
            penalty.penalty_segment_integral(age_at_reset, d)?
        } else {
            0.0
        };
        total_penalty += q;
        cycles.push(CycleRecord {
            y: d,
            s: service,
            w: d - service,
            q_exact: q,
            delivered_at: delivery,
        });
        age_at_reset = service;
        reset_time = delivery;
    }
    if horizon > reset_time {
        total_penalty += penalty.penalty_segment_integral(age_at_reset, horizon - reset_time)?;
    }

    // independent re-accumulation from the cycle decomposition
    let mut sum_q = 0.0f64;
    let mut prev_age = 0.0f64;
    for c in &cycles {
        sum_q += penalty.penalty_segment_integral(prev_age, c.y)?;
        prev_age = c.s;
    }
    if horizon > reset_time {
        sum_q += penalty.penalty_segment_integral(prev_age, horizon - reset_time)?;
    }

    let deliveries = cycles.len() as u64;
    let warmup_cutoff = sim.warmup_fraction * horizon;
    let post: Vec<&CycleRecord> = cycles.iter().filter(|c| c.delivered_at > warmup_cutoff).collect();
    let m = post.len() as f64;
    let (mean_y, mean_y2, mean_s, mean_s2, mean_w, mean_q) = if post.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            post.iter().map(|c| c.y).sum::<f64>() / m,
            post.iter().map(|c| c.y * c.y).sum::<f64>() / m,
            post.iter().map(|c| c.s).sum::<f64>() / m,
            post.iter().map(|c| c.s * c.s).sum::<f64>() / m,
            post.iter().map(|c| c.w).sum::<f64>() / m,
            post.iter().map(|c| c.q_exact).sum::<f64>() / m,
        )
    };
    let mean_cost = if post.is_empty() {
        f64::NAN
    } else {
        penalty.w * (penalty.alpha * mean_s + penalty.beta * mean_s2)
    };

    let stats = SimStats {
        generated,
        admitted,
        blocked,
        deliveries,
        mean_y,
        mean_y2,
        mean_s,
        mean_s2,
        mean_w,
        eta: if deliveries == 0 { 0.0 } else { (deliveries as f64 - 1.0) / horizon },
        time_avg_penalty: total_penalty / horizon,
        sum_q_over_t: sum_q / horizon,
        empirical_j: mean_q + mean_cost,
        degenerate: deliveries == 0,
    };
    Ok((stats, cycles))
}

/// Independent replications; replication r uses seed = base + r.
pub fn simulate_replications(
    source: &TruncatedSource,
    lengths: &[f64],
    penalty: &PenaltyConfig,
    sim: &SimConfig,
    replications: u64,
) -> Result<Vec<SimStats>> {
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig {
                seed: sim.seed.wrapping_add(r),
                ..*sim
            };
            simulate(source, lengths, penalty, &cfg).map(|(s, _)| s)
        })
        .collect()
}

/// Side-by-side comparison of simulation statistics with the analytic
/// formulas evaluated at the solver's moments.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    pub degenerate: bool,
    pub empirical_mean_q: f64,
    pub se_mean_q: f64,
    pub analytic_expected_q: f64,
    /// Relative gap |analytic - empirical| / |empirical|; for EDT/LDT this
    /// is the Taylor-approximation gap, for PDT kappa=1 it is sampling noise.
    pub q_rel_gap: f64,
    /// Eq. (21)-style analytic value re-evaluated at the empirical moments.
    pub analytic_q_at_empirical: f64,
    pub time_avg_penalty: f64,
    pub eta_times_mean_q: f64,
    pub mean_y: f64,
    pub analytic_mean_y: f64,
    pub mean_y2: f64,
    pub analytic_mean_y2: f64,
    pub mean_w: f64,
    pub analytic_mean_w: f64,
}

pub fn analytic_vs_empirical_report(
    stats: &SimStats,
    cycles: &[CycleRecord],
    solution: &CodewordSolution,
    penalty: &PenaltyConfig,
    gamma: f64,
) -> Result<ComparisonReport> {
    if stats.degenerate {
        return Ok(ComparisonReport {
            degenerate: true,
            empirical_mean_q: f64::NAN,
            se_mean_q: f64::NAN,
            analytic_expected_q: f64::NAN,
            q_rel_gap: f64::NAN,
            analytic_q_at_empirical: f64::NAN,
            time_avg_penalty: stats.time_avg_penalty,
            eta_times_mean_q: f64::NAN,
            mean_y: f64::NAN,
            analytic_mean_y: solution.el + gamma,
            mean_y2: f64::NAN,
            analytic_mean_y2: f64::NAN,
            mean_w: f64::NAN,
            analytic_mean_w: gamma,
        });
    }
    let n = cycles.len() as f64;
    let mean_q = cycles.iter().map(|c| c.q_exact).sum::<f64>() / n;
    let var_q = cycles.iter().map(|c| (c.q_exact - mean_q).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var_q / n).sqrt();
    let analytic = penalty.expected_q(solution.el, solution.el2, gamma)?;
    let at_empirical = if penalty.case == PenaltyCase::Pdt && penalty.kappa != 1 {
        f64::NAN
    } else {
        penalty.expected_q(stats.mean_s, stats.mean_s2, stats.mean_w)?
    };
    Ok(ComparisonReport {
        degenerate: false,
        empirical_mean_q: mean_q,
        se_mean_q: se,
        analytic_expected_q: analytic,
        q_rel_gap: (analytic - mean_q).abs() / mean_q.abs().max(1e-300),
        analytic_q_at_empirical: at_empirical,
        time_avg_penalty: stats.time_avg_penalty,
        eta_times_mean_q: stats.eta * mean_q,
        mean_y: stats.mean_y,
        analytic_mean_y: solution.el + gamma,
        mean_y2: stats.mean_y2,
        analytic_mean_y2: solution.el2 + 2.0 * gamma * solution.el + 2.0 * gamma * gamma,
        mean_w: stats.mean_w,
        analytic_mean_w: gamma,
    })
}

impl std::fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.degenerate {
            return writeln!(f, "degenerate run: no deliveries within the horizon");
        }
        writeln!(f, "{:<34} {:>16} {:>16}", "quantity", "empirical", "analytic")?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "mean cycle penalty E[Q]", self.empirical_mean_q, self.analytic_expected_q)?;
        writeln!(f, "{:<34} {:>16.8} {:>16}", "  std error", self.se_mean_q, "")?;
        writeln!(f, "{:<34} {:>16.8} {:>16}", "  relative gap", self.q_rel_gap, "")?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "  at empirical moments", self.empirical_mean_q, self.analytic_q_at_empirical)?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "time-avg penalty vs eta*E[Q]", self.time_avg_penalty, self.eta_times_mean_q)?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "mean Y vs E[L]+gamma", self.mean_y, self.analytic_mean_y)?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "mean Y^2 vs E[L^2]+2gE[L]+2g^2", self.mean_y2, self.analytic_mean_y2)?;
        writeln!(f, "{:<34} {:>16.8} {:>16.8}", "mean W vs gamma", self.mean_w, self.analytic_mean_w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::SourcePmf;

    fn pdt(rho: f64) -> PenaltyConfig {
        PenaltyConfig::new(PenaltyCase::Pdt, rho, 1, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn saturated_single_symbol_sawtooth() {
        // k = n = 1, huge lambda, unit service: back-to-back renewals,
        // age sawtooths between 1 (reset) and 2; with lambda large,
        // Y -> 1 and the time-average of rho*age -> 1.5 for the
        // stationary sawtooth over [1,2]; the first cycle from age 0
        // washes out. Using PDT rho=1 kappa=1 from age=s: each cycle
        // area -> integral_1^2 t dt = 1.5.
        let pmf = SourcePmf::uniform(1).unwrap();
        let t = pmf.truncate(1).unwrap();
        let sim = SimConfig { lambda: 1e4, horizon: 1e3, seed: 1, warmup_fraction: 0.01, use_integer_lengths: false };
        let (stats, _) = simulate(&t, &[1.0], &pdt(1.0), &sim).unwrap();
        assert!((stats.mean_y - 1.0).abs() < 0.01, "mean_y {}", stats.mean_y);
        assert!((stats.time_avg_penalty - 1.5).abs() < 0.03, "tap {}", stats.time_avg_penalty);
    }

    #[test]
    fn zero_reset_sawtooth_half() {
        // if the service time were negligible the sawtooth would average
        // rho*Y/2; exercised with a very short codeword
        let pmf = SourcePmf::uniform(1).unwrap();
        let t = pmf.truncate(1).unwrap();
        let sim = SimConfig { lambda: 1e4, horizon: 1e3, seed: 3, warmup_fraction: 0.01, use_integer_lengths: false };
        let (stats, _) = simulate(&t, &[1e-6], &pdt(1.0), &sim).unwrap();
        // Y ~ Exp(1e4) + 1e-6, E[time-avg age] = E[Y^2]/(2 E[Y]) ~ 1e-4
        assert!(stats.time_avg_penalty < 2e-4, "tap {}", stats.time_avg_penalty);
    }

    #[test]
    fn no_deliveries_triangle() {
        // admitted mass never arrives in time: lambda tiny vs horizon 10
        let pmf = SourcePmf::uniform(2).unwrap();
        let t = pmf.truncate(1).unwrap();
        let sim = SimConfig { lambda: 1e-12, horizon: 10.0, seed: 5, warmup_fraction: 0.0, use_integer_lengths: false };
        let (stats, cycles) = simulate(&t, &[1.0], &pdt(1.0), &sim).unwrap();
        assert!(stats.degenerate);
        assert!(cycles.is_empty());
        assert!((stats.time_avg_penalty - 5.0).abs() < 1e-9, "tap {}", stats.time_avg_penalty);
    }

    #[test]
    fn determinism() {
        let pmf = SourcePmf::zipf(20, 0.4).unwrap();
        let t = pmf.truncate(8).unwrap();
        let lengths: Vec<f64> = (0..8).map(|i| 2.0 + 0.3 * i as f64).collect();
        let sim = SimConfig { lambda: 2.0, horizon: 500.0, seed: 42, warmup_fraction: 0.01, use_integer_lengths: false };
        let (a, ca) = simulate(&t, &lengths, &pdt(0.5), &sim).unwrap();
        let (b, cb) = simulate(&t, &lengths, &pdt(0.5), &sim).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(ca.len(), cb.len());
    }

    #[test]
    fn renewal_reward_decompositions_agree() {
        let pmf = SourcePmf::zipf(50, 0.4).unwrap();
        let t = pmf.truncate(10).unwrap();
        let lengths: Vec<f64> = (0..10).map(|i| 3.0 + 0.1 * i as f64).collect();
        for case in [PenaltyCase::Edt, PenaltyCase::Ldt, PenaltyCase::Pdt] {
            let pen = PenaltyConfig::new(case, 0.5, 1, 1.0, 1.0, 1.0).unwrap();
            let sim = SimConfig { lambda: 1.0, horizon: 2000.0, seed: 9, warmup_fraction: 0.0, use_integer_lengths: false };
            let (stats, _) = simulate(&t, &lengths, &pen, &sim).unwrap();
            let rel = (stats.time_avg_penalty - stats.sum_q_over_t).abs()
                / (1.0 + stats.time_avg_penalty.abs());
            assert!(rel <= 1e-6, "case {case:?}: {rel}");
        }
    }

    #[test]
    fn blocking_saturates() {
        // k = n, lambda >> 1/E[L]: almost every admitted arrival is blocked
        // while the delivery rate approaches 1/E[L]
        let pmf = SourcePmf::uniform(4).unwrap();
        let t = pmf.truncate(4).unwrap();
        let lengths = vec![2.0; 4];
        let sim = SimConfig { lambda: 200.0, horizon: 500.0, seed: 11, warmup_fraction: 0.01, use_integer_lengths: false };
        let (stats, _) = simulate(&t, &lengths, &pdt(1.0), &sim).unwrap();
        let blocked_frac = stats.blocked as f64 / stats.admitted as f64;
        assert!(blocked_frac > 0.99, "blocked fraction {blocked_frac}");
        let rate = stats.deliveries as f64 / sim.horizon;
        assert!((rate - 0.5).abs() < 0.01, "delivery rate {rate}");
    }

    #[test]
    fn counts_are_ordered() {
        let pmf = SourcePmf::zipf(100, 0.4).unwrap();
        let t = pmf.truncate(18).unwrap();
        let lengths = vec![5.0; 18];
        let sim = SimConfig { lambda: 3.0, horizon: 1000.0, seed: 2, warmup_fraction: 0.0, use_integer_lengths: false };
        let (stats, cycles) = simulate(&t, &lengths, &pdt(1.0), &sim).unwrap();
        assert!(stats.deliveries <= stats.admitted);
        assert!(stats.admitted <= stats.generated);
        assert_eq!(stats.deliveries as usize, cycles.len());
        for c in &cycles {
            assert!((c.y - (c.s + c.w)).abs() < 1e-12);
            assert!(c.y >= 0.0 && c.s >= 0.0 && c.w >= -1e-12);
        }
    }
}
