//! Discrete-event simulation of the priced loss system.
//!
//! Each replication draws interarrival gaps, service times and valuations
//! from three separate ChaCha streams derived from the seed and the
//! replication index, so runs are reproducible bit for bit and two service
//! laws can be compared under common arrivals and valuations. Replications
//! run in parallel; confidence intervals come from the spread across
//! replications.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::system::{PriceVector, SystemSpec};

/// Service-time law with mean `1 / mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceLaw {
    #[default]
    Exponential,
    Deterministic,
    /// Uniform on `[0, 2 / mu]`.
    Uniform,
}

impl ServiceLaw {
    fn sample<R: Rng>(self, mu: f64, exp: &Exp<f64>, rng: &mut R) -> f64 {
        match self {
            ServiceLaw::Exponential => exp.sample(rng),
            ServiceLaw::Deterministic => 1.0 / mu,
            ServiceLaw::Uniform => rng.random_range(0.0..2.0 / mu),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub spec: SystemSpec,
    pub prices: PriceVector,
    pub service_law: ServiceLaw,
    /// Arrivals per replication, warmup included.
    pub horizon_arrivals: u64,
    pub warmup_arrivals: u64,
    pub replications: usize,
    pub seed: u64,
}

impl SimConfig {
    /// 20 replications of `10^6` arrivals with a 10% warmup and exponential
    /// service.
    pub fn new(spec: SystemSpec, prices: PriceVector) -> Self {
        Self {
            spec,
            prices,
            service_law: ServiceLaw::Exponential,
            horizon_arrivals: 1_000_000,
            warmup_arrivals: 100_000,
            replications: 20,
            seed: 0,
        }
    }

    /// Sets the horizon and a 10% warmup.
    pub fn with_horizon(mut self, arrivals: u64) -> Self {
        self.horizon_arrivals = arrivals;
        self.warmup_arrivals = arrivals / 10;
        self
    }

    pub fn with_replications(mut self, n: usize) -> Self {
        self.replications = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_service_law(mut self, law: ServiceLaw) -> Self {
        self.service_law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.prices.check_servers(self.spec.servers)?;
        if self.horizon_arrivals <= self.warmup_arrivals {
            return Err(invalid("horizon_arrivals", "must exceed warmup_arrivals"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "need at least one"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub revenue_rate_mean: f64,
    /// Half-width of the 95% Student-t interval across replications (0 for
    /// a single replication).
    pub revenue_rate_ci_half: f64,
    /// Fraction of arrivals that found every server busy.
    pub blocking_frac: f64,
    pub blocking_ci_half: f64,
    /// Occupancy seen by arrivals, `K + 1` bins summing to 1.
    pub occupancy_hist: Vec<f64>,
    /// Standard error of each occupancy bin across replications.
    pub occupancy_se: Vec<f64>,
    /// Fraction of arrivals admitted in each non-full state.
    pub accepted_frac_by_state: Vec<f64>,
    pub accepted_frac_ci_half: Vec<f64>,
    pub replications: usize,
    pub measured_arrivals: u64,
    pub revenue_by_replication: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure(f64);

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct RepStats {
    revenue_rate: f64,
    seen: Vec<u64>,
    accepted: Vec<u64>,
    measured: u64,
}

fn stream(seed: u64, rep: usize, sub: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 * 4 + sub);
    rng
}

fn run_replication(cfg: &SimConfig, rep: usize) -> RepStats {
    let spec = &cfg.spec;
    let k_max = spec.servers;
    let mu = spec.service_rate;
    let service_exp = Exp::new(mu).expect("validated service rate");
    let mut arrivals_rng = stream(cfg.seed, rep, 0);
    let mut service_rng = stream(cfg.seed, rep, 1);
    let mut valuation_rng = stream(cfg.seed, rep, 2);

    let mut busy: BinaryHeap<Reverse<Departure>> = BinaryHeap::with_capacity(k_max);
    let mut seen = vec![0u64; k_max + 1];
    let mut accepted = vec![0u64; k_max];
    let mut revenue = 0.0;
    let mut now = 0.0;
    let mut start = 0.0;

    for n in 0..cfg.horizon_arrivals {
        now += spec.arrival.sample(&mut arrivals_rng);
        while busy.peek().is_some_and(|d| d.0 .0 <= now) {
            busy.pop();
        }
        let state = busy.len();
        let value = spec.valuation.sample(&mut valuation_rng);
        let measuring = n >= cfg.warmup_arrivals;
        if n == cfg.warmup_arrivals {
            start = now;
        }
        if measuring {
            seen[state] += 1;
        }
        if state < k_max {
            let price = cfg.prices.price(state);
            if value >= price {
                let s = cfg.service_law.sample(mu, &service_exp, &mut service_rng);
                busy.push(Reverse(Departure(now + s)));
                if measuring {
                    accepted[state] += 1;
                    revenue += price;
                }
            }
        }
    }
    let span = now - start;
    RepStats {
        revenue_rate: if span > 0.0 { revenue / span } else { 0.0 },
        seen,
        accepted,
        measured: cfg.horizon_arrivals - cfg.warmup_arrivals,
    }
}

/// Mean and 95% half-width of `xs` (half-width 0 when fewer than two
/// values).
fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let k_max = cfg.spec.servers;
    let reps: Vec<RepStats> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();

    let revenue: Vec<f64> = reps.iter().map(|r| r.revenue_rate).collect();
    let (revenue_rate_mean, revenue_rate_ci_half) = mean_ci(&revenue);

    let hist_by_rep: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| r.seen.iter().map(|&c| c as f64 / r.measured as f64).collect())
        .collect();
    let column = |rows: &[Vec<f64>], j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).filter(|x| x.is_finite()).collect() };

    let occupancy_hist: Vec<f64> = (0..=k_max).map(|j| mean_ci(&column(&hist_by_rep, j)).0).collect();
    let occupancy_se: Vec<f64> = (0..=k_max).map(|j| std_err(&column(&hist_by_rep, j))).collect();
    let (blocking_frac, blocking_ci_half) = mean_ci(&column(&hist_by_rep, k_max));

    let accept_by_rep: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| {
            (0..k_max)
                .map(|k| if r.seen[k] > 0 { r.accepted[k] as f64 / r.seen[k] as f64 } else { f64::NAN })
                .collect()
        })
        .collect();
    let accept: Vec<(f64, f64)> = (0..k_max).map(|k| mean_ci(&column(&accept_by_rep, k))).collect();

    Ok(SimResult {
        revenue_rate_mean,
        revenue_rate_ci_half,
        blocking_frac,
        blocking_ci_half,
        occupancy_hist,
        occupancy_se,
        accepted_frac_by_state: accept.iter().map(|a| a.0).collect(),
        accepted_frac_ci_half: accept.iter().map(|a| a.1).collect(),
        replications: cfg.replications,
        measured_arrivals: cfg.horizon_arrivals - cfg.warmup_arrivals,
        revenue_by_replication: revenue,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsensitivityReport {
    pub exponential: SimResult,
    pub alternative: SimResult,
    pub alternative_law: ServiceLaw,
    /// Largest absolute difference between occupancy bins.
    pub max_hist_gap: f64,
    /// Largest bin difference in units of the combined standard error.
    pub max_gap_sigmas: f64,
    pub revenue_gap: f64,
    /// Combined 95% half-width for the revenue difference.
    pub revenue_gap_ci_half: f64,
}

/// Runs the same configuration under exponential service and under
/// `alt_law` (same mean), sharing arrival and valuation streams.
pub fn insensitivity_check(base: &SimConfig, alt_law: ServiceLaw) -> Result<InsensitivityReport> {
    if !base.spec.is_poisson() {
        return Err(invalid("arrival", "insensitivity holds for Poisson arrivals"));
    }
    let exponential = simulate(&base.clone().with_service_law(ServiceLaw::Exponential))?;
    let alternative = simulate(&base.clone().with_service_law(alt_law))?;
    let mut max_hist_gap = 0.0f64;
    let mut max_gap_sigmas = 0.0f64;
    for j in 0..exponential.occupancy_hist.len() {
        let gap = (exponential.occupancy_hist[j] - alternative.occupancy_hist[j]).abs();
        let se = exponential.occupancy_se[j].hypot(alternative.occupancy_se[j]);
        max_hist_gap = max_hist_gap.max(gap);
        if se > 0.0 {
            max_gap_sigmas = max_gap_sigmas.max(gap / se);
        } else if gap > 0.0 {
            max_gap_sigmas = f64::INFINITY;
        }
    }
    Ok(InsensitivityReport {
        revenue_gap: (exponential.revenue_rate_mean - alternative.revenue_rate_mean).abs(),
        revenue_gap_ci_half: exponential.revenue_rate_ci_half.hypot(alternative.revenue_rate_ci_half),
        exponential,
        alternative,
        alternative_law: alt_law,
        max_hist_gap,
        max_gap_sigmas,
    })
}
