//! State-independent pricing: one price `p` in every non-full state.
//!
//! Under a uniform price the admitted stream is a `tail(p)`-thinning of the
//! renewal input, so the blocking probability has the Palm form
//!
//! ```text
//! pi_K(p) = ( sum_j C(K, j) tail(p)^-j beta_j )^-1
//! ```
//!
//! and the revenue rate is `lambda p tail(p) (1 - pi_K(p))`.

use serde::Serialize;

use crate::arrival::InterarrivalDist;
use crate::error::{Error, Result};
use crate::numeric;
use crate::system::SystemSpec;

const PRICE_GRID: usize = 512;
const PRICE_TOL: f64 = 1e-9;

/// Blocking probability from precomputed `ln beta_j`, for admission
/// probability `g = tail(p)`.
pub fn blocking_from_log_beta(log_beta: &[f64], g: f64) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    let k = log_beta.len() - 1;
    let ln_g = g.ln();
    let terms: Vec<f64> = (0..=k)
        .map(|j| numeric::ln_binomial::<f64>(k, j) - j as f64 * ln_g + log_beta[j])
        .collect();
    (-numeric::log_sum_exp(&terms)).exp()
}

/// `pi_K(p)`, the long-run fraction of arrivals that find every server busy
/// under the uniform price `p`.
pub fn blocking_prob(spec: &SystemSpec, p: f64) -> Result<f64> {
    let log_beta = spec.arrival.log_beta_seq(spec.service_rate, spec.servers)?;
    Ok(blocking_from_log_beta(&log_beta, spec.valuation.tail(p)))
}

/// `R(K, p 1) = lambda p tail(p) (1 - pi_K(p))`.
pub fn revenue_uniform(spec: &SystemSpec, p: f64) -> Result<f64> {
    let log_beta = spec.arrival.log_beta_seq(spec.service_rate, spec.servers)?;
    Ok(revenue_with(spec, &log_beta, p))
}

fn revenue_with(spec: &SystemSpec, log_beta: &[f64], p: f64) -> f64 {
    let g = spec.valuation.tail(p);
    if g <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    spec.arrival_rate() * p * g * (1.0 - blocking_from_log_beta(log_beta, g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformPricingResult {
    /// Best uniform price with `K` servers.
    pub p_star_k: f64,
    pub revenue_k: f64,
    pub blocking_k: f64,
    /// `argmax p tail(p)`, optimal when servers are unlimited.
    pub p_star_inf: f64,
    /// Revenue with `K` servers when posting `p_star_inf`.
    pub revenue_at_p_inf: f64,
    pub blocking_at_p_inf: f64,
    /// `lambda p_star_inf tail(p_star_inf)`, the unlimited-server revenue.
    pub revenue_inf_bound: f64,
    /// `revenue_k / (1 - blocking_at_p_inf)`, an upper bound on the optimal
    /// state-dependent revenue.
    pub gap_upper: f64,
}

/// Finds the best uniform price by a 512-point log-spaced scan up to the
/// `1e-9` tail quantile followed by golden-section refinement.
pub fn optimize_uniform(spec: &SystemSpec) -> Result<UniformPricingResult> {
    let log_beta = spec.arrival.log_beta_seq(spec.service_rate, spec.servers)?;
    let top = spec.valuation.quantile_tail(1e-9);
    if !top.is_finite() || top <= 0.0 {
        return Err(Error::NoFiniteMaximizer { limit: top });
    }
    let bottom = 1e-6 * top;
    let ratio = (top / bottom).ln() / (PRICE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..PRICE_GRID).map(|i| bottom * (ratio * i as f64).exp()).collect();
    let revenue = |p: f64| revenue_with(spec, &log_beta, p);
    let best = grid.iter().map(|&p| revenue(p)).fold(f64::NEG_INFINITY, f64::max);
    // Still (numerically) at the best value at the far end of the search
    // window: revenue keeps creeping up with the price.
    if revenue(top) >= (1.0 - 1e-9) * best {
        return Err(Error::NoFiniteMaximizer { limit: top });
    }
    let (p_star_k, revenue_k) = numeric::grid_then_golden_max(revenue, &grid, PRICE_TOL);

    let p_star_inf = spec.valuation.monopoly_price()?;
    let blocking_at_p_inf = blocking_from_log_beta(&log_beta, spec.valuation.tail(p_star_inf));
    Ok(UniformPricingResult {
        p_star_k,
        revenue_k,
        blocking_k: blocking_from_log_beta(&log_beta, spec.valuation.tail(p_star_k)),
        p_star_inf,
        revenue_at_p_inf: revenue_with(spec, &log_beta, p_star_inf),
        blocking_at_p_inf,
        revenue_inf_bound: spec.arrival_rate() * spec.valuation.m(0.0)?,
        gap_upper: revenue_k / (1.0 - blocking_at_p_inf),
    })
}

/// Bounds on the optimal state-dependent revenue in terms of the best
/// uniform one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    pub lower: f64,
    pub upper: f64,
    /// `lower * (1 + 1 / (beta_1 K))`.
    pub coarse_upper: f64,
}

impl GapBound {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper && theta - self.lower <= self.coarse_upper - self.lower
    }
}

pub fn gap_bound(spec: &SystemSpec) -> Result<GapBound> {
    let r = optimize_uniform(spec)?;
    let beta_1 = spec.arrival.beta_seq(spec.service_rate, 1)?[1];
    Ok(GapBound {
        lower: r.revenue_k,
        upper: r.gap_upper,
        coarse_upper: r.revenue_k * (1.0 + 1.0 / (beta_1 * spec.servers as f64)),
    })
}

/// `lambda (1 - phi(mu))` along a family of arrival laws indexed by rate.
/// The limit as `lambda` grows is the per-server throughput that a fixed
/// uniform price can sustain under heavy load.
pub fn asymptotic_mu_tilde<F>(family: F, mu: f64, lambdas: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<InterarrivalDist>,
{
    lambdas
        .iter()
        .map(|&lam| {
            let d = family(lam)?;
            Ok(d.rate() * d.lst_complement(mu))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::ValuationDist;
    use proptest::prelude::*;

    fn erlang_b(k: usize, a: f64) -> f64 {
        (1..=k).fold(1.0, |e, j| a * e / (j as f64 + a * e))
    }

    fn exp_spec(k: usize, lambda: f64, mu: f64) -> SystemSpec {
        SystemSpec::poisson(k, lambda, mu, ValuationDist::exponential(1.0).unwrap()).unwrap()
    }

    #[test]
    fn single_server_blocking() {
        let s = exp_spec(1, 3.0, 2.0);
        assert!((blocking_prob(&s, 0.0).unwrap() - 1.5 / 2.5).abs() < 1e-15);
    }

    #[test]
    fn zero_admission_edges() {
        let s = SystemSpec::poisson(3, 5.0, 1.0, ValuationDist::uniform(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(blocking_prob(&s, 2.0).unwrap(), 0.0);
        assert_eq!(revenue_uniform(&s, 2.0).unwrap(), 0.0);
        assert_eq!(revenue_uniform(&s, 0.0).unwrap(), 0.0);
        let tiny = blocking_prob(&exp_spec(4, 10.0, 1.0), 700.0).unwrap();
        assert!(tiny < 1e-200);
    }

    #[test]
    fn monopoly_price_for_exponential_tail() {
        let r = optimize_uniform(&exp_spec(5, 20.0, 2.0)).unwrap();
        assert!((r.p_star_inf - 1.0).abs() < 1e-15);
        assert!((r.revenue_inf_bound - 20.0 / 1f64.exp()).abs() < 1e-12);
        assert!(r.p_star_k >= r.p_star_inf);
        assert!(r.revenue_k <= r.revenue_inf_bound);
    }

    #[test]
    fn uniform_optimum_beats_dense_scan() {
        let s = exp_spec(5, 20.0, 2.0);
        let r = optimize_uniform(&s).unwrap();
        let scan = (1..20_000)
            .map(|i| revenue_uniform(&s, i as f64 * 2e-4).unwrap())
            .fold(0.0f64, f64::max);
        assert!(r.revenue_k >= scan - 1e-12);
        assert!((r.revenue_k - scan).abs() < 1e-7);
    }

    #[test]
    fn poisson_coarse_factor() {
        let s = exp_spec(5, 25.0, 2.0);
        let g = gap_bound(&s).unwrap();
        let rho = 12.5;
        assert!((g.coarse_upper / g.lower - (1.0 + rho / 5.0)).abs() < 1e-12);
        assert!(g.lower <= g.upper && g.upper <= g.coarse_upper);
    }

    #[test]
    fn sandwich_tightens_with_many_servers() {
        let ratio = |k| {
            let g = gap_bound(&exp_spec(k, 10.0, 1.0)).unwrap();
            g.upper / g.lower
        };
        assert!(ratio(40) < ratio(20) && ratio(20) < ratio(10));
        assert!(ratio(60) - 1.0 < 1e-8);
    }

    #[test]
    fn poisson_family_throughput_tends_to_mu() {
        let v = asymptotic_mu_tilde(InterarrivalDist::exponential, 2.0, &[1e2, 1e3, 1e4]).unwrap();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!((v[2] - 2.0 * 1e4 / (1e4 + 2.0)).abs() < 1e-10);
    }

    #[test]
    fn scaled_pareto_price_grows_linearly() {
        let val = ValuationDist::pareto(1.0).unwrap();
        let per_lambda: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&lam| {
                let s = SystemSpec::poisson(5, lam, 2.0, val.clone()).unwrap();
                revenue_uniform(&s, lam).unwrap() / lam
            })
            .collect();
        for r in &per_lambda {
            assert!((r / per_lambda[0] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn gaussian_tail_with_log_price_decays() {
        let pts: Vec<(f64, f64)> = (0..=2400)
            .map(|i| {
                let x = i as f64 * 0.005;
                (x, (-x * x).exp())
            })
            .collect();
        let val = ValuationDist::tabulated(&pts).unwrap();
        let rev: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&lam: &f64| {
                let s = SystemSpec::poisson(5, lam, 2.0, val.clone()).unwrap();
                revenue_uniform(&s, lam.ln()).unwrap()
            })
            .collect();
        assert!(rev.windows(2).all(|w| w[1] < w[0]));
        assert!(rev[2] < 1e-20);
    }

    #[test]
    fn unbounded_improvement_is_reported() {
        let s = SystemSpec::poisson(3, 10.0, 1.0, ValuationDist::pareto(1.0).unwrap()).unwrap();
        assert!(matches!(optimize_uniform(&s), Err(Error::NoFiniteMaximizer { .. })));
    }

    proptest! {
        #[test]
        fn blocking_matches_erlang_b(k in 1usize..=50, rho in 0.01f64..80.0, p in 0.0f64..6.0) {
            let s = exp_spec(k, rho, 1.0);
            let b = blocking_prob(&s, p).unwrap();
            let oracle = erlang_b(k, rho * (-p).exp());
            prop_assert!((b - oracle).abs() <= 1e-10);
        }

        #[test]
        fn blocking_monotone_in_price_and_servers(k in 1usize..20, lambda in 0.5f64..40.0, p in 0.0f64..4.0, dp in 0.0f64..2.0) {
            let s = SystemSpec::new(k, 1.5, InterarrivalDist::deterministic(lambda).unwrap(),
                ValuationDist::exponential(1.0).unwrap()).unwrap();
            let b = blocking_prob(&s, p).unwrap();
            prop_assert!(blocking_prob(&s, p + dp).unwrap() <= b + 1e-14);
            prop_assert!(blocking_prob(&s.with_servers(k + 1).unwrap(), p).unwrap() <= b + 1e-14);
        }
    }
}
