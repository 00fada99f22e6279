//! Stationary occupancy and long-run revenue rate of a fixed price vector.
//!
//! The revenue rate is `lambda sum_k pi_k tail(p_k) p_k`, where `pi` is the
//! occupancy seen by arrivals. With Poisson arrivals `pi` is a truncated,
//! thinned Poisson law; otherwise it is the stationary vector of the chain
//! embedded at arrival instants.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrival::{DepartureMatrix, QUAD_TOL};
use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::system::{PriceVector, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyView {
    TimeStationary,
    ArrivalSampled,
}

/// Distribution of the number of busy servers, `pi[0..=K]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyDist {
    pub pi: Vec<f64>,
    pub view: OccupancyView,
}

impl OccupancyDist {
    /// Probability that an arrival finds every server busy.
    pub fn blocking(&self) -> f64 {
        *self.pi.last().expect("occupancy has K + 1 entries")
    }
}

/// Occupancy under Poisson arrivals: `pi_k` proportional to
/// `rho^k / k! prod_{j<k} tail(p_j)`. Arrivals see time averages here, so
/// both views coincide.
pub fn occupancy_poisson(spec: &SystemSpec, prices: &PriceVector) -> Result<OccupancyDist> {
    if !spec.is_poisson() {
        return Err(invalid("arrival", "closed-form occupancy needs exponential interarrival times"));
    }
    prices.check_servers(spec.servers)?;
    let ln_rho = spec.load().ln();
    let mut logs = Vec::with_capacity(spec.servers + 1);
    logs.push(0.0);
    for k in 1..=spec.servers {
        let g = spec.valuation.tail(prices.price(k - 1));
        let prev = logs[k - 1];
        logs.push(prev + ln_rho - (k as f64).ln() + g.ln());
    }
    let z = numeric::log_sum_exp(&logs);
    Ok(OccupancyDist {
        pi: logs.iter().map(|l| (l - z).exp()).collect(),
        view: OccupancyView::ArrivalSampled,
    })
}

/// Transition matrix of the occupancy seen by successive arrivals. From a
/// non-full state `k` the arrival joins with probability `tail(p_k)`, after
/// which `k + 1` (or else `k`) servers thin out binomially until the next
/// arrival.
pub fn transition_matrix(spec: &SystemSpec, dep: &DepartureMatrix, prices: &PriceVector) -> Result<Vec<Vec<f64>>> {
    prices.check_servers(spec.servers)?;
    if dep.servers() != spec.servers {
        return Err(invalid("departures", "matrix was built for a different system"));
    }
    let k_max = spec.servers;
    let mut p = vec![vec![0.0; k_max + 1]; k_max + 1];
    for (k, row) in p.iter_mut().enumerate() {
        let join = if k < k_max { spec.valuation.tail(prices.price(k)) } else { 0.0 };
        for (j, cell) in row.iter_mut().enumerate().take(k + 1) {
            *cell += (1.0 - join) * dep.alpha(k, k - j);
        }
        if join > 0.0 {
            for (j, cell) in row.iter_mut().enumerate().take(k + 2) {
                *cell += join * dep.alpha(k + 1, k + 1 - j);
            }
        }
    }
    Ok(p)
}

/// First state from which no arrival is admitted; states above it are never
/// reached from below.
fn truncation_state(spec: &SystemSpec, prices: &PriceVector) -> usize {
    (0..spec.servers)
        .find(|&k| spec.valuation.tail(prices.price(k)) <= 0.0)
        .unwrap_or(spec.servers)
}

/// Stationary occupancy seen by arrivals, from a dense LU solve on the
/// reachable states `0..=i*`.
pub fn occupancy_general(spec: &SystemSpec, dep: &DepartureMatrix, prices: &PriceVector) -> Result<OccupancyDist> {
    let p = transition_matrix(spec, dep, prices)?;
    let top = truncation_state(spec, prices);
    let n = top + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = p[i][j];
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularChain)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularChain);
    }
    let mut pi = vec![0.0; spec.servers + 1];
    for (dst, &x) in pi.iter_mut().zip(sol.iter()) {
        // Round-off can leave entries a hair below zero.
        *dst = x.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for x in &mut pi {
        *x /= total;
    }
    Ok(OccupancyDist {
        pi,
        view: OccupancyView::ArrivalSampled,
    })
}

/// `lambda sum_{k<K} pi_k tail(p_k) p_k`. Poisson systems use the closed-form
/// occupancy unless a departure matrix is supplied; other systems build one
/// when missing.
pub fn revenue_rate(spec: &SystemSpec, dep: Option<&DepartureMatrix>, prices: &PriceVector) -> Result<f64> {
    let occ = match dep {
        Some(d) => occupancy_general(spec, d, prices)?,
        None if spec.is_poisson() => occupancy_poisson(spec, prices)?,
        None => {
            let d = DepartureMatrix::build(&spec.arrival, spec.service_rate, spec.servers, QUAD_TOL)?;
            occupancy_general(spec, &d, prices)?
        }
    };
    Ok(revenue_from_occupancy(spec, &occ, prices))
}

pub fn revenue_from_occupancy(spec: &SystemSpec, occ: &OccupancyDist, prices: &PriceVector) -> f64 {
    let lambda = spec.arrival_rate();
    (0..spec.servers)
        .map(|k| {
            let p = prices.price(k);
            let g = spec.valuation.tail(p);
            if g > 0.0 {
                occ.pi[k] * g * p
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrival::InterarrivalDist;
    use crate::uniform_pricing;
    use crate::valuation::ValuationDist;
    use proptest::prelude::*;

    fn exp_val() -> ValuationDist {
        ValuationDist::exponential(1.0).unwrap()
    }

    #[test]
    fn erlang_normalization() {
        let s = SystemSpec::poisson(2, 1.0, 1.0, exp_val()).unwrap();
        let occ = occupancy_poisson(&s, &PriceVector::uniform(2, 0.0).unwrap()).unwrap();
        for (a, b) in occ.pi.iter().zip([0.4, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_door_keeps_system_empty() {
        let s = SystemSpec::poisson(3, 5.0, 1.0, ValuationDist::uniform(0.0, 1.0).unwrap()).unwrap();
        let prices = PriceVector::new(vec![2.0, 0.1, 0.1]).unwrap();
        let occ = occupancy_poisson(&s, &prices).unwrap();
        assert_eq!(occ.pi, vec![1.0, 0.0, 0.0, 0.0]);
        let dep = DepartureMatrix::build(&s.arrival, 1.0, 3, QUAD_TOL).unwrap();
        let gen = occupancy_general(&s, &dep, &prices).unwrap();
        assert!((gen.pi[0] - 1.0).abs() < 1e-12);
        assert_eq!(revenue_rate(&s, None, &prices).unwrap(), 0.0);
        let shut = PriceVector::uniform(3, f64::INFINITY).unwrap();
        assert_eq!(revenue_rate(&s, None, &shut).unwrap(), 0.0);
    }

    #[test]
    fn truncation_pads_unreachable_states() {
        let s = SystemSpec::new(4, 1.0, InterarrivalDist::deterministic(3.0).unwrap(), exp_val()).unwrap();
        let prices = PriceVector::new(vec![0.5, 1.0, f64::INFINITY, 0.2]).unwrap();
        let dep = DepartureMatrix::build(&s.arrival, 1.0, 4, QUAD_TOL).unwrap();
        let occ = occupancy_general(&s, &dep, &prices).unwrap();
        assert_eq!(&occ.pi[3..], &[0.0, 0.0]);
        assert!((occ.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_server_chain_by_hand() {
        let s = SystemSpec::new(1, 2.0, InterarrivalDist::deterministic(3.0).unwrap(), exp_val()).unwrap();
        let dep = DepartureMatrix::build(&s.arrival, 2.0, 1, QUAD_TOL).unwrap();
        let occ = occupancy_general(&s, &dep, &PriceVector::uniform(1, 0.0).unwrap()).unwrap();
        assert!((occ.pi[1] - dep.alpha(1, 0)).abs() < 1e-14);
        assert!((occ.pi[0] - dep.alpha(1, 1)).abs() < 1e-14);
    }

    #[test]
    fn uniform_price_blocking_identity() {
        let s = SystemSpec::poisson(6, 14.0, 1.5, exp_val()).unwrap();
        let occ = occupancy_poisson(&s, &PriceVector::uniform(6, 0.8).unwrap()).unwrap();
        let b = uniform_pricing::blocking_prob(&s, 0.8).unwrap();
        assert!((occ.blocking() - b).abs() < 1e-13);
    }

    fn arb_prices(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..3.0, k)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn embedded_chain_agrees_with_poisson_closed_form(
            (k, prices) in (1usize..8).prop_flat_map(|k| (Just(k), arb_prices(k))),
            lambda in 0.5f64..30.0, mu in 0.3f64..4.0,
        ) {
            let s = SystemSpec::poisson(k, lambda, mu, exp_val()).unwrap();
            let pv = PriceVector::new(prices).unwrap();
            let dep = DepartureMatrix::build(&s.arrival, mu, k, QUAD_TOL).unwrap();
            let a = occupancy_poisson(&s, &pv).unwrap();
            let b = occupancy_general(&s, &dep, &pv).unwrap();
            for (x, y) in a.pi.iter().zip(&b.pi) {
                prop_assert!((x - y).abs() < 1e-8);
            }
            let r_a = revenue_rate(&s, None, &pv).unwrap();
            let r_b = revenue_rate(&s, Some(&dep), &pv).unwrap();
            prop_assert!((r_a - r_b).abs() <= 1e-8 * r_a.max(1.0));
        }

        #[test]
        fn embedded_chain_is_stochastic_and_stationary(
            (k, prices) in (1usize..8).prop_flat_map(|k| (Just(k), arb_prices(k))),
            lambda in 0.5f64..30.0, mu in 0.3f64..4.0, which in 0usize..3,
        ) {
            let arrival = match which {
                0 => InterarrivalDist::deterministic(lambda).unwrap(),
                1 => InterarrivalDist::uniform_with_rate(lambda).unwrap(),
                _ => InterarrivalDist::two_point(0.1 / lambda, 0.5, 1.9 / lambda).unwrap(),
            };
            let s = SystemSpec::new(k, mu, arrival, exp_val()).unwrap();
            let pv = PriceVector::new(prices).unwrap();
            let dep = DepartureMatrix::build(&s.arrival, mu, k, QUAD_TOL).unwrap();
            let p = transition_matrix(&s, &dep, &pv).unwrap();
            for row in &p {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
            let occ = occupancy_general(&s, &dep, &pv).unwrap();
            prop_assert!((occ.pi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for (j, &pj) in occ.pi.iter().enumerate() {
                let flow: f64 = (0..=k).map(|i| occ.pi[i] * p[i][j]).sum();
                prop_assert!((flow - pj).abs() < 1e-10);
            }
        }

        #[test]
        fn uniform_price_revenue_identity(k in 1usize..10, lambda in 0.5f64..40.0, p in 0.0f64..4.0) {
            let s = SystemSpec::poisson(k, lambda, 1.0, exp_val()).unwrap();
            let r = revenue_rate(&s, None, &PriceVector::uniform(k, p).unwrap()).unwrap();
            let u = uniform_pricing::revenue_uniform(&s, p).unwrap();
            prop_assert!((r - u).abs() <= 1e-10 * u.max(1.0));
        }
    }
}
