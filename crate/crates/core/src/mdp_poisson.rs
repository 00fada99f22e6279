//! Optimal state-dependent prices under Poisson arrivals.
//!
//! The average-reward optimality equations reduce to a scalar fixed point.
//! For a candidate revenue rate `theta`, the reward differences follow from
//! the downward recursion
//!
//! ```text
//! g_{K-1}(theta) = theta / (K mu)
//! g_{i-1}(theta) = (theta - lambda m(g_i(theta))) / (i mu)
//! ```
//!
//! and the optimum is the unique solution of `theta = lambda m(g_0(theta))`.
//! Since the right-hand side decreases in `theta`, a bracketing bisection
//! converges monotonically. The optimal price in state `i` is `u*(g_i)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::system::SystemSpec;

/// Default absolute precision on `theta`.
pub const THETA_PRECISION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonSolveResult {
    pub theta_star: f64,
    /// Reward differences `Delta(0..K)`.
    pub deltas: Vec<f64>,
    /// Optimal prices `u*(Delta(i))`.
    pub prices: Vec<f64>,
    pub iterations: usize,
    pub bracket_width: f64,
    /// Optimality-equation residuals for states `0..=K`.
    pub residuals: Vec<f64>,
    /// `(lower, upper)` bracket after each iteration, starting with the
    /// initial bracket.
    #[serde(skip)]
    pub bracket_trace: Vec<(f64, f64)>,
}

fn require_poisson(spec: &SystemSpec) -> Result<()> {
    if spec.is_poisson() {
        Ok(())
    } else {
        Err(invalid("arrival", "this solver needs exponential interarrival times"))
    }
}

/// `(g_0(theta), ..., g_{K-1}(theta))`.
pub fn g_chain(spec: &SystemSpec, theta: f64) -> Result<Vec<f64>> {
    let k = spec.servers;
    let lambda = spec.arrival_rate();
    let mu = spec.service_rate;
    let mut g = vec![0.0; k];
    g[k - 1] = theta / (k as f64 * mu);
    for i in (1..k).rev() {
        g[i - 1] = (theta - lambda * spec.valuation.m(g[i])?) / (i as f64 * mu);
    }
    Ok(g)
}

/// Residuals of the optimality equations at `(theta, deltas)`: entry `i < K`
/// is `lambda m(Delta(i)) + i mu Delta(i-1) - theta`, entry `K` is
/// `K mu Delta(K-1) - theta`.
pub fn bellman_residuals(spec: &SystemSpec, theta: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    let k = spec.servers;
    let lambda = spec.arrival_rate();
    let mu = spec.service_rate;
    let mut out = Vec::with_capacity(k + 1);
    for i in 0..k {
        let down = if i == 0 { 0.0 } else { i as f64 * mu * deltas[i - 1] };
        out.push(lambda * spec.valuation.m(deltas[i])? + down - theta);
    }
    out.push(k as f64 * mu * deltas[k - 1] - theta);
    Ok(out)
}

/// Bisection on `theta = lambda m(g_0(theta))` until the bracket is narrower
/// than `precision`.
pub fn fixed_point(spec: &SystemSpec, precision: f64) -> Result<PoissonSolveResult> {
    require_poisson(spec)?;
    if !(precision.is_finite() && precision > 0.0) {
        return Err(invalid("precision", "must be finite and > 0"));
    }
    let lambda = spec.arrival_rate();
    let map = |theta: f64| -> Result<f64> { Ok(lambda * spec.valuation.m(g_chain(spec, theta)?[0])?) };

    let mut lower = 0.0f64;
    let mut upper = map(0.0)?;
    let mut trace = vec![(lower, upper)];
    let mut iterations = 0;
    while upper - lower > precision {
        let mid = 0.5 * (lower + upper);
        if mid <= lower || mid >= upper {
            break;
        }
        let t = map(mid)?;
        lower = lower.max(mid.min(t));
        upper = upper.min(mid.max(t));
        iterations += 1;
        trace.push((lower, upper));
        if lower > upper {
            return Err(Error::BracketCollapse { lower, upper });
        }
        if iterations > 10_000 {
            return Err(Error::NoConvergence {
                iterations,
                residual: upper - lower,
            });
        }
    }

    let theta_star = 0.5 * (lower + upper);
    let deltas = g_chain(spec, theta_star)?;
    let prices = deltas
        .iter()
        .map(|&d| Ok(spec.valuation.eval_m(d)?.u_star))
        .collect::<Result<Vec<_>>>()?;
    let residuals = bellman_residuals(spec, theta_star, &deltas)?;
    Ok(PoissonSolveResult {
        theta_star,
        deltas,
        prices,
        iterations,
        bracket_width: upper - lower,
        residuals,
        bracket_trace: trace,
    })
}

/// Revenue rate and price with unlimited servers, where the best policy is
/// the uniform price `argmax u tail(u)`.
pub fn infinite_servers(spec: &SystemSpec) -> Result<(f64, f64)> {
    let a = spec.valuation.eval_m(0.0)?;
    Ok((spec.arrival_rate() * a.m_val, a.u_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub theta: f64,
    pub sweeps: usize,
}

const ORACLE_GRID: usize = 4096;
const ORACLE_MAX_SWEEPS: usize = 1_000_000;

/// Average revenue rate by relative value iteration on the uniformized
/// chain (uniformization rate `K mu + lambda`). The price in each state is
/// chosen by a 4096-point scan of `[0, Q(1e-9)]` and golden-section
/// refinement around the best scan point, independently of the closed-form
/// maximizers used by [`fixed_point`].
pub fn value_iteration_oracle(spec: &SystemSpec, tol: f64) -> Result<OracleResult> {
    value_iteration_with_limit(spec, tol, ORACLE_MAX_SWEEPS)
}

pub fn value_iteration_with_limit(spec: &SystemSpec, tol: f64, max_sweeps: usize) -> Result<OracleResult> {
    require_poisson(spec)?;
    let k = spec.servers;
    let lambda = spec.arrival_rate();
    let mu = spec.service_rate;
    let big = k as f64 * mu + lambda;
    let top = spec.valuation.quantile_tail(1e-9);
    if !top.is_finite() {
        return Err(Error::NonFiniteObjective { offset: 0.0 });
    }
    let grid: Vec<f64> = (0..ORACLE_GRID).map(|j| top * j as f64 / (ORACLE_GRID - 1) as f64).collect();
    let tails: Vec<f64> = grid.iter().map(|&u| spec.valuation.tail(u)).collect();
    let best_gain = |b: f64| -> f64 {
        let mut best_j = 0;
        let mut best = f64::NEG_INFINITY;
        for (j, (&u, &g)) in grid.iter().zip(&tails).enumerate() {
            let v = (u - b) * g;
            if v > best {
                best = v;
                best_j = j;
            }
        }
        let lo = grid[best_j.saturating_sub(1)];
        let hi = grid[(best_j + 1).min(ORACLE_GRID - 1)];
        let (_, refined) = numeric::golden_section_max(|u| (u - b) * spec.valuation.tail(u), lo, hi, 1e-13);
        // Declining to sell (price at the support end) is always available.
        best.max(refined).max(0.0)
    };

    let mut v = vec![0.0; k + 1];
    let mut next = vec![0.0; k + 1];
    for sweep in 1..=max_sweeps {
        for i in 0..=k {
            let down = if i > 0 { i as f64 * mu * v[i - 1] } else { 0.0 };
            let mut total = down + (big - i as f64 * mu) * v[i];
            if i < k {
                total += lambda * best_gain(v[i] - v[i + 1]);
            }
            next[i] = total / big;
        }
        let (lo, hi) = next
            .iter()
            .zip(&v)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let base = next[0];
        for (vi, ni) in v.iter_mut().zip(&next) {
            *vi = ni - base;
        }
        if (hi - lo) * big <= tol {
            return Ok(OracleResult {
                theta: 0.5 * (lo + hi) * big,
                sweeps: sweep,
            });
        }
        if sweep == max_sweeps {
            return Err(Error::NoConvergence {
                iterations: sweep,
                residual: (hi - lo) * big,
            });
        }
    }
    unreachable!("loop returns on its last sweep")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    Mu,
    K,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub theta_star: f64,
    /// `theta_star / param`.
    pub ratio: f64,
    pub prices: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Solves the template once per grid value of the varied parameter. Rows are
/// independent and solved in parallel; output follows the grid order.
pub fn sweep(template: &SystemSpec, vary: SweepParam, grid: &[f64], precision: f64) -> Result<Vec<SweepRow>> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("grid", "must be strictly increasing"));
    }
    grid.par_iter()
        .map(|&x| {
            let spec = match vary {
                SweepParam::Lambda => template.with_arrival_rate(x)?,
                SweepParam::Mu => template.with_service_rate(x)?,
                SweepParam::K => {
                    if x < 1.0 || x.fract() != 0.0 {
                        return Err(invalid("grid", "server counts must be positive integers"));
                    }
                    template.with_servers(x as usize)?
                }
            };
            let sol = fixed_point(&spec, precision)?;
            Ok(SweepRow {
                param: x,
                theta_star: sol.theta_star,
                ratio: sol.theta_star / x,
                prices: sol.prices,
                deltas: sol.deltas,
            })
        })
        .collect()
}
