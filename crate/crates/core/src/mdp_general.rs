//! Optimal prices for general renewal arrivals.
//!
//! The chain is observed at arrival instants. With `y = theta / lambda`, the
//! optimality equations read
//!
//! ```text
//! m(b_0)                               = y
//! m(b_i) + sum_{j<i} a_{i,j} Delta(j)  = y      (0 < i < K)
//! sum_{j<K} a_{K,j} Delta(j)           = y
//! b_i = sum_{j<i} (a_{i,j} - a_{i+1,j}) Delta(j) + alpha_{i+1,0} Delta(i)
//! ```
//!
//! For a trial `theta` the first K equations determine `Delta` upward through
//! `m^{-1}`; the last one is the scalar equation `h(theta) = 0` left for the
//! root finder. Uniqueness of that root is not known in general, so the
//! solver scans `h` before bisecting every sign change it sees.

use rayon::prelude::*;
use serde::Serialize;

use crate::arrival::{DepartureMatrix, QUAD_TOL};
use crate::error::{invalid, Error, Result};
use crate::system::SystemSpec;

const SCAN_POINTS: usize = 1024;

/// Reward differences for a trial revenue rate. When `feasible` is false the
/// recursion left the range of `m` at index `g.len()` and stopped there.
#[derive(Debug, Clone, PartialEq)]
pub struct GChain {
    pub g: Vec<f64>,
    pub feasible: bool,
}

fn check_dep(spec: &SystemSpec, dep: &DepartureMatrix) -> Result<()> {
    if dep.servers() != spec.servers || dep.mu() != spec.service_rate {
        return Err(invalid("departures", "matrix was built for a different system"));
    }
    Ok(())
}

fn m_inverse_or_infeasible(spec: &SystemSpec, y: f64) -> Result<Option<f64>> {
    if y.is_nan() || y <= 0.0 {
        return Ok(None);
    }
    match spec.valuation.m_inverse(y) {
        Ok(b) => Ok(Some(b)),
        Err(Error::OutOfRange { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Upward recursion for `(g_0(theta), ..., g_{K-1}(theta))`.
pub fn g_chain_general(spec: &SystemSpec, dep: &DepartureMatrix, theta: f64) -> Result<GChain> {
    check_dep(spec, dep)?;
    let k = spec.servers;
    let y = theta / spec.arrival_rate();
    let mut g: Vec<f64> = Vec::with_capacity(k);
    for i in 0..k {
        let mut arg = y;
        let mut carry = 0.0;
        for (j, &gj) in g.iter().enumerate() {
            arg -= dep.a(i, j) * gj;
            carry += (dep.a(i, j) - dep.a(i + 1, j)) * gj;
        }
        match m_inverse_or_infeasible(spec, arg)? {
            Some(b) => g.push((b - carry) / dep.alpha(i + 1, 0)),
            None => return Ok(GChain { g, feasible: false }),
        }
    }
    Ok(GChain { g, feasible: true })
}

/// `h(theta) = theta - lambda sum_{j<K} a_{K,j} g_j(theta)`; `None` when the
/// recursion is infeasible.
pub fn h_value(spec: &SystemSpec, dep: &DepartureMatrix, theta: f64) -> Result<Option<f64>> {
    let chain = g_chain_general(spec, dep, theta)?;
    if !chain.feasible {
        return Ok(None);
    }
    let k = spec.servers;
    let s: f64 = chain.g.iter().enumerate().map(|(j, gj)| dep.a(k, j) * gj).sum();
    Ok(Some(theta - spec.arrival_rate() * s))
}

/// `b_i`, the offsets whose maximizers are the optimal prices.
pub fn b_values(dep: &DepartureMatrix, deltas: &[f64]) -> Vec<f64> {
    (0..deltas.len())
        .map(|i| {
            let carry: f64 = (0..i).map(|j| (dep.a(i, j) - dep.a(i + 1, j)) * deltas[j]).sum();
            carry + dep.alpha(i + 1, 0) * deltas[i]
        })
        .collect()
}

/// Residuals of the K+1 optimality equations, in units of `theta / lambda`.
pub fn general_residuals(spec: &SystemSpec, dep: &DepartureMatrix, theta: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    let k = spec.servers;
    let y = theta / spec.arrival_rate();
    let b = b_values(dep, deltas);
    let mut out = Vec::with_capacity(k + 1);
    for (i, &bi) in b.iter().enumerate().take(k) {
        let past: f64 = (0..i).map(|j| dep.a(i, j) * deltas[j]).sum();
        out.push(spec.valuation.m(bi)? + past - y);
    }
    out.push((0..k).map(|j| dep.a(k, j) * deltas[j]).sum::<f64>() - y);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralSolveResult {
    pub theta_star: f64,
    pub deltas: Vec<f64>,
    pub b_vals: Vec<f64>,
    pub prices: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Every root located by the scan, ascending. `theta_star` is the first.
    pub roots: Vec<f64>,
    pub multiple_roots: bool,
    /// Scanned `(theta, h(theta))`, `NaN` where infeasible.
    #[serde(skip)]
    pub scan: Vec<(f64, f64)>,
}

/// Builds the departure matrix with the default quadrature tolerance and
/// solves.
pub fn solve_general(spec: &SystemSpec, tol: f64) -> Result<GeneralSolveResult> {
    let dep = DepartureMatrix::build(&spec.arrival, spec.service_rate, spec.servers, QUAD_TOL)?;
    solve_general_with(spec, &dep, tol)
}

pub fn solve_general_with(spec: &SystemSpec, dep: &DepartureMatrix, tol: f64) -> Result<GeneralSolveResult> {
    check_dep(spec, dep)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("tol", "must be finite and > 0"));
    }
    let upper = spec.arrival_rate() * spec.valuation.m(0.0)?;
    // Infeasible trial rates count as negative: they sit below the root,
    // where the recursion runs out of range of `m` before reaching state K.
    let signed = |theta: f64| -> Result<f64> { Ok(h_value(spec, dep, theta)?.unwrap_or(f64::NEG_INFINITY)) };

    let scan: Vec<(f64, f64)> = (1..=SCAN_POINTS)
        .into_par_iter()
        .map(|n| {
            let theta = upper * n as f64 / SCAN_POINTS as f64;
            Ok((theta, h_value(spec, dep, theta)?.unwrap_or(f64::NAN)))
        })
        .collect::<Result<_>>()?;

    let sign = |h: f64| if h.is_nan() || h < 0.0 { -1 } else if h > 0.0 { 1 } else { 0 };
    let mut roots = Vec::new();
    for w in scan.windows(2) {
        let (t0, h0) = w[0];
        let (t1, h1) = w[1];
        if sign(h0) == 0 {
            roots.push(t0);
            continue;
        }
        if sign(h0) != sign(h1) && sign(h1) != 0 {
            roots.push(bisect_root(&signed, t0, t1, tol)?);
        }
    }
    if let Some(&(t, h)) = scan.last() {
        if sign(h) == 0 {
            roots.push(t);
        }
    }
    let Some(&theta_star) = roots.first() else {
        return Err(Error::NoRootInBracket { upper, trace: scan });
    };

    let chain = g_chain_general(spec, dep, theta_star)?;
    if !chain.feasible {
        return Err(Error::NoRootInBracket { upper, trace: scan });
    }
    let deltas = chain.g;
    let b_vals = b_values(dep, &deltas);
    let prices = b_vals
        .iter()
        .map(|&b| Ok(spec.valuation.eval_m(b)?.u_star))
        .collect::<Result<Vec<_>>>()?;
    let residuals = general_residuals(spec, dep, theta_star, &deltas)?;
    Ok(GeneralSolveResult {
        theta_star,
        deltas,
        b_vals,
        prices,
        residuals,
        multiple_roots: roots.len() > 1,
        roots,
        scan,
    })
}

fn bisect_root<F>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let lo_positive = f(lo)? > 0.0;
    // Go well below `tol` on theta: the last optimality equation is only
    // as accurate as the root.
    let target = tol * 1e-3;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= target || mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
