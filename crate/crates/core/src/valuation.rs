//! Customer valuation laws and the auxiliary maps built on their tails.
//!
//! For an offset `B` (a reward difference), the maps are
//!
//! ```text
//! f(B, u) = (u - B) * tail(u)
//! m(B)    = max_u f(B, u)
//! u*(B)   = smallest argmax_u f(B, u)
//! ```
//!
//! `m` is nonnegative, nonincreasing, convex and 1-Lipschitz; `u*` is
//! nondecreasing. Exponential, Pareto and uniform laws use closed forms; a
//! tabulated tail goes through a grid scan plus golden-section refinement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric;

/// Absolute tolerance of [`ValuationDist::m_inverse`].
pub const M_INVERSE_TOL: f64 = 1e-10;

/// Tail mass left beyond the upper end of the numeric search window.
const SEARCH_TAIL: f64 = 1e-9;
const SEARCH_GRID: usize = 256;

/// Piecewise-linear valuation tail through `(x, tail(x))` knots.
///
/// The first knot carries tail 1, values are nonincreasing, and the tail is 0
/// beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    xs: Vec<f64>,
    gs: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("points", "need at least two knots"));
        }
        let (xs, gs): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if xs.iter().chain(gs.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("points", "knots must be finite"));
        }
        if xs[0] < 0.0 {
            return Err(invalid("points", "first abscissa must be nonnegative"));
        }
        if (gs[0] - 1.0).abs() > 1e-12 {
            return Err(invalid("points", "tail must start at 1"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("points", "abscissae must be strictly increasing"));
        }
        if gs.windows(2).any(|w| w[1] > w[0]) || gs.iter().any(|&g| !(0.0..=1.0).contains(&g)) {
            return Err(invalid("points", "tail values must be nonincreasing within [0, 1]"));
        }
        Ok(Self { xs, gs })
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.xs.iter().copied().zip(self.gs.iter().copied()).collect()
    }

    fn tail(&self, u: f64) -> f64 {
        let n = self.xs.len();
        if u < self.xs[0] {
            return 1.0;
        }
        if u > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&x| x <= u);
        if i >= n {
            return self.gs[n - 1];
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (g0, g1) = (self.gs[i - 1], self.gs[i]);
        g0 + (g1 - g0) * (u - x0) / (x1 - x0)
    }

    fn quantile(&self, q: f64) -> f64 {
        let n = self.xs.len();
        for i in 1..n {
            if self.gs[i] <= q {
                let (x0, x1) = (self.xs[i - 1], self.xs[i]);
                let (g0, g1) = (self.gs[i - 1], self.gs[i]);
                if g0 <= q {
                    return x0;
                }
                return x0 + (g0 - q) / (g0 - g1) * (x1 - x0);
            }
        }
        self.xs[n - 1]
    }

    fn mean(&self) -> f64 {
        let head = self.xs[0];
        head + self
            .xs
            .windows(2)
            .zip(self.gs.windows(2))
            .map(|(x, g)| 0.5 * (x[1] - x[0]) * (g[0] + g[1]))
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValuationKind {
    /// `tail(u) = exp(-beta u)`.
    Exponential { beta: f64 },
    /// `tail(u) = min(1, (theta / u)^shape)`, `shape >= 1`.
    Pareto { theta: f64, shape: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    Tabulated(TabulatedTail),
}

/// Valuation law `G` of arriving customers. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ValuationSpec", into = "ValuationSpec")]
pub struct ValuationDist {
    kind: ValuationKind,
}

/// Result of maximizing `(u - b) * tail(u)` over prices `u >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxEval {
    pub b: f64,
    pub u_star: f64,
    pub m_val: f64,
}

impl ValuationDist {
    pub fn exponential(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("beta", "must be finite and > 0"));
        }
        Ok(Self {
            kind: ValuationKind::Exponential { beta },
        })
    }

    /// Pareto tail `theta / u` beyond `theta`.
    pub fn pareto(theta: f64) -> Result<Self> {
        Self::pareto_with_shape(theta, 1.0)
    }

    pub fn pareto_with_shape(theta: f64, shape: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid("theta", "must be finite and > 0"));
        }
        // shape < 1 makes u * tail(u) diverge.
        if !(shape.is_finite() && shape >= 1.0) {
            return Err(invalid("shape", "must be finite and >= 1"));
        }
        Ok(Self {
            kind: ValuationKind::Pareto { theta, shape },
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && lo >= 0.0) {
            return Err(invalid("lo", "must be finite and >= 0"));
        }
        if !(hi.is_finite() && hi > lo) {
            return Err(invalid("hi", "must be finite and > lo"));
        }
        Ok(Self {
            kind: ValuationKind::Uniform { lo, hi },
        })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Self {
            kind: ValuationKind::Tabulated(TabulatedTail::new(points)?),
        })
    }

    pub fn kind(&self) -> &ValuationKind {
        &self.kind
    }

    /// `P(V >= u)`, the admission probability at price `u`.
    pub fn tail(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 {
            return 1.0;
        }
        match &self.kind {
            ValuationKind::Exponential { beta } => (-beta * u).exp(),
            ValuationKind::Pareto { theta, shape } => {
                if u <= *theta {
                    1.0
                } else {
                    (theta / u).powf(*shape)
                }
            }
            ValuationKind::Uniform { lo, hi } => ((hi - u) / (hi - lo)).clamp(0.0, 1.0),
            ValuationKind::Tabulated(t) => t.tail(u),
        }
    }

    /// `inf { x : tail(x) <= q }`. `q <= 0` yields the upper end of the
    /// support (possibly `+inf`).
    pub fn quantile_tail(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return 0.0;
        }
        match &self.kind {
            ValuationKind::Exponential { beta } => {
                if q <= 0.0 {
                    f64::INFINITY
                } else {
                    -q.ln() / beta
                }
            }
            ValuationKind::Pareto { theta, shape } => {
                if q <= 0.0 {
                    f64::INFINITY
                } else {
                    theta * q.powf(-1.0 / shape)
                }
            }
            ValuationKind::Uniform { lo, hi } => hi - q.max(0.0) * (hi - lo),
            ValuationKind::Tabulated(t) => t.quantile(q.max(0.0)),
        }
    }

    /// `E[V]`; infinite for the shape-1 Pareto law.
    pub fn mean_value(&self) -> f64 {
        match &self.kind {
            ValuationKind::Exponential { beta } => 1.0 / beta,
            ValuationKind::Pareto { theta, shape } => {
                if *shape <= 1.0 {
                    f64::INFINITY
                } else {
                    shape * theta / (shape - 1.0)
                }
            }
            ValuationKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            ValuationKind::Tabulated(t) => t.mean(),
        }
    }

    /// Draws one valuation by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // `u` in [0, 1); map to (0, 1] so the tail quantile stays finite.
        self.quantile_tail(1.0 - u)
    }

    /// `f(B, u) = (u - B) * tail(u)`.
    pub fn objective(&self, b: f64, u: f64) -> f64 {
        let g = self.tail(u);
        if g == 0.0 {
            0.0
        } else {
            (u - b) * g
        }
    }

    /// Maximizer `u*(B)` and maximum `m(B)` of `(u - B) * tail(u)`.
    pub fn eval_m(&self, b: f64) -> Result<AuxEval> {
        if !b.is_finite() {
            return Err(invalid("B", "must be finite"));
        }
        match &self.kind {
            ValuationKind::Exponential { beta } => {
                let u_star = (b + 1.0 / beta).max(0.0);
                Ok(AuxEval {
                    b,
                    u_star,
                    m_val: (u_star - b) * (-beta * u_star).exp(),
                })
            }
            ValuationKind::Pareto { theta, shape } => {
                let u_star = if *shape == 1.0 {
                    if b > 0.0 {
                        return Err(Error::NonFiniteObjective { offset: b });
                    }
                    *theta
                } else {
                    theta.max(shape * b / (shape - 1.0))
                };
                Ok(AuxEval {
                    b,
                    u_star,
                    m_val: (u_star - b) * self.tail(u_star),
                })
            }
            ValuationKind::Uniform { lo, hi } => {
                let (u_star, m_val) = if b >= *hi {
                    (*hi, 0.0)
                } else if b <= 2.0 * lo - hi {
                    (*lo, lo - b)
                } else {
                    (0.5 * (hi + b), (hi - b) * (hi - b) / (4.0 * (hi - lo)))
                };
                Ok(AuxEval { b, u_star, m_val })
            }
            ValuationKind::Tabulated(_) => self.eval_m_numeric(b),
        }
    }

    /// Numeric route for `m(B)`: a 256-point scan of
    /// `[max(B, 0), max(B, 0) + Q(1e-9)]` and golden-section refinement.
    /// Works for every law; the closed forms are checked against it.
    pub fn eval_m_numeric(&self, b: f64) -> Result<AuxEval> {
        if !b.is_finite() {
            return Err(invalid("B", "must be finite"));
        }
        let sup = self.quantile_tail(0.0);
        if b >= sup {
            // Nothing above B is ever bought: f <= 0, with equality from the
            // support end onwards.
            return Ok(AuxEval {
                b,
                u_star: sup,
                m_val: 0.0,
            });
        }
        let lo = b.max(0.0);
        let reach = self.quantile_tail(SEARCH_TAIL);
        let hi = (lo + reach).min(sup.max(lo));
        if !hi.is_finite() {
            return Err(Error::NonFiniteObjective { offset: b });
        }
        let grid: Vec<f64> = (0..SEARCH_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / (SEARCH_GRID - 1) as f64)
            .collect();
        let (u_star, m_val) = numeric::grid_then_golden_max(|u| self.objective(b, u), &grid, 1e-13);
        if grid.last().is_some_and(|&last| u_star >= last && last < sup) {
            let beyond = self.objective(b, 2.0 * hi + 1.0);
            if beyond > m_val {
                return Err(Error::NonFiniteObjective { offset: b });
            }
        }
        Ok(AuxEval {
            b,
            u_star,
            m_val: m_val.max(0.0),
        })
    }

    /// `m(B)`.
    pub fn m(&self, b: f64) -> Result<f64> {
        Ok(self.eval_m(b)?.m_val)
    }

    /// `u*(0) = argmax u * tail(u)`, the optimal price with unlimited servers.
    pub fn monopoly_price(&self) -> Result<f64> {
        Ok(self.eval_m(0.0)?.u_star)
    }

    /// Solves `m(B) = y` for `y > 0` to [`M_INVERSE_TOL`].
    pub fn m_inverse(&self, y: f64) -> Result<f64> {
        self.m_inverse_with_tol(y, M_INVERSE_TOL)
    }

    pub fn m_inverse_with_tol(&self, y: f64, tol: f64) -> Result<f64> {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::OutOfRange {
                value: y,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        match &self.kind {
            ValuationKind::Exponential { beta } => {
                if y >= 1.0 / beta {
                    Ok(-y)
                } else {
                    Ok((-(beta * y).ln() - 1.0) / beta)
                }
            }
            ValuationKind::Uniform { lo, hi } => {
                let width = hi - lo;
                if y >= width {
                    Ok(lo - y)
                } else {
                    Ok(hi - 2.0 * (y * width).sqrt())
                }
            }
            _ => self.m_inverse_bisect(y, tol),
        }
    }

    /// Bisection route for `m^{-1}`, valid for every law.
    pub fn m_inverse_bisect(&self, y: f64, tol: f64) -> Result<f64> {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::OutOfRange {
                value: y,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        // f(B, 0) = -B, so m(-y) >= y.
        let mut lo = -y;
        let m_lo = self.m(lo)?;
        if m_lo < y {
            return Err(Error::OutOfRange {
                value: y,
                lo: 0.0,
                hi: m_lo,
            });
        }
        let mut hi = (lo + 1.0).max(1.0);
        let mut m_hi = self.m(hi)?;
        let mut expansions = 0;
        while m_hi > y {
            hi = 2.0 * hi + 1.0;
            m_hi = self.m(hi)?;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::OutOfRange {
                    value: y,
                    lo: m_hi,
                    hi: m_lo,
                });
            }
        }
        for _ in 0..400 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.m(mid)? > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn one() -> f64 {
    1.0
}

/// Wire form of a valuation law, e.g. `{"kind":"exponential","beta":1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationSpec {
    Exponential {
        beta: f64,
    },
    Pareto {
        theta: f64,
        #[serde(default = "one")]
        shape: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

impl TryFrom<ValuationSpec> for ValuationDist {
    type Error = Error;

    fn try_from(spec: ValuationSpec) -> Result<Self> {
        match spec {
            ValuationSpec::Exponential { beta } => Self::exponential(beta),
            ValuationSpec::Pareto { theta, shape } => Self::pareto_with_shape(theta, shape),
            ValuationSpec::Uniform { lo, hi } => Self::uniform(lo, hi),
            ValuationSpec::Tabulated { points } => Self::tabulated(&points),
        }
    }
}

impl From<ValuationDist> for ValuationSpec {
    fn from(d: ValuationDist) -> Self {
        match d.kind {
            ValuationKind::Exponential { beta } => ValuationSpec::Exponential { beta },
            ValuationKind::Pareto { theta, shape } => ValuationSpec::Pareto { theta, shape },
            ValuationKind::Uniform { lo, hi } => ValuationSpec::Uniform { lo, hi },
            ValuationKind::Tabulated(t) => ValuationSpec::Tabulated { points: t.points() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Brute-force argmax over a fine grid; independent of the solver path.
    fn grid_oracle(d: &ValuationDist, b: f64, hi: f64, n: usize) -> (f64, f64) {
        (0..=n)
            .map(|i| hi * i as f64 / n as f64)
            .map(|u| (u, (u - b) * d.tail(u)))
            .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
    }

    #[test]
    fn tail_values() {
        let e = ValuationDist::exponential(1.0).unwrap();
        assert_eq!(e.tail(0.0), 1.0);
        assert!(close(e.tail(1.0), 0.367_879_441_171_442_3, 1e-15));
        assert_eq!(e.tail(-3.0), 1.0);
        let p = ValuationDist::pareto(2.0).unwrap();
        assert_eq!(p.tail(4.0), 0.5);
        assert_eq!(p.tail(1.0), 1.0);
    }

    #[test]
    fn exponential_closed_form_m() {
        let e = ValuationDist::exponential(1.0).unwrap();
        let a = e.eval_m(0.0).unwrap();
        assert!(close(a.u_star, 1.0, 1e-15));
        assert!(close(a.m_val, (-1f64).exp(), 1e-15));
        let e2 = ValuationDist::exponential(2.0).unwrap();
        let a = e2.eval_m(0.5).unwrap();
        assert!(close(a.u_star, 1.0, 1e-15));
        assert!(close(a.m_val, 0.5 * (-2f64).exp(), 1e-15));
        assert!(close(a.m_val, 0.067_667_641_618_306_35, 1e-12));
    }

    #[test]
    fn uniform_m_matches_grid_oracle() {
        let d = ValuationDist::uniform(0.0, 1.0).unwrap();
        let (u_grid, m_grid) = grid_oracle(&d, 0.0, 1.0, 100_000);
        assert!(close(u_grid, 0.5, 1e-5) && close(m_grid, 0.25, 1e-9));
        let a = d.eval_m(0.0).unwrap();
        assert!(close(a.u_star, 0.5, 1e-12));
        assert!(close(a.m_val, 0.25, 1e-12));
        let n = d.eval_m_numeric(0.0).unwrap();
        assert!(close(n.u_star, 0.5, 1e-6));
        assert!(close(n.m_val, 0.25, 1e-12));
    }

    #[test]
    fn numeric_route_agrees_with_closed_forms() {
        let laws = [
            ValuationDist::exponential(1.0).unwrap(),
            ValuationDist::exponential(2.5).unwrap(),
            ValuationDist::uniform(0.0, 3.0).unwrap(),
            ValuationDist::uniform(1.0, 2.0).unwrap(),
            ValuationDist::pareto_with_shape(1.0, 2.0).unwrap(),
        ];
        for d in &laws {
            for &b in &[-2.0, -0.3, 0.0, 0.2, 0.7, 1.5] {
                let closed = d.eval_m(b).unwrap();
                let num = d.eval_m_numeric(b).unwrap();
                assert!(close(closed.m_val, num.m_val, 1e-10), "{d:?} B={b}: {closed:?} vs {num:?}");
                assert!(close(closed.u_star, num.u_star, 1e-5), "{d:?} B={b}: {closed:?} vs {num:?}");
            }
        }
    }

    #[test]
    fn uniform_beyond_support() {
        let d = ValuationDist::uniform(0.0, 1.0).unwrap();
        let a = d.eval_m(2.0).unwrap();
        assert_eq!(a.m_val, 0.0);
        assert_eq!(a.u_star, 1.0);
        let n = d.eval_m_numeric(2.0).unwrap();
        assert_eq!(n.u_star, 1.0);
    }

    #[test]
    fn pareto_shape_one() {
        let d = ValuationDist::pareto(2.0).unwrap();
        let a = d.eval_m(-1.0).unwrap();
        assert_eq!(a.u_star, 2.0);
        assert_eq!(a.m_val, 3.0);
        assert!(matches!(d.eval_m(0.5), Err(Error::NonFiniteObjective { .. })));
        assert_eq!(d.monopoly_price().unwrap(), 2.0);
        assert!(d.mean_value().is_infinite());
    }

    #[test]
    fn m_inverse_examples() {
        let e = ValuationDist::exponential(1.0).unwrap();
        assert!(close(e.m_inverse((-1f64).exp()).unwrap(), 0.0, 1e-12));
        assert!(close(e.m_inverse((-2f64).exp()).unwrap(), 1.0, 1e-12));
        let u = ValuationDist::uniform(0.0, 1.0).unwrap();
        assert!(close(u.m_inverse(0.25).unwrap(), 0.0, 1e-12));
        // The bisection route agrees with the closed forms.
        assert!(close(e.m_inverse_bisect((-2f64).exp(), 1e-12).unwrap(), 1.0, 1e-10));
        assert!(close(u.m_inverse_bisect(0.25, 1e-12).unwrap(), 0.0, 1e-10));
        assert!(matches!(e.m_inverse(0.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(e.m_inverse(-1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn tabulated_tail_behaviour() {
        let t = ValuationDist::tabulated(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]).unwrap();
        assert_eq!(t.tail(0.5), 0.75);
        assert_eq!(t.tail(3.0), 0.0);
        assert!(close(t.quantile_tail(0.5), 1.0, 1e-15));
        assert!(close(t.quantile_tail(0.25), 1.5, 1e-15));
        assert!(close(t.mean_value(), 0.75 + 0.25, 1e-15));
        let a = t.eval_m(0.0).unwrap();
        // On [0, 1]: u (1 - u/2), peak at u = 1 with value 0.5.
        assert!(close(a.m_val, 0.5, 1e-10));
        assert!(close(a.u_star, 1.0, 1e-5));
        let b = t.m_inverse(a.m_val).unwrap();
        assert!(close(t.m(b).unwrap(), a.m_val, 2e-10));
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(ValuationDist::tabulated(&[(0.0, 1.0), (1.0, 0.6), (2.0, 0.7)]).is_err());
        assert!(ValuationDist::tabulated(&[(0.0, 0.9), (1.0, 0.0)]).is_err());
        assert!(ValuationDist::tabulated(&[(0.0, 1.0), (0.0, 0.0)]).is_err());
        assert!(ValuationDist::tabulated(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(ValuationDist::exponential(0.0).is_err());
        assert!(ValuationDist::pareto_with_shape(1.0, 0.5).is_err());
        assert!(ValuationDist::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn serde_round_trip_and_rejection() {
        let d: ValuationDist = serde_json::from_str(r#"{"kind":"exponential","beta":1.0}"#).unwrap();
        assert_eq!(d, ValuationDist::exponential(1.0).unwrap());
        let p: ValuationDist = serde_json::from_str(r#"{"kind":"pareto","theta":2.0}"#).unwrap();
        assert_eq!(p, ValuationDist::pareto(2.0).unwrap());
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ValuationDist>(&s).unwrap(), p);
        assert!(serde_json::from_str::<ValuationDist>(r#"{"kind":"exponential","beta":-1.0}"#).is_err());
        assert!(serde_json::from_str::<ValuationDist>(r#"{"kind":"exponential","rate":1.0}"#).is_err());
    }

    fn laws() -> impl Strategy<Value = ValuationDist> {
        prop_oneof![
            (0.2f64..5.0).prop_map(|b| ValuationDist::exponential(b).unwrap()),
            (0.0f64..2.0, 0.1f64..3.0).prop_map(|(lo, w)| ValuationDist::uniform(lo, lo + w).unwrap()),
            (0.1f64..3.0, 1.2f64..4.0).prop_map(|(t, s)| ValuationDist::pareto_with_shape(t, s).unwrap()),
            Just(ValuationDist::tabulated(&[(0.0, 1.0), (0.5, 0.8), (1.0, 0.3), (2.5, 0.05), (3.0, 0.0)]).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn m_is_monotone_lipschitz_convex(d in laws(), b1 in -3.0f64..3.0, b2 in -3.0f64..3.0) {
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let m_lo = d.eval_m(lo).unwrap();
            let m_hi = d.eval_m(hi).unwrap();
            prop_assert!(m_lo.m_val >= 0.0 && m_hi.m_val >= 0.0);
            prop_assert!(m_lo.m_val >= m_hi.m_val - 1e-12);
            prop_assert!((m_lo.m_val - m_hi.m_val).abs() <= (hi - lo) + 1e-10);
            let mid = d.m(0.5 * (lo + hi)).unwrap();
            prop_assert!(mid <= 0.5 * (m_lo.m_val + m_hi.m_val) + 1e-10);
            prop_assert!(m_lo.u_star <= m_hi.u_star + 1e-6);
        }

        #[test]
        fn maximizer_dominates_probes(d in laws(), b in -2.0f64..2.0) {
            let a = d.eval_m(b).unwrap();
            prop_assert!((a.m_val - (a.u_star - b) * d.tail(a.u_star)).abs() < 1e-9);
            let hi = d.quantile_tail(1e-9).min(50.0) + b.abs();
            for i in 0..=400 {
                let u = hi * i as f64 / 400.0;
                prop_assert!(a.m_val >= (u - b) * d.tail(u) - 1e-9);
            }
        }

        #[test]
        fn m_inverse_round_trip(d in laws(), b in -2.0f64..1.5) {
            let y = d.m(b).unwrap();
            prop_assume!(y > 1e-6);
            let back = d.m_inverse(y).unwrap();
            prop_assert!((d.m(back).unwrap() - y).abs() <= 2.0 * M_INVERSE_TOL);
        }
    }
}
