//! Renewal interarrival laws and the quantities the pricing solvers derive
//! from them: Laplace-Stieltjes transforms, the `beta_j` products of the
//! blocking formula, and the probabilities `alpha[k][i]` of seeing `i` of `k`
//! busy servers finish during one interarrival time.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric;

/// Default absolute tolerance for departure-probability quadrature.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum InterarrivalKind {
    Exponential { rate: f64 },
    /// Constant gaps of length `1 / rate`.
    Deterministic { rate: f64 },
    /// Uniform on `[lo, hi]`.
    UniformInterval { lo: f64, hi: f64 },
    /// `x1` with probability `p1`, else `x2`.
    TwoPoint { x1: f64, p1: f64, x2: f64 },
}

/// Interarrival time law `F` with mean `1 / rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrivalSpec", into = "ArrivalSpec")]
pub struct InterarrivalDist {
    kind: InterarrivalKind,
    rate: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, "must be finite and > 0"))
    }
}

impl InterarrivalDist {
    /// Poisson arrivals.
    pub fn exponential(rate: f64) -> Result<Self> {
        let rate = positive("rate", rate)?;
        Ok(Self {
            kind: InterarrivalKind::Exponential { rate },
            rate,
        })
    }

    pub fn deterministic(rate: f64) -> Result<Self> {
        let rate = positive("rate", rate)?;
        Ok(Self {
            kind: InterarrivalKind::Deterministic { rate },
            rate,
        })
    }

    pub fn uniform_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && lo >= 0.0) {
            return Err(invalid("lo", "must be finite and >= 0"));
        }
        if !(hi.is_finite() && hi > lo) {
            return Err(invalid("hi", "must be finite and > lo"));
        }
        Ok(Self {
            kind: InterarrivalKind::UniformInterval { lo, hi },
            rate: 2.0 / (lo + hi),
        })
    }

    /// Uniform on `[0, 2 / rate]`.
    pub fn uniform_with_rate(rate: f64) -> Result<Self> {
        let rate = positive("rate", rate)?;
        Self::uniform_interval(0.0, 2.0 / rate)
    }

    pub fn two_point(x1: f64, p1: f64, x2: f64) -> Result<Self> {
        if !(x1.is_finite() && x1 >= 0.0) {
            return Err(invalid("x1", "must be finite and >= 0"));
        }
        if !(x2.is_finite() && x2 >= 0.0) {
            return Err(invalid("x2", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&p1) {
            return Err(invalid("p1", "must lie in [0, 1]"));
        }
        let mean = p1 * x1 + (1.0 - p1) * x2;
        if mean.is_nan() || mean <= 0.0 {
            return Err(invalid("x1", "mean interarrival time must be > 0"));
        }
        Ok(Self {
            kind: InterarrivalKind::TwoPoint { x1, p1, x2 },
            rate: 1.0 / mean,
        })
    }

    /// Gaps of `sqrt(m)` with probability `1/m`, else `1/m`, with `m` chosen
    /// so the rate is `lambda`. Under this family the uniform-price revenue
    /// vanishes as `lambda` grows. Needs `lambda` above roughly 1.05.
    pub fn heavy_gap_family(lambda: f64) -> Result<Self> {
        let lambda = positive("lambda", lambda)?;
        let mean = |m: f64| m.powf(-0.5) + (m - 1.0) / (m * m);
        let target = 1.0 / lambda;
        let (lo, hi) = (2f64.ln(), 1e30f64.ln());
        if mean(lo.exp()) < target || mean(hi.exp()) > target {
            return Err(invalid("lambda", "outside the range this family can reach"));
        }
        let ln_m = numeric::bisect(|l: f64| mean(l.exp()) - target, lo, hi, 1e-14, 400)
            .ok_or_else(|| invalid("lambda", "no matching family member"))?;
        let m = ln_m.exp();
        Self::two_point(m.sqrt(), 1.0 / m, 1.0 / m)
    }

    /// Gaps of `1` with probability `1/m`, else `1/m`, with
    /// `m = lambda + sqrt(lambda^2 - lambda)`. Needs `lambda >= 1`.
    pub fn unit_gap_family(lambda: f64) -> Result<Self> {
        let lambda = positive("lambda", lambda)?;
        if lambda < 1.0 {
            return Err(invalid("lambda", "must be >= 1"));
        }
        let m = lambda + (lambda * lambda - lambda).sqrt();
        Self::two_point(1.0, 1.0 / m, 1.0 / m)
    }

    pub fn kind(&self) -> &InterarrivalKind {
        &self.kind
    }

    /// Arrival rate `lambda`, the reciprocal of the mean gap.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, InterarrivalKind::Exponential { .. })
    }

    /// The same law with time rescaled so the rate becomes `lambda`.
    pub fn with_rate(&self, lambda: f64) -> Result<Self> {
        let lambda = positive("rate", lambda)?;
        let scale = self.rate / lambda;
        match self.kind {
            InterarrivalKind::Exponential { .. } => Self::exponential(lambda),
            InterarrivalKind::Deterministic { .. } => Self::deterministic(lambda),
            InterarrivalKind::UniformInterval { lo, hi } => Self::uniform_interval(lo * scale, hi * scale),
            InterarrivalKind::TwoPoint { x1, p1, x2 } => Self::two_point(x1 * scale, p1, x2 * scale),
        }
    }

    /// `E[exp(-s U)]`.
    pub fn lst(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        match self.kind {
            InterarrivalKind::Exponential { rate } => rate / (rate + s),
            InterarrivalKind::Deterministic { rate } => (-s / rate).exp(),
            InterarrivalKind::UniformInterval { lo, hi } => {
                let x = s * (hi - lo);
                (-s * lo).exp() * exprel_neg(x)
            }
            InterarrivalKind::TwoPoint { x1, p1, x2 } => p1 * (-s * x1).exp() + (1.0 - p1) * (-s * x2).exp(),
        }
    }

    /// `1 - E[exp(-s U)]`, accurate when the transform is close to 1.
    pub fn lst_complement(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        match self.kind {
            InterarrivalKind::Exponential { rate } => s / (rate + s),
            InterarrivalKind::Deterministic { rate } => -(-s / rate).exp_m1(),
            InterarrivalKind::UniformInterval { lo, hi } => {
                let x = s * (hi - lo);
                let inner = if x < 1e-3 {
                    x / 2.0 - x * x / 6.0 + x * x * x / 24.0
                } else {
                    (x + (-x).exp_m1()) / x
                };
                -(-s * lo).exp_m1() + (-s * lo).exp() * inner
            }
            InterarrivalKind::TwoPoint { x1, p1, x2 } => {
                -p1 * (-s * x1).exp_m1() - (1.0 - p1) * (-s * x2).exp_m1()
            }
        }
    }

    /// `P(U <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.kind {
            InterarrivalKind::Exponential { rate } => -(-rate * x).exp_m1(),
            InterarrivalKind::Deterministic { rate } => {
                if x >= 1.0 / rate {
                    1.0
                } else {
                    0.0
                }
            }
            InterarrivalKind::UniformInterval { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            InterarrivalKind::TwoPoint { x1, p1, x2 } => {
                let mut c = 0.0;
                if x >= x1 {
                    c += p1;
                }
                if x >= x2 {
                    c += 1.0 - p1;
                }
                c
            }
        }
    }

    /// Left-continuous inverse of the CDF for `q` in `(0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        match self.kind {
            InterarrivalKind::Exponential { rate } => -(-q).ln_1p() / rate,
            InterarrivalKind::Deterministic { rate } => 1.0 / rate,
            InterarrivalKind::UniformInterval { lo, hi } => lo + q * (hi - lo),
            InterarrivalKind::TwoPoint { x1, p1, x2 } => {
                let (a, pa, b) = if x1 <= x2 { (x1, p1, x2) } else { (x2, 1.0 - p1, x1) };
                if q <= pa {
                    a
                } else {
                    b
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            InterarrivalKind::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            InterarrivalKind::Deterministic { rate } => 1.0 / rate,
            InterarrivalKind::UniformInterval { lo, hi } => rng.random_range(lo..hi),
            InterarrivalKind::TwoPoint { x1, p1, x2 } => {
                if rng.random_bool(p1) {
                    x1
                } else {
                    x2
                }
            }
        }
    }

    /// `ln beta_j` for `j = 0..=k`, where
    /// `beta_j = prod_{m=1}^{j} (1 - phi(m mu)) / phi(m mu)`.
    pub fn log_beta_seq(&self, mu: f64, k: usize) -> Result<Vec<f64>> {
        positive("mu", mu)?;
        let mut out = Vec::with_capacity(k + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for m in 1..=k {
            let s = m as f64 * mu;
            let phi = self.lst(s);
            let comp = self.lst_complement(s);
            if !(phi > 0.0 && comp > 0.0) {
                return Err(Error::DegenerateTransform { s, phi });
            }
            acc += comp.ln() - phi.ln();
            out.push(acc);
        }
        Ok(out)
    }

    /// `(beta_0, ..., beta_k)`; may overflow to `inf` for large `k`, in which
    /// case use [`Self::log_beta_seq`].
    pub fn beta_seq(&self, mu: f64, k: usize) -> Result<Vec<f64>> {
        Ok(self.log_beta_seq(mu, k)?.into_iter().map(f64::exp).collect())
    }
}

/// `(1 - exp(-x)) / x`, continuous at 0.
fn exprel_neg(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 2.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Probabilities of departures between consecutive arrivals.
///
/// `alpha(k, i)` is the probability that exactly `i` of `k` busy servers
/// complete service during one interarrival time. `a(i, j)` accumulates
/// `alpha(i, i) + alpha(i, i-1) + ... + alpha(i, i-j)`, the probability that at
/// least `i - j` of `i` busy servers finish.
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureMatrix {
    servers: usize,
    mu: f64,
    alpha: Vec<Vec<f64>>,
    a_cum: Vec<Vec<f64>>,
    quad_error: f64,
}

impl DepartureMatrix {
    /// Rows `k = 0..=servers`. Closed forms cover the exponential,
    /// deterministic and two-point laws; the uniform law is integrated with
    /// adaptive Gauss-Kronrod to `quad_tol` per entry.
    pub fn build(dist: &InterarrivalDist, mu: f64, servers: usize, quad_tol: f64) -> Result<Self> {
        positive("mu", mu)?;
        positive("quad_tol", quad_tol)?;
        let mut quad_error = 0.0f64;
        let mut alpha = Vec::with_capacity(servers + 1);
        for k in 0..=servers {
            let row: Vec<f64> = match dist.kind {
                InterarrivalKind::Exponential { rate } => exponential_row(rate, mu, k),
                InterarrivalKind::Deterministic { rate } => binomial_row(mu / rate, k),
                InterarrivalKind::TwoPoint { x1, p1, x2 } => {
                    let r1 = binomial_row(mu * x1, k);
                    let r2 = binomial_row(mu * x2, k);
                    r1.iter().zip(&r2).map(|(a, b)| p1 * a + (1.0 - p1) * b).collect()
                }
                InterarrivalKind::UniformInterval { lo, hi } => {
                    let w = hi - lo;
                    let mut row = Vec::with_capacity(k + 1);
                    for i in 0..=k {
                        let integrand = |x: f64| {
                            let ln_q = (-(-mu * x).exp_m1()).ln();
                            numeric::binomial_pmf_ln(k, i, ln_q, -mu * x) / w
                        };
                        let (v, e) = numeric::integrate(integrand, lo, hi, quad_tol, 4000)?;
                        quad_error = quad_error.max(e);
                        row.push(v.clamp(0.0, 1.0));
                    }
                    row
                }
            };
            alpha.push(row);
        }
        let a_cum = alpha
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut acc = 0.0;
                (0..=i)
                    .map(|j| {
                        acc += row[i - j];
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            servers,
            mu,
            alpha,
            a_cum,
            quad_error,
        })
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest per-entry quadrature error estimate (0 for closed forms).
    pub fn quad_error(&self) -> f64 {
        self.quad_error
    }

    /// `alpha_{k,i}`; 0 outside `0 <= i <= k <= servers`.
    pub fn alpha(&self, k: usize, i: usize) -> f64 {
        self.alpha.get(k).and_then(|r| r.get(i)).copied().unwrap_or(0.0)
    }

    /// `a_{i,j} = sum_{l=0}^{j} alpha_{i,i-l}` for `j <= i`.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a_cum[i][j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.alpha[k]
    }
}

fn exponential_row(lambda: f64, mu: f64, k: usize) -> Vec<f64> {
    // Race of the arrival clock against successive service completions.
    (0..=k)
        .map(|i| {
            let mut p = 1.0;
            for j in (k - i + 1)..=k {
                let r = j as f64 * mu;
                p *= r / (r + lambda);
            }
            p * lambda / (lambda + (k - i) as f64 * mu)
        })
        .collect()
}

fn binomial_row(mu_x: f64, k: usize) -> Vec<f64> {
    let ln_q = (-(-mu_x).exp_m1()).ln();
    (0..=k).map(|i| numeric::binomial_pmf_ln(k, i, ln_q, -mu_x)).collect()
}

/// Wire form, e.g. `{"kind":"deterministic","rate":25.0}`. The uniform law
/// accepts either `rate` (support `[0, 2/rate]`) or explicit `lo`/`hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Exponential {
        rate: f64,
    },
    Deterministic {
        rate: f64,
    },
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    TwoPoint {
        x1: f64,
        p1: f64,
        x2: f64,
    },
}

impl TryFrom<ArrivalSpec> for InterarrivalDist {
    type Error = Error;

    fn try_from(spec: ArrivalSpec) -> Result<Self> {
        match spec {
            ArrivalSpec::Exponential { rate } => Self::exponential(rate),
            ArrivalSpec::Deterministic { rate } => Self::deterministic(rate),
            ArrivalSpec::Uniform { rate, lo, hi } => match (rate, lo, hi) {
                (Some(r), None, None) => Self::uniform_with_rate(r),
                (None, lo, Some(hi)) => Self::uniform_interval(lo.unwrap_or(0.0), hi),
                _ => Err(invalid("uniform", "give either `rate` or `lo`/`hi`")),
            },
            ArrivalSpec::TwoPoint { x1, p1, x2 } => Self::two_point(x1, p1, x2),
        }
    }
}

impl From<InterarrivalDist> for ArrivalSpec {
    fn from(d: InterarrivalDist) -> Self {
        match d.kind {
            InterarrivalKind::Exponential { rate } => ArrivalSpec::Exponential { rate },
            InterarrivalKind::Deterministic { rate } => ArrivalSpec::Deterministic { rate },
            InterarrivalKind::UniformInterval { lo, hi } => ArrivalSpec::Uniform {
                rate: None,
                lo: Some(lo),
                hi: Some(hi),
            },
            InterarrivalKind::TwoPoint { x1, p1, x2 } => ArrivalSpec::TwoPoint { x1, p1, x2 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn all_laws(rate: f64) -> Vec<InterarrivalDist> {
        vec![
            InterarrivalDist::exponential(rate).unwrap(),
            InterarrivalDist::deterministic(rate).unwrap(),
            InterarrivalDist::uniform_with_rate(rate).unwrap(),
            InterarrivalDist::uniform_interval(0.5 / rate, 1.5 / rate).unwrap(),
            InterarrivalDist::two_point(0.2 / rate, 0.5, 1.8 / rate).unwrap(),
        ]
    }

    #[test]
    fn lst_examples() {
        let e = InterarrivalDist::exponential(25.0).unwrap();
        assert!(close(e.lst(2.0), 25.0 / 27.0, 1e-15));
        let d = InterarrivalDist::deterministic(25.0).unwrap();
        assert!(close(d.lst(2.0), (-0.08f64).exp(), 1e-15));
        for law in all_laws(3.0) {
            assert_eq!(law.lst(0.0), 1.0);
            assert!(close(law.mean(), 1.0 / 3.0, 1e-15));
        }
    }

    #[test]
    fn complement_matches_direct_difference() {
        for law in all_laws(2.0) {
            for &s in &[1e-6, 1e-3, 0.1, 1.0, 7.0] {
                let direct = 1.0 - law.lst(s);
                assert!(close(law.lst_complement(s), direct, 1e-12), "{law:?} s={s}");
            }
        }
    }

    #[test]
    fn beta_examples() {
        let e = InterarrivalDist::exponential(25.0).unwrap();
        let b = e.beta_seq(2.0, 3).unwrap();
        assert_eq!(b[0], 1.0);
        assert!(close(b[2], 0.0128, 1e-15));
        assert!(close(b[3], 6.0 * (2.0f64 / 25.0).powi(3), 1e-15));

        let m = 100.0f64;
        let z = InterarrivalDist::two_point(m.sqrt(), 1.0 / m, 1.0 / m).unwrap();
        let phi = 0.99 * (-0.01f64).exp() + 0.01 * (-10f64).exp();
        let b = z.beta_seq(1.0, 1).unwrap();
        assert!(close(b[1], (1.0 - phi) / phi, 1e-13));
    }

    #[test]
    fn log_beta_survives_many_servers() {
        let e = InterarrivalDist::exponential(1.0).unwrap();
        let lb = e.log_beta_seq(1.0, 400).unwrap();
        let ln_fact: f64 = (1..=400).map(|j| (j as f64).ln()).sum();
        assert!(close(lb[400], ln_fact, 1e-9));
        assert!(e.beta_seq(1.0, 400).unwrap()[400].is_infinite());
    }

    #[test]
    fn departure_examples() {
        let d = InterarrivalDist::deterministic(1.0 / 2f64.ln()).unwrap();
        let dm = DepartureMatrix::build(&d, 1.0, 2, QUAD_TOL).unwrap();
        assert!(close(dm.alpha(2, 1), 0.5, 1e-15));
        let e = InterarrivalDist::exponential(25.0).unwrap();
        let dm = DepartureMatrix::build(&e, 2.0, 3, QUAD_TOL).unwrap();
        assert!(close(dm.alpha(1, 1), 2.0 / 27.0, 1e-15));
        assert_eq!(dm.alpha(0, 0), 1.0);
    }

    // Integrates the thinning formula against the exponential density; the
    // closed-form race product must agree.
    #[test]
    fn exponential_closed_form_matches_quadrature() {
        let (lambda, mu, k) = (3.0, 1.3, 5);
        let dm = DepartureMatrix::build(&InterarrivalDist::exponential(lambda).unwrap(), mu, k, QUAD_TOL).unwrap();
        for i in 0..=k {
            let f = |x: f64| {
                let q = 1.0 - (-mu * x).exp();
                let c = numeric::ln_binomial::<f64>(k, i).exp();
                lambda * (-lambda * x).exp() * c * q.powi(i as i32) * (-((k - i) as f64) * mu * x).exp()
            };
            let (v, _) = numeric::integrate(f, 0.0, 40.0, 1e-13, 4000).unwrap();
            assert!(close(dm.alpha(k, i), v, 1e-11), "i={i}");
        }
    }

    #[test]
    fn uniform_quadrature_matches_monte_carlo_free_check() {
        // Uniform on [0, w] with k = 1: alpha_{1,1} = 1 - (1 - e^{-mu w}) / (mu w).
        let (w, mu) = (0.4, 2.0);
        let d = InterarrivalDist::uniform_interval(0.0, w).unwrap();
        let dm = DepartureMatrix::build(&d, mu, 1, 1e-12).unwrap();
        let x = mu * w;
        assert!(close(dm.alpha(1, 1), 1.0 - (1.0 - (-x).exp()) / x, 1e-11));
        assert!(close(dm.alpha(1, 1), d.lst_complement(mu), 1e-11));
    }

    #[test]
    fn family_helpers_hit_target_rate() {
        for &lam in &[2.0, 10.0, 1e3, 1e5] {
            let z = InterarrivalDist::heavy_gap_family(lam).unwrap();
            assert!(close(z.rate() / lam, 1.0, 1e-9), "lam={lam}");
            let i = InterarrivalDist::unit_gap_family(lam).unwrap();
            assert!(close(i.rate() / lam, 1.0, 1e-12));
        }
        assert!(InterarrivalDist::unit_gap_family(0.5).is_err());
    }

    #[test]
    fn samples_have_the_right_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for law in all_laws(4.0) {
            let n = 200_000;
            let mean = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!(close(mean, 0.25, 0.005), "{law:?}: {mean}");
        }
    }

    #[test]
    fn serde_forms() {
        let u: InterarrivalDist = serde_json::from_str(r#"{"kind":"uniform","rate":25.0}"#).unwrap();
        assert_eq!(u, InterarrivalDist::uniform_interval(0.0, 0.08).unwrap());
        let t: InterarrivalDist = serde_json::from_str(r#"{"kind":"two_point","x1":1.0,"p1":0.5,"x2":0.0}"#).unwrap();
        assert!(close(t.rate(), 2.0, 1e-15));
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(serde_json::from_str::<InterarrivalDist>(&s).unwrap(), u);
        assert!(serde_json::from_str::<InterarrivalDist>(r#"{"kind":"uniform","rate":1.0,"hi":2.0}"#).is_err());
        assert!(serde_json::from_str::<InterarrivalDist>(r#"{"kind":"deterministic","rate":0.0}"#).is_err());
    }

    fn laws() -> impl Strategy<Value = InterarrivalDist> {
        prop_oneof![
            (0.1f64..50.0).prop_map(|r| InterarrivalDist::exponential(r).unwrap()),
            (0.1f64..50.0).prop_map(|r| InterarrivalDist::deterministic(r).unwrap()),
            (0.1f64..50.0).prop_map(|r| InterarrivalDist::uniform_with_rate(r).unwrap()),
            (0.0f64..2.0, 0.01f64..2.0).prop_map(|(lo, w)| InterarrivalDist::uniform_interval(lo, lo + w).unwrap()),
            (0.0f64..3.0, 0.0f64..1.0, 0.01f64..3.0)
                .prop_map(|(x1, p1, x2)| InterarrivalDist::two_point(x1, p1, x2).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn departure_matrix_identities(d in laws(), mu in 0.1f64..5.0, k in 1usize..7) {
            let dm = DepartureMatrix::build(&d, mu, k, QUAD_TOL).unwrap();
            for row in 0..=k {
                let s: f64 = dm.row(row).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9, "row {} sums to {}", row, s);
            }
            for i in 1..=k {
                prop_assert!((dm.a(i, i - 1) + dm.alpha(i, 0) - 1.0).abs() <= 1e-9);
                if i < k {
                    for j in 0..i {
                        prop_assert!(dm.a(i + 1, j) <= dm.a(i, j) + 1e-12);
                    }
                }
            }
            for i in 0..k {
                let upper: f64 = (0..=i).map(|j| dm.a(i + 1, j)).sum();
                let lower: f64 = (0..i).map(|j| dm.a(i, j)).sum();
                prop_assert!((upper - lower - dm.alpha(1, 1)).abs() <= 1e-9);
            }
        }

        #[test]
        fn lst_is_bounded_and_monotone(d in laws(), s1 in 0.0f64..20.0, s2 in 0.0f64..20.0) {
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let (p_lo, p_hi) = (d.lst(lo), d.lst(hi));
            prop_assert!(p_lo >= p_hi - 1e-15);
            for (s, p) in [(lo, p_lo), (hi, p_hi)] {
                prop_assert!(p <= 1.0 && p > 0.0);
                prop_assert!((-s / d.rate()).exp() <= p * (1.0 + 1e-12));
            }
        }
    }
}
