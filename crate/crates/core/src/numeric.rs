//! Scalar numerical kernels shared by the solvers.
//!
//! Everything here is generic over [`num_traits::Float`] so the kernels can be
//! exercised in `f32` as well as `f64`; the pricing modules instantiate them at
//! `f64`.

use num_traits::Float;

use crate::error::{Error, Result};

#[inline]
fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("constant representable in target float type")
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(argmax, max)`. The function is assumed unimodal on the bracket;
/// callers locate the bracket with a coarse grid first. Iteration stops when
/// the bracket is narrower than `tol * (1 + |x|)`.
pub fn golden_section_max<T, F>(f: F, a: T, b: T, tol: T) -> (T, T)
where
    T: Float,
    F: Fn(T) -> T,
{
    let inv_phi: T = c(0.618_033_988_749_894_8);
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if hi - lo <= tol * (T::one() + x1.abs()) {
            break;
        }
        // `>=` keeps the left point on ties so the search drifts towards the
        // smallest maximizer.
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Grid scan followed by golden-section refinement around the best grid cell.
///
/// `grid` must be sorted. Returns the better of the refined point and the best
/// grid point; on ties the smaller abscissa wins.
pub fn grid_then_golden_max<T, F>(f: F, grid: &[T], tol: T) -> (T, T)
where
    T: Float,
    F: Fn(T) -> T,
{
    assert!(!grid.is_empty(), "grid must not be empty");
    let mut best_i = 0;
    let mut best_f = f(grid[0]);
    for (i, &x) in grid.iter().enumerate().skip(1) {
        let fx = f(x);
        if fx > best_f {
            best_i = i;
            best_f = fx;
        }
    }
    if grid.len() == 1 {
        return (grid[0], best_f);
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (x, fx) = golden_section_max(&f, lo, hi, tol);
    if fx > best_f || (fx == best_f && x < grid[best_i]) {
        (x, fx)
    } else {
        (grid[best_i], best_f)
    }
}

/// Bisection for a root of `f` on `[a, b]`, where `f(a)` and `f(b)` have
/// opposite signs (or one of them is zero). Stops once the bracket is narrower
/// than `tol`.
pub fn bisect<T, F>(f: F, a: T, b: T, tol: T, max_iter: usize) -> Option<T>
where
    T: Float,
    F: Fn(T) -> T,
{
    let (mut lo, mut hi) = (a, b);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(lo);
    }
    if f_hi == T::zero() {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let two: T = c(2.0);
    for _ in 0..max_iter {
        let mid = (lo + hi) / two;
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / two)
}

/// `ln(sum_i exp(x_i))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Float>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

/// `ln C(n, k)` by direct summation; exact enough for the server counts in
/// play (a few hundred at most).
pub fn ln_binomial<T: Float>(n: usize, k: usize) -> T {
    if k > n {
        return T::neg_infinity();
    }
    let k = k.min(n - k);
    (1..=k).fold(T::zero(), |acc, j| {
        let num = T::from(n - k + j).unwrap();
        let den = T::from(j).unwrap();
        acc + (num / den).ln()
    })
}

/// Binomial probability mass `C(n, k) q^k (1-q)^(n-k)` given `ln q` and
/// `ln(1-q)`, evaluated in log space.
pub fn binomial_pmf_ln<T: Float>(n: usize, k: usize, ln_q: T, ln_1mq: T) -> T {
    if k > n {
        return T::zero();
    }
    let kk = T::from(k).unwrap();
    let rest = T::from(n - k).unwrap();
    let mut log = ln_binomial::<T>(n, k);
    if k > 0 {
        log = log + kk * ln_q;
    }
    if n > k {
        log = log + rest * ln_1mq;
    }
    log.exp()
}

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T, F>(f: &F, a: T, b: T) -> (T, T)
where
    T: Float,
    F: Fn(T) -> T,
{
    let two: T = c(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let f_center = f(center);
    let mut kronrod = f_center * c(WGK[7]);
    let mut gauss = f_center * c(WG[3]);
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * c(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * c(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (G7/K15) quadrature of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol`, or fails after `max_intervals` pieces.
/// Returns `(integral, error_estimate)`.
pub fn integrate<T, F>(f: F, a: T, b: T, abs_tol: T, max_intervals: usize) -> Result<(T, T)>
where
    T: Float,
    F: Fn(T) -> T,
{
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let two: T = c(2.0);
    loop {
        let (total, err) = pieces
            .iter()
            .fold((T::zero(), T::zero()), |(s, r), p| (s + p.2, r + p.3));
        if err <= abs_tol {
            return Ok((total, err));
        }
        if pieces.len() >= max_intervals {
            return Err(Error::QuadratureFailure {
                error: err.to_f64().unwrap_or(f64::NAN),
                tolerance: abs_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = (lo + hi) / two;
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}
