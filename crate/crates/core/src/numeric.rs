//! Small shared numerical helpers: composite quadrature and least squares.

use crate::Scalar;

/// Composite Simpson rule on a uniform grid. An odd number of intervals is
/// closed with a trapezoid on the last one.
pub(crate) fn simpson_uniform<T: Scalar>(values: &[T], dt: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let intervals = n - 1;
    let even_intervals = intervals - intervals % 2;
    let mut sum = T::zero();
    if even_intervals >= 2 {
        sum += values[0] + values[even_intervals];
        let four = T::from_f64_c(4.0);
        let two = T::from_f64_c(2.0);
        let mut i = 1;
        while i < even_intervals {
            sum += four * values[i];
            if i + 1 < even_intervals {
                sum += two * values[i + 1];
            }
            i += 2;
        }
        sum = sum * dt / T::from_f64_c(3.0);
    }
    if intervals % 2 == 1 {
        sum += (values[n - 2] + values[n - 1]) * dt / T::from_f64_c(2.0);
    }
    sum
}

/// Prefix Simpson values at every even grid index: `out[k]` integrates over
/// `[0, 2k*dt]`. Used for cutoff sweeps without re-integrating from scratch.
pub(crate) fn simpson_prefix<T: Scalar>(values: &[T], dt: T) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len() / 2 + 1);
    let mut acc = T::zero();
    out.push(acc);
    let four = T::from_f64_c(4.0);
    let third = dt / T::from_f64_c(3.0);
    let mut i = 2;
    while i < values.len() {
        acc += (values[i - 2] + four * values[i - 1] + values[i]) * third;
        out.push(acc);
        i += 2;
    }
    out
}

/// Least-squares straight line `y = a + b x`; returns `(a, b, rms_residual)`.
pub(crate) fn fit_line<T: Scalar>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let n = T::from_f64_c(xs.len() as f64);
    let sx: T = xs.iter().copied().sum();
    let sy: T = ys.iter().copied().sum();
    let sxx: T = xs.iter().map(|&x| x * x).sum();
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    let mut rss = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (a + b * x);
        rss += r * r;
    }
    (a, b, (rss / n).sqrt())
}

/// Least-squares fit of `y ~ c2 t^2 + c3 t^3`, returning `(c2, c3)`. Used for
/// the short-time behavior of quench signals, which vanish quadratically.
pub(crate) fn fit_t2_t3<T: Scalar>(ts: &[T], ys: &[T]) -> (T, T) {
    // normal equations for the two-parameter model
    let (mut s44, mut s45, mut s55, mut b4, mut b5) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&t, &y) in ts.iter().zip(ys) {
        let t2 = t * t;
        let t3 = t2 * t;
        s44 += t2 * t2;
        s45 += t2 * t3;
        s55 += t3 * t3;
        b4 += t2 * y;
        b5 += t3 * y;
    }
    let det = s44 * s55 - s45 * s45;
    if det == T::zero() {
        return (T::zero(), T::zero());
    }
    ((s55 * b4 - s45 * b5) / det, (s44 * b5 - s45 * b4) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_integrates_cubic_exactly() {
        // Simpson is exact for cubics
        let dt = 0.1;
        let values: Vec<f64> = (0..=100).map(|i| {
            let t = i as f64 * dt;
            t * t * t - 2.0 * t
        }).collect();
        let exact = 10.0f64.powi(4) / 4.0 - 10.0f64.powi(2);
        assert_abs_diff_eq!(simpson_uniform(&values, dt), exact, epsilon = 1e-9);
    }

    #[test]
    fn simpson_handles_odd_interval_count() {
        let dt = 0.01;
        let values: Vec<f64> = (0..=999).map(|i| (i as f64 * dt).sin()).collect();
        let t_end = 999.0 * dt;
        assert_abs_diff_eq!(simpson_uniform(&values, dt), 1.0 - t_end.cos(), epsilon = 1e-6);
    }

    #[test]
    fn prefix_matches_full() {
        let dt = 0.05;
        let values: Vec<f64> = (0..=200).map(|i| (i as f64 * dt).cos()).collect();
        let prefix = simpson_prefix(&values, dt);
        for (k, &p) in prefix.iter().enumerate() {
            let full = simpson_uniform(&values[..=2 * k], dt);
            assert_abs_diff_eq!(p, full, epsilon = 1e-12);
        }
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.7 * x).collect();
        let (a, b, r) = fit_line(&xs, &ys);
        assert_abs_diff_eq!(a, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -0.7, epsilon = 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn quadratic_cubic_fit() {
        let ts: Vec<f64> = (1..=5).map(|i| 0.02 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 1.5 * t * t - 4.0 * t * t * t).collect();
        let (c2, c3) = fit_t2_t3(&ts, &ys);
        assert_abs_diff_eq!(c2, 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(c3, -4.0, epsilon = 1e-7);
    }
}
