//! Statistics helpers shared by the experiments and the test suites:
//! means with standard errors, Wilson score intervals, Kolmogorov-Smirnov
//! distances, an angular-histogram total-variation estimator, a generic
//! adaptive Simpson integrator, and the exact closed-form reference
//! quantities the experiments print next to their Monte Carlo estimates.

/// Two-sided 99% normal quantile, used for all reported intervals.
pub const Z_99: f64 = 2.575829303548901;

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sample Kolmogorov-Smirnov distance `sup_x |F_hat(x) - F(x)|`.
///
/// Sorts a copy of the samples; `cdf` is the reference distribution.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-comparable sample (NaN?)"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (k, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let lo = k as f64 / n;
        let hi = (k + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic critical value for the one-sample KS distance at level `alpha`:
/// `sqrt(-ln(alpha/2)/2) / sqrt(n)`. Accurate for `n >= ~1e3` and small
/// `alpha` (first term of the Kolmogorov series; at `alpha = 1e-3` the exact
/// constant is 1.9494746035, matching to ten digits).
pub fn ks_critical(alpha: f64, n_samples: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n_samples as f64).sqrt()
}

/// Histogram total-variation distance between angle samples and the uniform
/// law on `[0, 2*pi)`, using `bins` equal bins. The estimator lower-bounds
/// the true TV distance.
pub fn angular_tv_vs_uniform(angles: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0u64; bins];
    let scale = bins as f64 / std::f64::consts::TAU;
    for &a in angles {
        let mut b = (a * scale) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let n = angles.len() as f64;
    let uniform = 1.0 / bins as f64;
    0.5 * counts.iter().map(|&c| (c as f64 / n - uniform).abs()).sum::<f64>()
}

/// Monte Carlo noise floor for [`angular_tv_vs_uniform`]: an exactly-uniform
/// sampler stays below `sqrt(bins / (2 * replicas))` (mean plus fluctuation).
pub fn angular_tv_noise_floor(bins: usize, replicas: u64) -> f64 {
    (bins as f64 / (2.0 * replicas as f64)).sqrt()
}

/// Exact probability that some coordinate of `{1..n}` is untouched after `t`
/// uniform pair draws, by inclusion-exclusion over coordinate subsets:
/// `sum_k (-1)^{k+1} C(n,k) (C(n-k,2)/C(n,2))^t`.
pub fn untouched_probability_exact(n: usize, t: u64) -> f64 {
    let pairs_total = binomial(n, 2);
    let mut total = 0.0;
    let mut sign = 1.0;
    for k in 1..=n {
        let avoiding = if n - k >= 2 { binomial(n - k, 2) } else { 0.0 };
        let term = binomial(n, k) * (avoiding / pairs_total).powf(t as f64);
        total += sign * term;
        sign = -sign;
        if term == 0.0 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for step in 0..k {
        acc = acc * (n - step) as f64 / (step + 1) as f64;
    }
    acc
}

/// Exact one-step contraction factor of the proportional coupling for the
/// squared-coordinate discrepancy: `1 - 1/(2n) - 3/(2n(n-1))`.
pub fn exact_contraction_factor(n: usize) -> f64 {
    let nf = n as f64;
    1.0 - 1.0 / (2.0 * nf) - 3.0 / (2.0 * nf * (nf - 1.0))
}

/// Upper bound `2 (1 - 1/(2n))^t` on the expected squared-coordinate
/// discrepancy after `t` proportionally coupled steps.
pub fn contraction_bound(n: usize, t: u64) -> f64 {
    2.0 * (1.0 - 1.0 / (2.0 * n as f64)).powf(t as f64)
}

/// Coupon-collector tail bound `n e^{-t/n}` on the probability that some
/// coordinate is still untouched after `t` steps.
pub fn coupon_bound(n: usize, t: u64) -> f64 {
    n as f64 * (-(t as f64) / n as f64).exp()
}

/// Lower bound `1 - 2 n^{-eps}` on the probability that `m` uniform edges
/// connect `n` vertices, valid for `m > (1/2 + 2 eps) n ln n` and large `n`.
pub fn connectivity_lower_bound(n: usize, eps: f64) -> f64 {
    1.0 - 2.0 * (n as f64).powf(-eps)
}

/// Upper bound `2 n^{-c+1}` on the probability that a fixed squared
/// coordinate of a Haar point falls below `n^{-3c}`.
pub fn small_coordinate_bound(n: usize, c: f64) -> f64 {
    2.0 * (n as f64).powf(1.0 - c)
}

/// CDF of `Beta(1/2, (n-1)/2)`, the stationary law of a squared coordinate.
pub fn squared_coordinate_cdf(n: usize, x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    let beta = statrs::distribution::Beta::new(0.5, (n as f64 - 1.0) / 2.0)
        .expect("valid Beta parameters");
    beta.cdf(x.clamp(0.0, 1.0))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance
/// `tol`. The integrand must be finite on the interval.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Median of a sample (mean of middle two for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-comparable value"));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_point_estimate() {
        let (lo, hi) = wilson_interval(50, 100, Z_99);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(lo > 0.35 && hi < 0.65);
        let (lo, hi) = wilson_interval(0, 100, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.1);
    }

    #[test]
    fn ks_distance_point_mass_vs_uniform() {
        let samples = vec![1.0; 100];
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 1.0).abs() < 1e-2, "point mass at the top: D ~ 1, got {d}");
    }

    #[test]
    fn ks_critical_matches_kolmogorov_constant() {
        // Exact K with P[K > x] = 1e-3 is 1.9494746035.
        let k = ks_critical(1e-3, 1) * 1.0;
        assert!((k - 1.9494746035).abs() < 1e-6);
    }

    #[test]
    fn untouched_probability_frozen_values() {
        // Independently computed by exact inclusion-exclusion (30-digit
        // arithmetic): n=10,t=10 -> 0.73759948475; n=10,t=50 ->
        // 1.42722528034e-4; n=50,t=79 -> 0.887186121539.
        assert!((untouched_probability_exact(10, 10) - 0.73759948475).abs() < 1e-10);
        assert!((untouched_probability_exact(10, 50) - 1.42722528034e-4).abs() < 1e-13);
        assert!((untouched_probability_exact(50, 79) - 0.887186121539).abs() < 1e-9);
        assert_eq!(untouched_probability_exact(2, 1), 0.0);
    }

    #[test]
    fn contraction_factors_exact() {
        assert!((exact_contraction_factor(3) - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(exact_contraction_factor(4), 0.75);
        assert!((exact_contraction_factor(10) - (1.0 - 0.05 - 3.0 / 180.0)).abs() < 1e-15);
    }

    #[test]
    fn coupon_bound_value() {
        assert!((coupon_bound(10, 50) - 10.0 * (-5.0f64).exp()).abs() < 1e-12);
        assert!((coupon_bound(10, 50) - 0.06737946999085467).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let val = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((val - 2.0).abs() < 1e-10);
        let val = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((val - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn angular_tv_of_exact_uniform_grid_is_zero() {
        let bins = 8;
        let angles: Vec<f64> = (0..800)
            .map(|k| (k as f64 + 0.5) / 800.0 * std::f64::consts::TAU)
            .collect();
        assert!(angular_tv_vs_uniform(&angles, bins) < 1e-12);
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((regression_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
