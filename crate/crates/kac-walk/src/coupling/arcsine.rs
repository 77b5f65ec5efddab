//! Maximal coupling of arcsine block-sum statistics.
//!
//! With `theta` uniform on `[0, 2*pi)`, the statistic `S = A + B cos^2(theta)`
//! has the shifted-scaled arcsine law on `(A, A+B)` with density
//!
//! ```text
//! f(x) = 1 / (pi * sqrt((x - A)(A + B - x)))
//! ```
//!
//! and CDF `F(x) = (2/pi) asin(sqrt((x - A)/B))`. Two such statistics `S`,
//! `S'` (parameters `(A, B)` and `(C, D)`) admit a coupling with
//! `P[S = S'] = integral of min(f, g)`, realized here by gamma-coupling:
//! draw `S ~ f`, accept `S' = S` with probability `min(1, g(S)/f(S))`, and on
//! rejection draw `S'` from the residual of `g` by rejection. The angles are
//! then recovered from the coupled values with shared quadrant signs, so
//! `cos(theta) cos(theta') >= 0` and `sin(theta) sin(theta') >= 0` always.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::adaptive_simpson;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Offsets and amplitudes of the two coupled block-sum statistics:
/// `S = A + B cos^2(theta)` for the first chain, `S' = C + D cos^2(theta')`
/// for the second.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArcsineParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ArcsineParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        // Sums of squared coordinates can run a hair over 1 in floating
        // point; allow the state-norm tolerance.
        let hi = 1.0 + crate::walk::NORM_TOL;
        let ok = |off: f64, amp: f64| {
            (0.0..=hi).contains(&off) && (0.0..=hi).contains(&amp) && off + amp <= hi
        };
        if !ok(a, b) || !ok(c, d) {
            return Err(Error::DegenerateArcsine { b, d });
        }
        Ok(Self { a, b, c, d })
    }
}

/// Result of one maximally coupled angle draw.
#[derive(Debug, Clone, Copy)]
pub struct CoupledAngles {
    pub theta: f64,
    pub theta_prime: f64,
    /// Whether the block statistics were drawn equal (`S = S'`).
    pub success: bool,
}

/// `(x - A)(A + B - x)`, the quantity under the square root of the density.
/// Positive exactly on the open support.
#[inline]
fn support_poly(x: f64, offset: f64, amplitude: f64) -> f64 {
    (x - offset) * (offset + amplitude - x)
}

/// Arcsine density on `(offset, offset + amplitude)`.
pub fn arcsine_pdf(x: f64, offset: f64, amplitude: f64) -> f64 {
    let h = support_poly(x, offset, amplitude);
    if h <= 0.0 {
        0.0
    } else {
        1.0 / (PI * h.sqrt())
    }
}

/// Arcsine CDF on `[offset, offset + amplitude]`, clamped outside.
pub fn arcsine_cdf(x: f64, offset: f64, amplitude: f64) -> f64 {
    let u = ((x - offset) / amplitude).clamp(0.0, 1.0);
    2.0 / PI * u.sqrt().asin()
}

/// Draws `(theta, theta')`, each marginally uniform on `[0, 2*pi)`, coupled
/// so that `P[S = S']` equals the overlap integral of the two densities and
/// the cosine and sine signs always agree.
///
/// Requires positive amplitudes; callers with a degenerate block radius must
/// not invoke this.
pub fn maximal_arcsine_coupling(
    params: &ArcsineParams,
    rng: &mut RngStream,
) -> Result<CoupledAngles> {
    let ArcsineParams { a, b, c, d } = *params;
    if b <= 0.0 || d <= 0.0 {
        return Err(Error::DegenerateArcsine { b, d });
    }

    let theta = rng.angle();
    let s = a + b * theta.cos() * theta.cos();

    // Accept S' = S with probability min(1, g(S)/f(S)); the density ratio
    // reduces to sqrt(h_f / h_g).
    let h_f = support_poly(s, a, b).max(0.0);
    let h_g = support_poly(s, c, d);
    let accept = if h_g > 0.0 {
        let ratio = (h_f / h_g).sqrt();
        rng.uniform() < ratio.min(1.0)
    } else {
        false
    };

    let (s_prime, success) = if accept {
        (s, true)
    } else {
        // Residual of g: redraw S' ~ g until a uniform mark exceeds the
        // acceptance ratio f(S')/g(S'). Terminates with probability one;
        // expected total work is O(1) because this branch is entered with
        // probability equal to the total-variation distance.
        loop {
            let psi = rng.angle();
            let cand = c + d * psi.cos() * psi.cos();
            let h_gc = support_poly(cand, c, d).max(0.0);
            let h_fc = support_poly(cand, a, b);
            let ratio = if h_fc > 0.0 { (h_gc / h_fc).sqrt().min(1.0) } else { 0.0 };
            if rng.uniform() >= ratio {
                break (cand, false);
            }
        }
    };

    // Identical laws couple by the identity map; this also keeps equal
    // chains bit-equal through merge steps.
    let theta_prime = if success && a == c && b == d {
        theta
    } else {
        let u = ((s_prime - c) / d).clamp(0.0, 1.0);
        let base = u.sqrt().acos(); // in [0, pi/2]
        from_quadrant(base, theta.cos() >= 0.0, theta.sin() >= 0.0)
    };

    Ok(CoupledAngles { theta, theta_prime, success })
}

/// Maps a first-quadrant angle to the quadrant selected by the shared sign
/// bits, preserving `cos^2`.
fn from_quadrant(base: f64, cos_nonneg: bool, sin_nonneg: bool) -> f64 {
    match (cos_nonneg, sin_nonneg) {
        (true, true) => base,
        (false, true) => PI - base,
        (false, false) => PI + base,
        (true, false) => TAU - base,
    }
}

/// Overlap integral of the two normalized arcsine densities,
/// `integral min(f, g) dx`, the exact success probability of the maximal
/// coupling.
///
/// Computed by adaptive quadrature after the substitution
/// `x = A + B sin^2(psi)`, under which `f dx = (2/pi) dpsi` exactly, so the
/// integrand `min(2/pi, g(x(psi)) * B sin(2 psi))` is bounded; the interval
/// is split where `x(psi)` crosses the other support's endpoints.
pub fn overlap_integral(params: &ArcsineParams) -> f64 {
    let ArcsineParams { a, b, c, d } = *params;
    if b <= 0.0 || d <= 0.0 {
        return 0.0;
    }
    let lo = a.max(c);
    let hi = (a + b).min(c + d);
    if lo >= hi {
        return 0.0;
    }

    let integrand = |psi: f64| {
        let x = a + b * psi.sin() * psi.sin();
        let g = arcsine_pdf(x, c, d);
        (g * b * (2.0 * psi).sin()).min(2.0 / PI)
    };

    // psi-preimages of the other support's endpoints (x(psi) is monotone).
    let to_psi = |x: f64| ((x - a) / b).clamp(0.0, 1.0).sqrt().asin();
    let mut cuts = vec![0.0, FRAC_PI_2];
    for x in [c, c + d] {
        if x > a && x < a + b {
            cuts.push(to_psi(x));
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());

    cuts.windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-11))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}
