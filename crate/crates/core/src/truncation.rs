//! Round-off-level truncation criteria for the spectral method: the Bessel
//! bound `g(s, omega*h)` on the Legendre-Fourier coefficients of sines and
//! cosines, and the index-selection functions built on it.

use crate::error::{OscilError, Result};

/// Unit roundoff of IEEE double precision, the default `u` of the criteria.
pub const DEFAULT_EPSILON: f64 = f64::EPSILON / 2.0;

/// Highest index the criterion scan will visit before signalling overflow.
pub const SCAN_CAP: usize = 1024;

/// Truncation indices selected for one `(omega*h, nu)` configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    /// Truncation index of the linear-part expansion.
    pub s0: usize,
    /// Truncation index for the full problem.
    pub s: usize,
    /// Quadrature stage count.
    pub k: usize,
    pub omega_h: f64,
    pub nu: f64,
    /// Machine epsilon the selection used.
    pub u: f64,
}

impl SpectralParams {
    /// Fixed tableau of the s-stage Gauss collocation method (`k = s0 = s`).
    pub fn gauss(s: usize) -> Self {
        SpectralParams { s0: s, s, k: s, omega_h: 0.0, nu: 1.0, u: DEFAULT_EPSILON }
    }

    /// Fixed `(k, s)` tableau with the warm start running at `s0 = s`.
    pub fn hbvm(k: usize, s: usize) -> Self {
        SpectralParams { s0: s, s, k, omega_h: 0.0, nu: 1.0, u: DEFAULT_EPSILON }
    }
}

/// Spherical Bessel functions `[j_0(x), ..., j_smax(x)]` by Miller's downward
/// recurrence, started `ceil(max(20, x))` orders above both the target order
/// and the turning point `n ~ x`, normalized against the closed form of `j_0`
/// (or `j_1` near zeros of sin). Values that underflow 1e-308 clamp to zero.
pub fn spherical_bessel_j(s_max: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical_bessel_j needs x > 0");
    assert!(s_max <= SCAN_CAP, "spherical_bessel_j needs s_max <= {SCAN_CAP}");
    // keep at least j_0 and j_1 so either can anchor the normalization
    let keep = s_max.max(1);
    let mut buf = vec![0.0; keep + 1];
    // the downward recurrence must begin well above both the target order
    // and the turning point n ~ x, or the minimal solution is not isolated
    let start = keep.max(x.ceil() as usize) + (x.max(20.0).ceil() as usize);
    let mut above = 0.0f64; // unnormalized j_{n+1}
    let mut current = 1e-305f64; // unnormalized j_n
    for n in (0..=start).rev() {
        if n <= keep {
            buf[n] = current;
        }
        // j_{n-1} = (2n+1)/x * j_n - j_{n+1}
        let below = (2.0 * n as f64 + 1.0) / x * current - above;
        above = current;
        current = below;
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            for v in buf.iter_mut().skip(n.min(keep)) {
                *v *= 1e-250;
            }
        }
    }
    let scale = if x.sin().abs() >= 0.1 {
        (x.sin() / x) / buf[0]
    } else {
        // sin(x) near zero makes j_0 an ill-conditioned anchor
        (x.sin() / (x * x) - x.cos() / x) / buf[1]
    };
    buf.truncate(s_max + 1);
    for v in buf.iter_mut() {
        *v *= scale;
        if v.abs() < 1e-308 {
            *v = 0.0;
        }
    }
    buf
}

/// Bound `g(s, x) = sqrt(2s+1) |j_s(x/2)|` on the Legendre-Fourier
/// coefficients of cos(x c) and sin(x c) on [0, 1].
pub fn g_bound(s: usize, x: f64) -> f64 {
    assert!(x > 0.0, "g_bound needs x > 0");
    let j = spherical_bessel_j(s, 0.5 * x);
    ((2 * s + 1) as f64).sqrt() * j[s].abs()
}

/// All bounds `[g(0,x), ..., g(s_max,x)]` from one Bessel evaluation.
pub fn g_bound_all(s_max: usize, x: f64) -> Vec<f64> {
    let j = spherical_bessel_j(s_max, 0.5 * x);
    j.iter()
        .enumerate()
        .map(|(s, &v)| ((2 * s + 1) as f64).sqrt() * v.abs())
        .collect()
}

/// Smallest index `s0 >= 1` with `g(s0, x) < u * max_{j < s0} g(j, x)`.
pub fn phi_u(x: f64, u: f64) -> Result<usize> {
    assert!(x > 0.0, "phi_u needs x > 0");
    assert!(u > 0.0 && u < 1.0, "phi_u needs 0 < u < 1");
    let g = g_bound_all(SCAN_CAP, x);
    let mut running_max = g[0];
    for s0 in 1..=SCAN_CAP {
        if g[s0] < u * running_max {
            return Ok(s0);
        }
        running_max = running_max.max(g[s0]);
    }
    Err(OscilError::TruncationOverflow { x, cap: SCAN_CAP })
}

/// Select `(s0, s, k)` for a step of size `h` on a problem with frequency
/// `omega` and ansatz degree `nu`: `s0 = phi_u(omega h)`, `s = phi_u(nu
/// omega h)`, `k = max(s + 2, 20)`.
pub fn select_params(omega: f64, h: f64, nu: f64, u: f64) -> Result<SpectralParams> {
    assert!(omega > 0.0 && h > 0.0 && nu >= 1.0, "select_params needs positive arguments");
    let omega_h = omega * h;
    let s0 = phi_u(omega_h, u)?;
    let s = phi_u(nu * omega_h, u)?;
    let k = (s + 2).max(20);
    Ok(SpectralParams { s0, s, k, omega_h, nu, u })
}
