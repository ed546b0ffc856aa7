//! Orthonormal shifted Legendre polynomials on [0, 1], their running
//! integrals, and Gauss-Legendre quadrature rules of arbitrary order.
//!
//! The basis is normalized so that the polynomials are orthonormal in
//! L^2[0,1]; the factor sqrt(2j+1) relative to the classical shifted
//! Legendre family is baked in, and every downstream coefficient matrix
//! assumes it.

use crate::error::{OscilError, Result};

/// Gauss-Legendre rule on (0, 1): `k` nodes, positive weights summing to 1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub k: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Approximate the integral of `f` over [0, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w * f(c))
            .sum()
    }
}

/// Band coefficients of the integration recurrence: `xi(0) = 1/2`,
/// `xi(i) = 1 / (2 sqrt(4 i^2 - 1))` for `i >= 1`.
pub fn xi(i: usize) -> f64 {
    if i == 0 {
        0.5
    } else {
        let i = i as f64;
        1.0 / (2.0 * (4.0 * i * i - 1.0).sqrt())
    }
}

/// Values `[P_0(c), ..., P_{s-1}(c)]` of the orthonormal shifted Legendre
/// basis, by the stable three-term recurrence.
pub fn legendre_all(s: usize, c: f64) -> Vec<f64> {
    assert!(s >= 1, "legendre_all needs s >= 1");
    let mut out = vec![0.0; s];
    out[0] = 1.0;
    if s == 1 {
        return out;
    }
    let t = 2.0 * c - 1.0;
    out[1] = 3.0f64.sqrt() * t;
    for j in 1..(s - 1) {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 3.0).sqrt() / (jf + 1.0))
            * ((2.0 * jf + 1.0).sqrt() * t * out[j] - jf / (2.0 * jf - 1.0).sqrt() * out[j - 1]);
    }
    out
}

/// Running integrals `[int_0^c P_0, ..., int_0^c P_{s-1}]`.
///
/// Uses the band recurrence linking the integral of `P_j` to `P_{j-1}` and
/// `P_{j+1}` with the `xi` coefficients; `int_0^c P_0 = xi(1) P_1(c) + xi(0)`.
pub fn legendre_int_all(s: usize, c: f64) -> Vec<f64> {
    assert!(s >= 1, "legendre_int_all needs s >= 1");
    let p = legendre_all(s + 1, c);
    let mut out = vec![0.0; s];
    out[0] = xi(1) * p[1] + xi(0) * p[0];
    for j in 1..s {
        out[j] = xi(j + 1) * p[j + 1] - xi(j) * p[j - 1];
    }
    out
}

const GAUSS_MAX_K: usize = 512;
const NEWTON_MAX_ITERS: usize = 100;

/// Classical Legendre value and derivative at `x` in [-1, 1].
fn legendre_value_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule with `k` nodes on (0, 1).
///
/// Nodes are Newton-refined roots of the degree-`k` Legendre polynomial,
/// started from Chebyshev guesses; weights come from the derivative formula.
/// The computed half is mirrored so the rule is symmetric about 1/2 exactly.
pub fn gauss_rule(k: usize) -> Result<QuadratureRule> {
    assert!(k >= 1 && k <= GAUSS_MAX_K, "gauss_rule needs 1 <= k <= {GAUSS_MAX_K}");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let half = k / 2;
    for i in 0..half {
        // root in (0, 1) of the [-1,1] polynomial, descending from the largest
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre_value_derivative(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(OscilError::NoConvergence {
                context: format!("Newton iteration for Gauss node {i} of rule k={k}"),
                iterations: NEWTON_MAX_ITERS,
            });
        }
        // polish to the fixed point of the Newton map
        for _ in 0..2 {
            let (p, dp) = legendre_value_derivative(k, x);
            x -= p / dp;
        }
        let (_, dp) = legendre_value_derivative(k, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // shift to [0,1]; mirror for exact symmetry
        nodes[k - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        weights[k - 1 - i] = 0.5 * w;
    }
    if k % 2 == 1 {
        let mid = k / 2;
        nodes[mid] = 0.5;
        let (_, dp) = legendre_value_derivative(k, 0.0);
        weights[mid] = 1.0 / (dp * dp);
    }
    Ok(QuadratureRule { k, nodes, weights })
}


// ---------------------------------------------------------------------------
// Double-double construction path
// ---------------------------------------------------------------------------
//
// The coefficient matrices steer an iteration whose fixed points conserve the
// Hamiltonian to round-off; coefficients rounded to plain doubles perturb the
// quadrature rule enough to leak about one ulp of energy per step. The
// builders below evaluate nodes, weights and basis values in double-double.

use crate::dd::Dd;

/// Classical Legendre value and derivative at `x` in [-1, 1], dd arithmetic.
pub(crate) fn legendre_value_derivative_dd(k: usize, x: Dd) -> (Dd, Dd) {
    let mut p0 = Dd::ONE;
    let mut p1 = x;
    if k == 0 {
        return (Dd::ONE, Dd::ZERO);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = (Dd::from(2.0 * jf - 1.0) * x * p1 - Dd::from(jf - 1.0) * p0) / Dd::from(jf);
        p0 = p1;
        p1 = p2;
    }
    let dp = Dd::from(k as f64) * (x * p1 - p0) / (x * x - Dd::ONE);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on (0, 1) at double-double accuracy,
/// refined from the double rule by dd Newton steps.
pub fn gauss_rule_dd(k: usize) -> Result<(Vec<Dd>, Vec<Dd>)> {
    let seed = gauss_rule(k)?;
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = Dd::from(2.0 * seed.nodes[i] - 1.0);
        for _ in 0..3 {
            let (p, dp) = legendre_value_derivative_dd(k, x);
            x = x - p / dp;
        }
        let (_, dp) = legendre_value_derivative_dd(k, x);
        let w = Dd::from(2.0) / ((Dd::ONE - x * x) * dp * dp);
        nodes.push(Dd::from(0.5) * (Dd::ONE + x));
        weights.push(Dd::from(0.5) * w);
    }
    Ok((nodes, weights))
}

/// Orthonormal shifted Legendre values `[P_0(c), ..., P_{s-1}(c)]` in dd.
pub fn legendre_all_dd(s: usize, c: Dd) -> Vec<Dd> {
    assert!(s >= 1);
    let mut out = vec![Dd::ZERO; s];
    out[0] = Dd::ONE;
    if s == 1 {
        return out;
    }
    let t = Dd::from(2.0) * c - Dd::ONE;
    out[1] = Dd::from(3.0).sqrt() * t;
    for j in 1..(s - 1) {
        let jf = j as f64;
        let lead = Dd::from(2.0 * jf + 3.0).sqrt() / Dd::from(jf + 1.0);
        let mid = Dd::from(2.0 * jf + 1.0).sqrt() * t * out[j];
        let tail = Dd::from(jf) / Dd::from(2.0 * jf - 1.0).sqrt() * out[j - 1];
        out[j + 1] = lead * (mid - tail);
    }
    out
}

fn xi_dd(i: usize) -> Dd {
    if i == 0 {
        Dd::from(0.5)
    } else {
        let i = i as f64;
        Dd::ONE / (Dd::from(2.0) * Dd::from(4.0 * i * i - 1.0).sqrt())
    }
}

/// Running integrals of the orthonormal basis in dd.
pub fn legendre_int_all_dd(s: usize, c: Dd) -> Vec<Dd> {
    assert!(s >= 1);
    let p = legendre_all_dd(s + 1, c);
    let mut out = vec![Dd::ZERO; s];
    out[0] = xi_dd(1) * p[1] + xi_dd(0) * p[0];
    for j in 1..s {
        out[j] = xi_dd(j + 1) * p[j + 1] - xi_dd(j) * p[j - 1];
    }
    out
}
