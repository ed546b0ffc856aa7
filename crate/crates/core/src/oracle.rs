//! Test-only high-precision oracles, independent of the production code
//! paths they validate. The Legendre-Fourier integrals that define the
//! truncation bound cancel almost completely for large indices, so the
//! reference quadrature runs in double-double arithmetic throughout.

use crate::dd::Dd;
use crate::polybasis::{gauss_rule_dd, legendre_all_dd};

/// Reference values of `int_0^1 P_s(c) cos(x c) dc` and the sine analogue
/// for `s = 0..=s_max`, by `k`-point Gauss quadrature in dd arithmetic.
pub fn legendre_fourier_integrals(s_max: usize, x: f64, k: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_rule_dd(k).expect("oracle rule");
    let mut acc_c = vec![Dd::ZERO; s_max + 1];
    let mut acc_s = vec![Dd::ZERO; s_max + 1];
    let xd = Dd::from(x);
    for (node, weight) in nodes.iter().zip(&weights) {
        let p = legendre_all_dd(s_max + 1, *node);
        let (cv, sv) = (xd * *node).cos_sin();
        let wc = *weight * cv;
        let ws = *weight * sv;
        for s in 0..=s_max {
            acc_c[s] = acc_c[s] + p[s] * wc;
            acc_s[s] = acc_s[s] + p[s] * ws;
        }
    }
    acc_c
        .into_iter()
        .zip(acc_s)
        .map(|(c, s)| (c.to_f64(), s.to_f64()))
        .collect()
}
