//! The spectral HBVM one-step integrator: coefficient construction, the
//! reduced discrete problem, the blended Newton-splitting iteration that
//! solves it, the linear warm start, and the step/trajectory drivers.

use crate::dd::{two_prod, two_sum, Dot2};
use crate::error::{OscilError, Result};
use crate::linalg::{
    lu_factor, max_norm, small_eigenvalue_min_modulus, DenseMatrix, LuFactorization,
};
use crate::polybasis::{
    gauss_rule_dd, legendre_all_dd, legendre_int_all, legendre_int_all_dd, xi, QuadratureRule,
};
use crate::truncation::SpectralParams;

/// First-order problem `y' = J [A y + grad_f(y)]` with `J = J2 (x) I_m`.
///
/// The state has dimension `2m`; `A` is symmetric positive definite; `omega`
/// estimates `||A||`; `nu` is the assumed local polynomial degree of the
/// nonlinearity along the solution.
pub struct HamiltonianSystem {
    half_dim: usize,
    a: DenseMatrix,
    grad_f: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    hamiltonian: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub omega: f64,
    pub nu: f64,
}

impl HamiltonianSystem {
    pub fn new(
        half_dim: usize,
        a: DenseMatrix,
        grad_f: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        hamiltonian: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        omega: f64,
        nu: f64,
    ) -> Result<Self> {
        let n = 2 * half_dim;
        assert_eq!(a.rows(), n, "A must be 2m x 2m");
        assert!(a.is_square());
        assert!(a.all_finite());
        let dev = a.symmetry_deviation();
        if dev > 1e-12 * a.max_abs().max(1.0) {
            return Err(OscilError::NotSymmetric { deviation: dev });
        }
        Ok(Self { half_dim, a, grad_f, hamiltonian, omega, nu })
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn grad_f(&self, y: &[f64]) -> Vec<f64> {
        (self.grad_f)(y)
    }

    pub fn hamiltonian(&self, y: &[f64]) -> f64 {
        (self.hamiltonian)(y)
    }

    /// `J v` with `J = J2 (x) I_m`: maps `(v_q, v_p)` to `(v_p, -v_q)`.
    pub fn apply_j(&self, v: &[f64]) -> Vec<f64> {
        let m = self.half_dim;
        let mut out = vec![0.0; 2 * m];
        for d in 0..m {
            out[d] = v[d + m];
            out[d + m] = -v[d];
        }
        out
    }

    /// Full vector field `J [A y + grad_f(y)]`.
    pub fn field(&self, y: &[f64]) -> Vec<f64> {
        let mut w = self.a.matvec(y);
        let g = self.grad_f(y);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi += gi;
        }
        self.apply_j(&w)
    }
}

/// Quadrature nodes/weights and the projection matrices of one `(k, s)` pair.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub s: usize,
    pub k: usize,
    pub quad: QuadratureRule,
    /// `P_{j}(c_i)`, `k x s`.
    pub ps: DenseMatrix,
    /// Running integrals of the basis at the nodes, `k x s`.
    pub is_mat: DenseMatrix,
    /// Projection weights `b_i P_j(c_i)`, `k x s`.
    pub proj: DenseMatrix,
    /// The banded coefficient matrix, `s x s`.
    pub xs: DenseMatrix,
    /// Minimum eigenvalue modulus of `xs`; the blending parameter.
    pub rho: f64,
    xs_lu: LuFactorization,
    // low-order halves of the integral and projection matrices: the residual
    // consumes the coefficients at double-double accuracy so the method's
    // energy leak stays below an ulp per step
    is_lo: DenseMatrix,
    proj_lo: DenseMatrix,
}

const LEMMA_TOL: f64 = 1e-11;

/// Assemble the matrices of the `(k, s)` tableau and cross-check the banded
/// closed form of `P^T Omega I` against its direct product.
pub fn build_coefficients(s: usize, k: usize) -> Result<CoefficientSet> {
    assert!(s >= 1 && k >= s, "build_coefficients needs k >= s >= 1");
    let (nodes_dd, weights_dd) = gauss_rule_dd(k)?;
    let quad = QuadratureRule {
        k,
        nodes: nodes_dd.iter().map(|c| c.to_f64()).collect(),
        weights: weights_dd.iter().map(|w| w.to_f64()).collect(),
    };
    let mut ps = DenseMatrix::zeros(k, s);
    let mut is_mat = DenseMatrix::zeros(k, s);
    let mut is_lo = DenseMatrix::zeros(k, s);
    let mut proj = DenseMatrix::zeros(k, s);
    let mut proj_lo = DenseMatrix::zeros(k, s);
    for i in 0..k {
        let p = legendre_all_dd(s, nodes_dd[i]);
        let integrals = legendre_int_all_dd(s, nodes_dd[i]);
        for j in 0..s {
            ps[(i, j)] = p[j].to_f64();
            is_mat[(i, j)] = integrals[j].hi;
            is_lo[(i, j)] = integrals[j].lo;
            let w = weights_dd[i] * p[j];
            proj[(i, j)] = w.hi;
            proj_lo[(i, j)] = w.lo;
        }
    }
    let mut xs = DenseMatrix::zeros(s, s);
    xs[(0, 0)] = xi(0);
    for i in 1..s {
        xs[(i, i - 1)] = xi(i);
        xs[(i - 1, i)] = -xi(i);
    }
    let deviation = lemma_deviation(&proj, &is_mat, &xs);
    if deviation > LEMMA_TOL {
        return Err(OscilError::CoefficientIdentity { deviation });
    }
    let rho = small_eigenvalue_min_modulus(&xs)?;
    let xs_lu = lu_factor(&xs)?;
    Ok(CoefficientSet { s, k, quad, ps, is_mat, proj, xs, rho, xs_lu, is_lo, proj_lo })
}

/// `max |(P^T Omega I)_{ij} - (X_s)_{ij}|`.
pub fn lemma_deviation(proj: &DenseMatrix, is_mat: &DenseMatrix, xs: &DenseMatrix) -> f64 {
    let product = proj.transpose().matmul(is_mat);
    let s = xs.rows();
    let mut dev: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            dev = dev.max((product[(i, j)] - xs[(i, j)]).abs());
        }
    }
    dev
}

/// Per-integration iteration state: the factorized matrix `Sigma^{-1} =
/// I - h rho J A` (built once per `(h, A)` pair), the stopping tolerance,
/// and the sweep cap.
pub struct BlendedWorkspace {
    sigma_lu: LuFactorization,
    pub h: f64,
    pub tol: f64,
    pub max_iter: usize,
}

pub const MAX_SWEEPS: usize = 100;

impl BlendedWorkspace {
    pub fn new(sys: &HamiltonianSystem, h: f64, rho: f64, u: f64) -> Result<Self> {
        let n = sys.dim();
        let m = sys.half_dim();
        let a = sys.a();
        // I - h rho (J A); rows of J A are rows of A shuffled by the J blocks
        let mut sigma_inv = DenseMatrix::identity(n);
        for i in 0..n {
            let src = if i < m { i + m } else { i - m };
            let sign = if i < m { 1.0 } else { -1.0 };
            for j in 0..n {
                sigma_inv[(i, j)] -= h * rho * sign * a[(src, j)];
            }
        }
        let sigma_lu = lu_factor(&sigma_inv)?;
        let tol = 10.0 * u * sys.omega.max(1.0);
        Ok(Self { sigma_lu, h, tol, max_iter: MAX_SWEEPS })
    }
}

/// Residual of the reduced discrete problem at `psi` (`s` blocks of the
/// state dimension): stage states are assembled from the running-integral
/// matrix, the field is evaluated at every node, and the result is projected
/// back onto the first `s` basis polynomials.
pub fn residual_g(
    psi: &[f64],
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
) -> Result<Vec<f64>> {
    residual_impl(psi, y0, h, sys, coeff, true)
}

/// Residual of the homogeneous linear problem (`grad_f` dropped); the warm
/// start iterates on this.
pub fn residual_g_linear(
    psi: &[f64],
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
) -> Result<Vec<f64>> {
    residual_impl(psi, y0, h, sys, coeff, false)
}

fn residual_impl(
    psi: &[f64],
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
    with_grad: bool,
) -> Result<Vec<f64>> {
    residual_core(psi, None, y0, h, sys, coeff, with_grad)
}

/// Residual with the iterate carried as an unevaluated hi/lo pair. The
/// iteration converges to round-off-level fixed points, so quantizing the
/// iterate to plain doubles between sweeps would leave it wandering in a
/// noise ball amplified by the splitting matrices.
fn residual_core(
    psi: &[f64],
    psi_lo: Option<&[f64]>,
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
    with_grad: bool,
) -> Result<Vec<f64>> {
    let s = coeff.s;
    let k = coeff.k;
    let n = sys.dim();
    let m = sys.half_dim();
    assert_eq!(psi.len(), s * n, "psi must hold s blocks of the state dimension");
    assert_eq!(y0.len(), n);
    let a = sys.a();
    // Stage field values, kept as hi/lo pairs: the projection consumes them
    // with compensated accumulation.
    let mut f_hi = vec![0.0; k * n];
    let mut f_lo = vec![0.0; k * n];
    let mut y_hi = vec![0.0; n];
    let mut y_lo = vec![0.0; n];
    for i in 0..k {
        for d in 0..n {
            let mut acc = Dot2::new();
            for j in 0..s {
                acc.add_prod(coeff.is_mat[(i, j)], psi[j * n + d]);
                acc.add(coeff.is_lo[(i, j)] * psi[j * n + d]);
                if let Some(lo) = psi_lo {
                    acc.add(coeff.is_mat[(i, j)] * lo[j * n + d]);
                }
            }
            let (sum_hi, sum_lo) = acc.pair();
            let (ph, pe) = two_prod(h, sum_hi);
            let (yh, ye) = two_sum(y0[d], ph);
            y_hi[d] = yh;
            y_lo[d] = ye + pe + h * sum_lo;
        }
        let grad = if with_grad {
            let g = sys.grad_f(&y_hi);
            if g.len() != n {
                return Err(OscilError::DimensionMismatch { expected: n, got: g.len() });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(OscilError::NonFiniteEvaluation);
            }
            Some(g)
        } else {
            None
        };
        for r in 0..n {
            let row = a.row(r);
            let mut acc = Dot2::new();
            for c in 0..n {
                acc.add_prod(row[c], y_hi[c]);
                acc.add(row[c] * y_lo[c]);
            }
            if let Some(g) = &grad {
                acc.add(g[r]);
            }
            let (wh, wl) = acc.pair();
            if !wh.is_finite() {
                return Err(OscilError::NonFiniteEvaluation);
            }
            // F = J w: component r of w lands at r+m (sign +) or r-m (sign -)
            if r < m {
                f_hi[i * n + r + m] = -wh;
                f_lo[i * n + r + m] = -wl;
            } else {
                f_hi[i * n + r - m] = wh;
                f_lo[i * n + r - m] = wl;
            }
        }
    }
    let mut out = vec![0.0; s * n];
    for j in 0..s {
        for d in 0..n {
            // accumulate psi - sum_i w_i F_i in one compensated sum: the
            // final rounding is then relative to the (small) residual, not
            // to the large projection value
            let mut acc = Dot2::new();
            acc.add(psi[j * n + d]);
            if let Some(lo) = psi_lo {
                acc.add(lo[j * n + d]);
            }
            for i in 0..k {
                let w = coeff.proj[(i, j)];
                acc.add_prod(-w, f_hi[i * n + d]);
                acc.add(-(w * f_lo[i * n + d] + coeff.proj_lo[(i, j)] * f_hi[i * n + d]));
            }
            out[j * n + d] = acc.value();
        }
    }
    Ok(out)
}

/// One blended sweep: with `eta = -G`, set `eta1 = (rho X^{-1} (x) I) eta`,
/// `u = (I (x) Sigma)(eta - eta1)`, `delta = (I (x) Sigma)(eta1 + u)`, add
/// `delta` to `psi`, and return its max norm.
pub fn blended_sweep(
    psi: &mut [f64],
    g_val: &[f64],
    ws: &BlendedWorkspace,
    coeff: &CoefficientSet,
) -> Result<f64> {
    sweep_core(psi, None, g_val, ws, coeff)
}

fn sweep_core(
    psi: &mut [f64],
    mut psi_lo: Option<&mut [f64]>,
    g_val: &[f64],
    ws: &BlendedWorkspace,
    coeff: &CoefficientSet,
) -> Result<f64> {
    let s = coeff.s;
    assert_eq!(psi.len(), g_val.len());
    assert_eq!(psi.len() % s, 0);
    let n = psi.len() / s;
    let mut eta1 = vec![0.0; s * n];
    let mut col = vec![0.0; s];
    for d in 0..n {
        for j in 0..s {
            col[j] = -g_val[j * n + d];
        }
        coeff.xs_lu.solve_in_place(&mut col)?;
        for j in 0..s {
            eta1[j * n + d] = coeff.rho * col[j];
        }
    }
    let mut delta_norm = 0.0f64;
    let mut block = vec![0.0; n];
    for j in 0..s {
        for d in 0..n {
            block[d] = -g_val[j * n + d] - eta1[j * n + d];
        }
        ws.sigma_lu.solve_in_place(&mut block)?;
        for d in 0..n {
            block[d] += eta1[j * n + d];
        }
        ws.sigma_lu.solve_in_place(&mut block)?;
        for d in 0..n {
            let idx = j * n + d;
            match psi_lo.as_deref_mut() {
                Some(lo) => {
                    let (sum, err) = crate::dd::two_sum(psi[idx], block[d]);
                    let (hi, new_lo) = crate::dd::two_sum(sum, lo[idx] + err);
                    psi[idx] = hi;
                    lo[idx] = new_lo;
                }
                None => psi[idx] += block[d],
            }
            delta_norm = delta_norm.max(block[d].abs());
        }
    }
    Ok(delta_norm)
}

struct IterationOutcome {
    iters: usize,
    final_update_norm: f64,
    residual_norm: f64,
}

/// Sweep until the update satisfies `|delta| <= tol * max(1, |psi|)` and has
/// stopped shrinking. The iteration targets round-off-level solutions, so
/// after the tolerance is met it keeps sweeping while each update still
/// reduces the previous best by 30% or more.
fn iterate_blended(
    psi: &mut [f64],
    psi_lo: &mut [f64],
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
    ws: &BlendedWorkspace,
    linear: bool,
    polish: bool,
    context: &str,
) -> Result<IterationOutcome> {
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut met = false;
    let mut last_dn = f64::INFINITY;
    let mut last_res = f64::INFINITY;
    for it in 1..=ws.max_iter {
        let g = residual_core(psi, Some(psi_lo), y0, h, sys, coeff, !linear)?;
        last_res = max_norm(&g);
        last_dn = sweep_core(psi, Some(psi_lo), &g, ws, coeff)?;
        if !last_dn.is_finite() {
            return Err(OscilError::NoConvergence { context: context.into(), iterations: it });
        }
        let scale = max_norm(psi).max(1.0);
        if last_dn <= ws.tol * scale {
            met = true;
        }
        if met && !polish {
            return Ok(IterationOutcome {
                iters: it,
                final_update_norm: last_dn,
                residual_norm: last_res,
            });
        }
        if met {
            // polish while the updates still shrink; far below the tolerance
            // further sweeps cannot move the double-rounded step output
            let floor = 1e-4 * ws.tol * scale;
            if last_dn <= floor || last_dn >= 0.7 * best {
                stall += 1;
                if last_dn <= floor || stall >= 2 {
                    return Ok(IterationOutcome {
                        iters: it,
                        final_update_norm: last_dn,
                        residual_norm: last_res,
                    });
                }
            } else {
                stall = 0;
            }
            best = best.min(last_dn);
        }
    }
    if met {
        Ok(IterationOutcome {
            iters: ws.max_iter,
            final_update_norm: last_dn,
            residual_norm: last_res,
        })
    } else {
        Err(OscilError::NoConvergence { context: context.into(), iterations: ws.max_iter })
    }
}

/// Solve the homogeneous linear problem with `s0` blocks on the `(s0, s0)`
/// tableau, then zero-pad to `s` blocks as the starting value of the main
/// iteration. `Sigma` from the workspace (built with `rho_s`) is reused.
pub fn warm_start(
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    warm_coeff: &CoefficientSet,
    s: usize,
    ws: &BlendedWorkspace,
) -> Result<(Vec<f64>, usize)> {
    let n = sys.dim();
    let s0 = warm_coeff.s;
    assert!(s0 <= s, "warm start needs s0 <= s");
    let mut gamma = vec![0.0; s0 * n];
    let mut gamma_lo = vec![0.0; s0 * n];
    // the warm start only seeds the main iteration, so it stops as soon as
    // the shared tolerance is met
    let outcome = iterate_blended(
        &mut gamma,
        &mut gamma_lo,
        y0,
        h,
        sys,
        warm_coeff,
        ws,
        true,
        false,
        "warm start",
    )?;
    let mut psi = vec![0.0; s * n];
    psi[..s0 * n].copy_from_slice(&gamma);
    Ok((psi, outcome.iters))
}

/// Iteration counts and final norms of one step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiagnostics {
    pub warm_iters: usize,
    pub main_iters: usize,
    pub final_update_norm: f64,
    pub residual_norm: f64,
}

/// One step `y0 -> y1 = y0 + h psi_0` of the spectral method.
pub fn shbvm_step(
    y0: &[f64],
    h: f64,
    sys: &HamiltonianSystem,
    coeff: &CoefficientSet,
    warm_coeff: &CoefficientSet,
    ws: &BlendedWorkspace,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    if h == 0.0 {
        return Ok((y0.to_vec(), StepDiagnostics::default()));
    }
    let n = sys.dim();
    let (mut psi, warm_iters) = warm_start(y0, h, sys, warm_coeff, coeff.s, ws)?;
    let mut psi_lo = vec![0.0; psi.len()];
    let outcome = iterate_blended(
        &mut psi,
        &mut psi_lo,
        y0,
        h,
        sys,
        coeff,
        ws,
        false,
        true,
        "blended iteration",
    )?;
    let mut y1 = vec![0.0; n];
    for d in 0..n {
        let mut acc = Dot2::new();
        acc.add(y0[d]);
        acc.add_prod(h, psi[d]);
        acc.add_prod(h, psi_lo[d]);
        y1[d] = acc.value();
    }
    Ok((
        y1,
        StepDiagnostics {
            warm_iters,
            main_iters: outcome.iters,
            final_update_norm: outcome.final_update_norm,
            residual_norm: outcome.residual_norm,
        },
    ))
}

/// Collocation polynomial at fraction `c` of the step: `sigma(c h) = y0 + h
/// sum_j (int_0^c P_j) psi_j`.
pub fn dense_output(
    psi: &[f64],
    y0: &[f64],
    h: f64,
    c: f64,
    coeff: &CoefficientSet,
) -> Vec<f64> {
    let s = coeff.s;
    let n = y0.len();
    assert_eq!(psi.len(), s * n);
    if c == 0.0 {
        return y0.to_vec();
    }
    let ints = legendre_int_all(s, c);
    let mut out = y0.to_vec();
    for d in 0..n {
        let mut acc = Dot2::new();
        for j in 0..s {
            acc.add_prod(ints[j], psi[j * n + d]);
        }
        out[d] += h * acc.value();
    }
    out
}

/// A constant-stepsize integration: all states (including the initial one),
/// the Hamiltonian along them, and per-step diagnostics.
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub hamiltonians: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    /// Max relative Hamiltonian deviation from the initial value.
    pub fn hamiltonian_drift_relative(&self) -> f64 {
        let h0 = self.hamiltonians[0];
        let denom = h0.abs().max(f64::MIN_POSITIVE);
        self.hamiltonians
            .iter()
            .fold(0.0f64, |acc, &h| acc.max((h - h0).abs()))
            / denom
    }

    /// Max absolute Hamiltonian deviation from the initial value.
    pub fn hamiltonian_drift_absolute(&self) -> f64 {
        let h0 = self.hamiltonians[0];
        self.hamiltonians
            .iter()
            .fold(0.0f64, |acc, &h| acc.max((h - h0).abs()))
    }
}

/// Integrate `n_steps` constant-size steps, sharing one coefficient set and
/// one factorized workspace across the run.
pub fn integrate(
    sys: &HamiltonianSystem,
    y0: &[f64],
    h: f64,
    n_steps: usize,
    params: &SpectralParams,
) -> Result<Trajectory> {
    assert!(n_steps >= 1, "integrate needs at least one step");
    let coeff = build_coefficients(params.s, params.k)?;
    let warm_coeff = if params.s0 == params.s && params.k == params.s {
        coeff.clone()
    } else {
        build_coefficients(params.s0, params.s0)?
    };
    let ws = BlendedWorkspace::new(sys, h, coeff.rho, params.u)?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut hamiltonians = Vec::with_capacity(n_steps + 1);
    let mut diagnostics = Vec::with_capacity(n_steps);
    states.push(y0.to_vec());
    hamiltonians.push(sys.hamiltonian(y0));
    let mut y = y0.to_vec();
    for step in 0..n_steps {
        match shbvm_step(&y, h, sys, &coeff, &warm_coeff, &ws) {
            Ok((y1, diag)) => {
                y = y1;
                states.push(y.clone());
                hamiltonians.push(sys.hamiltonian(&y));
                diagnostics.push(diag);
            }
            Err(e) => {
                return Err(OscilError::SolverDiverged { step, source: Box::new(e) });
            }
        }
    }
    Ok(Trajectory { states, hamiltonians, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::{gauss_rule, legendre_all};
    use approx::assert_abs_diff_eq;

    fn scalar_rotation(omega: f64) -> HamiltonianSystem {
        let a = DenseMatrix::from_rows(2, 2, &[omega, 0.0, 0.0, omega]);
        HamiltonianSystem::new(
            1,
            a,
            Box::new(|_y| vec![0.0, 0.0]),
            Box::new(move |y: &[f64]| 0.5 * omega * omega * (y[0] * y[0] + y[1] * y[1])),
            omega,
            1.0,
        )
        .unwrap()
    }

    fn exact_rotation(omega: f64, t: f64, y0: &[f64]) -> Vec<f64> {
        let (c, s) = ((omega * t).cos(), (omega * t).sin());
        vec![c * y0[0] + s * y0[1], -s * y0[0] + c * y0[1]]
    }

    #[test]
    fn coefficients_midpoint() {
        let c = build_coefficients(1, 1).unwrap();
        assert_abs_diff_eq!(c.quad.nodes[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.xs[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rho, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn coefficients_s2() {
        let c = build_coefficients(2, 2).unwrap();
        let x = 0.5 / 3.0f64.sqrt();
        assert_abs_diff_eq!(c.xs[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.xs[(0, 1)], -x, epsilon = 1e-15);
        assert_abs_diff_eq!(c.xs[(1, 0)], x, epsilon = 1e-15);
        assert_abs_diff_eq!(c.xs[(1, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.rho, (1.0f64 / 12.0).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn coefficients_s3_banded_identity() {
        let c = build_coefficients(3, 6).unwrap();
        let dev = lemma_deviation(&c.proj, &c.is_mat, &c.xs);
        assert!(dev <= 1e-14, "deviation {dev:e}");
        assert_abs_diff_eq!(c.xs[(1, 0)], 0.5 / 3.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.xs[(2, 1)], 0.5 / 15.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn residual_zero_at_origin() {
        let sys = scalar_rotation(3.0);
        let coeff = build_coefficients(4, 6).unwrap();
        let psi = vec![0.0; 4 * 2];
        let g = residual_g(&psi, &[0.0, 0.0], 0.1, &sys, &coeff).unwrap();
        assert_eq!(max_norm(&g), 0.0);
    }

    #[test]
    fn residual_is_midpoint_equation_at_s1() {
        // s = k = 1 reduces to the implicit midpoint discrete equation
        let omega = 2.0;
        let kappa2 = 0.3;
        let a = DenseMatrix::from_rows(2, 2, &[omega, 0.0, 0.0, omega]);
        let sys = HamiltonianSystem::new(
            1,
            a,
            Box::new(move |y: &[f64]| vec![kappa2 * y[0] * y[0] * y[0], 0.0]),
            Box::new(|_| 0.0),
            omega,
            3.0,
        )
        .unwrap();
        let coeff = build_coefficients(1, 1).unwrap();
        let y0 = [0.4, -0.7];
        let h = 0.05;
        let psi = [0.3, 0.9];
        let g = residual_g(&psi, &y0, h, &sys, &coeff).unwrap();
        // hand expansion: G = psi - J[A(y0 + h/2 psi) + grad(y0 + h/2 psi)]
        let mid = [y0[0] + 0.5 * h * psi[0], y0[1] + 0.5 * h * psi[1]];
        let w = [
            omega * mid[0] + kappa2 * mid[0] * mid[0] * mid[0],
            omega * mid[1],
        ];
        let expect = [psi[0] - w[1], psi[1] + w[0]];
        assert_abs_diff_eq!(g[0], expect[0], epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], expect[1], epsilon = 1e-15);
    }

    #[test]
    fn residual_small_at_linear_solution() {
        // psi* built from the expansion coefficients of the exact rotation
        let omega = 10.0;
        let h = 0.5; // omega h = 5
        let sys = scalar_rotation(omega);
        let s = crate::truncation::phi_u(omega * h, crate::truncation::DEFAULT_EPSILON).unwrap();
        let coeff = build_coefficients(s, s + 2).unwrap();
        let quad = gauss_rule(64).unwrap();
        let y0 = [1.0, 0.25];
        let mut psi = vec![0.0; s * 2];
        for j in 0..s {
            // psi_j = int_0^1 P_j(t) J A y(t h) dt
            let mut acc = [0.0f64; 2];
            for (&node, &w) in quad.nodes.iter().zip(&quad.weights) {
                let p = legendre_all(s, node);
                let y = exact_rotation(omega, node * h, &y0);
                // J A y = omega * (y_p, -y_q)
                acc[0] += w * p[j] * omega * y[1];
                acc[1] += w * p[j] * (-omega * y[0]);
            }
            psi[2 * j] = acc[0];
            psi[2 * j + 1] = acc[1];
        }
        let g = residual_g_linear(&psi, &y0, h, &sys, &coeff).unwrap();
        let bound = 1e-12 * omega * max_norm(&y0);
        assert!(max_norm(&g) <= bound, "residual {:e} vs {:e}", max_norm(&g), bound);
    }

    #[test]
    fn residual_rejects_non_finite_gradient() {
        let omega = 2.0;
        let a = DenseMatrix::from_rows(2, 2, &[omega, 0.0, 0.0, omega]);
        let sys = HamiltonianSystem::new(
            1,
            a,
            Box::new(|y: &[f64]| vec![1.0 / (y[0] - y[0]), 0.0]),
            Box::new(|_| 0.0),
            omega,
            1.0,
        )
        .unwrap();
        let coeff = build_coefficients(2, 3).unwrap();
        let psi = vec![0.0; 4];
        let got = residual_g(&psi, &[1.0, 0.0], 0.1, &sys, &coeff);
        assert!(matches!(got, Err(OscilError::NonFiniteEvaluation)));
    }

    #[test]
    fn sweep_leaves_psi_on_zero_residual() {
        let sys = scalar_rotation(4.0);
        let coeff = build_coefficients(3, 5).unwrap();
        let ws = BlendedWorkspace::new(&sys, 0.1, coeff.rho, f64::EPSILON / 2.0).unwrap();
        let mut psi = vec![0.5; 6];
        let g = vec![0.0; 6];
        let dn = blended_sweep(&mut psi, &g, &ws, &coeff).unwrap();
        assert_eq!(dn, 0.0);
        assert!(psi.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn sweep_matches_scalar_closed_form_at_s1() {
        // s=1: rho X^-1 = 1, so delta = Sigma eta with Sigma = (I + cJ)/(1+c^2)
        let omega = 7.0;
        let h = 0.3;
        let sys = scalar_rotation(omega);
        let coeff = build_coefficients(1, 1).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, f64::EPSILON / 2.0).unwrap();
        let g = [0.8, -0.3];
        let mut psi = vec![0.0, 0.0];
        blended_sweep(&mut psi, &g, &ws, &coeff).unwrap();
        let c = h * coeff.rho * omega;
        let denom = 1.0 + c * c;
        let eta = [-g[0], -g[1]];
        let expect = [(eta[0] + c * eta[1]) / denom, (eta[1] - c * eta[0]) / denom];
        assert_abs_diff_eq!(psi[0], expect[0], epsilon = 1e-14);
        assert_abs_diff_eq!(psi[1], expect[1], epsilon = 1e-14);
    }

    #[test]
    fn warm_start_zero_state() {
        let sys = scalar_rotation(5.0);
        let coeff = build_coefficients(6, 8).unwrap();
        let warm = build_coefficients(4, 4).unwrap();
        let ws = BlendedWorkspace::new(&sys, 0.1, coeff.rho, f64::EPSILON / 2.0).unwrap();
        let (psi, _) = warm_start(&[0.0, 0.0], 0.1, &sys, &warm, 6, &ws).unwrap();
        assert_eq!(max_norm(&psi), 0.0);
    }

    #[test]
    fn warm_start_first_block_matches_divided_difference() {
        // gamma_0 ~ (y(h) - y0)/h for the linear problem
        let omega = 6.0;
        let h = 0.2;
        let sys = scalar_rotation(omega);
        let u = crate::truncation::DEFAULT_EPSILON;
        let s0 = crate::truncation::phi_u(omega * h, u).unwrap();
        let warm = build_coefficients(s0, s0).unwrap();
        let coeff = build_coefficients(s0, s0 + 2).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, u).unwrap();
        let y0 = [0.3, 1.1];
        let (psi, _) = warm_start(&y0, h, &sys, &warm, s0, &ws).unwrap();
        let y_h = exact_rotation(omega, h, &y0);
        for d in 0..2 {
            let expect = (y_h[d] - y0[d]) / h;
            assert_abs_diff_eq!(psi[d], expect, epsilon = 1e-9 * omega);
        }
    }

    #[test]
    fn step_reproduces_linear_flow() {
        let omega = 20.0;
        let h = 0.5; // omega h = 10
        let sys = scalar_rotation(omega);
        let u = crate::truncation::DEFAULT_EPSILON;
        let p = crate::truncation::select_params(omega, h, 1.0, u).unwrap();
        let coeff = build_coefficients(p.s, p.k).unwrap();
        let warm = build_coefficients(p.s0, p.s0).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, u).unwrap();
        let y0 = [1.0, 0.0];
        let (y1, _) = shbvm_step(&y0, h, &sys, &coeff, &warm, &ws).unwrap();
        let expect = exact_rotation(omega, h, &y0);
        for d in 0..2 {
            assert_abs_diff_eq!(y1[d], expect[d], epsilon = 1e-12);
        }
    }

    #[test]
    fn step_taylor_consistency_small_h() {
        let omega = 3.0;
        let h = 1e-6;
        let sys = scalar_rotation(omega);
        let coeff = build_coefficients(2, 20).unwrap();
        let warm = build_coefficients(2, 2).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, f64::EPSILON / 2.0).unwrap();
        let y0 = [0.7, -0.2];
        let (y1, _) = shbvm_step(&y0, h, &sys, &coeff, &warm, &ws).unwrap();
        let euler: Vec<f64> = y0
            .iter()
            .zip(sys.field(&y0))
            .map(|(&y, f)| y + h * f)
            .collect();
        for d in 0..2 {
            assert!((y1[d] - euler[d]).abs() <= 10.0 * omega * omega * h * h);
        }
    }

    #[test]
    fn step_zero_h_returns_state() {
        let sys = scalar_rotation(2.0);
        let coeff = build_coefficients(2, 4).unwrap();
        let warm = build_coefficients(2, 2).unwrap();
        let ws = BlendedWorkspace::new(&sys, 0.1, coeff.rho, f64::EPSILON / 2.0).unwrap();
        let (y1, diag) = shbvm_step(&[0.3, 0.4], 0.0, &sys, &coeff, &warm, &ws).unwrap();
        assert_eq!(y1, vec![0.3, 0.4]);
        assert_eq!(diag.main_iters, 0);
    }

    #[test]
    fn dense_output_endpoints_and_stages() {
        let omega = 5.0;
        let h = 0.3;
        let sys = scalar_rotation(omega);
        let u = crate::truncation::DEFAULT_EPSILON;
        let p = crate::truncation::select_params(omega, h, 1.0, u).unwrap();
        let coeff = build_coefficients(p.s, p.k).unwrap();
        let warm = build_coefficients(p.s0, p.s0).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, u).unwrap();
        let y0 = [0.9, 0.1];
        let (mut psi, _) = warm_start(&y0, h, &sys, &warm, coeff.s, &ws).unwrap();
        let mut psi_lo = vec![0.0; psi.len()];
        iterate_blended(&mut psi, &mut psi_lo, &y0, h, &sys, &coeff, &ws, false, true, "test").unwrap();
        // c = 0 returns y0
        let at0 = dense_output(&psi, &y0, h, 0.0, &coeff);
        assert_eq!(at0, y0.to_vec());
        // c = 1 equals the step output
        let (y1, _) = shbvm_step(&y0, h, &sys, &coeff, &warm, &ws).unwrap();
        let at1 = dense_output(&psi, &y0, h, 1.0, &coeff);
        for d in 0..2 {
            assert_abs_diff_eq!(at1[d], y1[d], epsilon = 1e-12);
        }
        // c = c_i equals the i-th internal stage used by the residual
        let n = 2;
        for (i, &ci) in coeff.quad.nodes.iter().enumerate().take(3) {
            let from_dense = dense_output(&psi, &y0, h, ci, &coeff);
            for d in 0..n {
                let mut acc = 0.0;
                for j in 0..coeff.s {
                    acc += coeff.is_mat[(i, j)] * psi[j * n + d];
                }
                let stage = y0[d] + h * acc;
                assert_abs_diff_eq!(from_dense[d], stage, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn integrate_one_step_equals_single_step() {
        let omega = 8.0;
        let h = 0.25;
        let sys = scalar_rotation(omega);
        let u = crate::truncation::DEFAULT_EPSILON;
        let p = crate::truncation::select_params(omega, h, 1.0, u).unwrap();
        let traj = integrate(&sys, &[1.0, 0.5], h, 1, &p).unwrap();
        let coeff = build_coefficients(p.s, p.k).unwrap();
        let warm = build_coefficients(p.s0, p.s0).unwrap();
        let ws = BlendedWorkspace::new(&sys, h, coeff.rho, u).unwrap();
        let (y1, _) = shbvm_step(&[1.0, 0.5], h, &sys, &coeff, &warm, &ws).unwrap();
        assert_eq!(traj.states.len(), 2);
        assert_eq!(traj.states[1], y1);
    }

    #[test]
    fn linear_trajectory_machine_accurate() {
        // N steps of the homogeneous problem track the rotation to 1e-11
        let omega = 10.0;
        let h = 1.0; // omega h = 10
        let sys = scalar_rotation(omega);
        let u = crate::truncation::DEFAULT_EPSILON;
        let p = crate::truncation::select_params(omega, h, 1.0, u).unwrap();
        let y0 = [1.0, 0.0];
        let n_steps = 50;
        let traj = integrate(&sys, &y0, h, n_steps, &p).unwrap();
        let mut worst = 0.0f64;
        for (idx, state) in traj.states.iter().enumerate() {
            let exact = exact_rotation(omega, idx as f64 * h, &y0);
            for d in 0..2 {
                worst = worst.max((state[d] - exact[d]).abs());
            }
        }
        assert!(worst <= 1e-11, "linear trajectory error {worst:e}");
    }
}
