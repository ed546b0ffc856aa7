//! Dense real linear algebra sized for the solver: LU with partial pivoting,
//! cyclic-Jacobi symmetric eigendecomposition, Francis QR eigenvalues of small
//! nonsymmetric matrices, power-iteration spectral norm, and Kronecker-structured
//! block products. Everything here operates on matrices of at most a few hundred
//! rows, so the implementations favour robustness over blocking or parallelism.

use crate::error::{OscilError, Result};
use std::ops::{Index, IndexMut};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a flat row-major slice.
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Self { rows, cols, data: entries.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Largest symmetry defect `|a_ij - a_ji|`.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        dev
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Max (infinity) norm of a vector.
pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

const PIVOT_FLOOR: f64 = 1e-300;

/// Packed LU factorization with partial pivoting, `PA = LU`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    pivots: Vec<usize>,
}

pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactorization> {
    assert!(m.is_square(), "LU factorization requires a square matrix");
    let n = m.rows();
    let mut lu = m.clone();
    let mut pivots = vec![0usize; n];
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for r in (col + 1)..n {
            let v = lu[(r, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < PIVOT_FLOOR {
            return Err(OscilError::SingularMatrix { col, pivot: pivot_val });
        }
        pivots[col] = pivot_row;
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
        }
        let diag = lu[(col, col)];
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / diag;
            lu[(r, col)] = factor;
            if factor != 0.0 {
                for j in (col + 1)..n {
                    lu[(r, j)] -= factor * lu[(col, j)];
                }
            }
        }
    }
    Ok(LuFactorization { lu, pivots })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.lu.rows();
        if x.len() != n {
            return Err(OscilError::DimensionMismatch { expected: n, got: x.len() });
        }
        for i in 0..n {
            x.swap(i, self.pivots[i]);
        }
        // forward: L y = Pb (unit lower triangle)
        for i in 1..n {
            let row = self.lu.row(i);
            let mut acc = 0.0;
            for j in 0..i {
                acc += row[j] * x[j];
            }
            x[i] -= acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = 0.0;
            for j in (i + 1)..n {
                acc += row[j] * x[j];
            }
            x[i] = (x[i] - acc) / row[i];
        }
        Ok(())
    }
}

pub fn lu_solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

/// Symmetric eigendecomposition `M = Q diag(lambda) Q^T`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymEig {
    /// Apply `f(M) v = Q f(lambda) Q^T v`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64, v: &[f64]) -> Vec<f64> {
        let qt_v = self.eigenvectors.transpose().matvec(v);
        let scaled: Vec<f64> = qt_v
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&c, &l)| f(l) * c)
            .collect();
        self.eigenvectors.matvec(&scaled)
    }

    /// Reassemble `Q diag(g(lambda)) Q^T` as a dense matrix.
    pub fn assemble(&self, g: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let mut out = DenseMatrix::zeros(n, n);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let gl = g(l);
            if gl == 0.0 {
                continue;
            }
            for i in 0..n {
                let qik = self.eigenvectors[(i, k)];
                if qik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += gl * qik * self.eigenvectors[(j, k)];
                }
            }
        }
        out
    }
}

const SYM_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    assert!(m.is_square(), "sym_eig requires a square matrix");
    let n = m.rows();
    let scale = m.max_abs().max(1.0);
    let dev = m.symmetry_deviation();
    if dev > SYM_TOL * scale {
        return Err(OscilError::NotSymmetric { deviation: dev });
    }
    let mut a = m.clone();
    let mut q = DenseMatrix::identity(n);
    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)] * a[(i, j)])
        .sum::<f64>()
        .sqrt();
    if frob == 0.0 {
        return Ok(SymEig { eigenvalues: vec![0.0; n], eigenvectors: q });
    }
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= 1e-15 * frob {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    if !converged {
        return Err(OscilError::NoConvergence {
            context: "Jacobi eigendecomposition".into(),
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(SymEig { eigenvalues, eigenvectors })
}

/// Householder reduction to upper Hessenberg form (in place).
fn to_hessenberg(a: &mut DenseMatrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for col in 0..(n - 2) {
        let mut norm_sq = 0.0;
        for i in (col + 1)..n {
            norm_sq += a[(i, col)] * a[(i, col)];
        }
        let norm = norm_sq.sqrt();
        if norm <= 1e-300 {
            continue;
        }
        let x0 = a[(col + 1, col)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        v[col + 1] = x0 - alpha;
        for i in (col + 2)..n {
            v[i] = a[(i, col)];
        }
        let vtv: f64 = ((col + 1)..n).map(|i| v[i] * v[i]).sum();
        if vtv <= 1e-300 {
            continue;
        }
        let beta = 2.0 / vtv;
        // A <- H A, rows col+1..n
        for j in col..n {
            let dot: f64 = ((col + 1)..n).map(|i| v[i] * a[(i, j)]).sum();
            let f = beta * dot;
            for i in (col + 1)..n {
                a[(i, j)] -= f * v[i];
            }
        }
        // A <- A H, cols col+1..n
        for i in 0..n {
            let dot: f64 = ((col + 1)..n).map(|j| v[j] * a[(i, j)]).sum();
            let f = beta * dot;
            for j in (col + 1)..n {
                a[(i, j)] -= f * v[j];
            }
        }
        a[(col + 1, col)] = alpha;
        for i in (col + 2)..n {
            a[(i, col)] = 0.0;
        }
    }
}

/// Eigenvalues of a real square matrix as `(re, im)` pairs, via Hessenberg
/// reduction followed by Francis double-shift QR iteration.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<(f64, f64)>> {
    assert!(m.is_square(), "eigenvalues requires a square matrix");
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = m.clone();
    to_hessenberg(&mut h);
    hqr(&mut h, 500 * n)
}

/// Minimum eigenvalue modulus over the (possibly complex) spectrum.
pub fn small_eigenvalue_min_modulus(m: &DenseMatrix) -> Result<f64> {
    let eigs = eigenvalues(m)?;
    Ok(eigs
        .iter()
        .map(|&(re, im)| re.hypot(im))
        .fold(f64::INFINITY, f64::min))
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (classic EISPACK hqr).
fn hqr(h: &mut DenseMatrix, sweep_budget: usize) -> Result<Vec<(f64, f64)>> {
    let n = h.rows();
    let mut eigs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[(i, j)].abs();
        }
    }
    let mut total_sweeps = 0usize;
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    'outer: while nn >= 0 {
        let mut its = 0;
        loop {
            // find small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let s = h[(l as usize - 1, l as usize - 1)].abs() + h[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if h[(l as usize, l as usize - 1)].abs() <= eps * s {
                    h[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = h[(nn as usize, nn as usize)];
            if l == nn {
                eigs.push((x + t, 0.0));
                nn -= 1;
                continue 'outer;
            }
            let y = h[(nn as usize - 1, nn as usize - 1)];
            let w = h[(nn as usize, nn as usize - 1)] * h[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x_sh = x + t;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    eigs.push((x_sh + z, 0.0));
                    if z != 0.0 {
                        eigs.push((x_sh - w / z, 0.0));
                    } else {
                        eigs.push((x_sh + z, 0.0));
                    }
                } else {
                    eigs.push((x_sh + p, z));
                    eigs.push((x_sh + p, -z));
                }
                nn -= 2;
                continue 'outer;
            }
            if total_sweeps >= sweep_budget {
                return Err(OscilError::NoConvergence {
                    context: "Hessenberg QR eigenvalue iteration".into(),
                    iterations: sweep_budget,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=(nn as usize) {
                    h[(i, i)] -= x;
                }
                let s = h[(nn as usize, nn as usize - 1)].abs()
                    + h[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if its >= 30 {
                return Err(OscilError::NoConvergence {
                    context: "Hessenberg QR eigenvalue iteration".into(),
                    iterations: its,
                });
            }
            its += 1;
            total_sweeps += 1;
            // look for two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let mu = m as usize;
                let z = h[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - rr - ss;
                r = h[(mu + 2, mu + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            let m = m.max(l) as usize;
            let nnu = nn as usize;
            for i in (m + 2)..=nnu {
                h[(i, i - 2)] = 0.0;
            }
            for i in (m + 3)..=nnu {
                h[(i, i - 3)] = 0.0;
            }
            // double QR sweep on rows l..nn, columns m..nn
            for k in m..nnu {
                let mut scale = 0.0;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if k != nnu - 1 { h[(k + 2, k - 1)] } else { 0.0 };
                    scale = p.abs() + q.abs() + r.abs();
                    if scale != 0.0 {
                        p /= scale;
                        q /= scale;
                        r /= scale;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if (l as usize) != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                } else {
                    h[(k, k - 1)] = -s * scale;
                }
                p += s;
                let x_loc = p / s;
                let y_loc = q / s;
                let z_loc = r / s;
                q /= p;
                r /= p;
                for j in k..=nnu {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if k != nnu - 1 {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z_loc;
                    }
                    h[(k + 1, j)] -= pp * y_loc;
                    h[(k, j)] -= pp * x_loc;
                }
                let mmin = nnu.min(k + 3);
                for i in (l as usize)..=mmin {
                    let mut pp = x_loc * h[(i, k)] + y_loc * h[(i, k + 1)];
                    if k != nnu - 1 {
                        pp += z_loc * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k + 1)] -= pp * q;
                    h[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(eigs)
}

/// Apply `(M (x) I_n) v` for an `s x s` matrix `M` and `v` made of `s` blocks of
/// length `n`, without materializing the Kronecker product.
pub fn kron_apply(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    assert!(m.is_square(), "kron_apply requires a square matrix");
    let s = m.rows();
    if s == 0 || v.len() % s != 0 {
        return Err(OscilError::DimensionMismatch { expected: s.max(1), got: v.len() });
    }
    let n = v.len() / s;
    let mut out = vec![0.0; v.len()];
    for i in 0..s {
        let row = m.row(i);
        let block = &mut out[i * n..(i + 1) * n];
        for (j, &mij) in row.iter().enumerate() {
            if mij == 0.0 {
                continue;
            }
            let src = &v[j * n..(j + 1) * n];
            for d in 0..n {
                block[d] += mij * src[d];
            }
        }
    }
    Ok(out)
}

const POWER_MAX_ITERS: usize = 10_000;
const POWER_TOL: f64 = 1e-10;

/// Matrix 2-norm via power iteration on `M^T M`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    assert!(m.is_square(), "spectral_norm requires a square matrix");
    let n = m.rows();
    if n == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mt = m.transpose();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) / (n as f64 + 1.0)).collect();
    let norm0 = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
    x.iter_mut().for_each(|v| *v /= norm0);
    let mut lambda_prev = 0.0;
    let mut mx = vec![0.0; n];
    let mut y = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        m.matvec_into(&x, &mut mx);
        mt.matvec_into(&mx, &mut y);
        let lambda = (y.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if lambda == 0.0 {
            return Ok(0.0);
        }
        for i in 0..n {
            x[i] = y[i] / lambda;
        }
        if (lambda - lambda_prev).abs() <= POWER_TOL * lambda {
            return Ok(lambda.sqrt());
        }
        lambda_prev = lambda;
    }
    Err(OscilError::NoConvergence {
        context: "power iteration for spectral norm".into(),
        iterations: POWER_MAX_ITERS,
    })
}
