//! Dense complex linear algebra for the Nyström systems.
//!
//! Matrices are row-major. Products go through `matrixmultiply::zgemm`;
//! the LU factorization is blocked so that almost all of its work is a
//! trailing `zgemm` update as well.

use matrixmultiply::{zgemm, CGemmOption};

use crate::error::{Error, Result};
use crate::geometry::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn raw(x: C64) -> [f64; 2] {
    [x.re, x.im]
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> CMat {
        CMat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> CMat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · other` via `zgemm`.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 || self.cols == 0 {
            return out;
        }
        // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2];
        // the three buffers are distinct and sized by the shapes passed.
        unsafe {
            zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                self.rows,
                self.cols,
                other.cols,
                raw(ONE),
                self.data.as_ptr() as *const [f64; 2],
                self.cols as isize,
                1,
                other.data.as_ptr() as *const [f64; 2],
                other.cols as isize,
                1,
                raw(ZERO),
                out.data.as_mut_ptr() as *mut [f64; 2],
                out.cols as isize,
                1,
            );
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `selfᴴ · x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![ZERO; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    /// Maximum absolute row sum (the ∞-norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|a| a.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale_rows(&mut self, s: &[C64]) {
        for i in 0..self.rows {
            let si = s[i];
            for a in &mut self.data[i * self.cols..(i + 1) * self.cols] {
                *a *= si;
            }
        }
    }

    pub fn scale_cols(&mut self, s: &[C64]) {
        for i in 0..self.rows {
            for (a, sj) in self.data[i * self.cols..(i + 1) * self.cols].iter_mut().zip(s) {
                *a *= sj;
            }
        }
    }

    /// Rows `rows` and columns `cols` of `self`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |i, j| self.at(rows[i], cols[j]))
    }

    /// `‖A‖₂` estimate by power iteration on `AᴴA` (deterministic start).
    pub fn norm2_estimate(&self, iters: usize) -> f64 {
        let mut x: Vec<C64> = (0..self.cols).map(|j| C64::new(1.0 + 0.1 * (j % 7) as f64, 0.0)).collect();
        let mut est = 0.0;
        for _ in 0..iters {
            let nx = vnorm(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.mul_vec(&x);
            est = vnorm(&y);
            x = self.adjoint_mul_vec(&y);
        }
        est
    }
}

pub fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm_inf(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `P A = L U` with unit lower `L`; factors stored in place.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    piv: Vec<usize>,
    pub singular: bool,
}

const BLOCK: usize = 64;

impl Lu {
    pub fn factor(a: &CMat) -> Lu {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut piv = vec![0; n];
        let mut singular = false;
        let mut kb = 0;
        while kb < n {
            let b = BLOCK.min(n - kb);
            let pe = kb + b;
            for k in kb..pe {
                let mut p = k;
                let mut best = lu[k * n + k].norm();
                for i in k + 1..n {
                    let v = lu[i * n + k].norm();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                piv[k] = p;
                if p != k {
                    for j in 0..n {
                        lu.swap(k * n + j, p * n + j);
                    }
                }
                let d = lu[k * n + k];
                if d.norm() == 0.0 {
                    singular = true;
                    continue;
                }
                let inv = 1.0 / d;
                for i in k + 1..n {
                    let l = lu[i * n + k] * inv;
                    lu[i * n + k] = l;
                    if l != ZERO {
                        for j in k + 1..pe {
                            let ukj = lu[k * n + j];
                            lu[i * n + j] -= l * ukj;
                        }
                    }
                }
            }
            if pe < n {
                // U₁₂ ← L₁₁⁻¹ A₁₂
                for k in kb..pe {
                    for i in k + 1..pe {
                        let l = lu[i * n + k];
                        if l == ZERO {
                            continue;
                        }
                        let (head, tail) = lu.split_at_mut(i * n);
                        let src = &head[k * n + pe..k * n + n];
                        for (dst, s) in tail[pe..n].iter_mut().zip(src) {
                            *dst -= l * s;
                        }
                    }
                }
                // A₂₂ ← A₂₂ − L₂₁ U₁₂
                let m = n - pe;
                let ptr = lu.as_mut_ptr();
                // SAFETY: L₂₁ (rows pe.., cols kb..pe), U₁₂ (rows kb..pe, cols
                // pe..) and A₂₂ (rows pe.., cols pe..) are disjoint regions of
                // the same n×n buffer.
                unsafe {
                    zgemm(
                        CGemmOption::Standard,
                        CGemmOption::Standard,
                        m,
                        b,
                        m,
                        [-1.0, 0.0],
                        ptr.add(pe * n + kb) as *const [f64; 2],
                        n as isize,
                        1,
                        ptr.add(kb * n + pe) as *const [f64; 2],
                        n as isize,
                        1,
                        [1.0, 0.0],
                        ptr.add(pe * n + pe) as *mut [f64; 2],
                        n as isize,
                        1,
                    );
                }
            }
            kb = pe;
        }
        Lu { n, lu, piv, singular }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: C64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: C64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solve `Aᴴ y = b`.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut z = b.to_vec();
        // Uᴴ z = b (lower triangular, column access of U)
        for j in 0..n {
            z[j] /= self.lu[j * n + j].conj();
            let zj = z[j];
            for i in j + 1..n {
                z[i] -= self.lu[j * n + i].conj() * zj;
            }
        }
        // Lᴴ w = z (unit upper)
        for j in (0..n).rev() {
            let wj = z[j];
            for i in 0..j {
                z[i] -= self.lu[j * n + i].conj() * wj;
            }
        }
        for k in (0..n).rev() {
            z.swap(k, self.piv[k]);
        }
        z
    }

    /// `‖A⁻¹‖₂` estimate by power iteration on `(AᴴA)⁻¹`.
    pub fn inverse_norm_estimate(&self, iters: usize) -> f64 {
        let mut x: Vec<C64> = (0..self.n).map(|j| C64::new(1.0, 0.05 * (j % 11) as f64)).collect();
        let mut est = 0.0;
        for _ in 0..iters {
            let nx = vnorm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.solve(&x);
            est = vnorm(&y);
            if !est.is_finite() {
                return f64::INFINITY;
            }
            x = self.solve_adjoint(&y);
        }
        est
    }
}

/// 2-norm condition estimate of a square matrix from its LU factors.
pub fn condition_estimate(a: &CMat, lu: &Lu) -> f64 {
    if lu.singular {
        return f64::INFINITY;
    }
    a.norm2_estimate(30) * lu.inverse_norm_estimate(30)
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub condition: f64,
    pub residual: f64,
    /// Tikhonov parameters tried, in order; empty for a plain LU solve.
    pub regularization: Vec<f64>,
}

/// Solve `A x = b`; fall back to Tikhonov-regularized least squares when the
/// condition estimate exceeds `tikhonov_above`. The parameter starts at
/// `1e−10‖A‖` and grows ×10 up to `1e−4‖A‖` until the regularized normal
/// system has condition ≤ 1e12.
pub fn solve_regularized(a: &CMat, b: &[C64], tikhonov_above: f64) -> Result<(Vec<C64>, SolveReport)> {
    let lu = Lu::factor(a);
    let cond = condition_estimate(a, &lu);
    if cond.is_finite() && cond <= tikhonov_above {
        let x = lu.solve(b);
        let residual = residual_norm(a, &x, b);
        return Ok((x, SolveReport { condition: cond, residual, regularization: Vec::new() }));
    }
    let norm = a.norm2_estimate(30);
    let ah = a.adjoint();
    let aha = ah.matmul(a);
    let ahb = a.adjoint_mul_vec(b);
    let mut tried = Vec::new();
    let mut alpha = 1e-10 * norm;
    while alpha <= 1e-4 * norm * (1.0 + 1e-9) {
        tried.push(alpha);
        let mut m = aha.clone();
        for i in 0..m.rows {
            *m.at_mut(i, i) += alpha * alpha;
        }
        let lu = Lu::factor(&m);
        let c = condition_estimate(&m, &lu);
        if c.is_finite() && c <= 1e12 {
            let x = lu.solve(&ahb);
            let residual = residual_norm(a, &x, b);
            return Ok((x, SolveReport { condition: cond, residual, regularization: tried }));
        }
        alpha *= 10.0;
    }
    Err(Error::IllConditioned(cond))
}

/// `‖A x − b‖₂ / max(‖b‖₂, tiny)`.
pub fn residual_norm(a: &CMat, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<C64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    vnorm(&r) / vnorm(b).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn matmul_matches_naive() {
        let a = random(7, 5, 1);
        let b = random(5, 9, 2);
        let p = a.matmul(&b);
        for i in 0..7 {
            for j in 0..9 {
                let s: C64 = (0..5).map(|k| a.at(i, k) * b.at(k, j)).sum();
                assert!((s - p.at(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn blocked_lu_solves_both_ways() {
        for n in [1, 5, 64, 150] {
            let mut a = random(n, n, 3 + n as u64);
            for i in 0..n {
                *a.at_mut(i, i) += c(2.0, 0.0);
            }
            let x: Vec<C64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
            let b = a.mul_vec(&x);
            let lu = Lu::factor(&a);
            let y = lu.solve(&b);
            let err: f64 = y.iter().zip(&x).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * (1.0 + n as f64), "n={n} err={err}");
            let bh = a.adjoint_mul_vec(&x);
            let yh = lu.solve_adjoint(&bh);
            let err: f64 = yh.iter().zip(&x).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * (1.0 + n as f64), "adjoint n={n} err={err}");
        }
    }

    #[test]
    fn condition_of_diagonal() {
        let a = CMat::from_fn(6, 6, |i, j| if i == j { c(10f64.powi(i as i32), 0.0) } else { c(0.0, 0.0) });
        let lu = Lu::factor(&a);
        let k = condition_estimate(&a, &lu);
        assert!((k / 1e5 - 1.0).abs() < 1e-6, "cond {k}");
    }

    #[test]
    fn tikhonov_kicks_in_for_singular_systems() {
        let mut a = random(20, 20, 9);
        for j in 0..20 {
            let v = a.at(0, j);
            *a.at_mut(1, j) = v;
        }
        let b: Vec<C64> = a.mul_vec(&vec![c(1.0, 0.0); 20]);
        let (x, rep) = solve_regularized(&a, &b, 1e10).unwrap();
        assert!(!rep.regularization.is_empty());
        assert!(residual_norm(&a, &x, &b) < 1e-4);
    }
}
