//! Compressed-row complex matrices and the action of their exponential on a
//! vector.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::hilbert::{CMatrix, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

/// Accumulates `(row, col) → value` contributions in deterministic order.
#[derive(Debug, Default)]
pub(crate) struct TripletBuilder {
    n: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        if value != ZERO {
            *self.entries.entry((row, col)).or_insert(ZERO) += value;
        }
    }

    /// Adds `coeff · (x ⊗ y)` for square `x`, `y`.
    pub fn add_kron(&mut self, x: &CMatrix, y: &CMatrix, coeff: Complex64) {
        let ny = y.nrows();
        let xs = nonzeros(x);
        let ys = nonzeros(y);
        for &(p, q, xv) in &xs {
            for &(i, j, yv) in &ys {
                self.add(p * ny + i, q * ny + j, coeff * xv * yv);
            }
        }
    }

    pub fn build(self) -> CsrMatrix {
        let n = self.n;
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        for (&(r, c), &v) in &self.entries {
            if v == ZERO {
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { n, indptr, indices, values }
    }
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A` (no conjugation).
    pub fn vecmat(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += xr * self.values[k];
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.n);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                b.add(self.indices[k], r, self.values[k]);
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] = self.values[k];
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut d = vec![ZERO; self.n];
        for (r, slot) in d.iter_mut().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] == r {
                    *slot = self.values[k];
                }
            }
        }
        d
    }

    /// Maximum absolute column sum of `A − shift·I`.
    pub fn norm1_shifted(&self, shift: Complex64) -> f64 {
        let mut cols = vec![0.0; self.n];
        let mut has_diag = vec![false; self.n];
        for (r, diag) in has_diag.iter_mut().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let v = if c == r {
                    *diag = true;
                    self.values[k] - shift
                } else {
                    self.values[k]
                };
                cols[c] += v.norm();
            }
        }
        for (c, sum) in cols.iter_mut().enumerate() {
            if !has_diag[c] {
                *sum += shift.norm();
            }
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn norm1(&self) -> f64 {
        self.norm1_shifted(ZERO)
    }
}

/// Largest scaled norm ‖A t / s‖₁ handled by one Taylor substep.
const SUBSTEP_NORM: f64 = 4.0;
const MAX_TERMS: usize = 80;

/// Applies `exp(A t)` to `v` for `t ≥ 0`.
///
/// Truncated Taylor series with substepping: `A` is shifted by its mean
/// diagonal, the interval is split so that each substep has
/// `‖A h‖₁ ≤ 4`, and each series is summed until two consecutive terms fall
/// below double-precision roundoff relative to the running sum.
pub fn expm_action(a: &CsrMatrix, v: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = a.dim();
    let mut f = v.to_vec();
    if t == 0.0 || n == 0 {
        return f;
    }
    let mu = a.diagonal().iter().sum::<Complex64>() / n as f64;
    let norm = a.norm1_shifted(mu) * t;
    let steps = ((norm / SUBSTEP_NORM).ceil() as usize).max(1);
    let h = t / steps as f64;
    let damping = (mu * h).exp();

    let mut term = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    for _ in 0..steps {
        term.copy_from_slice(&f);
        let mut prev = inf_norm(&term);
        for k in 1..=MAX_TERMS {
            a.matvec_into(&term, &mut scratch);
            let scale = h / k as f64;
            for (tk, sk) in term.iter_mut().zip(&scratch) {
                *tk = (*sk - mu * *tk) * scale;
            }
            let cur = inf_norm(&term);
            for (fk, tk) in f.iter_mut().zip(&term) {
                *fk += tk;
            }
            if prev + cur <= f64::EPSILON * inf_norm(&f) {
                break;
            }
            prev = cur;
        }
        for fk in f.iter_mut() {
            *fk *= damping;
        }
    }
    f
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            if (i + 2 * j) % 3 == 0 {
                c((i as f64 - j as f64) * 0.3, 0.1 * (i * j) as f64)
            } else {
                ZERO
            }
        })
    }

    fn to_csr(m: &CMatrix) -> CsrMatrix {
        let mut b = TripletBuilder::new(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                b.add(i, j, m[(i, j)]);
            }
        }
        b.build()
    }

    #[test]
    fn dense_round_trip_and_products() {
        let m = sample(7);
        let s = to_csr(&m);
        assert_eq!(s.to_dense(), m);
        let x: Vec<Complex64> = (0..7).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let dense = &m * nalgebra::DVector::from_vec(x.clone());
        for (a, b) in s.matvec(&x).iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let left = s.vecmat(&x);
        let dense_left = nalgebra::DVector::from_vec(x).transpose() * &m;
        for (a, b) in left.iter().zip(dense_left.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(s.transpose().to_dense(), m.transpose());
    }

    #[test]
    fn kron_matches_nalgebra() {
        let x = sample(2);
        let y = sample(3);
        let mut b = TripletBuilder::new(6);
        b.add_kron(&x, &y, c(2.0, -1.0));
        let expected = x.kronecker(&y) * c(2.0, -1.0);
        let got = b.build().to_dense();
        for (a, e) in got.iter().zip(expected.iter()) {
            assert!((a - e).norm() < 1e-14);
        }
    }

    #[test]
    fn norm1_with_shift() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0), ZERO]);
        let s = to_csr(&m);
        assert!((s.norm1() - 4.0).abs() < 1e-15);
        // column 1 has no stored diagonal; the shift still counts there
        assert!((s.norm1_shifted(c(1.0, 0.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 2.0), c(-0.5, -3.0), c(0.0, 0.0)]));
        let s = to_csr(&m);
        let v = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let t = 3.7;
        let out = expm_action(&s, &v, t);
        for k in 0..3 {
            let expected = v[k] * (m[(k, k)] * t).exp();
            assert!((out[k] - expected).norm() < 1e-13, "{k}");
        }
    }

    #[test]
    fn rotation_generator() {
        // exp(t [[0,-w],[w,0]]) is a rotation by w t
        let w = 1.3e3;
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, c(-w, 0.0), c(w, 0.0), ZERO]);
        let s = to_csr(&m);
        let t = 0.01;
        let out = expm_action(&s, &[c(1.0, 0.0), ZERO], t);
        assert!((out[0].re - (w * t).cos()).abs() < 1e-12);
        assert!((out[1].re - (w * t).sin()).abs() < 1e-12);
    }
}
