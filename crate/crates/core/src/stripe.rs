//! Stripe matrices: block grids whose every block is diagonal.
//!
//! A `rows × cols` stripe matrix with blocks of length `len` represents a dense
//! `rows·len × cols·len` matrix but stores only `rows·cols·len` entries. Block
//! `(i, j)` holds the diagonal of the corresponding dense block, so all
//! structured arithmetic reduces to elementwise operations over the diagonal
//! index. Vectors conforming to a stripe matrix are concatenations of
//! length-`len` blocks.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pivots at or below this value are treated as a failed factorization.
pub const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct StripeMatrix {
    rows: usize,
    cols: usize,
    len: usize,
    data: Vec<Complex64>,
}

impl StripeMatrix {
    pub fn zeros(rows: usize, cols: usize, len: usize) -> Self {
        Self {
            rows,
            cols,
            len,
            data: vec![ZERO; rows * cols * len],
        }
    }

    pub fn identity(n: usize, len: usize) -> Self {
        let mut s = Self::zeros(n, n, len);
        for i in 0..n {
            s.block_mut(i, i).fill(ONE);
        }
        s
    }

    /// Block-diagonal stripe with `values[j]` repeated along block `(j, j)`.
    pub fn block_diagonal(values: &[f64], len: usize) -> Self {
        let mut s = Self::zeros(values.len(), values.len(), len);
        for (j, &v) in values.iter().enumerate() {
            s.block_mut(j, j).fill(Complex64::new(v, 0.0));
        }
        s
    }

    /// Entries laid out block-row-major: `data[(i·cols + j)·len + m]`.
    pub fn from_raw(rows: usize, cols: usize, len: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols * len {
            return Err(Error::shape(format!(
                "{} entries for a {rows}x{cols} stripe with block length {len}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, len, data })
    }

    pub fn block_rows(&self) -> usize {
        self.rows
    }

    pub fn block_cols(&self) -> usize {
        self.cols
    }

    pub fn block_len(&self) -> usize {
        self.len
    }

    pub fn dense_shape(&self) -> (usize, usize) {
        (self.rows * self.len, self.cols * self.len)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn block(&self, i: usize, j: usize) -> &[Complex64] {
        let start = (i * self.cols + j) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut [Complex64] {
        let start = (i * self.cols + j) * self.len;
        &mut self.data[start..start + self.len]
    }

    pub fn get(&self, i: usize, j: usize, m: usize) -> Complex64 {
        self.block(i, j)[m]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows, self.len);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (o, v) in out.block_mut(j, i).iter_mut().zip(self.block(i, j)) {
                    *o = v.conj();
                }
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols, self.len) != (other.rows, other.cols, other.len) {
            return Err(Error::shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.rows, self.cols, self.len, other.rows, other.cols, other.len
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    /// `[AB]_{ik} = Σ_j A_{ij} ∘ B_{jk}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.len != other.len {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} (len {}) by {}x{} (len {})",
                self.rows, self.cols, self.len, other.rows, other.cols, other.len
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, self.len);
        for i in 0..self.rows {
            for k in 0..other.cols {
                let acc = out.block_mut(i, k);
                for j in 0..self.cols {
                    for ((o, a), b) in acc.iter_mut().zip(self.block(i, j)).zip(other.block(j, k)) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A†A`, computed on the upper block triangle and mirrored.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n, self.len);
        for j in 0..n {
            for l in j..n {
                let mut acc = vec![ZERO; self.len];
                for i in 0..self.rows {
                    for ((o, a), b) in acc.iter_mut().zip(self.block(i, j)).zip(self.block(i, l)) {
                        *o += a.conj() * b;
                    }
                }
                if l != j {
                    for (o, v) in out.block_mut(l, j).iter_mut().zip(&acc) {
                        *o = v.conj();
                    }
                } else {
                    acc.iter_mut().for_each(|v| v.im = 0.0);
                }
                out.block_mut(j, l).copy_from_slice(&acc);
            }
        }
        out
    }

    /// Add `values[j]` to every diagonal entry of block `(j, j)`.
    pub fn add_block_diagonal(&mut self, values: &[f64]) -> Result<()> {
        if self.rows != self.cols || values.len() != self.rows {
            return Err(Error::shape(format!(
                "{} diagonal values for a {}x{} stripe",
                values.len(),
                self.rows,
                self.cols
            )));
        }
        for (j, &v) in values.iter().enumerate() {
            self.block_mut(j, j).iter_mut().for_each(|e| e.re += v);
        }
        Ok(())
    }

    /// Matrix-vector product `A x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols * self.len {
            return Err(Error::shape(format!(
                "vector of length {} for {} stripe columns",
                x.len(),
                self.cols * self.len
            )));
        }
        let mut out = vec![ZERO; self.rows * self.len];
        for i in 0..self.rows {
            let o = &mut out[i * self.len..(i + 1) * self.len];
            for j in 0..self.cols {
                let xj = &x[j * self.len..(j + 1) * self.len];
                for ((o, a), b) in o.iter_mut().zip(self.block(i, j)).zip(xj) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A† x` without materializing the adjoint.
    pub fn adjoint_apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.rows * self.len {
            return Err(Error::shape(format!(
                "vector of length {} for {} stripe rows",
                x.len(),
                self.rows * self.len
            )));
        }
        let mut out = vec![ZERO; self.cols * self.len];
        for i in 0..self.rows {
            let xi = &x[i * self.len..(i + 1) * self.len];
            for j in 0..self.cols {
                let o = &mut out[j * self.len..(j + 1) * self.len];
                for ((o, a), b) in o.iter_mut().zip(self.block(i, j)).zip(xi) {
                    *o += a.conj() * b;
                }
            }
        }
        Ok(out)
    }

    pub fn densify(&self) -> DMatrix<Complex64> {
        let (r, c) = self.dense_shape();
        let mut d = DMatrix::from_element(r, c, ZERO);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (m, v) in self.block(i, j).iter().enumerate() {
                    d[(i * self.len + m, j * self.len + m)] = *v;
                }
            }
        }
        d
    }

    /// Dense text dump, one matrix row per line, entries as `re+imj`.
    pub fn to_dense_text(&self) -> String {
        let d = self.densify();
        let mut out = String::new();
        for r in 0..d.nrows() {
            let row: Vec<String> = (0..d.ncols())
                .map(|c| {
                    let v = d[(r, c)];
                    format!("{:.6e}{:+.6e}j", v.re, v.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// `R = L·D·L†` with `L` unit block-lower-triangular and `D` real diagonal.
#[derive(Clone, Debug)]
pub struct LdlFactors {
    pub unit_lower: StripeMatrix,
    /// Diagonal of `D`, indexed like a conforming vector (`block·len + m`).
    pub diag: Vec<f64>,
}

/// Block LDLᵀ of a Hermitian positive definite stripe matrix, without pivoting.
///
/// Because every block is diagonal, factorizing block-wise yields the scalar
/// LDLᵀ; `L` keeps the stripe structure in its lower block triangle.
pub fn block_ldl(r: &StripeMatrix) -> Result<LdlFactors> {
    if r.rows != r.cols {
        return Err(Error::shape(format!(
            "block_ldl needs a square stripe, got {}x{}",
            r.rows, r.cols
        )));
    }
    let n = r.rows;
    let len = r.len;
    let mut lower = StripeMatrix::identity(n, len);
    let mut diag = vec![0.0; n * len];
    let mut acc = vec![ZERO; len];
    for i in 0..n {
        for j in 0..i {
            acc.copy_from_slice(r.block(i, j));
            for c in 0..j {
                let dc = &diag[c * len..(c + 1) * len];
                let lic = lower.block(i, c);
                let ljc = lower.block(j, c);
                for m in 0..len {
                    acc[m] -= lic[m] * dc[m] * ljc[m].conj();
                }
            }
            let dj = &diag[j * len..(j + 1) * len];
            for m in 0..len {
                acc[m] /= dj[m];
            }
            lower.block_mut(i, j).copy_from_slice(&acc);
        }
        for m in 0..len {
            let mut d = r.block(i, i)[m].re;
            for c in 0..i {
                d -= lower.block(i, c)[m].norm_sqr() * diag[c * len + m];
            }
            if !(d.is_finite() && d > PIVOT_FLOOR) {
                return Err(Error::Decomposition {
                    pivot: i * len + m,
                    value: d,
                });
            }
            diag[i * len + m] = d;
        }
    }
    Ok(LdlFactors {
        unit_lower: lower,
        diag,
    })
}

fn check_vector(f: &LdlFactors, z: &[Complex64]) -> Result<()> {
    if z.len() != f.diag.len() {
        return Err(Error::shape(format!(
            "vector of length {} for a factorization of size {}",
            z.len(),
            f.diag.len()
        )));
    }
    Ok(())
}

/// `L⁻¹ z` by block forward substitution.
pub fn forward_substitute(l: &StripeMatrix, z: &[Complex64]) -> Result<Vec<Complex64>> {
    let (n, len) = (l.rows, l.len);
    if l.rows != l.cols || z.len() != n * len {
        return Err(Error::shape(
            "forward substitution needs a square stripe and conforming vector",
        ));
    }
    let mut w = z.to_vec();
    for i in 0..n {
        for j in 0..i {
            let (head, tail) = w.split_at_mut(i * len);
            let wj = &head[j * len..(j + 1) * len];
            for ((o, a), b) in tail[..len].iter_mut().zip(l.block(i, j)).zip(wj) {
                *o -= a * b;
            }
        }
    }
    Ok(w)
}

/// `L⁻† w` by block back substitution.
pub fn backward_substitute_adjoint(l: &StripeMatrix, w: &[Complex64]) -> Result<Vec<Complex64>> {
    let (n, len) = (l.rows, l.len);
    if l.rows != l.cols || w.len() != n * len {
        return Err(Error::shape(
            "back substitution needs a square stripe and conforming vector",
        ));
    }
    let mut x = w.to_vec();
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let (head, tail) = x.split_at_mut(j * len);
            let xj = &tail[..len];
            for ((o, a), b) in head[i * len..(i + 1) * len].iter_mut().zip(l.block(j, i)).zip(xj) {
                *o -= a.conj() * b;
            }
        }
    }
    Ok(x)
}

fn check_pivots(f: &LdlFactors) -> Result<()> {
    match f.diag.iter().position(|d| !(d.is_finite() && *d > PIVOT_FLOOR)) {
        Some(pivot) => Err(Error::Decomposition {
            pivot,
            value: f.diag[pivot],
        }),
        None => Ok(()),
    }
}

/// `log det R = Σ log D`.
pub fn stripe_logdet(f: &LdlFactors) -> Result<f64> {
    check_pivots(f)?;
    Ok(f.diag.iter().map(|d| d.ln()).sum())
}

/// `z† R⁻¹ z = ‖L⁻¹z‖²_{D⁻¹}`.
pub fn quadratic_form(f: &LdlFactors, z: &[Complex64]) -> Result<f64> {
    check_vector(f, z)?;
    check_pivots(f)?;
    let w = forward_substitute(&f.unit_lower, z)?;
    Ok(w.iter().zip(&f.diag).map(|(v, d)| v.norm_sqr() / d).sum())
}

/// `R⁻¹ z = L⁻† D⁻¹ L⁻¹ z`.
pub fn solve(f: &LdlFactors, z: &[Complex64]) -> Result<Vec<Complex64>> {
    check_vector(f, z)?;
    check_pivots(f)?;
    let mut w = forward_substitute(&f.unit_lower, z)?;
    w.iter_mut().zip(&f.diag).for_each(|(v, d)| *v /= d);
    backward_substitute_adjoint(&f.unit_lower, &w)
}
