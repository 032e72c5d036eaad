use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
///
/// Node-indexed activations use one column per node, so a hidden
/// representation for a batch of `b` nodes is `d × b`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::from_vec",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Columns `indices` of `self`, in the given order.
    pub fn gather_columns(&self, indices: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, indices.len());
        for r in 0..self.rows {
            let src = self.row(r);
            for (dst, &c) in out.row_mut(r).iter_mut().zip(indices) {
                *dst = src[c];
            }
        }
        out
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::shape(
                "vstack",
                format!("{} vs {} columns", self.cols, other.cols),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same("add_assign", other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Index of the largest entry in each column; ties go to the lowest row.
    pub fn argmax_columns(&self) -> Vec<usize> {
        let mut best = vec![0usize; self.cols];
        for r in 1..self.rows {
            let row = self.row(r);
            for (c, b) in best.iter_mut().enumerate() {
                if row[c] > self.get(*b, c) {
                    *b = r;
                }
            }
        }
        best
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::of(x.as_f64())).collect(),
        }
    }

    fn check_same(&self, op: &'static str, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(())
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            let row = &self.data[r * self.cols..r * self.cols + self.cols.min(8)];
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// `a · b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols != b.rows {
        return Err(Error::shape("matmul", format!("{:?} x {:?}", a.shape(), b.shape())));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `aᵀ · b` without materializing the transpose.
pub fn matmul_tn<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows != b.rows {
        return Err(Error::shape("matmul_tn", format!("{:?}ᵀ x {:?}", a.shape(), b.shape())));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        let b_row = b.row(k);
        for (i, &aki) in a.row(k).iter().enumerate() {
            if aki == T::zero() {
                continue;
            }
            for (o, &bkj) in out.data[i * b.cols..(i + 1) * b.cols].iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ` without materializing the transpose.
pub fn matmul_nt<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols != b.cols {
        return Err(Error::shape("matmul_nt", format!("{:?} x {:?}ᵀ", a.shape(), b.shape())));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a_row, b.row(j));
        }
    }
    Ok(out)
}

/// Dot product with eight interleaved partial sums, combined in a fixed order.
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (xc, yc) = (x.chunks_exact(8), y.chunks_exact(8));
    let tail: T = xc.remainder().iter().zip(yc.remainder()).map(|(&a, &b)| a * b).sum();
    for (xs, ys) in xc.zip(yc) {
        for l in 0..8 {
            acc[l] += xs[l] * ys[l];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    fn sample(rows: usize, cols: usize, salt: u64) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, |r, c| {
            let x = ((r * 31 + c * 17) as u64 ^ salt).wrapping_mul(2654435761) % 1000;
            x as f64 / 500.0 - 1.0
        })
    }

    #[test]
    fn matmul_variants_agree_with_naive() {
        let a = sample(3, 5, 1);
        let b = sample(5, 4, 2);
        let expected = naive(&a, &b);
        assert!(matmul(&a, &b).unwrap().max_abs_diff(&expected) < 1e-12);
        assert!(matmul_tn(&a.transpose(), &b).unwrap().max_abs_diff(&expected) < 1e-12);
        assert!(matmul_nt(&a, &b.transpose()).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        assert!(matmul(&sample(2, 3, 0), &sample(2, 3, 0)).is_err());
        assert!(DenseMatrix::<f64>::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn gather_and_vstack() {
        let a = sample(2, 4, 3);
        let g = a.gather_columns(&[3, 0]);
        assert_eq!(g.column(0), a.column(3));
        assert_eq!(g.column(1), a.column(0));
        let s = a.vstack(&a).unwrap();
        assert_eq!(s.shape(), (4, 4));
        assert_eq!(s.row_range(2, 4), a);
    }

    #[test]
    fn argmax_prefers_lowest_row_on_ties() {
        let m = DenseMatrix::from_vec(2, 3, vec![1.0, 0.0, 2.0, 1.0, 3.0, 1.0]).unwrap();
        assert_eq!(m.argmax_columns(), vec![0, 1, 0]);
    }
}
