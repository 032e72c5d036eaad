use crate::error::{Error, Result};
use crate::kernel::dense::DenseMatrix;
use crate::scalar::Scalar;

/// Compressed sparse row matrix.
///
/// Column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from raw CSR arrays, validating the structural invariants.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 {
            return Err(Error::shape("SparseMatrix::from_csr", "bad offsets array"));
        }
        if *offsets.last().unwrap() != indices.len() || indices.len() != values.len() {
            return Err(Error::shape("SparseMatrix::from_csr", "offsets/indices/values disagree"));
        }
        for r in 0..rows {
            if offsets[r] > offsets[r + 1] {
                return Err(Error::shape("SparseMatrix::from_csr", "offsets decrease"));
            }
            let row = &indices[offsets[r]..offsets[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::shape("SparseMatrix::from_csr", format!("row {r} not strictly sorted")));
            }
            if let Some(&c) = row.last() {
                if c >= cols {
                    return Err(Error::shape("SparseMatrix::from_csr", format!("column {c} >= {cols}")));
                }
            }
        }
        Ok(Self { rows, cols, offsets, indices, values })
    }

    /// CSR arrays are trusted to be valid.
    pub(crate) fn from_csr_unchecked(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(offsets.len(), rows + 1);
        debug_assert_eq!(indices.len(), values.len());
        Self { rows, cols, offsets, indices, values }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(Error::shape(
                    "SparseMatrix::from_triplets",
                    format!("({r},{c}) outside {rows}x{cols}"),
                ));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            offsets[r + 1] += 1;
            indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Ok(Self { rows, cols, offsets, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, offsets: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
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
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = cursor[c];
                indices[slot] = r;
                values[slot] = v;
                cursor[c] += 1;
            }
        }
        Self { rows: self.cols, cols: self.rows, offsets, indices, values }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Sparse × dense product `s · b`.
///
/// Cost is `nnz(s) · b.cols()`; each output row accumulates the scaled rows of
/// `b` selected by the corresponding sparse row, in increasing column order.
pub fn spmm<T: Scalar>(s: &SparseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if s.cols() != b.rows() {
        return Err(Error::shape(
            "spmm",
            format!("sparse {}x{} times dense {:?}", s.rows(), s.cols(), b.shape()),
        ));
    }
    let k = b.cols();
    let mut out = DenseMatrix::zeros(s.rows(), k);
    for r in 0..s.rows() {
        let (cols, vals) = s.row(r);
        let out_row = out.row_mut(r);
        for (&c, &v) in cols.iter().zip(vals) {
            for (o, &x) in out_row.iter_mut().zip(b.row(c)) {
                *o += v * x;
            }
        }
    }
    Ok(out)
}

/// Dense × sparse product `b · s`.
///
/// Cost is `b.rows() · (s.rows() + nnz(s))`. This is the first linear map of
/// the adjacency branch: a `d × n` weight times `n × batch` adjacency columns.
pub fn dsmm<T: Scalar>(b: &DenseMatrix<T>, s: &SparseMatrix<T>) -> Result<DenseMatrix<T>> {
    if b.cols() != s.rows() {
        return Err(Error::shape(
            "dsmm",
            format!("dense {:?} times sparse {}x{}", b.shape(), s.rows(), s.cols()),
        ));
    }
    let mut out = DenseMatrix::zeros(b.rows(), s.cols());
    for r in 0..b.rows() {
        let b_row = b.row(r);
        let out_row = out.row_mut(r);
        for (i, &bri) in b_row.iter().enumerate() {
            if bri == T::zero() {
                continue;
            }
            let (cols, vals) = s.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out_row[c] += bri * v;
            }
        }
    }
    Ok(out)
}
