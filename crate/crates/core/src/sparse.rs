//! Compressed sparse row matrices for weight storage.

/// Row-major sparse matrix. Column indices within a row are ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Copy> CsrMatrix<T> {
    pub fn with_capacity(cols: usize, rows_hint: usize, nnz_hint: usize) -> Self {
        let mut indptr = Vec::with_capacity(rows_hint + 1);
        indptr.push(0);
        CsrMatrix {
            rows: 0,
            cols,
            indptr,
            indices: Vec::with_capacity(nnz_hint),
            values: Vec::with_capacity(nnz_hint),
        }
    }

    /// Empties the matrix and sets its column count, keeping allocations.
    pub fn clear(&mut self, cols: usize) {
        self.rows = 0;
        self.cols = cols;
        self.indptr.clear();
        self.indptr.push(0);
        self.indices.clear();
        self.values.clear();
    }

    /// Appends a row; entries must be sorted by column.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, T)>) {
        for (c, v) in entries {
            debug_assert!(c < self.cols);
            self.indices.push(c as u32);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
        self.rows += 1;
    }

    /// Concatenates row blocks built independently (e.g. per thread chunk).
    pub fn vstack(cols: usize, blocks: Vec<CsrMatrix<T>>) -> Self {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let nnz: usize = blocks.iter().map(|b| b.nnz()).sum();
        let mut out = CsrMatrix::with_capacity(cols, rows, nnz);
        for b in blocks {
            let base = out.indices.len();
            out.indices.extend_from_slice(&b.indices);
            out.values.extend_from_slice(&b.values);
            out.indptr.extend(b.indptr[1..].iter().map(|p| p + base));
            out.rows += b.rows;
        }
        out
    }

    /// Builds from (row, col, value) triplets sorted by row then column.
    pub fn from_sorted_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, String> {
        let mut m = CsrMatrix::with_capacity(cols, rows, 0);
        let mut last: Option<(usize, usize)> = None;
        let mut current = 0usize;
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(format!("entry ({r}, {c}) outside {rows}x{cols}"));
            }
            if let Some(prev) = last {
                if (r, c) <= prev {
                    return Err(format!("entry ({r}, {c}) out of order"));
                }
            }
            while current < r {
                m.indptr.push(m.indices.len());
                current += 1;
            }
            m.indices.push(c as u32);
            m.values.push(v);
            last = Some((r, c));
        }
        while current < rows {
            m.indptr.push(m.indices.len());
            current += 1;
        }
        m.rows = rows;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// Column indices and values of row `r`.
    pub fn row_slices(&self, r: usize) -> (&[u32], &[T]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Copy + Into<f64>> CsrMatrix<T> {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.1.into())
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|e| e.1.into()).sum()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            out[c as usize] += v.into();
        }
        out
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for (r, c, v) in self.triplets() {
            d[r * self.cols + c] = v.into();
        }
        d
    }

    /// Rows `range` of `self · rhs` for a small dense row-major `rhs` with `p`
    /// columns, accumulated in f64 and stored as f32. Exact zeros are dropped.
    pub fn matmul_dense_rows(&self, rhs: &[f64], p: usize, range: std::ops::Range<usize>) -> CsrMatrix<f32> {
        let mut out = CsrMatrix::with_capacity(p, range.len(), range.len() * p.min(6));
        self.matmul_dense_rows_into(rhs, p, range, &mut out);
        out
    }

    /// Like [`CsrMatrix::matmul_dense_rows`], but overwrites `out` in place,
    /// reusing its allocation.
    pub fn matmul_dense_rows_into(
        &self,
        rhs: &[f64],
        p: usize,
        range: std::ops::Range<usize>,
        out: &mut CsrMatrix<f32>,
    ) {
        assert_eq!(rhs.len(), self.cols * p, "inner dimensions differ");
        out.clear(p);
        let mut acc = vec![0.0f64; p];
        for r in range {
            let (cols, vals) = self.row_slices(r);
            for (&k, &w) in cols.iter().zip(vals) {
                let w: f64 = w.into();
                let src = &rhs[k as usize * p..(k as usize + 1) * p];
                for (a, &v) in acc.iter_mut().zip(src) {
                    *a += w * v;
                }
            }
            for (c, a) in acc.iter_mut().enumerate() {
                if *a != 0.0 {
                    out.indices.push(c as u32);
                    out.values.push(*a as f32);
                    *a = 0.0;
                }
            }
            out.indptr.push(out.indices.len());
            out.rows += 1;
        }
    }

    /// `self · rhs` accumulated densely per row; exact zeros are dropped.
    pub fn matmul(&self, rhs: &CsrMatrix<f64>) -> CsrMatrix<f64> {
        self.matmul_rows(rhs, 0..self.rows)
    }

    /// Rows `range` of `self · rhs`.
    pub fn matmul_rows(&self, rhs: &CsrMatrix<f64>, range: std::ops::Range<usize>) -> CsrMatrix<f64> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let p = rhs.cols;
        let mut acc = vec![0.0f64; p];
        let mut out = CsrMatrix::with_capacity(p, range.len(), range.len() * p.min(6));
        for r in range {
            for (k, w) in self.row(r) {
                let w: f64 = w.into();
                for (c, v) in rhs.row(k) {
                    acc[c] += w * v;
                }
            }
            out.push_row(
                acc.iter_mut()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, std::mem::take(v))),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_round_trip_and_product() {
        let a = CsrMatrix::from_sorted_triplets(3, 2, [(0, 0, 1.0f32), (1, 0, 0.5), (1, 1, 0.5)]).unwrap();
        assert_eq!(a.row_nnz(2), 0);
        let b = CsrMatrix::from_sorted_triplets(2, 3, [(0, 2, 1.0), (1, 0, 0.25), (1, 1, 0.75)]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.to_dense(), vec![0.0, 0.0, 1.0, 0.125, 0.375, 0.5, 0.0, 0.0, 0.0]);
        let back: Vec<_> = a.triplets().collect();
        assert_eq!(CsrMatrix::from_sorted_triplets(3, 2, back).unwrap(), a);
        assert!(CsrMatrix::from_sorted_triplets(1, 1, [(0, 0, 1.0), (0, 0, 1.0)]).is_err());
    }

    #[test]
    fn stacking() {
        let mut a = CsrMatrix::with_capacity(2, 1, 1);
        a.push_row([(1, 1.0)]);
        let mut b = CsrMatrix::with_capacity(2, 2, 2);
        b.push_row([(0, 2.0)]);
        b.push_row([]);
        let s = CsrMatrix::vstack(2, vec![a, b]);
        assert_eq!(s.rows(), 3);
        assert_eq!(s.to_dense(), vec![0.0, 1.0, 2.0, 0.0, 0.0, 0.0]);
    }
}
