use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Same buffer viewed with a different row length.
    pub fn reshaped(self, rows: usize, cols: usize) -> Self {
        assert_eq!(rows * cols, self.data.len(), "reshape changes element count");
        Matrix {
            rows,
            cols,
            data: self.data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// `out[r][o] = sum_i x[r][i] * w[o][i]` over raw slices.
pub(crate) fn mul_transposed(x: &[f64], rows: usize, inner: usize, w: &[f64], out_cols: usize, out: &mut [f64]) {
    debug_assert_eq!(x.len(), rows * inner);
    debug_assert_eq!(w.len(), out_cols * inner);
    debug_assert_eq!(out.len(), rows * out_cols);
    for r in 0..rows {
        let xr = &x[r * inner..(r + 1) * inner];
        let or = &mut out[r * out_cols..(r + 1) * out_cols];
        for (o, slot) in or.iter_mut().enumerate() {
            let wr = &w[o * inner..(o + 1) * inner];
            *slot = xr.iter().zip(wr).map(|(a, b)| a * b).sum();
        }
    }
}

/// `out[r][c] = sum_k a[r][k] * b[k][c]`.
pub(crate) fn mul(a: &[f64], rows: usize, inner: usize, b: &[f64], cols: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * inner);
    debug_assert_eq!(b.len(), inner * cols);
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..rows {
        let or = &mut out[r * cols..(r + 1) * cols];
        for k in 0..inner {
            let av = a[r * inner + k];
            if av == 0.0 {
                continue;
            }
            let br = &b[k * cols..(k + 1) * cols];
            for (o, bv) in or.iter_mut().zip(br) {
                *o += av * bv;
            }
        }
    }
}

/// `acc[i][j] += sum_r a[r][i] * b[r][j]` (accumulates `aᵀ·b`).
pub(crate) fn add_transposed_mul(a: &[f64], rows: usize, a_cols: usize, b: &[f64], b_cols: usize, acc: &mut [f64]) {
    debug_assert_eq!(acc.len(), a_cols * b_cols);
    for r in 0..rows {
        let ar = &a[r * a_cols..(r + 1) * a_cols];
        let br = &b[r * b_cols..(r + 1) * b_cols];
        for (i, av) in ar.iter().enumerate() {
            if *av == 0.0 {
                continue;
            }
            let accr = &mut acc[i * b_cols..(i + 1) * b_cols];
            for (o, bv) in accr.iter_mut().zip(br) {
                *o += av * bv;
            }
        }
    }
}
