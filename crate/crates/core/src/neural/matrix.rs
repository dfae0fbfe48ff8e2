use crate::error::{Error, Result};

/// Row-major batch matrix: one sample per row.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::contract("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Concatenates the columns of two matrices with the same row count.
    pub fn hstack(a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.rows != b.rows {
            return Err(Error::contract(format!(
                "hstack row mismatch: {} vs {}",
                a.rows, b.rows
            )));
        }
        let cols = a.cols + b.cols;
        let mut data = Vec::with_capacity(a.rows * cols);
        for r in 0..a.rows {
            data.extend_from_slice(a.row(r));
            data.extend_from_slice(b.row(r));
        }
        Ok(Matrix {
            rows: a.rows,
            cols,
            data,
        })
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        let cols = end - start;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }
}

/// `out[b, o] = bias[o] + Σ_i x[b, i] · w[o, i]` with `w` stored `out × in`.
pub(crate) fn affine(x: &Matrix, w: &[f64], bias: &[f64], out: &mut Matrix) {
    let (n_in, n_out) = (x.cols, bias.len());
    assert_eq!(w.len(), n_in * n_out);
    assert_eq!((out.rows, out.cols), (x.rows, n_out));
    for b in 0..x.rows {
        out.row_mut(b).copy_from_slice(bias);
    }
    // SAFETY: the strides describe x (rows × n_in), wᵀ (n_in × n_out) and out
    // (rows × n_out) within the bounds asserted above.
    unsafe {
        matrixmultiply::dgemm(
            x.rows,
            n_in,
            n_out,
            1.0,
            x.data.as_ptr(),
            n_in as isize,
            1,
            w.as_ptr(),
            1,
            n_in as isize,
            1.0,
            out.data.as_mut_ptr(),
            n_out as isize,
            1,
        );
    }
}

/// Accumulates `dw[o, i] += Σ_b dz[b, o] · x[b, i]` and `db[o] += Σ_b dz[b, o]`.
pub(crate) fn accumulate_weight_grad(dz: &Matrix, x: &Matrix, dw: &mut [f64], db: &mut [f64]) {
    let (n_in, n_out) = (x.cols, dz.cols);
    assert_eq!(dz.rows, x.rows);
    assert_eq!(dw.len(), n_in * n_out);
    assert_eq!(db.len(), n_out);
    // SAFETY: dzᵀ is n_out × rows, x is rows × n_in, dw is n_out × n_in.
    unsafe {
        matrixmultiply::dgemm(
            n_out,
            x.rows,
            n_in,
            1.0,
            dz.data.as_ptr(),
            1,
            n_out as isize,
            x.data.as_ptr(),
            n_in as isize,
            1,
            1.0,
            dw.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
    for b in 0..dz.rows {
        for (d, g) in db.iter_mut().zip(dz.row(b)) {
            *d += g;
        }
    }
}

/// `dx[b, i] = Σ_o dz[b, o] · w[o, i]`.
pub(crate) fn input_grad(dz: &Matrix, w: &[f64], n_in: usize) -> Matrix {
    let n_out = dz.cols;
    assert_eq!(w.len(), n_in * n_out);
    let mut dx = Matrix::zeros(dz.rows, n_in);
    // SAFETY: dz is rows × n_out, w is n_out × n_in, dx is rows × n_in.
    unsafe {
        matrixmultiply::dgemm(
            dz.rows,
            n_out,
            n_in,
            1.0,
            dz.data.as_ptr(),
            n_out as isize,
            1,
            w.as_ptr(),
            n_in as isize,
            1,
            0.0,
            dx.data.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
    dx
}
