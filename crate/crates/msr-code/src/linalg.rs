//! Dense matrices over GF(2^w) with Gaussian elimination.
//!
//! Everything is exact arithmetic, so pivoting is just "first nonzero in the
//! column" and row swaps never change a determinant (characteristic 2).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};

/// Row-major matrix of field elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> FieldElement {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: FieldElement) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[FieldElement] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [FieldElement] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, f: &Field, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![0; self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc: FieldElement = 0;
            for (a, b) in self.row(i).iter().zip(v) {
                acc = f.add(acc, f.mul(*a, *b));
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, f: &Field, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "matrix product",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Determinant by elimination; zero means singular.
    pub fn determinant(&self, f: &Field) -> Result<FieldElement> {
        let n = self.square()?;
        let mut a = self.clone();
        let mut det: FieldElement = 1;
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| a.get(r, col) != 0) else {
                return Ok(0);
            };
            a.swap_rows(col, pivot);
            let p = a.get(col, col);
            det = f.mul(det, p);
            let pinv = f.inv(p)?;
            for row in col + 1..n {
                let factor = f.mul(a.get(row, col), pinv);
                if factor == 0 {
                    continue;
                }
                for j in col..n {
                    let v = f.add(a.get(row, j), f.mul(factor, a.get(col, j)));
                    a.set(row, j, v);
                }
            }
        }
        Ok(det)
    }

    pub fn is_invertible(&self, f: &Field) -> bool {
        matches!(self.determinant(f), Ok(d) if d != 0)
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self, f: &Field) -> Result<Matrix> {
        let n = self.square()?;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a.get(r, col) != 0)
                .ok_or(Error::SingularSystem)?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let pinv = f.inv(a.get(col, col))?;
            scale_row(a.row_mut(col), f, pinv);
            scale_row(inv.row_mut(col), f, pinv);
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a.get(row, col);
                if factor == 0 {
                    continue;
                }
                axpy_rows(&mut a, row, col, f, factor);
                axpy_rows(&mut inv, row, col, f, factor);
            }
        }
        Ok(inv)
    }

    /// Solves `self * x = rhs` for square invertible `self`.
    pub fn solve(&self, f: &Field, rhs: &[FieldElement]) -> Result<Vec<FieldElement>> {
        let n = self.square()?;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                what: "linear system right-hand side",
                expected: n,
                got: rhs.len(),
            });
        }
        let mut a = self.clone();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a.get(r, col) != 0)
                .ok_or(Error::SingularSystem)?;
            a.swap_rows(col, pivot);
            b.swap(col, pivot);
            let pinv = f.inv(a.get(col, col))?;
            scale_row(a.row_mut(col), f, pinv);
            b[col] = f.mul(b[col], pinv);
            for row in col + 1..n {
                let factor = a.get(row, col);
                if factor == 0 {
                    continue;
                }
                axpy_rows(&mut a, row, col, f, factor);
                b[row] = f.add(b[row], f.mul(factor, b[col]));
            }
        }
        for col in (0..n).rev() {
            for row in 0..col {
                let factor = a.get(row, col);
                if factor != 0 {
                    b[row] = f.add(b[row], f.mul(factor, b[col]));
                }
            }
        }
        Ok(b)
    }

    fn square(&self) -> Result<usize> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                what: "square matrix",
                expected: self.rows,
                got: self.cols,
            });
        }
        Ok(self.rows)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

fn scale_row(row: &mut [FieldElement], f: &Field, factor: FieldElement) {
    for v in row {
        *v = f.mul(*v, factor);
    }
}

/// row_a += factor * row_b.
fn axpy_rows(m: &mut Matrix, a: usize, b: usize, f: &Field, factor: FieldElement) {
    for j in 0..m.cols {
        let v = f.add(m.get(a, j), f.mul(factor, m.get(b, j)));
        m.set(a, j, v);
    }
}
