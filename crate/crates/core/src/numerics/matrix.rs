use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use super::LinalgError;

/// Dense row-major complex matrix.
///
/// Intended for the small operators that show up here (impurity blocks,
/// resolvents, 2×2 coins), so everything is stored contiguously and no
/// attempt is made at blocking or sparsity.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(LinalgError::LengthMismatch {
                    expected: n_cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        CMatrix::new(n_rows, n_cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
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

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.zip_with(other, "add", |x, y| x + y)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.zip_with(other, "sub", |x, y| x - y)
    }

    fn zip_with(
        &self,
        other: &CMatrix,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<CMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        })
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: (self.rows, self.cols),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex64::new(0.0, 0.0), |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`; shapes must agree.
    pub fn max_abs_diff(&self, other: &CMatrix) -> Result<f64, LinalgError> {
        Ok(self.sub(other)?.max_abs())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Exact (double precision) matrix product.
pub fn mat_mul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "mat_mul",
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    let mut out = CMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `A^k` by repeated squaring. `A^0` is the identity, also for the zero matrix.
pub fn mat_power(a: &CMatrix, k: u32) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let mut result = CMatrix::identity(a.rows);
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base)?;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(matches!(
            CMatrix::new(2, 2, vec![c(0.0, 0.0); 3]),
            Err(LinalgError::LengthMismatch { .. })
        ));
        assert!(matches!(
            CMatrix::new(0, 2, vec![]),
            Err(LinalgError::EmptyShape { .. })
        ));
        assert!(matches!(
            CMatrix::new(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn identity_times_x_is_x() {
        let x = CMatrix::from_rows(&[[c(1.0, 2.0), c(-3.0, 0.5)], [c(0.0, -1.0), c(4.0, 4.0)]])
            .unwrap();
        assert_eq!(mat_mul(&CMatrix::identity(2), &x).unwrap(), x);
        assert_eq!(mat_mul(&x, &CMatrix::identity(2)).unwrap(), x);
    }

    #[test]
    fn times_zero_is_zero() {
        let x = CMatrix::from_rows(&[[c(1.0, 2.0), c(-3.0, 0.5)], [c(0.0, -1.0), c(4.0, 4.0)]])
            .unwrap();
        let z = CMatrix::zeros(2, 2);
        assert_eq!(mat_mul(&x, &z).unwrap(), z);
    }

    #[test]
    fn hadamard_p_times_q() {
        // P = |L><L|C, Q = |R><R|C with C the Hadamard coin.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = CMatrix::from_rows(&[[c(s, 0.0), c(s, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let q = CMatrix::from_rows(&[[c(0.0, 0.0), c(0.0, 0.0)], [c(s, 0.0), c(-s, 0.0)]]).unwrap();
        let pq = mat_mul(&p, &q).unwrap();
        let expected =
            CMatrix::from_rows(&[[c(0.5, 0.0), c(-0.5, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        assert!(pq.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn mul_dimension_mismatch() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 3);
        assert!(matches!(
            mat_mul(&a, &b),
            Err(LinalgError::DimensionMismatch { op: "mat_mul", .. })
        ));
    }

    #[test]
    fn power_zero_is_identity_even_for_zero_matrix() {
        assert_eq!(
            mat_power(&CMatrix::zeros(3, 3), 0).unwrap(),
            CMatrix::identity(3)
        );
        let a =
            CMatrix::from_rows(&[[c(0.3, 0.1), c(0.0, 1.0)], [c(2.0, 0.0), c(-1.0, 0.0)]]).unwrap();
        assert_eq!(mat_power(&a, 1).unwrap(), a);
    }

    #[test]
    fn power_of_non_square_fails() {
        assert!(matches!(
            mat_power(&CMatrix::zeros(2, 3), 2),
            Err(LinalgError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn adjoint_and_mul_vec() {
        let a =
            CMatrix::from_rows(&[[c(1.0, 1.0), c(2.0, 0.0)], [c(0.0, -1.0), c(3.0, 2.0)]]).unwrap();
        let ah = a.adjoint();
        assert_eq!(ah[(0, 1)], c(0.0, 1.0));
        assert_eq!(ah[(1, 1)], c(3.0, -2.0));
        let v = a.mul_vec(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(v, vec![c(1.0, 3.0), c(-2.0, 2.0)]);
    }
}
