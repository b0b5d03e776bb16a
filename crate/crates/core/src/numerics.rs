//! Dense complex linear algebra primitives shared by the bounding rules:
//! Hermitian outer products, quadratic forms, and a power-iteration
//! principal-eigenvalue routine for the small PSD matrices this crate works with.

use num_complex::Complex64;
use thiserror::Error;

/// Entrywise tolerance for the Hermitian-symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative tolerance for [`max_eigenvalue`].
pub const EIGEN_TOL: f64 = 1e-12;

/// Iteration cap for the power method.
pub const EIGEN_MAX_ITER: usize = 10_000;

/// Complex column vector; entries are dimensionless channel/beam coefficients.
pub type ComplexVector = Vec<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty vector")]
    EmptyVector,
    #[error("matrix is not Hermitian within {HERMITIAN_TOL:e}")]
    NotHermitian,
    #[error("power iteration did not converge within {EIGEN_MAX_ITER} iterations (best estimate {best:e})")]
    NoConvergence { best: f64 },
}

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Builds a matrix from row-major entries. Panics if the entry count
    /// does not equal `rows * cols`.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count must equal rows * cols"
        );
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
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

    pub fn is_hermitian(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                if d.norm() > HERMITIAN_TOL {
                    return false;
                }
            }
        }
        true
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Principal submatrix on the index range `lo..hi` (rows and columns).
    pub fn principal_block(&self, lo: usize, hi: usize) -> Self {
        assert!(lo <= hi && hi <= self.rows && self.is_square());
        let n = hi - lo;
        let mut block = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                block[(i, j)] = self[(lo + i, lo + j)];
            }
        }
        block
    }

    /// Matrix-vector product `S v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "matrix is {}x{}, vector has length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Entrywise sum `self + other`, panicking on shape mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn scale(&self, c: f64) -> Self {
        let entries = self.entries.iter().map(|z| z * c).collect();
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Hermitian outer product `h hᴴ`; the result is PSD of rank at most one.
pub fn outer_hermitian(h: &[Complex64]) -> Result<ComplexMatrix, NumericsError> {
    if h.is_empty() {
        return Err(NumericsError::EmptyVector);
    }
    let n = h.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h[i] * h[j].conj();
        }
    }
    Ok(m)
}

/// Entrywise real part; a Hermitian input yields a real symmetric output.
pub fn real_part_matrix(s: &ComplexMatrix) -> ComplexMatrix {
    let entries = s
        .entries
        .iter()
        .map(|z| Complex64::new(z.re, 0.0))
        .collect();
    ComplexMatrix::from_entries(s.rows, s.cols, entries)
}

/// Quadratic form `wᴴ S w` of a Hermitian matrix, returned as a real number.
/// The imaginary residue (rounding-level for Hermitian input) is discarded.
pub fn quadratic_form(w: &[Complex64], s: &ComplexMatrix) -> Result<f64, NumericsError> {
    if !s.is_square() || w.len() != s.cols {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix is {}x{}, vector has length {}",
            s.rows,
            s.cols,
            w.len()
        )));
    }
    if !s.is_hermitian() {
        return Err(NumericsError::NotHermitian);
    }
    let sv = s.mul_vec(w)?;
    let val: Complex64 = w.iter().zip(&sv).map(|(a, b)| a.conj() * b).sum();
    Ok(val.re)
}

/// Principal eigenvalue of a Hermitian PSD matrix by power iteration.
///
/// Starts from the normalized all-ones vector and stops when the Rayleigh
/// quotient stagnates at relative `tol` over consecutive iterations. If the
/// start vector lies in the null space (the image collapses), the iteration
/// restarts from canonical basis vectors, which keeps the routine deterministic.
pub fn max_eigenvalue(s: &ComplexMatrix, tol: f64) -> Result<f64, NumericsError> {
    if !s.is_square() {
        return Err(NumericsError::DimensionMismatch(format!(
            "matrix is {}x{}",
            s.rows, s.cols
        )));
    }
    if !s.is_hermitian() {
        return Err(NumericsError::NotHermitian);
    }
    let n = s.rows();
    if n == 0 {
        return Err(NumericsError::EmptyVector);
    }
    let scale = s.max_abs_entry();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(s[(0, 0)].re);
    }

    let mut start = 0usize; // 0 = all-ones, 1..=n = canonical e_{start-1}
    let mut v: Vec<Complex64> = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let mut rayleigh = 0.0f64;
    let mut stagnant = 0u32;
    for _ in 0..EIGEN_MAX_ITER {
        let mut sv = s.mul_vec(&v).expect("dimensions checked");
        let norm = sv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-14 * scale {
            // Start vector is numerically in the null space; restart.
            start += 1;
            if start > n {
                // Every canonical direction maps to zero: matrix is zero within tolerance.
                return Ok(0.0);
            }
            v = vec![Complex64::ZERO; n];
            v[start - 1] = Complex64::ONE;
            rayleigh = 0.0;
            stagnant = 0;
            continue;
        }
        for z in sv.iter_mut() {
            *z /= norm;
        }
        let sv2 = s.mul_vec(&sv).expect("dimensions checked");
        let rq: Complex64 = sv.iter().zip(&sv2).map(|(a, b)| a.conj() * b).sum();
        let rq = rq.re;
        // The Rayleigh quotient of a PSD matrix is non-decreasing along the
        // power sequence, so a plateau over several iterations means convergence.
        if (rq - rayleigh).abs() <= tol * rq.abs().max(f64::MIN_POSITIVE) {
            stagnant += 1;
            if stagnant >= 3 {
                return Ok(rq);
            }
        } else {
            stagnant = 0;
        }
        rayleigh = rq;
        v = sv;
    }
    Err(NumericsError::NoConvergence { best: rayleigh })
}
