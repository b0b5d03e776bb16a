//! Shared test support: an independent dense Hermitian eigensolver (classical
//! Jacobi) used as the oracle for the power-iteration routine.

use maxmin_beam::numerics::ComplexMatrix;
use num_complex::Complex64;

/// All eigenvalues of a Hermitian matrix by Jacobi rotations, sorted
/// descending. Deliberately independent of the library's power iteration.
///
/// Each step zeroes the largest off-diagonal pivot `A_pq = b e^{i phi}` with
/// the unitary `J = S R`, where `S` rotates column q by `e^{-i phi}` to make
/// the pivot real and `R` is the classic symmetric rotation with
/// `tan(2 theta) = 2b / (A_pp - A_qq)`.
pub fn jacobi_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    assert!(a.is_square());
    let mut m: Vec<Complex64> = (0..n * n).map(|i| a[(i / n, i % n)]).collect();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 || n == 1 {
        return (0..n).map(|i| m[i * n + i].re).collect();
    }
    for _ in 0..100 * n * n {
        let mut p = 0;
        let mut q = 1;
        let mut best = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = m[i * n + j].norm();
                if v > best {
                    best = v;
                    p = i;
                    q = j;
                }
            }
        }
        if best <= 1e-14 * scale {
            break;
        }
        let pivot = m[p * n + q];
        let phase = Complex64::cis(pivot.arg());
        let b = pivot.norm();
        let app = m[p * n + p].re;
        let aqq = m[q * n + q].re;
        let theta = 0.5 * (2.0 * b).atan2(app - aqq);
        let (c, s) = (theta.cos(), theta.sin());

        // M <- M J with J_pp = c, J_pq = -s, J_qp = e^{-i phi} s, J_qq = e^{-i phi} c.
        for i in 0..n {
            let x = m[i * n + p];
            let y = m[i * n + q];
            m[i * n + p] = c * x + s * phase.conj() * y;
            m[i * n + q] = -s * x + c * phase.conj() * y;
        }
        // M <- J^H M.
        for i in 0..n {
            let x = m[p * n + i];
            let y = m[q * n + i];
            m[p * n + i] = c * x + s * phase * y;
            m[q * n + i] = -s * x + c * phase * y;
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}
