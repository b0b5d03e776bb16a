//! Node relaxation for the continuous solver: minimize `sum_k 1/g_k` with
//! `g_k = Tr(H_k W)` over the unit-diagonal PSD cone intersected with the
//! sector halfspaces of a phase box, returning a dual-certified lower bound
//! and the lifted matrix for rounding.
//!
//! The auxiliary epigraph variables are eliminated analytically (the 2x2
//! Schur blocks are active at any optimum, giving `t_k = 1/g_k`), which turns
//! the node subproblem into a smooth convex program over one Hermitian block.
//! That program is solved by a log-barrier path-following method directly on
//! the complex Hermitian cone, parameterizing the strictly-lower off-diagonal
//! entries since the diagonal is pinned at one.
//!
//! Every outer iteration converts the (approximately) centered iterate into a
//! feasible point of the Lagrangian dual
//!
//! ```text
//! maximize  sum_m y_m + sum_n mu_n c_n + sum_k 2 sqrt(beta_k)
//! s.t.      Z = -sum_k beta_k H_k - sum_n mu_n Q_n - Diag(y) >= 0,
//!           mu >= 0, beta >= 0,
//! ```
//!
//! whose value lower-bounds the relaxation optimum by weak duality. The
//! centering residual is absorbed into the diagonal multipliers through a
//! Cholesky-certified eigenvalue shift, so the reported bound is valid at any
//! iterate, not only at exact centers.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ChannelSet, ModelError};
use crate::numerics::ComplexMatrix;

/// Boxes are folded onto fixed coordinates below this width (the anchor
/// interval of the continuous solver is an exact point, so folding is exact).
const FOLD_WIDTH: f64 = 1e-9;

/// Intervals narrower than this are widened symmetrically before solving;
/// enlarging a box only lowers its bound, so this is sound, and it keeps the
/// sector slack away from the numerical floor.
const MIN_WIDTH: f64 = 1e-4;

/// Gains below this floor are excluded from certification.
const GAIN_FLOOR: f64 = 1e-10;

/// Default relative duality-gap tolerance.
pub const DEFAULT_SDP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("phase interval {index} has width {width} > pi; split it before solving")]
    WidthExceedsPi { index: usize, width: f64 },
    #[error("invalid phase box: {0}")]
    InvalidBox(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Axis-aligned box of phase intervals, one per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PhaseBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SdpError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SdpError::InvalidBox(format!(
                "bound lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (n, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(SdpError::InvalidBox(format!(
                    "interval {n} is [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, n: usize) -> f64 {
        self.hi[n] - self.lo[n]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Clamps `x` into interval `n`.
    pub fn clamp(&self, n: usize, x: f64) -> f64 {
        x.clamp(self.lo[n], self.hi[n])
    }
}

/// Halfspace of the convex hull of a circular sector:
/// `Re{ w e^{-j phi_mid} } >= cos(width / 2)` contains `e^{j theta}` for all
/// `theta` in `[lo, hi]`. Requires width at most pi.
pub fn sector_constraint(lo: f64, hi: f64) -> Result<(f64, f64), SdpError> {
    let width = hi - lo;
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&width) {
        return Err(SdpError::WidthExceedsPi { index: 0, width });
    }
    Ok((0.5 * (lo + hi), (0.5 * width).cos()))
}

/// Exact Schur-complement test of the 2x2 block `[[t, 1], [1, g]] >= 0`.
pub fn schur_snr_constraint(t: f64, g: f64) -> bool {
    t >= 0.0 && g >= 0.0 && t * g >= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Result of one node relaxation.
#[derive(Debug, Clone)]
pub struct SdpOutcome {
    /// Lifted (N+1)x(N+1) Hermitian matrix; row/column 0 is the anchor.
    pub lifted: ComplexMatrix,
    pub primal_value: f64,
    pub dual_lower_bound: f64,
    pub status: SdpStatus,
}

/// Folded node subproblem: fixed coordinates are absorbed into the anchor
/// entry of the effective channels, so the lifted block only spans the free
/// coordinates plus the anchor.
struct Folded {
    dim: usize,
    /// Effective channels, entry 0 carrying the fixed-coordinate contribution.
    hhat: Vec<Vec<Complex64>>,
    /// Rank-one matrices `hhat hhat^H`.
    hmat: Vec<ComplexMatrix>,
    /// Sector data per free coordinate (matrix row 1..dim).
    phi: Vec<f64>,
    c: Vec<f64>,
    /// Original antenna index per free coordinate.
    free: Vec<usize>,
    /// (antenna index, fixed phase) pairs.
    fixed: Vec<(usize, f64)>,
}

fn fold(ch: &ChannelSet, bx: &PhaseBox) -> Result<Folded, SdpError> {
    let n = ch.num_antennas();
    if bx.dim() != n {
        return Err(SdpError::InvalidBox(format!(
            "box has {} intervals for {} antennas",
            bx.dim(),
            n
        )));
    }
    let mut free = Vec::new();
    let mut fixed = Vec::new();
    let mut phi = Vec::new();
    let mut c = Vec::new();
    for i in 0..n {
        let width = bx.width(i);
        if width > std::f64::consts::PI + 1e-12 {
            return Err(SdpError::WidthExceedsPi { index: i, width });
        }
        if width <= FOLD_WIDTH {
            fixed.push((i, 0.5 * (bx.lo[i] + bx.hi[i])));
        } else {
            let mid = 0.5 * (bx.lo[i] + bx.hi[i]);
            let w = width.max(MIN_WIDTH).min(std::f64::consts::PI);
            let (p, r) = sector_constraint(mid - 0.5 * w, mid + 0.5 * w)?;
            free.push(i);
            phi.push(p);
            c.push(r);
        }
    }
    let dim = free.len() + 1;
    let hhat: Vec<Vec<Complex64>> = ch
        .channels()
        .iter()
        .map(|h| {
            let mut v = vec![Complex64::ZERO; dim];
            v[0] = fixed
                .iter()
                .map(|(i, theta)| h[*i] * Complex64::cis(-theta))
                .sum();
            for (j, i) in free.iter().enumerate() {
                v[j + 1] = h[*i];
            }
            v
        })
        .collect();
    let hmat = hhat
        .iter()
        .map(|v| {
            let mut m = ComplexMatrix::zeros(dim, dim);
            for p in 0..dim {
                for q in 0..dim {
                    m[(p, q)] = v[p] * v[q].conj();
                }
            }
            m
        })
        .collect();
    Ok(Folded {
        dim,
        hhat,
        hmat,
        phi,
        c,
        free,
        fixed,
    })
}

/// Cholesky factor (lower) of a Hermitian matrix, or None if not positive
/// definite.
fn cholesky(w: &ComplexMatrix) -> Option<Vec<Complex64>> {
    let n = w.rows();
    let mut l = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = w[(i, j)];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.re.is_nan() {
                    return None;
                }
                l[i * n + i] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn chol_log_det(l: &[Complex64], n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[i * n + i].re.ln()).sum::<f64>()
}

/// Hermitian inverse from a Cholesky factor by column solves.
fn chol_inverse(l: &[Complex64], n: usize) -> ComplexMatrix {
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut col = vec![Complex64::ZERO; n];
    for c in 0..n {
        for (i, x) in col.iter_mut().enumerate() {
            *x = if i == c { Complex64::ONE } else { Complex64::ZERO };
        }
        // Forward solve L y = e_c.
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l[i * n + k] * col[k];
            }
            col[i] = v / l[i * n + i];
        }
        // Backward solve L^H x = y.
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in (i + 1)..n {
                v -= l[k * n + i].conj() * col[k];
            }
            col[i] = v / l[i * n + i];
        }
        for i in 0..n {
            inv[(i, c)] = col[i];
        }
    }
    // Symmetrize rounding noise.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (inv[(i, j)] + inv[(j, i)].conj());
            inv[(i, j)] = avg;
            inv[(j, i)] = avg.conj();
        }
        inv[(i, i)] = Complex64::new(inv[(i, i)].re, 0.0);
    }
    inv
}

/// Dense SPD solve via real Cholesky; `a` is destroyed. Returns None if the
/// matrix is not positive definite even after a small ridge.
fn solve_spd(a: &mut [f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    for attempt in 0..3 {
        let mut m = a.to_vec();
        if attempt > 0 {
            let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
            let ridge = scale.max(1.0) * 1e-12 * 10f64.powi(3 * attempt);
            for i in 0..n {
                m[i * n + i] += ridge;
            }
        }
        if let Some(sol) = try_chol_solve(&mut m, n, rhs) {
            return Some(sol);
        }
    }
    None
}

fn try_chol_solve(m: &mut [f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i * n + j];
            for k in 0..j {
                sum -= m[i * n + k] * m[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || sum.is_nan() {
                    return None;
                }
                m[i * n + i] = sum.sqrt();
            } else {
                m[i * n + j] = sum / m[j * n + j];
            }
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] = x[i] - m[i * n + k] * x[k];
        }
        x[i] /= m[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] = x[i] - m[k * n + i] * x[k];
        }
        x[i] /= m[i * n + i];
    }
    Some(x)
}

/// Barrier solver state over the strictly-lower off-diagonal entries.
struct Barrier<'a> {
    p: &'a Folded,
    /// Variable index -> (row, col); each pair owns a (re, im) slot.
    pairs: Vec<(usize, usize)>,
}

struct Iterate {
    w: ComplexMatrix,
    w_inv: ComplexMatrix,
    log_det: f64,
    gains: Vec<f64>,
    slacks: Vec<f64>,
}

impl<'a> Barrier<'a> {
    fn new(p: &'a Folded) -> Self {
        let mut pairs = Vec::new();
        for row in 1..p.dim {
            for col in 0..row {
                pairs.push((row, col));
            }
        }
        Self { p, pairs }
    }

    fn num_vars(&self) -> usize {
        2 * self.pairs.len()
    }

    fn matrix_from(&self, x: &[f64]) -> ComplexMatrix {
        let mut w = ComplexMatrix::identity(self.p.dim);
        for (idx, (row, col)) in self.pairs.iter().enumerate() {
            let z = Complex64::new(x[2 * idx], x[2 * idx + 1]);
            w[(*row, *col)] = z;
            w[(*col, *row)] = z.conj();
        }
        w
    }

    /// Validates strict feasibility and caches the per-iterate quantities.
    fn evaluate(&self, x: &[f64]) -> Option<Iterate> {
        let w = self.matrix_from(x);
        let l = cholesky(&w)?;
        let log_det = chol_log_det(&l, self.p.dim);
        let w_inv = chol_inverse(&l, self.p.dim);
        let gains: Vec<f64> = self
            .p
            .hhat
            .iter()
            .map(|h| {
                let wv = w.mul_vec(h).expect("dimensions agree");
                h.iter()
                    .zip(&wv)
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum::<f64>()
            })
            .collect();
        if gains.iter().any(|g| !(*g > 0.0)) {
            return None;
        }
        let slacks: Vec<f64> = (0..self.p.phi.len())
            .map(|i| {
                let z = w[(i + 1, 0)];
                z.re * self.p.phi[i].cos() + z.im * self.p.phi[i].sin() - self.p.c[i]
            })
            .collect();
        if slacks.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        Some(Iterate {
            w,
            w_inv,
            log_det,
            gains,
            slacks,
        })
    }

    fn barrier_value(&self, it: &Iterate, t: f64) -> f64 {
        let f: f64 = it.gains.iter().map(|g| 1.0 / g.max(GAIN_FLOOR)).sum();
        t * f - it.log_det - it.slacks.iter().map(|s| s.ln()).sum::<f64>()
    }

    /// Gradient matrix of the barrier with respect to W (full Hermitian form):
    /// `-t sum (1/g^2) H_k - W^{-1} - sum (1/s) Q_n`.
    fn gradient_matrix(&self, it: &Iterate, t: f64) -> ComplexMatrix {
        let dim = self.p.dim;
        let mut g = ComplexMatrix::zeros(dim, dim);
        for p in 0..dim {
            for q in 0..dim {
                let mut acc = -it.w_inv[(p, q)];
                for (k, hk) in self.p.hmat.iter().enumerate() {
                    let gk = it.gains[k].max(GAIN_FLOOR);
                    acc -= t / (gk * gk) * hk[(p, q)];
                }
                g[(p, q)] = acc;
            }
        }
        for i in 0..self.p.phi.len() {
            let q = 0.5 * Complex64::cis(self.p.phi[i]);
            // Q_n has entries (n,0) = e^{j phi}/2 and (0,n) = e^{-j phi}/2.
            g[(i + 1, 0)] -= q / it.slacks[i];
            g[(0, i + 1)] -= (q / it.slacks[i]).conj();
        }
        g
    }

    fn gradient_vector(&self, gm: &ComplexMatrix) -> Vec<f64> {
        let mut grad = vec![0.0; self.num_vars()];
        for (idx, (row, col)) in self.pairs.iter().enumerate() {
            let z = gm[(*row, *col)];
            grad[2 * idx] = 2.0 * z.re;
            grad[2 * idx + 1] = 2.0 * z.im;
        }
        grad
    }

    fn hessian(&self, it: &Iterate, t: f64) -> Vec<f64> {
        let nv = self.num_vars();
        let m = &it.w_inv;
        let mut h = vec![0.0; nv * nv];

        // log-det part: Tr(W^-1 B_i W^-1 B_j) with sparse basis matrices.
        let units = [Complex64::ONE, Complex64::I];
        for i in 0..nv {
            let (pi, qi) = self.pairs[i / 2];
            let zi = units[i % 2];
            for j in i..nv {
                let (pj, qj) = self.pairs[j / 2];
                let zj = units[j % 2];
                let t1 = m[(qj, pi)] * m[(qi, pj)];
                let t2 = m[(pj, pi)] * m[(qi, qj)];
                let t3 = m[(qj, qi)] * m[(pi, pj)];
                let t4 = m[(pj, qi)] * m[(pi, qj)];
                let val = (zi * zj * t1
                    + zi * zj.conj() * t2
                    + zi.conj() * zj * t3
                    + zi.conj() * zj.conj() * t4)
                    .re;
                h[i * nv + j] += val;
                h[j * nv + i] = h[i * nv + j];
            }
        }

        // Objective part: sum_k (2t/g^3) a_k a_k^T with a_k,i = Tr(H_k B_i).
        let mut a = vec![0.0; nv];
        for (k, hk) in self.p.hmat.iter().enumerate() {
            for (idx, (row, col)) in self.pairs.iter().enumerate() {
                let z = hk[(*row, *col)];
                a[2 * idx] = 2.0 * z.re;
                a[2 * idx + 1] = 2.0 * z.im;
            }
            let gk = it.gains[k].max(GAIN_FLOOR);
            let coeff = 2.0 * t / (gk * gk * gk);
            for i in 0..nv {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..nv {
                    h[i * nv + j] += coeff * a[i] * a[j];
                }
            }
        }

        // Sector part: (1/s^2) q q^T, q sparse over the (i+1, 0) pair.
        for i in 0..self.p.phi.len() {
            let var = self
                .pairs
                .iter()
                .position(|(r, c)| *r == i + 1 && *c == 0)
                .expect("column-0 pairs exist");
            let (qre, qim) = (self.p.phi[i].cos(), self.p.phi[i].sin());
            let coeff = 1.0 / (it.slacks[i] * it.slacks[i]);
            let (ire, iim) = (2 * var, 2 * var + 1);
            h[ire * nv + ire] += coeff * qre * qre;
            h[ire * nv + iim] += coeff * qre * qim;
            h[iim * nv + ire] += coeff * qre * qim;
            h[iim * nv + iim] += coeff * qim * qim;
        }
        h
    }

    /// Dual-feasible value constructed from the current iterate. Returns None
    /// when a gain sits on the numerical floor (excluded from certification).
    ///
    /// With `y_m = G_mm/t - sigma` the slack matrix is
    /// `Z = (W^{-1} + offdiag(G))/t + sigma I`, so a certified bound on the
    /// smallest eigenvalue of the first part is all that is needed. At a good
    /// center the off-diagonal residual vanishes and `sigma = 0`.
    fn dual_bound(&self, it: &Iterate, t: f64) -> Option<f64> {
        if it.gains.iter().any(|g| *g < GAIN_FLOOR) {
            return None;
        }
        let dim = self.p.dim;
        let gm = self.gradient_matrix(it, t);
        let mut z0 = ComplexMatrix::zeros(dim, dim);
        let mut scale = 0.0f64;
        for p in 0..dim {
            for q in 0..dim {
                z0[(p, q)] = if p == q {
                    Complex64::new(it.w_inv[(p, q)].re / t, 0.0)
                } else {
                    (it.w_inv[(p, q)] + gm[(p, q)]) / t
                };
                scale = scale.max(z0[(p, q)].norm());
            }
        }
        // Certified shift: grow sigma until Z0 + sigma I admits a Cholesky
        // factor; the extra rounding margin keeps the certificate sound.
        let rounding = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        let mut sigma = 0.0f64;
        let mut shifted = z0.clone();
        while cholesky(&shifted).is_none() {
            sigma = if sigma == 0.0 { rounding } else { sigma * 4.0 };
            if sigma > 1e6 * scale.max(1.0) {
                return None;
            }
            shifted = z0.clone();
            for p in 0..dim {
                shifted[(p, p)] += Complex64::new(sigma, 0.0);
            }
        }
        let sigma = sigma + rounding;

        let y_sum: f64 = (0..dim).map(|m| gm[(m, m)].re / t - sigma).sum();
        let mu_term: f64 = self
            .p
            .c
            .iter()
            .zip(&it.slacks)
            .map(|(c, s)| c / (t * s))
            .sum();
        let beta_term: f64 = it.gains.iter().map(|g| 2.0 / g).sum();
        Some(y_sum + mu_term + beta_term)
    }
}

/// Deterministic strictly feasible start: the smoothed rank-one matrix
/// `v v^H + (1 - rho^2) diag(0, 1, .., 1)` with `v = (1, rho e^{j phi})` and
/// `rho` halfway between the largest sector bound and one.
fn initial_point(p: &Folded) -> Vec<f64> {
    let c_max = p.c.iter().cloned().fold(0.0, f64::max);
    let rho = 0.5 * (1.0 + c_max);
    let dim = p.dim;
    let mut v = vec![Complex64::ONE; dim];
    for i in 1..dim {
        v[i] = rho * Complex64::cis(p.phi[i - 1]);
    }
    let mut x = Vec::with_capacity(dim * (dim - 1));
    for row in 1..dim {
        for col in 0..row {
            let z = v[row] * v[col].conj();
            x.push(z.re);
            x.push(z.im);
        }
    }
    x
}

/// Expands a folded lifted matrix back to the full (N+1)-dimensional anchor
/// indexing: fixed coordinates couple to the anchor column exactly.
fn expand_lifted(p: &Folded, w: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut t_rows: Vec<(usize, Complex64)> = vec![(0, Complex64::ONE); n + 1];
    for (j, i) in p.free.iter().enumerate() {
        t_rows[i + 1] = (j + 1, Complex64::ONE);
    }
    for (i, theta) in &p.fixed {
        t_rows[i + 1] = (0, Complex64::cis(*theta));
    }
    let mut full = ComplexMatrix::zeros(n + 1, n + 1);
    for u in 0..=n {
        let (a, za) = t_rows[u];
        for v in 0..=n {
            let (b, zb) = t_rows[v];
            full[(u, v)] = za * w[(a, b)] * zb.conj();
        }
    }
    full
}

/// Solves the node relaxation over a phase box to relative tolerance `tol`,
/// returning the lifted matrix, its objective value, and a dual-certified
/// lower bound valid for every unit-modulus beamformer with phases inside
/// the box.
pub fn solve_node(ch: &ChannelSet, bx: &PhaseBox, tol: f64) -> Result<SdpOutcome, SdpError> {
    let n = ch.num_antennas();
    let folded = fold(ch, bx)?;
    let tol = if tol > 0.0 { tol } else { DEFAULT_SDP_TOL };

    // A user orthogonal to the whole box can never be served: the objective
    // is identically infinite there and the bound may say so.
    if folded.hhat.iter().any(|h| {
        h.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-300
    }) {
        let w = rank_one_from_phases(&folded, &bx.midpoint());
        return Ok(SdpOutcome {
            lifted: expand_lifted(&folded, &w, n),
            primal_value: f64::INFINITY,
            dual_lower_bound: f64::INFINITY,
            status: SdpStatus::Optimal,
        });
    }

    // Point box: the feasible set is one matrix.
    if folded.dim == 1 {
        let w = ComplexMatrix::identity(1);
        let f: f64 = folded
            .hhat
            .iter()
            .map(|h| 1.0 / h[0].norm_sqr())
            .sum();
        return Ok(SdpOutcome {
            lifted: expand_lifted(&folded, &w, n),
            primal_value: f,
            dual_lower_bound: f,
            status: SdpStatus::Optimal,
        });
    }

    let barrier = Barrier::new(&folded);
    let mut x = initial_point(&folded);
    let mut it = barrier
        .evaluate(&x)
        .expect("constructed start is strictly feasible");

    let mut t = 1.0f64;
    let mut best_dual = f64::NEG_INFINITY;
    let mut converged = false;
    // Once the iterate can no longer track the central path (the Newton system
    // conditioning grows like t^2), certificates only get worse; a few
    // consecutive degradations end the climb.
    let mut degradations = 0u32;

    for _ in 0..60 {
        // Center at the current t. A rejected step at a tiny decrement means
        // the iterate is converged to the precision the barrier value allows
        // (its ULP grows with t), not a failure.
        let mut hard_stall = false;
        for _ in 0..100 {
            let gm = barrier.gradient_matrix(&it, t);
            let grad = barrier.gradient_vector(&gm);
            let mut hess = barrier.hessian(&it, t);
            let nv = barrier.num_vars();
            let step = match solve_spd(&mut hess, nv, &grad) {
                Some(mut s) => {
                    for v in &mut s {
                        *v = -*v;
                    }
                    s
                }
                None => {
                    hard_stall = true;
                    break;
                }
            };
            let decrement_sq: f64 = grad.iter().zip(&step).map(|(g, s)| -g * s).sum();
            if decrement_sq <= 1e-18 {
                break;
            }
            let psi0 = barrier.barrier_value(&it, t);
            let mut alpha = 1.0f64;
            let mut accepted = false;
            while alpha > 1e-18 {
                let xt: Vec<f64> = x
                    .iter()
                    .zip(&step)
                    .map(|(xi, si)| xi + alpha * si)
                    .collect();
                if let Some(cand) = barrier.evaluate(&xt) {
                    let psi = barrier.barrier_value(&cand, t);
                    if psi <= psi0 - 0.25 * alpha * decrement_sq {
                        x = xt;
                        it = cand;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                hard_stall = decrement_sq > 1e-8;
                break;
            }
        }

        let dual_now = barrier.dual_bound(&it, t);
        match dual_now {
            Some(dual) if dual > best_dual => {
                best_dual = dual;
                degradations = 0;
            }
            _ => degradations += 1,
        }
        let primal: f64 = it.gains.iter().map(|g| 1.0 / g).sum();
        if std::env::var_os("MAXMIN_BEAM_SDP_TRACE").is_some() {
            eprintln!(
                "t={t:9.2e} primal={primal:.12} dual_now={:?} best={best_dual:.12} stall={hard_stall}",
                dual_now
            );
        }
        if primal - best_dual <= tol * primal.abs().max(1.0) {
            converged = true;
            break;
        }
        if hard_stall || degradations >= 3 || t >= 1e17 {
            break;
        }
        t *= 5.0;
    }

    let primal: f64 = it.gains.iter().map(|g| 1.0 / g).sum();
    // A valid lower bound never exceeds any primal-feasible value.
    let dual = best_dual.min(primal).max(0.0);
    let status = if converged {
        SdpStatus::Optimal
    } else {
        SdpStatus::MaxIterations
    };
    Ok(SdpOutcome {
        lifted: expand_lifted(&folded, &it.w, n),
        primal_value: primal,
        dual_lower_bound: if dual.is_finite() { dual } else { 0.0 },
        status,
    })
}

/// Rank-one folded matrix from full phases (used for degenerate outcomes).
fn rank_one_from_phases(p: &Folded, phases: &[f64]) -> ComplexMatrix {
    let dim = p.dim;
    let mut v = vec![Complex64::ONE; dim];
    for (j, i) in p.free.iter().enumerate() {
        v[j + 1] = Complex64::cis(phases[*i]);
    }
    let mut w = ComplexMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            w[(a, b)] = v[a] * v[b].conj();
        }
    }
    w
}
