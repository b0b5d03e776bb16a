//! Globally optimal branch-and-bound for binary phases.
//!
//! Nodes fix a sign prefix (first sign pinned to +1, which halves the space
//! without losing any optimum since f(w) = f(-w)). Each node is bounded by
//! the block upper bound on the aggregate quadratic form
//!
//! ```text
//! UB_tot = w_G' R_GG w_G + 2 ||w_G' R_GH||_1 + (N - d) lambda_max(R_HH)
//! ```
//!
//! with `R = sum_k Re{h_k h_k^H}`, which by the arithmetic-harmonic mean
//! inequality gives the objective lower bound `LB = K^2 / UB_tot`.

use num_complex::Complex64;

use crate::ao::{ao_solve, AoConfig};
use crate::error::SolveError;
use crate::model::{
    objective_given_thresholds, Beamformer, Certificate, ChannelSet, ModelError, PhaseConstraint,
    Solution, SolveStatus,
};
use crate::numerics::{max_eigenvalue, outer_hermitian, real_part_matrix, ComplexMatrix, EIGEN_TOL};

/// Pruning guard: a node is discarded when `LB >= f* - PRUNE_EPS`, so float
/// ties between the bound and the incumbent never keep dead subtrees alive.
pub(crate) const PRUNE_EPS: f64 = 1e-12;

/// Partial sign assignment. Signs fix the leading `depth` coordinates in
/// natural order and the first sign is always +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryNode {
    fixed_signs: Vec<i8>,
}

impl BinaryNode {
    pub fn new(fixed_signs: Vec<i8>) -> Self {
        assert!(!fixed_signs.is_empty(), "prefix may not be empty");
        assert_eq!(fixed_signs[0], 1, "first sign is pinned to +1");
        assert!(fixed_signs.iter().all(|s| *s == 1 || *s == -1));
        Self { fixed_signs }
    }

    pub fn depth(&self) -> usize {
        self.fixed_signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.fixed_signs
    }
}

/// Upper bound on `w' R w` over all completions of the node's free signs.
/// `R` must be the real symmetric PSD aggregate `sum_k Re{h_k h_k^H}`.
pub fn binary_node_ub(node: &BinaryNode, r: &ComplexMatrix) -> Result<f64, SolveError> {
    let n = r.rows();
    let d = node.depth();
    if !r.is_square() || d > n {
        return Err(ModelError::DimensionMismatch(format!(
            "node depth {d} against a {}x{} matrix",
            r.rows(),
            r.cols()
        ))
        .into());
    }
    if d == n {
        return Err(ModelError::InvalidInstance(
            "node is a leaf; evaluate the objective exactly instead".into(),
        )
        .into());
    }
    let w: Vec<f64> = node.fixed_signs.iter().map(|s| f64::from(*s)).collect();
    let mut fixed_term = 0.0;
    for i in 0..d {
        for j in 0..d {
            fixed_term += w[i] * r[(i, j)].re * w[j];
        }
    }
    let mut cross = 0.0;
    for j in d..n {
        let mut cj = 0.0;
        for i in 0..d {
            cj += w[i] * r[(i, j)].re;
        }
        cross += cj.abs();
    }
    let lambda = max_eigenvalue(&r.principal_block(d, n), EIGEN_TOL)?;
    Ok(fixed_term + 2.0 * cross + (n - d) as f64 * lambda)
}

/// Objective lower bound `K^2 / UB_tot` from the arithmetic-harmonic mean
/// inequality. A non-positive `UB_tot` means every completion nulls all
/// users, so the bound is the infinity sentinel.
pub fn binary_node_lb(ub_tot: f64, k: usize) -> f64 {
    if ub_tot <= 0.0 {
        return f64::INFINITY;
    }
    (k * k) as f64 / ub_tot
}

/// Aggregate matrix `R = sum_k Re{h_k h_k^H}` for a channel set.
pub fn aggregate_real_matrix(ch: &ChannelSet) -> ComplexMatrix {
    let n = ch.num_antennas();
    let mut r = ComplexMatrix::zeros(n, n);
    for h in ch.channels() {
        let outer = outer_hermitian(h).expect("channels are nonempty");
        r = r.add(&real_part_matrix(&outer));
    }
    r
}

struct BinarySearch<'a> {
    ch: &'a ChannelSet,
    n: usize,
    k: usize,
    /// Real part of the aggregate matrix, row-major.
    r: Vec<f64>,
    /// lambda_max of the trailing block starting at each depth.
    lambda_by_depth: Vec<f64>,
    thresholds: Vec<f64>,
    /// Per-depth scratch: partial inner products and cross terms.
    partial: Vec<Vec<Complex64>>,
    cross: Vec<Vec<f64>>,
    fixed_term: Vec<f64>,
    signs: Vec<i8>,
    best_f: f64,
    best_signs: Option<Vec<i8>>,
    nodes: u64,
    amps: Vec<f64>,
}

impl<'a> BinarySearch<'a> {
    fn new(ch: &'a ChannelSet, incumbent: f64) -> Result<Self, SolveError> {
        let n = ch.num_antennas();
        let k = ch.num_users();
        let r_mat = aggregate_real_matrix(ch);
        let mut lambda_by_depth = vec![0.0; n];
        for d in 1..n {
            lambda_by_depth[d] = max_eigenvalue(&r_mat.principal_block(d, n), EIGEN_TOL)?;
        }
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                r[i * n + j] = r_mat[(i, j)].re;
            }
        }
        Ok(Self {
            ch,
            n,
            k,
            r,
            lambda_by_depth,
            thresholds: ch.null_thresholds(),
            partial: vec![vec![Complex64::ZERO; k]; n + 1],
            cross: vec![vec![0.0; n]; n + 1],
            fixed_term: vec![0.0; n + 1],
            signs: Vec::with_capacity(n),
            best_f: incumbent,
            best_signs: None,
            nodes: 0,
            amps: vec![0.0; k],
        })
    }

    fn run(&mut self) {
        // Root fixes w_1 = +1.
        for (kk, p) in self.partial[1].iter_mut().enumerate() {
            *p = self.ch.channel(kk)[0].conj();
        }
        for j in 1..self.n {
            self.cross[1][j] = self.r[j];
        }
        self.fixed_term[1] = self.r[0];
        self.signs.push(1);
        self.explore(1);
    }

    fn explore(&mut self, depth: usize) {
        self.nodes += 1;
        if depth == self.n {
            for (kk, a) in self.amps.iter_mut().enumerate() {
                *a = self.partial[depth][kk].norm_sqr();
            }
            let f = objective_given_thresholds(&self.amps, &self.thresholds);
            if f < self.best_f {
                self.best_f = f;
                self.best_signs = Some(self.signs.clone());
            }
            return;
        }
        let cross_sum: f64 = self.cross[depth][depth..self.n].iter().map(|c| c.abs()).sum();
        let ub = self.fixed_term[depth]
            + 2.0 * cross_sum
            + (self.n - depth) as f64 * self.lambda_by_depth[depth];
        let lb = binary_node_lb(ub, self.k);
        if lb >= self.best_f - PRUNE_EPS {
            return;
        }
        // Explore first the sign that extends the accumulated cross term,
        // which tends to reach strong incumbents early.
        let preferred: i8 = if self.cross[depth][depth] >= 0.0 { 1 } else { -1 };
        for sign in [preferred, -preferred] {
            self.apply(depth, sign);
            self.signs.push(sign);
            self.explore(depth + 1);
            self.signs.pop();
        }
    }

    /// Fills the depth+1 scratch rows for fixing coordinate `depth` to `sign`.
    fn apply(&mut self, depth: usize, sign: i8) {
        let s = f64::from(sign);
        let n = self.n;
        for kk in 0..self.k {
            self.partial[depth + 1][kk] =
                self.partial[depth][kk] + self.ch.channel(kk)[depth].conj() * s;
        }
        for j in (depth + 1)..n {
            self.cross[depth + 1][j] = self.cross[depth][j] + s * self.r[depth * n + j];
        }
        self.fixed_term[depth + 1] =
            self.fixed_term[depth] + 2.0 * s * self.cross[depth][depth] + self.r[depth * n + depth];
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BinaryOptions {
    /// Seed the incumbent with one AO run before searching.
    pub warm_start: bool,
}

impl Default for BinaryOptions {
    fn default() -> Self {
        Self { warm_start: true }
    }
}

/// Exact global minimizer over `{-1,+1}^N` with `w_1 = 1` by depth-first
/// branch-and-bound, warm-started from the AO baseline.
pub fn solve_binary(ch: &ChannelSet) -> Result<Solution, SolveError> {
    solve_binary_with(ch, &BinaryOptions::default())
}

pub fn solve_binary_with(ch: &ChannelSet, opts: &BinaryOptions) -> Result<Solution, SolveError> {
    let warm = if opts.warm_start {
        Some(ao_solve(ch, PhaseConstraint::Binary, &AoConfig::default())?)
    } else {
        None
    };
    let incumbent = warm.as_ref().map_or(f64::INFINITY, |s| s.objective);
    let mut search = BinarySearch::new(ch, incumbent)?;
    search.run();

    let beam = match (&search.best_signs, warm) {
        (Some(signs), _) => Beamformer::from_signs(signs),
        // The warm start was never improved; its beamformer is optimal.
        (None, Some(ao)) => ao.beamformer,
        (None, None) => Beamformer::from_signs(&vec![1; ch.num_antennas()]),
    };
    let best_f = search.best_f;
    let cert = Certificate {
        global_lower_bound: best_f,
        gap: 0.0,
        nodes_explored: search.nodes,
    };
    Ok(Solution::assemble(beam, ch, 1.0, cert, SolveStatus::Optimal))
}
