//! Globally optimal branch-and-bound for M-ary discrete phases.
//!
//! Nodes fix a prefix of phase levels (the first entry pinned to level 0) and
//! are bounded by two complementary layers: a per-user triangle-inequality
//! bound on each `|h_k^H w|`, and an aggregate bound through the quadratic
//! form of `R = sum_k h_k h_k^H` combined with the arithmetic-harmonic mean
//! inequality. The search is best-first on the combined bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::ao::{ao_solve, AoConfig};
use crate::bb_binary::PRUNE_EPS;
use crate::error::SolveError;
use crate::model::{
    objective_given_thresholds, Beamformer, Certificate, ChannelSet, ModelError, PhaseConstraint,
    Solution, SolveStatus,
};
use crate::numerics::{max_eigenvalue, outer_hermitian, ComplexMatrix, EIGEN_TOL};

/// Default cap on heap insertions before the solver aborts with a resource
/// error; exactness is the contract, so it never degrades silently.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct MaryOptions {
    pub node_cap: u64,
    /// Seed the incumbent with one AO run before searching.
    pub warm_start: bool,
}

impl Default for MaryOptions {
    fn default() -> Self {
        Self {
            node_cap: DEFAULT_NODE_CAP,
            warm_start: true,
        }
    }
}

/// Partial level assignment with cached per-user data.
#[derive(Debug, Clone, PartialEq)]
pub struct MaryNode {
    /// Levels in {0, .., M-1} for the leading coordinates; `prefix[0] = 0`.
    prefix: Vec<u32>,
    m: u32,
    /// Fixed-part inner products `A_k = sum_{n < d} h_kn^* w_n`.
    partial: Vec<Complex64>,
    /// Free-part amplitude budgets `rho_k = sum_{n >= d} |h_kn|`.
    residual: Vec<f64>,
}

impl MaryNode {
    pub fn new(ch: &ChannelSet, m: u32, prefix: Vec<u32>) -> Self {
        assert!(m >= 2, "need at least two levels");
        assert!(!prefix.is_empty() && prefix.len() <= ch.num_antennas());
        assert_eq!(prefix[0], 0, "first level is pinned to 0");
        assert!(prefix.iter().all(|l| *l < m));
        let d = prefix.len();
        let partial = ch
            .channels()
            .iter()
            .map(|h| {
                (0..d)
                    .map(|n| h[n].conj() * level_weight(prefix[n], m))
                    .sum()
            })
            .collect();
        let residual = ch
            .channels()
            .iter()
            .map(|h| h[d..].iter().map(|z| z.norm()).sum())
            .collect();
        Self {
            prefix,
            m,
            partial,
            residual,
        }
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn levels(&self) -> u32 {
        self.m
    }

    pub fn partial_sums(&self) -> &[Complex64] {
        &self.partial
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residual
    }

    fn weights(&self) -> Vec<Complex64> {
        self.prefix
            .iter()
            .map(|l| level_weight(*l, self.m))
            .collect()
    }
}

pub(crate) fn level_weight(level: u32, m: u32) -> Complex64 {
    Complex64::cis(std::f64::consts::TAU * f64::from(level) / f64::from(m))
}

/// Per-user lower bound `sum_k 1 / (|A_k| + rho_k)^2`. If some user's
/// amplitude budget is zero the whole subtree nulls that user and the bound
/// is the infinity sentinel.
pub fn indiv_lb(node: &MaryNode) -> f64 {
    let mut lb = 0.0;
    for (a, rho) in node.partial.iter().zip(&node.residual) {
        let y_max = a.norm() + rho;
        if y_max == 0.0 {
            return f64::INFINITY;
        }
        lb += 1.0 / (y_max * y_max);
    }
    lb
}

/// Aggregate matrix `R = sum_k h_k h_k^H` (complex Hermitian PSD).
pub fn aggregate_hermitian_matrix(ch: &ChannelSet) -> ComplexMatrix {
    let n = ch.num_antennas();
    let mut r = ComplexMatrix::zeros(n, n);
    for h in ch.channels() {
        r = r.add(&outer_hermitian(h).expect("channels are nonempty"));
    }
    r
}

/// Aggregate lower bound `K^2 / UB_tot` with
/// `UB_tot = w_F^H R_FF w_F + 2 ||w_F^H R_FU||_1 + (N-d) lambda_max(R_UU)`,
/// where the 1-norm sums the complex moduli of the row vector.
pub fn agg_lb(node: &MaryNode, r_circ: &ComplexMatrix) -> Result<f64, SolveError> {
    let n = r_circ.rows();
    let d = node.depth();
    if !r_circ.is_square() || d > n {
        return Err(ModelError::DimensionMismatch(format!(
            "node depth {d} against a {}x{} matrix",
            r_circ.rows(),
            r_circ.cols()
        ))
        .into());
    }
    let k = node.partial.len();
    let w = node.weights();
    let mut fixed_term = Complex64::ZERO;
    for i in 0..d {
        for j in 0..d {
            fixed_term += w[i].conj() * r_circ[(i, j)] * w[j];
        }
    }
    let mut ub = fixed_term.re;
    if d < n {
        let mut cross = 0.0;
        for j in d..n {
            let cj: Complex64 = (0..d).map(|i| w[i].conj() * r_circ[(i, j)]).sum();
            cross += cj.norm();
        }
        let lambda = max_eigenvalue(&r_circ.principal_block(d, n), EIGEN_TOL)?;
        ub += 2.0 * cross + (n - d) as f64 * lambda;
    }
    if ub <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((k * k) as f64 / ub)
}

/// Combined dual-layer bound: the larger of the individual and aggregate
/// layers is still a valid lower bound.
pub fn combined_lb(node: &MaryNode, r_circ: &ComplexMatrix) -> Result<f64, SolveError> {
    Ok(indiv_lb(node).max(agg_lb(node, r_circ)?))
}

/// Heap entry ordered so the pop order is: smallest bound first, ties to the
/// deeper node, then to the lexicographically smaller prefix.
struct HeapEntry {
    lb: f64,
    prefix: Vec<u32>,
    partial: Vec<Complex64>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum, so "best" must compare greatest.
        other
            .lb
            .total_cmp(&self.lb)
            .then(self.prefix.len().cmp(&other.prefix.len()))
            .then_with(|| other.prefix.cmp(&self.prefix))
    }
}

/// Exact global minimizer over the M-ary phase set with `w_1 = 1`.
pub fn solve_mary(ch: &ChannelSet, m: u32) -> Result<Solution, SolveError> {
    solve_mary_with(ch, m, &MaryOptions::default())
}

pub fn solve_mary_with(
    ch: &ChannelSet,
    m: u32,
    opts: &MaryOptions,
) -> Result<Solution, SolveError> {
    if m < 2 {
        return Err(ModelError::InvalidInstance(format!("need M >= 2 levels, got {m}")).into());
    }
    let n = ch.num_antennas();
    let k = ch.num_users();
    let r_circ = aggregate_hermitian_matrix(ch);
    let mut lambda_by_depth = vec![0.0; n];
    for d in 1..n {
        lambda_by_depth[d] = max_eigenvalue(&r_circ.principal_block(d, n), EIGEN_TOL)?;
    }
    // rho[d][k]: free-part amplitude budget below depth d.
    let mut rho = vec![vec![0.0; k]; n + 1];
    for d in (0..n).rev() {
        for kk in 0..k {
            rho[d][kk] = rho[d + 1][kk] + ch.channel(kk)[d].norm();
        }
    }
    let thresholds = ch.null_thresholds();
    let weights: Vec<Complex64> = (0..m).map(|l| level_weight(l, m)).collect();

    let mut best_f = f64::INFINITY;
    let mut best_beam: Option<Beamformer> = None;
    if opts.warm_start {
        let ao = ao_solve(ch, PhaseConstraint::Mary { m }, &AoConfig::default())?;
        best_f = ao.objective;
        best_beam = Some(ao.beamformer);
    }

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let root = MaryNode::new(ch, m, vec![0]);
    let root_lb = combined_lb(&root, &r_circ)?;
    heap.push(HeapEntry {
        lb: root_lb,
        prefix: root.prefix,
        partial: root.partial,
    });
    let mut pushed = 1u64;
    let mut explored = 0u64;
    let mut amps = vec![0.0f64; k];

    while let Some(entry) = heap.pop() {
        // Best-first: once the smallest bound cannot beat the incumbent,
        // no remaining node can.
        if entry.lb >= best_f - PRUNE_EPS {
            break;
        }
        explored += 1;
        let d = entry.prefix.len();
        if d == n {
            for (kk, a) in amps.iter_mut().enumerate() {
                *a = entry.partial[kk].norm_sqr();
            }
            let f = objective_given_thresholds(&amps, &thresholds);
            if f < best_f {
                best_f = f;
                best_beam = Some(Beamformer::from_levels(&entry.prefix, m));
            }
            continue;
        }

        // Cross terms of the parent prefix: c_j = sum_{i<d} w_i^* R[i][j].
        let w: Vec<Complex64> = entry.prefix.iter().map(|l| weights[*l as usize]).collect();
        let mut cross = vec![Complex64::ZERO; n];
        for j in d..n {
            cross[j] = (0..d).map(|i| w[i].conj() * r_circ[(i, j)]).sum();
        }
        let mut fixed_term = Complex64::ZERO;
        for i in 0..d {
            for j in 0..d {
                fixed_term += w[i].conj() * r_circ[(i, j)] * w[j];
            }
        }
        let fixed_term = fixed_term.re;

        for level in 0..m {
            let wl = weights[level as usize];
            let child_partial: Vec<Complex64> = entry
                .partial
                .iter()
                .enumerate()
                .map(|(kk, a)| a + ch.channel(kk)[d].conj() * wl)
                .collect();

            // Individual layer.
            let mut indiv = 0.0;
            for (kk, a) in child_partial.iter().enumerate() {
                let y_max = a.norm() + rho[d + 1][kk];
                if y_max == 0.0 {
                    indiv = f64::INFINITY;
                    break;
                }
                indiv += 1.0 / (y_max * y_max);
            }

            // Aggregate layer. Fixing coordinate d adds the Hermitian cross
            // pair: C' = C + 2 Re(c_d * w_l) + R_dd.
            let child_fixed = fixed_term + 2.0 * (cross[d] * wl).re + r_circ[(d, d)].re;
            let mut ub = child_fixed;
            if d + 1 < n {
                let mut cross_norm = 0.0;
                for j in (d + 1)..n {
                    cross_norm += (cross[j] + wl.conj() * r_circ[(d, j)]).norm();
                }
                ub += 2.0 * cross_norm + (n - d - 1) as f64 * lambda_by_depth[d + 1];
            }
            let agg = if ub <= 0.0 {
                f64::INFINITY
            } else {
                (k * k) as f64 / ub
            };

            let lb = indiv.max(agg);
            if lb < best_f - PRUNE_EPS {
                pushed += 1;
                if pushed > opts.node_cap {
                    return Err(SolveError::NodeBudgetExceeded {
                        pushed,
                        cap: opts.node_cap,
                    });
                }
                let mut child_prefix = entry.prefix.clone();
                child_prefix.push(level);
                heap.push(HeapEntry {
                    lb,
                    prefix: child_prefix,
                    partial: child_partial,
                });
            }
        }
    }

    let beam = best_beam.unwrap_or_else(|| Beamformer::from_levels(&vec![0; n], m));
    let cert = Certificate {
        global_lower_bound: best_f,
        gap: 0.0,
        nodes_explored: explored,
    };
    Ok(Solution::assemble(beam, ch, 1.0, cert, SolveStatus::Optimal))
}
