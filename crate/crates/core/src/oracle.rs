//! Exhaustive-search oracles used to certify the exact solvers at desk scale.
//!
//! Both oracles fix the first phase to zero (the objective is invariant to a
//! common rotation), iterate candidates in lexicographic order, and keep the
//! first minimizer on ties, so results are reproducible.

use num_complex::Complex64;

use crate::error::SolveError;
use crate::model::{
    objective_given_thresholds, Beamformer, Certificate, ChannelSet, Solution, SolveStatus,
};

/// Enumeration guard: at most 2^24 candidates.
pub const SEARCH_SPACE_CAP: f64 = 16_777_216.0;

fn check_guard(levels: usize, free_coords: usize) -> Result<(), SolveError> {
    let candidates = (levels as f64).powi(free_coords as i32);
    if candidates > SEARCH_SPACE_CAP {
        return Err(SolveError::SearchSpaceExceeded {
            candidates,
            cap: SEARCH_SPACE_CAP,
        });
    }
    Ok(())
}

/// Depth-first enumeration over `levels^(N-1)` completions with the first
/// coordinate pinned to phase 0. `phase_of` maps a level index to a phase.
fn enumerate_best(
    ch: &ChannelSet,
    levels: usize,
    phase_of: impl Fn(usize) -> f64,
) -> (Vec<usize>, f64, u64) {
    let n = ch.num_antennas();
    let k = ch.num_users();
    let thresholds = ch.null_thresholds();
    let weights: Vec<Complex64> = (0..levels).map(|l| Complex64::cis(phase_of(l))).collect();

    // partial[d][k] = sum over coords < d of conj(h_k) * w; level 0 everywhere
    // is the starting point and the stack walks levels in ascending order.
    let mut partial: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; k]; n + 1];
    for (kk, p) in partial[1].iter_mut().enumerate() {
        *p = ch.channel(kk)[0].conj(); // w_1 = 1
    }

    let mut assignment = vec![0usize; n];
    let mut best_assignment = vec![0usize; n];
    let mut best_f = f64::INFINITY;
    let mut leaves = 0u64;
    let mut amps = vec![0.0f64; k];

    // Iterative DFS in lexicographic order.
    let mut depth = 1usize;
    loop {
        if depth == n {
            for (kk, a) in amps.iter_mut().enumerate() {
                *a = partial[n][kk].norm_sqr();
            }
            let f = objective_given_thresholds(&amps, &thresholds);
            leaves += 1;
            if f < best_f {
                best_f = f;
                best_assignment.copy_from_slice(&assignment);
            }
            // Backtrack to the deepest coordinate with a next level.
            loop {
                if depth == 1 {
                    return (best_assignment, best_f, leaves);
                }
                depth -= 1;
                if assignment[depth] + 1 < levels {
                    assignment[depth] += 1;
                    break;
                }
                assignment[depth] = 0;
            }
        }
        // Extend: apply the level chosen at `depth` and descend.
        let w = weights[assignment[depth]];
        for kk in 0..k {
            partial[depth + 1][kk] = partial[depth][kk] + ch.channel(kk)[depth].conj() * w;
        }
        depth += 1;
    }
}

/// Exact minimum over M-ary phases with `w_1 = 1` by full enumeration.
pub fn brute_force_discrete(ch: &ChannelSet, m: u32) -> Result<Solution, SolveError> {
    if m == 0 {
        return Err(crate::model::ModelError::InvalidInstance("need at least one level".into()).into());
    }
    let n = ch.num_antennas();
    check_guard(m as usize, n - 1)?;
    let step = std::f64::consts::TAU / f64::from(m);
    let (assignment, best_f, leaves) = enumerate_best(ch, m as usize, |l| l as f64 * step);
    let levels: Vec<u32> = assignment.iter().map(|l| *l as u32).collect();
    let beam = Beamformer::from_levels(&levels, m);
    let cert = Certificate {
        global_lower_bound: best_f,
        gap: 0.0,
        nodes_explored: leaves,
    };
    Ok(Solution::assemble(beam, ch, 1.0, cert, SolveStatus::Optimal))
}

/// Best objective over a uniform phase grid with `theta_1 = 0`; a feasible
/// upper bound on the continuous optimum at the grid's resolution.
pub fn grid_oracle_continuous(ch: &ChannelSet, steps_per_dim: usize) -> Result<Solution, SolveError> {
    if steps_per_dim == 0 {
        return Err(crate::model::ModelError::InvalidInstance("need at least one grid step".into()).into());
    }
    let n = ch.num_antennas();
    check_guard(steps_per_dim, n - 1)?;
    let step = std::f64::consts::TAU / steps_per_dim as f64;
    let (assignment, best_f, leaves) = enumerate_best(ch, steps_per_dim, |l| l as f64 * step);
    let phases: Vec<f64> = assignment.iter().map(|l| *l as f64 * step).collect();
    let beam = Beamformer::from_phases(&phases);
    let cert = Certificate {
        global_lower_bound: 0.0,
        gap: if best_f.is_finite() { best_f } else { f64::INFINITY },
        nodes_explored: leaves,
    };
    Ok(Solution::assemble(beam, ch, 1.0, cert, SolveStatus::Heuristic))
}
