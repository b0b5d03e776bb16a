//! Alternating-optimization baseline: cyclic exact coordinate descent on the
//! reduced objective, with multistart. A local-search heuristic, used both as
//! a comparison baseline and as a warm start for the exact solvers.

use num_complex::Complex64;

use crate::channel::{keyed_rng, uniform01};
use crate::error::SolveError;
use crate::model::{
    objective_given_thresholds, Beamformer, Certificate, ChannelSet, PhaseConstraint, Solution,
    SolveStatus,
};

/// Grid size for the coarse scan of a continuous coordinate update.
const CONTINUOUS_GRID: usize = 64;

/// Golden-section refinement stops below this interval width (radians).
const GOLDEN_WIDTH: f64 = 1e-10;

/// Initialization rule for one AO restart.
#[derive(Debug, Clone, PartialEq)]
pub enum AoInit {
    /// Independent uniform phases; restart r uses the stream (seed, r).
    UniformRandom { seed: u64 },
    /// Phases matched to one user's channel, `theta_n = arg(h_un)`.
    MatchedToUser { user: usize },
    /// Fixed starting phases (quantized to the grid for discrete sets).
    Given { phases: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig {
    pub max_sweeps: usize,
    pub rel_tol: f64,
    pub init: AoInit,
    pub restarts: usize,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            rel_tol: 1e-8,
            init: AoInit::UniformRandom { seed: 0 },
            restarts: 8,
        }
    }
}

/// Quantizes a phase to the nearest of M uniform levels.
fn nearest_level(theta: f64, m: u32) -> u32 {
    let step = std::f64::consts::TAU / f64::from(m);
    let idx = (theta.rem_euclid(std::f64::consts::TAU) / step).round() as u32;
    idx % m
}

fn initial_phases(ch: &ChannelSet, constraint: PhaseConstraint, init: &AoInit, restart: u64) -> Vec<f64> {
    let n = ch.num_antennas();
    let raw: Vec<f64> = match init {
        AoInit::UniformRandom { seed } => {
            let mut rng = keyed_rng(*seed, restart, 0x41_4f, n as u64);
            (0..n)
                .map(|_| std::f64::consts::TAU * uniform01(&mut rng))
                .collect()
        }
        AoInit::MatchedToUser { user } => ch
            .channel(*user % ch.num_users())
            .iter()
            .map(|h| h.arg().rem_euclid(std::f64::consts::TAU))
            .collect(),
        AoInit::Given { phases } => {
            let mut p = phases.clone();
            p.resize(n, 0.0);
            p
        }
    };
    match constraint.levels() {
        Some(m) => raw
            .iter()
            .map(|t| std::f64::consts::TAU * f64::from(nearest_level(*t, m)) / f64::from(m))
            .collect(),
        None => raw,
    }
}

struct SweepState<'a> {
    ch: &'a ChannelSet,
    thresholds: Vec<f64>,
    /// Per-user inner products y_k = h_k^H w, kept in sync with `phases`.
    y: Vec<Complex64>,
    phases: Vec<f64>,
}

impl<'a> SweepState<'a> {
    fn new(ch: &'a ChannelSet, phases: Vec<f64>) -> Self {
        let w: Vec<Complex64> = phases.iter().map(|t| Complex64::cis(*t)).collect();
        let y = ch
            .channels()
            .iter()
            .map(|h| h.iter().zip(&w).map(|(a, b)| a.conj() * b).sum())
            .collect();
        Self {
            ch,
            thresholds: ch.null_thresholds(),
            y,
            phases,
        }
    }

    fn objective(&self) -> f64 {
        let amps: Vec<f64> = self.y.iter().map(|z| z.norm_sqr()).collect();
        objective_given_thresholds(&amps, &self.thresholds)
    }

    /// Objective if coordinate n took phase `theta`, given the rest-sums `rest`.
    fn candidate_objective(&self, n: usize, rest: &[Complex64], theta: f64) -> f64 {
        let w = Complex64::cis(theta);
        let mut f = 0.0;
        for (k, r) in rest.iter().enumerate() {
            let amp = (r + self.ch.channel(k)[n].conj() * w).norm_sqr();
            if amp < self.thresholds[k] || amp == 0.0 {
                return f64::INFINITY;
            }
            f += 1.0 / amp;
        }
        f
    }

    /// Contributions of every coordinate except n.
    fn rest_sums(&self, n: usize) -> Vec<Complex64> {
        let w = Complex64::cis(self.phases[n]);
        self.y
            .iter()
            .enumerate()
            .map(|(k, y)| y - self.ch.channel(k)[n].conj() * w)
            .collect()
    }

    fn set_phase(&mut self, n: usize, theta: f64, rest: &[Complex64]) {
        self.phases[n] = theta.rem_euclid(std::f64::consts::TAU);
        let w = Complex64::cis(self.phases[n]);
        for (k, y) in self.y.iter_mut().enumerate() {
            *y = rest[k] + self.ch.channel(k)[n].conj() * w;
        }
    }
}

/// Exact minimization of one continuous coordinate: 64-point scan followed by
/// golden-section refinement of the best bracket.
fn continuous_coordinate_min(state: &SweepState, n: usize, rest: &[Complex64]) -> f64 {
    let step = std::f64::consts::TAU / CONTINUOUS_GRID as f64;
    let mut best_g = 0usize;
    let mut best_f = f64::INFINITY;
    for g in 0..CONTINUOUS_GRID {
        let f = state.candidate_objective(n, rest, g as f64 * step);
        if f < best_f {
            best_f = f;
            best_g = g;
        }
    }
    if best_f.is_infinite() {
        // Every grid candidate nulls a user; keep the current phase.
        return state.phases[n];
    }
    let mut a = best_g as f64 * step - step;
    let mut b = best_g as f64 * step + step;
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = state.candidate_objective(n, rest, x1);
    let mut f2 = state.candidate_objective(n, rest, x2);
    while b - a > GOLDEN_WIDTH {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = state.candidate_objective(n, rest, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = state.candidate_objective(n, rest, x2);
        }
    }
    0.5 * (a + b)
}

/// Cyclic coordinate descent on the reduced objective.
///
/// Coordinate 1 is held as the phase reference; the objective is invariant to
/// a common rotation, so this loses nothing. Each update is an exact
/// minimization over the feasible set (level enumeration, or a grid scan plus
/// golden-section refinement for the continuous set), so the objective is
/// non-increasing per update. The best restart wins; ties go to the
/// lexicographically smaller phase vector.
pub fn ao_solve(
    ch: &ChannelSet,
    constraint: PhaseConstraint,
    cfg: &AoConfig,
) -> Result<Solution, SolveError> {
    if let Some(m) = constraint.levels() {
        if m < 2 {
            return Err(crate::model::ModelError::InvalidInstance(format!(
                "need at least two phase levels, got {m}"
            ))
            .into());
        }
    }
    let n = ch.num_antennas();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut updates = 0u64;

    for restart in 0..cfg.restarts.max(1) {
        let phases = initial_phases(ch, constraint, &cfg.init, restart as u64);
        let mut state = SweepState::new(ch, phases);
        let mut f = state.objective();

        for _ in 0..cfg.max_sweeps {
            let f_before = f;
            for coord in 1..n {
                let rest = state.rest_sums(coord);
                let new_theta = match constraint.levels() {
                    Some(m) => {
                        let step = std::f64::consts::TAU / f64::from(m);
                        let mut best_theta = state.phases[coord];
                        let mut best_f = state.candidate_objective(coord, &rest, best_theta);
                        for level in 0..m {
                            let theta = f64::from(level) * step;
                            let cand = state.candidate_objective(coord, &rest, theta);
                            if cand < best_f {
                                best_f = cand;
                                best_theta = theta;
                            }
                        }
                        best_theta
                    }
                    None => {
                        let theta = continuous_coordinate_min(&state, coord, &rest);
                        let cand = state.candidate_objective(coord, &rest, theta);
                        let current = state.candidate_objective(coord, &rest, state.phases[coord]);
                        if cand < current {
                            theta
                        } else {
                            state.phases[coord]
                        }
                    }
                };
                state.set_phase(coord, new_theta, &rest);
                updates += 1;
            }
            f = state.objective();
            let improved = f_before - f;
            if !(improved > cfg.rel_tol * f.abs().max(f64::MIN_POSITIVE)) {
                break;
            }
        }

        let f_final = state.objective();
        let replace = match &best {
            None => true,
            Some((bf, bp)) => {
                f_final < *bf || (f_final == *bf && state.phases.as_slice() < bp.as_slice())
            }
        };
        if replace {
            best = Some((f_final, state.phases.clone()));
        }
    }

    let (_, phases) = best.expect("at least one restart");
    let beam = Beamformer::from_phases(&phases);
    let mut sol = Solution::assemble(
        beam,
        ch,
        1.0,
        Certificate {
            global_lower_bound: 0.0,
            gap: 0.0,
            nodes_explored: updates,
        },
        SolveStatus::Heuristic,
    );
    // AO certifies nothing beyond f >= 0: the certified interval is [0, f].
    sol.certificate.gap = if sol.objective.is_finite() {
        sol.objective
    } else {
        f64::INFINITY
    };
    Ok(sol)
}
