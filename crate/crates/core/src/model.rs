//! Problem instances, beamformers, the reduced sum-of-inverse-gains objective,
//! and the closed-form equal-SNR power allocation.
//!
//! The reduced objective is `f(w) = sum_k 1 / |h_k^H w|^2`; minimizing it over
//! unit-modulus `w` maximizes the common SNR floor once powers are allocated
//! optimally, so every solver in this crate works on `f` alone and attaches
//! powers afterwards.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::ComplexVector;

/// Relative threshold below which an effective gain counts as an exact null.
/// `|h_k^H w|^2` is compared against `NULL_GAIN_REL * N * ||h_k||^2`.
pub const NULL_GAIN_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("user {0} has non-positive effective gain; max-min SNR is zero")]
    InfeasibleUser(usize),
    #[error("non-positive input: {0}")]
    NonPositive(String),
}

/// Feasible phase set for every phase shifter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseConstraint {
    /// Phases in {0, pi}; identical to `Mary { m: 2 }`.
    Binary,
    /// Phases in {2*pi*m/M : m = 0..M-1}.
    Mary { m: u32 },
    /// Phases anywhere in [0, 2*pi).
    Continuous,
}

impl PhaseConstraint {
    /// Number of discrete levels, or `None` for the continuous set.
    pub fn levels(&self) -> Option<u32> {
        match self {
            PhaseConstraint::Binary => Some(2),
            PhaseConstraint::Mary { m } => Some(*m),
            PhaseConstraint::Continuous => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            PhaseConstraint::Binary => "binary".to_string(),
            PhaseConstraint::Mary { m } => format!("mary{m}"),
            PhaseConstraint::Continuous => "continuous".to_string(),
        }
    }
}

/// A set of K user channels over N antennas plus the common noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    channels: Vec<ComplexVector>,
    sigma2: f64,
}

impl ChannelSet {
    pub fn new(channels: Vec<ComplexVector>, sigma2: f64) -> Result<Self, ModelError> {
        if channels.is_empty() {
            return Err(ModelError::InvalidInstance("need at least one user".into()));
        }
        let n = channels[0].len();
        if n == 0 {
            return Err(ModelError::InvalidInstance(
                "need at least one antenna".into(),
            ));
        }
        if channels.iter().any(|h| h.len() != n) {
            return Err(ModelError::InvalidInstance(
                "all channel vectors must share one length".into(),
            ));
        }
        if !(sigma2 > 0.0) {
            return Err(ModelError::NonPositive(format!("sigma2 = {sigma2}")));
        }
        Ok(Self { channels, sigma2 })
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.channels[0].len()
    }

    pub fn noise_power(&self) -> f64 {
        self.sigma2
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        &self.channels[k]
    }

    pub fn channels(&self) -> &[ComplexVector] {
        &self.channels
    }

    /// Per-user null thresholds on `|h_k^H w|^2`.
    pub fn null_thresholds(&self) -> Vec<f64> {
        let n = self.num_antennas() as f64;
        self.channels
            .iter()
            .map(|h| NULL_GAIN_REL * n * h.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect()
    }
}

/// Unit-modulus beamformer, stored as phases with the complex weights cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    theta: Vec<f64>,
    w: Vec<Complex64>,
}

impl Beamformer {
    /// Builds a beamformer from phases; each phase is wrapped into [0, 2*pi).
    pub fn from_phases(theta: &[f64]) -> Self {
        let two_pi = std::f64::consts::TAU;
        let theta: Vec<f64> = theta
            .iter()
            .map(|t| {
                let r = t.rem_euclid(two_pi);
                if r == two_pi {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        let w = theta.iter().map(|t| Complex64::cis(*t)).collect();
        Self { theta, w }
    }

    /// Binary beamformer from signs (+1 -> phase 0, -1 -> phase pi).
    pub fn from_signs(signs: &[i8]) -> Self {
        let theta: Vec<f64> = signs
            .iter()
            .map(|s| if *s >= 0 { 0.0 } else { std::f64::consts::PI })
            .collect();
        Self::from_phases(&theta)
    }

    /// M-ary beamformer from level indices (level m -> phase 2*pi*m/M).
    /// Panics if `m` is zero.
    pub fn from_levels(levels: &[u32], m: u32) -> Self {
        assert!(m >= 1, "need at least one phase level");
        let theta: Vec<f64> = levels
            .iter()
            .map(|l| std::f64::consts::TAU * f64::from(*l) / f64::from(m))
            .collect();
        Self::from_phases(&theta)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }
}

/// Terminal state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// Certified optimal (discrete: exact; continuous: within the gap tolerance).
    Optimal,
    /// Feasible point without an optimality certificate (local search).
    Heuristic,
    /// Budget exhausted; the reported gap is the true remaining gap.
    Degraded,
    /// Some user is nulled by every candidate beamformer.
    Infeasible,
}

/// Optimality certificate attached to a [`Solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub global_lower_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
}

/// Beamformer plus power allocation and certificate.
///
/// Powers and the SNR floor are reported for the budget passed to
/// [`Solution::assemble`]; solvers use a unit budget and the harness rescales
/// with [`Solution::rescale_power`], which is exact because both scale linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub beamformer: Beamformer,
    pub objective: f64,
    pub powers: Vec<f64>,
    pub snr_floor: f64,
    pub certificate: Certificate,
    pub status: SolveStatus,
}

impl Solution {
    /// Combines a beamformer with the optimal power allocation for budget `p`.
    /// If the beam nulls some user the solution carries the infinity objective,
    /// a zero SNR floor, an equal power split, and infeasible status.
    pub fn assemble(
        beamformer: Beamformer,
        ch: &ChannelSet,
        p: f64,
        certificate: Certificate,
        status: SolveStatus,
    ) -> Self {
        let k = ch.num_users();
        let obj = objective(&beamformer, ch).unwrap_or(f64::INFINITY);
        if !obj.is_finite() {
            return Self {
                beamformer,
                objective: f64::INFINITY,
                powers: vec![p / k as f64; k],
                snr_floor: 0.0,
                certificate,
                status: SolveStatus::Infeasible,
            };
        }
        let gains = effective_gains(&beamformer, ch).expect("dimensions match");
        let (powers, snr) = allocate_power(&gains, p).expect("finite objective implies gains > 0");
        Self {
            beamformer,
            objective: obj,
            powers,
            snr_floor: snr,
            certificate,
            status,
        }
    }

    /// Rescales the power budget by `factor > 0`; powers and the SNR floor
    /// scale linearly while the beamformer and objective are unaffected.
    pub fn rescale_power(&mut self, factor: f64) {
        for p in &mut self.powers {
            *p *= factor;
        }
        self.snr_floor *= factor;
    }
}

/// Reduced objective `sum_k 1 / |h_k^H w|^2`. A user whose gain falls below
/// its null threshold makes the objective infinite.
pub fn objective(w: &Beamformer, ch: &ChannelSet) -> Result<f64, ModelError> {
    if w.len() != ch.num_antennas() {
        return Err(ModelError::DimensionMismatch(format!(
            "beamformer has {} entries, instance has {} antennas",
            w.len(),
            ch.num_antennas()
        )));
    }
    let amps: Vec<f64> = ch
        .channels()
        .iter()
        .map(|h| inner_product(h, w.weights()).norm_sqr())
        .collect();
    Ok(objective_from_amplitudes(&amps, ch))
}

/// Objective from precomputed per-user `|h_k^H w|^2` values, applying the
/// shared null rule. Solvers that track partial sums use this to stay
/// bit-consistent with [`objective`].
pub fn objective_from_amplitudes(amps_sq: &[f64], ch: &ChannelSet) -> f64 {
    objective_given_thresholds(amps_sq, &ch.null_thresholds())
}

/// Same as [`objective_from_amplitudes`] with the thresholds precomputed,
/// for inner loops.
pub fn objective_given_thresholds(amps_sq: &[f64], thresholds: &[f64]) -> f64 {
    let mut f = 0.0;
    for (a, t) in amps_sq.iter().zip(thresholds) {
        if *a < *t || *a == 0.0 {
            return f64::INFINITY;
        }
        f += 1.0 / a;
    }
    f
}

/// `h^H w` for conformable slices.
pub fn inner_product(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Effective channel gains `G_k = |h_k^H w|^2 / (N sigma^2)`. A nulled user
/// yields `G_k = 0`; callers must handle it.
pub fn effective_gains(w: &Beamformer, ch: &ChannelSet) -> Result<Vec<f64>, ModelError> {
    if w.len() != ch.num_antennas() {
        return Err(ModelError::DimensionMismatch(format!(
            "beamformer has {} entries, instance has {} antennas",
            w.len(),
            ch.num_antennas()
        )));
    }
    let scale = ch.num_antennas() as f64 * ch.noise_power();
    let thresholds = ch.null_thresholds();
    Ok(ch
        .channels()
        .iter()
        .zip(&thresholds)
        .map(|(h, t)| {
            let a = inner_product(h, w.weights()).norm_sqr();
            if a < *t || a == 0.0 {
                0.0
            } else {
                a / scale
            }
        })
        .collect())
}

/// Closed-form max-min power allocation for fixed gains:
/// `t* = P / sum_k 1/G_k` and `P_k = t* / G_k`, so every user receives the
/// same SNR `P_k G_k = t*` and the budget is fully used.
pub fn allocate_power(gains: &[f64], p: f64) -> Result<(Vec<f64>, f64), ModelError> {
    if !(p > 0.0) {
        return Err(ModelError::NonPositive(format!("power budget = {p}")));
    }
    if gains.is_empty() {
        return Err(ModelError::InvalidInstance("no users".into()));
    }
    if let Some(k) = gains.iter().position(|g| !(*g > 0.0)) {
        return Err(ModelError::InfeasibleUser(k));
    }
    let inv_sum: f64 = gains.iter().map(|g| 1.0 / g).sum();
    let t_star = p / inv_sum;
    let powers = gains.iter().map(|g| t_star / g).collect();
    Ok((powers, t_star))
}

/// SNR floor implied by an objective value: `t* = P / (N sigma^2 f)`.
/// An infinite objective maps to a zero floor.
pub fn snr_floor(objective_value: f64, p: f64, n: usize, sigma2: f64) -> Result<f64, ModelError> {
    if !(p > 0.0) || !(sigma2 > 0.0) || n == 0 {
        return Err(ModelError::NonPositive(format!(
            "p = {p}, n = {n}, sigma2 = {sigma2}"
        )));
    }
    if objective_value.is_infinite() {
        return Ok(0.0);
    }
    if !(objective_value > 0.0) {
        return Err(ModelError::NonPositive(format!(
            "objective = {objective_value}"
        )));
    }
    Ok(p / (n as f64 * sigma2 * objective_value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_antenna_instance() -> ChannelSet {
        ChannelSet::new(vec![vec![c(1.0, 0.0), c(1.0, 0.0)]], 1.0).unwrap()
    }

    #[test]
    fn objective_aligned_beam() {
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0, 0.0]);
        assert!((objective(&w, &ch).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn objective_orthogonal_beam_is_infinite() {
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0, std::f64::consts::PI]);
        assert!(objective(&w, &ch).unwrap().is_infinite());
    }

    #[test]
    fn objective_dimension_mismatch() {
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0]);
        assert!(matches!(
            objective(&w, &ch),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn effective_gain_examples() {
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0, 0.0]);
        let g = effective_gains(&w, &ch).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12);

        // Single antenna: phase-invariant gain |h|^2 / sigma^2.
        let ch1 = ChannelSet::new(vec![vec![c(0.0, 2.0)]], 4.0).unwrap();
        for phase in [0.0, 1.0, 3.0] {
            let w1 = Beamformer::from_phases(&[phase]);
            let g1 = effective_gains(&w1, &ch1).unwrap();
            assert!((g1[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn allocate_power_symmetric() {
        let (p, t) = allocate_power(&[1.0, 1.0], 10.0).unwrap();
        assert_eq!(p, vec![5.0, 5.0]);
        assert!((t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn allocate_power_asymmetric_matches_grid_oracle() {
        // Frozen from a 1-D grid oracle maximizing min(P1*1, (10-P1)*4).
        let (p, t) = allocate_power(&[1.0, 4.0], 10.0).unwrap();
        assert!((p[0] - 8.0).abs() < 1e-12);
        assert!((p[1] - 2.0).abs() < 1e-12);
        assert!((t - 8.0).abs() < 1e-12);
    }

    #[test]
    fn allocate_power_single_user() {
        let (p, t) = allocate_power(&[3.0], 2.0).unwrap();
        assert_eq!(p, vec![2.0]);
        assert!((t - 6.0).abs() < 1e-12);
    }

    #[test]
    fn allocate_power_rejects_nulled_user() {
        assert_eq!(
            allocate_power(&[1.0, 0.0], 10.0),
            Err(ModelError::InfeasibleUser(1))
        );
    }

    #[test]
    fn snr_floor_examples() {
        assert!((snr_floor(0.25, 10.0, 2, 1.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(snr_floor(f64::INFINITY, 10.0, 2, 1.0).unwrap(), 0.0);
        assert!((snr_floor(1.0, 1.0, 1, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_floor_matches_allocation() {
        // f = 0.25 on the N=2 aligned instance corresponds to t* = 20 at P = 10.
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0, 0.0]);
        let g = effective_gains(&w, &ch).unwrap();
        let (_, t) = allocate_power(&g, 10.0).unwrap();
        let f = objective(&w, &ch).unwrap();
        let t2 = snr_floor(f, 10.0, 2, 1.0).unwrap();
        assert!((t - t2).abs() < 1e-12 * t.abs());
    }

    #[test]
    fn phases_wrap_into_range() {
        let w = Beamformer::from_phases(&[-std::f64::consts::PI, 3.0 * std::f64::consts::TAU]);
        for t in w.phases() {
            assert!(*t >= 0.0 && *t < std::f64::consts::TAU);
        }
        for z in w.weights() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_assembly_is_infeasible() {
        let ch = two_antenna_instance();
        let w = Beamformer::from_phases(&[0.0, std::f64::consts::PI]);
        let cert = Certificate {
            global_lower_bound: 0.0,
            gap: 0.0,
            nodes_explored: 1,
        };
        let sol = Solution::assemble(w, &ch, 10.0, cert, SolveStatus::Optimal);
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert_eq!(sol.snr_floor, 0.0);
        assert!(sol.objective.is_infinite());
        assert!((sol.powers.iter().sum::<f64>() - 10.0).abs() < 1e-9);
    }
}
