//! Globally optimal analog beamforming and power allocation for
//! single-RF-chain multiuser TDMA systems under a max-min SNR criterion.
//!
//! The closed-form equal-SNR power allocation reduces the joint design to
//! minimizing `f(w) = sum_k 1/|h_k^H w|^2` over unit-modulus beamformers.
//! This crate provides exact branch-and-bound solvers for binary, M-ary, and
//! continuous phase sets, alternating-optimization baselines, exhaustive
//! oracles for certification, and a Monte Carlo sweep harness.

pub mod ao;
pub mod bb_binary;
pub mod bb_continuous;
pub mod bb_mary;
pub mod channel;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod sdp;
pub mod sweep;

pub use ao::{ao_solve, AoConfig, AoInit};
pub use bb_binary::{solve_binary, solve_binary_with, BinaryOptions};
pub use bb_continuous::{
    branch_box, round_midpoint, round_projection, solve_continuous, solve_continuous_with,
    SbbOptions,
};
pub use bb_mary::{solve_mary, solve_mary_with, MaryOptions};
pub use channel::generate_channels;
pub use error::SolveError;
pub use model::{
    allocate_power, effective_gains, objective, snr_floor, Beamformer, Certificate, ChannelSet,
    PhaseConstraint, Solution, SolveStatus,
};
pub use oracle::{brute_force_discrete, grid_oracle_continuous};
pub use sdp::{
    sector_constraint, schur_snr_constraint, solve_node, PhaseBox, SdpOutcome, SdpStatus,
};
pub use sweep::{run_instance, run_sweep, SolverKind, SweepConfig, SweepMode, SweepRow};
