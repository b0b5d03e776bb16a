//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with the measured margins. Run with
//! `cargo test -p maxmin-beam-cli --test acceptance -- --nocapture`.

use std::process::Command;

use maxmin_beam::ao::{ao_solve, AoConfig, AoInit};
use maxmin_beam::channel::generate_channels;
use maxmin_beam::model::{
    allocate_power, effective_gains, objective, Beamformer, PhaseConstraint,
};
use maxmin_beam::numerics::ComplexMatrix;
use maxmin_beam::oracle::{brute_force_discrete, grid_oracle_continuous};
use maxmin_beam::bb_binary::{binary_node_lb, binary_node_ub, aggregate_real_matrix, BinaryNode};
use maxmin_beam::bb_mary::{agg_lb, aggregate_hermitian_matrix, indiv_lb, MaryNode};
use maxmin_beam::sdp::{schur_snr_constraint, solve_node, PhaseBox};
use maxmin_beam::sweep::{run_sweep, SolverKind, SweepConfig};
use maxmin_beam::{solve_binary, solve_continuous, solve_mary};
use num_complex::Complex64;

/// Small deterministic generator for test-local draws.
struct Lcg(u64);

impl Lcg {
    fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-30)
}

#[test]
fn criterion_1_discrete_global_optimality() {
    let mut worst_binary = 0.0f64;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 9); // 2..=10
        let k = 1 + (i as usize % 4); // 1..=4
        let ch = generate_channels(10_001, i, k, n);
        let bb = solve_binary(&ch).unwrap();
        let oracle = brute_force_discrete(&ch, 2).unwrap();
        assert!(
            rel_close(bb.objective, oracle.objective, 1e-9),
            "binary instance {i} (N={n}, K={k}): bb {} vs oracle {}",
            bb.objective,
            oracle.objective
        );
        if bb.objective.is_finite() {
            worst_binary = worst_binary
                .max((bb.objective - oracle.objective).abs() / oracle.objective.abs().max(1e-30));
        }
    }
    let mut worst_mary = 0.0f64;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 5); // 2..=6
        let k = 1 + (i as usize % 4);
        let ch = generate_channels(10_002, i, k, n);
        let bb = solve_mary(&ch, 4).unwrap();
        let oracle = brute_force_discrete(&ch, 4).unwrap();
        assert!(
            rel_close(bb.objective, oracle.objective, 1e-9),
            "4-ary instance {i} (N={n}, K={k}): bb {} vs oracle {}",
            bb.objective,
            oracle.objective
        );
        if bb.objective.is_finite() {
            worst_mary = worst_mary
                .max((bb.objective - oracle.objective).abs() / oracle.objective.abs().max(1e-30));
        }
    }
    println!(
        "ACCEPTANCE criterion 1 (discrete global optimality): PASS \
         (100 binary + 100 4-ary instances, worst relative deviations {worst_binary:.2e} / {worst_mary:.2e})"
    );
}

#[test]
fn criterion_2_continuous_certified_gap() {
    let mut worst_gap = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..30u64 {
        let n = 2 + (i as usize % 2); // {2, 3}
        let k = 2 + (i as usize % 2); // {2, 3}
        let ch = generate_channels(20_001, i, k, n);
        let sol = solve_continuous(&ch, 1e-3).unwrap();
        assert!(
            sol.certificate.gap <= 1e-3 + 1e-12,
            "instance {i}: gap {}",
            sol.certificate.gap
        );
        let steps = if n == 2 { 1024 } else { 256 };
        let grid = grid_oracle_continuous(&ch, steps).unwrap();
        assert!(
            sol.objective <= grid.objective + 1e-6,
            "instance {i}: sbb {} vs grid {}",
            sol.objective,
            grid.objective
        );
        assert!(
            sol.objective + 1e-12 >= sol.certificate.global_lower_bound,
            "instance {i}: objective below its own bound"
        );
        worst_gap = worst_gap.max(sol.certificate.gap);
        worst_excess = worst_excess.max(sol.objective - grid.objective);
    }
    println!(
        "ACCEPTANCE criterion 2 (continuous certified gap): PASS \
         (30 instances, worst gap {worst_gap:.2e}, worst objective-minus-grid {worst_excess:.2e})"
    );
}

#[test]
fn criterion_3_power_allocation_fairness() {
    let mut rng = Lcg(0xFA1B);
    let mut worst_spread = 0.0f64;
    let mut worst_beat = 0.0f64;
    for i in 0..1000u64 {
        let n = 2 + (i as usize % 5);
        let k = 2 + (i as usize % 3);
        let ch = generate_channels(30_001, i, k, n);
        let phases: Vec<f64> = (0..n).map(|_| std::f64::consts::TAU * rng.uniform()).collect();
        let beam = Beamformer::from_phases(&phases);
        let gains = effective_gains(&beam, &ch).unwrap();
        if gains.iter().any(|g| *g <= 0.0) {
            continue; // a random beam nulling a user has no finite allocation
        }
        let p = 0.1 + 99.9 * rng.uniform();
        let (powers, t_star) = allocate_power(&gains, p).unwrap();

        let total: f64 = powers.iter().sum();
        assert!((total - p).abs() <= 1e-9 * p, "instance {i}: budget violated");
        let snrs: Vec<f64> = powers.iter().zip(&gains).map(|(pk, gk)| pk * gk).collect();
        let spread = snrs.iter().cloned().fold(f64::MIN, f64::max)
            - snrs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            spread <= 1e-9 * t_star,
            "instance {i}: unequal SNRs, spread {spread:e} vs t* {t_star:e}"
        );
        worst_spread = worst_spread.max(spread / t_star);

        // No sampled power split may beat the closed form beyond 1e-6 relative.
        let best_sampled = best_split_floor(&gains, p, &mut rng);
        assert!(
            best_sampled <= t_star * (1.0 + 1e-6),
            "instance {i}: sampled split {best_sampled} beats t* {t_star}"
        );
        worst_beat = worst_beat.max(best_sampled / t_star - 1.0);
    }
    println!(
        "ACCEPTANCE criterion 3 (equal-SNR allocation): PASS \
         (1000 pairs, worst SNR spread {worst_spread:.2e} t*, best sampled split at {worst_beat:+.2e} relative)"
    );
}

/// Best min-SNR over 200 feasible power splits: a 1-D grid for two users,
/// seeded simplex samples otherwise.
fn best_split_floor(gains: &[f64], p: f64, rng: &mut Lcg) -> f64 {
    let k = gains.len();
    let mut best = f64::NEG_INFINITY;
    if k == 2 {
        for i in 0..200 {
            let p1 = p * (i as f64 + 0.5) / 200.0;
            let floor = (p1 * gains[0]).min((p - p1) * gains[1]);
            best = best.max(floor);
        }
    } else {
        for _ in 0..200 {
            // Exponential draws normalized to the simplex.
            let draws: Vec<f64> = (0..k).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let sum: f64 = draws.iter().sum();
            let floor = draws
                .iter()
                .zip(gains)
                .map(|(d, g)| p * d / sum * g)
                .fold(f64::MAX, f64::min);
            best = best.max(floor);
        }
    }
    best
}

#[test]
fn criterion_4_bound_validity() {
    // Binary layer: K^2 / UB_tot against completed objectives.
    let mut rng = Lcg(0xB0D);
    for i in 0..1000u64 {
        let n = 3 + (i as usize % 6);
        let k = 1 + (i as usize % 4);
        let ch = generate_channels(40_001, i, k, n);
        let r = aggregate_real_matrix(&ch);
        let depth = rng.range(1, n); // 1..n-1 keeps free coordinates
        let mut signs = vec![1i8];
        for _ in 1..depth {
            signs.push(if rng.next_u64() & 1 == 0 { 1 } else { -1 });
        }
        let node = BinaryNode::new(signs.clone());
        let ub = binary_node_ub(&node, &r).unwrap();
        let lb = binary_node_lb(ub, k);
        let mut completion = signs;
        for _ in depth..n {
            completion.push(if rng.next_u64() & 1 == 0 { 1 } else { -1 });
        }
        let f = objective(&Beamformer::from_signs(&completion), &ch).unwrap();
        assert!(lb <= f + 1e-8, "binary pair {i}: LB {lb} vs f {f}");
    }

    // M-ary layers: individual and aggregate bounds.
    for i in 0..1000u64 {
        let n = 3 + (i as usize % 5);
        let k = 1 + (i as usize % 4);
        let m = [2u32, 4, 8][i as usize % 3];
        let ch = generate_channels(40_002, i, k, n);
        let r = aggregate_hermitian_matrix(&ch);
        let depth = rng.range(1, n);
        let mut prefix = vec![0u32];
        for _ in 1..depth {
            prefix.push((rng.next_u64() % m as u64) as u32);
        }
        let node = MaryNode::new(&ch, m, prefix.clone());
        let li = indiv_lb(&node);
        let la = agg_lb(&node, &r).unwrap();
        let mut completion = prefix;
        for _ in depth..n {
            completion.push((rng.next_u64() % m as u64) as u32);
        }
        let f = objective(&Beamformer::from_levels(&completion, m), &ch).unwrap();
        assert!(li <= f + 1e-8, "indiv pair {i}: LB {li} vs f {f}");
        assert!(la <= f + 1e-8, "agg pair {i}: LB {la} vs f {f}");
    }

    // Relaxation duals: 100 boxes x 10 feasible completions each.
    for i in 0..100u64 {
        let n = 2 + (i as usize % 3);
        let k = 1 + (i as usize % 3);
        let ch = generate_channels(40_003, i, k, n);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for _ in 0..n {
            let center = std::f64::consts::TAU * rng.uniform();
            let width = 1e-3 + (std::f64::consts::PI - 1e-3) * rng.uniform();
            lo.push(center - 0.5 * width);
            hi.push(center + 0.5 * width);
        }
        let bx = PhaseBox::new(lo.clone(), hi.clone()).unwrap();
        let out = solve_node(&ch, &bx, 1e-6).unwrap();
        for _ in 0..10 {
            let phases: Vec<f64> = (0..n)
                .map(|c| lo[c] + (hi[c] - lo[c]) * rng.uniform())
                .collect();
            let f = objective(&Beamformer::from_phases(&phases), &ch).unwrap();
            assert!(
                out.dual_lower_bound <= f + 1e-8,
                "sdp box {i}: dual {} vs f {f}",
                out.dual_lower_bound
            );
        }
    }
    println!(
        "ACCEPTANCE criterion 4 (bound validity): PASS \
         (1000 binary, 1000 M-ary, 1000 relaxation pairs, no violation beyond 1e-8)"
    );
}

#[test]
fn criterion_5_bb_dominates_ao() {
    let rows = run_sweep(&SweepConfig {
        record_wall_time: false,
        ..SweepConfig::default_discrete(50_001, 15)
    });
    let mut paired = 0usize;
    for chunk in rows.chunks(4) {
        // Mode order: bb/binary, ao/binary, bb/mary4, ao/mary4.
        for (bb, ao) in [(&chunk[0], &chunk[1]), (&chunk[2], &chunk[3])] {
            assert_eq!(bb.solver, "bb");
            assert_eq!(ao.solver, "ao");
            assert_eq!(bb.constraint, ao.constraint);
            if bb.objective.is_finite() || ao.objective.is_finite() {
                assert!(
                    bb.objective <= ao.objective + 1e-9,
                    "trial {} N={} K={} {}: bb {} vs ao {}",
                    bb.trial,
                    bb.n,
                    bb.k,
                    bb.constraint,
                    bb.objective,
                    ao.objective
                );
            }
            paired += 1;
        }
    }
    let cont_rows = run_sweep(&SweepConfig {
        record_wall_time: false,
        ..SweepConfig::default_continuous(50_002, 6)
    });
    for chunk in cont_rows.chunks(2) {
        let (bb, ao) = (&chunk[0], &chunk[1]);
        assert_eq!(bb.solver, "bb");
        assert!(
            bb.objective <= ao.objective + 1e-9,
            "trial {} N={} K={} continuous: bb {} vs ao {}",
            bb.trial,
            bb.n,
            bb.k,
            bb.objective,
            ao.objective
        );
        paired += 1;
    }
    println!(
        "ACCEPTANCE criterion 5 (BB dominates AO): PASS ({paired} paired instances across binary/4-ary/continuous)"
    );
}

#[test]
fn criterion_6_monte_carlo_trends() {
    let trials = 200u64;
    let seed = 60_001u64;

    // Discrete classes over N in {4, 6, 8}, K = 3.
    let mean = |vals: &Vec<f64>| vals.iter().sum::<f64>() / vals.len() as f64;
    let mut discrete: Vec<(&str, Vec<Vec<f64>>)> = Vec::new();
    for (label, m) in [("binary", 2u32), ("4-ary", 4)] {
        let mut by_n: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for t in 0..trials {
            for (slot, n) in [4usize, 6, 8].iter().enumerate() {
                let ch = generate_channels(seed, t, 3, *n);
                let sol = solve_mary(&ch, m).unwrap();
                by_n[slot].push(sol.objective);
            }
        }
        for w in 0..2 {
            let a = mean(&by_n[w]);
            let b = mean(&by_n[w + 1]);
            assert!(
                b < a,
                "{label}: mean objective not decreasing from N slot {w} ({a}) to {} ({b})",
                w + 1
            );
        }
        discrete.push((label, by_n));
    }

    // Continuous class, capped at N = 4 for runtime: decreasing over {2,3,4}.
    let mut cont_by_n: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for t in 0..trials {
        for (slot, n) in [2usize, 3, 4].iter().enumerate() {
            let ch = generate_channels(seed, t, 3, *n);
            let sol = solve_continuous(&ch, 1e-3).unwrap();
            cont_by_n[slot].push(sol.objective);
        }
    }
    for w in 0..2 {
        let a = mean(&cont_by_n[w]);
        let b = mean(&cont_by_n[w + 1]);
        assert!(b < a, "continuous: mean objective not decreasing");
    }

    // Ordering continuous <= 4-ary <= binary at N = 4, paired, one-sided 95%.
    let n4_binary = &discrete[0].1[0];
    let n4_mary = &discrete[1].1[0];
    let n4_cont = &cont_by_n[2];
    for (hi, lo, label) in [
        (n4_binary, n4_mary, "binary minus 4-ary"),
        (n4_mary, n4_cont, "4-ary minus continuous"),
    ] {
        let diffs: Vec<f64> = hi.iter().zip(lo.iter()).map(|(a, b)| a - b).collect();
        let n = diffs.len() as f64;
        let m = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1.0);
        let t_stat = m / (var / n).sqrt();
        assert!(
            t_stat > 1.645,
            "{label}: mean gap {m:.4} not positive at 95% confidence (t = {t_stat:.2})"
        );
    }
    println!(
        "ACCEPTANCE criterion 6 (Monte Carlo trends): PASS \
         (200 trials, K=3: means decrease in N for every class; continuous <= 4-ary <= binary at 95%)"
    );
}

#[test]
fn criterion_7_sdp_kernel_checks() {
    // Shrinking boxes centered on a stationary point approach f(w*).
    let ch = generate_channels(70_001, 0, 2, 3);
    let polish = AoConfig {
        init: AoInit::UniformRandom { seed: 1 },
        restarts: 8,
        max_sweeps: 400,
        rel_tol: 1e-14,
    };
    let stat = ao_solve(&ch, PhaseConstraint::Continuous, &polish).unwrap();
    let theta = stat.beamformer.phases().to_vec();
    let f_star = stat.objective;
    let mut width = std::f64::consts::FRAC_PI_2;
    let mut final_gap = f64::INFINITY;
    while width >= 1e-3 {
        let lo: Vec<f64> = theta.iter().map(|t| t - 0.5 * width).collect();
        let hi: Vec<f64> = theta.iter().map(|t| t + 0.5 * width).collect();
        let out = solve_node(&ch, &PhaseBox::new(lo, hi).unwrap(), 1e-6).unwrap();
        assert!(out.dual_lower_bound <= f_star + 1e-8);
        final_gap = f_star - out.dual_lower_bound;
        width *= 0.5;
    }
    assert!(
        final_gap <= 1e-3,
        "shrinking-box bound not within 1e-3 at width 1e-3: gap {final_gap:e}"
    );

    // Schur equivalence table.
    assert!(schur_snr_constraint(1.0, 1.0));
    assert!(!schur_snr_constraint(0.5, 1.0));
    assert!(schur_snr_constraint(2.0, 0.5));

    // Lifted matrix residuals: unit diagonal and PSD within 1e-8.
    let mut worst_diag = 0.0f64;
    for i in 0..10u64 {
        let n = 2 + (i as usize % 3);
        let k = 1 + (i as usize % 3);
        let ch = generate_channels(70_002, i, k, n);
        let lo: Vec<f64> = (0..n).map(|c| 0.3 * c as f64).collect();
        let hi: Vec<f64> = (0..n).map(|c| 0.3 * c as f64 + 2.0).collect();
        let out = solve_node(&ch, &PhaseBox::new(lo, hi).unwrap(), 1e-6).unwrap();
        let m = &out.lifted;
        for d in 0..m.rows() {
            worst_diag = worst_diag.max((m[(d, d)].re - 1.0).abs().max(m[(d, d)].im.abs()));
        }
        assert!(worst_diag <= 1e-8, "diagonal residual {worst_diag:e}");
        assert!(
            hermitian_psd_within(m, 1e-8),
            "lifted matrix not PSD within 1e-8"
        );
        assert!(out.dual_lower_bound <= out.primal_value + 1e-8);
    }
    println!(
        "ACCEPTANCE criterion 7 (SDP kernel): PASS \
         (shrinking-box gap {final_gap:.2e} at width 1e-3; Schur table; residuals <= 1e-8)"
    );
}

/// PSD within slack: Cholesky of M + slack*I must succeed.
fn hermitian_psd_within(m: &ComplexMatrix, slack: f64) -> bool {
    let n = m.rows();
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            if i == j {
                sum += Complex64::new(slack, 0.0);
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.re.is_nan() {
                    return false;
                }
                l[i * n + i] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    true
}

#[test]
fn criterion_8_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_maxmin-beam");
    let dir = std::env::temp_dir().join("maxmin_beam_acceptance_cli");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    let run = |args: &[&str]| {
        let out = Command::new(bin)
            .args(args)
            .current_dir(&dir)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };

    // gen-channels twice.
    run(&["gen-channels", "--seed", "11", "--k", "3", "--n", "5", "--out", "a.json"]);
    run(&["gen-channels", "--seed", "11", "--k", "3", "--n", "5", "--out", "b.json"]);
    let a = std::fs::read(dir.join("a.json")).unwrap();
    let b = std::fs::read(dir.join("b.json")).unwrap();
    assert_eq!(a, b, "gen-channels output differs between runs");

    // solve twice per mode.
    for (mode, out1, out2) in [
        ("binary", "s1.json", "s2.json"),
        ("mary", "m1.json", "m2.json"),
        ("continuous", "c1.json", "c2.json"),
    ] {
        run(&["solve", "--channels", "a.json", "--mode", mode, "--out", out1]);
        run(&["solve", "--channels", "a.json", "--mode", mode, "--out", out2]);
        let x = std::fs::read(dir.join(out1)).unwrap();
        let y = std::fs::read(dir.join(out2)).unwrap();
        assert_eq!(x, y, "solve --mode {mode} output differs between runs");
    }

    // sweep twice with wall-time recording off.
    let cfg = r#"{
        "seed": 5, "trials": 3, "n_values": [2, 3], "k_values": [2],
        "modes": [
            {"solver": "bb", "constraint": {"kind": "binary"}},
            {"solver": "ao", "constraint": {"kind": "mary", "m": 4}},
            {"solver": "oracle", "constraint": {"kind": "binary"}}
        ],
        "power_linear": 10.0, "sigma2": 1.0, "epsilon": 0.001,
        "record_wall_time": false
    }"#;
    std::fs::write(dir.join("sweep.json"), cfg).unwrap();
    run(&["sweep", "--config", "sweep.json", "--out", "r1.csv"]);
    run(&["sweep", "--config", "sweep.json", "--out", "r2.csv"]);
    let x = std::fs::read(dir.join("r1.csv")).unwrap();
    let y = std::fs::read(dir.join("r2.csv")).unwrap();
    assert_eq!(x, y, "sweep output differs between runs");

    println!(
        "ACCEPTANCE criterion 8 (CLI determinism): PASS \
         (gen-channels, three solve modes, and sweep byte-identical across repeated runs)"
    );
}

#[test]
fn criterion_5_oracle_rows_match_bb() {
    // Companion check for the sweep dispatch: oracle rows agree with BB rows
    // wherever both run, so criterion 5's comparisons are about the solvers,
    // not the plumbing.
    let mut cfg = SweepConfig::default_discrete(50_003, 4);
    cfg.record_wall_time = false;
    cfg.n_values = vec![2, 4];
    cfg.k_values = vec![2];
    cfg.modes.push(maxmin_beam::sweep::SweepMode {
        solver: SolverKind::Oracle,
        constraint: PhaseConstraint::Binary,
    });
    let rows = run_sweep(&cfg);
    for chunk in rows.chunks(5) {
        let bb = &chunk[0];
        let oracle = &chunk[4];
        assert_eq!(oracle.solver, "oracle");
        assert!(rel_close(bb.objective, oracle.objective, 1e-9));
    }
    println!("ACCEPTANCE criterion 5 companion (oracle dispatch agreement): PASS");
}
