//! Statistic-level acceptance suite. Each test checks one numbered
//! behavioural contract at its stated tolerance and runtime budget and
//! prints a single `acceptance NN <name>: PASS/FAIL` line (visible with
//! `--nocapture`; cargo shows the lines for failing tests either way).
//!
//! The tenth contract (pipeline determinism and round-trip) exercises the
//! command-line binary and lives in the cli crate's test suite.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use interplay_core::calibration::ga_calibrate;
use interplay_core::estimation::{
    ekf_predict, ekf_update, motion_jacobian, unicycle_step, EkfState,
};
use interplay_core::game::coop::{shapley_values, solve_cooperative_from, GaConfig};
use interplay_core::game::nash::{
    is_nash, lemke_howson_all, solve_nash_enumeration, Equilibrium,
};
use interplay_core::game::rollout::{rollout_from, RolloutOutcome};
use interplay_core::game::{
    build_stage_game, GameConfig, GameType, PlayerState, Rationality, StageCell, StagePayoffs,
};
use interplay_core::model::{ActionSequence, VehicleRole, VehicleState};
use interplay_core::pipeline::config::load_config;
use interplay_core::risk::{vehicle_risk, RiskParams};
use interplay_core::scoring::{
    ability_score, euclidean_distance, morphological_distance, pad_align,
};
use interplay_core::stats::SampleSummary;
use interplay_core::synth::{crossing_encounter, synthesize_crossing_scenario};
use interplay_core::{compare_groups, VehicleGeometry};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Cap on the per-check detail lines printed for a failing criterion.
const MAX_PRINTED: usize = 8;

/// Print the one-line verdict, then panic if anything failed. The line is
/// printed before the panic so it shows up in captured output as well.
fn report(number: u8, name: &str, limit: Duration, elapsed: Duration, mut failures: Vec<String>) {
    if elapsed > limit {
        failures.push(format!(
            "runtime {:.2} s exceeded the {:.0?} budget",
            elapsed.as_secs_f64(),
            limit
        ));
    }
    if failures.is_empty() {
        println!(
            "acceptance {number:02} {name}: PASS ({:.2} s)",
            elapsed.as_secs_f64()
        );
        return;
    }
    println!(
        "acceptance {number:02} {name}: FAIL ({:.2} s)",
        elapsed.as_secs_f64()
    );
    for msg in failures.iter().take(MAX_PRINTED) {
        println!("  - {msg}");
    }
    if failures.len() > MAX_PRINTED {
        println!("  ... and {} more", failures.len() - MAX_PRINTED);
    }
    panic!(
        "acceptance {number:02} {name}: {} check(s) failed",
        failures.len()
    );
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

// ---------------------------------------------------------------------------
// 01: two-sample t-tests reproduce the reference comparison.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_two_sample_t_tests() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let a = SampleSummary {
        n: 53,
        mean: 3.6906,
        sd: 1.8081,
    };
    let b = SampleSummary {
        n: 92,
        mean: 4.9913,
        sd: 1.4950,
    };
    match compare_groups("pet", a, b) {
        Ok(cmp) => {
            check(&mut failures, (cmp.pooled.t - (-4.668)).abs() <= 0.005, || {
                format!("pooled t = {:.6}, expected -4.668 +/- 0.005", cmp.pooled.t)
            });
            check(&mut failures, (cmp.pooled.df - 143.0).abs() < 1e-12, || {
                format!("pooled df = {}, expected 143", cmp.pooled.df)
            });
            check(&mut failures, (cmp.welch.t - (-4.436)).abs() <= 0.005, || {
                format!("welch t = {:.6}, expected -4.436 +/- 0.005", cmp.welch.t)
            });
            check(&mut failures, (cmp.welch.df - 92.8).abs() <= 0.2, || {
                format!("welch df = {:.4}, expected 92.8 +/- 0.2", cmp.welch.df)
            });
            check(&mut failures, cmp.pooled.p_value < 1e-4, || {
                format!("pooled p = {:.3e}, expected << 0.001", cmp.pooled.p_value)
            });
        }
        Err(e) => failures.push(format!("compare_groups failed: {e}")),
    }

    report(
        1,
        "two-sample-t-tests",
        Duration::from_secs(1),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 02: the pivoting Nash solver agrees with the support-enumeration oracle.
// ---------------------------------------------------------------------------

fn random_bimatrix(rng: &mut ChaCha8Rng) -> StagePayoffs {
    let cells = (0..3)
        .map(|_| {
            (0..3)
                .map(|_| StageCell {
                    u_row: rng.gen::<f64>(),
                    u_col: rng.gen::<f64>(),
                    feasible: true,
                })
                .collect()
        })
        .collect();
    StagePayoffs {
        cells,
        all_infeasible: false,
    }
}

/// Sup-norm distance between two mixed-strategy profiles.
fn profile_distance(a: &Equilibrium, b: &Equilibrium) -> f64 {
    let rows = a
        .row_strategy
        .iter()
        .zip(&b.row_strategy)
        .map(|(x, y)| (x - y).abs());
    let cols = a
        .col_strategy
        .iter()
        .zip(&b.col_strategy)
        .map(|(x, y)| (x - y).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

#[test]
fn acceptance_02_nash_solver_oracle_agreement() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x02);

    for case in 0..200 {
        let game = random_bimatrix(&mut rng);
        let oracle = match solve_nash_enumeration(&game) {
            Ok(eqs) => eqs,
            Err(e) => {
                failures.push(format!("game {case}: enumeration failed: {e}"));
                continue;
            }
        };
        if oracle.is_empty() {
            failures.push(format!("game {case}: enumeration found no equilibrium"));
            continue;
        }
        let solutions = match lemke_howson_all(&game) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("game {case}: pivoting solver failed: {e}"));
                continue;
            }
        };
        if solutions.is_empty() {
            failures.push(format!("game {case}: pivoting solver found nothing"));
            continue;
        }
        for (k, sol) in solutions.iter().enumerate() {
            let eq = &sol.equilibrium;
            check(
                &mut failures,
                is_nash(&game, &eq.row_strategy, &eq.col_strategy, 1e-9),
                || format!("game {case} solution {k}: deviation gain above 1e-9"),
            );
            let nearest = oracle
                .iter()
                .map(|o| profile_distance(o, eq))
                .fold(f64::INFINITY, f64::min);
            check(&mut failures, nearest <= 1e-6, || {
                format!(
                    "game {case} solution {k}: {nearest:.3e} from the nearest \
                     enumerated equilibrium (limit 1e-6)"
                )
            });
        }
    }

    report(
        2,
        "nash-solver-oracle-agreement",
        Duration::from_secs(10),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 03: Shapley values are efficient and symmetric.
// ---------------------------------------------------------------------------

/// Swap the membership bits of players `i` and `j` in the coalition mask.
fn swap_players(mask: u32, i: usize, j: usize) -> u32 {
    let bi = (mask >> i) & 1;
    let bj = (mask >> j) & 1;
    if bi == bj {
        mask
    } else {
        mask ^ ((1 << i) | (1 << j))
    }
}

#[test]
fn acceptance_03_shapley_efficiency_symmetry() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x03);

    for case in 0..100 {
        // Efficiency on a raw random characteristic function.
        let n = rng.gen_range(1..=4usize);
        let mut v: Vec<f64> = (0..1u32 << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        v[0] = 0.0;
        match shapley_values(n, &|mask| v[mask as usize]) {
            Ok(phi) => {
                let total: f64 = phi.iter().sum();
                let grand = v[(1usize << n) - 1];
                check(&mut failures, (total - grand).abs() <= 1e-12, || {
                    format!(
                        "case {case}: sum of allocations {total:.15} != grand value {grand:.15}"
                    )
                });
            }
            Err(e) => failures.push(format!("case {case}: allocation failed: {e}")),
        }

        // Symmetry on a function symmetrized over one random player pair.
        let n2 = rng.gen_range(2..=4usize);
        let mut raw: Vec<f64> = (0..1u32 << n2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        raw[0] = 0.0;
        let i = rng.gen_range(0..n2);
        let j = (i + rng.gen_range(1..n2)) % n2;
        let sym = |mask: u32| 0.5 * (raw[mask as usize] + raw[swap_players(mask, i, j) as usize]);
        match shapley_values(n2, &sym) {
            Ok(phi) => {
                check(&mut failures, (phi[i] - phi[j]).abs() <= 1e-12, || {
                    format!(
                        "case {case}: symmetric players got {:.15} and {:.15}",
                        phi[i], phi[j]
                    )
                });
            }
            Err(e) => failures.push(format!("case {case}: symmetrized allocation failed: {e}")),
        }
    }

    report(
        3,
        "shapley-efficiency-symmetry",
        Duration::from_secs(1),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 04: the cooperative solution never totals less than any Nash equilibrium.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_cooperative_dominance() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x04);

    let scene = crossing_encounter((30.0, 30.0), (5.0, 5.0), Vec::new())
        .expect("crossing scene builds");
    let params = RiskParams::default();

    let mut checked = 0;
    let mut attempts = 0;
    while checked < 100 && attempts < 1000 {
        attempts += 1;
        let m = rng.gen_range(0.1..0.9);
        let cfg = GameConfig {
            m_weight: m,
            n_weight: 1.0 - m,
            rationality: Rationality::ALL[rng.gen_range(0..Rationality::ALL.len())],
            ..GameConfig::default()
        };
        let player = |role: VehicleRole, rng: &mut ChaCha8Rng| {
            let s = rng.gen_range(2.0..25.0);
            PlayerState {
                s_traveled: s,
                dist_to_conflict: 30.0 - s,
                ..PlayerState::new(role, rng.gen_range(0.5..12.0), 30.0, cfg.dt)
            }
        };
        let pl = player(VehicleRole::LeftTurn, &mut rng);
        let ps = player(VehicleRole::Straight, &mut rng);
        let game = match build_stage_game(&pl, &ps, &scene, &cfg, &params) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("attempt {attempts}: stage game failed: {e}"));
                continue;
            }
        };
        if game.all_infeasible {
            continue;
        }
        checked += 1;
        let coop = match solve_cooperative_from(&game, &cfg) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("game {checked}: cooperative solve failed: {e}"));
                continue;
            }
        };
        let eqs = match solve_nash_enumeration(&game) {
            Ok(eqs) => eqs,
            Err(e) => {
                failures.push(format!("game {checked}: enumeration failed: {e}"));
                continue;
            }
        };
        if eqs.is_empty() {
            failures.push(format!("game {checked}: no enumerated equilibrium"));
            continue;
        }
        for (k, eq) in eqs.iter().enumerate() {
            check(&mut failures, coop.total >= eq.total() - 1e-9, || {
                format!(
                    "game {checked} equilibrium {k}: cooperative total {:.12} < \
                     equilibrium total {:.12}",
                    coop.total,
                    eq.total()
                )
            });
        }
    }
    check(&mut failures, checked == 100, || {
        format!("only {checked} feasible stage games out of {attempts} attempts")
    });

    report(
        4,
        "cooperative-dominance",
        Duration::from_secs(10),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 05: the bundled dilemma scenario contrasts the two game types.
// ---------------------------------------------------------------------------

fn longest_mutual_deceleration(out: &RolloutOutcome) -> usize {
    let mut longest = 0;
    let mut run = 0;
    for r in &out.trace {
        if r.accels.0 < 0.0 && r.accels.1 < 0.0 {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    longest
}

#[test]
fn acceptance_05_dilemma_contrast() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let app = load_config(fixtures_dir().join("dilemma.toml")).expect("dilemma config loads");
    let sim = app.simulate.clone().expect("dilemma config carries a scenario block");
    let scene = crossing_encounter(sim.dist, sim.v0, sim.static_objects.clone())
        .expect("dilemma scene builds");
    let run = |game_type: GameType| {
        let cfg = GameConfig {
            game_type,
            ..app.game.clone()
        };
        rollout_from(
            &scene,
            PlayerState::new(VehicleRole::LeftTurn, sim.v0.0, sim.dist.0, cfg.dt),
            PlayerState::new(VehicleRole::Straight, sim.v0.1, sim.dist.1, cfg.dt),
            &cfg,
            &app.risk,
            true,
        )
        .expect("rollout completes")
    };
    let nc = run(GameType::NonCooperative);
    let coop = run(GameType::Cooperative);

    let standoff = longest_mutual_deceleration(&nc);
    check(&mut failures, standoff >= 15, || {
        format!("longest mutual-deceleration run is {standoff} steps, expected >= 15")
    });
    check(&mut failures, coop.timeout.is_none(), || {
        "cooperative rollout timed out".into()
    });
    check(
        &mut failures,
        coop.left_pass_step.is_some() && coop.straight_pass_step.is_some(),
        || {
            format!(
                "cooperative rollout left pass order unresolved: {:?} / {:?}",
                coop.left_pass_step, coop.straight_pass_step
            )
        },
    );
    check(
        &mut failures,
        coop.left_pass_step != coop.straight_pass_step,
        || "cooperative rollout did not separate the crossing times".into(),
    );
    check(
        &mut failures,
        coop.cumulative_total() > nc.cumulative_total(),
        || {
            format!(
                "cooperative total {:.6} does not exceed non-cooperative total {:.6}",
                coop.cumulative_total(),
                nc.cumulative_total()
            )
        },
    );

    report(
        5,
        "dilemma-contrast",
        Duration::from_secs(5),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 06: score metric properties under fuzzing.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_score_metric_properties() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x06);

    for case in 0..10_000 {
        let len_a = rng.gen_range(1..=200usize);
        let len_b = rng.gen_range(1..=200usize);
        let seq = |rng: &mut ChaCha8Rng, len: usize| {
            ActionSequence::new((0..len).map(|_| rng.gen_range(-3.0..3.0)).collect(), 0.1)
        };
        let a = seq(&mut rng, len_a);
        let b = seq(&mut rng, len_b);

        match ability_score(&a, &b) {
            Ok(s) => check(&mut failures, (-1.0..=1.0).contains(&s), || {
                format!("case {case}: score {s} outside [-1, 1]")
            }),
            Err(e) => failures.push(format!("case {case}: scoring failed: {e}")),
        }
        match ability_score(&a, &a) {
            Ok(s) => check(&mut failures, s == 1.0, || {
                format!("case {case}: self-score {s:.17} != 1")
            }),
            Err(e) => failures.push(format!("case {case}: self-scoring failed: {e}")),
        }

        let (x, y) = pad_align(&a, &b).expect("equal step lengths align");
        let d_ed = euclidean_distance(&x, &y).expect("aligned");
        let d_msd = morphological_distance(&x, &y).expect("aligned");
        let d_msd_rev = morphological_distance(&y, &x).expect("aligned");
        check(
            &mut failures,
            d_msd.to_bits() == d_msd_rev.to_bits(),
            || format!("case {case}: distance not symmetric: {d_msd:.17} vs {d_msd_rev:.17}"),
        );
        let sad: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum();
        if sad > 0.0 {
            let slack = 1e-12 * d_ed.max(1.0);
            check(&mut failures, d_msd >= d_ed - slack, || {
                format!("case {case}: weighted distance {d_msd} below plain distance {d_ed}")
            });
            check(&mut failures, d_msd <= 2.0 * d_ed + slack, || {
                format!("case {case}: weighted distance {d_msd} above twice {d_ed}")
            });
        } else {
            check(&mut failures, d_msd == 0.0, || {
                format!("case {case}: identical sequences got distance {d_msd}")
            });
        }
    }

    report(
        6,
        "score-metric-properties",
        Duration::from_secs(5),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 07: filter numerics: Jacobian, covariance shape, noise-free tracking.
// ---------------------------------------------------------------------------

/// Central finite differences of the one-step motion model.
fn fd_jacobian(state: &VehicleState, dt: f64, h: f64) -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let mut plus = *state;
        let mut minus = *state;
        match col {
            0 => {
                plus.x += h;
                minus.x -= h;
            }
            1 => {
                plus.y += h;
                minus.y -= h;
            }
            2 => {
                plus.v += h;
                minus.v -= h;
            }
            _ => {
                plus.theta += h;
                minus.theta -= h;
            }
        }
        let fp = unicycle_step(&plus, (0.0, 0.0), dt);
        let fm = unicycle_step(&minus, (0.0, 0.0), dt);
        j[(0, col)] = (fp.x - fm.x) / (2.0 * h);
        j[(1, col)] = (fp.y - fm.y) / (2.0 * h);
        j[(2, col)] = (fp.v - fm.v) / (2.0 * h);
        j[(3, col)] = (fp.theta - fm.theta) / (2.0 * h);
    }
    j
}

#[test]
fn acceptance_07_filter_numerics() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x07);

    // Analytic Jacobian against central differences. Headings stay clear of
    // the wrap at +/-pi and speeds clear of the clamp at zero so the motion
    // model is smooth across the perturbed evaluations.
    for case in 0..1000 {
        let state = VehicleState::new(
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-50.0..50.0),
            rng.gen_range(0.5..15.0),
            rng.gen_range(-2.9..2.9),
        );
        let dt = rng.gen_range(0.05..0.2);
        let analytic = motion_jacobian(&state, dt);
        let numeric = fd_jacobian(&state, dt, 1e-6);
        for r in 0..4 {
            for c in 0..4 {
                let denom = numeric[(r, c)].abs().max(1.0);
                let rel = (analytic[(r, c)] - numeric[(r, c)]).abs() / denom;
                check(&mut failures, rel <= 1e-6, || {
                    format!(
                        "case {case} entry ({r},{c}): relative error {rel:.3e} \
                         ({} vs {})",
                        analytic[(r, c)],
                        numeric[(r, c)]
                    )
                });
            }
        }
    }

    // Covariance stays symmetric positive semidefinite through random
    // predict/update interleavings.
    for chain in 0..10 {
        let mut ekf = EkfState::from_vehicle(&VehicleState::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(0.5..12.0),
            rng.gen_range(-2.9..2.9),
        ));
        for step in 0..100 {
            let out = if rng.gen_bool(0.5) {
                ekf_predict(
                    &ekf,
                    (rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3)),
                    0.1,
                )
            } else {
                ekf_update(
                    &ekf,
                    (
                        ekf.mean[0] + rng.gen_range(-0.5..0.5),
                        ekf.mean[1] + rng.gen_range(-0.5..0.5),
                    ),
                )
            };
            match out {
                Ok(next) => ekf = next,
                Err(e) => {
                    failures.push(format!("chain {chain} step {step}: {e}"));
                    break;
                }
            }
            let asym = (ekf.covariance - ekf.covariance.transpose()).abs().max();
            check(&mut failures, asym <= 1e-12, || {
                format!("chain {chain} step {step}: covariance asymmetry {asym:.3e}")
            });
            let min_eig = ekf
                .covariance
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            check(&mut failures, min_eig >= -1e-10, || {
                format!("chain {chain} step {step}: covariance eigenvalue {min_eig:.3e}")
            });
        }
    }

    // Noise-free tracking: exact position measurements of a vehicle that
    // follows the motion model must pull the estimate within a millimetre
    // of the truth by step 20.
    let dt = 0.1;
    let control = (0.3, 0.05);
    let mut truth = VehicleState::new(0.0, 0.0, 5.0, 0.2);
    let mut ekf = EkfState::from_vehicle(&VehicleState::new(0.5, -0.4, 4.5, 0.25));
    ekf.measurement_noise = Matrix2::from_diagonal(&Vector2::new(1e-9, 1e-9));
    let mut err = f64::INFINITY;
    for step in 0..20 {
        truth = unicycle_step(&truth, control, dt);
        match ekf_predict(&ekf, control, dt).and_then(|e| ekf_update(&e, (truth.x, truth.y))) {
            Ok(next) => ekf = next,
            Err(e) => {
                failures.push(format!("tracking step {step}: {e}"));
                break;
            }
        }
        err = (ekf.mean[0] - truth.x).hypot(ekf.mean[1] - truth.y);
    }
    check(&mut failures, err < 1e-3, || {
        format!("tracking error {err:.6} m after 20 steps, expected < 1e-3")
    });

    report(
        7,
        "filter-numerics",
        Duration::from_secs(5),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 08: the risk field falls with distance and rises with approach speed.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_risk_monotonicity() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x08);
    let geom = VehicleGeometry::default();

    for case in 0..1000 {
        let params = RiskParams::from_vector([
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.01..1.0),
            rng.gen_range(0.01..1.0),
            rng.gen_range(0.05..2.0),
            rng.gen_range(0.05..2.0),
        ]);
        let actor = VehicleState::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(0.0..15.0),
            rng.gen_range(-3.1..3.1),
        );
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut r_near = rng.gen_range(0.5..40.0);
        let mut r_far = rng.gen_range(0.5..40.0);
        if r_near > r_far {
            std::mem::swap(&mut r_near, &mut r_far);
        }
        let probe_at = |r: f64| (actor.x + r * phi.cos(), actor.y + r * phi.sin());

        // Non-increasing in the gap along any fixed ray from the actor.
        let risk_near = vehicle_risk(probe_at(r_near), &actor, &geom, &params);
        let risk_far = vehicle_risk(probe_at(r_far), &actor, &geom, &params);
        check(&mut failures, risk_far <= risk_near + 1e-12, || {
            format!(
                "case {case}: risk rose with distance ({risk_near:.9} at {r_near:.2} m \
                 -> {risk_far:.9} at {r_far:.2} m)"
            )
        });

        // Non-decreasing in the actor's speed at a fixed probe point. Both
        // body-axis speed components scale with the speed itself.
        let faster = VehicleState::new(
            actor.x,
            actor.y,
            actor.v + rng.gen_range(0.1..5.0),
            actor.theta,
        );
        let risk_slow = vehicle_risk(probe_at(r_near), &actor, &geom, &params);
        let risk_fast = vehicle_risk(probe_at(r_near), &faster, &geom, &params);
        check(&mut failures, risk_fast >= risk_slow - 1e-12, || {
            format!(
                "case {case}: risk fell when the actor sped up \
                 ({risk_slow:.9} -> {risk_fast:.9})"
            )
        });
    }

    report(
        8,
        "risk-monotonicity",
        Duration::from_secs(2),
        t0.elapsed(),
        failures,
    );
}

// ---------------------------------------------------------------------------
// 09: the calibration search recovers planted field parameters.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_parameter_recovery() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    let planted = [0.35, 0.25, 0.45, 0.60, 0.70];
    let params = RiskParams::from_vector(planted);
    // Safety-weighted payoffs at short-to-medium range: per-cell risk
    // differences are comparable to the efficiency increment, so the chosen
    // actions (and therefore the objective) genuinely depend on the field
    // parameters. Close-range encounters are useless here: feasibility alone
    // pins the actions and the objective is flat in the parameters.
    let cfg = GameConfig {
        max_steps: 150,
        m_weight: 0.1,
        n_weight: 0.9,
        ..GameConfig::default()
    };
    let grid_step = 0.05;

    // Jointly these five excite every parameter: every cell whose objective
    // is zero lies within one grid step of the planted vector on all axes,
    // and the mix of speeds and ranges keeps descent paths open toward it.
    let cases = [
        ("cal_a", (6.5, 7.5), (16.0, 22.0)),
        ("cal_b", (5.2, 6.8), (13.0, 19.0)),
        ("cal_c", (6.2, 5.4), (17.0, 13.0)),
        ("cal_d", (5.8, 7.2), (15.0, 21.0)),
        ("cal_e", (6.6, 4.6), (19.0, 12.0)),
    ];
    let scenarios: Vec<_> = cases
        .iter()
        .map(|(id, v0, dist)| {
            synthesize_crossing_scenario(id, *v0, *dist, &cfg, &params)
                .expect("planted-parameter scenario synthesizes")
        })
        .collect();

    let mut recovered = 0;
    for seed in 0..10u64 {
        let ga = GaConfig {
            population: 20,
            generations: 50,
            seed,
            ..GaConfig::default()
        };
        match ga_calibrate(&scenarios, &cfg, &ga, grid_step) {
            Ok(result) => {
                let got = result.params.to_vector();
                let hit = got
                    .iter()
                    .zip(&planted)
                    .all(|(g, p)| (g - p).abs() <= grid_step + 1e-9);
                if hit {
                    recovered += 1;
                } else {
                    println!(
                        "  seed {seed}: recovered {got:?} vs planted {planted:?} \
                         (objective {:.3e})",
                        result.objective
                    );
                }
            }
            Err(e) => failures.push(format!("seed {seed}: calibration failed: {e}")),
        }
    }
    check(&mut failures, recovered >= 9, || {
        format!("planted parameters recovered in only {recovered}/10 seeds, expected >= 9")
    });

    report(
        9,
        "parameter-recovery",
        Duration::from_secs(300),
        t0.elapsed(),
        failures,
    );
}
