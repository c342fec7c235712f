//! Risk-parameter calibration: a binary genetic algorithm searches the
//! five-dimensional parameter grid for the vector whose rational rollouts
//! best reproduce recorded acceleration sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::coop::GaConfig;
use crate::game::rollout::stepwise_rational_actions;
use crate::game::{EncounterScene, GameConfig, PlayerState};
use crate::model::{ActionSequence, ScenarioRecord, VehicleRole, VehicleState};
use crate::risk::RiskParams;

/// Fitness floor guard; a perfect objective of zero maps to fitness 1e9.
pub const FITNESS_EPSILON: f64 = 1e-9;

/// Recorded acceleration sequence of one driver up to the sample where its
/// traveled path distance first reaches the conflict point.
pub fn recorded_actions(
    trajectory: &[VehicleState],
    dist_to_conflict: f64,
    dt: f64,
) -> ActionSequence {
    let mut cum = 0.0;
    let mut crossing: Option<usize> = None;
    for i in 1..trajectory.len() {
        let (x0, y0) = trajectory[i - 1].position();
        let (x1, y1) = trajectory[i].position();
        cum += ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        if cum >= dist_to_conflict {
            crossing = Some(i);
            break;
        }
    }
    let len = crossing.unwrap_or(trajectory.len());
    ActionSequence::new(trajectory.iter().take(len).map(|s| s.a).collect(), dt)
}

/// Mean squared deviation between recorded and rational accelerations,
/// averaged per role over all scenarios:
/// F = 1/2 * sum over roles of (1/N) * sum over scenarios of
/// the summed squared per-step deviation.
///
/// The rational acceleration at each step is the action the model picks in
/// the recorded state of that step (states are pinned to the data rather
/// than re-simulated), so every step compares model and driver under
/// identical conditions and one early disagreement cannot snowball through
/// the rest of the scenario.
pub fn calibration_objective(
    scenarios: &[ScenarioRecord],
    params: &RiskParams,
    cfg: &GameConfig,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput(
            "calibration needs at least one scenario".into(),
        ));
    }
    params.validate()?;
    let mut role_sums = [0.0, 0.0];
    for scenario in scenarios {
        scenario.validate()?;
        let scene = EncounterScene::from_scenario(scenario)?;
        let player = |role: VehicleRole| {
            PlayerState::new(
                role,
                scenario.trajectory(role)[0].v,
                scenario.dist_to_conflict(role),
                cfg.dt,
            )
        };
        let recorded = |role: VehicleRole| {
            recorded_actions(
                scenario.trajectory(role),
                scenario.dist_to_conflict(role),
                scenario.dt,
            )
        };
        let (left_pairs, straight_pairs) = stepwise_rational_actions(
            &scene,
            player(VehicleRole::LeftTurn),
            player(VehicleRole::Straight),
            &recorded(VehicleRole::LeftTurn),
            &recorded(VehicleRole::Straight),
            cfg,
            params,
        )?;
        for (slot, pairs) in [left_pairs, straight_pairs].iter().enumerate() {
            role_sums[slot] += pairs
                .iter()
                .map(|(model, real)| (model - real) * (model - real))
                .sum::<f64>();
        }
    }
    let n = scenarios.len() as f64;
    Ok(0.5 * (role_sums[0] / n + role_sums[1] / n))
}

/// GA fitness: inverse objective with a small guard, so a perfect match
/// scores 1e9.
pub fn fitness(objective: f64) -> f64 {
    1.0 / (objective + FITNESS_EPSILON)
}

/// Decode a bit string to the unit interval, endpoints inclusive.
pub fn decode_unit(bits: &[bool]) -> f64 {
    let mut raw: u64 = 0;
    for &b in bits {
        raw = (raw << 1) | u64::from(b);
    }
    let span = (1u64 << bits.len()) - 1;
    raw as f64 / span as f64
}

/// Reflected-Gray-code to plain binary conversion. Genomes store genes in
/// Gray code so that neighbouring values differ in a single bit and bitwise
/// mutation makes local moves instead of jumping across Hamming cliffs.
fn gray_to_binary(gray: &[bool]) -> Vec<bool> {
    let mut out = Vec::with_capacity(gray.len());
    let mut acc = false;
    for &g in gray {
        acc ^= g;
        out.push(acc);
    }
    out
}

/// Snap a unit-interval value to the calibration grid.
pub fn snap_to_grid(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Per-generation calibration progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat {
    pub generation: usize,
    pub best_objective: f64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_params: RiskParams,
}

/// Final calibration output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: RiskParams,
    pub objective: f64,
    pub fitness: f64,
    pub grid_step: f64,
    pub trace: Vec<GenerationStat>,
}

fn decode_params(genome: &[bool], bits: usize, grid_step: f64) -> RiskParams {
    let values: Vec<f64> = (0..5)
        .map(|g| {
            let gene = gray_to_binary(&genome[g * bits..(g + 1) * bits]);
            snap_to_grid(decode_unit(&gene), grid_step)
        })
        .collect();
    RiskParams::from_vector([values[0], values[1], values[2], values[3], values[4]])
}

/// Encode a grid value back into a Gray-coded gene, choosing the level that
/// decodes (and snaps) closest to the requested value.
fn encode_gene(value: f64, bits: usize, grid_step: f64) -> Vec<bool> {
    let span = (1u64 << bits) - 1;
    let base = (value.clamp(0.0, 1.0) * span as f64).round() as i64;
    let mut best_level = base.clamp(0, span as i64) as u64;
    let mut best_err = f64::INFINITY;
    for cand in base - 1..=base + 1 {
        if !(0..=span as i64).contains(&cand) {
            continue;
        }
        let decoded = snap_to_grid(cand as f64 / span as f64, grid_step);
        let err = (decoded - value).abs();
        if err < best_err {
            best_err = err;
            best_level = cand as u64;
        }
    }
    let gray = best_level ^ (best_level >> 1);
    (0..bits).rev().map(|i| (gray >> i) & 1 == 1).collect()
}

fn encode_params(params: &RiskParams, bits: usize, grid_step: f64) -> Vec<bool> {
    params
        .to_vector()
        .iter()
        .flat_map(|v| encode_gene(*v, bits, grid_step))
        .collect()
}

/// Calibrate the five risk parameters against recorded scenarios with a
/// memetic binary genetic algorithm: Gray-coded genes, tournament selection,
/// single-point crossover, bitwise mutation and elitism, combined with
/// variable-neighbourhood descent (single, double, stride and paired grid
/// moves) that refines the incumbent each generation and, after the last
/// generation, polishes from the best distinct population cells and seeded
/// random restarts. Candidate vectors live on a fixed grid over [0, 1]^5;
/// fitness evaluations run in parallel.
pub fn ga_calibrate(
    scenarios: &[ScenarioRecord],
    cfg: &GameConfig,
    ga: &GaConfig,
    grid_step: f64,
) -> Result<CalibrationResult> {
    ga.validate()?;
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(Error::InvalidInput(
            "calibration needs at least one scenario".into(),
        ));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "grid step must lie in (0, 1], got {grid_step}"
        )));
    }

    let bits = ga.bits_per_gene;
    let genome_len = 5 * bits;
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let mut population: Vec<Vec<bool>> = (0..ga.population)
        .map(|_| (0..genome_len).map(|_| rng.gen::<bool>()).collect())
        .collect();

    let evaluate = |genome: &Vec<bool>| -> Result<(RiskParams, f64)> {
        let params = decode_params(genome, bits, grid_step);
        let objective = calibration_objective(scenarios, &params, cfg)?;
        Ok((params, objective))
    };

    let mut best_genome = population[0].clone();
    let mut best_objective = f64::INFINITY;
    let mut best_params = decode_params(&best_genome, bits, grid_step);
    let mut trace = Vec::with_capacity(ga.generations);

    // Grid moves for the local refinement, grouped into neighbourhoods of
    // growing reach: single steps, double steps, long strides (which cross
    // plateaus where nearby moves all read flat), then paired steps on two
    // axes (which cross ridges that block purely axis-aligned descent).
    let neighbourhoods: [Vec<Vec<(usize, i32)>>; 4] = {
        let mut single = Vec::new();
        let mut double = Vec::new();
        let mut strides = Vec::new();
        let mut paired = Vec::new();
        for axis in 0..5 {
            for sign in [-1, 1] {
                single.push(vec![(axis, sign)]);
                double.push(vec![(axis, 2 * sign)]);
                for stride in [3, 5, 8] {
                    strides.push(vec![(axis, stride * sign)]);
                }
            }
        }
        for i in 0..5 {
            for j in (i + 1)..5 {
                for si in [-1, 1] {
                    for sj in [-1, 1] {
                        paired.push(vec![(i, si), (j, sj)]);
                    }
                }
            }
        }
        [single, double, strides, paired]
    };
    let apply_move = |params: &RiskParams, mv: &[(usize, i32)]| -> Option<RiskParams> {
        let mut v = params.to_vector();
        for &(axis, steps) in mv {
            let moved =
                snap_to_grid((v[axis] + steps as f64 * grid_step).clamp(0.0, 1.0), grid_step);
            if (moved - v[axis]).abs() < grid_step / 2.0 {
                // Clamped into a no-op; a smaller neighbourhood covers this.
                return None;
            }
            v[axis] = moved;
        }
        Some(RiskParams::from_vector(v))
    };

    // Deterministic variable-neighbourhood descent around the incumbent:
    // strictly improving moves only, restarting from the smallest
    // neighbourhood after each accepted move, until nothing improves, the
    // objective reaches zero, or the evaluation budget runs out. The
    // smallest neighbourhood picks its best move; the larger ones accept
    // the first improvement so stalled passes stay cheap. Strict improvement
    // keeps the reported best objective monotone over generations.
    let refine = |params: &mut RiskParams, objective: &mut f64, budget: usize| -> Result<bool> {
        let mut evals = 0;
        let mut improved_any = false;
        loop {
            let mut advanced = false;
            for (reach, hood) in neighbourhoods.iter().enumerate() {
                let mut best: Option<(f64, RiskParams)> = None;
                for mv in hood {
                    if evals >= budget {
                        break;
                    }
                    let Some(candidate) = apply_move(params, mv) else {
                        continue;
                    };
                    evals += 1;
                    let o = calibration_objective(scenarios, &candidate, cfg)?;
                    if o < *objective && best.as_ref().map_or(true, |(b, _)| o < *b) {
                        best = Some((o, candidate));
                        if reach > 0 {
                            break;
                        }
                    }
                }
                if let Some((o, candidate)) = best {
                    *objective = o;
                    *params = candidate;
                    improved_any = true;
                    advanced = true;
                    break;
                }
            }
            if !advanced || *objective == 0.0 || evals >= budget {
                return Ok(improved_any);
            }
        }
    };

    for generation in 0..ga.generations {
        let evaluated: Vec<(RiskParams, f64)> = population
            .par_iter()
            .map(evaluate)
            .collect::<Result<Vec<_>>>()?;
        for (genome, (params, objective)) in population.iter().zip(&evaluated) {
            if *objective < best_objective {
                best_objective = *objective;
                best_genome = genome.clone();
                best_params = *params;
            }
        }
        // Memetic step: walk the incumbent downhill through the move
        // neighbourhoods and hand the improved genome back to the population
        // via elitism.
        if best_objective > 0.0 && refine(&mut best_params, &mut best_objective, 60)? {
            best_genome = encode_params(&best_params, bits, grid_step);
        }
        let fitnesses: Vec<f64> = evaluated.iter().map(|(_, obj)| fitness(*obj)).collect();
        let mean_fitness = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
        trace.push(GenerationStat {
            generation,
            best_objective,
            best_fitness: fitness(best_objective),
            mean_fitness,
            best_params,
        });

        let mut next = Vec::with_capacity(ga.population);
        next.push(best_genome.clone());
        while next.len() < ga.population {
            let p1 = population[tournament(&fitnesses, &mut rng)].clone();
            let p2 = population[tournament(&fitnesses, &mut rng)].clone();
            let (mut c1, mut c2) = if rng.gen::<f64>() < ga.crossover_rate {
                let cut = rng.gen_range(1..genome_len);
                let mut a = p1.clone();
                let mut b = p2.clone();
                a[cut..].copy_from_slice(&p2[cut..]);
                b[cut..].copy_from_slice(&p1[cut..]);
                (a, b)
            } else {
                (p1, p2)
            };
            for genome in [&mut c1, &mut c2] {
                for bit in genome.iter_mut() {
                    if rng.gen::<f64>() < ga.mutation_rate {
                        *bit = !*bit;
                    }
                }
            }
            next.push(c1);
            if next.len() < ga.population {
                next.push(c2);
            }
        }
        population = next;
    }

    // Score the final population as well.
    let mut evaluated: Vec<(RiskParams, f64)> = population
        .par_iter()
        .map(evaluate)
        .collect::<Result<Vec<_>>>()?;
    for (params, objective) in &evaluated {
        if *objective < best_objective {
            best_objective = *objective;
            best_params = *params;
        }
    }

    // Multi-start polish: descend from the incumbent, then from the best
    // distinct cells of the final population, then from seeded random
    // restarts, stopping at a perfect objective. Restarts let the search
    // leave basins the population has collapsed into.
    if best_objective > 0.0 {
        refine(&mut best_params, &mut best_objective, 800)?;
        let mut starts: Vec<RiskParams> = Vec::new();
        evaluated.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (params, _) in &evaluated {
            if starts.len() >= 6 {
                break;
            }
            let v = params.to_vector();
            if v != best_params.to_vector() && starts.iter().all(|s| s.to_vector() != v) {
                starts.push(*params);
            }
        }
        let levels = (1.0 / grid_step).round() as u64;
        while starts.len() < 40 {
            let mut v = [0.0; 5];
            for slot in v.iter_mut() {
                *slot = rng.gen_range(0..=levels) as f64 * grid_step;
            }
            starts.push(RiskParams::from_vector(v));
        }
        for start in starts {
            if best_objective == 0.0 {
                break;
            }
            let mut params = start;
            let mut objective = calibration_objective(scenarios, &params, cfg)?;
            refine(&mut params, &mut objective, 700)?;
            if objective < best_objective {
                best_objective = objective;
                best_params = params;
            }
        }
    }

    Ok(CalibrationResult {
        params: best_params,
        objective: best_objective,
        fitness: fitness(best_objective),
        grid_step,
        trace,
    })
}

/// Size-3 tournament parent selection: scale-free selection pressure that
/// keeps working when the population's fitness values cluster.
fn tournament(fitnesses: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitnesses.len());
    for _ in 0..2 {
        let challenger = rng.gen_range(0..fitnesses.len());
        if fitnesses[challenger] > fitnesses[best] {
            best = challenger;
        }
    }
    best
}
