//! Cooperative stage-game solution: joint payoff maximization, Shapley
//! value allocation and a superadditivity check of the induced
//! characteristic function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{build_stage_game, EncounterScene, GameConfig, PlayerState, StagePayoffs};
use crate::risk::RiskParams;

/// Shapley values of a transferable-utility game over `n` players given its
/// characteristic function on coalition bitmasks (bit i set = player i in
/// the coalition). Requires v(empty) = 0.
pub fn shapley_values(n: usize, v: &dyn Fn(u32) -> f64) -> Result<Vec<f64>> {
    if n == 0 || n > 20 {
        return Err(Error::InvalidGame(format!(
            "shapley_values supports 1..=20 players, got {n}"
        )));
    }
    if v(0).abs() > 1e-12 {
        return Err(Error::InvalidGame(
            "characteristic function must assign 0 to the empty coalition".into(),
        ));
    }
    let mut factorial = vec![1.0_f64; n + 1];
    for k in 1..=n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let mut phi = vec![0.0; n];
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for mask in 1..=full {
        let size = mask.count_ones() as usize;
        let weight = factorial[size - 1] * factorial[n - size] / factorial[n];
        let value = v(mask);
        for (i, phi_i) in phi.iter_mut().enumerate() {
            let bit = 1u32 << i;
            if mask & bit != 0 {
                *phi_i += weight * (value - v(mask & !bit));
            }
        }
    }
    Ok(phi)
}

/// Genetic-algorithm settings for the joint maximizer (and reused by the
/// parameter calibration loop). `bits_per_gene` sets the value resolution
/// (2^bits levels per gene); keep it close to the resolution of the target
/// grid so that single-bit mutations stay local moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub bits_per_gene: usize,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            // 32 levels per gene, matched to the default 0.05 calibration
            // grid; about one expected bit flip per five-gene genome.
            bits_per_gene: 5,
            population: 20,
            generations: 50,
            crossover_rate: 0.6,
            mutation_rate: 0.04,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits_per_gene == 0 || self.bits_per_gene > 32 {
            return Err(Error::InvalidInput(
                "bits_per_gene must be in 1..=32".into(),
            ));
        }
        if self.population < 2 {
            return Err(Error::InvalidInput("population must be at least 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidInput("generations must be at least 1".into()));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Decode one binary gene into an index in 0..n_choices.
fn decode_gene(bits: &[bool], n_choices: usize) -> usize {
    let mut value: u64 = 0;
    for &b in bits {
        value = (value << 1) | u64::from(b);
    }
    let span = 1u64 << bits.len();
    (((value as u128 * n_choices as u128) / span as u128) as usize).min(n_choices - 1)
}

/// Roulette-wheel parent selection over non-negative weights.
fn roulette(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Maximize a joint objective over `n_players` discrete choices from a set
/// of `n_strategies` each. Two players or fewer are solved exhaustively;
/// larger joint spaces run a seeded binary genetic algorithm with elitism.
pub fn maximize_joint_payoff(
    n_players: usize,
    n_strategies: usize,
    total: &dyn Fn(&[usize]) -> f64,
    ga: &GaConfig,
) -> Result<Vec<usize>> {
    if n_players == 0 || n_strategies == 0 {
        return Err(Error::InvalidGame(
            "joint maximization needs at least one player and one strategy".into(),
        ));
    }
    if n_players <= 2 {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut joint = vec![0usize; n_players];
        loop {
            let value = total(&joint);
            let better = match &best {
                None => true,
                Some((_, bv)) => value > bv + 1e-12,
            };
            if better {
                best = Some((joint.clone(), value));
            }
            // Advance the mixed-radix counter; lexicographic order makes
            // ties resolve toward lower indices.
            let mut pos = n_players;
            loop {
                if pos == 0 {
                    return Ok(best.expect("at least one joint action").0);
                }
                pos -= 1;
                joint[pos] += 1;
                if joint[pos] < n_strategies {
                    break;
                }
                joint[pos] = 0;
            }
        }
    }

    ga.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let genome_len = n_players * ga.bits_per_gene;
    let decode = |genome: &[bool]| -> Vec<usize> {
        (0..n_players)
            .map(|p| decode_gene(&genome[p * ga.bits_per_gene..(p + 1) * ga.bits_per_gene], n_strategies))
            .collect()
    };

    let mut population: Vec<Vec<bool>> = (0..ga.population)
        .map(|_| (0..genome_len).map(|_| rng.gen::<bool>()).collect())
        .collect();
    let mut best_joint = decode(&population[0]);
    let mut best_value = total(&best_joint);

    for _ in 0..ga.generations {
        let values: Vec<f64> = population
            .iter()
            .map(|g| total(&decode(g)))
            .collect();
        for (genome, &value) in population.iter().zip(&values) {
            if value > best_value + 1e-12 {
                best_value = value;
                best_joint = decode(genome);
            }
        }
        let min = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let weights: Vec<f64> = values.iter().map(|v| v - min + 1e-12).collect();

        let mut next = Vec::with_capacity(ga.population);
        while next.len() < ga.population {
            let p1 = population[roulette(&weights, &mut rng)].clone();
            let p2 = population[roulette(&weights, &mut rng)].clone();
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
        // Elitism: re-inject the best genome seen so far.
        let elite: Vec<bool> = encode(&best_joint, n_strategies, ga.bits_per_gene);
        next[0] = elite;
        population = next;
    }
    // Final sweep over the last population.
    for genome in &population {
        let joint = decode(genome);
        let value = total(&joint);
        if value > best_value + 1e-12 {
            best_value = value;
            best_joint = joint;
        }
    }
    Ok(best_joint)
}

/// Encode a joint action back into a genome whose genes decode to it.
fn encode(joint: &[usize], n_strategies: usize, bits: usize) -> Vec<bool> {
    let span = 1u64 << bits;
    let mut genome = Vec::with_capacity(joint.len() * bits);
    for &idx in joint {
        // Smallest raw value that decodes to idx: ceil(idx * span / n).
        let raw = ((idx as u128 * span as u128).div_ceil(n_strategies as u128)) as u64;
        for b in (0..bits).rev() {
            genome.push((raw >> b) & 1 == 1);
        }
    }
    genome
}

/// Cooperative solution of one stage game: the joint action maximizing the
/// payoff sum, with the surplus allocated by Shapley value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooperativeSolution {
    /// Strategy indices (left-turn, straight).
    pub joint_action: (usize, usize),
    /// The corresponding accelerations.
    pub accels: (f64, f64),
    /// Shapley payoff allocation (left-turn, straight).
    pub shapley: (f64, f64),
    /// Maximal payoff sum v(N).
    pub total: f64,
    /// Security levels v({left}), v({straight}).
    pub singleton_values: (f64, f64),
    /// Whether v({L}) + v({S}) <= v(N) held.
    pub superadditive: bool,
    /// True when every joint action violated the avoidance constraint; the
    /// joint action then falls back to mutual maximum deceleration.
    pub all_infeasible: bool,
}

/// Solve the cooperative form of an already-built stage game.
pub fn solve_cooperative_from(game: &StagePayoffs, cfg: &GameConfig) -> Result<CooperativeSolution> {
    let n_rows = game.n_rows();
    let n_cols = game.n_cols();
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::InvalidGame("empty payoff matrix".into()));
    }
    // Exhaustive scan in row-major order; ties keep the lexicographically
    // first joint action.
    let (mut best_row, mut best_col, mut v_grand) = (0, 0, f64::NEG_INFINITY);
    for i in 0..n_rows {
        for j in 0..n_cols {
            let t = game.total(i, j);
            if t > v_grand + 1e-12 {
                (best_row, best_col, v_grand) = (i, j, t);
            }
        }
    }

    // Singleton values are security levels: the best a player can guarantee
    // against an adversarial partner.
    let v_left = (0..n_rows)
        .map(|i| {
            (0..n_cols)
                .map(|j| game.cells[i][j].u_row)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let v_straight = (0..n_cols)
        .map(|j| {
            (0..n_rows)
                .map(|i| game.cells[i][j].u_col)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let characteristic = |mask: u32| -> f64 {
        match mask {
            0b00 => 0.0,
            0b01 => v_left,
            0b10 => v_straight,
            0b11 => v_grand,
            _ => unreachable!("two-player game"),
        }
    };
    let phi = shapley_values(2, &characteristic)?;

    let (joint_action, accels) = if game.all_infeasible {
        let idx = cfg.max_deceleration_index();
        (
            (idx, idx),
            (cfg.strategy_accels[idx], cfg.strategy_accels[idx]),
        )
    } else {
        (
            (best_row, best_col),
            (cfg.strategy_accels[best_row], cfg.strategy_accels[best_col]),
        )
    };

    Ok(CooperativeSolution {
        joint_action,
        accels,
        shapley: (phi[0], phi[1]),
        total: v_grand,
        singleton_values: (v_left, v_straight),
        superadditive: v_left + v_straight <= v_grand + 1e-9,
        all_infeasible: game.all_infeasible,
    })
}

/// Build and solve the cooperative stage game for the current player states.
pub fn solve_cooperative(
    pl: &PlayerState,
    ps: &PlayerState,
    scene: &EncounterScene,
    cfg: &GameConfig,
    params: &RiskParams,
) -> Result<CooperativeSolution> {
    let game = build_stage_game(pl, ps, scene, cfg, params)?;
    solve_cooperative_from(&game, cfg)
}
