//! The N-particle max-plus front: `X_j(t+1) = max_i (X_i(t) + ξ_ij)`.
//!
//! Particle `j` of the next generation descends from the `i` achieving the
//! maximum. Ties go to the smallest `i`. Noise is drawn column by column
//! (child `j` outer, candidate parent `i` inner), so a fixed seed fixes the
//! whole `N × N` noise matrix independently of the positions, which lets
//! paired runs share a realization.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fitnesswf::{FitnessVector, GenerationRecord};
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::stats::{Accumulator, Estimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    positions: Vec<f64>,
}

impl PopulationState {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("population must contain at least one particle"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("particle positions must be finite"));
        }
        Ok(PopulationState { positions })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn shifted(&self, r: f64) -> PopulationState {
        PopulationState {
            positions: self.positions.iter().map(|x| x + r).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.positions.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Law of the i.i.d. increments `ξ_ij`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseSpec {
    /// `P(ξ <= x) = exp(-e^{-β(x-ρ)})`.
    Gumbel { rho: f64, beta: f64 },
    Exponential { rate: f64 },
    UniformInterval { lo: f64, hi: f64 },
    Deterministic { value: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Gumbel { rho, beta } => {
                if !(beta > 0.0 && beta.is_finite() && rho.is_finite()) {
                    return Err(invalid(format!("Gumbel noise needs finite rho and beta > 0, got rho={rho}, beta={beta}")));
                }
            }
            NoiseSpec::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(invalid(format!("exponential noise rate must be positive, got {rate}")));
                }
            }
            NoiseSpec::UniformInterval { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(invalid(format!("uniform noise needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            NoiseSpec::Deterministic { value } => {
                if !value.is_finite() {
                    return Err(invalid("deterministic noise must be finite"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::Gumbel { rho, beta } => rho - positive_exp1(rng).ln() / beta,
            NoiseSpec::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            NoiseSpec::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            NoiseSpec::Deterministic { value } => value,
        }
    }
}

/// `-log(-log U)` is Gumbel; `-log U` is a standard exponential, drawn here
/// by the ziggurat method.
#[inline]
fn positive_exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let e: f64 = Exp1.sample(rng);
        if e > 0.0 {
            return e;
        }
    }
}

/// Parent of each particle of the next generation (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestryRow {
    pub parent_of: Vec<u32>,
}

impl AncestryRow {
    pub fn offspring_counts(&self) -> Vec<u32> {
        let mut c = vec![0u32; self.parent_of.len()];
        for &p in &self.parent_of {
            c[p as usize] += 1;
        }
        c
    }

    pub fn to_record(&self) -> GenerationRecord {
        GenerationRecord::from_parents(self.parent_of.clone(), self.parent_of.len())
    }
}

pub fn step_front(
    state: &PopulationState,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<(PopulationState, AncestryRow)> {
    let mut rng = rng_from_seed(seed);
    step_front_rng(state, noise, &mut rng)
}

pub fn step_front_rng<R: Rng + ?Sized>(
    state: &PopulationState,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<(PopulationState, AncestryRow)> {
    noise.validate()?;
    let n = state.len();
    let mut next = vec![0.0; n];
    let mut parents = vec![0u32; n];
    match *noise {
        NoiseSpec::Gumbel { rho, beta } => gumbel_step(state, rho, beta, rng, &mut next, &mut parents),
        _ => {
            let x = state.positions();
            for j in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for (i, &xi) in x.iter().enumerate() {
                    let cand = xi + noise.draw(rng);
                    if cand > best {
                        best = cand;
                        arg = i;
                    }
                }
                next[j] = best;
                parents[j] = arg as u32;
            }
        }
    }
    Ok((PopulationState { positions: next }, AncestryRow { parent_of: parents }))
}

/// Gumbel step in the exponential domain. With `ξ_ij = ρ - log(E_ij)/β`,
/// maximizing `X_i + ξ_ij` is minimizing `E_ij w_i` where
/// `w_i = exp(-β (X_i - max X))`, and the maximum equals
/// `max X + ρ - log(min_i E_ij w_i)/β`. This avoids one logarithm per
/// candidate and consumes the same draws in the same order.
fn gumbel_step<R: Rng + ?Sized>(
    state: &PopulationState,
    rho: f64,
    beta: f64,
    rng: &mut R,
    next: &mut [f64],
    parents: &mut [u32],
) {
    let x = state.positions();
    let xmax = state.max();
    let w: Vec<f64> = x.iter().map(|&xi| (-beta * (xi - xmax)).exp()).collect();
    for j in 0..x.len() {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (i, &wi) in w.iter().enumerate() {
            let v = positive_exp1(rng) * wi;
            if v < best {
                best = v;
                arg = i;
            }
        }
        next[j] = xmax + rho - best.ln() / beta;
        parents[j] = arg as u32;
    }
}

fn log_sum_exp_scaled(x: &[f64], beta: f64) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = x.iter().map(|&v| (beta * (v - m)).exp()).sum();
    m + s.ln() / beta
}

/// `Φ(X) = β⁻¹ log Σ exp(β X_i)`.
pub fn front_position(state: &PopulationState, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(log_sum_exp_scaled(state.positions(), beta))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta must be positive, got {beta}")))
    }
}

/// `X - Φ(X)`, the configuration seen from the front.
pub fn recenter(state: &PopulationState, beta: f64) -> Result<PopulationState> {
    let phi = front_position(state, beta)?;
    Ok(state.shifted(-phi))
}

/// `η_i = exp(β X_i) / Σ_k exp(β X_k)`.
pub fn gumbel_fitness(state: &PopulationState, beta: f64) -> Result<FitnessVector> {
    check_beta(beta)?;
    let x = state.positions();
    let m = state.max();
    let e: Vec<f64> = x.iter().map(|&v| (beta * (v - m)).exp()).collect();
    let s: f64 = e.iter().sum();
    FitnessVector::new(e.into_iter().map(|v| v / s).collect())
}

/// `V - Φ(V)` for `V` an i.i.d. Gumbel(0, β) sample drawn by inverse CDF.
pub fn sample_invariant_gumbel(n: usize, beta: f64, seed: u64) -> Result<PopulationState> {
    let mut rng = rng_from_seed(seed);
    sample_invariant_gumbel_rng(n, beta, &mut rng)
}

pub fn sample_invariant_gumbel_rng<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    rng: &mut R,
) -> Result<PopulationState> {
    check_beta(beta)?;
    if n == 0 {
        return Err(invalid("population must contain at least one particle"));
    }
    let v: Vec<f64> = (0..n)
        .map(|_| {
            let u = open_unit(rng);
            -(-u.ln()).ln() / beta
        })
        .collect();
    let state = PopulationState { positions: v };
    recenter(&state, beta)
}

#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// A run of the front model: the states and the ancestry rows between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontTrajectory {
    pub states: Vec<PopulationState>,
    pub rows: Vec<AncestryRow>,
}

/// Runs `generations` steps; step `t` draws its noise from the seed
/// `derive_seed(seed, FRONT, t)`.
pub fn simulate_front(
    initial: &PopulationState,
    noise: &NoiseSpec,
    generations: usize,
    seed: u64,
    keep_states: bool,
) -> Result<FrontTrajectory> {
    noise.validate()?;
    let mut states = vec![initial.clone()];
    let mut rows = Vec::with_capacity(generations);
    let mut current = initial.clone();
    for t in 0..generations {
        let mut rng = rng_from_seed(derive_seed(seed, streams::FRONT, t as u64));
        let (next, row) = step_front_rng(&current, noise, &mut rng)?;
        rows.push(row);
        if keep_states {
            states.push(next.clone());
        }
        current = next;
    }
    if !keep_states {
        states.push(current);
    }
    Ok(FrontTrajectory { states, rows })
}

/// Average advance of `Φ` per generation after `burn_in` steps, starting
/// from all particles at zero.
pub fn measure_front_speed(
    n: usize,
    noise: &NoiseSpec,
    beta: f64,
    generations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<f64> {
    measure_front_speed_from(&PopulationState::zeros(n)?, noise, beta, generations, burn_in, seed)
}

pub fn measure_front_speed_from(
    initial: &PopulationState,
    noise: &NoiseSpec,
    beta: f64,
    generations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<f64> {
    noise.validate()?;
    check_beta(beta)?;
    if generations <= burn_in {
        return Err(invalid(format!(
            "generations ({generations}) must exceed burn-in ({burn_in})"
        )));
    }
    // Positions are kept recentered; the removed offsets add up to Φ(X(t)).
    let mut offset = 0.0;
    let mut current = initial.clone();
    let mut phi_burn = front_position(initial, beta)?;
    for t in 0..generations {
        let mut rng = rng_from_seed(derive_seed(seed, streams::FRONT, t as u64));
        let (next, _) = step_front_rng(&current, noise, &mut rng)?;
        let phi = front_position(&next, beta)?;
        current = next.shifted(-phi);
        offset += phi;
        if t + 1 == burn_in {
            phi_burn = offset;
        }
    }
    Ok((offset - phi_burn) / (generations - burn_in) as f64)
}

/// Speed of the Gumbel front: every step advances `Φ` by
/// `ρ + β⁻¹ log Σ_{j≤N} 1/ℰ_j` with fresh standard exponentials `ℰ_j`,
/// so the speed is the Monte Carlo mean of that quantity.
pub fn gumbel_speed_reference(n: usize, rho: f64, beta: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_beta(beta)?;
    if n == 0 || samples == 0 {
        return Err(invalid("speed reference needs N >= 1 and at least one sample"));
    }
    const CHUNK: usize = 1024;
    let parts: Vec<Accumulator> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, streams::FRONT, c as u64));
            let mut acc = Accumulator::default();
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let s: f64 = (0..n).map(|_| 1.0 / positive_exp1(&mut rng)).sum();
                acc.push(rho + s.ln() / beta);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total.estimate())
}

/// CSV with columns `generation,particle_index,position,parent_index`.
/// Row `g` lists generation `g`; its parent index points into generation
/// `g - 1` and is empty for the initial generation.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &FrontTrajectory) -> io::Result<()> {
    writeln!(out, "generation,particle_index,position,parent_index")?;
    for (g, state) in traj.states.iter().enumerate() {
        for (i, x) in state.positions().iter().enumerate() {
            if g == 0 {
                writeln!(out, "{g},{i},{x},")?;
            } else {
                let p = traj.rows[g - 1].parent_of[i];
                writeln!(out, "{g},{i},{x},{p}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;
    use crate::stats::{ks_one_sample, ks_two_sample, mean_se};

    #[test]
    fn single_particle_deterministic() {
        let s = PopulationState::new(vec![1.0]).unwrap();
        let (next, row) = step_front(&s, &NoiseSpec::Deterministic { value: 0.5 }, 0).unwrap();
        assert_eq!(next.positions(), &[1.5]);
        assert_eq!(row.parent_of, vec![0]);
    }

    #[test]
    fn dominated_particle_has_no_offspring() {
        let s = PopulationState::new(vec![0.0, -1e6]).unwrap();
        let noise = NoiseSpec::UniformInterval { lo: 0.0, hi: 1.0 };
        for seed in 0..20 {
            let (_, row) = step_front(&s, &noise, seed).unwrap();
            assert_eq!(row.parent_of, vec![0, 0]);
        }
    }

    #[test]
    fn gumbel_step_matches_direct_argmax() {
        // Re-draw the same exponentials and evaluate X_i + ρ - log(E)/β for
        // both candidates directly.
        let (rho, beta) = (0.3, 1.0);
        let noise = NoiseSpec::Gumbel { rho, beta };
        for seed in 0..50 {
            let s = PopulationState::new(vec![0.2, -0.7]).unwrap();
            let (next, row) = step_front(&s, &noise, seed).unwrap();
            let mut rng = rng_from_seed(seed);
            for j in 0..2 {
                let mut cands = [0.0; 2];
                for (i, c) in cands.iter_mut().enumerate() {
                    let e: f64 = Exp1.sample(&mut rng);
                    *c = s.positions()[i] + rho - e.ln() / beta;
                }
                let arg = if cands[1] > cands[0] { 1 } else { 0 };
                assert_eq!(row.parent_of[j], arg);
                assert!((next.positions()[j] - cands[arg as usize]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let s = PopulationState::new(vec![1.0, 1.0, 1.0]).unwrap();
        let (_, row) = step_front(&s, &NoiseSpec::Deterministic { value: 0.0 }, 0).unwrap();
        assert_eq!(row.parent_of, vec![0, 0, 0]);
    }

    #[test]
    fn front_position_examples() {
        let n = 7;
        let z = PopulationState::zeros(n).unwrap();
        assert!((front_position(&z, 1.0).unwrap() - (n as f64).ln()).abs() < 1e-14);
        let x = PopulationState::new(vec![0.3, -1.2, 2.5, 0.0]).unwrap();
        let phi = front_position(&x, 1.7).unwrap();
        let shifted = front_position(&x.shifted(3.7), 1.7).unwrap();
        assert!((shifted - phi - 3.7).abs() < 1e-12);
        let one = PopulationState::new(vec![-4.2]).unwrap();
        for beta in [0.1, 1.0, 30.0] {
            assert!((front_position(&one, beta).unwrap() + 4.2).abs() < 1e-14);
        }
        // No overflow for large β·X.
        let far = PopulationState::new(vec![1e4, 1e4 - 1.0]).unwrap();
        assert!(front_position(&far, 10.0).unwrap().is_finite());
        assert!(front_position(&x, 0.0).is_err());
    }

    #[test]
    fn recenter_examples() {
        let x = PopulationState::new(vec![0.0, 0.0]).unwrap();
        let r = recenter(&x, 1.0).unwrap();
        for v in r.positions() {
            assert!((v + 2f64.ln()).abs() < 1e-15);
        }
        let y = PopulationState::new(vec![3.0, -1.0, 0.5, 10.0, 9.9]).unwrap();
        for beta in [0.5, 1.0, 4.0] {
            let r = recenter(&y, beta).unwrap();
            let s: f64 = r.positions().iter().map(|v| (beta * v).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
            let rr = recenter(&r, beta).unwrap();
            for (a, b) in r.positions().iter().zip(rr.positions()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gumbel_fitness_examples() {
        let f = gumbel_fitness(&PopulationState::new(vec![2.0; 5]).unwrap(), 1.3).unwrap();
        assert!(f.weights().iter().all(|w| (w - 0.2).abs() < 1e-15));
        let x = PopulationState::new(vec![2f64.ln(), 0.0]).unwrap();
        let f = gumbel_fitness(&x, 1.0).unwrap();
        assert!((f.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
        let y = PopulationState::new(vec![0.4, -2.0, 1.1]).unwrap();
        let a = gumbel_fitness(&y, 2.0).unwrap();
        let b = gumbel_fitness(&y.shifted(5.5), 2.0).unwrap();
        for (p, q) in a.weights().iter().zip(b.weights()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_sample_is_normalized() {
        for n in [1, 2, 10, 100] {
            let s = sample_invariant_gumbel(n, 1.5, n as u64).unwrap();
            let total: f64 = s.positions().iter().map(|v| (1.5 * v).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
            if n == 1 {
                assert!(s.positions()[0].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invariant_max_matches_independent_sampler() {
        // Direct sampler: Gumbel via -log(E) with E from Exp1, a different
        // route from the inverse CDF used above.
        let (n, beta) = (10, 1.0);
        let reps = 20_000;
        let a: Vec<f64> = (0..reps)
            .map(|r| sample_invariant_gumbel(n, beta, derive_seed(1, 0, r)).unwrap().max())
            .collect();
        let b: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = rng_from_seed(derive_seed(2, 0, r));
                let v: Vec<f64> = (0..n)
                    .map(|_| {
                        let e: f64 = Exp1.sample(&mut rng);
                        -e.ln() / beta
                    })
                    .collect();
                let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = v.iter().map(|x| (beta * (x - m)).exp()).sum();
                m - (m + s.ln() / beta)
            })
            .collect();
        let t = ks_two_sample(&a, &b).unwrap();
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn deterministic_speed() {
        let v = measure_front_speed(5, &NoiseSpec::Deterministic { value: 0.37 }, 1.0, 50, 10, 3).unwrap();
        assert!((v - 0.37).abs() < 1e-12);
        assert!(measure_front_speed(5, &NoiseSpec::Deterministic { value: 0.0 }, 1.0, 10, 10, 3).is_err());
    }

    #[test]
    fn speed_is_shift_invariant() {
        let noise = NoiseSpec::Gumbel { rho: 0.0, beta: 1.0 };
        let x = PopulationState::new(vec![0.1, -0.4, 0.9, 0.0]).unwrap();
        let a = measure_front_speed_from(&x, &noise, 1.0, 200, 20, 8).unwrap();
        let b = measure_front_speed_from(&x.shifted(12.5), &noise, 1.0, 200, 20, 8).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn small_gumbel_speed_matches_oracle() {
        // v = ρ + β⁻¹ E[log Σ 1/E_j]; independent uniform-based oracle.
        let (n, rho, beta) = (20, 0.5, 2.0);
        let noise = NoiseSpec::Gumbel { rho, beta };
        let v = measure_front_speed(n, &noise, beta, 20_000, 200, 4).unwrap();
        let mut rng = rng_from_seed(99);
        let samples: Vec<f64> = (0..200_000)
            .map(|_| {
                (0..n)
                    .map(|_| 1.0 / -(1.0 - rng.random::<f64>()).ln())
                    .sum::<f64>()
                    .ln()
            })
            .collect();
        let oracle = rho + mean_se(&samples).mean / beta;
        assert!((v - oracle).abs() / oracle < 0.01, "{v} vs {oracle}");
        let reference = gumbel_speed_reference(n, rho, beta, 200_000, 5).unwrap();
        assert!(reference.z(oracle) < 4.0, "{reference:?} vs {oracle}");
    }

    #[test]
    fn monotone_in_initial_state() {
        let noise = NoiseSpec::Gumbel { rho: 0.0, beta: 1.0 };
        let x = PopulationState::new(vec![0.0, -0.5, 0.3, -2.0, 1.0]).unwrap();
        for k in 0..5 {
            let mut up = x.positions().to_vec();
            up[k] += 0.8;
            let y = PopulationState::new(up).unwrap();
            for seed in 0..30 {
                let (a, _) = step_front(&x, &noise, seed).unwrap();
                let (b, _) = step_front(&y, &noise, seed).unwrap();
                for (p, q) in a.positions().iter().zip(b.positions()) {
                    assert!(q >= &(p - 1e-12));
                }
            }
        }
        let unif = NoiseSpec::UniformInterval { lo: -1.0, hi: 1.0 };
        let y = x.shifted(0.1);
        for seed in 0..30 {
            let (a, _) = step_front(&x, &unif, seed).unwrap();
            let (b, _) = step_front(&y, &unif, seed).unwrap();
            for (p, q) in a.positions().iter().zip(b.positions()) {
                assert!(q >= p);
            }
        }
    }

    #[test]
    fn exponential_decomposition_holds() {
        let (n, rho, beta) = (8, 0.2, 1.5);
        let noise = NoiseSpec::Gumbel { rho, beta };
        let mut e = Vec::new();
        for r in 0..3000 {
            let x0 = sample_invariant_gumbel(n, beta, derive_seed(3, 0, r)).unwrap();
            let phi = front_position(&x0, beta).unwrap();
            let (next, _) = step_front(&x0, &noise, derive_seed(3, 1, r)).unwrap();
            e.extend(next.positions().iter().map(|x| (-beta * (x - phi - rho)).exp()));
        }
        let t = ks_one_sample(&e, |x| 1.0 - (-x.max(0.0)).exp()).unwrap();
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn trajectory_csv_shape() {
        let s = PopulationState::zeros(3).unwrap();
        let traj = simulate_front(&s, &NoiseSpec::Exponential { rate: 1.0 }, 2, 5, true).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 3);
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn invalid_noise_rejected() {
        let s = PopulationState::zeros(2).unwrap();
        assert!(step_front(&s, &NoiseSpec::Gumbel { rho: 0.0, beta: 0.0 }, 1).is_err());
        assert!(step_front(&s, &NoiseSpec::Exponential { rate: -1.0 }, 1).is_err());
        assert!(step_front(&s, &NoiseSpec::UniformInterval { lo: 1.0, hi: 1.0 }, 1).is_err());
        assert!(PopulationState::new(vec![]).is_err());
        assert!(PopulationState::new(vec![f64::NAN]).is_err());
    }
}
