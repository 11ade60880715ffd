//! Wright-Fisher reproduction with random fitness weights.
//!
//! Each generation draws i.i.d. positive `Y_1..Y_N`, normalizes them into
//! weights `η_i = Y_i / ΣY`, and lets every child pick its parent
//! independently from `η`. Offspring counts are derived from the parent
//! assignments, so the same record feeds both count statistics and
//! ancestry tracing.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::rng::{rng_from_seed, SimRng};

/// Weights `η_1..η_N` summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    weights: Vec<f64>,
}

impl FitnessVector {
    /// Validates nonnegativity and unit total (to 1e-12 relative to N).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("fitness vector must be nonempty"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("fitness weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 * (weights.len() as f64).max(1.0) {
            return Err(invalid(format!("fitness weights sum to {total}, not 1")));
        }
        Ok(FitnessVector { weights })
    }

    /// All mass on one parent.
    pub fn point_mass(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(invalid(format!("index {i} out of range for N={n}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(FitnessVector { weights: w })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("fitness vector must be nonempty"));
        }
        Ok(FitnessVector {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub(crate) fn from_normalized_unchecked(weights: Vec<f64>) -> Self {
        FitnessVector { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.weights
    }
}

/// Law of the unnormalized fitness `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FitnessSpec {
    /// `P(Y >= y) = y^{-α}` for `y >= 1`.
    ParetoTail { alpha: f64 },
    /// `Y = 1/E` with `E` standard exponential.
    InverseExponential,
    /// `Y = E` standard exponential.
    ExponentialY,
    /// `Y = 1`: the classical Wright-Fisher model.
    ConstantY,
}

impl FitnessSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FitnessSpec::ParetoTail { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(invalid(format!("Pareto tail index must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FitnessSpec::ParetoTail { alpha } => format!("pareto-tail(alpha={alpha})"),
            FitnessSpec::InverseExponential => "inverse-exponential".into(),
            FitnessSpec::ExponentialY => "exponential".into(),
            FitnessSpec::ConstantY => "constant".into(),
        }
    }

    /// Tail index of `Y`, if the tail is regularly varying.
    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            FitnessSpec::ParetoTail { alpha } => Some(alpha),
            FitnessSpec::InverseExponential => Some(1.0),
            _ => None,
        }
    }

    /// `E[Y]`, infinite when it diverges.
    pub fn mean(&self) -> f64 {
        match *self {
            FitnessSpec::ParetoTail { alpha } if alpha > 1.0 => alpha / (alpha - 1.0),
            FitnessSpec::ParetoTail { .. } | FitnessSpec::InverseExponential => f64::INFINITY,
            FitnessSpec::ExponentialY | FitnessSpec::ConstantY => 1.0,
        }
    }

    /// `E[Y^2]`, infinite when it diverges.
    pub fn second_moment(&self) -> f64 {
        match *self {
            FitnessSpec::ParetoTail { alpha } if alpha > 2.0 => alpha / (alpha - 2.0),
            FitnessSpec::ParetoTail { .. } | FitnessSpec::InverseExponential => f64::INFINITY,
            FitnessSpec::ExponentialY => 2.0,
            FitnessSpec::ConstantY => 1.0,
        }
    }

    /// One draw of `Y`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FitnessSpec::ParetoTail { alpha } => {
                // 1 - U lies in (0, 1], so the power is finite.
                let u = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / alpha)
            }
            FitnessSpec::InverseExponential => 1.0 / positive_exp1(rng),
            FitnessSpec::ExponentialY => positive_exp1(rng),
            FitnessSpec::ConstantY => 1.0,
        }
    }

    /// `E[f(Y)]` by adaptive quadrature in the variable `t = log Y`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64) -> f64 {
        let tol = Tolerance::rel(rel_tol);
        match *self {
            FitnessSpec::ParetoTail { alpha } => {
                integrate_to_infinity(
                    |t| {
                        let w = alpha * (-alpha * t).exp();
                        if w == 0.0 {
                            0.0
                        } else {
                            f(t.exp()) * w
                        }
                    },
                    0.0,
                    tol,
                )
                .value
            }
            // log E has density exp(s - e^s).
            FitnessSpec::InverseExponential => {
                integrate(|t| f(t.exp()) * (-t - (-t).exp()).exp(), -4.0, 60.0, tol).value
            }
            FitnessSpec::ExponentialY => {
                integrate(|t| f(t.exp()) * (t - t.exp()).exp(), -60.0, 4.0, tol).value
            }
            FitnessSpec::ConstantY => f(1.0),
        }
    }
}

#[inline]
fn positive_exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let e: f64 = Exp1.sample(rng);
        if e > 0.0 {
            return e;
        }
    }
}

/// `N` i.i.d. draws of `Y`.
pub fn sample_y(spec: &FitnessSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("population size must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = vec![0.0; n];
    fill_y(spec, &mut rng, &mut out);
    Ok(out)
}

pub fn fill_y<R: Rng + ?Sized>(spec: &FitnessSpec, rng: &mut R, out: &mut [f64]) {
    for y in out.iter_mut() {
        *y = spec.draw(rng);
    }
}

/// `η_i = Y_i / ΣY`.
pub fn normalize_fitness(y: &[f64]) -> Result<FitnessVector> {
    if y.is_empty() {
        return Err(invalid("fitness vector must be nonempty"));
    }
    if let Some(bad) = y.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(format!("fitness values must be positive and finite, got {bad}")));
    }
    let total: f64 = y.iter().sum();
    Ok(FitnessVector::from_normalized_unchecked(
        y.iter().map(|v| v / total).collect(),
    ))
}

/// Parent assignments of one generation and the implied offspring counts.
/// Parents are 0-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub parent_of: Vec<u32>,
    pub offspring_counts: Vec<u32>,
}

impl GenerationRecord {
    pub fn from_parents(parent_of: Vec<u32>, n_parents: usize) -> Self {
        let mut counts = vec![0u32; n_parents];
        for &p in &parent_of {
            counts[p as usize] += 1;
        }
        GenerationRecord {
            parent_of,
            offspring_counts: counts,
        }
    }

    /// `Σ ν_i (ν_i - 1)`.
    pub fn pair_sum(&self) -> f64 {
        self.offspring_counts
            .iter()
            .map(|&c| c as f64 * (c as f64 - 1.0))
            .sum()
    }
}

const ALIAS_THRESHOLD: usize = 64;

/// Categorical sampler over parent indices.
pub enum Categorical {
    Linear(Vec<f64>),
    Alias(WeightedAliasIndex<f64>),
}

impl Categorical {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.len() > ALIAS_THRESHOLD {
            WeightedAliasIndex::new(weights.to_vec())
                .map(Categorical::Alias)
                .map_err(|e| invalid(format!("cannot build alias table: {e}")))
        } else {
            if !weights.iter().any(|&w| w > 0.0) {
                return Err(invalid("categorical weights are all zero"));
            }
            Ok(Categorical::Linear(weights.to_vec()))
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Categorical::Alias(a) => a.sample(rng),
            Categorical::Linear(w) => {
                let total: f64 = w.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut last = 0;
                for (i, &wi) in w.iter().enumerate() {
                    if wi > 0.0 {
                        if u < wi {
                            return i;
                        }
                        u -= wi;
                        last = i;
                    }
                }
                last
            }
        }
    }
}

/// Inverse-CDF sampler on the cumulative weights, for drawing only a few
/// parents from a large population.
pub struct CumulativeSampler {
    cum: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cum = weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        CumulativeSampler { cum }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cum.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        let i = self.cum.partition_point(|&c| c <= u);
        // Rounding can leave u at the total.
        i.min(self.cum.len() - 1)
    }
}

/// Every child independently picks its parent from `η`.
pub fn sample_parents(fitness: &FitnessVector, seed: u64) -> Result<GenerationRecord> {
    let mut rng = rng_from_seed(seed);
    sample_parents_rng(fitness, &mut rng)
}

pub fn sample_parents_rng<R: Rng + ?Sized>(
    fitness: &FitnessVector,
    rng: &mut R,
) -> Result<GenerationRecord> {
    let n = fitness.len();
    let sampler = Categorical::new(fitness.weights())?;
    let parents = (0..n).map(|_| sampler.sample(rng) as u32).collect();
    Ok(GenerationRecord::from_parents(parents, n))
}

/// Parents of `count` children only. Given `η` the children choose
/// independently, so this has the law of any `count` distinct children of a
/// full generation.
pub fn sample_some_parents<R: Rng + ?Sized>(
    fitness: &FitnessVector,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let sampler = CumulativeSampler::new(fitness.weights());
    (0..count).map(|_| sampler.sample(rng)).collect()
}

/// One generation: fresh `Y`, normalized weights, parent choices.
pub fn wf_generation(
    spec: &FitnessSpec,
    n: usize,
    seed: u64,
) -> Result<(FitnessVector, GenerationRecord)> {
    let mut rng = rng_from_seed(seed);
    wf_generation_rng(spec, n, &mut rng)
}

pub fn wf_generation_rng(
    spec: &FitnessSpec,
    n: usize,
    rng: &mut SimRng,
) -> Result<(FitnessVector, GenerationRecord)> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("population size must be positive"));
    }
    let mut y = vec![0.0; n];
    fill_y(spec, rng, &mut y);
    let eta = normalize_fitness(&y)?;
    let record = sample_parents_rng(&eta, rng)?;
    Ok((eta, record))
}
